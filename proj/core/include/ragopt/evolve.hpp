#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ragopt/errors.hpp"
#include "ragopt/rng.hpp"
#include "ragopt/searchspace.hpp"

namespace ragopt {

enum class SelectionMethod { elite, tournament, roulette, rank };
enum class CrossoverMethod { single_point, multi_point, uniform, order, segment };
enum class MutationMethod { adaptive, random, categorical, swap, inversion, composite };

std::string to_string(SelectionMethod m);
std::string to_string(CrossoverMethod m);
std::string to_string(MutationMethod m);
SelectionMethod selection_from_string(const std::string& s);
CrossoverMethod crossover_from_string(const std::string& s);
MutationMethod mutation_from_string(const std::string& s);

struct GAParams {
  int population_size = 16;
  int generations = 20;
  double crossover_rate = 0.6;
  double mutation_rate = 0.08;  // used by non-adaptive mutation methods
  double adaptive_min = 0.01;
  double adaptive_max = 0.2;
  int elitism_count = 5;
  SelectionMethod selection = SelectionMethod::elite;
  CrossoverMethod crossover = CrossoverMethod::uniform;
  MutationMethod mutation = MutationMethod::adaptive;
  int patience = 100;
  double target_fitness = 1.0;
  std::uint64_t seed = 42;

  /// Throws ConfigError on out-of-range values (k > P, bad rates, ...).
  void validate() const;
};

struct Individual {
  Genome genome;
  double fitness = 0.0;
  bool evaluated = false;
};

struct Population {
  int generation = 0;
  std::vector<Individual> individuals;
  Individual best_so_far;
};

enum class StopReason { target_reached, patience_exhausted, generations_exhausted };

std::string to_string(StopReason r);

struct GenerationLog {
  int generation = 0;
  double best_fitness = 0.0;
  double mean_fitness = 0.0;
  double diversity = 0.0;
  long evaluations = 0;
};

struct RunStats {
  long evaluations_total = 0;
  long cache_hits = 0;
  int generations_run = 0;
  std::vector<GenerationLog> trace;
  StopReason stop_reason = StopReason::generations_exhausted;
};

struct EvalOutcome {
  double fitness = 0.0;
  bool cache_hit = false;
};

/// Fitness handle. Must be total over feasible genomes and return a value in
/// [0,1]; failures should throw (the run aborts with partial stats attached
/// to the EvaluatorFailure message).
using FitnessFn = std::function<EvalOutcome(const Genome&)>;

struct SearchResult {
  Genome best_genome;
  double best_fitness = 0.0;
  RunStats stats;
};

/// Thrown when the evaluator fails mid-run; carries the stats accumulated up
/// to the failing call.
struct SearchAborted : EvaluatorFailure {
  RunStats partial_stats;
  SearchAborted(std::string key, const std::string& what, RunStats stats)
      : EvaluatorFailure(std::move(key), what), partial_stats(std::move(stats)) {}
};

/// The k highest-fitness individuals; ties broken by lower lexicographic
/// genome order. Requires a fully evaluated population.
std::vector<Individual> elite_select(const Population& pop, int k);

/// One parent per call. Tournament size is 3; roulette is fitness-
/// proportional and falls back to a uniform draw when every fitness is zero;
/// rank weights are proportional to 1-based ascending rank, so the best of n
/// is picked with probability 2/(n+1).
const Individual& tournament_select(const Population& pop, Rng& rng);
const Individual& roulette_select(const Population& pop, Rng& rng);
const Individual& rank_select(const Population& pop, Rng& rng);

/// Recombines two parents; with probability 1-p_c returns plain copies.
/// Children are always in-range (indices are copied, order/segment repairs
/// out-of-range genes by modulo) and are made feasible by gene resampling.
std::pair<Genome, Genome> crossover(const Genome& a, const Genome& b, CrossoverMethod method, double p_c,
                                    Rng& rng, const SearchSpace& space);

struct MutationSpec {
  MutationMethod method = MutationMethod::adaptive;
  double rate = 0.08;
  double adaptive_min = 0.01;
  double adaptive_max = 0.2;
};

/// Adaptive rate is min + (max-min) * (1 - diversity), so a converged
/// population mutates at the upper bound.
double adaptive_mutation_rate(const MutationSpec& spec, double diversity);

Genome mutate(const Genome& g, const MutationSpec& spec, double diversity, Rng& rng,
              const SearchSpace& space);

/// Next population = top P of prev ∪ offspring by fitness (ties by
/// lexicographic genome order); best_so_far carried forward.
Population elitist_replacement(const Population& prev, const std::vector<Individual>& offspring);

/// Mean pairwise Hamming distance between genomes, normalized by genome
/// length. Requires at least two individuals.
double population_diversity(const Population& pop);

/// init -> loop { elite-select -> crossover+mutation -> evaluate -> elitist
/// replacement -> stop check }. Deterministic given the seed and a
/// deterministic evaluator.
SearchResult run_search(const SearchSpace& space, const GAParams& params, const FitnessFn& evaluate);

}  // namespace ragopt
