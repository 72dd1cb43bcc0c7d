#include "ragopt/evolve.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "ragopt/errors.hpp"

namespace ragopt {

namespace {

bool genome_less(const Genome& a, const Genome& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

/// Fitness descending, lexicographic genome ascending on ties.
bool individual_before(const Individual& a, const Individual& b) {
  if (a.fitness != b.fitness) return a.fitness > b.fitness;
  return genome_less(a.genome, b.genome);
}

int resample_other_option(int current, size_t options, Rng& rng) {
  if (options <= 1) return current;
  int pick = static_cast<int>(rng.uniform_u64(options - 1));
  if (pick >= current) ++pick;
  return pick;
}

}  // namespace

std::string to_string(SelectionMethod m) {
  switch (m) {
    case SelectionMethod::elite: return "elite";
    case SelectionMethod::tournament: return "tournament";
    case SelectionMethod::roulette: return "roulette";
    case SelectionMethod::rank: return "rank";
  }
  return "elite";
}

std::string to_string(CrossoverMethod m) {
  switch (m) {
    case CrossoverMethod::single_point: return "single_point";
    case CrossoverMethod::multi_point: return "multi_point";
    case CrossoverMethod::uniform: return "uniform";
    case CrossoverMethod::order: return "order";
    case CrossoverMethod::segment: return "segment";
  }
  return "uniform";
}

std::string to_string(MutationMethod m) {
  switch (m) {
    case MutationMethod::adaptive: return "adaptive";
    case MutationMethod::random: return "random";
    case MutationMethod::categorical: return "categorical";
    case MutationMethod::swap: return "swap";
    case MutationMethod::inversion: return "inversion";
    case MutationMethod::composite: return "composite";
  }
  return "adaptive";
}

SelectionMethod selection_from_string(const std::string& s) {
  if (s == "elite") return SelectionMethod::elite;
  if (s == "tournament") return SelectionMethod::tournament;
  if (s == "roulette") return SelectionMethod::roulette;
  if (s == "rank") return SelectionMethod::rank;
  throw ConfigError("unknown selection method '" + s + "'");
}

CrossoverMethod crossover_from_string(const std::string& s) {
  if (s == "single_point") return CrossoverMethod::single_point;
  if (s == "multi_point") return CrossoverMethod::multi_point;
  if (s == "uniform") return CrossoverMethod::uniform;
  if (s == "order") return CrossoverMethod::order;
  if (s == "segment") return CrossoverMethod::segment;
  throw ConfigError("unknown crossover method '" + s + "'");
}

MutationMethod mutation_from_string(const std::string& s) {
  if (s == "adaptive") return MutationMethod::adaptive;
  if (s == "random") return MutationMethod::random;
  if (s == "categorical") return MutationMethod::categorical;
  if (s == "swap") return MutationMethod::swap;
  if (s == "inversion") return MutationMethod::inversion;
  if (s == "composite") return MutationMethod::composite;
  throw ConfigError("unknown mutation method '" + s + "'");
}

std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::target_reached: return "target_reached";
    case StopReason::patience_exhausted: return "patience_exhausted";
    case StopReason::generations_exhausted: return "generations_exhausted";
  }
  return "generations_exhausted";
}

void GAParams::validate() const {
  if (population_size < 2) throw ConfigError("population_size must be >= 2");
  if (generations < 1) throw ConfigError("generations must be >= 1");
  if (crossover_rate < 0.0 || crossover_rate > 1.0) throw ConfigError("crossover_rate must be in [0,1]");
  if (mutation_rate < 0.0 || mutation_rate > 1.0) throw ConfigError("mutation_rate must be in [0,1]");
  if (!(adaptive_min > 0.0) || adaptive_min > adaptive_max || adaptive_max > 1.0) {
    throw ConfigError("adaptive mutation bounds must satisfy 0 < min <= max <= 1");
  }
  if (elitism_count < 1 || elitism_count > population_size) {
    throw ConfigError("elitism_count must be in [1, population_size]");
  }
  if (patience < 1) throw ConfigError("patience must be >= 1");
  if (target_fitness < 0.0 || target_fitness > 1.0) throw ConfigError("target_fitness must be in [0,1]");
}

std::vector<Individual> elite_select(const Population& pop, int k) {
  std::vector<Individual> sorted = pop.individuals;
  std::sort(sorted.begin(), sorted.end(), individual_before);
  if (static_cast<size_t>(k) < sorted.size()) sorted.resize(k);
  return sorted;
}

const Individual& tournament_select(const Population& pop, Rng& rng) {
  const size_t n = pop.individuals.size();
  size_t best = rng.uniform_u64(n);
  for (int round = 1; round < 3; ++round) {
    size_t challenger = rng.uniform_u64(n);
    // Strict comparison: with all-equal fitness the first draw wins, which
    // keeps the tournament uniform over the population.
    if (pop.individuals[challenger].fitness > pop.individuals[best].fitness) best = challenger;
  }
  return pop.individuals[best];
}

const Individual& roulette_select(const Population& pop, Rng& rng) {
  const auto& inds = pop.individuals;
  double total = 0.0;
  for (const auto& ind : inds) total += ind.fitness;
  if (total <= 0.0) {
    // DegenerateFitness: uniform fallback.
    return inds[rng.uniform_u64(inds.size())];
  }
  double ticket = rng.uniform_real() * total;
  double acc = 0.0;
  for (const auto& ind : inds) {
    acc += ind.fitness;
    if (ticket < acc) return ind;
  }
  return inds.back();
}

const Individual& rank_select(const Population& pop, Rng& rng) {
  const size_t n = pop.individuals.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  // order[0] = best.
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return individual_before(pop.individuals[a], pop.individuals[b]);
  });
  // Weight of the i-th best is n-i, so the best carries weight n out of
  // n(n+1)/2, i.e. probability 2/(n+1).
  const double total = static_cast<double>(n) * static_cast<double>(n + 1) / 2.0;
  double ticket = rng.uniform_real() * total;
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) {
    acc += static_cast<double>(n - i);
    if (ticket < acc) return pop.individuals[order[i]];
  }
  return pop.individuals[order.back()];
}

std::pair<Genome, Genome> crossover(const Genome& a, const Genome& b, CrossoverMethod method, double p_c,
                                    Rng& rng, const SearchSpace& space) {
  const size_t n = a.size();
  Genome c1 = a;
  Genome c2 = b;
  if (n < 2 || !rng.bernoulli(p_c)) {
    return {c1, c2};
  }

  auto modulo_repair = [&](Genome& g) {
    for (size_t i = 0; i < g.size(); ++i) {
      const int card = static_cast<int>(space.families[i].options.size());
      g[i] = ((g[i] % card) + card) % card;
    }
  };

  switch (method) {
    case CrossoverMethod::single_point: {
      const size_t cut = 1 + rng.uniform_u64(n - 1);  // in 1..n-1
      for (size_t i = cut; i < n; ++i) std::swap(c1[i], c2[i]);
      break;
    }
    case CrossoverMethod::multi_point: {
      // Three cut points (fewer on short genomes); alternate the source
      // parent between segments.
      const size_t want = std::min<size_t>(3, n - 1);
      std::vector<size_t> cuts;
      while (cuts.size() < want) {
        size_t cut = 1 + rng.uniform_u64(n - 1);
        if (std::find(cuts.begin(), cuts.end(), cut) == cuts.end()) cuts.push_back(cut);
      }
      std::sort(cuts.begin(), cuts.end());
      bool swapped = false;
      size_t next_cut = 0;
      for (size_t i = 0; i < n; ++i) {
        if (next_cut < cuts.size() && i == cuts[next_cut]) {
          swapped = !swapped;
          ++next_cut;
        }
        if (swapped) std::swap(c1[i], c2[i]);
      }
      break;
    }
    case CrossoverMethod::uniform: {
      for (size_t i = 0; i < n; ++i) {
        if (rng.bernoulli(0.5)) std::swap(c1[i], c2[i]);
      }
      break;
    }
    case CrossoverMethod::order: {
      // Positional OX adaptation: keep a window from one parent, fill the
      // remaining slots cyclically from the other starting past the window.
      size_t lo = rng.uniform_u64(n);
      size_t hi = rng.uniform_u64(n);
      if (lo > hi) std::swap(lo, hi);
      auto fill = [&](Genome& child, const Genome& keep, const Genome& donor) {
        child.assign(n, 0);
        for (size_t i = lo; i <= hi; ++i) child[i] = keep[i];
        size_t src = (hi + 1) % n;
        for (size_t step = 0; step < n; ++step) {
          const size_t dst = (hi + 1 + step) % n;
          if (dst >= lo && dst <= hi) continue;
          child[dst] = donor[src];
          src = (src + 1) % n;
        }
      };
      fill(c1, a, b);
      fill(c2, b, a);
      modulo_repair(c1);
      modulo_repair(c2);
      break;
    }
    case CrossoverMethod::segment: {
      // Swap exactly one contiguous window.
      size_t lo = rng.uniform_u64(n);
      size_t hi = rng.uniform_u64(n);
      if (lo > hi) std::swap(lo, hi);
      for (size_t i = lo; i <= hi; ++i) std::swap(c1[i], c2[i]);
      break;
    }
  }

  repair_genome(space, c1, rng);
  repair_genome(space, c2, rng);
  return {c1, c2};
}

double adaptive_mutation_rate(const MutationSpec& spec, double diversity) {
  return spec.adaptive_min + (spec.adaptive_max - spec.adaptive_min) * (1.0 - diversity);
}

Genome mutate(const Genome& g, const MutationSpec& spec, double diversity, Rng& rng,
              const SearchSpace& space) {
  Genome out = g;
  const size_t n = out.size();

  auto per_gene_resample = [&](double rate) {
    for (size_t i = 0; i < n; ++i) {
      if (rng.bernoulli(rate)) {
        out[i] = resample_other_option(out[i], space.families[i].options.size(), rng);
      }
    }
  };
  auto modulo_repair = [&] {
    for (size_t i = 0; i < n; ++i) {
      const int card = static_cast<int>(space.families[i].options.size());
      out[i] = ((out[i] % card) + card) % card;
    }
  };
  auto swap_positions = [&](double rate) {
    if (n >= 2 && rng.bernoulli(rate)) {
      const size_t i = rng.uniform_u64(n);
      size_t j = rng.uniform_u64(n - 1);
      if (j >= i) ++j;
      std::swap(out[i], out[j]);
      modulo_repair();
    }
  };

  switch (spec.method) {
    case MutationMethod::adaptive:
      per_gene_resample(adaptive_mutation_rate(spec, diversity));
      break;
    case MutationMethod::random:
      per_gene_resample(spec.rate);
      break;
    case MutationMethod::categorical: {
      // Exactly one categorical flip per triggered call.
      if (rng.bernoulli(spec.rate) && n > 0) {
        const size_t i = rng.uniform_u64(n);
        out[i] = resample_other_option(out[i], space.families[i].options.size(), rng);
      }
      break;
    }
    case MutationMethod::swap:
      swap_positions(spec.rate);
      break;
    case MutationMethod::inversion: {
      if (n >= 2 && rng.bernoulli(spec.rate)) {
        size_t lo = rng.uniform_u64(n);
        size_t hi = rng.uniform_u64(n);
        if (lo > hi) std::swap(lo, hi);
        std::reverse(out.begin() + lo, out.begin() + hi + 1);
        modulo_repair();
      }
      break;
    }
    case MutationMethod::composite:
      per_gene_resample(spec.rate);
      swap_positions(spec.rate);
      break;
  }

  repair_genome(space, out, rng);
  return out;
}

Population elitist_replacement(const Population& prev, const std::vector<Individual>& offspring) {
  Population next;
  next.generation = prev.generation + 1;

  std::vector<Individual> merged = prev.individuals;
  merged.insert(merged.end(), offspring.begin(), offspring.end());
  std::sort(merged.begin(), merged.end(), individual_before);

  // Set union: a genome enters the next population once. Copies only pad the
  // tail when fewer than P distinct genomes exist.
  const size_t target = prev.individuals.size();
  for (const auto& ind : merged) {
    if (next.individuals.size() == target) break;
    if (!next.individuals.empty() && next.individuals.back().genome == ind.genome) continue;
    next.individuals.push_back(ind);
  }
  for (size_t i = 0; next.individuals.size() < target; ++i) {
    next.individuals.push_back(merged[i % merged.size()]);
  }

  next.best_so_far = prev.best_so_far;
  const Individual& top = next.individuals.front();
  if (!next.best_so_far.evaluated || top.fitness > next.best_so_far.fitness) {
    next.best_so_far = top;
  }
  return next;
}

double population_diversity(const Population& pop) {
  const auto& inds = pop.individuals;
  if (inds.size() < 2) throw Error("population_diversity requires at least 2 individuals");
  const size_t genes = inds.front().genome.size();
  double sum = 0.0;
  long pairs = 0;
  for (size_t i = 0; i < inds.size(); ++i) {
    for (size_t j = i + 1; j < inds.size(); ++j) {
      int differing = 0;
      for (size_t gene = 0; gene < genes; ++gene) {
        if (inds[i].genome[gene] != inds[j].genome[gene]) ++differing;
      }
      sum += static_cast<double>(differing) / static_cast<double>(genes);
      ++pairs;
    }
  }
  return sum / static_cast<double>(pairs);
}

SearchResult run_search(const SearchSpace& space, const GAParams& params, const FitnessFn& evaluate) {
  params.validate();
  Rng rng(params.seed);
  RunStats stats;

  auto eval_individual = [&](Individual& ind) {
    EvalOutcome outcome;
    try {
      outcome = evaluate(ind.genome);
    } catch (const std::exception& e) {
      throw SearchAborted(genome_key(ind.genome),
                          "evaluator failed on " + genome_key(ind.genome) + " after " +
                              std::to_string(stats.evaluations_total) + " evaluations: " + e.what(),
                          stats);
    }
    ++stats.evaluations_total;
    if (outcome.cache_hit) ++stats.cache_hits;
    ind.fitness = outcome.fitness;
    ind.evaluated = true;
  };

  Population pop;
  pop.generation = 0;
  pop.individuals.reserve(params.population_size);
  for (int i = 0; i < params.population_size; ++i) {
    Individual ind;
    ind.genome = random_genome(space, rng);
    pop.individuals.push_back(std::move(ind));
  }
  for (auto& ind : pop.individuals) eval_individual(ind);

  {
    auto elites = elite_select(pop, 1);
    pop.best_so_far = elites.front();
  }

  auto log_generation = [&](const Population& p, long evals_this_gen) {
    double mean = 0.0;
    for (const auto& ind : p.individuals) mean += ind.fitness;
    mean /= static_cast<double>(p.individuals.size());
    stats.trace.push_back({p.generation, p.best_so_far.fitness, mean,
                           p.individuals.size() >= 2 ? population_diversity(p) : 0.0, evals_this_gen});
  };

  log_generation(pop, params.population_size);

  int generations_without_improvement = 0;
  bool stopped = false;

  if (pop.best_so_far.fitness >= params.target_fitness) {
    stats.stop_reason = StopReason::target_reached;
    stopped = true;
  }

  const int offspring_per_generation = params.population_size - params.elitism_count;
  const MutationSpec mutation_spec{params.mutation, params.mutation_rate, params.adaptive_min,
                                   params.adaptive_max};

  for (int t = 1; t <= params.generations && !stopped; ++t) {
    const double diversity = population_diversity(pop);
    const std::vector<Individual> elites = elite_select(pop, params.elitism_count);

    auto pick_parent = [&]() -> const Genome& {
      switch (params.selection) {
        case SelectionMethod::elite:
          return elites[rng.uniform_u64(elites.size())].genome;
        case SelectionMethod::tournament:
          return tournament_select(pop, rng).genome;
        case SelectionMethod::roulette:
          return roulette_select(pop, rng).genome;
        case SelectionMethod::rank:
          return rank_select(pop, rng).genome;
      }
      return elites.front().genome;
    };

    // Children duplicating a current or already-proposed genome are redrawn a
    // few times; with ~200 evaluations against a 46k space, spending slots on
    // known genomes would waste most of the budget.
    std::set<Genome> proposed;
    for (const auto& ind : pop.individuals) proposed.insert(ind.genome);

    std::vector<Individual> offspring;
    offspring.reserve(offspring_per_generation);
    int retries_left = 10 * offspring_per_generation;
    while (static_cast<int>(offspring.size()) < offspring_per_generation) {
      const Genome& parent_a = pick_parent();
      const Genome& parent_b = pick_parent();
      auto [c1, c2] = crossover(parent_a, parent_b, params.crossover, params.crossover_rate, rng, space);
      for (Genome* child : {&c1, &c2}) {
        if (static_cast<int>(offspring.size()) >= offspring_per_generation) break;
        Genome candidate = mutate(*child, mutation_spec, diversity, rng, space);
        if (proposed.count(candidate) && retries_left-- > 0) continue;
        proposed.insert(candidate);
        Individual ind;
        ind.genome = std::move(candidate);
        offspring.push_back(std::move(ind));
      }
    }

    const double prev_best = pop.best_so_far.fitness;
    for (auto& ind : offspring) eval_individual(ind);

    pop = elitist_replacement(pop, offspring);
    log_generation(pop, offspring_per_generation);
    stats.generations_run = t;

    if (pop.best_so_far.fitness > prev_best) {
      generations_without_improvement = 0;
    } else {
      ++generations_without_improvement;
    }

    if (pop.best_so_far.fitness >= params.target_fitness) {
      stats.stop_reason = StopReason::target_reached;
      stopped = true;
    } else if (generations_without_improvement >= params.patience) {
      stats.stop_reason = StopReason::patience_exhausted;
      stopped = true;
    }
  }

  if (!stopped) stats.stop_reason = StopReason::generations_exhausted;

  SearchResult result;
  result.best_genome = pop.best_so_far.genome;
  result.best_fitness = pop.best_so_far.fitness;
  result.stats = std::move(stats);
  return result;
}

}  // namespace ragopt
