#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace ragopt {

/// Lowercased word tokens. A word is a maximal run of ASCII alphanumerics
/// and/or non-ASCII UTF-8 code points; only ASCII letters are case-folded,
/// so the stream is identical on every platform and locale.
std::vector<std::string> tokenize(const std::string& text);

/// Token -> occurrence count.
std::map<std::string, int> token_multiset(const std::string& text);

/// Token-level F1 between two texts (duplicates counted via multiset overlap).
/// 1.0 when both token streams are empty.
double token_f1(const std::string& reference, const std::string& candidate);

/// |query tokens ∩ passage tokens| / |query token set|; 0 for an empty query.
double token_overlap(const std::string& query, const std::string& passage);

/// Text up to and including the first '.', '!' or '?' (whitespace-trimmed);
/// the whole trimmed text when no terminator is present.
std::string first_sentence(const std::string& text);

/// Entities for the co-occurrence graph: maximal runs of capitalized words
/// whose joined form is at least 4 characters long, plus standalone 4-digit
/// numbers. Returned in order of first appearance, deduplicated.
std::vector<std::string> extract_entities(const std::string& text);

std::uint64_t fnv1a64(const std::string& s);

/// splitmix64 step; used to derive deterministic value streams from hashes.
std::uint64_t splitmix64(std::uint64_t& state);

/// Shortest round-trip decimal form of a double ("%.17g" fallback).
std::string format_double(double v);

std::string trim(const std::string& s);

std::vector<std::string> split_lines(const std::string& s);

}  // namespace ragopt
