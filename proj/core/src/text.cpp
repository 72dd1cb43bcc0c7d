#include "ragopt/text.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <set>
#include <sstream>

namespace ragopt {

namespace {

bool is_word_byte(unsigned char c) {
  return std::isalnum(c) != 0 || c >= 0x80;
}

char fold(unsigned char c) {
  if (c >= 'A' && c <= 'Z') return static_cast<char>(c - 'A' + 'a');
  return static_cast<char>(c);
}

}  // namespace

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (is_word_byte(c)) {
      cur.push_back(fold(c));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::map<std::string, int> token_multiset(const std::string& text) {
  std::map<std::string, int> counts;
  for (auto& t : tokenize(text)) counts[t] += 1;
  return counts;
}

double token_f1(const std::string& reference, const std::string& candidate) {
  const auto ref = token_multiset(reference);
  const auto cand = token_multiset(candidate);
  long ref_total = 0, cand_total = 0, overlap = 0;
  for (const auto& [tok, n] : ref) ref_total += n;
  for (const auto& [tok, n] : cand) cand_total += n;
  if (ref_total == 0 && cand_total == 0) return 1.0;
  if (ref_total == 0 || cand_total == 0) return 0.0;
  for (const auto& [tok, n] : cand) {
    auto it = ref.find(tok);
    if (it != ref.end()) overlap += std::min(n, it->second);
  }
  if (overlap == 0) return 0.0;
  const double precision = static_cast<double>(overlap) / static_cast<double>(cand_total);
  const double recall = static_cast<double>(overlap) / static_cast<double>(ref_total);
  return 2.0 * precision * recall / (precision + recall);
}

double token_overlap(const std::string& query, const std::string& passage) {
  std::set<std::string> q;
  for (auto& t : tokenize(query)) q.insert(t);
  if (q.empty()) return 0.0;
  std::set<std::string> p;
  for (auto& t : tokenize(passage)) p.insert(t);
  long shared = 0;
  for (const auto& t : q) {
    if (p.count(t)) ++shared;
  }
  return static_cast<double>(shared) / static_cast<double>(q.size());
}

std::string first_sentence(const std::string& text) {
  const std::string t = trim(text);
  for (size_t i = 0; i < t.size(); ++i) {
    if (t[i] == '.' || t[i] == '!' || t[i] == '?') {
      return trim(t.substr(0, i + 1));
    }
  }
  return t;
}

std::vector<std::string> extract_entities(const std::string& text) {
  // Word-level pass over the raw (unfolded) text.
  std::vector<std::string> words;
  std::string cur;
  for (unsigned char c : text) {
    if (is_word_byte(c)) {
      cur.push_back(static_cast<char>(c));
    } else if (!cur.empty()) {
      words.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));

  // Function words capitalized only by sentence position would glue "The"
  // onto "The Fourier Transform"; they terminate runs instead.
  static const std::set<std::string> kSkipWords = {
      "The", "A",  "An",  "This", "These", "Those", "It",    "Its",  "In",   "On",    "At",
      "Of",  "For", "And", "Or",   "But",   "To",   "With",  "From", "By",   "As",    "Is",
      "Are", "Was", "Were", "His", "Her",   "Their", "Our",  "Why",  "How",  "What",  "When",
      "Where", "Which", "Who", "During", "After", "Before", "While", "Because"};
  auto capitalized = [](const std::string& w) {
    return !w.empty() && w[0] >= 'A' && w[0] <= 'Z' && !kSkipWords.count(w);
  };
  auto four_digit = [](const std::string& w) {
    return w.size() == 4 && std::all_of(w.begin(), w.end(), [](unsigned char c) { return std::isdigit(c); });
  };

  std::vector<std::string> out;
  std::set<std::string> seen;
  auto emit = [&](const std::string& e) {
    if (seen.insert(e).second) out.push_back(e);
  };

  size_t i = 0;
  while (i < words.size()) {
    if (capitalized(words[i])) {
      size_t j = i;
      std::string run = words[i];
      while (j + 1 < words.size() && capitalized(words[j + 1])) {
        ++j;
        run += " " + words[j];
      }
      if (run.size() >= 4) emit(run);
      i = j + 1;
    } else {
      if (four_digit(words[i])) emit(words[i]);
      ++i;
    }
  }
  return out;
}

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97f4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::string format_double(double v) {
  char buf[64];
  // Shortest representation that parses back to the same bits.
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) return buf;
  }
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split_lines(const std::string& s) {
  std::vector<std::string> out;
  std::string line;
  std::istringstream in(s);
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back(line);
  }
  return out;
}

}  // namespace ragopt
