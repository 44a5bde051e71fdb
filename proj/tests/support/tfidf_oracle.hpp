#pragma once

// Brute-force TF-IDF recomputation used as an independent reference: n-grams
// are counted with plain maps and every weight is recomputed per document.

#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace oracle {

struct TfidfReference {
  std::map<std::string, double> idf;  // kept n-grams only
};

inline std::vector<std::string> grams(const std::vector<std::string>& tokens, int max_ngram) {
  std::vector<std::string> out(tokens.begin(), tokens.end());
  if (max_ngram >= 2) {
    for (std::size_t i = 0; i + 1 < tokens.size(); ++i) out.push_back(tokens[i] + " " + tokens[i + 1]);
  }
  return out;
}

inline TfidfReference fit(const std::vector<std::vector<std::string>>& corpus, double min_count, double max_doc_frac,
                          int max_ngram) {
  std::map<std::string, double> total;
  std::map<std::string, double> df;
  for (const auto& doc : corpus) {
    std::set<std::string> seen;
    for (const auto& g : grams(doc, max_ngram)) {
      total[g] += 1;
      seen.insert(g);
    }
    for (const auto& g : seen) df[g] += 1;
  }
  const double n = static_cast<double>(corpus.size());
  TfidfReference ref;
  for (const auto& [g, count] : total) {
    if (count > min_count && (max_doc_frac > 1.0 || df[g] / n < max_doc_frac)) {
      ref.idf[g] = std::log((1.0 + n) / (1.0 + df[g])) + 1.0;
    }
  }
  return ref;
}

inline std::map<std::string, double> transform(const TfidfReference& ref, const std::vector<std::string>& doc,
                                               int max_ngram) {
  std::map<std::string, double> v;
  for (const auto& g : grams(doc, max_ngram)) {
    if (ref.idf.count(g)) v[g] += 1;
  }
  double norm = 0;
  for (auto& [g, x] : v) {
    x *= ref.idf.at(g);
    norm += x * x;
  }
  norm = std::sqrt(norm);
  if (norm > 0) {
    for (auto& [g, x] : v) x /= norm;
  }
  return v;
}

}  // namespace oracle
