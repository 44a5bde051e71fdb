#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <json.hpp>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "lawarea/corpus.hpp"

namespace lawarea {

/// A sampled hyperparameter point: JSON object keyed by parameter name.
using Config = nlohmann::json;

/// Compact dump with keys sorted, so equal configs give equal strings.
std::string canonical(const Config& config);

struct Choice {
  std::vector<nlohmann::json> values;
};
struct IntRange {
  long lo;  // inclusive
  long hi;  // inclusive
};
struct LogUniform {
  double lo;
  double hi;
};
using Distribution = std::variant<Choice, IntRange, LogUniform>;

struct SearchSpace {
  std::map<std::string, Distribution> params;

  /// {"name": {"choice": [...]} | {"int": [lo, hi]} | {"log_uniform": [lo, hi]}}.
  /// Throws Error(InvalidConfig).
  static SearchSpace from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

/// Named spaces from the shipped search-space file: {"version": 1, "spaces": {...}}.
std::map<std::string, SearchSpace> load_search_spaces(const std::filesystem::path& path);
std::filesystem::path default_search_space_file();

/// n independent draws, parameters sampled in name order. Throws
/// Error(EmptySpace) for a space without parameters.
std::vector<Config> sample_configs(const SearchSpace& space, int n, std::uint64_t seed);

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;  // both ascending
};

/// Validation folds partition [0, n) with sizes differing by at most one.
/// Throws Error(KTooLarge) when k > n.
std::vector<Fold> kfold_indices(std::size_t n, int k, std::uint64_t seed);
/// As kfold_indices, but each class is dealt round-robin over the folds.
std::vector<Fold> stratified_kfold_indices(std::span<const ClassId> labels, int k, std::uint64_t seed);
/// Each split shuffles independently and holds out ceil(test_frac * n) rows.
std::vector<Fold> shuffle_split_indices(std::size_t n, int n_splits, double test_frac, std::uint64_t seed);

struct CvScheme {
  enum class Kind { KFold, ShuffleSplit } kind = Kind::KFold;
  int k = 5;
  int n_splits = 2;
  double test_frac = 0.2;
  bool stratified = true;  // KFold only
  std::uint64_t seed = 1;
};

std::vector<Fold> make_folds(const CvScheme& scheme, std::span<const ClassId> labels);

enum class Metric { Accuracy, MacroF1 };
std::string_view to_string(Metric m) noexcept;
Metric parse_metric(std::string_view name);

/// Trains on fold.train and returns predictions for fold.validation, in order.
using TrialFunction = std::function<std::vector<ClassId>(const Config&, const Fold&, std::uint64_t seed)>;

struct CvRow {
  int trial_id;
  std::string config;  // canonical JSON
  int fold;
  std::string metric;
  double score;
};

struct SearchResult {
  Config best_config;
  int best_trial = -1;
  double best_score = 0;
  std::vector<double> trial_means;
  std::vector<CvRow> cv_table;  // sorted by (trial_id, fold)
};

/// Samples n configs and cross-validates each on the training labels only.
/// The best trial has the highest mean score; ties go to the earliest trial.
SearchResult random_search(const TrialFunction& trial, const SearchSpace& space, std::span<const ClassId> labels,
                           int num_classes, const CvScheme& scheme, Metric metric, int n, std::uint64_t seed,
                           int threads = 1);

/// trial_id,config,fold,metric,score with scores printed to 17 digits.
void write_cv_table_csv(std::ostream& out, const std::vector<CvRow>& rows);

}  // namespace lawarea
