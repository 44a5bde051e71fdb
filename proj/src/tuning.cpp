#include "lawarea/tuning.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <numeric>
#include <ostream>
#include <thread>

#include "lawarea/error.hpp"
#include "lawarea/eval.hpp"
#include "lawarea/random.hpp"

namespace lawarea {

std::string canonical(const Config& config) { return config.dump(); }

SearchSpace SearchSpace::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "search space must be an object");
  SearchSpace space;
  for (const auto& [name, spec] : j.items()) {
    if (!spec.is_object() || spec.size() != 1) {
      throw Error(ErrorCode::InvalidConfig, "parameter " + name + " needs exactly one distribution");
    }
    const auto& [kind, args] = *spec.items().begin();
    if (kind == "choice") {
      if (!args.is_array() || args.empty()) throw Error(ErrorCode::InvalidConfig, name + ": choice needs values");
      space.params[name] = Choice{args.get<std::vector<nlohmann::json>>()};
    } else if (kind == "int") {
      if (!args.is_array() || args.size() != 2 || !args[0].is_number_integer() || !args[1].is_number_integer() ||
          args[0].get<long>() > args[1].get<long>()) {
        throw Error(ErrorCode::InvalidConfig, name + ": int needs [lo, hi] with lo <= hi");
      }
      space.params[name] = IntRange{args[0].get<long>(), args[1].get<long>()};
    } else if (kind == "log_uniform") {
      if (!args.is_array() || args.size() != 2 || !args[0].is_number() || !args[1].is_number() ||
          !(args[0].get<double>() > 0) || args[0].get<double>() > args[1].get<double>()) {
        throw Error(ErrorCode::InvalidConfig, name + ": log_uniform needs [lo, hi] with 0 < lo <= hi");
      }
      space.params[name] = LogUniform{args[0].get<double>(), args[1].get<double>()};
    } else {
      throw Error(ErrorCode::InvalidConfig, name + ": unknown distribution " + kind);
    }
  }
  return space;
}

nlohmann::json SearchSpace::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [name, dist] : params) {
    std::visit(
        [&, &name = name](const auto& d) {
          using D = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<D, Choice>) {
            j[name] = {{"choice", d.values}};
          } else if constexpr (std::is_same_v<D, IntRange>) {
            j[name] = {{"int", {d.lo, d.hi}}};
          } else {
            j[name] = {{"log_uniform", {d.lo, d.hi}}};
          }
        },
        dist);
  }
  return j;
}

std::map<std::string, SearchSpace> load_search_spaces(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, path.string() + ": " + e.what());
  }
  if (!j.contains("version") || j["version"] != 1) throw Error(ErrorCode::VersionUnsupported, path.string());
  std::map<std::string, SearchSpace> spaces;
  for (const auto& [name, space] : j.at("spaces").items()) spaces.emplace(name, SearchSpace::from_json(space));
  return spaces;
}

std::filesystem::path default_search_space_file() {
  return std::filesystem::path(LAWAREA_CONFIG_DIR) / "search_spaces.json";
}

std::vector<Config> sample_configs(const SearchSpace& space, int n, std::uint64_t seed) {
  if (space.params.empty()) throw Error(ErrorCode::EmptySpace, "search space has no parameters");
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "need at least one sample");
  Rng rng(seed);
  std::vector<Config> configs;
  configs.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Config c = Config::object();
    for (const auto& [name, dist] : space.params) {
      if (const auto* choice = std::get_if<Choice>(&dist)) {
        c[name] = choice->values[uniform_index(rng, choice->values.size())];
      } else if (const auto* range = std::get_if<IntRange>(&dist)) {
        c[name] = range->lo + static_cast<long>(uniform_index(rng, static_cast<std::uint64_t>(range->hi - range->lo) + 1));
      } else {
        const auto& lu = std::get<LogUniform>(dist);
        const double a = std::log(lu.lo);
        const double b = std::log(lu.hi);
        c[name] = std::exp(a + (b - a) * uniform01(rng));
      }
    }
    configs.push_back(std::move(c));
  }
  return configs;
}

namespace {

std::vector<Fold> folds_from_assignment(const std::vector<int>& fold_of, int k) {
  std::vector<Fold> folds(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < fold_of.size(); ++i) {
    for (int f = 0; f < k; ++f) {
      (f == fold_of[i] ? folds[static_cast<std::size_t>(f)].validation : folds[static_cast<std::size_t>(f)].train).push_back(i);
    }
  }
  return folds;
}

}  // namespace

std::vector<Fold> kfold_indices(std::size_t n, int k, std::uint64_t seed) {
  if (k < 2) throw Error(ErrorCode::InvalidArgument, "k must be at least 2");
  if (static_cast<std::size_t>(k) > n) throw Error(ErrorCode::KTooLarge, "more folds than rows");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  shuffle(std::span(order), rng);
  std::vector<int> fold_of(n);
  for (std::size_t i = 0; i < n; ++i) fold_of[order[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
  return folds_from_assignment(fold_of, k);
}

std::vector<Fold> stratified_kfold_indices(std::span<const ClassId> labels, int k, std::uint64_t seed) {
  if (k < 2) throw Error(ErrorCode::InvalidArgument, "k must be at least 2");
  if (static_cast<std::size_t>(k) > labels.size()) throw Error(ErrorCode::KTooLarge, "more folds than rows");
  std::map<ClassId, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  std::vector<int> fold_of(labels.size());
  std::size_t next = 0;
  for (auto& [c, members] : by_class) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(c)));
    shuffle(std::span(members), rng);
    for (std::size_t i : members) fold_of[i] = static_cast<int>(next++ % static_cast<std::size_t>(k));
  }
  return folds_from_assignment(fold_of, k);
}

std::vector<Fold> shuffle_split_indices(std::size_t n, int n_splits, double test_frac, std::uint64_t seed) {
  if (!(test_frac > 0.0 && test_frac < 1.0)) throw Error(ErrorCode::InvalidArgument, "test_frac must be in (0, 1)");
  if (n_splits < 1) throw Error(ErrorCode::InvalidArgument, "n_splits must be at least 1");
  const auto n_val = static_cast<std::size_t>(std::ceil(test_frac * static_cast<double>(n) - 1e-9));
  if (n_val == 0 || n_val >= n) throw Error(ErrorCode::InvalidArgument, "split leaves an empty partition");
  std::vector<Fold> folds;
  for (int s = 0; s < n_splits; ++s) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(s)));
    shuffle(std::span(order), rng);
    Fold fold;
    fold.validation.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
    fold.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
    std::sort(fold.validation.begin(), fold.validation.end());
    std::sort(fold.train.begin(), fold.train.end());
    folds.push_back(std::move(fold));
  }
  return folds;
}

std::vector<Fold> make_folds(const CvScheme& scheme, std::span<const ClassId> labels) {
  if (scheme.kind == CvScheme::Kind::ShuffleSplit) {
    return shuffle_split_indices(labels.size(), scheme.n_splits, scheme.test_frac, scheme.seed);
  }
  return scheme.stratified ? stratified_kfold_indices(labels, scheme.k, scheme.seed)
                           : kfold_indices(labels.size(), scheme.k, scheme.seed);
}

std::string_view to_string(Metric m) noexcept { return m == Metric::Accuracy ? "accuracy" : "macro_f1"; }

Metric parse_metric(std::string_view name) {
  if (name == "accuracy") return Metric::Accuracy;
  if (name == "macro_f1") return Metric::MacroF1;
  throw Error(ErrorCode::InvalidArgument, "unknown metric: " + std::string(name));
}

SearchResult random_search(const TrialFunction& trial, const SearchSpace& space, std::span<const ClassId> labels,
                           int num_classes, const CvScheme& scheme, Metric metric, int n, std::uint64_t seed,
                           int threads) {
  const auto configs = sample_configs(space, n, seed);
  const auto folds = make_folds(scheme, labels);
  const std::size_t n_folds = folds.size();
  std::vector<double> scores(configs.size() * n_folds);

  auto run = [&](std::size_t t) {
    for (std::size_t f = 0; f < n_folds; ++f) {
      const auto& fold = folds[f];
      const auto preds = trial(configs[t], fold, derive_seed(derive_seed(seed, t + 1), f));
      if (preds.size() != fold.validation.size()) throw Error(ErrorCode::LengthMismatch, "trial returned wrong prediction count");
      std::vector<ClassId> truth;
      truth.reserve(fold.validation.size());
      for (std::size_t i : fold.validation) truth.push_back(labels[i]);
      scores[t * n_folds + f] = metric == Metric::Accuracy ? accuracy(preds, truth) : macro_f1(preds, truth, num_classes);
    }
  };

  if (threads <= 1) {
    for (std::size_t t = 0; t < configs.size(); ++t) run(t);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t t = next++; t < configs.size(); t = next++) run(t);
        } catch (...) {
          errors[static_cast<std::size_t>(w)] = std::current_exception();
          next = configs.size();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  SearchResult result;
  for (std::size_t t = 0; t < configs.size(); ++t) {
    const std::string config = canonical(configs[t]);
    double sum = 0;
    for (std::size_t f = 0; f < n_folds; ++f) {
      const double s = scores[t * n_folds + f];
      sum += s;
      result.cv_table.push_back({static_cast<int>(t), config, static_cast<int>(f), std::string(to_string(metric)), s});
    }
    const double mean = sum / static_cast<double>(n_folds);
    result.trial_means.push_back(mean);
    if (result.best_trial < 0 || mean > result.best_score) {
      result.best_trial = static_cast<int>(t);
      result.best_score = mean;
      result.best_config = configs[t];
    }
  }
  return result;
}

void write_cv_table_csv(std::ostream& out, const std::vector<CvRow>& rows) {
  out << "trial_id,config,fold,metric,score\n";
  for (const auto& r : rows) {
    std::string quoted = "\"";
    for (char c : r.config) {
      if (c == '"') quoted += '"';
      quoted += c;
    }
    quoted += '"';
    char score[32];
    std::snprintf(score, sizeof score, "%.17g", r.score);
    out << r.trial_id << ',' << quoted << ',' << r.fold << ',' << r.metric << ',' << score << '\n';
  }
}

}  // namespace lawarea
