#include "lawarea/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <json.hpp>
#include <numeric>
#include <set>
#include <sstream>

#include "lawarea/error.hpp"
#include "lawarea/log.hpp"

namespace lawarea {

namespace {

void check_pairs(std::span<const ClassId> preds, std::span<const ClassId> labels) {
  if (preds.size() != labels.size() || labels.empty()) {
    throw Error(ErrorCode::LengthMismatch, "predictions and labels must be equally long and non-empty");
  }
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

double accuracy(std::span<const ClassId> preds, std::span<const ClassId> labels) {
  check_pairs(preds, labels);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) hits += preds[i] == labels[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

ConfusionMatrix confusion(std::span<const ClassId> preds, std::span<const ClassId> labels, int num_classes) {
  check_pairs(preds, labels);
  ConfusionMatrix cm;
  cm.counts = Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic>::Zero(num_classes, num_classes);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] < 0 || preds[i] >= num_classes || labels[i] < 0 || labels[i] >= num_classes) {
      throw Error(ErrorCode::InvalidArgument, "class id outside the schema");
    }
    ++cm.counts(labels[i], preds[i]);
  }
  return cm;
}

std::vector<ClassMetrics> per_class_metrics(const ConfusionMatrix& cm) {
  std::vector<ClassMetrics> out(static_cast<std::size_t>(cm.counts.rows()));
  for (Eigen::Index k = 0; k < cm.counts.rows(); ++k) {
    const auto tp = static_cast<double>(cm.counts(k, k));
    const auto predicted = static_cast<double>(cm.counts.col(k).sum());
    const auto actual = static_cast<double>(cm.counts.row(k).sum());
    auto& m = out[static_cast<std::size_t>(k)];
    m.support = cm.counts.row(k).sum();
    m.precision = predicted > 0 ? tp / predicted : 0.0;
    m.recall = actual > 0 ? tp / actual : 0.0;
    m.f1 = m.precision + m.recall > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  }
  return out;
}

double macro_f1(std::span<const ClassId> preds, std::span<const ClassId> labels, int num_classes) {
  const ConfusionMatrix cm = confusion(preds, labels, num_classes);
  const auto metrics = per_class_metrics(cm);
  double sum = 0;
  int absent = 0;
  for (Eigen::Index k = 0; k < num_classes; ++k) {
    if (cm.counts.row(k).sum() == 0 && cm.counts.col(k).sum() == 0) ++absent;
    sum += metrics[static_cast<std::size_t>(k)].f1;
  }
  if (absent > 0) warn("macro_f1: " + std::to_string(absent) + " class(es) neither present nor predicted count as F1 = 0");
  return sum / num_classes;
}

double top_k_accuracy(const std::vector<std::vector<ClassId>>& ranked, std::span<const ClassId> labels, std::size_t k) {
  if (ranked.size() != labels.size() || labels.empty()) {
    throw Error(ErrorCode::LengthMismatch, "ranked lists and labels must be equally long and non-empty");
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (ranked[i].size() < k) throw Error(ErrorCode::KTooLarge, "ranked list shorter than k");
    if (std::find(ranked[i].begin(), ranked[i].begin() + static_cast<std::ptrdiff_t>(k), labels[i]) !=
        ranked[i].begin() + static_cast<std::ptrdiff_t>(k)) {
      ++hits;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

std::vector<std::vector<ClassId>> rank_rows(const Eigen::MatrixXd& proba) {
  std::vector<std::vector<ClassId>> out(static_cast<std::size_t>(proba.rows()));
  for (Eigen::Index i = 0; i < proba.rows(); ++i) {
    auto& row = out[static_cast<std::size_t>(i)];
    row.resize(static_cast<std::size_t>(proba.cols()));
    std::iota(row.begin(), row.end(), ClassId{0});
    std::stable_sort(row.begin(), row.end(), [&](ClassId a, ClassId b) { return proba(i, a) > proba(i, b); });
  }
  return out;
}

EvaluationReport evaluate(const LabelSchema& schema, const Eigen::MatrixXd& proba, std::span<const ClassId> labels,
                          const std::vector<int>& ks) {
  const int c = static_cast<int>(schema.size());
  if (proba.cols() != c) throw Error(ErrorCode::ShapeMismatch, "probability columns differ from the schema size");
  if (proba.rows() != static_cast<Eigen::Index>(labels.size())) throw Error(ErrorCode::LengthMismatch, "rows and labels differ");
  const auto ranked = rank_rows(proba);
  std::vector<ClassId> preds;
  preds.reserve(ranked.size());
  for (const auto& r : ranked) preds.push_back(r.front());

  EvaluationReport report;
  report.class_codes = schema.codes();
  report.documents = static_cast<long>(labels.size());
  report.accuracy = accuracy(preds, labels);
  report.macro_f1 = macro_f1(preds, labels, c);
  report.confusion = confusion(preds, labels, c);
  report.per_class = per_class_metrics(report.confusion);
  for (int k : ks) {
    if (k >= 1 && k <= c) report.top_k_accuracy[k] = top_k_accuracy(ranked, labels, static_cast<std::size_t>(k));
  }
  return report;
}

ReportFormat parse_report_format(std::string_view name) {
  if (name == "text") return ReportFormat::Text;
  if (name == "json") return ReportFormat::Json;
  if (name == "csv") return ReportFormat::Csv;
  if (name == "heatmap" || name == "png") return ReportFormat::Heatmap;
  throw Error(ErrorCode::UnsupportedFormat, "unsupported report format: " + std::string(name));
}

namespace {

nlohmann::json to_json(const EvaluationReport& r) {
  nlohmann::json j;
  j["report_version"] = kReportVersion;
  j["classifier"] = r.classifier;
  j["feature"] = r.feature;
  j["sampling"] = r.sampling;
  j["classes"] = r.class_codes;
  j["documents"] = r.documents;
  j["accuracy"] = r.accuracy;
  j["macro_f1"] = r.macro_f1;
  nlohmann::json per_class = nlohmann::json::array();
  for (std::size_t k = 0; k < r.per_class.size(); ++k) {
    const auto& m = r.per_class[k];
    per_class.push_back({{"class", r.class_codes.at(k)},
                         {"precision", m.precision},
                         {"recall", m.recall},
                         {"f1", m.f1},
                         {"support", m.support}});
  }
  j["per_class"] = per_class;
  nlohmann::json topk = nlohmann::json::object();
  for (const auto& [k, v] : r.top_k_accuracy) topk[std::to_string(k)] = v;
  j["top_k_accuracy"] = topk;
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < r.confusion.counts.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index k = 0; k < r.confusion.counts.cols(); ++k) row.push_back(r.confusion.counts(i, k));
    rows.push_back(row);
  }
  j["confusion"] = rows;
  return j;
}

std::string render_text(std::span<const EvaluationReport> reports) {
  std::ostringstream out;
  for (const auto& r : reports) {
    out << "classifier: " << r.classifier << "  feature: " << r.feature << "  sampling: " << r.sampling << '\n';
    out << "documents: " << r.documents << "  accuracy: " << fixed(r.accuracy, 4) << "  macro_f1: " << fixed(r.macro_f1, 4);
    for (const auto& [k, v] : r.top_k_accuracy) out << "  top" << k << ": " << fixed(v, 4);
    out << "\n\n";
    out << "class  precision  recall  f1      support\n";
    for (std::size_t k = 0; k < r.per_class.size(); ++k) {
      const auto& m = r.per_class[k];
      char line[128];
      std::snprintf(line, sizeof line, "%-5s  %-9s  %-6s  %-6s  %ld\n", r.class_codes.at(k).c_str(),
                    fixed(m.precision, 4).c_str(), fixed(m.recall, 4).c_str(), fixed(m.f1, 4).c_str(), m.support);
      out << line;
    }
    out << '\n';
  }
  return out.str();
}

std::string render_csv(std::span<const EvaluationReport> reports) {
  std::set<int> ks;
  for (const auto& r : reports) {
    for (const auto& [k, v] : r.top_k_accuracy) ks.insert(k);
  }
  std::ostringstream out;
  out << "classifier,feature,sampling,documents,accuracy,macro_f1";
  for (int k : ks) out << ",top" << k;
  out << '\n';
  for (const auto& r : reports) {
    out << csv_field(r.classifier) << ',' << csv_field(r.feature) << ',' << csv_field(r.sampling) << ',' << r.documents
        << ',' << fixed(r.accuracy, 6) << ',' << fixed(r.macro_f1, 6);
    for (int k : ks) {
      out << ',';
      if (const auto it = r.top_k_accuracy.find(k); it != r.top_k_accuracy.end()) out << fixed(it->second, 6);
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace

std::string render_report(std::span<const EvaluationReport> reports, ReportFormat format) {
  switch (format) {
    case ReportFormat::Text: return render_text(reports);
    case ReportFormat::Csv: return render_csv(reports);
    case ReportFormat::Json: {
      if (reports.size() == 1) return to_json(reports.front()).dump(2) + "\n";
      nlohmann::json all = nlohmann::json::array();
      for (const auto& r : reports) all.push_back(to_json(r));
      return all.dump(2) + "\n";
    }
    case ReportFormat::Heatmap:
      if (reports.size() != 1) throw Error(ErrorCode::InvalidArgument, "a heatmap renders exactly one report");
      return render_heatmap_png(reports.front());
  }
  throw Error(ErrorCode::UnsupportedFormat, "unsupported report format");
}

EvaluationReport report_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    const int version = j.at("report_version").get<int>();
    if (version != kReportVersion) throw Error(ErrorCode::VersionUnsupported, "report_version " + std::to_string(version));
    EvaluationReport r;
    r.classifier = j.at("classifier").get<std::string>();
    r.feature = j.at("feature").get<std::string>();
    r.sampling = j.at("sampling").get<std::string>();
    r.class_codes = j.at("classes").get<std::vector<std::string>>();
    r.documents = j.at("documents").get<long>();
    r.accuracy = j.at("accuracy").get<double>();
    r.macro_f1 = j.at("macro_f1").get<double>();
    for (const auto& m : j.at("per_class")) {
      r.per_class.push_back({m.at("precision").get<double>(), m.at("recall").get<double>(), m.at("f1").get<double>(),
                             m.at("support").get<long>()});
    }
    for (const auto& [k, v] : j.at("top_k_accuracy").items()) r.top_k_accuracy[std::stoi(k)] = v.get<double>();
    const auto& rows = j.at("confusion");
    const auto n = static_cast<Eigen::Index>(rows.size());
    r.confusion.counts.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)].size()) != n) {
        throw Error(ErrorCode::MalformedFile, "confusion matrix is not square");
      }
      for (Eigen::Index k = 0; k < n; ++k) r.confusion.counts(i, k) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)].get<long>();
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedFile, std::string("evaluation report: ") + e.what());
  }
}

}  // namespace lawarea
