#include <gtest/gtest.h>

#include <functional>

#include "lawarea/error.hpp"
#include "lawarea/eval.hpp"
#include "lawarea/log.hpp"
#include "lawarea/random.hpp"

using namespace lawarea;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no lawarea::Error thrown";
  return ErrorCode::InvalidArgument;
}

struct QuietWarnings {
  std::vector<std::string> seen;
  WarningSink previous;
  QuietWarnings() : previous(set_warning_sink([this](const std::string& m) { seen.push_back(m); })) {}
  ~QuietWarnings() { set_warning_sink(previous); }
};

Eigen::MatrixXd random_proba(Rng& rng, int n, int c) {
  Eigen::MatrixXd p(n, c);
  for (Eigen::Index i = 0; i < p.size(); ++i) p(i) = uniform01(rng);
  p.array().colwise() /= p.rowwise().sum().array();
  return p;
}

}  // namespace

TEST(Accuracy, BasicCases) {
  const std::vector<ClassId> y{0, 1, 2, 0, 1, 2, 0, 1, 2, 0};
  EXPECT_EQ(accuracy(y, y), 1.0);
  std::vector<ClassId> p = y;
  p[3] = 1;
  EXPECT_DOUBLE_EQ(accuracy(p, y), 0.9);
  const std::vector<ClassId> wrong{1, 1};
  const std::vector<ClassId> right{0, 0};
  EXPECT_EQ(accuracy(wrong, right), 0.0);
  EXPECT_EQ(code_of([&] { accuracy(wrong, y); }), ErrorCode::LengthMismatch);
  EXPECT_EQ(code_of([] { accuracy({}, {}); }), ErrorCode::LengthMismatch);
}

TEST(MacroF1, HandComputedFixture) {
  QuietWarnings quiet;
  const std::vector<ClassId> truth{0, 0, 1, 1};
  const std::vector<ClassId> pred{0, 1, 1, 1};
  EXPECT_NEAR(macro_f1(pred, truth, 2), (2.0 / 3.0 + 0.8) / 2.0, 1e-12);
  EXPECT_NEAR(macro_f1(pred, truth, 2), 0.7333333333333333, 1e-12);
  EXPECT_TRUE(quiet.seen.empty());
}

TEST(MacroF1, AbsentClassesCountAsZeroWithWarning) {
  QuietWarnings quiet;
  const std::vector<ClassId> y{1, 1, 1};
  EXPECT_NEAR(macro_f1(y, y, 4), 0.25, 1e-15);
  EXPECT_EQ(quiet.seen.size(), 1u);
  const std::vector<ClassId> both{0, 1};
  EXPECT_EQ(macro_f1(both, both, 2), 1.0);
}

TEST(Confusion, DiagonalRowSumsAndTrace) {
  Rng rng(4);
  std::vector<ClassId> y, p;
  for (int i = 0; i < 200; ++i) {
    y.push_back(static_cast<ClassId>(uniform_index(rng, 5)));
    p.push_back(uniform01(rng) < 0.7 ? y.back() : static_cast<ClassId>(uniform_index(rng, 5)));
  }
  const ConfusionMatrix id = confusion(y, y, 5);
  EXPECT_TRUE((id.counts - Eigen::Matrix<long, -1, -1>(id.counts.diagonal().asDiagonal())).isZero());
  const ConfusionMatrix cm = confusion(p, y, 5);
  EXPECT_EQ(cm.total(), 200);
  for (int c = 0; c < 5; ++c) EXPECT_EQ(cm.counts.row(c).sum(), std::count(y.begin(), y.end(), c));
  EXPECT_DOUBLE_EQ(static_cast<double>(cm.trace()) / static_cast<double>(cm.total()), accuracy(p, y));
}

TEST(TopK, IdentitiesAndErrors) {
  Rng rng(5);
  const Eigen::MatrixXd proba = random_proba(rng, 60, 6);
  std::vector<ClassId> y;
  for (int i = 0; i < 60; ++i) y.push_back(static_cast<ClassId>(uniform_index(rng, 6)));
  const auto ranked = rank_rows(proba);
  std::vector<ClassId> argmax;
  for (const auto& r : ranked) argmax.push_back(r[0]);
  EXPECT_EQ(top_k_accuracy(ranked, y, 1), accuracy(argmax, y));
  EXPECT_EQ(top_k_accuracy(ranked, y, 6), 1.0);
  double previous = 0;
  for (std::size_t k = 1; k <= 6; ++k) {
    const double v = top_k_accuracy(ranked, y, k);
    EXPECT_GE(v, previous);
    previous = v;
  }
  EXPECT_EQ(code_of([&] { top_k_accuracy(ranked, y, 7); }), ErrorCode::KTooLarge);

  const std::vector<std::vector<ClassId>> second{{1, 0}, {0, 1}};
  const std::vector<ClassId> labels{0, 1};
  EXPECT_EQ(top_k_accuracy(second, labels, 1), 0.0);
  EXPECT_EQ(top_k_accuracy(second, labels, 2), 1.0);
}

TEST(Report, JsonRoundTripAndCsvRows) {
  QuietWarnings quiet;
  Rng rng(6);
  const LabelSchema& schema = LabelSchema::canonical();
  const Eigen::MatrixXd proba = random_proba(rng, 40, 18);
  std::vector<ClassId> y;
  for (int i = 0; i < 40; ++i) y.push_back(static_cast<ClassId>(uniform_index(rng, 18)));
  EvaluationReport r = evaluate(schema, proba, y);
  r.classifier = "logreg";
  r.feature = "tfidf-small";
  r.sampling = "none";
  EXPECT_EQ(r.top_k_accuracy.at(1), r.accuracy);
  EXPECT_EQ(r.class_codes, schema.codes());

  const std::vector<EvaluationReport> one{r};
  EXPECT_EQ(report_from_json(render_report(one, ReportFormat::Json)), r);

  EvaluationReport other = r;
  other.sampling = "rus";
  const std::vector<EvaluationReport> two{r, other};
  const std::string csv = render_report(two, ReportFormat::Csv);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  EXPECT_EQ(csv.rfind("classifier,feature,sampling,documents,accuracy,macro_f1,top1", 0), 0u);

  const std::string text = render_report(one, ReportFormat::Text);
  EXPECT_LT(text.find("\nCHI "), text.find("\nURB "));

  const std::string png = render_report(one, ReportFormat::Heatmap);
  ASSERT_GT(png.size(), 8u);
  EXPECT_EQ(png.substr(1, 3), "PNG");
  EXPECT_EQ(code_of([&] { render_report(two, ReportFormat::Heatmap); }), ErrorCode::InvalidArgument);
}

TEST(Report, FormatNamesAndVersion) {
  EXPECT_EQ(parse_report_format("csv"), ReportFormat::Csv);
  EXPECT_EQ(parse_report_format("png"), ReportFormat::Heatmap);
  EXPECT_EQ(code_of([] { parse_report_format("xml"); }), ErrorCode::UnsupportedFormat);
  EXPECT_EQ(code_of([] { report_from_json(R"({"report_version": 2})"); }), ErrorCode::VersionUnsupported);
  EXPECT_EQ(code_of([] { report_from_json("{"); }), ErrorCode::MalformedFile);
}
