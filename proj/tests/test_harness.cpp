#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "loanvar/errors.hpp"
#include "loanvar/harness.hpp"
#include "loanvar/loan_math.hpp"
#include "loanvar/rng.hpp"

using namespace loanvar;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig tiny_config() {
  ExperimentConfig cfg;
  cfg.synth.loans = 800;
  cfg.synth.features = 4;
  cfg.synth.term = 12;
  cfg.synth.seed = 5;
  cfg.split = SplitRatios{0.6, 0.2, 0.2};
  cfg.methods = {Method::denn, Method::dsnn, Method::equal, Method::random};
  cfg.portfolio_size = 5;
  cfg.portfolio_count = 12;
  cfg.scenarios = 300;
  cfg.model.epochs = 1;
  cfg.model.batch_size = 64;
  cfg.optimizer.random_starts = 3;
  cfg.optimizer.polish_candidates = 2;
  cfg.seed = 3;
  return cfg;
}

const char* kReproducible[] = {"var_table.tsv", "realized_returns.csv", "config.txt", "run_metadata.json"};

}  // namespace

TEST(Harness, EqualWeightsOnRiskFreeLoans) {
  const fs::path dir = fresh_dir("loanvar_harness_flat");
  std::vector<LoanRecord> recs(300);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    recs[i].id = std::to_string(i);
    recs[i].features = {static_cast<double>(i % 7), static_cast<double>(i % 3)};
    recs[i].terms = {5000.0, annuity_installment(5000.0, 36, 0.0125), 36, 0.0125};
    recs[i].lifetime = 36;
  }
  write_csv(dir / "flat.csv", recs);
  ExperimentConfig cfg;
  cfg.csv = dir / "flat.csv";
  cfg.methods = {Method::equal};
  cfg.portfolio_size = 8;
  cfg.portfolio_count = 40;
  const ExperimentReport report = run_experiment(cfg);
  ASSERT_EQ(report.methods.size(), 1u);
  for (double r : report.methods[0].realized) EXPECT_NEAR(r, 0.0125, 1e-15);
  ASSERT_EQ(report.methods[0].var_row.size(), 5u);
  for (double v : report.methods[0].var_row) EXPECT_NEAR(v, -12.0 * 0.0125, 1e-14);
  fs::remove_all(dir);
}

TEST(Harness, SameSeedGivesByteIdenticalReports) {
  const ExperimentConfig cfg = tiny_config();
  const fs::path a = fresh_dir("loanvar_harness_a");
  const fs::path b = fresh_dir("loanvar_harness_b");
  write_report(a, run_experiment(cfg));
  write_report(b, run_experiment(cfg));
  for (const char* f : kReproducible) EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  for (const char* m : {"denn", "dsnn", "equal", "random"}) {
    const std::string f = std::string("histogram_") + m + ".csv";
    EXPECT_FALSE(slurp(a / f).empty());
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  EXPECT_TRUE(fs::exists(a / "timings.json"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Harness, ParallelPortfolioLoopMatchesSerial) {
  ExperimentConfig cfg = tiny_config();
  cfg.methods = {Method::equal, Method::random};
  cfg.portfolio_count = 50;
  ExperimentConfig serial = cfg;
  serial.execution = Execution::serial;
  const ExperimentReport p = run_experiment(cfg);
  const ExperimentReport s = run_experiment(serial);
  for (std::size_t m = 0; m < 2; ++m) {
    EXPECT_EQ(p.methods[m].realized, s.methods[m].realized);
    EXPECT_EQ(p.methods[m].var_row, s.methods[m].var_row);
  }
}

TEST(Harness, MethodStreamsAreIsolated) {
  ExperimentConfig cfg = tiny_config();
  cfg.methods = {Method::random};
  const ExperimentReport alone = run_experiment(cfg);
  cfg.methods = {Method::equal, Method::random};
  const ExperimentReport both = run_experiment(cfg);
  EXPECT_EQ(alone.methods[0].realized, both.methods[1].realized);
  EXPECT_NE(method_seed(1, Method::denn, "scenarios", 0), method_seed(1, Method::dsnn, "scenarios", 0));
  EXPECT_NE(method_seed(1, Method::denn, "scenarios", 0), method_seed(1, Method::denn, "scenarios", 1));
}

TEST(Harness, ModelMethodsRecordObjectives) {
  const ExperimentReport r = run_experiment(tiny_config());
  for (const MethodResult& m : r.methods) {
    const bool model = m.method == Method::denn || m.method == Method::dsnn;
    for (double v : m.predicted) EXPECT_EQ(std::isnan(v), !model);
  }
  EXPECT_TRUE(r.metrics.contains("dsnn.test_survival_nll"));
  EXPECT_TRUE(r.metrics.contains("dsnn.final_gap"));
}

TEST(Harness, StageFailureNamesTheStage) {
  ExperimentConfig cfg = tiny_config();
  cfg.csv = fs::temp_directory_path() / "loanvar_no_such_file.csv";
  try {
    run_experiment(cfg);
    FAIL() << "expected a failure";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("stage 'data'"), std::string::npos);
  }
}

TEST(Harness, ReportRebuildsFromRunDirectory) {
  const ExperimentConfig cfg = tiny_config();
  const fs::path a = fresh_dir("loanvar_harness_rebuild");
  const ExperimentReport original = run_experiment(cfg);
  write_report(a, original);
  const ExperimentReport back = report_from_run(a);
  ASSERT_EQ(back.methods.size(), original.methods.size());
  for (std::size_t m = 0; m < back.methods.size(); ++m) {
    EXPECT_EQ(back.methods[m].method, original.methods[m].method);
    EXPECT_EQ(back.methods[m].realized, original.methods[m].realized);
    EXPECT_EQ(back.methods[m].var_row, original.methods[m].var_row);
  }
  EXPECT_EQ(back.metrics, original.metrics);
  const fs::path b = fresh_dir("loanvar_harness_rebuild_out");
  write_report(b, back);
  EXPECT_EQ(slurp(a / "var_table.tsv"), slurp(b / "var_table.tsv"));
  EXPECT_EQ(slurp(a / "histogram_dsnn.csv"), slurp(b / "histogram_dsnn.csv"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(ExperimentConfigKv, RoundTrip) {
  ExperimentConfig cfg = tiny_config();
  cfg.objective = parse_objective("cvar99");
  cfg.expert_class_weight = 2.0;
  cfg.model.class_weight_positive = 3.5;
  cfg.confidences = {0.97, 0.9};
  const std::string text = to_kv(cfg).str();
  const ExperimentConfig back = experiment_config_from_kv(KeyValueFile::parse(text));
  EXPECT_EQ(to_kv(back).str(), text);
  EXPECT_EQ(back.methods, cfg.methods);
  EXPECT_EQ(back.expert_class_weight, cfg.expert_class_weight);
  EXPECT_THROW(experiment_config_from_kv(KeyValueFile::parse("methods = denn,lrm\n")), SpecError);
  EXPECT_THROW(experiment_config_from_kv(KeyValueFile::parse("portfolio_size = 0\n")), SpecError);
}

TEST(Histogram, SingleValueFillsOneBin) {
  const std::vector<double> v(25, 0.0042);
  const Histogram h = make_histogram(v, HistogramSettings{});
  std::size_t nonzero = 0;
  for (std::size_t c : h.counts) nonzero += c > 0 ? 1 : 0;
  EXPECT_EQ(nonzero, 1u);
  EXPECT_EQ(h.counts.size(), 55u);
}

TEST(Histogram, CountsSumToSampleSize) {
  rng::SplitMix64 gen(1);
  std::vector<double> v(5000);
  for (double& x : v) x = gen.normal() * 0.02;
  const Histogram h = make_histogram(v, HistogramSettings{});
  std::size_t total = h.underflow + h.overflow;
  for (std::size_t c : h.counts) total += c;
  EXPECT_EQ(total, v.size());
  EXPECT_GT(h.underflow, 0u);
  EXPECT_GT(h.overflow, 0u);
}

TEST(Histogram, UniformSampleIsNearlyFlat) {
  rng::SplitMix64 gen(2);
  const HistogramSettings s{0.0, 1.0, 0.05};
  std::vector<double> v(100000);
  for (double& x : v) x = gen.uniform();
  const Histogram h = make_histogram(v, s);
  const double expected = 100000.0 / 20.0;
  ASSERT_EQ(h.counts.size(), 20u);
  for (std::size_t c : h.counts) EXPECT_LE(std::abs(static_cast<double>(c) - expected), 4.0 * std::sqrt(expected));
}

TEST(Histogram, RejectsBadSettings) {
  const std::vector<double> v{0.0};
  EXPECT_THROW(make_histogram(v, HistogramSettings{0.0, 1.0, 0.0}), SpecError);
  EXPECT_THROW(make_histogram(v, HistogramSettings{0.0, 1.0, -0.1}), SpecError);
  EXPECT_THROW(make_histogram(v, HistogramSettings{1.0, 0.0, 0.1}), SpecError);
}

TEST(VarRow, AnnualizesPercentileLoss) {
  std::vector<double> r(100);
  for (std::size_t i = 0; i < 100; ++i) r[i] = -0.05 + 0.001 * static_cast<double>(i);
  const std::vector<double> conf{0.95, 0.8};
  const auto row = annualized_var_row(r, conf);
  EXPECT_NEAR(row[0], -12.0 * r[5], 1e-15);
  EXPECT_NEAR(row[1], -12.0 * r[20], 1e-15);
}
