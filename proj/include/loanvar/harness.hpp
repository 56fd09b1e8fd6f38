#pragma once

// Experiment driver: train the models, sample shared test-split portfolios,
// choose weights per method, score them on realized returns, and write the
// VaR table, realized-return samples and histograms.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "loanvar/data.hpp"
#include "loanvar/denn.hpp"
#include "loanvar/execution.hpp"
#include "loanvar/kv_file.hpp"
#include "loanvar/model_config.hpp"
#include "loanvar/risk.hpp"
#include "loanvar/survival.hpp"

namespace loanvar {

enum class Method { denn, dsnn, snn_only, equal, random };

std::string to_string(Method m);
Method parse_method(std::string_view name);
std::vector<Method> parse_methods(const std::string& list);  // comma separated

struct HistogramSettings {
  double low = -0.040;
  double high = 0.015;
  double bin_width = 0.001;
};

struct ExperimentConfig {
  std::optional<std::filesystem::path> csv;  // unset: synthetic data
  SynthConfig synth;
  SplitRatios split;
  std::vector<Method> methods{Method::denn, Method::dsnn, Method::snn_only, Method::equal,
                              Method::random};
  RiskSpec objective{RiskMeasure::var, 0.95};
  std::size_t portfolio_size = 40;
  std::size_t portfolio_count = 2000;
  std::size_t scenarios = 10000;
  std::vector<double> confidences{0.99, 0.95, 0.90, 0.85, 0.80};
  ModelConfig model;
  DsnnLossWeights dsnn_weights;
  std::optional<double> expert_class_weight;
  OptimizerConfig optimizer;  // seed and execution are set per portfolio
  HistogramSettings histogram;
  std::uint64_t seed = 1;
  Execution execution = Execution::parallel;
};

void validate(const ExperimentConfig& cfg);

// Flat keys; anything absent keeps its default. See README for the list.
ExperimentConfig experiment_config_from_kv(const KeyValueFile& kv);
KeyValueFile to_kv(const ExperimentConfig& cfg);

// Seed for a named stage of a method; each method owns its own streams.
std::uint64_t method_seed(std::uint64_t master, Method m, std::string_view stage,
                          std::uint64_t index = 0);

struct MethodResult {
  Method method = Method::equal;
  std::vector<double> realized;   // one monthly return per portfolio
  std::vector<double> predicted;  // optimizer objective per portfolio (model methods)
  std::vector<double> var_row;    // annualized VaR per confidence column
};

struct TrainedModels {
  std::optional<DennTraining> denn;
  std::optional<DsnnTraining> dsnn;
  std::optional<SurvivalTraining> snn_only;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<MethodResult> methods;
  std::map<std::string, double> metrics;  // test losses, training summaries, dataset counts
  std::map<std::string, double> timings;  // seconds per stage; not part of the reproducible files
};

// Loads or generates the data and splits / standardizes it with the
// experiment's derived seed.
Dataset prepare_dataset(const ExperimentConfig& cfg);
// Trainer settings with the experiment's derived model seed. DSNN and the
// SNN-only baseline share it, so their survival branches start identically.
ModelConfig model_config(const ExperimentConfig& cfg);
DsnnConfig dsnn_config(const ExperimentConfig& cfg);

// Stage failures are rethrown as std::runtime_error naming the stage.
ExperimentReport run_experiment(const ExperimentConfig& cfg, TrainedModels* models = nullptr);

// Portfolio weights for one method on one portfolio of test loans.
struct PortfolioContext {
  const std::vector<ReturnDistribution>* distributions = nullptr;  // per test loan
  std::span<const std::size_t> members;                           // test-loan positions
  std::size_t index = 0;                                           // portfolio number
};
std::vector<double> choose_weights(const ExperimentConfig& cfg, Method method,
                                   const PortfolioContext& ctx, double* objective = nullptr);

// ---- reporting ----

// Annualized VaR of the pooled realized returns at each confidence.
std::vector<double> annualized_var_row(std::span<const double> realized,
                                       std::span<const double> confidences);

struct Histogram {
  HistogramSettings settings;
  std::vector<std::size_t> counts;
  std::size_t underflow = 0;  // below low
  std::size_t overflow = 0;   // at or above high
};

Histogram make_histogram(std::span<const double> sample, const HistogramSettings& settings);
void emit_histogram(const std::filesystem::path& path, std::span<const double> sample,
                    const HistogramSettings& settings);

// Writes var_table.tsv, realized_returns.csv, histogram_<method>.csv and
// run_metadata.json (byte-reproducible), plus timings.json.
void write_report(const std::filesystem::path& dir, const ExperimentReport& report);

// Rebuilds the table and histograms from a run directory's
// realized_returns.csv and run_metadata.json.
ExperimentReport report_from_run(const std::filesystem::path& dir);

}  // namespace loanvar
