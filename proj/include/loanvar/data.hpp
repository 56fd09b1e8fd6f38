#pragma once

// Loan records, CSV ingestion, train/validation/test preprocessing and the
// synthetic ground-truth generator.
//
// CSV layout: header row, then
//   id, f_0 .. f_{d-1}, amount, installment, term, rate, lifetime, default
// with an optional trailing `grade` column. Rates are monthly; lifetime is
// the number of installments paid; default is 0 or 1.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "loanvar/kv_file.hpp"
#include "loanvar/loan_math.hpp"
#include "loanvar/train.hpp"
#include "loanvar/weibull.hpp"

namespace loanvar {

struct LoanRecord {
  std::string id;
  std::vector<double> features;
  LoanTerms terms;
  int lifetime = 0;  // installments paid; equals the term when not defaulted
  bool defaulted = false;
  std::string grade;

  bool operator==(const LoanRecord&) const = default;
};

// Throws InconsistencyError when the default flag and lifetime disagree and
// DomainError on invalid terms.
void validate(const LoanRecord& record);

// Monthly return actually earned, from the true labels.
double realized_return(const LoanRecord& record);

enum class Split : std::uint8_t { train, validation, test };

struct NormalizationStats {
  std::vector<double> mean;
  std::vector<double> stddev;  // 0 marks a constant feature

  std::vector<double> apply(std::span<const double> raw) const;
  KeyValueFile to_kv() const;
  static NormalizationStats from_kv(const KeyValueFile& kv);
};

struct Dataset {
  std::vector<LoanRecord> records;
  std::vector<Split> split;  // empty until preprocessed
  NormalizationStats normalization;
  std::vector<std::string> diagnostics;  // rejected rows and warnings from loading

  std::size_t feature_width() const { return records.empty() ? 0 : records.front().features.size(); }
  std::vector<std::size_t> indices(Split which) const;
};

struct CsvSchema {
  std::size_t feature_count = 0;  // 0 accepts whatever width the header declares
};

Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema = {});
void write_csv(const std::filesystem::path& path, std::span<const LoanRecord> records);

struct SplitRatios {
  double train = 164720.0 / 244720.0;
  double validation = 40000.0 / 244720.0;
  double test = 40000.0 / 244720.0;
};

// Seeded random split and feature standardization with training-split
// statistics. Constant features map to 0.
Dataset preprocess(Dataset dataset, const SplitRatios& ratios, std::uint64_t seed);

// Gathers features and labels for `rows`. `target` receives lifetime / term.
nn::TrainingSet make_training_set(const Dataset& dataset, std::span<const std::size_t> rows);
nn::FeatureMatrix feature_matrix(std::span<const LoanRecord> records);

struct SynthConfig {
  std::size_t loans = 20000;
  std::size_t features = 16;
  int term = 36;
  WeibullParams lifetime{0.05, 1.5};  // default-time truth, truncated below the term
  double intercept = -1.9;
  std::vector<double> coefficients;   // empty: default pattern over half the features
  double rate_min = 0.005;            // monthly
  double rate_max = 0.025;
  double rate_risk_loading = 1.0;     // riskier loans carry higher promised rates
  double amount_min = 1000.0;
  double amount_max = 35000.0;
  std::uint64_t seed = 1;
};

void validate(const SynthConfig& cfg);
// Coefficients actually used (fills the default pattern when empty).
std::vector<double> resolved_coefficients(const SynthConfig& cfg);

struct SyntheticData {
  Dataset dataset;
  std::vector<double> default_probability;  // true per-loan propensity
  SynthConfig config;                       // with coefficients resolved
};

SyntheticData generate_synthetic(const SynthConfig& cfg);

KeyValueFile synth_config_to_kv(const SynthConfig& cfg, const std::string& prefix = "synth.");
SynthConfig synth_config_from_kv(const KeyValueFile& kv, const std::string& prefix = "synth.");

// Ground-truth sidecar next to a generated CSV.
void write_truth(const std::filesystem::path& path, const SyntheticData& data);

}  // namespace loanvar
