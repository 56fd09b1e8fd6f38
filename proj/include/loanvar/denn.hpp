#pragma once

// Default-rate network plus default-lifetime network, combined into a
// two-point return distribution per loan.

#include <filesystem>
#include <span>

#include "loanvar/distribution.hpp"
#include "loanvar/model_config.hpp"
#include "loanvar/network.hpp"

namespace loanvar {

struct DennModel {
  nn::Network dr_nn;  // P(default), sigmoid output
  nn::Network dl_nn;  // default lifetime / term, sigmoid output
};

struct DennTraining {
  DennModel model;
  nn::TrainResult dr_trace;
  nn::TrainResult dl_trace;
  double class_weight_positive = 1.0;
};

// DR-NN on every row against the default flag (weighted cross-entropy);
// DL-NN on the defaulted rows only against lifetime / term (squared error).
DennTraining train_denn(const Dataset& dataset, std::span<const std::size_t> rows,
                        const ModelConfig& cfg);

// Predicted installments before default: round(ratio * L) clamped to [0, L-1].
int predicted_default_lifetime(double lifetime_ratio, int term);

BinaryReturnDistribution denn_distribution(const LoanTerms& terms, double default_probability,
                                           double lifetime_ratio);

BinaryReturnDistribution predict_denn(const DennModel& model, const LoanRecord& loan);
std::vector<BinaryReturnDistribution> predict_denn(const DennModel& model,
                                                   std::span<const LoanRecord> loans);

// Directory with dr_nn.txt, dl_nn.txt and manifest.txt.
void save_denn(const std::filesystem::path& dir, const DennModel& model);
DennModel load_denn(const std::filesystem::path& dir);

}  // namespace loanvar
