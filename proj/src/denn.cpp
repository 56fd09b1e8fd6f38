#include "loanvar/denn.hpp"

#include <algorithm>
#include <cmath>

#include "loanvar/errors.hpp"
#include "loanvar/network_io.hpp"
#include "loanvar/rng.hpp"

namespace loanvar {

double inverse_frequency_weight(const Dataset& dataset, std::span<const std::size_t> rows) {
  double defaults = 0.0;
  for (std::size_t i : rows) defaults += dataset.records.at(i).defaulted ? 1.0 : 0.0;
  if (defaults == 0.0) throw TrainingError("training rows contain no defaulted loans");
  return (static_cast<double>(rows.size()) - defaults) / defaults;
}

nn::TrainConfig train_config(const ModelConfig& cfg, std::uint64_t seed, double class_weight) {
  nn::TrainConfig tc;
  tc.batch_size = cfg.batch_size;
  tc.learning_rate = cfg.learning_rate;
  tc.epochs = cfg.epochs;
  tc.class_weight_positive = class_weight;
  tc.seed = seed;
  tc.execution = cfg.execution;
  return tc;
}

DennTraining train_denn(const Dataset& dataset, std::span<const std::size_t> rows,
                        const ModelConfig& cfg) {
  if (rows.empty()) throw TrainingError("DeNN training set is empty");
  std::vector<std::size_t> defaulted;
  for (std::size_t i : rows) {
    if (dataset.records.at(i).defaulted) defaulted.push_back(i);
  }
  if (defaulted.empty()) throw TrainingError("DeNN needs defaulted loans to train the lifetime network");
  const double weight = cfg.class_weight_positive.value_or(inverse_frequency_weight(dataset, rows));
  const std::size_t d = dataset.feature_width();
  using nn::Activation;

  DennTraining out{
      DennModel{nn::init(nn::five_layer_spec(d, Activation::tanh, Activation::tanh, Activation::tanh,
                                             Activation::sigmoid, cfg.l2,
                                             rng::derive_seed(cfg.seed, "dr-nn"))),
                nn::init(nn::five_layer_spec(d, Activation::tanh, Activation::tanh, Activation::tanh,
                                             Activation::sigmoid, cfg.l2,
                                             rng::derive_seed(cfg.seed, "dl-nn")))},
      {}, {}, weight};

  const nn::TrainingSet all = make_training_set(dataset, rows);
  out.dr_trace = nn::train(out.model.dr_nn, all, nn::WeightedBce{},
                           train_config(cfg, rng::derive_seed(cfg.seed, "dr-nn-train"), weight));
  const nn::TrainingSet defaults_only = make_training_set(dataset, defaulted);
  out.dl_trace = nn::train(out.model.dl_nn, defaults_only, nn::Mse{},
                           train_config(cfg, rng::derive_seed(cfg.seed, "dl-nn-train"), 1.0));
  return out;
}

int predicted_default_lifetime(double lifetime_ratio, int term) {
  const double scaled = std::round(lifetime_ratio * static_cast<double>(term));
  return static_cast<int>(std::clamp(scaled, 0.0, static_cast<double>(term - 1)));
}

BinaryReturnDistribution denn_distribution(const LoanTerms& terms, double default_probability,
                                           double lifetime_ratio) {
  const int lifetime = predicted_default_lifetime(lifetime_ratio, terms.term);
  return {terms.rate, default_return(terms, lifetime), default_probability};
}

BinaryReturnDistribution predict_denn(const DennModel& model, const LoanRecord& loan) {
  return denn_distribution(loan.terms, model.dr_nn.forward_scalar(loan.features),
                           model.dl_nn.forward_scalar(loan.features));
}

std::vector<BinaryReturnDistribution> predict_denn(const DennModel& model,
                                                   std::span<const LoanRecord> loans) {
  const nn::FeatureMatrix x = feature_matrix(loans);
  if (!loans.empty() && x.cols != model.dr_nn.input_size()) {
    throw DomainError("loan feature width does not match the DeNN input");
  }
  const std::vector<double> p = nn::predict(model.dr_nn, x);
  const std::vector<double> ratio = nn::predict(model.dl_nn, x);
  std::vector<BinaryReturnDistribution> out;
  out.reserve(loans.size());
  for (std::size_t i = 0; i < loans.size(); ++i) {
    out.push_back(denn_distribution(loans[i].terms, p[i], ratio[i]));
  }
  return out;
}

void save_denn(const std::filesystem::path& dir, const DennModel& model) {
  std::filesystem::create_directories(dir);
  nn::save_network(dir / "dr_nn.txt", model.dr_nn);
  nn::save_network(dir / "dl_nn.txt", model.dl_nn);
  KeyValueFile manifest;
  manifest.set("model", std::string("denn"));
  manifest.set("version", std::uint64_t{1});
  manifest.set("dr_nn", std::string("dr_nn.txt"));
  manifest.set("dl_nn", std::string("dl_nn.txt"));
  manifest.write(dir / "manifest.txt");
}

DennModel load_denn(const std::filesystem::path& dir) {
  const KeyValueFile manifest = KeyValueFile::read(dir / "manifest.txt");
  if (manifest.text("model") != "denn") throw DataError(dir.string() + " does not hold a DeNN model");
  DennModel model{nn::load_network(dir / manifest.text("dr_nn")),
                  nn::load_network(dir / manifest.text("dl_nn"))};
  if (model.dr_nn.input_size() != model.dl_nn.input_size()) {
    throw DataError("DeNN sub-networks disagree on input width");
  }
  return model;
}

}  // namespace loanvar
