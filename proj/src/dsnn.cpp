#include <numeric>

#include "loanvar/errors.hpp"
#include "loanvar/network_io.hpp"
#include "loanvar/rng.hpp"
#include "loanvar/survival.hpp"
#include "loanvar/train.hpp"

namespace loanvar {

namespace {

double expert_weight(const DsnnConfig& cfg) {
  return cfg.expert_class_weight.value_or(cfg.model.class_weight_positive.value_or(1.0));
}

WeibullParams fit_on_rows(const Dataset& dataset, std::span<const std::size_t> rows,
                          const WeibullFitOptions& options) {
  std::vector<double> lifetimes;
  std::vector<double> events;
  lifetimes.reserve(rows.size());
  events.reserve(rows.size());
  for (std::size_t i : rows) {
    const LoanRecord& r = dataset.records.at(i);
    lifetimes.push_back(static_cast<double>(r.lifetime));
    events.push_back(r.defaulted ? 1.0 : 0.0);
  }
  return fit_weibull(lifetimes, events, options);
}

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return rows;
}

}  // namespace

nn::NetworkSpec snn_spec(std::size_t inputs, double l2, std::uint64_t seed) {
  using nn::Activation;
  return nn::five_layer_spec(inputs, Activation::tanh, Activation::tanh, Activation::sigmoid,
                             Activation::linear, l2, seed);
}

nn::NetworkSpec expert_spec(std::size_t inputs, double l2, std::uint64_t seed) {
  using nn::Activation;
  return nn::five_layer_spec(inputs, Activation::tanh, Activation::tanh, Activation::tanh,
                             Activation::sigmoid, l2, seed);
}

int common_term(const Dataset& dataset, std::span<const std::size_t> rows) {
  if (rows.empty()) throw TrainingError("survival training set is empty");
  const int term = dataset.records.at(rows.front()).terms.term;
  for (std::size_t i : rows) {
    if (dataset.records.at(i).terms.term != term) {
      throw TrainingError("survival training needs a single loan term across rows");
    }
  }
  return term;
}

DsnnTraining train_dsnn(const Dataset& dataset, std::span<const std::size_t> rows,
                        const DsnnConfig& cfg) {
  const int term = common_term(dataset, rows);
  const WeibullParams weibull = fit_on_rows(dataset, rows, cfg.fit);
  const std::size_t d = dataset.feature_width();
  const double weight = expert_weight(cfg);

  DsnnTraining out{
      DsnnModel{SurvivalModel{nn::init(snn_spec(d, cfg.model.l2, rng::derive_seed(cfg.model.seed, "snn"))),
                              weibull, term},
                nn::init(expert_spec(d, cfg.model.l2, rng::derive_seed(cfg.model.seed, "dnn"))),
                cfg.weights},
      {}, {}, {}};

  const nn::TrainingSet data = make_training_set(dataset, rows);
  const nn::LossKind loss =
      nn::DsnnCombined{weibull, term, cfg.weights.snn, cfg.weights.dnn, cfg.weights.dif};
  const auto local = all_rows(data.size());
  const auto parts = [&] {
    const nn::Network* nets[] = {&out.model.survival.snn, &out.model.dnn};
    return nn::evaluate_objective(nets, loss, data, local, weight, nullptr, false, cfg.model.execution)
        .parts;
  };
  out.initial_parts = parts();
  nn::Network* nets[] = {&out.model.survival.snn, &out.model.dnn};
  out.trace = nn::train(nets, data, loss,
                        train_config(cfg.model, rng::derive_seed(cfg.model.seed, "survival-train"), weight));
  out.final_parts = parts();
  return out;
}

SurvivalTraining train_snn_only(const Dataset& dataset, std::span<const std::size_t> rows,
                                const DsnnConfig& cfg) {
  const int term = common_term(dataset, rows);
  const WeibullParams weibull = fit_on_rows(dataset, rows, cfg.fit);
  const std::size_t d = dataset.feature_width();
  SurvivalTraining out{
      SurvivalModel{nn::init(snn_spec(d, cfg.model.l2, rng::derive_seed(cfg.model.seed, "snn"))),
                    weibull, term},
      {}};
  const nn::TrainingSet data = make_training_set(dataset, rows);
  out.trace = nn::train(out.model.snn, data, nn::SurvivalNll{weibull},
                        train_config(cfg.model, rng::derive_seed(cfg.model.seed, "survival-train"),
                                     expert_weight(cfg)));
  return out;
}

CategoricalReturnDistribution survival_distribution(const LoanTerms& terms,
                                                    const WeibullParams& weibull, double g) {
  LifetimeDistribution lifetime = lifetime_distribution(weibull, g, terms.term);
  CategoricalReturnDistribution dist;
  dist.default_returns.resize(lifetime.default_mass.size());
  for (std::size_t i = 0; i < dist.default_returns.size(); ++i) {
    dist.default_returns[i] = default_return(terms, static_cast<int>(i));
  }
  dist.default_masses = std::move(lifetime.default_mass);
  dist.promised_rate = terms.rate;
  dist.survival_mass = lifetime.survival_mass;
  return dist;
}

CategoricalReturnDistribution predict_survival(const SurvivalModel& model, const LoanRecord& loan) {
  return survival_distribution(loan.terms, model.weibull, model.snn.forward_scalar(loan.features));
}

std::vector<CategoricalReturnDistribution> predict_survival(const SurvivalModel& model,
                                                            std::span<const LoanRecord> loans) {
  const nn::FeatureMatrix x = feature_matrix(loans);
  if (!loans.empty() && x.cols != model.snn.input_size()) {
    throw DomainError("loan feature width does not match the survival network input");
  }
  const std::vector<double> g = nn::predict(model.snn, x);
  std::vector<CategoricalReturnDistribution> out(loans.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(loans.size()); ++i) {
    const auto k = static_cast<std::size_t>(i);
    out[k] = survival_distribution(loans[k].terms, model.weibull, g[k]);
  }
  return out;
}

double survival_loss(const SurvivalModel& model, const Dataset& dataset,
                     std::span<const std::size_t> rows) {
  const nn::TrainingSet data = make_training_set(dataset, rows);
  const nn::Network* nets[] = {&model.snn};
  return nn::evaluate_objective(nets, nn::SurvivalNll{model.weibull}, data, all_rows(data.size()), 1.0,
                                nullptr, false)
      .data_loss;
}

std::array<double, 3> dsnn_loss_parts(const DsnnModel& model, const Dataset& dataset,
                                      std::span<const std::size_t> rows, double expert_class_weight) {
  const nn::TrainingSet data = make_training_set(dataset, rows);
  const nn::Network* nets[] = {&model.survival.snn, &model.dnn};
  const nn::LossKind loss = nn::DsnnCombined{model.survival.weibull, model.survival.term,
                                             model.weights.snn, model.weights.dnn, model.weights.dif};
  return nn::evaluate_objective(nets, loss, data, all_rows(data.size()), expert_class_weight, nullptr,
                                false)
      .parts;
}

void save_survival(const std::filesystem::path& dir, const SurvivalModel& model) {
  std::filesystem::create_directories(dir);
  nn::save_network(dir / "snn.txt", model.snn);
  KeyValueFile manifest;
  manifest.set("model", std::string("snn"));
  manifest.set("version", std::uint64_t{1});
  manifest.set("snn", std::string("snn.txt"));
  manifest.set("lambda", model.weibull.lambda);
  manifest.set("rho", model.weibull.rho);
  manifest.set("term", static_cast<std::uint64_t>(model.term));
  manifest.write(dir / "manifest.txt");
}

SurvivalModel load_survival(const std::filesystem::path& dir) {
  const KeyValueFile manifest = KeyValueFile::read(dir / "manifest.txt");
  const std::string& kind = manifest.text("model");
  if (kind != "snn" && kind != "dsnn") throw DataError(dir.string() + " does not hold a survival model");
  SurvivalModel model{nn::load_network(dir / manifest.text("snn")),
                      WeibullParams{manifest.number("lambda"), manifest.number("rho")},
                      static_cast<int>(manifest.unsigned_integer("term"))};
  validate(model.weibull);
  return model;
}

void save_dsnn(const std::filesystem::path& dir, const DsnnModel& model) {
  std::filesystem::create_directories(dir);
  nn::save_network(dir / "snn.txt", model.survival.snn);
  nn::save_network(dir / "dnn.txt", model.dnn);
  KeyValueFile manifest;
  manifest.set("model", std::string("dsnn"));
  manifest.set("version", std::uint64_t{1});
  manifest.set("snn", std::string("snn.txt"));
  manifest.set("dnn", std::string("dnn.txt"));
  manifest.set("lambda", model.survival.weibull.lambda);
  manifest.set("rho", model.survival.weibull.rho);
  manifest.set("term", static_cast<std::uint64_t>(model.survival.term));
  manifest.set("w_snn", model.weights.snn);
  manifest.set("w_dnn", model.weights.dnn);
  manifest.set("w_dif", model.weights.dif);
  manifest.write(dir / "manifest.txt");
}

DsnnModel load_dsnn(const std::filesystem::path& dir) {
  const KeyValueFile manifest = KeyValueFile::read(dir / "manifest.txt");
  if (manifest.text("model") != "dsnn") throw DataError(dir.string() + " does not hold a DSNN model");
  DsnnModel model{load_survival(dir), nn::load_network(dir / manifest.text("dnn")),
                  DsnnLossWeights{manifest.number("w_snn"), manifest.number("w_dnn"),
                                  manifest.number("w_dif")}};
  return model;
}

}  // namespace loanvar
