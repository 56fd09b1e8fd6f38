#include <cmath>

#include "loanvar/data.hpp"
#include "loanvar/errors.hpp"
#include "loanvar/rng.hpp"

namespace loanvar {

namespace {

double logistic(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Inverse CDF of the Weibull restricted to [0, horizon).
double truncated_weibull(const WeibullParams& w, double horizon, double u) {
  const double mass = -std::expm1(-std::pow(w.lambda * horizon, w.rho));
  const double p = u * mass;
  return std::pow(-std::log1p(-p), 1.0 / w.rho) / w.lambda;
}

}  // namespace

void validate(const SynthConfig& cfg) {
  if (cfg.loans < 1) throw SpecError("synthetic loan count must be at least 1");
  if (cfg.features < 1) throw SpecError("synthetic feature width must be at least 1");
  if (cfg.term < 2) throw SpecError("synthetic term must be at least 2 months");
  validate(cfg.lifetime);
  if (!cfg.coefficients.empty() && cfg.coefficients.size() != cfg.features) {
    throw SpecError("need one propensity coefficient per feature");
  }
  if (!(cfg.rate_min > -1.0 && cfg.rate_min <= cfg.rate_max)) throw SpecError("invalid rate range");
  if (!(cfg.amount_min > 0.0 && cfg.amount_min <= cfg.amount_max)) throw SpecError("invalid amount range");
}

std::vector<double> resolved_coefficients(const SynthConfig& cfg) {
  if (!cfg.coefficients.empty()) return cfg.coefficients;
  std::vector<double> beta(cfg.features, 0.0);
  const std::size_t informative = std::max<std::size_t>(1, cfg.features / 2);
  const double scale = 1.2 / std::sqrt(static_cast<double>(informative));
  for (std::size_t j = 0; j < informative; ++j) beta[j] = (j % 2 == 0 ? scale : -scale);
  return beta;
}

SyntheticData generate_synthetic(const SynthConfig& cfg) {
  validate(cfg);
  SyntheticData out;
  out.config = cfg;
  out.config.coefficients = resolved_coefficients(cfg);
  const std::vector<double>& beta = out.config.coefficients;
  double beta_norm = 0.0;
  for (double b : beta) beta_norm += b * b;
  beta_norm = std::sqrt(beta_norm);

  const double horizon = static_cast<double>(cfg.term);
  out.dataset.records.resize(cfg.loans);
  out.default_probability.resize(cfg.loans);
  for (std::size_t i = 0; i < cfg.loans; ++i) {
    rng::SplitMix64 gen(rng::counter_hash(cfg.seed, rng::hash_label("synthetic-loan"), i));
    LoanRecord& rec = out.dataset.records[i];
    rec.id = "L" + std::to_string(i);
    rec.features.resize(cfg.features);
    double score = cfg.intercept;
    for (std::size_t j = 0; j < cfg.features; ++j) {
      rec.features[j] = gen.normal();
      score += beta[j] * rec.features[j];
    }
    const double p = logistic(score);
    out.default_probability[i] = p;
    rec.defaulted = gen.uniform() < p;

    const double z = beta_norm > 0.0 ? (score - cfg.intercept) / beta_norm : 0.0;
    const double rate_position = logistic(cfg.rate_risk_loading * z + 0.5 * gen.normal());
    rec.terms.rate = cfg.rate_min + (cfg.rate_max - cfg.rate_min) * rate_position;
    rec.terms.term = cfg.term;
    rec.terms.amount = std::round(gen.uniform(cfg.amount_min, cfg.amount_max));
    rec.terms.installment = annuity_installment(rec.terms.amount, cfg.term, rec.terms.rate);

    const double u = gen.uniform();
    if (rec.defaulted) {
      const double t = std::floor(truncated_weibull(cfg.lifetime, horizon, u));
      rec.lifetime = std::min(static_cast<int>(t), cfg.term - 1);
    } else {
      rec.lifetime = cfg.term;
    }
  }
  return out;
}

KeyValueFile synth_config_to_kv(const SynthConfig& cfg, const std::string& prefix) {
  KeyValueFile kv;
  kv.set(prefix + "loans", static_cast<std::uint64_t>(cfg.loans));
  kv.set(prefix + "features", static_cast<std::uint64_t>(cfg.features));
  kv.set(prefix + "term", static_cast<std::uint64_t>(cfg.term));
  kv.set(prefix + "lambda", cfg.lifetime.lambda);
  kv.set(prefix + "rho", cfg.lifetime.rho);
  kv.set(prefix + "intercept", cfg.intercept);
  if (!cfg.coefficients.empty()) kv.set(prefix + "coefficients", cfg.coefficients);
  kv.set(prefix + "rate_min", cfg.rate_min);
  kv.set(prefix + "rate_max", cfg.rate_max);
  kv.set(prefix + "rate_risk_loading", cfg.rate_risk_loading);
  kv.set(prefix + "amount_min", cfg.amount_min);
  kv.set(prefix + "amount_max", cfg.amount_max);
  kv.set(prefix + "seed", cfg.seed);
  return kv;
}

SynthConfig synth_config_from_kv(const KeyValueFile& kv, const std::string& prefix) {
  SynthConfig cfg;
  cfg.loans = kv.unsigned_or(prefix + "loans", cfg.loans);
  cfg.features = kv.unsigned_or(prefix + "features", cfg.features);
  cfg.term = static_cast<int>(kv.unsigned_or(prefix + "term", static_cast<std::uint64_t>(cfg.term)));
  cfg.lifetime.lambda = kv.number_or(prefix + "lambda", cfg.lifetime.lambda);
  cfg.lifetime.rho = kv.number_or(prefix + "rho", cfg.lifetime.rho);
  cfg.intercept = kv.number_or(prefix + "intercept", cfg.intercept);
  if (kv.contains(prefix + "coefficients")) cfg.coefficients = kv.numbers(prefix + "coefficients");
  cfg.rate_min = kv.number_or(prefix + "rate_min", cfg.rate_min);
  cfg.rate_max = kv.number_or(prefix + "rate_max", cfg.rate_max);
  cfg.rate_risk_loading = kv.number_or(prefix + "rate_risk_loading", cfg.rate_risk_loading);
  cfg.amount_min = kv.number_or(prefix + "amount_min", cfg.amount_min);
  cfg.amount_max = kv.number_or(prefix + "amount_max", cfg.amount_max);
  cfg.seed = kv.unsigned_or(prefix + "seed", cfg.seed);
  return cfg;
}

void write_truth(const std::filesystem::path& path, const SyntheticData& data) {
  KeyValueFile kv = synth_config_to_kv(data.config, "");
  double defaults = 0.0;
  for (const LoanRecord& r : data.dataset.records) defaults += r.defaulted ? 1.0 : 0.0;
  kv.set("observed_default_rate", defaults / static_cast<double>(data.dataset.records.size()));
  double mean_p = 0.0;
  for (double p : data.default_probability) mean_p += p;
  kv.set("mean_default_probability", mean_p / static_cast<double>(data.default_probability.size()));
  kv.write(path);
}

}  // namespace loanvar
