#include "loanvar/weibull.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "loanvar/errors.hpp"

namespace loanvar {

void validate(const WeibullParams& params) {
  if (!(params.lambda > 0.0) || !(params.rho > 0.0) || !std::isfinite(params.lambda) ||
      !std::isfinite(params.rho)) {
    throw DomainError("Weibull parameters must be positive and finite");
  }
}

double risk_multiplier(double g) { return std::exp(std::min(g, kMaxExponent)); }

double cumulative_hazard(double t, const WeibullParams& params, double g) {
  return std::pow(params.lambda * t, params.rho) * risk_multiplier(g);
}

double log_hazard(double t, const WeibullParams& params, double g) {
  if (!(t > 0.0)) throw DomainError("hazard is defined for t > 0 only");
  validate(params);
  return params.rho * std::log(params.lambda) + std::log(params.rho) +
         (params.rho - 1.0) * std::log(t) + std::min(g, kMaxExponent);
}

double hazard(double t, const WeibullParams& params, double g) {
  if (!(t > 0.0)) throw DomainError("hazard is defined for t > 0 only");
  validate(params);
  return std::pow(params.lambda, params.rho) * params.rho * std::pow(t, params.rho - 1.0) *
         risk_multiplier(g);
}

double survival(double t, const WeibullParams& params, double g) {
  if (!(t >= 0.0)) throw DomainError("survival is defined for t >= 0 only");
  return std::exp(-cumulative_hazard(t, params, g));
}

LifetimeDistribution lifetime_distribution(const WeibullParams& params, double g, int term) {
  validate(params);
  if (term < 1) throw DomainError("term must be at least one month");
  LifetimeDistribution dist;
  dist.default_mass.resize(static_cast<std::size_t>(term));
  double previous = survival(0.0, params, g);
  dist.default_mass[0] = 1.0 - previous;
  for (int i = 1; i < term; ++i) {
    const double current = survival(static_cast<double>(i), params, g);
    dist.default_mass[static_cast<std::size_t>(i)] = previous - current;
    previous = current;
  }
  dist.survival_mass = previous;
  return dist;
}

double snn_default_rate(const WeibullParams& params, double g, int term) {
  validate(params);
  if (term < 2) throw DomainError("default rate needs a term of at least two months");
  return 1.0 - survival(static_cast<double>(term - 1), params, g);
}

namespace {

struct FitData {
  std::vector<double> log_t;  // all observations
  double events = 0.0;
  double event_log_sum = 0.0;
};

// Score of the profile log-likelihood in rho:
//   D / rho + sum_events ln t - D * sum t^rho ln t / sum t^rho
// evaluated with a shifted exponent to stay finite for large rho.
struct Score {
  double value;
  double slope;
};

Score profile_score(const FitData& data, double rho) {
  double max_term = -std::numeric_limits<double>::infinity();
  for (double lt : data.log_t) max_term = std::max(max_term, rho * lt);
  double s0 = 0.0;
  double s1 = 0.0;
  double s2 = 0.0;
  for (double lt : data.log_t) {
    const double w = std::exp(rho * lt - max_term);
    s0 += w;
    s1 += w * lt;
    s2 += w * lt * lt;
  }
  const double mean = s1 / s0;
  const double var = s2 / s0 - mean * mean;
  const double d = data.events;
  return {d / rho + data.event_log_sum - d * mean, -d / (rho * rho) - d * var};
}

}  // namespace

WeibullParams fit_weibull(std::span<const double> lifetimes, std::span<const double> events,
                          const WeibullFitOptions& options) {
  if (lifetimes.size() != events.size()) throw DomainError("lifetimes and events differ in length");
  FitData data;
  data.log_t.reserve(lifetimes.size());
  for (std::size_t i = 0; i < lifetimes.size(); ++i) {
    const double e = events[i];
    if (e != 0.0 && e != 1.0) throw DomainError("event indicators must be 0 or 1");
    double t = lifetimes[i];
    if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("lifetimes must be finite and >= 0");
    if (!options.censored && e == 0.0) continue;
    if (t == 0.0) t = options.zero_lifetime_floor;
    const double lt = std::log(t);
    data.log_t.push_back(lt);
    if (e == 1.0) {
      data.events += 1.0;
      data.event_log_sum += lt;
    }
  }
  if (data.events == 0.0) throw TrainingError("Weibull fit needs at least one observed event");

  constexpr double kRhoMin = 1e-3;
  constexpr double kRhoMax = 1e3;
  const auto degenerate = [] {
    return TrainingError("Weibull shape diverges: lifetimes carry no spread information");
  };
  // The profile log-likelihood is concave in rho, so the score is decreasing.
  double lo = kRhoMin;
  double hi = kRhoMax;
  if (profile_score(data, lo).value <= 0.0) throw TrainingError("Weibull shape below 1e-3");
  if (profile_score(data, hi).value >= 0.0) throw degenerate();

  double rho = 1.0;
  for (int iter = 0; iter < 200; ++iter) {
    const Score s = profile_score(data, rho);
    if (s.value > 0.0) {
      lo = rho;
    } else {
      hi = rho;
    }
    if (s.value == 0.0 || hi - lo <= 1e-14 * hi) break;
    double next = rho - s.value / s.slope;
    if (!(next > lo && next < hi) || !std::isfinite(next)) next = 0.5 * (lo + hi);
    if (std::abs(next - rho) <= 1e-13 * rho) {
      rho = next;
      break;
    }
    rho = next;
  }

  // lambda^rho = D / sum t^rho
  double max_term = -std::numeric_limits<double>::infinity();
  for (double lt : data.log_t) max_term = std::max(max_term, rho * lt);
  double s0 = 0.0;
  for (double lt : data.log_t) s0 += std::exp(rho * lt - max_term);
  const double log_lambda = (std::log(data.events) - std::log(s0) - max_term) / rho;
  WeibullParams fitted{std::exp(log_lambda), rho};
  validate(fitted);
  return fitted;
}

}  // namespace loanvar
