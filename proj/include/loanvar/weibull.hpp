#pragma once

// Weibull proportional-hazards arithmetic shared by the survival losses and
// the survival model:
//   h(t) = lambda^rho * rho * t^(rho-1) * exp(g)
//   S(t) = exp(-(lambda t)^rho * exp(g))
// where g is the survival network's output.

#include <span>
#include <vector>

namespace loanvar {

struct WeibullParams {
  double lambda = 0.0;  // 1 / months
  double rho = 0.0;     // shape

  bool operator==(const WeibullParams&) const = default;
};

void validate(const WeibullParams& params);

// exp() arguments derived from the network output are capped here.
inline constexpr double kMaxExponent = 700.0;

// exp(min(g, 700)).
double risk_multiplier(double g);

// (lambda t)^rho * exp(g): the cumulative hazard, i.e. -ln S(t).
double cumulative_hazard(double t, const WeibullParams& params, double g);

double hazard(double t, const WeibullParams& params, double g);
double log_hazard(double t, const WeibullParams& params, double g);
double survival(double t, const WeibullParams& params, double g);

// Probability of default at each whole month 0..L-1 and of surviving past
// month L-1. Masses telescope to one.
struct LifetimeDistribution {
  std::vector<double> default_mass;  // p_0 .. p_{L-1}
  double survival_mass = 0.0;        // S(L-1)
};

LifetimeDistribution lifetime_distribution(const WeibullParams& params, double g, int term);

// 1 - S(L-1); the survival branch's implied default rate.
double snn_default_rate(const WeibullParams& params, double g, int term);

struct WeibullFitOptions {
  bool censored = true;               // non-events contribute survival terms
  double zero_lifetime_floor = 0.5;   // months; applied to t == 0
};

// Maximum-likelihood Weibull fit to lifetimes with event indicators (1 =
// default observed, 0 = censored). Throws TrainingError when no event is
// present or the shape estimate diverges.
WeibullParams fit_weibull(std::span<const double> lifetimes, std::span<const double> events,
                          const WeibullFitOptions& options = {});

}  // namespace loanvar
