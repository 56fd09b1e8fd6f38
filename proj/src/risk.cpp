#include "loanvar/risk.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "loanvar/errors.hpp"

namespace loanvar {

namespace {

// Absorbs representation error in (1 - a) k, e.g. (1 - 0.9) * 20 = 1.99..96.
constexpr double kIndexSlack = 1e-9;

void check_returns(std::span<const double> returns) {
  if (returns.empty()) throw DomainError("risk measures need at least one scenario");
}

}  // namespace

void validate(const RiskSpec& spec) {
  if (!(spec.confidence > 0.0 && spec.confidence < 1.0)) {
    throw SpecError("confidence level must lie strictly between 0 and 1");
  }
}

RiskSpec parse_objective(std::string_view name) {
  RiskSpec spec;
  std::string_view digits;
  if (name.starts_with("cvar")) {
    spec.measure = RiskMeasure::cvar;
    digits = name.substr(4);
  } else if (name.starts_with("var")) {
    spec.measure = RiskMeasure::var;
    digits = name.substr(3);
  } else {
    throw SpecError("unknown objective '" + std::string(name) + "'");
  }
  if (digits.empty() || digits.size() > 2 ||
      !std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    throw SpecError("objective needs a percent confidence, e.g. var95");
  }
  spec.confidence = std::stoi(std::string(digits)) / 100.0;
  validate(spec);
  return spec;
}

std::string objective_name(const RiskSpec& spec) {
  const long pct = std::lround(spec.confidence * 100.0);
  return (spec.measure == RiskMeasure::var ? "var" : "cvar") + std::to_string(pct);
}

std::size_t percentile_index(std::size_t scenarios, double confidence) {
  const double pos = (1.0 - confidence) * static_cast<double>(scenarios);
  const auto idx = static_cast<std::size_t>(std::floor(pos + kIndexSlack));
  return std::min(idx, scenarios == 0 ? 0 : scenarios - 1);
}

std::size_t tail_count(std::size_t scenarios, double confidence) {
  const double pos = (1.0 - confidence) * static_cast<double>(scenarios);
  const auto m = static_cast<std::size_t>(std::floor(pos + kIndexSlack));
  return std::clamp<std::size_t>(m, 1, std::max<std::size_t>(scenarios, 1));
}

double value_at_risk(std::span<const double> returns, double confidence) {
  check_returns(returns);
  validate(RiskSpec{RiskMeasure::var, confidence});
  std::vector<double> work(returns.begin(), returns.end());
  const std::size_t idx = percentile_index(work.size(), confidence);
  std::nth_element(work.begin(), work.begin() + static_cast<std::ptrdiff_t>(idx), work.end());
  return -work[idx];
}

double conditional_value_at_risk(std::span<const double> returns, double confidence) {
  check_returns(returns);
  validate(RiskSpec{RiskMeasure::cvar, confidence});
  std::vector<double> work(returns.begin(), returns.end());
  const std::size_t m = tail_count(work.size(), confidence);
  std::nth_element(work.begin(), work.begin() + static_cast<std::ptrdiff_t>(m - 1), work.end());
  std::sort(work.begin(), work.begin() + static_cast<std::ptrdiff_t>(m));
  const double sum = std::accumulate(work.begin(), work.begin() + static_cast<std::ptrdiff_t>(m), 0.0);
  return -(sum / static_cast<double>(m));
}

double risk_value(std::span<const double> returns, const RiskSpec& spec) {
  return spec.measure == RiskMeasure::var ? value_at_risk(returns, spec.confidence)
                                          : conditional_value_at_risk(returns, spec.confidence);
}

double smoothed_risk_value(std::span<const double> returns, const RiskSpec& spec) {
  if (spec.measure == RiskMeasure::cvar) return conditional_value_at_risk(returns, spec.confidence);
  check_returns(returns);
  validate(spec);
  const std::size_t k = returns.size();
  if (k == 1) return -returns[0];
  const double pos = (1.0 - spec.confidence) * static_cast<double>(k - 1);
  const std::size_t lo = std::min(static_cast<std::size_t>(pos), k - 2);
  const double frac = pos - static_cast<double>(lo);
  std::vector<double> work(returns.begin(), returns.end());
  const auto nth = work.begin() + static_cast<std::ptrdiff_t>(lo);
  std::nth_element(work.begin(), nth, work.end());
  const double below = *nth;
  const double above = *std::min_element(nth + 1, work.end());
  return -(below + frac * (above - below));
}

double evaluate_weights(const ScenarioMatrix& m, std::span<const double> weights,
                        const RiskSpec& spec) {
  return risk_value(portfolio_returns(weights, m, Execution::serial), spec);
}

std::vector<double> project_to_simplex(std::span<const double> v) {
  const std::size_t n = v.size();
  if (n == 0) throw DomainError("cannot project an empty vector");
  std::vector<double> u(v.begin(), v.end());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    cumulative += u[j];
    const double t = (cumulative - 1.0) / static_cast<double>(j + 1);
    if (u[j] - t > 0.0) theta = t;
  }
  std::vector<double> w(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = std::max(v[i] - theta, 0.0);
    total += w[i];
  }
  for (double& x : w) x = std::min(x / total, 1.0);
  return w;
}

std::vector<double> dirichlet_weights(std::size_t n, rng::SplitMix64& gen) {
  std::vector<double> w(n);
  double total = 0.0;
  for (double& x : w) {
    x = gen.exponential();
    total += x;
  }
  for (double& x : w) x /= total;
  return w;
}

}  // namespace loanvar
