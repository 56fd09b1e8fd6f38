#include "loanvar/distribution.hpp"

#include <algorithm>
#include <cmath>

#include "loanvar/errors.hpp"

namespace loanvar {

namespace {

std::vector<double> categorical_support(const CategoricalReturnDistribution& d) {
  std::vector<double> s = d.default_returns;
  s.push_back(d.promised_rate);
  return s;
}

std::vector<double> categorical_masses(const CategoricalReturnDistribution& d) {
  if (d.default_masses.size() != d.default_returns.size()) {
    throw DomainError("categorical distribution: returns and masses differ in length");
  }
  std::vector<double> m = d.default_masses;
  m.push_back(d.survival_mass);
  return m;
}

}  // namespace

ReturnDistribution::ReturnDistribution(std::vector<double> support, std::vector<double> masses)
    : support_(std::move(support)), masses_(std::move(masses)) {
  if (support_.empty() || support_.size() != masses_.size()) {
    throw DomainError("distribution needs matching, non-empty support and masses");
  }
  double total = 0.0;
  cumulative_.resize(masses_.size());
  for (std::size_t i = 0; i < masses_.size(); ++i) {
    if (!(masses_[i] >= 0.0) || !std::isfinite(masses_[i])) throw DomainError("masses must be non-negative");
    if (!std::isfinite(support_[i]) || support_[i] < -1.0) {
      throw DomainError("support points must be finite monthly returns >= -1");
    }
    total += masses_[i];
    cumulative_[i] = total;
    if (masses_[i] > 0.0) last_positive_ = i;
  }
  if (std::abs(total - 1.0) > kMassTolerance) throw DomainError("distribution masses do not sum to one");
}

ReturnDistribution::ReturnDistribution(const BinaryReturnDistribution& d)
    : ReturnDistribution({d.promised_rate, d.default_return},
                         {1.0 - d.default_probability, d.default_probability}) {}

ReturnDistribution::ReturnDistribution(const CategoricalReturnDistribution& d)
    : ReturnDistribution(categorical_support(d), categorical_masses(d)) {}

double ReturnDistribution::mean() const {
  double m = 0.0;
  for (std::size_t i = 0; i < support_.size(); ++i) m += masses_[i] * support_[i];
  return m;
}

double ReturnDistribution::variance() const {
  const double m = mean();
  double v = 0.0;
  for (std::size_t i = 0; i < support_.size(); ++i) {
    const double d = support_[i] - m;
    v += masses_[i] * d * d;
  }
  return v;
}

double ReturnDistribution::quantile_draw(double u) const {
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  const std::size_t k = static_cast<std::size_t>(it - cumulative_.begin());
  return support_[std::min(k, last_positive_)];
}

}  // namespace loanvar
