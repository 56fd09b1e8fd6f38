#pragma once

// Discrete distributions over a loan's monthly return.

#include <span>
#include <vector>

namespace loanvar {

inline constexpr double kMassTolerance = 1e-9;

// r_L with probability 1 - p, the default return with probability p.
struct BinaryReturnDistribution {
  double promised_rate = 0.0;
  double default_return = -1.0;
  double default_probability = 0.0;
};

// Default after i installments (i = 0 .. L-1) with the return of i
// payments, or survival to term at the promised rate.
struct CategoricalReturnDistribution {
  std::vector<double> default_returns;  // r_{d,i}
  std::vector<double> default_masses;   // p_i
  double promised_rate = 0.0;
  double survival_mass = 0.0;
};

class ReturnDistribution {
 public:
  // Throws DomainError unless masses are non-negative and sum to one within
  // kMassTolerance, and every support point is finite and >= -1.
  ReturnDistribution(std::vector<double> support, std::vector<double> masses);
  ReturnDistribution(const BinaryReturnDistribution& d);
  ReturnDistribution(const CategoricalReturnDistribution& d);

  std::span<const double> support() const noexcept { return support_; }
  std::span<const double> masses() const noexcept { return masses_; }

  double mean() const;
  double variance() const;

  // Inverse CDF at u in [0, 1).
  double quantile_draw(double u) const;

 private:
  std::vector<double> support_;
  std::vector<double> masses_;
  std::vector<double> cumulative_;
  std::size_t last_positive_ = 0;
};

}  // namespace loanvar
