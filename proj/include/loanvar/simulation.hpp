#pragma once

// Monte-Carlo scenario matrices and portfolio returns.
//
// Entry (i, j) of a scenario matrix is drawn by inverse CDF from loan i's
// return distribution using a counter-based stream keyed by (seed, i, j).
// Loans are independent and the result does not depend on fill order, so
// the OpenMP kernel reproduces the serial reference bit for bit.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "loanvar/distribution.hpp"
#include "loanvar/execution.hpp"

namespace loanvar {

struct ScenarioMatrix {
  std::size_t loans = 0;      // n
  std::size_t scenarios = 0;  // k
  std::uint64_t seed = 0;
  std::vector<double> returns;  // n x k, row i = loan i

  double operator()(std::size_t i, std::size_t j) const { return returns[i * scenarios + j]; }
  std::span<const double> row(std::size_t i) const { return {returns.data() + i * scenarios, scenarios}; }
};

ScenarioMatrix simulate(std::span<const ReturnDistribution> dists, std::size_t scenarios,
                        std::uint64_t seed, Execution execution = Execution::parallel);

// Throws DomainError unless every weight is in [0, 1] and they sum to one
// within 1e-9.
void validate_weights(std::span<const double> weights);

// Entry j is sum_i w_i R(i, j).
std::vector<double> portfolio_returns(std::span<const double> weights, const ScenarioMatrix& m,
                                      Execution execution = Execution::parallel);

// n rows of k values, one scenario per column.
void write_matrix(const std::filesystem::path& path, const ScenarioMatrix& m);

}  // namespace loanvar
