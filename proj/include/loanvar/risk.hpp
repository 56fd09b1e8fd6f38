#pragma once

// Scenario VaR / CVaR and the simplex-constrained minimizer.
//
// VaR_a: sort returns ascending, take the value at 0-based index
// floor((1 - a) k) (clamped to [0, k-1]) and negate it.
// CVaR_a: negated mean of the m = max(1, floor((1 - a) k)) smallest returns.
// Both are monthly losses.

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "loanvar/execution.hpp"
#include "loanvar/rng.hpp"
#include "loanvar/simulation.hpp"

namespace loanvar {

enum class RiskMeasure { var, cvar };

struct RiskSpec {
  RiskMeasure measure = RiskMeasure::var;
  double confidence = 0.95;  // alpha; the horizon is one month
};

void validate(const RiskSpec& spec);

// "var95", "cvar99", ...
RiskSpec parse_objective(std::string_view name);
std::string objective_name(const RiskSpec& spec);

std::size_t percentile_index(std::size_t scenarios, double confidence);
std::size_t tail_count(std::size_t scenarios, double confidence);

double value_at_risk(std::span<const double> returns, double confidence);
double conditional_value_at_risk(std::span<const double> returns, double confidence);
double risk_value(std::span<const double> returns, const RiskSpec& spec);

// Search-time objective: VaR with the percentile linearly interpolated at
// position (1 - a)(k - 1); CVaR unchanged. Both continuous in the weights.
double smoothed_risk_value(std::span<const double> returns, const RiskSpec& spec);

// Exact objective of a weight vector.
double evaluate_weights(const ScenarioMatrix& m, std::span<const double> weights,
                        const RiskSpec& spec);

// Euclidean projection onto { w : w_i >= 0, sum w = 1 }.
std::vector<double> project_to_simplex(std::span<const double> v);

// Uniform on the simplex: normalized unit exponentials.
std::vector<double> dirichlet_weights(std::size_t n, rng::SplitMix64& gen);

// Forward-difference gradient of the smoothed objective along e_i - e_pivot
// (weight moved from the pivot loan to loan i); the pivot entry is 0. The
// fast version re-ranks only scenarios that can cross the order statistics
// in use; the reference re-evaluates every perturbed vector in full.
std::vector<double> surrogate_gradient(const ScenarioMatrix& m, std::span<const double> weights,
                                       std::size_t pivot, const RiskSpec& spec, double step);
std::vector<double> surrogate_gradient_reference(const ScenarioMatrix& m,
                                                 std::span<const double> weights, std::size_t pivot,
                                                 const RiskSpec& spec, double step);

struct OptimizerConfig {
  std::size_t random_starts = 9;  // in addition to equal weights
  std::size_t max_iterations = 200;
  double tolerance = 1e-6;        // stop once an iteration improves less than this
  double gradient_step = 1e-4;    // forward-difference step per coordinate
  // Pairwise weight transfers on the exact objective after the smooth phase,
  // from polish_step halving down to polish_min_step; 0 disables.
  double polish_step = 0.05;
  double polish_min_step = 1e-3;
  std::size_t polish_candidates = 10;  // best starts (by smooth-phase result) that get polished
  std::uint64_t seed = 0;
  Execution execution = Execution::parallel;  // over starts
};

struct PortfolioSolution {
  std::vector<double> weights;
  double objective = 0.0;  // exact VaR / CVaR at `weights`, monthly loss
  std::size_t evaluations = 0;
  std::size_t start_index = 0;  // 0 = equal weights
};

PortfolioSolution minimize_risk(const ScenarioMatrix& m, const RiskSpec& spec,
                                const OptimizerConfig& cfg = {});

}  // namespace loanvar
