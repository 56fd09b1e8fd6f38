#include "loanvar/simulation.hpp"

#include <cmath>
#include <fstream>

#include "loanvar/errors.hpp"
#include "loanvar/network_io.hpp"
#include "loanvar/rng.hpp"

namespace loanvar {

namespace {

// Portfolio returns are accumulated over scenario blocks of this width.
constexpr std::size_t kScenarioBlock = 256;

}  // namespace

ScenarioMatrix simulate(std::span<const ReturnDistribution> dists, std::size_t scenarios,
                        std::uint64_t seed, Execution execution) {
  if (scenarios < 1) throw DomainError("need at least one scenario");
  ScenarioMatrix m{dists.size(), scenarios, seed, std::vector<double>(dists.size() * scenarios)};
  const auto fill_row = [&](std::size_t i) {
    double* row = m.returns.data() + i * scenarios;
    for (std::size_t j = 0; j < scenarios; ++j) {
      row[j] = dists[i].quantile_draw(rng::to_unit(rng::counter_hash(seed, i, j)));
    }
  };
  if (execution == Execution::serial) {
    for (std::size_t i = 0; i < dists.size(); ++i) fill_row(i);
  } else {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(dists.size()); ++i) {
      fill_row(static_cast<std::size_t>(i));
    }
  }
  return m;
}

void validate_weights(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0 && w <= 1.0)) throw DomainError("weights must lie in [0, 1]");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw DomainError("weights must sum to one");
}

std::vector<double> portfolio_returns(std::span<const double> weights, const ScenarioMatrix& m,
                                      Execution execution) {
  if (weights.size() != m.loans) {
    throw DomainError("weight vector has " + std::to_string(weights.size()) + " entries for " +
                      std::to_string(m.loans) + " loans");
  }
  std::vector<double> out(m.scenarios, 0.0);
  if (execution == Execution::serial) {
    for (std::size_t j = 0; j < m.scenarios; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < m.loans; ++i) s += weights[i] * m(i, j);
      out[j] = s;
    }
    return out;
  }
  // Same per-scenario summation order as the serial loop, walking rows
  // contiguously inside each block.
  const std::size_t blocks = (m.scenarios + kScenarioBlock - 1) / kScenarioBlock;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(blocks); ++b) {
    const std::size_t begin = static_cast<std::size_t>(b) * kScenarioBlock;
    const std::size_t end = std::min(m.scenarios, begin + kScenarioBlock);
    double* acc = out.data();
    for (std::size_t i = 0; i < m.loans; ++i) {
      const double w = weights[i];
      const double* row = m.returns.data() + i * m.scenarios;
      for (std::size_t j = begin; j < end; ++j) acc[j] += w * row[j];
    }
  }
  return out;
}

void write_matrix(const std::filesystem::path& path, const ScenarioMatrix& m) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  for (std::size_t i = 0; i < m.loans; ++i) {
    for (std::size_t j = 0; j < m.scenarios; ++j) {
      if (j) out << ' ';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
  if (!out) throw DataError("failed writing " + path.string());
}

}  // namespace loanvar
