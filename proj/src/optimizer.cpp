#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "loanvar/errors.hpp"
#include "loanvar/risk.hpp"

namespace loanvar {

namespace {

constexpr double kArmijo = 1e-4;
constexpr int kMaxBacktracks = 30;
constexpr double kCurvatureFloor = 1e-12;

// Objective evaluation with reusable buffers. Weights are full-length.
class Objective {
 public:
  Objective(const ScenarioMatrix& m, const RiskSpec& spec)
      : m_(m), spec_(spec), returns_(m.scenarios), row_min_(m.loans), row_max_(m.loans) {
    for (std::size_t i = 0; i < m.loans; ++i) {
      const auto row = m.row(i);
      const auto [lo, hi] = std::minmax_element(row.begin(), row.end());
      row_min_[i] = *lo;
      row_max_[i] = *hi;
    }
  }

  // Fills returns_ with sum_i w_i R(i, .) in loan order.
  void portfolio(std::span<const double> w) {
    std::fill(returns_.begin(), returns_.end(), 0.0);
    for (std::size_t i = 0; i < m_.loans; ++i) {
      const double wi = w[i];
      if (wi == 0.0) continue;
      const auto row = m_.row(i);
      for (std::size_t j = 0; j < m_.scenarios; ++j) returns_[j] += wi * row[j];
    }
  }

  double smoothed(std::span<const double> w) {
    portfolio(w);
    ++evaluations;
    return smoothed_risk_value(returns_, spec_);
  }

  double exact_of_current() {
    ++evaluations;
    return risk_value(returns_, spec_);
  }

  // Forward differences along e_i - e_pivot, reusing the current portfolio.
  // Moving weight h from the pivot to loan i shifts scenario j by
  // h (R_ij - R_pj), at most delta_i in magnitude, so an order statistic moves
  // by at most delta_i. Scenarios more than 2 delta_i below (above) the
  // relevant order statistics keep their side, and only the band between has
  // to be re-ranked. The values equal a full re-sort of the perturbed vector.
  std::vector<double> gradient(std::span<const double> w, std::size_t pivot, double f0, double h) {
    portfolio(w);
    const std::size_t k = m_.scenarios;

    // Order positions the objective reads: [first, last].
    std::size_t first = 0;
    std::size_t last = 0;
    double frac = 0.0;
    if (spec_.measure == RiskMeasure::var) {
      if (k > 1) {
        const double pos = (1.0 - spec_.confidence) * static_cast<double>(k - 1);
        first = std::min(static_cast<std::size_t>(pos), k - 2);
        last = first + 1;
        frac = pos - static_cast<double>(first);
      }
    } else {
      last = tail_count(k, spec_.confidence) - 1;
    }

    std::vector<double> span(m_.loans, 0.0);
    double widest = 0.0;
    for (std::size_t i = 0; i < m_.loans; ++i) {
      span[i] = std::max(std::abs(row_max_[i] - row_min_[pivot]), std::abs(row_min_[i] - row_max_[pivot]));
      if (i != pivot) widest = std::max(widest, span[i]);
    }

    // Only scenarios that can reach position `last` need ranking.
    sorted_.assign(returns_.begin(), returns_.end());
    std::nth_element(sorted_.begin(), sorted_.begin() + static_cast<std::ptrdiff_t>(last), sorted_.end());
    const double reach = sorted_[last] + 2.0 * h * widest;
    order_.clear();
    for (std::size_t j = 0; j < k; ++j) {
      if (returns_[j] <= reach) order_.push_back(j);
    }
    std::sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) {
      return returns_[a] < returns_[b] || (returns_[a] == returns_[b] && a < b);
    });
    sorted_.resize(order_.size());
    for (std::size_t t = 0; t < order_.size(); ++t) sorted_[t] = returns_[order_[t]];

    std::vector<double> g(m_.loans, 0.0);
    const auto rp = m_.row(pivot);
    for (std::size_t i = 0; i < m_.loans; ++i) {
      if (i == pivot) continue;
      const auto ri = m_.row(i);
      const double band = 2.0 * h * span[i];
      const auto lo_it = std::lower_bound(sorted_.begin(), sorted_.end(), sorted_[first] - band);
      const auto hi_it = std::upper_bound(sorted_.begin(), sorted_.end(), sorted_[last] + band);
      const auto a = static_cast<std::size_t>(lo_it - sorted_.begin());
      const auto b = static_cast<std::size_t>(hi_it - sorted_.begin());

      window_.clear();
      for (std::size_t t = a; t < b; ++t) {
        const std::size_t j = order_[t];
        window_.push_back(returns_[j] + h * (ri[j] - rp[j]));
      }
      double value;
      if (spec_.measure == RiskMeasure::var) {
        if (k == 1) {
          value = -window_[0];
        } else {
          const auto nth = window_.begin() + static_cast<std::ptrdiff_t>(first - a);
          std::nth_element(window_.begin(), nth, window_.end());
          const double below = *nth;
          const double above = *std::min_element(nth + 1, window_.end());
          value = -(below + frac * (above - below));
        }
      } else {
        const std::size_t m = last + 1;
        std::sort(window_.begin(), window_.end());
        std::vector<double> tail;
        tail.reserve(m);
        for (std::size_t t = 0; t < a; ++t) {
          const std::size_t j = order_[t];
          tail.push_back(returns_[j] + h * (ri[j] - rp[j]));
        }
        tail.insert(tail.end(), window_.begin(), window_.begin() + static_cast<std::ptrdiff_t>(m - a));
        std::sort(tail.begin(), tail.end());
        value = -(std::accumulate(tail.begin(), tail.end(), 0.0) / static_cast<double>(m));
      }
      ++evaluations;
      g[i] = (value - f0) / h;
    }
    return g;
  }

  std::span<const double> returns() const { return returns_; }

  std::size_t evaluations = 0;

 private:
  const ScenarioMatrix& m_;
  RiskSpec spec_;
  std::vector<double> returns_;
  std::vector<double> row_min_, row_max_;
  std::vector<std::size_t> order_;
  std::vector<double> sorted_, window_;
};

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Full weights from reduced coordinates: w_pivot = 1 - sum of the rest.
std::vector<double> expand(std::span<const double> z, std::size_t pivot) {
  std::vector<double> w(z.begin(), z.end());
  w[pivot] = 0.0;
  w[pivot] = 1.0 - std::accumulate(w.begin(), w.end(), 0.0);
  return w;
}

struct LocalResult {
  std::vector<double> weights;
  double exact = 0.0;
  std::size_t evaluations = 0;
};

// Quasi-Newton descent on the smoothed objective in the n-1 free coordinates
// with a BFGS inverse-Hessian, projected backtracking, and restarts of the
// curvature model when a step fails.
LocalResult local_search(const ScenarioMatrix& m, const RiskSpec& spec,
                         const OptimizerConfig& cfg, std::vector<double> w) {
  const std::size_t n = m.loans;
  const std::size_t pivot =
      static_cast<std::size_t>(std::max_element(w.begin(), w.end()) - w.begin());
  Objective obj(m, spec);

  double f = obj.smoothed(w);
  LocalResult best{w, obj.exact_of_current(), 0};
  std::vector<double> g = obj.gradient(w, pivot, f, cfg.gradient_step);

  // Inverse Hessian over all n coordinates; the pivot row/column stays zero.
  std::vector<double> H(n * n, 0.0);
  auto reset = [&] {
    std::fill(H.begin(), H.end(), 0.0);
    double gmax = 0.0;
    for (double gi : g) gmax = std::max(gmax, std::abs(gi));
    const double scale = gmax > 0.0 ? 0.1 / gmax : 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (i != pivot) H[i * n + i] = scale;
    }
  };
  reset();
  bool fresh = true;
  double last_step = 1.0;  // the next line search starts near the last accepted step

  std::vector<double> d(n), s(n), y(n), Hy(n);
  for (std::size_t iter = 0; iter < cfg.max_iterations; ++iter) {
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) acc -= H[i * n + k] * g[k];
      d[i] = acc;
    }

    bool accepted = false;
    std::vector<double> w_new;
    double f_new = f;
    double t = std::min(1.0, 4.0 * last_step);
    for (int bt = 0; bt < kMaxBacktracks; ++bt, t *= 0.5) {
      std::vector<double> trial(n);
      for (std::size_t i = 0; i < n; ++i) trial[i] = i == pivot ? 0.0 : w[i] + t * d[i];
      w_new = project_to_simplex(expand(trial, pivot));
      for (std::size_t i = 0; i < n; ++i) s[i] = i == pivot ? 0.0 : w_new[i] - w[i];
      const double slope = dot(g, s);
      if (!(slope < 0.0)) continue;
      f_new = obj.smoothed(w_new);
      if (f_new <= f + kArmijo * slope) {
        accepted = true;
        break;
      }
    }

    if (!accepted) {
      last_step = 1.0;
      if (fresh) break;
      reset();
      fresh = true;
      continue;
    }

    last_step = t;
    const double exact = obj.exact_of_current();
    if (exact < best.exact) {
      best.exact = exact;
      best.weights = w_new;
    }

    const double improvement = f - f_new;
    std::vector<double> g_new = obj.gradient(w_new, pivot, f_new, cfg.gradient_step);
    for (std::size_t i = 0; i < n; ++i) y[i] = g_new[i] - g[i];
    w = std::move(w_new);
    f = f_new;
    g = std::move(g_new);
    if (improvement < cfg.tolerance) break;

    const double sy = dot(s, y);
    if (sy > kCurvatureFloor) {
      for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t k = 0; k < n; ++k) acc += H[i * n + k] * y[k];
        Hy[i] = acc;
      }
      const double yHy = dot(y, Hy);
      const double rho = 1.0 / sy;
      const double c = (1.0 + yHy * rho) * rho;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < n; ++k) {
          H[i * n + k] += c * s[i] * s[k] - rho * (Hy[i] * s[k] + s[i] * Hy[k]);
        }
      }
      fresh = false;
    }
  }

  best.evaluations = obj.evaluations;
  return best;
}

// Moves weight between pairs of loans while the exact objective strictly
// drops. The exact objective is piecewise constant, so this reaches corners
// the smoothed search steps over.
// Returns the number of objective evaluations spent.
std::size_t polish(const ScenarioMatrix& m, const RiskSpec& spec, const OptimizerConfig& cfg,
                   LocalResult& best) {
  if (!(cfg.polish_step > 0.0)) return 0;
  const std::size_t n = m.loans;
  const std::size_t k = m.scenarios;
  Objective obj(m, spec);
  std::vector<double> w = best.weights;
  double current = best.exact;
  std::vector<double> base, sorted, trial(k);
  std::vector<std::size_t> order(k);

  // Scenario returns at w, plus their ascending order for the VaR screen.
  obj.portfolio(w);
  base.assign(obj.returns().begin(), obj.returns().end());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return base[a] < base[b]; });
  sorted.resize(k);
  // After a small transfer the order is nearly intact; insertion sort repairs it.
  auto resort = [&] {
    for (std::size_t t = 1; t < k; ++t) {
      const std::size_t j = order[t];
      std::size_t u = t;
      while (u > 0 && base[order[u - 1]] > base[j]) {
        order[u] = order[u - 1];
        --u;
      }
      order[u] = j;
    }
    for (std::size_t t = 0; t < k; ++t) sorted[t] = base[order[t]];
  };
  resort();

  std::vector<double> row_min(n), row_max(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto [lo, hi] = std::minmax_element(m.row(i).begin(), m.row(i).end());
    row_min[i] = *lo;
    row_max[i] = *hi;
  }
  const std::size_t var_index = percentile_index(k, spec.confidence);

  for (double step = cfg.polish_step; step >= cfg.polish_min_step; step *= 0.5) {
    bool improved = true;
    while (improved) {
      improved = false;
      for (std::size_t from = 0; from < n; ++from) {
        for (std::size_t to = 0; to < n; ++to) {
          if (to == from || w[from] <= 0.0) continue;
          const double delta = std::min(step, w[from]);
          const auto rf = m.row(from);
          const auto rt = m.row(to);
          if (spec.measure == RiskMeasure::var) {
            // VaR drops below `current` only if at most var_index scenarios
            // end at or below -current. A scenario moves by at most
            // delta * reach, so only those within that band need checking.
            const double threshold = -current;
            const double reach =
                delta * std::max(std::abs(row_max[to] - row_min[from]), std::abs(row_max[from] - row_min[to]));
            const auto a = static_cast<std::size_t>(
                std::upper_bound(sorted.begin(), sorted.end(), threshold - reach) - sorted.begin());
            if (a > var_index) continue;
            const auto b = static_cast<std::size_t>(
                std::upper_bound(sorted.begin(), sorted.end(), threshold + reach) - sorted.begin());
            std::size_t at_or_below = a;
            for (std::size_t t = a; t < b && at_or_below <= var_index; ++t) {
              const std::size_t j = order[t];
              at_or_below += base[j] + delta * (rt[j] - rf[j]) <= threshold ? 1 : 0;
            }
            if (at_or_below > var_index) continue;
          }
          for (std::size_t j = 0; j < k; ++j) trial[j] = base[j] + delta * (rt[j] - rf[j]);
          ++obj.evaluations;
          const double value = risk_value(trial, spec);
          if (!(value < current)) continue;

          w[from] = delta == w[from] ? 0.0 : w[from] - delta;
          w[to] = std::min(1.0, w[to] + delta);
          base.swap(trial);
          current = value;
          resort();
          improved = true;
        }
      }
    }
  }
  // The transfers updated returns incrementally; keep the result only if a
  // fresh evaluation confirms it.
  obj.portfolio(w);
  const double exact = obj.exact_of_current();
  if (exact < best.exact) {
    best.weights = std::move(w);
    best.exact = exact;
  }
  return obj.evaluations;
}

bool rows_identical(const ScenarioMatrix& m) {
  const auto first = m.row(0);
  for (std::size_t i = 1; i < m.loans; ++i) {
    if (!std::equal(first.begin(), first.end(), m.row(i).begin())) return false;
  }
  return true;
}

}  // namespace

std::vector<double> surrogate_gradient(const ScenarioMatrix& m, std::span<const double> weights,
                                       std::size_t pivot, const RiskSpec& spec, double step) {
  if (weights.size() != m.loans || pivot >= m.loans) throw DomainError("weights do not match the matrix");
  Objective obj(m, spec);
  const double f0 = obj.smoothed(weights);
  return obj.gradient(weights, pivot, f0, step);
}

std::vector<double> surrogate_gradient_reference(const ScenarioMatrix& m,
                                                 std::span<const double> weights, std::size_t pivot,
                                                 const RiskSpec& spec, double step) {
  if (weights.size() != m.loans || pivot >= m.loans) throw DomainError("weights do not match the matrix");
  const std::vector<double> base = portfolio_returns(weights, m, Execution::serial);
  const double f0 = smoothed_risk_value(base, spec);
  std::vector<double> g(m.loans, 0.0);
  std::vector<double> moved(m.scenarios);
  for (std::size_t i = 0; i < m.loans; ++i) {
    if (i == pivot) continue;
    for (std::size_t j = 0; j < m.scenarios; ++j) moved[j] = base[j] + step * (m(i, j) - m(pivot, j));
    g[i] = (smoothed_risk_value(moved, spec) - f0) / step;
  }
  return g;
}

PortfolioSolution minimize_risk(const ScenarioMatrix& m, const RiskSpec& spec,
                                const OptimizerConfig& cfg) {
  validate(spec);
  if (m.loans == 0) throw DomainError("cannot optimize an empty portfolio");
  if (m.scenarios == 0 || m.returns.size() != m.loans * m.scenarios) {
    throw DomainError("scenario matrix shape does not match its data");
  }
  for (double v : m.returns) {
    if (!std::isfinite(v)) throw DomainError("scenario matrix has non-finite entries");
  }
  if (!(cfg.gradient_step > 0.0)) throw SpecError("gradient step must be positive");

  const std::size_t n = m.loans;
  const std::vector<double> equal(n, 1.0 / static_cast<double>(n));
  if (n == 1 || rows_identical(m)) {
    return {equal, evaluate_weights(m, equal, spec), 1, 0};
  }

  const std::size_t starts = cfg.random_starts + 1;
  std::vector<LocalResult> results(starts);
  auto run = [&](std::size_t s) {
    std::vector<double> w0 = equal;
    if (s > 0) {
      rng::SplitMix64 gen(rng::derive_seed(cfg.seed, "dirichlet-start", s));
      w0 = dirichlet_weights(n, gen);
    }
    results[s] = local_search(m, spec, cfg, std::move(w0));
  };

  if (cfg.execution == Execution::parallel) {
#pragma omp parallel for schedule(dynamic)
    for (std::size_t s = 0; s < starts; ++s) run(s);
  } else {
    for (std::size_t s = 0; s < starts; ++s) run(s);
  }

  // Polish the best few starts, then pick by (exact objective, start index).
  std::vector<std::size_t> ranked(starts);
  std::iota(ranked.begin(), ranked.end(), std::size_t{0});
  std::stable_sort(ranked.begin(), ranked.end(),
                   [&](std::size_t a, std::size_t b) { return results[a].exact < results[b].exact; });
  const std::size_t polished = std::min(cfg.polish_candidates, starts);
  if (cfg.execution == Execution::parallel) {
#pragma omp parallel for schedule(dynamic)
    for (std::size_t r = 0; r < polished; ++r) {
      results[ranked[r]].evaluations += polish(m, spec, cfg, results[ranked[r]]);
    }
  } else {
    for (std::size_t r = 0; r < polished; ++r) {
      results[ranked[r]].evaluations += polish(m, spec, cfg, results[ranked[r]]);
    }
  }

  PortfolioSolution out;
  std::size_t winner = 0;
  std::size_t evaluations = 0;
  for (std::size_t s = 0; s < starts; ++s) {
    evaluations += results[s].evaluations;
    if (results[s].exact < results[winner].exact) winner = s;
  }
  out.weights = results[winner].weights;
  out.objective = evaluate_weights(m, out.weights, spec);
  out.evaluations = evaluations;
  out.start_index = winner;
  return out;
}

}  // namespace loanvar
