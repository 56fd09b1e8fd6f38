#include "loanvar/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <stdexcept>

#include "loanvar/errors.hpp"
#include "loanvar/network_io.hpp"
#include "loanvar/rng.hpp"
#include "loanvar/simulation.hpp"

namespace loanvar {

namespace {

constexpr Method kAllMethods[] = {Method::denn, Method::dsnn, Method::snn_only, Method::equal,
                                  Method::random};

// Runs `fn`, rethrowing any failure with the stage name attached and
// recording the elapsed time.
template <typename Fn>
auto stage(const char* name, std::map<std::string, double>& timings, Fn&& fn) {
  const auto start = std::chrono::steady_clock::now();
  auto record = [&] {
    timings[name] += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };
  try {
    if constexpr (std::is_void_v<decltype(fn())>) {
      fn();
      record();
    } else {
      auto result = fn();
      record();
      return result;
    }
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("stage '") + name + "' failed: " + e.what());
  }
}

bool uses(const ExperimentConfig& cfg, Method m) {
  return std::find(cfg.methods.begin(), cfg.methods.end(), m) != cfg.methods.end();
}

std::string join(const std::vector<Method>& methods) {
  std::string out;
  for (std::size_t i = 0; i < methods.size(); ++i) {
    if (i) out += ',';
    out += to_string(methods[i]);
  }
  return out;
}

}  // namespace

std::string to_string(Method m) {
  switch (m) {
    case Method::denn: return "denn";
    case Method::dsnn: return "dsnn";
    case Method::snn_only: return "snn_only";
    case Method::equal: return "equal";
    case Method::random: return "random";
  }
  throw SpecError("unknown method");
}

Method parse_method(std::string_view name) {
  for (Method m : kAllMethods) {
    if (to_string(m) == name) return m;
  }
  throw SpecError("unknown method '" + std::string(name) + "'");
}

std::vector<Method> parse_methods(const std::string& list) {
  std::vector<Method> out;
  for (const std::string& item : split_list(list)) {
    const Method m = parse_method(item);
    if (std::find(out.begin(), out.end(), m) != out.end()) {
      throw SpecError("method '" + item + "' listed twice");
    }
    out.push_back(m);
  }
  if (out.empty()) throw SpecError("no methods selected");
  return out;
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.methods.empty()) throw SpecError("no methods selected");
  if (cfg.portfolio_size == 0) throw SpecError("portfolio size must be at least 1");
  if (cfg.portfolio_count == 0) throw SpecError("portfolio count must be at least 1");
  if (cfg.scenarios == 0) throw SpecError("scenario count must be at least 1");
  if (cfg.confidences.empty()) throw SpecError("need at least one confidence column");
  for (double c : cfg.confidences) validate(RiskSpec{RiskMeasure::var, c});
  validate(cfg.objective);
  if (!(cfg.histogram.bin_width > 0.0)) throw SpecError("histogram bin width must be positive");
  if (!(cfg.histogram.high > cfg.histogram.low)) throw SpecError("histogram range is empty");
  if (cfg.model.epochs == 0 || cfg.model.batch_size == 0 || !(cfg.model.learning_rate > 0.0)) {
    throw SpecError("training epochs, batch size and learning rate must be positive");
  }
  if (!cfg.csv) validate(cfg.synth);
}

ExperimentConfig experiment_config_from_kv(const KeyValueFile& kv) {
  ExperimentConfig cfg;
  const std::string source = kv.find("source").value_or("synthetic");
  if (source == "csv") {
    cfg.csv = kv.text("csv_path");
  } else if (source != "synthetic") {
    throw SpecError("source must be 'synthetic' or 'csv'");
  }
  cfg.synth = synth_config_from_kv(kv);
  cfg.split.train = kv.number_or("split.train", cfg.split.train);
  cfg.split.validation = kv.number_or("split.validation", cfg.split.validation);
  cfg.split.test = kv.number_or("split.test", cfg.split.test);
  if (auto m = kv.find("methods")) cfg.methods = parse_methods(*m);
  if (auto o = kv.find("objective")) cfg.objective = parse_objective(*o);
  cfg.portfolio_size = kv.unsigned_or("portfolio_size", cfg.portfolio_size);
  cfg.portfolio_count = kv.unsigned_or("portfolio_count", cfg.portfolio_count);
  cfg.scenarios = kv.unsigned_or("scenarios", cfg.scenarios);
  if (kv.contains("confidences")) cfg.confidences = kv.numbers("confidences");
  cfg.model.epochs = kv.unsigned_or("model.epochs", cfg.model.epochs);
  cfg.model.batch_size = kv.unsigned_or("model.batch_size", cfg.model.batch_size);
  cfg.model.learning_rate = kv.number_or("model.learning_rate", cfg.model.learning_rate);
  cfg.model.l2 = kv.number_or("model.l2", cfg.model.l2);
  if (kv.contains("model.class_weight_positive")) {
    cfg.model.class_weight_positive = kv.number("model.class_weight_positive");
  }
  cfg.dsnn_weights.snn = kv.number_or("dsnn.w_snn", cfg.dsnn_weights.snn);
  cfg.dsnn_weights.dnn = kv.number_or("dsnn.w_dnn", cfg.dsnn_weights.dnn);
  cfg.dsnn_weights.dif = kv.number_or("dsnn.w_dif", cfg.dsnn_weights.dif);
  if (kv.contains("dsnn.expert_class_weight")) {
    cfg.expert_class_weight = kv.number("dsnn.expert_class_weight");
  }
  OptimizerConfig& opt = cfg.optimizer;
  opt.random_starts = kv.unsigned_or("optimizer.random_starts", opt.random_starts);
  opt.max_iterations = kv.unsigned_or("optimizer.max_iterations", opt.max_iterations);
  opt.tolerance = kv.number_or("optimizer.tolerance", opt.tolerance);
  opt.gradient_step = kv.number_or("optimizer.gradient_step", opt.gradient_step);
  opt.polish_step = kv.number_or("optimizer.polish_step", opt.polish_step);
  opt.polish_min_step = kv.number_or("optimizer.polish_min_step", opt.polish_min_step);
  opt.polish_candidates = kv.unsigned_or("optimizer.polish_candidates", opt.polish_candidates);
  cfg.histogram.low = kv.number_or("histogram.low", cfg.histogram.low);
  cfg.histogram.high = kv.number_or("histogram.high", cfg.histogram.high);
  cfg.histogram.bin_width = kv.number_or("histogram.bin_width", cfg.histogram.bin_width);
  cfg.seed = kv.unsigned_or("seed", cfg.seed);
  if (auto e = kv.find("execution")) {
    if (*e == "serial") {
      cfg.execution = Execution::serial;
    } else if (*e != "parallel") {
      throw SpecError("execution must be 'serial' or 'parallel'");
    }
  }
  validate(cfg);
  return cfg;
}

KeyValueFile to_kv(const ExperimentConfig& cfg) {
  KeyValueFile kv = synth_config_to_kv(cfg.synth);
  kv.set("source", std::string(cfg.csv ? "csv" : "synthetic"));
  if (cfg.csv) kv.set("csv_path", cfg.csv->string());
  kv.set("split.train", cfg.split.train);
  kv.set("split.validation", cfg.split.validation);
  kv.set("split.test", cfg.split.test);
  kv.set("methods", join(cfg.methods));
  kv.set("objective", objective_name(cfg.objective));
  kv.set("portfolio_size", static_cast<std::uint64_t>(cfg.portfolio_size));
  kv.set("portfolio_count", static_cast<std::uint64_t>(cfg.portfolio_count));
  kv.set("scenarios", static_cast<std::uint64_t>(cfg.scenarios));
  kv.set("confidences", cfg.confidences);
  kv.set("model.epochs", static_cast<std::uint64_t>(cfg.model.epochs));
  kv.set("model.batch_size", static_cast<std::uint64_t>(cfg.model.batch_size));
  kv.set("model.learning_rate", cfg.model.learning_rate);
  kv.set("model.l2", cfg.model.l2);
  if (cfg.model.class_weight_positive) {
    kv.set("model.class_weight_positive", *cfg.model.class_weight_positive);
  }
  kv.set("dsnn.w_snn", cfg.dsnn_weights.snn);
  kv.set("dsnn.w_dnn", cfg.dsnn_weights.dnn);
  kv.set("dsnn.w_dif", cfg.dsnn_weights.dif);
  if (cfg.expert_class_weight) kv.set("dsnn.expert_class_weight", *cfg.expert_class_weight);
  const OptimizerConfig& opt = cfg.optimizer;
  kv.set("optimizer.random_starts", static_cast<std::uint64_t>(opt.random_starts));
  kv.set("optimizer.max_iterations", static_cast<std::uint64_t>(opt.max_iterations));
  kv.set("optimizer.tolerance", opt.tolerance);
  kv.set("optimizer.gradient_step", opt.gradient_step);
  kv.set("optimizer.polish_step", opt.polish_step);
  kv.set("optimizer.polish_min_step", opt.polish_min_step);
  kv.set("optimizer.polish_candidates", static_cast<std::uint64_t>(opt.polish_candidates));
  kv.set("histogram.low", cfg.histogram.low);
  kv.set("histogram.high", cfg.histogram.high);
  kv.set("histogram.bin_width", cfg.histogram.bin_width);
  kv.set("seed", cfg.seed);
  kv.set("execution", std::string(cfg.execution == Execution::serial ? "serial" : "parallel"));
  return kv;
}

std::uint64_t method_seed(std::uint64_t master, Method m, std::string_view stage,
                          std::uint64_t index) {
  return rng::derive_seed(rng::derive_seed(master, to_string(m)), stage, index);
}

std::vector<double> choose_weights(const ExperimentConfig& cfg, Method method,
                                   const PortfolioContext& ctx, double* objective) {
  const std::size_t n = ctx.members.size();
  if (n == 0) throw DomainError("portfolio has no loans");
  switch (method) {
    case Method::equal:
      return std::vector<double>(n, 1.0 / static_cast<double>(n));
    case Method::random: {
      rng::SplitMix64 gen(method_seed(cfg.seed, method, "weights", ctx.index));
      return dirichlet_weights(n, gen);
    }
    default:
      break;
  }
  if (ctx.distributions == nullptr) throw DomainError("model method needs predicted distributions");
  std::vector<ReturnDistribution> dists;
  dists.reserve(n);
  for (std::size_t pos : ctx.members) dists.push_back(ctx.distributions->at(pos));
  const ScenarioMatrix m = simulate(dists, cfg.scenarios,
                                    method_seed(cfg.seed, method, "scenarios", ctx.index),
                                    Execution::serial);
  OptimizerConfig opt = cfg.optimizer;
  opt.seed = method_seed(cfg.seed, method, "optimizer", ctx.index);
  opt.execution = Execution::serial;
  PortfolioSolution sol = minimize_risk(m, cfg.objective, opt);
  if (objective) *objective = sol.objective;
  return std::move(sol.weights);
}

Dataset prepare_dataset(const ExperimentConfig& cfg) {
  Dataset raw = cfg.csv ? load_csv(*cfg.csv) : generate_synthetic(cfg.synth).dataset;
  return preprocess(std::move(raw), cfg.split, rng::derive_seed(cfg.seed, "split"));
}

ModelConfig model_config(const ExperimentConfig& cfg) {
  ModelConfig mc = cfg.model;
  mc.seed = rng::derive_seed(cfg.seed, "models");
  mc.execution = cfg.execution;
  return mc;
}

DsnnConfig dsnn_config(const ExperimentConfig& cfg) {
  DsnnConfig dc;
  dc.model = model_config(cfg);
  dc.weights = cfg.dsnn_weights;
  dc.expert_class_weight = cfg.expert_class_weight;
  return dc;
}

ExperimentReport run_experiment(const ExperimentConfig& cfg, TrainedModels* models) {
  validate(cfg);
  ExperimentReport report;
  report.config = cfg;
  auto& timings = report.timings;

  const Dataset dataset = stage("data", timings, [&] { return prepare_dataset(cfg); });
  const auto train_rows = dataset.indices(Split::train);
  const auto test_rows = dataset.indices(Split::test);
  if (test_rows.empty()) throw std::runtime_error("stage 'data' failed: test split is empty");
  report.metrics["data.loans"] = static_cast<double>(dataset.records.size());
  report.metrics["data.rejected_rows"] = static_cast<double>(dataset.diagnostics.size());
  report.metrics["data.train"] = static_cast<double>(train_rows.size());
  report.metrics["data.test"] = static_cast<double>(test_rows.size());

  const ModelConfig mc = model_config(cfg);
  const DsnnConfig dc = dsnn_config(cfg);

  TrainedModels local;
  TrainedModels& trained = models ? *models : local;
  if (uses(cfg, Method::denn)) {
    trained.denn = stage("train.denn", timings, [&] { return train_denn(dataset, train_rows, mc); });
  }
  if (uses(cfg, Method::dsnn)) {
    trained.dsnn = stage("train.dsnn", timings, [&] { return train_dsnn(dataset, train_rows, dc); });
  }
  if (uses(cfg, Method::snn_only)) {
    trained.snn_only =
        stage("train.snn_only", timings, [&] { return train_snn_only(dataset, train_rows, dc); });
  }

  if (trained.dsnn) {
    const auto& t = *trained.dsnn;
    report.metrics["dsnn.test_survival_nll"] = survival_loss(t.model.survival, dataset, test_rows);
    report.metrics["dsnn.initial_gap"] = t.initial_parts[2];
    report.metrics["dsnn.final_gap"] = t.final_parts[2];
    report.metrics["dsnn.weibull_lambda"] = t.model.survival.weibull.lambda;
    report.metrics["dsnn.weibull_rho"] = t.model.survival.weibull.rho;
  }
  if (trained.snn_only) {
    report.metrics["snn_only.test_survival_nll"] =
        survival_loss(trained.snn_only->model, dataset, test_rows);
  }

  // Distributions for every test loan, per model method.
  std::vector<LoanRecord> test_loans;
  test_loans.reserve(test_rows.size());
  for (std::size_t i : test_rows) test_loans.push_back(dataset.records[i]);
  std::map<Method, std::vector<ReturnDistribution>> predicted;
  stage("predict", timings, [&] {
    if (trained.denn) {
      auto& out = predicted[Method::denn];
      for (const auto& d : predict_denn(trained.denn->model, test_loans)) out.emplace_back(d);
    }
    if (trained.dsnn) {
      auto& out = predicted[Method::dsnn];
      for (const auto& d : predict_survival(trained.dsnn->model.survival, test_loans)) out.emplace_back(d);
    }
    if (trained.snn_only) {
      auto& out = predicted[Method::snn_only];
      for (const auto& d : predict_survival(trained.snn_only->model, test_loans)) out.emplace_back(d);
    }
  });

  std::vector<double> realized_loan(test_loans.size());
  for (std::size_t i = 0; i < test_loans.size(); ++i) realized_loan[i] = realized_return(test_loans[i]);

  // Shared portfolios: test-loan positions sampled with replacement.
  const std::size_t n = cfg.portfolio_size;
  std::vector<std::size_t> members(cfg.portfolio_count * n);
  {
    rng::SplitMix64 gen(rng::derive_seed(cfg.seed, "portfolios"));
    for (std::size_t& m : members) m = gen.below(test_loans.size());
  }

  report.methods.resize(cfg.methods.size());
  for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
    MethodResult& r = report.methods[mi];
    r.method = cfg.methods[mi];
    r.realized.assign(cfg.portfolio_count, 0.0);
    r.predicted.assign(cfg.portfolio_count, std::nan(""));
  }

  stage("portfolios", timings, [&] {
    const auto count = static_cast<std::ptrdiff_t>(cfg.portfolio_count);
    std::exception_ptr failure;
    auto work = [&](std::size_t p) {
      PortfolioContext ctx;
      ctx.members = std::span<const std::size_t>(members.data() + p * n, n);
      ctx.index = p;
      for (MethodResult& r : report.methods) {
        const auto it = predicted.find(r.method);
        ctx.distributions = it == predicted.end() ? nullptr : &it->second;
        double objective = std::nan("");
        const std::vector<double> w = choose_weights(cfg, r.method, ctx, &objective);
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) total += w[i] * realized_loan[ctx.members[i]];
        r.realized[p] = total;
        r.predicted[p] = objective;
      }
    };
    if (cfg.execution == Execution::parallel) {
#pragma omp parallel for schedule(dynamic)
      for (std::ptrdiff_t p = 0; p < count; ++p) {
        try {
          work(static_cast<std::size_t>(p));
        } catch (...) {
#pragma omp critical(loanvar_harness_failure)
          if (!failure) failure = std::current_exception();
        }
      }
    } else {
      for (std::ptrdiff_t p = 0; p < count; ++p) work(static_cast<std::size_t>(p));
    }
    if (failure) std::rethrow_exception(failure);
  });

  for (MethodResult& r : report.methods) r.var_row = annualized_var_row(r.realized, cfg.confidences);
  return report;
}

}  // namespace loanvar
