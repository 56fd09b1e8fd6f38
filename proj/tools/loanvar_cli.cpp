// Command-line front end: generate, train, optimize, experiment, report.

#include <CLI11.hpp>

#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "loanvar/errors.hpp"
#include "loanvar/harness.hpp"
#include "loanvar/network_io.hpp"
#include "loanvar/rng.hpp"
#include "loanvar/simulation.hpp"

namespace fs = std::filesystem;
using namespace loanvar;

namespace {

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string objective;
  std::string methods;
  std::string out;
};

ExperimentConfig load_config(const CommonOptions& o) {
  ExperimentConfig cfg = o.config.empty() ? ExperimentConfig{}
                                          : experiment_config_from_kv(KeyValueFile::read(o.config));
  if (o.seed) {
    cfg.seed = *o.seed;
    cfg.synth.seed = *o.seed;
  }
  if (!o.objective.empty()) cfg.objective = parse_objective(o.objective);
  if (!o.methods.empty()) cfg.methods = parse_methods(o.methods);
  validate(cfg);
  return cfg;
}

void add_common(CLI::App* cmd, CommonOptions& o, bool objective_and_methods) {
  cmd->add_option("--config", o.config, "key = value configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "master seed (also seeds synthetic data)");
  cmd->add_option("--out", o.out, "output directory")->required();
  if (objective_and_methods) {
    cmd->add_option("--objective", o.objective, "var95 | var99 | cvar95 | cvar99");
    cmd->add_option("--methods", o.methods, "comma list of denn,dsnn,snn_only,equal,random");
  }
}

void print_table(const ExperimentReport& report) {
  std::cout << "method";
  for (double c : report.config.confidences) std::cout << '\t' << std::lround(c * 100) << '%';
  std::cout << '\n';
  for (const MethodResult& r : report.methods) {
    std::cout << to_string(r.method);
    for (double v : r.var_row) std::cout << '\t' << format_double(v);
    std::cout << '\n';
  }
}

int run_generate(const CommonOptions& o) {
  const ExperimentConfig cfg = load_config(o);
  const SyntheticData data = generate_synthetic(cfg.synth);
  fs::create_directories(o.out);
  write_csv(fs::path(o.out) / "loans.csv", data.dataset.records);
  write_truth(fs::path(o.out) / "truth.txt", data);
  std::cout << "wrote " << data.dataset.records.size() << " loans to " << o.out << '\n';
  return 0;
}

int run_train(const CommonOptions& o) {
  const ExperimentConfig cfg = load_config(o);
  const Dataset data = prepare_dataset(cfg);
  for (const std::string& d : data.diagnostics) std::cerr << d << '\n';
  const auto rows = data.indices(Split::train);
  const auto test = data.indices(Split::test);
  const ModelConfig mc = model_config(cfg);
  const DsnnConfig dc = dsnn_config(cfg);

  const fs::path out(o.out);
  fs::create_directories(out);
  data.normalization.to_kv().write(out / "normalization.txt");
  to_kv(cfg).write(out / "config.txt");
  for (Method m : cfg.methods) {
    switch (m) {
      case Method::denn:
        save_denn(out / "denn", train_denn(data, rows, mc).model);
        break;
      case Method::dsnn: {
        const DsnnTraining t = train_dsnn(data, rows, dc);
        save_dsnn(out / "dsnn", t.model);
        std::cout << "dsnn test survival NLL " << format_double(survival_loss(t.model.survival, data, test))
                  << '\n';
        break;
      }
      case Method::snn_only: {
        const SurvivalTraining t = train_snn_only(data, rows, dc);
        save_survival(out / "snn_only", t.model);
        std::cout << "snn_only test survival NLL " << format_double(survival_loss(t.model, data, test))
                  << '\n';
        break;
      }
      default:
        continue;
    }
    std::cout << "trained " << to_string(m) << '\n';
  }
  return 0;
}

int run_optimize(const CommonOptions& o, const std::string& models, const std::string& loans,
                 const std::string& method_name) {
  const ExperimentConfig cfg = load_config(o);
  const Method method = parse_method(method_name);
  Dataset data = load_csv(loans);
  for (const std::string& d : data.diagnostics) std::cerr << d << '\n';
  if (data.records.empty()) throw DataError("no usable loans in " + loans);

  std::vector<ReturnDistribution> dists;
  if (method == Method::denn || method == Method::dsnn || method == Method::snn_only) {
    const auto stats = NormalizationStats::from_kv(KeyValueFile::read(fs::path(models) / "normalization.txt"));
    for (LoanRecord& r : data.records) r.features = stats.apply(r.features);
    if (method == Method::denn) {
      for (const auto& d : predict_denn(load_denn(fs::path(models) / "denn"), data.records)) dists.emplace_back(d);
    } else {
      const SurvivalModel sm = method == Method::dsnn ? load_dsnn(fs::path(models) / "dsnn").survival
                                                       : load_survival(fs::path(models) / "snn_only");
      for (const auto& d : predict_survival(sm, data.records)) dists.emplace_back(d);
    }
  }

  std::vector<std::size_t> members(data.records.size());
  for (std::size_t i = 0; i < members.size(); ++i) members[i] = i;
  PortfolioContext ctx{dists.empty() ? nullptr : &dists, members, 0};
  double objective = std::nan("");
  const std::vector<double> w = choose_weights(cfg, method, ctx, &objective);

  const fs::path out(o.out);
  fs::create_directories(out);
  std::ofstream file(out / "weights.csv");
  file << "id,weight\n";
  for (std::size_t i = 0; i < w.size(); ++i) file << data.records[i].id << ',' << format_double(w[i]) << '\n';
  if (!file) throw DataError("failed writing weights");
  std::cout << objective_name(cfg.objective) << " (monthly loss) " << format_double(objective) << '\n';
  return 0;
}

int run_experiment_cmd(const CommonOptions& o) {
  const ExperimentConfig cfg = load_config(o);
  const ExperimentReport report = run_experiment(cfg);
  write_report(o.out, report);
  print_table(report);
  return 0;
}

int run_report(const std::string& run_dir, const std::string& out) {
  const ExperimentReport report = report_from_run(run_dir);
  write_report(out, report);
  print_table(report);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Loan-portfolio VaR / CVaR minimization with neural return distributions"};
  app.require_subcommand(1);

  CommonOptions gen_opts, train_opts, opt_opts, exp_opts;
  std::string models, loans, method = "dsnn", run_dir, report_out;

  auto* gen = app.add_subcommand("generate", "write a synthetic loan CSV and its ground truth");
  add_common(gen, gen_opts, false);

  auto* train = app.add_subcommand("train", "fit and save the models named by --methods");
  add_common(train, train_opts, true);

  auto* optimize = app.add_subcommand("optimize", "weights for one portfolio of loans");
  add_common(optimize, opt_opts, true);
  optimize->add_option("--models", models, "directory written by 'train'");
  optimize->add_option("--loans", loans, "CSV of the portfolio's loans")->required()->check(CLI::ExistingFile);
  optimize->add_option("--method", method, "denn | dsnn | snn_only | equal | random");

  auto* experiment = app.add_subcommand("experiment", "full train / portfolio / evaluation pipeline");
  add_common(experiment, exp_opts, true);

  auto* report = app.add_subcommand("report", "rebuild tables and histograms from a run directory");
  report->add_option("--run", run_dir, "experiment output directory")->required()->check(CLI::ExistingDirectory);
  report->add_option("--out", report_out, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return run_generate(gen_opts);
    if (*train) return run_train(train_opts);
    if (*optimize) return run_optimize(opt_opts, models, loans, method);
    if (*experiment) return run_experiment_cmd(exp_opts);
    if (*report) return run_report(run_dir, report_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
