#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "loanvar/errors.hpp"
#include "loanvar/harness.hpp"
#include "loanvar/loan_math.hpp"
#include "loanvar/network_io.hpp"
#include "loanvar/rng.hpp"

namespace loanvar {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw DataError("failed writing " + path.string());
}

std::string percent_label(double confidence) {
  return std::to_string(std::lround(confidence * 100.0)) + "%";
}

std::size_t bin_count(const HistogramSettings& s) {
  return static_cast<std::size_t>(std::llround((s.high - s.low) / s.bin_width));
}

}  // namespace

std::vector<double> annualized_var_row(std::span<const double> realized,
                                       std::span<const double> confidences) {
  std::vector<double> row;
  row.reserve(confidences.size());
  // VaR is already a loss, so it annualizes as annualized_loss of the
  // percentile return.
  for (double c : confidences) row.push_back(annualized_loss(-value_at_risk(realized, c)));
  return row;
}

Histogram make_histogram(std::span<const double> sample, const HistogramSettings& settings) {
  if (!(settings.bin_width > 0.0)) throw SpecError("histogram bin width must be positive");
  if (!(settings.high > settings.low)) throw SpecError("histogram range is empty");
  if (sample.empty()) throw DomainError("histogram of an empty sample");
  Histogram h;
  h.settings = settings;
  h.counts.assign(std::max<std::size_t>(bin_count(settings), 1), 0);
  for (double x : sample) {
    if (x < settings.low) {
      ++h.underflow;
    } else if (x >= settings.high) {
      ++h.overflow;
    } else {
      const auto bin = static_cast<std::size_t>((x - settings.low) / settings.bin_width);
      ++h.counts[std::min(bin, h.counts.size() - 1)];
    }
  }
  return h;
}

void emit_histogram(const std::filesystem::path& path, std::span<const double> sample,
                    const HistogramSettings& settings) {
  const Histogram h = make_histogram(sample, settings);
  std::ofstream out = open_out(path);
  out << "bin_low,bin_high,count\n";
  out << "-inf," << format_double(settings.low) << ',' << h.underflow << '\n';
  for (std::size_t b = 0; b < h.counts.size(); ++b) {
    const double lo = settings.low + static_cast<double>(b) * settings.bin_width;
    const double hi = b + 1 == h.counts.size() ? settings.high : lo + settings.bin_width;
    out << format_double(lo) << ',' << format_double(hi) << ',' << h.counts[b] << '\n';
  }
  out << format_double(settings.high) << ",inf," << h.overflow << '\n';
  finish(out, path);
}

void write_report(const std::filesystem::path& dir, const ExperimentReport& report) {
  std::filesystem::create_directories(dir);
  const ExperimentConfig& cfg = report.config;

  {
    const auto path = dir / "var_table.tsv";
    std::ofstream out = open_out(path);
    out << "method";
    for (double c : cfg.confidences) out << '\t' << percent_label(c);
    out << '\n';
    for (const MethodResult& r : report.methods) {
      out << to_string(r.method);
      for (double v : r.var_row) out << '\t' << format_double(v);
      out << '\n';
    }
    finish(out, path);
  }

  {
    const auto path = dir / "realized_returns.csv";
    std::ofstream out = open_out(path);
    out << "portfolio";
    for (const MethodResult& r : report.methods) out << ',' << to_string(r.method);
    out << '\n';
    for (std::size_t p = 0; p < cfg.portfolio_count; ++p) {
      out << p;
      for (const MethodResult& r : report.methods) out << ',' << format_double(r.realized.at(p));
      out << '\n';
    }
    finish(out, path);
  }

  for (const MethodResult& r : report.methods) {
    emit_histogram(dir / ("histogram_" + to_string(r.method) + ".csv"), r.realized, cfg.histogram);
  }

  to_kv(cfg).write(dir / "config.txt");

  nlohmann::ordered_json meta;
  meta["master_seed"] = cfg.seed;
  meta["derived_seeds"] = {
      {"split", rng::derive_seed(cfg.seed, "split")},
      {"models", rng::derive_seed(cfg.seed, "models")},
      {"portfolios", rng::derive_seed(cfg.seed, "portfolios")},
  };
  nlohmann::ordered_json config;
  const KeyValueFile echo = to_kv(cfg);
  for (const auto& [k, v] : echo.entries()) config[k] = v;
  meta["config"] = config;
  nlohmann::ordered_json metrics;
  for (const auto& [k, v] : report.metrics) metrics[k] = v;
  meta["metrics"] = metrics;
  nlohmann::ordered_json methods = nlohmann::ordered_json::object();
  for (const MethodResult& r : report.methods) {
    nlohmann::ordered_json m;
    double sum = 0.0;
    std::size_t finite = 0;
    for (double v : r.predicted) {
      if (std::isfinite(v)) {
        sum += v;
        ++finite;
      }
    }
    if (finite) m["mean_optimized_objective"] = sum / static_cast<double>(finite);
    m["var_row"] = r.var_row;
    methods[to_string(r.method)] = m;
  }
  meta["methods"] = methods;
  {
    const auto path = dir / "run_metadata.json";
    std::ofstream out = open_out(path);
    out << meta.dump(2) << '\n';
    finish(out, path);
  }

  nlohmann::ordered_json timing;
  for (const auto& [k, v] : report.timings) timing[k] = v;
  const auto path = dir / "timings.json";
  std::ofstream out = open_out(path);
  out << timing.dump(2) << '\n';
  finish(out, path);
}

ExperimentReport report_from_run(const std::filesystem::path& dir) {
  ExperimentReport report;
  report.config = experiment_config_from_kv(KeyValueFile::read(dir / "config.txt"));

  std::ifstream in(dir / "realized_returns.csv");
  if (!in) throw DataError("cannot open " + (dir / "realized_returns.csv").string());
  std::string line;
  if (!std::getline(in, line)) throw DataError("realized_returns.csv is empty");
  const auto header = split_list(line);
  if (header.empty() || header.front() != "portfolio") {
    throw DataError("realized_returns.csv: unexpected header");
  }
  for (std::size_t c = 1; c < header.size(); ++c) {
    MethodResult r;
    r.method = parse_method(header[c]);
    report.methods.push_back(std::move(r));
  }
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto cells = split_list(line);
    if (cells.size() != header.size()) {
      throw DataError("realized_returns.csv line " + std::to_string(row) + ": wrong column count");
    }
    for (std::size_t c = 1; c < cells.size(); ++c) {
      report.methods[c - 1].realized.push_back(parse_double(cells[c]));
    }
  }
  const std::size_t count = report.methods.empty() ? 0 : report.methods.front().realized.size();
  if (count == 0) throw DataError("realized_returns.csv has no portfolios");
  report.config.portfolio_count = count;
  report.config.methods.clear();
  for (MethodResult& r : report.methods) {
    report.config.methods.push_back(r.method);
    r.predicted.assign(count, std::nan(""));
    r.var_row = annualized_var_row(r.realized, report.config.confidences);
  }

  if (std::ifstream meta_in(dir / "run_metadata.json"); meta_in) {
    const auto meta = nlohmann::json::parse(meta_in, nullptr, false);
    if (!meta.is_discarded() && meta.contains("metrics")) {
      for (const auto& [k, v] : meta["metrics"].items()) {
        if (v.is_number()) report.metrics[k] = v.get<double>();
      }
    }
  }
  return report;
}

}  // namespace loanvar
