#include "loanvar/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "loanvar/errors.hpp"
#include "loanvar/network_io.hpp"
#include "loanvar/rng.hpp"

namespace loanvar {

namespace {

constexpr double kConsistencyTolerance = 1e-6;

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    const auto first = cell.find_first_not_of(" \t\r");
    const auto last = cell.find_last_not_of(" \t\r");
    cells.push_back(first == std::string::npos ? std::string{} : cell.substr(first, last - first + 1));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

long parse_integer(const std::string& text, const std::string& what, std::size_t row) {
  long v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw DataError("row " + std::to_string(row) + ": " + what + " is not an integer: '" + text + "'");
  }
  return v;
}

double parse_cell(const std::string& text, const std::string& what, std::size_t row) {
  try {
    return parse_double(text);
  } catch (const DataError&) {
    throw DataError("row " + std::to_string(row) + ": " + what + " is not numeric: '" + text + "'");
  }
}

}  // namespace

void validate(const LoanRecord& record) {
  validate_terms(record.terms);
  if (record.defaulted) {
    if (record.lifetime < 0 || record.lifetime >= record.terms.term) {
      throw InconsistencyError("defaulted loan '" + record.id + "' has lifetime " +
                               std::to_string(record.lifetime) + " outside [0, " +
                               std::to_string(record.terms.term - 1) + "]");
    }
  } else if (record.lifetime != record.terms.term) {
    throw InconsistencyError("non-defaulted loan '" + record.id + "' has lifetime " +
                             std::to_string(record.lifetime) + " instead of its term " +
                             std::to_string(record.terms.term));
  }
}

double realized_return(const LoanRecord& record) {
  return realized_return(record.terms, record.defaulted, record.lifetime);
}

std::vector<double> NormalizationStats::apply(std::span<const double> raw) const {
  if (raw.size() != mean.size()) throw DomainError("feature width does not match normalization");
  std::vector<double> out(raw.size());
  for (std::size_t j = 0; j < raw.size(); ++j) {
    out[j] = stddev[j] > 0.0 ? (raw[j] - mean[j]) / stddev[j] : 0.0;
  }
  return out;
}

KeyValueFile NormalizationStats::to_kv() const {
  KeyValueFile kv;
  kv.set("mean", mean);
  kv.set("stddev", stddev);
  return kv;
}

NormalizationStats NormalizationStats::from_kv(const KeyValueFile& kv) {
  NormalizationStats stats{kv.numbers("mean"), kv.numbers("stddev")};
  if (stats.mean.size() != stats.stddev.size()) throw DataError("normalization vectors differ in length");
  return stats;
}

std::vector<std::size_t> Dataset::indices(Split which) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < split.size(); ++i) {
    if (split[i] == which) out.push_back(i);
  }
  return out;
}

Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": missing header row");
  const auto header = split_row(line);

  std::unordered_map<std::string, std::size_t> column;
  for (std::size_t c = 0; c < header.size(); ++c) column[header[c]] = c;
  const auto require = [&](const std::string& name) {
    const auto it = column.find(name);
    if (it == column.end()) throw DataError(path.string() + ": missing column '" + name + "'");
    return it->second;
  };

  std::size_t width = 0;
  while (column.contains("f_" + std::to_string(width))) ++width;
  if (schema.feature_count != 0 && width != schema.feature_count) {
    throw DataError(path.string() + ": header declares " + std::to_string(width) +
                    " feature columns, schema expects " + std::to_string(schema.feature_count));
  }
  if (width == 0) throw DataError(path.string() + ": missing feature columns f_0 ..");
  std::vector<std::size_t> feature_col(width);
  for (std::size_t j = 0; j < width; ++j) feature_col[j] = column["f_" + std::to_string(j)];
  const std::size_t id_col = require("id");
  const std::size_t amount_col = require("amount");
  const std::size_t installment_col = require("installment");
  const std::size_t term_col = require("term");
  const std::size_t rate_col = require("rate");
  const std::size_t lifetime_col = require("lifetime");
  const std::size_t default_col = require("default");
  const auto grade_it = column.find("grade");

  Dataset dataset;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_row(line);
    if (cells.size() != header.size()) {
      throw DataError("row " + std::to_string(row) + ": expected " + std::to_string(header.size()) +
                      " cells, found " + std::to_string(cells.size()));
    }
    LoanRecord rec;
    rec.id = cells[id_col];
    rec.features.resize(width);
    for (std::size_t j = 0; j < width; ++j) {
      rec.features[j] = parse_cell(cells[feature_col[j]], header[feature_col[j]], row);
      if (!std::isfinite(rec.features[j])) {
        throw DataError("row " + std::to_string(row) + ": non-finite feature " + header[feature_col[j]]);
      }
    }
    rec.terms.amount = parse_cell(cells[amount_col], "amount", row);
    rec.terms.installment = parse_cell(cells[installment_col], "installment", row);
    rec.terms.term = static_cast<int>(parse_integer(cells[term_col], "term", row));
    rec.terms.rate = parse_cell(cells[rate_col], "rate", row);
    rec.lifetime = static_cast<int>(parse_integer(cells[lifetime_col], "lifetime", row));
    const long flag = parse_integer(cells[default_col], "default", row);
    if (flag != 0 && flag != 1) {
      throw DataError("row " + std::to_string(row) + ": default must be 0 or 1");
    }
    rec.defaulted = flag == 1;
    if (grade_it != column.end()) rec.grade = cells[grade_it->second];

    try {
      validate(rec);
    } catch (const std::invalid_argument& e) {
      dataset.diagnostics.push_back("row " + std::to_string(row) + " rejected: " + e.what());
      continue;
    }
    if (const double err = terms_consistency_error(rec.terms); err > kConsistencyTolerance) {
      dataset.diagnostics.push_back("row " + std::to_string(row) +
                                    " warning: installment schedule repays amount only to relative error " +
                                    format_double(err));
    }
    dataset.records.push_back(std::move(rec));
  }
  return dataset;
}

void write_csv(const std::filesystem::path& path, std::span<const LoanRecord> records) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  const std::size_t width = records.empty() ? 0 : records.front().features.size();
  const bool graded = std::any_of(records.begin(), records.end(),
                                  [](const LoanRecord& r) { return !r.grade.empty(); });
  out << "id";
  for (std::size_t j = 0; j < width; ++j) out << ",f_" << j;
  out << ",amount,installment,term,rate,lifetime,default";
  if (graded) out << ",grade";
  out << '\n';
  for (const LoanRecord& r : records) {
    if (r.features.size() != width) throw DataError("records differ in feature width");
    out << r.id;
    for (double f : r.features) out << ',' << format_double(f);
    out << ',' << format_double(r.terms.amount) << ',' << format_double(r.terms.installment) << ','
        << r.terms.term << ',' << format_double(r.terms.rate) << ',' << r.lifetime << ','
        << (r.defaulted ? 1 : 0);
    if (graded) out << ',' << r.grade;
    out << '\n';
  }
  if (!out) throw DataError("failed writing " + path.string());
}

Dataset preprocess(Dataset dataset, const SplitRatios& ratios, std::uint64_t seed) {
  const std::size_t n = dataset.records.size();
  if (n == 0) throw DataError("cannot preprocess an empty dataset");
  if (!(ratios.train > 0.0 && ratios.validation > 0.0 && ratios.test > 0.0) ||
      std::abs(ratios.train + ratios.validation + ratios.test - 1.0) > 1e-9) {
    throw SpecError("split ratios must be positive and sum to one");
  }
  const auto count = [n](double r) {
    return std::min<std::size_t>(n, static_cast<std::size_t>(std::llround(r * static_cast<double>(n))));
  };
  const std::size_t n_train = count(ratios.train);
  const std::size_t n_val = std::min(n - n_train, count(ratios.validation));

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng::SplitMix64 gen(rng::derive_seed(seed, "dataset-split"));
  rng::shuffle(order, gen);
  dataset.split.assign(n, Split::test);
  for (std::size_t k = 0; k < n_train; ++k) dataset.split[order[k]] = Split::train;
  for (std::size_t k = n_train; k < n_train + n_val; ++k) dataset.split[order[k]] = Split::validation;

  const std::size_t d = dataset.feature_width();
  NormalizationStats stats{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
  const auto train_rows = dataset.indices(Split::train);
  if (!train_rows.empty()) {
    const double m = static_cast<double>(train_rows.size());
    for (std::size_t i : train_rows) {
      for (std::size_t j = 0; j < d; ++j) stats.mean[j] += dataset.records[i].features[j];
    }
    for (double& v : stats.mean) v /= m;
    for (std::size_t i : train_rows) {
      for (std::size_t j = 0; j < d; ++j) {
        const double dev = dataset.records[i].features[j] - stats.mean[j];
        stats.stddev[j] += dev * dev;
      }
    }
    for (std::size_t j = 0; j < d; ++j) {
      double& v = stats.stddev[j];
      v = std::sqrt(v / m);
      // Rounding in the mean leaves a constant column with a tiny spread.
      if (!(v > 1e-12 * std::max(1.0, std::abs(stats.mean[j])))) v = 0.0;
    }
  }
  for (LoanRecord& rec : dataset.records) rec.features = stats.apply(rec.features);
  dataset.normalization = std::move(stats);
  return dataset;
}

nn::FeatureMatrix feature_matrix(std::span<const LoanRecord> records) {
  const std::size_t d = records.empty() ? 0 : records.front().features.size();
  nn::FeatureMatrix m(records.size(), d);
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].features.size() != d) throw DataError("records differ in feature width");
    std::copy(records[i].features.begin(), records[i].features.end(), m.row(i).begin());
  }
  return m;
}

nn::TrainingSet make_training_set(const Dataset& dataset, std::span<const std::size_t> rows) {
  nn::TrainingSet set;
  const std::size_t d = dataset.feature_width();
  set.features = nn::FeatureMatrix(rows.size(), d);
  set.labels.resize(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const LoanRecord& rec = dataset.records.at(rows[k]);
    std::copy(rec.features.begin(), rec.features.end(), set.features.row(k).begin());
    set.labels[k].event = rec.defaulted ? 1.0 : 0.0;
    set.labels[k].lifetime = static_cast<double>(rec.lifetime);
    set.labels[k].target = static_cast<double>(rec.lifetime) / static_cast<double>(rec.terms.term);
  }
  return set;
}

}  // namespace loanvar
