#pragma once

// Flat "key = value" text files with '#' comments. Used for experiment
// configs, model manifests and the synthetic ground-truth sidecar.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace loanvar {

class KeyValueFile {
 public:
  static KeyValueFile parse(const std::string& text);
  static KeyValueFile read(const std::filesystem::path& path);

  void set(const std::string& key, std::string value);
  void set(const std::string& key, double value);
  void set(const std::string& key, std::uint64_t value);
  void set(const std::string& key, const std::vector<double>& values);

  bool contains(const std::string& key) const { return entries_.contains(key); }
  std::optional<std::string> find(const std::string& key) const;

  // Throw DataError when the key is missing or malformed.
  const std::string& text(const std::string& key) const;
  double number(const std::string& key) const;
  std::uint64_t unsigned_integer(const std::string& key) const;
  std::vector<double> numbers(const std::string& key) const;

  double number_or(const std::string& key, double fallback) const;
  std::uint64_t unsigned_or(const std::string& key, std::uint64_t fallback) const;

  const std::map<std::string, std::string>& entries() const { return entries_; }

  // Sorted by key, one entry per line.
  std::string str() const;
  void write(const std::filesystem::path& path) const;

 private:
  std::map<std::string, std::string> entries_;
};

std::vector<std::string> split_list(const std::string& text, char sep = ',');

}  // namespace loanvar
