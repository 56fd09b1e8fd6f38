#include "loanvar/kv_file.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "loanvar/errors.hpp"
#include "loanvar/network_io.hpp"

namespace loanvar {

namespace {

std::string trimmed(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

}  // namespace

std::vector<std::string> split_list(const std::string& text, char sep) {
  std::vector<std::string> items;
  std::string item;
  std::istringstream ss(text);
  while (std::getline(ss, item, sep)) {
    item = trimmed(item);
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

KeyValueFile KeyValueFile::parse(const std::string& text) {
  KeyValueFile kv;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trimmed(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw DataError("line " + std::to_string(number) + ": expected 'key = value'");
    }
    const std::string key = trimmed(line.substr(0, eq));
    if (key.empty()) throw DataError("line " + std::to_string(number) + ": empty key");
    kv.entries_[key] = trimmed(line.substr(eq + 1));
  }
  return kv;
}

KeyValueFile KeyValueFile::read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

void KeyValueFile::set(const std::string& key, std::string value) { entries_[key] = std::move(value); }

void KeyValueFile::set(const std::string& key, double value) { entries_[key] = format_double(value); }

void KeyValueFile::set(const std::string& key, std::uint64_t value) {
  entries_[key] = std::to_string(value);
}

void KeyValueFile::set(const std::string& key, const std::vector<double>& values) {
  std::string joined;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) joined += ',';
    joined += format_double(values[i]);
  }
  entries_[key] = joined;
}

std::optional<std::string> KeyValueFile::find(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

const std::string& KeyValueFile::text(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw DataError("missing key '" + key + "'");
  return it->second;
}

double KeyValueFile::number(const std::string& key) const {
  try {
    return parse_double(text(key));
  } catch (const DataError& e) {
    throw DataError("key '" + key + "': " + e.what());
  }
}

std::uint64_t KeyValueFile::unsigned_integer(const std::string& key) const {
  const std::string& t = text(key);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size()) {
    throw DataError("key '" + key + "': not an unsigned integer: '" + t + "'");
  }
  return v;
}

std::vector<double> KeyValueFile::numbers(const std::string& key) const {
  std::vector<double> values;
  for (const auto& item : split_list(text(key))) values.push_back(parse_double(item));
  return values;
}

double KeyValueFile::number_or(const std::string& key, double fallback) const {
  return contains(key) ? number(key) : fallback;
}

std::uint64_t KeyValueFile::unsigned_or(const std::string& key, std::uint64_t fallback) const {
  return contains(key) ? unsigned_integer(key) : fallback;
}

std::string KeyValueFile::str() const {
  std::string out;
  for (const auto& [key, value] : entries_) out += key + " = " + value + "\n";
  return out;
}

void KeyValueFile::write(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << str();
  if (!out) throw DataError("failed writing " + path.string());
}

}  // namespace loanvar
