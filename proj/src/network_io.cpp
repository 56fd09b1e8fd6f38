#include "loanvar/network_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>
#include <vector>

#include "loanvar/errors.hpp"

namespace loanvar {

namespace {

constexpr std::string_view kMagic = "loanvar-network";
constexpr int kVersion = 1;

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

// Reads "key v1 v2 ..." and returns the values part.
std::vector<std::string> expect_line(std::istream& in, std::string_view key) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("network file truncated before '" + std::string(key) + "'");
  std::istringstream ss(line);
  std::string word;
  ss >> word;
  if (word != key) throw DataError("expected '" + std::string(key) + "', found '" + word + "'");
  std::vector<std::string> values;
  while (ss >> word) values.push_back(word);
  return values;
}

std::uint64_t parse_u64(std::string_view text) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw DataError("not an unsigned integer: '" + std::string(text) + "'");
  }
  return v;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc()) throw DataError("cannot format value");
  return std::string(buf, ptr);
}

double parse_double(std::string_view text) {
  const std::string t = trim(text);
  double v = 0.0;
  const char* begin = t.data();
  const char* end = t.data() + t.size();
  if (!t.empty() && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end || t.empty()) {
    throw DataError("not a number: '" + std::string(text) + "'");
  }
  return v;
}

namespace nn {

void save_network(std::ostream& out, const Network& net) {
  const NetworkSpec& spec = net.spec();
  out << kMagic << ' ' << kVersion << '\n';
  out << "layers";
  for (std::size_t w : spec.layer_sizes) out << ' ' << w;
  out << "\nactivations";
  for (Activation a : spec.activations) out << ' ' << to_string(a);
  out << "\nl2 " << format_double(spec.l2_coefficient) << '\n';
  out << "seed " << spec.seed << '\n';
  out << "parameters " << net.parameters().size() << '\n';
  for (double p : net.parameters()) out << format_double(p) << '\n';
  if (!out) throw DataError("failed writing network");
}

Network load_network(std::istream& in) {
  const auto header = expect_line(in, kMagic);
  if (header.size() != 1 || parse_u64(header[0]) != kVersion) {
    throw DataError("unsupported network file version");
  }
  NetworkSpec spec;
  for (const auto& w : expect_line(in, "layers")) spec.layer_sizes.push_back(parse_u64(w));
  for (const auto& a : expect_line(in, "activations")) spec.activations.push_back(parse_activation(a));
  const auto l2 = expect_line(in, "l2");
  const auto seed = expect_line(in, "seed");
  const auto count = expect_line(in, "parameters");
  if (l2.size() != 1 || seed.size() != 1 || count.size() != 1) throw DataError("malformed network header");
  spec.l2_coefficient = parse_double(l2[0]);
  spec.seed = parse_u64(seed[0]);

  Network net(std::move(spec));
  auto params = net.parameters();
  if (parse_u64(count[0]) != params.size()) throw DataError("parameter count does not match layer sizes");
  std::string line;
  for (double& p : params) {
    if (!std::getline(in, line)) throw DataError("network file truncated in parameters");
    p = parse_double(line);
  }
  return net;
}

void save_network(const std::filesystem::path& path, const Network& net) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  save_network(out, net);
}

Network load_network(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return load_network(in);
}

}  // namespace nn
}  // namespace loanvar
