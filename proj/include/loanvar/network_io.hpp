#pragma once

// Text parameter files:
//
//   loanvar-network 1
//   layers 16 128 64 32 1
//   activations tanh tanh tanh sigmoid
//   l2 0.0001
//   seed 7
//   parameters 12417
//   <one value per line, row-major weights then bias, layer by layer>
//
// Values are written in shortest round-trip form, so load(save(net)) is
// bit-identical to net.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

#include "loanvar/network.hpp"

namespace loanvar {

// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);
// Strict parse; throws DataError on trailing garbage.
double parse_double(std::string_view text);

namespace nn {

void save_network(std::ostream& out, const Network& net);
Network load_network(std::istream& in);

void save_network(const std::filesystem::path& path, const Network& net);
Network load_network(const std::filesystem::path& path);

}  // namespace nn
}  // namespace loanvar
