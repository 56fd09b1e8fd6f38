#pragma once

namespace loanvar {

// Selects between a kernel's serial reference and its OpenMP version.
enum class Execution { serial, parallel };

}  // namespace loanvar
