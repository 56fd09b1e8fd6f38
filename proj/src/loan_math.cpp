#include "loanvar/loan_math.hpp"

#include <cmath>
#include <string>

#include "loanvar/errors.hpp"

namespace loanvar {

namespace {

constexpr double kLowerRate = -1.0 + 1e-12;

}  // namespace

void validate_terms(const LoanTerms& terms) {
  if (!std::isfinite(terms.amount) || !std::isfinite(terms.installment) ||
      !std::isfinite(terms.rate)) {
    throw DomainError("loan terms must be finite");
  }
  if (terms.amount <= 0.0) throw DomainError("loan amount must be positive");
  if (terms.installment <= 0.0) throw DomainError("installment must be positive");
  if (terms.term < 1) throw DomainError("loan term must be at least one month");
  if (terms.rate <= -1.0) throw DomainError("promised rate must exceed -1");
}

double annuity_value(double installment, int payments, double rate) {
  // Horner form of sum_{t=1..n} v^t with v = 1/(1+r).
  const double v = 1.0 / (1.0 + rate);
  double acc = 0.0;
  for (int t = 0; t < payments; ++t) acc = (acc + 1.0) * v;
  return installment * acc;
}

double annuity_installment(double amount, int term, double rate) {
  if (term < 1) throw DomainError("annuity term must be at least one month");
  return amount / annuity_value(1.0, term, rate);
}

double terms_consistency_error(const LoanTerms& terms) {
  return std::abs(terms.amount - annuity_value(terms.installment, terms.term, terms.rate)) /
         terms.amount;
}

double default_return(const LoanTerms& terms, int payments) {
  validate_terms(terms);
  if (payments < 0 || payments > terms.term) {
    throw DomainError("payments made must lie in [0, term], got " + std::to_string(payments));
  }
  if (payments == 0) return -1.0;

  // Present value minus amount is strictly decreasing in r.
  const auto excess = [&](double r) {
    return annuity_value(terms.installment, payments, r) - terms.amount;
  };

  double lo = kLowerRate;
  double hi = 1.0;
  while (excess(hi) > 0.0) {
    lo = hi;
    hi *= 2.0;
    if (!std::isfinite(hi)) throw DomainError("no finite rate repays the loan");
  }
  // Bisection runs past the 1e-12 bracket width down to adjacent doubles, so
  // the residual is limited only by rounding.
  for (int iter = 0; iter < 2000; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (excess(mid) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return std::abs(excess(lo)) <= std::abs(excess(hi)) ? lo : hi;
}

double realized_return(const LoanTerms& terms, bool defaulted, int payments) {
  if (!defaulted) {
    validate_terms(terms);
    return terms.rate;
  }
  if (payments >= terms.term) {
    throw InconsistencyError("a defaulted loan must have fewer payments than its term");
  }
  return default_return(terms, payments);
}

}  // namespace loanvar
