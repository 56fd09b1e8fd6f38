#pragma once

// Loan cash-flow arithmetic. All rates are monthly; annualization happens
// only when reporting.

namespace loanvar {

struct LoanTerms {
  double amount = 0.0;       // M
  double installment = 0.0;  // C, paid monthly
  int term = 0;              // L, number of scheduled installments
  double rate = 0.0;         // r_L, promised monthly return

  bool operator==(const LoanTerms&) const = default;
};

// Throws DomainError unless M > 0, C > 0, L >= 1, r_L > -1, all finite.
void validate_terms(const LoanTerms& terms);

// Present value of `payments` installments of C discounted at monthly rate r.
double annuity_value(double installment, int payments, double rate);

// Installment that amortizes `amount` over `term` months at `rate`.
double annuity_installment(double amount, int term, double rate);

// |M - PV(C, L, r_L)| / M.
double terms_consistency_error(const LoanTerms& terms);

// The monthly rate r > -1 at which `payments` installments repay the
// amount; exactly -1 when no payment was made.
double default_return(const LoanTerms& terms, int payments);

// Promised rate for a loan that ran to term, otherwise the rate implied by
// the installments actually paid.
double realized_return(const LoanTerms& terms, bool defaulted, int payments);

inline constexpr double annualized_loss(double monthly_return) noexcept {
  return -12.0 * monthly_return;
}

}  // namespace loanvar
