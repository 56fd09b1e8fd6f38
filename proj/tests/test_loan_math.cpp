#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "loanvar/errors.hpp"
#include "loanvar/loan_math.hpp"
#include "loanvar/rng.hpp"
#include "oracles.hpp"

using namespace loanvar;

namespace {

LoanTerms terms(double amount, double installment, int term, double rate = 0.01) {
  return LoanTerms{amount, installment, term, rate};
}

LoanTerms consistent_terms(double amount, int term, double rate) {
  return LoanTerms{amount, annuity_installment(amount, term, rate), term, rate};
}

}  // namespace

TEST(DefaultReturn, ZeroPaymentsIsExactlyMinusOne) {
  EXPECT_EQ(default_return(terms(1000, 50, 36), 0), -1.0);
  EXPECT_EQ(default_return(consistent_terms(25000, 60, 0.02), 0), -1.0);
}

TEST(DefaultReturn, UndiscountedRepaymentGivesZero) {
  EXPECT_NEAR(default_return(terms(1200, 100, 12), 12), 0.0, 1e-12);
}

TEST(DefaultReturn, PartialRepaymentMatchesBisectionOracle) {
  const LoanTerms t = terms(1000, 100, 36);
  const double r = default_return(t, 6);
  EXPECT_LT(r, 0.0);
  EXPECT_LT(std::abs(1000 - oracle::discounted_payments(100, 6, r)) / 1000, 1e-10);
  EXPECT_NEAR(r, oracle::irr_bisection(1000, 100, 6), 1e-9);
}

TEST(DefaultReturn, RejectsOutOfRangeLifetimes) {
  const LoanTerms t = terms(1000, 100, 12);
  EXPECT_THROW(default_return(t, 13), DomainError);
  EXPECT_THROW(default_return(t, -1), DomainError);
  EXPECT_NO_THROW(default_return(t, 12));
}

TEST(DefaultReturn, RejectsNonFiniteTerms) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(default_return(terms(nan, 100, 12), 3), DomainError);
  EXPECT_THROW(default_return(terms(1000, std::numeric_limits<double>::infinity(), 12), 3), DomainError);
  EXPECT_THROW(default_return(terms(1000, 100, 12, nan), 3), DomainError);
}

TEST(DefaultReturn, StrictlyIncreasingInPaymentsAndBelowPromisedRate) {
  const LoanTerms t = consistent_terms(12000, 36, 0.011);
  double previous = default_return(t, 1);
  for (int td = 2; td < t.term; ++td) {
    const double r = default_return(t, td);
    EXPECT_GT(r, previous) << "t_d = " << td;
    EXPECT_LE(r, t.rate);
    previous = r;
  }
  EXPECT_NEAR(default_return(t, t.term), t.rate, 1e-10);
}

TEST(DefaultReturn, RoundTripResidualOnRandomTerms) {
  rng::SplitMix64 gen(17);
  for (int i = 0; i < 500; ++i) {
    const int term = 1 + static_cast<int>(gen.below(72));
    const LoanTerms t = consistent_terms(gen.uniform(500, 40000), term, gen.uniform(0.0, 0.04));
    const int td = static_cast<int>(gen.below(static_cast<std::uint64_t>(term) + 1));
    const double r = default_return(t, td);
    if (td == 0) {
      EXPECT_EQ(r, -1.0);
      continue;
    }
    const double pv = oracle::discounted_payments(t.installment, td, r);
    EXPECT_LT(std::abs(pv - t.amount) / t.amount, 1e-10) << "term " << term << " td " << td;
  }
}

TEST(RealizedReturn, FollowsDefaultFlag) {
  const LoanTerms t = consistent_terms(5000, 36, 0.009);
  EXPECT_EQ(realized_return(t, false, 36), t.rate);
  EXPECT_EQ(realized_return(t, true, 0), -1.0);
  EXPECT_EQ(realized_return(t, true, 10), default_return(t, 10));
}

TEST(RealizedReturn, ZeroRateAnnuity) {
  EXPECT_NEAR(realized_return(terms(1000, 100, 36), true, 10), 0.0, 1e-12);
}

TEST(RealizedReturn, DefaultAtOrAfterTermIsInconsistent) {
  const LoanTerms t = consistent_terms(5000, 36, 0.009);
  EXPECT_THROW(realized_return(t, true, 36), InconsistencyError);
  EXPECT_THROW(realized_return(t, true, 40), InconsistencyError);
}

TEST(AnnualizedLoss, ScalesMonthlyReturn) {
  EXPECT_EQ(annualized_loss(0.0), 0.0);
  EXPECT_DOUBLE_EQ(annualized_loss(0.01), -0.12);
  EXPECT_NEAR(annualized_loss(-0.0313), 0.3756, 1e-12);
  // A rounded monthly figure of -0.0313 reads back as roughly 0.3753 a year.
  EXPECT_NEAR(annualized_loss(-0.0313), 0.3753, 1e-3);
}

TEST(LoanTerms, AnnuityInstallmentIsSelfConsistent) {
  const LoanTerms t = consistent_terms(20000, 36, 0.012);
  EXPECT_LT(terms_consistency_error(t), 1e-12);
  EXPECT_NEAR(annuity_value(t.installment, 36, 0.012), 20000, 1e-8);
  EXPECT_THROW(validate_terms(terms(-1, 10, 12)), DomainError);
  EXPECT_THROW(validate_terms(terms(100, 10, 0)), DomainError);
}
