#include "loanvar/losses.hpp"

#include <algorithm>
#include <cmath>
#include <type_traits>

#include "loanvar/errors.hpp"

namespace loanvar::nn {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

struct Term {
  double value;
  double slope;
};

Term bce_term(double p, double event, double weight) {
  const double pc = std::clamp(p, kProbabilityFloor, 1.0 - kProbabilityFloor);
  const double omega = event == 1.0 ? weight : 1.0;
  const double value = -omega * (event * std::log(pc) + (1.0 - event) * std::log(1.0 - pc));
  const bool inside = p > kProbabilityFloor && p < 1.0 - kProbabilityFloor;
  const double slope = inside ? -omega * (event / pc - (1.0 - event) / (1.0 - pc)) : 0.0;
  return {value, slope};
}

Term nll_term(double g, double lifetime, double event, const WeibullParams& weibull) {
  const double cum = cumulative_hazard(lifetime, weibull, g);
  double value = cum;
  if (event == 1.0) {
    value -= log_hazard(std::max(lifetime, kHazardTimeFloor), weibull, g);
  }
  const double active = g < kMaxExponent ? 1.0 : 0.0;
  return {value, active * (cum - event)};
}

void check_event(double e) {
  if (e != 0.0 && e != 1.0) throw DomainError("event labels must be 0 or 1");
}

}  // namespace

std::size_t network_count(const LossKind& loss) {
  return std::holds_alternative<DsnnCombined>(loss) ? 2 : 1;
}

void validate(const LossKind& loss) {
  std::visit(Overloaded{
                 [](const WeightedBce&) {},
                 [](const Mse&) {},
                 [](const SurvivalNll& l) { validate(l.weibull); },
                 [](const DsnnCombined& l) {
                   validate(l.weibull);
                   if (l.term < 2) throw SpecError("combined loss needs a term of at least 2");
                   if (!(l.w_snn >= 0.0 && l.w_dnn >= 0.0 && l.w_dif >= 0.0)) {
                     throw SpecError("loss weights must be non-negative");
                   }
                 },
             },
             loss);
}

SampleLoss sample_loss(const LossKind& loss, std::span<const double> outputs,
                       const SampleLabel& label, double class_weight_positive) {
  SampleLoss out;
  std::visit(Overloaded{
                 [&](const WeightedBce&) {
                   const Term t = bce_term(outputs[0], label.event, class_weight_positive);
                   out.value = t.value;
                   out.output_grad[0] = t.slope;
                 },
                 [&](const Mse&) {
                   const double diff = outputs[0] - label.target;
                   out.value = diff * diff;
                   out.output_grad[0] = 2.0 * diff;
                 },
                 [&](const SurvivalNll& l) {
                   const Term t = nll_term(outputs[0], label.lifetime, label.event, l.weibull);
                   out.value = t.value;
                   out.output_grad[0] = t.slope;
                 },
                 [&](const DsnnCombined& l) {
                   const double g = outputs[0];
                   const double p = outputs[1];
                   const Term nll = nll_term(g, label.lifetime, label.event, l.weibull);
                   const Term bce = bce_term(p, label.event, class_weight_positive);
                   // N1: implied default rate and its slope in g.
                   const double horizon = static_cast<double>(l.term - 1);
                   const double cum = cumulative_hazard(horizon, l.weibull, g);
                   const double surv = std::exp(-cum);
                   const double rate = 1.0 - surv;
                   const double rate_slope = g < kMaxExponent ? surv * cum : 0.0;
                   // N2: squared gap.
                   const double gap = p - rate;
                   out.parts = {nll.value, bce.value, gap * gap};
                   out.value = l.w_snn * nll.value + l.w_dnn * bce.value + l.w_dif * gap * gap;
                   out.output_grad[0] = l.w_snn * nll.slope - l.w_dif * 2.0 * gap * rate_slope;
                   out.output_grad[1] = l.w_dnn * bce.slope + l.w_dif * 2.0 * gap;
                 },
             },
             loss);
  if (!std::holds_alternative<DsnnCombined>(loss)) out.parts = {out.value, 0.0, 0.0};
  return out;
}

double loss_weighted_bce(std::span<const double> predictions, std::span<const double> labels,
                         double class_weight_positive) {
  if (predictions.size() != labels.size()) throw DomainError("predictions and labels differ in length");
  if (predictions.empty()) throw DomainError("empty batch");
  double sum = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    check_event(labels[i]);
    sum += bce_term(predictions[i], labels[i], class_weight_positive).value;
  }
  return sum / static_cast<double>(predictions.size());
}

double loss_mse(std::span<const double> predictions, std::span<const double> targets) {
  if (predictions.size() != targets.size()) throw DomainError("predictions and targets differ in length");
  if (predictions.empty()) throw DomainError("empty batch");
  double sum = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double d = predictions[i] - targets[i];
    sum += d * d;
  }
  return sum / static_cast<double>(predictions.size());
}

double loss_survival_nll(std::span<const double> outputs, std::span<const double> lifetimes,
                         std::span<const double> events, const WeibullParams& weibull) {
  validate(weibull);
  if (outputs.size() != lifetimes.size() || outputs.size() != events.size()) {
    throw DomainError("survival loss inputs differ in length");
  }
  if (outputs.empty()) throw DomainError("empty batch");
  double sum = 0.0;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    check_event(events[i]);
    if (!(lifetimes[i] >= 0.0)) throw DomainError("lifetimes must be >= 0");
    sum += nll_term(outputs[i], lifetimes[i], events[i], weibull).value;
  }
  return sum / static_cast<double>(outputs.size());
}

double loss_dif(std::span<const double> expert, std::span<const double> survival_rate) {
  if (expert.size() != survival_rate.size()) throw DomainError("gap loss inputs differ in length");
  if (expert.empty()) throw DomainError("empty batch");
  double sum = 0.0;
  for (std::size_t i = 0; i < expert.size(); ++i) {
    const double d = expert[i] - survival_rate[i];
    sum += d * d;
  }
  return sum / static_cast<double>(expert.size());
}

}  // namespace loanvar::nn
