#pragma once

// Trapping and jump intervals of an order-parameter trajectory.
//
// Each sample is classified +1 (Theta > sigma_N), -1 (Theta < -sigma_N) or 0.
// A run of n equal classes starting at sample i has start t_i and length
// n * dt. Runs touching either end of the series are censored: they are
// kept apart from the complete intervals since their length is a lower bound.
//
// Trapping: maximal stretch of one sign, where 0-runs of length <= tau_c
// flanked by that same sign are absorbed. Kept if its bridged length exceeds
// 10 tau_c.
// Jump: 0-run flanked by opposite signs; its sign is the sign after the jump.

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "selforg/params.hpp"

namespace selforg {

enum class IntervalKind { Trap, Jump };
const char* to_string(IntervalKind k);

struct Interval {
  IntervalKind kind = IntervalKind::Trap;
  double start = 0.0;   // [1/kappa]
  double length = 0.0;  // [1/kappa]
  int sign = 0;         // trap: grating sign; jump: sign after the jump
};

struct DetectionThresholds {
  double sigma = 0.0;          // noise floor on |Theta|
  double tau_c = 0.0;          // bridging limit [1/kappa]
  double min_length_factor = 10.0;
};
DetectionThresholds thresholds_for(const PhysicalParams& p);

struct IntervalStatistics {
  std::vector<Interval> intervals;  // time-ordered
  int censored = 0;                 // boundary intervals
  // Boundary traps whose observed length already exceeds the cutoff.
  std::vector<Interval> censored_intervals;
  std::vector<std::string> warnings;
};

// Throw std::invalid_argument on mismatched sizes, a non-uniform grid or a
// series shorter than min_length_factor * tau_c.
IntervalStatistics detect_trapping(const std::vector<double>& time, const std::vector<double>& theta,
                                   const DetectionThresholds& th);
IntervalStatistics detect_jumps(const std::vector<double>& time, const std::vector<double>& theta,
                                const DetectionThresholds& th);

std::vector<double> lengths_of(const std::vector<Interval>& intervals);

// Survival F(tau) = P(length >= tau), evaluated at each distinct length in
// ascending order. Empty input gives an empty curve.
std::vector<std::pair<double, double>> cumulative_distribution(const std::vector<double>& lengths);
double survival_at(const std::vector<double>& lengths, double tau);
// Kaplan-Meier survival from complete lengths and right-censored lower bounds.
// Steps at each distinct complete length; ends at the largest observation.
struct SurvivalCurve {
  std::vector<std::pair<double, double>> steps;  // (tau, F just after tau)
  double horizon = 0.0;                          // largest observed length
};
SurvivalCurve kaplan_meier(const std::vector<double>& complete, const std::vector<double>& censored);
// Smallest tau with 1 - F(tau) >= q, or +infinity if F stays above 1 - q up to
// the horizon (the quantile then exceeds the horizon).
double survival_quantile(const SurvivalCurve& s, double q);
// <tau>_n = (1/n) sum_{i<=n} tau_i
std::vector<double> running_mean(const std::vector<double>& lengths);
// Linear-interpolated empirical quantile, q in [0, 1]. Throws on empty input.
double quantile(std::vector<double> values, double q);

}  // namespace selforg
