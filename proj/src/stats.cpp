#include "selforg/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace selforg {

namespace {

struct Run {
  int cls;
  std::size_t first;
  std::size_t count;
};

double check_series(const std::vector<double>& time, const std::vector<double>& theta,
                    const DetectionThresholds& th, IntervalStatistics& out) {
  if (time.size() != theta.size()) throw std::invalid_argument("time and theta sizes differ");
  if (time.size() < 2) throw std::invalid_argument("series needs at least 2 samples");
  const double dt = time[1] - time[0];
  if (!(dt > 0.0)) throw std::invalid_argument("time grid must be increasing");
  for (std::size_t i = 1; i < time.size(); ++i)
    if (std::abs(time[i] - time[i - 1] - dt) > 1e-9 * std::max(1.0, std::abs(time[i])))
      throw std::invalid_argument("time grid is not uniform");
  const double duration = dt * time.size();
  if (duration < th.min_length_factor * th.tau_c)
    throw std::invalid_argument("series shorter than the minimum trapping length");
  if (dt > 0.1 * th.tau_c * (1.0 + 1e-9))
    out.warnings.push_back("sampling interval exceeds tau_c/10; short excursions may be missed");
  return dt;
}

std::vector<Run> runs_of(const std::vector<double>& theta, double sigma) {
  std::vector<Run> runs;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const int c = theta[i] > sigma ? 1 : (theta[i] < -sigma ? -1 : 0);
    if (!runs.empty() && runs.back().cls == c) {
      runs.back().count++;
    } else {
      runs.push_back({c, i, 1});
    }
  }
  return runs;
}

}  // namespace

const char* to_string(IntervalKind k) { return k == IntervalKind::Trap ? "trap" : "jump"; }

DetectionThresholds thresholds_for(const PhysicalParams& p) {
  const DerivedCoefficients c = derive_coefficients(p);
  if (!c.thermal) throw ConfigError("interval detection needs tau_c, which requires delta_c < 0");
  return {c.sigma_N, c.tau_c_free, 10.0};
}

IntervalStatistics detect_trapping(const std::vector<double>& time, const std::vector<double>& theta,
                                   const DetectionThresholds& th) {
  IntervalStatistics out;
  const double dt = check_series(time, theta, th, out);
  const auto runs = runs_of(theta, th.sigma);

  std::size_t i = 0;
  while (i < runs.size()) {
    if (runs[i].cls == 0) {
      ++i;
      continue;
    }
    const int sign = runs[i].cls;
    std::size_t count = runs[i].count;
    std::size_t last = i;
    // Absorb [0-run, same-sign run] pairs while the 0-run is short.
    while (last + 2 < runs.size() && runs[last + 1].cls == 0 && runs[last + 2].cls == sign &&
           runs[last + 1].count * dt <= th.tau_c) {
      count += runs[last + 1].count + runs[last + 2].count;
      last += 2;
    }
    const bool boundary = i == 0 || last + 1 == runs.size();
    const double length = count * dt;
    if (boundary) {
      out.censored++;
      if (length > th.min_length_factor * th.tau_c)
        out.censored_intervals.push_back({IntervalKind::Trap, time[runs[i].first], length, sign});
    } else if (length > th.min_length_factor * th.tau_c) {
      out.intervals.push_back({IntervalKind::Trap, time[runs[i].first], length, sign});
    }
    i = last + 1;
  }
  return out;
}

IntervalStatistics detect_jumps(const std::vector<double>& time, const std::vector<double>& theta,
                                const DetectionThresholds& th) {
  IntervalStatistics out;
  const double dt = check_series(time, theta, th, out);
  const auto runs = runs_of(theta, th.sigma);
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (runs[i].cls != 0) continue;
    if (i == 0 || i + 1 == runs.size()) {
      out.censored++;
      continue;
    }
    if (runs[i - 1].cls == -runs[i + 1].cls)
      out.intervals.push_back({IntervalKind::Jump, time[runs[i].first], runs[i].count * dt, runs[i + 1].cls});
  }
  return out;
}

std::vector<double> lengths_of(const std::vector<Interval>& intervals) {
  std::vector<double> out;
  out.reserve(intervals.size());
  for (const auto& iv : intervals) out.push_back(iv.length);
  return out;
}

std::vector<std::pair<double, double>> cumulative_distribution(const std::vector<double>& lengths) {
  std::vector<double> sorted = lengths;
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::pair<double, double>> out;
  const double n = sorted.size();
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i > 0 && sorted[i] == sorted[i - 1]) continue;
    out.emplace_back(sorted[i], (n - i) / n);
  }
  return out;
}

double survival_at(const std::vector<double>& lengths, double tau) {
  if (lengths.empty()) return 0.0;
  const auto ge = std::count_if(lengths.begin(), lengths.end(), [tau](double x) { return x >= tau; });
  return static_cast<double>(ge) / lengths.size();
}

SurvivalCurve kaplan_meier(const std::vector<double>& complete, const std::vector<double>& censored) {
  // (length, is_event); at ties events precede censorings
  std::vector<std::pair<double, bool>> obs;
  for (double x : complete) obs.emplace_back(x, true);
  for (double x : censored) obs.emplace_back(x, false);
  std::sort(obs.begin(), obs.end(), [](const auto& a, const auto& b) {
    return a.first < b.first || (a.first == b.first && a.second && !b.second);
  });
  SurvivalCurve out;
  double f = 1.0;
  std::size_t at_risk = obs.size();
  for (std::size_t i = 0; i < obs.size();) {
    std::size_t j = i, events = 0;
    while (j < obs.size() && obs[j].first == obs[i].first) events += obs[j++].second;
    if (events > 0) {
      f *= 1.0 - static_cast<double>(events) / at_risk;
      out.steps.emplace_back(obs[i].first, f);
    }
    at_risk -= j - i;
    i = j;
  }
  if (!obs.empty()) out.horizon = obs.back().first;
  return out;
}

double survival_quantile(const SurvivalCurve& s, double q) {
  for (const auto& [tau, f] : s.steps)
    if (1.0 - f >= q - 1e-12) return tau;
  return std::numeric_limits<double>::infinity();
}

std::vector<double> running_mean(const std::vector<double>& lengths) {
  std::vector<double> out;
  out.reserve(lengths.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    sum += lengths[i];
    out.push_back(sum / (i + 1));
  }
  return out;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(q, 0.0, 1.0) * (values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - lo) * (values[hi] - values[lo]);
}

}  // namespace selforg
