// Drift statistics: two-sample Kolmogorov-Smirnov test and a one-sided
// positive CUSUM on standardized one-step prediction residuals.
#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "ranassure/kpi.hpp"

namespace ranassure {

enum class DriftSeverity { None, Mild, Severe };

inline const char* severity_name(DriftSeverity s) {
  switch (s) {
    case DriftSeverity::None: return "none";
    case DriftSeverity::Mild: return "mild";
    case DriftSeverity::Severe: return "severe";
  }
  return "?";
}

struct DriftReport {
  std::string method;  // "ks" | "cusum"
  Kpi kpi = Kpi::Prb;
  std::string cell_id;
  double statistic = 0.0;
  double threshold = 0.0;
  DriftSeverity severity = DriftSeverity::None;
  Minute window_a_start = 0, window_a_end = 0;
  Minute window_b_start = 0, window_b_end = 0;
};

// Critical coefficient c(alpha) for the two-sample KS threshold
// c(alpha) * sqrt((n+m)/(n*m)). Standard table values.
inline double ks_critical_coefficient(double alpha) {
  if (alpha <= 0.001) return 1.95;
  if (alpha <= 0.01) return 1.628;
  if (alpha <= 0.025) return 1.48;
  if (alpha <= 0.05) return 1.358;
  if (alpha <= 0.10) return 1.224;
  return 1.073;  // alpha ~ 0.15
}

// Two-sample KS statistic: sup |F_a - F_b| over the merged sample grid.
// Severity: mild when D in (thr, 1.5*thr], severe above.
inline DriftReport ks_two_sample(std::vector<double> a, std::vector<double> b,
                                 double alpha = 0.05) {
  if (a.size() < 8 || b.size() < 8)
    throw std::invalid_argument("ks_two_sample: samples must have at least 8 points each");
  DriftReport rep;
  rep.method = "ks";
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double n = static_cast<double>(a.size());
  const double m = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(i / n - j / m));
  }
  d = std::max(d, 1.0 - std::min(i / n, j / m));
  rep.statistic = d;
  rep.threshold = ks_critical_coefficient(alpha) * std::sqrt((n + m) / (n * m));
  if (d > 1.5 * rep.threshold)
    rep.severity = DriftSeverity::Severe;
  else if (d > rep.threshold)
    rep.severity = DriftSeverity::Mild;
  return rep;
}

// One-sided positive CUSUM state. S+ <- max(0, S+ + z - k); alarm when
// S+ > h, which resets the accumulator.
struct CusumState {
  double s_pos = 0.0;
  double k = 0.5;
  double h = 5.0;
  int alarms = 0;

  // Returns true when this step raised an alarm.
  bool step(double z) {
    if (!std::isfinite(z)) throw std::invalid_argument("cusum_step: non-finite z");
    s_pos = std::max(0.0, s_pos + z - k);
    if (s_pos > h) {
      s_pos = 0.0;
      ++alarms;
      return true;
    }
    return false;
  }
};

inline bool cusum_step(CusumState& state, double z) { return state.step(z); }

}  // namespace ranassure
