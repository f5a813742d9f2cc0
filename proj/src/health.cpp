#include "battlab/health.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>

namespace battlab::health {

namespace {

/// Gaussian elimination with partial pivoting on a 3x3 system.
/// Returns false when the matrix is numerically singular.
bool solve3(std::array<std::array<double, 3>, 3> m, std::array<double, 3> rhs,
            std::array<double, 3>& out) {
  for (int col = 0; col < 3; ++col) {
    int pivot = col;
    for (int r = col + 1; r < 3; ++r)
      if (std::abs(m[r][col]) > std::abs(m[pivot][col])) pivot = r;
    if (m[pivot][col] == 0.0) return false;
    std::swap(m[col], m[pivot]);
    std::swap(rhs[col], rhs[pivot]);
    for (int r = col + 1; r < 3; ++r) {
      const double f = m[r][col] / m[col][col];
      for (int c = col; c < 3; ++c) m[r][c] -= f * m[col][c];
      rhs[r] -= f * rhs[col];
    }
  }
  for (int r = 2; r >= 0; --r) {
    double s = rhs[r];
    for (int c = r + 1; c < 3; ++c) s -= m[r][c] * out[c];
    out[r] = s / m[r][r];
  }
  return true;
}

} // namespace

SoHSeries compute_soh(const std::vector<CycleRecord>& records, double nominal_capacity_mAh) {
  if (nominal_capacity_mAh <= 0.0) throw ArgumentError("nominal capacity must be positive");
  if (records.empty()) throw ArgumentError("no records given");

  SoHSeries series;
  series.cell_id = records.front().cell_id;
  series.nominal_capacity_mAh = nominal_capacity_mAh;
  series.points.reserve(records.size());
  for (const auto& r : records) {
    const double soh = 100.0 * r.cap_chg_mAh / nominal_capacity_mAh;
    if (soh > 100.0) series.overshoot = true;
    series.points.emplace_back(r.cycle_index, soh);
  }
  std::sort(series.points.begin(), series.points.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (std::size_t i = 1; i < series.points.size(); ++i)
    if (series.points[i].first == series.points[i - 1].first)
      throw ArgumentError("duplicate cycle index " + std::to_string(series.points[i].first));
  return series;
}

QuadraticFit fit_quadratic(const SoHSeries& series) {
  std::set<int> distinct;
  for (const auto& [c, _] : series.points) distinct.insert(c);
  if (distinct.size() < 3)
    throw RankError("quadratic fit needs at least 3 distinct cycle indices");

  const double c_min = static_cast<double>(*distinct.begin());
  const double c_max = static_cast<double>(*distinct.rbegin());
  const double mid = 0.5 * (c_min + c_max);
  const double half = 0.5 * (c_max - c_min); // > 0 given 3 distinct indices

  // Accumulate normal equations for soh ~ alpha*t^2 + beta*t + gamma,
  // t = (C - mid)/half in [-1, 1].
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0, s4 = 0;
  double y0 = 0, y1 = 0, y2 = 0;
  for (const auto& [c, soh] : series.points) {
    const double t = (static_cast<double>(c) - mid) / half;
    const double t2 = t * t;
    s0 += 1.0;
    s1 += t;
    s2 += t2;
    s3 += t2 * t;
    s4 += t2 * t2;
    y0 += soh;
    y1 += soh * t;
    y2 += soh * t2;
  }
  std::array<std::array<double, 3>, 3> m = {{{s4, s3, s2}, {s3, s2, s1}, {s2, s1, s0}}};
  std::array<double, 3> rhs = {y2, y1, y0};
  std::array<double, 3> coef{}; // alpha, beta, gamma
  if (!solve3(m, rhs, coef)) throw RankError("singular normal equations");
  const double alpha = coef[0], beta = coef[1], gamma = coef[2];

  QuadraticFit fit;
  fit.n_points = static_cast<int>(series.points.size());
  fit.a = alpha / (half * half);
  fit.b = beta / half - 2.0 * alpha * mid / (half * half);
  fit.c = gamma - beta * mid / half + alpha * mid * mid / (half * half);

  double ss = 0.0;
  for (const auto& [c, soh] : series.points) {
    const double t = (static_cast<double>(c) - mid) / half;
    const double r = soh - (alpha * t * t + beta * t + gamma);
    ss += r * r;
  }
  fit.rmse_pct = std::sqrt(ss / static_cast<double>(series.points.size()));
  return fit;
}

RULEstimate solve_end_of_life(const QuadraticFit& fit, int current_cycle,
                              double threshold_pct) {
  RULEstimate est;
  est.fit = fit;
  est.current_cycle = current_cycle;
  est.threshold_pct = threshold_pct;

  const double a = fit.a;
  const double b = fit.b;
  const double c = fit.c - threshold_pct;
  const double cur = static_cast<double>(current_cycle);

  std::vector<double> roots;
  if (a == 0.0) {
    if (b != 0.0) roots.push_back(-c / b);
  } else {
    const double disc = b * b - 4.0 * a * c;
    if (disc >= 0.0) {
      const double sqrt_disc = std::sqrt(disc);
      const double sign_b = b < 0.0 ? -1.0 : 1.0;
      const double q = -0.5 * (b + sign_b * sqrt_disc);
      if (q == 0.0) {
        roots.push_back(0.0); // b == 0 and disc == 0: double root at the vertex
      } else {
        roots.push_back(q / a);
        roots.push_back(c / q);
      }
    }
  }

  std::optional<double> best;
  for (double r : roots)
    if (r > cur && (!best || r < *best)) best = r;
  if (best) {
    est.end_of_life_cycle = *best;
    est.rul_cycles = *best - cur;
  }
  return est;
}

double predict_soh(const QuadraticFit& fit, double cycle) {
  return (fit.a * cycle + fit.b) * cycle + fit.c;
}

double nominal_capacity_heuristic(const std::vector<CycleRecord>& records) {
  if (records.empty()) throw ArgumentError("no records given");
  double best = 0.0;
  for (std::size_t i = 0; i < records.size() && i < 5; ++i)
    best = std::max(best, records[i].cap_chg_mAh);
  if (best <= 0.0) throw ArgumentError("first cycles hold no positive capacity");
  return best;
}

} // namespace battlab::health
