#include <doctest.h>

#include <cmath>

#include "battlab/dva.hpp"
#include "battlab/random.hpp"

using namespace battlab;
using namespace battlab::dva;

namespace {

DischargeTrace trace_of(std::vector<TraceSample> samples) {
  DischargeTrace t;
  t.cell_id = "c";
  t.cycle_index = 1;
  t.samples = std::move(samples);
  return t;
}

/// Q(V) sampled on a descending grid.
template <typename F> DischargeTrace sample_q(F q_of_v, const std::vector<double>& grid) {
  std::vector<TraceSample> s;
  for (double v : grid) s.push_back({v, q_of_v(v)});
  return trace_of(std::move(s));
}

std::vector<double> descending_grid(double lo, double hi, int n) {
  std::vector<double> g;
  for (int i = 0; i < n; ++i)
    g.push_back(hi + (lo - hi) * static_cast<double>(i) / (n - 1));
  return g;
}

/// Random strictly descending grid in [lo, hi]. Spacings below 1e-6 are
/// merged: differencing across them cancels catastrophically in any
/// formulation, which is a property of the grid, not the method.
std::vector<double> random_grid(Rng& rng, double lo, double hi, int n) {
  std::vector<double> g;
  for (int i = 0; i < n; ++i) g.push_back(rng.uniform(lo, hi));
  std::sort(g.begin(), g.end(), std::greater<>());
  g.erase(std::unique(g.begin(), g.end(), [](double a, double b) { return a - b < 1e-6; }),
          g.end());
  return g;
}

} // namespace

TEST_CASE("linear Q gives the exact constant derivative") {
  const auto trace = sample_q([](double v) { return -100.0 * v + 300.0; },
                              descending_grid(2.0, 2.9, 10));
  const auto curve = compute_dva(trace, 1);
  REQUIRE(curve.points.size() == 9);
  for (const auto& p : curve.points)
    CHECK(p.dq_dv_mAh_per_V == doctest::Approx(-100.0).epsilon(1e-9));
}

TEST_CASE("quadratic Q matches the analytic derivative at midpoints") {
  const auto trace =
      sample_q([](double v) { return -50.0 * v * v + 500.0; }, descending_grid(1.8, 3.0, 25));
  const auto curve = compute_dva(trace, 1);
  for (const auto& p : curve.points)
    CHECK(p.dq_dv_mAh_per_V == doctest::Approx(-100.0 * p.v_mid_V).epsilon(1e-9));
}

TEST_CASE("degree <= 2 polynomials are exact on arbitrary monotone grids") {
  Rng rng(314);
  for (int trial = 0; trial < 50; ++trial) {
    const double a = rng.uniform(-80.0, 0.0);
    const double b = rng.uniform(-120.0, 20.0);
    const double c = rng.uniform(100.0, 900.0);
    const auto grid = random_grid(rng, 1.5, 3.2, 30);
    if (grid.size() < 2) continue;
    const auto trace =
        sample_q([&](double v) { return a * v * v + b * v + c; }, grid);
    const auto curve = compute_dva(trace, 1);
    for (const auto& p : curve.points) {
      const double expected = 2.0 * a * p.v_mid_V + b;
      CHECK(std::abs(p.dq_dv_mAh_per_V - expected) <=
            1e-9 * std::max(1.0, std::abs(expected)));
    }
  }
}

TEST_CASE("error halves (or better) as the grid is refined") {
  auto q = [](double v) { return 200.0 * std::exp(-v) + 10.0 * std::sin(3.0 * v); };
  auto dq = [](double v) { return -200.0 * std::exp(-v) + 30.0 * std::cos(3.0 * v); };
  double previous_err = 0.0;
  for (int n : {101, 201, 401}) {
    const auto curve = compute_dva(sample_q(q, descending_grid(1.5, 3.0, n)), 1);
    double err = 0.0;
    for (const auto& p : curve.points)
      err = std::max(err, std::abs(p.dq_dv_mAh_per_V - dq(p.v_mid_V)));
    if (previous_err > 0.0) CHECK(err <= 0.5 * previous_err * 1.05); // first order or better
    previous_err = err;
  }
}

TEST_CASE("identical-voltage runs collapse with capacities averaged") {
  const auto trace = trace_of({{2.9, 0.0}, {2.8, 10.0}, {2.8, 14.0}, {2.7, 30.0}});
  const auto curve = compute_dva(trace, 1);
  REQUIRE(curve.points.size() == 2);
  // collapsed middle sample: (2.8, 12)
  CHECK(curve.points[0].dq_dv_mAh_per_V ==
        doctest::Approx((12.0 - 0.0) / (2.8 - 2.9)).epsilon(1e-12));
  CHECK(curve.points[1].dq_dv_mAh_per_V ==
        doctest::Approx((30.0 - 12.0) / (2.7 - 2.8)).epsilon(1e-12));
}

TEST_CASE("all samples at one voltage is degenerate") {
  const auto trace = trace_of({{2.5, 0.0}, {2.5, 10.0}, {2.5, 20.0}});
  CHECK_THROWS_AS(compute_dva(trace, 1), DegenerateTraceError);
}

TEST_CASE("smoothing window must be odd") {
  const auto trace = sample_q([](double v) { return -10.0 * v; }, descending_grid(2.0, 3.0, 8));
  CHECK_THROWS_AS(compute_dva(trace, 4), ArgumentError);
  CHECK_THROWS_AS(compute_dva(trace, 0), ArgumentError);
  CHECK_NOTHROW(compute_dva(trace, 3));
}

TEST_CASE("smoothing is an exact windowed mean away from the edges") {
  Rng rng(99);
  const auto grid = descending_grid(1.8, 3.0, 60);
  const auto trace = sample_q([&](double) { return 0.0; }, grid); // capacities replaced below
  DischargeTrace noisy = trace;
  double q = 0.0;
  for (auto& s : noisy.samples) {
    q += rng.uniform(0.0, 12.0);
    s.capacity_mAh = q;
  }
  const auto raw = compute_dva(noisy, 1);
  const int w = 5;
  const auto smooth = compute_dva(noisy, w);
  const std::size_t half = w / 2;

  // each fully-covered smoothed point is the plain mean of its raw window,
  // so the sum over those points equals the correspondingly-weighted raw sum
  double sum_smooth = 0.0, sum_raw_weighted = 0.0;
  for (std::size_t i = half; i + half < raw.points.size(); ++i) {
    sum_smooth += smooth.points[i].dq_dv_mAh_per_V;
    double win = 0.0;
    for (std::size_t j = i - half; j <= i + half; ++j) win += raw.points[j].dq_dv_mAh_per_V;
    sum_raw_weighted += win / w;
  }
  CHECK(sum_smooth == doctest::Approx(sum_raw_weighted).epsilon(1e-9));

  // constant raw derivative: smoothing changes nothing anywhere
  const auto linear = sample_q([](double v) { return -42.0 * v; }, grid);
  const auto ls = compute_dva(linear, 5);
  for (const auto& p : ls.points) CHECK(p.dq_dv_mAh_per_V == doctest::Approx(-42.0).epsilon(1e-9));
}

TEST_CASE("window capacity covers and pro-rates") {
  const auto trace = trace_of({{3.0, 0.0}, {2.5, 50.0}, {2.0, 150.0}});
  CHECK(window_capacity(trace, 2.0, 3.0) == doctest::Approx(150.0).epsilon(1e-12));
  CHECK(window_capacity(trace, 5.0, 6.0) == 0.0);
  // [2.25, 2.75]: half of each segment
  CHECK(window_capacity(trace, 2.25, 2.75) == doctest::Approx(25.0 + 50.0).epsilon(1e-12));
  CHECK_THROWS_AS(window_capacity(trace, 2.5, 2.5), ArgumentError);
}

TEST_CASE("window capacity is additive over adjacent windows") {
  Rng rng(2024);
  for (int trial = 0; trial < 40; ++trial) {
    const auto grid = random_grid(rng, 1.5, 3.2, 40);
    if (grid.size() < 3) continue;
    double q = 0.0;
    std::vector<TraceSample> samples;
    for (double v : grid) {
      samples.push_back({v, q});
      q += rng.uniform(0.0, 5.0);
    }
    const auto trace = trace_of(std::move(samples));
    const double lo = rng.uniform(1.4, 2.2);
    const double mid = rng.uniform(lo + 0.01, 2.9);
    const double hi = rng.uniform(mid + 0.01, 3.4);
    const double whole = window_capacity(trace, lo, hi);
    const double parts = window_capacity(trace, lo, mid) + window_capacity(trace, mid, hi);
    CHECK(parts == doctest::Approx(whole).epsilon(1e-9));
  }
}

TEST_CASE("fade series sorts by cycle") {
  const DischargeTrace a = [] {
    auto t = trace_of({{3.0, 0.0}, {2.0, 100.0}});
    t.cycle_index = 300;
    return t;
  }();
  const DischargeTrace b = [] {
    auto t = trace_of({{3.0, 0.0}, {2.0, 80.0}});
    t.cycle_index = 100;
    return t;
  }();
  const auto series = fade_series({a, b}, 2.0, 3.0);
  REQUIRE(series.size() == 2);
  CHECK(series[0].first == 100);
  CHECK(series[0].second == doctest::Approx(80.0));
  CHECK(series[1].first == 300);

  const auto single = fade_series({a}, 2.0, 3.0);
  CHECK(single.size() == 1);
  CHECK_THROWS_AS(fade_series({}, 2.0, 3.0), ArgumentError);
}
