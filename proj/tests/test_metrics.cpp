#include <doctest.h>

#include <chrono>
#include <cmath>
#include <thread>

#include "battlab/metrics.hpp"
#include "battlab/random.hpp"

using namespace battlab;
using namespace battlab::metrics;

namespace {

/// Naive two-pass reference used as the oracle for evaluate().
struct Reference {
  double mse, mae, r2;
};

Reference reference_eval(const std::vector<double>& yt, const std::vector<double>& yp) {
  const double n = static_cast<double>(yt.size());
  double mean = 0.0;
  for (double y : yt) mean += y;
  mean /= n;
  double mse = 0.0, mae = 0.0, ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < yt.size(); ++i) {
    mse += (yt[i] - yp[i]) * (yt[i] - yp[i]) / n;
    mae += std::abs(yt[i] - yp[i]) / n;
    ss_res += (yt[i] - yp[i]) * (yt[i] - yp[i]);
    ss_tot += (yt[i] - mean) * (yt[i] - mean);
  }
  return {mse, mae, 1.0 - ss_res / ss_tot};
}

std::vector<double> random_vec(Rng& rng, std::size_t n, double lo, double hi) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(lo, hi);
  return v;
}

} // namespace

TEST_CASE("perfect predictions score mse 0, mae 0, r2 1") {
  const std::vector<double> y = {1.0, 2.0, 3.0};
  const auto r = evaluate(y, y, {1.0, 3}, 100);
  CHECK(r.mse == 0.0);
  CHECK(r.mae == 0.0);
  CHECK(r.r2 == 1.0);
  CHECK(r.n == 3);
  CHECK(r.parameter_count == 100);
  CHECK(!r.r2_degenerate);
}

TEST_CASE("the constant-mean predictor scores r2 = 0") {
  const std::vector<double> y = {1.0, 2.0, 3.0, 6.0};
  const std::vector<double> mean_pred(4, 3.0);
  const auto r = evaluate(y, mean_pred, {1.0, 1}, 0);
  CHECK(r.r2 == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("a predictor worse than the mean goes negative") {
  const std::vector<double> y = {1.0, 2.0, 3.0, 4.0};
  std::vector<double> negated(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) negated[i] = -y[i];
  const auto r = evaluate(y, negated, {1.0, 1}, 0);
  CHECK(r.r2 < 0.0);
}

TEST_CASE("evaluate matches the two-pass reference to 1e-12") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto yt = random_vec(rng, 64, -50.0, 150.0);
    const auto yp = random_vec(rng, 64, -50.0, 150.0);
    const auto r = evaluate(yt, yp, {0.5, 4}, 10);
    const auto ref = reference_eval(yt, yp);
    CHECK(r.mse == doctest::Approx(ref.mse).epsilon(1e-12));
    CHECK(r.mae == doctest::Approx(ref.mae).epsilon(1e-12));
    CHECK(r.r2 == doctest::Approx(ref.r2).epsilon(1e-12));
    CHECK(r.mae * r.mae <= r.mse * (1.0 + 1e-12));
  }
}

TEST_CASE("translation leaves mse and mae untouched; scaling acts as expected") {
  Rng rng(4);
  const auto yt = random_vec(rng, 40, 0.0, 100.0);
  const auto yp = random_vec(rng, 40, 0.0, 100.0);
  const auto base = evaluate(yt, yp, {1.0, 1}, 0);

  const double k = 17.25;
  std::vector<double> yt_shift = yt, yp_shift = yp;
  for (double& v : yt_shift) v += k;
  for (double& v : yp_shift) v += k;
  const auto shifted = evaluate(yt_shift, yp_shift, {1.0, 1}, 0);
  CHECK(shifted.mse == doctest::Approx(base.mse).epsilon(1e-12));
  CHECK(shifted.mae == doctest::Approx(base.mae).epsilon(1e-12));

  const double s = -3.5;
  std::vector<double> yt_scale = yt, yp_scale = yp;
  for (double& v : yt_scale) v *= s;
  for (double& v : yp_scale) v *= s;
  const auto scaled = evaluate(yt_scale, yp_scale, {1.0, 1}, 0);
  CHECK(scaled.mae == doctest::Approx(std::abs(s) * base.mae).epsilon(1e-9));
  CHECK(scaled.mse == doctest::Approx(s * s * base.mse).epsilon(1e-9));
  CHECK(scaled.r2 == doctest::Approx(base.r2).epsilon(1e-9)); // affine invariance
}

TEST_CASE("constant targets flag the degenerate r2 definition") {
  const std::vector<double> y(5, 7.0);
  const auto perfect = evaluate(y, y, {1.0, 1}, 0);
  CHECK(perfect.r2_degenerate);
  CHECK(perfect.r2 == 1.0);

  const auto off = evaluate(y, std::vector<double>(5, 8.0), {1.0, 1}, 0);
  CHECK(off.r2_degenerate);
  CHECK(std::isinf(off.r2));
  CHECK(off.r2 < 0.0);
}

TEST_CASE("mae_pct uses the supplied nominal capacity") {
  const std::vector<double> y = {1000.0, 1000.0};
  const std::vector<double> p = {990.0, 1010.0};
  const auto with = evaluate(y, p, {1.0, 1}, 0, 1000.0);
  CHECK(with.has_mae_pct);
  CHECK(with.mae_pct == doctest::Approx(1.0).epsilon(1e-12));
  const auto without = evaluate(y, p, {1.0, 1}, 0);
  CHECK(!without.has_mae_pct);
  CHECK_THROWS_AS(evaluate(y, p, {1.0, 1}, 0, -1.0), ArgumentError);
}

TEST_CASE("throughput accounting and the zero-seconds flag") {
  const std::vector<double> y = {1.0, 2.0};
  const auto r = evaluate(y, y, {2.0, 10}, 0);
  CHECK(r.batches_per_second == doctest::Approx(5.0));
  const auto z = evaluate(y, y, {0.0, 10}, 0);
  CHECK(z.timing_degenerate);
  CHECK(z.batches_per_second == 0.0);
}

TEST_CASE("evaluate input validation") {
  CHECK_THROWS_AS(evaluate({}, {}, {1.0, 1}, 0), ArgumentError);
  CHECK_THROWS_AS(evaluate({1.0}, {1.0, 2.0}, {1.0, 1}, 0), ArgumentError);
  CHECK_THROWS_AS(evaluate({1.0}, {1.0}, {-1.0, 1}, 0), ArgumentError);
}

TEST_CASE("reference comparison rows render verbatim, best first") {
  const auto table = comparison_table({}, true);
  REQUIRE(table.j.size() == 5);
  CHECK(table.j[0]["method"] == "LLM");
  CHECK(table.j[0]["mae_pct"] == doctest::Approx(0.81));
  CHECK(table.j[0]["time_seconds"] == doctest::Approx(61.17));
  CHECK(table.j[0]["source"] == "paper-reported");
  CHECK(table.text.find("0.81") != std::string::npos);
  CHECK(table.text.find("61.17") != std::string::npos);
  CHECK(table.text.find("21.00") != std::string::npos); // GPR
  CHECK(table.text.find("paper-reported") != std::string::npos);
}

TEST_CASE("measured rows merge into the sorted table") {
  const auto table = comparison_table({{"mine", 2.0, 1.5, false}}, true);
  REQUIRE(table.j.size() == 6);
  CHECK(table.j[0]["method"] == "LLM");
  CHECK(table.j[1]["method"] == "mine");
  CHECK(table.j[1]["source"] == "measured");
  CHECK(table.j[2]["method"] == "SVR");
}

TEST_CASE("an empty table is an error") {
  CHECK_THROWS_AS(comparison_table({}, false), ArgumentError);
}

TEST_CASE("timeit measures the monotonic clock") {
  const double noop = timeit([] {});
  CHECK(noop >= 0.0);
  CHECK(noop < 0.1);

  const double slept = timeit([] { std::this_thread::sleep_for(std::chrono::milliseconds(200)); });
  CHECK(slept >= 0.2);
  CHECK(slept < 0.3);

  auto work = [] { std::this_thread::sleep_for(std::chrono::milliseconds(60)); };
  const double a = timeit(work);
  const double b = timeit(work);
  const double joint = timeit([&] { work(); work(); });
  CHECK(std::abs((a + b) - joint) <= 0.1 * joint);

  const auto [value, seconds] = timeit([] { return 42; });
  CHECK(value == 42);
  CHECK(seconds >= 0.0);
}
