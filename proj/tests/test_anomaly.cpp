#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "battlab/anomaly.hpp"
#include "battlab/dva.hpp"
#include "battlab/random.hpp"
#include "battlab/synth.hpp"

using namespace battlab;
using namespace battlab::anomaly;

namespace {

DischargeTrace clean_trace(int cycle = 50) {
  return synth::generate_trace({}, synth::default_trace_shape(), cycle);
}

DischargeTrace with_voltage_noise(DischargeTrace t, double sd, std::uint64_t seed) {
  Rng rng(seed);
  for (auto& s : t.samples) s.voltage_V += rng.gaussian(0.0, sd);
  return t;
}

bool flags_index(const AnomalyReport& r, std::size_t idx) {
  return std::any_of(r.flagged.begin(), r.flagged.end(),
                     [&](const FlaggedSample& f) { return f.sample_index == idx; });
}

} // namespace

TEST_CASE("a trace identical to its baseline has no flags") {
  const auto t = clean_trace();
  const auto report = detect_anomalies(t, &t);
  CHECK(report.flagged.empty());
  CHECK(report.baseline_kind == BaselineKind::reference_trace);
  CHECK(!report.degenerate_scale);
}

TEST_CASE("noiseless unperturbed traces never self-flag") {
  for (int cycle : {1, 50, 250, 500}) {
    const auto report = detect_anomalies(clean_trace(cycle));
    CHECK(report.flagged.empty());
    CHECK(report.baseline_kind == BaselineKind::smoothed_self);
  }
}

TEST_CASE("an injected spike is flagged, and only window-local neighbors may join it") {
  // smooth trace: every residual away from the spike is exactly zero, so the
  // spike exceeds any multiple of the robust scale
  const auto spiked = synth::inject_anomaly(clean_trace(), synth::AnomalyKind::spike, 0.1, 50);
  const auto report = detect_anomalies(spiked);
  CHECK(flags_index(report, 50));
  REQUIRE(!report.flagged.empty());
  for (const auto& f : report.flagged) {
    CHECK(f.sample_index >= 45); // within the median-filter half window of 50
    CHECK(f.sample_index <= 55);
    CHECK(std::abs(f.zscore) >= report.threshold_z);
  }
  // sorted by index, as reported
  for (std::size_t i = 1; i < report.flagged.size(); ++i)
    CHECK(report.flagged[i - 1].sample_index < report.flagged[i].sample_index);
}

TEST_CASE("infinite threshold flags nothing") {
  const auto noisy = with_voltage_noise(clean_trace(), 0.002, 9);
  const auto spiked = synth::inject_anomaly(noisy, synth::AnomalyKind::spike, 0.1, 60);
  const auto report =
      detect_anomalies(spiked, nullptr, std::numeric_limits<double>::infinity());
  CHECK(report.flagged.empty());
}

TEST_CASE("detection power: 10-sigma spikes are caught in at least 99% of trials") {
  // noise above the grid spacing keeps the robust scale positive, so this
  // exercises the primary z-score path
  const double noise_sd = 0.01;
  const auto base = clean_trace();
  int detected = 0;
  const int trials = 200;
  for (int t = 0; t < trials; ++t) {
    Rng rng(5000 + static_cast<std::uint64_t>(t));
    auto noisy = base;
    for (auto& s : noisy.samples) s.voltage_V += rng.gaussian(0.0, noise_sd);
    const std::size_t idx = 10 + static_cast<std::size_t>(rng.below(noisy.samples.size() - 20));
    const double sign = rng.uniform01() < 0.5 ? 1.0 : -1.0;
    const auto spiked =
        synth::inject_anomaly(noisy, synth::AnomalyKind::spike, sign * 10.0 * noise_sd, idx);
    if (flags_index(detect_anomalies(spiked), idx)) ++detected;
  }
  CHECK(detected >= 198); // >= 99% of 200
}

TEST_CASE("raising the threshold never adds flags") {
  Rng rng(31);
  const auto base = clean_trace();
  for (int trial = 0; trial < 20; ++trial) {
    auto noisy = base;
    for (auto& s : noisy.samples) s.voltage_V += rng.gaussian(0.0, 0.003);
    const std::size_t idx = 15 + static_cast<std::size_t>(rng.below(150));
    const auto spiked = synth::inject_anomaly(noisy, synth::AnomalyKind::spike,
                                              rng.uniform(-0.05, 0.05), idx);
    std::vector<std::size_t> previous; // flags at the next-lower threshold
    bool first = true;
    for (double z : {1.5, 2.0, 3.0, 4.0, 6.0}) {
      const auto report = detect_anomalies(spiked, nullptr, z);
      std::vector<std::size_t> current;
      for (const auto& f : report.flagged) current.push_back(f.sample_index);
      if (!first) // higher threshold flags a subset of the lower threshold's
        CHECK(std::includes(previous.begin(), previous.end(), current.begin(), current.end()));
      previous = std::move(current);
      first = false;
    }
  }
}

TEST_CASE("constant residual field with isolated outliers degrades gracefully") {
  auto t = clean_trace();
  auto baseline = t;
  t.samples[40].voltage_V += 0.05; // single deviation; every other residual is 0
  const auto report = detect_anomalies(t, &baseline);
  CHECK(report.degenerate_scale);
  REQUIRE(report.flagged.size() == 1);
  CHECK(report.flagged[0].sample_index == 40);
  CHECK(std::isinf(report.flagged[0].zscore));
}

TEST_CASE("short traces are rejected") {
  DischargeTrace t;
  t.samples.assign(9, {2.5, 1.0});
  CHECK_THROWS_AS(detect_anomalies(t), ArgumentError);
  CHECK_THROWS_AS(detect_anomalies(clean_trace(), nullptr, 0.0), ArgumentError);
}

TEST_CASE("refining with no flags is the identity") {
  const auto t = clean_trace();
  const auto report = detect_anomalies(t);
  REQUIRE(report.flagged.empty());
  const auto refined = feedback_refine(report, t);
  for (std::size_t i = 0; i < t.samples.size(); ++i)
    CHECK(refined.samples[i].voltage_V == t.samples[i].voltage_V);
}

TEST_CASE("a single flagged interior point takes its neighbors' interpolant") {
  auto t = clean_trace();
  AnomalyReport report;
  report.cell_id = t.cell_id;
  report.cycle_index = t.cycle_index;
  report.threshold_z = 3.0;
  report.flagged.push_back({80, 0.1, 10.0});
  const auto refined = feedback_refine(report, t);
  const auto& lo = t.samples[79];
  const auto& hi = t.samples[81];
  const double frac =
      (t.samples[80].capacity_mAh - lo.capacity_mAh) / (hi.capacity_mAh - lo.capacity_mAh);
  const double expected = lo.voltage_V + frac * (hi.voltage_V - lo.voltage_V);
  CHECK(refined.samples[80].voltage_V == doctest::Approx(expected).epsilon(1e-12));
  // untouched elsewhere
  CHECK(refined.samples[79].voltage_V == t.samples[79].voltage_V);
  CHECK(refined.samples[81].voltage_V == t.samples[81].voltage_V);
}

TEST_CASE("refinement repairs the DVA curve near a spike") {
  // a spike just past the 8 mV grid step breaks local ordering (so the
  // median filter sees it) and shrinks one voltage delta to 2 mV, blowing up
  // the raw dq/dv at the plateau; refinement undoes it
  const auto clean = clean_trace();
  const auto spiked = synth::inject_anomaly(clean, synth::AnomalyKind::spike, 0.010, 90);
  const auto report = detect_anomalies(spiked);
  REQUIRE(flags_index(report, 90));
  const auto refined = feedback_refine(report, spiked);

  auto peak_mag = [](const DischargeTrace& t) {
    double peak = 0.0;
    for (const auto& p : dva::compute_dva(t, 1).points)
      peak = std::max(peak, std::abs(p.dq_dv_mAh_per_V));
    return peak;
  };
  const double clean_peak = peak_mag(clean);
  CHECK(std::abs(peak_mag(refined) - clean_peak) < std::abs(peak_mag(spiked) - clean_peak));
}

TEST_CASE("re-detection after refinement drops the old flags") {
  const auto noisy = with_voltage_noise(clean_trace(), 0.01, 77);
  const auto spiked = synth::inject_anomaly(noisy, synth::AnomalyKind::spike, 0.12, 120);
  const auto report = detect_anomalies(spiked);
  REQUIRE(!report.flagged.empty());
  const auto refined = feedback_refine(report, spiked);
  const auto second = detect_anomalies(refined, nullptr, report.threshold_z);
  for (const auto& f : report.flagged) CHECK(!flags_index(second, f.sample_index));
}

TEST_CASE("refinement needs at least one unflagged sample") {
  auto t = clean_trace();
  AnomalyReport report;
  report.cell_id = t.cell_id;
  report.cycle_index = t.cycle_index;
  for (std::size_t i = 0; i < t.samples.size(); ++i) report.flagged.push_back({i, 0.0, 9.0});
  CHECK_THROWS_AS(feedback_refine(report, t), AllFlaggedError);

  AnomalyReport mismatched;
  mismatched.cell_id = "other";
  mismatched.cycle_index = t.cycle_index;
  CHECK_THROWS_AS(feedback_refine(mismatched, t), ArgumentError);
}
