#include "neurowave/error.hpp"
#include "neurowave/signal.hpp"

#include "doctest.h"
#include "test_support.hpp"

using namespace neurowave;
using testing::make_recording;
using testing::row;
using testing::rms;
using testing::sine;

namespace {

LabelTrack baseline_only(double start, double end, double total) {
  LabelTrack t{{{start, end, Tag::baseline}}};
  if (total > end) t.intervals.push_back({end, total, Tag::real});
  return t;
}

// Brute-force label for a window [t0, t1): nullopt when dropped.
std::optional<Label> oracle_label(const LabelTrack& track, double t0, double t1) {
  double real = 0.0, fake = 0.0;
  for (const auto& iv : track.intervals) {
    const double ov = std::min(t1, iv.end_s) - std::max(t0, iv.start_s);
    if (ov <= 0.0) continue;
    if (iv.tag == Tag::silence || iv.tag == Tag::baseline) return std::nullopt;
    (iv.tag == Tag::real ? real : fake) += ov;
  }
  return fake >= real ? Label::fake : Label::real;
}

}  // namespace

TEST_CASE("baseline correction examples") {
  SUBCASE("constant channel becomes zero") {
    const Recording rec = make_recording({std::vector<double>(1000, 5.0)}, 10.0);
    const Recording out = baseline_correct(rec, baseline_only(0, 60, 100));
    CHECK(out.data.cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("offset removed, sine preserved over whole periods") {
    const double fs = 100.0;
    auto x = sine(1000, 2.0, fs);
    for (double& v : x) v += 2.0;
    const Recording out = baseline_correct(make_recording({x}, fs), baseline_only(0, 5, 10));
    const auto ref = sine(1000, 2.0, fs);
    for (std::size_t i = 0; i < ref.size(); ++i) CHECK(out.data(0, static_cast<Eigen::Index>(i)) == doctest::Approx(ref[i]).epsilon(1e-9));
  }
  SUBCASE("channels are corrected independently") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> normal;
    std::vector<double> a(500), b(500);
    for (std::size_t i = 0; i < 500; ++i) {
      a[i] = 1.0 + normal(rng);
      b[i] = -3.0 + normal(rng);
    }
    const Recording rec = make_recording({a, b}, 50.0);
    const Recording out = baseline_correct(rec, baseline_only(0, 4, 10));
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < 200; ++i) {
      ma += a[i];
      mb += b[i];
    }
    CHECK(out.data(0, 10) == doctest::Approx(a[10] - ma / 200).epsilon(1e-12));
    CHECK(out.data(1, 10) == doctest::Approx(b[10] - mb / 200).epsilon(1e-12));
  }
  SUBCASE("baseline mean is zero afterwards and correction is idempotent") {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> normal(7.0, 3.0);
    std::vector<double> a(800);
    for (double& v : a) v = normal(rng);
    const Recording rec = make_recording({a}, 100.0, 1.0);
    const LabelTrack track{{{1.5, 4.0, Tag::baseline}, {4.0, 9.0, Tag::real}}};
    const Recording once = baseline_correct(rec, track);
    CHECK(std::abs(once.data.block(0, 50, 1, 250).mean()) < 1e-9 * rms(a));
    const Recording twice = baseline_correct(once, track);
    CHECK((twice.data - once.data).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("missing or out-of-range baseline") {
    const Recording rec = make_recording({std::vector<double>(100, 1.0)}, 10.0);
    CHECK_THROWS_AS(baseline_correct(rec, LabelTrack{{{0, 5, Tag::real}}}), InputError);
    CHECK_THROWS_WITH_AS(baseline_correct(rec, baseline_only(20, 30, 40)), doctest::Contains("no baseline"), InputError);
  }
}

TEST_CASE("bandpass examples") {
  const double fs = 5000.0;
  const std::size_t n = 5 * 5000;
  const std::size_t edge = 5000;
  SUBCASE("10 Hz passes") {
    const Recording out = bandpass_filter(make_recording({sine(n, 10.0, fs)}, fs), 0.5, 80.0);
    const double amp = rms(row(out, 0), edge, edge) * std::sqrt(2.0);
    CHECK(amp >= 0.95);
    CHECK(amp <= 1.05);
  }
  SUBCASE("500 Hz is stopped") {
    const Recording out = bandpass_filter(make_recording({sine(n, 500.0, fs)}, fs), 0.5, 80.0);
    CHECK(rms(row(out, 0), edge, edge) < 0.05);
  }
  SUBCASE("slow drift ramp is removed") {
    const std::size_t m = 60 * 5000;
    std::vector<double> ramp(m);
    for (std::size_t i = 0; i < m; ++i) ramp[i] = std::sin(2.0 * std::numbers::pi * 0.01 * static_cast<double>(i) / fs);
    const Recording out = bandpass_filter(make_recording({ramp}, fs), 0.5, 80.0);
    CHECK(rms(row(out, 0)) < 0.1 * rms(ramp));
  }
  SUBCASE("invalid edges") {
    const Recording rec = make_recording({sine(1000, 10.0, 100.0)}, 100.0);
    CHECK_THROWS_AS(bandpass_filter(rec, 0.0, 10.0), InputError);
    CHECK_THROWS_AS(bandpass_filter(rec, 20.0, 10.0), InputError);
    CHECK_THROWS_AS(bandpass_filter(rec, 1.0, 50.0), InputError);
  }
}

TEST_CASE("bandpass is linear") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> normal;
  std::vector<double> x(4000), y(4000), z(4000);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = normal(rng);
    y[i] = normal(rng);
    z[i] = 2.5 * x[i] - 0.75 * y[i];
  }
  const Recording out = bandpass_filter(make_recording({x, y, z}, 500.0), 0.5, 80.0);
  const Eigen::RowVectorXd combo = 2.5 * out.data.row(0) - 0.75 * out.data.row(1);
  CHECK((combo - out.data.row(2)).norm() <= 1e-9 * out.data.row(2).norm());
}

TEST_CASE("common average reference") {
  const Recording two = rereference_common_average(make_recording({{3.0}, {1.0}}, 1.0));
  CHECK(two.data(0, 0) == 1.0);
  CHECK(two.data(1, 0) == -1.0);

  const Recording same = rereference_common_average(make_recording({{1, 2, 3}, {1, 2, 3}}, 1.0));
  CHECK(same.data.cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(rereference_common_average(make_recording({{1, 2}}, 1.0)), InputError);

  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal(0.0, 50.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::vector<double>> chans(2 + trial % 7, std::vector<double>(64));
    for (auto& c : chans)
      for (double& v : c) v = normal(rng);
    const Recording once = rereference_common_average(make_recording(chans, 100.0));
    CHECK(once.data.colwise().sum().cwiseAbs().maxCoeff() < 1e-9);
    const Recording twice = rereference_common_average(once);
    CHECK((twice.data - once.data).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("mastoid reference") {
  Recording rec = make_recording({{5.0}, {2.0}, {2.0}}, 1.0);
  rec.channel_names = {"Cz", "TP9", "TP10"};
  CHECK(rereference_mastoid(rec, "TP9", "TP10").data(0, 0) == 3.0);

  rec.data << 2.0, 1.0, 3.0;
  CHECK(rereference_mastoid(rec, "TP9", "TP10").data(0, 0) == 0.0);

  rec.data << 4.5, 0.0, 0.0;
  const Recording id = rereference_mastoid(rec, "TP9", "TP10");
  CHECK(id.data == rec.data);

  CHECK_THROWS_AS(rereference_mastoid(rec, "M1", "TP10"), InputError);
}

TEST_CASE("resample examples") {
  const Recording one_second = resample(make_recording({std::vector<double>(5000, 0.0)}, 5000.0), 256.0);
  CHECK(one_second.samples() == 256);
  CHECK(one_second.sample_rate_hz == 256.0);

  const Recording tone = resample(make_recording({sine(5 * 5000, 10.0, 5000.0)}, 5000.0), 256.0);
  const auto ref = sine(5 * 256, 10.0, 256.0);
  const auto got = row(tone, 0);
  REQUIRE(got.size() == ref.size());
  for (std::size_t i = 128; i + 128 < ref.size(); ++i) CHECK(std::abs(got[i] - ref[i]) < 0.02);

  const Recording alias = resample(make_recording({sine(5 * 5000, 200.0, 5000.0)}, 5000.0), 256.0);
  CHECK(rms(row(alias, 0), 128, 128) < 0.05);

  CHECK_THROWS_AS(resample(make_recording({{1, 2, 3}}, 5000.0), 0.0), InputError);
  CHECK_THROWS_AS(resample(make_recording({{1, 2, 3}}, 5000.0), 5000.0 / std::numbers::pi), InputError);
}

TEST_CASE("segment counts") {
  auto rec_of = [](std::size_t n) { return make_recording({std::vector<double>(n, 1.0), std::vector<double>(n, 2.0)}, 256.0); };
  const EpochSet s = segment(rec_of(2560), 0.5, 0.5);
  CHECK(s.size() == 39);
  CHECK(s.epochs[0].window.rows() == 128);
  CHECK(s.epochs[0].window.cols() == 2);
  CHECK(s.epochs[1].origin_time_s == doctest::Approx(0.25));
  CHECK(segment(rec_of(128), 0.5, 0.5).size() == 1);
  CHECK(segment(rec_of(127), 0.5, 0.5).size() == 0);

  const auto g = window_geometry(0.5, 0.5, 256.0);
  CHECK(g.length == 128);
  CHECK(g.hop == 64);
  CHECK_THROWS_AS(window_geometry(0.5, 0.5, 255.0), InputError);
  CHECK_THROWS_AS(window_geometry(0.5, 1.0, 256.0), InputError);

  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t L = 1 + rng() % 64, hop = 1 + rng() % 64, n = rng() % 2000;
    const std::size_t expected = n < L ? 0 : (n - L) / hop + 1;
    CHECK(segment_count(n, L, hop) == expected);
  }
}

TEST_CASE("segment copies channel data into L x d windows") {
  std::vector<double> a(20), b(20);
  for (int i = 0; i < 20; ++i) {
    a[i] = i;
    b[i] = -i;
  }
  const EpochSet s = segment(make_recording({a, b}, 8.0), 0.5, 0.5);
  REQUIRE(s.size() == 9);
  CHECK(s.epochs[2].window(1, 0) == 5.0f);
  CHECK(s.epochs[2].window(1, 1) == -5.0f);
}

TEST_CASE("label_epochs rules") {
  const LabelTrack track{{{0, 1, Tag::baseline}, {1, 2.75, Tag::real}, {2.75, 4, Tag::fake}, {4, 4.5, Tag::silence},
                          {4.5, 6, Tag::real}}};
  EpochSet set;
  set.window_s = 1.0;
  set.sample_rate_hz = 4.0;
  auto add = [&](double t0) {
    Epoch e;
    e.window = WindowMatrix::Zero(4, 1);
    e.origin_time_s = t0;
    set.epochs.push_back(e);
  };
  add(0.5);   // touches baseline
  add(1.0);   // real
  add(2.0);   // 75% real / 25% fake
  add(2.9);   // fully fake
  add(3.5);   // touches silence
  add(4.5);   // real
  const EpochSet out = label_epochs(set, track);
  REQUIRE(out.size() == 4);
  CHECK(out.epochs[0].label == Label::real);
  CHECK(out.epochs[1].label == Label::real);
  CHECK(out.epochs[2].label == Label::fake);
  CHECK(out.epochs[3].label == Label::real);
  CHECK(out.epochs[3].origin_time_s == 4.5);

  SUBCASE("exact tie goes to fake") {
    EpochSet tie = set;
    tie.epochs = {set.epochs[0]};
    tie.epochs[0].origin_time_s = 2.25;
    CHECK(label_epochs(tie, track).epochs.at(0).label == Label::fake);
  }
  SUBCASE("uncovered span is an error") {
    EpochSet late = set;
    late.epochs = {set.epochs[0]};
    late.epochs[0].origin_time_s = 5.5;
    CHECK_THROWS_WITH_AS(label_epochs(late, track), doctest::Contains("unlabeled region"), DataError);
  }
}

TEST_CASE("label_epochs agrees with a brute-force oracle on random tracks") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> len(0.1, 3.0);
  const Tag stim[] = {Tag::real, Tag::fake, Tag::silence};
  for (int trial = 0; trial < 100; ++trial) {
    LabelTrack track;
    double t = 0.0;
    track.intervals.push_back({0.0, t = len(rng), Tag::baseline});
    while (t < 30.0) {
      const double next = t + len(rng);
      track.intervals.push_back({t, next, stim[rng() % 3]});
      t = next;
    }
    EpochSet set;
    set.window_s = 0.5;
    set.sample_rate_hz = 16.0;
    for (double o = 0.0; o + 0.5 <= 30.0; o += 0.25) {
      Epoch e;
      e.window = WindowMatrix::Zero(8, 1);
      e.origin_time_s = o;
      set.epochs.push_back(e);
    }
    const EpochSet out = label_epochs(set, track);
    std::size_t k = 0;
    for (const auto& e : set.epochs) {
      const auto expected = oracle_label(track, e.origin_time_s, e.origin_time_s + 0.5);
      if (!expected) continue;
      REQUIRE(k < out.size());
      CHECK(out.epochs[k].origin_time_s == e.origin_time_s);
      CHECK(out.epochs[k].label == *expected);
      ++k;
    }
    CHECK(k == out.size());
  }
}
