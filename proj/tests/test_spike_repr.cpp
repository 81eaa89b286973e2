#include <doctest.h>

#include <cmath>

#include "sevpr/errors.hpp"
#include "sevpr/spike_repr.hpp"
#include "testutil.hpp"

using namespace sevpr;
using testutil::make_volume;

TEST_CASE("normalize_timestamp endpoints and midpoint") {
  CHECK(repr::normalize_timestamp(100, 100, 500, 4) == 0.0);
  CHECK(repr::normalize_timestamp(500, 100, 500, 4) == 3.0);
  CHECK(repr::normalize_timestamp(300, 100, 500, 4) == doctest::Approx(1.5));
  // Degenerate volume: everything maps to 0.
  CHECK(repr::normalize_timestamp(100, 100, 100, 4) == 0.0);
}

TEST_CASE("mcs: empty volume gives an all-zero tensor with flag") {
  auto vol = make_volume({}, 0, 250000, 8, 8);
  repr::ReprFlags flags;
  SpikeTensor s = repr::build_mcs_tensor_with_kernel(
      vol, 4, [](double, int) { return true; }, &flags);
  CHECK(flags.empty);
  CHECK(s.count_ones() == 0);
  CHECK(s.t == 4);
  CHECK(s.c == 2);
  CHECK(s.h == 8);
  CHECK(s.w == 8);
}

TEST_CASE("mcs: nearest-integer stub kernel deposits exactly one spike") {
  // Two events pin the normalization; the probe event at t=180000 has
  // t* = 3 * 180000/250000 = 2.16, nearest integer step 2.
  std::vector<Event> ev{
      Event{0, 0, 0, 1},
      Event{180000, 5, 3, 1},
      Event{250000, 7, 7, 1},
  };
  auto vol = make_volume(ev, 0, 260000, 8, 8);
  auto nearest = [](double off, int) { return off > -0.5 && off <= 0.5; };
  SpikeTensor s = repr::build_mcs_tensor_with_kernel(vol, 4, nearest);
  // Probe event: single deposit at (2, ch 0, y=3, x=5).
  CHECK(s.at(2, 0, 3, 5) == 1);
  // Fence events deposit at steps 0 and 3.
  CHECK(s.at(0, 0, 0, 0) == 1);
  CHECK(s.at(3, 0, 7, 7) == 1);
  CHECK(s.count_ones() == 3);
}

TEST_CASE("mcs binarization is idempotent for duplicate events") {
  std::vector<Event> ev{
      Event{0, 1, 1, 1},
      Event{100, 4, 4, -1},
      Event{100, 4, 4, -1},
      Event{200, 2, 2, 1},
  };
  auto vol1 = make_volume(ev, 0, 1000, 8, 8);
  std::vector<Event> dedup{ev[0], ev[1], ev[3]};
  auto vol2 = make_volume(dedup, 0, 1000, 8, 8);
  auto k = [](double off, int) { return std::abs(off) <= 1.0; };
  SpikeTensor a = repr::build_mcs_tensor_with_kernel(vol1, 4, k);
  SpikeTensor b = repr::build_mcs_tensor_with_kernel(vol2, 4, k);
  CHECK(a.data == b.data);
}

TEST_CASE("mcs binarization is monotone under added events") {
  auto base = testutil::random_volume(21, 40, 16, 16);
  // Keep added events inside the base time range so the per-volume
  // normalization (and hence every existing deposit) is unchanged.
  const std::uint64_t lo = base.events.front().t;
  const std::uint64_t hi = base.events.back().t;
  auto more = base;
  auto extra = testutil::random_volume(22, 25, 16, 16, lo, hi + 1);
  more.events.insert(more.events.end(), extra.events.begin(),
                     extra.events.end());
  std::sort(more.events.begin(), more.events.end(),
            [](const Event& a, const Event& b) { return a.t < b.t; });
  snn::ParamRegistry reg;
  repr::SmlpEncoder enc(16, 4);
  enc.register_params(reg, "smlp");
  reg.init_all(77);
  SpikeTensor a = repr::build_mcs_tensor(base, enc, 4);
  SpikeTensor b = repr::build_mcs_tensor(more, enc, 4);
  REQUIRE(more.events.front().t == lo);
  REQUIRE(more.events.back().t == hi);
  for (std::size_t i = 0; i < a.data.size(); ++i)
    if (a.data[i] == 1) CHECK(b.data[i] == 1);
}

TEST_CASE("mcs spiking tensor is strictly binary and polarity-split") {
  auto vol = testutil::random_volume(33, 60, 12, 12);
  snn::ParamRegistry reg;
  repr::SmlpEncoder enc(8, 4);
  enc.register_params(reg, "smlp");
  reg.init_all(5);
  SpikeTensor s = repr::build_mcs_tensor(vol, enc, 4);
  s.validate("test");
  bool has_pos = false, has_neg = false;
  for (const auto& e : vol.events) (e.p > 0 ? has_pos : has_neg) = true;
  CHECK(has_pos);
  CHECK(has_neg);
}

TEST_CASE("ts_value analytic points") {
  CHECK(repr::ts_value(1000, 1000, 0.05) == 1.0);
  // t_end - t_last = eta -> e^-1.
  CHECK(repr::ts_value(50000, 0, 0.05) ==
        doctest::Approx(std::exp(-1.0)).epsilon(1e-9));
}

TEST_CASE("build_ts_map keeps per-pixel most recent event; empty pixels at 0") {
  std::vector<Event> ev{
      Event{10000, 2, 2, 1},
      Event{40000, 2, 2, 1}, // more recent, same pixel/polarity
      Event{20000, 5, 5, -1},
  };
  auto vol = make_volume(ev, 0, 50000, 8, 8);
  repr::TsMap m = repr::build_ts_map(vol, 0.05);
  CHECK(m.at(0, 2, 2) == doctest::Approx(std::exp(-0.01 / 0.05)));
  CHECK(m.at(1, 5, 5) == doctest::Approx(std::exp(-0.03 / 0.05)));
  CHECK(m.at(0, 5, 5) == 0.0); // wrong polarity channel stays empty
  CHECK(m.at(0, 0, 0) == 0.0);
  for (double v : m.v) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("ts map depends only on per-pixel max timestamp, not event order") {
  auto vol = testutil::random_volume(55, 80, 8, 8);
  auto shuffled = vol;
  std::reverse(shuffled.events.begin(), shuffled.events.end());
  repr::TsMap a = repr::build_ts_map(vol, 0.05);
  repr::TsMap b = repr::build_ts_map(shuffled, 0.05);
  CHECK(a.v == b.v);
}

TEST_CASE("tss sampling honors p=0 and p=1 exactly") {
  repr::TsMap m(2, 2);
  m.at(0, 0, 0) = 0.0;
  m.at(0, 1, 1) = 1.0;
  SpikeTensor s = repr::sample_tss_tensor(m, 16, 9);
  for (int t = 0; t < 16; ++t) {
    CHECK(s.at(t, 0, 0, 0) == 0);
    CHECK(s.at(t, 0, 1, 1) == 1);
  }
  s.validate("tss");
}

TEST_CASE("tss sampling at p=0.5 lands in the binomial interval") {
  repr::TsMap m(1, 1);
  m.at(0, 0, 0) = 0.5;
  SpikeTensor s = repr::sample_tss_tensor(m, 4096, 1234);
  const double rate = double(s.count_ones()) / 4096.0;
  CHECK(rate > 0.45);
  CHECK(rate < 0.55);
}

TEST_CASE("tss sampling is reproducible and traversal-order independent") {
  repr::TsMap m(4, 4);
  for (int c = 0; c < 2; ++c)
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 4; ++x) m.at(c, y, x) = 0.1 + 0.05 * (y + x + c);
  SpikeTensor a = repr::sample_tss_tensor(m, 8, 42);
  SpikeTensor b = repr::sample_tss_tensor(m, 8, 42);
  CHECK(a.data == b.data);
  SpikeTensor c = repr::sample_tss_tensor(m, 8, 43);
  CHECK(a.data != c.data);
}

TEST_CASE("tss empirical rates converge to the map (law of large numbers)") {
  repr::TsMap m(3, 3);
  double val = 0.05;
  for (int c = 0; c < 2; ++c)
    for (int y = 0; y < 3; ++y)
      for (int x = 0; x < 3; ++x) {
        m.at(c, y, x) = val;
        val = val < 0.9 ? val + 0.05 : 0.05;
      }
  // K seeds x T steps >= 10000 draws per pixel.
  const int T = 10, K = 1000;
  std::vector<double> counts(m.v.size(), 0.0);
  for (int k = 0; k < K; ++k) {
    SpikeTensor s = repr::sample_tss_tensor(m, T, 1000 + std::uint64_t(k));
    for (int c = 0; c < 2; ++c)
      for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 3; ++x)
          for (int t = 0; t < T; ++t)
            counts[(std::size_t(c) * 3 + y) * 3 + x] += s.at(t, c, y, x);
  }
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double rate = counts[i] / double(T * K);
    CHECK(std::abs(rate - m.v[i]) <= 0.02);
  }
}

TEST_CASE("sample_tss_tensor rejects out-of-range maps") {
  repr::TsMap m(1, 1);
  m.at(0, 0, 0) = 1.5;
  CHECK_THROWS_AS(repr::sample_tss_tensor(m, 4, 1), numeric_error);
}
