#include <doctest.h>

#include <cmath>
#include <thread>
#include <vector>

#include "sevpr/parallel.hpp"
#include "sevpr/rng.hpp"

using namespace sevpr;

TEST_CASE("counter rng is a pure function of seed and key") {
  const double a = rng::uniform(42, {1, 2, 3});
  const double b = rng::uniform(42, {1, 2, 3});
  CHECK(a == b);
  CHECK(a >= 0.0);
  CHECK(a < 1.0);
  CHECK(rng::uniform(42, {1, 2, 4}) != a);
  CHECK(rng::uniform(43, {1, 2, 3}) != a);
}

TEST_CASE("stream draws are independent of interleaving") {
  rng::Stream s1(7, 100);
  std::vector<double> first;
  for (int i = 0; i < 8; ++i) first.push_back(s1.unit());

  // Same values reproduced by direct keyed access.
  for (int i = 0; i < 8; ++i)
    CHECK(first[std::size_t(i)] ==
          rng::to_unit(rng::hash(7, {100, std::uint64_t(i)})));
}

TEST_CASE("uniform draws are roughly uniform") {
  int buckets[10] = {0};
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double u = rng::uniform(5, {rng::label("bucket"), std::uint64_t(i)});
    buckets[int(u * 10)]++;
  }
  for (int b : buckets) {
    CHECK(b > n / 10 - 400);
    CHECK(b < n / 10 + 400);
  }
}

TEST_CASE("parallel_for writes each slot exactly once under any thread count") {
  std::vector<int> out(1000, 0);
  for (int threads : {1, 2, 8}) {
    std::fill(out.begin(), out.end(), 0);
    parallel_for(out.size(), threads, [&](std::size_t i) { out[i] = int(i) + 1; });
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == int(i) + 1);
  }
}

TEST_CASE("parallel_for propagates worker exceptions") {
  CHECK_THROWS_AS(
      parallel_for(16, 4,
                   [&](std::size_t i) {
                     if (i == 7) throw std::runtime_error("boom");
                   }),
      std::runtime_error);
}
