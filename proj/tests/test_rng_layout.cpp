#include <doctest.h>

#include <cmath>
#include <set>

#include "roomloc/errors.hpp"
#include "roomloc/layout.hpp"
#include "roomloc/rng.hpp"

using namespace roomloc;

TEST_CASE("mt19937_64 stream matches the standard's 10000th value") {
  // The standard fixes this value for default seed 5489.
  Rng rng(5489);
  std::uint64_t v = 0;
  for (int i = 0; i < 10000; ++i) v = rng.next_u64();
  CHECK(v == 9981545732273789042ULL);
}

TEST_CASE("uniform draws lie in [0, 1) and have mean near one half") {
  Rng rng(3);
  double sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("normal draws have unit variance") {
  Rng rng(4);
  double s = 0.0, ss = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    s += z;
    ss += z * z;
  }
  CHECK(std::abs(s / n) < 0.01);
  CHECK(ss / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("below is unbiased over a small range") {
  Rng rng(5);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) ++counts[rng.below(7)];
  for (int c : counts) CHECK(std::abs(c - 10000) < 400);
}

TEST_CASE("forked streams are reproducible and distinct") {
  const Rng root(42);
  Rng a1 = root.fork("a");
  Rng a2 = root.fork("a");
  Rng b = root.fork("b");
  const auto x1 = a1.next_u64();
  CHECK(x1 == a2.next_u64());
  CHECK(x1 != b.next_u64());
  CHECK(Rng(42).fork("a").seed() != Rng(43).fork("a").seed());
}

TEST_CASE("fnv1a64 reference values") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("demo layout is valid and connected") {
  const auto h = demo_layout();
  CHECK_NOTHROW(h.validate());
  CHECK(h.room_count() == 5);
  CHECK(h.gateway_count() == 6);
  CHECK(h.connected());
  for (int a = 0; a < 5; ++a)
    for (int b = 0; b < 5; ++b) CHECK(h.adjacent(a, b) == h.adjacent(b, a));
}

TEST_CASE("shortest path walks through adjacent rooms") {
  const auto h = demo_layout();
  const auto p = h.shortest_path(h.room_index("bedroom"), h.room_index("kitchen"));
  REQUIRE(p.size() == 3);
  CHECK(p.front() == 0);
  CHECK(p.back() == 3);
  for (std::size_t i = 1; i < p.size(); ++i) CHECK(h.adjacent(p[i - 1], p[i]));
}

TEST_CASE("layout validation rejects broken houses") {
  auto h = demo_layout();
  h.adjacency = {{0, 2}, {1, 2}, {3, 4}};
  CHECK_THROWS_AS(h.validate(), ValidationError);

  h = demo_layout();
  h.gateway_positions.clear();
  CHECK_THROWS_AS(h.validate(), ValidationError);

  h = demo_layout();
  h.adjacency.emplace_back(0, 9);
  CHECK_THROWS_AS(h.validate(), ValidationError);

  CHECK_THROWS_AS(demo_layout().room_index("attic"), ValidationError);
}
