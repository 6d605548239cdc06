#include "harfuse/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace harfuse;

TEST_CASE("rng: deterministic and uniform in [0,1)") {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) {
    const double x = a.uniform();
    CHECK(x == b.uniform());
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
  }
}

TEST_CASE("rng: fork depends on id, not on parent draw position") {
  Rng parent(7);
  Rng before = parent.fork(3);
  for (int i = 0; i < 10; ++i) parent.next_u64();
  Rng after = parent.fork(3);
  for (int i = 0; i < 100; ++i) CHECK(before.next_u64() == after.next_u64());

  Rng other = parent.fork(4);
  int equal = 0;
  Rng again = parent.fork(3);
  for (int i = 0; i < 100; ++i)
    if (again.next_u64() == other.next_u64()) ++equal;
  CHECK(equal == 0);
}

TEST_CASE("rng: categorical honors degenerate distributions") {
  Rng rng(1);
  Vector p(2);
  p << 1.0, 0.0;
  for (int i = 0; i < 1000; ++i) CHECK(rng.categorical(p) == 0);
  p << 0.0, 1.0;
  for (int i = 0; i < 1000; ++i) CHECK(rng.categorical(p) == 1);
}

TEST_CASE("rng: categorical frequencies follow the distribution") {
  Rng rng(5);
  Vector p(3);
  p << 0.5, 0.3, 0.2;
  std::vector<long> counts(3, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(rng.categorical(p))];
  for (int k = 0; k < 3; ++k)
    CHECK(std::abs(static_cast<double>(counts[static_cast<std::size_t>(k)]) / n - p[k]) <
          0.01);
}

TEST_CASE("rng: normal moments are roughly standard") {
  Rng rng(11);
  const int n = 100000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sum_sq += x * x;
  }
  const double mean = sum / n;
  const double var = sum_sq / n - mean * mean;
  CHECK(std::abs(mean) < 0.02);
  CHECK(std::abs(var - 1.0) < 0.03);
}
