#include <catch2/catch_amalgamated.hpp>

#include "hbmeta/math.hpp"
#include "hbmeta/rng.hpp"

using namespace hbmeta;
using Catch::Approx;

TEST_CASE("normal cdf matches reference values", "[math]") {
  CHECK(math::ndtr(0.0) == Approx(0.5).epsilon(1e-14));
  CHECK(math::ndtr(-2.0) == Approx(0.022750131948179195).epsilon(1e-13));
  CHECK(math::ndtr(1.3) == Approx(0.9031995154143897).epsilon(1e-13));
  CHECK(math::ndtr(-8.0) == Approx(6.22096057427174e-16).epsilon(1e-12));
  CHECK(math::ndtr(-30.0) == Approx(4.906713927147908e-198).epsilon(1e-10));
}

TEST_CASE("log normal cdf is stable across the whole line", "[math]") {
  CHECK(math::log_ndtr(0.0) == Approx(-0.6931471805599453).epsilon(1e-13));
  CHECK(math::log_ndtr(-2.0) == Approx(-3.7831843336820317).epsilon(1e-12));
  CHECK(math::log_ndtr(-14.5) == Approx(-108.7227881543205).epsilon(1e-10));
  CHECK(math::log_ndtr(-30.0) == Approx(-454.32124395634327).epsilon(1e-10));
  CHECK(math::log_ndtr(5.5) == Approx(-1.8989562646189424e-08).epsilon(1e-9));
  CHECK(math::log_ndtr(9.0) == Approx(-1.1285884059538324e-19).epsilon(1e-8));
}

TEST_CASE("normal quantile: reference values and round trip", "[math]") {
  CHECK(math::ndtr_inverse(0.5) == Approx(0.0).margin(1e-15));
  CHECK(math::ndtr_inverse(0.975) == Approx(1.959963984540054).epsilon(1e-13));
  CHECK(math::ndtr_inverse(0.025) == Approx(-1.9599639845400545).epsilon(1e-13));
  CHECK(math::ndtr_inverse(1e-12) == Approx(-7.034483825301131).epsilon(1e-12));
  CHECK(math::ndtr_inverse(1e-300) == Approx(-37.0470962993612).epsilon(1e-12));
  // Upper-tail z is bounded by what ndtr can represent in a double
  // (1 - p collapses); the lower tail keeps full precision.
  for (double z = -8.0; z <= 5.0; z += 0.37) {
    CHECK(math::ndtr_inverse(math::ndtr(z)) == Approx(z).margin(1e-12));
  }
  for (double z = 5.0; z <= 30.0; z += 1.1) {
    CHECK(math::ndtr_inverse(math::ndtr(-z)) == Approx(-z).margin(1e-12));
  }
  CHECK_THROWS_AS(math::ndtr_inverse(0.0), DomainError);
  CHECK_THROWS_AS(math::ndtr_inverse(1.0), DomainError);
}

TEST_CASE("normal quantile from log probability", "[math]") {
  // agrees with the plain quantile where both work
  for (double p : {1e-10, 1e-3, 0.3, 0.9}) {
    CHECK(math::ndtr_inverse_from_log(std::log(p)) ==
          Approx(math::ndtr_inverse(p)).margin(1e-11));
  }
  // far below double underflow of p itself: check by round trip
  for (double z : {-40.0, -100.0, -500.0}) {
    double lp = math::log_ndtr(z);
    CHECK(math::ndtr_inverse_from_log(lp) == Approx(z).epsilon(1e-10));
  }
}

TEST_CASE("normal hazards", "[math]") {
  CHECK(math::normal_hazard_upper(0.0) == Approx(0.7978845608028654).epsilon(1e-12));
  CHECK(math::normal_hazard_upper(-5.0) == Approx(1.486719940904906e-06).epsilon(1e-11));
  CHECK(math::normal_hazard_upper(3.0) == Approx(3.28309865493044).epsilon(1e-12));
  CHECK(math::normal_hazard_upper(25.0) == Approx(25.039873012057562).epsilon(1e-11));
  CHECK(math::normal_hazard_lower(0.0) == Approx(0.7978845608028654).epsilon(1e-12));
  CHECK(math::normal_hazard_lower(-3.0) == Approx(3.28309865493044).epsilon(1e-12));
}

TEST_CASE("digamma", "[math]") {
  CHECK(math::digamma(1.0) == Approx(-0.5772156649015329).epsilon(1e-12));
  CHECK(math::digamma(0.1) == Approx(-10.423754940411076).epsilon(1e-12));
  CHECK(math::digamma(2.5) == Approx(0.7031566406452432).epsilon(1e-12));
  CHECK(math::digamma(12.0) == Approx(2.4426616799758123).epsilon(1e-12));
  CHECK(math::digamma(37.0) == Approx(3.597343531893106).epsilon(1e-12));
}

TEST_CASE("chi-square upper tail", "[math]") {
  CHECK(math::chi_square_upper_tail(3.841, 1) == Approx(0.050013683763956804).epsilon(1e-10));
  CHECK(math::chi_square_upper_tail(16.81, 6) == Approx(0.01000748091256461).epsilon(1e-10));
  CHECK(math::chi_square_upper_tail(100.0, 1) == Approx(1.5239706048320995e-23).epsilon(1e-9));
  CHECK(math::chi_square_upper_tail(0.0, 4) == 1.0);
  CHECK(math::chi_square_upper_tail(0.0, 0) == 1.0);
  CHECK(math::chi_square_upper_tail(2.0, 0) == 0.0);
}

TEST_CASE("lchoose", "[math]") {
  CHECK(math::lchoose(10, 3) == Approx(4.787491742782046).epsilon(1e-13));
  CHECK(math::lchoose(5, 0) == Approx(0.0).margin(1e-13));
  CHECK_THROWS_AS(math::lchoose(4, 5), DomainError);
}

TEST_CASE("sigmoid and logit are inverse", "[math]") {
  for (double x : {-30.0, -3.0, 0.0, 0.5, 10.0}) {
    CHECK(math::logit(math::sigmoid(x)) == Approx(x).margin(1e-10));
  }
  CHECK(math::sigmoid(0.0) == 0.5);
}

TEST_CASE("rng streams are deterministic and distinct", "[math]") {
  Rng a(42), b(42), c(43);
  for (int i = 0; i < 8; ++i) {
    double av = a.uniform01();
    CHECK(av == b.uniform01());
    CHECK(av != c.uniform01());
  }
  Rng s1 = Rng::stream(7, 0), s2 = Rng::stream(7, 1);
  CHECK(s1.uniform01() != s2.uniform01());
}

TEST_CASE("rng normal moments", "[math]") {
  Rng r(2024);
  int n = 200000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    double z = r.normal();
    sum += z;
    sum2 += z * z;
  }
  CHECK(sum / n == Approx(0.0).margin(0.01));
  CHECK(sum2 / n == Approx(1.0).margin(0.02));
}

TEST_CASE("rng gamma and binomial moments", "[math]") {
  Rng r(99);
  int n = 100000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += r.gamma(3.5);
  CHECK(sum / n == Approx(3.5).margin(0.05));
  sum = 0.0;
  for (int i = 0; i < n; ++i) sum += double(r.binomial(40, 0.25));
  CHECK(sum / n == Approx(10.0).margin(0.05));
}
