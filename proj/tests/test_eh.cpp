#include "aris/eh.hpp"

#include <doctest.h>

using aris::EhModel;

namespace {
EhModel paper_model() { return EhModel(2.463, 1.635, 0.826); }
}

TEST_CASE("EH construction rejects bad parameters") {
  CHECK_THROWS_AS(EhModel(-1.0, 1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(EhModel(1.0, 0.0, 1.0), std::invalid_argument);
  // a <= b/c leaves the inverse undefined
  CHECK_THROWS_AS(EhModel(1.0, 2.0, 1.0), std::invalid_argument);
}

TEST_CASE("harvest: anchor values") {
  EhModel m = paper_model();
  CHECK(m.harvest(0.0) == doctest::Approx(0.0).epsilon(1e-15));
  // high-precision evaluation of the closed form
  CHECK(m.harvest(1.0) == doctest::Approx(0.264830839978890).epsilon(1e-12));
  CHECK(m.saturation() == doctest::Approx(0.483581113801453).epsilon(1e-12));
  // saturation is approached but never reached
  CHECK(m.harvest(1e9) < m.saturation());
  CHECK(m.harvest(1e9) == doctest::Approx(m.saturation()).epsilon(1e-8));
  CHECK_THROWS_AS(m.harvest(-0.1), std::domain_error);
}

TEST_CASE("required_input: anchor values and errors") {
  EhModel m = paper_model();
  CHECK(m.required_input(0.0) == 0.0);
  // e = -20 dBm = 0.01 mW
  CHECK(m.required_input(0.01) == doctest::Approx(0.0174415739126433).epsilon(1e-12));
  CHECK_THROWS_AS(m.required_input(m.saturation()), std::domain_error);
  CHECK_THROWS_AS(m.required_input(-1e-3), std::domain_error);
}

TEST_CASE("harvest/required_input round trip") {
  EhModel m = paper_model();
  for (double x : {0.05, 0.1, 0.3})
    CHECK(m.harvest(m.required_input(x)) == doctest::Approx(x).epsilon(1e-12));

  const int grid = 1000;
  const double hi = 0.999 * m.saturation();
  for (int i = 0; i <= grid; ++i) {
    const double e = hi * i / grid;
    const double err = std::abs(m.harvest(m.required_input(e)) - e);
    REQUIRE(err <= 1e-10 * std::max(e, 1.0));
  }
}

TEST_CASE("harvest is strictly increasing and saturates") {
  EhModel m = paper_model();
  double prev = -1.0;
  for (int i = 0; i <= 200; ++i) {
    const double x = 0.05 * i;
    const double y = m.harvest(x);
    CHECK(y > prev);
    CHECK(y < m.saturation());
    prev = y;
  }
}
