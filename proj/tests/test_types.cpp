#include <doctest.h>

#include "helpers.hpp"
#include "wfcm/types.hpp"

using namespace wfcm;
using testing::make_params;

TEST_CASE("model params reject invalid values") {
  RowMatrix v(2, 1);
  v << 0.0, 1.0;
  Vector w(2);
  w << 0.5, 0.5;
  CHECK_NOTHROW(ModelParams(1.0, v, w, 2.0));
  CHECK_THROWS_AS(ModelParams(0.0, v, w, 2.0), Error);
  CHECK_THROWS_AS(ModelParams(1.0, v, w, 1.0), Error);
  Vector bad(2);
  bad << 0.6, 0.5;
  CHECK_THROWS_AS(ModelParams(1.0, v, bad, 2.0), Error);
  bad << 1.0 - 1e-7, 1e-7;
  CHECK_THROWS_AS(ModelParams(1.0, v, bad, 2.0), Error);
  RowMatrix nan_v = v;
  nan_v(1, 0) = std::nan("");
  CHECK_THROWS_AS(ModelParams(1.0, nan_v, w, 2.0), Error);
}

TEST_CASE("permutation moves centers and weights together") {
  const auto p = make_params(1.0, {{0, 0}, {1, 1}, {2, 2}}, {0.2, 0.3, 0.5}, 2.0);
  const std::vector<int> perm{2, 0, 1};
  const auto q = p.permuted(perm);
  for (int j = 0; j < 3; ++j) {
    CHECK(q.centers().row(j) == p.centers().row(perm[j]));
    CHECK(q.weights()[j] == p.weights()[perm[j]]);
  }
  const std::vector<int> dup{0, 0, 1};
  CHECK_THROWS_AS(p.permuted(dup), Error);
}

TEST_CASE("param bounds validation") {
  ParamBounds b;
  CHECK_NOTHROW(b.validate(3));
  b.eps_w = 0.4;
  CHECK_THROWS_AS(b.validate(3), Error);
  b = ParamBounds{};
  b.sigma_min = 2e4;
  CHECK_THROWS_AS(b.validate(2), Error);
  b = ParamBounds{};
  b.m_min = 1.0;
  CHECK_THROWS_AS(b.validate(2), Error);
}

TEST_CASE("dataset and memberships validate their invariants") {
  RowMatrix x(2, 2);
  x << 1, 2, 3, std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(Dataset{x}, Error);
  RowMatrix u(2, 2);
  u << 0.5, 0.5, 0.9, 0.2;
  CHECK_THROWS_AS(MembershipMatrix{u}, Error);
  u << 0.3, 0.7, 1.0, 0.0;
  const MembershipMatrix ok(u);
  CHECK(ok.hard_labels() == std::vector<int>{1, 0});
}

TEST_CASE("inflated bounding box pads each side by a quarter of the range") {
  const auto data = testing::make_data({{0, 5}, {4, 5}});
  const auto box = inflated_bounding_box(data);
  CHECK(box[0].lo == doctest::Approx(-1.0));
  CHECK(box[0].hi == doctest::Approx(5.0));
  // Zero range falls back to a unit pad.
  CHECK(box[1].lo == doctest::Approx(4.0));
  CHECK(box[1].hi == doctest::Approx(6.0));
}
