#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "qclimit/errors.hpp"
#include "qclimit/poincare.hpp"

using namespace qcl;

namespace {

const ReducedParams kFree = ReducedParams::cyclic({1.3, 1.0, 0.8}, 0.0, SaturationFunction::exponential());
const ReducedParams kRing = ReducedParams::cyclic({1.0, 1.0, 1.0}, 0.6, SaturationFunction::exponential());

IntegratorConfig tight(double t_end) {
  IntegratorConfig c;
  c.rel_tol = c.abs_tol = 1e-12;
  c.t_end = t_end;
  return c;
}

}  // namespace

TEST_SUITE("poincare") {
  TEST_CASE("names") {
    CHECK(coord_from_name("y2") == Coord::Y2);
    CHECK(to_string(Coord::X1) == "x1");
    CHECK(direction_from_name("+") == Direction::Up);
    CHECK(direction_from_name("both") == Direction::Both);
    CHECK(to_string(Direction::Down) == "-");
    CHECK(to_string(Shape::CurveLike) == "curve-like");
    CHECK_THROWS_AS(coord_from_name("z"), ValidationError);
    CHECK_THROWS_AS(direction_from_name("sideways"), ValidationError);
    SectionSpec s;
    s.projection = {Coord::X2, Coord::Y1};
    CHECK_THROWS_AS(s.validate(), ValidationError);
  }

  TEST_CASE("uncoupled rotation: crossing times and circular section") {
    const ReducedState s0{0.5, 0.2, -0.1, 0.6, 1.5};
    const double E = reduced_hamiltonian(s0, kFree);
    const auto res = section({s0}, SectionSpec{}, E, kFree, tight(100.0));
    REQUIRE_FALSE(res.partial);
    // z = x1 + i x2 turns as exp(-i w tau), w = 0.6; upward crossings at arg z = pi
    const double w = 0.6, phi0 = std::atan2(s0.x2, s0.x1);
    const double m = s0.m();
    const auto expected = static_cast<std::size_t>((100.0 * w - phi0 - std::numbers::pi) / (2 * std::numbers::pi)) + 1;
    REQUIRE(expected == 9);
    REQUIRE(res.records.size() == expected);
    for (std::size_t k = 0; k < res.records.size(); ++k) {
      const auto& r = res.records[k];
      const double tk = (phi0 + std::numbers::pi + 2 * std::numbers::pi * k) / w;
      CHECK(r.t == doctest::Approx(tk).epsilon(1e-9));
      CHECK(std::abs(r.state[1]) < kCrossingTolerance);
      CHECK(r.state[0] < 0.0);
      CHECK(r.direction == 1);
      CHECK(r.p * r.p + r.q * r.q == doctest::Approx(m).epsilon(1e-9));
      CHECK(std::abs(r.energy - E) < 1e-8);
      CHECK(r.p == r.state[2]);
      CHECK(r.q == r.state[3]);
    }
  }

  TEST_CASE("crossing directions") {
    const ReducedState s0{0.5, 0.2, -0.1, 0.6, 1.5};
    const double E = reduced_hamiltonian(s0, kFree);
    SectionSpec spec;
    spec.direction = Direction::Both;
    const auto both = section({s0}, spec, E, kFree, tight(60.0));
    REQUIRE(both.records.size() >= 4);
    for (std::size_t k = 1; k < both.records.size(); ++k)
      CHECK(both.records[k].direction == -both.records[k - 1].direction);
    spec.direction = Direction::Down;
    for (const auto& r : section({s0}, spec, E, kFree, tight(60.0)).records) {
      CHECK(r.direction == -1);
      CHECK(r.state[0] > 0.0);
    }
    spec.max_records = 2;
    CHECK(section({s0}, spec, E, kFree, tight(60.0)).records.size() == 2);
  }

  TEST_CASE("section rejects bad initial states") {
    const ReducedState s0{0.5, 0.2, -0.1, 0.6, 1.5};
    const double E = reduced_hamiltonian(s0, kFree);
    try {
      section({s0}, SectionSpec{}, E + 1e-6, kFree, tight(1.0));
      FAIL("off-shell state accepted");
    } catch (const ValidationError& e) {
      CHECK(e.code() == "E_OFF_SHELL");
    }
    CHECK_THROWS_AS(section({ReducedState{1.0, 0.0, 1.0, 0.0, 1.0}}, SectionSpec{}, E, kFree, tight(1.0)),
                    ValidationError);
  }

  TEST_CASE("section output does not depend on the worker count") {
    const auto init = scan_on_shell(kRing, 3.0, 3.14, 6, 5);
    const auto a = section(init, SectionSpec{}, 3.14, kRing, tight(200.0), 1);
    const auto b = section(init, SectionSpec{}, 3.14, kRing, tight(200.0), 3);
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
      CHECK(a.records[i].trajectory_id == b.records[i].trajectory_id);
      CHECK(a.records[i].t == b.records[i].t);
      CHECK(a.records[i].p == b.records[i].p);
    }
    for (std::size_t i = 1; i < a.records.size(); ++i) {
      const auto &x = a.records[i - 1], &y = a.records[i];
      CHECK((x.trajectory_id < y.trajectory_id || (x.trajectory_id == y.trajectory_id && x.t < y.t)));
    }
  }

  TEST_CASE("shell projection") {
    // already on the shell: unchanged
    const ReducedState s0{0.5, 0.2, -0.1, 0.6, 1.5};
    const double E0 = reduced_hamiltonian(s0, kFree);
    const auto same = shell_project(s0, E0, kFree, Coord::X1);
    CHECK(same.x1 == s0.x1);

    // uncoupled: H = 0.3 n - 0.2 m + N, so x1 has a closed form
    const double E = E0 + 0.01;
    const auto moved = shell_project(s0, E, kFree, Coord::X1);
    const double x1 = std::sqrt((E - s0.N + 0.2 * s0.m()) / 0.3 - s0.x2 * s0.x2);
    CHECK(moved.x1 == doctest::Approx(x1).epsilon(1e-10));
    CHECK(moved.x2 == s0.x2);
    CHECK(std::abs(reduced_hamiltonian(moved, kFree) - E) < 1e-11);

    // on the coupled ring
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-0.8, 0.8);
    int found = 0;
    for (int t = 0; t < 30; ++t) {
      const ReducedState s{u(rng), u(rng), u(rng), u(rng), 3.0};
      try {
        const auto p = shell_project(s, 3.14, kRing, Coord::Y2);
        CHECK(std::abs(reduced_hamiltonian(p, kRing) - 3.14) < 1e-11);
        CHECK(p.x1 == s.x1);
        ++found;
      } catch (const NoRootError&) {
      }
    }
    CHECK(found > 5);
    CHECK_THROWS_AS(shell_project(s0, 100.0, kFree, Coord::X1), NoRootError);
  }

  TEST_CASE("on-shell scan") {
    const auto a = scan_on_shell(kRing, 3.0, 3.14, 20, 11);
    const auto b = scan_on_shell(kRing, 3.0, 3.14, 20, 11);
    REQUIRE(a.size() == 20);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(std::abs(reduced_hamiltonian(a[i], kRing) - 3.14) < 1e-11);
      CHECK(a[i].n2() > 0.0);
      CHECK(a[i].x1 == b[i].x1);
    }
    CHECK(scan_on_shell(kRing, 3.0, 3.14, 20, 12)[0].x1 != a[0].x1);
    CHECK_THROWS_AS(scan_on_shell(kRing, 3.0, -50.0, 1, 1, Coord::X1, 50), SamplingError);
  }

  TEST_CASE("shell slice") {
    ShellSliceSpec spec;
    spec.N = 1.5;
    spec.fixed = Coord::Y1;
    spec.fixed_value = 0.0;
    const double R = std::sqrt(1.5);
    for (auto& a : spec.axes) a = {-R, R, 21};
    CHECK(spec.free_coords() == std::array<Coord, 3>{Coord::X1, Coord::X2, Coord::Y2});

    SUBCASE("below the spectrum nothing is returned") {
      spec.E = -10.0;
      CHECK(shell_slice(spec, kFree).empty());
    }
    SUBCASE("a huge band keeps every admissible grid point") {
      spec.E = 1.5;
      spec.delta = 100.0;
      const auto pts = shell_slice(spec, kFree);
      std::size_t inside = 0;
      const double h = 2 * R / 20;
      for (int i = 0; i < 21; ++i)
        for (int j = 0; j < 21; ++j)
          for (int k = 0; k < 21; ++k) {
            const double a = -R + i * h, b = -R + j * h, c = -R + k * h;
            if (a * a + b * b + c * c <= 1.5) ++inside;
          }
      CHECK(pts.size() == inside);
    }
    SUBCASE("band points really are in the band") {
      spec.E = reduced_hamiltonian(ReducedState{0.5, 0.2, 0.0, 0.6, 1.5}, kFree);
      spec.delta = 0.02;
      const auto pts = shell_slice(spec, kFree);
      CHECK_FALSE(pts.empty());
      bool any_sign = false;
      for (const auto& p : pts) {
        const double H = reduced_hamiltonian(ReducedState{p.coords[0], p.coords[1], 0.0, p.coords[2], 1.5}, kFree);
        CHECK(p.H == doctest::Approx(H));
        CHECK(p.in_band == (std::abs(H - spec.E) < spec.delta));
        CHECK((p.in_band || p.sign_change != 0));
        any_sign = any_sign || p.sign_change != 0;
      }
      CHECK(any_sign);
    }
    SUBCASE("validation") {
      spec.delta = 0.0;
      CHECK_THROWS_AS(spec.validate(), ValidationError);
      spec.delta = 0.1;
      spec.axes[1].resolution = 1;
      CHECK_THROWS_AS(spec.validate(), ValidationError);
    }
  }

  TEST_CASE("correlation dimension of synthetic sets") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Vec4> circle, disk, line;
    for (int i = 0; i < 1500; ++i) {
      const double a = 2 * std::numbers::pi * u(rng);
      circle.push_back({0.3, std::cos(a), 0.0, std::sin(a)});
      const double r = std::sqrt(u(rng)), b = 2 * std::numbers::pi * u(rng);
      disk.push_back({r * std::cos(b), 0.0, r * std::sin(b), 0.1});
      line.push_back({u(rng), 2.0, 0.0, 0.0});
    }
    const double dc = correlation_dimension(circle), dd = correlation_dimension(disk), dl = correlation_dimension(line);
    CHECK(dc == doctest::Approx(1.0).epsilon(0.1));
    CHECK(dl == doctest::Approx(1.0).epsilon(0.1));
    CHECK(dd == doctest::Approx(2.0).epsilon(0.1));
    CHECK(classify_dimension(dc) == Shape::CurveLike);
    CHECK(classify_dimension(dd) == Shape::AreaLike);
    CHECK(classify_dimension(1.5) == Shape::Ambiguous);
    CHECK(classify_dimension(std::nan("")) == Shape::Ambiguous);
    CHECK_THROWS_AS(correlation_dimension(std::vector<Vec4>(10)), SamplingError);
    DimensionConfig bad;
    bad.q_lo = 0.5;
    bad.q_hi = 0.1;
    CHECK_THROWS_AS(correlation_dimension(circle, bad), ValidationError);
  }

  TEST_CASE("uncoupled trajectories classify as curve-like") {
    // With eps = (1.3, 1, 0.8) the two rotation rates are in ratio 3 : 2 and
    // the section is a 3-cycle; an irrational ratio fills the circle.
    const auto p = ReducedParams::cyclic({1.3, 1.0, 1.0 - 0.1 * std::numbers::sqrt2}, 0.0,
                                         SaturationFunction::exponential());
    const ReducedState s0{0.5, 0.2, -0.1, 0.6, 1.5};
    const double E = reduced_hamiltonian(s0, p);
    const auto res = section({s0}, SectionSpec{}, E, p, tight(3200.0));
    const auto cls = classify_records(res, 1);
    REQUIRE(cls.size() == 1);
    CHECK(cls[0].records == res.records.size());
    CHECK(cls[0].shape == Shape::CurveLike);

    const auto few = section({s0}, SectionSpec{}, E, p, tight(100.0));
    const auto c2 = classify_records(few, 1);
    CHECK(std::isnan(c2[0].dimension));
    CHECK(c2[0].shape == Shape::Ambiguous);
  }
}
