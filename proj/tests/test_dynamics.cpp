#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "viability/dynamics.hpp"

using namespace viability;

namespace {

// Explicit midpoint rule with a very small step, without the ceiling clamp.
double reference_hovership(const HovershipParams& p, double s, double a, int steps = 200000) {
    const auto f = [&](double x) { return p.g0 + std::tanh(0.75 * x) * p.g - a; };
    const double h = 1.0 / (p.omega * steps);
    for (int i = 0; i < steps; ++i) s += h * f(s + 0.5 * h * f(s));
    return s;
}

// Same quantities as the apex parameterization, written out directly.
double apex_energy(const SlipParams& p, const SlipState& z) {
    return 0.5 * p.m * (z.xd * z.xd + z.yd * z.yd) + p.m * p.g * z.y;
}

}  // namespace

TEST_CASE("toy: every action from the crash state fails") {
    const ToyTable toy;
    for (int a = 0; a < 3; ++a) {
        const auto out = toy.step(5, a);
        CHECK(out.failed);
        CHECK(out.next_state[0] == 5.0);
    }
    CHECK(toy.in_failure_set(std::vector<double>{5.0}));
    CHECK_FALSE(toy.in_failure_set(std::vector<double>{4.0}));
}

TEST_CASE("toy: exactly one action keeps state 3 safe, and it stays at 3") {
    const ToyTable toy;
    int safe = 0;
    for (int a = 0; a < 3; ++a) {
        const auto out = toy.step(3, a);
        if (!out.failed && out.next_state[0] <= 3.0) {
            ++safe;
            CHECK(out.next_state[0] == 3.0);
        }
    }
    CHECK(safe == 1);
}

TEST_CASE("toy: invalid indices are errors") {
    const ToyTable toy;
    CHECK_THROWS_AS(toy.step(0, 0), std::invalid_argument);
    CHECK_THROWS_AS(toy.step(6, 0), std::invalid_argument);
    CHECK_THROWS_AS(toy.step(1, 3), std::invalid_argument);
    CHECK_THROWS_AS(toy.step(std::vector<double>{1.5}, std::vector<double>{0.0}), std::invalid_argument);
    ToyTable::Table bad{};
    CHECK_THROWS_AS(ToyTable{bad}, std::invalid_argument);
}

TEST_CASE("hovership: thrust balancing gravity at the ceiling holds still") {
    const Hovership ship;
    const auto out = ship.step(0.0, 0.1);
    CHECK_FALSE(out.failed);
    CHECK(out.next_state[0] == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("hovership: falling from just above the ground fails") {
    const Hovership ship;
    CHECK(ship.step(1.999, 0.0).failed);
    CHECK(ship.step(2.0, 0.3).failed);
}

TEST_CASE("hovership: one step matches a fine reference integration") {
    const HovershipParams p;
    const Hovership ship(p);
    for (const auto [s, a] : std::vector<std::pair<double, double>>{{0.5, 0.5}, {1.0, 0.5}, {0.3, 0.2}, {1.2, 0.45}}) {
        const auto out = ship.step(s, a);
        REQUIRE_FALSE(out.failed);
        CHECK(out.next_state[0] == doctest::Approx(reference_hovership(p, s, a)).epsilon(1e-7));
    }
}

TEST_CASE("hovership: zero thrust always reaches the ground") {
    const Hovership ship;
    for (double s0 : {0.0, 0.4, 1.3}) {
        double s = s0;
        bool failed = false;
        for (int i = 0; i < 100 && !failed; ++i) {
            const auto out = ship.step(s, 0.0);
            failed = out.failed;
            if (!failed) CHECK(out.next_state[0] >= s + 0.1 - 1e-12);
            s = out.next_state[0];
        }
        CHECK(failed);
    }
}

TEST_CASE("hovership: preconditions") {
    const Hovership ship;
    CHECK_THROWS_AS(ship.step(0.5, -0.01), std::invalid_argument);
    CHECK_THROWS_AS(ship.step(0.5, 0.51), std::invalid_argument);
    CHECK_THROWS_AS(ship.step(std::nan(""), 0.1), std::invalid_argument);
    HovershipParams p;
    p.g0 = 0.0;
    CHECK_THROWS_AS(Hovership{p}, std::invalid_argument);
}

TEST_CASE("hovership: deterministic") {
    const Hovership ship;
    const auto a = ship.step(0.73, 0.31);
    const auto b = ship.step(0.73, 0.31);
    CHECK(a.next_state == b.next_state);
    CHECK(a.failed == b.failed);
}

TEST_CASE("slip: apex with no forward speed has s = 1") {
    const SlipParams p;
    const Slip slip(p, slip_energy_at_apex(p, 0.85, 5.5));
    const auto apex = slip.apex_from_state(1.0);
    CHECK(apex.xd == doctest::Approx(0.0));
    CHECK(slip.state_from_apex(apex) == doctest::Approx(1.0));

    SlipState still;
    still.y = slip.total_energy() / (p.m * p.g);
    CHECK(slip.state_from_apex(still) == doctest::Approx(1.0));
}

TEST_CASE("slip: apex parameterization round trip") {
    const SlipParams p;
    const Slip slip(p, slip_energy_at_apex(p, 0.85, 5.5));
    for (double s : {0.2, 0.35, 0.6, 0.9}) {
        const auto z = slip.apex_from_state(s);
        CHECK(z.yd == 0.0);
        CHECK(apex_energy(p, z) == doctest::Approx(slip.total_energy()));
        CHECK(slip.state_from_apex(z) == doctest::Approx(s));
    }
    CHECK_THROWS(slip.apex_from_state(0.0));
    CHECK_THROWS(slip.apex_from_state(1.2));
}

TEST_CASE("slip: the limit cycle maps to itself") {
    const SlipParams p;
    const Slip slip(p, slip_energy_at_apex(p, 0.85, 5.5));
    const double alpha = std::numbers::pi / 5;
    const auto fp = slip_fixed_point(slip, alpha, 0.2, 0.9);
    REQUIRE(fp.has_value());
    const auto out = slip.step(std::vector<double>{*fp}, std::vector<double>{alpha});
    REQUIRE_FALSE(out.failed);
    CHECK(out.next_state[0] == doctest::Approx(*fp).epsilon(1e-6));

    // Nearby states also stay nearby.
    const auto near = slip.step(std::vector<double>{*fp + 0.01}, std::vector<double>{alpha});
    REQUIRE_FALSE(near.failed);
    CHECK(std::abs(near.next_state[0] - *fp) < 0.05);
}

TEST_CASE("slip: energy is conserved between apexes") {
    const SlipParams p;
    const Slip slip(p, slip_energy_at_apex(p, 0.85, 5.5));
    int checked = 0;
    for (double s = 0.1; s < 0.99; s += 0.07) {
        for (double alpha = 0.2; alpha < 1.3; alpha += 0.1) {
            const auto r = slip.simulate(s, alpha);
            if (r.failure != SlipFailure::None) continue;
            ++checked;
            CHECK(std::abs(apex_energy(p, r.apex) - slip.total_energy()) / slip.total_energy() <= 1e-6);
        }
    }
    CHECK(checked > 10);
}

TEST_CASE("slip: a leg that would start underground is infeasible") {
    const SlipParams p;
    const Slip slip(p, slip_energy_at_apex(p, 0.85, 5.5));
    const double s = 0.1;
    const double alpha = std::numbers::pi / 5;
    REQUIRE(slip.apex_from_state(s).y < p.l0 * std::cos(alpha));
    CHECK(slip.simulate(s, alpha).failure == SlipFailure::Infeasible);
    CHECK(slip.step(std::vector<double>{s}, std::vector<double>{alpha}).failed);
}

TEST_CASE("slip: a slow runner with a flat leg is thrown backwards") {
    const SlipParams p;
    const Slip slip(p, slip_energy_at_apex(p, 0.85, 5.5));
    const auto r = slip.simulate(0.95, 0.6);
    CHECK(r.failure == SlipFailure::Reversal);
    CHECK(r.apex.xd <= 1e-9);
    CHECK(slip.step(std::vector<double>{0.95}, std::vector<double>{0.6}).failed);
}

TEST_CASE("slip: non-finite input is an error, not a failure") {
    const SlipParams p;
    const Slip slip(p, slip_energy_at_apex(p, 0.85, 5.5));
    CHECK_THROWS(slip.step(std::vector<double>{std::nan("")}, std::vector<double>{0.5}));
    CHECK_THROWS(slip.step(std::vector<double>{0.5}, std::vector<double>{std::numeric_limits<double>::infinity()}));
}

TEST_CASE("slip: deterministic") {
    const SlipParams p;
    const Slip slip(p, slip_energy_at_apex(p, 0.85, 5.5));
    const auto a = slip.step(std::vector<double>{0.4}, std::vector<double>{0.6});
    const auto b = slip.step(std::vector<double>{0.4}, std::vector<double>{0.6});
    CHECK(a.next_state == b.next_state);
    CHECK(a.failed == b.failed);
}
