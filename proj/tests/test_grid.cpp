#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "viability/grid.hpp"

using namespace viability;

TEST_CASE("axis centers and widths") {
    const AxisGrid axis(0.0, 2.0, 4);
    CHECK(axis.cell_width() == doctest::Approx(0.5));
    CHECK(axis.center(0) == doctest::Approx(0.25));
    CHECK(axis.center(3) == doctest::Approx(1.75));
    CHECK_THROWS_AS(axis.center(4), std::out_of_range);
}

TEST_CASE("axis rejects degenerate bounds") {
    CHECK_THROWS_AS(AxisGrid(1.0, 1.0, 3), std::invalid_argument);
    CHECK_THROWS_AS(AxisGrid(2.0, 1.0, 3), std::invalid_argument);
    CHECK_THROWS_AS(AxisGrid(0.0, 1.0, 0), std::invalid_argument);
    CHECK_THROWS_AS(AxisGrid(0.0, std::numeric_limits<double>::infinity(), 2), std::invalid_argument);
}

TEST_CASE("snapping picks the containing cell and clamps outside values") {
    const AxisGrid axis(-1.0, 1.0, 4);
    CHECK(axis.snap(-0.6).index == 0);
    CHECK(axis.snap(-0.4).index == 1);
    CHECK(axis.snap(0.99).index == 3);
    CHECK(axis.snap(1.0).index == 3);
    CHECK_FALSE(axis.snap(1.0).clamped);

    const auto below = axis.snap(-3.0);
    CHECK(below.index == 0);
    CHECK(below.clamped);
    const auto above = axis.snap(1.5);
    CHECK(above.index == 3);
    CHECK(above.clamped);
    CHECK_THROWS(axis.snap(std::nan("")));

    for (std::size_t i = 0; i < axis.num_cells(); ++i) {
        CHECK(axis.snap(axis.center(i)).index == i);
    }
}

TEST_CASE("product grid counts, order and volumes") {
    const ProductGrid g({AxisGrid(0, 1, 3), AxisGrid(0, 2, 2)}, {AxisGrid(0, 0.5, 5)});
    CHECK(g.num_states() == 6);
    CHECK(g.num_actions() == 5);
    CHECK(g.size() == 30);
    CHECK(g.state_cell_volume() == doctest::Approx(1.0 / 3.0));
    CHECK(g.action_cell_volume() == doctest::Approx(0.1));

    // Last state axis varies fastest.
    const auto s1 = g.state_center(1);
    CHECK(s1[0] == doctest::Approx(1.0 / 6.0));
    CHECK(s1[1] == doctest::Approx(1.5));
    const auto s2 = g.state_center(2);
    CHECK(s2[0] == doctest::Approx(0.5));
    CHECK(s2[1] == doctest::Approx(0.5));

    const auto q = g.index(4, 3);
    CHECK(q == 23);
    CHECK(g.state_of(q) == 4);
    CHECK(g.action_of(q) == 3);
    const auto c = g.center(q);
    REQUIRE(c.size() == 3);
    CHECK(c[2] == doctest::Approx(0.35));

    for (std::size_t s = 0; s < g.num_states(); ++s) {
        CHECK(g.snap_state(g.state_center(s)).index == s);
    }
    for (std::size_t a = 0; a < g.num_actions(); ++a) {
        CHECK(g.snap_action(g.action_center(a)) == a);
    }
    const std::vector<double> outside{2.0, 1.0};
    CHECK(g.snap_state(outside).clamped);
    CHECK_THROWS_AS(g.snap_state(std::vector<double>{0.5}), std::invalid_argument);
    CHECK_THROWS_AS(g.state_center(6), std::out_of_range);
}

TEST_CASE("discrete grids use the counting measure") {
    const ProductGrid g({AxisGrid(0.5, 5.5, 5)}, {AxisGrid(-0.5, 2.5, 3)}, true);
    CHECK(g.discrete());
    CHECK(g.action_cell_volume() == 1.0);
    CHECK(g.state_cell_volume() == 1.0);
    CHECK(g.state_center(2)[0] == doctest::Approx(3.0));
    CHECK(g.action_center(0)[0] == doctest::Approx(0.0));
}

TEST_CASE("a grid needs a state axis") {
    CHECK_THROWS_AS(ProductGrid({}, {AxisGrid(0, 1, 2)}), std::invalid_argument);
}
