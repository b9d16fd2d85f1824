#include <random>
#include <sstream>
#include <stdexcept>

#include "doctest.h"
#include "viability/field.hpp"

using namespace viability;

namespace {

GridPtr small_grid() {
    return std::make_shared<const ProductGrid>(std::vector<AxisGrid>{AxisGrid(0, 4, 4)},
                                               std::vector<AxisGrid>{AxisGrid(0, 1, 3)});
}

IndicatorField random_q_set(const GridPtr& g, std::mt19937_64& rng, double p) {
    std::bernoulli_distribution coin(p);
    IndicatorField f(g, Domain::StateActions);
    for (std::size_t i = 0; i < f.size(); ++i) f.set(i, coin(rng));
    return f;
}

}  // namespace

TEST_CASE("projection of the empty set is empty") {
    const auto g = small_grid();
    const IndicatorField empty(g, Domain::StateActions);
    const auto s = project_to_states(empty);
    CHECK(s.domain() == Domain::States);
    CHECK(s.size() == 4);
    CHECK(s.count() == 0);
}

TEST_CASE("single-point projection") {
    const auto g = small_grid();
    IndicatorField q(g, Domain::StateActions);
    q.set(g->index(1, 2), true);
    const auto s = project_to_states(q);
    CHECK(s.count() == 1);
    CHECK(s[1]);
}

TEST_CASE("projection rejects a mismatched declared grid") {
    const auto g = small_grid();
    const ProductGrid other({AxisGrid(0, 4, 5)}, {AxisGrid(0, 1, 3)});
    const IndicatorField q(g, Domain::StateActions);
    CHECK_THROWS_AS(project_to_states(q, other), std::invalid_argument);
    CHECK_THROWS_AS(project_to_states(IndicatorField(g, Domain::States)), std::invalid_argument);
}

TEST_CASE("slice measure") {
    const auto g = small_grid();
    const IndicatorField empty(g, Domain::StateActions);
    for (std::size_t s = 0; s < 4; ++s) CHECK(slice_measure(empty, s) == 0.0);

    // Hovership-like action axis [0, a_max] with 20 cells of width 0.05 a_max.
    const double a_max = 0.5;
    const auto h = std::make_shared<const ProductGrid>(std::vector<AxisGrid>{AxisGrid(0, 2, 10)},
                                                       std::vector<AxisGrid>{AxisGrid(0, a_max, 20)});
    IndicatorField q(h, Domain::StateActions);
    for (std::size_t a = 3; a < 15; ++a) q.set(h->index(4, a), true);
    CHECK(slice_measure(q, 4) == doctest::Approx(12 * 0.05 * a_max));
    CHECK(slice_measure(q, 5) == 0.0);
    CHECK_THROWS_AS(slice_measure(q, 10), std::out_of_range);
}

TEST_CASE("slice measure on a discrete grid counts cells") {
    const auto g = std::make_shared<const ProductGrid>(std::vector<AxisGrid>{AxisGrid(0.5, 5.5, 5)},
                                                       std::vector<AxisGrid>{AxisGrid(-0.5, 2.5, 3)}, true);
    IndicatorField q(g, Domain::StateActions);
    q.set(g->index(2, 0), true);
    q.set(g->index(2, 2), true);
    CHECK(slice_measure(q, 2) == 2.0);
}

TEST_CASE("level sets use a strict threshold") {
    const auto g = small_grid();
    ScalarField f(g, Domain::StateActions);
    for (std::size_t i = 0; i < f.size(); ++i) f.set(i, static_cast<double>(i % 4));
    CHECK(level_set(f, f.max()).count() == 0);
    CHECK(level_set(f, 0.0).count() == 9);
    CHECK(level_set(f, 2.0).count() == 3);
    CHECK_THROWS_AS(level_set(f, -1.0), std::invalid_argument);
}

TEST_CASE("projection is the identity on lifted state sets") {
    const auto g = small_grid();
    std::mt19937_64 rng(7);
    std::bernoulli_distribution coin(0.5);
    for (int trial = 0; trial < 50; ++trial) {
        IndicatorField s(g, Domain::States);
        for (std::size_t i = 0; i < s.size(); ++i) s.set(i, coin(rng));
        CHECK(project_to_states(lift_to_state_actions(s)) == s);
    }
}

TEST_CASE("level sets shrink as the level grows") {
    const auto g = small_grid();
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    for (int trial = 0; trial < 50; ++trial) {
        ScalarField f(g, Domain::StateActions);
        for (std::size_t i = 0; i < f.size(); ++i) f.set(i, u(rng));
        double l1 = u(rng), l2 = u(rng);
        if (l1 > l2) std::swap(l1, l2);
        CHECK(level_set(f, l2).subset_of(level_set(f, l1)));
    }
}

TEST_CASE("slice measures sum to the weighted cardinality") {
    const auto g = std::make_shared<const ProductGrid>(std::vector<AxisGrid>{AxisGrid(0, 1, 6)},
                                                       std::vector<AxisGrid>{AxisGrid(0, 0.3, 7)});
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const auto q = random_q_set(g, rng, 0.4);
        double sum = 0.0;
        for (std::size_t s = 0; s < g->num_states(); ++s) sum += slice_measure(q, s);
        CHECK(sum == doctest::Approx(q.count() * g->action_cell_volume()));
        CHECK(total_measure(q) == doctest::Approx(sum));
    }
}

TEST_CASE("field value checks") {
    const auto g = small_grid();
    CHECK_THROWS_AS(ScalarField(g, Domain::States, std::vector<double>{1, 2, 3}), std::invalid_argument);
    CHECK_THROWS_AS(ScalarField(g, Domain::States, std::vector<double>{1, 2, -3, 4}), std::invalid_argument);
    ScalarField f(g, Domain::States);
    CHECK_THROWS_AS(f.set(0, -0.5), std::invalid_argument);
    CHECK_THROWS_AS(IndicatorField(g, Domain::States, std::vector<std::uint8_t>{1, 0}), std::invalid_argument);
    CHECK_THROWS_AS(IndicatorField(nullptr, Domain::States), std::invalid_argument);
}

TEST_CASE("CSV layout and round trip") {
    const auto g = std::make_shared<const ProductGrid>(std::vector<AxisGrid>{AxisGrid(0, 2, 2)},
                                                       std::vector<AxisGrid>{AxisGrid(0, 1, 2)});
    ScalarField f(g, Domain::StateActions, std::vector<double>{0.0, 0.25, 1.5, 0.1});
    std::ostringstream out;
    write_csv(out, f, "lambda_q");
    CHECK(out.str() == "s0,a0,lambda_q\n0.5,0.25,0\n0.5,0.75,0.25\n1.5,0.25,1.5\n1.5,0.75,0.10000000000000001\n");

    std::istringstream in(out.str());
    const auto table = read_csv(in);
    CHECK(table.header.size() == 3);
    CHECK(scalar_field_from_csv(table, g, Domain::StateActions, "lambda_q") == f);

    IndicatorField s(g, Domain::States);
    s.set(1, true);
    std::ostringstream sout;
    write_csv(sout, s, "viable");
    CHECK(sout.str() == "s0,viable\n0.5,0\n1.5,1\n");
    std::istringstream sin(sout.str());
    CHECK(indicator_field_from_csv(read_csv(sin), g, Domain::States, "viable") == s);
}

TEST_CASE("CSV reader rejects malformed input") {
    const auto g = std::make_shared<const ProductGrid>(std::vector<AxisGrid>{AxisGrid(0, 2, 2)},
                                                       std::vector<AxisGrid>{AxisGrid(0, 1, 2)});
    std::istringstream empty("");
    CHECK_THROWS(read_csv(empty));
    std::istringstream ragged("s0,v\n0.5\n");
    CHECK_THROWS(read_csv(ragged));
    std::istringstream junk("s0,v\n0.5,abc\n");
    CHECK_THROWS(read_csv(junk));

    std::istringstream shifted("s0,v\n0.4,1\n1.5,0\n");
    CHECK_THROWS(scalar_field_from_csv(read_csv(shifted), g, Domain::States, "v"));
    std::istringstream short_rows("s0,v\n0.5,1\n");
    CHECK_THROWS(scalar_field_from_csv(read_csv(short_rows), g, Domain::States, "v"));
    std::istringstream not_bool("s0,v\n0.5,1\n1.5,0.5\n");
    CHECK_THROWS(indicator_field_from_csv(read_csv(not_bool), g, Domain::States, "v"));
    std::istringstream ok("s0,v\n0.5,1\n1.5,0\n");
    CHECK_THROWS(scalar_field_from_csv(read_csv(ok), g, Domain::States, "missing"));
}
