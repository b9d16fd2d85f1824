#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "viability/experiment.hpp"

using namespace viability;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("viability_test_render_" + name);
    fs::remove_all(dir);
    return dir;
}

}  // namespace

TEST_CASE("color mapping endpoints and clamping") {
    CHECK(colormap(0.0) == Rgb{0, 0, 0});
    CHECK(colormap(1.0) == Rgb{250, 230, 30});
    CHECK(colormap(1.0 / 3.0) == Rgb{20, 40, 170});
    CHECK(colormap(-1.0) == colormap(0.0));
    CHECK(colormap(7.0) == colormap(1.0));
    CHECK(colormap(std::nan("")) == colormap(0.0));
}

TEST_CASE("an empty field renders as a uniform image") {
    const auto g = std::make_shared<const ProductGrid>(std::vector<AxisGrid>{AxisGrid(0, 2, 10)},
                                                       std::vector<AxisGrid>{AxisGrid(0, 0.5, 4)});
    const ScalarField zero(g, Domain::StateActions);
    const auto img = render_q(zero, 1.0, nullptr, nullptr, {});
    REQUIRE(!img.pixels.empty());
    for (const auto& p : img.pixels) CHECK(p == img.pixels.front());
}

TEST_CASE("toy measure heatmap has one block per cell") {
    const auto e = build_experiment(ExperimentConfig::defaults("toy"));
    const auto oracle = run_oracle(*e.dynamics, e.grid);
    const auto img = render_q(oracle.lambda_q, 3.0, nullptr, nullptr, {});
    const std::size_t px = img.width / 3;
    CHECK(img.width == 3 * px);
    CHECK(img.height == 5 * px);
    for (std::size_t s = 0; s < 5; ++s) {
        for (std::size_t a = 0; a < 3; ++a) {
            const auto expected = colormap(oracle.lambda_q[e.grid->index(s, a)] / 3.0);
            // Lowest state is drawn at the bottom.
            CHECK(img.at(a * px + px / 2, (4 - s) * px + px / 2) == expected);
        }
    }
}

TEST_CASE("set overlays and markers") {
    const auto g = std::make_shared<const ProductGrid>(std::vector<AxisGrid>{AxisGrid(0, 1, 4)},
                                                       std::vector<AxisGrid>{AxisGrid(0, 1, 4)});
    const ScalarField full(g, Domain::StateActions, 1.0);
    IndicatorField opt(g, Domain::StateActions, true);
    opt.set(0, false);
    const IndicatorField caut(g, Domain::StateActions);
    const auto img = render_q(full, 1.0, &opt, &caut, {{{0.9, 0.9}, true}});
    const std::size_t px = img.width / 4;
    const auto bright = colormap(1.0);
    const auto dim = img.at(px / 2, 3 * px + px / 2);  // state 0, action 0
    CHECK(dim.r == bright.r / 2);
    const auto x = static_cast<std::size_t>(std::lround(0.9 * static_cast<double>(img.width - 1)));
    const auto y = static_cast<std::size_t>(std::lround(0.1 * static_cast<double>(img.height - 1)));
    CHECK(img.at(x, y) == Rgb{230, 30, 30});
    CHECK(img.at(x + 2, y - 2) == Rgb{230, 30, 30});
    CHECK_THROWS(render_q(full, 1.0, nullptr, nullptr, {{{0.5}, false}}));
}

TEST_CASE("PNG round trip") {
    const auto dir = scratch("png");
    fs::create_directories(dir);
    Image img;
    img.width = 3;
    img.height = 2;
    img.pixels = {{1, 2, 3}, {4, 5, 6}, {7, 8, 9}, {10, 11, 12}, {13, 14, 15}, {255, 0, 128}};
    write_png(img, dir / "x.png");
    const auto back = read_png(dir / "x.png");
    CHECK(back.width == 3);
    CHECK(back.height == 2);
    CHECK(back.pixels == img.pixels);

    std::ofstream(dir / "bad.png") << "not a png";
    CHECK_THROWS(read_png(dir / "bad.png"));
    CHECK_THROWS(read_png(dir / "missing.png"));
    fs::remove_all(dir);
}

TEST_CASE("rendered markers match the trace") {
    const auto dir = scratch("run");
    auto c = ExperimentConfig::defaults("hovership");
    c.n = 60;
    c.snapshots = {25};
    cmd_learn(c, dir);
    const auto counts = cmd_render(dir, dir / "img");
    REQUIRE(counts.size() == 2);
    CHECK(counts[0] == 25);
    CHECK(counts[1] == 60);
    for (const char* f : {"snapshot_25.png", "snapshot_60.png", "oracle.png"}) {
        CHECK_MESSAGE(fs::exists(dir / "img" / f), f);
    }
    const auto img = read_png(dir / "img" / "snapshot_60.png");
    CHECK(img.height == 41 * (480 / 41));

    std::ofstream(dir / "trace.jsonl", std::ios::app) << "{broken\n";
    CHECK_THROWS(cmd_render(dir, dir / "img"));
    fs::remove(dir / "config.json");
    CHECK_THROWS(cmd_render(dir, dir / "img"));
    fs::remove_all(dir);
}
