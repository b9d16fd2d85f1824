#include <png.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>

#include "viability/experiment.hpp"

namespace viability {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr std::size_t kTargetSide = 480;
const Rgb kWhite{255, 255, 255};
const Rgb kRed{230, 30, 30};

struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
};

void put(Image& img, long x, long y, Rgb c) {
    if (x < 0 || y < 0 || x >= static_cast<long>(img.width) || y >= static_cast<long>(img.height)) return;
    img.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y)) = c;
}

}  // namespace

Rgb colormap(double t) {
    static const double stops[4][3] = {{0, 0, 0}, {20, 40, 170}, {0, 170, 160}, {250, 230, 30}};
    if (!(t > 0.0)) t = 0.0;
    t = std::min(t, 1.0) * 3.0;
    const auto i = std::min<std::size_t>(static_cast<std::size_t>(t), 2);
    const double f = t - static_cast<double>(i);
    const auto mix = [&](int k) {
        return static_cast<std::uint8_t>(std::lround(stops[i][k] + f * (stops[i + 1][k] - stops[i][k])));
    };
    return {mix(0), mix(1), mix(2)};
}

Image render_q(const ScalarField& values, double vmax, const IndicatorField* optimistic,
               const IndicatorField* cautious, const std::vector<Marker>& markers) {
    const auto& g = *values.grid();
    if (values.domain() != Domain::StateActions || g.state_dims() != 1 || g.action_dims() != 1) {
        throw std::invalid_argument("rendering needs a field over a 1-D state by 1-D action grid");
    }
    if (optimistic) require_grid(*optimistic, g, Domain::StateActions);
    if (cautious) require_grid(*cautious, g, Domain::StateActions);

    const std::size_t ns = g.num_states(), na = g.num_actions();
    const std::size_t px = std::max<std::size_t>(2, kTargetSide / std::max(ns, na));
    Image img;
    img.width = na * px;
    img.height = ns * px;
    img.pixels.assign(img.width * img.height, Rgb{});

    for (std::size_t s = 0; s < ns; ++s) {
        for (std::size_t a = 0; a < na; ++a) {
            const auto q = g.index(s, a);
            Rgb c = colormap(vmax > 0.0 ? values[q] / vmax : 0.0);
            if (optimistic && !(*optimistic)[q]) c = {static_cast<std::uint8_t>(c.r / 2),
                                                      static_cast<std::uint8_t>(c.g / 2),
                                                      static_cast<std::uint8_t>(c.b / 2)};
            const bool border = cautious && (*cautious)[q] && px >= 4;
            const std::size_t y0 = (ns - 1 - s) * px, x0 = a * px;
            for (std::size_t dy = 0; dy < px; ++dy) {
                for (std::size_t dx = 0; dx < px; ++dx) {
                    const bool edge = dx == 0 || dy == 0 || dx == px - 1 || dy == px - 1;
                    img.at(x0 + dx, y0 + dy) = border && edge ? kWhite : c;
                }
            }
        }
    }

    const auto& sa = g.state_axes().front();
    const auto& aa = g.action_axes().front();
    for (const auto& m : markers) {
        if (m.q.size() != 2) throw std::invalid_argument("marker needs a state and an action coordinate");
        const double fx = (m.q[1] - aa.lower()) / (aa.upper() - aa.lower());
        const double fy = (m.q[0] - sa.lower()) / (sa.upper() - sa.lower());
        const long x = std::lround(std::clamp(fx, 0.0, 1.0) * static_cast<double>(img.width - 1));
        const long y = std::lround((1.0 - std::clamp(fy, 0.0, 1.0)) * static_cast<double>(img.height - 1));
        if (m.failed) {
            for (long d = -3; d <= 3; ++d) {
                put(img, x + d, y + d, kRed);
                put(img, x + d, y - d, kRed);
            }
        } else {
            for (long dy = -1; dy <= 1; ++dy)
                for (long dx = -1; dx <= 1; ++dx) put(img, x + dx, y + dy, kWhite);
        }
    }
    return img;
}

void write_png(const Image& image, const fs::path& path) {
    std::unique_ptr<std::FILE, FileCloser> file(std::fopen(path.string().c_str(), "wb"));
    if (!file) throw std::runtime_error("cannot write " + path.string());
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw std::runtime_error("libpng initialization failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("libpng failed writing " + path.string());
    }
    png_init_io(png, file.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_byte> row(image.width * 3);
    for (std::size_t y = 0; y < image.height; ++y) {
        for (std::size_t x = 0; x < image.width; ++x) {
            const auto& p = image.at(x, y);
            row[3 * x] = p.r;
            row[3 * x + 1] = p.g;
            row[3 * x + 2] = p.b;
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

Image read_png(const fs::path& path) {
    std::unique_ptr<std::FILE, FileCloser> file(std::fopen(path.string().c_str(), "rb"));
    if (!file) throw std::runtime_error("cannot read " + path.string());
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw std::runtime_error("libpng initialization failed");
    }
    Image img;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("corrupt PNG " + path.string());
    }
    png_init_io(png, file.get());
    png_read_info(png, info);
    if (png_get_color_type(png, info) != PNG_COLOR_TYPE_RGB || png_get_bit_depth(png, info) != 8) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("expected an 8-bit RGB PNG: " + path.string());
    }
    img.width = png_get_image_width(png, info);
    img.height = png_get_image_height(png, info);
    img.pixels.resize(img.width * img.height);
    std::vector<png_byte> row(img.width * 3);
    for (std::size_t y = 0; y < img.height; ++y) {
        png_read_row(png, row.data(), nullptr);
        for (std::size_t x = 0; x < img.width; ++x) img.at(x, y) = {row[3 * x], row[3 * x + 1], row[3 * x + 2]};
    }
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

std::vector<std::size_t> cmd_render(const fs::path& run_dir, const fs::path& out_dir) {
    const auto config = load_config(run_dir / "config.json");
    const auto e = build_experiment(config);
    const auto grid = e.grid;
    const double vmax = static_cast<double>(grid->num_actions()) * grid->action_cell_volume();

    const auto load = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        if (!in) throw std::runtime_error("cannot read " + p.string());
        return read_csv(in);
    };

    std::vector<Marker> markers;
    std::vector<std::size_t> iterations;
    if (fs::exists(run_dir / "trace.jsonl")) {
        std::ifstream in(run_dir / "trace.jsonl", std::ios::binary);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            try {
                const auto j = json::parse(line);
                Marker m;
                m.q = j.at("state").get<std::vector<double>>();
                const auto a = j.at("action").get<std::vector<double>>();
                m.q.insert(m.q.end(), a.begin(), a.end());
                m.failed = j.at("failed").get<bool>();
                iterations.push_back(j.at("i").get<std::size_t>());
                markers.push_back(std::move(m));
            } catch (const json::exception& ex) {
                throw std::runtime_error("corrupt trace line " + std::to_string(lineno) + ": " + ex.what());
            }
        }
    }

    std::map<std::size_t, fs::path> snapshots;
    for (const auto& entry : fs::directory_iterator(run_dir)) {
        const auto name = entry.path().filename().string();
        if (name.starts_with("snapshot_") && name.ends_with(".csv")) {
            const auto tag = name.substr(9, name.size() - 13);
            std::size_t k = 0;
            const auto [ptr, ec] = std::from_chars(tag.data(), tag.data() + tag.size(), k);
            if (ec == std::errc() && ptr == tag.data() + tag.size()) snapshots[k] = entry.path();
        }
    }

    fs::create_directories(out_dir);
    std::vector<std::size_t> counts;
    for (const auto& [k, path] : snapshots) {
        const auto table = load(path);
        const auto mean_col = table.column("mean");
        std::vector<double> mean(table.rows.size());
        for (std::size_t i = 0; i < mean.size(); ++i) mean[i] = std::max(0.0, table.rows[i].at(mean_col));
        if (mean.size() != grid->size()) throw std::runtime_error("snapshot does not match the grid: " + path.string());
        const ScalarField values(grid, Domain::StateActions, std::move(mean));
        const auto opt = indicator_field_from_csv(table, grid, Domain::StateActions, "optimistic");
        const auto caut = indicator_field_from_csv(table, grid, Domain::StateActions, "cautious");
        std::vector<Marker> shown;
        for (std::size_t i = 0; i < markers.size(); ++i) {
            if (iterations[i] < k) shown.push_back(markers[i]);
        }
        write_png(render_q(values, vmax, &opt, &caut, shown), out_dir / ("snapshot_" + std::to_string(k) + ".png"));
        counts.push_back(shown.size());
    }

    if (fs::exists(run_dir / "lambda_q.csv")) {
        const auto lq = scalar_field_from_csv(load(run_dir / "lambda_q.csv"), grid, Domain::StateActions, "lambda_q");
        write_png(render_q(lq, vmax, nullptr, nullptr, {}), out_dir / "oracle.png");
    }
    return counts;
}

}  // namespace viability
