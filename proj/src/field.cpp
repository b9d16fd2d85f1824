#include "viability/field.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace viability {

std::size_t cell_count(const ProductGrid& grid, Domain domain) {
    return domain == Domain::States ? grid.num_states() : grid.size();
}

namespace {

const GridPtr& checked(const GridPtr& grid) {
    if (!grid) {
        throw std::invalid_argument("field requires a grid");
    }
    return grid;
}

}  // namespace

IndicatorField::IndicatorField(GridPtr grid, Domain domain, bool fill)
    : grid_(std::move(grid)), domain_(domain) {
    values_.assign(cell_count(*checked(grid_), domain_), fill ? 1 : 0);
}

IndicatorField::IndicatorField(GridPtr grid, Domain domain, std::vector<std::uint8_t> values)
    : grid_(std::move(grid)), domain_(domain), values_(std::move(values)) {
    if (values_.size() != cell_count(*checked(grid_), domain_)) {
        throw std::invalid_argument("indicator field needs exactly one value per cell");
    }
    for (auto& v : values_) {
        v = v ? 1 : 0;
    }
}

std::size_t IndicatorField::count() const {
    return static_cast<std::size_t>(std::count(values_.begin(), values_.end(), std::uint8_t{1}));
}

bool IndicatorField::subset_of(const IndicatorField& other) const {
    if (domain_ != other.domain_ || *grid_ != *other.grid_) {
        throw std::invalid_argument("subset test between fields on different grids");
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (values_[i] && !other.values_[i]) {
            return false;
        }
    }
    return true;
}

bool operator==(const IndicatorField& a, const IndicatorField& b) {
    return a.domain_ == b.domain_ && *a.grid_ == *b.grid_ && a.values_ == b.values_;
}

ScalarField::ScalarField(GridPtr grid, Domain domain, double fill)
    : grid_(std::move(grid)), domain_(domain) {
    if (!(fill >= 0.0)) {
        throw std::invalid_argument("scalar field values must be non-negative");
    }
    values_.assign(cell_count(*checked(grid_), domain_), fill);
}

ScalarField::ScalarField(GridPtr grid, Domain domain, std::vector<double> values)
    : grid_(std::move(grid)), domain_(domain), values_(std::move(values)) {
    if (values_.size() != cell_count(*checked(grid_), domain_)) {
        throw std::invalid_argument("scalar field needs exactly one value per cell");
    }
    for (double v : values_) {
        if (!(v >= 0.0)) {
            throw std::invalid_argument("scalar field values must be non-negative");
        }
    }
}

void ScalarField::set(std::size_t i, double v) {
    if (!(v >= 0.0)) {
        throw std::invalid_argument("scalar field values must be non-negative");
    }
    values_.at(i) = v;
}

double ScalarField::max() const {
    return values_.empty() ? 0.0 : *std::max_element(values_.begin(), values_.end());
}

void require_grid(const IndicatorField& field, const ProductGrid& declared, Domain domain) {
    if (field.domain() != domain || *field.grid() != declared) {
        throw std::invalid_argument("field does not live on the declared grid");
    }
}

void require_grid(const ScalarField& field, const ProductGrid& declared, Domain domain) {
    if (field.domain() != domain || *field.grid() != declared) {
        throw std::invalid_argument("field does not live on the declared grid");
    }
}

IndicatorField project_to_states(const IndicatorField& q_set) {
    if (q_set.domain() != Domain::StateActions) {
        throw std::invalid_argument("projection needs a state-action field");
    }
    const auto& grid = *q_set.grid();
    IndicatorField out(q_set.grid(), Domain::States);
    for (std::size_t s = 0; s < grid.num_states(); ++s) {
        for (std::size_t a = 0; a < grid.num_actions(); ++a) {
            if (q_set[grid.index(s, a)]) {
                out.set(s, true);
                break;
            }
        }
    }
    return out;
}

IndicatorField project_to_states(const IndicatorField& q_set, const ProductGrid& declared) {
    require_grid(q_set, declared, Domain::StateActions);
    return project_to_states(q_set);
}

IndicatorField lift_to_state_actions(const IndicatorField& s_set) {
    if (s_set.domain() != Domain::States) {
        throw std::invalid_argument("lift needs a state field");
    }
    const auto& grid = *s_set.grid();
    IndicatorField out(s_set.grid(), Domain::StateActions);
    for (std::size_t q = 0; q < grid.size(); ++q) {
        out.set(q, s_set[grid.state_of(q)]);
    }
    return out;
}

double slice_measure(const IndicatorField& q_set, std::size_t state) {
    if (q_set.domain() != Domain::StateActions) {
        throw std::invalid_argument("slice measure needs a state-action field");
    }
    const auto& grid = *q_set.grid();
    if (state >= grid.num_states()) {
        throw std::out_of_range("state cell index out of range");
    }
    std::size_t n = 0;
    for (std::size_t a = 0; a < grid.num_actions(); ++a) {
        n += q_set[grid.index(state, a)] ? 1 : 0;
    }
    return static_cast<double>(n) * grid.action_cell_volume();
}

double total_measure(const IndicatorField& q_set) {
    double sum = 0.0;
    for (std::size_t s = 0; s < q_set.grid()->num_states(); ++s) {
        sum += slice_measure(q_set, s);
    }
    return sum;
}

IndicatorField level_set(const ScalarField& field, double lambda) {
    if (!(lambda >= 0.0)) {
        throw std::invalid_argument("level must be non-negative");
    }
    IndicatorField out(field.grid(), field.domain());
    for (std::size_t i = 0; i < field.size(); ++i) {
        out.set(i, field[i] > lambda);
    }
    return out;
}

namespace {

std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void write_csv(std::ostream& out, const ProductGrid& grid, Domain domain,
               const std::vector<CsvColumn>& columns) {
    const auto n = cell_count(grid, domain);
    for (const auto& c : columns) {
        if (c.values.size() != n) {
            throw std::invalid_argument("CSV column '" + c.name + "' has the wrong length");
        }
    }
    std::string line;
    for (std::size_t d = 0; d < grid.state_dims(); ++d) {
        line += (d ? ",s" : "s") + std::to_string(d);
    }
    if (domain == Domain::StateActions) {
        for (std::size_t d = 0; d < grid.action_dims(); ++d) {
            line += ",a" + std::to_string(d);
        }
    }
    for (const auto& c : columns) {
        line += "," + c.name;
    }
    out << line << '\n';
    for (std::size_t i = 0; i < n; ++i) {
        const auto coords = domain == Domain::States ? grid.state_center(i) : grid.center(i);
        line.clear();
        for (std::size_t d = 0; d < coords.size(); ++d) {
            if (d) line += ',';
            line += format_number(coords[d]);
        }
        for (const auto& c : columns) {
            line += ',';
            line += format_number(c.values[i]);
        }
        out << line << '\n';
    }
}

void write_csv(std::ostream& out, const IndicatorField& field, const std::string& name) {
    std::vector<double> v(field.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] = field[i] ? 1.0 : 0.0;
    }
    write_csv(out, *field.grid(), field.domain(), {{name, std::move(v)}});
}

void write_csv(std::ostream& out, const ScalarField& field, const std::string& name) {
    write_csv(out, *field.grid(), field.domain(),
              {{name, std::vector<double>(field.values().begin(), field.values().end())}});
}

std::size_t CsvTable::column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
        throw std::runtime_error("CSV has no column '" + name + "'");
    }
    return static_cast<std::size_t>(it - header.begin());
}

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> parts;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) {
        parts.push_back(item);
    }
    if (!line.empty() && line.back() == ',') {
        parts.emplace_back();
    }
    return parts;
}

}  // namespace

CsvTable read_csv(std::istream& in) {
    CsvTable table;
    std::string line;
    if (!std::getline(in, line) || line.empty()) {
        throw std::runtime_error("CSV is empty");
    }
    table.header = split(line);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        const auto parts = split(line);
        if (parts.size() != table.header.size()) {
            throw std::runtime_error("CSV line " + std::to_string(line_no) +
                                     " has the wrong number of fields");
        }
        std::vector<double> row(parts.size());
        for (std::size_t i = 0; i < parts.size(); ++i) {
            const char* first = parts[i].data();
            const char* last = first + parts[i].size();
            const auto [ptr, ec] = std::from_chars(first, last, row[i]);
            if (ec != std::errc{} || ptr != last) {
                throw std::runtime_error("CSV line " + std::to_string(line_no) +
                                         ": bad number '" + parts[i] + "'");
            }
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

namespace {

std::vector<double> column_on_grid(const CsvTable& table, const ProductGrid& grid,
                                   Domain domain, const std::string& column) {
    const auto n = cell_count(grid, domain);
    if (table.rows.size() != n) {
        throw std::runtime_error("CSV row count does not match the grid");
    }
    const auto col = table.column(column);
    std::vector<double> values(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto coords = domain == Domain::States ? grid.state_center(i) : grid.center(i);
        for (std::size_t d = 0; d < coords.size(); ++d) {
            const double tol = 1e-9 * std::max(1.0, std::abs(coords[d]));
            if (std::abs(table.rows[i][d] - coords[d]) > tol) {
                throw std::runtime_error("CSV coordinates do not match the grid at row " +
                                         std::to_string(i + 2));
            }
        }
        values[i] = table.rows[i][col];
    }
    return values;
}

}  // namespace

ScalarField scalar_field_from_csv(const CsvTable& table, GridPtr grid, Domain domain,
                                  const std::string& column) {
    auto values = column_on_grid(table, *grid, domain, column);
    return ScalarField(std::move(grid), domain, std::move(values));
}

IndicatorField indicator_field_from_csv(const CsvTable& table, GridPtr grid, Domain domain,
                                        const std::string& column) {
    const auto values = column_on_grid(table, *grid, domain, column);
    std::vector<std::uint8_t> flags(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i] != 0.0 && values[i] != 1.0) {
            throw std::runtime_error("indicator CSV values must be 0 or 1");
        }
        flags[i] = values[i] != 0.0;
    }
    return IndicatorField(std::move(grid), domain, std::move(flags));
}

}  // namespace viability
