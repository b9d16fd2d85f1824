#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "viability/grid.hpp"

namespace viability {

/// Which part of a ProductGrid a field lives on.
enum class Domain { States, StateActions };

using GridPtr = std::shared_ptr<const ProductGrid>;

/// Boolean value per cell: S_V, S_F, Q_V, level sets, optimistic/cautious sets.
class IndicatorField {
public:
    IndicatorField(GridPtr grid, Domain domain, bool fill = false);
    IndicatorField(GridPtr grid, Domain domain, std::vector<std::uint8_t> values);

    const GridPtr& grid() const { return grid_; }
    Domain domain() const { return domain_; }
    std::size_t size() const { return values_.size(); }

    bool operator[](std::size_t i) const { return values_[i] != 0; }
    void set(std::size_t i, bool v) { values_.at(i) = v ? 1 : 0; }
    std::size_t count() const;
    bool any() const { return count() > 0; }
    std::span<const std::uint8_t> values() const { return values_; }

    /// Every true cell of *this is true in other. Grids must match.
    bool subset_of(const IndicatorField& other) const;

    friend bool operator==(const IndicatorField& a, const IndicatorField& b);

private:
    GridPtr grid_;
    Domain domain_;
    std::vector<std::uint8_t> values_;
};

/// Non-negative real value per cell: Lambda over S and Lambda_Q over Q.
class ScalarField {
public:
    ScalarField(GridPtr grid, Domain domain, double fill = 0.0);
    ScalarField(GridPtr grid, Domain domain, std::vector<double> values);

    const GridPtr& grid() const { return grid_; }
    Domain domain() const { return domain_; }
    std::size_t size() const { return values_.size(); }

    double operator[](std::size_t i) const { return values_[i]; }
    void set(std::size_t i, double v);
    double max() const;
    std::span<const double> values() const { return values_; }

    friend bool operator==(const ScalarField&, const ScalarField&) = default;

private:
    GridPtr grid_;
    Domain domain_;
    std::vector<double> values_;
};

std::size_t cell_count(const ProductGrid& grid, Domain domain);

/// Throws std::invalid_argument unless the field lives on `declared`.
void require_grid(const IndicatorField& field, const ProductGrid& declared, Domain domain);
void require_grid(const ScalarField& field, const ProductGrid& declared, Domain domain);

/// State cell is true iff some action cell of its slice is true.
IndicatorField project_to_states(const IndicatorField& q_set);
IndicatorField project_to_states(const IndicatorField& q_set, const ProductGrid& declared);

/// Inverse of the projection for sets defined on states: (s, a) true iff s true.
IndicatorField lift_to_state_actions(const IndicatorField& s_set);

/// Measure of the action slice of q_set at a state cell. Counting measure on
/// discrete grids, cell-volume-weighted count otherwise.
double slice_measure(const IndicatorField& q_set, std::size_t state);

/// Volume-weighted cardinality of a Q set (sum of all slice measures).
double total_measure(const IndicatorField& q_set);

/// Cells whose value strictly exceeds lambda.
IndicatorField level_set(const ScalarField& field, double lambda);

// CSV layout: header, then one row per cell with the axis coordinates (state
// axes s0.., then action axes a0..) followed by the value columns. Rows follow
// the flat cell order of the grid.

struct CsvColumn {
    std::string name;
    std::vector<double> values;
};

void write_csv(std::ostream& out, const ProductGrid& grid, Domain domain,
               const std::vector<CsvColumn>& columns);
void write_csv(std::ostream& out, const IndicatorField& field, const std::string& name = "value");
void write_csv(std::ostream& out, const ScalarField& field, const std::string& name = "value");

/// Parsed CSV: header names and numeric rows.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    /// Index of a named column; throws std::runtime_error if absent.
    std::size_t column(const std::string& name) const;
};

/// Throws std::runtime_error on malformed input.
CsvTable read_csv(std::istream& in);

/// Read a field written by write_csv back onto a known grid. Coordinates must
/// match the grid's cell centers.
ScalarField scalar_field_from_csv(const CsvTable& table, GridPtr grid, Domain domain,
                                  const std::string& column = "value");
IndicatorField indicator_field_from_csv(const CsvTable& table, GridPtr grid, Domain domain,
                                        const std::string& column = "value");

}  // namespace viability
