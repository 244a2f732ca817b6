#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace hmmrates {

enum class CellKind { inception, termination };

// One age (inception) or age x duration bucket (termination).
struct Cell {
    CellKind kind = CellKind::inception;
    int age = 0;
    double duration = 0.0;        // termination only
    double duration_width = 0.0;  // termination only

    static Cell inception(int age) { return {CellKind::inception, age, 0.0, 0.0}; }
    static Cell termination(int age, double duration, double width) {
        return {CellKind::termination, age, duration, width};
    }

    // "25" or "25/1.5" -- used as cell_id in exported tables.
    std::string label() const;

    friend bool operator==(const Cell&, const Cell&) = default;
};

bool cell_less(const Cell& a, const Cell& b);

// Exposures and event counts per cell and period. Immutable once built;
// periods are 1-based in the interface and 0-based in the accessors below.
class CellPanel {
public:
    CellPanel(CellKind kind, std::vector<Cell> cells, int periods, std::vector<std::int64_t> exposure,
              std::vector<std::int64_t> events, std::vector<std::uint8_t> present = {});

    CellKind kind() const { return kind_; }
    int periods() const { return periods_; }
    std::size_t num_cells() const { return cells_.size(); }
    const std::vector<Cell>& cells() const { return cells_; }

    // t is 0-based here.
    std::int64_t exposure(std::size_t cell, int t) const { return exposure_[index(cell, t)]; }
    std::int64_t events(std::size_t cell, int t) const { return events_[index(cell, t)]; }
    // False for combinations absent from the source (stored as E = N = 0).
    bool present(std::size_t cell, int t) const { return present_[index(cell, t)] != 0; }

    std::pair<int, int> age_range() const;

private:
    std::size_t index(std::size_t cell, int t) const {
        return cell * static_cast<std::size_t>(periods_) + static_cast<std::size_t>(t);
    }

    CellKind kind_;
    std::vector<Cell> cells_;
    int periods_;
    std::vector<std::int64_t> exposure_;
    std::vector<std::int64_t> events_;
    std::vector<std::uint8_t> present_;
};

// Parses the panel CSV (header row required, see README for both schemas).
// Throws ParseError for malformed rows or a header that does not match the
// schema, ValidationError for invariant violations.
CellPanel load_panel(std::istream& source, CellKind schema);
CellPanel load_panel_file(const std::string& path, CellKind schema);

// Writes the rows present in the panel in (period, cell) order.
void write_panel(std::ostream& out, const CellPanel& panel);

// N/E per cell (rows) and period (columns); nullopt where E = 0.
std::vector<std::vector<std::optional<double>>> raw_rates(const CellPanel& panel);

CellKind parse_cell_kind(const std::string& name);
const char* to_string(CellKind kind);

}  // namespace hmmrates
