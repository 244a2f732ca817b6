#include "hmmrates/panel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "hmmrates/error.hpp"
#include "hmmrates/text.hpp"

namespace hmmrates {

std::string Cell::label() const {
    if (kind == CellKind::inception) return std::to_string(age);
    return std::to_string(age) + "/" + format_real(duration);
}

bool cell_less(const Cell& a, const Cell& b) {
    if (a.age != b.age) return a.age < b.age;
    if (a.duration != b.duration) return a.duration < b.duration;
    return a.duration_width < b.duration_width;
}

CellPanel::CellPanel(CellKind kind, std::vector<Cell> cells, int periods, std::vector<std::int64_t> exposure,
                     std::vector<std::int64_t> events, std::vector<std::uint8_t> present)
    : kind_(kind),
      cells_(std::move(cells)),
      periods_(periods),
      exposure_(std::move(exposure)),
      events_(std::move(events)),
      present_(std::move(present)) {
    const std::size_t size = cells_.size() * static_cast<std::size_t>(std::max(periods_, 0));
    if (periods_ < 1) throw ValidationError("panel needs at least one period");
    if (cells_.empty()) throw ValidationError("panel has no cells");
    if (exposure_.size() != size || events_.size() != size)
        throw UsageError("panel arrays do not match cells x periods");
    if (present_.empty()) present_.assign(size, 1);
    if (present_.size() != size) throw UsageError("presence mask does not match cells x periods");
    for (std::size_t c = 0; c < cells_.size(); ++c) {
        const Cell& cell = cells_[c];
        if (cell.kind != kind_) throw ValidationError("cell " + cell.label() + " has the wrong kind");
        if (kind_ == CellKind::termination &&
            (!std::isfinite(cell.duration) || cell.duration < 0.0 || !(cell.duration_width > 0.0)))
            throw ValidationError("termination cell " + cell.label() + " needs d >= 0 and width > 0");
        for (int t = 0; t < periods_; ++t) {
            const auto e = exposure_[index(c, t)];
            const auto n = events_[index(c, t)];
            if (e < 0 || n < 0 || n > e)
                throw ValidationError("cell " + cell.label() + ", period " + std::to_string(t + 1) +
                                      ": need 0 <= events <= exposure, got events=" + std::to_string(n) +
                                      " exposure=" + std::to_string(e));
        }
    }
}

std::pair<int, int> CellPanel::age_range() const {
    int lo = cells_.front().age, hi = cells_.front().age;
    for (const auto& c : cells_) {
        lo = std::min(lo, c.age);
        hi = std::max(hi, c.age);
    }
    return {lo, hi};
}

namespace {

std::int64_t parse_count(const std::string& field, const char* name, long line) {
    std::int64_t value = 0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) {
        throw ParseError(std::string(name) + " must be a nonnegative integer count, got '" + field + "'", line);
    }
    if (value < 0) throw ParseError(std::string(name) + " must be nonnegative, got '" + field + "'", line);
    return value;
}

double parse_duration(const std::string& field, const char* name, long line) {
    try {
        return parse_real(field);
    } catch (const ParseError&) {
        throw ParseError(std::string(name) + " is not a number: '" + field + "'", line);
    }
}

struct Row {
    int period;
    Cell cell;
    std::int64_t exposure;
    std::int64_t events;
    long line;
};

}  // namespace

CellPanel load_panel(std::istream& source, CellKind schema) {
    const std::vector<std::string> expected =
        schema == CellKind::inception
            ? std::vector<std::string>{"period", "age", "exposure", "events"}
            : std::vector<std::string>{"period", "age", "duration", "duration_width", "exposure", "events"};

    std::string text;
    long line_no = 0;
    if (!std::getline(source, text)) throw ParseError("empty panel: missing header row", 1);
    ++line_no;
    strip_line_end(text);
    if (text.size() >= 3 && text.compare(0, 3, "\xEF\xBB\xBF") == 0) text.erase(0, 3);
    const auto header = split_csv(text);
    if (header != expected) {
        std::string want;
        for (const auto& h : expected) want += (want.empty() ? "" : ",") + h;
        throw ParseError("header does not match the " + std::string(to_string(schema)) + " schema (expected '" +
                             want + "', got '" + text + "')",
                         line_no);
    }

    std::vector<Row> rows;
    while (std::getline(source, text)) {
        ++line_no;
        strip_line_end(text);
        if (text.empty()) continue;
        const auto fields = split_csv(text);
        if (fields.size() != expected.size())
            throw ParseError("expected " + std::to_string(expected.size()) + " fields, got " +
                                 std::to_string(fields.size()),
                             line_no);
        Row row{};
        row.line = line_no;
        const auto period = parse_count(fields[0], "period", line_no);
        const auto age = parse_count(fields[1], "age", line_no);
        row.period = static_cast<int>(period);
        if (schema == CellKind::inception) {
            row.cell = Cell::inception(static_cast<int>(age));
            row.exposure = parse_count(fields[2], "exposure", line_no);
            row.events = parse_count(fields[3], "events", line_no);
        } else {
            const double d = parse_duration(fields[2], "duration", line_no);
            const double w = parse_duration(fields[3], "duration_width", line_no);
            if (!(d >= 0.0)) throw ParseError("duration must be nonnegative", line_no);
            if (!(w > 0.0)) throw ParseError("duration_width must be positive", line_no);
            row.cell = Cell::termination(static_cast<int>(age), d, w);
            row.exposure = parse_count(fields[4], "exposure", line_no);
            row.events = parse_count(fields[5], "events", line_no);
        }
        if (row.period < 1) throw ParseError("periods start at 1", line_no);
        if (row.events > row.exposure)
            throw ValidationError("cell " + row.cell.label() + ", period " + std::to_string(row.period) +
                                  ": events " + std::to_string(row.events) + " exceed exposure " +
                                  std::to_string(row.exposure) + " (line " + std::to_string(line_no) + ")");
        rows.push_back(row);
    }
    if (rows.empty()) throw ValidationError("panel has no data rows");

    std::vector<Cell> cells;
    int periods = 0;
    for (const auto& r : rows) {
        cells.push_back(r.cell);
        periods = std::max(periods, r.period);
    }
    std::sort(cells.begin(), cells.end(), cell_less);
    cells.erase(std::unique(cells.begin(), cells.end()), cells.end());

    std::vector<bool> seen_period(static_cast<std::size_t>(periods) + 1, false);
    for (const auto& r : rows) seen_period[static_cast<std::size_t>(r.period)] = true;
    for (int t = 1; t <= periods; ++t)
        if (!seen_period[static_cast<std::size_t>(t)])
            throw ValidationError("periods must be consecutive from 1; period " + std::to_string(t) + " is missing");
    if (periods < 2) throw ValidationError("panel needs at least 2 periods, got " + std::to_string(periods));

    const std::size_t size = cells.size() * static_cast<std::size_t>(periods);
    std::vector<std::int64_t> exposure(size, 0), events(size, 0);
    std::vector<std::uint8_t> present(size, 0);
    for (const auto& r : rows) {
        const auto it = std::lower_bound(cells.begin(), cells.end(), r.cell, cell_less);
        const std::size_t idx = static_cast<std::size_t>(it - cells.begin()) * static_cast<std::size_t>(periods) +
                                static_cast<std::size_t>(r.period - 1);
        if (present[idx])
            throw ValidationError("duplicate row for cell " + r.cell.label() + ", period " +
                                  std::to_string(r.period) + " (line " + std::to_string(r.line) + ")");
        present[idx] = 1;
        exposure[idx] = r.exposure;
        events[idx] = r.events;
    }
    return CellPanel(schema, std::move(cells), periods, std::move(exposure), std::move(events), std::move(present));
}

CellPanel load_panel_file(const std::string& path, CellKind schema) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open panel file '" + path + "'");
    return load_panel(in, schema);
}

void write_panel(std::ostream& out, const CellPanel& panel) {
    const bool term = panel.kind() == CellKind::termination;
    out << (term ? "period,age,duration,duration_width,exposure,events\n" : "period,age,exposure,events\n");
    for (int t = 0; t < panel.periods(); ++t) {
        for (std::size_t c = 0; c < panel.num_cells(); ++c) {
            if (!panel.present(c, t)) continue;
            const Cell& cell = panel.cells()[c];
            out << (t + 1) << ',' << cell.age << ',';
            if (term) out << format_real(cell.duration) << ',' << format_real(cell.duration_width) << ',';
            out << panel.exposure(c, t) << ',' << panel.events(c, t) << '\n';
        }
    }
}

std::vector<std::vector<std::optional<double>>> raw_rates(const CellPanel& panel) {
    std::vector<std::vector<std::optional<double>>> out(panel.num_cells());
    for (std::size_t c = 0; c < panel.num_cells(); ++c) {
        out[c].resize(static_cast<std::size_t>(panel.periods()));
        for (int t = 0; t < panel.periods(); ++t) {
            const auto e = panel.exposure(c, t);
            if (e > 0) out[c][static_cast<std::size_t>(t)] = static_cast<double>(panel.events(c, t)) / static_cast<double>(e);
        }
    }
    return out;
}

CellKind parse_cell_kind(const std::string& name) {
    if (name == "inception") return CellKind::inception;
    if (name == "termination") return CellKind::termination;
    throw UsageError("unknown panel schema '" + name + "' (expected inception or termination)");
}

const char* to_string(CellKind kind) { return kind == CellKind::inception ? "inception" : "termination"; }

}  // namespace hmmrates
