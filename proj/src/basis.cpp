#include "hmmrates/basis.hpp"

#include <cmath>
#include <istream>

#include "hmmrates/error.hpp"
#include "hmmrates/text.hpp"

namespace hmmrates {

namespace {

void check_age_range(int lo, int hi) {
    if (!(lo < hi)) throw UsageError("age range must satisfy lo < hi");
}

}  // namespace

BasisSet BasisSet::linear2(int age_lo, int age_hi) {
    check_age_range(age_lo, age_hi);
    BasisSet b;
    b.kind_ = BasisKind::linear2;
    b.age_family_ = AgeFamily::linear2;
    b.age_lo_ = age_lo;
    b.age_hi_ = age_hi;
    b.age_bases_ = 2;
    b.dim_ = 2;
    return b;
}

BasisSet BasisSet::piecewise3(double midpoint, int age_lo, int age_hi) {
    check_age_range(age_lo, age_hi);
    if (!(midpoint > age_lo && midpoint < age_hi))
        throw UsageError("piecewise3 midpoint must lie strictly inside the age range");
    BasisSet b;
    b.kind_ = BasisKind::piecewise3;
    b.age_family_ = AgeFamily::piecewise3;
    b.age_lo_ = age_lo;
    b.age_hi_ = age_hi;
    b.midpoint_ = midpoint;
    b.age_bases_ = 3;
    b.dim_ = 3;
    return b;
}

BasisSet BasisSet::tensor(AgeFamily age, DurationFamily duration, int age_lo, int age_hi, double midpoint) {
    BasisSet b = age == AgeFamily::linear2 ? linear2(age_lo, age_hi) : piecewise3(midpoint, age_lo, age_hi);
    b.kind_ = BasisKind::tensor;
    b.target_ = CellKind::termination;
    b.duration_family_ = duration;
    b.duration_bases_ = duration == DurationFamily::linear ? 2 : 3;
    b.dim_ = b.age_bases_ * b.duration_bases_;
    return b;
}

BasisSet BasisSet::custom(CellKind target, std::map<std::pair<int, double>, std::vector<double>> table) {
    if (table.empty()) throw UsageError("custom basis table is empty");
    BasisSet b;
    b.kind_ = BasisKind::custom;
    b.target_ = target;
    b.dim_ = static_cast<int>(table.begin()->second.size());
    if (b.dim_ < 1) throw UsageError("custom basis needs at least one function");
    b.age_lo_ = table.begin()->first.first;
    b.age_hi_ = table.begin()->first.first;
    for (const auto& [key, row] : table) {
        if (static_cast<int>(row.size()) != b.dim_) throw UsageError("custom basis rows differ in length");
        for (double v : row)
            if (!std::isfinite(v)) throw UsageError("custom basis values must be finite");
        b.age_lo_ = std::min(b.age_lo_, key.first);
        b.age_hi_ = std::max(b.age_hi_, key.first);
    }
    b.age_bases_ = b.dim_;
    b.table_ = std::move(table);
    return b;
}

std::vector<std::string> BasisSet::labels() const {
    std::vector<std::string> out;
    if (kind_ == BasisKind::tensor) {
        for (int i = 1; i <= age_bases_; ++i)
            for (int j = 1; j <= duration_bases_; ++j) out.push_back(std::to_string(i) + ":" + std::to_string(j));
    } else {
        for (int i = 1; i <= dim_; ++i) out.push_back(std::to_string(i));
    }
    return out;
}

Vector BasisSet::age_values(double x) const {
    const double lo = age_lo_, hi = age_hi_;
    Vector phi(age_bases_);
    if (age_family_ == AgeFamily::linear2) {
        phi << (hi - x) / (hi - lo), (x - lo) / (hi - lo);
        return phi;
    }
    const double mid = midpoint_;
    if (x < mid) {
        phi << 1.0 - (x - lo) / (mid - lo), (x - lo) / (mid - lo), 0.0;
    } else {
        phi << 0.0, (hi - x) / (hi - mid), (x - mid) / (hi - mid);
    }
    return phi;
}

Vector BasisSet::duration_values(double d) const {
    Vector psi(duration_bases_);
    if (duration_family_ == DurationFamily::linear)
        psi << 1.0, d;
    else
        psi << 1.0, std::exp(-d), std::exp(-2.0 * d);
    return psi;
}

Vector eval_design(const BasisSet& basis, const Cell& cell) {
    if (cell.kind != basis.target())
        throw UsageError(std::string(to_string(cell.kind)) + " cell " + cell.label() +
                         " cannot be evaluated with a " + to_string(basis.target()) + " basis");
    const auto [lo, hi] = basis.age_range();
    if (cell.age < lo || cell.age > hi)
        throw DomainError("age " + std::to_string(cell.age) + " outside basis range [" + std::to_string(lo) + ", " +
                          std::to_string(hi) + "]");

    if (basis.kind() == BasisKind::custom) {
        const double d = cell.kind == CellKind::termination ? cell.duration : 0.0;
        const auto it = basis.table_.find({cell.age, d});
        if (it == basis.table_.end()) throw DomainError("custom basis has no row for cell " + cell.label());
        return Eigen::Map<const Vector>(it->second.data(), static_cast<Eigen::Index>(it->second.size()));
    }

    const Vector phi = basis.age_values(cell.age);
    if (basis.kind() != BasisKind::tensor) return phi;

    const Vector psi = basis.duration_values(cell.duration);
    Vector out(basis.dim());
    for (int i = 0; i < phi.size(); ++i)
        for (int j = 0; j < psi.size(); ++j) out(i * psi.size() + j) = phi(i) * psi(j);
    return out;
}

RowMatrix design_matrix(const BasisSet& basis, const std::vector<Cell>& cells) {
    RowMatrix out(static_cast<Eigen::Index>(cells.size()), basis.dim());
    for (std::size_t c = 0; c < cells.size(); ++c) out.row(static_cast<Eigen::Index>(c)) = eval_design(basis, cells[c]);
    return out;
}

bool check_rank(const BasisSet& basis, const std::vector<Cell>& cells) {
    if (cells.empty()) throw UsageError("check_rank needs at least one cell");
    if (cells.size() < static_cast<std::size_t>(basis.dim())) return false;
    const Matrix design = design_matrix(basis, cells);
    Eigen::JacobiSVD<Matrix> svd(design);
    const auto& s = svd.singularValues();
    if (s.size() == 0 || s(0) <= 0.0) return false;
    return s(s.size() - 1) > 1e-10 * s(0);
}

BasisSet load_custom_basis(std::istream& in) {
    std::string text;
    long line_no = 1;
    if (!std::getline(in, text)) throw ParseError("empty basis file", 1);
    strip_line_end(text);
    const auto header = split_csv(text);
    if (header.size() < 2 || header[0] != "age") throw ParseError("basis header must start with 'age'", 1);
    const bool has_duration = header[1] == "duration";
    const std::size_t first_phi = has_duration ? 2 : 1;
    const std::size_t p = header.size() - first_phi;
    if (p == 0) throw ParseError("basis file has no phi columns", 1);
    for (std::size_t i = 0; i < p; ++i)
        if (header[first_phi + i] != "phi_" + std::to_string(i + 1))
            throw ParseError("expected column phi_" + std::to_string(i + 1), 1);

    std::map<std::pair<int, double>, std::vector<double>> table;
    while (std::getline(in, text)) {
        ++line_no;
        strip_line_end(text);
        if (text.empty()) continue;
        const auto fields = split_csv(text);
        if (fields.size() != header.size()) throw ParseError("wrong number of fields", line_no);
        try {
            const int age = static_cast<int>(parse_real(fields[0]));
            const double d = has_duration ? parse_real(fields[1]) : 0.0;
            std::vector<double> row(p);
            for (std::size_t i = 0; i < p; ++i) row[i] = parse_real(fields[first_phi + i]);
            if (!table.emplace(std::make_pair(age, d), std::move(row)).second)
                throw ParseError("duplicate basis row", line_no);
        } catch (const ParseError& e) {
            throw ParseError(e.what(), line_no);
        }
    }
    return BasisSet::custom(has_duration ? CellKind::termination : CellKind::inception, std::move(table));
}

}  // namespace hmmrates
