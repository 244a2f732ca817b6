#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "hmmrates/linalg.hpp"
#include "hmmrates/panel.hpp"

namespace hmmrates {

enum class BasisKind { linear2, piecewise3, tensor, custom };
enum class AgeFamily { linear2, piecewise3 };
// linear: psi = (1, d); exponential: psi = (1, e^-d, e^-2d)
enum class DurationFamily { linear, exponential };

// A family of basis functions mapping a cell to its design vector. The
// termination tensor form phi^i(x) psi^j(d) is flattened row-major, age index
// outer, so component (i, j) sits at position i * k + j.
class BasisSet {
public:
    static BasisSet linear2(int age_lo = 25, int age_hi = 64);
    static BasisSet piecewise3(double midpoint = 40.0, int age_lo = 25, int age_hi = 64);
    static BasisSet tensor(AgeFamily age, DurationFamily duration, int age_lo = 25, int age_hi = 64,
                           double midpoint = 40.0);
    // Tabulated values. Keys are (age, duration); duration is ignored (0) for
    // inception tables.
    static BasisSet custom(CellKind target, std::map<std::pair<int, double>, std::vector<double>> table);

    BasisKind kind() const { return kind_; }
    CellKind target() const { return target_; }
    int dim() const { return dim_; }
    int age_bases() const { return age_bases_; }
    int duration_bases() const { return duration_bases_; }
    std::pair<int, int> age_range() const { return {age_lo_, age_hi_}; }
    double midpoint() const { return midpoint_; }
    AgeFamily age_family() const { return age_family_; }
    DurationFamily duration_family() const { return duration_family_; }

    // "1", "2", ... or "1:1", "1:2", ... for tensor bases.
    std::vector<std::string> labels() const;

    Vector age_values(double age) const;
    Vector duration_values(double duration) const;

private:
    BasisSet() = default;

    BasisKind kind_ = BasisKind::linear2;
    CellKind target_ = CellKind::inception;
    int dim_ = 0;
    int age_bases_ = 0;
    int duration_bases_ = 1;
    int age_lo_ = 25;
    int age_hi_ = 64;
    double midpoint_ = 40.0;
    AgeFamily age_family_ = AgeFamily::linear2;
    DurationFamily duration_family_ = DurationFamily::linear;
    std::map<std::pair<int, double>, std::vector<double>> table_;

    friend Vector eval_design(const BasisSet&, const Cell&);
};

// Design vector phi(cell) with logit p = <nu, phi(cell)>.
Vector eval_design(const BasisSet& basis, const Cell& cell);

// |cells| x p matrix of design rows.
RowMatrix design_matrix(const BasisSet& basis, const std::vector<Cell>& cells);

// True iff the design matrix over `cells` has full column rank (smallest
// singular value above 1e-10 times the largest).
bool check_rank(const BasisSet& basis, const std::vector<Cell>& cells);

// Reads a custom basis table: `age[,duration],phi_1,...,phi_p`.
BasisSet load_custom_basis(std::istream& in);

}  // namespace hmmrates
