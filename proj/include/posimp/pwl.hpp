#pragma once

#include "posimp/core.hpp"
#include "posimp/lp.hpp"

#include <string>
#include <utility>
#include <vector>

namespace posimp {

class DomainError : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

/// Uniform grid tau_i = i * horizon / (nodes - 1), i = 0..nodes-1.
struct PwlGrid {
    double horizon = 1.0;
    int nodes = 21;

    PwlGrid() = default;
    PwlGrid(double horizon, int nodes);

    [[nodiscard]] int segments() const { return nodes - 1; }
    [[nodiscard]] double step() const { return horizon / segments(); }
    [[nodiscard]] double tau(int i) const;
    /// Segment containing tau (right end belongs to the last segment) and the
    /// interpolation weight of its right node. Throws DomainError outside [0, horizon].
    [[nodiscard]] std::pair<int, double> locate(double tau) const;
    /// Same grid with every segment halved.
    [[nodiscard]] PwlGrid refined() const { return {horizon, 2 * nodes - 1}; }
};

class PwlFunction {
  public:
    PwlFunction(PwlGrid grid, Vector values);
    static PwlFunction constant(PwlGrid grid, double c) { return {grid, Vector::Constant(grid.nodes, c)}; }

    [[nodiscard]] const PwlGrid& grid() const { return grid_; }
    [[nodiscard]] const Vector& values() const { return values_; }
    [[nodiscard]] double eval(double tau) const;
    [[nodiscard]] double deriv_on_segment(int segment) const;
    /// Same function on the refined grid.
    [[nodiscard]] PwlFunction refined() const;

  private:
    PwlGrid grid_;
    Vector values_;
};

/// Matrix of PWL functions sharing one grid, stored as node matrices.
class PwlMatrix {
  public:
    PwlMatrix() = default;
    PwlMatrix(PwlGrid grid, std::vector<Matrix> nodes);

    [[nodiscard]] const PwlGrid& grid() const { return grid_; }
    [[nodiscard]] const std::vector<Matrix>& nodes() const { return nodes_; }
    [[nodiscard]] Eigen::Index rows() const { return nodes_.front().rows(); }
    [[nodiscard]] Eigen::Index cols() const { return nodes_.front().cols(); }
    [[nodiscard]] const Matrix& node(int i) const { return nodes_.at(static_cast<std::size_t>(i)); }
    [[nodiscard]] Matrix eval(double tau) const;
    [[nodiscard]] Matrix deriv_on_segment(int segment) const;
    [[nodiscard]] PwlFunction entry(Eigen::Index r, Eigen::Index c) const;
    /// As a timer function (tabulated, clamped beyond the horizon).
    [[nodiscard]] TimerMatrixFunction as_timer_function() const;

  private:
    PwlGrid grid_;
    std::vector<Matrix> nodes_;
};

using PwlVector = PwlMatrix;  // column matrix

/// PWL matrix whose node values are LP variables. Entries outside the
/// pattern are structurally zero (index -1).
class PwlVariableMatrix {
  public:
    enum class Pattern { Full, Diagonal };

    struct Options {
        Pattern pattern = Pattern::Full;
        double lower = -lp::kInf;
        double upper = lp::kInf;
        /// One variable per entry shared by all nodes.
        bool time_invariant = false;
        /// Diagonal only: indices in one group share a variable (per node).
        std::vector<std::vector<int>> groups;
    };

    PwlVariableMatrix() = default;
    /// Adds the variables to lp; names are <name>[r,c]@<node>.
    PwlVariableMatrix(lp::LinearProgram& lp, const std::string& name, const PwlGrid& grid, Eigen::Index rows,
                      Eigen::Index cols, const Options& options);

    [[nodiscard]] const PwlGrid& grid() const { return grid_; }
    [[nodiscard]] Eigen::Index rows() const { return rows_; }
    [[nodiscard]] Eigen::Index cols() const { return cols_; }
    /// Variable index of entry (r, c) at node i, or -1 for a structural zero.
    [[nodiscard]] int index(int node, Eigen::Index r, Eigen::Index c) const;

    [[nodiscard]] lp::LinExpr at_node(int node, Eigen::Index r, Eigen::Index c) const;
    /// Linear interpolation between nodes (tau inside the grid).
    [[nodiscard]] lp::LinExpr at(double tau, Eigen::Index r, Eigen::Index c) const;
    /// Constant slope of the entry on a segment.
    [[nodiscard]] lp::LinExpr slope(int segment, Eigen::Index r, Eigen::Index c) const;

    /// Reads the node values from an LP solution.
    [[nodiscard]] PwlMatrix value(const Vector& solution) const;

  private:
    PwlGrid grid_;
    Eigen::Index rows_ = 0, cols_ = 0;
    std::vector<int> idx_;  // node-major, then row-major entries
};

/// Where a "for all tau in the segment" condition is imposed.
struct SegmentSampling {
    std::vector<double> taus;
    /// True when satisfying the rows at `taus` implies the condition on the
    /// whole segment (left-hand side affine in tau there).
    bool sound = true;
};

/// Sample points for a condition whose left-hand side multiplies PWL
/// variables by system matrices of the given polynomial degree. Constant
/// matrices give the two endpoints (sound). Nonconstant polynomial matrices
/// add the midpoint and tabulated matrices are sampled at the endpoints only;
/// both cases are flagged as not sound.
[[nodiscard]] SegmentSampling segment_sampling(const PwlGrid& grid, int segment, int matrix_degree,
                                               bool tabulated = false);

/// Short decimal rendering used in row names ("0.15", "1").
[[nodiscard]] std::string format_number(double v);

struct RowSpec {
    std::string name;
    lp::LinExpr lhs;
    lp::Relation rel = lp::Relation::LessEqual;
    double rhs = 0.0;
};

struct SegmentRows {
    std::vector<RowSpec> rows;
    bool sound = true;
};

/// Instantiates a per-tau family of rows on one segment. `rows_at(tau,
/// segment)` returns the rows at a given timer value; PWL derivatives inside
/// it should use the segment slope. Row names get an " at tau=<value>" suffix.
template <class RowsAt>
SegmentRows affine_segment_bound(const PwlGrid& grid, int segment, int matrix_degree, bool tabulated,
                                 RowsAt&& rows_at) {
    const SegmentSampling s = segment_sampling(grid, segment, matrix_degree, tabulated);
    SegmentRows out;
    out.sound = s.sound;
    for (double tau : s.taus) {
        std::vector<RowSpec> rows = rows_at(tau, segment);
        for (auto& r : rows) {
            r.name += " at tau=" + format_number(tau);
            out.rows.push_back(std::move(r));
        }
    }
    return out;
}

}  // namespace posimp
