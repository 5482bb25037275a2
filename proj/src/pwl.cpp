#include "posimp/pwl.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace posimp {

namespace {

constexpr double kTauSlack = 1e-12;

}  // namespace

PwlGrid::PwlGrid(double horizon_, int nodes_) : horizon(horizon_), nodes(nodes_) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw std::invalid_argument("PWL grid: horizon must be positive");
    if (nodes < 2) throw std::invalid_argument("PWL grid: need at least 2 nodes");
}

double PwlGrid::tau(int i) const {
    if (i < 0 || i >= nodes) throw DomainError("PWL grid: node index out of range");
    if (i == nodes - 1) return horizon;
    return horizon * static_cast<double>(i) / static_cast<double>(segments());
}

std::pair<int, double> PwlGrid::locate(double t) const {
    const double tol = kTauSlack * std::max(1.0, horizon);
    if (!(t >= -tol && t <= horizon + tol))
        throw DomainError("tau = " + std::to_string(t) + " outside [0, " + std::to_string(horizon) + "]");
    t = std::clamp(t, 0.0, horizon);
    const double u = t / step();
    int k = static_cast<int>(std::floor(u));
    k = std::clamp(k, 0, segments() - 1);
    return {k, std::clamp(u - k, 0.0, 1.0)};
}

PwlFunction::PwlFunction(PwlGrid grid, Vector values) : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.nodes) throw DimensionError("PWL function: value count does not match grid");
    if (!values_.allFinite()) throw std::invalid_argument("PWL function: non-finite node value");
}

double PwlFunction::eval(double tau) const {
    const auto [k, w] = grid_.locate(tau);
    return (1.0 - w) * values_(k) + w * values_(k + 1);
}

double PwlFunction::deriv_on_segment(int segment) const {
    if (segment < 0 || segment >= grid_.segments()) throw DomainError("PWL function: segment index out of range");
    return (values_(segment + 1) - values_(segment)) / grid_.step();
}

PwlFunction PwlFunction::refined() const {
    const PwlGrid fine = grid_.refined();
    Vector v(fine.nodes);
    for (int i = 0; i < grid_.nodes; ++i) v(2 * i) = values_(i);
    for (int i = 0; i + 1 < grid_.nodes; ++i) v(2 * i + 1) = 0.5 * (values_(i) + values_(i + 1));
    return {fine, v};
}

PwlMatrix::PwlMatrix(PwlGrid grid, std::vector<Matrix> nodes) : grid_(grid), nodes_(std::move(nodes)) {
    if (static_cast<int>(nodes_.size()) != grid_.nodes) throw DimensionError("PWL matrix: node count does not match grid");
    for (const auto& m : nodes_)
        if (m.rows() != nodes_.front().rows() || m.cols() != nodes_.front().cols())
            throw DimensionError("PWL matrix: node shapes differ");
}

Matrix PwlMatrix::eval(double tau) const {
    const auto [k, w] = grid_.locate(tau);
    return (1.0 - w) * nodes_[k] + w * nodes_[k + 1];
}

Matrix PwlMatrix::deriv_on_segment(int segment) const {
    if (segment < 0 || segment >= grid_.segments()) throw DomainError("PWL matrix: segment index out of range");
    return (nodes_[segment + 1] - nodes_[segment]) / grid_.step();
}

PwlFunction PwlMatrix::entry(Eigen::Index r, Eigen::Index c) const {
    Vector v(grid_.nodes);
    for (int i = 0; i < grid_.nodes; ++i) v(i) = nodes_[i](r, c);
    return {grid_, v};
}

TimerMatrixFunction PwlMatrix::as_timer_function() const {
    return TimerMatrixFunction::tabulated(grid_.horizon, nodes_);
}

PwlVariableMatrix::PwlVariableMatrix(lp::LinearProgram& lp, const std::string& name, const PwlGrid& grid,
                                     Eigen::Index rows, Eigen::Index cols, const Options& opt)
    : grid_(grid), rows_(rows), cols_(cols) {
    const bool diag = opt.pattern == Pattern::Diagonal;
    if (diag && rows != cols) throw DimensionError("diagonal PWL variable must be square");
    std::vector<int> group_of;
    if (!opt.groups.empty()) {
        if (!diag) throw std::invalid_argument("grouped PWL variable must be diagonal");
        ScalingStructure::grouped(opt.groups).validate(rows);
        group_of.assign(static_cast<std::size_t>(rows), -1);
        for (std::size_t g = 0; g < opt.groups.size(); ++g)
            for (int i : opt.groups[g]) group_of[static_cast<std::size_t>(i)] = static_cast<int>(g);
    }
    const auto entries = static_cast<std::size_t>(rows * cols);
    idx_.assign(entries * static_cast<std::size_t>(grid.nodes), -1);
    for (int node = 0; node < grid.nodes; ++node) {
        std::map<int, int> group_var;
        for (Eigen::Index r = 0; r < rows; ++r)
            for (Eigen::Index c = 0; c < cols; ++c) {
                if (diag && r != c) continue;
                const auto slot = static_cast<std::size_t>(node) * entries + static_cast<std::size_t>(r * cols + c);
                if (opt.time_invariant && node > 0) {
                    idx_[slot] = idx_[static_cast<std::size_t>(r * cols + c)];
                    continue;
                }
                if (!group_of.empty()) {
                    const int g = group_of[static_cast<std::size_t>(r)];
                    if (auto it = group_var.find(g); it != group_var.end()) {
                        idx_[slot] = it->second;
                        continue;
                    }
                }
                std::string vname = name + "[" + std::to_string(r + 1);
                if (!diag) vname += "," + std::to_string(c + 1);
                vname += "]";
                if (!opt.time_invariant) vname += "@" + std::to_string(node);
                const int v = lp.add_variable(vname, opt.lower, opt.upper);
                idx_[slot] = v;
                if (!group_of.empty()) group_var[group_of[static_cast<std::size_t>(r)]] = v;
            }
    }
}

int PwlVariableMatrix::index(int node, Eigen::Index r, Eigen::Index c) const {
    if (node < 0 || node >= grid_.nodes || r < 0 || r >= rows_ || c < 0 || c >= cols_)
        throw DomainError("PWL variable: index out of range");
    return idx_[static_cast<std::size_t>(node) * static_cast<std::size_t>(rows_ * cols_) +
                static_cast<std::size_t>(r * cols_ + c)];
}

lp::LinExpr PwlVariableMatrix::at_node(int node, Eigen::Index r, Eigen::Index c) const {
    const int v = index(node, r, c);
    return v < 0 ? lp::LinExpr() : lp::LinExpr::var(v);
}

lp::LinExpr PwlVariableMatrix::at(double tau, Eigen::Index r, Eigen::Index c) const {
    const auto [k, w] = grid_.locate(tau);
    lp::LinExpr e;
    e.add(at_node(k, r, c), 1.0 - w);
    e.add(at_node(k + 1, r, c), w);
    return e;
}

lp::LinExpr PwlVariableMatrix::slope(int segment, Eigen::Index r, Eigen::Index c) const {
    if (segment < 0 || segment >= grid_.segments()) throw DomainError("PWL variable: segment index out of range");
    const double h = grid_.step();
    lp::LinExpr e;
    e.add(at_node(segment + 1, r, c), 1.0 / h);
    e.add(at_node(segment, r, c), -1.0 / h);
    return e;
}

PwlMatrix PwlVariableMatrix::value(const Vector& solution) const {
    std::vector<Matrix> nodes;
    nodes.reserve(static_cast<std::size_t>(grid_.nodes));
    for (int i = 0; i < grid_.nodes; ++i) {
        Matrix m = Matrix::Zero(rows_, cols_);
        for (Eigen::Index r = 0; r < rows_; ++r)
            for (Eigen::Index c = 0; c < cols_; ++c)
                if (const int v = index(i, r, c); v >= 0) m(r, c) = solution(v);
        nodes.push_back(std::move(m));
    }
    return {grid_, std::move(nodes)};
}

SegmentSampling segment_sampling(const PwlGrid& grid, int segment, int matrix_degree, bool tabulated) {
    if (segment < 0 || segment >= grid.segments()) throw DomainError("segment index out of range");
    SegmentSampling s;
    const double a = grid.tau(segment), b = grid.tau(segment + 1);
    s.taus = {a, b};
    if (tabulated && matrix_degree > 0) {
        s.sound = false;
    } else if (matrix_degree > 0) {
        s.taus.insert(s.taus.begin() + 1, 0.5 * (a + b));
        s.sound = false;
    }
    return s;
}

std::string format_number(double v) {
    std::ostringstream ss;
    ss << v;
    return ss.str();
}

}  // namespace posimp
