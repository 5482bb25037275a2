#include "posimp/observer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace posimp {

namespace {

std::string idx(Eigen::Index i) { return "[" + std::to_string(i + 1) + "]"; }
std::string idx(Eigen::Index r, Eigen::Index c) {
    return "[" + std::to_string(r + 1) + "," + std::to_string(c + 1) + "]";
}

void require_weight(const Matrix& M, Eigen::Index n, const std::string& name) {
    if (M.cols() != n) throw DimensionError("weight " + name + ": expected " + std::to_string(n) + " columns");
    if (M.size() > 0 && M.minCoeff() < 0.0) throw std::invalid_argument("weight " + name + " must be nonnegative");
    if (M.size() == 0 || M.isZero(0.0)) throw std::invalid_argument("weight " + name + " must be nonzero");
}

// Flow data of one observed mode, measurement maps C, H, F.
struct ModeData {
    TimerMatrixFunction A, G, E;
    Matrix C, H, F;
    Matrix M;
};

struct ModeVars {
    PwlVariableMatrix X, Y;
    std::vector<int> U;  // diagonal scaling, empty in the unconstrained variants
};

class ObserverLp {
  public:
    ObserverLp(const PwlGrid& grid, const ObserverOptions& opt, bool free, bool minimum)
        : grid_(grid), opt_(opt), free_(free), min_(minimum) {
        if (opt.gain_box && opt.gain_box->lo > opt.gain_box->hi)
            throw std::invalid_argument("gain box: lower bound exceeds upper bound");
        if (!(opt.x_min > 0.0)) throw std::invalid_argument("x_min must be positive");
        alpha_ = lp_.add_variable("alpha", opt.lp.margin, opt.alpha_max);
        if (opt.lp.fixed_gamma)
            gamma_ = lp_.add_variable("gamma", *opt.lp.fixed_gamma, *opt.lp.fixed_gamma);
        else
            gamma_ = lp_.add_variable("gamma", opt.lp.margin);
        eps_ = lp_.add_variable("epsilon", opt.lp.eps_min);
    }

    lp::LinearProgram& program() { return lp_; }
    [[nodiscard]] int gamma() const { return gamma_; }
    [[nodiscard]] int alpha() const { return alpha_; }
    [[nodiscard]] int epsilon() const { return eps_; }
    [[nodiscard]] bool sound() const { return sound_; }
    [[nodiscard]] const PwlGrid& grid() const { return grid_; }

    ModeVars mode_vars(Eigen::Index n, Eigen::Index q, const std::string& tag) {
        ModeVars v;
        PwlVariableMatrix::Options xo;
        xo.pattern = PwlVariableMatrix::Pattern::Diagonal;
        xo.lower = opt_.x_min;
        v.X = PwlVariableMatrix(lp_, "X" + tag, grid_, n, n, xo);
        v.Y = PwlVariableMatrix(lp_, "Y" + tag, grid_, n, q, {});
        return v;
    }

    std::vector<int> diag_constant(const std::string& name, Eigen::Index n) {
        std::vector<int> u;
        for (Eigen::Index i = 0; i < n; ++i) u.push_back(lp_.add_variable(name + idx(i), opt_.lp.margin));
        return u;
    }

    // positivity, flow stability and performance rows of one mode
    void mode_rows(const ModeData& m, const ModeVars& v, const std::string& pre) {
        const Eigen::Index n = m.A.rows();
        const int deg = std::max({m.A.degree(), m.G.degree(), m.E.degree()});
        const bool tab = m.A.is_tabulated() || m.G.is_tabulated() || m.E.is_tabulated();
        for (double tau : sample_taus(deg, tab)) {
            const std::string at = " at tau=" + format_number(tau);
            const Matrix A = m.A(tau), G = m.G(tau), E = m.E(tau);
            for (Eigen::Index r = 0; r < n; ++r) {
                for (Eigen::Index c = 0; c < n; ++c) {
                    lp::LinExpr e = entry(v, tau, A, m.C, r, c);
                    if (r == c) e.add(alpha_, 1.0);
                    add({pre + ".pos.A" + idx(r, c) + at, e, lp::Relation::GreaterEqual, 0.0});
                    add({pre + ".pos.G" + idx(r, c) + at, entry(v, tau, G, m.H, r, c), lp::Relation::GreaterEqual,
                         0.0});
                }
                for (Eigen::Index c = 0; c < E.cols(); ++c)
                    add({pre + ".pos.E" + idx(r, c) + at, entry(v, tau, E, m.F, r, c), lp::Relation::GreaterEqual,
                         0.0});
            }
        }

        const TimerMatrixFunction Aflow = free_ ? m.A + m.G : m.A;
        const Matrix Cflow = free_ ? Matrix(m.C + m.H) : m.C;
        for (int seg = 0; seg < grid_.segments(); ++seg) {
            auto rows = affine_segment_bound(grid_, seg, Aflow.degree(), Aflow.is_tabulated(), [&](double tau, int sg) {
                std::vector<RowSpec> out;
                const Matrix A = Aflow(tau);
                for (Eigen::Index j = 0; j < n; ++j) {
                    lp::LinExpr e = v.X.slope(sg, j, j);
                    e += flow_column(m, v, tau, A, Cflow, j);
                    out.push_back({pre + ".flow.x" + idx(j) + " segment " + std::to_string(sg), e,
                                   lp::Relation::LessEqual, 0.0});
                }
                return out;
            });
            sound_ = sound_ && rows.sound;
            for (auto& r : rows.rows) add(std::move(r));
        }
        for (double tau : sample_taus(std::max(m.G.degree(), m.E.degree()), m.G.is_tabulated() || m.E.is_tabulated())) {
            const std::string at = " at tau=" + format_number(tau);
            if (!free_) {
                const Matrix G = m.G(tau);
                for (Eigen::Index l = 0; l < n; ++l) {
                    lp::LinExpr e = column(v, tau, G, m.H, l);
                    e.add(v.U[static_cast<std::size_t>(l)], -1.0);
                    add({pre + ".flow.wD" + idx(l) + at, e, lp::Relation::LessEqual, 0.0});
                }
            }
            const Matrix E = m.E(tau);
            for (Eigen::Index k = 0; k < E.cols(); ++k) {
                lp::LinExpr e = column(v, tau, E, m.F, k);
                e.add(gamma_, -1.0);
                add({pre + ".flow.w" + idx(k) + at, e, lp::Relation::LessEqual, 0.0});
            }
        }
        if (min_) {
            const double tb = grid_.horizon;
            const Matrix A = Aflow(tb);
            for (Eigen::Index j = 0; j < n; ++j) {
                lp::LinExpr e = flow_column(m, v, tb, A, Cflow, j);
                e.add(eps_, 1.0);
                add({pre + ".Tbar.x" + idx(j), e, lp::Relation::LessEqual, 0.0});
            }
        }
        box_rows(v, pre);
    }

    // lo X <= Y <= hi X at every node
    void box_rows(const ModeVars& v, const std::string& pre) {
        if (!opt_.gain_box || v.Y.rows() * v.Y.cols() == 0) return;
        const auto [lo, hi] = *opt_.gain_box;
        const int nodes = v.Y.grid().nodes;
        for (int i = 0; i < nodes; ++i) {
            if (i > 0 && v.Y.index(i, 0, 0) == v.Y.index(0, 0, 0)) break;  // time-invariant Y
            for (Eigen::Index r = 0; r < v.Y.rows(); ++r)
                for (Eigen::Index c = 0; c < v.Y.cols(); ++c) {
                    const std::string at = idx(r, c) + " at node " + std::to_string(i);
                    const int xnode = v.Y.index(i, r, c) == v.Y.index(0, r, c) ? 0 : i;
                    if (std::isfinite(hi)) {
                        lp::LinExpr e = v.Y.at_node(i, r, c);
                        e.add(v.X.at_node(xnode, r, r), -hi);
                        add({pre + ".box.hi" + at, e, lp::Relation::LessEqual, 0.0});
                    }
                    if (std::isfinite(lo)) {
                        lp::LinExpr e = v.Y.at_node(i, r, c);
                        e.add(v.X.at_node(xnode, r, r), -lo);
                        add({pre + ".box.lo" + at, e, lp::Relation::GreaterEqual, 0.0});
                    }
                }
        }
    }

    void add(RowSpec r) {
        if (lp_.implied_by_bounds(r.lhs, r.rel, r.rhs)) return;
        lp_.add_constraint(std::move(r.name), r.lhs, r.rel, r.rhs);
    }

    // column j of 1^T [X(tau) A - Y(tau) C (+ U)] + 1^T M
    lp::LinExpr flow_column(const ModeData& m, const ModeVars& v, double tau, const Matrix& A, const Matrix& C,
                            Eigen::Index j) const {
        lp::LinExpr e = column(v, tau, A, C, j);
        if (!free_) e.add(v.U[static_cast<std::size_t>(j)], 1.0);
        e += m.M.col(j).sum();
        return e;
    }

    // column j of 1^T [X(tau) P - Y(tau) Q]
    static lp::LinExpr column(const ModeVars& v, double tau, const Matrix& P, const Matrix& Q, Eigen::Index j) {
        lp::LinExpr e;
        for (Eigen::Index i = 0; i < P.rows(); ++i) {
            e.add(v.X.at(tau, i, i), P(i, j));
            for (Eigen::Index k = 0; k < Q.rows(); ++k) e.add(v.Y.at(tau, i, k), -Q(k, j));
        }
        return e;
    }

    // entry (r, c) of X(tau) P - Y(tau) Q
    static lp::LinExpr entry(const ModeVars& v, double tau, const Matrix& P, const Matrix& Q, Eigen::Index r,
                             Eigen::Index c) {
        lp::LinExpr e;
        e.add(v.X.at(tau, r, r), P(r, c));
        for (Eigen::Index k = 0; k < Q.rows(); ++k) e.add(v.Y.at(tau, r, k), -Q(k, c));
        return e;
    }

    std::vector<double> sample_taus(int degree, bool tabulated) {
        std::vector<double> taus;
        for (int i = 0; i < grid_.nodes; ++i) {
            taus.push_back(grid_.tau(i));
            if (i + 1 < grid_.nodes && degree > 0 && !tabulated)
                taus.push_back(0.5 * (grid_.tau(i) + grid_.tau(i + 1)));
        }
        if (degree > 0) sound_ = false;
        return taus;
    }

  private:
    PwlGrid grid_;
    ObserverOptions opt_;
    bool free_, min_;
    lp::LinearProgram lp_;
    int alpha_ = -1, gamma_ = -1, eps_ = -1;
    bool sound_ = true;
};

Vector diag_values(const std::vector<int>& vars, const Vector& x) {
    Vector v(static_cast<Eigen::Index>(vars.size()));
    for (std::size_t i = 0; i < vars.size(); ++i) v(static_cast<Eigen::Index>(i)) = x(vars[i]);
    return v;
}

Outcome<ObserverGains> synthesize_impulsive(const ObservedPlant& plant, const DwellTimeConstraint& dt,
                                            DelayScaling scaling, const ObserverOptions& opt, bool minimum) {
    plant.validate();
    dt.validate();
    if (minimum == dt.is_range()) throw std::invalid_argument("dwell-time constraint kind does not match theorem");
    const DelaySystem& s = plant.sys;
    const bool free = scaling == DelayScaling::UnconstrainedPeriodic;
    ObserverTheorem theorem;
    if (minimum)
        theorem = free ? ObserverTheorem::MinFree : ObserverTheorem::MinConstant;
    else
        theorem = free ? ObserverTheorem::RangeFree : ObserverTheorem::RangeConstant;
    const std::string pre = std::string(minimum ? "min" : "range") + (free ? "_free" : "");

    const PwlGrid grid(dt.horizon(), opt.lp.nodes);
    ObserverLp b(grid, opt, free, minimum);
    const Eigen::Index n = s.n();
    ModeVars v = b.mode_vars(n, s.qc(), "c");
    PwlVariableMatrix::Options yd;
    yd.time_invariant = true;
    ModeVars jump;
    jump.X = v.X;
    jump.Y = PwlVariableMatrix(b.program(), "Yd", grid, n, s.qd(), yd);
    if (!free) v.U = b.diag_constant("Uc", n);

    ModeData m{s.A, s.Gc, s.Ec, s.Cc, s.Hc, s.Fc, plant.Mc};
    b.mode_rows(m, v, pre);
    b.box_rows(jump, pre + ".jump");

    // jump positivity at X(0)
    const std::string jp = pre + ".jump";
    for (Eigen::Index r = 0; r < n; ++r) {
        for (Eigen::Index c = 0; c < n; ++c) {
            b.add({jp + ".pos.J" + idx(r, c), ObserverLp::entry(jump, 0.0, s.J, s.Cd, r, c),
                   lp::Relation::GreaterEqual, 0.0});
            b.add({jp + ".pos.Gd" + idx(r, c), ObserverLp::entry(jump, 0.0, s.Gd, s.Hd, r, c),
                   lp::Relation::GreaterEqual, 0.0});
        }
        for (Eigen::Index c = 0; c < s.pd(); ++c)
            b.add({jp + ".pos.Ed" + idx(r, c), ObserverLp::entry(jump, 0.0, s.Ed, s.Fd, r, c),
                   lp::Relation::GreaterEqual, 0.0});
    }
    // jump stability at theta
    std::vector<double> thetas;
    if (minimum) {
        thetas.push_back(grid.horizon);
    } else {
        thetas.push_back(dt.t_min);
        for (int i = 0; i < grid.nodes; ++i)
            if (grid.tau(i) > dt.t_min && grid.tau(i) < dt.t_max) thetas.push_back(grid.tau(i));
        if (dt.t_max > dt.t_min) thetas.push_back(dt.t_max);
    }
    const Matrix Jsum = s.J + s.Gd;
    const Matrix Csum = s.Cd + s.Hd;
    const bool extra_x0 = opt.range_jump_x0_term && theorem == ObserverTheorem::RangeConstant;
    for (double theta : thetas)
        for (Eigen::Index j = 0; j < n; ++j) {
            lp::LinExpr e = ObserverLp::column(jump, 0.0, Jsum, Csum, j);
            e.add(v.X.at(theta, j, j), -1.0);
            if (extra_x0) e.add(v.X.at_node(0, j, j), 1.0);
            e.add(b.epsilon(), 1.0);
            e += plant.Md.col(j).sum();
            b.add({jp + ".x" + idx(j) + " at theta=" + format_number(theta), e, lp::Relation::LessEqual, 0.0});
        }
    for (Eigen::Index k = 0; k < s.pd(); ++k) {
        lp::LinExpr e = ObserverLp::column(jump, 0.0, s.Ed, s.Fd, k);
        e.add(b.gamma(), -1.0);
        b.add({jp + ".w" + idx(k), e, lp::Relation::LessEqual, 0.0});
    }
    if (!opt.lp.fixed_gamma) b.program().set_objective(lp::LinExpr::var(b.gamma()));

    lp::LinearProgram program = std::move(b.program());
    const auto res = lp::solve(program, opt.lp.feastol);
    if (res.status == lp::LpStatus::Infeasible) return explain_infeasible(program, res);
    if (res.status == lp::LpStatus::Unbounded) throw std::runtime_error("observer synthesis LP unbounded");

    ObserverGains g;
    g.theorem = theorem;
    g.dt = dt;
    g.X = v.X.value(res.x);
    g.Yc = v.Y.value(res.x);
    g.Yd = jump.Y.value(res.x).node(0);
    auto [Lc, Ld] = recover_gains(g.X, g.Yc, g.Yd, opt.x_min * (1.0 - 1e-9));
    g.Lc = std::move(Lc);
    g.Ld = std::move(Ld);
    if (!free) g.Uc = diag_values(v.U, res.x);
    g.alpha = res.x(b.alpha());
    g.epsilon = res.x(b.epsilon());
    g.gamma = res.x(b.gamma());
    g.sound = b.sound();
    g.program = std::move(program);
    g.solution = res.x;
    return g;
}

PwlMatrix diagonal_nodes(const PwlMatrix& X) {
    std::vector<Matrix> nodes;
    for (const auto& m : X.nodes()) nodes.emplace_back(Matrix(m.diagonal()));
    return {X.grid(), std::move(nodes)};
}

void check_block(PositivityReport& rep, const std::string& name, const Matrix& M, bool metzler, double tau,
                 double tol) {
    for (Eigen::Index r = 0; r < M.rows(); ++r)
        for (Eigen::Index c = 0; c < M.cols(); ++c) {
            if (metzler && r == c) continue;
            if (M(r, c) < -tol) {
                rep.positive = false;
                rep.violations.push_back({name, r + 1, c + 1, M(r, c), tau});
            }
        }
}

}  // namespace

const char* to_string(ObserverTheorem t) {
    switch (t) {
        case ObserverTheorem::RangeConstant: return "RangeConstant";
        case ObserverTheorem::RangeFree: return "RangeFree";
        case ObserverTheorem::MinConstant: return "MinConstant";
        case ObserverTheorem::MinFree: return "MinFree";
        case ObserverTheorem::SwitchedConstant: return "SwitchedConstant";
        case ObserverTheorem::SwitchedFree: return "SwitchedFree";
    }
    return "?";
}

ObservedPlant& ObservedPlant::complete() {
    sys.complete();
    if (Mc.size() == 0) Mc = Matrix::Identity(sys.n(), sys.n());
    if (Md.size() == 0) Md = Matrix::Identity(sys.n(), sys.n());
    validate();
    return *this;
}

void ObservedPlant::validate() const {
    sys.validate();
    require_weight(Mc, sys.n(), "Mc");
    require_weight(Md, sys.n(), "Md");
}

void SwitchedPlant::validate() const {
    if (modes.size() < 2) throw std::invalid_argument("switched plant needs at least two modes");
    const Eigen::Index nx = n();
    const Eigen::Index q = modes.front().C.rows();
    const Eigen::Index p = modes.front().E.cols();
    for (std::size_t i = 0; i < modes.size(); ++i) {
        const auto& m = modes[i];
        const std::string tag = "mode " + std::to_string(i + 1) + " block ";
        auto chk = [&](const Matrix& M, Eigen::Index r, Eigen::Index c, const char* name) {
            if (M.rows() != r || M.cols() != c)
                throw DimensionError(tag + name + ": expected " + std::to_string(r) + "x" + std::to_string(c) +
                                     ", got " + std::to_string(M.rows()) + "x" + std::to_string(M.cols()));
        };
        chk(m.A, nx, nx, "A");
        chk(m.G, nx, nx, "G");
        chk(m.E, nx, p, "E");
        chk(m.C, q, nx, "C");
        chk(m.H, q, nx, "H");
        chk(m.F, q, p, "F");
    }
    require_weight(M, nx, "M");
    if (!(h_c > 0.0)) throw std::invalid_argument("continuous delay h_c must be positive");
}

ObserverOptions gain_entry_box(ObserverOptions opt, double lo, double hi) {
    if (lo > hi) throw std::invalid_argument("gain box: lower bound exceeds upper bound");
    opt.gain_box = GainBox{lo, hi};
    return opt;
}

std::pair<PwlMatrix, Matrix> recover_gains(const PwlMatrix& X, const PwlMatrix& Yc, const Matrix& Yd, double x_min) {
    if (X.rows() != X.cols()) throw DimensionError("recover_gains: X must be square");
    if (Yc.rows() != X.rows() || Yd.rows() != X.rows()) throw DimensionError("recover_gains: Y rows must match X");
    std::vector<Matrix> nodes;
    for (int i = 0; i < X.grid().nodes; ++i) {
        const Vector d = X.node(i).diagonal();
        if (d.minCoeff() < x_min) throw std::logic_error("recover_gains: diagonal of X below x_min");
        nodes.emplace_back(Matrix(d.cwiseInverse().asDiagonal() * Yc.node(i)));
    }
    Matrix Ld = X.node(0).diagonal().cwiseInverse().asDiagonal() * Yd;
    return {PwlMatrix(X.grid(), std::move(nodes)), Ld};
}

Outcome<ObserverGains> synthesize_range(const ObservedPlant& plant, const DwellTimeConstraint& dt, DelayScaling scaling,
                                        const ObserverOptions& opt) {
    return synthesize_impulsive(plant, dt, scaling, opt, false);
}

Outcome<ObserverGains> synthesize_min(const ObservedPlant& plant, const DwellTimeConstraint& dt, DelayScaling scaling,
                                      const ObserverOptions& opt) {
    return synthesize_impulsive(plant, dt, scaling, opt, true);
}

Outcome<SwitchedGains> synthesize_switched(const SwitchedPlant& plant, const DwellTimeConstraint& dt,
                                           DelayScaling scaling, const ObserverOptions& opt) {
    plant.validate();
    dt.validate();
    if (dt.is_range()) throw std::invalid_argument("switched synthesis needs a minimum dwell-time constraint");
    const bool free = scaling == DelayScaling::UnconstrainedPeriodic;
    const std::string pre = free ? "switched_free" : "switched";
    const PwlGrid grid(dt.horizon(), opt.lp.nodes);
    ObserverLp b(grid, opt, free, true);
    const Eigen::Index n = plant.n();
    const std::size_t N = plant.modes.size();

    std::vector<int> U;
    if (!free) U = b.diag_constant("U", n);
    std::vector<ModeVars> vars;
    for (std::size_t i = 0; i < N; ++i) {
        ModeVars v = b.mode_vars(n, plant.modes[i].C.rows(), std::to_string(i + 1));
        v.U = U;
        vars.push_back(std::move(v));
    }
    for (std::size_t i = 0; i < N; ++i) {
        const auto& md = plant.modes[i];
        ModeData m{md.A, md.G, md.E, md.C, md.H, md.F, plant.M};
        b.mode_rows(m, vars[i], pre + ".mode" + std::to_string(i + 1));
    }
    const int last = grid.nodes - 1;
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j) {
            if (i == j) continue;
            for (Eigen::Index c = 0; c < n; ++c) {
                lp::LinExpr e = vars[i].X.at_node(0, c, c);
                e.add(vars[j].X.at_node(last, c, c), -1.0);
                e.add(b.epsilon(), 1.0);
                b.add({pre + ".switch" + idx(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) + ".x" +
                           idx(c),
                       e, lp::Relation::LessEqual, 0.0});
            }
        }
    if (!opt.lp.fixed_gamma) b.program().set_objective(lp::LinExpr::var(b.gamma()));

    lp::LinearProgram program = std::move(b.program());
    const auto res = lp::solve(program, opt.lp.feastol);
    if (res.status == lp::LpStatus::Infeasible) return explain_infeasible(program, res);
    if (res.status == lp::LpStatus::Unbounded) throw std::runtime_error("observer synthesis LP unbounded");

    SwitchedGains g;
    g.theorem = free ? ObserverTheorem::SwitchedFree : ObserverTheorem::SwitchedConstant;
    g.dt = dt;
    for (std::size_t i = 0; i < N; ++i) {
        ModeGains mg;
        mg.X = vars[i].X.value(res.x);
        mg.Y = vars[i].Y.value(res.x);
        mg.L = recover_gains(mg.X, mg.Y, Matrix::Zero(n, 0), opt.x_min * (1.0 - 1e-9)).first;
        g.modes.push_back(std::move(mg));
    }
    if (!free) g.U = diag_values(U, res.x);
    g.alpha = res.x(b.alpha());
    g.epsilon = res.x(b.epsilon());
    g.gamma = res.x(b.gamma());
    g.sound = b.sound();
    g.program = std::move(program);
    g.solution = res.x;
    return g;
}

DelaySystem closed_error_system(const ObservedPlant& plant, const ObserverGains& gains) {
    const DelaySystem& s = plant.sys;
    const PwlMatrix& L = gains.Lc;
    const bool constant_gain =
        std::all_of(L.nodes().begin(), L.nodes().end(), [&](const Matrix& m) { return m == L.node(0); });
    auto close = [&](const TimerMatrixFunction& P, const Matrix& Q) -> TimerMatrixFunction {
        if (constant_gain) return P + TimerMatrixFunction(Matrix(-L.node(0) * Q));
        std::vector<Matrix> nodes;
        for (int i = 0; i < L.grid().nodes; ++i) nodes.emplace_back(Matrix(P(L.grid().tau(i)) - L.node(i) * Q));
        return TimerMatrixFunction::tabulated(L.grid().horizon, std::move(nodes));
    };
    DelaySystem e;
    e.A = close(s.A, s.Cc);
    e.Gc = close(s.Gc, s.Hc);
    e.Ec = close(s.Ec, s.Fc);
    e.J = s.J - gains.Ld * s.Cd;
    e.Gd = s.Gd - gains.Ld * s.Hd;
    e.Ed = s.Ed - gains.Ld * s.Fd;
    e.Cc = plant.Mc;
    e.Hc = Matrix::Zero(plant.Mc.rows(), s.n());
    e.Fc = Matrix::Zero(plant.Mc.rows(), s.pc());
    e.Cd = plant.Md;
    e.Hd = Matrix::Zero(plant.Md.rows(), s.n());
    e.Fd = Matrix::Zero(plant.Md.rows(), s.pd());
    e.h_c = s.h_c;
    e.h_d = s.h_d;
    e.validate();
    return e;
}

PositivityReport error_positivity(const ObservedPlant& plant, const ObserverGains& gains, double tol) {
    const LftPositiveSystem lft = to_lft(closed_error_system(plant, gains));
    std::vector<double> taus;
    for (int i = 0; i < gains.Lc.grid().nodes; ++i) taus.push_back(gains.Lc.grid().tau(i));
    return check_internal_positivity(lft, taus, tol);
}

PositivityReport error_positivity(const SwitchedPlant& plant, const SwitchedGains& gains, double tol) {
    PositivityReport rep;
    for (std::size_t i = 0; i < plant.modes.size(); ++i) {
        const auto& m = plant.modes[i];
        const auto& L = gains.modes.at(i).L;
        const std::string k = std::to_string(i + 1);
        for (int node = 0; node < L.grid().nodes; ++node) {
            const double tau = L.grid().tau(node);
            check_block(rep, "A" + k + "-L" + k + "C" + k, m.A - L.node(node) * m.C, true, tau, tol);
            check_block(rep, "G" + k + "-L" + k + "H" + k, m.G - L.node(node) * m.H, false, tau, tol);
            check_block(rep, "E" + k + "-L" + k + "F" + k, m.E - L.node(node) * m.F, false, tau, tol);
        }
    }
    return rep;
}

std::vector<lp::Violation> verify_error_certificate(const ObservedPlant& plant, const ObserverGains& gains,
                                                    double feastol) {
    const bool free = gains.theorem == ObserverTheorem::RangeFree || gains.theorem == ObserverTheorem::MinFree;
    const bool minimum = gains.theorem == ObserverTheorem::MinConstant || gains.theorem == ObserverTheorem::MinFree;
    if (gains.theorem == ObserverTheorem::SwitchedConstant || gains.theorem == ObserverTheorem::SwitchedFree)
        throw std::invalid_argument("verify_error_certificate: impulsive gains expected");
    const DelayScaling scaling = free ? DelayScaling::UnconstrainedPeriodic : DelayScaling::Constant;
    const LftPositiveSystem sys = delay_certification_system(closed_error_system(plant, gains), scaling);
    LpOptions o;
    o.nodes = gains.X.grid().nodes;
    const auto program =
        build_certify_lp(sys, gains.dt, minimum ? CertTheorem::MinConstrained : CertTheorem::RangeConstrained,
                         free ? ScalingStructure::unconstrained() : ScalingStructure::constant(), o);

    std::map<std::string, double> value;
    const PwlMatrix xd = diagonal_nodes(gains.X);
    for (int i = 0; i < xd.grid().nodes; ++i)
        for (Eigen::Index j = 0; j < xd.rows(); ++j)
            value["zeta" + idx(j, 0) + "@" + std::to_string(i)] = xd.node(i)(j, 0);
    if (gains.Uc)
        for (Eigen::Index l = 0; l < gains.Uc->size(); ++l) value["mu_c" + idx(l, 0)] = (*gains.Uc)(l);
    value["gamma"] = gains.gamma;
    value["epsilon"] = gains.epsilon;

    Vector x(program.num_variables());
    for (int k = 0; k < program.num_variables(); ++k) {
        const auto& name = program.variables()[static_cast<std::size_t>(k)].name;
        const auto it = value.find(name);
        if (it == value.end()) throw std::logic_error("verify_error_certificate: no value for " + name);
        x(k) = it->second;
    }
    return lp::verify(program, x, feastol);
}

}  // namespace posimp
