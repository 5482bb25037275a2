#include "posimp/certify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace posimp {

const char* to_string(CertTheorem t) {
    switch (t) {
        case CertTheorem::RangeConstrained: return "RangeConstrained";
        case CertTheorem::MinConstrained: return "MinConstrained";
        case CertTheorem::RangeFree: return "RangeFree";
        case CertTheorem::MinFree: return "MinFree";
    }
    return "?";
}

Infeasible explain_infeasible(const lp::LinearProgram& program, const lp::LpOutcome& outcome) {
    Infeasible why;
    why.farkas = outcome.farkas;
    why.farkas_verified = lp::is_farkas_certificate(program, outcome.farkas);
    std::vector<int> order;
    for (int i = 0; i < outcome.farkas.size(); ++i)
        if (std::abs(outcome.farkas(i)) > 1e-9) order.push_back(i);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return std::abs(outcome.farkas(a)) > std::abs(outcome.farkas(b)); });
    for (int i : order) why.conditions.push_back(program.constraints()[static_cast<std::size_t>(i)].name);
    return why;
}

namespace {

std::string idx(Eigen::Index i) { return "[" + std::to_string(i + 1) + "]"; }

class Builder {
  public:
    Builder(const LftPositiveSystem& sys, const DwellTimeConstraint& dt, bool minimum,
            const ScalingStructure& scalings, const LpOptions& opt)
        : s_(sys), dt_(dt), min_(minimum), opt_(opt), grid_(dt.horizon(), opt.nodes) {
        sys.validate();
        dt.validate();
        if (minimum == dt.is_range()) throw std::invalid_argument("dwell-time constraint kind does not match theorem");
        scalings.validate(sys.ncD());
        if (scalings.kind == ScalingStructure::Kind::Grouped && sys.ndD() > 0) scalings.validate(sys.ndD());
        pre1_ = min_ ? "minDT2" : "RangeDT1";
        pre2_ = min_ ? "minDT3" : "RangeDT2";

        PwlVariableMatrix::Options zo;
        zeta_ = PwlVariableMatrix(lp_, "zeta", grid_, sys.n(), 1, zo);
        if (sys.ncD() > 0) {
            PwlVariableMatrix::Options mo;
            mo.lower = opt.margin;
            mo.time_invariant = scalings.kind == ScalingStructure::Kind::Constant;
            if (scalings.kind == ScalingStructure::Kind::Grouped) {
                // groups tie entries of the diagonal scaling: store as a diagonal pattern
                mo.pattern = PwlVariableMatrix::Pattern::Diagonal;
                mo.groups = scalings.groups;
                mu_c_ = PwlVariableMatrix(lp_, "mu_c", grid_, sys.ncD(), sys.ncD(), mo);
                mu_diag_ = true;
            } else {
                mu_c_ = PwlVariableMatrix(lp_, "mu_c", grid_, sys.ncD(), 1, mo);
            }
        }
        std::vector<int> group_var;
        for (Eigen::Index l = 0; l < sys.ndD(); ++l) {
            int g = -1;
            if (scalings.kind == ScalingStructure::Kind::Grouped)
                for (std::size_t k = 0; k < scalings.groups.size(); ++k)
                    if (std::count(scalings.groups[k].begin(), scalings.groups[k].end(), static_cast<int>(l)))
                        g = static_cast<int>(k);
            if (g >= 0 && static_cast<int>(group_var.size()) > g && group_var[static_cast<std::size_t>(g)] >= 0) {
                mu_d_.push_back(group_var[static_cast<std::size_t>(g)]);
                continue;
            }
            const int v = lp_.add_variable("mu_d" + idx(l), opt.margin);
            mu_d_.push_back(v);
            if (g >= 0) {
                group_var.resize(std::max(group_var.size(), static_cast<std::size_t>(g) + 1), -1);
                group_var[static_cast<std::size_t>(g)] = v;
            }
        }
        if (opt.fixed_gamma)
            gamma_ = lp_.add_variable("gamma", *opt.fixed_gamma, *opt.fixed_gamma);
        else
            gamma_ = lp_.add_variable("gamma", opt.margin);
        eps_ = lp_.add_variable("epsilon", opt.eps_min);
    }

    lp::LinearProgram build() {
        const Eigen::Index n = s_.n();
        for (Eigen::Index i = 0; i < n; ++i)
            add({"zeta(0)>0" + idx(i), zeta_.at_node(0, i, 0), lp::Relation::GreaterEqual, opt_.margin});
        if (min_)
            for (Eigen::Index i = 0; i < n; ++i)
                add({"zeta(Tbar)>0" + idx(i), zeta_.at_node(grid_.nodes - 1, i, 0), lp::Relation::GreaterEqual,
                     opt_.margin});

        // flow, x block: carries the derivative, imposed per segment
        const int deg_x = s_.A.degree();
        for (int seg = 0; seg < grid_.segments(); ++seg) {
            auto rows = affine_segment_bound(grid_, seg, deg_x, s_.A.is_tabulated(), [&](double tau, int sg) {
                std::vector<RowSpec> out;
                const Matrix A = s_.A(tau);
                for (Eigen::Index j = 0; j < n; ++j) {
                    lp::LinExpr e = zeta_.slope(sg, j, 0);
                    add_flow_x(e, A, tau, j);
                    out.push_back({pre1_ + ".x" + idx(j) + " segment " + std::to_string(sg), e,
                                   lp::Relation::LessEqual, 0.0});
                }
                return out;
            });
            sound_ = sound_ && rows.sound;
            for (auto& r : rows.rows) add(std::move(r));
        }
        // flow, channel blocks: no derivative, imposed at nodes
        for (double tau : node_taus(std::max(s_.Gc.degree(), s_.Ec.degree()),
                                    s_.Gc.is_tabulated() || s_.Ec.is_tabulated()))
            add_flow_channels(tau, pre1_);
        if (min_) {
            const double tb = grid_.horizon;
            const Matrix A = s_.A(tb);
            for (Eigen::Index j = 0; j < n; ++j) {
                lp::LinExpr e;
                add_flow_x(e, A, tb, j);
                e.add(eps_, 1.0);
                add({"minDT1.x" + idx(j), e, lp::Relation::LessEqual, 0.0});
            }
        }

        // jump
        for (double theta : theta_grid()) {
            for (Eigen::Index j = 0; j < n; ++j) {
                lp::LinExpr e;
                for (Eigen::Index i = 0; i < n; ++i) e.add(zeta_.at_node(0, i, 0), s_.J(i, j));
                for (Eigen::Index l = 0; l < s_.ndD(); ++l) e.add(mu_d_[static_cast<std::size_t>(l)], s_.CdD(l, j));
                e += s_.Cd.col(j).sum();
                e.add(zeta_.at(theta, j, 0), -1.0);
                e.add(eps_, 1.0);
                add({pre2_ + ".x" + idx(j) + " at theta=" + format_number(theta), e, lp::Relation::LessEqual, 0.0});
            }
        }
        for (Eigen::Index l = 0; l < s_.ndD(); ++l) {
            lp::LinExpr e;
            for (Eigen::Index i = 0; i < n; ++i) e.add(zeta_.at_node(0, i, 0), s_.Gd(i, l));
            for (Eigen::Index k = 0; k < s_.ndD(); ++k)
                e.add(mu_d_[static_cast<std::size_t>(k)], s_.HdD(k, l) - (k == l ? 1.0 : 0.0));
            e += s_.Hd.col(l).sum();
            add({pre2_ + ".wD" + idx(l), e, lp::Relation::LessEqual, 0.0});
        }
        for (Eigen::Index k = 0; k < s_.pd(); ++k) {
            lp::LinExpr e;
            for (Eigen::Index i = 0; i < n; ++i) e.add(zeta_.at_node(0, i, 0), s_.Ed(i, k));
            for (Eigen::Index l = 0; l < s_.ndD(); ++l) e.add(mu_d_[static_cast<std::size_t>(l)], s_.FdD(l, k));
            e += s_.Fd.col(k).sum();
            e.add(gamma_, -1.0);
            add({pre2_ + ".w" + idx(k), e, lp::Relation::LessEqual, 0.0});
        }
        if (!opt_.fixed_gamma) lp_.set_objective(lp::LinExpr::var(gamma_));
        return std::move(lp_);
    }

    Outcome<Certificate> solve(CertTheorem theorem) {
        lp::LinearProgram program = build();
        const auto res = lp::solve(program, opt_.feastol);
        if (res.status == lp::LpStatus::Infeasible) return explain_infeasible(program, res);
        if (res.status == lp::LpStatus::Unbounded) throw std::runtime_error("certification LP unbounded");
        Certificate c;
        c.theorem = theorem;
        c.zeta = zeta_.value(res.x);
        if (s_.ncD() > 0) {
            PwlMatrix m = mu_c_.value(res.x);
            if (mu_diag_) {
                std::vector<Matrix> nodes;
                for (const auto& nd : m.nodes()) nodes.emplace_back(Matrix(nd.diagonal()));
                m = PwlMatrix(m.grid(), std::move(nodes));
            }
            c.mu_c = std::move(m);
        }
        if (!mu_d_.empty()) {
            Vector v(static_cast<Eigen::Index>(mu_d_.size()));
            for (std::size_t l = 0; l < mu_d_.size(); ++l) v(static_cast<Eigen::Index>(l)) = res.x(mu_d_[l]);
            c.mu_d = v;
        }
        c.gamma = res.x(gamma_);
        c.epsilon = res.x(eps_);
        c.sound = sound_;
        c.program = std::move(program);
        c.solution = res.x;
        return c;
    }

  private:
    const LftPositiveSystem& s_;
    DwellTimeConstraint dt_;
    bool min_;
    LpOptions opt_;
    PwlGrid grid_;
    lp::LinearProgram lp_;
    PwlVariableMatrix zeta_, mu_c_;
    bool mu_diag_ = false;
    std::vector<int> mu_d_;
    int gamma_ = -1, eps_ = -1;
    bool sound_ = true;
    std::string pre1_, pre2_;

    void add(RowSpec r) {
        if (lp_.implied_by_bounds(r.lhs, r.rel, r.rhs)) return;
        lp_.add_constraint(std::move(r.name), r.lhs, r.rel, r.rhs);
    }

    [[nodiscard]] lp::LinExpr mu_at(double tau, Eigen::Index l) const {
        return mu_diag_ ? mu_c_.at(tau, l, l) : mu_c_.at(tau, l, 0);
    }

    // zeta(tau)^T A(:, j) + mu_c(tau)^T CcD(:, j) + 1^T Cc(:, j)
    void add_flow_x(lp::LinExpr& e, const Matrix& A, double tau, Eigen::Index j) const {
        for (Eigen::Index i = 0; i < s_.n(); ++i) e.add(zeta_.at(tau, i, 0), A(i, j));
        for (Eigen::Index l = 0; l < s_.ncD(); ++l) e.add(mu_at(tau, l), s_.CcD(l, j));
        e += s_.Cc.col(j).sum();
    }

    void add_flow_channels(double tau, const std::string& pre) {
        const Eigen::Index n = s_.n();
        const std::string at = " at tau=" + format_number(tau);
        if (s_.ncD() > 0) {
            const Matrix G = s_.Gc(tau);
            for (Eigen::Index l = 0; l < s_.ncD(); ++l) {
                lp::LinExpr e;
                for (Eigen::Index i = 0; i < n; ++i) e.add(zeta_.at(tau, i, 0), G(i, l));
                for (Eigen::Index k = 0; k < s_.ncD(); ++k)
                    e.add(mu_at(tau, k), s_.HcD(k, l) - (k == l ? 1.0 : 0.0));
                e += s_.Hc.col(l).sum();
                add({pre + ".wD" + idx(l) + at, e, lp::Relation::LessEqual, 0.0});
            }
        }
        if (s_.pc() > 0) {
            const Matrix E = s_.Ec(tau);
            for (Eigen::Index k = 0; k < s_.pc(); ++k) {
                lp::LinExpr e;
                for (Eigen::Index i = 0; i < n; ++i) e.add(zeta_.at(tau, i, 0), E(i, k));
                for (Eigen::Index l = 0; l < s_.ncD(); ++l) e.add(mu_at(tau, l), s_.FcD(l, k));
                e += s_.Fc.col(k).sum();
                e.add(gamma_, -1.0);
                add({pre + ".w" + idx(k) + at, e, lp::Relation::LessEqual, 0.0});
            }
        }
    }

    [[nodiscard]] std::vector<double> node_taus(int degree, bool tabulated) {
        std::vector<double> taus;
        for (int i = 0; i < grid_.nodes; ++i) {
            taus.push_back(grid_.tau(i));
            if (i + 1 < grid_.nodes && degree > 0 && !tabulated) taus.push_back(0.5 * (grid_.tau(i) + grid_.tau(i + 1)));
        }
        if (degree > 0) sound_ = false;
        return taus;
    }

    [[nodiscard]] std::vector<double> theta_grid() const {
        if (min_) return {grid_.horizon};
        std::vector<double> th{dt_.t_min};
        for (int i = 0; i < grid_.nodes; ++i) {
            const double t = grid_.tau(i);
            if (t > dt_.t_min && t < dt_.t_max) th.push_back(t);
        }
        if (dt_.t_max > dt_.t_min) th.push_back(dt_.t_max);
        return th;
    }
};

bool is_min(CertTheorem t) { return t == CertTheorem::MinConstrained || t == CertTheorem::MinFree; }
bool is_free(CertTheorem t) { return t == CertTheorem::RangeFree || t == CertTheorem::MinFree; }

Outcome<Certificate> run(const LftPositiveSystem& sys, const DwellTimeConstraint& dt, CertTheorem theorem,
                         const ScalingStructure& scalings, const LpOptions& opt) {
    if (is_free(theorem)) {
        const LftPositiveSystem wc = worst_case_system(sys);
        return Builder(wc, dt, is_min(theorem), ScalingStructure::unconstrained(), opt).solve(theorem);
    }
    return Builder(sys, dt, is_min(theorem), scalings, opt).solve(theorem);
}

}  // namespace

lp::LinearProgram build_certify_lp(const LftPositiveSystem& sys, const DwellTimeConstraint& dt, CertTheorem theorem,
                                   const ScalingStructure& scalings, const LpOptions& opt) {
    if (is_free(theorem)) {
        const LftPositiveSystem wc = worst_case_system(sys);
        return Builder(wc, dt, is_min(theorem), ScalingStructure::unconstrained(), opt).build();
    }
    return Builder(sys, dt, is_min(theorem), scalings, opt).build();
}

Outcome<Certificate> certify_range(const LftPositiveSystem& sys, const DwellTimeConstraint& dt,
                                   const ScalingStructure& scalings, const LpOptions& opt) {
    return run(sys, dt, CertTheorem::RangeConstrained, scalings, opt);
}

Outcome<Certificate> certify_min(const LftPositiveSystem& sys, const DwellTimeConstraint& dt,
                                 const ScalingStructure& scalings, const LpOptions& opt) {
    return run(sys, dt, CertTheorem::MinConstrained, scalings, opt);
}

Outcome<Certificate> certify_range_free(const LftPositiveSystem& sys, const DwellTimeConstraint& dt,
                                        const LpOptions& opt) {
    return run(sys, dt, CertTheorem::RangeFree, ScalingStructure::unconstrained(), opt);
}

Outcome<Certificate> certify_min_free(const LftPositiveSystem& sys, const DwellTimeConstraint& dt,
                                      const LpOptions& opt) {
    return run(sys, dt, CertTheorem::MinFree, ScalingStructure::unconstrained(), opt);
}

std::vector<lp::Violation> reverify(const Certificate& cert, double feastol) {
    return lp::verify(cert.program, cert.solution, feastol);
}

std::optional<double> bisect_gamma(const LftPositiveSystem& sys, const DwellTimeConstraint& dt, CertTheorem theorem,
                                   const ScalingStructure& scalings, double lo, double hi, double tol,
                                   const LpOptions& opt) {
    auto feasible = [&](double g) {
        LpOptions o = opt;
        o.fixed_gamma = g;
        return run(sys, dt, theorem, scalings, o).feasible();
    };
    if (!feasible(hi)) return std::nullopt;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (feasible(mid))
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

}  // namespace posimp
