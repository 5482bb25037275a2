#include "posimp/delay.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace posimp {

namespace {

void fill_if_empty(Matrix& m, Eigen::Index r, Eigen::Index c) {
    if (m.size() == 0) m = Matrix::Zero(r, c);
}

void fill_if_empty(TimerMatrixFunction& f, Eigen::Index r, Eigen::Index c) {
    if (f.rows() * f.cols() == 0) f = TimerMatrixFunction(Matrix(Matrix::Zero(r, c)));
}

void require(bool ok, const std::string& block, const std::string& expected) {
    if (!ok) throw DimensionError("block " + block + ": expected " + expected);
}

std::string shape(Eigen::Index r, Eigen::Index c) { return std::to_string(r) + "x" + std::to_string(c); }

}  // namespace

DelaySystem& DelaySystem::complete() {
    const Eigen::Index nx = A.rows();
    const Eigen::Index p_c = std::max(Ec.cols(), Fc.cols());
    const Eigen::Index q_c = std::max({Cc.rows(), Hc.rows(), Fc.rows()});
    const Eigen::Index p_d = std::max(Ed.cols(), Fd.cols());
    const Eigen::Index q_d = std::max({Cd.rows(), Hd.rows(), Fd.rows()});
    fill_if_empty(Gc, nx, nx);
    fill_if_empty(Ec, nx, p_c);
    fill_if_empty(Cc, q_c, nx);
    fill_if_empty(Hc, q_c, nx);
    fill_if_empty(Fc, q_c, p_c);
    fill_if_empty(J, nx, nx);
    fill_if_empty(Gd, nx, nx);
    fill_if_empty(Ed, nx, p_d);
    fill_if_empty(Cd, q_d, nx);
    fill_if_empty(Hd, q_d, nx);
    fill_if_empty(Fd, q_d, p_d);
    validate();
    return *this;
}

void DelaySystem::validate() const {
    const Eigen::Index nx = n();
    auto chk = [](Eigen::Index r, Eigen::Index c, Eigen::Index er, Eigen::Index ec, const char* name) {
        require(r == er && c == ec, name, shape(er, ec) + ", got " + shape(r, c));
    };
    chk(A.rows(), A.cols(), nx, nx, "A");
    chk(Gc.rows(), Gc.cols(), nx, nx, "Gc");
    chk(Ec.rows(), Ec.cols(), nx, pc(), "Ec");
    chk(Cc.rows(), Cc.cols(), qc(), nx, "Cc");
    chk(Hc.rows(), Hc.cols(), qc(), nx, "Hc");
    chk(Fc.rows(), Fc.cols(), qc(), pc(), "Fc");
    chk(J.rows(), J.cols(), nx, nx, "J");
    chk(Gd.rows(), Gd.cols(), nx, nx, "Gd");
    chk(Ed.rows(), Ed.cols(), nx, pd(), "Ed");
    chk(Cd.rows(), Cd.cols(), qd(), nx, "Cd");
    chk(Hd.rows(), Hd.cols(), qd(), nx, "Hd");
    chk(Fd.rows(), Fd.cols(), qd(), pd(), "Fd");
    if (!(h_c > 0.0) || !std::isfinite(h_c)) throw std::invalid_argument("continuous delay h_c must be positive");
    if (h_d < 0) throw std::invalid_argument("discrete delay h_d must be nonnegative");
}

Vector DelaySystem::history(double s) const {
    if (!phi0) return Vector::Zero(n());
    Vector v = phi0(s);
    if (v.size() != n()) throw DimensionError("initial history returns " + std::to_string(v.size()) + " entries");
    return v;
}

LftPositiveSystem to_lft(const DelaySystem& sys) {
    sys.validate();
    const Eigen::Index nx = sys.n();
    LftPositiveSystem s;
    s.A = sys.A;
    s.Gc = sys.Gc;
    s.Ec = sys.Ec;
    s.CcD = Matrix::Identity(nx, nx);
    s.HcD = Matrix::Zero(nx, nx);
    s.FcD = Matrix::Zero(nx, sys.pc());
    s.Cc = sys.Cc;
    s.Hc = sys.Hc;
    s.Fc = sys.Fc;
    s.J = sys.J;
    s.Gd = sys.Gd;
    s.Ed = sys.Ed;
    s.CdD = Matrix::Identity(nx, nx);
    s.HdD = Matrix::Zero(nx, nx);
    s.FdD = Matrix::Zero(nx, sys.pd());
    s.Cd = sys.Cd;
    s.Hd = sys.Hd;
    s.Fd = sys.Fd;
    s.validate();
    return s;
}

LftPositiveSystem zero_delay_system(const DelaySystem& sys) {
    sys.validate();
    auto s = LftPositiveSystem::bare(sys.A + sys.Gc, sys.J + sys.Gd);
    s.Ec = sys.Ec;
    s.Cc = sys.Cc + sys.Hc;
    s.Fc = sys.Fc;
    s.Ed = sys.Ed;
    s.Cd = sys.Cd + sys.Hd;
    s.Fd = sys.Fd;
    s.complete();
    return s;
}

PeriodicCheck validate_periodic_sequence(const std::vector<double>& beta, const DwellTimeConstraint& base,
                                         double h_c, double tol) {
    PeriodicCheck out;
    if (beta.empty()) {
        out.reason = "empty dwell sequence";
        return out;
    }
    if (!(h_c > 0.0)) {
        out.reason = "h_c must be positive";
        return out;
    }
    const int len = static_cast<int>(beta.size());
    int q = len;
    for (int p = 1; p < len; ++p) {
        if (len % p != 0) continue;
        bool periodic = true;
        for (int i = p; i < len && periodic; ++i) periodic = std::abs(beta[i] - beta[i % p]) <= tol;
        if (periodic) {
            q = p;
            break;
        }
    }
    std::vector<std::string> problems;
    for (int i = 0; i < q; ++i)
        if (!(beta[i] > 0.0) || !base.admits(beta[i], tol))
            problems.push_back("beta_" + std::to_string(i) + " = " + format_number(beta[i]) +
                               " violates the dwell-time constraint");
    const double sum = std::accumulate(beta.begin(), beta.begin() + q, 0.0);
    const double ratio = h_c / sum;
    const double alpha = std::round(ratio);
    if (alpha < 1.0 || std::abs(ratio - alpha) > tol * std::max(1.0, ratio))
        problems.push_back("h_c / sum(period) = " + format_number(ratio) + " is not a positive integer");
    if (!problems.empty()) {
        for (std::size_t i = 0; i < problems.size(); ++i) out.reason += (i ? "; " : "") + problems[i];
        return out;
    }
    out.valid = true;
    out.q = q;
    out.alpha = static_cast<int>(alpha);
    return out;
}

LftPositiveSystem delay_certification_system(const DelaySystem& sys, DelayScaling scaling) {
    if (scaling == DelayScaling::UnconstrainedPeriodic) return zero_delay_system(sys);
    LftPositiveSystem s = to_lft(sys);
    s.J = sys.J + sys.Gd;
    s.Cd = sys.Cd + sys.Hd;
    const Eigen::Index nx = sys.n();
    s.Gd = Matrix(nx, 0);
    s.CdD = Matrix(0, nx);
    s.HdD = Matrix(0, 0);
    s.FdD = Matrix(0, sys.pd());
    s.Hd = Matrix(sys.qd(), 0);
    s.validate();
    return s;
}

namespace {

Outcome<DelayCertificate> certify_delay(const DelaySystem& sys, const DwellTimeConstraint& dt, DelayScaling scaling,
                                        const LpOptions& opt, bool minimum) {
    const LftPositiveSystem s = delay_certification_system(sys, scaling);
    const ScalingStructure sc = scaling == DelayScaling::Constant ? ScalingStructure::constant()
                                                                  : ScalingStructure::unconstrained();
    Outcome<Certificate> c = minimum ? certify_min(s, dt, sc, opt) : certify_range(s, dt, sc, opt);
    if (!c) return c.infeasible();
    DelayCertificate d;
    d.cert = c.value();
    d.scaling = scaling;
    if (scaling == DelayScaling::UnconstrainedPeriodic) {
        d.cert.theorem = minimum ? CertTheorem::MinFree : CertTheorem::RangeFree;
        d.periodic_sequences_only = true;
    }
    return d;
}

}  // namespace

Outcome<DelayCertificate> certify_delay_range(const DelaySystem& sys, const DwellTimeConstraint& dt,
                                              DelayScaling scaling, const LpOptions& opt) {
    return certify_delay(sys, dt, scaling, opt, false);
}

Outcome<DelayCertificate> certify_delay_min(const DelaySystem& sys, const DwellTimeConstraint& dt,
                                            DelayScaling scaling, const LpOptions& opt) {
    return certify_delay(sys, dt, scaling, opt, true);
}

}  // namespace posimp
