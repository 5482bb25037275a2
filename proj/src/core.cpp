#include "posimp/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace posimp {

namespace {

void require_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols, const char* name) {
    if (m.rows() != rows || m.cols() != cols) {
        std::ostringstream os;
        os << "block " << name << " has shape " << m.rows() << "x" << m.cols() << ", expected " << rows
           << "x" << cols;
        throw DimensionError(os.str());
    }
}

void require_shape(const TimerMatrixFunction& f, Eigen::Index rows, Eigen::Index cols, const char* name) {
    if (f.rows() != rows || f.cols() != cols) {
        std::ostringstream os;
        os << "block " << name << " has shape " << f.rows() << "x" << f.cols() << ", expected " << rows
           << "x" << cols;
        throw DimensionError(os.str());
    }
}

// (I - H)^-1, checked to exist and be nonnegative.
Matrix nonnegative_resolvent(const Matrix& H, const char* name) {
    const Eigen::Index k = H.rows();
    if (k == 0) return Matrix(0, 0);
    if (H.cols() != k) throw DimensionError(std::string(name) + " must be square");
    const Eigen::VectorXcd eig = (H - Matrix::Identity(k, k)).eigenvalues();
    double max_real = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < eig.size(); ++i) max_real = std::max(max_real, eig[i].real());
    if (max_real >= -1e-12) {
        throw WellPosednessError(std::string("ill-posed loop: ") + name +
                                 " - I is not Hurwitz, so (I - " + name +
                                 ")^-1 is not guaranteed to exist with a nonnegative inverse");
    }
    const Matrix inv = (Matrix::Identity(k, k) - H).inverse();
    if (!inv.allFinite() || inv.minCoeff() < -1e-12) {
        throw WellPosednessError(std::string("ill-posed loop: (I - ") + name +
                                 ")^-1 has negative entries but must be nonnegative");
    }
    return inv;
}

}  // namespace

// ---------------------------------------------------------------------------
// TimerMatrixFunction

TimerMatrixFunction::TimerMatrixFunction(Matrix constant)
    : rows_(constant.rows()), cols_(constant.cols()) {
    coeffs_.push_back(std::move(constant));
}

TimerMatrixFunction::TimerMatrixFunction(std::vector<Matrix> coeffs) : coeffs_(std::move(coeffs)) {
    if (coeffs_.empty()) throw DimensionError("timer polynomial needs at least one coefficient");
    if (static_cast<int>(coeffs_.size()) > kMaxDegree + 1) {
        throw DimensionError("timer polynomial degree exceeds " + std::to_string(kMaxDegree));
    }
    rows_ = coeffs_.front().rows();
    cols_ = coeffs_.front().cols();
    for (std::size_t k = 1; k < coeffs_.size(); ++k) {
        if (coeffs_[k].rows() != rows_ || coeffs_[k].cols() != cols_) {
            throw DimensionError("timer polynomial coefficient " + std::to_string(k) +
                                 " does not match the shape of coefficient 0");
        }
    }
}

TimerMatrixFunction TimerMatrixFunction::tabulated(double horizon, std::vector<Matrix> nodes) {
    if (nodes.size() < 2) throw DimensionError("tabulated timer function needs at least two nodes");
    if (!(horizon > 0.0)) throw std::invalid_argument("tabulated timer function needs a positive horizon");
    TimerMatrixFunction f;
    f.rows_ = nodes.front().rows();
    f.cols_ = nodes.front().cols();
    for (const auto& m : nodes) {
        if (m.rows() != f.rows_ || m.cols() != f.cols_) {
            throw DimensionError("tabulated timer function nodes differ in shape");
        }
    }
    f.tabulated_ = true;
    f.horizon_ = horizon;
    f.coeffs_ = std::move(nodes);
    return f;
}

bool TimerMatrixFunction::is_constant() const {
    if (tabulated_) {
        return std::all_of(coeffs_.begin(), coeffs_.end(),
                           [&](const Matrix& m) { return m == coeffs_.front(); });
    }
    return degree() == 0;
}

int TimerMatrixFunction::degree() const {
    if (tabulated_) return is_constant() ? 0 : 1;
    int d = static_cast<int>(coeffs_.size()) - 1;
    while (d > 0 && coeffs_[static_cast<std::size_t>(d)].isZero(0.0)) --d;
    return d;
}

Matrix TimerMatrixFunction::operator()(double tau) const {
    if (coeffs_.empty()) return Matrix(rows_, cols_);
    if (tabulated_) {
        const auto segments = static_cast<double>(coeffs_.size() - 1);
        const double s = std::clamp(tau / horizon_, 0.0, 1.0) * segments;
        const auto i = std::min(static_cast<std::size_t>(s), coeffs_.size() - 2);
        const double w = s - static_cast<double>(i);
        return (1.0 - w) * coeffs_[i] + w * coeffs_[i + 1];
    }
    Matrix acc = coeffs_.back();
    for (auto k = coeffs_.size() - 1; k-- > 0;) acc = acc * tau + coeffs_[k];
    return acc;
}

TimerMatrixFunction TimerMatrixFunction::derivative() const {
    if (tabulated_) {
        throw std::logic_error("derivative of a tabulated timer function is not defined at its nodes");
    }
    if (coeffs_.size() <= 1) return TimerMatrixFunction(Matrix::Zero(rows_, cols_));
    std::vector<Matrix> d;
    for (std::size_t k = 1; k < coeffs_.size(); ++k) d.push_back(static_cast<double>(k) * coeffs_[k]);
    return TimerMatrixFunction(std::move(d));
}

TimerMatrixFunction& TimerMatrixFunction::operator+=(const TimerMatrixFunction& other) {
    if (other.rows_ != rows_ || other.cols_ != cols_) throw DimensionError("timer function shape mismatch in sum");
    if (tabulated_ || other.tabulated_) {
        if (tabulated_ && other.tabulated_) {
            if (coeffs_.size() != other.coeffs_.size() || horizon_ != other.horizon_) {
                throw DimensionError("tabulated timer functions on different grids");
            }
            for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += other.coeffs_[i];
            return *this;
        }
        const TimerMatrixFunction& table = tabulated_ ? *this : other;
        const TimerMatrixFunction& poly = tabulated_ ? other : *this;
        if (!poly.is_constant()) {
            throw DimensionError("cannot add a timer polynomial to a tabulated timer function");
        }
        TimerMatrixFunction out = table;
        for (auto& m : out.coeffs_) m += poly.coeffs_.front();
        *this = std::move(out);
        return *this;
    }
    if (other.coeffs_.size() > coeffs_.size()) coeffs_.resize(other.coeffs_.size(), Matrix::Zero(rows_, cols_));
    for (std::size_t k = 0; k < other.coeffs_.size(); ++k) coeffs_[k] += other.coeffs_[k];
    return *this;
}

TimerMatrixFunction TimerMatrixFunction::times(const Matrix& m) const {
    if (cols_ != m.rows()) throw DimensionError("timer function product shape mismatch");
    TimerMatrixFunction out = *this;
    out.cols_ = m.cols();
    for (auto& c : out.coeffs_) c = c * m;
    return out;
}

// ---------------------------------------------------------------------------
// LftPositiveSystem

void LftPositiveSystem::validate() const {
    const Eigen::Index nx = n();
    const Eigen::Index kc = ncD(), kd = ndD();
    const Eigen::Index p_c = pc(), p_d = pd(), q_c = qc(), q_d = qd();
    require_shape(A, nx, nx, "A");
    require_shape(Gc, nx, kc, "Gc");
    require_shape(Ec, nx, p_c, "Ec");
    require_shape(CcD, kc, nx, "CcD");
    require_shape(HcD, kc, kc, "HcD");
    require_shape(FcD, kc, p_c, "FcD");
    require_shape(Cc, q_c, nx, "Cc");
    require_shape(Hc, q_c, kc, "Hc");
    require_shape(Fc, q_c, p_c, "Fc");
    require_shape(J, nx, nx, "J");
    require_shape(Gd, nx, kd, "Gd");
    require_shape(Ed, nx, p_d, "Ed");
    require_shape(CdD, kd, nx, "CdD");
    require_shape(HdD, kd, kd, "HdD");
    require_shape(FdD, kd, p_d, "FdD");
    require_shape(Cd, q_d, nx, "Cd");
    require_shape(Hd, q_d, kd, "Hd");
    require_shape(Fd, q_d, p_d, "Fd");
    if (Gc.is_tabulated() || Ec.is_tabulated()) {
        if (A.is_tabulated() && Gc.is_tabulated() && A.coeffs().size() != Gc.coeffs().size()) {
            throw DimensionError("tabulated blocks A and Gc use different grids");
        }
    }
}

namespace {

void fill_if_empty(Matrix& m, Eigen::Index r, Eigen::Index c) {
    if (m.size() == 0) m = Matrix::Zero(r, c);
}

void fill_if_empty(TimerMatrixFunction& f, Eigen::Index r, Eigen::Index c) {
    if (f.rows() * f.cols() == 0) f = TimerMatrixFunction(Matrix(Matrix::Zero(r, c)));
}

}  // namespace

LftPositiveSystem& LftPositiveSystem::complete() {
    const Eigen::Index nx = A.rows();
    const Eigen::Index kc = std::max({Gc.cols(), CcD.rows(), HcD.rows(), FcD.rows(), Hc.cols()});
    const Eigen::Index p_c = std::max({Ec.cols(), FcD.cols(), Fc.cols()});
    const Eigen::Index q_c = std::max({Cc.rows(), Hc.rows(), Fc.rows()});
    const Eigen::Index kd = std::max({Gd.cols(), CdD.rows(), HdD.rows(), FdD.rows(), Hd.cols()});
    const Eigen::Index p_d = std::max({Ed.cols(), FdD.cols(), Fd.cols()});
    const Eigen::Index q_d = std::max({Cd.rows(), Hd.rows(), Fd.rows()});
    fill_if_empty(Gc, nx, kc);
    fill_if_empty(Ec, nx, p_c);
    fill_if_empty(CcD, kc, nx);
    fill_if_empty(HcD, kc, kc);
    fill_if_empty(FcD, kc, p_c);
    fill_if_empty(Cc, q_c, nx);
    fill_if_empty(Hc, q_c, kc);
    fill_if_empty(Fc, q_c, p_c);
    fill_if_empty(Gd, nx, kd);
    fill_if_empty(Ed, nx, p_d);
    fill_if_empty(CdD, kd, nx);
    fill_if_empty(HdD, kd, kd);
    fill_if_empty(FdD, kd, p_d);
    fill_if_empty(Cd, q_d, nx);
    fill_if_empty(Hd, q_d, kd);
    fill_if_empty(Fd, q_d, p_d);
    validate();
    return *this;
}

LftPositiveSystem LftPositiveSystem::bare(const TimerMatrixFunction& A, const Matrix& J) {
    const Eigen::Index nx = A.rows();
    LftPositiveSystem s;
    s.A = A;
    s.Gc = TimerMatrixFunction(Matrix(nx, 0));
    s.Ec = TimerMatrixFunction(Matrix(nx, 0));
    s.CcD = Matrix(0, nx);
    s.HcD = Matrix(0, 0);
    s.FcD = Matrix(0, 0);
    s.Cc = Matrix(0, nx);
    s.Hc = Matrix(0, 0);
    s.Fc = Matrix(0, 0);
    s.J = J;
    s.Gd = Matrix(nx, 0);
    s.Ed = Matrix(nx, 0);
    s.CdD = Matrix(0, nx);
    s.HdD = Matrix(0, 0);
    s.FdD = Matrix(0, 0);
    s.Cd = Matrix(0, nx);
    s.Hd = Matrix(0, 0);
    s.Fd = Matrix(0, 0);
    return s;
}

// ---------------------------------------------------------------------------
// Scalings and dwell-time constraints

void ScalingStructure::validate(Eigen::Index dim) const {
    if (kind != Kind::Grouped) return;
    std::vector<int> seen(static_cast<std::size_t>(dim), 0);
    for (const auto& g : groups) {
        if (g.empty()) throw std::invalid_argument("scaling group is empty");
        for (int i : g) {
            if (i < 0 || i >= dim) {
                throw std::invalid_argument("scaling group index " + std::to_string(i) + " out of range");
            }
            ++seen[static_cast<std::size_t>(i)];
        }
    }
    for (Eigen::Index i = 0; i < dim; ++i) {
        if (seen[static_cast<std::size_t>(i)] != 1) {
            throw std::invalid_argument("scaling partition must cover diagonal index " + std::to_string(i) +
                                        " exactly once");
        }
    }
}

DwellTimeConstraint DwellTimeConstraint::range(double t_min, double t_max) {
    DwellTimeConstraint c;
    c.kind = Kind::Range;
    c.t_min = t_min;
    c.t_max = t_max;
    c.validate();
    return c;
}

DwellTimeConstraint DwellTimeConstraint::minimum(double t_bar) {
    DwellTimeConstraint c;
    c.kind = Kind::Minimum;
    c.t_bar = t_bar;
    c.validate();
    return c;
}

DwellTimeConstraint DwellTimeConstraint::periodic_range(double t_min, double t_max, int q, int alpha, double h_c) {
    DwellTimeConstraint c;
    c.kind = Kind::PeriodicRange;
    c.t_min = t_min;
    c.t_max = t_max;
    c.q = q;
    c.alpha = alpha;
    c.h_c = h_c;
    c.validate();
    return c;
}

DwellTimeConstraint DwellTimeConstraint::periodic_minimum(double t_bar, int q, int alpha, double h_c) {
    DwellTimeConstraint c;
    c.kind = Kind::PeriodicMinimum;
    c.t_bar = t_bar;
    c.q = q;
    c.alpha = alpha;
    c.h_c = h_c;
    c.validate();
    return c;
}

bool DwellTimeConstraint::admits(double dwell, double tol) const {
    if (is_range()) return dwell >= t_min - tol && dwell <= t_max + tol;
    return dwell >= t_bar - tol;
}

void DwellTimeConstraint::validate() const {
    if (is_range()) {
        if (!(t_min >= 0.0 && t_min <= t_max && std::isfinite(t_max) && t_max > 0.0)) {
            throw std::invalid_argument("range dwell-time needs 0 <= T_min <= T_max < inf and T_max > 0");
        }
    } else if (!(t_bar > 0.0 && std::isfinite(t_bar))) {
        throw std::invalid_argument("minimum dwell-time needs T_bar > 0");
    }
    if (is_periodic()) {
        if (q < 1 || alpha < 1) throw std::invalid_argument("periodic dwell-time needs q >= 1 and alpha >= 1");
        if (!(h_c > 0.0)) throw std::invalid_argument("periodic dwell-time needs h_c > 0");
    }
}

// ---------------------------------------------------------------------------
// Positivity

bool is_metzler(const Matrix& M, double tol) {
    if (M.rows() != M.cols()) throw DimensionError("is_metzler needs a square matrix");
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
        for (Eigen::Index i = 0; i < M.rows(); ++i) {
            if (i != j && M(i, j) < -tol) return false;
        }
    }
    return true;
}

std::vector<double> uniform_tau_grid(double horizon, int points) {
    if (points < 1) throw std::invalid_argument("tau grid needs at least one point");
    if (points == 1) return {0.0};
    std::vector<double> g(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i) g[static_cast<std::size_t>(i)] = horizon * i / (points - 1);
    return g;
}

std::string PositivityReport::summary() const {
    std::ostringstream os;
    os << (positive ? "internally positive" : "NOT internally positive");
    if (sampled_check) os << " (sampled check on the timer grid)";
    for (const auto& v : violations) {
        os << "\n  " << v.matrix << "(" << v.row << "," << v.col << ") = " << v.value;
        if (!std::isnan(v.tau)) os << " at tau = " << v.tau;
    }
    return os.str();
}

PositivityReport check_internal_positivity(const LftPositiveSystem& sys, const std::vector<double>& tau_grid,
                                           double tol) {
    sys.validate();
    if (tau_grid.empty()) throw std::invalid_argument("positivity check needs a nonempty tau grid");
    PositivityReport report;
    const double nan = std::numeric_limits<double>::quiet_NaN();

    auto scan = [&](const Matrix& m, const char* name, bool metzler, double tau) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            for (Eigen::Index i = 0; i < m.rows(); ++i) {
                if (metzler && i == j) continue;
                if (m(i, j) < -tol) report.violations.push_back({name, i + 1, j + 1, m(i, j), tau});
            }
        }
    };

    const bool timer_dependent = !(sys.A.is_constant() && sys.Gc.is_constant() && sys.Ec.is_constant());
    if (timer_dependent) {
        for (double tau : tau_grid) {
            scan(sys.A(tau), "A", true, tau);
            scan(sys.Gc(tau), "Gc", false, tau);
            scan(sys.Ec(tau), "Ec", false, tau);
        }
    } else {
        scan(sys.A(0.0), "A", true, nan);
        scan(sys.Gc(0.0), "Gc", false, nan);
        scan(sys.Ec(0.0), "Ec", false, nan);
    }
    const std::pair<const Matrix*, const char*> constants[] = {
        {&sys.J, "J"},     {&sys.Gd, "Gd"},   {&sys.Ed, "Ed"},   {&sys.CcD, "CcD"}, {&sys.HcD, "HcD"},
        {&sys.FcD, "FcD"}, {&sys.CdD, "CdD"}, {&sys.HdD, "HdD"}, {&sys.FdD, "FdD"}, {&sys.Cc, "Cc"},
        {&sys.Hc, "Hc"},   {&sys.Fc, "Fc"},   {&sys.Cd, "Cd"},   {&sys.Hd, "Hd"},   {&sys.Fd, "Fd"},
    };
    for (const auto& [m, name] : constants) scan(*m, name, false, nan);
    report.positive = report.violations.empty();
    report.sampled_check = timer_dependent;
    return report;
}

// ---------------------------------------------------------------------------
// Worst-case (Delta = I) blocks

WorstCaseContinuous worst_case_continuous(const LftPositiveSystem& sys) {
    sys.validate();
    WorstCaseContinuous wc{sys.A, sys.Ec, sys.Cc, sys.Fc};
    if (sys.ncD() == 0) return wc;
    const Matrix R = nonnegative_resolvent(sys.HcD, "HcD");
    wc.A += sys.Gc * Matrix(R * sys.CcD);
    wc.E += sys.Gc * Matrix(R * sys.FcD);
    wc.C += sys.Hc * R * sys.CcD;
    wc.F += sys.Hc * R * sys.FcD;
    return wc;
}

WorstCaseDiscrete worst_case_discrete(const LftPositiveSystem& sys) {
    sys.validate();
    WorstCaseDiscrete wc{sys.J, sys.Ed, sys.Cd, sys.Fd};
    if (sys.ndD() == 0) return wc;
    const Matrix R = nonnegative_resolvent(sys.HdD, "HdD");
    wc.J += sys.Gd * R * sys.CdD;
    wc.E += sys.Gd * R * sys.FdD;
    wc.C += sys.Hd * R * sys.CdD;
    wc.F += sys.Hd * R * sys.FdD;
    return wc;
}

LftPositiveSystem worst_case_system(const LftPositiveSystem& sys) {
    const auto c = worst_case_continuous(sys);
    const auto d = worst_case_discrete(sys);
    LftPositiveSystem out = LftPositiveSystem::bare(c.A, d.J);
    out.Ec = c.E;
    out.Cc = c.C;
    out.Fc = c.F;
    out.Ed = d.E;
    out.Cd = d.C;
    out.Fd = d.F;
    out.complete();
    return out;
}

}  // namespace posimp
