#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace posimp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

class DimensionError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

class WellPosednessError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Matrix-valued function of the timer variable tau.
///
/// Two representations are supported:
///  - polynomial: coeffs[k] multiplies tau^k (degree <= 6),
///  - tabulated: node values on a uniform grid over [0, horizon], linearly
///    interpolated and clamped beyond the horizon. Tabulated functions only
///    carry information at their nodes; certification builders sample them
///    there and flag the result as sampled.
class TimerMatrixFunction {
  public:
    static constexpr int kMaxDegree = 6;

    TimerMatrixFunction() = default;
    TimerMatrixFunction(Matrix constant);  // NOLINT(google-explicit-constructor)
    explicit TimerMatrixFunction(std::vector<Matrix> coeffs);

    static TimerMatrixFunction tabulated(double horizon, std::vector<Matrix> nodes);

    [[nodiscard]] Eigen::Index rows() const { return rows_; }
    [[nodiscard]] Eigen::Index cols() const { return cols_; }
    [[nodiscard]] bool is_tabulated() const { return tabulated_; }
    [[nodiscard]] bool is_constant() const;
    /// Polynomial degree after trimming zero leading coefficients. Tabulated
    /// functions report 1 (affine between nodes).
    [[nodiscard]] int degree() const;
    [[nodiscard]] const std::vector<Matrix>& coeffs() const { return coeffs_; }
    [[nodiscard]] double table_horizon() const { return horizon_; }

    [[nodiscard]] Matrix operator()(double tau) const;
    [[nodiscard]] TimerMatrixFunction derivative() const;

    TimerMatrixFunction& operator+=(const TimerMatrixFunction& other);
    friend TimerMatrixFunction operator+(TimerMatrixFunction a, const TimerMatrixFunction& b) {
        a += b;
        return a;
    }
    /// Right multiplication by a constant matrix.
    [[nodiscard]] TimerMatrixFunction times(const Matrix& m) const;
    friend TimerMatrixFunction operator*(const TimerMatrixFunction& f, const Matrix& m) { return f.times(m); }

  private:
    Eigen::Index rows_ = 0;
    Eigen::Index cols_ = 0;
    bool tabulated_ = false;
    double horizon_ = 0.0;
    std::vector<Matrix> coeffs_;  // polynomial coefficients or table nodes
};

/// Uncertain timer-dependent impulsive system in linear fractional form.
///
/// Flow (tau in (0, T_k]):
///   [xdot; z_cD; z_c] = [A(tau) Gc(tau) Ec(tau); CcD HcD FcD; Cc Hc Fc] [x; w_cD; w_c]
/// Jump:
///   [x+; z_dD; z_d]   = [J Gd Ed; CdD HdD FdD; Cd Hd Fd] [x; w_dD; w_d]
/// with w_cD = Delta_c z_cD and w_dD = Delta_d z_dD. Absent channels are
/// represented by zero-sized blocks.
struct LftPositiveSystem {
    TimerMatrixFunction A, Gc, Ec;
    Matrix CcD, HcD, FcD;
    Matrix Cc, Hc, Fc;
    Matrix J, Gd, Ed;
    Matrix CdD, HdD, FdD;
    Matrix Cd, Hd, Fd;

    [[nodiscard]] Eigen::Index n() const { return A.rows(); }
    [[nodiscard]] Eigen::Index ncD() const { return CcD.rows(); }
    [[nodiscard]] Eigen::Index ndD() const { return CdD.rows(); }
    [[nodiscard]] Eigen::Index pc() const { return Ec.cols(); }
    [[nodiscard]] Eigen::Index pd() const { return Ed.cols(); }
    [[nodiscard]] Eigen::Index qc() const { return Cc.rows(); }
    [[nodiscard]] Eigen::Index qd() const { return Cd.rows(); }

    /// Throws DimensionError naming the first inconsistent block.
    void validate() const;

    /// Replaces every empty block by a zero block of the dimensions implied by
    /// the nonempty ones, then validates.
    LftPositiveSystem& complete();

    /// Builds a system with the given flow/jump state matrices and every
    /// other block empty (n x 0, 0 x n, ...). Fill in channels afterwards,
    /// then call complete().
    static LftPositiveSystem bare(const TimerMatrixFunction& A, const Matrix& J);
};

struct ScalingStructure {
    enum class Kind { Unconstrained, Constant, Grouped };
    Kind kind = Kind::Unconstrained;
    /// Grouped only: partition of the diagonal indices; entries in a group
    /// share one value at every timer node.
    std::vector<std::vector<int>> groups;

    static ScalingStructure unconstrained() { return {}; }
    static ScalingStructure constant() { return {Kind::Constant, {}}; }
    static ScalingStructure grouped(std::vector<std::vector<int>> groups) {
        return {Kind::Grouped, std::move(groups)};
    }

    /// Throws std::invalid_argument unless the partition covers 0..dim-1 once.
    void validate(Eigen::Index dim) const;
};

struct DwellTimeConstraint {
    enum class Kind { Range, Minimum, PeriodicRange, PeriodicMinimum };
    Kind kind = Kind::Range;
    double t_min = 0.0;  // Range kinds
    double t_max = 0.0;  // Range kinds
    double t_bar = 0.0;  // Minimum kinds
    int q = 1;           // Periodic kinds: period length of the dwell sequence
    int alpha = 1;       // Periodic kinds: sum of one period equals h_c / alpha
    double h_c = 0.0;    // Periodic kinds

    static DwellTimeConstraint range(double t_min, double t_max);
    static DwellTimeConstraint minimum(double t_bar);
    static DwellTimeConstraint periodic_range(double t_min, double t_max, int q, int alpha, double h_c);
    static DwellTimeConstraint periodic_minimum(double t_bar, int q, int alpha, double h_c);

    [[nodiscard]] bool is_range() const { return kind == Kind::Range || kind == Kind::PeriodicRange; }
    [[nodiscard]] bool is_periodic() const {
        return kind == Kind::PeriodicRange || kind == Kind::PeriodicMinimum;
    }
    /// Horizon of the timer-dependent variables: T_max or T_bar.
    [[nodiscard]] double horizon() const { return is_range() ? t_max : t_bar; }
    /// Whether a single dwell time satisfies the base (non-periodic) constraint.
    [[nodiscard]] bool admits(double dwell, double tol = 1e-12) const;

    void validate() const;
};

[[nodiscard]] bool is_metzler(const Matrix& M, double tol = 0.0);

struct PositivityViolation {
    std::string matrix;
    Eigen::Index row = 0;  // 1-based, as reported to users
    Eigen::Index col = 0;  // 1-based
    double value = 0.0;
    double tau = 0.0;      // NaN for constant blocks
};

struct PositivityReport {
    bool positive = true;
    /// Timer-dependent blocks are only checked on the provided grid.
    bool sampled_check = true;
    std::vector<PositivityViolation> violations;

    [[nodiscard]] std::string summary() const;
};

/// Uniform grid of `points` timer values on [0, horizon].
[[nodiscard]] std::vector<double> uniform_tau_grid(double horizon, int points = 101);

[[nodiscard]] PositivityReport check_internal_positivity(const LftPositiveSystem& sys,
                                                         const std::vector<double>& tau_grid,
                                                         double tol = 0.0);

/// Blocks of the system with Delta replaced by the identity.
struct WorstCaseContinuous {
    TimerMatrixFunction A, E;
    Matrix C, F;
};

struct WorstCaseDiscrete {
    Matrix J, E, C, F;
};

/// A + Gc (I - HcD)^-1 CcD and the matching E/C/F compositions. Requires
/// (I - HcD)^-1 to exist and be nonnegative.
[[nodiscard]] WorstCaseContinuous worst_case_continuous(const LftPositiveSystem& sys);
[[nodiscard]] WorstCaseDiscrete worst_case_discrete(const LftPositiveSystem& sys);

/// Same system with both uncertainty channels eliminated (Delta = I), i.e.
/// an LftPositiveSystem with ncD = ndD = 0.
[[nodiscard]] LftPositiveSystem worst_case_system(const LftPositiveSystem& sys);

}  // namespace posimp
