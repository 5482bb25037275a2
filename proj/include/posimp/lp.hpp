#pragma once

#include "posimp/core.hpp"

#include <iosfwd>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace posimp::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Relation { LessEqual, Equal, GreaterEqual };

[[nodiscard]] const char* to_string(Relation rel);

/// Affine expression sum_j coef_j * var_j + constant over LP variable indices.
class LinExpr {
  public:
    LinExpr() = default;
    explicit LinExpr(double constant) : constant_(constant) {}

    static LinExpr var(int index, double coef = 1.0) {
        LinExpr e;
        e.add(index, coef);
        return e;
    }

    LinExpr& add(int index, double coef) {
        if (coef != 0.0) terms_.emplace_back(index, coef);
        return *this;
    }
    LinExpr& add(const LinExpr& other, double scale = 1.0);
    LinExpr& operator+=(const LinExpr& other) { return add(other, 1.0); }
    LinExpr& operator-=(const LinExpr& other) { return add(other, -1.0); }
    LinExpr& operator+=(double c) {
        constant_ += c;
        return *this;
    }
    LinExpr& operator*=(double s);

    friend LinExpr operator+(LinExpr a, const LinExpr& b) { return a += b; }
    friend LinExpr operator-(LinExpr a, const LinExpr& b) { return a -= b; }
    friend LinExpr operator*(double s, LinExpr e) { return e *= s; }

    [[nodiscard]] double constant() const { return constant_; }
    /// Raw (possibly repeated) terms.
    [[nodiscard]] const std::vector<std::pair<int, double>>& terms() const { return terms_; }
    /// Terms merged by variable index, sorted, exact zeros removed.
    [[nodiscard]] std::vector<std::pair<int, double>> merged() const;

  private:
    std::vector<std::pair<int, double>> terms_;
    double constant_ = 0.0;
};

struct Variable {
    std::string name;
    double lower = -kInf;
    double upper = kInf;
};

struct Constraint {
    std::string name;
    std::vector<std::pair<int, double>> terms;  // merged, sorted by variable
    Relation rel = Relation::LessEqual;
    double rhs = 0.0;
};

/// Linear program: minimize c^T x subject to named rows and variable bounds.
class LinearProgram {
  public:
    int add_variable(std::string name, double lower = -kInf, double upper = kInf);
    /// Adds `lhs rel rhs`; the constant of lhs is moved to the right-hand side.
    int add_constraint(std::string name, const LinExpr& lhs, Relation rel, double rhs = 0.0);
    void set_objective(const LinExpr& objective);

    /// True when the row holds for every point inside the variable bounds, so
    /// adding it would not change the feasible set.
    [[nodiscard]] bool implied_by_bounds(const LinExpr& lhs, Relation rel, double rhs = 0.0) const;

    [[nodiscard]] int num_variables() const { return static_cast<int>(variables_.size()); }
    [[nodiscard]] int num_constraints() const { return static_cast<int>(constraints_.size()); }
    [[nodiscard]] const std::vector<Variable>& variables() const { return variables_; }
    [[nodiscard]] const std::vector<Constraint>& constraints() const { return constraints_; }
    [[nodiscard]] const std::vector<std::pair<int, double>>& objective() const { return objective_; }
    [[nodiscard]] double objective_constant() const { return objective_constant_; }

    [[nodiscard]] double evaluate(const LinExpr& e, const Vector& x) const;
    [[nodiscard]] double objective_value(const Vector& x) const;

    /// Plain-text listing, one line per item:
    ///   var <name> [<lower>, <upper>]
    ///   min: <coef>*<var> + ...
    ///   <row name>: <coef>*<var> + ... <= | = | >= <rhs>
    /// Numbers are printed with 17 significant digits.
    void dump(std::ostream& os) const;
    [[nodiscard]] std::string dump() const;

  private:
    std::vector<Variable> variables_;
    std::vector<Constraint> constraints_;
    std::vector<std::pair<int, double>> objective_;
    double objective_constant_ = 0.0;
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

[[nodiscard]] const char* to_string(LpStatus status);

struct LpOutcome {
    LpStatus status = LpStatus::Infeasible;
    Vector x;              // primal values (Optimal only)
    double objective = 0;  // Optimal only
    /// Infeasible only: one multiplier per row, oriented so every row reads
    /// `sign * a^T x <= sign * b` with sign = -1 for >= rows. Inequality
    /// multipliers are nonnegative; max |y| = 1. The combination
    /// y^T (sign * A) x <= y^T (sign * b) has no solution inside the bounds.
    Vector farkas;
    int iterations = 0;
};

class SolverError : public std::runtime_error {
  public:
    SolverError(const std::string& what, std::vector<int> basis)
        : std::runtime_error(what), basis_(std::move(basis)) {}
    /// Column indices of the basis at failure (structural j < n, slack n + i).
    [[nodiscard]] const std::vector<int>& basis() const { return basis_; }

  private:
    std::vector<int> basis_;
};

struct SolverOptions {
    double feastol = 1e-8;
    int max_iterations = 500000;
    int refactor_interval = 100;
};

/// Two-phase bounded revised simplex on a dense basis inverse. Dantzig pricing
/// with a switch to Bland's rule after a run of degenerate pivots. The
/// returned optimum is re-verified against every row before it is reported.
[[nodiscard]] LpOutcome solve(const LinearProgram& lp, const SolverOptions& options);
[[nodiscard]] inline LpOutcome solve(const LinearProgram& lp, double feastol = 1e-8) {
    SolverOptions o;
    o.feastol = feastol;
    return solve(lp, o);
}

struct Violation {
    int row = -1;       // constraint index, or -1 for a variable bound
    int variable = -1;  // set for bound violations
    std::string name;
    double residual = 0.0;
};

/// Rows (and variable bounds) violated by more than feastol.
[[nodiscard]] std::vector<Violation> verify(const LinearProgram& lp, const Vector& x, double feastol = 1e-8);

/// Checks a Farkas multiplier vector in the orientation documented on LpOutcome.
[[nodiscard]] bool is_farkas_certificate(const LinearProgram& lp, const Vector& y, double tol = 1e-8);

}  // namespace posimp::lp
