#pragma once

#include "posimp/core.hpp"
#include "posimp/lp.hpp"
#include "posimp/pwl.hpp"

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace posimp {

/// Why an LP was infeasible: names of the rows carrying Farkas weight,
/// heaviest first (e.g. "minDT3.x[2] at theta=1").
struct Infeasible {
    std::vector<std::string> conditions;
    Vector farkas;
    bool farkas_verified = false;
};

template <class T>
class Outcome {
  public:
    Outcome(T value) : v_(std::move(value)) {}            // NOLINT(google-explicit-constructor)
    Outcome(Infeasible why) : v_(std::move(why)) {}       // NOLINT(google-explicit-constructor)

    [[nodiscard]] bool feasible() const { return std::holds_alternative<T>(v_); }
    explicit operator bool() const { return feasible(); }
    [[nodiscard]] const T& value() const {
        if (!feasible()) throw std::logic_error("outcome is infeasible");
        return std::get<T>(v_);
    }
    [[nodiscard]] const Infeasible& infeasible() const {
        if (feasible()) throw std::logic_error("outcome is feasible");
        return std::get<Infeasible>(v_);
    }
    const T& operator*() const { return value(); }
    const T* operator->() const { return &value(); }

  private:
    std::variant<T, Infeasible> v_;
};

struct LpOptions {
    int nodes = 21;
    double margin = 1e-7;    // strict inequalities become >= margin
    double eps_min = 1e-6;   // lower bound on epsilon
    double feastol = 1e-8;
    /// Feasibility mode: gamma pinned to this value, no objective.
    std::optional<double> fixed_gamma;
};

enum class CertTheorem { RangeConstrained, MinConstrained, RangeFree, MinFree };

[[nodiscard]] const char* to_string(CertTheorem t);

struct Certificate {
    CertTheorem theorem = CertTheorem::RangeConstrained;
    PwlMatrix zeta;                 // n x 1 on [0, horizon]
    std::optional<PwlMatrix> mu_c;  // ncD x 1, constrained variants with a continuous channel
    std::optional<Vector> mu_d;     // constrained variants with a discrete channel
    double gamma = 0.0;
    double epsilon = 0.0;
    /// False when some "for all tau" condition was only sampled.
    bool sound = true;
    lp::LinearProgram program;
    Vector solution;
};

/// Applies to S_c; S_d uses the same groups when Grouped (its dimension
/// must then match), otherwise it is an arbitrary positive diagonal.
[[nodiscard]] Outcome<Certificate> certify_range(const LftPositiveSystem& sys, const DwellTimeConstraint& dt,
                                                 const ScalingStructure& scalings, const LpOptions& opt = {});
[[nodiscard]] Outcome<Certificate> certify_min(const LftPositiveSystem& sys, const DwellTimeConstraint& dt,
                                               const ScalingStructure& scalings, const LpOptions& opt = {});
/// Scalings eliminated: the conditions are imposed on the worst-case blocks.
[[nodiscard]] Outcome<Certificate> certify_range_free(const LftPositiveSystem& sys, const DwellTimeConstraint& dt,
                                                      const LpOptions& opt = {});
[[nodiscard]] Outcome<Certificate> certify_min_free(const LftPositiveSystem& sys, const DwellTimeConstraint& dt,
                                                    const LpOptions& opt = {});

/// The LP that the matching certify_* call would solve (for dumps and tests).
[[nodiscard]] lp::LinearProgram build_certify_lp(const LftPositiveSystem& sys, const DwellTimeConstraint& dt,
                                                 CertTheorem theorem, const ScalingStructure& scalings,
                                                 const LpOptions& opt = {});

/// Re-checks the stored solution against every row of the stored program.
[[nodiscard]] std::vector<lp::Violation> reverify(const Certificate& cert, double feastol = 1e-8);

/// Cross-check mode: bisection on gamma using feasibility LPs. Returns the
/// smallest feasible gamma found within `tol`, or nullopt if `hi` is infeasible.
[[nodiscard]] std::optional<double> bisect_gamma(const LftPositiveSystem& sys, const DwellTimeConstraint& dt,
                                                 CertTheorem theorem, const ScalingStructure& scalings, double lo,
                                                 double hi, double tol, const LpOptions& opt = {});

/// Turns an infeasible LP outcome into named conditions.
[[nodiscard]] Infeasible explain_infeasible(const lp::LinearProgram& program, const lp::LpOutcome& outcome);

}  // namespace posimp
