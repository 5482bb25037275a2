#pragma once

#include "posimp/certify.hpp"
#include "posimp/delay.hpp"

#include <functional>
#include <optional>
#include <utility>
#include <vector>

namespace posimp {

/// Impulsive plant with delays observed through y_c and y_d. The output
/// blocks of `sys` (Cc, Hc, Fc, Cd, Hd, Fd) are the measurement maps; the
/// error outputs are e_c = Mc e and e_d = Md e.
struct ObservedPlant {
    DelaySystem sys;
    Matrix Mc, Md;
    /// Disturbance bounds w_c^-(t) <= w_c(t) <= w_c^+(t), w_d^-(k) <= w_d(k) <= w_d^+(k).
    std::function<Vector(double)> wc_lo, wc_hi;
    std::function<Vector(int)> wd_lo, wd_hi;

    /// Zero-fills empty blocks (Mc, Md default to the identity) and validates.
    ObservedPlant& complete();
    void validate() const;
};

struct SwitchedMode {
    Matrix A, G, E, C, H, F;
};

/// Switched system with one constant delay, each mode with its own flow and
/// measurement blocks. Error output e_c = M e for the active mode.
struct SwitchedPlant {
    std::vector<SwitchedMode> modes;
    Matrix M;
    double h_c = 1.0;
    std::function<Vector(double)> phi0;
    std::function<Vector(double)> w_lo, w_hi;

    [[nodiscard]] Eigen::Index n() const { return modes.empty() ? 0 : modes.front().A.rows(); }
    void validate() const;
};

enum class ObserverTheorem { RangeConstant, RangeFree, MinConstant, MinFree, SwitchedConstant, SwitchedFree };

[[nodiscard]] const char* to_string(ObserverTheorem t);

struct GainBox {
    double lo = -lp::kInf;
    double hi = lp::kInf;
};

struct ObserverOptions {
    LpOptions lp;
    double x_min = 1e-6;
    double alpha_max = 1e6;
    /// Entrywise bounds on the recovered gains, imposed as lo X <= Y <= hi X.
    std::optional<GainBox> gain_box;
    /// Adds X(0) to the jump rows of the constant-scaling range synthesis.
    /// Off by default: the stability argument behind those rows has no such
    /// term, and with it the x1 row of the ex2 fixture cannot hold.
    bool range_jump_x0_term = false;
};

/// Same options with the gain box set; throws std::invalid_argument when lo > hi.
[[nodiscard]] ObserverOptions gain_entry_box(ObserverOptions opt, double lo, double hi);

struct ObserverGains {
    ObserverTheorem theorem = ObserverTheorem::RangeConstant;
    DwellTimeConstraint dt;
    PwlMatrix X;   // diagonal n x n
    PwlMatrix Yc;  // n x q_c
    Matrix Yd;     // n x q_d
    PwlMatrix Lc;  // X^-1 Yc at the nodes, linear in between
    Matrix Ld;     // X(0)^-1 Yd
    std::optional<Vector> Uc;  // constant-scaling variants
    double alpha = 0.0;
    double epsilon = 0.0;
    double gamma = 0.0;
    bool sound = true;
    lp::LinearProgram program;
    Vector solution;
};

struct ModeGains {
    PwlMatrix X, Y, L;
    std::optional<Vector> U;  // per-mode scaling in the unconstrained variant
};

struct SwitchedGains {
    ObserverTheorem theorem = ObserverTheorem::SwitchedConstant;
    DwellTimeConstraint dt;
    std::vector<ModeGains> modes;
    std::optional<Vector> U;  // shared scaling in the constant variant
    double alpha = 0.0;
    double epsilon = 0.0;
    double gamma = 0.0;
    bool sound = true;
    lp::LinearProgram program;
    Vector solution;
};

[[nodiscard]] Outcome<ObserverGains> synthesize_range(const ObservedPlant& plant, const DwellTimeConstraint& dt,
                                                      DelayScaling scaling, const ObserverOptions& opt = {});
[[nodiscard]] Outcome<ObserverGains> synthesize_min(const ObservedPlant& plant, const DwellTimeConstraint& dt,
                                                    DelayScaling scaling, const ObserverOptions& opt = {});
[[nodiscard]] Outcome<SwitchedGains> synthesize_switched(const SwitchedPlant& plant, const DwellTimeConstraint& dt,
                                                         DelayScaling scaling, const ObserverOptions& opt = {});

/// Nodewise L = X^-1 Yc and Ld = X(0)^-1 Yd for diagonal X. Throws
/// std::logic_error if a diagonal entry of X is below x_min.
[[nodiscard]] std::pair<PwlMatrix, Matrix> recover_gains(const PwlMatrix& X, const PwlMatrix& Yc, const Matrix& Yd,
                                                         double x_min = 1e-6);

/// Error dynamics with the recovered gains: A - Lc Cyc, Gc - Lc Hyc, Ec - Lc Fyc,
/// J - Ld Cyd, Gd - Ld Hyd, Ed - Ld Fyd, outputs Mc e and Md e. Timer-dependent
/// gains make the flow blocks tabulated on the gain grid.
[[nodiscard]] DelaySystem closed_error_system(const ObservedPlant& plant, const ObserverGains& gains);

/// check_internal_positivity of the error system at the gain nodes.
[[nodiscard]] PositivityReport error_positivity(const ObservedPlant& plant, const ObserverGains& gains,
                                                double tol = 1e-9);
[[nodiscard]] PositivityReport error_positivity(const SwitchedPlant& plant, const SwitchedGains& gains,
                                                double tol = 1e-9);

/// Builds the delay certification LP of the error system and checks it at
/// zeta = diag(X), mu_c = Uc and the synthesized gamma and epsilon.
[[nodiscard]] std::vector<lp::Violation> verify_error_certificate(const ObservedPlant& plant,
                                                                  const ObserverGains& gains, double feastol = 1e-7);

}  // namespace posimp
