#pragma once

#include "posimp/certify.hpp"
#include "posimp/core.hpp"

#include <functional>
#include <string>
#include <vector>

namespace posimp {

/// Impulsive positive system with a constant continuous delay h_c and a
/// constant discrete delay of h_d jumps:
///   xdot = A(tau) x + Gc(tau) x(t - h_c) + Ec(tau) w_c,  z_c = Cc x + Hc x(t - h_c) + Fc w_c
///   x+   = J x + Gd x(t_{k-h_d}) + Ed w_d,                z_d = Cd x + Hd x(t_{k-h_d}) + Fd w_d
struct DelaySystem {
    TimerMatrixFunction A, Gc, Ec;
    Matrix Cc, Hc, Fc;
    Matrix J, Gd, Ed;
    Matrix Cd, Hd, Fd;
    double h_c = 1.0;
    int h_d = 0;
    /// Initial history on [-h_c, 0]; empty means zero.
    std::function<Vector(double)> phi0;

    [[nodiscard]] Eigen::Index n() const { return A.rows(); }
    [[nodiscard]] Eigen::Index pc() const { return Ec.cols(); }
    [[nodiscard]] Eigen::Index pd() const { return Ed.cols(); }
    [[nodiscard]] Eigen::Index qc() const { return Cc.rows(); }
    [[nodiscard]] Eigen::Index qd() const { return Cd.rows(); }

    /// Zero-fills empty blocks, then validates.
    DelaySystem& complete();
    void validate() const;
    [[nodiscard]] Vector history(double s) const;
};

/// Delay operators as unit-gain uncertainty channels: CcD = CdD = I, HcD = HdD = 0, FcD = FdD = 0.
[[nodiscard]] LftPositiveSystem to_lft(const DelaySystem& sys);

/// Zero-delay system: A + Gc, Cc + Hc, J + Gd, Cd + Hd, no channels.
[[nodiscard]] LftPositiveSystem zero_delay_system(const DelaySystem& sys);

struct PeriodicCheck {
    bool valid = false;
    int q = 0;      // primitive period length
    int alpha = 0;  // h_c / (sum of one period)
    std::string reason;
};

/// Checks that the repeating dwell sequence makes a timer-dependent scaling
/// h_c-periodic. The sequence is first reduced to its primitive period, so a
/// period repeated m times gives the same answer for every m.
[[nodiscard]] PeriodicCheck validate_periodic_sequence(const std::vector<double>& beta,
                                                       const DwellTimeConstraint& base, double h_c,
                                                       double tol = 1e-9);

enum class DelayScaling { Constant, UnconstrainedPeriodic };

struct DelayCertificate {
    Certificate cert;
    DelayScaling scaling = DelayScaling::Constant;
    /// Set for UnconstrainedPeriodic: only dwell sequences repeating with a
    /// period summing to h_c / alpha are covered.
    bool periodic_sequences_only = false;
};

/// The LFT actually certified: to_lft with the discrete delay channel folded
/// into J + Gd and Cd + Hd (its scaling is eliminated) for Constant, or the
/// zero-delay system for UnconstrainedPeriodic.
[[nodiscard]] LftPositiveSystem delay_certification_system(const DelaySystem& sys, DelayScaling scaling);

[[nodiscard]] Outcome<DelayCertificate> certify_delay_range(const DelaySystem& sys, const DwellTimeConstraint& dt,
                                                            DelayScaling scaling, const LpOptions& opt = {});
[[nodiscard]] Outcome<DelayCertificate> certify_delay_min(const DelaySystem& sys, const DwellTimeConstraint& dt,
                                                          DelayScaling scaling, const LpOptions& opt = {});

}  // namespace posimp
