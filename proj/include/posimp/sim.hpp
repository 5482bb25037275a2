#pragma once

#include "posimp/delay.hpp"
#include "posimp/observer.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace posimp {

class SimulationError : public std::runtime_error {
  public:
    SimulationError(const std::string& what, double t) : std::runtime_error(what), time(t) {}
    double time;
};

/// Interval k is [t_k, t_k + T_k) with t_0 = 0; the jump (or switch) k >= 1
/// happens at t_k. After the last interval the flow continues without jumps.
struct DwellSequence {
    std::vector<double> t;
    std::vector<double> T;
    /// Mode on each interval; empty for impulsive systems.
    std::vector<int> sigma;

    static DwellSequence from_dwells(const std::vector<double>& dwells, std::vector<int> sigma = {});
    [[nodiscard]] std::size_t size() const { return T.size(); }
    [[nodiscard]] double end() const { return T.empty() ? 0.0 : t.back() + T.back(); }
    /// Throws std::invalid_argument on a nonpositive dwell, a broken t_{k+1} = t_k + T_k or a sigma size mismatch.
    void validate() const;
};

/// Range and minimum kinds draw i.i.d. uniform dwells (minimum: [T_bar, 3 T_bar]).
/// Periodic kinds draw one period beta_0..beta_{q-1} summing to h_c / alpha and repeat it.
/// With modes > 1 the sequence also carries sigma: consecutive intervals differ,
/// and for periodic kinds the mode pattern repeats with the dwells.
[[nodiscard]] DwellSequence gen_sequence(const DwellTimeConstraint& dt, double horizon, std::uint64_t seed,
                                         int modes = 1);

struct Inputs {
    /// Evaluated at the RK4 stage times; empty means zero.
    std::function<Vector(double)> wc;
    /// Held constant over integration step i (see step_grid); overrides wc.
    std::function<Vector(int)> wc_step;
    /// Jump index k >= 1; empty means zero.
    std::function<Vector(int)> wd;
};

struct JumpRecord {
    int k = 0;
    double t = 0.0;
    int from = 0, to = 0;
    Vector before, after;
    Vector zd;
};

struct SimulationTrace {
    std::vector<double> t;
    /// Plant state; at a jump time the left limit (the post-jump value is in jumps).
    std::vector<Vector> x;
    std::vector<Vector> x_minus, x_plus;  // observer runs only
    std::vector<Vector> zc;               // plain runs only
    std::vector<int> sigma;               // switched runs only
    std::vector<JumpRecord> jumps;

    double step = 0.0;
    bool step_adjusted = false;
    std::string step_note;

    /// Discretized sum_j int |w_c,j| dt + sum_k |w_d(k)|_1 and the same for the outputs.
    double input_l1 = 0.0;
    double output_l1 = 0.0;

    [[nodiscard]] double min_sample() const;
    /// Header t,x_1..x_n[,xminus_1..,xplus_1..][,sigma]; one row per sample.
    void write_csv(std::ostream& os) const;
};

/// Integration step actually used: reduced to min T_k / 4 when larger, then
/// down to h_c / m for the smallest integer m.
struct StepChoice {
    double step = 0.0;
    bool adjusted = false;
    std::string note;
};
[[nodiscard]] StepChoice choose_step(double requested, double h_c, const DwellSequence& seq);

/// (start, length) of every integration step up to the horizon: each interval
/// is cut into ceil(T_k / step) equal steps so that jump times are hit exactly.
[[nodiscard]] std::vector<std::pair<double, double>> step_grid(const DwellSequence& seq, double horizon,
                                                               double step);

[[nodiscard]] SimulationTrace simulate(const DelaySystem& sys, const DwellSequence& seq, const Inputs& in,
                                       double horizon, double step);

/// Delay-free system for a static uncertainty Delta_c = delta_c I, Delta_d = delta_d I.
[[nodiscard]] DelaySystem static_realization(const LftPositiveSystem& sys, double delta_c, double delta_d);

/// Switched system with one continuous delay, closed or open loop:
///   xdot = A_s(tau) x + G_s(tau) x(t - h_c) + E_s(tau) w,  z = C_s x + H_s x(t - h_c) + F_s w
/// with tau the time since the last switch. The state does not jump at switches.
struct SwitchedDelaySystem {
    struct Mode {
        TimerMatrixFunction A, G, E;
        Matrix C, H, F;
    };
    std::vector<Mode> modes;
    double h_c = 1.0;
    std::function<Vector(double)> phi0;

    [[nodiscard]] Eigen::Index n() const { return modes.front().A.rows(); }
    void validate() const;
};

/// Error dynamics A_i - L_i C_i, G_i - L_i H_i, E_i - L_i F_i with output M e.
[[nodiscard]] SwitchedDelaySystem switched_error_system(const SwitchedPlant& plant, const SwitchedGains& gains);

[[nodiscard]] SimulationTrace simulate(const SwitchedDelaySystem& sys, const DwellSequence& seq, const Inputs& in,
                                       double horizon, double step);

/// True disturbances and ordered initial data for an observer run. Bounds come
/// from the plant; unset bounds fall back to the true signal.
struct ObserverRun {
    std::function<Vector(double)> wc;
    std::function<Vector(int)> wd;
    std::function<Vector(double)> phi0_minus, phi0_plus;
};

/// Plant, upper and lower observers jointly (state x, x+, x-).
[[nodiscard]] SimulationTrace simulate_observer(const ObservedPlant& plant, const ObserverGains& gains,
                                                const DwellSequence& seq, const ObserverRun& run, double horizon,
                                                double step);
[[nodiscard]] SimulationTrace simulate_observer(const SwitchedPlant& plant, const SwitchedGains& gains,
                                                const DwellSequence& seq, const ObserverRun& run, double horizon,
                                                double step);

struct EnclosureResult {
    bool holds = true;
    /// First violation: time, state component, and whether x+ (true) or x- (false) failed.
    double t = 0.0;
    int component = -1;
    bool upper = false;
    double margin = 0.0;
    /// Smallest of x+ - x and x - x- over the whole trace.
    double min_margin = 0.0;
};

[[nodiscard]] EnclosureResult check_enclosure(const SimulationTrace& trace, double tol = 1e-9);

struct GainEstimateOptions {
    int trials = 64;
    std::uint64_t seed = 1;
    double horizon_factor = 50.0;
    double step = 0.01;
    /// Draw input entries from [0, 1] instead of [-1, 1].
    bool nonnegative = false;
};

struct GainEstimate {
    double gain = 0.0;
    int trials = 0;
    int skipped = 0;  // zero-input draws
};

/// Lower bound on the hybrid L1/l1 gain from zero initial conditions: random
/// piecewise-constant w_c on the step grid and random w_d, supported on a
/// random initial window, scaled to unit norm, under random dwell sequences.
[[nodiscard]] GainEstimate empirical_gain(const DelaySystem& sys, const DwellTimeConstraint& dt,
                                          const GainEstimateOptions& opt = {});
[[nodiscard]] GainEstimate empirical_gain(const SwitchedDelaySystem& sys, const DwellTimeConstraint& dt,
                                          const GainEstimateOptions& opt = {});

/// |x_h - x_{h/2}| / |x_{h/2} - x_{h/4}| on the terminal state.
[[nodiscard]] double step_halving_ratio(const DelaySystem& sys, const DwellSequence& seq, const Inputs& in,
                                        double horizon, double step);

}  // namespace posimp
