#pragma once

#include "posimp/sim.hpp"

#include <json.hpp>

#include <optional>
#include <stdexcept>
#include <string>

namespace posimp::cli {

using nlohmann::json;

class SchemaError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

enum class Kind { Lft, Delay, Switched, Plant };

struct SimulationSettings {
    double horizon = 100.0;
    double step = 0.01;
    std::optional<Vector> phi0, phi0_minus, phi0_plus;
    /// w_c(t): zero, constant value or amplitude * sin(frequency t)
    std::string wc_type = "zero";
    Vector wc_value;
    double wc_amplitude = 0.0, wc_frequency = 1.0;
    /// w_d(k): zero, constant value or i.i.d. uniform in [lo, hi] from seed
    std::string wd_type = "zero";
    Vector wd_value;
    double wd_lo = 0.0, wd_hi = 0.0;
    std::uint64_t wd_seed = 1;
    /// Static uncertainty used when simulating an LFT system.
    double delta_c = 1.0, delta_d = 1.0;
};

struct SystemFile {
    Kind kind = Kind::Lft;
    json doc;  // the document as read (embedded into result files)

    std::optional<LftPositiveSystem> lft;
    std::optional<DelaySystem> delay;  // kind delay, and the plant of kind plant
    std::optional<ObservedPlant> plant;
    std::optional<SwitchedPlant> switched;

    std::optional<DwellTimeConstraint> dwell;
    /// constant | unconstrained | grouped | unconstrained_periodic
    std::string scalings = "constant";
    ScalingStructure structure = ScalingStructure::constant();

    LpOptions lp;
    ObserverOptions observer;
    SimulationSettings sim;

    /// Present when the file is a synthesis result being re-ingested.
    std::optional<ObserverGains> gains;
    std::optional<SwitchedGains> switched_gains;

    [[nodiscard]] DelayScaling delay_scaling() const {
        return scalings == "unconstrained_periodic" ? DelayScaling::UnconstrainedPeriodic : DelayScaling::Constant;
    }
};

[[nodiscard]] const char* to_string(Kind k);

/// Throws SchemaError with a path-level message, or the model's own
/// DimensionError / invalid_argument when blocks are inconsistent.
[[nodiscard]] SystemFile parse_system(const json& doc);
[[nodiscard]] SystemFile load_system(const std::string& path);

[[nodiscard]] Matrix read_matrix(const json& v, const std::string& name);

[[nodiscard]] json to_json(const Matrix& m);
[[nodiscard]] json to_json(const PwlMatrix& m);
[[nodiscard]] json to_json(const Certificate& c);
[[nodiscard]] json to_json(const ObserverGains& g);
[[nodiscard]] json to_json(const SwitchedGains& g);

/// Runs one subcommand. Exit codes: 0 success or feasible, 2 infeasible or a
/// failed check, 1 error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace posimp::cli
