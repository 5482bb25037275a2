#include "system_file.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

namespace posimp::cli {

namespace {

constexpr int kFeasible = 0;
constexpr int kInfeasible = 2;
constexpr int kError = 1;

struct RunResult {
    bool feasible = false;
    double gamma = 0.0;
    std::string theorem;
    bool sound = true;
    std::size_t violations = 0;
    json payload;  // certificate or gains
    std::vector<std::string> conditions;
    std::optional<ObserverGains> gains;
    std::optional<SwitchedGains> switched_gains;
};

const DwellTimeConstraint& require_dwell(const SystemFile& f) {
    if (!f.dwell) throw SchemaError("file: missing 'dwell'");
    return *f.dwell;
}

RunResult infeasible(const Infeasible& why) {
    RunResult r;
    r.conditions = why.conditions;
    return r;
}

RunResult from_certificate(const Certificate& c, double feastol) {
    RunResult r;
    r.feasible = true;
    r.gamma = c.gamma;
    r.theorem = to_string(c.theorem);
    r.sound = c.sound;
    r.violations = lp::verify(c.program, c.solution, std::max(feastol, 1e-7)).size();
    r.payload = to_json(c);
    return r;
}

RunResult certify_file(const SystemFile& f, bool free_scalings) {
    const auto& dt = require_dwell(f);
    const bool range = dt.is_range();
    if (f.kind == Kind::Lft) {
        const auto& sys = *f.lft;
        const auto out = free_scalings ? (range ? certify_range_free(sys, dt, f.lp) : certify_min_free(sys, dt, f.lp))
                                       : (range ? certify_range(sys, dt, f.structure, f.lp)
                                                : certify_min(sys, dt, f.structure, f.lp));
        return out ? from_certificate(*out, f.lp.feastol) : infeasible(out.infeasible());
    }
    if (f.kind == Kind::Switched) throw SchemaError("certify: switched files are handled by synthesize");
    const auto scaling = free_scalings ? DelayScaling::UnconstrainedPeriodic : f.delay_scaling();
    const auto out = range ? certify_delay_range(*f.delay, dt, scaling, f.lp)
                           : certify_delay_min(*f.delay, dt, scaling, f.lp);
    if (!out) return infeasible(out.infeasible());
    auto r = from_certificate(out->cert, f.lp.feastol);
    r.payload["delay_scaling"] = scaling == DelayScaling::Constant ? "constant" : "unconstrained_periodic";
    r.payload["periodic_sequences_only"] = out->periodic_sequences_only;
    return r;
}

RunResult synthesize_file(const SystemFile& f, bool free_scalings) {
    const auto& dt = require_dwell(f);
    const auto scaling = free_scalings ? DelayScaling::UnconstrainedPeriodic : f.delay_scaling();
    const double tol = std::max(f.lp.feastol, 1e-7);
    if (f.kind == Kind::Plant) {
        const auto out = dt.is_range() ? synthesize_range(*f.plant, dt, scaling, f.observer)
                                       : synthesize_min(*f.plant, dt, scaling, f.observer);
        if (!out) return infeasible(out.infeasible());
        RunResult r;
        r.feasible = true;
        r.gamma = out->gamma;
        r.theorem = to_string(out->theorem);
        r.sound = out->sound;
        r.violations = lp::verify(out->program, out->solution, tol).size();
        r.payload = to_json(*out);
        r.gains = *out;
        return r;
    }
    if (f.kind == Kind::Switched) {
        const auto out = synthesize_switched(*f.switched, dt, scaling, f.observer);
        if (!out) return infeasible(out.infeasible());
        RunResult r;
        r.feasible = true;
        r.gamma = out->gamma;
        r.theorem = to_string(out->theorem);
        r.sound = out->sound;
        r.violations = lp::verify(out->program, out->solution, tol).size();
        r.payload = to_json(*out);
        r.switched_gains = *out;
        return r;
    }
    throw SchemaError("synthesize: kind must be plant or switched");
}

void print_result(std::ostream& out, const std::string& what, const SystemFile& f, const RunResult& r) {
    out << what << " (" << to_string(f.kind) << ")\n";
    if (!r.feasible) {
        out << "infeasible\n";
        const std::size_t shown = std::min<std::size_t>(r.conditions.size(), 8);
        for (std::size_t i = 0; i < shown; ++i) out << "  " << r.conditions[i] << "\n";
        return;
    }
    out << "feasible: " << r.theorem << "\n";
    out << std::setprecision(8) << "gamma = " << r.gamma << "\n";
    if (!r.sound) out << "note: timer-dependent conditions were only sampled at the grid nodes\n";
    out << "verify: " << (r.violations == 0 ? "ok" : std::to_string(r.violations) + " violated rows") << "\n";
    if (r.gains) {
        const auto& g = *r.gains;
        out << "Ld =\n" << g.Ld << "\n";
        out << "Lc(0) =\n" << g.Lc.node(0) << "\n";
    }
    if (r.switched_gains)
        for (std::size_t i = 0; i < r.switched_gains->modes.size(); ++i)
            out << "L" << i + 1 << "(0) =\n" << r.switched_gains->modes[i].L.node(0) << "\n";
}

void write_result(const std::string& path, const std::string& command, const SystemFile& f, const RunResult& r) {
    json j = {{"command", command}, {"kind", to_string(f.kind)}, {"feasible", r.feasible}};
    if (r.feasible) {
        j["gamma"] = r.gamma;
        j["theorem"] = r.theorem;
        j["sound"] = r.sound;
        j["verify_violations"] = r.violations;
        j[command == "certify" ? "certificate" : "gains"] = r.payload;
    } else {
        j["conditions"] = r.conditions;
    }
    j["system_file"] = f.doc;
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << j.dump(2) << "\n";
}

std::vector<PositivityViolation> switched_violations(const SwitchedPlant& p) {
    std::vector<PositivityViolation> v;
    auto scan = [&](const Matrix& m, const std::string& name, bool metzler) {
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c)
                if (m(r, c) < 0.0 && !(metzler && r == c)) v.push_back({name, r + 1, c + 1, m(r, c), std::nan("")});
    };
    for (std::size_t i = 0; i < p.modes.size(); ++i) {
        const auto& md = p.modes[i];
        const auto tag = std::to_string(i + 1);
        scan(md.A, "A" + tag, true);
        scan(md.G, "G" + tag, false);
        scan(md.E, "E" + tag, false);
        scan(md.C, "C" + tag, false);
        scan(md.H, "H" + tag, false);
        scan(md.F, "F" + tag, false);
    }
    return v;
}

int check_positivity(const SystemFile& f, std::ostream& out) {
    PositivityReport rep;
    const double horizon = f.dwell ? f.dwell->horizon() : 1.0;
    const auto grid = uniform_tau_grid(horizon);
    std::string subject = "system";
    if (f.kind == Kind::Lft) rep = check_internal_positivity(*f.lft, grid);
    else if (f.kind == Kind::Switched) {
        if (f.switched_gains) {
            rep = error_positivity(*f.switched, *f.switched_gains);
            subject = "error system";
        } else {
            rep.violations = switched_violations(*f.switched);
            rep.positive = rep.violations.empty();
            rep.sampled_check = false;
        }
    } else if (f.gains) {
        rep = error_positivity(*f.plant, *f.gains);
        subject = "error system";
    } else {
        rep = check_internal_positivity(to_lft(*f.delay), grid);
    }
    out << subject << ": " << rep.summary() << "\n";
    return rep.positive ? kFeasible : kInfeasible;
}

DwellSequence read_sequence(const std::string& spec, const SystemFile& f, int modes) {
    const double horizon = f.sim.horizon;
    if (spec.rfind("gen:", 0) == 0) {
        std::uint64_t seed = 0;
        try {
            seed = std::stoull(spec.substr(4));
        } catch (const std::exception&) {
            throw SchemaError("--seq: expected gen:SEED with an unsigned integer seed");
        }
        return gen_sequence(require_dwell(f), horizon, seed, modes);
    }
    std::ifstream in(spec);
    if (!in) throw SchemaError("cannot open " + spec);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw SchemaError(spec + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("dwells")) throw SchemaError(spec + ": expected an object with 'dwells'");
    std::vector<double> dwells = j.at("dwells").get<std::vector<double>>();
    std::vector<int> sigma;
    if (j.contains("sigma"))
        for (int s : j.at("sigma").get<std::vector<int>>()) sigma.push_back(s - 1);
    if (modes > 1 && sigma.empty()) throw SchemaError(spec + ": switched systems need 'sigma' (1-based modes)");
    auto seq = DwellSequence::from_dwells(dwells, sigma);
    seq.validate();
    return seq;
}

std::function<Vector(double)> continuous_input(const SimulationSettings& s, Eigen::Index dim) {
    if (s.wc_type == "constant") {
        if (s.wc_value.size() != dim)
            throw SchemaError("simulation.wc.value: expected " + std::to_string(dim) + " entries");
        return [v = s.wc_value](double) { return v; };
    }
    if (s.wc_type == "sine")
        return [=](double t) { return Vector(Vector::Constant(dim, s.wc_amplitude * std::sin(s.wc_frequency * t))); };
    return {};
}

std::function<Vector(int)> discrete_input(const SimulationSettings& s, Eigen::Index dim, std::size_t jumps) {
    if (s.wd_type == "constant") {
        if (s.wd_value.size() != dim)
            throw SchemaError("simulation.wd.value: expected " + std::to_string(dim) + " entries");
        return [v = s.wd_value](int) { return v; };
    }
    if (s.wd_type == "uniform") {
        std::mt19937_64 rng(s.wd_seed);
        std::uniform_real_distribution<double> draw(s.wd_lo, s.wd_hi);
        std::vector<Vector> table(jumps + 1, Vector::Zero(dim));
        for (auto& v : table)
            for (Eigen::Index i = 0; i < dim; ++i) v(i) = draw(rng);
        return [table](int k) { return table.at(static_cast<std::size_t>(k)); };
    }
    return {};
}

std::function<Vector(double)> constant_history(const std::optional<Vector>& v, Eigen::Index n, const char* name) {
    if (!v) return {};
    if (v->size() != n) throw SchemaError(std::string("simulation.") + name + ": expected " + std::to_string(n) + " entries");
    return [x = *v](double) { return x; };
}

int simulate_file(SystemFile f, const std::string& seq_spec, const std::string& csv, bool free_scalings,
                  std::ostream& out) {
    const auto& s = f.sim;
    const int modes = f.kind == Kind::Switched ? static_cast<int>(f.switched->modes.size()) : 1;
    const auto seq = read_sequence(seq_spec, f, modes);
    const double h_c = f.kind == Kind::Switched ? f.switched->h_c : f.kind == Kind::Lft ? 1.0 : f.delay->h_c;
    const auto step = choose_step(s.step, h_c, seq);
    if (step.adjusted) out << "step: " << step.note << "\n";

    SimulationTrace trace;
    bool enclosure = false;
    if (f.kind == Kind::Lft || f.kind == Kind::Delay) {
        DelaySystem sys = f.kind == Kind::Lft ? static_realization(*f.lft, s.delta_c, s.delta_d) : *f.delay;
        if (s.phi0) sys.phi0 = constant_history(s.phi0, sys.n(), "phi0");
        Inputs in;
        in.wc = continuous_input(s, sys.pc());
        in.wd = discrete_input(s, sys.pd(), seq.size());
        trace = simulate(sys, seq, in, s.horizon, step.step);
    } else if (f.kind == Kind::Plant) {
        if (!f.gains) {
            const auto r = synthesize_file(f, free_scalings);
            if (!r.feasible) {
                out << "synthesis infeasible; nothing to simulate\n";
                return kInfeasible;
            }
            f.gains = r.gains;
        }
        auto plant = *f.plant;
        if (s.phi0) plant.sys.phi0 = constant_history(s.phi0, plant.sys.n(), "phi0");
        ObserverRun run;
        run.wc = continuous_input(s, plant.sys.pc());
        run.wd = discrete_input(s, plant.sys.pd(), seq.size());
        run.phi0_minus = constant_history(s.phi0_minus, plant.sys.n(), "phi0_minus");
        run.phi0_plus = constant_history(s.phi0_plus, plant.sys.n(), "phi0_plus");
        trace = simulate_observer(plant, *f.gains, seq, run, s.horizon, step.step);
        enclosure = true;
    } else {
        if (!f.switched_gains) {
            const auto r = synthesize_file(f, free_scalings);
            if (!r.feasible) {
                out << "synthesis infeasible; nothing to simulate\n";
                return kInfeasible;
            }
            f.switched_gains = r.switched_gains;
        }
        auto plant = *f.switched;
        if (s.phi0) plant.phi0 = constant_history(s.phi0, plant.n(), "phi0");
        ObserverRun run;
        run.wc = continuous_input(s, plant.modes.front().E.cols());
        run.phi0_minus = constant_history(s.phi0_minus, plant.n(), "phi0_minus");
        run.phi0_plus = constant_history(s.phi0_plus, plant.n(), "phi0_plus");
        trace = simulate_observer(plant, *f.switched_gains, seq, run, s.horizon, step.step);
        enclosure = true;
    }

    std::ofstream os(csv);
    if (!os) throw std::runtime_error("cannot write " + csv);
    trace.write_csv(os);
    out << "samples: " << trace.t.size() << ", jumps: " << trace.jumps.size() << "\n";
    out << std::setprecision(8) << "min sample: " << trace.min_sample() << "\n";
    if (!enclosure) return kFeasible;
    const auto enc = check_enclosure(trace);
    if (enc.holds) {
        out << "enclosure holds, min margin " << enc.min_margin << "\n";
        return kFeasible;
    }
    out << "enclosure violated at t = " << enc.t << ", x_" << enc.component + 1 << (enc.upper ? " above x+" : " below x-")
        << " by " << -enc.margin << "\n";
    return kInfeasible;
}

int sweep_file(SystemFile f, const std::string& param, double from, double to, int steps, const std::string& csv,
               bool free_scalings, std::ostream& out) {
    if (steps < 1) throw SchemaError("--steps: need at least 1");
    auto dt = require_dwell(f);
    double* target = nullptr;
    if (param == "Tbar") target = &dt.t_bar;
    else if (param == "Tmin") target = &dt.t_min;
    else if (param == "Tmax") target = &dt.t_max;
    if (target == nullptr) throw SchemaError("--param: expected Tbar, Tmin or Tmax");
    if ((param == "Tbar") == dt.is_range())
        throw SchemaError("--param " + param + " does not apply to this dwell type");

    std::ofstream os(csv);
    if (!os) throw std::runtime_error("cannot write " + csv);
    os << param << ",gamma\n" << std::setprecision(10);
    const bool synth = f.kind == Kind::Plant || f.kind == Kind::Switched;
    int feasible = 0;
    for (int i = 0; i < steps; ++i) {
        const double v = steps == 1 ? from : from + (to - from) * i / (steps - 1);
        *target = v;
        f.dwell = dt;
        f.dwell->validate();
        const auto r = synth ? synthesize_file(f, free_scalings) : certify_file(f, free_scalings);
        os << v << ",";
        if (r.feasible) {
            os << r.gamma << "\n";
            ++feasible;
        } else {
            os << "INF\n";
        }
    }
    out << param << " sweep: " << feasible << " of " << steps << " points feasible\n";
    return feasible > 0 ? kFeasible : kInfeasible;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Stability, performance and interval-observer tools for positive impulsive systems"};
    app.name("posimp");
    app.require_subcommand(1);

    std::string file, result, seq, csv, param;
    bool free_scalings = false;
    double from = 0.0, to = 0.0;
    int steps = 0;

    auto* chk = app.add_subcommand("check-positivity", "Check internal positivity of the system (or error system)");
    chk->add_option("file", file, "System or result file")->required();

    auto* cert = app.add_subcommand("certify", "Certify stability and the hybrid L1/l1 gain");
    cert->add_option("file", file, "System file")->required();
    cert->add_flag("--free-scalings", free_scalings, "Unconstrained scalings");
    cert->add_option("--result", result, "Write the result JSON here");

    auto* syn = app.add_subcommand("synthesize", "Synthesize interval-observer gains");
    syn->add_option("file", file, "System file")->required();
    syn->add_flag("--free-scalings", free_scalings, "Unconstrained (periodic) scalings");
    syn->add_option("--result", result, "Write the result JSON here");

    auto* sim = app.add_subcommand("simulate", "Simulate along a dwell sequence and write a CSV trace");
    sim->add_option("file", file, "System or result file")->required();
    sim->add_option("--seq", seq, "gen:SEED or a JSON file with dwells (and sigma)")->required();
    sim->add_option("--out", csv, "CSV output")->required();
    sim->add_flag("--free-scalings", free_scalings, "Scalings used when gains have to be synthesized");

    auto* sw = app.add_subcommand("sweep", "Sweep a dwell-time parameter and write gamma per point");
    sw->add_option("file", file, "System file")->required();
    sw->add_option("--param", param, "Tbar, Tmin or Tmax")->required();
    sw->add_option("--from", from)->required();
    sw->add_option("--to", to)->required();
    sw->add_option("--steps", steps, "Number of points, ends included")->required();
    sw->add_option("--out", csv, "CSV output")->required();
    sw->add_flag("--free-scalings", free_scalings);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? kFeasible : kError;
    }

    try {
        const auto f = load_system(file);
        if (chk->parsed()) return check_positivity(f, out);
        if (sim->parsed()) return simulate_file(f, seq, csv, free_scalings, out);
        if (sw->parsed()) return sweep_file(f, param, from, to, steps, csv, free_scalings, out);
        const bool certifying = cert->parsed();
        const auto r = certifying ? certify_file(f, free_scalings) : synthesize_file(f, free_scalings);
        print_result(out, certifying ? "certify" : "synthesize", f, r);
        if (!result.empty()) write_result(result, certifying ? "certify" : "synthesize", f, r);
        return r.feasible ? kFeasible : kInfeasible;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kError;
    }
}

}  // namespace posimp::cli
