#include "system_file.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>

namespace posimp::cli {

namespace {

void only_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
    if (!obj.is_object()) throw SchemaError(where + ": expected an object");
    for (const auto& [key, _] : obj.items())
        if (!allowed.count(key)) throw SchemaError(where + ": unknown key '" + key + "'");
}

double number(const json& v, const std::string& name) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
        const auto s = v.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
    }
    throw SchemaError(name + ": expected a number");
}

double number_or(const json& obj, const char* key, const std::string& where, double fallback) {
    return obj.contains(key) ? number(obj.at(key), where + "." + key) : fallback;
}

int integer(const json& v, const std::string& name) {
    if (!v.is_number_integer()) throw SchemaError(name + ": expected an integer");
    return v.get<int>();
}

std::string text(const json& v, const std::string& name) {
    if (!v.is_string()) throw SchemaError(name + ": expected a string");
    return v.get<std::string>();
}

bool is_matrix_list(const json& v) {
    return v.is_array() && !v.empty() && v[0].is_array() && !v[0].empty() && v[0][0].is_array();
}

TimerMatrixFunction read_timer(const json& v, const std::string& name) {
    if (!is_matrix_list(v)) return read_matrix(v, name);
    std::vector<Matrix> coeffs;
    for (std::size_t k = 0; k < v.size(); ++k) {
        coeffs.push_back(read_matrix(v[k], name + " coefficient " + std::to_string(k)));
        if (coeffs.back().rows() != coeffs.front().rows() || coeffs.back().cols() != coeffs.front().cols())
            throw SchemaError("matrix " + name + " coefficient " + std::to_string(k) + ": dimensions differ from coefficient 0");
    }
    if (static_cast<int>(coeffs.size()) > TimerMatrixFunction::kMaxDegree + 1)
        throw SchemaError("matrix " + name + ": degree above " + std::to_string(TimerMatrixFunction::kMaxDegree));
    return TimerMatrixFunction(coeffs);
}

Vector read_vector(const json& v, const std::string& name) {
    if (!v.is_array()) throw SchemaError("vector " + name + ": expected an array of numbers");
    Vector out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i)
        out(static_cast<Eigen::Index>(i)) = number(v[i], "vector " + name + " entry " + std::to_string(i + 1));
    return out;
}

std::function<Vector(double)> constant_signal(const Vector& v) {
    return [v](double) { return v; };
}

DwellTimeConstraint read_dwell(const json& d) {
    only_keys(d, "dwell", {"type", "params"});
    const auto type = text(d.at("type"), "dwell.type");
    const json p = d.value("params", json::object());
    const std::string where = "dwell.params";
    auto need = [&](const char* key) {
        if (!p.contains(key)) throw SchemaError(where + ": missing '" + key + "' for type " + type);
        return number(p.at(key), where + "." + key);
    };
    auto need_int = [&](const char* key) {
        if (!p.contains(key)) throw SchemaError(where + ": missing '" + key + "' for type " + type);
        return integer(p.at(key), where + "." + key);
    };
    DwellTimeConstraint dt;
    if (type == "range") {
        only_keys(p, where, {"Tmin", "Tmax"});
        dt = DwellTimeConstraint::range(need("Tmin"), need("Tmax"));
    } else if (type == "minimum") {
        only_keys(p, where, {"Tbar"});
        dt = DwellTimeConstraint::minimum(need("Tbar"));
    } else if (type == "periodic_range") {
        only_keys(p, where, {"Tmin", "Tmax", "q", "alpha", "h_c"});
        dt = DwellTimeConstraint::periodic_range(need("Tmin"), need("Tmax"), need_int("q"), need_int("alpha"),
                                                 need("h_c"));
    } else if (type == "periodic_minimum") {
        only_keys(p, where, {"Tbar", "q", "alpha", "h_c"});
        dt = DwellTimeConstraint::periodic_minimum(need("Tbar"), need_int("q"), need_int("alpha"), need("h_c"));
    } else {
        throw SchemaError("dwell.type: expected one of range, minimum, periodic_range, periodic_minimum");
    }
    dt.validate();
    return dt;
}

LftPositiveSystem read_lft(const json& s) {
    only_keys(s, "system", {"A", "Gc", "Ec", "CcD", "HcD", "FcD", "Cc", "Hc", "Fc", "J", "Gd", "Ed", "CdD", "HdD", "FdD",
                            "Cd", "Hd", "Fd"});
    for (const char* key : {"A", "J"})
        if (!s.contains(key)) throw SchemaError(std::string("system: missing '") + key + "'");
    auto sys = LftPositiveSystem::bare(read_timer(s.at("A"), "A"), read_matrix(s.at("J"), "J"));
    auto timer = [&](const char* key, TimerMatrixFunction& dst) {
        if (s.contains(key)) dst = read_timer(s.at(key), key);
    };
    auto mat = [&](const char* key, Matrix& dst) {
        if (s.contains(key)) dst = read_matrix(s.at(key), key);
    };
    timer("Gc", sys.Gc);
    timer("Ec", sys.Ec);
    mat("CcD", sys.CcD);
    mat("HcD", sys.HcD);
    mat("FcD", sys.FcD);
    mat("Cc", sys.Cc);
    mat("Hc", sys.Hc);
    mat("Fc", sys.Fc);
    mat("Gd", sys.Gd);
    mat("Ed", sys.Ed);
    mat("CdD", sys.CdD);
    mat("HdD", sys.HdD);
    mat("FdD", sys.FdD);
    mat("Cd", sys.Cd);
    mat("Hd", sys.Hd);
    mat("Fd", sys.Fd);
    sys.complete();
    return sys;
}

DelaySystem read_delay(const json& s) {
    only_keys(s, "system", {"A", "Gc", "Ec", "Cc", "Hc", "Fc", "J", "Gd", "Ed", "Cd", "Hd", "Fd", "h_c", "h_d"});
    for (const char* key : {"A", "J"})
        if (!s.contains(key)) throw SchemaError(std::string("system: missing '") + key + "'");
    DelaySystem d;
    d.A = read_timer(s.at("A"), "A");
    if (s.contains("Gc")) d.Gc = read_timer(s.at("Gc"), "Gc");
    if (s.contains("Ec")) d.Ec = read_timer(s.at("Ec"), "Ec");
    auto mat = [&](const char* key, Matrix& dst) {
        if (s.contains(key)) dst = read_matrix(s.at(key), key);
    };
    mat("Cc", d.Cc);
    mat("Hc", d.Hc);
    mat("Fc", d.Fc);
    mat("J", d.J);
    mat("Gd", d.Gd);
    mat("Ed", d.Ed);
    mat("Cd", d.Cd);
    mat("Hd", d.Hd);
    mat("Fd", d.Fd);
    d.h_c = number_or(s, "h_c", "system", 1.0);
    if (s.contains("h_d")) d.h_d = integer(s.at("h_d"), "system.h_d");
    d.complete();
    return d;
}

struct Bounds {
    std::optional<Vector> lo, hi;
};

Bounds read_bounds(const json& b, const std::string& where) {
    only_keys(b, where, {"lo", "hi"});
    Bounds out;
    if (b.contains("lo")) out.lo = read_vector(b.at("lo"), where + ".lo");
    if (b.contains("hi")) out.hi = read_vector(b.at("hi"), where + ".hi");
    return out;
}

SwitchedPlant read_switched(const json& s, const json& obs) {
    only_keys(s, "system", {"modes", "h_c"});
    if (!s.contains("modes") || !s.at("modes").is_array()) throw SchemaError("system.modes: expected an array");
    SwitchedPlant p;
    const auto& modes = s.at("modes");
    for (std::size_t i = 0; i < modes.size(); ++i) {
        const std::string where = "system.modes[" + std::to_string(i + 1) + "]";
        const auto& m = modes[i];
        only_keys(m, where, {"A", "G", "E", "C", "H", "F"});
        for (const char* key : {"A", "E", "C"})
            if (!m.contains(key)) throw SchemaError(where + ": missing '" + key + "'");
        auto name = [&](const char* key) { return "modes[" + std::to_string(i + 1) + "]." + key; };
        SwitchedMode md;
        md.A = read_matrix(m.at("A"), name("A"));
        md.E = read_matrix(m.at("E"), name("E"));
        md.C = read_matrix(m.at("C"), name("C"));
        md.G = m.contains("G") ? read_matrix(m.at("G"), name("G")) : Matrix(Matrix::Zero(md.A.rows(), md.A.cols()));
        md.H = m.contains("H") ? read_matrix(m.at("H"), name("H")) : Matrix(Matrix::Zero(md.C.rows(), md.A.cols()));
        md.F = m.contains("F") ? read_matrix(m.at("F"), name("F")) : Matrix(Matrix::Zero(md.C.rows(), md.E.cols()));
        p.modes.push_back(std::move(md));
    }
    p.h_c = number_or(s, "h_c", "system", 1.0);
    only_keys(obs, "observer", {"M", "w_bounds"});
    p.M = obs.contains("M") ? read_matrix(obs.at("M"), "M") : Matrix(Matrix::Identity(p.n(), p.n()));
    if (obs.contains("w_bounds")) {
        const auto b = read_bounds(obs.at("w_bounds"), "observer.w_bounds");
        if (b.lo) p.w_lo = constant_signal(*b.lo);
        if (b.hi) p.w_hi = constant_signal(*b.hi);
    }
    p.validate();
    return p;
}

ObservedPlant read_plant(const DelaySystem& d, const json& obs) {
    only_keys(obs, "observer", {"Mc", "Md", "wc_bounds", "wd_bounds"});
    ObservedPlant p;
    p.sys = d;
    if (obs.contains("Mc")) p.Mc = read_matrix(obs.at("Mc"), "Mc");
    if (obs.contains("Md")) p.Md = read_matrix(obs.at("Md"), "Md");
    if (obs.contains("wc_bounds")) {
        const auto b = read_bounds(obs.at("wc_bounds"), "observer.wc_bounds");
        if (b.lo) p.wc_lo = constant_signal(*b.lo);
        if (b.hi) p.wc_hi = constant_signal(*b.hi);
    }
    if (obs.contains("wd_bounds")) {
        const auto b = read_bounds(obs.at("wd_bounds"), "observer.wd_bounds");
        if (b.lo) p.wd_lo = [v = *b.lo](int) { return v; };
        if (b.hi) p.wd_hi = [v = *b.hi](int) { return v; };
    }
    p.complete();
    return p;
}

void read_solver(const json& s, SystemFile& f) {
    only_keys(s, "solver", {"N", "feastol", "margin", "eps_min", "x_min", "alpha_max", "gain_box"});
    if (s.contains("N")) f.lp.nodes = integer(s.at("N"), "solver.N");
    if (f.lp.nodes < 2) throw SchemaError("solver.N: need at least 2 nodes");
    f.lp.feastol = number_or(s, "feastol", "solver", f.lp.feastol);
    f.lp.margin = number_or(s, "margin", "solver", f.lp.margin);
    f.lp.eps_min = number_or(s, "eps_min", "solver", f.lp.eps_min);
    f.observer.x_min = number_or(s, "x_min", "solver", f.observer.x_min);
    f.observer.alpha_max = number_or(s, "alpha_max", "solver", f.observer.alpha_max);
    if (s.contains("gain_box")) {
        const auto& b = s.at("gain_box");
        if (!b.is_array() || b.size() != 2) throw SchemaError("solver.gain_box: expected [lo, hi]");
        f.observer = gain_entry_box(f.observer, number(b[0], "solver.gain_box[1]"), number(b[1], "solver.gain_box[2]"));
    }
    f.observer.lp = f.lp;
}

void read_simulation(const json& s, SimulationSettings& sim) {
    only_keys(s, "simulation", {"horizon", "step", "phi0", "phi0_minus", "phi0_plus", "wc", "wd", "delta_c", "delta_d"});
    sim.horizon = number_or(s, "horizon", "simulation", sim.horizon);
    sim.step = number_or(s, "step", "simulation", sim.step);
    sim.delta_c = number_or(s, "delta_c", "simulation", sim.delta_c);
    sim.delta_d = number_or(s, "delta_d", "simulation", sim.delta_d);
    if (s.contains("phi0")) sim.phi0 = read_vector(s.at("phi0"), "phi0");
    if (s.contains("phi0_minus")) sim.phi0_minus = read_vector(s.at("phi0_minus"), "phi0_minus");
    if (s.contains("phi0_plus")) sim.phi0_plus = read_vector(s.at("phi0_plus"), "phi0_plus");
    if (s.contains("wc")) {
        const auto& w = s.at("wc");
        only_keys(w, "simulation.wc", {"type", "value", "amplitude", "frequency"});
        sim.wc_type = text(w.at("type"), "simulation.wc.type");
        if (sim.wc_type == "constant") sim.wc_value = read_vector(w.at("value"), "simulation.wc.value");
        else if (sim.wc_type == "sine") {
            sim.wc_amplitude = number_or(w, "amplitude", "simulation.wc", 1.0);
            sim.wc_frequency = number_or(w, "frequency", "simulation.wc", 1.0);
        } else if (sim.wc_type != "zero")
            throw SchemaError("simulation.wc.type: expected one of zero, constant, sine");
    }
    if (s.contains("wd")) {
        const auto& w = s.at("wd");
        only_keys(w, "simulation.wd", {"type", "value", "lo", "hi", "seed"});
        sim.wd_type = text(w.at("type"), "simulation.wd.type");
        if (sim.wd_type == "constant") sim.wd_value = read_vector(w.at("value"), "simulation.wd.value");
        else if (sim.wd_type == "uniform") {
            sim.wd_lo = number_or(w, "lo", "simulation.wd", -1.0);
            sim.wd_hi = number_or(w, "hi", "simulation.wd", 1.0);
            if (w.contains("seed")) sim.wd_seed = w.at("seed").get<std::uint64_t>();
        } else if (sim.wd_type != "zero")
            throw SchemaError("simulation.wd.type: expected one of zero, constant, uniform");
    }
}

PwlMatrix read_pwl(const json& v, const std::string& name) {
    only_keys(v, name, {"horizon", "nodes"});
    const auto& nodes = v.at("nodes");
    std::vector<Matrix> m;
    for (std::size_t i = 0; i < nodes.size(); ++i) m.push_back(read_matrix(nodes[i], name + " node " + std::to_string(i)));
    return PwlMatrix(PwlGrid(number(v.at("horizon"), name + ".horizon"), static_cast<int>(m.size())), m);
}

void read_gains(const json& g, SystemFile& f) {
    if (f.kind == Kind::Plant) {
        ObserverGains out;
        out.Lc = read_pwl(g.at("Lc"), "gains.Lc");
        out.Ld = read_matrix(g.at("Ld"), "gains.Ld");
        out.gamma = number_or(g, "gamma", "gains", 0.0);
        if (f.dwell) out.dt = *f.dwell;
        f.gains = std::move(out);
    } else if (f.kind == Kind::Switched) {
        SwitchedGains out;
        for (std::size_t i = 0; i < g.at("modes").size(); ++i) {
            ModeGains m;
            m.L = read_pwl(g.at("modes")[i].at("L"), "gains.modes[" + std::to_string(i + 1) + "].L");
            out.modes.push_back(std::move(m));
        }
        out.gamma = number_or(g, "gamma", "gains", 0.0);
        if (f.dwell) out.dt = *f.dwell;
        f.switched_gains = std::move(out);
    } else {
        throw SchemaError("gains: only plant and switched systems carry observer gains");
    }
}

}  // namespace

const char* to_string(Kind k) {
    switch (k) {
        case Kind::Lft: return "lft";
        case Kind::Delay: return "delay";
        case Kind::Switched: return "switched";
        case Kind::Plant: return "plant";
    }
    return "?";
}

Matrix read_matrix(const json& v, const std::string& name) {
    if (!v.is_array()) throw SchemaError("matrix " + name + ": expected an array of rows");
    if (v.empty()) return {};
    const std::size_t cols = v[0].is_array() ? v[0].size() : 0;
    Matrix m(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < v.size(); ++r) {
        const std::string row = "matrix " + name + " row " + std::to_string(r + 1);
        if (!v[r].is_array()) throw SchemaError(row + ": expected an array");
        if (v[r].size() != cols) throw SchemaError(row + ": expected " + std::to_string(cols) + " entries");
        for (std::size_t c = 0; c < cols; ++c) {
            if (!v[r][c].is_number()) throw SchemaError(row + " entry " + std::to_string(c + 1) + ": expected a number");
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v[r][c].get<double>();
        }
    }
    return m;
}

SystemFile parse_system(const json& input) {
    json doc = input;
    json gains;
    if (input.is_object() && input.contains("system_file")) {
        doc = input.at("system_file");
        if (!input.contains("gains")) throw SchemaError("result file has no gains");
        gains = input.at("gains");
    }
    only_keys(doc, "file", {"kind", "description", "system", "observer", "dwell", "scalings", "solver", "simulation"});
    if (!doc.contains("kind")) throw SchemaError("file: missing 'kind'");
    if (!doc.contains("system")) throw SchemaError("file: missing 'system'");
    SystemFile f;
    f.doc = doc;
    const auto kind = text(doc.at("kind"), "kind");
    if (kind == "lft") f.kind = Kind::Lft;
    else if (kind == "delay") f.kind = Kind::Delay;
    else if (kind == "switched") f.kind = Kind::Switched;
    else if (kind == "plant") f.kind = Kind::Plant;
    else throw SchemaError("kind: expected one of lft, delay, switched, plant");

    const json obs = doc.value("observer", json::object());
    if (doc.contains("observer") && (f.kind == Kind::Lft || f.kind == Kind::Delay))
        throw SchemaError("observer: only plant and switched systems take an observer block");
    switch (f.kind) {
        case Kind::Lft: f.lft = read_lft(doc.at("system")); break;
        case Kind::Delay: f.delay = read_delay(doc.at("system")); break;
        case Kind::Plant:
            f.delay = read_delay(doc.at("system"));
            f.plant = read_plant(*f.delay, obs);
            break;
        case Kind::Switched: f.switched = read_switched(doc.at("system"), obs); break;
    }

    if (doc.contains("dwell")) f.dwell = read_dwell(doc.at("dwell"));
    if (doc.contains("scalings")) {
        const auto& s = doc.at("scalings");
        only_keys(s, "scalings", {"type", "groups"});
        f.scalings = text(s.at("type"), "scalings.type");
        const bool lft = f.kind == Kind::Lft;
        if (lft && f.scalings == "unconstrained") f.structure = ScalingStructure::unconstrained();
        else if (lft && f.scalings == "grouped") {
            std::vector<std::vector<int>> groups;
            for (const auto& g : s.at("groups")) {
                groups.emplace_back();
                for (const auto& i : g) groups.back().push_back(integer(i, "scalings.groups") - 1);
            }
            f.structure = ScalingStructure::grouped(groups);
        } else if (f.scalings != "constant" && (lft || f.scalings != "unconstrained_periodic")) {
            throw SchemaError(lft ? "scalings.type: expected one of constant, unconstrained, grouped"
                                  : "scalings.type: expected one of constant, unconstrained_periodic");
        }
    }
    if (doc.contains("solver")) read_solver(doc.at("solver"), f);
    f.observer.lp = f.lp;
    if (doc.contains("simulation")) read_simulation(doc.at("simulation"), f.sim);
    if (!gains.is_null()) read_gains(gains, f);
    return f;
}

SystemFile load_system(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open " + path);
    json doc;
    try {
        doc = json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw SchemaError(path + ": " + e.what());
    }
    return parse_system(doc);
}

json to_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(row);
    }
    return rows;
}

json to_json(const PwlMatrix& m) {
    json nodes = json::array();
    for (const auto& n : m.nodes()) nodes.push_back(to_json(n));
    return {{"horizon", m.grid().horizon}, {"nodes", nodes}};
}

json to_json(const Certificate& c) {
    json j = {{"theorem", to_string(c.theorem)}, {"gamma", c.gamma}, {"epsilon", c.epsilon},
              {"sound", c.sound}, {"zeta", to_json(c.zeta)}};
    if (c.mu_c) j["mu_c"] = to_json(*c.mu_c);
    if (c.mu_d) j["mu_d"] = to_json(Matrix(*c.mu_d));
    return j;
}

json to_json(const ObserverGains& g) {
    json j = {{"theorem", to_string(g.theorem)}, {"gamma", g.gamma}, {"epsilon", g.epsilon}, {"alpha", g.alpha},
              {"sound", g.sound}, {"X", to_json(g.X)}, {"Yc", to_json(g.Yc)}, {"Yd", to_json(g.Yd)},
              {"Lc", to_json(g.Lc)}, {"Ld", to_json(g.Ld)}};
    if (g.Uc) j["Uc"] = to_json(Matrix(*g.Uc));
    return j;
}

json to_json(const SwitchedGains& g) {
    json modes = json::array();
    for (const auto& m : g.modes) {
        json mj = {{"X", to_json(m.X)}, {"Y", to_json(m.Y)}, {"L", to_json(m.L)}};
        if (m.U) mj["U"] = to_json(Matrix(*m.U));
        modes.push_back(mj);
    }
    json j = {{"theorem", to_string(g.theorem)}, {"gamma", g.gamma}, {"epsilon", g.epsilon}, {"alpha", g.alpha},
              {"sound", g.sound}, {"modes", modes}};
    if (g.U) j["U"] = to_json(Matrix(*g.U));
    return j;
}

}  // namespace posimp::cli
