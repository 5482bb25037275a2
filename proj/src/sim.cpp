#include "posimp/sim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

namespace posimp {

namespace {

constexpr double kOverflow = 1e100;

Vector zeros(Eigen::Index n) { return Vector::Zero(n); }

struct Stage {
    double t;
    double tau;
    int mode;
    int step;
};

// Linear hybrid model behind every run: flow, jump and the two outputs.
struct Model {
    Eigen::Index n = 0;
    double h_c = 1.0;
    int h_d = 0;
    std::function<Vector(double)> phi0;
    std::function<Vector(const Stage&)> wc;  // never empty
    std::function<Vector(int)> wd;           // never empty
    std::function<Vector(const Stage&, const Vector& x, const Vector& xd, const Vector& w)> flow;
    std::function<Vector(int k, int from, int to, const Vector& x, const Vector& xdd, const Vector& w)> jump;
    std::function<Vector(const Stage&, const Vector& x, const Vector& xd, const Vector& w)> zc;  // optional
    std::function<Vector(const Vector& x, const Vector& xdd, const Vector& w)> zd;               // optional
};

struct PlannedStep {
    double t;
    double h;
    std::size_t interval;
    bool jump_after;
};

std::vector<PlannedStep> plan(const DwellSequence& seq, double horizon, double step, int refine) {
    std::vector<PlannedStep> out;
    const double eps = 1e-12 * std::max(1.0, horizon);
    for (std::size_t k = 0; k < seq.size() && seq.t[k] < horizon - eps; ++k) {
        const auto m = refine * static_cast<int>(std::ceil(seq.T[k] / step - 1e-9));
        const double h = seq.T[k] / m;
        for (int i = 0; i < m; ++i) {
            const double t = seq.t[k] + i * h;
            if (t >= horizon - eps) return out;
            const double len = std::min(h, horizon - t);
            const bool last = i == m - 1;
            out.push_back({t, len, k, last && len == h});
        }
    }
    if (seq.end() < horizon - eps) {
        const double span = horizon - seq.end();
        const auto m = refine * static_cast<int>(std::ceil(span / step - 1e-9));
        for (int i = 0; i < m; ++i) out.push_back({seq.end() + i * span / m, span / m, seq.size(), false});
    }
    return out;
}

class History {
  public:
    History(double h_c, std::function<Vector(double)> phi0) : h_c_(h_c), phi0_(std::move(phi0)) {}

    void push(double t, const Vector& x) {
        buf_.emplace_back(t, x);
        const double keep = t - h_c_ - 1e-9 * std::max(1.0, t);
        while (buf_.size() > 2 && buf_[1].first < keep) buf_.pop_front();
    }

    // reads at s >= 0 never precede the buffer except by rounding
    [[nodiscard]] Vector at(double s) const {
        if (s < 0.0 || buf_.empty()) return phi0_(s);
        if (s <= buf_.front().first) return buf_.front().second;
        auto it = std::upper_bound(buf_.begin(), buf_.end(), s,
                                   [](double v, const std::pair<double, Vector>& e) { return v < e.first; });
        const auto& lo = *(it - 1);
        if (it == buf_.end()) return lo.second;
        const double w = (s - lo.first) / (it->first - lo.first);
        return (1.0 - w) * lo.second + w * it->second;
    }

  private:
    double h_c_;
    std::function<Vector(double)> phi0_;
    std::deque<std::pair<double, Vector>> buf_;
};

void check_finite(const Vector& x, double t) {
    if (!x.allFinite()) throw SimulationError("simulation produced NaN at t=" + std::to_string(t), t);
    if (x.size() > 0 && x.cwiseAbs().maxCoeff() > kOverflow)
        throw SimulationError("simulation overflow at t=" + std::to_string(t), t);
}

double l1(const Vector& v) { return v.cwiseAbs().sum(); }

SimulationTrace run(const Model& m, const DwellSequence& seq, double horizon, const StepChoice& sc, int refine = 1) {
    seq.validate();
    if (!(horizon > 0.0)) throw std::invalid_argument("simulation horizon must be positive");
    SimulationTrace tr;
    tr.step = sc.step / refine;
    tr.step_adjusted = sc.adjusted;
    tr.step_note = sc.note;
    const bool switched = !seq.sigma.empty();
    auto mode_of = [&](std::size_t k) {
        if (!switched) return 0;
        return seq.sigma[std::min(k, seq.sigma.size() - 1)];
    };
    auto start_of = [&](std::size_t k) { return k < seq.size() ? seq.t[k] : seq.end(); };

    History hist(m.h_c, m.phi0);
    Vector x = m.phi0(0.0);
    check_finite(x, 0.0);
    hist.push(0.0, x);
    std::vector<Vector> pre_jump{x};  // index k holds x(t_k); slot 0 unused

    auto record = [&](double t, const Vector& state, const Stage& st, const Vector& xd, const Vector& w) {
        tr.t.push_back(t);
        tr.x.push_back(state);
        if (switched) tr.sigma.push_back(st.mode);
        if (m.zc) tr.zc.push_back(m.zc(st, state, xd, w));
    };
    {
        const Stage st{0.0, 0.0, mode_of(0), 0};
        record(0.0, x, st, m.phi0(-m.h_c), m.wc(st));
    }

    const auto steps = plan(seq, horizon, sc.step, refine);
    for (std::size_t i = 0; i < steps.size(); ++i) {
        const auto& p = steps[i];
        const int mode = mode_of(p.interval);
        const double t0 = start_of(p.interval);
        const int idx = static_cast<int>(i);
        const Stage s1{p.t, p.t - t0, mode, idx};
        const Stage s2{p.t + p.h / 2, p.t + p.h / 2 - t0, mode, idx};
        const Stage s4{p.t + p.h, p.t + p.h - t0, mode, idx};
        const Vector w1 = m.wc(s1), w2 = m.wc(s2), w4 = m.wc(s4);
        const Vector d1 = hist.at(s1.t - m.h_c), d2 = hist.at(s2.t - m.h_c), d4 = hist.at(s4.t - m.h_c);
        const Vector k1 = m.flow(s1, x, d1, w1);
        const Vector k2 = m.flow(s2, x + p.h / 2 * k1, d2, w2);
        const Vector k3 = m.flow(s2, x + p.h / 2 * k2, d2, w2);
        const Vector k4 = m.flow(s4, x + p.h * k3, d4, w4);
        const Vector next = x + p.h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
        check_finite(next, s4.t);

        tr.input_l1 += p.h / 6 * (l1(w1) + 4 * l1(w2) + l1(w4));
        if (m.zc) tr.output_l1 += p.h / 2 * (l1(m.zc(s1, x, d1, w1)) + l1(m.zc(s4, next, d4, w4)));

        x = next;
        hist.push(s4.t, x);
        record(s4.t, x, s4, d4, w4);

        if (!p.jump_after) continue;
        const int k = static_cast<int>(p.interval) + 1;
        pre_jump.push_back(x);
        const Vector xdd = k - m.h_d >= 1 ? pre_jump[static_cast<std::size_t>(k - m.h_d)] : m.phi0(0.0);
        const Vector wd = m.wd(k);
        JumpRecord j;
        j.k = k;
        j.t = s4.t;
        j.from = mode;
        j.to = mode_of(p.interval + 1);
        j.before = x;
        x = m.jump(k, j.from, j.to, x, xdd, wd);
        check_finite(x, s4.t);
        j.after = x;
        tr.input_l1 += l1(wd);
        if (m.zd) {
            j.zd = m.zd(j.before, xdd, wd);
            tr.output_l1 += l1(j.zd);
        }
        tr.jumps.push_back(std::move(j));
        hist.push(s4.t, x);
    }
    return tr;
}

// Missing signals read as zero; supplied ones are size-checked on every call.
template <class Arg>
std::function<Vector(Arg)> or_zero(std::function<Vector(Arg)> f, Eigen::Index n, const char* what = "input") {
    if (!f) return [n](Arg) { return zeros(n); };
    return [f = std::move(f), n, what](Arg a) {
        Vector v = f(a);
        if (v.size() != n)
            throw DimensionError(std::string(what) + ": expected " + std::to_string(n) + " entries, got " +
                                 std::to_string(v.size()));
        return v;
    };
}

std::function<Vector(const Stage&)> stage_input(const Inputs& in, Eigen::Index p) {
    if (in.wc_step) return [f = or_zero(in.wc_step, p, "w_c")](const Stage& s) { return f(s.step); };
    auto f = or_zero(in.wc, p, "w_c");
    return [f](const Stage& s) { return f(s.t); };
}

Matrix clamped(const PwlMatrix& L, double tau) {
    return L.eval(std::clamp(tau, 0.0, L.grid().horizon));
}

double min_dwell(const DwellSequence& seq) {
    return seq.T.empty() ? std::numeric_limits<double>::infinity() : *std::min_element(seq.T.begin(), seq.T.end());
}

Vector stack3(const Vector& a, const Vector& b, const Vector& c) {
    Vector v(a.size() + b.size() + c.size());
    v << a, b, c;
    return v;
}

void split3(SimulationTrace& tr, Eigen::Index n) {
    for (std::size_t i = 0; i < tr.x.size(); ++i) {
        const Vector v = tr.x[i];
        tr.x[i] = v.head(n);
        tr.x_plus.push_back(v.segment(n, n));
        tr.x_minus.push_back(v.tail(n));
    }
}

}  // namespace

DwellSequence DwellSequence::from_dwells(const std::vector<double>& dwells, std::vector<int> sigma) {
    DwellSequence s;
    s.T = dwells;
    s.sigma = std::move(sigma);
    double t = 0.0;
    for (double T : dwells) {
        s.t.push_back(t);
        t += T;
    }
    s.validate();
    return s;
}

void DwellSequence::validate() const {
    if (t.size() != T.size()) throw std::invalid_argument("dwell sequence: t and T sizes differ");
    if (!sigma.empty() && sigma.size() != T.size())
        throw std::invalid_argument("dwell sequence: sigma must have one mode per interval");
    for (std::size_t k = 0; k < T.size(); ++k) {
        if (!(T[k] > 0.0)) throw std::invalid_argument("dwell sequence: T_" + std::to_string(k) + " is not positive");
        const double expect = k == 0 ? 0.0 : t[k - 1] + T[k - 1];
        if (std::abs(t[k] - expect) > 1e-9 * std::max(1.0, expect))
            throw std::invalid_argument("dwell sequence: t_" + std::to_string(k) + " != t_" + std::to_string(k - 1) +
                                        " + T_" + std::to_string(k - 1));
    }
}

DwellSequence gen_sequence(const DwellTimeConstraint& dt, double horizon, std::uint64_t seed, int modes) {
    dt.validate();
    if (modes < 1) throw std::invalid_argument("gen_sequence: modes must be positive");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto other_mode = [&](int prev) {
        if (modes == 1) return 0;
        const int m = static_cast<int>(unit(rng) * (modes - 1)) % (modes - 1);
        return m >= prev ? m + 1 : m;
    };

    std::vector<double> dwells;
    std::vector<int> sigma;
    if (!dt.is_periodic()) {
        const double lo = dt.is_range() ? dt.t_min : dt.t_bar;
        const double hi = dt.is_range() ? dt.t_max : 3.0 * dt.t_bar;
        double t = 0.0;
        int mode = static_cast<int>(unit(rng) * modes) % modes;
        while (t < horizon) {
            dwells.push_back(lo + (hi - lo) * unit(rng));
            sigma.push_back(mode);
            mode = other_mode(mode);
            t += dwells.back();
        }
    } else {
        const int q = dt.q;
        const double sum = dt.h_c / dt.alpha;
        const double lo = dt.is_range() ? dt.t_min : dt.t_bar;
        const double hi = dt.is_range() ? dt.t_max : sum;
        if (q * lo > sum * (1 + 1e-12) || q * hi < sum * (1 - 1e-12)) {
            std::ostringstream msg;
            msg << "gen_sequence: no period of " << q << " dwells in [" << lo << ", " << hi << "] sums to h_c/alpha = "
                << sum;
            throw std::invalid_argument(msg.str());
        }
        std::vector<double> beta(static_cast<std::size_t>(q));
        if (dt.is_range()) {
            std::vector<double> u(beta.size());
            for (auto& v : u) v = lo + (hi - lo) * unit(rng);
            auto total = [&](double shift) {
                double s = 0.0;
                for (std::size_t i = 0; i < u.size(); ++i) s += (beta[i] = std::clamp(u[i] + shift, lo, hi));
                return s;
            };
            double a = lo - hi, b = hi - lo;
            for (int it = 0; it < 200; ++it) {
                const double mid = 0.5 * (a + b);
                (total(mid) < sum ? a : b) = mid;
            }
            double residual = sum - total(0.5 * (a + b));
            for (auto& v : beta) {
                const double moved = std::clamp(v + residual, lo, hi) - v;
                v += moved;
                residual -= moved;
            }
        } else {
            std::exponential_distribution<double> ex(1.0);
            double s = 0.0;
            for (auto& v : beta) s += (v = ex(rng));
            const double slack = sum - q * lo;
            double acc = 0.0;
            for (std::size_t i = 0; i + 1 < beta.size(); ++i) acc += (beta[i] = lo + slack * beta[i] / s);
            beta.back() = sum - acc;
        }
        std::vector<int> pattern(beta.size());
        pattern[0] = static_cast<int>(unit(rng) * modes) % modes;
        for (std::size_t i = 1; i < pattern.size(); ++i) pattern[i] = other_mode(pattern[i - 1]);
        double t = 0.0;
        while (t < horizon) {
            for (std::size_t i = 0; i < beta.size(); ++i) {
                dwells.push_back(beta[i]);
                sigma.push_back(pattern[i]);
                t += beta[i];
            }
        }
    }
    if (modes == 1) sigma.clear();
    return DwellSequence::from_dwells(dwells, std::move(sigma));
}

StepChoice choose_step(double requested, double h_c, const DwellSequence& seq) {
    if (!(requested > 0.0)) throw std::invalid_argument("simulation step must be positive");
    StepChoice c{requested, false, ""};
    std::ostringstream note;
    const double cap = min_dwell(seq) / 4.0;
    if (c.step > cap) {
        note << "step reduced from " << c.step << " to " << cap << " (min dwell / 4)";
        c.step = cap;
        c.adjusted = true;
    }
    const double m = std::ceil(h_c / c.step - 1e-9);
    const double divided = h_c / m;
    if (std::abs(divided - c.step) > 1e-12 * c.step) {
        if (c.adjusted) note << "; ";
        note << "step reduced from " << c.step << " to " << divided << " to divide h_c = " << h_c;
        c.step = divided;
        c.adjusted = true;
    }
    c.note = note.str();
    return c;
}

std::vector<std::pair<double, double>> step_grid(const DwellSequence& seq, double horizon, double step) {
    std::vector<std::pair<double, double>> out;
    for (const auto& p : plan(seq, horizon, step, 1)) out.emplace_back(p.t, p.h);
    return out;
}

double SimulationTrace::min_sample() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& v : x)
        if (v.size() > 0) m = std::min(m, v.minCoeff());
    const auto n = x.empty() ? 0 : x.front().size();
    for (const auto& j : jumps)
        if (n > 0) m = std::min(m, j.after.head(n).minCoeff());
    return m;
}

void SimulationTrace::write_csv(std::ostream& os) const {
    const auto n = x.empty() ? 0 : x.front().size();
    os << "t";
    for (Eigen::Index i = 1; i <= n; ++i) os << ",x_" << i;
    if (!x_minus.empty()) {
        for (Eigen::Index i = 1; i <= n; ++i) os << ",xminus_" << i;
        for (Eigen::Index i = 1; i <= n; ++i) os << ",xplus_" << i;
    }
    if (!sigma.empty()) os << ",sigma";
    os << '\n' << std::setprecision(12);
    for (std::size_t k = 0; k < t.size(); ++k) {
        os << t[k];
        for (Eigen::Index i = 0; i < n; ++i) os << ',' << x[k](i);
        if (!x_minus.empty()) {
            for (Eigen::Index i = 0; i < n; ++i) os << ',' << x_minus[k](i);
            for (Eigen::Index i = 0; i < n; ++i) os << ',' << x_plus[k](i);
        }
        if (!sigma.empty()) os << ',' << sigma[k] + 1;
        os << '\n';
    }
}

namespace {

Model delay_model(const DelaySystem& sys, const Inputs& in) {
    sys.validate();
    Model m;
    m.n = sys.n();
    m.h_c = sys.h_c;
    m.h_d = sys.h_d;
    m.phi0 = [sys](double s) { return sys.history(s); };
    m.wc = stage_input(in, sys.pc());
    m.wd = or_zero(in.wd, sys.pd(), "w_d");
    m.flow = [sys](const Stage& st, const Vector& x, const Vector& xd, const Vector& w) -> Vector {
        return sys.A(st.tau) * x + sys.Gc(st.tau) * xd + sys.Ec(st.tau) * w;
    };
    m.jump = [sys](int, int, int, const Vector& x, const Vector& xdd, const Vector& w) -> Vector {
        return sys.J * x + sys.Gd * xdd + sys.Ed * w;
    };
    m.zc = [sys](const Stage&, const Vector& x, const Vector& xd, const Vector& w) -> Vector {
        return sys.Cc * x + sys.Hc * xd + sys.Fc * w;
    };
    m.zd = [sys](const Vector& x, const Vector& xdd, const Vector& w) -> Vector {
        return sys.Cd * x + sys.Hd * xdd + sys.Fd * w;
    };
    return m;
}

Model switched_model(const SwitchedDelaySystem& sys, const Inputs& in) {
    sys.validate();
    Model m;
    m.n = sys.n();
    m.h_c = sys.h_c;
    const auto n = m.n;
    m.phi0 = or_zero(sys.phi0, n, "phi0");
    m.wc = stage_input(in, sys.modes.front().E.cols());
    m.wd = [](int) { return Vector(); };
    m.flow = [sys](const Stage& st, const Vector& x, const Vector& xd, const Vector& w) -> Vector {
        const auto& md = sys.modes[static_cast<std::size_t>(st.mode)];
        return md.A(st.tau) * x + md.G(st.tau) * xd + md.E(st.tau) * w;
    };
    m.jump = [](int, int, int, const Vector& x, const Vector&, const Vector&) -> Vector { return x; };
    m.zc = [sys](const Stage& st, const Vector& x, const Vector& xd, const Vector& w) -> Vector {
        const auto& md = sys.modes[static_cast<std::size_t>(st.mode)];
        return md.C * x + md.H * xd + md.F * w;
    };
    return m;
}

void check_modes(const DwellSequence& seq, std::size_t modes) {
    if (seq.sigma.empty()) throw std::invalid_argument("switched simulation needs a mode sequence");
    for (int s : seq.sigma)
        if (s < 0 || static_cast<std::size_t>(s) >= modes)
            throw std::invalid_argument("mode sequence refers to mode " + std::to_string(s + 1));
}

}  // namespace

SimulationTrace simulate(const DelaySystem& sys, const DwellSequence& seq, const Inputs& in, double horizon,
                         double step) {
    return run(delay_model(sys, in), seq, horizon, choose_step(step, sys.h_c, seq));
}

DelaySystem static_realization(const LftPositiveSystem& sys, double delta_c, double delta_d) {
    sys.validate();
    auto gain = [](double delta, const Matrix& HD) -> Matrix {
        const auto k = HD.rows();
        const Matrix I = Matrix::Identity(k, k);
        Eigen::FullPivLU<Matrix> lu(I - delta * HD);
        if (!lu.isInvertible()) throw std::invalid_argument("static realization: I - delta H is singular");
        return delta * lu.inverse();
    };
    DelaySystem d;
    const Matrix Kc = gain(delta_c, sys.HcD), Kd = gain(delta_d, sys.HdD);
    d.A = sys.A + sys.Gc * Matrix(Kc * sys.CcD);
    d.Ec = sys.Ec + sys.Gc * Matrix(Kc * sys.FcD);
    d.Cc = sys.Cc + sys.Hc * Kc * sys.CcD;
    d.Fc = sys.Fc + sys.Hc * Kc * sys.FcD;
    d.J = sys.J + sys.Gd * Kd * sys.CdD;
    d.Ed = sys.Ed + sys.Gd * Kd * sys.FdD;
    d.Cd = sys.Cd + sys.Hd * Kd * sys.CdD;
    d.Fd = sys.Fd + sys.Hd * Kd * sys.FdD;
    d.complete();
    return d;
}

void SwitchedDelaySystem::validate() const {
    if (modes.empty()) throw std::invalid_argument("switched system has no modes");
    const auto n = modes.front().A.rows();
    const auto p = modes.front().E.cols();
    const auto q = modes.front().C.rows();
    for (std::size_t i = 0; i < modes.size(); ++i) {
        const auto& m = modes[i];
        auto need = [&](const char* name, Eigen::Index r, Eigen::Index c, Eigen::Index er, Eigen::Index ec) {
            if (r != er || c != ec)
                throw DimensionError("mode " + std::to_string(i + 1) + " block " + name + ": expected " +
                                     std::to_string(er) + "x" + std::to_string(ec) + ", got " + std::to_string(r) +
                                     "x" + std::to_string(c));
        };
        need("A", m.A.rows(), m.A.cols(), n, n);
        need("G", m.G.rows(), m.G.cols(), n, n);
        need("E", m.E.rows(), m.E.cols(), n, p);
        need("C", m.C.rows(), m.C.cols(), q, n);
        need("H", m.H.rows(), m.H.cols(), q, n);
        need("F", m.F.rows(), m.F.cols(), q, p);
    }
    if (!(h_c > 0.0)) throw std::invalid_argument("continuous delay h_c must be positive");
}

SwitchedDelaySystem switched_error_system(const SwitchedPlant& plant, const SwitchedGains& gains) {
    plant.validate();
    if (gains.modes.size() != plant.modes.size()) throw DimensionError("gains and plant differ in mode count");
    SwitchedDelaySystem e;
    e.h_c = plant.h_c;
    for (std::size_t i = 0; i < plant.modes.size(); ++i) {
        const auto& pm = plant.modes[i];
        const auto& L = gains.modes[i].L;
        std::vector<Matrix> a, g, ee;
        for (const auto& l : L.nodes()) {
            a.push_back(pm.A - l * pm.C);
            g.push_back(pm.G - l * pm.H);
            ee.push_back(pm.E - l * pm.F);
        }
        const double hz = L.grid().horizon;
        e.modes.push_back({TimerMatrixFunction::tabulated(hz, a), TimerMatrixFunction::tabulated(hz, g),
                           TimerMatrixFunction::tabulated(hz, ee), plant.M,
                           Matrix::Zero(plant.M.rows(), plant.n()),
                           Matrix::Zero(plant.M.rows(), pm.E.cols())});
    }
    return e;
}

SimulationTrace simulate(const SwitchedDelaySystem& sys, const DwellSequence& seq, const Inputs& in, double horizon,
                         double step) {
    check_modes(seq, sys.modes.size());
    return run(switched_model(sys, in), seq, horizon, choose_step(step, sys.h_c, seq));
}

SimulationTrace simulate_observer(const ObservedPlant& plant, const ObserverGains& gains, const DwellSequence& seq,
                                  const ObserverRun& r, double horizon, double step) {
    plant.validate();
    const auto& s = plant.sys;
    const auto n = s.n();
    const auto wc = or_zero(r.wc, s.pc(), "w_c");
    const auto wd = or_zero(r.wd, s.pd(), "w_d");
    const auto wc_hi = plant.wc_hi ? plant.wc_hi : wc, wc_lo = plant.wc_lo ? plant.wc_lo : wc;
    const auto wd_hi = plant.wd_hi ? plant.wd_hi : wd, wd_lo = plant.wd_lo ? plant.wd_lo : wd;
    const auto phi = [s](double t) { return s.history(t); };
    const auto phi_hi = or_zero(r.phi0_plus, n, "phi0_plus"), phi_lo = or_zero(r.phi0_minus, n, "phi0_minus");
    const PwlMatrix Lc = gains.Lc;
    const Matrix Ld = gains.Ld;

    Model m;
    m.n = 3 * n;
    m.h_c = s.h_c;
    m.h_d = s.h_d;
    m.phi0 = [=](double t) { return stack3(phi(t), phi_hi(t), phi_lo(t)); };
    m.wc = [](const Stage&) { return Vector(); };
    m.wd = [](int) { return Vector(); };
    m.flow = [=](const Stage& st, const Vector& v, const Vector& vd, const Vector&) -> Vector {
        const Matrix A = s.A(st.tau), G = s.Gc(st.tau), E = s.Ec(st.tau), L = clamped(Lc, st.tau);
        const Vector w = wc(st.t);
        const Vector x = v.head(n), xd = vd.head(n);
        const Vector y = s.Cc * x + s.Hc * xd + s.Fc * w;
        auto est = [&](const Vector& e, const Vector& ed, const Vector& we) -> Vector {
            return A * e + G * ed + E * we + L * (y - s.Cc * e - s.Hc * ed - s.Fc * we);
        };
        return stack3(A * x + G * xd + E * w, est(v.segment(n, n), vd.segment(n, n), wc_hi(st.t)),
                      est(v.tail(n), vd.tail(n), wc_lo(st.t)));
    };
    m.jump = [=](int k, int, int, const Vector& v, const Vector& vdd, const Vector&) -> Vector {
        const Vector w = wd(k);
        const Vector x = v.head(n), xdd = vdd.head(n);
        const Vector y = s.Cd * x + s.Hd * xdd + s.Fd * w;
        auto est = [&](const Vector& e, const Vector& edd, const Vector& we) -> Vector {
            return s.J * e + s.Gd * edd + s.Ed * we + Ld * (y - s.Cd * e - s.Hd * edd - s.Fd * we);
        };
        return stack3(s.J * x + s.Gd * xdd + s.Ed * w, est(v.segment(n, n), vdd.segment(n, n), wd_hi(k)),
                      est(v.tail(n), vdd.tail(n), wd_lo(k)));
    };
    auto tr = run(m, seq, horizon, choose_step(step, s.h_c, seq));
    split3(tr, n);
    return tr;
}

SimulationTrace simulate_observer(const SwitchedPlant& plant, const SwitchedGains& gains, const DwellSequence& seq,
                                  const ObserverRun& r, double horizon, double step) {
    plant.validate();
    check_modes(seq, plant.modes.size());
    if (gains.modes.size() != plant.modes.size()) throw DimensionError("gains and plant differ in mode count");
    const auto n = plant.n();
    const auto p = plant.modes.front().E.cols();
    const auto wc = or_zero(r.wc, p, "w");
    const auto w_hi = plant.w_hi ? plant.w_hi : wc, w_lo = plant.w_lo ? plant.w_lo : wc;
    const auto phi = or_zero(plant.phi0, n, "phi0");
    const auto phi_hi = or_zero(r.phi0_plus, n, "phi0_plus"), phi_lo = or_zero(r.phi0_minus, n, "phi0_minus");
    std::vector<PwlMatrix> L;
    for (const auto& g : gains.modes) L.push_back(g.L);
    const auto modes = plant.modes;

    Model m;
    m.n = 3 * n;
    m.h_c = plant.h_c;
    m.phi0 = [=](double t) { return stack3(phi(t), phi_hi(t), phi_lo(t)); };
    m.wc = [](const Stage&) { return Vector(); };
    m.wd = [](int) { return Vector(); };
    m.flow = [=](const Stage& st, const Vector& v, const Vector& vd, const Vector&) -> Vector {
        const auto& md = modes[static_cast<std::size_t>(st.mode)];
        const Matrix Li = clamped(L[static_cast<std::size_t>(st.mode)], st.tau);
        const Vector w = wc(st.t);
        const Vector x = v.head(n), xd = vd.head(n);
        const Vector y = md.C * x + md.H * xd + md.F * w;
        auto est = [&](const Vector& e, const Vector& ed, const Vector& we) -> Vector {
            return md.A * e + md.G * ed + md.E * we + Li * (y - md.C * e - md.H * ed - md.F * we);
        };
        return stack3(md.A * x + md.G * xd + md.E * w, est(v.segment(n, n), vd.segment(n, n), w_hi(st.t)),
                      est(v.tail(n), vd.tail(n), w_lo(st.t)));
    };
    m.jump = [](int, int, int, const Vector& v, const Vector&, const Vector&) -> Vector { return v; };
    auto tr = run(m, seq, horizon, choose_step(step, plant.h_c, seq));
    split3(tr, n);
    return tr;
}

EnclosureResult check_enclosure(const SimulationTrace& trace, double tol) {
    EnclosureResult r;
    r.min_margin = std::numeric_limits<double>::infinity();
    if (trace.x_minus.size() != trace.x.size() || trace.x_plus.size() != trace.x.size())
        throw std::invalid_argument("check_enclosure: trace has no observer states");
    for (std::size_t k = 0; k < trace.x.size(); ++k) {
        const Vector up = trace.x_plus[k] - trace.x[k];
        const Vector lo = trace.x[k] - trace.x_minus[k];
        for (Eigen::Index i = 0; i < up.size(); ++i) {
            for (const bool upper : {true, false}) {
                const double margin = upper ? up(i) : lo(i);
                r.min_margin = std::min(r.min_margin, margin);
                if (r.holds && margin < -tol) {
                    r.holds = false;
                    r.t = trace.t[k];
                    r.component = static_cast<int>(i);
                    r.upper = upper;
                    r.margin = margin;
                }
            }
        }
    }
    if (trace.x.empty()) r.min_margin = 0.0;
    return r;
}

namespace {

// One random trial: unit-norm input on a random initial window.
template <class Sim>
GainEstimate estimate(const DwellTimeConstraint& dt, const GainEstimateOptions& opt, double h_c, Eigen::Index pc,
                      Eigen::Index pd, int modes, Sim simulate_with) {
    dt.validate();
    if (opt.trials < 1) throw std::invalid_argument("empirical_gain: trials must be positive");
    std::mt19937_64 master(opt.seed);
    const double horizon = opt.horizon_factor * dt.horizon();
    GainEstimate est;
    for (int trial = 0; trial < opt.trials; ++trial) {
        std::mt19937_64 rng(master());
        std::uniform_real_distribution<double> entry(opt.nonnegative ? 0.0 : -1.0, 1.0), unit(0.0, 1.0);
        const auto seq = gen_sequence(dt, horizon, rng(), modes);
        const auto sc = choose_step(opt.step, h_c, seq);
        const auto grid = step_grid(seq, horizon, sc.step);
        const double support = std::max(unit(rng) * horizon / 2, grid.front().second);

        std::vector<Vector> wc;
        double norm = 0.0;
        for (const auto& [t, h] : grid) {
            Vector v = Vector::Zero(pc);
            if (t < support)
                for (Eigen::Index j = 0; j < pc; ++j) v(j) = entry(rng);
            norm += h * l1(v);
            wc.push_back(v);
        }
        std::vector<Vector> wd{Vector::Zero(pd)};
        for (std::size_t k = 1; k < seq.size() + 1; ++k) {
            Vector v = Vector::Zero(pd);
            if (seq.t[k - 1] + seq.T[k - 1] < support)
                for (Eigen::Index j = 0; j < pd; ++j) v(j) = entry(rng);
            norm += l1(v);
            wd.push_back(v);
        }
        if (norm == 0.0) {
            ++est.skipped;
            continue;
        }
        for (auto& v : wc) v /= norm;
        for (auto& v : wd) v /= norm;
        Inputs in;
        in.wc_step = [&wc](int i) { return wc[static_cast<std::size_t>(i)]; };
        in.wd = [&wd, pd](int k) {
            return static_cast<std::size_t>(k) < wd.size() ? wd[static_cast<std::size_t>(k)] : Vector(Vector::Zero(pd));
        };
        const auto tr = simulate_with(seq, in, horizon, sc.step);
        if (tr.input_l1 <= 0.0) {
            ++est.skipped;
            continue;
        }
        est.gain = std::max(est.gain, tr.output_l1 / tr.input_l1);
        ++est.trials;
    }
    return est;
}

}  // namespace

GainEstimate empirical_gain(const DelaySystem& sys, const DwellTimeConstraint& dt, const GainEstimateOptions& opt) {
    DelaySystem zero = sys;
    zero.phi0 = nullptr;
    return estimate(dt, opt, sys.h_c, sys.pc(), sys.pd(), 1,
                    [&](const DwellSequence& seq, const Inputs& in, double horizon, double step) {
                        return simulate(zero, seq, in, horizon, step);
                    });
}

GainEstimate empirical_gain(const SwitchedDelaySystem& sys, const DwellTimeConstraint& dt,
                            const GainEstimateOptions& opt) {
    SwitchedDelaySystem zero = sys;
    zero.phi0 = nullptr;
    return estimate(dt, opt, sys.h_c, sys.modes.front().E.cols(), 0, static_cast<int>(sys.modes.size()),
                    [&](const DwellSequence& seq, const Inputs& in, double horizon, double step) {
                        return simulate(zero, seq, in, horizon, step);
                    });
}

double step_halving_ratio(const DelaySystem& sys, const DwellSequence& seq, const Inputs& in, double horizon,
                          double step) {
    const auto m = delay_model(sys, in);
    const auto sc = choose_step(step, sys.h_c, seq);
    const Vector a = run(m, seq, horizon, sc, 1).x.back();
    const Vector b = run(m, seq, horizon, sc, 2).x.back();
    const Vector c = run(m, seq, horizon, sc, 4).x.back();
    return (a - b).norm() / (b - c).norm();
}

}  // namespace posimp
