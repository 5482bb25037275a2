#include "posimp/sim.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace posimp;
using posimp::testing::ex2;
using posimp::testing::ex3;
using posimp::testing::foschini;
using posimp::testing::uncimp;

namespace {

DelaySystem scalar(double a, double j) {
    DelaySystem s;
    s.A = Matrix(Matrix::Constant(1, 1, a));
    s.J = Matrix::Constant(1, 1, j);
    s.complete();
    return s;
}

std::function<Vector(double)> constant_history(Vector v) {
    return [v](double) { return v; };
}

// w_d(k) ~ U(-1, 1), reproducible per k
std::function<Vector(int)> uniform_wd(Eigen::Index p, std::uint64_t seed) {
    return [p, seed](int k) {
        std::mt19937_64 rng(seed + static_cast<std::uint64_t>(k));
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        Vector v(p);
        for (Eigen::Index i = 0; i < p; ++i) v(i) = u(rng);
        return v;
    };
}

std::function<Vector(double)> sine(Eigen::Index p) {
    return [p](double t) { return Vector::Constant(p, 4.0 * std::sin(t)); };
}

ObservedPlant bounded(ObservedPlant p) {
    const auto pc = p.sys.pc(), pd = p.sys.pd();
    p.wc_lo = [pc](double) { return Vector::Constant(pc, -4.0); };
    p.wc_hi = [pc](double) { return Vector::Constant(pc, 4.0); };
    p.wd_lo = [pd](int) { return Vector::Constant(pd, -1.0); };
    p.wd_hi = [pd](int) { return Vector::Constant(pd, 1.0); };
    return p;
}

SwitchedPlant bounded(SwitchedPlant p) {
    const auto pw = p.modes.front().E.cols();
    p.w_lo = [pw](double) { return Vector::Constant(pw, -4.0); };
    p.w_hi = [pw](double) { return Vector::Constant(pw, 4.0); };
    return p;
}

ObserverRun paper_disturbances(Eigen::Index n, Eigen::Index pc, Eigen::Index pd) {
    ObserverRun r;
    r.wc = sine(pc);
    r.wd = uniform_wd(pd, 7);
    r.phi0_minus = constant_history(Vector::Constant(n, -1.0));
    r.phi0_plus = constant_history(Vector::Constant(n, 3.0));
    return r;
}

}  // namespace

TEST_CASE("exponential decay without jumps") {
    auto s = scalar(-1.0, 1.0);
    s.phi0 = constant_history(Vector::Constant(1, 1.0));
    const auto tr = simulate(s, DwellSequence{}, {}, 1.0, 0.01);
    CHECK(tr.t.back() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(tr.x.back()(0) - std::exp(-1.0)) <= 1e-6);
    CHECK(tr.jumps.empty());
    for (std::size_t i = 1; i < tr.t.size(); ++i) CHECK(tr.t[i] > tr.t[i - 1]);
}

TEST_CASE("pure jumps double the state exactly") {
    DelaySystem s;
    s.A = Matrix(Matrix::Zero(2, 2));
    s.J = 2.0 * Matrix::Identity(2, 2);
    s.complete();
    Vector x0(2);
    x0 << 1.0, 3.0;
    s.phi0 = constant_history(x0);
    const auto seq = DwellSequence::from_dwells(std::vector<double>(6, 0.7));
    const auto tr = simulate(s, seq, {}, seq.end(), 0.1);
    REQUIRE(tr.jumps.size() == 6);
    for (const auto& j : tr.jumps) {
        CHECK(j.after == std::pow(2.0, j.k) * x0);
        CHECK(j.t == doctest::Approx(seq.t[static_cast<std::size_t>(j.k - 1)] + 0.7));
    }
}

TEST_CASE("continuous delay by the method of steps") {
    // xdot = -x(t - 1), x = 1 on [-1, 0]: x = 1 - t on [0, 1], x(2) = -1/2
    DelaySystem s = scalar(0.0, 1.0);
    s.Gc = Matrix(Matrix::Constant(1, 1, -1.0));
    s.phi0 = constant_history(Vector::Constant(1, 1.0));
    s.complete();
    const auto tr = simulate(s, DwellSequence{}, {}, 2.0, 0.05);
    CHECK(std::abs(tr.x[20](0)) <= 1e-12);
    CHECK(tr.x.back()(0) == doctest::Approx(-0.5).epsilon(1e-12));
}

TEST_CASE("discrete delay reads the buffered pre-jump states") {
    DelaySystem s = scalar(0.0, 1.0);
    s.Gd = Matrix::Constant(1, 1, 1.0);
    s.h_d = 2;
    s.phi0 = constant_history(Vector::Constant(1, 1.0));
    s.complete();
    const auto seq = DwellSequence::from_dwells(std::vector<double>(4, 1.0));
    const auto tr = simulate(s, seq, {}, seq.end(), 0.25);
    REQUIRE(tr.jumps.size() == 4);
    // x+ = x(t_k) + x(t_{k-2}), phi0(0) for k <= 2
    CHECK(tr.jumps[0].after(0) == 2.0);
    CHECK(tr.jumps[1].after(0) == 3.0);
    CHECK(tr.jumps[2].after(0) == 4.0);
    CHECK(tr.jumps[3].after(0) == 6.0);
}

TEST_CASE("step choice") {
    const auto seq = DwellSequence::from_dwells({0.3, 0.5});
    const auto c = choose_step(0.2, 1.0, seq);
    CHECK(c.adjusted);
    CHECK(c.step <= 0.075 + 1e-15);
    CHECK(std::abs(1.0 / c.step - std::round(1.0 / c.step)) <= 1e-9);
    CHECK_FALSE(c.note.empty());
    CHECK_FALSE(choose_step(0.01, 1.0, seq).adjusted);
    CHECK_THROWS_AS((void)choose_step(0.0, 1.0, seq), std::invalid_argument);
}

TEST_CASE("dwell sequence generation") {
    const auto range = DwellTimeConstraint::range(0.3, 0.5);
    const auto a = gen_sequence(range, 20.0, 11);
    const auto b = gen_sequence(range, 20.0, 11);
    CHECK(a.T == b.T);
    CHECK(a.end() >= 20.0);
    for (double T : a.T) CHECK((T >= 0.3 && T <= 0.5));
    CHECK(gen_sequence(range, 20.0, 12).T != a.T);

    const auto m = gen_sequence(DwellTimeConstraint::minimum(1.0), 30.0, 3);
    for (double T : m.T) CHECK((T >= 1.0 && T <= 3.0));

    const auto one = gen_sequence(DwellTimeConstraint::periodic_minimum(1.0, 1, 5, 5.0), 10.0, 1);
    for (double T : one.T) CHECK(T == doctest::Approx(1.0).epsilon(1e-12));

    const auto pr = DwellTimeConstraint::periodic_range(0.3, 0.5, 5, 1, 2.0);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto p = gen_sequence(pr, 10.0, seed);
        const std::vector<double> period(p.T.begin(), p.T.begin() + 5);
        double sum = 0.0;
        for (double T : period) sum += T;
        CHECK(sum == doctest::Approx(2.0).epsilon(1e-12));
        CHECK(validate_periodic_sequence(period, range, 2.0).valid);
        CHECK(validate_periodic_sequence(p.T, range, 2.0).valid);
    }
    const auto pm = DwellTimeConstraint::periodic_minimum(0.4, 3, 1, 2.0);
    for (std::uint64_t seed = 0; seed < 10; ++seed)
        CHECK(validate_periodic_sequence(gen_sequence(pm, 10.0, seed).T, DwellTimeConstraint::minimum(0.4), 2.0).valid);

    CHECK_THROWS_AS((void)gen_sequence(DwellTimeConstraint::periodic_range(0.3, 0.5, 5, 1, 1.0), 5.0, 1),
                    std::invalid_argument);

    const auto sw = gen_sequence(DwellTimeConstraint::minimum(1.0), 30.0, 5, 3);
    REQUIRE(sw.sigma.size() == sw.T.size());
    for (std::size_t k = 1; k < sw.sigma.size(); ++k) CHECK(sw.sigma[k] != sw.sigma[k - 1]);
    const auto swp = gen_sequence(DwellTimeConstraint::periodic_minimum(1.0, 2, 1, 3.0), 30.0, 5, 2);
    for (std::size_t k = 2; k < swp.sigma.size(); ++k) {
        CHECK(swp.sigma[k] == swp.sigma[k - 2]);
        CHECK(swp.T[k] == swp.T[k - 2]);
    }
}

TEST_CASE("overflow is reported with a time stamp") {
    auto s = scalar(800.0, 1.0);
    s.phi0 = constant_history(Vector::Constant(1, 1.0));
    try {
        (void)simulate(s, DwellSequence{}, {}, 1.0, 0.001);
        FAIL("no error");
    } catch (const SimulationError& e) {
        CHECK(e.time > 0.0);
        CHECK(e.time < 1.0);
    }
}

TEST_CASE("RK4 step halving on a smooth jumping fixture") {
    DelaySystem s;
    Matrix A(2, 2), J(2, 2);
    A << -1, 0.5, 0.3, -0.8;
    J << 1.2, 0.1, 0.2, 0.9;
    s.A = TimerMatrixFunction(std::vector<Matrix>{A, Matrix(0.2 * Matrix::Identity(2, 2))});
    s.J = J;
    s.Ec = Matrix(Matrix::Constant(2, 1, 1.0));
    s.complete();
    s.phi0 = constant_history(Vector::Constant(2, 1.0));
    Inputs in;
    in.wc = [](double t) { return Vector::Constant(1, std::cos(3 * t)); };
    const auto seq = DwellSequence::from_dwells({0.7, 1.3, 0.9, 1.1});
    const double ratio = step_halving_ratio(s, seq, in, seq.end(), 0.1);
    CHECK(ratio >= 8.0);
    CHECK(ratio <= 24.0);
}

TEST_CASE("positive systems keep nonnegative samples") {
    const auto s = static_realization(uncimp(), 1.0, 1.0);
    auto run = s;
    run.phi0 = constant_history(Vector::Constant(2, 1.0));
    Inputs in;
    in.wc = [](double t) { return Vector::Constant(1, 1.0 + std::sin(t)); };
    const auto seq = gen_sequence(DwellTimeConstraint::minimum(2.0), 40.0, 4);
    CHECK(simulate(run, seq, in, 40.0, 0.01).min_sample() >= -1e-9);
}

TEST_CASE("static realization of the uncertainty") {
    const auto s = static_realization(uncimp(), 1.0, 0.0);
    Matrix A(2, 2);
    A << -1, 1, 1, -3;
    CHECK(s.A(0.0).isApprox(A));
    CHECK(static_realization(uncimp(), 0.0, 0.0).A(0.0).isApprox(uncimp().A(0.0)));
}

TEST_CASE("empirical gain of static maps") {
    DelaySystem s = scalar(-1.0, 0.0);
    s.Ec = Matrix(Matrix::Zero(1, 1));
    s.Fc = Matrix::Constant(1, 1, 0.5);
    s.Ed = Matrix::Zero(1, 1);
    s.Fd = Matrix::Constant(1, 1, 0.5);
    s.Cc = Matrix::Zero(1, 1);
    s.Cd = Matrix::Zero(1, 1);
    s.complete();
    GainEstimateOptions o;
    o.trials = 8;
    const auto g = empirical_gain(s, DwellTimeConstraint::range(0.5, 1.0), o);
    CHECK(g.gain == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(g.trials == 8);

    s.Fc = Matrix::Zero(1, 1);
    s.Fd = Matrix::Zero(1, 1);
    CHECK(empirical_gain(s, DwellTimeConstraint::range(0.5, 1.0), o).gain == 0.0);
}

TEST_CASE("empirical gain stays below certified gains") {
    GainEstimateOptions o;
    o.trials = 16;
    for (bool nonneg : {false, true}) {
        o.nonnegative = nonneg;
        const auto s = uncimp();
        const auto dt = DwellTimeConstraint::minimum(2.0);
        const auto c = certify_min(s, dt, ScalingStructure::constant());
        REQUIRE(c.feasible());
        for (double delta : {0.0, 0.5, 1.0}) CHECK(empirical_gain(static_realization(s, delta, delta), dt, o).gain <= c->gamma + 1e-6);

        const auto p = ex2();
        const auto g = synthesize_range(p, DwellTimeConstraint::range(0.3, 0.5), DelayScaling::Constant);
        REQUIRE(g.feasible());
        const auto e = closed_error_system(p, *g);
        const double est = empirical_gain(e, DwellTimeConstraint::range(0.3, 0.5), o).gain;
        CHECK(est > 0.0);
        CHECK(est <= g->gamma + 1e-6);
    }
}

TEST_CASE("ex2 observer encloses the state") {
    const auto p = bounded(ex2());
    const auto g = synthesize_range(p, DwellTimeConstraint::range(0.3, 0.5), DelayScaling::Constant);
    REQUIRE(g.feasible());
    const auto seq = gen_sequence(DwellTimeConstraint::range(0.3, 0.5), 100.0, 21);
    auto plant = p;
    plant.sys.phi0 = constant_history(Vector::Constant(2, 1.0));
    const auto tr = simulate_observer(plant, *g, seq, paper_disturbances(2, 1, 1), 100.0, 0.01);
    const auto r = check_enclosure(tr);
    CHECK(r.holds);
    CHECK(r.min_margin >= -1e-9);
    CHECK(tr.t.back() == doctest::Approx(100.0));

    std::ostringstream csv;
    tr.write_csv(csv);
    CHECK(csv.str().rfind("t,x_1,x_2,xminus_1,xminus_2,xplus_1,xplus_2\n", 0) == 0);
}

TEST_CASE("equal data and no disturbance give zero margins") {
    const auto p = ex2();
    const auto g = synthesize_range(p, DwellTimeConstraint::range(0.3, 0.5), DelayScaling::UnconstrainedPeriodic);
    REQUIRE(g.feasible());
    auto plant = p;
    const auto phi = constant_history(Vector::Constant(2, 1.0));
    plant.sys.phi0 = phi;
    ObserverRun r;
    r.phi0_minus = phi;
    r.phi0_plus = phi;
    const auto seq = gen_sequence(DwellTimeConstraint::range(0.3, 0.5), 10.0, 2);
    const auto e = check_enclosure(simulate_observer(plant, *g, seq, r, 10.0, 0.01));
    CHECK(e.holds);
    CHECK(std::abs(e.min_margin) <= 1e-12);
}

TEST_CASE("a gain that breaks error positivity loses the enclosure") {
    const auto p = bounded(ex2());
    auto g = synthesize_range(p, DwellTimeConstraint::range(0.3, 0.5), DelayScaling::Constant).value();
    g.Ld = -10.0 * g.Ld;  // J - Ld C gets a large positive (2,2) entry, Ed - Ld Fd stays positive
    g.Ld(1, 0) = 2.0;     // J22 - 2 < 0
    REQUIRE_FALSE(error_positivity(p, g).positive);
    auto plant = p;
    plant.sys.phi0 = constant_history(Vector::Constant(2, 1.0));
    const auto seq = gen_sequence(DwellTimeConstraint::range(0.3, 0.5), 20.0, 21);
    const auto r = check_enclosure(simulate_observer(plant, g, seq, paper_disturbances(2, 1, 1), 20.0, 0.01));
    CHECK_FALSE(r.holds);
    CHECK(r.t > 0.0);
    CHECK(r.margin < 0.0);
}

TEST_CASE("switched observers enclose the state") {
    struct Case {
        SwitchedPlant plant;
        double t_bar;
        ObserverOptions opt;
    };
    const std::vector<Case> cases = {{bounded(ex3()), 1.0, {}}, {bounded(foschini()), 0.2, gain_entry_box({}, -10, 10)}};
    for (const auto& c : cases) {
        const auto dt = DwellTimeConstraint::minimum(c.t_bar);
        const auto g = synthesize_switched(c.plant, dt, DelayScaling::Constant, c.opt);
        REQUIRE(g.feasible());
        auto plant = c.plant;
        const auto n = plant.n();
        plant.phi0 = constant_history(Vector::Constant(n, 1.0));
        const auto seq = gen_sequence(dt, 100.0, 9, 2);
        const auto tr = simulate_observer(plant, *g, seq, paper_disturbances(n, plant.modes[0].E.cols(), 0), 100.0, 0.01);
        CHECK(check_enclosure(tr).holds);
        CHECK(tr.sigma.size() == tr.t.size());

        GainEstimateOptions o;
        o.trials = 8;
        o.nonnegative = true;
        CHECK(empirical_gain(switched_error_system(c.plant, *g), dt, o).gain <= g->gamma + 1e-6);
    }
}

TEST_CASE("input sizes are checked") {
    DelaySystem d;
    d.A = Matrix(Matrix::Constant(1, 1, -1.0));
    d.J = Matrix(Matrix::Identity(1, 1));
    d.complete();
    const auto seq = DwellSequence::from_dwells({1.0});
    Inputs in;
    in.wd = [](int) { return Vector(Vector::Ones(2)); };
    CHECK_THROWS_WITH_AS((void)simulate(d, seq, in, 2.0, 0.1), "w_d: expected 0 entries, got 2", DimensionError);
    in = {};
    in.wc = [](double) { return Vector(Vector::Ones(1)); };
    CHECK_THROWS_AS((void)simulate(d, seq, in, 2.0, 0.1), DimensionError);
}
