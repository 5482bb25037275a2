#include "posimp/certify.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

using namespace posimp;
using posimp::testing::expm;
using posimp::testing::spectral_radius;
using posimp::testing::uncimp;

namespace {

constexpr double kSlack = 10 * 1e-8;

// second LFT fixture with a coupled uncertainty channel and two outputs
LftPositiveSystem coupled() {
    Matrix A(2, 2), Gc(2, 2), Ec(2, 1), Cc(2, 2), J(2, 2), Cd(1, 2), Ed(2, 1);
    A << -2, 1, 0.5, -1.5;
    Gc << 0.2, 0, 0, 0.3;
    Ec << 1, 1;
    Cc << 1, 0, 0, 1;
    J << 1.2, 0, 0.3, 0.8;
    Ed << 0.2, 0.1;
    Cd << 1, 1;
    auto s = LftPositiveSystem::bare(A, J);
    s.Gc = Gc;
    s.Ec = Ec;
    s.CcD = Matrix::Identity(2, 2);
    s.HcD = 0.3 * Matrix::Identity(2, 2);
    s.FcD = Matrix::Zero(2, 1);
    s.Cc = Cc;
    s.Ed = Ed;
    s.Cd = Cd;
    s.complete();
    return s;
}

double gamma_of(const Outcome<Certificate>& c) {
    REQUIRE(c.feasible());
    return c->gamma;
}

// infeasible counts as an infinite gain
double gamma_or_inf(const Outcome<Certificate>& c) {
    return c.feasible() ? c->gamma : std::numeric_limits<double>::infinity();
}

LpOptions pinned(double g) {
    LpOptions o;
    o.fixed_gamma = g;
    return o;
}

}  // namespace

TEST_CASE("jump doubling with static flow is infeasible") {
    auto s = LftPositiveSystem::bare(Matrix(Matrix::Zero(2, 2)), Matrix(2.0 * Matrix::Identity(2, 2)));
    s.complete();
    const auto r = certify_range(s, DwellTimeConstraint::range(0.5, 1.0), ScalingStructure::constant());
    REQUIRE_FALSE(r.feasible());
    CHECK_FALSE(r.infeasible().conditions.empty());
    CHECK(r.infeasible().farkas_verified);
    const auto m = certify_min(s, DwellTimeConstraint::minimum(1.0), ScalingStructure::constant());
    CHECK_FALSE(m.feasible());
}

TEST_CASE("contracting jumps certify for any dwell in range") {
    Matrix A(2, 2), J(2, 2);
    A << -1, 0.5, 0.2, -2;
    J << 1.5, 0.3, 0.2, 1.1;
    const double t_min = 0.8, t_max = 1.6;
    double worst = 0.0;
    for (int i = 0; i <= 50; ++i) {
        const double T = t_min + (t_max - t_min) * i / 50.0;
        worst = std::max(worst, spectral_radius(J * expm(A * T)));
    }
    REQUIRE(worst < 1.0);
    auto s = LftPositiveSystem::bare(A, J);
    s.complete();
    const auto c = certify_range(s, DwellTimeConstraint::range(t_min, t_max), ScalingStructure::constant());
    REQUIRE(c.feasible());
    CHECK(reverify(*c).empty());
    for (int i = 0; i < c->zeta.grid().nodes; ++i) CHECK(c->zeta.node(i).minCoeff() > 0.0);
}

TEST_CASE("no jumps and Hurwitz Metzler flow certifies at any minimum dwell-time") {
    Matrix A(3, 3);
    A << -2, 1, 0, 0.5, -1, 0.2, 0, 0.3, -0.8;
    REQUIRE(A.eigenvalues().real().maxCoeff() < 0.0);
    auto s = LftPositiveSystem::bare(A, Matrix(Matrix::Identity(3, 3)));
    s.complete();
    for (double t_bar : {0.05, 1.0, 20.0}) {
        const auto c = certify_min(s, DwellTimeConstraint::minimum(t_bar), ScalingStructure::constant());
        CHECK(c.feasible());
    }
}

TEST_CASE("uncimp minimum dwell-time") {
    const auto s = uncimp();
    const auto c2 = certify_min(s, DwellTimeConstraint::minimum(2.0), ScalingStructure::constant());
    const auto c3 = certify_min(s, DwellTimeConstraint::minimum(3.0), ScalingStructure::constant());
    REQUIRE(c2.feasible());
    REQUIRE(c3.feasible());
    CHECK(std::isfinite(c2->gamma));
    CHECK(c3->gamma <= c2->gamma + kSlack);
    CHECK(c2->mu_c.has_value());
    CHECK(c2->theorem == CertTheorem::MinConstrained);
    CHECK(reverify(*c2).empty());

    const auto c1 = certify_min(s, DwellTimeConstraint::minimum(1.0), ScalingStructure::constant());
    REQUIRE_FALSE(c1.feasible());
    bool named = false;
    for (const auto& n : c1.infeasible().conditions) named = named || n.rfind("minDT", 0) == 0;
    CHECK(named);

    const auto f2 = certify_min_free(s, DwellTimeConstraint::minimum(2.0));
    REQUIRE(f2.feasible());
    CHECK(f2->gamma <= c2->gamma + kSlack);
    CHECK_FALSE(f2->mu_c.has_value());
    CHECK(f2->theorem == CertTheorem::MinFree);
}

TEST_CASE("free variant without channels equals the bare certify LP") {
    Matrix A(2, 2), J(2, 2);
    A << -1, 0.5, 0.2, -2;
    J << 1.5, 0.3, 0.2, 1.1;
    auto s = LftPositiveSystem::bare(A, J);
    s.complete();
    const auto dt = DwellTimeConstraint::minimum(1.0);
    const auto a = build_certify_lp(s, dt, CertTheorem::MinFree, ScalingStructure::unconstrained());
    const auto b = build_certify_lp(s, dt, CertTheorem::MinConstrained, ScalingStructure::unconstrained());
    CHECK(a.dump() == b.dump());
}

TEST_CASE("elimination equivalence at gamma* +- 1%") {
    struct Case {
        LftPositiveSystem sys;
        DwellTimeConstraint dt;
    };
    const std::vector<Case> cases = {
        {uncimp(), DwellTimeConstraint::minimum(2.0)},
        {uncimp(), DwellTimeConstraint::range(2.0, 3.0)},
        {coupled(), DwellTimeConstraint::range(0.5, 1.0)},
        {coupled(), DwellTimeConstraint::minimum(0.7)},
    };
    const auto unc = ScalingStructure::unconstrained();
    for (const auto& k : cases) {
        const bool range = k.dt.is_range();
        auto scaled = [&](const LpOptions& o) {
            return range ? certify_range(k.sys, k.dt, unc, o) : certify_min(k.sys, k.dt, unc, o);
        };
        auto free = [&](const LpOptions& o) {
            return range ? certify_range_free(k.sys, k.dt, o) : certify_min_free(k.sys, k.dt, o);
        };
        const double g_free = gamma_of(free({}));
        const double g_scaled = gamma_of(scaled({}));
        CHECK(g_free == doctest::Approx(g_scaled).epsilon(1e-4));
        CHECK(scaled(pinned(1.01 * g_free)).feasible());
        CHECK_FALSE(scaled(pinned(0.99 * g_free)).feasible());
        CHECK(free(pinned(1.01 * g_scaled)).feasible());
        CHECK_FALSE(free(pinned(0.99 * g_scaled)).feasible());
    }
}

TEST_CASE("scaling class monotonicity") {
    for (const auto& s : {uncimp(), coupled()}) {
        const auto dt = DwellTimeConstraint::minimum(2.0);
        const double g_unc = gamma_of(certify_min(s, dt, ScalingStructure::unconstrained()));
        const double g_const = gamma_or_inf(certify_min(s, dt, ScalingStructure::constant()));
        const double g_one_group = gamma_or_inf(certify_min(s, dt, ScalingStructure::grouped({{0, 1}})));
        const double g_split = gamma_of(certify_min(s, dt, ScalingStructure::grouped({{0}, {1}})));
        CHECK(g_const >= g_unc - kSlack);
        CHECK(g_one_group >= g_unc - kSlack);
        CHECK(g_split == doctest::Approx(g_unc).epsilon(1e-6));
    }
}

TEST_CASE("grid refinement does not increase gamma") {
    const auto s = uncimp();
    const auto dt = DwellTimeConstraint::minimum(2.0);
    LpOptions coarse;
    coarse.nodes = 11;
    LpOptions fine;
    fine.nodes = 21;
    for (const auto& sc : {ScalingStructure::constant(), ScalingStructure::unconstrained()}) {
        const double gc = gamma_of(certify_min(s, dt, sc, coarse));
        const double gf = gamma_of(certify_min(s, dt, sc, fine));
        CHECK(gf <= gc + kSlack);
    }
    const auto rdt = DwellTimeConstraint::range(2.0, 3.0);
    CHECK(gamma_of(certify_range_free(s, rdt, fine)) <= gamma_of(certify_range_free(s, rdt, coarse)) + kSlack);
}

TEST_CASE("gamma is nonincreasing in the minimum dwell-time") {
    const auto s = uncimp();
    double prev = std::numeric_limits<double>::infinity();
    for (double t_bar : {1.9, 2.2, 2.5, 3.0, 4.0, 6.0}) {
        const double g = gamma_of(certify_min(s, DwellTimeConstraint::minimum(t_bar), ScalingStructure::constant()));
        CHECK(g <= prev + kSlack);
        prev = g;
    }
}

TEST_CASE("bisection agrees with the optimizing LP") {
    const auto s = uncimp();
    const auto dt = DwellTimeConstraint::minimum(2.5);
    const auto sc = ScalingStructure::constant();
    const double g = gamma_of(certify_min(s, dt, sc));
    const auto b = bisect_gamma(s, dt, CertTheorem::MinConstrained, sc, 1e-3, 100.0, 1e-6);
    REQUIRE(b.has_value());
    CHECK(*b == doctest::Approx(g).epsilon(1e-5));
    CHECK_FALSE(bisect_gamma(s, dt, CertTheorem::MinConstrained, sc, 1e-3, 0.5 * g, 1e-6).has_value());
}

TEST_CASE("certificates re-verify and carry positive multipliers") {
    const auto s = coupled();
    const auto c = certify_range(s, DwellTimeConstraint::range(0.5, 1.0), ScalingStructure::constant());
    REQUIRE(c.feasible());
    CHECK(reverify(*c).empty());
    CHECK(c->gamma > 0.0);
    CHECK(c->epsilon >= 1e-6 - 1e-12);
    REQUIRE(c->mu_c.has_value());
    for (int i = 0; i < c->mu_c->grid().nodes; ++i) CHECK(c->mu_c->node(i).minCoeff() > 0.0);
    CHECK_FALSE(c->mu_d.has_value());
    CHECK(c->sound);
}

TEST_CASE("sampled soundness: an unstable constant dwell is never certified") {
    std::mt19937_64 rng(20240611);
    std::uniform_real_distribution<double> off(0.0, 1.0), diag(-3.0, 0.0), jump(0.0, 1.5), dwell(0.2, 2.0);
    int unstable = 0;
    for (int trial = 0; trial < 60; ++trial) {
        Matrix A(2, 2), J(2, 2);
        A << diag(rng), off(rng), off(rng), diag(rng);
        J << jump(rng), jump(rng), jump(rng), jump(rng);
        const double t_bar = dwell(rng);
        if (spectral_radius(J * expm(A * t_bar)) <= 1.001) continue;
        ++unstable;
        auto s = LftPositiveSystem::bare(A, J);
        s.complete();
        CHECK_FALSE(certify_min(s, DwellTimeConstraint::minimum(t_bar), ScalingStructure::constant()).feasible());
        CHECK_FALSE(certify_range(s, DwellTimeConstraint::range(t_bar, t_bar + 0.5), ScalingStructure::constant())
                        .feasible());
    }
    CHECK(unstable > 5);
}
