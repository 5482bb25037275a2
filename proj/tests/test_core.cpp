#include "posimp/core.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace posimp;

namespace {

// uncertain impulsive example with alpha = 1/2 in Gc
LftPositiveSystem uncimp() {
    Matrix A(2, 2), Gc(2, 2), Ec(2, 1), Cc(1, 2), J = 2.0 * Matrix::Identity(2, 2), Cd(1, 2);
    A << -1, 0, 1, -3;
    Gc << 0, 1, 0, 0;
    Ec << 1, 0;
    Cc << 0, 1;
    Cd << 0, 1;
    auto s = LftPositiveSystem::bare(A, J);
    s.Gc = Gc;
    s.Ec = Ec;
    s.CcD = 0.5 * Matrix::Identity(2, 2);
    s.HcD = 0.5 * Matrix::Identity(2, 2);
    s.FcD = Matrix::Zero(2, 1);
    s.Cc = Cc;
    s.Hc = Matrix::Zero(1, 2);
    s.Fc = Matrix::Zero(1, 1);
    s.Cd = Cd;
    s.complete();
    return s;
}

// (I - H)^-1 via truncated Neumann series, independent of the library path
Matrix neumann_inverse(const Matrix& H) {
    Matrix sum = Matrix::Identity(H.rows(), H.cols());
    Matrix term = sum;
    for (int k = 0; k < 400; ++k) {
        term = term * H;
        sum += term;
    }
    return sum;
}

}  // namespace

TEST_CASE("is_metzler") {
    Matrix a(2, 2);
    a << -1, 0, 1, -3;
    CHECK(is_metzler(a));
    Matrix b(2, 2);
    b << 0, -0.1, 0, 0;
    CHECK_FALSE(is_metzler(b, 0.0));
    CHECK(is_metzler(b, 0.2));
    CHECK(is_metzler(Matrix::Identity(3, 3)));
    CHECK_THROWS_AS((void)is_metzler(Matrix::Zero(2, 3)), DimensionError);
}

TEST_CASE("timer matrix function") {
    Matrix a0(1, 1), a1(1, 1), a2(1, 1);
    a0 << 1;
    a1 << 2;
    a2 << 3;
    TimerMatrixFunction f(std::vector<Matrix>{a0, a1, a2});
    CHECK(f(2.0)(0, 0) == doctest::Approx(1 + 4 + 12));
    CHECK(f.derivative()(2.0)(0, 0) == doctest::Approx(2 + 12));
    CHECK(f.degree() == 2);
    CHECK_FALSE(f.is_constant());
    TimerMatrixFunction c(a0);
    CHECK(c.is_constant());
    CHECK(c.derivative()(5.0)(0, 0) == 0.0);
    CHECK_THROWS_AS(TimerMatrixFunction(std::vector<Matrix>{a0, Matrix::Zero(2, 2)}), DimensionError);

    auto t = TimerMatrixFunction::tabulated(2.0, {a0, a1, a2});
    CHECK(t(0.5)(0, 0) == doctest::Approx(1.5));
    CHECK(t(3.0)(0, 0) == doctest::Approx(3.0));
}

TEST_CASE("internal positivity of the uncertain example") {
    const auto s = uncimp();
    const auto rep = check_internal_positivity(s, uniform_tau_grid(2.0));
    CHECK(rep.positive);
    CHECK(rep.violations.empty());
}

TEST_CASE("negative jump matrix is reported") {
    auto s = uncimp();
    s.J = Matrix(-Matrix::Identity(2, 2));
    const auto rep = check_internal_positivity(s, uniform_tau_grid(1.0));
    REQUIRE_FALSE(rep.positive);
    CHECK(rep.violations.front().matrix == "J");
    CHECK(rep.violations.front().row == 1);
    CHECK(rep.violations.front().col == 1);
    CHECK(std::isnan(rep.violations.front().tau));
}

TEST_CASE("affine A violation appears at the largest grid tau") {
    auto s = uncimp();
    Matrix a0(2, 2), a1 = Matrix::Zero(2, 2);
    a0 << -1, 0, 1, -3;
    a1(1, 0) = -1;
    s.A = TimerMatrixFunction(std::vector<Matrix>{a0, a1});
    const auto grid = uniform_tau_grid(2.0, 11);
    const auto rep = check_internal_positivity(s, grid);
    REQUIRE_FALSE(rep.positive);
    CHECK(rep.sampled_check);
    double worst_tau = -1;
    for (const auto& v : rep.violations)
        if (v.matrix == "A") worst_tau = std::max(worst_tau, v.tau);
    CHECK(worst_tau == doctest::Approx(2.0));
}

TEST_CASE("worst-case blocks of the uncertain example") {
    const auto s = uncimp();
    const auto wc = worst_case_continuous(s);
    const Matrix oracle = s.A(0) + s.Gc(0) * neumann_inverse(s.HcD) * s.CcD;
    Matrix expected(2, 2);
    expected << -1, 1, 1, -3;
    CHECK((wc.A(0.3) - expected).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((wc.A(0.3) - oracle).cwiseAbs().maxCoeff() < 1e-9);
    // Hurwitz
    CHECK(wc.A(0).eigenvalues().real().maxCoeff() < 0);

    const auto full = worst_case_system(s);
    CHECK(full.ncD() == 0);
    CHECK(full.ndD() == 0);
}

TEST_CASE("zero feedthrough reduces to A + Gc CcD") {
    auto s = uncimp();
    s.HcD = Matrix::Zero(2, 2);
    const auto wc = worst_case_continuous(s);
    CHECK((wc.A(0) - (s.A(0) + s.Gc(0) * s.CcD)).norm() == 0.0);
    s.CcD = Matrix::Identity(2, 2);
    CHECK((worst_case_continuous(s).A(0) - (s.A(0) + s.Gc(0))).norm() == 0.0);
}

TEST_CASE("ill-posed uncertainty loop") {
    auto s = uncimp();
    s.HcD = Matrix::Identity(2, 2);
    CHECK_THROWS_AS((void)worst_case_continuous(s), WellPosednessError);
    s.HcD = 1.5 * Matrix::Identity(2, 2);
    CHECK_THROWS_AS((void)worst_case_continuous(s), WellPosednessError);
}

TEST_CASE("dimension errors name the block") {
    auto s = uncimp();
    s.Ec = Matrix(Matrix::Zero(3, 1));
    try {
        s.validate();
        FAIL("expected DimensionError");
    } catch (const DimensionError& e) {
        CHECK(std::string(e.what()).find("Ec") != std::string::npos);
    }
}

TEST_CASE("scaling structure and dwell constraints") {
    CHECK_NOTHROW(ScalingStructure::grouped({{0, 2}, {1}}).validate(3));
    CHECK_THROWS(ScalingStructure::grouped({{0}, {1}}).validate(3));
    CHECK_THROWS(ScalingStructure::grouped({{0, 1}, {1, 2}}).validate(3));
    CHECK_THROWS(DwellTimeConstraint::range(0.5, 0.3).validate());
    CHECK_THROWS(DwellTimeConstraint::minimum(0.0).validate());
    const auto r = DwellTimeConstraint::range(0.3, 0.5);
    CHECK(r.admits(0.4));
    CHECK_FALSE(r.admits(0.6));
    CHECK(DwellTimeConstraint::minimum(1.0).admits(7.0));
}

TEST_CASE("property: nonnegative perturbations never add violations") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0), p(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        Matrix A = Matrix::NullaryExpr(3, 3, [&] { return u(rng); });
        Matrix J = Matrix::NullaryExpr(3, 3, [&] { return u(rng); });
        auto s = LftPositiveSystem::bare(A, J);
        const auto before = check_internal_positivity(s, {0.0});
        s.A = Matrix(A + Matrix::NullaryExpr(3, 3, [&] { return p(rng); }));
        s.J = J + Matrix::NullaryExpr(3, 3, [&] { return p(rng); });
        const auto after = check_internal_positivity(s, {0.0});
        CHECK(after.violations.size() <= before.violations.size());
        for (const auto& v : after.violations) {
            bool seen = false;
            for (const auto& w : before.violations) seen |= (w.matrix == v.matrix && w.row == v.row && w.col == v.col);
            CHECK(seen);
        }
    }
}
