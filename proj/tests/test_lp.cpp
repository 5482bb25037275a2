#include "posimp/lp.hpp"

#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

using namespace posimp;
using namespace posimp::lp;

TEST_CASE("single bound") {
    LinearProgram p;
    const int x = p.add_variable("x");
    p.add_constraint("c", LinExpr::var(x), Relation::GreaterEqual, 2.0);
    p.set_objective(LinExpr::var(x));
    const auto r = solve(p);
    REQUIRE(r.status == LpStatus::Optimal);
    CHECK(r.x(x) == doctest::Approx(2.0));
    CHECK(r.objective == doctest::Approx(2.0));
}

TEST_CASE("contradictory rows give a Farkas certificate") {
    LinearProgram p;
    const int x = p.add_variable("x");
    p.add_constraint("le", LinExpr::var(x), Relation::LessEqual, 1.0);
    p.add_constraint("ge", LinExpr::var(x), Relation::GreaterEqual, 2.0);
    const auto r = solve(p);
    REQUIRE(r.status == LpStatus::Infeasible);
    REQUIRE(r.farkas.size() == 2);
    CHECK(r.farkas(0) == doctest::Approx(1.0));
    CHECK(r.farkas(1) == doctest::Approx(1.0));
    CHECK(is_farkas_certificate(p, r.farkas));
    Vector bogus(2);
    bogus << 1, 0;
    CHECK_FALSE(is_farkas_certificate(p, bogus));
}

TEST_CASE("free variable without rows is unbounded") {
    LinearProgram p;
    const int x = p.add_variable("x");
    p.set_objective(LinExpr::var(x, -1.0));
    CHECK(solve(p).status == LpStatus::Unbounded);
}

TEST_CASE("verify") {
    LinearProgram p;
    const int x = p.add_variable("x");
    p.add_constraint("c", LinExpr::var(x), Relation::GreaterEqual, 2.0);
    Vector v(1);
    v << 3.0;
    CHECK(verify(p, v).empty());
    v << 1.9999999;
    CHECK(verify(p, v, 1e-6).empty());
    v << 1.9;
    const auto bad = verify(p, v);
    REQUIRE(bad.size() == 1);
    CHECK(bad[0].row == 0);
    CHECK(bad[0].residual == doctest::Approx(0.1));
}

TEST_CASE("small textbook LP") {
    // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18, x,y >= 0 -> (2, 6), 36
    LinearProgram p;
    const int x = p.add_variable("x", 0.0);
    const int y = p.add_variable("y", 0.0);
    p.add_constraint("a", LinExpr::var(x), Relation::LessEqual, 4);
    p.add_constraint("b", LinExpr::var(y, 2), Relation::LessEqual, 12);
    p.add_constraint("c", LinExpr::var(x, 3) + LinExpr::var(y, 2), Relation::LessEqual, 18);
    p.set_objective(LinExpr::var(x, -3) + LinExpr::var(y, -5));
    const auto r = solve(p);
    REQUIRE(r.status == LpStatus::Optimal);
    CHECK(r.x(x) == doctest::Approx(2));
    CHECK(r.x(y) == doctest::Approx(6));
    CHECK(r.objective == doctest::Approx(-36));
}

TEST_CASE("equality rows, bounded variables and constants") {
    LinearProgram p;
    const int a = p.add_variable("a", -1, 1);
    const int b = p.add_variable("b", -1, 1);
    LinExpr s = LinExpr::var(a) + LinExpr::var(b);
    s += 0.5;
    p.add_constraint("sum", s, Relation::Equal, 1.0);  // a + b = 0.5
    p.set_objective(LinExpr::var(a) - LinExpr::var(b));
    const auto r = solve(p);
    REQUIRE(r.status == LpStatus::Optimal);
    CHECK(r.x(a) == doctest::Approx(-0.5));
    CHECK(r.x(b) == doctest::Approx(1.0));
    CHECK(p.implied_by_bounds(LinExpr::var(a), Relation::LessEqual, 1.0));
    CHECK_FALSE(p.implied_by_bounds(LinExpr::var(a), Relation::LessEqual, 0.5));
}

TEST_CASE("dump format") {
    LinearProgram p;
    const int x = p.add_variable("x", 0);
    const int y = p.add_variable("y");
    p.add_constraint("row1", LinExpr::var(x, 2) - LinExpr::var(y), Relation::GreaterEqual, 3);
    p.set_objective(LinExpr::var(y));
    const std::string d = p.dump();
    CHECK(d.find("row1: 2*x - 1*y >= 3\n") != std::string::npos);
    CHECK(d.find("min: 1*y\n") != std::string::npos);
    CHECK(d.find("var x [0, inf]") != std::string::npos);
}

TEST_CASE("invalid input") {
    LinearProgram p;
    CHECK_THROWS(p.add_variable("x", 1, 0));
    CHECK_THROWS(p.add_constraint("r", LinExpr::var(3), Relation::LessEqual, 0));
}

namespace {

// brute-force oracle for tiny LPs: enumerate vertices from every choice of
// n active constraints (rows or bounds)
struct Halfspace {
    Vector a;
    double b;
};

double brute_force_min(const std::vector<Halfspace>& hs, const Vector& c, bool& feasible) {
    const int n = static_cast<int>(c.size());
    const int m = static_cast<int>(hs.size());
    double best = INFINITY;
    feasible = false;
    std::vector<int> pick(n);
    std::function<void(int, int)> rec = [&](int start, int depth) {
        if (depth == n) {
            Matrix M(n, n);
            Vector r(n);
            for (int k = 0; k < n; ++k) {
                M.row(k) = hs[pick[k]].a.transpose();
                r(k) = hs[pick[k]].b;
            }
            Eigen::FullPivLU<Matrix> lu(M);
            if (lu.rank() < n) return;
            const Vector x = lu.solve(r);
            for (const auto& h : hs)
                if (h.a.dot(x) > h.b + 1e-7) return;
            feasible = true;
            best = std::min(best, c.dot(x));
            return;
        }
        for (int i = start; i < m; ++i) {
            pick[depth] = i;
            rec(i + 1, depth + 1);
        }
    };
    rec(0, 0);
    return best;
}

}  // namespace

TEST_CASE("property: random bounded LPs match vertex enumeration and duality") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(-1, 1);
    int infeasible = 0, optimal = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 2 + trial % 3;
        const int m = 2 + trial % 4;
        LinearProgram p;
        std::vector<Halfspace> hs;
        for (int j = 0; j < n; ++j) {
            p.add_variable("x" + std::to_string(j), -2, 2);
            Vector e = Vector::Zero(n);
            e(j) = 1;
            hs.push_back({e, 2});
            hs.push_back({-e, 2});
        }
        for (int i = 0; i < m; ++i) {
            Vector a = Vector::NullaryExpr(n, [&] { return u(rng); });
            const double b = u(rng) - 0.3;
            LinExpr e;
            for (int j = 0; j < n; ++j) e.add(j, a(j));
            const bool ge = i % 2 == 1;
            p.add_constraint("r" + std::to_string(i), e, ge ? Relation::GreaterEqual : Relation::LessEqual, b);
            hs.push_back(ge ? Halfspace{-a, -b} : Halfspace{a, b});
        }
        Vector c = Vector::NullaryExpr(n, [&] { return u(rng); });
        LinExpr obj;
        for (int j = 0; j < n; ++j) obj.add(j, c(j));
        p.set_objective(obj);

        bool feasible = false;
        const double best = brute_force_min(hs, c, feasible);
        const auto r = solve(p);
        const auto again = solve(p);
        CHECK(r.status == again.status);
        if (!feasible) {
            ++infeasible;
            REQUIRE(r.status == LpStatus::Infeasible);
            CHECK(is_farkas_certificate(p, r.farkas));
        } else {
            ++optimal;
            REQUIRE(r.status == LpStatus::Optimal);
            CHECK(r.objective == doctest::Approx(best).epsilon(1e-6));
            CHECK(verify(p, r.x).empty());
            CHECK(std::abs(p.objective_value(r.x) - r.objective) <= 1e-9 * std::max(1.0, std::abs(r.objective)));
            CHECK((r.x - again.x).norm() == 0.0);
        }
    }
    CHECK(infeasible > 0);
    CHECK(optimal > 0);
}
