#include "posimp/lp.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace posimp::lp {

const char* to_string(Relation rel) {
    switch (rel) {
        case Relation::LessEqual: return "<=";
        case Relation::Equal: return "=";
        case Relation::GreaterEqual: return ">=";
    }
    return "?";
}

const char* to_string(LpStatus status) {
    switch (status) {
        case LpStatus::Optimal: return "Optimal";
        case LpStatus::Infeasible: return "Infeasible";
        case LpStatus::Unbounded: return "Unbounded";
    }
    return "?";
}

LinExpr& LinExpr::add(const LinExpr& other, double scale) {
    if (scale == 0.0) return *this;
    terms_.reserve(terms_.size() + other.terms_.size());
    for (const auto& [j, c] : other.terms_) terms_.emplace_back(j, scale * c);
    constant_ += scale * other.constant_;
    return *this;
}

LinExpr& LinExpr::operator*=(double s) {
    for (auto& t : terms_) t.second *= s;
    constant_ *= s;
    return *this;
}

std::vector<std::pair<int, double>> LinExpr::merged() const {
    auto t = terms_;
    std::stable_sort(t.begin(), t.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<std::pair<int, double>> out;
    for (const auto& [j, c] : t) {
        if (!out.empty() && out.back().first == j)
            out.back().second += c;
        else
            out.emplace_back(j, c);
    }
    std::erase_if(out, [](const auto& p) { return p.second == 0.0; });
    return out;
}

int LinearProgram::add_variable(std::string name, double lower, double upper) {
    if (std::isnan(lower) || std::isnan(upper) || lower > upper)
        throw std::invalid_argument("variable " + name + ": lower bound exceeds upper bound");
    variables_.push_back({std::move(name), lower, upper});
    return num_variables() - 1;
}

namespace {

void check_terms(const std::vector<std::pair<int, double>>& terms, int nvars, const std::string& where) {
    for (const auto& [j, c] : terms) {
        if (j < 0 || j >= nvars) throw std::invalid_argument(where + ": undeclared variable index " + std::to_string(j));
        if (!std::isfinite(c)) throw std::invalid_argument(where + ": non-finite coefficient");
    }
}

}  // namespace

int LinearProgram::add_constraint(std::string name, const LinExpr& lhs, Relation rel, double rhs) {
    Constraint row;
    row.terms = lhs.merged();
    check_terms(row.terms, num_variables(), "constraint " + name);
    row.rhs = rhs - lhs.constant();
    if (!std::isfinite(row.rhs)) throw std::invalid_argument("constraint " + name + ": non-finite right-hand side");
    row.rel = rel;
    row.name = std::move(name);
    constraints_.push_back(std::move(row));
    return num_constraints() - 1;
}

void LinearProgram::set_objective(const LinExpr& objective) {
    objective_ = objective.merged();
    check_terms(objective_, num_variables(), "objective");
    objective_constant_ = objective.constant();
}

bool LinearProgram::implied_by_bounds(const LinExpr& lhs, Relation rel, double rhs) const {
    double lo = lhs.constant();
    double hi = lhs.constant();
    for (const auto& [j, c] : lhs.merged()) {
        const auto& v = variables_.at(static_cast<std::size_t>(j));
        lo += c > 0 ? c * v.lower : c * v.upper;
        hi += c > 0 ? c * v.upper : c * v.lower;
    }
    switch (rel) {
        case Relation::LessEqual: return hi <= rhs;
        case Relation::GreaterEqual: return lo >= rhs;
        case Relation::Equal: return lo == rhs && hi == rhs;
    }
    return false;
}

double LinearProgram::evaluate(const LinExpr& e, const Vector& x) const {
    double s = e.constant();
    for (const auto& [j, c] : e.terms()) s += c * x(j);
    return s;
}

double LinearProgram::objective_value(const Vector& x) const {
    double s = objective_constant_;
    for (const auto& [j, c] : objective_) s += c * x(j);
    return s;
}

namespace {

void write_terms(std::ostream& os, const std::vector<std::pair<int, double>>& terms, const std::vector<Variable>& vars) {
    if (terms.empty()) {
        os << "0";
        return;
    }
    bool first = true;
    for (const auto& [j, c] : terms) {
        if (!first) os << (c < 0 ? " - " : " + ");
        else if (c < 0) os << "-";
        os << std::abs(c) << "*" << vars[static_cast<std::size_t>(j)].name;
        first = false;
    }
}

}  // namespace

void LinearProgram::dump(std::ostream& os) const {
    const auto old_prec = os.precision(17);
    for (const auto& v : variables_) os << "var " << v.name << " [" << v.lower << ", " << v.upper << "]\n";
    os << "min: ";
    write_terms(os, objective_, variables_);
    if (objective_constant_ != 0.0) os << " + " << objective_constant_;
    os << "\n";
    for (const auto& r : constraints_) {
        os << r.name << ": ";
        write_terms(os, r.terms, variables_);
        os << " " << to_string(r.rel) << " " << r.rhs << "\n";
    }
    os.precision(old_prec);
}

std::string LinearProgram::dump() const {
    std::ostringstream ss;
    dump(ss);
    return ss.str();
}

std::vector<Violation> verify(const LinearProgram& lp, const Vector& x, double feastol) {
    if (x.size() != lp.num_variables())
        throw std::invalid_argument("verify: assignment has " + std::to_string(x.size()) + " entries, LP has " +
                                    std::to_string(lp.num_variables()) + " variables");
    std::vector<Violation> out;
    const auto& vars = lp.variables();
    for (int j = 0; j < lp.num_variables(); ++j) {
        const double v = x(j);
        const double r = std::max(vars[j].lower - v, v - vars[j].upper);
        if (std::isnan(v) || r > feastol) out.push_back({-1, j, vars[j].name, std::isnan(v) ? NAN : r});
    }
    const auto& rows = lp.constraints();
    for (int i = 0; i < lp.num_constraints(); ++i) {
        const auto& row = rows[i];
        double lhs = 0.0;
        for (const auto& [j, c] : row.terms) lhs += c * x(j);
        double r = 0.0;
        switch (row.rel) {
            case Relation::LessEqual: r = lhs - row.rhs; break;
            case Relation::GreaterEqual: r = row.rhs - lhs; break;
            case Relation::Equal: r = std::abs(lhs - row.rhs); break;
        }
        if (std::isnan(lhs) || r > feastol) out.push_back({i, -1, row.name, r});
    }
    return out;
}

bool is_farkas_certificate(const LinearProgram& lp, const Vector& y, double tol) {
    if (y.size() != lp.num_constraints()) return false;
    const auto& rows = lp.constraints();
    Vector g = Vector::Zero(lp.num_variables());
    double rhs = 0.0;
    for (int i = 0; i < lp.num_constraints(); ++i) {
        const auto& row = rows[i];
        if (row.rel != Relation::Equal && y(i) < -tol) return false;
        const double s = row.rel == Relation::GreaterEqual ? -1.0 : 1.0;
        for (const auto& [j, c] : row.terms) g(j) += s * y(i) * c;
        rhs += s * y(i) * row.rhs;
    }
    // smallest value of g^T x over the variable box
    double low = 0.0;
    const auto& vars = lp.variables();
    for (int j = 0; j < lp.num_variables(); ++j) {
        const double lo = vars[j].lower, hi = vars[j].upper;
        if (g(j) > tol) {
            if (!std::isfinite(lo)) return false;
            low += g(j) * lo;
        } else if (g(j) < -tol) {
            if (!std::isfinite(hi)) return false;
            low += g(j) * hi;
        } else {
            const double at = std::clamp(0.0, lo, hi);
            low += g(j) * at;
        }
    }
    return low - rhs > tol * 1e-3;
}

// ---------------------------------------------------------------------------
// Bounded revised simplex.
//
// Standard form: A x - s + D a = 0, with structural x, one slack s_i per row
// carrying the row relation as bounds on s_i, and phase-1 artificials a_i
// (D_i = +-1) on rows violated by the starting point.
// Column numbering: structural [0, n), slack [n, n+m), artificial [n+m, n+2m).
// The basis inverse is kept dense and updated by rank-one (product form)
// updates, with a periodic refactorization that exploits unit columns.
// ---------------------------------------------------------------------------

namespace {

constexpr double kPivotBreakdown = 1e-12;
constexpr double kPivotTol = 1e-9;
constexpr double kDualTol = 1e-9;
constexpr double kHarris = 1e-9;
constexpr int kDegenerateSwitch = 50;

enum class NbState : unsigned char { Basic, Lower, Upper, Free };

class Simplex {
  public:
    Simplex(const LinearProgram& lp, const SolverOptions& opt) : lp_(lp), opt_(opt) {
        n_ = lp.num_variables();
        m_ = lp.num_constraints();
        ncol_ = n_ + 2 * m_;
        build_columns();
    }

    LpOutcome run();

  private:
    const LinearProgram& lp_;
    SolverOptions opt_;
    int n_ = 0, m_ = 0, ncol_ = 0;

    // structural columns in compressed form
    std::vector<int> cstart_, crow_;
    std::vector<double> cval_;
    std::vector<double> art_sign_;

    std::vector<double> lo_, hi_, x_, cost_;
    std::vector<NbState> state_;
    std::vector<int> head_;  // basis position -> column
    std::vector<int> pos_;   // column -> basis position or -1
    Matrix binv_;
    Vector pi_;
    int since_refactor_ = 0;
    int iterations_ = 0;
    int degenerate_run_ = 0;
    bool bland_ = false;

    void build_columns();
    void initial_basis();
    void refactor();
    void recompute_basics();
    void recompute_duals();
    [[nodiscard]] double reduced_cost(int j) const;
    [[nodiscard]] Vector ftran(int j) const;
    void pivot(int q, int r, const Vector& alpha);
    enum class Step { Optimal, Unbounded, Moved };
    Step iterate();
    Step optimize();
    [[noreturn]] void breakdown(const std::string& what) const;
    [[nodiscard]] bool unit_column(int j, int& row, double& sign) const;
};

void Simplex::build_columns() {
    std::vector<int> count(static_cast<std::size_t>(n_) + 1, 0);
    for (const auto& row : lp_.constraints())
        for (const auto& t : row.terms) ++count[static_cast<std::size_t>(t.first) + 1];
    cstart_.assign(static_cast<std::size_t>(n_) + 1, 0);
    for (int j = 0; j < n_; ++j) cstart_[j + 1] = cstart_[j] + count[j + 1];
    crow_.resize(static_cast<std::size_t>(cstart_[n_]));
    cval_.resize(static_cast<std::size_t>(cstart_[n_]));
    std::vector<int> fill(cstart_.begin(), cstart_.end() - 1);
    const auto& rows = lp_.constraints();
    for (int i = 0; i < m_; ++i)
        for (const auto& [j, c] : rows[i].terms) {
            crow_[fill[j]] = i;
            cval_[fill[j]] = c;
            ++fill[j];
        }

    lo_.assign(ncol_, 0.0);
    hi_.assign(ncol_, 0.0);
    for (int j = 0; j < n_; ++j) {
        lo_[j] = lp_.variables()[j].lower;
        hi_[j] = lp_.variables()[j].upper;
    }
    for (int i = 0; i < m_; ++i) {
        const auto& r = rows[i];
        lo_[n_ + i] = r.rel == Relation::LessEqual ? -kInf : r.rhs;
        hi_[n_ + i] = r.rel == Relation::GreaterEqual ? kInf : r.rhs;
    }
    art_sign_.assign(m_, 1.0);
}

bool Simplex::unit_column(int j, int& row, double& sign) const {
    if (j < n_) return false;
    if (j < n_ + m_) {
        row = j - n_;
        sign = -1.0;
    } else {
        row = j - n_ - m_;
        sign = art_sign_[row];
    }
    return true;
}

Vector Simplex::ftran(int j) const {
    int row;
    double sign;
    if (unit_column(j, row, sign)) return sign * binv_.col(row);
    Vector out = Vector::Zero(m_);
    for (int k = cstart_[j]; k < cstart_[j + 1]; ++k) out.noalias() += cval_[k] * binv_.col(crow_[k]);
    return out;
}

void Simplex::initial_basis() {
    x_.assign(ncol_, 0.0);
    state_.assign(ncol_, NbState::Lower);
    for (int j = 0; j < n_; ++j) {
        if (std::isfinite(lo_[j])) {
            x_[j] = lo_[j];
            state_[j] = NbState::Lower;
        } else if (std::isfinite(hi_[j])) {
            x_[j] = hi_[j];
            state_[j] = NbState::Upper;
        } else {
            x_[j] = 0.0;
            state_[j] = NbState::Free;
        }
    }
    std::vector<double> act(m_, 0.0);
    for (int j = 0; j < n_; ++j)
        if (x_[j] != 0.0)
            for (int k = cstart_[j]; k < cstart_[j + 1]; ++k) act[crow_[k]] += cval_[k] * x_[j];

    head_.assign(m_, -1);
    pos_.assign(ncol_, -1);
    binv_ = Matrix::Zero(m_, m_);
    for (int i = 0; i < m_; ++i) {
        const int s = n_ + i, a = n_ + m_ + i;
        const double r = act[i];
        if (r >= lo_[s] - opt_.feastol && r <= hi_[s] + opt_.feastol) {
            // slack basic, artificial fixed at zero
            head_[i] = s;
            x_[s] = r;
            state_[s] = NbState::Basic;
            lo_[a] = hi_[a] = 0.0;
            binv_(i, i) = -1.0;
        } else {
            const bool above = r > hi_[s];
            x_[s] = above ? hi_[s] : lo_[s];
            state_[s] = above ? NbState::Upper : NbState::Lower;
            // r - s + D a = 0 with a = |r - s| >= 0
            art_sign_[i] = above ? -1.0 : 1.0;
            lo_[a] = 0.0;
            hi_[a] = kInf;
            head_[i] = a;
            x_[a] = std::abs(r - x_[s]);
            state_[a] = NbState::Basic;
            binv_(i, i) = art_sign_[i];
        }
        pos_[head_[i]] = i;
    }
    for (int i = 0; i < m_; ++i) {
        const int a = n_ + m_ + i;
        if (state_[a] != NbState::Basic) {
            x_[a] = 0.0;
            state_[a] = NbState::Lower;
        }
    }
}

void Simplex::breakdown(const std::string& what) const {
    throw SolverError("LP solver: " + what, head_);
}

// Basis = unit columns (slack/artificial) plus k general columns. Rows not
// covered by a unit column form a k x k block; only that block is inverted.
void Simplex::refactor() {
    since_refactor_ = 0;
    if (m_ == 0) return;
    std::vector<int> unit_pos_of_row(m_, -1);
    std::vector<int> general;  // basis positions with structural columns
    for (int p = 0; p < m_; ++p) {
        int row;
        double sign;
        if (unit_column(head_[p], row, sign)) {
            if (unit_pos_of_row[row] >= 0) breakdown("singular basis (duplicate unit column)");
            unit_pos_of_row[row] = p;
        } else {
            general.push_back(p);
        }
    }
    std::vector<int> other_rows;  // rows without unit column, ordered
    std::vector<int> other_index(m_, -1);
    for (int i = 0; i < m_; ++i)
        if (unit_pos_of_row[i] < 0) {
            other_index[i] = static_cast<int>(other_rows.size());
            other_rows.push_back(i);
        }
    const int k = static_cast<int>(general.size());
    if (static_cast<int>(other_rows.size()) != k) breakdown("singular basis (row cover mismatch)");

    // B22 (rows other_rows, general columns) and B12 (unit rows, general columns)
    Matrix b22 = Matrix::Zero(k, k);
    Matrix b12 = Matrix::Zero(m_, k);  // indexed by full row; rows in other_rows unused
    for (int c = 0; c < k; ++c) {
        const int j = head_[general[c]];
        for (int t = cstart_[j]; t < cstart_[j + 1]; ++t) {
            const int i = crow_[t];
            if (other_index[i] >= 0)
                b22(other_index[i], c) = cval_[t];
            else
                b12(i, c) = cval_[t];
        }
    }
    Matrix b22inv;
    if (k > 0) {
        Eigen::PartialPivLU<Matrix> lu(b22);
        const double rc = lu.rcond();
        if (!(rc > 1e-14)) breakdown("singular basis (rcond " + std::to_string(rc) + ")");
        b22inv = lu.inverse();
    }
    Matrix w = k > 0 ? Matrix(b12 * b22inv) : Matrix::Zero(m_, 0);

    binv_.setZero(m_, m_);
    for (int c = 0; c < k; ++c) {
        const int p = general[c];
        for (int r = 0; r < k; ++r) binv_(p, other_rows[r]) = b22inv(c, r);
    }
    for (int i = 0; i < m_; ++i) {
        const int p = unit_pos_of_row[i];
        if (p < 0) continue;
        int row = 0;
        double sign = 1.0;
        (void)unit_column(head_[p], row, sign);
        binv_(p, i) = 1.0 / sign;
        for (int r = 0; r < k; ++r) binv_(p, other_rows[r]) = -w(i, r) / sign;
    }
}

void Simplex::recompute_basics() {
    if (m_ == 0) return;
    Vector rhs = Vector::Zero(m_);
    for (int j = 0; j < ncol_; ++j) {
        if (state_[j] == NbState::Basic || x_[j] == 0.0) continue;
        int row;
        double sign;
        if (unit_column(j, row, sign))
            rhs(row) -= sign * x_[j];
        else
            for (int t = cstart_[j]; t < cstart_[j + 1]; ++t) rhs(crow_[t]) -= cval_[t] * x_[j];
    }
    const Vector xb = binv_ * rhs;
    for (int p = 0; p < m_; ++p) x_[head_[p]] = xb(p);
}

void Simplex::recompute_duals() {
    Vector cb(m_);
    for (int p = 0; p < m_; ++p) cb(p) = cost_[head_[p]];
    pi_ = binv_.transpose() * cb;
}

double Simplex::reduced_cost(int j) const {
    int row;
    double sign;
    if (unit_column(j, row, sign)) return cost_[j] - sign * pi_(row);
    double d = cost_[j];
    for (int t = cstart_[j]; t < cstart_[j + 1]; ++t) d -= cval_[t] * pi_(crow_[t]);
    return d;
}

void Simplex::pivot(int q, int r, const Vector& alpha) {
    const double ar = alpha(r);
    // dual update: pi += (d_q / alpha_r) * row_r(Binv)
    const double dq = reduced_cost(q);
    const Vector row = binv_.row(r).transpose();
    pi_.noalias() += (dq / ar) * row;
    // Binv <- E Binv with the eta column built from alpha
    for (int c = 0; c < m_; ++c) {
        const double f = row(c) / ar;
        if (f == 0.0) continue;
        binv_.col(c).noalias() -= f * alpha;
        binv_(r, c) = f;
    }
    pos_[head_[r]] = -1;
    head_[r] = q;
    pos_[q] = r;
    state_[q] = NbState::Basic;
    if (++since_refactor_ >= opt_.refactor_interval) {
        refactor();
        recompute_basics();
        recompute_duals();
    }
}

Simplex::Step Simplex::iterate() {
    // pricing
    int q = -1;
    double dir = 0.0, best = 0.0;
    for (int j = 0; j < ncol_; ++j) {
        const NbState st = state_[j];
        if (st == NbState::Basic || lo_[j] == hi_[j]) continue;
        const double d = reduced_cost(j);
        double cand_dir = 0.0;
        if (d < -kDualTol && (st == NbState::Lower || st == NbState::Free))
            cand_dir = 1.0;
        else if (d > kDualTol && (st == NbState::Upper || st == NbState::Free))
            cand_dir = -1.0;
        if (cand_dir == 0.0) continue;
        if (bland_) {
            q = j;
            dir = cand_dir;
            break;
        }
        if (std::abs(d) > best) {
            best = std::abs(d);
            q = j;
            dir = cand_dir;
        }
    }
    if (q < 0) return Step::Optimal;

    const Vector alpha = ftran(q);
    // basic x_B changes by -dir * t * alpha
    const double range = hi_[q] - lo_[q];

    int r = -1;
    double step = kInf;
    if (bland_) {
        for (int p = 0; p < m_; ++p) {
            const double a = -dir * alpha(p);
            if (std::abs(a) < kPivotTol) continue;
            const int b = head_[p];
            double ratio;
            if (a < 0) {
                if (!std::isfinite(lo_[b])) continue;
                ratio = (x_[b] - lo_[b]) / -a;
            } else {
                if (!std::isfinite(hi_[b])) continue;
                ratio = (hi_[b] - x_[b]) / a;
            }
            ratio = std::max(ratio, 0.0);
            if (ratio < step || (ratio == step && r >= 0 && b < head_[r])) {
                step = ratio;
                r = p;
            }
        }
    } else {
        // Harris two-pass
        double bound = kInf;
        for (int p = 0; p < m_; ++p) {
            const double a = -dir * alpha(p);
            if (std::abs(a) < kPivotTol) continue;
            const int b = head_[p];
            if (a < 0) {
                if (std::isfinite(lo_[b])) bound = std::min(bound, (x_[b] - lo_[b] + kHarris) / -a);
            } else {
                if (std::isfinite(hi_[b])) bound = std::min(bound, (hi_[b] - x_[b] + kHarris) / a);
            }
        }
        if (std::isfinite(bound)) {
            double best_a = 0.0;
            for (int p = 0; p < m_; ++p) {
                const double a = -dir * alpha(p);
                if (std::abs(a) < kPivotTol) continue;
                const int b = head_[p];
                double ratio;
                if (a < 0) {
                    if (!std::isfinite(lo_[b])) continue;
                    ratio = (x_[b] - lo_[b]) / -a;
                } else {
                    if (!std::isfinite(hi_[b])) continue;
                    ratio = (hi_[b] - x_[b]) / a;
                }
                if (ratio <= bound && std::abs(a) > best_a) {
                    best_a = std::abs(a);
                    r = p;
                    step = std::max(ratio, 0.0);
                }
            }
        }
    }

    if (range <= step) {
        // bound flip of the entering variable
        if (!std::isfinite(range)) return Step::Unbounded;
        const double t = range;
        for (int p = 0; p < m_; ++p) x_[head_[p]] -= dir * t * alpha(p);
        if (dir > 0) {
            x_[q] = hi_[q];
            state_[q] = NbState::Upper;
        } else {
            x_[q] = lo_[q];
            state_[q] = NbState::Lower;
        }
        degenerate_run_ = 0;
        bland_ = false;
        ++since_refactor_;
        return Step::Moved;
    }
    if (r < 0) return Step::Unbounded;
    if (std::abs(alpha(r)) < kPivotBreakdown) breakdown("pivot below breakdown threshold");

    const double t = step;
    for (int p = 0; p < m_; ++p) x_[head_[p]] -= dir * t * alpha(p);
    x_[q] += dir * t;
    const int leaving = head_[r];
    const double a = -dir * alpha(r);
    if (a < 0) {
        x_[leaving] = lo_[leaving];
        state_[leaving] = NbState::Lower;
    } else {
        x_[leaving] = hi_[leaving];
        state_[leaving] = NbState::Upper;
    }
    if (lo_[leaving] == hi_[leaving]) state_[leaving] = NbState::Lower;
    pivot(q, r, alpha);

    if (t < 1e-12) {
        if (++degenerate_run_ >= kDegenerateSwitch) bland_ = true;
    } else {
        degenerate_run_ = 0;
        bland_ = false;
    }
    return Step::Moved;
}

Simplex::Step Simplex::optimize() {
    refactor();
    recompute_basics();
    recompute_duals();
    for (;;) {
        if (++iterations_ > opt_.max_iterations) breakdown("iteration limit reached");
        const Step s = iterate();
        if (s == Step::Moved) continue;
        // confirm against a fresh factorization before stopping
        if (since_refactor_ > 0) {
            refactor();
            recompute_basics();
            recompute_duals();
            continue;
        }
        return s;
    }
}

LpOutcome Simplex::run() {
    LpOutcome out;
    initial_basis();
    cost_.assign(ncol_, 0.0);
    bool phase1 = false;
    for (int i = 0; i < m_; ++i) {
        const int a = n_ + m_ + i;
        if (hi_[a] > 0.0) {
            cost_[a] = 1.0;
            phase1 = true;
        }
    }
    if (phase1) {
        optimize();
        double infeas = 0.0;
        for (int i = 0; i < m_; ++i) infeas += std::max(0.0, x_[n_ + m_ + i]);
        if (infeas > opt_.feastol) {
            out.status = LpStatus::Infeasible;
            out.iterations = iterations_;
            out.farkas = Vector::Zero(m_);
            const auto& rows = lp_.constraints();
            for (int i = 0; i < m_; ++i) {
                const double sign = rows[i].rel == Relation::GreaterEqual ? -1.0 : 1.0;
                double y = -sign * pi_(i);
                if (rows[i].rel != Relation::Equal && y < 0.0) y = 0.0;
                out.farkas(i) = y;
            }
            const double scale = out.farkas.size() > 0 ? out.farkas.cwiseAbs().maxCoeff() : 0.0;
            if (scale > 0.0) out.farkas /= scale;
            return out;
        }
    }

    for (int i = 0; i < m_; ++i) {
        const int a = n_ + m_ + i;
        lo_[a] = hi_[a] = 0.0;
        cost_[a] = 0.0;
        if (state_[a] != NbState::Basic) {
            x_[a] = 0.0;
            state_[a] = NbState::Lower;
        }
    }
    for (const auto& [j, c] : lp_.objective()) cost_[j] = c;
    const Step s = optimize();
    out.iterations = iterations_;
    if (s == Step::Unbounded) {
        out.status = LpStatus::Unbounded;
        return out;
    }
    out.status = LpStatus::Optimal;
    out.x = Vector::Map(x_.data(), n_);
    for (int j = 0; j < n_; ++j) out.x(j) = std::clamp(out.x(j), lo_[j], hi_[j]);
    const auto bad = verify(lp_, out.x, opt_.feastol);
    if (!bad.empty())
        breakdown("optimal point fails re-verification at " + bad.front().name + " (residual " +
                  std::to_string(bad.front().residual) + ")");
    out.objective = lp_.objective_value(out.x);
    return out;
}

}  // namespace

LpOutcome solve(const LinearProgram& lp, const SolverOptions& options) {
    Simplex simplex(lp, options);
    return simplex.run();
}

}  // namespace posimp::lp
