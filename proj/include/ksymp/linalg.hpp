#ifndef KSYMP_LINALG_HPP
#define KSYMP_LINALG_HPP

#include <optional>
#include <random>
#include <string>

#include "ksymp/metric_rewrite.hpp"

namespace ksymp {

// Rectangular matrix of expressions, row-major.
struct SymMatrix {
    std::size_t rows = 0, cols = 0;
    std::vector<Expr> a;

    SymMatrix() = default;
    SymMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c) {}

    Expr& at(std::size_t i, std::size_t j) { return a[i * cols + j]; }
    const Expr& at(std::size_t i, std::size_t j) const { return a[i * cols + j]; }
};

inline std::vector<Expr> mat_vec(const SymMatrix& m, const std::vector<Expr>& x) {
    if (x.size() != m.cols) throw std::invalid_argument("mat_vec: dimension mismatch");
    std::vector<Expr> out(m.rows);
    for (std::size_t i = 0; i < m.rows; ++i) {
        Expr s;
        for (std::size_t j = 0; j < m.cols; ++j)
            if (!m.at(i, j).is_zero() && !x[j].is_zero()) s = add(s, mul(m.at(i, j), x[j]));
        out[i] = s;
    }
    return out;
}

// ---- exact rational dense kernels (sampling machinery) ----

namespace ratmat {

using Mat = std::vector<std::vector<Rat>>;

inline std::vector<std::size_t> rref(Mat& m) {
    std::vector<std::size_t> pivots;
    if (m.empty()) return pivots;
    std::size_t r = 0, C = m[0].size();
    for (std::size_t c = 0; c < C && r < m.size(); ++c) {
        std::size_t sel = r;
        while (sel < m.size() && m[sel][c].is_zero()) ++sel;
        if (sel == m.size()) continue;
        std::swap(m[sel], m[r]);
        Rat inv = Rat(1) / m[r][c];
        for (auto& x : m[r]) x *= inv;
        for (std::size_t i = 0; i < m.size(); ++i) {
            if (i == r || m[i][c].is_zero()) continue;
            Rat f = m[i][c];
            for (std::size_t j = 0; j < C; ++j) m[i][j] -= f * m[r][j];
        }
        pivots.push_back(c);
        ++r;
    }
    return pivots;
}

inline std::size_t rank(Mat m) { return rref(m).size(); }

inline std::vector<std::vector<Rat>> nullspace(Mat m) {
    if (m.empty()) return {};
    std::size_t n = m[0].size();
    auto pivots = rref(m);
    std::vector<bool> is_pivot(n, false);
    for (auto c : pivots) is_pivot[c] = true;
    std::vector<std::vector<Rat>> basis;
    for (std::size_t f = 0; f < n; ++f) {
        if (is_pivot[f]) continue;
        std::vector<Rat> v(n, Rat(0));
        v[f] = Rat(1);
        for (std::size_t pi = 0; pi < pivots.size(); ++pi) v[pivots[pi]] = -m[pi][f];
        basis.push_back(std::move(v));
    }
    return basis;
}

inline std::optional<Mat> inverse(const Mat& m) {
    std::size_t n = m.size();
    Mat a = m;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) a[i].push_back(i == j ? Rat(1) : Rat(0));
    auto pivots = rref(a);
    if (pivots.size() != n) return std::nullopt;
    Mat inv(n, std::vector<Rat>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) inv[i][j] = a[i][n + j];
    return inv;
}

} // namespace ratmat

// Random rational point binding every variable of the given expressions.
// When the context declares a metric pair, the metric coordinates get a
// random nondegenerate symmetric value and the inverse atoms its exact
// inverse, so sampled values live on the declared variety.
inline std::map<VarId, Rat> sample_point(const std::set<VarId>& vars, const NormContext& ctx,
                                         std::mt19937_64& rng) {
    std::uniform_int_distribution<long> num(-6, 6);
    std::uniform_int_distribution<long> den(1, 3);
    auto rnd = [&] { return Rat(num(rng), den(rng)); };
    std::map<VarId, Rat> pt;
    if (ctx.metric) {
        const MetricPair& mp = *ctx.metric;
        for (;;) {
            ratmat::Mat g(mp.dim, std::vector<Rat>(mp.dim));
            for (int i = 0; i < mp.dim; ++i)
                for (int j = i; j < mp.dim; ++j) {
                    g[i][j] = rnd();
                    g[j][i] = g[i][j];
                }
            for (int i = 0; i < mp.dim; ++i) g[i][i] += Rat(i % 2 ? 7 : -7);
            auto inv = ratmat::inverse(g);
            if (!inv) continue;
            for (int i = 0; i < mp.dim; ++i)
                for (int j = i; j < mp.dim; ++j) {
                    pt[mp.g[i][j]] = g[i][j];
                    pt[mp.ginv[i][j]] = (*inv)[i][j];
                }
            break;
        }
    }
    for (VarId v : vars) {
        if (pt.count(v)) continue;
        Rat r = rnd();
        if (SymbolTable::is_atom(v) && ctx.tab &&
            ctx.invertible_heads.count(ctx.tab->atom(v).head) && r.is_zero())
            r = Rat(1);
        pt[v] = r;
    }
    return pt;
}

inline std::map<VarId, Rat> NormContext::domain_point(const std::set<VarId>& vars,
                                                      std::mt19937_64& rng) const {
    return sample_point(vars, *this, rng);
}

inline std::set<VarId> matrix_variables(const SymMatrix& m) {
    std::set<VarId> vars;
    for (const auto& e : m.a)
        for (VarId v : variables(e)) vars.insert(v);
    return vars;
}

// ---- fraction-free Gauss-Jordan (Bareiss one-step) ----

struct Echelon {
    SymMatrix m;                         // transformed matrix (may include rhs cols)
    std::vector<std::size_t> pivot_rows; // step t used (pivot_rows[t], pivot_cols[t])
    std::vector<std::size_t> pivot_cols;
    Expr det_like;                       // last pivot: determinant of the pivot minor
    std::vector<Expr> stratification;    // non-constant pivots
};

// Eliminates over columns [0, limit_cols); extra columns ride along (rhs).
// Pivot choice: fewest terms, then lowest row, then highest column, so the
// solved unknown in a tie is the latest-declared one.
inline Echelon ffgj(SymMatrix m, std::size_t limit_cols) {
    Echelon e;
    std::vector<bool> row_done(m.rows, false), col_done(limit_cols, false);
    Expr prev = Expr::constant(1);
    for (;;) {
        std::size_t bi = 0, bj = 0;
        std::size_t best_tc = SIZE_MAX;
        for (std::size_t i = 0; i < m.rows; ++i) {
            if (row_done[i]) continue;
            for (std::size_t j = 0; j < limit_cols; ++j) {
                if (col_done[j]) continue;
                std::size_t tc = m.at(i, j).term_count();
                if (tc == 0) continue;
                bool better = tc < best_tc ||
                              (tc == best_tc && (i < bi || (i == bi && j > bj)));
                if (best_tc == SIZE_MAX || better) {
                    best_tc = tc;
                    bi = i;
                    bj = j;
                }
            }
        }
        if (best_tc == SIZE_MAX) break;
        const Expr piv = m.at(bi, bj);
        for (std::size_t i = 0; i < m.rows; ++i) {
            if (i == bi) continue;
            const Expr mij = m.at(i, bj);
            for (std::size_t j = 0; j < m.cols; ++j) {
                if (j == bj) continue;
                Expr num = sub(mul(piv, m.at(i, j)), mul(mij, m.at(bi, j)));
                if (num.is_zero()) {
                    m.at(i, j) = Expr();
                    continue;
                }
                auto q = exact_divide(num, prev);
                if (!q) throw std::logic_error("ffgj: inexact Bareiss division");
                m.at(i, j) = *q;
            }
            m.at(i, bj) = Expr();
        }
        row_done[bi] = true;
        col_done[bj] = true;
        e.pivot_rows.push_back(bi);
        e.pivot_cols.push_back(bj);
        if (!piv.is_rational()) e.stratification.push_back(strip_content(piv));
        prev = piv;
    }
    // after one-step FFGJ every processed pivot entry equals the last pivot
    e.det_like = e.pivot_cols.empty() ? Expr::constant(1) : prev;
    for (std::size_t t = 0; t < e.pivot_rows.size(); ++t)
        m.at(e.pivot_rows[t], e.pivot_cols[t]) = e.det_like;
    e.m = std::move(m);
    return e;
}

// ---- generic rank with certificate ----

struct RankCertificate {
    std::size_t rank = 0;
    std::vector<std::size_t> pivot_rows, pivot_cols;
    std::optional<Expr> minor; // materialized for small certificates
    Rat minor_value;           // exact nonzero evaluation of the certifying minor
    std::vector<Expr> stratification; // pivots whose vanishing could change the rank
    std::string method;
};

namespace detail {

inline Expr bareiss_determinant(const SymMatrix& m, const std::vector<std::size_t>& rows,
                                const std::vector<std::size_t>& cols) {
    std::size_t n = rows.size();
    SymMatrix s(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) s.at(i, j) = m.at(rows[i], cols[j]);
    Expr prev = Expr::constant(1);
    for (std::size_t t = 0; t < n; ++t) {
        // pivot search within the submatrix
        std::size_t pi = t;
        while (pi < n && s.at(pi, t).is_zero()) ++pi;
        if (pi == n) return Expr();
        if (pi != t)
            for (std::size_t j = 0; j < n; ++j) {
                Expr tmp = s.at(t, j);
                s.at(t, j) = neg(s.at(pi, j));
                s.at(pi, j) = tmp;
            }
        for (std::size_t i = t + 1; i < n; ++i)
            for (std::size_t j = t + 1; j < n; ++j) {
                Expr num = sub(mul(s.at(t, t), s.at(i, j)), mul(s.at(i, t), s.at(t, j)));
                auto q = exact_divide(num, prev);
                if (!q) throw std::logic_error("bareiss_determinant: inexact division");
                s.at(i, j) = *q;
            }
        prev = s.at(t, t);
    }
    return s.at(n - 1, n - 1);
}

} // namespace detail

// Generic rank over the declared variety. Random evaluation selects pivots;
// certification is exact: the r x r minor has a nonzero exact rational
// evaluation (so it is a nonzero Expr), and cols - r kernel vectors verified
// by is_zero prove every (r+1)-minor vanishes identically.
inline RankCertificate generic_rank(const SymMatrix& m, const NormContext& ctx,
                                    std::uint64_t seed,
                                    std::vector<std::vector<Expr>>* kernel_out = nullptr);

// Scale each row by the inverse of its common unit factor (rational content
// and invertible-atom powers shared by every entry of the row). Row scaling
// by units changes neither kernel nor rank nor the consistency verdicts.
inline SymMatrix row_normalized(const SymMatrix& m, const NormContext& ctx) {
    SymMatrix out = m;
    if (!ctx.tab) return out;
    for (std::size_t i = 0; i < out.rows; ++i) {
        std::map<VarId, std::uint32_t> common;
        Rat c(0);
        bool first = true, any = false;
        for (std::size_t j = 0; j < out.cols; ++j) {
            const Expr& e = out.at(i, j);
            if (e.is_zero()) continue;
            any = true;
            for (const auto& t : e.terms()) {
                c = Rat::gcd(c, t.c);
                std::map<VarId, std::uint32_t> here;
                for (auto& p : t.m.f)
                    if (SymbolTable::is_atom(p.first) &&
                        ctx.invertible_heads.count(ctx.tab->atom(p.first).head))
                        here[p.first] = p.second;
                if (first) {
                    common = std::move(here);
                    first = false;
                } else {
                    for (auto it = common.begin(); it != common.end();) {
                        auto h = here.find(it->first);
                        if (h == here.end()) {
                            it = common.erase(it);
                        } else {
                            it->second = std::min(it->second, h->second);
                            ++it;
                        }
                    }
                }
            }
        }
        if (!any) continue;
        Mono div;
        for (auto& [v, k] : common) div.f.emplace_back(v, k);
        for (std::size_t j = 0; j < out.cols; ++j) {
            Expr e = out.at(i, j);
            if (e.is_zero()) continue;
            if (!div.f.empty()) {
                std::vector<Term> ts;
                for (const auto& t : e.terms()) ts.push_back({*mono_div(t.m, div), t.c});
                e = Expr::from_terms(std::move(ts));
            }
            if (!c.is_zero() && !c.is_one()) e = scale(e, Rat(1) / c);
            out.at(i, j) = e;
        }
    }
    return out;
}

// Kernel of m over the expression field, denominators cleared. Tries a
// constant rational kernel first (verified symbolically); falls back to
// fraction-free elimination.
inline std::vector<std::vector<Expr>> kernel_basis(const SymMatrix& m, const NormContext& ctx,
                                                   std::uint64_t seed = 0) {
    if (m.cols == 0) return {};
    if (m.rows == 0) {
        std::vector<std::vector<Expr>> basis(m.cols, std::vector<Expr>(m.cols));
        for (std::size_t j = 0; j < m.cols; ++j) basis[j][j] = Expr::constant(1);
        return basis;
    }
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
    std::set<VarId> vars = matrix_variables(m);

    auto evaluate = [&](const std::map<VarId, Rat>& pt) {
        ratmat::Mat num(m.rows, std::vector<Rat>(m.cols, Rat(0)));
        for (std::size_t i = 0; i < m.rows; ++i)
            for (std::size_t j = 0; j < m.cols; ++j)
                if (!m.at(i, j).is_zero()) num[i][j] = eval_rational(m.at(i, j), pt);
        return num;
    };

    auto verify = [&](const std::vector<Expr>& v) {
        for (std::size_t i = 0; i < m.rows; ++i) {
            Expr s;
            for (std::size_t j = 0; j < m.cols; ++j)
                if (!m.at(i, j).is_zero() && !v[j].is_zero()) s = add(s, mul(m.at(i, j), v[j]));
            if (!ctx.reduces_to_zero(s)) return false;
        }
        return true;
    };

    if (!vars.empty()) {
        auto p1 = sample_point(vars, ctx, rng);
        auto p2 = sample_point(vars, ctx, rng);
        ratmat::Mat stacked = evaluate(p1);
        std::size_t rank1 = ratmat::rank(stacked);
        for (auto& row : evaluate(p2)) stacked.push_back(row);
        auto cand = ratmat::nullspace(std::move(stacked));
        if (cand.size() == m.cols - rank1) {
            std::vector<std::vector<Expr>> basis;
            bool ok = true;
            for (auto& v : cand) {
                // clear denominators, then divide out the integer content
                mpz_class l(1), g(0);
                for (auto& x : v) mpz_lcm(l.get_mpz_t(), l.get_mpz_t(),
                                          x.raw().get_den().get_mpz_t());
                Rat scale_f{mpq_class(l)};
                for (auto& x : v) {
                    Rat s = x * scale_f;
                    mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), s.raw().get_num().get_mpz_t());
                }
                if (g != 0) scale_f = scale_f / Rat(mpq_class(g));
                std::vector<Expr> ev(m.cols);
                for (std::size_t j = 0; j < m.cols; ++j)
                    ev[j] = Expr::constant(v[j] * scale_f);
                if (!verify(ev)) {
                    ok = false;
                    break;
                }
                basis.push_back(std::move(ev));
            }
            if (ok) return basis;
        }
    } else {
        // constant matrix: rational nullspace is exact
        ratmat::Mat num(m.rows, std::vector<Rat>(m.cols, Rat(0)));
        for (std::size_t i = 0; i < m.rows; ++i)
            for (std::size_t j = 0; j < m.cols; ++j)
                if (!m.at(i, j).is_zero()) num[i][j] = m.at(i, j).rational_value();
        std::vector<std::vector<Expr>> basis;
        for (auto& v : ratmat::nullspace(std::move(num))) {
            std::vector<Expr> ev(m.cols);
            for (std::size_t j = 0; j < m.cols; ++j) ev[j] = Expr::constant(v[j]);
            basis.push_back(std::move(ev));
        }
        return basis;
    }

    // symbolic fall-back: fraction-free Gauss-Jordan, polynomial kernel vectors
    Echelon e = ffgj(row_normalized(m, ctx), m.cols);
    std::vector<bool> is_pivot(m.cols, false);
    for (auto c : e.pivot_cols) is_pivot[c] = true;
    std::vector<std::vector<Expr>> basis;
    for (std::size_t f = 0; f < m.cols; ++f) {
        if (is_pivot[f]) continue;
        std::vector<Expr> v(m.cols);
        v[f] = e.det_like;
        for (std::size_t t = 0; t < e.pivot_cols.size(); ++t)
            v[e.pivot_cols[t]] = neg(e.m.at(e.pivot_rows[t], f));
        basis.push_back(std::move(v));
    }
    for (auto& v : basis) {
        Rat c(0);
        for (auto& x : v)
            for (const auto& t : x.terms()) c = Rat::gcd(c, t.c);
        if (!c.is_zero() && !c.is_one())
            for (auto& x : v) x = scale(x, Rat(1) / c);
        if (!verify(v)) throw std::logic_error("kernel_basis: verification failed");
    }
    return basis;
}

inline RankCertificate generic_rank(const SymMatrix& m, const NormContext& ctx,
                                    std::uint64_t seed,
                                    std::vector<std::vector<Expr>>* kernel_out) {
    RankCertificate cert;
    if (m.rows == 0 || m.cols == 0) {
        cert.method = "trivial";
        return cert;
    }
    std::mt19937_64 rng(seed ^ 0xda3e39cb94b95bdbull);
    std::set<VarId> vars = matrix_variables(m);
    auto pt = sample_point(vars, ctx, rng);
    ratmat::Mat num(m.rows, std::vector<Rat>(m.cols, Rat(0)));
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j)
            if (!m.at(i, j).is_zero()) num[i][j] = eval_rational(m.at(i, j), pt);

    // pivot selection at the sample point
    ratmat::Mat work = num;
    auto piv_cols = ratmat::rref(work);
    // recover pivot rows by re-running forward elimination on a copy
    std::vector<std::size_t> piv_rows;
    {
        ratmat::Mat fw = num;
        std::vector<bool> used(fw.size(), false);
        for (auto c : piv_cols) {
            for (std::size_t i = 0; i < fw.size(); ++i) {
                if (used[i] || fw[i][c].is_zero()) continue;
                piv_rows.push_back(i);
                used[i] = true;
                for (std::size_t i2 = 0; i2 < fw.size(); ++i2) {
                    if (i2 == i || fw[i2][c].is_zero()) continue;
                    Rat f = fw[i2][c] / fw[i][c];
                    for (std::size_t j = 0; j < fw[0].size(); ++j) fw[i2][j] -= f * fw[i][j];
                }
                break;
            }
        }
    }
    std::size_t r = piv_cols.size();

    // exact lower bound: the minor determinant evaluated at the point
    if (r > 0) {
        ratmat::Mat sub(r, std::vector<Rat>(r));
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < r; ++j) sub[i][j] = num[piv_rows[i]][piv_cols[j]];
        // determinant by elimination
        Rat det(1);
        for (std::size_t t = 0; t < r; ++t) {
            std::size_t sel = t;
            while (sel < r && sub[sel][t].is_zero()) ++sel;
            if (sel == r) {
                det = Rat(0);
                break;
            }
            if (sel != t) {
                std::swap(sub[sel], sub[t]);
                det = -det;
            }
            det *= sub[t][t];
            for (std::size_t i = t + 1; i < r; ++i) {
                Rat f = sub[i][t] / sub[t][t];
                for (std::size_t j = t; j < r; ++j) sub[i][j] -= f * sub[t][j];
            }
        }
        cert.minor_value = det;
    } else {
        cert.minor_value = Rat(0);
    }

    cert.rank = r;
    cert.pivot_rows = piv_rows;
    cert.pivot_cols = piv_cols;

    // upper bound: kernel of dimension cols - r verified symbolically
    auto kb = kernel_basis(m, ctx, seed);
    if (kb.size() != m.cols - r) {
        // sampled rank disagreed with the verified kernel: trust the kernel
        cert.rank = m.cols - kb.size();
        cert.method = "kernel-corrected";
    } else {
        cert.method = "sampled+kernel";
    }
    if (kernel_out) *kernel_out = kb;

    // materialize the certifying minor when it is small
    if (cert.rank > 0 && cert.rank <= 6 && cert.rank == r)
        cert.minor = detail::bareiss_determinant(m, piv_rows, piv_cols);
    return cert;
}

// ---- parametric linear solving ----

// pivot * unknown = rhs; rhs may involve free unknowns and coordinates.
struct Determination {
    SymId unknown;
    Expr pivot;
    Expr rhs;
};

struct ParametricSolution {
    std::vector<Determination> determined;
    std::vector<SymId> free_unknowns;
    std::vector<Expr> consistency; // unknown-free conditions
};

struct LinearSystem {
    SymMatrix m;
    std::vector<Expr> rhs;
    std::vector<SymId> unknowns;
};

// Equations sum(coef_u * u) + rest = 0 become M u = -rest.
inline LinearSystem linearize(const std::vector<Expr>& eqs, const std::vector<SymId>& unknowns,
                              const SymbolTable& tab) {
    std::set<VarId> uset(unknowns.begin(), unknowns.end());
    LinearSystem sys;
    sys.unknowns = unknowns;
    sys.m = SymMatrix(eqs.size(), unknowns.size());
    sys.rhs.resize(eqs.size());
    std::map<VarId, std::size_t> col_of;
    for (std::size_t j = 0; j < unknowns.size(); ++j) col_of[unknowns[j]] = j;
    for (std::size_t i = 0; i < eqs.size(); ++i) {
        std::vector<Term> rest;
        std::map<std::size_t, std::vector<Term>> coefs;
        for (const auto& t : eqs[i].terms()) {
            int hits = 0;
            VarId uv = 0;
            for (auto& p : t.m.f) {
                if (uset.count(p.first)) {
                    hits += p.second;
                    uv = p.first;
                }
            }
            if (hits == 0) {
                rest.push_back(t);
            } else if (hits == 1) {
                Term r = t;
                Mono m2;
                for (auto& p : t.m.f)
                    if (p.first != uv) m2.f.push_back(p);
                r.m = std::move(m2);
                coefs[col_of[uv]].push_back(std::move(r));
            } else {
                throw std::invalid_argument("nonlinear occurrence of an unknown (" +
                                            tab.var_name(uv) + ")");
            }
        }
        for (auto& [j, ts] : coefs) sys.m.at(i, j) = Expr::from_terms(std::move(ts));
        sys.rhs[i] = neg(Expr::from_terms(std::move(rest)));
    }
    return sys;
}

// Fraction-free solve; rows whose unknown coefficients eliminate to zero
// contribute their residual as a consistency condition.
inline ParametricSolution solve_parametric(const SymMatrix& m, const std::vector<Expr>& rhs,
                                           const std::vector<SymId>& unknowns,
                                           const NormContext& ctx) {
    if (rhs.size() != m.rows || unknowns.size() != m.cols)
        throw std::invalid_argument("solve_parametric: dimension mismatch");
    {
        std::set<VarId> uset(unknowns.begin(), unknowns.end());
        for (const auto& e : m.a)
            for (VarId v : variables(e))
                if (uset.count(v))
                    throw std::invalid_argument("solve_parametric: coefficient depends on unknown");
    }

    SymMatrix aug(m.rows, m.cols + 1);
    for (std::size_t i = 0; i < m.rows; ++i) {
        for (std::size_t j = 0; j < m.cols; ++j) aug.at(i, j) = m.at(i, j);
        aug.at(i, m.cols) = rhs[i];
    }
    Echelon e = ffgj(std::move(aug), m.cols);

    ParametricSolution sol;
    std::vector<bool> is_pivot_col(m.cols, false), is_pivot_row(m.rows, false);
    for (auto c : e.pivot_cols) is_pivot_col[c] = true;
    for (auto r : e.pivot_rows) is_pivot_row[r] = true;

    for (std::size_t i = 0; i < m.rows; ++i) {
        if (is_pivot_row[i]) continue;
        Expr res = ctx.simplify(e.m.at(i, m.cols));
        if (!res.is_zero()) sol.consistency.push_back(res);
    }
    for (std::size_t j = 0; j < m.cols; ++j)
        if (!is_pivot_col[j]) sol.free_unknowns.push_back(unknowns[j]);

    for (std::size_t t = 0; t < e.pivot_rows.size(); ++t) {
        std::size_t i = e.pivot_rows[t], c = e.pivot_cols[t];
        Expr num = e.m.at(i, m.cols);
        for (std::size_t j = 0; j < m.cols; ++j) {
            if (j == c || e.m.at(i, j).is_zero()) continue;
            num = sub(num, mul(e.m.at(i, j), Expr::var(unknowns[j])));
        }
        Expr piv = e.det_like;
        auto q = exact_divide(num, piv);
        if (q)
            sol.determined.push_back({unknowns[c], Expr::constant(1), *q});
        else
            sol.determined.push_back({unknowns[c], piv, num}); // pseudo form: piv*u = rhs
    }
    // deterministic order: by unknown id
    std::sort(sol.determined.begin(), sol.determined.end(),
              [](const Determination& a, const Determination& b) { return a.unknown < b.unknown; });
    return sol;
}

inline ParametricSolution solve_equations(const std::vector<Expr>& eqs,
                                          const std::vector<SymId>& unknowns,
                                          const NormContext& ctx) {
    LinearSystem sys = linearize(eqs, unknowns, *ctx.tab);
    return solve_parametric(sys.m, sys.rhs, sys.unknowns, ctx);
}

} // namespace ksymp

#endif // KSYMP_LINALG_HPP
