#ifndef KSYMP_METRIC_REWRITE_HPP
#define KSYMP_METRIC_REWRITE_HPP

#include <optional>
#include <set>

#include "ksymp/expr.hpp"

namespace ksymp {

// A declared metric / inverse-metric pair: coordinate symbols g[a][b] and
// argument-free atoms ginv[a][b], both stored symmetrically. The relation
// sum_b ginv[a][b]*g[b][c] = delta(a,c) is applied as an oriented rewrite.
struct MetricPair {
    int dim = 0;
    std::vector<std::vector<SymId>> g;
    std::vector<std::vector<VarId>> ginv;

    Expr minor_det(const std::vector<int>& rows, const std::vector<int>& cols) const {
        if (rows.empty()) return Expr::constant(1);
        Expr acc;
        for (std::size_t j = 0; j < cols.size(); ++j) {
            std::vector<int> r2(rows.begin() + 1, rows.end());
            std::vector<int> c2;
            for (std::size_t t = 0; t < cols.size(); ++t)
                if (t != j) c2.push_back(cols[t]);
            Expr term = mul(Expr::var(g[std::min(rows[0], cols[j])][std::max(rows[0], cols[j])]),
                            minor_det(r2, c2));
            acc = (j % 2 == 0) ? add(acc, term) : sub(acc, term);
        }
        return acc;
    }

    Expr det_expr() const {
        std::vector<int> all;
        for (int i = 0; i < dim; ++i) all.push_back(i);
        return minor_det(all, all);
    }

    // cofactor polynomial: det * ginv[a][b] on the invertible locus
    Expr adjugate_entry(int a, int b) const {
        std::vector<int> rows, cols;
        for (int i = 0; i < dim; ++i) {
            if (i != b) rows.push_back(i);
            if (i != a) cols.push_back(i);
        }
        Expr m = minor_det(rows, cols);
        return ((a + b) % 2 == 0) ? m : neg(m);
    }

    std::optional<std::pair<int, int>> g_indices(VarId v) const {
        if (SymbolTable::is_atom(v)) return std::nullopt;
        for (int a = 0; a < dim; ++a)
            for (int b = a; b < dim; ++b)
                if (g[a][b] == v) return std::make_pair(a, b);
        return std::nullopt;
    }
    std::optional<std::pair<int, int>> ginv_indices(VarId v) const {
        if (!SymbolTable::is_atom(v)) return std::nullopt;
        for (int a = 0; a < dim; ++a)
            for (int b = a; b < dim; ++b)
                if (ginv[a][b] == v) return std::make_pair(a, b);
        return std::nullopt;
    }
};

namespace detail {

// One rewrite step on a monomial: find a factor pair ginv[x][D] * g[D][y]
// with D = dim-1 and expand it to delta(x,y) - sum_{b<D} ginv[x][b]*g[b][y].
// Returns true if a pattern fired; appends replacement terms to out.
inline bool rewrite_term_once(const Term& t, const MetricPair& mp, std::vector<Term>& out) {
    const int D = mp.dim - 1;
    int x = -1, y = -1;
    std::size_t fi_inv = 0, fi_g = 0;
    bool found = false;
    for (std::size_t i = 0; i < t.m.f.size() && !found; ++i) {
        auto gi = mp.ginv_indices(t.m.f[i].first);
        if (!gi || (gi->first != D && gi->second != D)) continue;
        int xc = gi->first == D ? gi->second : gi->first;
        for (std::size_t j = 0; j < t.m.f.size(); ++j) {
            auto gg = mp.g_indices(t.m.f[j].first);
            if (!gg || (gg->first != D && gg->second != D)) continue;
            x = xc;
            y = gg->first == D ? gg->second : gg->first;
            fi_inv = i;
            fi_g = j;
            found = true;
            break;
        }
    }
    if (!found) return false;

    Mono rest;
    for (std::size_t i = 0; i < t.m.f.size(); ++i) {
        auto [v, e] = t.m.f[i];
        if (i == fi_inv) --e;
        if (i == fi_g) --e;
        if (e) rest.f.emplace_back(v, e);
    }
    if (x == y) out.push_back({rest, t.c});
    for (int b = 0; b < D; ++b) {
        Mono m = rest;
        VarId vi = mp.ginv[std::min(x, b)][std::max(x, b)];
        SymId vg = mp.g[std::min(b, y)][std::max(b, y)];
        // merge the two extra factors keeping the monomial sorted
        Mono extra;
        if (vi == static_cast<VarId>(vg)) {
            extra.f.emplace_back(vi, 2);
        } else if (vi < static_cast<VarId>(vg)) {
            extra.f.emplace_back(vi, 1);
            extra.f.emplace_back(vg, 1);
        } else {
            extra.f.emplace_back(vg, 1);
            extra.f.emplace_back(vi, 1);
        }
        out.push_back({mono_mul(m, extra), -t.c});
    }
    return true;
}

} // namespace detail

// Eliminate contractions of the inverse-metric atoms against the metric
// coordinates. Complete sums sum_b ginv[a][b]*g[b][c] collapse to deltas;
// terminates because every step removes one top-index occurrence from the
// inverse-atom factors of the affected monomial.
inline Expr rewrite_inverse_metric(const Expr& e, const MetricPair& mp) {
    if (mp.dim == 0) return e;
    Expr cur = e;
    for (;;) {
        bool fired = false;
        std::vector<Term> next;
        next.reserve(cur.term_count() * 2);
        for (const auto& t : cur.terms()) {
            if (detail::rewrite_term_once(t, mp, next))
                fired = true;
            else
                next.push_back(t);
        }
        if (!fired) return cur;
        cur = Expr::from_terms(std::move(next));
    }
}

// Divide out atom factors common to every term whose heads are declared
// invertible (EP's rho and inverse-metric atoms).
inline Expr strip_invertible_atoms(const Expr& e, const std::set<SymId>& invertible_heads,
                                   const SymbolTable& tab) {
    if (e.is_zero() || invertible_heads.empty()) return e;
    std::map<VarId, std::uint32_t> common;
    bool first = true;
    for (const auto& t : e.terms()) {
        std::map<VarId, std::uint32_t> here;
        for (auto& p : t.m.f) {
            if (SymbolTable::is_atom(p.first) &&
                invertible_heads.count(tab.atom(p.first).head))
                here[p.first] = p.second;
        }
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
        if (common.empty()) return e;
    }
    Mono div;
    for (auto& [v, k] : common) div.f.emplace_back(v, k);
    std::vector<Term> out;
    for (const auto& t : e.terms()) out.push_back({*mono_div(t.m, div), t.c});
    return Expr::from_terms(std::move(out));
}

// Complete zero test modulo the inverse-metric relation: substitute every
// inverse atom by the adjugate polynomial and homogenize with powers of the
// determinant. The result is the zero polynomial exactly when e vanishes
// wherever the metric is invertible.
inline bool is_zero_cleared(const Expr& e, const MetricPair& mp, const SymbolTable& tab) {
    (void)tab;
    if (e.is_zero()) return true;
    unsigned max_deg = 0;
    auto gi_degree = [&](const Mono& m) {
        unsigned d = 0;
        for (auto& p : m.f)
            if (mp.ginv_indices(p.first)) d += p.second;
        return d;
    };
    for (const auto& t : e.terms()) max_deg = std::max(max_deg, gi_degree(t.m));
    if (max_deg == 0) return false; // no atoms left: already canonical
    Expr det = mp.det_expr();
    std::map<VarId, Expr> adj;
    for (int a = 0; a < mp.dim; ++a)
        for (int b = a; b < mp.dim; ++b) adj[mp.ginv[a][b]] = mp.adjugate_entry(a, b);
    // bucket terms by their inverse-atom degree, then Horner in det
    std::vector<Expr> bucket(max_deg + 1);
    for (const auto& t : e.terms()) {
        Expr prod = Expr::constant(t.c);
        unsigned d = gi_degree(t.m);
        Mono rest;
        for (auto& p : t.m.f) {
            auto it = adj.find(p.first);
            if (it == adj.end())
                rest.f.push_back(p);
            else
                prod = mul(prod, pow(it->second, p.second));
        }
        bucket[d] = add(bucket[d], mul_mono(prod, rest, Rat(1)));
    }
    // acc = sum_d bucket[d] * det^(max_deg - d), evaluated Horner style
    Expr acc = bucket[0];
    for (unsigned d = 1; d <= max_deg; ++d) acc = add(mul(acc, det), bucket[d]);
    return acc.is_zero();
}

// Normalization context shared by the linear algebra and constraint layers.
struct NormContext {
    const SymbolTable* tab = nullptr;
    const DerivativeRuleTable* rules = nullptr;
    std::set<SymId> invertible_heads;
    std::optional<MetricPair> metric;

    Expr simplify(const Expr& e) const {
        Expr r = e;
        if (metric) r = rewrite_inverse_metric(r, *metric);
        if (tab) r = strip_invertible_atoms(r, invertible_heads, *tab);
        return strip_content(r);
    }
    bool reduces_to_zero(const Expr& e) const {
        Expr r = simplify(e);
        if (r.is_zero()) return true;
        if (metric && tab) return zero_on_domain(r);
        return false;
    }

    // Zero test modulo the inverse-metric relation. A nonzero exact value at
    // an on-variety sample point settles the common case; only candidates
    // that vanish at every sample pay for the adjugate clearing.
    bool zero_on_domain(const Expr& r) const {
        if (r.is_zero()) return true;
        if (!metric || !tab) return false;
        std::mt19937_64 rng(0x51ca1a5ull);
        for (int t = 0; t < 3; ++t) {
            std::map<VarId, Rat> pt = domain_point(variables(r), rng);
            if (!eval_rational(r, pt).is_zero()) return false;
        }
        return is_zero_cleared(r, *metric, *tab);
    }

    // Random rational point with the inverse atoms bound to the exact
    // inverse of the sampled metric.
    std::map<VarId, Rat> domain_point(const std::set<VarId>& vars, std::mt19937_64& rng) const;
};

} // namespace ksymp

#endif // KSYMP_METRIC_REWRITE_HPP
