#ifndef KSYMP_CONSTRAINTS_HPP
#define KSYMP_CONSTRAINTS_HPP

#include <functional>
#include <string>

#include "ksymp/linalg.hpp"

namespace ksymp {

enum class ConstraintClass : std::uint8_t { Dynamical, Sopde, Integrability };

inline const char* to_string(ConstraintClass c) {
    switch (c) {
        case ConstraintClass::Dynamical: return "dynamical";
        case ConstraintClass::Sopde: return "sopde";
        default: return "integrability";
    }
}

struct Constraint {
    Expr expr; // normalized: simplified, content-stripped
    int generation = 1;
    ConstraintClass klass = ConstraintClass::Dynamical;
    std::string origin;
};

// A constraint solved for one coordinate: pivot * coord = rhs, with rhs and
// pivot free of every solved coordinate. Rational (or exactly divisible)
// pivots are normalized to 1; polynomial pivots stay and reduction goes
// through pseudo-division, which is sound wherever the pivot does not vanish
// (recorded as a stratification warning).
struct SolvedRelation {
    SymId coord = 0;
    Expr pivot;
    Expr rhs;
    std::size_t constraint_index = 0; // which constraint produced it
};

class ConstraintSet {
public:
    explicit ConstraintSet(NormContext ctx) : ctx_(std::move(ctx)) {}

    enum class InsertResult { Zero, Added, Contradiction };

    const std::vector<Constraint>& constraints() const { return constraints_; }
    const std::vector<SolvedRelation>& relations() const { return relations_; }
    const std::vector<std::size_t>& residuals() const { return residual_indices_; }
    const std::vector<Expr>& pivot_warnings() const { return pivot_warnings_; }
    bool contradictory() const { return contradictory_; }
    const NormContext& ctx() const { return ctx_; }

    // Pseudo-reduction modulo the solved relations, followed by unit
    // normalization and division by known generically-nonzero pivots.
    Expr reduce(const Expr& f) const {
        Expr r = f;
        for (const auto& rel : relations_) r = eliminate(r, rel);
        r = ctx_.simplify(r);
        r = divide_known_pivots(r);
        return r;
    }

    bool reduces_to_zero(const Expr& f) const {
        Expr r = reduce(f);
        if (r.is_zero()) return true;
        if (ctx_.metric && ctx_.zero_on_domain(r)) return true;
        // residuals are matched syntactically after normalization
        for (std::size_t i : residual_indices_)
            if (r == constraints_[i].expr) return true;
        return false;
    }

    InsertResult insert(Constraint c) {
        InsertResult r = insert_impl(std::move(c));
        int guard = 0;
        while (needs_rebuild_) {
            if (++guard > 32) throw std::logic_error("constraint set failed to triangularize");
            rebuild();
        }
        if (contradictory_) return InsertResult::Contradiction;
        return r;
    }

    // Exact substitutions only (unit pivots); used for evaluating families
    // and sampling points on the locus.
    std::map<VarId, Expr> substitution_map() const {
        std::map<VarId, Expr> m;
        for (const auto& rel : relations_)
            if (rel.pivot == Expr::constant(1)) m[rel.coord] = rel.rhs;
        return m;
    }

    // Random rational point satisfying the normal form; nullopt if residual
    // constraints cannot be satisfied by sampling.
    std::optional<std::map<VarId, Rat>> sample_on_locus(const std::set<VarId>& vars,
                                                        std::mt19937_64& rng,
                                                        int attempts = 32) const {
        for (int t = 0; t < attempts; ++t) {
            std::set<VarId> free_vars = vars;
            for (const auto& rel : relations_) free_vars.erase(rel.coord);
            std::map<VarId, Rat> pt = sample_point(free_vars, ctx_, rng);
            bool ok = true;
            for (const auto& rel : relations_) {
                Rat pv = eval_rational(rel.pivot, pt);
                if (pv.is_zero()) {
                    ok = false;
                    break;
                }
                pt[rel.coord] = eval_rational(rel.rhs, pt) / pv;
            }
            if (!ok) continue;
            for (std::size_t i : residual_indices_)
                if (!eval_rational(constraints_[i].expr, pt).is_zero()) {
                    ok = false;
                    break;
                }
            if (ok) return pt;
        }
        return std::nullopt;
    }

private:
    NormContext ctx_;
    std::vector<Constraint> constraints_;
    std::vector<SolvedRelation> relations_;
    std::vector<std::size_t> residual_indices_;
    std::vector<Expr> pivot_warnings_;
    bool contradictory_ = false;
    bool needs_rebuild_ = false;

    InsertResult insert_impl(Constraint c) {
        Expr e = reduce(c.expr);
        if (e.is_zero()) return InsertResult::Zero;
        if (ctx_.metric && ctx_.zero_on_domain(e)) return InsertResult::Zero;
        for (std::size_t i : residual_indices_)
            if (e == constraints_[i].expr) return InsertResult::Zero;
        if (e.is_rational()) {
            contradictory_ = true;
            c.expr = e;
            c.origin += " [contradiction]";
            constraints_.push_back(std::move(c));
            return InsertResult::Contradiction;
        }
        c.expr = e;
        std::size_t idx = constraints_.size();
        constraints_.push_back(c);
        if (auto rel = solve_for_coordinate(e, idx)) {
            retriangularize(*rel);
            relations_.push_back(std::move(*rel));
        } else {
            residual_indices_.push_back(idx);
        }
        return InsertResult::Added;
    }

    void rebuild() {
        needs_rebuild_ = false;
        auto old = std::move(constraints_);
        constraints_.clear();
        relations_.clear();
        residual_indices_.clear();
        contradictory_ = false;
        for (auto& c : old) insert_impl(std::move(c));
    }

    // Eliminate rel.coord from f by pseudo-division against pivot*y = rhs.
    static Expr eliminate(Expr f, const SolvedRelation& rel) {
        unsigned d = degree_in(f, rel.coord);
        if (d == 0) return f;
        bool unit = rel.pivot == Expr::constant(1);
        while (d > 0) {
            auto parts = collect_in(f, rel.coord);
            Expr lead = parts.count(d) ? parts[d] : Expr();
            // f = lead*y^d + rest ; pivot*f -> lead*y^(d-1)*rhs + pivot*rest
            Expr rest;
            for (auto& [k, ce] : parts) {
                if (k == d) continue;
                rest = add(rest, mul_mono(ce, power_mono(rel.coord, k), Rat(1)));
            }
            Expr repl = mul(lead, rel.rhs);
            if (d > 1) repl = mul_mono(repl, power_mono(rel.coord, d - 1), Rat(1));
            f = unit ? add(rest, repl) : add(mul(rel.pivot, rest), repl);
            d = degree_in(f, rel.coord);
        }
        return f;
    }

    static Mono power_mono(VarId v, unsigned e) {
        Mono m;
        if (e) m.f.emplace_back(v, e);
        return m;
    }

    bool is_unit(const Expr& e) const {
        if (e.is_rational()) return true;
        if (e.term_count() != 1 || !ctx_.tab) return false;
        for (auto& p : e.terms()[0].m.f) {
            if (!SymbolTable::is_atom(p.first)) return false;
            if (!ctx_.invertible_heads.count(ctx_.tab->atom(p.first).head)) return false;
        }
        return true;
    }

    // Solve e for the latest chart coordinate in which it is linear,
    // preferring coordinates with unit coefficients.
    std::optional<SolvedRelation> solve_for_coordinate(const Expr& e, std::size_t idx) {
        std::optional<SolvedRelation> best;
        bool best_unit = false;
        for (VarId v : variables(e)) {
            if (SymbolTable::is_atom(v)) continue;
            if (ctx_.tab) {
                SymKind kind = ctx_.tab->info(v).kind;
                if (kind != SymKind::Coordinate && kind != SymKind::Velocity) continue;
            }
            if (degree_in(e, v) != 1) continue;
            auto parts = collect_in(e, v);
            Expr coef = parts[1];
            Expr rest = parts.count(0) ? parts[0] : Expr();
            bool unit = is_unit(coef);
            bool better = !best || (unit && !best_unit) ||
                          (unit == best_unit && v > best->coord);
            if (!better) continue;
            SolvedRelation rel;
            rel.coord = v;
            rel.constraint_index = idx;
            if (auto q = exact_divide(neg(rest), coef)) {
                rel.pivot = Expr::constant(1);
                rel.rhs = *q;
            } else {
                rel.pivot = coef;
                rel.rhs = neg(rest);
            }
            best = rel;
            best_unit = unit;
        }
        if (best && !is_unit(best->pivot)) note_pivot(best->pivot);
        return best;
    }

    void note_pivot(const Expr& p) {
        Expr s = strip_content(p);
        for (const auto& w : pivot_warnings_)
            if (w == s) return;
        pivot_warnings_.push_back(s);
    }

    Expr divide_known_pivots(Expr e) const {
        if (e.is_zero()) return e;
        for (const auto& p : pivot_warnings_) {
            for (;;) {
                auto q = exact_divide(e, p);
                if (!q) break;
                e = *q;
            }
        }
        return strip_content(e);
    }

    // Keep older relations free of the newly solved coordinate.
    void retriangularize(const SolvedRelation& fresh) {
        for (auto& rel : relations_) {
            if (!depends_on(rel.rhs, fresh.coord) && !depends_on(rel.pivot, fresh.coord))
                continue;
            Expr expr = sub(mul(rel.pivot, Expr::var(rel.coord)), rel.rhs);
            expr = eliminate(expr, fresh);
            expr = ctx_.simplify(expr);
            auto parts = collect_in(expr, rel.coord);
            if (degree_in(expr, rel.coord) != 1 || parts[1].is_zero()) {
                needs_rebuild_ = true; // degenerated; rebuilt from scratch by insert()
                return;
            }
            Expr coef = parts[1];
            Expr rest = parts.count(0) ? parts[0] : Expr();
            auto q = exact_divide(neg(rest), coef);
            if (q) {
                rel.pivot = Expr::constant(1);
                rel.rhs = *q;
            } else {
                rel.pivot = coef;
                rel.rhs = neg(rest);
                if (!is_unit(coef)) note_pivot(coef);
            }
        }
    }
};

// Family-level insertion. Candidate constraints that are jointly linear in a
// set of coordinates are first brought to echelon form by a fraction-free
// Gauss-Jordan pass; echelon rows whose entries are exactly divisible by the
// pivot turn into unit-pivot constraints (this recovers rational
// presentations whenever the family's span is defined over the rationals).
// The original candidates are then inserted as usual, deduplicating against
// the normalized rows.
struct FamilyInsertStats {
    std::size_t added = 0;
    bool contradiction = false;
};

inline FamilyInsertStats insert_linear_family(
    ConstraintSet& cs, const std::vector<Expr>& candidates, int generation,
    const std::string& origin_prefix,
    const std::function<ConstraintClass(const Expr&)>& classify_fn) {
    FamilyInsertStats stats;
    std::vector<Expr> reduced;
    for (const auto& e : candidates) {
        Expr r = cs.reduce(e);
        if (!r.is_zero()) reduced.push_back(std::move(r));
    }
    auto insert_one = [&](Expr e, const std::string& origin) {
        Constraint c{std::move(e), generation, ConstraintClass::Dynamical, origin};
        c.klass = classify_fn(c.expr);
        auto res = cs.insert(std::move(c));
        if (res == ConstraintSet::InsertResult::Added) ++stats.added;
        if (res == ConstraintSet::InsertResult::Contradiction) {
            ++stats.added;
            stats.contradiction = true;
        }
        return res;
    };

    if (reduced.size() > 1 && cs.ctx().tab) {
        const SymbolTable& tab = *cs.ctx().tab;
        // columns: coordinates in which the whole family is jointly linear
        std::set<VarId> cols;
        for (const auto& e : reduced)
            for (VarId v : variables(e))
                if (!SymbolTable::is_atom(v)) {
                    SymKind k = tab.info(v).kind;
                    if (k == SymKind::Coordinate || k == SymKind::Velocity) cols.insert(v);
                }
        for (bool changed = true; changed;) {
            changed = false;
            for (const auto& e : reduced)
                for (const auto& t : e.terms()) {
                    unsigned hits = 0;
                    for (auto& p : t.m.f)
                        if (cols.count(p.first)) hits += p.second;
                    if (hits >= 2) {
                        for (auto& p : t.m.f)
                            if (cols.erase(p.first)) changed = true;
                    }
                }
        }
        if (!cols.empty()) {
            std::vector<VarId> col_list(cols.begin(), cols.end());
            std::map<VarId, std::size_t> col_of;
            for (std::size_t j = 0; j < col_list.size(); ++j) col_of[col_list[j]] = j;
            SymMatrix m(reduced.size(), col_list.size() + 1);
            for (std::size_t i = 0; i < reduced.size(); ++i) {
                Expr rest = reduced[i];
                for (std::size_t j = 0; j < col_list.size(); ++j) {
                    auto parts = collect_in(rest, col_list[j]);
                    if (parts.count(1)) {
                        m.at(i, j) = parts[1];
                        rest = parts.count(0) ? parts[0] : Expr();
                    }
                }
                m.at(i, col_list.size()) = rest;
            }
            Echelon ech = ffgj(std::move(m), col_list.size());
            for (std::size_t t = 0; t < ech.pivot_rows.size(); ++t) {
                std::size_t row = ech.pivot_rows[t];
                const Expr& piv = ech.det_like;
                bool divisible = true;
                std::vector<Expr> entries(col_list.size() + 1);
                for (std::size_t j = 0; j <= col_list.size() && divisible; ++j) {
                    const Expr& e = ech.m.at(row, j);
                    if (e.is_zero()) continue;
                    auto q = exact_divide(e, piv);
                    if (!q)
                        divisible = false;
                    else
                        entries[j] = *q;
                }
                if (!divisible) continue;
                Expr expr = entries[col_list.size()];
                for (std::size_t j = 0; j < col_list.size(); ++j)
                    if (!entries[j].is_zero())
                        expr = add(expr, mul(entries[j], Expr::var(col_list[j])));
                if (expr.is_zero()) continue;
                insert_one(std::move(expr),
                           origin_prefix + "#" + std::to_string(t + 1));
                if (stats.contradiction) return stats;
            }
        }
    }

    for (std::size_t i = 0; i < reduced.size(); ++i) {
        insert_one(reduced[i], origin_prefix + "[" + std::to_string(i + 1) + "]");
        if (stats.contradiction) return stats;
    }
    return stats;
}

// Acceptance-style equivalence: every member of each family reduces to zero
// modulo the other family's normal form (up to rational scaling and unit
// factors, which normalization absorbs).
inline bool mutually_reducible(const std::vector<Expr>& A, const std::vector<Expr>& B,
                               const NormContext& ctx, std::string* why = nullptr) {
    auto one_way = [&](const std::vector<Expr>& from, const std::vector<Expr>& to,
                       const char* tag) {
        ConstraintSet cs(ctx);
        for (std::size_t i = 0; i < to.size(); ++i)
            cs.insert({ctx.simplify(to[i]), 1, ConstraintClass::Dynamical,
                       "family " + std::to_string(i)});
        for (std::size_t i = 0; i < from.size(); ++i) {
            if (!cs.reduces_to_zero(from[i])) {
                if (why)
                    *why = std::string(tag) + ": member " + std::to_string(i) +
                           " does not reduce";
                return false;
            }
        }
        return true;
    };
    return one_way(A, B, "A mod B") && one_way(B, A, "B mod A");
}

} // namespace ksymp

#endif // KSYMP_CONSTRAINTS_HPP
