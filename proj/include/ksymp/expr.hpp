#ifndef KSYMP_EXPR_HPP
#define KSYMP_EXPR_HPP

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <vector>

#include "ksymp/rational.hpp"
#include "ksymp/symbols.hpp"

namespace ksymp {

// Monomial: sorted (var, exponent) factors, var ids ascending.
struct Mono {
    std::vector<std::pair<VarId, std::uint32_t>> f;

    unsigned degree() const {
        unsigned d = 0;
        for (auto& p : f) d += p.second;
        return d;
    }
    bool is_one() const { return f.empty(); }
    std::uint32_t exponent_of(VarId v) const {
        for (auto& p : f)
            if (p.first == v) return p.second;
        return 0;
    }
    bool operator==(const Mono& o) const { return f == o.f; }
};

// Degree-lexicographic order on the fixed variable enumeration: compare total
// degree, then the first differing exponent scanning var ids ascending
// (higher exponent on the earlier variable wins).
inline int mono_cmp(const Mono& a, const Mono& b) {
    unsigned da = a.degree(), db = b.degree();
    if (da != db) return da < db ? -1 : 1;
    std::size_t i = 0, j = 0;
    while (i < a.f.size() && j < b.f.size()) {
        if (a.f[i].first != b.f[j].first)
            return a.f[i].first < b.f[j].first ? 1 : -1;
        if (a.f[i].second != b.f[j].second)
            return a.f[i].second > b.f[j].second ? 1 : -1;
        ++i, ++j;
    }
    if (i < a.f.size()) return 1;
    if (j < b.f.size()) return -1;
    return 0;
}

struct MonoLess {
    bool operator()(const Mono& a, const Mono& b) const { return mono_cmp(a, b) < 0; }
};

inline Mono mono_mul(const Mono& a, const Mono& b) {
    Mono r;
    r.f.reserve(a.f.size() + b.f.size());
    std::size_t i = 0, j = 0;
    while (i < a.f.size() && j < b.f.size()) {
        if (a.f[i].first == b.f[j].first) {
            r.f.emplace_back(a.f[i].first, a.f[i].second + b.f[j].second);
            ++i, ++j;
        } else if (a.f[i].first < b.f[j].first) {
            r.f.push_back(a.f[i++]);
        } else {
            r.f.push_back(b.f[j++]);
        }
    }
    for (; i < a.f.size(); ++i) r.f.push_back(a.f[i]);
    for (; j < b.f.size(); ++j) r.f.push_back(b.f[j]);
    return r;
}

// a / b when b divides a; nullopt otherwise.
inline std::optional<Mono> mono_div(const Mono& a, const Mono& b) {
    Mono r;
    std::size_t i = 0;
    for (auto& q : b.f) {
        while (i < a.f.size() && a.f[i].first < q.first) r.f.push_back(a.f[i++]);
        if (i >= a.f.size() || a.f[i].first != q.first || a.f[i].second < q.second)
            return std::nullopt;
        if (a.f[i].second > q.second) r.f.emplace_back(q.first, a.f[i].second - q.second);
        ++i;
    }
    for (; i < a.f.size(); ++i) r.f.push_back(a.f[i]);
    return r;
}

struct Term {
    Mono m;
    Rat c;
};

// Immutable expression in canonical form: terms sorted descending, nonzero
// coefficients only. The empty term list is the zero expression.
class Expr {
public:
    Expr() = default;

    static Expr constant(const Rat& c) {
        if (c.is_zero()) return Expr();
        std::vector<Term> t;
        t.push_back({Mono{}, c});
        return Expr(std::move(t));
    }
    static Expr constant(long n) { return constant(Rat(n)); }

    static Expr var(VarId v) {
        std::vector<Term> t;
        Mono m;
        m.f.emplace_back(v, 1);
        t.push_back({std::move(m), Rat(1)});
        return Expr(std::move(t));
    }

    static Expr from_terms(std::vector<Term> terms) {
        std::map<Mono, Rat, MonoLess> acc;
        for (auto& t : terms) {
            if (t.c.is_zero()) continue;
            auto [it, fresh] = acc.emplace(std::move(t.m), t.c);
            if (!fresh) {
                it->second += t.c;
                if (it->second.is_zero()) acc.erase(it);
            }
        }
        std::vector<Term> out;
        out.reserve(acc.size());
        for (auto it = acc.rbegin(); it != acc.rend(); ++it) out.push_back({it->first, it->second});
        return Expr(std::move(out));
    }

    bool is_zero() const { return !terms_ || terms_->empty(); }
    std::size_t term_count() const { return terms_ ? terms_->size() : 0; }
    const std::vector<Term>& terms() const {
        static const std::vector<Term> empty;
        return terms_ ? *terms_ : empty;
    }

    bool is_rational() const {
        return is_zero() || (term_count() == 1 && terms()[0].m.is_one());
    }
    Rat rational_value() const {
        if (is_zero()) return Rat(0);
        if (!is_rational()) throw std::logic_error("Expr: not a rational constant");
        return terms()[0].c;
    }

    bool operator==(const Expr& o) const {
        if (terms_ == o.terms_) return true;
        const auto& a = terms();
        const auto& b = o.terms();
        if (a.size() != b.size()) return false;
        for (std::size_t i = 0; i < a.size(); ++i)
            if (!(a[i].c == b[i].c) || !(a[i].m == b[i].m)) return false;
        return true;
    }
    bool operator!=(const Expr& o) const { return !(*this == o); }

private:
    explicit Expr(std::vector<Term> t)
        : terms_(t.empty() ? nullptr : std::make_shared<const std::vector<Term>>(std::move(t))) {}

    std::shared_ptr<const std::vector<Term>> terms_;

    friend Expr add(const Expr&, const Expr&);
    friend Expr neg(const Expr&);
    friend Expr mul(const Expr&, const Expr&);
    friend Expr scale(const Expr&, const Rat&);
    friend Expr mul_mono(const Expr&, const Mono&, const Rat&);
};

inline Expr add(const Expr& a, const Expr& b) {
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    const auto& x = a.terms();
    const auto& y = b.terms();
    std::vector<Term> out;
    out.reserve(x.size() + y.size());
    std::size_t i = 0, j = 0;
    while (i < x.size() && j < y.size()) {
        int c = mono_cmp(x[i].m, y[j].m);
        if (c > 0) {
            out.push_back(x[i++]);
        } else if (c < 0) {
            out.push_back(y[j++]);
        } else {
            Rat s = x[i].c + y[j].c;
            if (!s.is_zero()) out.push_back({x[i].m, s});
            ++i, ++j;
        }
    }
    for (; i < x.size(); ++i) out.push_back(x[i]);
    for (; j < y.size(); ++j) out.push_back(y[j]);
    return Expr(std::move(out));
}

inline Expr neg(const Expr& a) {
    std::vector<Term> out(a.terms());
    for (auto& t : out) t.c = -t.c;
    return Expr(std::move(out));
}

inline Expr sub(const Expr& a, const Expr& b) { return add(a, neg(b)); }

inline Expr scale(const Expr& a, const Rat& c) {
    if (c.is_zero() || a.is_zero()) return Expr();
    if (c.is_one()) return a;
    std::vector<Term> out(a.terms());
    for (auto& t : out) t.c = t.c * c;
    return Expr(std::move(out));
}

inline Expr mul_mono(const Expr& a, const Mono& m, const Rat& c) {
    if (c.is_zero() || a.is_zero()) return Expr();
    std::vector<Term> out;
    out.reserve(a.term_count());
    for (const auto& t : a.terms()) out.push_back({mono_mul(t.m, m), t.c * c});
    // multiplying by a fixed monomial preserves the term order
    return Expr(std::move(out));
}

inline Expr mul(const Expr& a, const Expr& b) {
    if (a.is_zero() || b.is_zero()) return Expr();
    if (a.is_rational()) return scale(b, a.rational_value());
    if (b.is_rational()) return scale(a, b.rational_value());
    std::map<Mono, Rat, MonoLess> acc;
    for (const auto& ta : a.terms()) {
        for (const auto& tb : b.terms()) {
            Mono m = mono_mul(ta.m, tb.m);
            Rat c = ta.c * tb.c;
            auto [it, fresh] = acc.emplace(std::move(m), c);
            if (!fresh) {
                it->second += c;
                if (it->second.is_zero()) acc.erase(it);
            }
        }
    }
    std::vector<Term> out;
    out.reserve(acc.size());
    for (auto it = acc.rbegin(); it != acc.rend(); ++it) out.push_back({it->first, it->second});
    return Expr(std::move(out));
}

inline Expr pow(const Expr& a, long e) {
    if (e < 0) {
        if (!a.is_rational()) throw std::domain_error("Expr: negative power of a non-constant");
        return Expr::constant(a.rational_value().pow_int(e));
    }
    Expr acc = Expr::constant(1);
    Expr base = a;
    long n = e;
    while (n > 0) {
        if (n & 1) acc = mul(acc, base);
        base = n > 1 ? mul(base, base) : base;
        n >>= 1;
    }
    return acc;
}

inline bool is_zero(const Expr& e) { return e.is_zero(); }

// Canonical form is maintained by construction; kept as an explicit operation
// so idempotence is assertable.
inline Expr normalize(const Expr& e) { return e; }

// ---- structure queries ----

inline std::set<VarId> variables(const Expr& e) {
    std::set<VarId> out;
    for (const auto& t : e.terms())
        for (auto& p : t.m.f) out.insert(p.first);
    return out;
}

inline bool depends_on(const Expr& e, VarId v) {
    for (const auto& t : e.terms())
        for (auto& p : t.m.f)
            if (p.first == v) return true;
    return false;
}

inline unsigned degree_in(const Expr& e, VarId v) {
    unsigned d = 0;
    for (const auto& t : e.terms()) d = std::max(d, t.m.exponent_of(v));
    return d;
}

// Split e as sum over powers of v: result[k] multiplies v^k.
inline std::map<unsigned, Expr> collect_in(const Expr& e, VarId v) {
    std::map<unsigned, std::vector<Term>> buckets;
    for (const auto& t : e.terms()) {
        Term r = t;
        unsigned k = 0;
        Mono m;
        for (auto& p : t.m.f) {
            if (p.first == v)
                k = p.second;
            else
                m.f.push_back(p);
        }
        r.m = std::move(m);
        buckets[k].push_back(std::move(r));
    }
    std::map<unsigned, Expr> out;
    for (auto& [k, ts] : buckets) out.emplace(k, Expr::from_terms(std::move(ts)));
    return out;
}

// ---- derivative rules ----

class DerivativeRuleTable {
public:
    void add_rule(SymId head, SymId wrt, Expr rhs) { rules_[{head, wrt}] = std::move(rhs); }
    const Expr* find(SymId head, SymId wrt) const {
        auto it = rules_.find({head, wrt});
        return it == rules_.end() ? nullptr : &it->second;
    }
    bool has_rules_for(SymId head) const {
        for (auto& [k, v] : rules_)
            if (k.first == head) return true;
        return false;
    }
    const std::map<std::pair<SymId, SymId>, Expr>& all() const { return rules_; }

    // Every atom in a rule right-hand side must be differentiable itself:
    // either its head has rules (then it must be argument-free, so rules and
    // formal multi-indices never mix), or it is a pure formal atom, or it is
    // argument-free and rule-free (terminal, derivative zero).
    void validate_closed(const SymbolTable& tab) const {
        for (auto& [key, rhs] : rules_) {
            for (VarId v : variables(rhs)) {
                if (!SymbolTable::is_atom(v)) continue;
                const AtomInfo& a = tab.atom(v);
                if (has_rules_for(a.head) && !a.args.empty())
                    throw std::invalid_argument(
                        "derivative rules not closed: atom '" + tab.info(a.head).name +
                        "' mixes derivative rules with formal arguments");
            }
        }
    }

private:
    std::map<std::pair<SymId, SymId>, Expr> rules_;
};

// ---- differentiation ----

inline Expr diff(const Expr& e, SymId s, const DerivativeRuleTable& rules, const SymbolTable& tab) {
    std::vector<Term> out;
    for (const auto& t : e.terms()) {
        for (std::size_t fi = 0; fi < t.m.f.size(); ++fi) {
            auto [v, exp] = t.m.f[fi];
            Expr dv; // derivative of the single factor v
            if (!SymbolTable::is_atom(v)) {
                if (v != s) continue;
                dv = Expr::constant(1);
            } else {
                const Expr* rule = rules.find(tab.atom(v).head, s);
                if (rule) {
                    bool derived = false;
                    for (auto m : tab.atom(v).multi)
                        if (m) derived = true;
                    if (derived)
                        throw std::logic_error("derivative rule applied to a formally "
                                               "differentiated atom");
                    dv = *rule;
                } else if (tab.atom_depends_on(v, s)) {
                    dv = Expr::var(tab.atom_derivative(v, s));
                } else {
                    continue;
                }
            }
            // exp * v^(exp-1) * dv * (rest of the monomial)
            Mono rest;
            for (std::size_t fj = 0; fj < t.m.f.size(); ++fj) {
                if (fj == fi) {
                    if (exp > 1) rest.f.emplace_back(v, exp - 1);
                } else {
                    rest.f.push_back(t.m.f[fj]);
                }
            }
            Expr piece = mul_mono(dv, rest, t.c * Rat(static_cast<long>(exp)));
            for (const auto& pt : piece.terms()) out.push_back(pt);
        }
    }
    return Expr::from_terms(std::move(out));
}

// ---- substitution (of symbols; atoms stay opaque indeterminates) ----

inline Expr subst(const Expr& e, const std::map<VarId, Expr>& m) {
    if (m.empty()) return e;
    std::vector<Term> plain;
    Expr acc;
    for (const auto& t : e.terms()) {
        bool hit = false;
        for (auto& p : t.m.f)
            if (m.count(p.first)) hit = true;
        if (!hit) {
            plain.push_back(t);
            continue;
        }
        Expr prod = Expr::constant(t.c);
        for (auto& p : t.m.f) {
            auto it = m.find(p.first);
            if (it == m.end()) {
                Mono mm;
                mm.f.push_back(p);
                prod = mul_mono(prod, mm, Rat(1));
            } else {
                prod = mul(prod, pow(it->second, p.second));
            }
        }
        acc = add(acc, prod);
    }
    return add(acc, Expr::from_terms(std::move(plain)));
}

// ---- exact evaluation ----

inline Rat eval_rational(const Expr& e, const std::map<VarId, Rat>& point) {
    Rat sum(0);
    for (const auto& t : e.terms()) {
        Rat prod = t.c;
        for (auto& p : t.m.f) {
            auto it = point.find(p.first);
            if (it == point.end())
                throw std::invalid_argument("eval_rational: unbound variable id " +
                                            std::to_string(p.first));
            prod *= it->second.pow_int(p.second);
        }
        sum += prod;
    }
    return sum;
}

inline double eval_double(const Expr& e, const std::map<VarId, double>& point) {
    double sum = 0;
    for (const auto& t : e.terms()) {
        double prod = t.c.to_double();
        for (auto& p : t.m.f) {
            auto it = point.find(p.first);
            if (it == point.end())
                throw std::invalid_argument("eval_double: unbound variable");
            double base = it->second;
            for (std::uint32_t k = 0; k < p.second; ++k) prod *= base;
        }
        sum += prod;
    }
    return sum;
}

// ---- content and exact division ----

inline Rat content(const Expr& e) {
    if (e.is_zero()) return Rat(0);
    Rat g(0);
    for (const auto& t : e.terms()) g = Rat::gcd(g, t.c);
    if (e.terms()[0].c.sign() < 0) g = -g;
    return g;
}

// Divide out the rational content and make the leading coefficient positive.
inline Expr strip_content(const Expr& e) {
    if (e.is_zero()) return e;
    Rat c = content(e);
    if (c.is_one()) return e;
    return scale(e, Rat(1) / c);
}

// Exact multivariate division: a / b if the remainder is zero.
inline std::optional<Expr> exact_divide(const Expr& a, const Expr& b) {
    if (b.is_zero()) return std::nullopt;
    if (a.is_zero()) return Expr();
    if (b.is_rational()) return scale(a, Rat(1) / b.rational_value());
    Expr r = a;
    Expr q;
    const Term& lead_b = b.terms()[0];
    while (!r.is_zero()) {
        const Term& lead_r = r.terms()[0];
        auto m = mono_div(lead_r.m, lead_b.m);
        if (!m) return std::nullopt;
        Rat c = lead_r.c / lead_b.c;
        Expr t = mul_mono(Expr::constant(c), *m, Rat(1));
        q = add(q, t);
        r = sub(r, mul(t, b));
    }
    return q;
}

} // namespace ksymp

#endif // KSYMP_EXPR_HPP
