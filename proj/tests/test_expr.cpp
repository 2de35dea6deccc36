#include <cmath>
#include <catch2/catch_amalgamated.hpp>

#include "ksymp/expr.hpp"
#include "ksymp/metric_rewrite.hpp"
#include "ksymp/parser.hpp"
#include "oracle.hpp"

#include <random>

using namespace ksymp;

namespace {

// Academic chart: (q1,q2) with k=2 velocities, in the canonical order.
struct AcademicTable {
    SymbolTable tab;
    SymId q1, q2;
    SymId v11, v21, v12, v22; // v[i]_alpha as v{i}{alpha}

    AcademicTable() {
        q1 = tab.add_symbol("q1", SymKind::Coordinate, 1);
        q2 = tab.add_symbol("q2", SymKind::Coordinate, 2);
        v11 = tab.add_symbol("v_q1_1", SymKind::Velocity, 1, 1);
        v21 = tab.add_symbol("v_q2_1", SymKind::Velocity, 2, 1);
        v12 = tab.add_symbol("v_q1_2", SymKind::Velocity, 1, 2);
        v22 = tab.add_symbol("v_q2_2", SymKind::Velocity, 2, 2);
    }
};

Expr random_poly(std::mt19937_64& rng, const std::vector<VarId>& vars, int max_terms = 6,
                 unsigned max_exp = 3) {
    std::uniform_int_distribution<int> nterms(1, max_terms);
    std::uniform_int_distribution<int> nvars(0, 3);
    std::uniform_int_distribution<std::size_t> pick(0, vars.size() - 1);
    std::uniform_int_distribution<unsigned> exp(1, max_exp);
    std::vector<Term> ts;
    int n = nterms(rng);
    for (int t = 0; t < n; ++t) {
        Mono m;
        std::map<VarId, std::uint32_t> fs;
        int k = nvars(rng);
        for (int i = 0; i < k; ++i) fs[vars[pick(rng)]] += exp(rng);
        for (auto& [v, e] : fs) m.f.emplace_back(v, e);
        ts.push_back({std::move(m), oracle::random_rat(rng, -5, 5)});
    }
    return Expr::from_terms(std::move(ts));
}

} // namespace

TEST_CASE("parsing and canonical form") {
    AcademicTable a;
    const DerivativeRuleTable rules;

    SECTION("academic Lagrangian") {
        Expr L = parse_expr("q2*v[q1,1] - q1*v[q2,2] + q1*q2", a.tab);
        Expr manual = add(sub(mul(Expr::var(a.q2), Expr::var(a.v11)),
                              mul(Expr::var(a.q1), Expr::var(a.v22))),
                          mul(Expr::var(a.q1), Expr::var(a.q2)));
        REQUIRE(L == manual);
    }
    SECTION("zero literal") {
        REQUIRE(parse_expr("0", a.tab).is_zero());
    }
    SECTION("polynomial identity normalizes to zero") {
        REQUIRE(parse_expr("(q1+1)^2 - q1^2 - 2*q1 - 1", a.tab).is_zero());
    }
    SECTION("round trip") {
        std::mt19937_64 rng(42);
        std::vector<VarId> vars{a.q1, a.q2, a.v11, a.v21, a.v12, a.v22};
        for (int i = 0; i < 50; ++i) {
            Expr e = random_poly(rng, vars);
            REQUIRE(parse_expr(to_string(e, a.tab), a.tab) == e);
        }
    }
    SECTION("rational literals and division") {
        Expr e = parse_expr("1/2*q1 - q1/2", a.tab);
        REQUIRE(e.is_zero());
        REQUIRE_THROWS_AS(parse_expr("q1/(q2+1)", a.tab), ParseError);
        REQUIRE_THROWS_AS(parse_expr("q1/0", a.tab), ParseError);
    }
    SECTION("errors carry positions") {
        REQUIRE_THROWS_AS(parse_expr("q1 + nope", a.tab), ParseError);
        REQUIRE_THROWS_AS(parse_expr("q1 + ", a.tab), ParseError);
        REQUIRE_THROWS_AS(parse_expr("v[q3,1]", a.tab), ParseError);
    }
}

TEST_CASE("differentiation") {
    AcademicTable a;
    DerivativeRuleTable rules;
    Expr L = parse_expr("q2*v[q1,1] - q1*v[q2,2] + q1*q2", a.tab);

    SECTION("dL/dv11 is q2") {
        REQUIRE(diff(L, a.v11, rules, a.tab) == Expr::var(a.q2));
    }
    SECTION("constants vanish") {
        REQUIRE(diff(Expr::constant(Rat(7, 3)), a.q1, rules, a.tab).is_zero());
    }
    SECTION("formal atoms produce derivative atoms") {
        SymId F = a.tab.add_symbol("F", SymKind::FunctionHead);
        Expr e = parse_expr("F(q1,q2)*v[q1,1]", a.tab);
        Expr d = diff(e, a.q1, rules, a.tab);
        VarId dF = a.tab.intern_atom(F, {a.q1, a.q2}, {1, 0});
        REQUIRE(d == mul(Expr::var(dF), Expr::var(a.v11)));
        REQUIRE(parse_expr(to_string(d, a.tab), a.tab) == d);

        // numeric oracle: concrete F(x,y) = x^2 y + 3 y, central differences
        std::mt19937_64 rng(7);
        auto Fval = [](Rat x, Rat y) { return x * x * y + Rat(3) * y; };
        auto Fdx = [](Rat x, Rat y) { return Rat(2) * x * y; };
        Rat h(1, 4096);
        for (int i = 0; i < 10; ++i) {
            Rat x = oracle::random_rat(rng), y = oracle::random_rat(rng);
            Rat v = oracle::random_rat(rng);
            std::map<VarId, Rat> pt{{a.q1, x}, {a.q2, y}, {a.v11, v}};
            VarId F0 = a.tab.intern_atom(F, {a.q1, a.q2}, {0, 0});
            pt[dF] = Fdx(x, y);
            pt[F0] = Fval(x, y);
            Rat sym = eval_rational(d, pt);
            // e(x+h) - e(x-h) over 2h with the atom bound consistently
            std::map<VarId, Rat> hi = pt, lo = pt;
            hi[a.q1] = x + h;
            hi[F0] = Fval(x + h, y);
            lo[a.q1] = x - h;
            lo[F0] = Fval(x - h, y);
            Rat fd = (eval_rational(e, hi) - eval_rational(e, lo)) / (Rat(2) * h);
            double denom = std::max(1.0, std::abs(sym.to_double()));
            REQUIRE(std::abs((sym - fd).to_double()) / denom < 1e-8);
        }
    }
    SECTION("linearity and Leibniz on random expressions") {
        std::mt19937_64 rng(3);
        std::vector<VarId> vars{a.q1, a.q2, a.v11, a.v21, a.v12, a.v22};
        for (int i = 0; i < 40; ++i) {
            Expr e1 = random_poly(rng, vars), e2 = random_poly(rng, vars);
            SymId s = vars[i % vars.size()];
            REQUIRE(diff(add(e1, e2), s, rules, a.tab) ==
                    add(diff(e1, s, rules, a.tab), diff(e2, s, rules, a.tab)));
            REQUIRE(diff(mul(e1, e2), s, rules, a.tab) ==
                    add(mul(diff(e1, s, rules, a.tab), e2), mul(e1, diff(e2, s, rules, a.tab))));
        }
    }
    SECTION("mixed partials commute, including formal atoms") {
        std::mt19937_64 rng(11);
        SymId G = a.tab.add_symbol("G", SymKind::FunctionHead);
        VarId g0 = a.tab.intern_atom(G, {a.q1, a.q2}, {0, 0});
        std::vector<VarId> vars{a.q1, a.q2, a.v11, a.v22, g0};
        for (int i = 0; i < 40; ++i) {
            Expr e = random_poly(rng, vars);
            SymId s1 = (i % 2) ? a.q1 : a.v11;
            SymId s2 = (i % 3) ? a.q2 : a.q1;
            Expr d12 = diff(diff(e, s1, rules, a.tab), s2, rules, a.tab);
            Expr d21 = diff(diff(e, s2, rules, a.tab), s1, rules, a.tab);
            REQUIRE(d12 == d21);
        }
    }
}

TEST_CASE("rational evaluation") {
    AcademicTable a;
    SECTION("academic energy at a point") {
        Expr E = parse_expr("-q1*q2", a.tab);
        REQUIRE(eval_rational(E, {{a.q1, Rat(3)}, {a.q2, Rat(5)}}) == Rat(-15));
    }
    SECTION("zero expression") {
        REQUIRE(eval_rational(Expr(), {}) == Rat(0));
    }
    SECTION("square of a sum") {
        Expr e = parse_expr("(q1+q2)^2", a.tab);
        REQUIRE(eval_rational(e, {{a.q1, Rat(1)}, {a.q2, Rat(2)}}) == Rat(9));
    }
    SECTION("unbound symbol is an error") {
        REQUIRE_THROWS(eval_rational(Expr::var(a.q1), {}));
    }
    SECTION("homomorphic over + and *") {
        std::mt19937_64 rng(5);
        std::vector<VarId> vars{a.q1, a.q2, a.v11};
        for (int i = 0; i < 30; ++i) {
            Expr e1 = random_poly(rng, vars), e2 = random_poly(rng, vars);
            std::map<VarId, Rat> pt;
            for (VarId v : vars) pt[v] = oracle::random_rat(rng);
            REQUIRE(eval_rational(add(e1, e2), pt) ==
                    eval_rational(e1, pt) + eval_rational(e2, pt));
            REQUIRE(eval_rational(mul(e1, e2), pt) ==
                    eval_rational(e1, pt) * eval_rational(e2, pt));
        }
    }
}

TEST_CASE("zero testing and normalize idempotence") {
    AcademicTable a;
    std::mt19937_64 rng(9);
    std::vector<VarId> vars{a.q1, a.q2, a.v11, a.v21, a.v12, a.v22};
    SECTION("simple cases") {
        REQUIRE(is_zero(parse_expr("q1-q1", a.tab)));
        REQUIRE_FALSE(is_zero(parse_expr("q1", a.tab)));
    }
    SECTION("e - e vanishes; normalize is idempotent") {
        for (int i = 0; i < 40; ++i) {
            Expr e = random_poly(rng, vars);
            REQUIRE(is_zero(sub(e, e)));
            REQUIRE(normalize(normalize(e)) == normalize(e));
        }
    }
}

TEST_CASE("numeric gradient property") {
    AcademicTable a;
    DerivativeRuleTable rules;
    std::mt19937_64 rng(13);
    std::vector<VarId> vars{a.q1, a.q2, a.v11, a.v21, a.v12, a.v22};
    Rat h(1, 8192);
    for (int i = 0; i < 100; ++i) {
        Expr e = random_poly(rng, vars, 5, 3);
        SymId s = vars[i % vars.size()];
        std::map<VarId, Rat> pt;
        for (VarId v : vars) pt[v] = oracle::random_rat(rng, -2, 2, 2);
        Rat d = eval_rational(diff(e, s, rules, a.tab), pt);
        auto hi = pt, lo = pt;
        hi[s] = pt[s] + h;
        lo[s] = pt[s] - h;
        Rat fd = (eval_rational(e, hi) - eval_rational(e, lo)) / (Rat(2) * h);
        double scale = std::max(1.0, std::abs(d.to_double()));
        REQUIRE(std::abs((d - fd).to_double()) / scale < 1e-6);
    }
}

TEST_CASE("inverse metric rewrite") {
    // dim-4 metric pair: coordinates g_ab, argument-free atoms gi_ab
    SymbolTable tab;
    MetricPair mp;
    mp.dim = 4;
    mp.g.assign(4, std::vector<SymId>(4));
    mp.ginv.assign(4, std::vector<VarId>(4));
    for (int i = 0; i < 4; ++i)
        for (int j = i; j < 4; ++j) {
            SymId s = tab.add_symbol("g" + std::to_string(i) + std::to_string(j),
                                     SymKind::Coordinate, i * 4 + j + 1);
            mp.g[i][j] = mp.g[j][i] = s;
        }
    for (int i = 0; i < 4; ++i)
        for (int j = i; j < 4; ++j) {
            SymId h = tab.add_symbol("gi" + std::to_string(i) + std::to_string(j),
                                     SymKind::FunctionHead);
            VarId atom = tab.intern_atom(h, {}, {});
            mp.ginv[i][j] = mp.ginv[j][i] = atom;
        }
    auto G = [&](int i, int j) { return Expr::var(mp.g[std::min(i, j)][std::max(i, j)]); };
    auto Gi = [&](int i, int j) { return Expr::var(mp.ginv[std::min(i, j)][std::max(i, j)]); };

    SECTION("g^{ab} g_{bc} - delta collapses") {
        for (int aa = 0; aa < 4; ++aa)
            for (int cc = 0; cc < 4; ++cc) {
                Expr s;
                for (int b = 0; b < 4; ++b) s = add(s, mul(Gi(aa, b), G(b, cc)));
                s = sub(s, Expr::constant(aa == cc ? 1 : 0));
                REQUIRE(rewrite_inverse_metric(s, mp).is_zero());
            }
    }
    SECTION("rewrite preserves values on consistent metrics") {
        std::mt19937_64 rng(21);
        for (int trial = 0; trial < 10; ++trial) {
            auto [g, gi] = oracle::random_metric(rng, 4);
            std::map<VarId, Rat> pt;
            for (int i = 0; i < 4; ++i)
                for (int j = i; j < 4; ++j) {
                    pt[mp.g[i][j]] = g[i][j];
                    pt[mp.ginv[i][j]] = gi[i][j];
                }
            // a random contraction-heavy expression
            Expr e;
            for (int i = 0; i < 4; ++i)
                for (int b = 0; b < 4; ++b)
                    e = add(e, scale(mul(mul(Gi(i, b), G(b, (i + 1) % 4)), G(i, 3)),
                                     oracle::random_rat(rng)));
            Expr r = rewrite_inverse_metric(e, mp);
            REQUIRE(eval_rational(e, pt) == eval_rational(r, pt));
        }
    }
    SECTION("invertible atom stripping") {
        SymId rho_h = tab.add_symbol("rho", SymKind::FunctionHead);
        VarId rho = tab.intern_atom(rho_h, {}, {});
        Expr e = mul(Expr::var(rho), add(G(0, 1), G(2, 3)));
        Expr stripped = strip_invertible_atoms(e, {rho_h}, tab);
        REQUIRE(stripped == add(G(0, 1), G(2, 3)));
        // not stripped when not common to all terms
        Expr f = add(mul(Expr::var(rho), G(0, 1)), G(2, 3));
        REQUIRE(strip_invertible_atoms(f, {rho_h}, tab) == f);
    }
}

TEST_CASE("exact division and content") {
    AcademicTable a;
    std::mt19937_64 rng(17);
    std::vector<VarId> vars{a.q1, a.q2, a.v11};
    for (int i = 0; i < 25; ++i) {
        Expr x = random_poly(rng, vars, 4, 2);
        Expr y = random_poly(rng, vars, 3, 2);
        if (y.is_zero()) continue;
        Expr p = mul(x, y);
        auto q = exact_divide(p, y);
        REQUIRE(q.has_value());
        REQUIRE(*q == x);
    }
    Expr e = parse_expr("2*q1 + 4*q2", a.tab);
    REQUIRE(strip_content(e) == parse_expr("q1 + 2*q2", a.tab));
    Expr m = parse_expr("-3*q1 - 6*q2", a.tab);
    REQUIRE(strip_content(m) == parse_expr("q1 + 2*q2", a.tab));
}
