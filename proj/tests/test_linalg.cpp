#include <catch2/catch_amalgamated.hpp>

#include "ksymp/linalg.hpp"
#include "ksymp/parser.hpp"
#include "oracle.hpp"

#include <random>

using namespace ksymp;

namespace {

SymMatrix from_longs(const std::vector<std::vector<long>>& rows) {
    SymMatrix m(rows.size(), rows.empty() ? 0 : rows[0].size());
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j) m.at(i, j) = Expr::constant(rows[i][j]);
    return m;
}

} // namespace

TEST_CASE("generic rank") {
    SymbolTable tab;
    NormContext ctx;
    ctx.tab = &tab;

    SECTION("academic M has maximal rank") {
        // paper's layout: rows j, columns (alpha,i)
        SymMatrix m = from_longs({{0, -1, 0, -1}, {1, 0, 1, 0}});
        auto cert = generic_rank(m, ctx, 0);
        REQUIRE(cert.rank == 2);
        REQUIRE(!cert.minor_value.is_zero());
    }
    SECTION("zero matrix") {
        SymMatrix m(3, 4);
        REQUIRE(generic_rank(m, ctx, 0).rank == 0);
    }
    SECTION("invariance under permutation and row scaling") {
        std::mt19937_64 rng(100);
        for (int trial = 0; trial < 20; ++trial) {
            std::uniform_int_distribution<std::size_t> dim(2, 5);
            std::size_t r = dim(rng), c = dim(rng), inner = dim(rng) % 3 + 1;
            // build a rank-deficient rational matrix as a product
            SymMatrix m(r, c);
            std::vector<std::vector<Rat>> A(r, std::vector<Rat>(inner)),
                B(inner, std::vector<Rat>(c));
            for (auto& row : A)
                for (auto& x : row) x = oracle::random_rat(rng);
            for (auto& row : B)
                for (auto& x : row) x = oracle::random_rat(rng);
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < c; ++j) {
                    Rat s(0);
                    for (std::size_t k = 0; k < inner; ++k) s += A[i][k] * B[k][j];
                    m.at(i, j) = Expr::constant(s);
                }
            auto base = generic_rank(m, ctx, trial).rank;
            // permute rows/cols, scale one row
            SymMatrix p(r, c);
            std::vector<std::size_t> rp(r), cp(c);
            for (std::size_t i = 0; i < r; ++i) rp[i] = (i + 1) % r;
            for (std::size_t j = 0; j < c; ++j) cp[j] = (j + 2) % c;
            Rat s = oracle::random_nonzero_rat(rng);
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < c; ++j)
                    p.at(rp[i], cp[j]) = i == 0 ? scale(m.at(i, j), s) : m.at(i, j);
            REQUIRE(generic_rank(p, ctx, trial + 1).rank == base);
        }
    }
}

TEST_CASE("kernel basis") {
    SymbolTable tab;
    SymId q1 = tab.add_symbol("q1", SymKind::Coordinate, 1);
    SymId q2 = tab.add_symbol("q2", SymKind::Coordinate, 2);
    NormContext ctx;
    ctx.tab = &tab;

    SECTION("identity has empty kernel") {
        REQUIRE(kernel_basis(from_longs({{1, 0}, {0, 1}}), ctx).empty());
    }
    SECTION("symbolic kernel with cleared entries") {
        SymMatrix m(1, 2);
        m.at(0, 0) = Expr::var(q1);
        m.at(0, 1) = Expr::var(q2);
        auto kb = kernel_basis(m, ctx, 1);
        REQUIRE(kb.size() == 1);
        Expr residual = add(mul(m.at(0, 0), kb[0][0]), mul(m.at(0, 1), kb[0][1]));
        REQUIRE(residual.is_zero());
        REQUIRE((kb[0][0] == Expr::var(q2) || kb[0][0] == neg(Expr::var(q2))));
    }
    SECTION("kernel vectors independent at a random point") {
        std::mt19937_64 rng(4);
        for (int trial = 0; trial < 20; ++trial) {
            std::uniform_int_distribution<std::size_t> dim(2, 5);
            std::size_t r = dim(rng), c = dim(rng);
            SymMatrix m(r, c);
            for (auto& e : m.a)
                if (rng() % 3 == 0) e = Expr::constant(oracle::random_rat(rng));
            auto kb = kernel_basis(m, ctx, trial);
            if (kb.empty()) continue;
            oracle::RatMat pts;
            std::map<VarId, Rat> pt{{q1, oracle::random_rat(rng)}, {q2, oracle::random_rat(rng)}};
            for (auto& v : kb) {
                std::vector<Rat> row;
                for (auto& e : v) row.push_back(eval_rational(e, pt));
                pts.push_back(std::move(row));
            }
            REQUIRE(oracle::rank(pts) == kb.size());
        }
    }
}

TEST_CASE("parametric solve") {
    SymbolTable tab;
    SymId q = tab.add_symbol("q", SymKind::Coordinate, 1);
    SymId x11 = tab.add_symbol("x11", SymKind::Parameter);
    SymId x12 = tab.add_symbol("x12", SymKind::Parameter);
    SymId x21 = tab.add_symbol("x21", SymKind::Parameter);
    SymId x22 = tab.add_symbol("x22", SymKind::Parameter);
    NormContext ctx;
    ctx.tab = &tab;

    SECTION("zero matrix turns rhs into consistency conditions") {
        SymMatrix m(1, 1);
        auto sol = solve_parametric(m, {mul(Expr::constant(2), Expr::var(q))}, {x11}, ctx);
        REQUIRE(sol.determined.empty());
        REQUIRE(sol.consistency.size() == 1);
        REQUIRE(sol.consistency[0] == Expr::var(q)); // content-stripped
        REQUIRE(sol.free_unknowns == std::vector<SymId>{x11});
    }
    SECTION("zero rhs gives the kernel") {
        SymMatrix m = from_longs({{1, 1, 0, 0}});
        auto sol = solve_parametric(m, {Expr()}, {x11, x12, x21, x22}, ctx);
        REQUIRE(sol.consistency.empty());
        REQUIRE(sol.determined.size() == 1);
        REQUIRE(sol.free_unknowns.size() == 3);
    }
    SECTION("academic base-component relations") {
        // -(X1)^2 - (X2)^2 = -q2 ; (X1)^1 + (X2)^1 = -q1
        SymbolTable t2;
        SymId a1 = t2.add_symbol("q1", SymKind::Coordinate, 1);
        SymId a2 = t2.add_symbol("q2", SymKind::Coordinate, 2);
        SymId u11 = t2.add_symbol("X1_1", SymKind::Parameter);
        SymId u12 = t2.add_symbol("X1_2", SymKind::Parameter);
        SymId u21 = t2.add_symbol("X2_1", SymKind::Parameter);
        SymId u22 = t2.add_symbol("X2_2", SymKind::Parameter);
        NormContext c2;
        c2.tab = &t2;
        std::vector<Expr> eqs = {
            add(add(neg(Expr::var(u12)), neg(Expr::var(u22))), Expr::var(a2)),
            add(add(Expr::var(u11), Expr::var(u21)), Expr::var(a1)),
        };
        auto sol = solve_equations(eqs, {u11, u12, u21, u22}, c2);
        REQUIRE(sol.consistency.empty());
        REQUIRE(sol.determined.size() == 2);
        // solved for the latest unknowns: X2_1 and X2_2
        REQUIRE(sol.determined[0].unknown == u21);
        REQUIRE(sol.determined[0].rhs == sub(neg(Expr::var(a1)), Expr::var(u11)));
        REQUIRE(sol.determined[1].unknown == u22);
        REQUIRE(sol.determined[1].rhs == sub(Expr::var(a2), Expr::var(u12)));
    }
    SECTION("nonlinear unknown occurrence is an error") {
        std::vector<Expr> eqs = {mul(Expr::var(x11), Expr::var(x12))};
        REQUIRE_THROWS_AS(solve_equations(eqs, {x11, x12}, ctx), std::invalid_argument);
    }
}

TEST_CASE("randomized systems against the numeric oracle") {
    SymbolTable tab;
    NormContext ctx;
    ctx.tab = &tab;
    std::vector<SymId> unknown_pool;
    for (int i = 0; i < 6; ++i)
        unknown_pool.push_back(tab.add_symbol("u" + std::to_string(i), SymKind::Parameter));

    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 50; ++trial) {
        std::uniform_int_distribution<std::size_t> dim(1, 5);
        std::size_t r = dim(rng), c = dim(rng);
        std::uniform_int_distribution<std::size_t> innerd(1, std::min(r, c));
        std::size_t inner = innerd(rng);
        // rank-deficient by construction half of the time
        bool deficient = trial % 2;
        oracle::RatMat M(r, std::vector<Rat>(c));
        if (deficient) {
            oracle::RatMat A(r, std::vector<Rat>(inner)), B(inner, std::vector<Rat>(c));
            for (auto& row : A)
                for (auto& x : row) x = oracle::random_rat(rng);
            for (auto& row : B)
                for (auto& x : row) x = oracle::random_rat(rng);
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < c; ++j) {
                    Rat s(0);
                    for (std::size_t k = 0; k < inner; ++k) s += A[i][k] * B[k][j];
                    M[i][j] = s;
                }
        } else {
            for (auto& row : M)
                for (auto& x : row) x = oracle::random_rat(rng);
        }
        std::vector<Rat> b(r);
        for (auto& x : b) x = oracle::random_rat(rng);

        SymMatrix sm(r, c);
        std::vector<Expr> rhs(r);
        for (std::size_t i = 0; i < r; ++i) {
            for (std::size_t j = 0; j < c; ++j) sm.at(i, j) = Expr::constant(M[i][j]);
            rhs[i] = Expr::constant(b[i]);
        }
        std::vector<SymId> unknowns(unknown_pool.begin(), unknown_pool.begin() + c);
        auto sol = solve_parametric(sm, rhs, unknowns, ctx);

        std::size_t oracle_rank = oracle::rank(M);
        bool oracle_solvable = oracle::solve(M, b).has_value();
        REQUIRE(sol.determined.size() == oracle_rank);
        REQUIRE(sol.consistency.empty() == oracle_solvable);
        REQUIRE(sol.free_unknowns.size() == c - oracle_rank);

        if (oracle_solvable) {
            // particular solution (free unknowns = 0) satisfies the system
            std::map<VarId, Rat> assign;
            for (SymId u : sol.free_unknowns) assign[u] = Rat(0);
            for (auto& d : sol.determined) {
                REQUIRE(d.pivot == Expr::constant(1));
                assign[d.unknown] = eval_rational(d.rhs, assign);
            }
            for (std::size_t i = 0; i < r; ++i) {
                Rat s(0);
                for (std::size_t j = 0; j < c; ++j) s += M[i][j] * assign[unknowns[j]];
                REQUIRE(s == b[i]);
            }
        }
    }
}
