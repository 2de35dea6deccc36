#include <catch2/catch_amalgamated.hpp>

#include "ksymp/affine.hpp"
#include "corpus.hpp"

using namespace ksymp;

TEST_CASE("affine detection") {
    SECTION("academic decomposition") {
        LagrangianModel m = academic_model();
        const BundleChart& c = m.chart;
        auto a = detect_affine(m);
        REQUIRE(a.has_value());
        REQUIRE(a->F[0][0] == Expr::var(c.q[1]));  // F^1_1 = q2
        REQUIRE(a->F[0][1].is_zero());             // F^1_2 = 0
        REQUIRE(a->F[1][0].is_zero());             // F^2_1 = 0
        REQUIRE(a->F[1][1] == neg(Expr::var(c.q[0])));
        REQUIRE(a->G == parse_expr("q1*q2", *c.tab));
        // the decomposition reassembles L exactly
        Expr re = a->G;
        for (int al = 1; al <= c.k; ++al)
            for (int i = 1; i <= c.n; ++i)
                re = add(re, mul(a->F[al - 1][i - 1], Expr::var(c.v[al - 1][i - 1])));
        REQUIRE(re == m.L);
    }
    SECTION("quadratic Lagrangians are rejected") {
        REQUIRE_FALSE(detect_affine(free_model()).has_value());
    }
}

TEST_CASE("M matrix") {
    SECTION("academic layout and rank") {
        LagrangianModel m = academic_model();
        auto a = *detect_affine(m);
        SymMatrix M = m_matrix_stacked(a, m);
        // transpose of the paper's [[0,-1,0,-1],[1,0,1,0]]
        long expect[4][2] = {{0, 1}, {-1, 0}, {0, 1}, {-1, 0}};
        for (int r = 0; r < 4; ++r)
            for (int cidx = 0; cidx < 2; ++cidx)
                REQUIRE(M.at(r, cidx) == Expr::constant(expect[r][cidx]));
        REQUIRE(generic_rank(M, m.ctx(), 0).rank == 2);
    }
    SECTION("constant F gives zero M") {
        BundleChart c = BundleChart::create(2, 2, {"q1", "q2"});
        LagrangianModel m(c, parse_expr("3*v[q1,1] - 2*v[q2,2] + q1", *c.tab));
        auto a = *detect_affine(m);
        for (const auto& e : m_matrix_stacked(a, m).a) REQUIRE(e.is_zero());
    }
    SECTION("antisymmetry per direction") {
        std::mt19937_64 unused(0);
        for (std::uint64_t s : {3u, 6u, 9u}) {
            LagrangianModel m = corpus::random_affine_model(s);
            auto a = detect_affine(m);
            REQUIRE(a.has_value());
            for (int al = 1; al <= m.chart.k; ++al) {
                SymMatrix M = m_matrix(*a, m, al);
                for (int i = 0; i < m.chart.n; ++i)
                    for (int j = 0; j < m.chart.n; ++j)
                        REQUIRE(M.at(i, j) == neg(M.at(j, i)));
            }
        }
    }
}

TEST_CASE("affine fast path on the fixtures") {
    SECTION("academic") {
        LagrangianModel m = academic_model();
        AffineRun run = affine_fast_path(m);
        REQUIRE(run.rank == 2);
        REQUIRE(run.zetas.empty());
        REQUIRE(run.etas.size() == 2);
        std::vector<Expr> expected = {parse_expr("-v[q2,1] - v[q2,2] + q2", *m.chart.tab),
                                      parse_expr("v[q1,1] + v[q1,2] + q1", *m.chart.tab)};
        REQUIRE(mutually_reducible(run.etas, expected, m.ctx()));
        REQUIRE(run.final_generation == 1);
        // k * rank M determinations
        REQUIRE(run.family.determinations.size() == 4);
    }
    SECTION("rank 0 toy") {
        LagrangianModel m = affine_rank0_model();
        AffineRun run = affine_fast_path(m);
        REQUIRE(run.rank == 0);
        REQUIRE(run.zetas.size() == 1);
        REQUIRE(run.etas.empty()); // eta coincides with zeta
        REQUIRE(run.final_generation == 2);
        REQUIRE(run.constraints.size() == 3);
    }
}

TEST_CASE("fast path equals the generic path") {
    // academic, rank-0, and seeded random affine models
    std::vector<LagrangianModel> models;
    models.push_back(academic_model());
    models.push_back(affine_rank0_model());
    for (std::uint64_t s = 1; s <= 8; ++s) models.push_back(corpus::random_affine_model(s));

    for (auto& m : models) {
        AffineRun fast = affine_fast_path(m, 7);
        StabilizeOptions opt;
        opt.seed = 7;
        opt.skip_integrability = true;
        opt.projectability = false;
        AlgorithmReport gen = stabilize(m, opt);

        if (fast.contradictory || gen.status == AlgorithmReport::Status::EmptyManifold) {
            REQUIRE(fast.contradictory ==
                    (gen.status == AlgorithmReport::Status::EmptyManifold));
            continue;
        }
        std::vector<Expr> fast_exprs, gen_exprs;
        for (const auto& c : fast.constraints) fast_exprs.push_back(c.expr);
        for (const auto& c : gen.constraints) gen_exprs.push_back(c.expr);
        INFO("model with n=" << m.chart.n << " k=" << m.chart.k);
        REQUIRE(mutually_reducible(fast_exprs, gen_exprs, m.ctx()));
        // same residual freedom and same amount of determination
        REQUIRE(fast.family.free_params.size() == gen.solution.free_params.size());
        REQUIRE(fast.family.determinations.size() == gen.solution.determinations.size());
        REQUIRE(fast.final_generation == gen.final_generation);

        // first-generation sopde constraint count follows rank M
        std::size_t eta_count = 0;
        for (const auto& c : fast.constraints)
            if (c.generation == 1 && c.klass == ConstraintClass::Sopde) ++eta_count;
        REQUIRE(eta_count == fast.rank);
    }
}
