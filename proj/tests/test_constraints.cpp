#include <catch2/catch_amalgamated.hpp>

#include "ksymp/constraints.hpp"
#include "ksymp/fixtures.hpp"
#include "oracle.hpp"

#include <random>

using namespace ksymp;

TEST_CASE("constraint set normal form") {
    LagrangianModel m = academic_model();
    const BundleChart& c = m.chart;
    NormContext ctx = m.ctx();

    SECTION("academic sopde constraints solve for the latest velocities") {
        ConstraintSet cs(ctx);
        Expr eta1 = parse_expr("-v[q2,1] - v[q2,2] + q2", *c.tab);
        Expr eta2 = parse_expr("v[q1,1] + v[q1,2] + q1", *c.tab);
        REQUIRE(cs.insert({eta1, 1, ConstraintClass::Sopde, "eta1"}) ==
                ConstraintSet::InsertResult::Added);
        REQUIRE(cs.insert({eta2, 1, ConstraintClass::Sopde, "eta2"}) ==
                ConstraintSet::InsertResult::Added);
        REQUIRE(cs.relations().size() == 2);
        REQUIRE(cs.relations()[0].coord == c.v[1][1]); // v[q2,2] = q2 - v[q2,1]
        REQUIRE(cs.relations()[0].rhs == parse_expr("q2 - v[q2,1]", *c.tab));
        REQUIRE(cs.relations()[1].coord == c.v[1][0]); // v[q1,2] = -q1 - v[q1,1]
        // reduction closes over the set
        REQUIRE(cs.reduces_to_zero(eta1));
        REQUIRE(cs.reduces_to_zero(eta2));
        REQUIRE(cs.reduces_to_zero(add(eta1, scale(eta2, Rat(3)))));
        REQUIRE(cs.reduces_to_zero(mul(eta1, parse_expr("q1+q2", *c.tab))));
        REQUIRE_FALSE(cs.reduces_to_zero(parse_expr("q1", *c.tab)));
        // scaled duplicates are dependent
        REQUIRE(cs.insert({scale(eta1, Rat(-5, 3)), 1, ConstraintClass::Sopde, "dup"}) ==
                ConstraintSet::InsertResult::Zero);
    }
    SECTION("contradiction detection") {
        ConstraintSet cs(ctx);
        REQUIRE(cs.insert({parse_expr("q1 - 1", *c.tab), 1, ConstraintClass::Dynamical, "a"}) ==
                ConstraintSet::InsertResult::Added);
        REQUIRE(cs.insert({parse_expr("q1 - 2", *c.tab), 1, ConstraintClass::Dynamical, "b"}) ==
                ConstraintSet::InsertResult::Contradiction);
        REQUIRE(cs.contradictory());
    }
    SECTION("residual constraints are kept and matched") {
        ConstraintSet cs(ctx);
        Expr quad = parse_expr("q1^2 + q2^2 - 1", *c.tab);
        REQUIRE(cs.insert({quad, 1, ConstraintClass::Dynamical, "circle"}) ==
                ConstraintSet::InsertResult::Added);
        REQUIRE(cs.relations().empty());
        REQUIRE(cs.residuals().size() == 1);
        REQUIRE(cs.insert({scale(quad, Rat(7)), 1, ConstraintClass::Dynamical, "dup"}) ==
                ConstraintSet::InsertResult::Zero);
        REQUIRE(cs.reduces_to_zero(quad));
    }
    SECTION("triangular substitutions: later relations clean earlier ones") {
        ConstraintSet cs(ctx);
        // first relation mentions q2; solving q2 afterwards must rewrite it
        cs.insert({parse_expr("v[q1,1] - q2", *c.tab), 1, ConstraintClass::Sopde, "r1"});
        cs.insert({parse_expr("q2 - 3*q1", *c.tab), 1, ConstraintClass::Dynamical, "r2"});
        for (const auto& rel : cs.relations()) {
            for (const auto& other : cs.relations()) {
                REQUIRE_FALSE(depends_on(rel.rhs, other.coord));
                REQUIRE_FALSE(depends_on(rel.pivot, other.coord));
            }
        }
        REQUIRE(cs.reduces_to_zero(parse_expr("v[q1,1] - 3*q1", *c.tab)));
    }
    SECTION("sampling on the locus") {
        ConstraintSet cs(ctx);
        cs.insert({parse_expr("-v[q2,1] - v[q2,2] + q2", *c.tab), 1, ConstraintClass::Sopde, "e"});
        std::mt19937_64 rng(3);
        std::set<VarId> vars(c.coords.begin(), c.coords.end());
        auto pt = cs.sample_on_locus(vars, rng);
        REQUIRE(pt.has_value());
        REQUIRE(eval_rational(parse_expr("-v[q2,1] - v[q2,2] + q2", *c.tab), *pt).is_zero());
    }
}

TEST_CASE("pseudo reduction with polynomial pivots") {
    BundleChart c = BundleChart::create(2, 1, {"q1", "q2"});
    NormContext ctx;
    ctx.tab = c.tab.get();
    ConstraintSet cs(ctx);
    // the only linear coordinate is v1, and its coefficient q1 is not a unit
    Expr e = parse_expr("q1*v[q1,1] - q2^2", *c.tab);
    REQUIRE(cs.insert({e, 1, ConstraintClass::Sopde, "p"}) == ConstraintSet::InsertResult::Added);
    REQUIRE(cs.relations().size() == 1);
    REQUIRE(cs.relations()[0].coord == c.v[0][0]);
    REQUIRE(cs.relations()[0].pivot == Expr::var(c.q[0]));
    REQUIRE(cs.pivot_warnings().size() == 1);
    // multiples reduce to zero through the pseudo substitution
    REQUIRE(cs.reduces_to_zero(parse_expr("q1^2*v[q1,1] - q1*q2^2", *c.tab)));
    REQUIRE(cs.reduces_to_zero(parse_expr("q1*q2*v[q1,1] - q2^3", *c.tab)));
    // and an unrelated expression does not
    REQUIRE_FALSE(cs.reduces_to_zero(parse_expr("q1 + q2", *c.tab)));
}

TEST_CASE("mutual reducibility") {
    LagrangianModel m = academic_model();
    const BundleChart& c = m.chart;
    NormContext ctx = m.ctx();
    Expr eta1 = parse_expr("-v[q2,1] - v[q2,2] + q2", *c.tab);
    Expr eta2 = parse_expr("v[q1,1] + v[q1,2] + q1", *c.tab);

    SECTION("families equal up to scaling and combinations") {
        std::vector<Expr> A{eta1, eta2};
        std::vector<Expr> B{scale(eta1, Rat(-2)), add(eta2, scale(eta1, Rat(5)))};
        REQUIRE(mutually_reducible(A, B, ctx));
    }
    SECTION("strictly smaller family fails one direction") {
        std::vector<Expr> A{eta1};
        std::vector<Expr> B{eta1, eta2};
        std::string why;
        REQUIRE_FALSE(mutually_reducible(A, B, ctx, &why));
        REQUIRE(!why.empty());
    }
    SECTION("randomized equivalent presentations") {
        std::mt19937_64 rng(8);
        for (int t = 0; t < 10; ++t) {
            std::vector<Expr> A{eta1, eta2};
            Rat a = oracle::random_nonzero_rat(rng), b = oracle::random_rat(rng);
            std::vector<Expr> B{scale(eta1, a), add(scale(eta2, a), scale(eta1, b))};
            REQUIRE(mutually_reducible(A, B, ctx));
        }
    }
}
