#ifndef KSYMP_FIXTURES_HPP
#define KSYMP_FIXTURES_HPP

#include "ksymp/geometry.hpp"

namespace ksymp {

// q2 v^1_1 - q1 v^2_2 + q1 q2 on T^1_2 R^2; the worked affine example.
inline LagrangianModel academic_model() {
    BundleChart c = BundleChart::create(2, 2, {"q1", "q2"});
    Expr L = parse_expr("q2*v[q1,1] - q1*v[q2,2] + q1*q2", *c.tab);
    LagrangianModel m(std::move(c), std::move(L));
    m.validate();
    return m;
}

// Regular kinetic Lagrangian on n=2, k=2.
inline LagrangianModel free_model() {
    BundleChart c = BundleChart::create(2, 2, {"q1", "q2"});
    Expr L = parse_expr(
        "1/2*(v[q1,1]^2 + v[q2,1]^2 + v[q1,2]^2 + v[q2,2]^2)", *c.tab);
    LagrangianModel m(std::move(c), std::move(L));
    m.validate();
    return m;
}

// v^1_1 + q^2 on n=1, k=2: affine with M = 0, one dynamical constraint 2q.
inline LagrangianModel affine_rank0_model() {
    BundleChart c = BundleChart::create(1, 2, {"q"});
    Expr L = parse_expr("v[q,1] + q^2", *c.tab);
    LagrangianModel m(std::move(c), std::move(L));
    m.validate();
    return m;
}

// v + q on n=1, k=1: the compatibility condition is 1 = 0, so the final
// constraint manifold is empty.
inline LagrangianModel inconsistent_model() {
    BundleChart c = BundleChart::create(1, 1, {"q"});
    Expr L = parse_expr("v[q,1] + q", *c.tab);
    LagrangianModel m(std::move(c), std::move(L));
    m.validate();
    return m;
}

} // namespace ksymp

#endif // KSYMP_FIXTURES_HPP
