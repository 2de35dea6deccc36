#ifndef KSYMP_AFFINE_HPP
#define KSYMP_AFFINE_HPP

#include "ksymp/algorithm.hpp"

namespace ksymp {

// L = sum_alpha F^alpha_i(q) v^i_alpha + G(q)
struct AffineDecomposition {
    std::vector<std::vector<Expr>> F; // F[alpha-1][i-1], functions of q only
    Expr G;
};

inline std::optional<AffineDecomposition> detect_affine(const LagrangianModel& m) {
    const BundleChart& c = m.chart;
    AffineDecomposition a;
    a.F.assign(c.k, std::vector<Expr>(c.n));
    auto v_free = [&](const Expr& e) {
        for (VarId v : variables(e))
            if (!SymbolTable::is_atom(v) && m.tab().info(v).kind == SymKind::Velocity)
                return false;
        return true;
    };
    Expr linear;
    for (int al = 1; al <= c.k; ++al)
        for (int i = 1; i <= c.n; ++i) {
            Expr f = m.d(m.L, c.v[al - 1][i - 1]);
            if (!v_free(f)) return std::nullopt;
            a.F[al - 1][i - 1] = f;
            linear = add(linear, mul(f, Expr::var(c.v[al - 1][i - 1])));
        }
    a.G = sub(m.L, linear);
    if (!v_free(a.G)) return std::nullopt;
    return a;
}

// M^alpha_{ij} = dF^alpha_i/dq^j - dF^alpha_j/dq^i, stacked over rows
// (alpha,i) against columns j; its kernel gives the base directions of
// [X^k]^perp and its rank drives the constraint dispatch.
inline SymMatrix m_matrix_stacked(const AffineDecomposition& a, const LagrangianModel& m) {
    const BundleChart& c = m.chart;
    SymMatrix M(c.k * c.n, c.n);
    for (int al = 1; al <= c.k; ++al)
        for (int i = 1; i <= c.n; ++i)
            for (int j = 1; j <= c.n; ++j)
                M.at((al - 1) * c.n + (i - 1), j - 1) =
                    sub(m.d(a.F[al - 1][i - 1], c.q[j - 1]),
                        m.d(a.F[al - 1][j - 1], c.q[i - 1]));
    return M;
}

// Single-direction view M^alpha as an n x n antisymmetric matrix.
inline SymMatrix m_matrix(const AffineDecomposition& a, const LagrangianModel& m, int alpha) {
    const BundleChart& c = m.chart;
    SymMatrix M(c.n, c.n);
    for (int i = 1; i <= c.n; ++i)
        for (int j = 1; j <= c.n; ++j)
            M.at(i - 1, j - 1) = sub(m.d(a.F[alpha - 1][i - 1], c.q[j - 1]),
                                     m.d(a.F[alpha - 1][j - 1], c.q[i - 1]));
    return M;
}

struct AffineRun {
    RankCertificate rank_cert;
    std::size_t rank = 0;
    std::vector<Expr> zetas; // first-generation dynamical constraints
    std::vector<Expr> etas;  // first-generation sopde constraints
    FamilySolution family;
    std::optional<ConstraintSet> cs;
    int final_generation = 1;
    std::vector<Constraint> constraints;
    bool contradictory = false;
};

// Constraint chain for an affine Lagrangian straight from the closed-form
// expressions: zeta from base kernel vectors of M, eta_j = sum v M + dG/dq^j,
// then tangency sweeps on the same formulas. No Cartan matrices are built;
// this is the fast path cross-checking the generic algorithm.
inline AffineRun affine_fast_path(const LagrangianModel& m, std::uint64_t seed = 0,
                                  int max_iterations = 16) {
    auto dec = detect_affine(m);
    if (!dec) throw std::invalid_argument("affine_fast_path: Lagrangian is not affine");
    const AffineDecomposition& a = *dec;
    const BundleChart& c = m.chart;
    AffineRun run;
    SymMatrix M = m_matrix_stacked(a, m);
    std::vector<std::vector<Expr>> kernel;
    run.rank_cert = generic_rank(M, m.ctx(), seed, &kernel);
    run.rank = run.rank_cert.rank;
    ConstraintSet cs(m.ctx());

    // dG/dq^i once
    std::vector<Expr> dG(c.n);
    for (int i = 1; i <= c.n; ++i) dG[i - 1] = m.d(a.G, c.q[i - 1]);

    auto kfl = ker_fl_basis(m, seed); // affine: all verticals
    auto classifier = [&](const Expr& f) { return classify(f, m, cs, kfl); };

    // rank-case dispatch for the dynamical constraints
    std::vector<Expr> zeta_cands;
    if (run.rank == static_cast<std::size_t>(c.n)) {
        // maximal rank: the perp space is vertical, no dynamical constraints
    } else if (run.rank == 0) {
        // M = 0: every coordinate direction is in the perp space
        for (int i = 1; i <= c.n; ++i)
            if (!dG[i - 1].is_zero()) zeta_cands.push_back(dG[i - 1]);
    } else {
        for (std::size_t zi = 0; zi < kernel.size(); ++zi) {
            Expr z;
            for (int i = 0; i < c.n; ++i)
                if (!kernel[zi][i].is_zero()) z = add(z, mul(kernel[zi][i], dG[i]));
            if (!z.is_zero()) zeta_cands.push_back(std::move(z));
        }
    }
    insert_linear_family(cs, zeta_cands, 1, "zeta1", classifier);
    for (const auto& con : cs.constraints()) run.zetas.push_back(con.expr);

    // eta_j = sum_{alpha,i} v^i_alpha M^alpha_{ij} + dG/dq^j, pruned mod zeta
    std::vector<Expr> eta_cands;
    for (int j = 1; j <= c.n; ++j) {
        Expr e = dG[j - 1];
        for (int al = 1; al <= c.k; ++al)
            for (int i = 1; i <= c.n; ++i) {
                const Expr& mij = M.at((al - 1) * c.n + (i - 1), j - 1);
                if (!mij.is_zero()) e = add(e, mul(Expr::var(c.v[al - 1][i - 1]), mij));
            }
        if (!e.is_zero()) eta_cands.push_back(std::move(e));
    }
    std::size_t zeta_total = cs.constraints().size();
    insert_linear_family(cs, eta_cands, 1, "eta1", classifier);
    for (std::size_t i = zeta_total; i < cs.constraints().size(); ++i)
        run.etas.push_back(cs.constraints()[i].expr);

    // sopde family: fiber components are fresh unknowns
    FamilySolution fam;
    std::vector<std::vector<Expr>> comps(c.k, std::vector<Expr>(c.dim()));
    for (int al = 1; al <= c.k; ++al) {
        for (int i = 1; i <= c.n; ++i)
            comps[al - 1][c.idx_q(i)] = Expr::var(c.v[al - 1][i - 1]);
        for (int b = 1; b <= c.k; ++b)
            for (int i = 1; i <= c.n; ++i) {
                SymId u = detail::fresh_param(m.tab(), "X" + std::to_string(al) + "_" +
                                                           std::to_string(i) + "_" +
                                                           std::to_string(b));
                fam.free_params.push_back(u);
                comps[al - 1][c.idx_v(i, b)] = Expr::var(u);
            }
        fam.family.fields.push_back({comps[al - 1]});
    }
    fam.family.parameters = fam.free_params;

    int generation = 1;
    if (!cs.contradictory()) {
        for (int it = 0; it < max_iterations; ++it) {
            TangencyOutcome t = tangency_step(m, cs, fam, kfl, generation + 1);
            if (cs.contradictory()) break;
            if (t.new_constraints == 0) break;
            ++generation;
        }
    }
    run.contradictory = cs.contradictory();
    run.final_generation = generation;
    run.constraints = cs.constraints();
    run.family = fam;
    run.cs = std::move(cs);
    return run;
}

} // namespace ksymp

#endif // KSYMP_AFFINE_HPP
