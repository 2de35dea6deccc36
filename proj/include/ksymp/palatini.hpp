#ifndef KSYMP_PALATINI_HPP
#define KSYMP_PALATINI_HPP

#include "ksymp/affine.hpp"

namespace ksymp {

// Metric-affine gravity on a d-dimensional space-time chart (d = 4, or 3 for
// the truncated run): fiber coordinates g_ab (ordered pairs) and the
// connection components Gm^nu_{la ga}; k = d directions. The density rho and
// the inverse metric entries are argument-free atoms with derivative rules.
struct PalatiniModel {
    LagrangianModel model;
    int d = 4;
    std::vector<std::vector<SymId>> g;                    // [a][b] symmetric
    std::vector<std::vector<std::vector<SymId>>> con;     // [nu][la][ga]
    std::vector<std::vector<VarId>> gi;                   // inverse atoms
    VarId rho = 0;
    SymId rho_head = 0;

    const BundleChart& chart() const { return model.chart; }

    Expr gvar(int a, int b) const { return Expr::var(g[std::min(a, b)][std::max(a, b)]); }
    Expr givar(int a, int b) const { return Expr::var(gi[std::min(a, b)][std::max(a, b)]); }
    Expr cvar(int nu, int la, int ga) const { return Expr::var(con[nu][la][ga]); }
    // velocity of a fiber coordinate in direction mu (0-based)
    Expr vel(SymId coord, int mu) const {
        const BundleChart& c = model.chart;
        int ci = model.tab().info(coord).coord_index;
        return Expr::var(c.v[mu][ci - 1]);
    }
    Expr gvel(int a, int b, int mu) const { return vel(g[std::min(a, b)][std::max(a, b)], mu); }
    Expr cvel(int nu, int la, int ga, int mu) const { return vel(con[nu][la][ga], mu); }

    // torsion T^a_{bc} = Gm^a_{bc} - Gm^a_{cb} and its velocity-level lift
    Expr torsion(int a, int b, int c) const { return sub(cvar(a, b, c), cvar(a, c, b)); }
    Expr torsion_vel(int a, int b, int c, int mu) const {
        return sub(cvel(a, b, c, mu), cvel(a, c, b, mu));
    }
};

inline PalatiniModel build_einstein_palatini(int d = 4) {
    if (d < 2 || d > 4) throw std::invalid_argument("palatini: dimension must be 2..4");
    PalatiniModel pm;
    pm.d = d;
    std::vector<std::string> names;
    for (int a = 0; a < d; ++a)
        for (int b = a; b < d; ++b) names.push_back("g" + std::to_string(a) + std::to_string(b));
    for (int nu = 0; nu < d; ++nu)
        for (int la = 0; la < d; ++la)
            for (int ga = 0; ga < d; ++ga)
                names.push_back("Gm" + std::to_string(nu) + "_" + std::to_string(la) +
                                std::to_string(ga));
    int n = static_cast<int>(names.size());
    BundleChart chart = BundleChart::create(n, d, names);
    SymbolTable& tab = *chart.tab;

    pm.g.assign(d, std::vector<SymId>(d));
    pm.con.assign(d, std::vector<std::vector<SymId>>(d, std::vector<SymId>(d)));
    {
        std::size_t idx = 0;
        for (int a = 0; a < d; ++a)
            for (int b = a; b < d; ++b) {
                pm.g[a][b] = pm.g[b][a] = chart.q[idx++];
            }
        for (int nu = 0; nu < d; ++nu)
            for (int la = 0; la < d; ++la)
                for (int ga = 0; ga < d; ++ga) pm.con[nu][la][ga] = chart.q[idx++];
    }
    pm.rho_head = tab.add_symbol("rho", SymKind::FunctionHead);
    pm.rho = tab.intern_atom(pm.rho_head, {}, {});
    pm.gi.assign(d, std::vector<VarId>(d));
    for (int a = 0; a < d; ++a)
        for (int b = a; b < d; ++b) {
            SymId h = tab.add_symbol("gi" + std::to_string(a) + std::to_string(b),
                                     SymKind::FunctionHead);
            pm.gi[a][b] = pm.gi[b][a] = tab.intern_atom(h, {}, {});
        }

    // Ricci components of the bare connection:
    // R_ab = Gm^c_{ba,c} - Gm^c_{ca,b} + Gm^c_{ba} Gm^s_{sc} - Gm^c_{bs} Gm^s_{ca}
    auto dir_vel = [&](int nu, int la, int ga, int mu) {
        int ci = tab.info(pm.con[nu][la][ga]).coord_index;
        return Expr::var(chart.v[mu][ci - 1]);
    };
    Expr L;
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) {
            Expr ric;
            for (int c = 0; c < d; ++c) {
                ric = add(ric, dir_vel(c, b, a, c));
                ric = sub(ric, dir_vel(c, c, a, b));
                for (int s = 0; s < d; ++s) {
                    ric = add(ric, mul(Expr::var(pm.con[c][b][a]), Expr::var(pm.con[s][s][c])));
                    ric = sub(ric, mul(Expr::var(pm.con[c][b][s]), Expr::var(pm.con[s][c][a])));
                }
            }
            L = add(L, mul(Expr::var(pm.gi[std::min(a, b)][std::max(a, b)]), ric));
        }
    L = mul(Expr::var(pm.rho), L);

    LagrangianModel model(std::move(chart), std::move(L));

    // derivative rules on the ordered-index metric entries:
    //   d rho / d g_rs   = 1/2 (2 - delta_rs) rho gi^rs
    //   d gi^ab / d g_rs = -(gi^ar gi^sb + gi^as gi^rb)  (halved on r = s)
    for (int r = 0; r < d; ++r)
        for (int s = r; s < d; ++s) {
            SymId grs = pm.g[r][s];
            Rat w = r == s ? Rat(1, 2) : Rat(1);
            model.rules.add_rule(pm.rho_head, grs,
                                 scale(mul(Expr::var(pm.rho), pm.givar(r, s)), w));
            for (int a = 0; a < d; ++a)
                for (int b = a; b < d; ++b) {
                    Expr rhs = mul(pm.givar(a, r), pm.givar(s, b));
                    if (r != s) rhs = add(rhs, mul(pm.givar(a, s), pm.givar(r, b)));
                    SymId head = model.chart.tab->atom(pm.gi[a][b]).head;
                    model.rules.add_rule(head, grs, neg(rhs));
                }
        }

    model.invertible_heads.insert(pm.rho_head);
    MetricPair mpair;
    mpair.dim = d;
    mpair.g.assign(d, std::vector<SymId>(d));
    mpair.ginv.assign(d, std::vector<VarId>(d));
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) {
            mpair.g[a][b] = pm.g[a][b];
            mpair.ginv[a][b] = pm.gi[a][b];
        }
    model.metric = std::move(mpair);
    model.validate();
    pm.model = std::move(model);
    return pm;
}

// Constraint families transcribed from the closed-form expressions; used only
// as comparison oracles for the generic engine output.
struct PalatiniExpected {
    std::vector<Expr> torsion;       // first generation, dynamical
    std::vector<Expr> premetricity;  // first generation, sopde
    std::vector<Expr> connection;    // first generation, sopde
    std::vector<Expr> second_torsion; // second generation
};

// (zeta_1)^a_{bc} = T^a_{bc} - w d^a_b T^n_{nc} + w d^a_c T^n_{nb} with the
// trace weight w = 1/(d-1); the displayed 1/3 is its d = 4 value.
inline Expr torsion_constraint(const PalatiniModel& pm, int a, int b, int c) {
    Expr e = pm.torsion(a, b, c);
    Expr tb, tc;
    for (int nn = 0; nn < pm.d; ++nn) {
        tc = add(tc, pm.torsion(nn, nn, c));
        tb = add(tb, pm.torsion(nn, nn, b));
    }
    Rat w(1, pm.d - 1);
    if (a == b) e = sub(e, scale(tc, w));
    if (a == c) e = add(e, scale(tb, w));
    return e;
}

inline Expr second_torsion_constraint(const PalatiniModel& pm, int a, int b, int c, int nu) {
    Expr e = pm.torsion_vel(a, b, c, nu);
    Expr tb, tc;
    for (int mm = 0; mm < pm.d; ++mm) {
        tc = add(tc, pm.torsion_vel(mm, mm, c, nu));
        tb = add(tb, pm.torsion_vel(mm, mm, b, nu));
    }
    Rat w(1, pm.d - 1);
    if (a == b) e = sub(e, scale(tc, w));
    if (a == c) e = add(e, scale(tb, w));
    return e;
}

// -g_{rs,m} + g_{s l} Gm^l_{m r} + g_{r l} Gm^l_{m s} + 2/(d-1) g_{rs} T^l_{lm}
inline Expr premetricity_constraint(const PalatiniModel& pm, int r, int s, int mu) {
    Expr e = neg(pm.gvel(r, s, mu));
    for (int l = 0; l < pm.d; ++l) {
        e = add(e, mul(pm.gvar(s, l), pm.cvar(l, mu, r)));
        e = add(e, mul(pm.gvar(r, l), pm.cvar(l, mu, s)));
    }
    Expr trace;
    for (int l = 0; l < pm.d; ++l) trace = add(trace, pm.torsion(l, l, mu));
    return add(e, scale(mul(pm.gvar(r, s), trace), Rat(2, pm.d - 1)));
}

// S^a_{bc,lrn}: the displayed kernel generators of the connection block.
inline Expr s_tensor(const PalatiniModel& pm, int a, int b, int c, int l, int r, int n) {
    Expr e;
    auto term = [&](int x1, int y1, int x2, int y2, int up, Rat w) {
        if (a != up) return;
        e = add(e, scale(mul(pm.gvar(x1, y1), pm.gvar(x2, y2)), w));
    };
    Rat w(1, pm.d - 1);
    term(l, n, r, b, c, w);
    term(r, n, l, b, c, -w);
    term(r, n, l, c, b, w);
    term(l, n, r, c, b, -w);
    term(l, b, r, c, n, Rat(1));
    term(r, b, l, c, n, Rat(-1));
    return e;
}

// The connection constraints are assembled from the Lagrangian data itself:
// -Gm^a_{bc,m} dF^{bc,m}_a/dg_{rs} + dG/dg_{rs}.
inline std::vector<Expr> connection_constraints(const PalatiniModel& pm,
                                                const AffineDecomposition& dec) {
    const LagrangianModel& m = pm.model;
    std::vector<Expr> out;
    for (int r = 0; r < pm.d; ++r)
        for (int s = r; s < pm.d; ++s) {
            SymId grs = pm.g[r][s];
            Expr e = m.d(dec.G, grs);
            for (int a = 0; a < pm.d; ++a)
                for (int b = 0; b < pm.d; ++b)
                    for (int c = 0; c < pm.d; ++c)
                        for (int mu = 0; mu < pm.d; ++mu) {
                            int ci = m.tab().info(pm.con[a][b][c]).coord_index;
                            const Expr& F = dec.F[mu][ci - 1];
                            if (F.is_zero()) continue;
                            Expr dF = m.d(F, grs);
                            if (dF.is_zero()) continue;
                            e = sub(e, mul(pm.cvel(a, b, c, mu), dF));
                        }
            out.push_back(e);
        }
    return out;
}

inline PalatiniExpected ep_expected_constraints(const PalatiniModel& pm) {
    PalatiniExpected out;
    for (int a = 0; a < pm.d; ++a)
        for (int b = 0; b < pm.d; ++b)
            for (int c = b + 1; c < pm.d; ++c) {
                Expr e = torsion_constraint(pm, a, b, c);
                if (!e.is_zero()) out.torsion.push_back(e);
            }
    for (int r = 0; r < pm.d; ++r)
        for (int s = r; s < pm.d; ++s)
            for (int mu = 0; mu < pm.d; ++mu)
                out.premetricity.push_back(premetricity_constraint(pm, r, s, mu));
    auto dec = detect_affine(pm.model);
    if (!dec) throw std::logic_error("Einstein-Palatini Lagrangian failed affine detection");
    out.connection = connection_constraints(pm, *dec);
    for (int a = 0; a < pm.d; ++a)
        for (int b = 0; b < pm.d; ++b)
            for (int c = b + 1; c < pm.d; ++c)
                for (int nu = 0; nu < pm.d; ++nu) {
                    Expr e = second_torsion_constraint(pm, a, b, c, nu);
                    if (!e.is_zero()) out.second_torsion.push_back(e);
                }
    return out;
}

// Vertical fields along the connection directions built from the S-tensors
// (and the delta family C_b d^a_c); both must satisfy the kernel equations
// f^a_{bc} dF^{bc,m}_a / dg_{rs} = 0.
inline VectorFieldOnTkQ s_tensor_field(const PalatiniModel& pm, int l, int r, int n) {
    const BundleChart& c = pm.model.chart;
    VectorFieldOnTkQ z;
    z.comps.assign(c.dim(), Expr());
    for (int a = 0; a < pm.d; ++a)
        for (int b = 0; b < pm.d; ++b)
            for (int g = 0; g < pm.d; ++g) {
                Expr e = s_tensor(pm, a, b, g, l, r, n);
                if (e.is_zero()) continue;
                int ci = pm.model.tab().info(pm.con[a][b][g]).coord_index;
                z.comps[c.idx_q(ci)] = e;
            }
    return z;
}

inline VectorFieldOnTkQ c_delta_field(const PalatiniModel& pm, int b) {
    const BundleChart& c = pm.model.chart;
    VectorFieldOnTkQ z;
    z.comps.assign(c.dim(), Expr());
    for (int a = 0; a < pm.d; ++a) {
        int ci = pm.model.tab().info(pm.con[a][b][a]).coord_index;
        z.comps[c.idx_q(ci)] = Expr::constant(1);
    }
    return z;
}

// Coefficient matrix of the kernel equations: rows (r<=s, m), one column per
// chart coordinate, entries dF^{bc,m}_a/dg_{rs} on the connection columns.
inline SymMatrix connection_kernel_matrix(const PalatiniModel& pm,
                                          const AffineDecomposition& dec) {
    const LagrangianModel& m = pm.model;
    const BundleChart& c = m.chart;
    SymMatrix M(0, c.dim());
    for (int r = 0; r < pm.d; ++r)
        for (int s = r; s < pm.d; ++s) {
            SymId grs = pm.g[r][s];
            for (int mu = 0; mu < pm.d; ++mu) {
                std::vector<Expr> row(c.dim());
                for (int a = 0; a < pm.d; ++a)
                    for (int b = 0; b < pm.d; ++b)
                        for (int gg = 0; gg < pm.d; ++gg) {
                            int ci = m.tab().info(pm.con[a][b][gg]).coord_index;
                            const Expr& F = dec.F[mu][ci - 1];
                            if (F.is_zero()) continue;
                            row[c.idx_q(ci)] = m.d(F, grs);
                        }
                for (auto& e : row) M.a.push_back(std::move(e));
                ++M.rows;
            }
        }
    return M;
}

// Kernel equations for a connection-direction field: every row contraction
// reduces to zero after the inverse-metric rewrite.
inline bool satisfies_kernel_equations(const PalatiniModel& pm, const SymMatrix& kmat,
                                       const VectorFieldOnTkQ& z) {
    NormContext ctx = pm.model.ctx();
    for (const Expr& r : mat_vec(kmat, z.comps))
        if (!ctx.reduces_to_zero(r)) return false;
    return true;
}

} // namespace ksymp

#endif // KSYMP_PALATINI_HPP
