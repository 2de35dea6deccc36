#ifndef KSYMP_ALGORITHM_HPP
#define KSYMP_ALGORITHM_HPP

#include "ksymp/constraints.hpp"
#include "ksymp/geometry.hpp"

namespace ksymp {

namespace detail {

// drop identically zero rows; kernel and row space are unchanged
inline SymMatrix drop_zero_rows(const SymMatrix& m) {
    SymMatrix out(0, m.cols);
    out.rows = 0;
    for (std::size_t i = 0; i < m.rows; ++i) {
        bool nz = false;
        for (std::size_t j = 0; j < m.cols; ++j)
            if (!m.at(i, j).is_zero()) {
                nz = true;
                break;
            }
        if (!nz) continue;
        for (std::size_t j = 0; j < m.cols; ++j) out.a.push_back(m.at(i, j));
        ++out.rows;
    }
    return out;
}

} // namespace detail

// [X^k(T^1_kQ)]^perp = intersection of Ker omega^alpha: kernel of the k
// stacked two-form matrices acting on a single field's components.
inline std::vector<VectorFieldOnTkQ> perp_basis(const LagrangianModel& m, std::uint64_t seed = 0) {
    const int dim = m.chart.dim();
    const auto& omega = m.omega();
    SymMatrix stacked(0, dim);
    for (int a = 0; a < m.chart.k; ++a)
        for (int r = 0; r < dim; ++r) {
            for (int c = 0; c < dim; ++c) stacked.a.push_back(omega.w[a].at(r, c));
            ++stacked.rows;
        }
    auto kb = kernel_basis(detail::drop_zero_rows(stacked), m.ctx(), seed);
    std::vector<VectorFieldOnTkQ> out;
    for (auto& v : kb) out.push_back({std::move(v)});
    return out;
}

// Ker FL_*: vertical fields whose fiber component vector kills the Hessian.
inline std::vector<VectorFieldOnTkQ> ker_fl_basis(const LagrangianModel& m,
                                                  std::uint64_t seed = 0) {
    const BundleChart& c = m.chart;
    auto kb = kernel_basis(detail::drop_zero_rows(m.hessian()), m.ctx(), seed);
    std::vector<VectorFieldOnTkQ> out;
    for (auto& v : kb) {
        VectorFieldOnTkQ f;
        f.comps.assign(c.dim(), Expr());
        for (int s = 0; s < c.n * c.k; ++s) f.comps[c.n + s] = std::move(v[s]);
        out.push_back(std::move(f));
    }
    return out;
}

// M-space [X^{kV}]^perp: base components in the kernel of every Hessian slab,
// fiber directions unconstrained.
inline std::vector<VectorFieldOnTkQ> m_space_basis(const LagrangianModel& m,
                                                   std::uint64_t seed = 0) {
    const BundleChart& c = m.chart;
    const SymMatrix& H = m.hessian();
    // rows (a, (j,b)) carry the condition sum_i H[(i,a)(j,b)] Z^i = 0
    SymMatrix stacked(0, c.n);
    for (int a = 1; a <= c.k; ++a)
        for (int jb = 0; jb < c.n * c.k; ++jb) {
            for (int i = 1; i <= c.n; ++i)
                stacked.a.push_back(H.at(c.vslot(i, a), jb));
            ++stacked.rows;
        }
    auto kb = kernel_basis(detail::drop_zero_rows(stacked), m.ctx(), seed);
    std::vector<VectorFieldOnTkQ> out;
    for (auto& v : kb) {
        VectorFieldOnTkQ f;
        f.comps.assign(c.dim(), Expr());
        for (int i = 0; i < c.n; ++i) f.comps[i] = std::move(v[i]);
        out.push_back(std::move(f));
    }
    for (int s = 0; s < c.n * c.k; ++s) {
        VectorFieldOnTkQ f;
        f.comps.assign(c.dim(), Expr());
        f.comps[c.n + s] = Expr::constant(1);
        out.push_back(std::move(f));
    }
    return out;
}

// FL-projectability test: dynamical constraints are annihilated by every
// Ker FL_* direction modulo the constraint set; sopde constraints are not.
inline ConstraintClass classify(const Expr& f, const LagrangianModel& m, const ConstraintSet& cs,
                                const std::vector<VectorFieldOnTkQ>& ker_fl) {
    for (const auto& V : ker_fl)
        if (!cs.reduces_to_zero(apply(V, f, m))) return ConstraintClass::Sopde;
    return ConstraintClass::Dynamical;
}

struct FamilySolution {
    KVectorFieldFamily family;
    std::vector<Determination> determinations;
    std::vector<SymId> free_params;
};

namespace detail {

inline SymId fresh_param(const SymbolTable& tab, std::string base) {
    std::string name = base;
    int suffix = 0;
    while (tab.has_symbol(name)) name = base + "_u" + std::to_string(++suffix);
    return const_cast<SymbolTable&>(tab).add_symbol(name, SymKind::Parameter);
}

// Equations i(.)(Omega_L(X) - dE) = 0 per coordinate direction, where X has
// the given per-direction component exprs.
inline std::vector<Expr> lagrangian_equations(const LagrangianModel& m,
                                              const std::vector<std::vector<Expr>>& comps) {
    const BundleChart& c = m.chart;
    const int dim = c.dim();
    std::vector<Expr> eq(dim);
    const auto& omega = m.omega();
    for (int a = 0; a < c.k; ++a)
        for (int x = 0; x < dim; ++x) {
            if (comps[a][x].is_zero()) continue;
            for (int y = 0; y < dim; ++y) {
                const Expr& w = omega.w[a].at(x, y);
                if (w.is_zero()) continue;
                eq[y] = add(eq[y], mul(comps[a][x], w));
            }
        }
    const OneForm& dE = m.denergy();
    for (int y = 0; y < dim; ++y) eq[y] = sub(eq[y], dE[y]);
    return eq;
}

inline void substitute_family(KVectorFieldFamily& fam, const std::map<VarId, Expr>& sub) {
    for (auto& f : fam.fields)
        for (auto& e : f.comps) e = subst(e, sub);
}

} // namespace detail

// Compatibility stage: dynamical constraints zeta_1 = i(Z)dE over the perp
// basis, inserted into a fresh constraint set.
inline ConstraintSet zeta_stage(const LagrangianModel& m,
                                const std::vector<VectorFieldOnTkQ>& perp,
                                const std::vector<VectorFieldOnTkQ>& ker_fl) {
    ConstraintSet cs(m.ctx());
    const OneForm& dE = m.denergy();
    std::vector<Expr> cands;
    for (std::size_t zi = 0; zi < perp.size(); ++zi) {
        Expr z = pair(dE, perp[zi]);
        if (!z.is_zero()) cands.push_back(std::move(z));
    }
    insert_linear_family(cs, cands, 1, "zeta1",
                         [&](const Expr& f) { return classify(f, m, cs, ker_fl); });
    return cs;
}

// General Lagrangian k-vector fields on P1: all components unknown.
inline FamilySolution lagrangian_family(const LagrangianModel& m, const ConstraintSet& p1) {
    const BundleChart& c = m.chart;
    const int dim = c.dim();
    FamilySolution out;
    std::vector<std::vector<Expr>> comps(c.k, std::vector<Expr>(dim));
    std::vector<SymId> unknowns;
    for (int a = 1; a <= c.k; ++a) {
        for (int i = 1; i <= c.n; ++i) {
            SymId u = detail::fresh_param(m.tab(), "X" + std::to_string(a) + "_" +
                                                       std::to_string(i));
            unknowns.push_back(u);
            comps[a - 1][c.idx_q(i)] = Expr::var(u);
        }
        for (int b = 1; b <= c.k; ++b)
            for (int i = 1; i <= c.n; ++i) {
                SymId u = detail::fresh_param(m.tab(), "X" + std::to_string(a) + "_" +
                                                           std::to_string(i) + "_" +
                                                           std::to_string(b));
                unknowns.push_back(u);
                comps[a - 1][c.idx_v(i, b)] = Expr::var(u);
            }
    }
    std::vector<Expr> eqs = detail::lagrangian_equations(m, comps);
    for (auto& e : eqs) e = p1.reduce(e);
    auto sol = solve_equations(eqs, unknowns, m.ctx());
    // consistency rows lie in the span of the zeta constraints
    for (const auto& r : sol.consistency)
        if (!p1.reduces_to_zero(r))
            throw std::logic_error("lagrangian_family: consistency escaped P1");

    std::map<VarId, Expr> subs;
    for (const auto& d : sol.determined)
        if (d.pivot == Expr::constant(1)) subs[d.unknown] = d.rhs;
    out.family.fields.assign(c.k, VectorFieldOnTkQ{});
    for (int a = 0; a < c.k; ++a) {
        out.family.fields[a].comps = comps[a];
        for (auto& e : out.family.fields[a].comps) e = subst(e, subs);
    }
    out.determinations = sol.determined;
    out.free_params = sol.free_unknowns;
    out.family.parameters = sol.free_unknowns;
    for (const auto& d : sol.determined)
        if (!(d.pivot == Expr::constant(1))) out.family.parameters.push_back(d.unknown);
    return out;
}

inline std::pair<ConstraintSet, FamilySolution> first_generation(const LagrangianModel& m,
                                                                 std::uint64_t seed = 0) {
    auto perp = perp_basis(m, seed);
    auto kfl = ker_fl_basis(m, seed);
    ConstraintSet p1 = zeta_stage(m, perp, kfl);
    FamilySolution fam = lagrangian_family(m, p1);
    return {std::move(p1), std::move(fam)};
}

// SOPDE stage: base components pinned to the velocities, fiber components
// fresh unknowns; consistency conditions of the full Lagrangian system become
// the first-generation sopde constraints.
inline FamilySolution sopde_generation(const LagrangianModel& m, ConstraintSet& cs,
                                       const std::vector<VectorFieldOnTkQ>& ker_fl) {
    const BundleChart& c = m.chart;
    const int dim = c.dim();
    FamilySolution out;
    std::vector<std::vector<Expr>> comps(c.k, std::vector<Expr>(dim));
    std::vector<SymId> unknowns;
    for (int a = 1; a <= c.k; ++a) {
        for (int i = 1; i <= c.n; ++i)
            comps[a - 1][c.idx_q(i)] = Expr::var(c.v[a - 1][i - 1]);
        for (int b = 1; b <= c.k; ++b)
            for (int i = 1; i <= c.n; ++i) {
                SymId u = detail::fresh_param(m.tab(), "X" + std::to_string(a) + "_" +
                                                           std::to_string(i) + "_" +
                                                           std::to_string(b));
                unknowns.push_back(u);
                comps[a - 1][c.idx_v(i, b)] = Expr::var(u);
            }
    }
    std::vector<Expr> eqs = detail::lagrangian_equations(m, comps);
    for (auto& e : eqs) e = cs.reduce(e);
    auto sol = solve_equations(eqs, unknowns, m.ctx());

    insert_linear_family(cs, sol.consistency, 1, "eta1",
                         [&](const Expr& f) { return classify(f, m, cs, ker_fl); });

    std::map<VarId, Expr> subs;
    for (const auto& d : sol.determined)
        if (d.pivot == Expr::constant(1)) subs[d.unknown] = d.rhs;
    out.family.fields.assign(c.k, VectorFieldOnTkQ{});
    for (int a = 0; a < c.k; ++a) {
        out.family.fields[a].comps = comps[a];
        for (auto& e : out.family.fields[a].comps) e = subst(e, subs);
    }
    out.determinations = sol.determined;
    out.free_params = sol.free_unknowns;
    out.family.parameters = sol.free_unknowns;
    for (const auto& d : sol.determined)
        if (!(d.pivot == Expr::constant(1))) out.family.parameters.push_back(d.unknown);
    return out;
}

struct TangencyOutcome {
    std::size_t new_constraints = 0;
    std::size_t new_determinations = 0;
    std::vector<std::string> warnings;
};

// One tangency sweep: solve Gamma_alpha(c) = 0 over the remaining free fiber
// parameters, sopde-class constraints first (their residuals are absorbable
// by the kernel freedom), then dynamical ones whose residuals are the next
// generation of constraints.
inline TangencyOutcome tangency_step(const LagrangianModel& m, ConstraintSet& cs,
                                     FamilySolution& fam,
                                     const std::vector<VectorFieldOnTkQ>& ker_fl,
                                     int generation) {
    TangencyOutcome out;
    const BundleChart& c = m.chart;

    // pseudo-determined parameters are eliminated from equations up front
    auto pseudo_relations = [&]() {
        std::vector<SolvedRelation> rels;
        for (const auto& d : fam.determinations)
            if (!(d.pivot == Expr::constant(1)))
                rels.push_back({d.unknown, d.pivot, d.rhs, 0});
        return rels;
    }();

    auto run_pass = [&](ConstraintClass which, bool expect_absorbed) {
        std::vector<Expr> eqs;
        for (const auto& con : cs.constraints()) {
            if (con.klass != which) continue;
            for (int a = 0; a < c.k; ++a) {
                Expr t = apply(fam.family.fields[a], con.expr, m);
                for (const auto& rel : pseudo_relations) {
                    unsigned d = degree_in(t, rel.coord);
                    while (d > 0) {
                        auto parts = collect_in(t, rel.coord);
                        Expr lead = parts[d];
                        Expr rest;
                        for (auto& [kx, ce] : parts) {
                            if (kx == d) continue;
                            Mono mm;
                            if (kx) mm.f.emplace_back(rel.coord, kx);
                            rest = add(rest, mul_mono(ce, mm, Rat(1)));
                        }
                        Expr repl = mul(lead, rel.rhs);
                        if (d > 1) {
                            Mono mm;
                            mm.f.emplace_back(rel.coord, d - 1);
                            repl = mul_mono(repl, mm, Rat(1));
                        }
                        t = add(mul(rel.pivot, rest), repl);
                        d = degree_in(t, rel.coord);
                    }
                }
                t = cs.reduce(t);
                if (!t.is_zero()) eqs.push_back(t);
            }
        }
        if (eqs.empty()) return;
        auto sol = solve_equations(eqs, fam.free_params, m.ctx());

        std::map<VarId, Expr> subs;
        for (const auto& d : sol.determined) {
            fam.determinations.push_back(d);
            ++out.new_determinations;
            if (d.pivot == Expr::constant(1)) subs[d.unknown] = d.rhs;
        }
        fam.free_params = sol.free_unknowns;
        fam.family.parameters = sol.free_unknowns;
        for (const auto& d : fam.determinations)
            if (!(d.pivot == Expr::constant(1))) fam.family.parameters.push_back(d.unknown);
        detail::substitute_family(fam.family, subs);
        for (auto& d : fam.determinations) d.rhs = subst(d.rhs, subs);

        FamilyInsertStats stats = insert_linear_family(
            cs, sol.consistency, generation,
            expect_absorbed ? "tangency-sopde" : "tangency",
            [&](const Expr& f) { return classify(f, m, cs, ker_fl); });
        out.new_constraints += stats.added;
        if (stats.added > 0 && expect_absorbed)
            out.warnings.push_back(
                "tangency of a sopde constraint produced a new constraint; "
                "this contradicts the genericity of the absorption lemma");
    };

    run_pass(ConstraintClass::Sopde, true);
    if (!cs.contradictory()) run_pass(ConstraintClass::Dynamical, false);
    return out;
}

struct ProjectabilityReport {
    bool checked = false;
    bool trivially_projectable = false;
    bool obstruction_found = false;
    std::string note;
};

struct RankInfo {
    std::string name;
    std::size_t rank = 0;
    std::string certificate;
};

struct AlgorithmReport {
    enum class Status { Stabilized, EmptyManifold, IterationCap };
    Status status = Status::Stabilized;
    int final_generation = 1;
    std::size_t iterations = 0;
    std::vector<Constraint> constraints;
    FamilySolution solution;
    std::vector<std::pair<std::string, Expr>> integrability;
    std::vector<std::pair<SymId, VarId>> free_atoms; // parameter -> atom var
    std::vector<std::string> warnings;
    std::vector<RankInfo> ranks;
    bool constraints_independent = true;
    ProjectabilityReport projectability;
    std::optional<ConstraintSet> final_set;
};

struct StabilizeOptions {
    int max_iterations = 16;
    std::uint64_t seed = 0;
    bool skip_integrability = false;
    bool projectability = true;
};

// Remaining free parameters become formal-function atoms of every bundle
// coordinate, so integrability residuals carry their formal derivatives.
inline std::map<VarId, Expr> atomize_free_parameters(const LagrangianModel& m,
                                                     FamilySolution& fam,
                                                     std::vector<std::pair<SymId, VarId>>& out) {
    static const char* kNames[] = {"A", "B", "C", "D", "E", "F", "G", "H",
                                   "K", "N", "P", "R", "S", "T", "U", "W"};
    std::map<VarId, Expr> sub;
    SymbolTable& tab = const_cast<SymbolTable&>(m.tab());
    std::size_t next = 0;
    for (SymId p : fam.free_params) {
        std::string name;
        do {
            name = next < 16 ? kNames[next] : "A" + std::to_string(next - 15);
            ++next;
        } while (tab.has_symbol(name));
        SymId head = tab.add_symbol(name, SymKind::FunctionHead);
        std::vector<SymId> args(m.chart.coords.begin(), m.chart.coords.end());
        std::vector<std::uint16_t> multi(args.size(), 0);
        VarId atom = tab.intern_atom(head, args, multi);
        sub[p] = Expr::var(atom);
        out.emplace_back(p, atom);
    }
    detail::substitute_family(fam.family, sub);
    return sub;
}

// All components of [Gamma_a, Gamma_b], a < b, reduced modulo the final set.
inline std::vector<std::pair<std::string, Expr>> integrability_conditions(
    const KVectorFieldFamily& fam, const ConstraintSet& cs, const LagrangianModel& m) {
    std::vector<std::pair<std::string, Expr>> out;
    const BundleChart& c = m.chart;
    for (std::size_t a = 0; a < fam.fields.size(); ++a)
        for (std::size_t b = a + 1; b < fam.fields.size(); ++b) {
            VectorFieldOnTkQ br = lie_bracket(fam.fields[a], fam.fields[b], m);
            for (int x = 0; x < c.dim(); ++x) {
                Expr r = cs.reduce(br.comps[x]);
                if (r.is_zero()) continue;
                out.emplace_back("[X_" + std::to_string(a + 1) + ",X_" + std::to_string(b + 1) +
                                     "] along " + c.tab->var_name(c.coords[x]),
                                 r);
            }
        }
    return out;
}

// Looks for two points of the final submanifold in one Legendre fibre; their
// existence obstructs FL-projectable sopde solutions.
inline ProjectabilityReport projectability_diagnostic(const LagrangianModel& m,
                                                      const ConstraintSet& cs,
                                                      std::uint64_t seed) {
    ProjectabilityReport rep;
    rep.checked = true;
    const BundleChart& c = m.chart;
    auto kfl = ker_fl_basis(m, seed);
    if (kfl.empty()) {
        rep.trivially_projectable = true;
        rep.note = "Legendre map is a local diffeomorphism";
        return rep;
    }
    std::mt19937_64 rng(seed ^ 0x5bd1e995u);
    std::set<VarId> vars(c.coords.begin(), c.coords.end());
    std::vector<Expr> momenta;
    for (int a = 1; a <= c.k; ++a)
        for (int i = 1; i <= c.n; ++i) momenta.push_back(m.d(m.L, c.v[a - 1][i - 1]));
    for (int attempt = 0; attempt < 24; ++attempt) {
        auto p1 = cs.sample_on_locus(vars, rng);
        if (!p1) break;
        // second point with the same base coordinates
        for (int inner = 0; inner < 8; ++inner) {
            auto p2 = cs.sample_on_locus(vars, rng);
            if (!p2) break;
            for (int i = 0; i < c.n; ++i) (*p2)[c.q[i]] = (*p1)[c.q[i]];
            // re-derive solved coordinates under the forced base values
            bool ok = true;
            for (const auto& rel : cs.relations()) {
                Rat pv = eval_rational(rel.pivot, *p2);
                if (pv.is_zero()) {
                    ok = false;
                    break;
                }
                (*p2)[rel.coord] = eval_rational(rel.rhs, *p2) / pv;
            }
            if (!ok) continue;
            for (std::size_t i : cs.residuals())
                if (!eval_rational(cs.constraints()[i].expr, *p2).is_zero()) ok = false;
            if (!ok) continue;
            bool same_fibre = true, distinct = false;
            for (const auto& p : momenta)
                if (eval_rational(p, *p1) != eval_rational(p, *p2)) same_fibre = false;
            for (int a = 1; a <= c.k && !distinct; ++a)
                for (int i = 1; i <= c.n; ++i)
                    if ((*p1)[c.v[a - 1][i - 1]] != (*p2)[c.v[a - 1][i - 1]]) distinct = true;
            if (same_fibre && distinct) {
                rep.obstruction_found = true;
                rep.note = "two points of the final submanifold share a Legendre fibre";
                return rep;
            }
        }
    }
    rep.note = "no fibre-degeneracy witness found";
    return rep;
}

// Full-row-rank certificate by exact evaluation of a maximal minor.
inline bool constraints_functionally_independent(const std::vector<Constraint>& cons,
                                                 const LagrangianModel& m, std::uint64_t seed) {
    if (cons.empty()) return true;
    const BundleChart& c = m.chart;
    SymMatrix J(cons.size(), c.dim());
    for (std::size_t i = 0; i < cons.size(); ++i)
        for (int x = 0; x < c.dim(); ++x) J.at(i, x) = m.d(cons[i].expr, c.coords[x]);
    std::mt19937_64 rng(seed ^ 0xabcdefull);
    std::set<VarId> vars = matrix_variables(J);
    for (int attempt = 0; attempt < 4; ++attempt) {
        auto pt = sample_point(vars, m.ctx(), rng);
        ratmat::Mat num(J.rows, std::vector<Rat>(J.cols, Rat(0)));
        for (std::size_t i = 0; i < J.rows; ++i)
            for (std::size_t j = 0; j < J.cols; ++j)
                if (!J.at(i, j).is_zero()) num[i][j] = eval_rational(J.at(i, j), pt);
        if (ratmat::rank(num) == cons.size()) return true;
    }
    return false;
}

inline AlgorithmReport stabilize(const LagrangianModel& m, const StabilizeOptions& opt = {}) {
    AlgorithmReport rep;
    auto perp = perp_basis(m, opt.seed);
    auto kfl = ker_fl_basis(m, opt.seed);

    ConstraintSet cs = zeta_stage(m, perp, kfl);
    FamilySolution fam;
    if (!cs.contradictory()) {
        fam = sopde_generation(m, cs, kfl);
    }

    int generation = 1;
    if (!cs.contradictory()) {
        for (int it = 0; it < opt.max_iterations; ++it) {
            TangencyOutcome t = tangency_step(m, cs, fam, kfl, generation + 1);
            rep.iterations = static_cast<std::size_t>(it + 1);
            for (auto& w : t.warnings) rep.warnings.push_back(w);
            if (cs.contradictory()) break;
            if (t.new_constraints == 0) break;
            ++generation;
            if (it == opt.max_iterations - 1 && t.new_constraints > 0) {
                rep.status = AlgorithmReport::Status::IterationCap;
                rep.warnings.push_back("iteration cap reached before stabilization");
            }
        }
    }
    if (cs.contradictory()) rep.status = AlgorithmReport::Status::EmptyManifold;

    rep.final_generation = generation;
    rep.constraints = cs.constraints();
    rep.solution = fam;

    for (const auto& w : cs.pivot_warnings())
        rep.warnings.push_back("generic pivot assumed nonzero: " +
                               to_string(w, m.tab()));

    if (rep.status == AlgorithmReport::Status::Stabilized) {
        rep.constraints_independent = constraints_functionally_independent(
            rep.constraints, m, opt.seed);
        if (!rep.constraints_independent)
            rep.warnings.push_back("constraint Jacobian rank below constraint count");
        auto atom_sub = atomize_free_parameters(m, rep.solution, rep.free_atoms);
        if (!opt.skip_integrability)
            rep.integrability = integrability_conditions(rep.solution.family, cs, m);
        if (opt.projectability)
            rep.projectability = projectability_diagnostic(m, cs, opt.seed);
        (void)atom_sub;
    }

    rep.ranks.push_back({"hessian", 0, ""});
    {
        auto cert = generic_rank(detail::drop_zero_rows(m.hessian()), m.ctx(), opt.seed);
        rep.ranks.back().rank = cert.rank;
        rep.ranks.back().certificate = cert.method + ", minor value " + cert.minor_value.str();
        for (auto& s : cert.stratification)
            rep.warnings.push_back("rank stratification (hessian): " + to_string(s, m.tab()));
    }
    rep.final_set = std::move(cs);
    return rep;
}

} // namespace ksymp

#endif // KSYMP_ALGORITHM_HPP
