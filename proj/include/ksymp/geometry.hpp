#ifndef KSYMP_GEOMETRY_HPP
#define KSYMP_GEOMETRY_HPP

#include <memory>

#include "ksymp/linalg.hpp"
#include "ksymp/parser.hpp"

namespace ksymp {

// Natural coordinates on T^1_k Q: q^1..q^n, then the velocities in
// direction-major order (all v^i_1, then all v^i_2, ...).
struct BundleChart {
    int n = 0, k = 0;
    std::shared_ptr<SymbolTable> tab;
    std::vector<SymId> q;                // n
    std::vector<std::vector<SymId>> v;   // v[alpha-1][i-1]
    std::vector<SymId> coords;           // all n(k+1), chart order

    static BundleChart create(int n, int k, const std::vector<std::string>& names,
                              std::shared_ptr<SymbolTable> table = nullptr) {
        if (n < 1 || k < 1) throw std::invalid_argument("chart needs n >= 1 and k >= 1");
        if (static_cast<int>(names.size()) != n)
            throw std::invalid_argument("chart needs exactly n coordinate names");
        BundleChart c;
        c.n = n;
        c.k = k;
        c.tab = table ? std::move(table) : std::make_shared<SymbolTable>();
        for (int i = 0; i < n; ++i) {
            if (names[i] == "v" || names[i] == "D")
                throw std::invalid_argument("coordinate name '" + names[i] + "' is reserved");
            c.q.push_back(c.tab->add_symbol(names[i], SymKind::Coordinate, i + 1));
        }
        c.v.assign(k, {});
        for (int a = 1; a <= k; ++a)
            for (int i = 1; i <= n; ++i)
                c.v[a - 1].push_back(c.tab->add_symbol(
                    "v_" + names[i - 1] + "_" + std::to_string(a), SymKind::Velocity, i, a));
        c.coords = c.q;
        for (int a = 0; a < k; ++a)
            for (int i = 0; i < n; ++i) c.coords.push_back(c.v[a][i]);
        return c;
    }

    int dim() const { return n * (k + 1); }
    // 0-based positions in `coords`
    int idx_q(int i) const { return i - 1; }
    int idx_v(int i, int alpha) const { return n + (alpha - 1) * n + (i - 1); }
    // velocity slot within fiber blocks (Hessian indexing)
    int vslot(int i, int alpha) const { return (alpha - 1) * n + (i - 1); }

    bool is_chart_symbol(SymId s) const {
        for (SymId c : coords)
            if (c == s) return true;
        return false;
    }
};

// One-form: coefficient per chart coordinate.
using OneForm = std::vector<Expr>;

// Family of k antisymmetric matrices over the full coordinate basis.
struct TwoFormFamily {
    std::vector<SymMatrix> w; // k matrices, dim x dim
};

struct VectorFieldOnTkQ {
    std::vector<Expr> comps; // dim entries, chart order
};

struct KVectorFieldFamily {
    std::vector<VectorFieldOnTkQ> fields;   // k entries
    std::vector<SymId> parameters;          // free parameter symbols
};

// A Lagrangian on the chart, with lazily cached Cartan data.
class LagrangianModel {
public:
    BundleChart chart;
    Expr L;
    DerivativeRuleTable rules;
    std::set<SymId> invertible_heads;
    std::optional<MetricPair> metric;
    std::vector<SymId> parameters;

    LagrangianModel() = default;
    LagrangianModel(BundleChart c, Expr lag) : chart(std::move(c)), L(std::move(lag)) {}

    NormContext ctx() const {
        NormContext n;
        n.tab = chart.tab.get();
        n.rules = &rules;
        n.invertible_heads = invertible_heads;
        n.metric = metric;
        return n;
    }

    const SymbolTable& tab() const { return *chart.tab; }

    Expr d(const Expr& e, SymId s) const { return diff(e, s, rules, tab()); }

    void validate() const {
        rules.validate_closed(tab());
        std::set<SymId> allowed(chart.coords.begin(), chart.coords.end());
        for (SymId p : parameters) allowed.insert(p);
        for (VarId v : variables(L)) {
            if (SymbolTable::is_atom(v)) continue;
            if (!allowed.count(v))
                throw std::invalid_argument("Lagrangian uses symbol '" + tab().info(v).name +
                                            "' outside the chart and parameters");
        }
    }

    const std::vector<OneForm>& theta() const { ensure_cartan(); return theta_; }
    const TwoFormFamily& omega() const { ensure_cartan(); return omega_; }
    const Expr& energy() const { ensure_energy(); return energy_; }
    const OneForm& denergy() const { ensure_energy(); return denergy_; }
    const SymMatrix& hessian() const { ensure_hessian(); return hessian_; }

private:
    mutable bool have_cartan_ = false, have_energy_ = false, have_hessian_ = false;
    mutable std::vector<OneForm> theta_;
    mutable TwoFormFamily omega_;
    mutable Expr energy_;
    mutable OneForm denergy_;
    mutable SymMatrix hessian_;

    void ensure_cartan() const;
    void ensure_energy() const;
    void ensure_hessian() const;
};

// theta^alpha = dL/dv^i_alpha dq^i; omega^alpha from the coordinate formula,
// exactly antisymmetric with zero (v,v) block.
inline void LagrangianModel::ensure_cartan() const {
    if (have_cartan_) return;
    const int n = chart.n, k = chart.k, dim = chart.dim();
    std::vector<std::vector<Expr>> dLdv(k, std::vector<Expr>(n));
    for (int a = 1; a <= k; ++a)
        for (int i = 1; i <= n; ++i) dLdv[a - 1][i - 1] = d(L, chart.v[a - 1][i - 1]);

    theta_.assign(k, OneForm(dim));
    for (int a = 1; a <= k; ++a)
        for (int i = 1; i <= n; ++i) theta_[a - 1][chart.idx_q(i)] = dLdv[a - 1][i - 1];

    omega_.w.assign(k, SymMatrix(dim, dim));
    for (int a = 1; a <= k; ++a) {
        SymMatrix& W = omega_.w[a - 1];
        for (int i = 1; i <= n; ++i) {
            for (int j = i + 1; j <= n; ++j) {
                // d^2L/dq^j dv^i_a - d^2L/dq^i dv^j_a on dq^i ^ dq^j
                Expr c = sub(d(dLdv[a - 1][i - 1], chart.q[j - 1]),
                             d(dLdv[a - 1][j - 1], chart.q[i - 1]));
                if (c.is_zero()) continue;
                W.at(chart.idx_q(i), chart.idx_q(j)) = c;
                W.at(chart.idx_q(j), chart.idx_q(i)) = neg(c);
            }
            for (int b = 1; b <= k; ++b) {
                for (int j = 1; j <= n; ++j) {
                    Expr h = d(dLdv[a - 1][i - 1], chart.v[b - 1][j - 1]);
                    if (h.is_zero()) continue;
                    W.at(chart.idx_q(i), chart.idx_v(j, b)) = h;
                    W.at(chart.idx_v(j, b), chart.idx_q(i)) = neg(h);
                }
            }
        }
    }
    have_cartan_ = true;
}

inline void LagrangianModel::ensure_energy() const {
    if (have_energy_) return;
    Expr E;
    for (int a = 1; a <= chart.k; ++a)
        for (int i = 1; i <= chart.n; ++i)
            E = add(E, mul(Expr::var(chart.v[a - 1][i - 1]), d(L, chart.v[a - 1][i - 1])));
    E = sub(E, L);
    energy_ = E;
    denergy_.assign(chart.dim(), Expr());
    for (int c = 0; c < chart.dim(); ++c) denergy_[c] = d(E, chart.coords[c]);
    have_energy_ = true;
}

inline void LagrangianModel::ensure_hessian() const {
    if (have_hessian_) return;
    const int n = chart.n, k = chart.k;
    hessian_ = SymMatrix(n * k, n * k);
    for (int a = 1; a <= k; ++a)
        for (int i = 1; i <= n; ++i) {
            Expr dLdv = d(L, chart.v[a - 1][i - 1]);
            for (int b = a; b <= k; ++b)
                for (int j = 1; j <= n; ++j) {
                    if (b == a && j < i) continue;
                    Expr h = d(dLdv, chart.v[b - 1][j - 1]);
                    if (h.is_zero()) continue;
                    hessian_.at(chart.vslot(i, a), chart.vslot(j, b)) = h;
                    hessian_.at(chart.vslot(j, b), chart.vslot(i, a)) = h;
                }
        }
    have_hessian_ = true;
}

inline std::pair<std::vector<OneForm>, TwoFormFamily> cartan_forms(const LagrangianModel& m) {
    return {m.theta(), m.omega()};
}

inline std::pair<Expr, OneForm> energy(const LagrangianModel& m) {
    return {m.energy(), m.denergy()};
}

inline SymMatrix hessian(const LagrangianModel& m) { return m.hessian(); }

// FL Jacobian in block form [[Id_n, 0], [d^2L/dq dv, Hessian]].
inline SymMatrix legendre_jacobian(const LagrangianModel& m) {
    const BundleChart& c = m.chart;
    const int n = c.n, k = c.k, dim = c.dim();
    SymMatrix J(dim, dim);
    for (int i = 0; i < n; ++i) J.at(i, i) = Expr::constant(1);
    const SymMatrix& H = m.hessian();
    for (int a = 1; a <= k; ++a)
        for (int i = 1; i <= n; ++i) {
            Expr dLdv = m.d(m.L, c.v[a - 1][i - 1]);
            int row = n + c.vslot(i, a);
            for (int j = 1; j <= n; ++j) J.at(row, c.idx_q(j)) = m.d(dLdv, c.q[j - 1]);
            for (int b = 1; b <= k; ++b)
                for (int j = 1; j <= n; ++j)
                    J.at(row, c.idx_v(j, b)) = H.at(c.vslot(i, a), c.vslot(j, b));
        }
    return J;
}

// Independent pathway for omega: -d(theta^alpha) by symbolic exterior
// differentiation; used as a cross-check against the coordinate formula.
inline TwoFormFamily omega_from_dtheta(const LagrangianModel& m) {
    const BundleChart& c = m.chart;
    const int dim = c.dim();
    TwoFormFamily out;
    out.w.assign(c.k, SymMatrix(dim, dim));
    for (int a = 0; a < c.k; ++a) {
        const OneForm& th = m.theta()[a];
        for (int x = 0; x < dim; ++x)
            for (int y = x + 1; y < dim; ++y) {
                Expr w = sub(m.d(th[x], c.coords[y]), m.d(th[y], c.coords[x]));
                if (w.is_zero()) continue;
                out.w[a].at(x, y) = w;
                out.w[a].at(y, x) = neg(w);
            }
    }
    return out;
}

// i(Z) w for a single two-form matrix: (i(Z)w)_b = sum_a Z^a W[a][b].
inline OneForm contract_form(const SymMatrix& W, const VectorFieldOnTkQ& Z) {
    if (Z.comps.size() != W.rows) throw std::invalid_argument("contract_form: dimension mismatch");
    OneForm out(W.cols);
    for (std::size_t a = 0; a < W.rows; ++a) {
        if (Z.comps[a].is_zero()) continue;
        for (std::size_t b = 0; b < W.cols; ++b)
            if (!W.at(a, b).is_zero()) out[b] = add(out[b], mul(Z.comps[a], W.at(a, b)));
    }
    return out;
}

// Omega_L(X) = sum_alpha i(X_alpha) omega^alpha.
inline OneForm contract(const TwoFormFamily& omega, const KVectorFieldFamily& X) {
    if (omega.w.size() != X.fields.size())
        throw std::invalid_argument("contract: family sizes differ");
    OneForm out(omega.w.empty() ? 0 : omega.w[0].rows);
    for (std::size_t a = 0; a < omega.w.size(); ++a) {
        OneForm part = contract_form(omega.w[a], X.fields[a]);
        for (std::size_t b = 0; b < out.size(); ++b) out[b] = add(out[b], part[b]);
    }
    return out;
}

// Pairing of a one-form with a vector field.
inline Expr pair(const OneForm& w, const VectorFieldOnTkQ& Z) {
    if (w.size() != Z.comps.size()) throw std::invalid_argument("pair: dimension mismatch");
    Expr s;
    for (std::size_t c = 0; c < w.size(); ++c)
        if (!w[c].is_zero() && !Z.comps[c].is_zero()) s = add(s, mul(w[c], Z.comps[c]));
    return s;
}

// Derivation: Z(f) = sum_c Z^c df/dc over all chart coordinates.
inline Expr apply(const VectorFieldOnTkQ& Z, const Expr& f, const LagrangianModel& m) {
    Expr s;
    for (int c = 0; c < m.chart.dim(); ++c) {
        if (Z.comps[c].is_zero()) continue;
        Expr df = m.d(f, m.chart.coords[c]);
        if (!df.is_zero()) s = add(s, mul(Z.comps[c], df));
    }
    return s;
}

inline VectorFieldOnTkQ lie_bracket(const VectorFieldOnTkQ& A, const VectorFieldOnTkQ& B,
                                    const LagrangianModel& m) {
    VectorFieldOnTkQ out;
    out.comps.assign(m.chart.dim(), Expr());
    for (int c = 0; c < m.chart.dim(); ++c)
        out.comps[c] = sub(apply(A, B.comps[c], m), apply(B, A.comps[c], m));
    return out;
}

// Liouville field: sum v^i_alpha d/dv^i_alpha.
inline VectorFieldOnTkQ liouville_field(const BundleChart& c) {
    VectorFieldOnTkQ out;
    out.comps.assign(c.dim(), Expr());
    for (int a = 1; a <= c.k; ++a)
        for (int i = 1; i <= c.n; ++i)
            out.comps[c.idx_v(i, a)] = Expr::var(c.v[a - 1][i - 1]);
    return out;
}

// J^alpha(X): base components lifted into the alpha velocity slots.
inline VectorFieldOnTkQ vertical_lift(const BundleChart& c, int alpha,
                                      const VectorFieldOnTkQ& X) {
    VectorFieldOnTkQ out;
    out.comps.assign(c.dim(), Expr());
    for (int i = 1; i <= c.n; ++i) out.comps[c.idx_v(i, alpha)] = X.comps[c.idx_q(i)];
    return out;
}

// Y with Y_alpha = (v^i_alpha - (X_alpha)^i) d/dq^i; X + defect is a SOPDE.
inline KVectorFieldFamily sopde_defect(const KVectorFieldFamily& X, const BundleChart& c) {
    KVectorFieldFamily out;
    for (int a = 1; a <= c.k; ++a) {
        VectorFieldOnTkQ Y;
        Y.comps.assign(c.dim(), Expr());
        for (int i = 1; i <= c.n; ++i)
            Y.comps[c.idx_q(i)] =
                sub(Expr::var(c.v[a - 1][i - 1]), X.fields[a - 1].comps[c.idx_q(i)]);
        out.fields.push_back(std::move(Y));
    }
    return out;
}

inline bool is_sopde(const KVectorFieldFamily& X, const BundleChart& c) {
    for (int a = 1; a <= c.k; ++a)
        for (int i = 1; i <= c.n; ++i)
            if (X.fields[a - 1].comps[c.idx_q(i)] != Expr::var(c.v[a - 1][i - 1])) return false;
    return true;
}

// sum_alpha J^alpha(X_alpha); equals the Liouville field iff X is a SOPDE.
inline VectorFieldOnTkQ sopde_characteristic(const KVectorFieldFamily& X, const BundleChart& c) {
    VectorFieldOnTkQ acc;
    acc.comps.assign(c.dim(), Expr());
    for (int a = 1; a <= c.k; ++a) {
        VectorFieldOnTkQ lifted = vertical_lift(c, a, X.fields[a - 1]);
        for (int i = 0; i < c.dim(); ++i) acc.comps[i] = add(acc.comps[i], lifted.comps[i]);
    }
    return acc;
}

} // namespace ksymp

#endif // KSYMP_GEOMETRY_HPP
