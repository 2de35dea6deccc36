// Deterministic random-model corpora shared by the unit tests and the
// acceptance suite.
#ifndef KSYMP_TESTS_CORPUS_HPP
#define KSYMP_TESTS_CORPUS_HPP

#include <random>

#include "ksymp/fixtures.hpp"
#include "oracle.hpp"

namespace corpus {

using namespace ksymp;

inline Expr random_base_poly(const BundleChart& c, std::mt19937_64& rng, int max_terms,
                             unsigned max_deg) {
    std::uniform_int_distribution<int> nt(1, max_terms);
    std::uniform_int_distribution<std::size_t> pick(0, c.q.size() - 1);
    std::uniform_int_distribution<unsigned> nd(0, max_deg);
    std::vector<Term> ts;
    int n = nt(rng);
    for (int t = 0; t < n; ++t) {
        std::map<VarId, std::uint32_t> fs;
        unsigned want = nd(rng);
        for (unsigned j = 0; j < want; ++j) fs[c.q[pick(rng)]] += 1;
        Mono m;
        for (auto& [v, e] : fs) m.f.emplace_back(v, e);
        ts.push_back({std::move(m), oracle::random_rat(rng, -3, 3, 2)});
    }
    return Expr::from_terms(std::move(ts));
}

// Affine Lagrangian with n <= 4, k <= 3, F and G polynomial of degree <= 2.
// Styles rotate through generic F, constant F (rank 0) and F depending on a
// single coordinate (structurally rank-deficient).
inline LagrangianModel random_affine_model(std::uint64_t seed) {
    std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ull + 0xc0ffee);
    int n = 1 + static_cast<int>(rng() % 4);
    int k = 1 + static_cast<int>(rng() % 3);
    std::vector<std::string> names;
    for (int i = 1; i <= n; ++i) names.push_back("q" + std::to_string(i));
    BundleChart c = BundleChart::create(n, k, names);
    int style = static_cast<int>(seed % 3);
    Expr L;
    for (int a = 1; a <= k; ++a)
        for (int i = 1; i <= n; ++i) {
            Expr F;
            if (style == 1) {
                F = Expr::constant(oracle::random_rat(rng, -3, 3, 1));
            } else if (style == 2) {
                // depends on q1 only
                std::vector<Term> ts;
                Mono m1;
                m1.f.emplace_back(c.q[0], 1 + rng() % 2);
                ts.push_back({m1, oracle::random_rat(rng, -2, 2, 1)});
                F = Expr::from_terms(std::move(ts));
            } else {
                F = random_base_poly(c, rng, 2, 2);
            }
            L = add(L, mul(F, Expr::var(c.v[a - 1][i - 1])));
        }
    L = add(L, random_base_poly(c, rng, 3, 2));
    LagrangianModel m(std::move(c), std::move(L));
    m.validate();
    return m;
}

// Mixed corpus: affine and genuinely velocity-quadratic (possibly singular)
// Lagrangians, for the lemma cross-checks and classification soundness.
inline LagrangianModel random_model(std::uint64_t seed) {
    if (seed % 2 == 0) return random_affine_model(seed / 2 + 1000);
    std::mt19937_64 rng(seed * 0x2545f4914f6cdd1dull + 17);
    int n = 1 + static_cast<int>(rng() % 3);
    int k = 1 + static_cast<int>(rng() % 2);
    std::vector<std::string> names;
    for (int i = 1; i <= n; ++i) names.push_back("q" + std::to_string(i));
    BundleChart c = BundleChart::create(n, k, names);
    Expr L;
    // quadratic velocity block over a subset of the velocity slots
    for (int a = 1; a <= k; ++a)
        for (int i = 1; i <= n; ++i) {
            if (rng() % 2) continue;
            Expr v = Expr::var(c.v[a - 1][i - 1]);
            L = add(L, scale(mul(v, v), oracle::random_nonzero_rat(rng, 1, 3)));
        }
    // a couple of affine pieces and a potential
    for (int a = 1; a <= k; ++a) {
        int i = 1 + static_cast<int>(rng() % n);
        L = add(L, mul(random_base_poly(c, rng, 2, 1), Expr::var(c.v[a - 1][i - 1])));
    }
    L = add(L, random_base_poly(c, rng, 2, 2));
    LagrangianModel m(std::move(c), std::move(L));
    m.validate();
    return m;
}

} // namespace corpus

#endif
