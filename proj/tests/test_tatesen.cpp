#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "perk/tatesen.hpp"

#include <random>

using namespace perk;

namespace {

AnnulusElem proto_level(long long p, int level, Rat b, int prec = 12) {
    return AnnulusElem(p, Rat(1), CoeffMode::mixed, prec, -8, 8, level, b, -64, 64);
}

AnnulusElem random_elem(std::mt19937_64& rng, const AnnulusElem& proto, int maxterms = 4,
                        long long elo = -9, long long ehi = 9) {
    AnnulusElem x = proto.like_zero();
    std::uniform_int_distribution<long long> expd(elo, ehi);
    std::uniform_int_distribution<long long> coefd(1, ipow(proto.p, std::min(proto.prec, 4)) - 1);
    std::uniform_int_distribution<long long> ued(-2, 2);
    std::uniform_int_distribution<int> nterms(1, maxterms);
    int n = nterms(rng);
    for (int i = 0; i < n; ++i) {
        CoeffElem c = x.czero();
        c.set(ued(rng), coefd(rng));
        x.add_term(expd(rng), c);
    }
    return x;
}

bool eq_terms(const AnnulusElem& a, const AnnulusElem& b) {
    if (a.terms.size() != b.terms.size() || a.pi_tail.size() != b.pi_tail.size()) return false;
    for (const auto& [k, c] : a.terms) {
        auto it = b.terms.find(k);
        if (it == b.terms.end() || it->second.terms != c.terms) return false;
    }
    for (const auto& [i, c] : a.pi_tail) {
        auto it = b.pi_tail.find(i);
        if (it == b.pi_tail.end() || it->second.terms != c.terms) return false;
    }
    return true;
}

} // namespace

TEST_CASE("normalized trace filters level-0 exponent classes") {
    // p=2, x = T_2 + T_2^2 + T_2^3 (exponents 1/4, 1/2, 3/4): R_{K,1} keeps T_2^2
    AnnulusElem P = proto_level(2, 2, Rat(1, 8));
    AnnulusElem x = P.like_zero();
    for (long long k : {1, 2, 3}) x.add_term(k, P.cconst(1));
    TraceSplit s = normalized_trace(x, 1);
    CHECK(s.trace_part.level == 1);
    CHECK(s.trace_part.terms.size() == 1);
    CHECK(s.trace_part.coeff(1).coeff(0) == 1);   // T_1 at level 1
    CHECK(s.kernel_part.terms.size() == 2);
    CHECK(eq_terms(s.trace_part.level == x.level ? s.trace_part : raise_level(s.trace_part, x.level),
                   x.sub(s.kernel_part)));
}

TEST_CASE("trace is an idempotent gamma-equivariant section") {
    std::mt19937_64 rng(3);
    for (long long p : {2LL, 3LL}) {
        Rat top = annulus_top_b(p, Rat(1));
        for (int it = 0; it < 100; ++it) {
            int m = static_cast<int>(rng() % 4);
            AnnulusElem P = proto_level(p, m, top / ipow(p, m));
            AnnulusElem x = random_elem(rng, P);
            int n = static_cast<int>(rng() % 4);
            TraceSplit s = normalized_trace(x, n);
            AnnulusElem tr_at_m = s.trace_part.level == m ? s.trace_part
                                                          : raise_level(s.trace_part, m);
            // split exactness
            CHECK(eq_terms(tr_at_m.add(s.kernel_part), x));
            // idempotence
            TraceSplit s2 = normalized_trace(tr_at_m, n);
            CHECK(s2.kernel_part.is_zero());
            // kernel has R = 0
            TraceSplit s3 = normalized_trace(s.kernel_part, n);
            CHECK(s3.trace_part.is_zero());
            // section: R = id for n >= m
            if (n >= m) CHECK(s.kernel_part.is_zero());
            // Gamma-equivariance (index-scaled form), exact
            PadicScalar c(p, 4, 1 + p);
            TraceSplit sg = normalized_trace(gamma_act(x, c), n);
            AnnulusElem lhs = sg.trace_part.level == m ? sg.trace_part
                                                       : raise_level(sg.trace_part, m);
            CHECK(eq_terms(lhs, gamma_act(tr_at_m, c)));
        }
    }
}

TEST_CASE("trace audit: gap zero on single basis terms, nonincreasing in n") {
    std::mt19937_64 rng(5);
    long long p = 3;
    int m = 3;
    AnnulusElem P = proto_level(p, m, annulus_top_b(p, Rat(1)) / ipow(p, m));
    // single Teichmuller-basis term: gap 0 or fully removed
    for (int it = 0; it < 30; ++it) {
        AnnulusElem x = random_elem(rng, P, 1);
        TraceSplit s = normalized_trace(x, 1);
        if (!s.trace_part.is_zero()) {
            Valuation vx = annulus_valuation(x);
            AnnulusElem tr = raise_level(s.trace_part, m);
            Valuation vt = annulus_valuation(tr);
            CHECK(vx.value == vt.value);
        }
    }
    // worst gap nonincreasing in n on a random batch
    std::vector<AnnulusElem> batch;
    for (int i = 0; i < 40; ++i) batch.push_back(random_elem(rng, P));
    Rat last(1 << 20);
    for (int n = 1; n <= 3; ++n) {
        TSReport rep = trace_valuation_audit(batch, n);
        CHECK(rep.gap_max <= last);
        last = rep.gap_max;
    }
    // samples at their own level: gap 0
    TSReport rep = trace_valuation_audit(batch, m);
    CHECK(rep.gap_max == Rat(0));
}

TEST_CASE("ts1 witness") {
    CHECK(ts1_witness(Rat(1, 4)).pass);
    CHECK(ts1_witness(Rat(1)).pass);
    CHECK(!ts1_witness(Rat(0)).pass);
}

TEST_CASE("gamma-1 inversion on psi = 0 elements") {
    // p = 3, c = 4, n(gamma) = 1, b = 2/9 so every route clears the drop bound
    long long p = 3;
    AnnulusElem P(p, Rat(1), CoeffMode::mixed, 12, -8, 8, 0, Rat(2, 9), -64, 64);
    PadicScalar c(p, 4, 4);
    std::mt19937_64 rng(7);

    // x = 0 -> 0
    {
        AnnulusElem z = P.like_zero();
        InvertReport rep = gamma_minus_one_invert_psi0(z, c);
        CHECK(rep.y.is_zero());
    }

    int done = 0;
    for (int it = 0; it < 25; ++it) {
        AnnulusElem x = P.like_zero();
        std::uniform_int_distribution<long long> expd(-9, 9);
        std::uniform_int_distribution<long long> coefd(1, 80);
        std::uniform_int_distribution<long long> ued(-2, 2);
        for (int j = 0; j < 3; ++j) {
            long long k = expd(rng);
            if (k % p == 0) k += 1;
            CoeffElem cc = x.czero();
            cc.set(ued(rng), coefd(rng));
            x.add_term(k, cc);
        }
        InvertReport rep = gamma_minus_one_invert_psi0(x, c);
        // roundtrip residual
        CHECK(rep.residual.ge(rep.residual_bound));
        // measured drop >= p^{n} p/(p-1) - 1
        if (rep.drop_finite) CHECK(rep.drop >= Rat(9, 2) - Rat(1));
        ++done;
    }
    CHECK(done == 25);

    // psi(x) != 0 rejected
    AnnulusElem bad = AnnulusElem::one(P);
    CHECK_THROWS_AS(gamma_minus_one_invert_psi0(bad, c), hypothesis_error);
    // hypothesis gate: p = 3, c = 2 has n(gamma) = 0, p^0 = 1 < 2p/(p-1) = 3
    CHECK_THROWS_AS(gamma_minus_one_invert_psi0(P.like_zero(), PadicScalar(p, 4, 2)),
                    hypothesis_error);
}

TEST_CASE("kernel inversion telescopes over levels") {
    long long p = 3;
    int m = 2;
    AnnulusElem P(p, Rat(1), CoeffMode::mixed, 12, -8, 8, m, Rat(2, 27), -64, 64);
    PadicScalar c(p, 4, 4);
    std::mt19937_64 rng(11);

    // kernel_part = 0 -> 0
    {
        TraceSplit s = normalized_trace(AnnulusElem::one(P), 1);
        InvertReport rep = gamma_minus_one_invert_kernel(s, c);
        CHECK(rep.y.is_zero());
    }

    // single level-(n+1) basis term: one telescoping step
    {
        AnnulusElem x = P.like_zero();
        x.add_term(3, P.cconst(1));  // T_2^3 = T_1 raised; depth 2 > n = 1? v_p(3)=1: level-1 content
        x.add_term(1, P.cconst(2));  // depth 2 content
        TraceSplit s = normalized_trace(x, 1);
        CHECK(!s.kernel_part.is_zero());
        InvertReport rep = gamma_minus_one_invert_kernel(s, c);
        CHECK(rep.residual.ge(rep.residual_bound));
    }

    // mixed levels
    for (int it = 0; it < 10; ++it) {
        AnnulusElem x = random_elem(rng, P, 4);
        TraceSplit s = normalized_trace(x, 1);
        if (s.kernel_part.is_zero()) continue;
        InvertReport rep = gamma_minus_one_invert_kernel(s, c);
        CHECK(rep.residual.ge(rep.residual_bound));
    }

    // TS3 side condition: n(gamma) = 1 > n = 0
    {
        AnnulusElem x = random_elem(rng, P, 2);
        TraceSplit s = normalized_trace(x, 0);
        if (!s.kernel_part.is_zero())
            CHECK_THROWS_AS(gamma_minus_one_invert_kernel(s, PadicScalar(p, 4, 4 + 9 * 0)),
                            hypothesis_error);
    }
}

TEST_CASE("descent: identity cocycle") {
    DescentJob job;
    job.p = 3;
    job.b = Rat(2, 27);
    job.level = 2;
    job.n = 1;
    job.d = 1;
    job.k = 2;
    job.chi = PadicScalar(3, 1, 4);
    AnnulusElem proto(3, Rat(1), CoeffMode::char_p, 1, -8, 8, 2, Rat(2, 27), -64, 64);
    job.gamma_mat = mat_identity(proto, 1);
    DescentResult res = descend_cocycle(job);
    CHECK(res.ok);
    CHECK(eq_terms(res.B[0][0], AnnulusElem::one(proto)));
    CHECK(eq_terms(res.descended_gamma[0][0], AnnulusElem::one(proto)));
}

TEST_CASE("descent: scalar roundtrip") {
    // U = B0^{-1} g gamma(B0) with g level-n and B0 in 1 + u^k Mat_1
    long long p = 3;
    AnnulusElem proto(p, Rat(1), CoeffMode::char_p, 1, -8, 8, 2, Rat(2, 27), -64, 64);
    PadicScalar chi(p, 1, 4);
    long long k = 2;

    AnnulusElem g = AnnulusElem::one(proto);
    {
        CoeffElem c = proto.czero();
        c.set(k + 1, 1);
        g.add_term(9, c);  // level-n term (divisible by p^{m-n} = 3), u^{k+1} coefficient
    }
    AnnulusElem B0 = AnnulusElem::one(proto);
    {
        CoeffElem c = proto.czero();
        c.set(k, 2);
        B0.add_term(2, c);  // genuine level-2 content times u^k
    }
    // scalar case: U = g * B0^{-1} gamma(B0)
    AnnulusElem U = g.mul(annulus_inv_one_plus(B0.sub(AnnulusElem::one(proto)))
                              .mul(gamma_act(B0, chi)));

    DescentJob job;
    job.p = p;
    job.b = Rat(2, 27);
    job.level = 2;
    job.n = 1;
    job.d = 1;
    job.k = k;
    job.chi = chi;
    job.gamma_mat = {{U}};
    DescentResult res = descend_cocycle(job);
    CHECK(res.ok);
    // descended gamma matrix has level-n entries at precision
    TraceSplit s = normalized_trace(res.descended_gamma[0][0], job.n);
    Valuation leak = annulus_valuation(s.kernel_part);
    CHECK(leak.ge(res.threshold));
    // re-conjugation: B^{-1} U gamma(B) = descended, residual above threshold
    AnnulusElem B = res.B[0][0];
    AnnulusElem lhs = annulus_inv_one_plus(B.sub(AnnulusElem::one(proto)))
                          .mul(U)
                          .mul(gamma_act(B, chi));
    Valuation resid = annulus_valuation(lhs.sub(res.descended_gamma[0][0]));
    CHECK(resid.ge(res.threshold));
    // correction log strictly increases
    for (size_t i = 1; i + 1 < res.log.size(); ++i)
        if (res.log[i].corr_finite && res.log[i + 1].corr_finite)
            CHECK(res.log[i + 1].corr_val > res.log[i].corr_val);
}

TEST_CASE("descent: d = 2 roundtrip") {
    long long p = 3;
    int d = 2;
    long long k = 2;
    AnnulusElem proto(p, Rat(1), CoeffMode::char_p, 1, -8, 8, 2, Rat(2, 27), -64, 64);
    PadicScalar chi(p, 1, 4);
    std::mt19937_64 rng(13);

    Mat G = mat_identity(proto, d);
    {
        CoeffElem c = proto.czero();
        c.set(k + 1, 1);
        G[0][1] = G[0][1].add(AnnulusElem::monomial(proto, 9, 1).scale(c));
        CoeffElem c2 = proto.czero();
        c2.set(k + 2, 2);
        G[1][0] = G[1][0].add(AnnulusElem::monomial(proto, -9, 1).scale(c2));
    }
    Mat B0 = mat_identity(proto, d);
    {
        CoeffElem c = proto.czero();
        c.set(k, 1);
        B0[0][0] = B0[0][0].add(AnnulusElem::monomial(proto, 1, 1).scale(c));
        CoeffElem c2 = proto.czero();
        c2.set(k, 2);
        B0[1][0] = B0[1][0].add(AnnulusElem::monomial(proto, 2, 1).scale(c2));
    }
    Mat id = mat_identity(proto, d);
    Mat U = mat_mul(mat_inv_one_plus(mat_sub(B0, id)), mat_mul(G, mat_gamma(B0, chi)));

    DescentJob job;
    job.p = p;
    job.b = Rat(2, 27);
    job.level = 2;
    job.n = 1;
    job.d = d;
    job.k = k;
    job.chi = chi;
    job.gamma_mat = U;
    DescentResult res = descend_cocycle(job);
    CHECK(res.ok);
    Mat lhs = mat_mul(mat_inv_one_plus(mat_sub(res.B, id)), mat_mul(U, mat_gamma(res.B, chi)));
    Valuation resid = mat_valuation(mat_sub(lhs, res.descended_gamma));
    CHECK(resid.ge(res.threshold));
    // every kernel part of the descended matrix clears the threshold
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            TraceSplit s = normalized_trace(res.descended_gamma[static_cast<size_t>(i)][static_cast<size_t>(j)], job.n);
            CHECK(annulus_valuation(s.kernel_part).ge(res.threshold));
        }
}
