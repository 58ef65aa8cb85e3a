#ifndef PERK_ANNULUS_HPP
#define PERK_ANNULUS_HPP

#include "perk/coeff.hpp"
#include "perk/errors.hpp"

#include <map>
#include <vector>

namespace perk {

// Largest admissible radius for given (p, lambda): b/lambda < 1 with
// s(b/lambda) a p-power forces b = (p-1)*lambda / p^{1+z}, z >= 0.
Rat annulus_top_b(long long p, const Rat& lambda);
bool annulus_valid_b(long long p, const Rat& lambda, const Rat& b);

// Element of the imperfect annulus ring at level n (variable T_n, i.e. the
// n-th p-power root of the level-0 variable) over interval [0, b], with
// coefficients in D_lambda or its char-p quotient.
//
// Stored data: a finite T_n-Laurent part plus a canonical "pi tail"
// sum_i c_i * (T_n - 1)^{-i} with scalar coefficients c_i. Inverting
// gamma - 1 produces such tails; all spec-level data is tail-free.
class AnnulusElem {
public:
    long long p = 3;
    Rat lambda{1};
    CoeffMode mode = CoeffMode::mixed;
    int prec = 4;
    long long u_lo = -8, u_hi = 8;      // coefficient window
    int level = 0;
    Rat b{2, 3};                        // interval [0, b]
    bool interval_clamped = false;
    long long w_lo = -16, w_hi = 16;    // T-exponent window
    std::map<long long, CoeffElem> terms;
    std::map<long long, CoeffElem> pi_tail;  // i >= 1 -> scalar coefficient of (T-1)^{-i}

    AnnulusElem() = default;
    AnnulusElem(long long p_, Rat lambda_, CoeffMode mode_, int prec_,
                long long ulo, long long uhi, int level_, Rat b_,
                long long wlo, long long whi);

    CoeffElem czero() const;            // zero coefficient in this ring
    CoeffElem cconst(long long v) const;
    AnnulusElem like_zero() const;      // same parameters, no terms

    bool same_ring(const AnnulusElem& o) const;  // prime/lambda/mode/prec
    bool is_zero() const { return terms.empty() && pi_tail.empty(); }
    bool tail_free() const { return pi_tail.empty(); }

    void set(long long k, const CoeffElem& c);   // normalizes, drops zeros
    void add_term(long long k, const CoeffElem& c);
    void set_tail(long long i, const CoeffElem& c);
    void add_tail(long long i, const CoeffElem& c);
    CoeffElem coeff(long long k) const;

    static AnnulusElem one(const AnnulusElem& proto);
    static AnnulusElem variable(const AnnulusElem& proto);   // T_n
    static AnnulusElem pi(const AnnulusElem& proto);         // T_n - 1
    static AnnulusElem monomial(const AnnulusElem& proto, long long k, long long c);

    AnnulusElem add(const AnnulusElem& o) const;
    AnnulusElem sub(const AnnulusElem& o) const;
    AnnulusElem neg() const;
    AnnulusElem mul(const AnnulusElem& o) const;
    AnnulusElem scale(const CoeffElem& c) const;
    AnnulusElem scale_int(long long c) const;

    bool equal_data(const AnnulusElem& o) const; // stored terms and tails agree
};

// --- operators -------------------------------------------------------------

// T |-> T^p at the same level; interval [0,b] -> [0,b/p]. Exact on the
// Laurent part; tails are expanded to working precision.
AnnulusElem phi(const AnnulusElem& x);

// Exponent classes mod p: x = sum_{i<p} T^i phi(a_i); returns a_0..a_{p-1}.
std::vector<AnnulusElem> decompose_phi_basis(const AnnulusElem& x);

// Left inverse of phi: a_0 of the decomposition; [0,b] -> [0, min(pb, top)].
AnnulusElem psi(const AnnulusElem& x);

// gamma_c: T |-> T^{c0} with c0 the canonical integer representative of the
// unit c. Exact on the Laurent part.
AnnulusElem gamma_act(const AnnulusElem& x, const PadicScalar& c);

// Level raise: T_n = T_{n'}^{p^{n'-n}}.
AnnulusElem raise_level(const AnnulusElem& x, int new_level);

// Valuation v(x) = inf_j { v_D(a_j)/b + j * p^{-level} * p/(p-1) } over the
// pi-adic expansion; certified only for lambda = 1 (reported as a lower
// bound otherwise, and uncertified when precision could interfere).
Valuation annulus_valuation(const AnnulusElem& x);
bool annulus_is_integral(const AnnulusElem& x);

// Smallest valuation the coefficient precision lattice can hide.
Valuation annulus_precision_floor(const AnnulusElem& x);

// --- helpers used by the trace/descent machinery ---------------------------

// Coefficient-sum functional ("evaluation at T = 1") of the Laurent part.
CoeffElem annulus_ell(const AnnulusElem& x);

// Exact division of the Laurent part by (T - 1), after the ell-correction
// has been subtracted; requires ell(x) = 0 and empty tail.
AnnulusElem annulus_div_pi_exact(const AnnulusElem& x);

// Reduce T-exponents mod p^M to balanced representatives, merging
// coefficients. The introduced error is below annulus_fold_floor(x, M).
AnnulusElem annulus_fold(const AnnulusElem& x, int M);
Rat annulus_fold_floor(const AnnulusElem& x, int M);

// pi-adic expansion of the Laurent part: coefficients of pi^j for
// j = 0..jmax plus a certified bound for the discarded tail.
struct PiExpansion {
    std::vector<CoeffElem> coeffs;  // index j
    bool tail_exact = true;         // no truncation happened
    Rat tail_bound{0};              // valid when !tail_exact
};
PiExpansion annulus_pi_expansion(const AnnulusElem& x, int jmax);

// (T^s - 1)^{-i} (s, i >= 1) as tail plus Laurent data, correct within the
// precision floor (exact in char-p mode when s is a p-power). Backs the
// tail action of phi, gamma, raise_level and the trace on tails.
AnnulusElem annulus_ts_inverse(const AnnulusElem& proto, long long s, long long i);

// (1 + s)^{-1} for v(s) > 0, truncated below the precision floor.
AnnulusElem annulus_inv_one_plus(const AnnulusElem& s);

} // namespace perk

#endif
