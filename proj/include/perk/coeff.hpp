#ifndef PERK_COEFF_HPP
#define PERK_COEFF_HPP

#include "perk/rat.hpp"

#include <cstdint>
#include <map>
#include <string>

namespace perk {

// Exponent-window sentinel for "unbounded above".
inline constexpr long long kExpInf = (1LL << 60);

// A p-adic scalar known modulo p^N.
struct PadicScalar {
    long long p = 2;
    int prec = 1;              // N: value known mod p^N
    long long residue = 0;     // canonical representative in [0, p^N)

    PadicScalar() = default;
    PadicScalar(long long p_, int prec_, long long value);

    long long modulus() const;
    bool is_zero() const { return residue == 0; }
    bool is_unit() const { return residue % p != 0; }
    // v_p of the residue; requires residue != 0.
    int val() const;

    PadicScalar add(const PadicScalar& o) const;
    PadicScalar sub(const PadicScalar& o) const;
    PadicScalar mul(const PadicScalar& o) const;
    PadicScalar neg() const;
    // Inverse of a unit mod p^N.
    PadicScalar inv() const;
};

enum class CoeffMode { mixed, char_p };

// An element of D_lambda = Z_p[[u]]<p^m/u^{m'}>[1/u] (lambda = m'/m), or of
// its char-p quotient F_p((u)), in the unique u-Laurent normal form.
// Stored terms are exact zero outside [w_lo, w_hi) apart from the p^N
// precision dust inside the window and unknown integral content >= w_hi.
class CoeffElem {
public:
    long long p = 2;
    Rat lambda{1, 2};
    CoeffMode mode = CoeffMode::mixed;
    int prec = 1;                        // N; 1 in char_p mode
    long long w_lo = -8, w_hi = 8;       // half-open window
    std::map<long long, long long> terms; // u-exponent -> residue in (0, p^N)

    CoeffElem() = default;
    CoeffElem(long long p_, Rat lambda_, CoeffMode mode_, int prec_,
              long long lo, long long hi);

    static CoeffElem zero(long long p, Rat lambda, CoeffMode mode, int prec,
                          long long lo, long long hi);
    static CoeffElem constant(long long p, Rat lambda, CoeffMode mode, int prec,
                              long long lo, long long hi, long long value);
    // c * u^i
    static CoeffElem monomial(long long p, Rat lambda, CoeffMode mode, int prec,
                              long long lo, long long hi, long long i, long long c);

    long long modulus() const;           // p^N (p in char_p mode)
    bool is_zero() const { return terms.empty(); }
    bool same_ring(const CoeffElem& o) const;

    // Sets coefficient at exponent i (reduces mod p^N, drops zeros,
    // discards exponents outside the window).
    void set(long long i, long long value);
    long long coeff(long long i) const;  // 0 if absent

    CoeffElem add(const CoeffElem& o) const;
    CoeffElem sub(const CoeffElem& o) const;
    CoeffElem mul(const CoeffElem& o) const;
    CoeffElem neg() const;
    CoeffElem scale(long long c) const;  // multiply by an integer scalar

    bool operator==(const CoeffElem& o) const;
};

// v_{D_lambda}(sum a_i u^i) = inf_i { v_p(a_i) + i/lambda } over stored terms.
Valuation coeff_valuation(const CoeffElem& x);

// Smallest valuation the precision lattice could hide: min(N + w_lo/lambda,
// w_hi/lambda) in mixed mode, w_hi/lambda in char_p mode.
Valuation coeff_precision_floor(const CoeffElem& x);

// Natural map D_lambda -> D_{lambda'} for lambda < lambda' (term data kept).
CoeffElem coeff_embed(const CoeffElem& x, const Rat& lambda_new);

} // namespace perk

#endif
