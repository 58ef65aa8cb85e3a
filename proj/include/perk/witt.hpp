#ifndef PERK_WITT_HPP
#define PERK_WITT_HPP

#include "perk/annulus.hpp"
#include "perk/tilt.hpp"

#include <map>
#include <vector>

namespace perk {

// Integer polynomial in variables a_0..a_{J-1}, b_0..b_{J-1} (b-block unused
// for negation); exponent vectors of length 2J.
struct ZPoly {
    std::map<std::vector<int>, long long> terms;

    static ZPoly zero() { return {}; }
    static ZPoly constant(long long c, int nvars);
    static ZPoly var(int idx, int nvars);

    ZPoly add(const ZPoly& o) const;
    ZPoly sub(const ZPoly& o) const;
    ZPoly mul(const ZPoly& o) const;
    ZPoly pow(int e) const;
    ZPoly scaled(long long c) const;
    // Exact division by the integer c; throws if any coefficient resists.
    ZPoly divided(long long c) const;
};

// Universal addition/multiplication/negation polynomials for length-J
// p-typical Witt vectors, computed by the ghost-component recursion over Z.
struct WittUniversalTables {
    long long p = 2;
    int J = 1;
    std::vector<ZPoly> sum, prod, negation;

    static const WittUniversalTables& get(long long p, int J);  // cached
};

WittUniversalTables witt_universal_tables(long long p, int J);

// Truncated Witt vector over the char-p desk model.
struct WittElem {
    long long p = 2;
    int J = 1;
    std::vector<TiltElem> comps;

    WittElem() = default;
    WittElem(long long p_, int J_, const FqCtx& ctx);

    static WittElem teichmuller(long long p, int J, const TiltElem& t);
    static WittElem zero(long long p, int J, const FqCtx& ctx);
    static WittElem from_integer(long long p, int J, const FqCtx& ctx, long long v);

    bool same_shape(const WittElem& o) const;
    WittElem add(const WittElem& o) const;
    WittElem sub(const WittElem& o) const;
    WittElem mul(const WittElem& o) const;
    WittElem neg() const;

    bool operator==(const WittElem& o) const { return p == o.p && J == o.J && comps == o.comps; }
};

WittElem witt_frobenius(const WittElem& x);

// val^{[0,b]}(x) = inf_k ( v(x_k) + k/b ); certification from component caps
// and the p^J cutoff (missing components contribute the bound J/b).
Valuation witt_valuation(const WittElem& x, const Rat& b);

// u-Laurent combination of Witt vectors modeling the perfect ring over the
// interval [0, b] with coefficient parameter lambda.
struct PerfectElem {
    long long p = 2;
    int J = 1;
    Rat b{1};
    Rat lambda{1};
    FqCtx ctx;
    std::map<long long, WittElem> terms;  // u-exponent -> Witt vector

    PerfectElem() = default;
    PerfectElem(long long p_, int J_, Rat b_, Rat lambda_, FqCtx ctx_)
        : p(p_), J(J_), b(b_), lambda(lambda_), ctx(std::move(ctx_)) {}

    void set(long long i, const WittElem& w);
    void add_term(long long i, const WittElem& w);

    PerfectElem add(const PerfectElem& o) const;
    PerfectElem sub(const PerfectElem& o) const;
    PerfectElem mul(const PerfectElem& o) const;

    bool operator==(const PerfectElem& o) const {
        return p == o.p && J == o.J && b == o.b && lambda == o.lambda && terms == o.terms;
    }
};

PerfectElem perfect_frobenius(const PerfectElem& x);

// v(sum u^i w_i) = min_i ( i/b + val-with-p-weight-lambda/b (w_i) ); a lower
// bound for the perfect-ring valuation, certified only for a single
// Teichmuller-scalar term.
Valuation perfect_valuation(const PerfectElem& x);

// Ring map from the level-n imperfect model: T_n -> [1 + t^{1/p^n}],
// coefficients via Z_p = W(F_p) digits (mixed mode) or F_p constants.
// cap: tilt exponent cap used for negative powers of the variable.
PerfectElem perfect_from_annulus(const AnnulusElem& x, int J, const Rat& cap);

// char-p bridges used by the descent: exact in both directions.
AnnulusElem perfect_to_level(const PerfectElem& x, const AnnulusElem& proto);
PerfectElem level_to_perfect(const AnnulusElem& x, const Rat& cap);

} // namespace perk

#endif
