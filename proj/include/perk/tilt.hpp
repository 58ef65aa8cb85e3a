#ifndef PERK_TILT_HPP
#define PERK_TILT_HPP

#include "perk/errors.hpp"
#include "perk/fq.hpp"
#include "perk/rat.hpp"

#include <map>
#include <optional>

namespace perk {

// Exponent in Z[1/p]: value = num / p^{denom_exp}, normalized so that
// p does not divide num when denom_exp > 0.
struct PExponent {
    long long num = 0;
    int denom_exp = 0;

    static PExponent make(long long num, int denom_exp, long long p);
    static PExponent from_rat(const Rat& r, long long p);
    Rat to_rat(long long p) const;
};

// Element of the char-p desk model: generalized power series in t with
// exponents in Z[1/p] and coefficients in F_{p^f}. v(t) = p/(p-1), so t
// plays the role of the 1-unit offset of a compatible p-power-root system.
class TiltElem {
public:
    FqCtx ctx;
    std::map<Rat, Fq> terms;          // exponent -> nonzero coefficient
    bool capped = false;
    Rat cap{0};                       // terms with exponent >= cap unknown
    bool allow_negative = false;

    TiltElem() = default;
    explicit TiltElem(FqCtx c) : ctx(std::move(c)) {}
    TiltElem(FqCtx c, bool capped_, Rat cap_, bool neg = false)
        : ctx(std::move(c)), capped(capped_), cap(cap_), allow_negative(neg) {}

    static TiltElem zero(const FqCtx& c) { return TiltElem(c); }
    static TiltElem one(const FqCtx& c);
    static TiltElem monomial(const FqCtx& c, const Rat& e, Fq v);

    bool is_zero() const { return terms.empty(); }
    bool same_field(const TiltElem& o) const { return ctx == o.ctx; }
    std::optional<Rat> min_exp() const;

    void set(const Rat& e, Fq v);     // drops zero and beyond-cap terms
    Fq coeff(const Rat& e) const;

    TiltElem add(const TiltElem& o) const;
    TiltElem sub(const TiltElem& o) const;
    TiltElem neg() const;
    TiltElem mul(const TiltElem& o) const;
    TiltElem scale(Fq c) const;

    // Mathematical content only; representation flags are not compared.
    bool operator==(const TiltElem& o) const {
        return ctx == o.ctx && terms == o.terms;
    }
};

// v(t) = p/(p-1).
Rat tilt_weight(long long p);

// phi^k: exponents * p^k, coefficients ^ p^k (k may be negative).
TiltElem tilt_frobenius(const TiltElem& x, int k);

Valuation tilt_valuation(const TiltElem& x);

// Exponent e / r for r = p^j (j >= 0); r must be a p-power.
PExponent tilt_monomial_root(const PExponent& e, long long r, long long p);

// Thrown when the residue equation y^p - c y = b has no root in F_q.
struct as_residue_unsolvable : error {
    int required_degree;
    as_residue_unsolvable(int d, const std::string& msg)
        : error(msg), required_degree(d) {}
};

// Solve x^p - c*x = b up to the cap, where c is 1 or a monomial with
// positive valuation. The returned x satisfies
// v(x^p - c*x - b) >= cap bound when re-substituted.
TiltElem tilt_artin_schreier_solve(const TiltElem& c, const TiltElem& b, const Rat& target_cap);

} // namespace perk

#endif
