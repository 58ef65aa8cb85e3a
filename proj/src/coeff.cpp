#include "perk/coeff.hpp"
#include "perk/errors.hpp"

#include <algorithm>

namespace perk {

namespace {

long long mod_norm(long long v, long long m) {
    long long r = v % m;
    if (r < 0) r += m;
    return r;
}

long long mul_mod(long long a, long long b, long long m) {
    return static_cast<long long>((static_cast<__int128>(a) * b) % m);
}

long long pow_mod(long long a, long long e, long long m) {
    long long r = 1 % m;
    a = mod_norm(a, m);
    while (e > 0) {
        if (e & 1) r = mul_mod(r, a, m);
        a = mul_mod(a, a, m);
        e >>= 1;
    }
    return r;
}

// Inverse of a unit mod p^N by Euler: a^(phi(p^N)-1).
long long inv_mod_ppow(long long a, long long p, int N) {
    long long m = ipow(p, N);
    long long phi = m / p * (p - 1);
    return pow_mod(a, phi - 1, m);
}

} // namespace

PadicScalar::PadicScalar(long long p_, int prec_, long long value) : p(p_), prec(prec_) {
    residue = mod_norm(value, modulus());
}

long long PadicScalar::modulus() const { return ipow(p, prec); }

int PadicScalar::val() const {
    if (residue == 0) throw error("PadicScalar::val of zero residue");
    return padic_val(residue, p);
}

PadicScalar PadicScalar::add(const PadicScalar& o) const {
    if (p != o.p || prec != o.prec) throw incompatible_error("PadicScalar add");
    return PadicScalar(p, prec, mod_norm(residue + o.residue, modulus()));
}

PadicScalar PadicScalar::sub(const PadicScalar& o) const {
    if (p != o.p || prec != o.prec) throw incompatible_error("PadicScalar sub");
    return PadicScalar(p, prec, mod_norm(residue - o.residue, modulus()));
}

PadicScalar PadicScalar::mul(const PadicScalar& o) const {
    if (p != o.p || prec != o.prec) throw incompatible_error("PadicScalar mul");
    return PadicScalar(p, prec, mul_mod(residue, o.residue, modulus()));
}

PadicScalar PadicScalar::neg() const {
    return PadicScalar(p, prec, mod_norm(-residue, modulus()));
}

PadicScalar PadicScalar::inv() const {
    if (!is_unit()) throw hypothesis_error("PadicScalar::inv of non-unit");
    return PadicScalar(p, prec, inv_mod_ppow(residue, p, prec));
}

CoeffElem::CoeffElem(long long p_, Rat lambda_, CoeffMode mode_, int prec_,
                     long long lo, long long hi)
    : p(p_), lambda(lambda_), mode(mode_), prec(mode_ == CoeffMode::char_p ? 1 : prec_),
      w_lo(lo), w_hi(hi) {
    if (lambda <= Rat(0)) throw hypothesis_error("lambda must be positive");
    if (lo >= hi) throw hypothesis_error("empty coefficient window");
}

CoeffElem CoeffElem::zero(long long p, Rat lambda, CoeffMode mode, int prec,
                          long long lo, long long hi) {
    return CoeffElem(p, lambda, mode, prec, lo, hi);
}

CoeffElem CoeffElem::constant(long long p, Rat lambda, CoeffMode mode, int prec,
                              long long lo, long long hi, long long value) {
    CoeffElem c(p, lambda, mode, prec, lo, hi);
    c.set(0, value);
    return c;
}

CoeffElem CoeffElem::monomial(long long p, Rat lambda, CoeffMode mode, int prec,
                              long long lo, long long hi, long long i, long long c) {
    CoeffElem x(p, lambda, mode, prec, lo, hi);
    x.set(i, c);
    return x;
}

long long CoeffElem::modulus() const { return ipow(p, prec); }

bool CoeffElem::same_ring(const CoeffElem& o) const {
    return p == o.p && lambda == o.lambda && mode == o.mode && prec == o.prec;
}

void CoeffElem::set(long long i, long long value) {
    if (i < w_lo || i >= w_hi) return;
    long long r = mod_norm(value, modulus());
    if (r == 0) terms.erase(i);
    else terms[i] = r;
}

long long CoeffElem::coeff(long long i) const {
    auto it = terms.find(i);
    return it == terms.end() ? 0 : it->second;
}

CoeffElem CoeffElem::add(const CoeffElem& o) const {
    if (!same_ring(o)) throw incompatible_error("coeff add (lambda/prime/mode)");
    long long lo = std::min(w_lo, o.w_lo);
    long long hi = std::min(w_hi, o.w_hi);
    if (std::max(w_lo, o.w_lo) >= hi) throw incompatible_error("coeff add: windows do not overlap");
    CoeffElem r(p, lambda, mode, prec, lo, hi);
    long long m = modulus();
    for (const auto& [i, c] : terms) r.set(i, c);
    for (const auto& [i, c] : o.terms) r.set(i, mod_norm(r.coeff(i) + c, m));
    return r;
}

CoeffElem CoeffElem::sub(const CoeffElem& o) const { return add(o.neg()); }

CoeffElem CoeffElem::neg() const {
    CoeffElem r(p, lambda, mode, prec, w_lo, w_hi);
    long long m = modulus();
    for (const auto& [i, c] : terms) r.set(i, mod_norm(-c, m));
    return r;
}

CoeffElem CoeffElem::scale(long long c) const {
    CoeffElem r(p, lambda, mode, prec, w_lo, w_hi);
    long long m = modulus();
    for (const auto& [i, a] : terms) r.set(i, mul_mod(a, mod_norm(c, m), m));
    return r;
}

CoeffElem CoeffElem::mul(const CoeffElem& o) const {
    if (!same_ring(o)) throw incompatible_error("coeff mul (lambda/prime/mode)");
    long long lo = w_lo + o.w_lo;
    // Unknown integral content >= w_hi of one factor meets the lowest stored
    // term of the other; p^N dust products stay in the precision lattice.
    long long lx = terms.empty() ? kExpInf : terms.begin()->first;
    long long ly = o.terms.empty() ? kExpInf : o.terms.begin()->first;
    long long hi = std::min(std::min(w_hi + ly, o.w_hi + lx), kExpInf);
    if (hi <= lo) throw precision_error("coeff mul: window exhausted");
    CoeffElem r(p, lambda, mode, prec, lo, hi);
    long long m = modulus();
    for (const auto& [i, a] : terms)
        for (const auto& [j, b] : o.terms) {
            long long k = i + j;
            if (k < lo || k >= hi) continue;
            r.set(k, mod_norm(r.coeff(k) + mul_mod(a, b, m), m));
        }
    return r;
}

bool CoeffElem::operator==(const CoeffElem& o) const {
    return same_ring(o) && w_lo == o.w_lo && w_hi == o.w_hi && terms == o.terms;
}

Valuation coeff_valuation(const CoeffElem& x) {
    Valuation floor = coeff_precision_floor(x);
    if (x.terms.empty()) return Valuation::inf();
    bool have = false;
    Rat best(0);
    for (const auto& [i, c] : x.terms) {
        Rat v = Rat(padic_val(c, x.p)) + Rat(i) / x.lambda;
        if (!have || v < best) { best = v; have = true; }
    }
    bool cert = floor.infinite || best < floor.value;
    return Valuation::of(best, cert);
}

Valuation coeff_precision_floor(const CoeffElem& x) {
    if (x.w_hi >= kExpInf && x.mode == CoeffMode::char_p) return Valuation::inf();
    Rat tail = Rat(std::min(x.w_hi, kExpInf)) / x.lambda;
    if (x.mode == CoeffMode::char_p) return Valuation::of(tail, true);
    Rat dust = Rat(x.prec) + Rat(x.w_lo) / x.lambda;
    return Valuation::of(std::min(tail, dust), true);
}

CoeffElem coeff_embed(const CoeffElem& x, const Rat& lambda_new) {
    if (lambda_new <= x.lambda)
        throw hypothesis_error("coeff_embed requires lambda_new > lambda");
    CoeffElem r = x;
    r.lambda = lambda_new;
    return r;
}

} // namespace perk
