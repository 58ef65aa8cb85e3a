#include "perk/tilt.hpp"
#include "perk/errors.hpp"

#include <algorithm>

namespace perk {

PExponent PExponent::make(long long num, int denom_exp, long long p) {
    while (denom_exp > 0 && num % p == 0) { num /= p; --denom_exp; }
    if (denom_exp < 0) throw hypothesis_error("PExponent: negative denom_exp");
    return PExponent{num, denom_exp};
}

PExponent PExponent::from_rat(const Rat& r, long long p) {
    long long den = r.denominator();
    int k = 0;
    while (den % p == 0) { den /= p; ++k; }
    if (den != 1) throw hypothesis_error("PExponent: denominator is not a p-power");
    return PExponent{r.numerator(), k};
}

Rat PExponent::to_rat(long long p) const { return Rat(num, ipow(p, denom_exp)); }

Rat tilt_weight(long long p) { return Rat(p, p - 1); }

TiltElem TiltElem::one(const FqCtx& c) {
    TiltElem x(c);
    x.set(Rat(0), c.from_int(1));
    return x;
}

TiltElem TiltElem::monomial(const FqCtx& c, const Rat& e, Fq v) {
    TiltElem x(c);
    if (e < Rat(0)) x.allow_negative = true;
    x.set(e, v);
    return x;
}

std::optional<Rat> TiltElem::min_exp() const {
    if (terms.empty()) return std::nullopt;
    return terms.begin()->first;
}

void TiltElem::set(const Rat& e, Fq v) {
    if (capped && e >= cap) return;
    if (e < Rat(0) && !allow_negative)
        throw hypothesis_error("tilt: negative exponent with allow_negative=false");
    PExponent::from_rat(e, ctx.p);  // validates the p-power denominator
    if (v == 0) terms.erase(e);
    else terms[e] = v;
}

Fq TiltElem::coeff(const Rat& e) const {
    auto it = terms.find(e);
    return it == terms.end() ? 0 : it->second;
}

namespace {

// Combined cap for a sum.
void merge_add_cap(const TiltElem& x, const TiltElem& y, TiltElem& r) {
    if (x.capped && y.capped) { r.capped = true; r.cap = std::min(x.cap, y.cap); }
    else if (x.capped) { r.capped = true; r.cap = x.cap; }
    else if (y.capped) { r.capped = true; r.cap = y.cap; }
}

} // namespace

TiltElem TiltElem::add(const TiltElem& o) const {
    if (!same_field(o)) throw incompatible_error("tilt add: field order mismatch");
    TiltElem r(ctx);
    r.allow_negative = allow_negative || o.allow_negative;
    merge_add_cap(*this, o, r);
    for (const auto& [e, v] : terms) r.set(e, v);
    for (const auto& [e, v] : o.terms) r.set(e, ctx.add(r.coeff(e), v));
    return r;
}

TiltElem TiltElem::sub(const TiltElem& o) const { return add(o.neg()); }

TiltElem TiltElem::neg() const {
    TiltElem r = *this;
    for (auto& [e, v] : r.terms) v = ctx.neg(v);
    return r;
}

TiltElem TiltElem::scale(Fq c) const {
    TiltElem r(ctx);
    r.allow_negative = allow_negative;
    r.capped = capped;
    r.cap = cap;
    if (c == 0) return r;
    for (const auto& [e, v] : terms) r.set(e, ctx.mul(v, c));
    return r;
}

TiltElem TiltElem::mul(const TiltElem& o) const {
    if (!same_field(o)) throw incompatible_error("tilt mul: field order mismatch");
    TiltElem r(ctx);
    r.allow_negative = allow_negative || o.allow_negative;
    // Unknown content >= cap of one factor meets the lowest term of the other.
    bool cp = false;
    Rat c(0);
    auto consider = [&](bool side_capped, const Rat& side_cap, const std::optional<Rat>& other_min) {
        if (!side_capped) return;
        Rat bound = other_min ? side_cap + *other_min : side_cap;  // zero factor: dust*dust only
        if (!other_min) return;                                    // other side exactly zero
        if (!cp || bound < c) { cp = true; c = bound; }
    };
    consider(capped, cap, o.min_exp());
    consider(o.capped, o.cap, min_exp());
    r.capped = cp;
    r.cap = c;
    for (const auto& [e1, v1] : terms)
        for (const auto& [e2, v2] : o.terms)
            r.set(e1 + e2, ctx.add(r.coeff(e1 + e2), ctx.mul(v1, v2)));
    return r;
}

TiltElem tilt_frobenius(const TiltElem& x, int k) {
    TiltElem r(x.ctx);
    r.allow_negative = x.allow_negative;
    long long p = x.ctx.p;
    auto scale_exp = [&](const Rat& e) {
        return k >= 0 ? e * Rat(ipow(p, k)) : e / Rat(ipow(p, -k));
    };
    r.capped = x.capped;
    if (x.capped) r.cap = scale_exp(x.cap);
    for (const auto& [e, v] : x.terms) {
        Fq c = v;
        if (k >= 0) for (int i = 0; i < k; ++i) c = x.ctx.frobenius(c);
        else for (int i = 0; i < -k; ++i) c = x.ctx.proot(c);
        r.set(scale_exp(e), c);
    }
    return r;
}

Valuation tilt_valuation(const TiltElem& x) {
    Rat w = tilt_weight(x.ctx.p);
    if (x.terms.empty()) {
        if (!x.capped) return Valuation::inf();
        return Valuation::of(x.cap * w, false);
    }
    Rat e = x.terms.begin()->first;
    bool cert = !x.capped || e < x.cap;
    return Valuation::of(e * w, cert);
}

PExponent tilt_monomial_root(const PExponent& e, long long r, long long p) {
    if (r <= 0) throw hypothesis_error("tilt_monomial_root: r must be positive");
    long long rr = r;
    int j = 0;
    while (rr % p == 0) { rr /= p; ++j; }
    if (rr != 1) throw hypothesis_error("tilt_monomial_root: root index is not a p-power");
    return PExponent::make(e.num, e.denom_exp + j, p);
}

TiltElem tilt_artin_schreier_solve(const TiltElem& c, const TiltElem& b, const Rat& target_cap) {
    const FqCtx& F = b.ctx;
    if (!c.same_field(b)) throw incompatible_error("artin-schreier: field mismatch");
    long long p = F.p;

    bool c_is_one = (c.terms.size() == 1 && c.terms.begin()->first == Rat(0) &&
                     c.terms.begin()->second == F.from_int(1));
    if (c.terms.size() != 1)
        throw hypothesis_error("artin-schreier: c must be a monomial or 1");
    Rat ec = c.terms.begin()->first;
    Fq c0 = c.terms.begin()->second;
    if (!c_is_one && ec <= Rat(0))
        throw hypothesis_error("artin-schreier: monomial c needs positive valuation (or c = 1)");

    // Exponent boundary between the p-th-root regime and the twisted recursion.
    Rat boundary = ec * Rat(p, p - 1);

    Rat target = target_cap;
    if (b.capped && b.cap < target) target = b.cap;

    TiltElem x(F);
    x.allow_negative = true;
    x.capped = true;
    x.cap = target;

    TiltElem r = b;
    r.allow_negative = true;

    const int max_steps = 200000;
    int below_boundary_steps = 0;
    for (int step = 0; step < max_steps; ++step) {
        // drop solved content beyond the target
        while (!r.terms.empty() && r.terms.begin()->first >= target)
            r.terms.erase(r.terms.begin());
        if (r.terms.empty()) {
            x.cap = target;
            return x;
        }
        Rat e = r.terms.begin()->first;
        Fq beta = r.terms.begin()->second;

        TiltElem xi(F);
        xi.allow_negative = true;
        if (e < boundary) {
            // leading term of x^p
            xi.set(e / Rat(p), F.proot(beta));
            // the p-th-root regime accumulates towards the boundary; a cap
            // beyond it needs infinitely many terms
            if (target > boundary && ++below_boundary_steps > 36)
                throw precision_error(
                    "artin-schreier: requested cap lies beyond the exponent "
                    "accumulation boundary " + to_string(boundary));
        } else if (e > boundary) {
            // leading term of -c*x
            xi.set(e - ec, F.neg(F.mul(beta, F.inv(c0))));
        } else {
            Fq a;
            if (!F.artin_schreier_residue(c0, beta, a)) {
                int d = F.artin_schreier_extension_degree(c0, beta);
                throw as_residue_unsolvable(
                    d, "artin-schreier: residue equation unsolvable in F_q; "
                       "requires extension degree " + std::to_string(d));
            }
            xi.set(e / Rat(p), a);
        }
        for (const auto& [ee, vv] : xi.terms) x.set(ee, F.add(x.coeff(ee), vv));
        // exact residual update: (x + xi)^p - c(x + xi) = x^p - cx + xi^p - c xi
        TiltElem xip = xi;
        {
            TiltElem acc(F);
            acc.allow_negative = true;
            for (const auto& [ee, vv] : xi.terms)
                acc.set(ee * Rat(p), F.pow(vv, static_cast<unsigned long long>(p)));
            xip = acc;
        }
        TiltElem cxi = c.mul(xi);
        cxi.capped = false;
        xip.capped = false;
        r = r.sub(xip).add(cxi);
        r.capped = false;
    }
    throw precision_error("artin-schreier: step limit reached before cap");
}

} // namespace perk
