#include "perk/witt.hpp"
#include "perk/errors.hpp"

#include <algorithm>
#include <mutex>

namespace perk {

namespace {

long long checked_mul(long long a, long long b) {
    long long r;
    if (__builtin_mul_overflow(a, b, &r)) throw error("witt tables: coefficient overflow");
    return r;
}

long long checked_add(long long a, long long b) {
    long long r;
    if (__builtin_add_overflow(a, b, &r)) throw error("witt tables: coefficient overflow");
    return r;
}

} // namespace

ZPoly ZPoly::constant(long long c, int nvars) {
    ZPoly r;
    if (c != 0) r.terms[std::vector<int>(nvars, 0)] = c;
    return r;
}

ZPoly ZPoly::var(int idx, int nvars) {
    ZPoly r;
    std::vector<int> m(nvars, 0);
    m[idx] = 1;
    r.terms[m] = 1;
    return r;
}

ZPoly ZPoly::add(const ZPoly& o) const {
    ZPoly r = *this;
    for (const auto& [m, c] : o.terms) {
        long long v = checked_add(r.terms.count(m) ? r.terms[m] : 0, c);
        if (v == 0) r.terms.erase(m);
        else r.terms[m] = v;
    }
    return r;
}

ZPoly ZPoly::sub(const ZPoly& o) const { return add(o.scaled(-1)); }

ZPoly ZPoly::scaled(long long c) const {
    ZPoly r;
    if (c == 0) return r;
    for (const auto& [m, v] : terms) r.terms[m] = checked_mul(v, c);
    return r;
}

ZPoly ZPoly::mul(const ZPoly& o) const {
    ZPoly r;
    for (const auto& [m1, c1] : terms)
        for (const auto& [m2, c2] : o.terms) {
            std::vector<int> m = m1;
            for (size_t i = 0; i < m.size(); ++i) m[i] += m2[i];
            long long v = checked_add(r.terms.count(m) ? r.terms[m] : 0, checked_mul(c1, c2));
            if (v == 0) r.terms.erase(m);
            else r.terms[m] = v;
        }
    return r;
}

ZPoly ZPoly::pow(int e) const {
    ZPoly r = constant(1, terms.empty() ? 0 : static_cast<int>(terms.begin()->first.size()));
    if (terms.empty()) {
        if (e == 0) throw error("ZPoly::pow of empty with e=0");
        return ZPoly();
    }
    ZPoly b = *this;
    while (e > 0) {
        if (e & 1) r = r.mul(b);
        b = b.mul(b);
        e >>= 1;
    }
    return r;
}

ZPoly ZPoly::divided(long long c) const {
    ZPoly r;
    for (const auto& [m, v] : terms) {
        if (v % c != 0) throw error("witt tables: inexact division");
        r.terms[m] = v / c;
    }
    return r;
}

WittUniversalTables witt_universal_tables(long long p, int J) {
    if (J < 1) throw hypothesis_error("witt tables: J >= 1 required");
    if (p > 7 || J > 4) throw hypothesis_error("witt tables: supported range p <= 7, J <= 4");
    int nv = 2 * J;
    WittUniversalTables T;
    T.p = p;
    T.J = J;

    // ghost_k over the a- or b-block: sum_{i<=k} p^i x_i^{p^{k-i}}
    auto ghost = [&](int k, int block) {
        ZPoly g = ZPoly::constant(0, nv);
        for (int i = 0; i <= k; ++i) {
            ZPoly xi = ZPoly::var(block * J + i, nv);
            g = g.add(xi.pow(static_cast<int>(ipow(p, k - i))).scaled(ipow(p, i)));
        }
        return g;
    };

    for (int k = 0; k < J; ++k) {
        ZPoly target_sum = ghost(k, 0).add(ghost(k, 1));
        ZPoly target_prod = ghost(k, 0).mul(ghost(k, 1));
        ZPoly target_neg = ghost(k, 0).scaled(-1);
        for (int i = 0; i < k; ++i) {
            long long pi = ipow(p, i);
            int e = static_cast<int>(ipow(p, k - i));
            target_sum = target_sum.sub(T.sum[i].pow(e).scaled(pi));
            target_prod = target_prod.sub(T.prod[i].pow(e).scaled(pi));
            target_neg = target_neg.sub(T.negation[i].pow(e).scaled(pi));
        }
        long long pk = ipow(p, k);
        T.sum.push_back(target_sum.divided(pk));
        T.prod.push_back(target_prod.divided(pk));
        T.negation.push_back(target_neg.divided(pk));
    }
    return T;
}

const WittUniversalTables& WittUniversalTables::get(long long p, int J) {
    static std::mutex mu;
    static std::map<std::pair<long long, int>, WittUniversalTables> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto key = std::make_pair(p, J);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, witt_universal_tables(p, J)).first;
    return it->second;
}

WittElem::WittElem(long long p_, int J_, const FqCtx& ctx) : p(p_), J(J_) {
    comps.assign(static_cast<size_t>(J), TiltElem(ctx));
    for (auto& c : comps) c.allow_negative = true;
}

WittElem WittElem::zero(long long p, int J, const FqCtx& ctx) { return WittElem(p, J, ctx); }

WittElem WittElem::teichmuller(long long p, int J, const TiltElem& t) {
    WittElem w(p, J, t.ctx);
    w.comps[0] = t;
    w.comps[0].allow_negative = true;
    return w;
}

WittElem WittElem::from_integer(long long p, int J, const FqCtx& ctx, long long v) {
    // Teichmuller digits: v = sum p^k w(x_k) mod p^J with w(x) = x^{p^{J-1}} mod p^J.
    long long m = ipow(p, J);
    long long r = ((v % m) + m) % m;
    WittElem w(p, J, ctx);
    for (int k = 0; k < J; ++k) {
        long long d = r % p;
        w.comps[static_cast<size_t>(k)] = d == 0
            ? TiltElem::zero(ctx)
            : TiltElem::monomial(ctx, Rat(0), ctx.from_int(d));
        w.comps[static_cast<size_t>(k)].allow_negative = true;
        // subtract the Teichmuller lift d^(p^{J-1}) mod p^J of the digit
        long long acc = 1, base = d % m, ee = ipow(p, J - 1);
        while (ee > 0) {
            if (ee & 1) acc = static_cast<long long>((static_cast<__int128>(acc) * base) % m);
            base = static_cast<long long>((static_cast<__int128>(base) * base) % m);
            ee >>= 1;
        }
        r = ((r - acc) % m + m) % m;
        if (k + 1 < J) {
            if (r % p != 0) throw error("witt digits: inexact step");
            r /= p;
            m /= p;
        }
    }
    return w;
}

bool WittElem::same_shape(const WittElem& o) const {
    return p == o.p && J == o.J && !comps.empty() && !o.comps.empty() &&
           comps[0].ctx == o.comps[0].ctx;
}

namespace {

TiltElem eval_zpoly(const ZPoly& P, const std::vector<const TiltElem*>& args, const FqCtx& ctx,
                    long long p) {
    TiltElem acc(ctx);
    acc.allow_negative = true;
    for (const auto& [mono, c] : P.terms) {
        long long cr = ((c % p) + p) % p;
        if (cr == 0) continue;
        TiltElem term = TiltElem::monomial(ctx, Rat(0), ctx.from_int(cr));
        term.allow_negative = true;
        for (size_t v = 0; v < mono.size(); ++v) {
            for (int e = 0; e < mono[v]; ++e) term = term.mul(*args[v]);
        }
        acc = acc.add(term);
    }
    return acc;
}

} // namespace

WittElem WittElem::add(const WittElem& o) const {
    if (!same_shape(o)) throw incompatible_error("witt add: table/length mismatch");
    const auto& T = WittUniversalTables::get(p, J);
    WittElem r(p, J, comps[0].ctx);
    std::vector<const TiltElem*> args;
    for (int i = 0; i < J; ++i) args.push_back(&comps[static_cast<size_t>(i)]);
    for (int i = 0; i < J; ++i) args.push_back(&o.comps[static_cast<size_t>(i)]);
    for (int k = 0; k < J; ++k)
        r.comps[static_cast<size_t>(k)] = eval_zpoly(T.sum[static_cast<size_t>(k)], args, comps[0].ctx, p);
    return r;
}

WittElem WittElem::mul(const WittElem& o) const {
    if (!same_shape(o)) throw incompatible_error("witt mul: table/length mismatch");
    const auto& T = WittUniversalTables::get(p, J);
    WittElem r(p, J, comps[0].ctx);
    std::vector<const TiltElem*> args;
    for (int i = 0; i < J; ++i) args.push_back(&comps[static_cast<size_t>(i)]);
    for (int i = 0; i < J; ++i) args.push_back(&o.comps[static_cast<size_t>(i)]);
    for (int k = 0; k < J; ++k)
        r.comps[static_cast<size_t>(k)] = eval_zpoly(T.prod[static_cast<size_t>(k)], args, comps[0].ctx, p);
    return r;
}

WittElem WittElem::neg() const {
    const auto& T = WittUniversalTables::get(p, J);
    WittElem r(p, J, comps[0].ctx);
    std::vector<const TiltElem*> args;
    for (int i = 0; i < J; ++i) args.push_back(&comps[static_cast<size_t>(i)]);
    for (int i = 0; i < J; ++i) args.push_back(&comps[static_cast<size_t>(i)]);  // unused block
    for (int k = 0; k < J; ++k)
        r.comps[static_cast<size_t>(k)] = eval_zpoly(T.negation[static_cast<size_t>(k)], args, comps[0].ctx, p);
    return r;
}

WittElem WittElem::sub(const WittElem& o) const { return add(o.neg()); }

WittElem witt_frobenius(const WittElem& x) {
    WittElem r = x;
    for (auto& c : r.comps) c = tilt_frobenius(c, 1);
    return r;
}

Valuation witt_valuation(const WittElem& x, const Rat& b) {
    if (b <= Rat(0)) throw hypothesis_error("witt valuation: b > 0 required");
    bool have = false;
    Rat best(0);
    bool cert = false;
    Rat bound = Rat(x.J) / b;  // missing components p^k, k >= J
    for (int k = 0; k < x.J; ++k) {
        const TiltElem& c = x.comps[static_cast<size_t>(k)];
        Valuation v = tilt_valuation(c);
        Rat kb = Rat(k) / b;
        if (!v.infinite) {
            Rat cand = v.value + kb;
            if (!have || cand < best) { best = cand; cert = v.certified; have = true; }
        }
        if (c.capped) bound = std::min(bound, c.cap * tilt_weight(x.p) + kb);
    }
    if (!have) return Valuation::of(bound, false);
    return Valuation::of(best, cert && best < bound);
}

void PerfectElem::set(long long i, const WittElem& w) {
    bool zero = true;
    for (const auto& c : w.comps) zero = zero && c.is_zero();
    if (zero) terms.erase(i);
    else terms[i] = w;
}

void PerfectElem::add_term(long long i, const WittElem& w) {
    auto it = terms.find(i);
    if (it == terms.end()) set(i, w);
    else set(i, it->second.add(w));
}

PerfectElem PerfectElem::add(const PerfectElem& o) const {
    if (p != o.p || J != o.J || lambda != o.lambda)
        throw incompatible_error("perfect add");
    PerfectElem r(p, J, std::min(b, o.b), lambda, ctx);
    for (const auto& [i, w] : terms) r.add_term(i, w);
    for (const auto& [i, w] : o.terms) r.add_term(i, w);
    return r;
}

PerfectElem PerfectElem::sub(const PerfectElem& o) const {
    PerfectElem n = o;
    for (auto& [i, w] : n.terms) w = w.neg();
    return add(n);
}

PerfectElem PerfectElem::mul(const PerfectElem& o) const {
    if (p != o.p || J != o.J || lambda != o.lambda)
        throw incompatible_error("perfect mul");
    PerfectElem r(p, J, std::min(b, o.b), lambda, ctx);
    for (const auto& [i, w] : terms)
        for (const auto& [j, v] : o.terms)
            r.add_term(i + j, w.mul(v));
    return r;
}

PerfectElem perfect_frobenius(const PerfectElem& x) {
    PerfectElem r = x;
    for (auto& [i, w] : r.terms) w = witt_frobenius(w);
    return r;
}

Valuation perfect_valuation(const PerfectElem& x) {
    if (x.terms.empty()) return Valuation::inf();
    bool have = false;
    Rat best(0);
    bool cert = false;
    bool single_teich = x.terms.size() == 1;
    if (single_teich) {
        const WittElem& w = x.terms.begin()->second;
        for (int k = 1; k < w.J; ++k)
            if (!w.comps[static_cast<size_t>(k)].is_zero()) single_teich = false;
    }
    for (const auto& [i, w] : x.terms) {
        // p-powers weigh lambda/b (ring-of-definition bound), u weighs 1/b
        Valuation v = witt_valuation(w, x.b / x.lambda);
        Rat base = Rat(i) / x.b;
        if (!v.infinite) {
            Rat cand = v.value + base;
            if (!have || cand < best) { best = cand; cert = v.certified; have = true; }
        } else {
            have = have;  // zero Witt term contributes nothing
        }
    }
    if (!have) return Valuation::inf();
    return Valuation::of(best, cert && single_teich);
}

PerfectElem perfect_from_annulus(const AnnulusElem& x, int J, const Rat& cap) {
    if (!x.tail_free())
        throw hypothesis_error("perfect_from_annulus: tails unsupported; expand first");
    FqCtx ctx(x.p, 1);
    int JJ = x.mode == CoeffMode::char_p ? 1 : J;
    if (x.mode == CoeffMode::mixed && J > x.prec)
        throw precision_error("perfect_from_annulus: J exceeds coefficient precision");
    PerfectElem r(x.p, JJ, x.b, x.lambda, ctx);

    // [T_n] = Teichmuller(1 + t^{1/p^n})
    Rat texp = Rat(1, ipow(x.p, x.level));
    TiltElem tn(ctx);
    tn.allow_negative = true;
    tn.set(Rat(0), ctx.from_int(1));
    tn.set(texp, ctx.from_int(1));

    auto tn_power = [&](long long k) {
        TiltElem acc(ctx);
        acc.allow_negative = true;
        acc.set(Rat(0), ctx.from_int(1));
        if (k >= 0) {
            for (long long e = 0; e < k; ++e) acc = acc.mul(tn);
            return acc;
        }
        // (1 + s)^{-1} truncated at the cap, s = t^{1/p^n}
        TiltElem inv(ctx);
        inv.allow_negative = true;
        inv.capped = true;
        inv.cap = cap;
        Rat e(0);
        long long sign = 1;
        int guard = 0;
        while (e < cap) {
            inv.set(e, ctx.from_int(sign > 0 ? 1 : x.p - 1));
            e += texp;
            sign = -sign;
            if (++guard > 100000) throw precision_error("perfect_from_annulus: cap too large");
        }
        TiltElem acc2 = inv;
        for (long long i = 1; i < -k; ++i) acc2 = acc2.mul(inv);
        return acc2;
    };

    for (const auto& [k, c] : x.terms) {
        WittElem tk = WittElem::teichmuller(x.p, JJ, tn_power(k));
        for (const auto& [ue, residue] : c.terms) {
            WittElem cw = WittElem::from_integer(x.p, JJ, ctx, residue);
            r.add_term(ue, cw.mul(tk));
        }
    }
    return r;
}

namespace {

// C(a, j) mod p by Lucas.
long long binom_mod_p(long long a, long long j, long long p) {
    long long r = 1;
    while (j > 0 || a > 0) {
        long long ad = a % p, jd = j % p;
        if (jd > ad) return 0;
        // C(ad, jd) mod p, small values
        long long c = 1;
        for (long long i = 0; i < jd; ++i) {
            c = c * (ad - i) % p;
            long long inv = 1, b = (i + 1) % p, e = p - 2;
            while (e > 0) {
                if (e & 1) inv = inv * b % p;
                b = b * b % p;
                e >>= 1;
            }
            c = c * inv % p;
        }
        r = r * c % p;
        a /= p;
        j /= p;
    }
    return r;
}

} // namespace

AnnulusElem perfect_to_level(const PerfectElem& x, const AnnulusElem& proto) {
    if (x.J != 1) throw hypothesis_error("perfect_to_level: char-p model (J = 1) only");
    if (proto.mode != CoeffMode::char_p)
        throw hypothesis_error("perfect_to_level: char-p coefficient proto required");
    long long pm = ipow(proto.p, proto.level);
    AnnulusElem r = proto.like_zero();
    for (const auto& [ue, w] : x.terms) {
        const TiltElem& t = w.comps[0];
        for (const auto& [e, fc] : t.terms) {
            // t^{a/p^m} = (T_m - 1)^a at the stored level m
            Rat scaled = e * Rat(pm);
            if (scaled.denominator() != 1)
                throw hypothesis_error("perfect_to_level: level too small for exponent");
            long long a = scaled.numerator();
            long long coeff_val = x.ctx.to_int(fc);
            CoeffElem uc = CoeffElem::monomial(proto.p, proto.lambda, CoeffMode::char_p, 1,
                                               proto.u_lo, proto.u_hi, ue, coeff_val);
            if (a >= 0) {
                for (long long j = 0; j <= a; ++j) {
                    long long c = binom_mod_p(a, j, proto.p);
                    if (c == 0) continue;
                    long long s = ((a - j) % 2 == 0) ? 1 : proto.p - 1;
                    r.add_term(j, uc.scale(c * s % proto.p));
                }
            } else {
                r.add_tail(-a, uc);
            }
        }
    }
    return r;
}

PerfectElem level_to_perfect(const AnnulusElem& x, const Rat& cap) {
    if (x.mode != CoeffMode::char_p)
        throw hypothesis_error("level_to_perfect: char-p coefficients only");
    FqCtx ctx(x.p, 1);
    PerfectElem r(x.p, 1, x.b, x.lambda, ctx);
    Rat texp = Rat(1, ipow(x.p, x.level));

    TiltElem tm(ctx);  // t^{1/p^m}
    tm.allow_negative = true;
    tm.set(texp, ctx.from_int(1));

    auto emit = [&](long long ue, const TiltElem& t) {
        WittElem w = WittElem::teichmuller(x.p, 1, t);
        r.add_term(ue, w);
    };

    for (const auto& [k, c] : x.terms) {
        // T_m^k = (1 + t^{1/p^m})^k
        TiltElem acc(ctx);
        acc.allow_negative = true;
        acc.set(Rat(0), ctx.from_int(1));
        if (k >= 0) {
            TiltElem base(ctx);
            base.allow_negative = true;
            base.set(Rat(0), ctx.from_int(1));
            base.set(texp, ctx.from_int(1));
            for (long long e = 0; e < k; ++e) acc = acc.mul(base);
        } else {
            TiltElem inv(ctx);
            inv.allow_negative = true;
            inv.capped = true;
            inv.cap = cap;
            Rat e(0);
            long long sign = 1;
            int guard = 0;
            while (e < cap) {
                inv.set(e, ctx.from_int(sign > 0 ? 1 : x.p - 1));
                e += texp;
                sign = -sign;
                if (++guard > 100000) throw precision_error("level_to_perfect: cap too large");
            }
            acc = inv;
            for (long long i = 1; i < -k; ++i) acc = acc.mul(inv);
        }
        for (const auto& [ue, residue] : c.terms)
            emit(ue, acc.scale(ctx.from_int(residue)));
    }
    for (const auto& [i, c] : x.pi_tail) {
        // (T_m - 1)^{-i} = t^{-i/p^m}
        TiltElem t(ctx);
        t.allow_negative = true;
        t.set(Rat(-i) * texp, ctx.from_int(1));
        for (const auto& [ue, residue] : c.terms)
            emit(ue, t.scale(ctx.from_int(residue)));
    }
    return r;
}

} // namespace perk
