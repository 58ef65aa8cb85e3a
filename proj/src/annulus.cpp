#include "perk/annulus.hpp"

#include <algorithm>

namespace perk {

namespace {

long long mod_norm(long long v, long long m) {
    long long r = v % m;
    if (r < 0) r += m;
    return r;
}

// C(k, j) mod p^N for any integer k (j >= 0), tracked as p^vp * unit.
struct BinomSeq {
    long long k;
    long long p;
    int N;
    long long modulus;
    int vp = 0;
    long long unit = 1;   // mod p^N
    bool zero = false;    // binomial became exactly zero (k >= 0, j > k)
    long long j = 0;

    BinomSeq(long long k_, long long p_, int N_)
        : k(k_), p(p_), N(N_), modulus(ipow(p_, N_)) {}

    void advance() {
        // C(k, j+1) = C(k, j) * (k - j) / (j + 1)
        long long num = k - j;
        long long den = j + 1;
        ++j;
        if (zero) return;
        if (num == 0) { zero = true; return; }
        long long an = num < 0 ? -num : num;
        while (an % p == 0) { an /= p; ++vp; }
        long long sn = num < 0 ? -(an % modulus) : (an % modulus);
        unit = static_cast<long long>((static_cast<__int128>(unit) * mod_norm(sn, modulus)) % modulus);
        long long ad = den;
        while (ad % p == 0) { ad /= p; --vp; }
        // unit inverse mod p^N by Euler
        long long phi = modulus / p * (p - 1);
        long long inv = 1, base = ad % modulus, e = phi - 1;
        while (e > 0) {
            if (e & 1) inv = static_cast<long long>((static_cast<__int128>(inv) * base) % modulus);
            base = static_cast<long long>((static_cast<__int128>(base) * base) % modulus);
            e >>= 1;
        }
        unit = static_cast<long long>((static_cast<__int128>(unit) * inv) % modulus);
    }

    long long residue() const {
        if (zero || vp >= N) return 0;
        return static_cast<long long>((static_cast<__int128>(ipow(p, vp)) * unit) % modulus);
    }
};

} // namespace

Rat annulus_top_b(long long p, const Rat& lambda) { return lambda * Rat(p - 1, p); }

bool annulus_valid_b(long long p, const Rat& lambda, const Rat& b) {
    if (b <= Rat(0)) return false;
    Rat q = annulus_top_b(p, lambda) / b;  // must be p^z, z >= 0
    if (q < Rat(1)) return false;
    if (q.denominator() != 1) return false;
    long long n = q.numerator();
    while (n % p == 0) n /= p;
    return n == 1;
}

AnnulusElem::AnnulusElem(long long p_, Rat lambda_, CoeffMode mode_, int prec_,
                         long long ulo, long long uhi, int level_, Rat b_,
                         long long wlo, long long whi)
    : p(p_), lambda(lambda_), mode(mode_), prec(mode_ == CoeffMode::char_p ? 1 : prec_),
      u_lo(ulo), u_hi(uhi), level(level_), b(b_), w_lo(wlo), w_hi(whi) {
    if (!annulus_valid_b(p, lambda, b))
        throw hypothesis_error("annulus: interval radius must be (p-1)*lambda/p^{1+z}, z >= 0");
    if (level < 0) throw hypothesis_error("annulus: negative level");
}

CoeffElem AnnulusElem::czero() const {
    return CoeffElem::zero(p, lambda, mode, prec, u_lo, u_hi);
}

CoeffElem AnnulusElem::cconst(long long v) const {
    return CoeffElem::constant(p, lambda, mode, prec, u_lo, u_hi, v);
}

AnnulusElem AnnulusElem::like_zero() const {
    AnnulusElem r = *this;
    r.terms.clear();
    r.pi_tail.clear();
    return r;
}

bool AnnulusElem::same_ring(const AnnulusElem& o) const {
    return p == o.p && lambda == o.lambda && mode == o.mode && prec == o.prec;
}

void AnnulusElem::set(long long k, const CoeffElem& c) {
    if (c.is_zero()) terms.erase(k);
    else {
        terms[k] = c;
        w_lo = std::min(w_lo, k);
        w_hi = std::max(w_hi, k + 1);
    }
}

void AnnulusElem::add_term(long long k, const CoeffElem& c) {
    auto it = terms.find(k);
    if (it == terms.end()) set(k, c);
    else {
        CoeffElem s = it->second.add(c);
        if (s.is_zero()) terms.erase(it);
        else it->second = s;
    }
}

void AnnulusElem::set_tail(long long i, const CoeffElem& c) {
    if (i < 1) throw hypothesis_error("annulus tail index must be >= 1");
    if (c.is_zero()) pi_tail.erase(i);
    else pi_tail[i] = c;
}

void AnnulusElem::add_tail(long long i, const CoeffElem& c) {
    auto it = pi_tail.find(i);
    if (it == pi_tail.end()) set_tail(i, c);
    else {
        CoeffElem s = it->second.add(c);
        if (s.is_zero()) pi_tail.erase(it);
        else it->second = s;
    }
}

CoeffElem AnnulusElem::coeff(long long k) const {
    auto it = terms.find(k);
    return it == terms.end() ? czero() : it->second;
}

AnnulusElem AnnulusElem::one(const AnnulusElem& proto) {
    AnnulusElem r = proto.like_zero();
    r.set(0, r.cconst(1));
    return r;
}

AnnulusElem AnnulusElem::variable(const AnnulusElem& proto) {
    AnnulusElem r = proto.like_zero();
    r.set(1, r.cconst(1));
    return r;
}

AnnulusElem AnnulusElem::pi(const AnnulusElem& proto) {
    AnnulusElem r = proto.like_zero();
    r.set(1, r.cconst(1));
    r.set(0, r.cconst(-1));
    return r;
}

AnnulusElem AnnulusElem::monomial(const AnnulusElem& proto, long long k, long long c) {
    AnnulusElem r = proto.like_zero();
    r.set(k, r.cconst(c));
    return r;
}

namespace {

void align_pair(AnnulusElem& x, AnnulusElem& y) {
    if (!x.same_ring(y)) throw incompatible_error("annulus arith (prime/lambda/mode/prec)");
    if (x.level != y.level) {
        int lvl = std::max(x.level, y.level);
        if (x.level < lvl) x = raise_level(x, lvl);
        if (y.level < lvl) y = raise_level(y, lvl);
    }
}

Rat interval_meet(const AnnulusElem& x, const AnnulusElem& y) { return std::min(x.b, y.b); }

} // namespace

AnnulusElem AnnulusElem::add(const AnnulusElem& o) const {
    AnnulusElem x = *this, y = o;
    align_pair(x, y);
    AnnulusElem r = x.like_zero();
    r.b = interval_meet(x, y);
    r.interval_clamped = x.interval_clamped || y.interval_clamped;
    r.u_lo = std::max(x.u_lo, y.u_lo);
    r.u_hi = std::min(x.u_hi, y.u_hi);
    r.w_lo = std::min(x.w_lo, y.w_lo);
    r.w_hi = std::max(x.w_hi, y.w_hi);
    for (const auto& [k, c] : x.terms) r.add_term(k, c);
    for (const auto& [k, c] : y.terms) r.add_term(k, c);
    for (const auto& [i, c] : x.pi_tail) r.add_tail(i, c);
    for (const auto& [i, c] : y.pi_tail) r.add_tail(i, c);
    return r;
}

AnnulusElem AnnulusElem::sub(const AnnulusElem& o) const { return add(o.neg()); }

AnnulusElem AnnulusElem::neg() const {
    AnnulusElem r = *this;
    for (auto& [k, c] : r.terms) c = c.neg();
    for (auto& [i, c] : r.pi_tail) c = c.neg();
    return r;
}

AnnulusElem AnnulusElem::scale(const CoeffElem& c) const {
    AnnulusElem r = like_zero();
    if (c.is_zero()) return r;
    for (const auto& [k, a] : terms) r.add_term(k, a.mul(c));
    for (const auto& [i, a] : pi_tail) r.add_tail(i, a.mul(c));
    return r;
}

AnnulusElem AnnulusElem::scale_int(long long c) const {
    AnnulusElem r = like_zero();
    for (const auto& [k, a] : terms) r.add_term(k, a.scale(c));
    for (const auto& [i, a] : pi_tail) r.add_tail(i, a.scale(c));
    return r;
}

CoeffElem annulus_ell(const AnnulusElem& x) {
    CoeffElem s = x.czero();
    for (const auto& [k, c] : x.terms) s = s.add(c);
    return s;
}

AnnulusElem annulus_div_pi_exact(const AnnulusElem& x) {
    if (!x.tail_free()) throw hypothesis_error("div_pi: tail present");
    if (!annulus_ell(x).is_zero())
        throw hypothesis_error("div_pi: coefficient sum is nonzero");
    AnnulusElem q = x.like_zero();
    // f = (T-1) q: descending recursion q_{k-1} = f_k + q_k.
    CoeffElem acc = x.czero();
    if (x.terms.empty()) return q;
    long long hi = x.terms.rbegin()->first;
    long long lo = x.terms.begin()->first;
    for (long long k = hi; k > lo; --k) {
        acc = acc.add(x.coeff(k));
        q.add_term(k - 1, acc);
    }
    return q;
}

namespace {

// pi^{-i} * f for a Laurent-only f, peeled into canonical tail + Laurent.
AnnulusElem tail_times_laurent(long long i, const AnnulusElem& f) {
    AnnulusElem res = f.like_zero();
    AnnulusElem cur = f;
    for (long long d = i; d >= 1; --d) {
        CoeffElem s = annulus_ell(cur);
        if (!s.is_zero()) {
            res.add_tail(d, s);
            AnnulusElem corr = cur.like_zero();
            corr.set(0, s);
            cur = cur.sub(corr);
        }
        cur = annulus_div_pi_exact(cur);
    }
    return res.add(cur);
}

} // namespace

AnnulusElem AnnulusElem::mul(const AnnulusElem& o) const {
    AnnulusElem x = *this, y = o;
    align_pair(x, y);
    AnnulusElem r = x.like_zero();
    r.b = interval_meet(x, y);
    r.interval_clamped = x.interval_clamped || y.interval_clamped;
    // Laurent x Laurent
    for (const auto& [k1, c1] : x.terms)
        for (const auto& [k2, c2] : y.terms)
            r.add_term(k1 + k2, c1.mul(c2));
    // tail x tail
    for (const auto& [i1, c1] : x.pi_tail)
        for (const auto& [i2, c2] : y.pi_tail)
            r.add_tail(i1 + i2, c1.mul(c2));
    // tail x Laurent (both directions)
    auto cross = [&](const std::map<long long, CoeffElem>& tail, const AnnulusElem& laurent) {
        if (tail.empty() || laurent.terms.empty()) return;
        for (const auto& [i, c] : tail) {
            AnnulusElem piece = tail_times_laurent(i, laurent.scale(c));
            r = r.add(piece);
        }
    };
    AnnulusElem xl = x.like_zero();
    xl.terms = x.terms;
    AnnulusElem yl = y.like_zero();
    yl.terms = y.terms;
    cross(x.pi_tail, yl);
    cross(y.pi_tail, xl);
    return r;
}

bool AnnulusElem::equal_data(const AnnulusElem& o) const {
    if (!same_ring(o) || level != o.level || b != o.b) return false;
    if (terms.size() != o.terms.size() || pi_tail.size() != o.pi_tail.size()) return false;
    for (const auto& [k, c] : terms) {
        auto it = o.terms.find(k);
        if (it == o.terms.end() || !(it->second.terms == c.terms)) return false;
    }
    for (const auto& [i, c] : pi_tail) {
        auto it = o.pi_tail.find(i);
        if (it == o.pi_tail.end() || !(it->second.terms == c.terms)) return false;
    }
    return true;
}

// --- pi-adic expansion and valuation ---------------------------------------

PiExpansion annulus_pi_expansion(const AnnulusElem& x, int jmax) {
    PiExpansion e;
    e.coeffs.assign(static_cast<size_t>(jmax) + 1, x.czero());
    e.tail_exact = true;
    bool tail_seen = false;
    Rat tail_bound(0);
    Rat w = Rat(x.p, x.p - 1) / Rat(ipow(x.p, x.level));
    for (const auto& [k, c] : x.terms) {
        long long upper = k >= 0 ? std::min<long long>(k, jmax) : jmax;
        BinomSeq bs(k, x.p, x.prec);
        // j = 0 first
        long long r0 = bs.residue();
        if (r0 != 0) e.coeffs[0] = e.coeffs[0].add(c.scale(r0));
        for (long long j = 1; j <= upper; ++j) {
            bs.advance();
            long long rj = bs.residue();
            if (rj != 0) e.coeffs[static_cast<size_t>(j)] =
                e.coeffs[static_cast<size_t>(j)].add(c.scale(rj));
        }
        if (k < 0 || k > jmax) {
            // dropped orders j > jmax, integral binomials
            Valuation cv = coeff_valuation(c);
            Valuation cf = coeff_precision_floor(c);
            Rat cmin = val_min(cv, cf).infinite ? Rat(0) : std::min(Rat(0), val_min(cv, cf).value);
            Rat bound = Rat(jmax + 1) * w + cmin / x.b;
            if (!tail_seen || bound < tail_bound) { tail_bound = bound; tail_seen = true; }
        }
    }
    if (tail_seen) {
        e.tail_exact = false;
        e.tail_bound = tail_bound;
    }
    return e;
}

Valuation annulus_precision_floor(const AnnulusElem& x) {
    CoeffElem proto = x.czero();
    Valuation f = coeff_precision_floor(proto);
    if (f.infinite) return f;
    return Valuation::of(f.value / x.b, true);
}

Valuation annulus_valuation(const AnnulusElem& x) {
    Rat w = Rat(x.p, x.p - 1) / Rat(ipow(x.p, x.level));
    Valuation floorB = annulus_precision_floor(x);

    if (x.terms.empty() && x.pi_tail.empty()) return Valuation::inf();

    // candidates from the canonical tail
    bool have = false;
    Rat best(0);
    bool best_cert = false;
    for (const auto& [i, c] : x.pi_tail) {
        Valuation cv = coeff_valuation(c);
        if (cv.infinite) continue;
        Rat v = cv.value / x.b - Rat(i) * w;
        if (!have || v < best) { best = v; best_cert = cv.certified; have = true; }
    }

    long long maxpos = 0;
    bool has_neg = false;
    for (const auto& [k, c] : x.terms) {
        if (k > maxpos) maxpos = k;
        if (k < 0) has_neg = true;
    }
    int jmax = static_cast<int>(std::min<long long>(std::max<long long>(maxpos, 16), 512));

    for (;;) {
        PiExpansion e = annulus_pi_expansion(x, jmax);
        bool h = have;
        Rat bst = best;
        bool bc = best_cert;
        for (size_t j = 0; j < e.coeffs.size(); ++j) {
            if (e.coeffs[j].is_zero()) continue;
            Valuation cv = coeff_valuation(e.coeffs[j]);
            if (cv.infinite) continue;
            Rat v = cv.value / x.b + Rat(static_cast<long long>(j)) * w;
            if (!h || v < bst) { bst = v; bc = cv.certified; h = true; }
        }
        Rat bound = floorB.infinite ? Rat(1 << 20) : floorB.value;
        if (!e.tail_exact) bound = std::min(bound, e.tail_bound);
        if (h && bst < bound) {
            bool cert = bc && x.lambda == Rat(1);
            return Valuation::of(bst, cert);
        }
        if (e.tail_exact || jmax >= 512) {
            // nothing visible below the precision floor
            if (!h) return Valuation::of(bound, false);
            return Valuation::of(bst, false);
        }
        jmax *= 2;
        if (!has_neg) jmax = std::min<long long>(jmax, std::max<long long>(maxpos, 16));
    }
}

bool annulus_is_integral(const AnnulusElem& x) {
    Valuation v = annulus_valuation(x);
    return v.infinite || v.value >= Rat(0);
}

// --- exponent folding -------------------------------------------------------

AnnulusElem annulus_fold(const AnnulusElem& x, int M) {
    long long pm = ipow(x.p, M);
    AnnulusElem r = x.like_zero();
    r.pi_tail = x.pi_tail;
    for (const auto& [k, c] : x.terms) {
        long long kk = ((k % pm) + pm) % pm;
        if (kk >= pm / 2) kk -= pm;
        r.add_term(kk, c);
    }
    return r;
}

Rat annulus_fold_floor(const AnnulusElem& x, int M) {
    Rat w = Rat(x.p, x.p - 1) / Rat(ipow(x.p, x.level));
    Rat bare = Rat(ipow(x.p, M)) * w;  // the pi^{p^M} route
    if (x.mode == CoeffMode::mixed) {
        for (int i = 0; i < M; ++i) {
            Rat cand = Rat(M - i) / x.b + Rat(ipow(x.p, i)) * w;
            bare = std::min(bare, cand);
        }
    }
    // folded coefficients scale the error
    Rat cmin(0);
    for (const auto& [k, c] : x.terms) {
        Valuation cv = val_min(coeff_valuation(c), coeff_precision_floor(c));
        if (!cv.infinite) cmin = std::min(cmin, cv.value / x.b);
    }
    return bare + cmin;
}

// --- operator actions -------------------------------------------------------

AnnulusElem annulus_inv_one_plus(const AnnulusElem& s) {
    Valuation vs = annulus_valuation(s);
    if (!vs.infinite && vs.value <= Rat(0))
        throw precision_error("inv_one_plus: series does not converge (v <= 0)");
    Valuation fl = annulus_precision_floor(s);
    Rat target = fl.infinite ? Rat(64) : fl.value;
    AnnulusElem one = AnnulusElem::one(s);
    if (vs.infinite) return one;
    AnnulusElem acc = one;
    AnnulusElem pow = one;
    Rat gained(0);
    int guard = 0;
    while (gained + vs.value < target) {
        pow = pow.mul(s).neg();
        acc = acc.add(pow);
        gained += vs.value;
        if (++guard > 4096) throw precision_error("inv_one_plus: too many terms");
    }
    return acc;
}

namespace {

long long inv_int_mod_ppow(long long a, long long p, int N) {
    long long m = ipow(p, N);
    long long phi = m / p * (p - 1);
    long long r = 1, base = mod_norm(a, m), e = phi - 1;
    while (e > 0) {
        if (e & 1) r = static_cast<long long>((static_cast<__int128>(r) * base) % m);
        base = static_cast<long long>((static_cast<__int128>(base) * base) % m);
        e >>= 1;
    }
    return r;
}

// (1 + x)^{-i} by the binomial series, truncated once the terms fall below
// `target` in valuation. Requires v(x) > 0.
AnnulusElem binom_inv_series(const AnnulusElem& x, long long i, const Rat& target) {
    AnnulusElem one = AnnulusElem::one(x);
    Valuation vx = annulus_valuation(x);
    if (vx.infinite) return one;
    if (vx.value <= Rat(0))
        throw precision_error("ts_inverse: series does not converge at this interval/level");
    AnnulusElem acc = one;
    AnnulusElem xpow = one;
    BinomSeq cb(-i, x.p, x.prec);
    Rat gained(0);
    int guard = 0;
    while (gained + vx.value < target) {
        xpow = xpow.mul(x);
        cb.advance();
        long long r = cb.residue();
        gained += vx.value;
        if (r != 0) acc = acc.add(xpow.scale_int(r));
        if (++guard > 2048) throw precision_error("ts_inverse: too many terms");
    }
    return acc;
}

} // namespace

AnnulusElem annulus_ts_inverse(const AnnulusElem& proto, long long s, long long i) {
    if (s < 1 || i < 1) throw hypothesis_error("ts_inverse: s, i must be >= 1");
    AnnulusElem base = proto.like_zero();
    Rat w = Rat(base.p, base.p - 1) / Rat(ipow(base.p, base.level));
    Valuation fl = annulus_precision_floor(base);
    Rat floor_target = fl.infinite ? Rat(64) : fl.value;

    int e = 0;
    long long sp = s;
    while (sp % base.p == 0) { sp /= base.p; ++e; }
    long long pe = ipow(base.p, e);

    // (A - 1)^{-i} for A = T^{p^e}
    AnnulusElem piA_inv = base.like_zero();
    if (e == 0 || base.mode == CoeffMode::char_p) {
        piA_inv.set_tail(i * pe, base.cconst(1));
    } else {
        // (T^{p^e} - 1)^{-i} = pi^{-i p^e} (1 + eta)^{-i},
        // eta = sum_{0<j<p^e} C(p^e, j) pi^{j - p^e}
        AnnulusElem eta = base.like_zero();
        BinomSeq bs(pe, base.p, base.prec);
        for (long long j = 1; j < pe; ++j) {
            bs.advance();
            long long rj = bs.residue();
            if (rj != 0) eta.add_tail(pe - j, base.cconst(rj));
        }
        AnnulusElem series = binom_inv_series(eta, i, floor_target + Rat(i * pe) * w);
        AnnulusElem t = base.like_zero();
        t.set_tail(i * pe, t.cconst(1));
        piA_inv = t.mul(series);
    }
    if (sp == 1) return piA_inv;

    // (A^{s'} - 1)^{-i} = (A - 1)^{-i} (D/s')^{-i} s'^{-i},
    // D = 1 + A + ... + A^{s'-1}, E = D/s' - 1 has ell = 0.
    AnnulusElem D = base.like_zero();
    for (long long l = 0; l < sp; ++l) D.add_term(l * pe, base.cconst(1));
    long long sinv = inv_int_mod_ppow(sp, base.p, base.prec);
    AnnulusElem E = D.scale_int(sinv).sub(AnnulusElem::one(base));
    AnnulusElem series = binom_inv_series(E, i, floor_target + Rat(i * pe) * w);
    long long scale = 1;
    long long m = ipow(base.p, base.prec);
    for (long long l = 0; l < i; ++l)
        scale = static_cast<long long>((static_cast<__int128>(scale) * sinv) % m);
    return piA_inv.mul(series).scale_int(scale);
}

AnnulusElem phi(const AnnulusElem& x) {
    AnnulusElem r = x.like_zero();
    r.b = x.b / Rat(x.p);
    r.w_lo = std::max(-kExpInf, x.w_lo * x.p);
    r.w_hi = std::min(kExpInf, x.w_hi * x.p);
    for (const auto& [k, c] : x.terms) r.set(k * x.p, c);
    for (const auto& [i, c] : x.pi_tail) {
        AnnulusElem inv = annulus_ts_inverse(r, x.p, i);
        r = r.add(inv.scale(c));
    }
    return r;
}

std::vector<AnnulusElem> decompose_phi_basis(const AnnulusElem& x) {
    std::vector<AnnulusElem> parts;
    AnnulusElem proto = x.like_zero();
    for (long long j = 0; j < x.p; ++j) parts.push_back(proto);
    for (const auto& [k, c] : x.terms) {
        long long j = ((k % x.p) + x.p) % x.p;
        long long q = (k - j) / x.p;
        parts[static_cast<size_t>(j)].add_term(q, c);
    }
    if (!x.pi_tail.empty()) {
        // tail(i) = tail(i p) * S^i with S = 1 + T + ... + T^{p-1};
        // a_j(tail) = tail(i) * a_j(S^i).
        AnnulusElem S = proto;
        for (long long l = 0; l < x.p; ++l) S.add_term(l, proto.cconst(1));
        for (const auto& [i, c] : x.pi_tail) {
            AnnulusElem Si = AnnulusElem::one(proto);
            for (long long l = 0; l < i; ++l) Si = Si.mul(S);
            if (!Si.tail_free()) throw error("decompose: unexpected tail");
            std::vector<AnnulusElem> sparts = decompose_phi_basis(Si);
            AnnulusElem ti = proto;
            ti.set_tail(i, c);
            for (long long j = 0; j < x.p; ++j)
                parts[static_cast<size_t>(j)] =
                    parts[static_cast<size_t>(j)].add(ti.mul(sparts[static_cast<size_t>(j)]));
        }
    }
    return parts;
}

AnnulusElem psi(const AnnulusElem& x) {
    std::vector<AnnulusElem> parts = decompose_phi_basis(x);
    AnnulusElem r = parts[0];
    Rat top = annulus_top_b(x.p, x.lambda);
    Rat nb = x.b * Rat(x.p);
    if (nb > top) { nb = top; r.interval_clamped = true; }
    r.b = nb;
    return r;
}

AnnulusElem gamma_act(const AnnulusElem& x, const PadicScalar& c) {
    if (c.p != x.p) throw incompatible_error("gamma: prime mismatch");
    if (!c.is_unit()) throw hypothesis_error("gamma: c must be a unit");
    long long c0 = c.residue;
    AnnulusElem r = x.like_zero();
    for (const auto& [k, cf] : x.terms) r.set(k * c0, cf);
    for (const auto& [i, cf] : x.pi_tail) {
        // gamma(pi)^{-i} = (T^{c0} - 1)^{-i}
        AnnulusElem inv = annulus_ts_inverse(r, c0, i);
        r = r.add(inv.scale(cf));
    }
    return r;
}

AnnulusElem raise_level(const AnnulusElem& x, int new_level) {
    if (new_level < x.level) throw hypothesis_error("raise_level: new level below current");
    if (new_level == x.level) return x;
    long long f = ipow(x.p, new_level - x.level);
    AnnulusElem r = x.like_zero();
    r.level = new_level;
    r.w_lo = std::max(-kExpInf, x.w_lo * f);
    r.w_hi = std::min(kExpInf, x.w_hi * f);
    for (const auto& [k, c] : x.terms) r.set(k * f, c);
    for (const auto& [i, c] : x.pi_tail) {
        AnnulusElem inv = annulus_ts_inverse(r, f, i);
        r = r.add(inv.scale(c));
    }
    return r;
}

} // namespace perk
