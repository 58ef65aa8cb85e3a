#include "perk/tatesen.hpp"

#include <algorithm>

namespace perk {

namespace {

// Lower a level-m element whose Laurent exponents are divisible by p^{m-n}
// (and, in char-p mode, whose tail indices are too) to level n.
AnnulusElem lower_level_exact(const AnnulusElem& x, int n) {
    int m = x.level;
    if (n == m) return x;
    long long f = ipow(x.p, m - n);
    AnnulusElem r = x.like_zero();
    r.level = n;
    r.w_lo = x.w_lo / f - 1;
    r.w_hi = x.w_hi / f + 1;
    for (const auto& [k, c] : x.terms) {
        if (k % f != 0) throw hypothesis_error("lower_level: exponent not divisible");
        r.set(k / f, c);
    }
    for (const auto& [i, c] : x.pi_tail) {
        if (x.mode != CoeffMode::char_p || i % f != 0)
            throw hypothesis_error("lower_level: tail not lowerable");
        r.set_tail(i / f, c);
    }
    return r;
}

} // namespace

TraceSplit normalized_trace(const AnnulusElem& x, int n) {
    if (n < 0) throw hypothesis_error("normalized_trace: n >= 0 required");
    int m = x.level;
    TraceSplit out;
    out.input = x;
    out.n = n;
    if (n >= m) {
        out.trace_part = x;
        out.kernel_part = x.like_zero();
        return out;
    }
    long long f = ipow(x.p, m - n);
    AnnulusElem tr = x.like_zero();
    for (const auto& [k, c] : x.terms)
        if (k % f == 0) tr.set(k, c);

    // tails: pi_m^{-i} with i = i' p^{e'}; the whole term is level-n content
    // when e' >= m - n, otherwise split R(pi_{m'}^{-i'}) =
    // (T^{p^{m-n}} - 1)^{-i'} * R(S^{i'}), S = sum_{l < p^{m'-n}} T_m^{l p^{e'}}.
    for (const auto& [i, c] : x.pi_tail) {
        long long ii = i;
        int ep = 0;
        while (ii % x.p == 0) { ii /= x.p; ++ep; }
        if (ep >= m - n) {
            tr.add_tail(i, c);
            continue;
        }
        AnnulusElem S = x.like_zero();
        long long step = ipow(x.p, ep);
        long long count = ipow(x.p, (m - n) - ep);
        for (long long l = 0; l < count; ++l) S.add_term(l * step, S.cconst(1));
        AnnulusElem Spow = AnnulusElem::one(S);
        for (long long l = 0; l < ii; ++l) Spow = Spow.mul(S);
        AnnulusElem Sfilt = S.like_zero();
        for (const auto& [k, sc] : Spow.terms)
            if (k % f == 0) Sfilt.set(k, sc);
        if (!Sfilt.is_zero()) {
            AnnulusElem deep = annulus_ts_inverse(x, f, ii);
            tr = tr.add(deep.mul(Sfilt).scale(c));
        }
    }

    out.kernel_part = x.sub(tr);
    bool lowerable = tr.pi_tail.empty() || x.mode == CoeffMode::char_p;
    if (lowerable) {
        bool div_ok = true;
        for (const auto& [i, c] : tr.pi_tail) {
            (void)c;
            if (i % f != 0) div_ok = false;
        }
        lowerable = div_ok;
    }
    out.trace_part = lowerable ? lower_level_exact(tr, n) : tr;
    return out;
}

std::vector<AnnulusElem> phi_basis_depth(const AnnulusElem& x, int n) {
    if (n < 0) throw hypothesis_error("phi_basis_depth: n >= 0");
    if (n == 0) return {x};
    std::vector<AnnulusElem> first = decompose_phi_basis(x);
    if (n == 1) return first;
    long long p = x.p;
    std::vector<AnnulusElem> out(static_cast<size_t>(ipow(p, n)), x.like_zero());
    for (long long i = 0; i < p; ++i) {
        std::vector<AnnulusElem> sub = phi_basis_depth(first[static_cast<size_t>(i)], n - 1);
        for (long long ip = 0; ip < ipow(p, n - 1); ++ip)
            out[static_cast<size_t>(i + p * ip)] = sub[static_cast<size_t>(ip)];
    }
    return out;
}

TSReport trace_valuation_audit(const std::vector<AnnulusElem>& samples, int n) {
    TSReport rep;
    rep.axiom = "TS2";
    rep.pass = true;
    bool have = false;
    for (const auto& x : samples) {
        TraceSplit s = normalized_trace(x, n);
        Valuation vx = annulus_valuation(x);
        // measure the trace at the input level so both sides share a metric
        AnnulusElem tr = s.trace_part.level == x.level ? s.trace_part
                                                       : raise_level(s.trace_part, x.level);
        Valuation vt = annulus_valuation(tr);
        if (x.level <= n) {
            // section: R fixes the element exactly
            if (!s.kernel_part.is_zero()) {
                rep.pass = false;
                rep.notes.push_back("section property failed");
            }
            continue;
        }
        Rat gap;
        if (vt.infinite && vx.infinite) gap = Rat(0);
        else if (vt.infinite) gap = Rat(0);  // whole element removed: no TS2 content
        else if (vx.infinite) { rep.gap_finite = true; gap = Rat(0); }
        else gap = vx.value - vt.value;
        if (gap < Rat(0)) gap = Rat(0);
        if (!have) { rep.gap_min = rep.gap_max = gap; have = true; }
        else {
            rep.gap_min = std::min(rep.gap_min, gap);
            rep.gap_max = std::max(rep.gap_max, gap);
        }
    }
    rep.c2 = have ? rep.gap_max : Rat(0);
    if (rep.c2 == Rat(0)) rep.c2 = Rat(1, 1024);  // TS2 wants c2 > 0
    rep.notes.push_back("smallest admissible c2 on this sample set");
    return rep;
}

TSReport ts1_witness(const Rat& c1) {
    TSReport rep;
    rep.axiom = "TS1";
    rep.c1 = c1;
    if (c1 <= Rat(0)) {
        rep.pass = false;
        rep.notes.push_back("rejected: the axiom requires c1 > 0");
        return rep;
    }
    // K = Q_p desk model: H acts trivially, the witness is 1 with v = 0 > -c1.
    rep.pass = true;
    rep.gap_min = rep.gap_max = Rat(0);
    rep.notes.push_back("witness 1 (v = 0); nontrivial L/K witnesses out of scope");
    return rep;
}

namespace {

// h / (T^s - 1) as exact quotient plus ts_inverse times the remainder.
AnnulusElem div_ts(const AnnulusElem& h, long long s) {
    AnnulusElem Q = h.like_zero();
    AnnulusElem rho = h.like_zero();
    for (const auto& [k, c] : h.terms) {
        long long q = k >= 0 ? k / s : -((-k + s - 1) / s);
        long long rem = k - s * q;
        if (q > 0) {
            for (long long i = 0; i < q; ++i) Q.add_term(rem + s * i, c);
        } else if (q < 0) {
            for (long long i = 1; i <= -q; ++i) {
                CoeffElem nc = c.neg();
                Q.add_term(rem - s * i, nc);
            }
        }
        rho.add_term(rem, c);
    }
    AnnulusElem rest = h.like_zero();
    rest.pi_tail = h.pi_tail;
    rest = rest.add(rho);
    if (!rest.is_zero()) {
        AnnulusElem inv = annulus_ts_inverse(h, s, 1);
        Q = Q.add(inv.mul(rest));
    }
    return Q;
}

int fold_exponent_for(const AnnulusElem& proto, const Rat& target) {
    for (int M = 2; M <= 24; ++M) {
        if (annulus_fold_floor(proto, M) >= target + Rat(2)) return M;
    }
    return 24;
}

} // namespace

InvertReport gamma_minus_one_invert_psi0(const AnnulusElem& x, const PadicScalar& c) {
    if (c.p != x.p) throw incompatible_error("invert: prime mismatch");
    if (!c.is_unit() || c.residue == 1)
        throw hypothesis_error("invert: c must be a unit with c != 1");
    long long c0 = c.residue;
    int ng = padic_val(c0 - 1, x.p);
    // Lemma gate, non-strict (the boundary case is covered by the
    // coefficient-divisibility route; contraction is measured below).
    if (Rat(ipow(x.p, ng)) < Rat(2 * x.p, x.p - 1))
        throw hypothesis_error("invert: p^{n(gamma)} >= 2p/(p-1) violated");

    Valuation fl = annulus_precision_floor(x);
    Rat bound = fl.infinite ? Rat(64) : fl.value;
    InvertReport rep;
    rep.residual_bound = bound;

    long long pn = ipow(x.p, ng);
    AnnulusElem y = x.like_zero();
    AnnulusElem r = x;
    Valuation vx = annulus_valuation(x);
    int M = fold_exponent_for(x, bound - std::min(Rat(0), vx.infinite ? Rat(0) : vx.value));

    for (int round = 0; round < 40; ++round) {
        Valuation vr = annulus_valuation(r);
        rep.residual_log.push_back(vr.infinite ? bound : vr.value);
        rep.iterations = round;
        if (vr.ge(bound)) break;
        if (round == 39)
            throw precision_error("invert: series failed to contract; last residual " +
                                  to_string(vr));
        std::vector<AnnulusElem> classes = phi_basis_depth(r, ng);
        // psi(x) = 0: every p-divisible class must sit below precision
        if (round == 0) {
            for (long long j = 0; j < pn; j += x.p) {
                Valuation v0 = annulus_valuation(classes[static_cast<size_t>(j)]);
                if (!v0.ge(bound))
                    throw hypothesis_error("invert: psi(x) != 0 (class " + std::to_string(j) +
                                           " content " + to_string(v0) + ")");
            }
        }
        AnnulusElem step = x.like_zero();
        for (long long j = 1; j < pn; ++j) {
            if (j % x.p == 0) continue;
            const AnnulusElem& z = classes[static_cast<size_t>(j)];
            if (z.is_zero()) continue;
            long long s = j * ((c0 - 1) / pn);
            AnnulusElem w = div_ts(z, s);
            // y-piece: T^j phi^n(w)
            AnnulusElem piece = w;
            for (int t = 0; t < ng; ++t) piece = phi(piece);
            piece.b = x.b;  // the cocycle lives at the stored interval
            piece = piece.mul(AnnulusElem::monomial(x, j, 1));
            step = step.add(piece);
        }
        if (step.is_zero())
            throw precision_error("invert: residual has no invertible content");
        y = annulus_fold(y.add(step), M);
        AnnulusElem gy = gamma_act(y, c);
        r = x.sub(gy.sub(y));
        r = annulus_fold(r, M);
    }
    rep.y = y;
    Valuation vy = annulus_valuation(y);
    if (!vx.infinite && !vy.infinite) {
        rep.drop = vx.value - vy.value;
        rep.drop_finite = true;
    }
    AnnulusElem gy = gamma_act(y, c);
    rep.residual = annulus_valuation(annulus_fold(x.sub(gy.sub(y)), M));
    return rep;
}

InvertReport gamma_minus_one_invert_kernel(const TraceSplit& split, const PadicScalar& c) {
    const AnnulusElem& x0 = split.kernel_part;
    int m = x0.level;
    int n = split.n;
    if (c.p != x0.p) throw incompatible_error("invert_kernel: prime mismatch");
    if (!c.is_unit() || c.residue == 1)
        throw hypothesis_error("invert_kernel: c must be a unit with c != 1");
    int ng = padic_val(c.residue - 1, c.p);
    if (ng > n) throw hypothesis_error("invert_kernel: n(gamma) <= n required (TS3 side condition)");

    InvertReport rep;
    Valuation fl = annulus_precision_floor(x0);
    Rat bound = fl.infinite ? Rat(64) : fl.value;
    rep.residual_bound = bound;

    AnnulusElem y = x0.like_zero();
    AnnulusElem cur = x0;
    // finite telescoping: peel the deepest slice at each level j = m..n+1
    for (int j = m; j > n; --j) {
        TraceSplit sj = normalized_trace(cur, j - 1);
        AnnulusElem slice = sj.kernel_part;  // (R_j - R_{j-1}) content
        if (!slice.is_zero()) {
            AnnulusElem zl = j < m ? lower_level_exact(slice, j) : slice;
            InvertReport sub = gamma_minus_one_invert_psi0(zl, c);
            rep.residual_log.push_back(sub.residual.infinite ? bound : sub.residual.value);
            AnnulusElem yj = sub.y;
            if (j < m) yj = raise_level(yj, m);
            y = y.add(yj);
        }
        cur = sj.trace_part.level == m ? sj.trace_part : raise_level(sj.trace_part, m);
    }
    rep.y = y;
    Valuation vx = annulus_valuation(x0), vy = annulus_valuation(y);
    if (!vx.infinite && !vy.infinite) {
        rep.drop = vx.value - vy.value;
        rep.drop_finite = true;
    }
    AnnulusElem gy = gamma_act(y, c);
    rep.residual = annulus_valuation(x0.sub(gy.sub(y)));
    rep.iterations = m - n;
    return rep;
}

// --- matrices ----------------------------------------------------------------

Mat mat_identity(const AnnulusElem& proto, int d) {
    Mat r(static_cast<size_t>(d), std::vector<AnnulusElem>(static_cast<size_t>(d), proto.like_zero()));
    for (int i = 0; i < d; ++i) r[static_cast<size_t>(i)][static_cast<size_t>(i)] = AnnulusElem::one(proto);
    return r;
}

Mat mat_mul(const Mat& a, const Mat& b) {
    size_t d = a.size();
    Mat r(d, std::vector<AnnulusElem>(d));
    for (size_t i = 0; i < d; ++i)
        for (size_t j = 0; j < d; ++j) {
            AnnulusElem acc = a[i][0].mul(b[0][j]);
            for (size_t l = 1; l < d; ++l) acc = acc.add(a[i][l].mul(b[l][j]));
            r[i][j] = acc;
        }
    return r;
}

Mat mat_add(const Mat& a, const Mat& b) {
    Mat r = a;
    for (size_t i = 0; i < a.size(); ++i)
        for (size_t j = 0; j < a.size(); ++j) r[i][j] = a[i][j].add(b[i][j]);
    return r;
}

Mat mat_sub(const Mat& a, const Mat& b) {
    Mat r = a;
    for (size_t i = 0; i < a.size(); ++i)
        for (size_t j = 0; j < a.size(); ++j) r[i][j] = a[i][j].sub(b[i][j]);
    return r;
}

Mat mat_gamma(const Mat& a, const PadicScalar& c) {
    Mat r = a;
    for (auto& row : r)
        for (auto& e : row) e = gamma_act(e, c);
    return r;
}

Mat mat_fold(const Mat& a, int M) {
    Mat r = a;
    for (auto& row : r)
        for (auto& e : row) e = annulus_fold(e, M);
    return r;
}

Valuation mat_valuation(const Mat& a) {
    Valuation v = Valuation::inf();
    for (const auto& row : a)
        for (const auto& e : row) v = val_min(v, annulus_valuation(e));
    return v;
}

Mat mat_inv_one_plus(const Mat& c) {
    Valuation vc = mat_valuation(c);
    const AnnulusElem& proto = c[0][0];
    Mat id = mat_identity(proto, static_cast<int>(c.size()));
    if (vc.infinite) return id;
    if (vc.value <= Rat(0)) throw precision_error("mat_inv_one_plus: v(C) <= 0");
    Valuation fl = annulus_precision_floor(proto);
    Rat target = fl.infinite ? Rat(64) : fl.value;
    Mat acc = id;
    Mat pw = id;
    Rat gained(0);
    int guard = 0;
    while (gained + vc.value < target) {
        pw = mat_mul(pw, c);
        for (auto& row : pw)
            for (auto& e : row) e = e.neg();
        acc = mat_add(acc, pw);
        gained += vc.value;
        if (++guard > 512) throw precision_error("mat_inv_one_plus: too many terms");
    }
    return acc;
}

DescentResult descend_cocycle(const DescentJob& job) {
    DescentResult res;
    AnnulusElem proto(job.p, job.lambda, CoeffMode::char_p, 1, job.u_lo, job.u_hi,
                      job.level, job.b, -64, 64);
    if (job.gamma_mat.size() != static_cast<size_t>(job.d))
        throw hypothesis_error("descend: gamma matrix has wrong dimension");

    // desk constants: c1 pinned tiny, c3 just above p/(p-1), c2 measured below
    res.c1 = Rat(1, 8);
    res.c3 = Rat(job.p, job.p - 1) + Rat(1, 8);
    Rat vu = Rat(1) / (job.lambda * job.b);  // v(u)
    res.threshold = Rat(job.k) * vu;

    Mat V = job.gamma_mat;
    Mat B = mat_identity(proto, job.d);

    // measure c2 on the run's own data
    {
        std::vector<AnnulusElem> samples;
        for (const auto& row : V)
            for (const auto& e : row)
                if (!e.is_zero()) samples.push_back(e);
        if (!samples.empty()) {
            TSReport audit = trace_valuation_audit(samples, job.n);
            res.c2 = audit.c2;
        }
    }

    Valuation fl = annulus_precision_floor(proto);
    Rat stop = fl.infinite ? res.threshold : std::min(fl.value, res.threshold * Rat(4));
    int M = fold_exponent_for(proto, stop);

    Mat id = mat_identity(proto, job.d);
    {
        // hypothesis: cocycle trivial modulo u^k
        Valuation dev = mat_valuation(mat_sub(V, id));
        if (!dev.ge(res.threshold))
            throw hypothesis_error("descend: cocycle is not trivial modulo u^k (v = " +
                                   to_string(dev) + " < " + to_string(res.threshold) + ")");
    }

    Rat last_corr(0);
    bool have_last = false;
    for (int round = 1; round <= job.rounds_max; ++round) {
        // split the deviation from the identity
        Mat E = mat_sub(V, id);
        Mat X(static_cast<size_t>(job.d), std::vector<AnnulusElem>(static_cast<size_t>(job.d), proto.like_zero()));
        bool xzero = true;
        for (int i = 0; i < job.d; ++i)
            for (int j = 0; j < job.d; ++j) {
                TraceSplit s = normalized_trace(E[static_cast<size_t>(i)][static_cast<size_t>(j)], job.n);
                X[static_cast<size_t>(i)][static_cast<size_t>(j)] = s.kernel_part;
                xzero = xzero && s.kernel_part.is_zero();
            }
        Valuation vX = mat_valuation(X);
        DescentRound lg;
        lg.round = round;
        lg.kernel_finite = !vX.infinite;
        lg.kernel_val = vX.infinite ? stop : vX.value;
        lg.constant_gate = res.threshold > res.c1 + Rat(2) * res.c2 + Rat(2) * res.c3;
        if (xzero || vX.ge(stop)) {
            res.log.push_back(lg);
            res.ok = true;
            break;
        }

        // corrective step: (gamma - 1) C = -X
        Mat C(static_cast<size_t>(job.d), std::vector<AnnulusElem>(static_cast<size_t>(job.d), proto.like_zero()));
        for (int i = 0; i < job.d; ++i)
            for (int j = 0; j < job.d; ++j) {
                const AnnulusElem& xe = X[static_cast<size_t>(i)][static_cast<size_t>(j)];
                if (xe.is_zero()) continue;
                TraceSplit sp;
                sp.input = xe;
                sp.kernel_part = xe;
                sp.trace_part = xe.like_zero();
                sp.n = job.n;
                InvertReport inv = gamma_minus_one_invert_kernel(sp, job.chi);
                C[static_cast<size_t>(i)][static_cast<size_t>(j)] = inv.y.neg();
            }
        Valuation vC = mat_valuation(C);
        lg.corr_finite = !vC.infinite;
        lg.corr_val = vC.infinite ? stop : vC.value;
        res.log.push_back(lg);
        if (have_last && !vC.infinite && vC.value <= last_corr) {
            res.diagnostic = "non-contraction: correction valuations stalled at " + to_string(vC);
            return res;
        }
        if (!vC.infinite) { last_corr = vC.value; have_last = true; }

        Mat oneC = mat_add(id, C);
        V = mat_mul(mat_inv_one_plus(C), mat_mul(V, mat_gamma(oneC, job.chi)));
        V = mat_fold(V, M);
        B = mat_fold(mat_mul(B, oneC), M);
        if (round == job.rounds_max) {
            res.diagnostic = "round cap reached before the kernel part cleared the threshold";
            return res;
        }
    }

    res.B = B;
    res.descended_gamma = V;
    if (job.frob_mat) {
        // transport: F -> B^{-1} F phi(B)
        Mat Bi = mat_inv_one_plus(mat_sub(B, id));
        Mat Fp = *job.frob_mat;
        Mat phB = B;
        for (auto& row : phB)
            for (auto& e : row) {
                e = phi(e);
                e.b = proto.b;  // transported entries stay at the working interval
            }
        res.descended_frob = mat_fold(mat_mul(Bi, mat_mul(Fp, phB)), M);
    }
    res.ok = res.ok && res.diagnostic.empty();
    return res;
}

} // namespace perk
