#include "perk/fq.hpp"
#include "perk/errors.hpp"
#include "perk/rat.hpp"

#include <algorithm>

namespace perk {

namespace {

// Dense polynomial arithmetic over F_p, little-endian coefficients.
using Poly = std::vector<int>;

void ptrim(Poly& a) {
    while (!a.empty() && a.back() == 0) a.pop_back();
}

Poly pmul(const Poly& a, const Poly& b, long long p) {
    if (a.empty() || b.empty()) return {};
    Poly r(a.size() + b.size() - 1, 0);
    for (size_t i = 0; i < a.size(); ++i)
        for (size_t j = 0; j < b.size(); ++j)
            r[i + j] = static_cast<int>((r[i + j] + 1LL * a[i] * b[j]) % p);
    ptrim(r);
    return r;
}

int inv_mod_p(long long a, long long p) {
    long long r = 1, b = a % p, e = p - 2;
    while (e > 0) {
        if (e & 1) r = r * b % p;
        b = b * b % p;
        e >>= 1;
    }
    return static_cast<int>(r);
}

// a mod m, m monic of degree >= 1.
Poly pmod(Poly a, const Poly& m, long long p) {
    ptrim(a);
    int dm = static_cast<int>(m.size()) - 1;
    while (static_cast<int>(a.size()) - 1 >= dm) {
        int da = static_cast<int>(a.size()) - 1;
        int lead = a[da];
        for (int i = 0; i <= dm; ++i) {
            long long v = a[da - dm + i] - 1LL * lead * m[i];
            a[da - dm + i] = static_cast<int>(((v % p) + p) % p);
        }
        ptrim(a);
        if (a.empty()) break;
    }
    return a;
}

Poly pgcd(Poly a, Poly b, long long p) {
    ptrim(a); ptrim(b);
    while (!b.empty()) {
        // make b monic for pmod
        Poly bm = b;
        int li = inv_mod_p(bm.back(), p);
        for (auto& c : bm) c = static_cast<int>(1LL * c * li % p);
        Poly r = pmod(a, bm, p);
        a = b; b = r;
    }
    return a;
}

bool poly_irreducible(const Poly& m, long long p) {
    // m monic of degree f; irreducible iff x^{p^f} = x mod m and
    // gcd(x^{p^{f/l}} - x, m) = 1 for prime divisors l of f.
    int f = static_cast<int>(m.size()) - 1;
    auto xpow = [&](int k) {
        // x^{p^k} mod m by repeated p-th powering
        Poly r = {0, 1};
        for (int i = 0; i < k; ++i) {
            // r <- r^p mod m
            Poly acc = {1};
            Poly base = r;
            long long e = p;
            while (e > 0) {
                if (e & 1) acc = pmod(pmul(acc, base, p), m, p);
                base = pmod(pmul(base, base, p), m, p);
                e >>= 1;
            }
            r = acc;
        }
        return r;
    };
    Poly xqf = xpow(f);
    Poly x = {0, 1};
    Poly diff = xqf;
    diff.resize(std::max(diff.size(), x.size()), 0);
    for (size_t i = 0; i < x.size(); ++i)
        diff[i] = static_cast<int>(((diff[i] - x[i]) % p + p) % p);
    ptrim(diff);
    if (!diff.empty()) return false;
    for (int l = 2; l <= f; ++l) {
        if (f % l != 0) continue;
        bool isprime = true;
        for (int d = 2; d * d <= l; ++d) if (l % d == 0) isprime = false;
        if (!isprime) continue;
        Poly xq = xpow(f / l);
        Poly d2 = xq;
        d2.resize(std::max(d2.size(), x.size()), 0);
        for (size_t i = 0; i < x.size(); ++i)
            d2[i] = static_cast<int>(((d2[i] - x[i]) % p + p) % p);
        ptrim(d2);
        Poly g = pgcd(m, d2, p);
        if (static_cast<int>(g.size()) - 1 >= 1) return false;
    }
    return true;
}

} // namespace

FqCtx::FqCtx(long long p_, int f_) : p(p_), f(f_) {
    if (p < 2) throw hypothesis_error("FqCtx: p must be prime >= 2");
    for (long long d = 2; d * d <= p; ++d)
        if (p % d == 0) throw hypothesis_error("FqCtx: p not prime");
    if (f < 1 || f > 6) throw hypothesis_error("FqCtx: f out of supported range [1,6]");
    if (ipow(p, f) > (1LL << 40)) throw hypothesis_error("FqCtx: field too large");
    find_modulus();
}

void FqCtx::find_modulus() {
    mod_poly_.assign(f, 0);
    if (f == 1) return;
    // enumerate monic degree-f polynomials by low coefficients
    long long total = ipow(p, f);
    for (long long code = 0; code < total; ++code) {
        Poly m(f + 1, 0);
        long long c = code;
        for (int i = 0; i < f; ++i) { m[i] = static_cast<int>(c % p); c /= p; }
        m[f] = 1;
        if (poly_irreducible(m, p)) {
            for (int i = 0; i < f; ++i) mod_poly_[i] = m[i];
            return;
        }
    }
    throw error("FqCtx: no irreducible found");
}

long long FqCtx::q() const { return ipow(p, f); }

std::vector<int> FqCtx::digits(Fq a) const {
    std::vector<int> d(f, 0);
    for (int i = 0; i < f; ++i) { d[i] = static_cast<int>(a % p); a /= p; }
    return d;
}

Fq FqCtx::from_digits(const std::vector<int>& d) const {
    Fq a = 0;
    for (int i = f - 1; i >= 0; --i) a = a * p + (d[i] % p + p) % p;
    return a;
}

Fq FqCtx::from_int(long long v) const {
    long long r = v % p;
    if (r < 0) r += p;
    return static_cast<Fq>(r);
}

long long FqCtx::to_int(Fq a) const { return static_cast<long long>(a); }

Fq FqCtx::add(Fq a, Fq b) const {
    auto da = digits(a), db = digits(b);
    for (int i = 0; i < f; ++i) da[i] = static_cast<int>((da[i] + db[i]) % p);
    return from_digits(da);
}

Fq FqCtx::sub(Fq a, Fq b) const { return add(a, neg(b)); }

Fq FqCtx::neg(Fq a) const {
    auto d = digits(a);
    for (auto& c : d) c = static_cast<int>((p - c) % p);
    return from_digits(d);
}

Fq FqCtx::mul(Fq a, Fq b) const {
    if (f == 1) return static_cast<Fq>(1ULL * a * b % p);
    auto da = digits(a), db = digits(b);
    Poly prod = pmul(Poly(da.begin(), da.end()), Poly(db.begin(), db.end()), p);
    Poly m(f + 1, 0);
    for (int i = 0; i < f; ++i) m[i] = mod_poly_[i];
    m[f] = 1;
    Poly r = pmod(prod, m, p);
    r.resize(f, 0);
    return from_digits(std::vector<int>(r.begin(), r.end()));
}

Fq FqCtx::pow(Fq a, unsigned long long e) const {
    Fq r = from_int(1), b = a;
    while (e > 0) {
        if (e & 1ULL) r = mul(r, b);
        b = mul(b, b);
        e >>= 1;
    }
    return r;
}

Fq FqCtx::inv(Fq a) const {
    if (a == 0) throw hypothesis_error("Fq inverse of zero");
    return pow(a, static_cast<unsigned long long>(q() - 2));
}

Fq FqCtx::proot(Fq a) const {
    // Frobenius is bijective; inverse is the (f-1)-fold Frobenius.
    Fq r = a;
    for (int i = 0; i < f - 1; ++i) r = frobenius(r);
    return r;
}

bool FqCtx::artin_schreier_residue(Fq c, Fq b, Fq& y) const {
    // y^p - c y is F_p-linear in y; solve on the digit basis.
    std::vector<std::vector<int>> M(f, std::vector<int>(f + 1, 0));
    for (int j = 0; j < f; ++j) {
        std::vector<int> e(f, 0);
        e[j] = 1;
        Fq bj = from_digits(e);
        Fq img = sub(pow(bj, static_cast<unsigned long long>(p)), mul(c, bj));
        auto d = digits(img);
        for (int i = 0; i < f; ++i) M[i][j] = d[i];
    }
    auto db = digits(b);
    for (int i = 0; i < f; ++i) M[i][f] = db[i];
    // Gaussian elimination over F_p
    std::vector<int> pivot_col(f, -1);
    int row = 0;
    for (int col = 0; col < f && row < f; ++col) {
        int sel = -1;
        for (int r = row; r < f; ++r) if (M[r][col] != 0) { sel = r; break; }
        if (sel < 0) continue;
        std::swap(M[sel], M[row]);
        int li = inv_mod_p(M[row][col], p);
        for (int k = col; k <= f; ++k) M[row][k] = static_cast<int>(1LL * M[row][k] * li % p);
        for (int r = 0; r < f; ++r) {
            if (r == row || M[r][col] == 0) continue;
            int fac = M[r][col];
            for (int k = col; k <= f; ++k)
                M[r][k] = static_cast<int>(((M[r][k] - 1LL * fac * M[row][k]) % p + p) % p);
        }
        pivot_col[row] = col;
        ++row;
    }
    for (int r = row; r < f; ++r)
        if (M[r][f] != 0) return false;
    std::vector<int> sol(f, 0);
    for (int r = 0; r < row; ++r) sol[pivot_col[r]] = M[r][f];
    y = from_digits(sol);
    return true;
}

int FqCtx::artin_schreier_extension_degree(Fq c, Fq b) const {
    // Minimal degree of an irreducible factor of P(Y) = Y^p - cY - b over F_q,
    // via gcd(Y^{q^d} - Y, P).
    long long pp = p;
    std::vector<Fq> P(static_cast<size_t>(pp) + 1, 0);
    P[0] = neg(b);
    P[1] = neg(c);
    P[static_cast<size_t>(pp)] = from_int(1);

    auto polymulmod = [&](const std::vector<Fq>& a, const std::vector<Fq>& bb) {
        std::vector<Fq> r(a.size() + bb.size() - 1, 0);
        for (size_t i = 0; i < a.size(); ++i)
            for (size_t j = 0; j < bb.size(); ++j)
                r[i + j] = add(r[i + j], mul(a[i], bb[j]));
        // reduce by monic P
        while (r.size() > static_cast<size_t>(pp)) {
            size_t d = r.size() - 1;
            Fq lead = r[d];
            if (lead != 0)
                for (size_t i = 0; i <= static_cast<size_t>(pp); ++i)
                    r[d - pp + i] = sub(r[d - pp + i], mul(lead, P[i]));
            r.pop_back();
            while (!r.empty() && r.back() == 0) r.pop_back();
            if (r.empty()) { r = {0}; break; }
        }
        return r;
    };

    std::vector<Fq> ypow = {0, from_int(1)};  // Y
    for (int d = 1; d <= static_cast<int>(pp); ++d) {
        // ypow <- ypow^q mod P
        std::vector<Fq> acc = {from_int(1)};
        std::vector<Fq> base = ypow;
        long long e = q();
        while (e > 0) {
            if (e & 1) acc = polymulmod(acc, base);
            base = polymulmod(base, base);
            e >>= 1;
        }
        ypow = acc;
        // gcd(ypow - Y, P) nontrivial?
        std::vector<Fq> diff = ypow;
        if (diff.size() < 2) diff.resize(2, 0);
        diff[1] = sub(diff[1], from_int(1));
        while (!diff.empty() && diff.back() == 0) diff.pop_back();
        if (diff.empty()) return d;  // Y^{q^d} = Y: all roots in degree d
        // polynomial gcd over F_q
        std::vector<Fq> A = P, B = diff;
        auto trim = [](std::vector<Fq>& v) { while (!v.empty() && v.back() == 0) v.pop_back(); };
        trim(A); trim(B);
        while (!B.empty()) {
            // A mod B (B made monic)
            Fq li = inv(B.back());
            std::vector<Fq> Bm = B;
            for (auto& x : Bm) x = mul(x, li);
            while (A.size() >= Bm.size() && !A.empty()) {
                Fq lead = A.back();
                size_t off = A.size() - Bm.size();
                if (lead != 0)
                    for (size_t i = 0; i < Bm.size(); ++i)
                        A[off + i] = sub(A[off + i], mul(lead, Bm[i]));
                A.pop_back();
                trim(A);
                if (A.empty()) break;
            }
            std::swap(A, B);
        }
        if (A.size() >= 2) return d;
    }
    return static_cast<int>(pp);
}

} // namespace perk
