#ifndef PERK_FQ_HPP
#define PERK_FQ_HPP

#include <cstdint>
#include <vector>

namespace perk {

// Element of F_{p^f}, packed base-p digits (coefficient of x^i in digit i).
using Fq = std::uint64_t;

// Arithmetic context for F_{p^f}. The modulus is the lexicographically
// smallest monic irreducible of degree f over F_p, found at construction.
class FqCtx {
public:
    long long p = 2;
    int f = 1;

    FqCtx() = default;
    FqCtx(long long p_, int f_);

    long long q() const;  // p^f

    Fq from_int(long long v) const;     // embed F_p
    long long to_int(Fq a) const;       // inverse of from_int for f=1 digits
    bool equal(Fq a, Fq b) const { return a == b; }

    Fq add(Fq a, Fq b) const;
    Fq sub(Fq a, Fq b) const;
    Fq neg(Fq a) const;
    Fq mul(Fq a, Fq b) const;
    Fq pow(Fq a, unsigned long long e) const;
    Fq inv(Fq a) const;
    Fq frobenius(Fq a) const { return pow(a, static_cast<unsigned long long>(p)); }
    Fq proot(Fq a) const;               // unique p-th root

    // Solve y^p - c*y = b in F_q. Returns true and sets y on success.
    bool artin_schreier_residue(Fq c, Fq b, Fq& y) const;
    // Minimal d such that Y^p - c*Y - b has a root in F_{q^d}.
    int artin_schreier_extension_degree(Fq c, Fq b) const;

    std::vector<int> digits(Fq a) const;
    Fq from_digits(const std::vector<int>& d) const;

    bool operator==(const FqCtx& o) const { return p == o.p && f == o.f; }

private:
    std::vector<int> mod_poly_;  // x^f = -(mod_poly_[0] + ... + mod_poly_[f-1] x^{f-1})
    void find_modulus();
};

} // namespace perk

#endif
