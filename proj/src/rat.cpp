#include "perk/rat.hpp"
#include "perk/errors.hpp"

#include <ostream>
#include <sstream>

namespace perk {

std::string to_string(const Rat& r) {
    std::ostringstream os;
    os << r.numerator();
    if (r.denominator() != 1) os << '/' << r.denominator();
    return os.str();
}

int padic_val(long long n, long long p) {
    if (n == 0) throw error("padic_val of zero");
    if (n < 0) n = -n;
    int v = 0;
    while (n % p == 0) { n /= p; ++v; }
    return v;
}

long long ipow(long long p, int k) {
    long long r = 1;
    for (int i = 0; i < k; ++i) {
        if (r > (1LL << 61) / p) throw error("ipow overflow");
        r *= p;
    }
    return r;
}

int ceil_log_p(long long n, long long p) {
    int e = 0;
    long long q = 1;
    while (q < n) { q *= p; ++e; }
    return e;
}

std::string to_string(const Valuation& v) {
    if (v.infinite) return std::string("inf(certified=") + (v.certified ? "true" : "false") + ")";
    return to_string(v.value) + "(certified=" + (v.certified ? "true" : "false") + ")";
}

Valuation val_min(const Valuation& a, const Valuation& b) {
    if (a.infinite) return b;
    if (b.infinite) return a;
    return a.value <= b.value ? a : b;
}

std::ostream& operator<<(std::ostream& os, const Valuation& v) { return os << to_string(v); }

} // namespace perk
