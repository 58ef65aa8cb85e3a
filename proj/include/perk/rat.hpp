#ifndef PERK_RAT_HPP
#define PERK_RAT_HPP

#include <boost/rational.hpp>
#include <cstdint>
#include <string>
#include <iosfwd>

namespace perk {

// Exact rational arithmetic for valuations, exponents and interval radii.
using Rat = boost::rational<long long>;

inline Rat rat(long long n, long long d = 1) { return Rat(n, d); }

std::string to_string(const Rat& r);

// v_p of an integer; n must be nonzero.
int padic_val(long long n, long long p);

// p^k as long long, guarded against overflow.
long long ipow(long long p, int k);

// Smallest e with p^e >= n (n >= 1).
int ceil_log_p(long long n, long long p);

// A valuation result: the value of the stored data (inf over stored
// terms, +infinity for zero data) plus a flag saying whether precision
// allows us to assert it is the exact valuation of the element.
struct Valuation {
    Rat value{0};
    bool infinite = false;
    bool certified = false;

    static Valuation inf() { return Valuation{Rat(0), true, false}; }
    static Valuation of(const Rat& v, bool cert) { return Valuation{v, false, cert}; }

    bool finite() const { return !infinite; }
    // Comparison helpers treating infinite as +infinity.
    bool ge(const Rat& bound) const { return infinite || value >= bound; }
    bool lt(const Rat& bound) const { return !infinite && value < bound; }
};

std::string to_string(const Valuation& v);

// min that treats "infinite" correctly.
Valuation val_min(const Valuation& a, const Valuation& b);

std::ostream& operator<<(std::ostream& os, const Valuation& v);

} // namespace perk

#endif
