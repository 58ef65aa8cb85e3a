#ifndef PERK_TATESEN_HPP
#define PERK_TATESEN_HPP

#include "perk/annulus.hpp"

#include <optional>
#include <string>
#include <vector>

namespace perk {

// Normalized-trace split: input = trace_part + kernel_part, where trace_part
// keeps the exponent classes divisible by p^{m-n} (level-0 p-adic valuation
// >= -n) and is re-expressed at level n when possible.
struct TraceSplit {
    AnnulusElem input;
    AnnulusElem trace_part;        // level n (level m when lowering is inexact)
    AnnulusElem kernel_part;       // level m
    int n = 0;
};

TraceSplit normalized_trace(const AnnulusElem& x, int n);

// x = sum_{j in [0, p^n)} T^j phi^n(z_j); exact on Laurent data and char-p
// tails (precision-floor residual on mixed tails).
std::vector<AnnulusElem> phi_basis_depth(const AnnulusElem& x, int n);

struct TSReport {
    std::string axiom;             // TS1 | TS2 | TS3
    Rat gap_min{0}, gap_max{0};    // sampled valuation gaps
    bool gap_finite = true;
    Rat c1{0}, c2{0}, c3{0};       // claimed constants
    bool pass = false;
    std::vector<std::string> notes;
};

// Worst gap v(x) - v(R_{K,n} x) over the samples; the smallest c2 making
// TS2(d) hold on them, plus the section/convergence checks.
TSReport trace_valuation_audit(const std::vector<AnnulusElem>& samples, int n);

// Desk witness for TS1 (K = Q_p, trivial H): the constant 1.
TSReport ts1_witness(const Rat& c1);

struct InvertReport {
    AnnulusElem y;
    Rat drop{0};                    // v(x) - v(y), the measured loss
    bool drop_finite = false;
    Rat residual_bound{0};          // target the iteration reached
    Valuation residual;             // of x - (gamma - 1) y, re-substituted
    int iterations = 0;
    std::vector<Rat> residual_log;  // per-round residual valuations
};

// Solve (gamma_c - 1) y = x at precision for psi(x) = 0.
// n(gamma) = v_p(c - 1) must satisfy p^{n(gamma)} >= 2p/(p-1).
InvertReport gamma_minus_one_invert_psi0(const AnnulusElem& x, const PadicScalar& c);

// Solve (gamma_c - 1) y = kernel_part by finite telescoping over levels
// n+1..m, inverting each slice on its psi = 0 space. Requires n(gamma) <= n.
InvertReport gamma_minus_one_invert_kernel(const TraceSplit& split, const PadicScalar& c);

// --- descent ----------------------------------------------------------------

using Mat = std::vector<std::vector<AnnulusElem>>;

Mat mat_identity(const AnnulusElem& proto, int d);
Mat mat_mul(const Mat& a, const Mat& b);
Mat mat_add(const Mat& a, const Mat& b);
Mat mat_sub(const Mat& a, const Mat& b);
Mat mat_gamma(const Mat& a, const PadicScalar& c);
Mat mat_fold(const Mat& a, int M);
// min over entries of the valuation (infinite if all entries vanish)
Valuation mat_valuation(const Mat& a);
// (1 + C)^{-1} by the Neumann series; needs v(C) > 0.
Mat mat_inv_one_plus(const Mat& c);

struct DescentRound {
    int round = 0;
    Rat corr_val{0};
    bool corr_finite = false;
    Rat kernel_val{0};
    bool kernel_finite = false;
    bool constant_gate = false;     // v(u^k) > c1 + 2 c2 + 2 c3 held this round
};

struct DescentResult {
    bool ok = false;
    std::string diagnostic;
    Mat B;                          // accumulated conjugation, in 1 + u^k Mat
    Mat descended_gamma;            // level-n entries at precision
    std::optional<Mat> descended_frob;
    std::vector<DescentRound> log;
    Rat threshold{0};               // v(u^k)
    Rat c1{0}, c2{0}, c3{0};
};

struct DescentJob {
    long long p = 3;
    Rat lambda{1};
    Rat b{2, 9};
    int d = 1;
    long long k = 2;                // cocycle trivial modulo u^k
    int level = 2;                  // working level m
    int n = 1;                      // descent target level
    long long u_lo = -8, u_hi = 8;
    int rounds_max = 24;
    PadicScalar chi{3, 1, 4};       // gamma generator chi-value
    Mat gamma_mat;                  // cocycle value on the gamma generator
    std::optional<Mat> frob_mat;    // transported, not iterated
};

// Corrective successive approximation: splits the gamma-cocycle with
// normalized traces, kills kernel parts with the (gamma-1)-inverter, and
// stops when the kernel part clears the u^k threshold. char-p coefficients.
DescentResult descend_cocycle(const DescentJob& job);

} // namespace perk

#endif
