#pragma once

// Complete exponential sums  sum_{x in D} e(f(x)/p^n)  over residue classes
// of (Z/p^nZ)^x: brute force, and evaluation by p-adic stationary phase.

#include "pstat/padic.hpp"
#include "pstat/simd.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace pstat {

/// Raised when a phase lacks the hypotheses needed by a stationary-phase
/// evaluation, or when an empirical check contradicts them.
class HypothesisError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Units mod p^n lying in a union of classes mod p^lambda.
class PhaseDomain {
public:
    /// All units.
    static PhaseDomain units(u64 p);
    /// Units whose class mod p^lambda satisfies the predicate.
    static PhaseDomain classes(u64 p, unsigned lambda, const std::function<bool(u64)>& keep);
    /// Units u with (u/p) == legendre_class.
    static PhaseDomain legendre_class(u64 p, int legendre_class);

    unsigned lambda() const { return lambda_; }
    bool contains(u64 x) const;

private:
    PhaseDomain(u64 p, unsigned lambda, std::vector<bool> allowed)
        : p_(p), lambda_(lambda), modulus_(ipow(p, lambda)), allowed_(std::move(allowed))
    {
    }
    u64 p_;
    unsigned lambda_;
    u64 modulus_;
    std::vector<bool> allowed_;
};

/// A p-adically analytic phase f on a domain of units, given by evaluators of
/// f, f' and f'' modulo q = p^n.
struct AnalyticPhase {
    using Eval = std::function<u64(u64 x)>;

    std::string name;
    PrimePowerModulus modulus;
    Eval f;
    Eval d1;
    Eval d2;
    PhaseDomain domain;
    /// Declared rho with r_p(f) >= p^-rho.
    int radius_class = 1;
    /// The Taylor-divisibility hypotheses of the stationary-phase lemmata are
    /// asserted by whoever built the phase.
    bool hypotheses_declared = false;
};

/// epsilon(p): 1 for p == 1 (mod 4), i for p == 3 (mod 4).
cplx epsilon_p(u64 p);

/// Quadratic Gauss sum  sum_{t mod p} e(c t^2 / p)  in closed form.
cplx gauss_quadratic(u64 c, u64 p);
/// Same sum by direct summation.
cplx gauss_quadratic_direct(u64 c, u64 p);

/// Exact form of a local factor Delta: zero, or i^quarter * sqrt(p)^sqrt_p * e(extra/p).
struct DeltaFactor {
    bool zero = false;
    unsigned quarter = 0;
    bool sqrt_p = false;
    u64 extra = 0;

    cplx value(u64 p) const;
};

/// Delta_f(x0; p^n) from n, f'(x0)_o = f'(x0)/p^floor(n/2) mod p and f''(x0) mod p.
DeltaFactor delta_factor(u64 p, unsigned n, u64 d1_circ, u64 d2);

struct StationaryPoint {
    u64 x0;       ///< representative mod p^n
    u64 f_value;  ///< f(x0) mod p^n
    u64 d1_circ;  ///< f'(x0)/p^floor(n/2) mod p
    u64 d2;       ///< f''(x0) mod p^n
    bool singular;
    DeltaFactor delta;
};

struct StationaryData {
    PrimePowerModulus modulus;
    std::vector<StationaryPoint> points;
    bool odd() const { return modulus.n() % 2 == 1; }
};

struct StationaryOptions {
    /// Odd n, nonsingular points: move each representative to the one with
    /// f' == 0 (mod p^ceil(n/2)), so Delta has no quadratic-exponential factor.
    bool refine = true;
    /// Scan every x mod p^n for f' == 0 (mod rt_*) and check that the solution
    /// set is a union of classes mod rt_*; otherwise scan classes mod rt_* only.
    bool full_scan = false;
    /// Nonzero: shift each class representative by a pseudo-random multiple of
    /// rt_* derived from this seed (representative-independence checks).
    u64 representative_seed = 0;
};

/// Brute force  sum_{x in D} e(f(x)/p^n).
cplx sum_direct(const AnalyticPhase& f);

/// Localized sum over x0 in D with f'(x0) == 0 (mod p^(n-ell)).
cplx sum_localized(const AnalyticPhase& f, unsigned ell);

/// Stationary classes mod rt_*(p^n) and their local factors.
StationaryData stationary_points(const AnalyticPhase& f, const StationaryOptions& opts = {});

/// Closed-form evaluation  p^(n/2) sum_{x0} e(f(x0)/p^n) Delta_f(x0; p^n).
/// Requires n >= 2, declared hypotheses, and a domain defined mod p^lambda with
/// lambda <= floor(n/2).
cplx sum_stationary(const AnalyticPhase& f, const StationaryOptions& opts = {});

struct HypothesisReport {
    u64 pairs_checked = 0;
    u64 failures = 0;
    bool exhaustive = true;
    std::string first_failure;
    bool ok() const { return failures == 0; }
};

/// Checks the Taylor identities the lemmata rely on:
///   f(x0 + t p^l) == f(x0) + f'(x0) t p^l                 (mod p^n), l = ceil(n/2), all x0;
///   f(x0 + t p^h) == f(x0) + f'(x0) t p^h + f''(x0) t^2 p^2h / 2 (mod p^n), h = floor(n/2), stationary x0.
/// Sweeps every (x0, t) when the count is at most max_pairs, otherwise a
/// deterministic stride sample of x0 with every t.
HypothesisReport check_hypotheses(const AnalyticPhase& f, u64 max_pairs = 4'000'000);

/// Fast inverses modulo a prime power (inverse mod p from a table, then Newton).
class UnitInverter {
public:
    explicit UnitInverter(const PrimePowerModulus& m);
    u64 operator()(u64 x) const;

private:
    ModRing ring_;
    u64 p_;
    unsigned steps_;
    std::vector<u64> inv_mod_p_;
};

// Phase families used by the verification suites. Coefficients are reduced
// mod q; the hypotheses flag is set because each family meets the sufficient
// conditions (all derivatives p-adically integral, r_p >= 1/p).

/// f(x) = c x + d.
AnalyticPhase linear_phase(const PrimePowerModulus& m, i64 c, i64 d);
/// f(x) = a x^2 + b x + c.
AnalyticPhase quadratic_phase(const PrimePowerModulus& m, i64 a, i64 b, i64 c);
/// f(x) = c x + m xbar (Kloosterman-type).
AnalyticPhase kloosterman_phase(const PrimePowerModulus& m, i64 c, i64 mm);
/// f(x) = A p^-s log_p(1 + p^s x) + m xbar: the phase of a character
/// restricted to 1 + p^s Z (Postnikov form) twisted by an inverse.
AnalyticPhase postnikov_log_phase(const PrimePowerModulus& m, i64 A, unsigned s, i64 mm);

/// The bundled suite: >= 50 phases over p in {3,5,7,11}, n in {2..8}.
std::vector<AnalyticPhase> bundled_phase_suite();

} // namespace pstat
