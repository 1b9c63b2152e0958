#pragma once

// Trace-function sums
//   K_chi(a, b; qt) = qt^-1/2 sum*_{r mod qt} chi(r + b q/qt) conj(chi(r)) e(a r / qt),
//   K_chi(m; qt)    = K_chi(1, m; qt) = qt^-1/2 sum*_r chi(1 + (q/qt) r) e(m rbar / qt),
// their case reduction, the split K = K^+ + K^- at the two stationary points,
// and twisted complete sums of products K^+- conj(K'^+-).
// Throughout qt = p^t is a proper divisor of q = p^n.

#include "pstat/characters.hpp"
#include "pstat/phase.hpp"

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace pstat {

// ---------------------------------------------------------------- direct sums

cplx kchi_direct(const DirichletCharacter& chi, i64 a, i64 b, unsigned t);
/// Normalized form K_chi(m; qt) summed as written (over rbar).
cplx kchi_m_direct(const DirichletCharacter& chi, i64 m, unsigned t);
/// K_chi(j, b; qt) for every j mod qt at once, by one DFT.
std::vector<cplx> kchi_direct_all_j(const DirichletCharacter& chi, i64 b, unsigned t);
/// K_chi(m; qt) for every m mod qt at once (zero entries at non-units are
/// meaningless and left as computed).
std::vector<cplx> kchi_m_direct_all(const DirichletCharacter& chi, unsigned t);

/// kchi_m_direct_all for many characters mod p^n: the discrete logs of
/// 1 + (q/qt) ubar are tabulated once and shared.
class KchiDirectSweep {
public:
    KchiDirectSweep(std::shared_ptr<const UnitGroupTable> table, unsigned t);
    /// K_chi(m; qt) for every m, chi the character with this index.
    std::vector<cplx> operator()(u64 index) const;

private:
    std::shared_ptr<const UnitGroupTable> table_;
    u64 qt_;
    std::vector<u64> dlog_;  // dlog(1 + (q/qt) ubar) for units u mod qt
    RootTable roots_;        // e(k / phi(q))
};

// ------------------------------------------------------------------ reduction

enum class KchiCase { reduce, full, minus_over_p, zero };
std::string to_string(KchiCase c);

struct KchiReduction {
    KchiCase kind = KchiCase::zero;
    unsigned eta_j = 0, eta_h = 0, eta = 0;
    /// reduce: K(j, h; p^t) = p^(eta/2) K(m_reduced; p^t_reduced).
    u64 m_reduced = 0;
    unsigned t_reduced = 0;
    double scale = 1.0;
    /// Closed value in the other three cases.
    double value = 0.0;
};

/// Case of K_chi(j, h; p^t) for a primitive character mod p^n.
KchiReduction kchi_reduce(u64 p, i64 j, i64 h, unsigned t, unsigned n);
/// K_chi(j, h; p^t) assembled from the reduction (direct sum for the reduced case).
cplx kchi_via_reduction(const DirichletCharacter& chi, i64 j, i64 h, unsigned t);

// ------------------------------------------------------------------ closed form

/// Exactly represented complex number: 0, or i^quarter e(k / modulus).
struct UnitPhase {
    bool zero = true;
    unsigned quarter = 0;
    u64 k = 0;
    u64 modulus = 1;

    cplx value() const;
    UnitPhase conj() const;
    UnitPhase operator*(const UnitPhase& o) const;
    friend bool operator==(const UnitPhase&, const UnitPhase&) = default;
};

struct OscillatorySplit {
    u64 p = 0;
    unsigned n = 0, t = 0;
    u64 A = 0;
    u64 m = 0;
    /// Zero when (A m / p) = -1; then every other field below is unset.
    bool supported = false;
    u64 mu = 0;                 ///< m / A mod qt
    u64 s_plus = 0, s_minus = 0; ///< stationary points mod qt
    u64 g_plus = 0, g_minus = 0; ///< g_+-(m/A; qt) mod qt
    DeltaFactor delta_plus, delta_minus;
    UnitPhase kplus, kminus;

    cplx value() const { return kplus.value() + kminus.value(); }
};

/// Closed form from psqrt and plog, following the definitions term by term.
/// Requires t >= 2, t < n and (m, p) = 1. The square root uses `branch`.
OscillatorySplit kchi_closed(u64 p, unsigned n, u64 A, i64 m, unsigned t, const SqrtBranch& branch);
OscillatorySplit kchi_closed(const DirichletCharacter& chi, i64 m, unsigned t);

/// Table-driven evaluation of K^+- for one modulus pair (p^n, p^t); agrees
/// exactly with kchi_closed on the default branch.
class KchiClosedTables {
public:
    KchiClosedTables(u64 p, unsigned n, unsigned t);

    u64 p() const { return p_; }
    unsigned n() const { return n_; }
    unsigned t() const { return t_; }
    u64 qt() const { return qt_; }

    /// K^+ and K^- at (A, m); both zero off the support.
    std::pair<UnitPhase, UnitPhase> eval(u64 A, u64 m) const;
    /// Vieta and stationarity residuals: false if any exact identity fails.
    bool check_stationary(u64 A, u64 m) const;
    /// K^+ + K^- at (A, m) for every m mod qt, zero off the support.
    std::vector<cplx> values(u64 A) const;

private:
    u64 p_;
    unsigned n_, t_;
    u64 qt_, shift_;
    ModRing ring_;
    UnitInverter inv_;
    std::vector<std::uint32_t> sqrt_; // branch root of each unit square, 0 otherwise
    std::vector<u64> log_;            // (qt/q) log_p(1 + (q/qt) s) mod qt, s mod qt
    bool p3_;                         // p == 3 (mod 4)
    std::vector<std::uint32_t> inv_table_;  // inverse of each unit mod qt
    std::vector<int> legendre_;             // (x / p) for x mod p
    RootTable roots_;                       // e(k / qt)
};

// -------------------------------------------------------------- sums of products

/// Q = qt / (qt, delta_q(chi, chi')) computed from Postnikov units mod p^(n-1).
u64 product_modulus(u64 p, unsigned n, u64 A, u64 A2, unsigned t);

/// K^s_chi(m) conj(K^s_chi'(m)) for m mod qt (s = +1 or -1).
std::vector<UnitPhase> product_table(const KchiClosedTables& tab, u64 A, u64 A2, int sign);

struct PeriodicityReport {
    u64 claimed = 0;   ///< Q from the Postnikov units
    u64 smallest = 0;  ///< least power of p that is a period of the table
    bool claimed_ok = false;
};
PeriodicityReport periodicity_check(const KchiClosedTables& tab, u64 A, u64 A2, int sign);

/// sum*_{u mod Q} K^s_chi(u) conj(K^s_chi'(u)) e(-u v / Q) for every v mod Q.
/// For Q = 1 the single entry is K^s_chi(1) conj(K^s_chi'(1)), the indicator value.
std::vector<cplx> product_sums(const KchiClosedTables& tab, u64 A, u64 A2, int sign);
/// One entry of product_sums; for Q = 1, the product at m = v.
cplx product_sum(const DirichletCharacter& chi, const DirichletCharacter& chi2, unsigned t, i64 v, int sign);

// ------------------------------------------------------------------ completion

struct CompletionBound {
    cplx partial;  ///< sum_{1 <= m <= M} f(m)
    double bound;  ///< Q^-1 sum_v |fhat(v)| min(M, ||v/Q||^-1)
    bool holds() const { return std::abs(partial) <= bound * (1.0 + 1e-12) + 1e-12; }
};
CompletionBound complete_incomplete_sum(std::span<const cplx> f, u64 M);

// -------------------------------------------------------------------- output

struct TraceRow {
    u64 p;
    unsigned n;
    u64 qt;
    i64 arg;           ///< m or v
    std::string kind;  ///< case tag or sum label
    double abs_value;
    double ratio;      ///< |value| / Q^(1/2) (or / 1 for normalized sums)
};
void write_trace_csv(std::ostream& os, std::span<const TraceRow> rows);
void write_trace_json(std::ostream& os, std::span<const TraceRow> rows);

} // namespace pstat
