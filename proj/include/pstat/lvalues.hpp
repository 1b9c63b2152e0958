#pragma once

// Central values L(1/2, chi) for characters to prime power moduli, the short
// second moment S_2, its Poisson-dual expansion, moment and large-value scans.

#include "pstat/characters.hpp"
#include "pstat/tracefn.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pstat {

struct QuadratureError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Instantiation of every q^eps in the verification ratios.
inline constexpr double kEpsilon = 0.1;
/// Exponent excess in the dyadic range N <= q^(1/2 + kDyadicEpsilon).
inline constexpr double kDyadicEpsilon = 0.05;

// ------------------------------------------------------------------ Hurwitz

/// zeta(1/2, x) for x > 0 by Euler-Maclaurin with shift 30 and Bernoulli
/// terms through B_20.
double hurwitz_zeta_half(double x);

/// zeta(1/2) = -1.4603545088...
double riemann_zeta_half();

// ----------------------------------------------------------------- L-values

/// L(1/2, chi) for a primitive character, by
/// L = q^-1/2 sum_{a mod q} chi(a) zeta(1/2, a/q). Throws DomainError otherwise.
cplx lvalue_central(const DirichletCharacter& chi);

/// L(1/2, chi_a) for every index a mod phi(q) at once. For a non-principal chi
/// this is the value of its primitive inducer (chi*(p) = 0); entry 0 holds
/// zeta(1/2) (1 - p^-1/2).
class LValueTable {
public:
    LValueTable(u64 p, unsigned n);
    static std::shared_ptr<const LValueTable> get(u64 p, unsigned n);

    u64 p() const { return table_->p(); }
    unsigned n() const { return table_->n(); }
    const std::shared_ptr<const UnitGroupTable>& units() const { return table_; }
    const std::vector<cplx>& values() const { return values_; }
    cplx operator[](u64 a) const { return values_[a % values_.size()]; }

private:
    std::shared_ptr<const UnitGroupTable> table_;
    std::vector<cplx> values_;
};

/// tau(chi) = sum_a chi(a) e(a/q).
cplx gauss_sum(const DirichletCharacter& chi);
/// epsilon(chi) = tau(chi) / (i^kappa q^1/2), kappa the parity.
cplx root_number(const DirichletCharacter& chi);

/// The smooth cutoff of the approximate functional equation at s = 1/2,
/// Gamma(s0, x^2 pi / q) / Gamma(s0) with s0 = (1/2 + kappa) / 2.
double afe_cutoff(double x, u64 q, int parity);

// ------------------------------------------------------------ smooth weights

/// V_N(x) = w(log2(x / N)), where w(u) = rho(u) / sum_k rho(u - k) and
/// rho(u) = exp(-1 / (1 - u^2)) on (-1, 1). Supported in (N/2, 2N); the
/// weights over N = 2^k form a partition of unity on [1, inf).
struct SmoothWeight {
    double N = 1.0;

    double operator()(double x) const;
    double lower() const { return N / 2; }
    double upper() const { return 2 * N; }

    static double bump(double u);
    static double partition(double u);
    /// sup_x |V_N^(j)(x)| N^j for j = 1..4, by central differences on a grid.
    std::vector<double> derivative_constants() const;
};

/// 1, 2, 4, ... up to and including `limit`.
std::vector<double> dyadic_scales(double limit);

// ------------------------------------------------------------------ AFE check

struct AfePiece {
    double N;
    cplx direct;  ///< N^-1/2 sum chi(n) V_N(n)
    cplx dual;    ///< same with conj(chi), times the root number
};

struct AfeResult {
    cplx value;                 ///< full smoothed functional equation
    std::vector<AfePiece> pieces;  ///< dyadic N <= q^(1/2 + eps)
    cplx tail;                  ///< the remaining N, both sides
    double bound = 0;           ///< 4 K sum |pieces|^2 + 2 |tail|^2, K = pieces.size()
    double actual = 0;          ///< |lvalue_central|^2
    double log_constant = 0;    ///< 4 K / log q
    double ratio() const { return actual > 0 ? bound / actual : 0.0; }
};

/// Here V_N(n) = (N/n)^1/2 afe_cutoff(n) w(log2(n/N)).
AfeResult lvalue_afe(const DirichletCharacter& chi, double eps = kDyadicEpsilon);

// --------------------------------------------------------- short second moment

/// Index offsets of the characters mod p^m inside the index group mod phi(p^n).
std::vector<u64> subgroup_indices(u64 p, unsigned n, unsigned m);

/// S_2(chi) = sum_{psi_1 mod q1} |L(1/2, chi psi_1)|^2.
double short_second_moment(const DirichletCharacter& chi, u64 q1);
double short_second_moment(const LValueTable& L, u64 index, u64 q1);

// ---------------------------------------------------------------- Poisson step

enum class Quadrature { kronrod, simpson };

/// What(xi) = int W(y) e(-xi y) dy with W(y) = V_N(y + shift) V_N(y) on the
/// support [N/2, 2N - shift]. Both rules are adaptive with absolute error
/// tol * N; Simpson is the slow reference.
class WeightTransform {
public:
    WeightTransform(double N, double shift, double tol = 1e-10, Quadrature method = Quadrature::kronrod);
    double N() const { return N_; }
    double shift() const { return shift_; }
    bool empty() const { return hi_ <= lo_; }
    double W(double y) const;
    cplx operator()(double xi) const;
    cplx simpson(double xi) const;
    cplx kronrod(double xi) const;

private:
    double N_, shift_, lo_, hi_, tol_;
    Quadrature method_;
};

/// Dual cutoff J = ceil(c Q1 / N). The bump's transform is below 1e-11 N
/// beyond |N xi| = 200, so c defaults to 200.
inline constexpr double kDualCutoff = 200.0;
u64 dual_cutoff(u64 Q1, double N, double c = kDualCutoff);

struct PoissonCheck {
    cplx direct;   ///< sum_n chi(n + h q1) conj(chi(n)) V_N(n + h q1) V_N(n)
    cplx dual;     ///< Q1^-1/2 sum_{|j| <= J} What(j/Q1) K_chi(j, h; Q1)
    double residual = 0;
    u64 J = 0;
    double tail = 0;  ///< |contribution of J < |j| <= 2J|, when measured
};

PoissonCheck poisson_step_check(const DirichletCharacter& chi, u64 q1, double N, u64 h, double cutoff = kDualCutoff,
                                bool measure_tail = false);
/// The same check for several characters mod q, sharing the transforms.
std::vector<PoissonCheck> poisson_step_checks(std::span<const DirichletCharacter> chis, u64 q1, double N, u64 h,
                                              double cutoff = kDualCutoff, bool measure_tail = false);

// ----------------------------------------------------------- A coefficients

/// Transforms What_{h q1}(j / Q1) for 1 <= h with h q1 < 3N/2 and 1 <= j <= J,
/// shared by every character mod q.
class DualWeights {
public:
    DualWeights(u64 p, u64 q, u64 q1, double N, double cutoff = kDualCutoff);

    u64 p() const { return p_; }
    u64 q() const { return q_; }
    u64 q1() const { return q1_; }
    u64 Q1() const { return q_ / q1_; }
    double N() const { return N_; }
    u64 J() const { return J_; }
    u64 H() const { return H_; }
    /// What_{h q1}(j / Q1) for |j| <= J (zero outside the stored range).
    cplx at(u64 h, i64 j) const;

private:
    u64 p_, q_, q1_;
    double N_;
    u64 J_, H_;
    std::vector<std::vector<cplx>> w_;  // [h - 1][j], j = 0..J
};

/// A(m; p^eta) = sum over m = h' j' with (h' j', p) = 1, h' >= 1, of
/// N^-1 What_{h' p^eta q1}(j' p^eta / Q1), inside the stored range.
cplx coefficients_A(const DualWeights& w, i64 m, unsigned eta);
/// Largest |m| with a nonzero admissible factorization at this eta.
u64 coefficient_range(const DualWeights& w, unsigned eta);

// -------------------------------------------------- second moment bound check

struct SecondMomentCheck {
    double lhs = 0;           ///< S_2(chi)
    double N = 0;             ///< maximizing dyadic scale
    bool tie = false;         ///< another scale within 1e-12 relative
    double b_direct = 0;      ///< B(N) = N^-1 sum_psi1 |sum chi psi1(n) V_N(n)|^2
    double b_dual = 0;        ///< B(N) reassembled from the Poisson expansion
    cplx zero_freq;           ///< N^-1 sum_h What_h(0) K_chi(0, h; Q1)
    cplx k_sum;               ///< sum_eta p^(eta/2) sum_m K_chi(m; Q1/p^eta) A(m; p^eta)
    cplx other;               ///< j != 0 terms outside the reduce case, times N^-1
    double rhs = 0;           ///< q1 (1 + Q1^-1/2 |Re k_sum|)
    double ratio = 0;         ///< lhs / (rhs q^kEpsilon)
    double weyl_rhs = 0;      ///< q1 + (q/q1)^1/2
};

SecondMomentCheck verify_prop_31(const DirichletCharacter& chi, u64 q1, double cutoff = kDualCutoff);
/// B(N) for every dyadic N <= q^(1/2 + eps).
std::vector<std::pair<double, double>> b_profile(const DirichletCharacter& chi, u64 q1, double eps = kDyadicEpsilon);

// --------------------------------------------------- short moment bound check

struct ShortMomentCheck {
    std::size_t size = 0;
    double lhs = 0;    ///< sum_{psi in Psi} S_2(chi psi)
    double rhs = 0;    ///< (q1 + q1^1/4 q2^1/4) |Psi| + q^1/2 |Psi|^1/2
    double ratio = 0;  ///< lhs / (rhs q^kEpsilon), 0 for empty Psi
};

/// `psi` holds indices of characters mod q2.
ShortMomentCheck verify_prop_51(const LValueTable& L, u64 chi_index, u64 q1, u64 q2, std::span<const u64> psi);

struct PsiFamily {
    std::string label;
    std::vector<u64> members;
};
/// Empty, singletons, the full group, even and odd characters, random subsets
/// of random sizes, and the conjugate of each random subset.
std::vector<PsiFamily> psi_families(u64 p, unsigned n2, std::size_t random_count, u64 seed);
std::vector<u64> conjugate_family(std::span<const u64> psi, u64 phi2);

// ----------------------------------------------------------------- moments

/// Sum over characters mod p^n of |L(1/2, chi*)|^k, each replaced by its
/// primitive inducer; the principal character contributes |zeta(1/2)|^k only
/// when requested.
double moment(u64 p, unsigned n, double k, bool include_principal = false);

struct MomentRow {
    u64 q;
    double moment;
    double normalized;  ///< moment / q^2
};
void write_moment_csv(std::ostream& os, std::span<const MomentRow> rows);

/// Least-squares slope of log y against log x.
double loglog_slope(std::span<const double> x, std::span<const double> y);

// ------------------------------------------------------------- large values

/// |L(1/2, chi)| for the primitive characters mod p^n, in index order.
std::vector<double> primitive_abs_values(const LValueTable& L);
/// |R(V; q)| = #{chi primitive : |L(1/2, chi)| > V}.
u64 large_value_count(std::span<const double> abs_values, double V);

/// R_2(V; chi) and Psi(V; chi) for a primitive chi mod q; members are
/// indices of characters mod q2.
std::vector<u64> r2_set(const LValueTable& L, u64 chi_index, u64 q2, double V);
std::vector<u64> psi_set(const LValueTable& L, u64 chi_index, u64 q1, u64 q2, double V);

struct BookkeepingCheck {
    u64 r = 0;            ///< |R(V; q)|
    u64 sum_r2 = 0;       ///< sum over primitive chi of |R_2(V; chi)|
    u64 phi_q2 = 0;
    u64 q2 = 0;
    bool exact = false;   ///< sum_r2 == phi(q2) |R|
    double with_q2 = 0;   ///< sum_r2 / q2, the normalization as displayed
};
BookkeepingCheck bookkeeping_identity(const LValueTable& L, u64 q2, double V);

struct LargeValuesRow {
    double V;
    u64 count;
    bool in_range;          ///< q^(1/8 - 0.05) <= V <= q^(1/6 + 0.05)
    double twelfth_ratio;   ///< count V^12 / q^2.1
    double fourth_ratio;    ///< count V^4 / q^1.1
};
struct LargeValuesReport {
    u64 q = 0;
    double v_low = 0, v_high = 0;
    std::vector<LargeValuesRow> rows;
    double sup_twelfth_in_range = 0;
    double sup_fourth = 0;
};
/// Geometric grid of `points` values spanning [v_low / 2, 2 v_high].
LargeValuesReport large_values(const LValueTable& L, std::size_t points = 24);
/// The same from |L(1/2, chi)| over the primitive characters mod `modulus`.
LargeValuesReport large_values(u64 modulus, std::span<const double> abs_values, std::size_t points = 24);

// ------------------------------------------------------------ persistence

/// JSON-lines store of central values. The first line is the header
/// {"format":"pstat-lvalues","version":1}; each further line is
/// {"p","n","char_index","re_L","im_L","method","accuracy"}.
struct LValueRecord {
    u64 p = 0;
    unsigned n = 0;
    u64 char_index = 0;
    double re_L = 0, im_L = 0;
    std::string method;
    double accuracy = 0;
};

class LValueStore {
public:
    static constexpr int kVersion = 1;
    explicit LValueStore(std::filesystem::path file);

    const std::filesystem::path& file() const { return file_; }
    std::size_t size() const { return records_.size(); }
    const LValueRecord* find(u64 p, unsigned n, u64 index) const;
    void append(const LValueRecord& r);
    void append(std::span<const LValueRecord> rs);

private:
    std::filesystem::path file_;
    std::map<std::tuple<u64, unsigned, u64>, LValueRecord> records_;
};

/// Fills the store with every primitive character mod p^n missing from it,
/// computed by lvalue_central (or read off the batched LValueTable); returns
/// the number of new records.
std::size_t scan_lvalues(LValueStore& store, u64 p, unsigned n, unsigned workers = 1, bool batched = false);
/// |L(1/2, chi)| for the primitive characters mod p^n from a complete store, in index order.
std::vector<double> stored_abs_values(const LValueStore& store, u64 p, unsigned n);

} // namespace pstat
