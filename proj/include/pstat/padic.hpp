#pragma once

// Exact arithmetic in Z/p^wZ: valuations, the p-adic logarithm on 1+pZ_p,
// square-root branches and Hensel lifting.

#include <compare>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pstat {

using u64 = std::uint64_t;
using i64 = std::int64_t;
using u128 = unsigned __int128;

/// Raised when an argument lies outside the domain of a p-adic operation
/// (log of a non-principal unit, square root of a non-residue, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Raised by Hensel lifting when the derivative at the seed is not a unit.
class SingularLiftError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

bool is_odd_prime(u64 p);

/// p^k, throwing std::overflow_error if it does not fit in 62 bits.
u64 ipow(u64 base, unsigned exp);

/// floor(log_p(x)) for x >= 1.
unsigned floor_log(u64 p, u64 x);
/// ceil(log_p(x)) for x >= 1.
unsigned ceil_log(u64 p, u64 x);

/// Arithmetic modulo a fixed m < 2^62.
class ModRing {
public:
    explicit ModRing(u64 m);

    u64 modulus() const { return m_; }
    u64 reduce(u64 x) const { return x % m_; }
    u64 reduce_signed(i64 x) const;
    u64 add(u64 a, u64 b) const
    {
        u64 s = a + b;
        return s >= m_ ? s - m_ : s;
    }
    u64 sub(u64 a, u64 b) const { return a >= b ? a - b : a + m_ - b; }
    u64 neg(u64 a) const { return a == 0 ? 0 : m_ - a; }
    u64 mul(u64 a, u64 b) const
    {
        if (small_) return (a * b) % m_;
        return static_cast<u64>((static_cast<u128>(a) * b) % m_);
    }
    u64 pow(u64 a, u64 e) const;
    /// Inverse of a unit; throws DomainError if gcd(a, m) != 1.
    u64 inv(u64 a) const;

private:
    u64 m_;
    bool small_;
};

/// q = p^n together with the half powers rt_*(q) = p^floor(n/2) and
/// rt^*(q) = p^ceil(n/2).
class PrimePowerModulus {
public:
    PrimePowerModulus(u64 p, unsigned n);

    u64 p() const { return p_; }
    unsigned n() const { return n_; }
    u64 q() const { return q_; }
    u64 rt_star() const { return rt_star_; }
    u64 rt_ceil() const { return rt_ceil_; }
    /// Order of the unit group, (p - 1) p^(n-1).
    u64 phi() const { return q_ / p_ * (p_ - 1); }
    u64 power(unsigned k) const { return ipow(p_, k); }

    friend bool operator==(const PrimePowerModulus&, const PrimePowerModulus&) = default;

private:
    u64 p_;
    unsigned n_;
    u64 q_;
    u64 rt_star_;
    u64 rt_ceil_;
};

/// p-adic valuation; ord_p(0) is the distinguished infinite value.
class Valuation {
public:
    static constexpr Valuation infinity() { return Valuation(); }
    constexpr explicit Valuation(int v) : value_(v), infinite_(false) {}

    constexpr bool is_infinite() const { return infinite_; }
    /// Finite value; throws std::logic_error on infinity.
    int value() const;
    /// True iff p^k divides the element (always true for zero).
    constexpr bool at_least(int k) const { return infinite_ || value_ >= k; }

    constexpr bool operator==(const Valuation& o) const
    {
        return infinite_ == o.infinite_ && (infinite_ || value_ == o.value_);
    }
    constexpr std::strong_ordering operator<=>(const Valuation& o) const
    {
        if (infinite_ || o.infinite_) return infinite_ <=> o.infinite_;
        return value_ <=> o.value_;
    }

    std::string to_string() const;

private:
    constexpr Valuation() : value_(0), infinite_(true) {}
    int value_;
    bool infinite_;
};

/// Valuation of an ordinary integer (0 maps to infinity).
Valuation ordp(u64 p, u64 x);
Valuation ordp_signed(u64 p, i64 x);

/// An element of Z/p^wZ with tracked precision w. All arithmetic is exact on
/// the representative in [0, p^w); combining residues of different precision
/// keeps the smaller one.
class PadicResidue {
public:
    PadicResidue(u64 p, unsigned w, u64 value);
    static PadicResidue from_signed(u64 p, unsigned w, i64 value);

    u64 p() const { return p_; }
    unsigned precision() const { return w_; }
    u64 value() const { return value_; }
    u64 modulus() const { return ipow(p_, w_); }

    Valuation ord() const;
    bool is_unit() const { return value_ % p_ != 0; }

    /// Same element reduced to a lower precision.
    PadicResidue reduced(unsigned w) const;

    PadicResidue operator+(const PadicResidue& o) const;
    PadicResidue operator-(const PadicResidue& o) const;
    PadicResidue operator*(const PadicResidue& o) const;
    PadicResidue operator-() const;
    /// Division by an element of valuation v <= ord(this); the quotient is
    /// known to precision min(w, w_o) - v.
    PadicResidue operator/(const PadicResidue& o) const;
    PadicResidue inverse() const;
    PadicResidue pow(u64 e) const;

    /// Exact division by p^k (requires p^k | value); precision drops by k.
    PadicResidue shift_down(unsigned k) const;

    friend bool operator==(const PadicResidue&, const PadicResidue&) = default;

private:
    u64 p_;
    unsigned w_;
    u64 value_;
};

/// Valuation of a residue (infinite for the zero residue).
inline Valuation ordp(const PadicResidue& x) { return x.ord(); }

/// Number of series terms and internal precision used by plog at target
/// precision w.
struct LogTruncation {
    unsigned terms;
    unsigned internal_precision;
};
LogTruncation log_truncation(u64 p, unsigned w);

/// p-adic logarithm of x in 1 + pZ_p, correct modulo p^w.
/// Throws DomainError unless x == 1 (mod p).
PadicResidue plog(const PadicResidue& x, unsigned w);

/// plog(1 + k p) mod p^w for every k mod p^(w-1).
std::vector<u64> plog_table(u64 p, unsigned w);

/// A choice of one square root mod p for every nonzero quadratic residue.
class SqrtBranch {
public:
    /// Default branch: the root whose least representative lies in [1, (p-1)/2].
    explicit SqrtBranch(u64 p);
    /// Branch flipping the default choice on the residues where flip[u] is set.
    SqrtBranch(u64 p, const std::vector<bool>& flip);

    u64 p() const { return p_; }
    /// Designated root of u mod p; throws DomainError for non-residues and 0.
    u64 operator()(u64 u) const;

private:
    u64 p_;
    std::vector<u64> root_; // 0 marks a non-residue
};

/// Legendre symbol (a/p) by Euler's criterion.
int legendre(u64 a, u64 p);
int legendre_signed(i64 a, u64 p);

/// Square root of a unit quadratic residue on the given branch, mod p^w.
PadicResidue psqrt(const PadicResidue& x, const SqrtBranch& branch, unsigned w);

/// Evaluator of a polynomial-like function modulo a given modulus.
using ModEvaluator = std::function<u64(u64 x, const ModRing& ring)>;

/// Lifts a root of f mod p^k to the unique root mod p^w congruent to it.
/// Throws SingularLiftError when f'(root) == 0 (mod p) and DomainError when
/// root is not a root mod p^k.
PadicResidue hensel_lift(const ModEvaluator& f, const ModEvaluator& df, const PadicResidue& root,
                         unsigned w);

} // namespace pstat
