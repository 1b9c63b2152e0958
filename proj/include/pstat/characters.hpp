#pragma once

// Dirichlet characters modulo p^n, indexed by a in [0, phi(q)) through a
// full discrete-log table: chi_a(g^k) = e(a k / phi(q)).

#include "pstat/padic.hpp"
#include "pstat/simd.hpp"

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

namespace pstat {

/// Smallest positive generator of (Z/p^nZ)^x.
u64 find_generator(u64 p, unsigned n);

/// Generator, discrete logs and the tables needed for Postnikov units.
class UnitGroupTable {
public:
    static constexpr std::uint32_t kNotUnit = 0xffffffffu;

    UnitGroupTable(u64 p, unsigned n);

    const PrimePowerModulus& modulus() const { return m_; }
    u64 p() const { return m_.p(); }
    unsigned n() const { return m_.n(); }
    u64 q() const { return m_.q(); }
    u64 phi() const { return m_.phi(); }
    u64 generator() const { return g_; }

    /// Index k with g^k == u (mod q); throws DomainError for non-units.
    u64 dlog(u64 u) const;
    /// Raw table over all residues mod q, kNotUnit at multiples of p.
    const std::vector<std::uint32_t>& dlog_table() const { return dlog_; }
    /// g^k mod q.
    u64 power(u64 k) const { return pow_[k % phi()]; }

    /// plog(1 + k p) mod q for k mod p^(n-1).
    const std::vector<u64>& log_table() const;
    /// dlog(1 + k p) / (p - 1) for k mod p^(n-1).
    const std::vector<u64>& c_table() const;

    /// Cached tables, keyed by (p, n). Reads and writes a binary cache under
    /// cache_dir when it is non-empty.
    static std::shared_ptr<const UnitGroupTable> get(u64 p, unsigned n, const std::filesystem::path& cache_dir = {});

    /// Binary cache format: magic "PSTATCHR", u32 version, u64 p, u32 n,
    /// u64 g, then q little-endian u32 dlog entries.
    static constexpr std::uint32_t kCacheVersion = 1;
    void save(const std::filesystem::path& file) const;
    static std::shared_ptr<UnitGroupTable> load(const std::filesystem::path& file, u64 p, unsigned n);

private:
    UnitGroupTable(const PrimePowerModulus& m, u64 g, std::vector<std::uint32_t> dlog);
    void build_powers();

    PrimePowerModulus m_;
    u64 g_;
    std::vector<std::uint32_t> dlog_;
    std::vector<std::uint32_t> pow_;
    mutable std::once_flag log_once_;
    mutable std::vector<u64> log_;
    mutable std::vector<u64> c_;
};

class DirichletCharacter {
public:
    DirichletCharacter(std::shared_ptr<const UnitGroupTable> table, u64 index);

    const UnitGroupTable& table() const { return *table_; }
    std::shared_ptr<const UnitGroupTable> table_ptr() const { return table_; }
    const PrimePowerModulus& modulus() const { return table_->modulus(); }
    u64 q() const { return table_->q(); }
    u64 index() const { return a_; }

    /// Conductor exponent m (conductor p^m, m = 0 for the principal character).
    unsigned conductor_exponent() const { return cond_; }
    u64 conductor() const { return ipow(table_->p(), cond_); }
    bool primitive() const { return cond_ == table_->n(); }
    bool principal() const { return a_ == 0; }
    /// 0 for even characters, 1 for odd ones.
    int parity() const { return static_cast<int>(a_ % 2); }

    /// chi(x) = e(phase(x) / phi(q)) for units; phase is meaningless otherwise.
    u64 phase(u64 x) const;
    bool is_unit(u64 x) const { return x % table_->p() != 0; }
    cplx operator()(i64 x) const;

    DirichletCharacter conj() const;
    DirichletCharacter operator*(const DirichletCharacter& o) const;

    /// The primitive character inducing this one (requires a non-principal character).
    DirichletCharacter inducer(const std::filesystem::path& cache_dir = {}) const;
    /// Lift of a character mod p^m (m <= n) to modulus p^n.
    DirichletCharacter lift_to(std::shared_ptr<const UnitGroupTable> target) const;

    /// Postnikov unit A mod p^(n-1), computed from the k = 1 congruence
    /// p a c_1 == A plog(1+p) (mod p^n). Throws DomainError unless primitive and n >= 2.
    u64 postnikov_A() const;

private:
    std::shared_ptr<const UnitGroupTable> table_;
    u64 a_;
    unsigned cond_;
};

/// All phi(q) characters mod q = p^n, in index order.
std::vector<DirichletCharacter> characters_mod(std::shared_ptr<const UnitGroupTable> table);
/// Primitive characters only (phi(q) - phi(q/p) of them).
std::vector<DirichletCharacter> primitive_characters(std::shared_ptr<const UnitGroupTable> table);

/// Number of k mod p^(n-1) for which chi(1 + kp) != e(A plog(1+kp)/p^n), checked
/// in exact arithmetic. stride > 1 checks k = 0, 1, stride, 2 stride, ...
u64 postnikov_violations(const DirichletCharacter& chi, u64 A, u64 stride = 1);

struct PostnikovCheck {
    u64 A = 0;
    bool unit = false;
    u64 violations = 0;
    /// Candidates A' mod p^(n-1) passing the check; filled only by brute force.
    std::optional<u64> solutions;
    bool exhaustive = true;
};

/// Verifies the Postnikov unit of a primitive character on k = 0, 1, stride,
/// 2 stride, ... (every k when stride is 1). With brute_force_uniqueness every
/// candidate A' mod p^(n-1) is tried as well.
PostnikovCheck verify_postnikov(const DirichletCharacter& chi, u64 stride = 1, bool brute_force_uniqueness = false);

/// True iff c_k plog(1+p) == c_1 plog(1+kp) (mod p^n) for every k, the
/// character-independent identity behind the Postnikov formula.
bool postnikov_tables_consistent(const UnitGroupTable& t);

/// sum_{psi mod q1} psi(u) conj(psi(v)).
cplx orthogonality_sum(const UnitGroupTable& t, u64 u, u64 v);

/// delta_q(chi, chi') = (q/p, A - A') for primitive characters of the same modulus.
u64 delta_q(const DirichletCharacter& a, const DirichletCharacter& b);

} // namespace pstat
