#include "pstat/padic.hpp"

#include <limits>
#include <numeric>

namespace pstat {

bool is_odd_prime(u64 p)
{
    if (p < 3 || p % 2 == 0) return false;
    for (u64 d = 3; d * d <= p; d += 2)
        if (p % d == 0) return false;
    return true;
}

u64 ipow(u64 base, unsigned exp)
{
    constexpr u64 limit = u64{1} << 62;
    u64 r = 1;
    for (unsigned i = 0; i < exp; ++i) {
        if (r > limit / base) throw std::overflow_error("ipow: p^k exceeds 2^62");
        r *= base;
    }
    return r;
}

unsigned floor_log(u64 p, u64 x)
{
    unsigned k = 0;
    while (x >= p) {
        x /= p;
        ++k;
    }
    return k;
}

unsigned ceil_log(u64 p, u64 x)
{
    unsigned k = 0;
    u64 pk = 1;
    while (pk < x) {
        pk *= p;
        ++k;
    }
    return k;
}

ModRing::ModRing(u64 m) : m_(m), small_(m <= (u64{1} << 32))
{
    if (m == 0) throw std::invalid_argument("ModRing: zero modulus");
}

u64 ModRing::reduce_signed(i64 x) const
{
    i64 r = x % static_cast<i64>(m_);
    return static_cast<u64>(r < 0 ? r + static_cast<i64>(m_) : r);
}

u64 ModRing::pow(u64 a, u64 e) const
{
    u64 r = 1 % m_;
    a %= m_;
    while (e) {
        if (e & 1) r = mul(r, a);
        a = mul(a, a);
        e >>= 1;
    }
    return r;
}

u64 ModRing::inv(u64 a) const
{
    i64 t = 0, new_t = 1;
    i64 r = static_cast<i64>(m_), new_r = static_cast<i64>(a % m_);
    while (new_r != 0) {
        i64 quot = r / new_r;
        i64 tmp = t - quot * new_t;
        t = new_t;
        new_t = tmp;
        tmp = r - quot * new_r;
        r = new_r;
        new_r = tmp;
    }
    if (r != 1) throw DomainError("ModRing::inv: element is not a unit");
    return reduce_signed(t);
}

PrimePowerModulus::PrimePowerModulus(u64 p, unsigned n) : p_(p), n_(n)
{
    if (!is_odd_prime(p)) throw std::invalid_argument("modulus base must be an odd prime, got " + std::to_string(p));
    if (n < 1) throw std::invalid_argument("modulus exponent must be >= 1");
    q_ = ipow(p, n);
    rt_star_ = ipow(p, n / 2);
    rt_ceil_ = ipow(p, (n + 1) / 2);
}

int Valuation::value() const
{
    if (infinite_) throw std::logic_error("Valuation::value on infinity");
    return value_;
}

std::string Valuation::to_string() const { return infinite_ ? "inf" : std::to_string(value_); }

Valuation ordp(u64 p, u64 x)
{
    if (x == 0) return Valuation::infinity();
    int k = 0;
    while (x % p == 0) {
        x /= p;
        ++k;
    }
    return Valuation(k);
}

Valuation ordp_signed(u64 p, i64 x)
{
    return ordp(p, static_cast<u64>(x < 0 ? -x : x));
}

PadicResidue::PadicResidue(u64 p, unsigned w, u64 value) : p_(p), w_(w), value_(value % ipow(p, w)) {}

PadicResidue PadicResidue::from_signed(u64 p, unsigned w, i64 value)
{
    return PadicResidue(p, w, ModRing(ipow(p, w)).reduce_signed(value));
}

Valuation PadicResidue::ord() const
{
    if (value_ == 0) return Valuation::infinity();
    return ordp(p_, value_);
}

PadicResidue PadicResidue::reduced(unsigned w) const
{
    if (w > w_) throw std::invalid_argument("PadicResidue::reduced: cannot raise precision");
    return PadicResidue(p_, w, value_);
}

static void check_same_prime(const PadicResidue& a, const PadicResidue& b)
{
    if (a.p() != b.p()) throw std::invalid_argument("PadicResidue: mixed primes");
}

PadicResidue PadicResidue::operator+(const PadicResidue& o) const
{
    check_same_prime(*this, o);
    unsigned w = std::min(w_, o.w_);
    ModRing ring(ipow(p_, w));
    return PadicResidue(p_, w, ring.add(ring.reduce(value_), ring.reduce(o.value_)));
}

PadicResidue PadicResidue::operator-(const PadicResidue& o) const
{
    check_same_prime(*this, o);
    unsigned w = std::min(w_, o.w_);
    ModRing ring(ipow(p_, w));
    return PadicResidue(p_, w, ring.sub(ring.reduce(value_), ring.reduce(o.value_)));
}

PadicResidue PadicResidue::operator*(const PadicResidue& o) const
{
    check_same_prime(*this, o);
    unsigned w = std::min(w_, o.w_);
    ModRing ring(ipow(p_, w));
    return PadicResidue(p_, w, ring.mul(ring.reduce(value_), ring.reduce(o.value_)));
}

PadicResidue PadicResidue::operator-() const { return PadicResidue(p_, w_, ModRing(modulus()).neg(value_)); }

PadicResidue PadicResidue::shift_down(unsigned k) const
{
    if (k > w_) throw std::invalid_argument("PadicResidue::shift_down: shift exceeds precision");
    u64 pk = ipow(p_, k);
    if (value_ % pk != 0) throw DomainError("PadicResidue::shift_down: value not divisible by p^k");
    return PadicResidue(p_, w_ - k, value_ / pk);
}

PadicResidue PadicResidue::operator/(const PadicResidue& o) const
{
    check_same_prime(*this, o);
    Valuation vo = o.ord();
    if (vo.is_infinite()) throw DomainError("PadicResidue: division by zero");
    unsigned v = static_cast<unsigned>(vo.value());
    unsigned w = std::min(w_, o.w_);
    if (!ord().at_least(static_cast<int>(v)) || v >= w)
        throw DomainError("PadicResidue: divisor valuation exceeds dividend valuation or precision");
    PadicResidue num = reduced(w).shift_down(v);
    PadicResidue den = o.reduced(w).shift_down(v);
    return num * den.inverse();
}

PadicResidue PadicResidue::inverse() const
{
    if (!is_unit()) throw DomainError("PadicResidue::inverse: not a unit");
    return PadicResidue(p_, w_, ModRing(modulus()).inv(value_));
}

PadicResidue PadicResidue::pow(u64 e) const { return PadicResidue(p_, w_, ModRing(modulus()).pow(value_, e)); }

LogTruncation log_truncation(u64 p, unsigned w)
{
    // Term k has valuation >= k - floor(log_p k); stop once that reaches w.
    u64 k = 1;
    while (static_cast<i64>(k) - static_cast<i64>(floor_log(p, k)) < static_cast<i64>(w)) ++k;
    return {static_cast<unsigned>(k), w + ceil_log(p, k) + 1};
}

PadicResidue plog(const PadicResidue& x, unsigned w)
{
    const u64 p = x.p();
    if (x.value() % p != 1 % p) throw DomainError("plog: argument is not congruent to 1 mod p");
    if (w == 0) return PadicResidue(p, 0, 0);
    const auto trunc = log_truncation(p, w);
    const ModRing inner(ipow(p, trunc.internal_precision));
    const ModRing outer(ipow(p, w));

    const u64 y = inner.sub(inner.reduce(x.value()), 1);
    u64 y_pow = 1;
    u64 acc = 0;
    for (u64 k = 1; k <= trunc.terms; ++k) {
        y_pow = inner.mul(y_pow, y);
        u64 kk = k;
        u64 pv = 1;
        while (kk % p == 0) {
            kk /= p;
            pv *= p;
        }
        // y^k is divisible by p^k, hence by p^v(k); the quotient is exact
        // modulo p^(internal - v) >= p^w.
        u64 term = outer.reduce(y_pow / pv);
        term = outer.mul(term, outer.inv(kk % outer.modulus()));
        acc = (k % 2 == 1) ? outer.add(acc, term) : outer.sub(acc, term);
    }
    return PadicResidue(p, w, acc);
}

std::vector<u64> plog_table(u64 p, unsigned w)
{
    if (w == 0) return {};
    const u64 count = ipow(p, w - 1);
    const u64 mod = ipow(p, w);
    std::vector<u64> table(count);
    for (u64 k = 0; k < count; ++k) table[k] = plog(PadicResidue(p, w, (1 + k * p) % mod), w).value();
    return table;
}

int legendre(u64 a, u64 p)
{
    a %= p;
    if (a == 0) return 0;
    u64 r = ModRing(p).pow(a, (p - 1) / 2);
    return r == 1 ? 1 : -1;
}

int legendre_signed(i64 a, u64 p) { return legendre(ModRing(p).reduce_signed(a), p); }

SqrtBranch::SqrtBranch(u64 p) : p_(p), root_(p, 0)
{
    if (!is_odd_prime(p)) throw std::invalid_argument("SqrtBranch: p must be an odd prime");
    for (u64 r = 1; r <= (p - 1) / 2; ++r) root_[r * r % p] = r;
}

SqrtBranch::SqrtBranch(u64 p, const std::vector<bool>& flip) : SqrtBranch(p)
{
    for (u64 u = 1; u < p && u < flip.size(); ++u)
        if (flip[u] && root_[u] != 0) root_[u] = p - root_[u];
}

u64 SqrtBranch::operator()(u64 u) const
{
    u %= p_;
    if (root_[u] == 0) throw DomainError("SqrtBranch: argument is not a nonzero square mod p");
    return root_[u];
}

PadicResidue hensel_lift(const ModEvaluator& f, const ModEvaluator& df, const PadicResidue& root, unsigned w)
{
    const u64 p = root.p();
    const unsigned k = root.precision();
    if (k == 0) throw std::invalid_argument("hensel_lift: seed must be known mod p at least");
    const ModRing seed_ring(ipow(p, k));
    if (f(root.value(), seed_ring) != 0) throw DomainError("hensel_lift: seed is not a root");
    const ModRing ring_p(p);
    if (df(root.value() % p, ring_p) == 0) throw SingularLiftError("hensel_lift: derivative vanishes mod p");
    if (w <= k) return root.reduced(w);

    const ModRing ring(ipow(p, w));
    u64 x = root.value();
    // Newton's method doubles the number of correct digits per step.
    for (int iter = 0; iter < 64; ++iter) {
        u64 fx = f(x, ring);
        if (fx == 0) return PadicResidue(p, w, x);
        x = ring.sub(x, ring.mul(fx, ring.inv(df(x, ring))));
    }
    throw std::runtime_error("hensel_lift: Newton iteration failed to converge");
}

PadicResidue psqrt(const PadicResidue& x, const SqrtBranch& branch, unsigned w)
{
    const u64 p = x.p();
    if (branch.p() != p) throw std::invalid_argument("psqrt: branch for a different prime");
    if (!x.is_unit()) throw DomainError("psqrt: argument is not a unit");
    if (legendre(x.value(), p) != 1) throw DomainError("psqrt: argument is not a quadratic residue mod p");
    if (x.precision() < w) throw std::invalid_argument("psqrt: argument known to fewer digits than requested");
    const u64 target = x.value();
    auto f = [target](u64 u, const ModRing& r) { return r.sub(r.mul(u, u), r.reduce(target)); };
    auto df = [](u64 u, const ModRing& r) { return r.add(u, u) % r.modulus(); };
    return hensel_lift(f, df, PadicResidue(p, 1, branch(target % p)), w);
}

} // namespace pstat
