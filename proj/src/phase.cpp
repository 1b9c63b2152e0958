#include "pstat/phase.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace pstat {

PhaseDomain PhaseDomain::units(u64 p) { return PhaseDomain(p, 0, {true}); }

PhaseDomain PhaseDomain::classes(u64 p, unsigned lambda, const std::function<bool(u64)>& keep)
{
    const u64 mod = ipow(p, lambda);
    std::vector<bool> allowed(mod);
    for (u64 c = 0; c < mod; ++c) allowed[c] = keep(c);
    return PhaseDomain(p, lambda, std::move(allowed));
}

PhaseDomain PhaseDomain::legendre_class(u64 p, int legendre_class)
{
    return classes(p, 1, [p, legendre_class](u64 c) { return legendre(c, p) == legendre_class; });
}

bool PhaseDomain::contains(u64 x) const { return x % p_ != 0 && allowed_[x % modulus_]; }

cplx epsilon_p(u64 p) { return p % 4 == 1 ? cplx{1.0, 0.0} : cplx{0.0, 1.0}; }

cplx gauss_quadratic(u64 c, u64 p)
{
    return epsilon_p(p) * std::sqrt(static_cast<double>(p)) * static_cast<double>(legendre(c, p));
}

cplx gauss_quadratic_direct(u64 c, u64 p)
{
    cplx acc = 0.0;
    for (u64 t = 0; t < p; ++t) acc += expi(static_cast<double>(c % p * t % p * t % p) / static_cast<double>(p));
    return acc;
}

cplx DeltaFactor::value(u64 p) const
{
    if (zero) return 0.0;
    static constexpr cplx quarters[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
    cplx v = quarters[quarter % 4];
    if (sqrt_p) v *= std::sqrt(static_cast<double>(p));
    if (extra % p != 0) v *= expi(static_cast<double>(extra % p) / static_cast<double>(p));
    return v;
}

DeltaFactor delta_factor(u64 p, unsigned n, u64 d1_circ, u64 d2)
{
    DeltaFactor d;
    if (n % 2 == 0) return d;
    const ModRing rp(p);
    d1_circ %= p;
    d2 %= p;
    if (d2 == 0) {
        d.zero = d1_circ != 0;
        d.sqrt_p = true;
        return d;
    }
    const u64 two_d2 = rp.add(d2, d2);
    d.quarter = (p % 4 == 3 ? 1u : 0u) + (legendre(two_d2, p) == -1 ? 2u : 0u);
    d.extra = rp.neg(rp.mul(rp.inv(two_d2), rp.mul(d1_circ, d1_circ)));
    return d;
}

namespace {

constexpr std::size_t kChunk = 1 << 14;

void require_ready(const AnalyticPhase& f, const char* who)
{
    if (!f.hypotheses_declared)
        throw HypothesisError(std::string(who) + ": phase '" + f.name + "' has no declared stationary-phase hypotheses");
}

u64 mix(u64 x)
{
    x ^= x >> 33;
    x *= 0xff51afd7ed558ccdULL;
    x ^= x >> 33;
    x *= 0xc4ceb3fe1a85ec53ULL;
    x ^= x >> 33;
    return x;
}

} // namespace

cplx sum_direct(const AnalyticPhase& f)
{
    const u64 q = f.modulus.q();
    const RootTable table(q);
    std::vector<std::uint32_t> buf;
    buf.reserve(kChunk);
    cplx acc = 0.0;
    for (u64 x = 0; x < q; ++x) {
        if (!f.domain.contains(x)) continue;
        buf.push_back(static_cast<std::uint32_t>(f.f(x) % q));
        if (buf.size() == kChunk) {
            acc += simd::root_sum(buf, table);
            buf.clear();
        }
    }
    acc += simd::root_sum(buf, table);
    return acc;
}

cplx sum_localized(const AnalyticPhase& f, unsigned ell)
{
    require_ready(f, "sum_localized");
    const unsigned n = f.modulus.n();
    if (ell < 1 || ell > n) throw std::invalid_argument("sum_localized: need 1 <= ell <= n");
    if (f.domain.lambda() > ell)
        throw HypothesisError("sum_localized: domain is not invariant under translation by p^ell");
    const u64 q = f.modulus.q();
    const u64 crit = f.modulus.power(n - ell);
    const RootTable table(q);
    std::vector<std::uint32_t> buf;
    cplx acc = 0.0;
    for (u64 x = 0; x < q; ++x) {
        if (!f.domain.contains(x) || f.d1(x) % crit != 0) continue;
        buf.push_back(static_cast<std::uint32_t>(f.f(x) % q));
        if (buf.size() == kChunk) {
            acc += simd::root_sum(buf, table);
            buf.clear();
        }
    }
    acc += simd::root_sum(buf, table);
    return acc;
}

StationaryData stationary_points(const AnalyticPhase& f, const StationaryOptions& opts)
{
    const PrimePowerModulus& m = f.modulus;
    const u64 p = m.p(), q = m.q(), H = m.rt_star();
    const unsigned n = m.n(), h = n / 2;
    if (n < 2) throw std::invalid_argument("stationary_points: need n >= 2");
    if (f.domain.lambda() > h)
        throw HypothesisError("stationary_points: domain classes are finer than rt_*(q)");
    const ModRing ring(q);

    std::vector<u64> classes;
    if (opts.full_scan) {
        std::vector<u64> count(H, 0);
        for (u64 x = 0; x < q; ++x)
            if (f.domain.contains(x) && f.d1(x) % H == 0) ++count[x % H];
        const u64 lifts = q / H;
        for (u64 c = 0; c < H; ++c) {
            if (count[c] == 0) continue;
            if (count[c] != lifts)
                throw HypothesisError("stationary set of '" + f.name + "' is not invariant under translation by rt_*");
            classes.push_back(c);
        }
    } else {
        for (u64 c = 0; c < H; ++c)
            if (f.domain.contains(c) && f.d1(c) % H == 0) classes.push_back(c);
    }

    StationaryData data{m, {}};
    const u64 lifts = q / H;
    for (u64 c : classes) {
        u64 x0 = c;
        if (opts.representative_seed != 0) x0 = ring.add(c, ring.mul(mix(c ^ opts.representative_seed) % lifts, H));
        u64 d2 = f.d2(x0) % q;
        const bool singular = d2 % p == 0;
        if (n % 2 == 1 && !singular && opts.refine) {
            // Exactly one t mod p makes f'(x0 + t H) vanish mod p^ceil(n/2).
            const u64 target = H * p;
            bool found = false;
            for (u64 t = 0; t < p; ++t) {
                const u64 x = ring.add(x0, ring.mul(t, H));
                if (f.d1(x) % target == 0) {
                    x0 = x;
                    found = true;
                    break;
                }
            }
            if (!found)
                throw HypothesisError("refinement failed for '" + f.name + "': no root of f' mod p^ceil(n/2) in class");
            d2 = f.d2(x0) % q;
        }
        const u64 d1 = f.d1(x0) % q;
        if (d1 % H != 0) throw HypothesisError("stationary class of '" + f.name + "' has a non-stationary member");
        const u64 d1_circ = (d1 / H) % p;
        data.points.push_back({x0, f.f(x0) % q, d1_circ, d2, singular, delta_factor(p, n, d1_circ, d2)});
    }
    return data;
}

cplx sum_stationary(const AnalyticPhase& f, const StationaryOptions& opts)
{
    require_ready(f, "sum_stationary");
    const StationaryData data = stationary_points(f, opts);
    const u64 p = f.modulus.p(), q = f.modulus.q();
    const RootTable table(q);
    cplx acc = 0.0;
    for (const auto& pt : data.points) acc += table(pt.f_value) * pt.delta.value(p);
    return std::pow(static_cast<double>(p), 0.5 * f.modulus.n()) * acc;
}

HypothesisReport check_hypotheses(const AnalyticPhase& f, u64 max_pairs)
{
    const PrimePowerModulus& m = f.modulus;
    const u64 q = m.q();
    const unsigned n = m.n(), h = n / 2, ell = (n + 1) / 2;
    const u64 step_l = m.power(ell), step_h = m.power(h);
    const ModRing ring(q);
    const u64 inv2 = ring.inv(2);
    HypothesisReport rep;

    auto fail = [&](const std::string& what, u64 x0, u64 t) {
        if (rep.failures++ == 0) {
            std::ostringstream os;
            os << f.name << ": " << what << " at x0=" << x0 << " t=" << t;
            rep.first_failure = os.str();
        }
    };

    const u64 t_count_l = q / step_l;
    const u64 t_count_h = q / step_h;
    const u64 total = q * t_count_l;
    const u64 stride = total <= max_pairs ? 1 : (total + max_pairs - 1) / max_pairs;
    rep.exhaustive = stride == 1;
    // An odd stride coprime to p walks through every residue class mod p.
    const u64 walk = stride == 1 ? 1 : (stride % f.modulus.p() == 0 ? stride + 1 : stride) | 1;

    for (u64 x0 = 0; x0 < q; x0 += walk) {
        if (!f.domain.contains(x0)) continue;
        const u64 fx = f.f(x0) % q, d1 = f.d1(x0) % q, d2 = f.d2(x0) % q;
        for (u64 t = 0; t < t_count_l; ++t) {
            const u64 x = ring.add(x0, ring.mul(t, step_l));
            ++rep.pairs_checked;
            if (f.f(x) % q != ring.add(fx, ring.mul(d1, ring.mul(t, step_l))))
                fail("first-order expansion at step p^ceil(n/2) fails", x0, t);
        }
        if (n >= 2 && d1 % step_h == 0) {
            for (u64 t = 0; t < t_count_h; ++t) {
                const u64 th = ring.mul(t, step_h);
                const u64 x = ring.add(x0, th);
                ++rep.pairs_checked;
                const u64 quad = ring.mul(ring.mul(d2, ring.mul(th, th)), inv2);
                if (f.f(x) % q != ring.add(ring.add(fx, ring.mul(d1, th)), quad))
                    fail("second-order expansion at stationary point fails", x0, t);
            }
        }
    }
    return rep;
}

UnitInverter::UnitInverter(const PrimePowerModulus& m) : ring_(m.q()), p_(m.p()), steps_(0), inv_mod_p_(m.p(), 0)
{
    const ModRing rp(p_);
    for (u64 a = 1; a < p_; ++a) inv_mod_p_[a] = rp.inv(a);
    for (unsigned prec = 1; prec < m.n(); prec *= 2) ++steps_;
}

u64 UnitInverter::operator()(u64 x) const
{
    x = ring_.reduce(x);
    u64 y = inv_mod_p_[x % p_];
    if (y == 0) throw DomainError("UnitInverter: not a unit");
    for (unsigned i = 0; i < steps_; ++i) y = ring_.mul(y, ring_.sub(2, ring_.mul(x, y)));
    return y;
}

AnalyticPhase linear_phase(const PrimePowerModulus& m, i64 c, i64 d)
{
    const ModRing ring(m.q());
    const u64 cc = ring.reduce_signed(c), dd = ring.reduce_signed(d);
    std::ostringstream name;
    name << "linear(" << c << "x+" << d << ") mod " << m.p() << "^" << m.n();
    return {name.str(),
            m,
            [ring, cc, dd](u64 x) { return ring.add(ring.mul(cc, x), dd); },
            [cc](u64) { return cc; },
            [](u64) { return u64{0}; },
            PhaseDomain::units(m.p()),
            1,
            true};
}

AnalyticPhase quadratic_phase(const PrimePowerModulus& m, i64 a, i64 b, i64 c)
{
    const ModRing ring(m.q());
    const u64 aa = ring.reduce_signed(a), bb = ring.reduce_signed(b), cc = ring.reduce_signed(c);
    std::ostringstream name;
    name << "quadratic(" << a << "x^2+" << b << "x+" << c << ") mod " << m.p() << "^" << m.n();
    return {name.str(),
            m,
            [ring, aa, bb, cc](u64 x) { return ring.add(ring.mul(ring.add(ring.mul(aa, x), bb), x), cc); },
            [ring, aa, bb](u64 x) { return ring.add(ring.mul(ring.add(aa, aa), x), bb); },
            [ring, aa](u64) { return ring.add(aa, aa); },
            PhaseDomain::units(m.p()),
            1,
            true};
}

AnalyticPhase kloosterman_phase(const PrimePowerModulus& m, i64 c, i64 mm)
{
    const ModRing ring(m.q());
    const u64 cc = ring.reduce_signed(c), m1 = ring.reduce_signed(mm);
    const UnitInverter inv(m);
    std::ostringstream name;
    name << "kloosterman(" << c << "x+" << mm << "/x) mod " << m.p() << "^" << m.n();
    return {name.str(),
            m,
            [ring, cc, m1, inv](u64 x) { return ring.add(ring.mul(cc, x), ring.mul(m1, inv(x))); },
            [ring, cc, m1, inv](u64 x) {
                const u64 y = inv(x);
                return ring.sub(cc, ring.mul(m1, ring.mul(y, y)));
            },
            [ring, m1, inv](u64 x) {
                const u64 y = inv(x);
                return ring.mul(ring.add(m1, m1), ring.mul(y, ring.mul(y, y)));
            },
            PhaseDomain::units(m.p()),
            1,
            true};
}

AnalyticPhase postnikov_log_phase(const PrimePowerModulus& m, i64 A, unsigned s, i64 mm)
{
    if (s < 1) throw std::invalid_argument("postnikov_log_phase: shift exponent must be >= 1");
    const u64 p = m.p();
    const unsigned n = m.n();
    const ModRing ring(m.q());
    const u64 aa = ring.reduce_signed(A), m1 = ring.reduce_signed(mm);
    const u64 ps = ipow(p, s);
    const u64 wide = ipow(p, n + s);
    const UnitInverter inv(m);
    std::ostringstream name;
    name << "postnikov_log(A=" << A << ",s=" << s << ",m=" << mm << ") mod " << p << "^" << n;
    auto log_part = [p, n, s, ps, wide](u64 x) {
        // p^-s log_p(1 + p^s x) mod p^n needs the logarithm mod p^(n+s).
        const u64 arg = static_cast<u64>((static_cast<u128>(ps) * x + 1) % wide);
        return plog(PadicResidue(p, n + s, arg), n + s).shift_down(s).value();
    };
    return {name.str(),
            m,
            [ring, aa, m1, inv, log_part](u64 x) { return ring.add(ring.mul(aa, log_part(x)), ring.mul(m1, inv(x))); },
            [ring, aa, m1, ps, inv](u64 x) {
                const u64 y = inv(x);
                const u64 u = inv(ring.add(1, ring.mul(ps % ring.modulus(), x)));
                return ring.sub(ring.mul(aa, u), ring.mul(m1, ring.mul(y, y)));
            },
            [ring, aa, m1, ps, inv](u64 x) {
                const u64 y = inv(x);
                const u64 u = inv(ring.add(1, ring.mul(ps % ring.modulus(), x)));
                const u64 first = ring.neg(ring.mul(ring.mul(aa, ps % ring.modulus()), ring.mul(u, u)));
                return ring.add(first, ring.mul(ring.add(m1, m1), ring.mul(y, ring.mul(y, y))));
            },
            PhaseDomain::units(p),
            1,
            true};
}

std::vector<AnalyticPhase> bundled_phase_suite()
{
    std::vector<AnalyticPhase> suite;
    const u64 primes[] = {3, 5, 7, 11};
    for (u64 p : primes) {
        for (unsigned n = 2; n <= 8; ++n) {
            const u64 q = ipow(p, n);
            const PrimePowerModulus m(p, n);
            const i64 pp = static_cast<i64>(p);
            // Cheap families at every size.
            suite.push_back(linear_phase(m, 1, 0));
            suite.push_back(linear_phase(m, static_cast<i64>(m.rt_ceil()) * 2, 1));
            suite.push_back(quadratic_phase(m, 1, 3, 0));
            suite.push_back(quadratic_phase(m, 3 * pp, 2 * pp, 1));
            if (q <= 25'000'000) {
                suite.push_back(kloosterman_phase(m, 1, 1));
                suite.push_back(kloosterman_phase(m, 1, 2));
                suite.push_back(kloosterman_phase(m, 3, 5 * pp + 2));
            } else {
                suite.push_back(kloosterman_phase(m, 1, 2));
            }
            if (q <= 3'000'000) {
                suite.push_back(postnikov_log_phase(m, 1, 1, 1));
                suite.push_back(postnikov_log_phase(m, 2, 1, 3));
                suite.push_back(postnikov_log_phase(m, 1, 2, 2));
            }
        }
    }
    return suite;
}

} // namespace pstat
