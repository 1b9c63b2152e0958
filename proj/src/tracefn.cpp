#include "pstat/tracefn.hpp"

#include "pstat/fft.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <stdexcept>

namespace pstat {

namespace {

struct Dims {
    u64 p, q, qt, shift, phi, step;
    unsigned n, t;
};

Dims dims(const DirichletCharacter& chi, unsigned t)
{
    const u64 p = chi.table().p();
    const unsigned n = chi.table().n();
    if (t >= n) throw std::invalid_argument("trace sum: qt must be a proper divisor of q");
    const u64 qt = ipow(p, t);
    const u64 phi = chi.table().phi();
    return {p, chi.q(), qt, chi.q() / qt, phi, phi / qt, n, t};
}

Valuation ord_mod(u64 p, u64 x, unsigned cap)
{
    const Valuation v = ordp(p, x);
    if (v.is_infinite() || v.value() > static_cast<int>(cap)) return Valuation(static_cast<int>(cap));
    return v;
}

} // namespace

// ---------------------------------------------------------------- direct sums

cplx kchi_direct(const DirichletCharacter& chi, i64 a, i64 b, unsigned t)
{
    const Dims d = dims(chi, t);
    const u64 am = ModRing(d.qt).reduce_signed(a);
    const u64 bP = static_cast<u64>(static_cast<u128>(ModRing(d.q).reduce_signed(b)) * d.shift % d.q);
    const RootTable table(d.phi);
    std::vector<std::uint32_t> idx;
    idx.reserve(d.qt);
    for (u64 r = 1; r < d.qt; ++r) {
        if (r % d.p == 0) continue;
        const u64 x = (r + bP) % d.q;
        const u64 ph = (chi.phase(x) + d.phi - chi.phase(r) + am * r % d.qt * d.step) % d.phi;
        idx.push_back(static_cast<std::uint32_t>(ph));
    }
    return simd::root_sum(idx, table) / std::sqrt(static_cast<double>(d.qt));
}

cplx kchi_m_direct(const DirichletCharacter& chi, i64 m, unsigned t)
{
    const Dims d = dims(chi, t);
    const ModRing rt(d.qt);
    const u64 mm = rt.reduce_signed(m);
    const RootTable table(d.phi);
    std::vector<std::uint32_t> idx;
    idx.reserve(d.qt);
    for (u64 r = 1; r < d.qt; ++r) {
        if (r % d.p == 0) continue;
        const u64 x = (1 + d.shift * r) % d.q;
        const u64 ph = (chi.phase(x) + rt.mul(mm, rt.inv(r)) * d.step) % d.phi;
        idx.push_back(static_cast<std::uint32_t>(ph));
    }
    return simd::root_sum(idx, table) / std::sqrt(static_cast<double>(d.qt));
}

std::vector<cplx> kchi_direct_all_j(const DirichletCharacter& chi, i64 b, unsigned t)
{
    const Dims d = dims(chi, t);
    const u64 bP = static_cast<u64>(static_cast<u128>(ModRing(d.q).reduce_signed(b)) * d.shift % d.q);
    const RootTable table(d.phi);
    std::vector<cplx> c(d.qt, 0.0);
    for (u64 r = 1; r < d.qt; ++r)
        if (r % d.p != 0) c[r] = table((chi.phase((r + bP) % d.q) + d.phi - chi.phase(r)) % d.phi);
    std::vector<cplx> out = dft(c, +1);
    const double norm = 1.0 / std::sqrt(static_cast<double>(d.qt));
    for (auto& z : out) z *= norm;
    return out;
}

std::vector<cplx> kchi_m_direct_all(const DirichletCharacter& chi, unsigned t)
{
    const Dims d = dims(chi, t);
    const UnitInverter inv(PrimePowerModulus(d.p, t));
    const RootTable table(d.phi);
    // With u = rbar the sum is sum_u chi(1 + (q/qt) ubar) e(m u / qt).
    std::vector<cplx> c(d.qt, 0.0);
    for (u64 u = 1; u < d.qt; ++u)
        if (u % d.p != 0) c[u] = table(chi.phase((1 + d.shift * inv(u)) % d.q));
    std::vector<cplx> out = dft(c, +1);
    const double norm = 1.0 / std::sqrt(static_cast<double>(d.qt));
    for (auto& z : out) z *= norm;
    return out;
}

KchiDirectSweep::KchiDirectSweep(std::shared_ptr<const UnitGroupTable> table, unsigned t)
    : table_(std::move(table)), qt_(0), roots_(table_->phi())
{
    const DirichletCharacter probe(table_, 0);
    const Dims d = dims(probe, t);
    qt_ = d.qt;
    const UnitInverter inv(PrimePowerModulus(d.p, t));
    dlog_.assign(d.qt, 0);
    for (u64 u = 1; u < d.qt; ++u)
        if (u % d.p != 0) dlog_[u] = table_->dlog((1 + d.shift * inv(u)) % d.q);
}

std::vector<cplx> KchiDirectSweep::operator()(u64 index) const
{
    const u64 phi = table_->phi();
    const u64 p = table_->p();
    std::vector<cplx> c(qt_, 0.0);
    for (u64 u = 1; u < qt_; ++u)
        if (u % p != 0) c[u] = roots_(static_cast<u64>(static_cast<u128>(index % phi) * dlog_[u] % phi));
    std::vector<cplx> out = dft(c, +1);
    const double norm = 1.0 / std::sqrt(static_cast<double>(qt_));
    for (auto& z : out) z *= norm;
    return out;
}

// ------------------------------------------------------------------ reduction

std::string to_string(KchiCase c)
{
    switch (c) {
    case KchiCase::reduce: return "reduce";
    case KchiCase::full: return "full";
    case KchiCase::minus_over_p: return "minus_over_p";
    case KchiCase::zero: return "zero";
    }
    return "?";
}

KchiReduction kchi_reduce(u64 p, i64 j, i64 h, unsigned t, unsigned n)
{
    if (t >= n || t == 0) throw std::invalid_argument("kchi_reduce: need 1 <= t < n");
    const u64 qt = ipow(p, t);
    const ModRing r(qt);
    const u64 jm = r.reduce_signed(j), hm = r.reduce_signed(h);
    KchiReduction out;
    out.eta_j = static_cast<unsigned>(ord_mod(p, jm, t).value());
    out.eta_h = static_cast<unsigned>(ord_mod(p, hm, t).value());
    out.eta = std::min(out.eta_j, out.eta_h);
    const double root = std::sqrt(static_cast<double>(qt));
    if (out.eta_j == out.eta_h && out.eta != t) {
        out.kind = KchiCase::reduce;
        out.t_reduced = t - out.eta;
        const u64 pe = ipow(p, out.eta);
        const ModRing rr(ipow(p, out.t_reduced));
        out.m_reduced = rr.mul(rr.reduce(jm / pe), rr.reduce(hm / pe));
        out.scale = std::pow(static_cast<double>(p), 0.5 * out.eta);
    } else if (out.eta_j == t && out.eta_h == t) {
        out.kind = KchiCase::full;
        out.value = root * (1.0 - 1.0 / static_cast<double>(p));
    } else if (out.eta_j + out.eta_h == 2 * t - 1) {
        out.kind = KchiCase::minus_over_p;
        out.value = -root / static_cast<double>(p);
    } else {
        out.kind = KchiCase::zero;
    }
    return out;
}

cplx kchi_via_reduction(const DirichletCharacter& chi, i64 j, i64 h, unsigned t)
{
    const KchiReduction red = kchi_reduce(chi.table().p(), j, h, t, chi.table().n());
    if (red.kind == KchiCase::reduce)
        return red.scale * kchi_m_direct(chi, static_cast<i64>(red.m_reduced), red.t_reduced);
    return red.value;
}

// ------------------------------------------------------------------ closed form

cplx UnitPhase::value() const
{
    if (zero) return 0.0;
    static constexpr cplx quarters[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
    return quarters[quarter % 4] * expi(static_cast<double>(k) / static_cast<double>(modulus));
}

UnitPhase UnitPhase::conj() const
{
    if (zero) return *this;
    return {false, (4 - quarter % 4) % 4, (modulus - k % modulus) % modulus, modulus};
}

UnitPhase UnitPhase::operator*(const UnitPhase& o) const
{
    if (zero || o.zero) return UnitPhase{true, 0, 0, modulus};
    if (modulus != o.modulus) throw std::invalid_argument("UnitPhase: moduli differ");
    return {false, (quarter + o.quarter) % 4, (k + o.k) % modulus, modulus};
}

OscillatorySplit kchi_closed(u64 p, unsigned n, u64 A, i64 m, unsigned t, const SqrtBranch& branch)
{
    if (t < 2) throw std::invalid_argument("kchi_closed: needs qt >= p^2");
    if (t >= n) throw std::invalid_argument("kchi_closed: qt must be a proper divisor of q");
    if (ordp_signed(p, m) != Valuation(0)) throw std::invalid_argument("kchi_closed: needs (m, qt) = 1");
    if (A % p == 0) throw DomainError("kchi_closed: A must be a unit");
    const u64 qt = ipow(p, t);
    const unsigned w = t + 2;
    const ModRing R(ipow(p, w));
    const u64 P = ipow(p, n - t);

    OscillatorySplit out;
    out.p = p;
    out.n = n;
    out.t = t;
    out.A = A;
    out.m = ModRing(qt).reduce_signed(m);
    out.kplus.modulus = out.kminus.modulus = qt;

    // A is known mod p^(n-1) and qt | p^(n-1), so any lift gives the same sum.
    const u64 mw = R.reduce_signed(m);
    const u64 mu = R.mul(mw, R.inv(R.reduce(A)));
    out.mu = mu % qt;
    if (legendre(mu, p) != 1) return out;
    out.supported = true;

    const u64 Pw = R.reduce(P);
    const u64 D = R.add(R.mul(R.mul(mu, mu), R.mul(Pw, Pw)), R.mul(4, mu));
    const u64 root = psqrt(PadicResidue(p, w, D), branch, w).value();
    const u64 inv2 = R.inv(2);
    const u64 muP = R.mul(mu, Pw);
    const u64 s[2] = {R.mul(R.add(muP, root), inv2), R.mul(R.sub(muP, root), inv2)};

    const ModRing wide(ipow(p, n + 2));
    for (int i = 0; i < 2; ++i) {
        const u64 si = s[i];
        const u64 arg = wide.add(1, wide.mul(wide.reduce(P), si));
        const u64 lg = plog(PadicResidue(p, n + 2, arg), n + 2).shift_down(n - t).value();
        const u64 sinv = R.inv(si);
        const u64 g = R.add(R.reduce(lg), R.mul(mu, sinv));
        // theta''(s) = -A P / (1 + P s)^2 + 2 m / s^3.
        const u64 onePs = R.inv(R.add(1, R.mul(Pw, si)));
        const u64 d2 = R.add(R.neg(R.mul(R.mul(R.reduce(A), Pw), R.mul(onePs, onePs))),
                             R.mul(R.add(mw, mw), R.mul(sinv, R.mul(sinv, sinv))));
        const DeltaFactor delta = delta_factor(p, t, 0, d2 % qt);
        const UnitPhase k{false, delta.quarter % 4, ModRing(qt).mul(A % qt, g % qt), qt};
        if (i == 0) {
            out.s_plus = si % qt;
            out.g_plus = g % qt;
            out.delta_plus = delta;
            out.kplus = k;
        } else {
            out.s_minus = si % qt;
            out.g_minus = g % qt;
            out.delta_minus = delta;
            out.kminus = k;
        }
    }
    return out;
}

OscillatorySplit kchi_closed(const DirichletCharacter& chi, i64 m, unsigned t)
{
    return kchi_closed(chi.table().p(), chi.table().n(), chi.postnikov_A(), m, t, SqrtBranch(chi.table().p()));
}

KchiClosedTables::KchiClosedTables(u64 p, unsigned n, unsigned t)
    : p_(p), n_(n), t_(t), qt_(ipow(p, t)), shift_(ipow(p, n - t)), ring_(qt_), inv_(PrimePowerModulus(p, t)),
      p3_(p % 4 == 3), roots_(qt_)
{
    if (t < 2 || t >= n) throw std::invalid_argument("KchiClosedTables: need 2 <= t < n");
    inv_table_.assign(qt_, 0);
    for (u64 r = 1; r < qt_; ++r)
        if (r % p) inv_table_[r] = static_cast<std::uint32_t>(inv_(r));
    legendre_.resize(p);
    for (u64 x = 0; x < p; ++x) legendre_[x] = legendre(x, p);
    const SqrtBranch branch(p);
    sqrt_.assign(qt_, 0);
    for (u64 r = 1; r < qt_; ++r) {
        if (r % p == 0) continue;
        const u64 sq = ring_.mul(r, r);
        if (branch(sq % p) == r % p) sqrt_[sq] = static_cast<std::uint32_t>(r);
    }
    const std::vector<u64> L = plog_table(p, n);
    const u64 q = ipow(p, n);
    log_.resize(qt_);
    for (u64 s = 0; s < qt_; ++s) {
        const u64 k = (shift_ / p) * s % (q / p);
        log_[s] = L[k] / shift_;
    }
}

std::pair<UnitPhase, UnitPhase> KchiClosedTables::eval(u64 A, u64 m) const
{
    const ModRing& R = ring_;
    UnitPhase plus{true, 0, 0, qt_}, minus{true, 0, 0, qt_};
    A %= qt_;
    m %= qt_;
    if (m % p_ == 0 || A % p_ == 0) return {plus, minus};
    const u64 mu = R.mul(m, inv_(A));
    const u64 P = shift_ % qt_;
    const u64 D = R.mul(mu, R.add(R.mul(mu, R.mul(P, P)), 4));
    const u64 root = sqrt_[D];
    if (root == 0) return {plus, minus};
    const u64 inv2 = (qt_ + 1) / 2;
    const u64 muP = R.mul(mu, P);
    const u64 s[2] = {R.mul(R.add(muP, root), inv2), R.mul(R.sub(muP, root), inv2)};
    UnitPhase* dst[2] = {&plus, &minus};
    for (int i = 0; i < 2; ++i) {
        const u64 g = R.add(log_[s[i]], R.mul(mu, inv_(s[i])));
        unsigned quarter = 0;
        if (t_ % 2 == 1) {
            // Delta = eps(p) (2 theta''/p) and theta''(s) == 2 m s^-3, so the sign is (m s / p).
            quarter = (p3_ ? 1u : 0u) + (legendre(m % p_ * (s[i] % p_), p_) == -1 ? 2u : 0u);
        }
        *dst[i] = UnitPhase{false, quarter % 4, R.mul(A, g), qt_};
    }
    return {plus, minus};
}

std::vector<cplx> KchiClosedTables::values(u64 A) const
{
    static constexpr cplx quarters[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
    const ModRing& R = ring_;
    std::vector<cplx> out(qt_, 0.0);
    A %= qt_;
    if (A % p_ == 0) return out;
    const u64 a_inv = inv_table_[A];
    const u64 P = shift_ % qt_;
    const u64 PP = R.mul(P, P);
    const u64 inv2 = (qt_ + 1) / 2;
    for (u64 m = 1; m < qt_; ++m) {
        if (m % p_ == 0) continue;
        const u64 mu = R.mul(m, a_inv);
        const u64 root = sqrt_[R.mul(mu, R.add(R.mul(mu, PP), 4))];
        if (root == 0) continue;
        const u64 muP = R.mul(mu, P);
        const u64 s[2] = {R.mul(R.add(muP, root), inv2), R.mul(R.sub(muP, root), inv2)};
        cplx z = 0.0;
        for (u64 si : s) {
            const u64 g = R.add(log_[si], R.mul(mu, inv_table_[si]));
            unsigned quarter = 0;
            if (t_ % 2 == 1) quarter = (p3_ ? 1u : 0u) + (legendre_[m % p_ * (si % p_) % p_] == -1 ? 2u : 0u);
            z += quarters[quarter % 4] * roots_(R.mul(A, g));
        }
        out[m] = z;
    }
    return out;
}

bool KchiClosedTables::check_stationary(u64 A, u64 m) const
{
    const ModRing& R = ring_;
    A %= qt_;
    m %= qt_;
    const u64 mu = R.mul(m, inv_(A));
    const u64 P = shift_ % qt_;
    const u64 root = sqrt_[R.mul(mu, R.add(R.mul(mu, R.mul(P, P)), 4))];
    if (root == 0) return legendre(mu, p_) != 1;
    const u64 inv2 = (qt_ + 1) / 2;
    const u64 muP = R.mul(mu, P);
    const u64 sp = R.mul(R.add(muP, root), inv2), sm = R.mul(R.sub(muP, root), inv2);
    // theta'(s) = A / (1 + P s) - m / s^2 vanishes iff A s^2 = m (1 + P s).
    auto stationary = [&](u64 s) { return R.mul(A, R.mul(s, s)) == R.mul(m, R.add(1, R.mul(P, s))); };
    return stationary(sp) && stationary(sm) && R.mul(sp, sm) == R.neg(mu) && R.add(sp, sm) == muP;
}

// -------------------------------------------------------------- sums of products

u64 product_modulus(u64 p, unsigned n, u64 A, u64 A2, unsigned t)
{
    const u64 pn1 = ipow(p, n - 1);
    const u64 d = (A % pn1 + pn1 - A2 % pn1) % pn1;
    const unsigned e = static_cast<unsigned>(ord_mod(p, d, n - 1).value());
    return ipow(p, t - std::min(t, e));
}

std::vector<UnitPhase> product_table(const KchiClosedTables& tab, u64 A, u64 A2, int sign)
{
    std::vector<UnitPhase> out(tab.qt(), UnitPhase{true, 0, 0, tab.qt()});
    for (u64 m = 1; m < tab.qt(); ++m) {
        if (m % tab.p() == 0) continue;
        const auto k1 = tab.eval(A, m), k2 = tab.eval(A2, m);
        const UnitPhase& a = sign > 0 ? k1.first : k1.second;
        const UnitPhase& b = sign > 0 ? k2.first : k2.second;
        out[m] = a * b.conj();
    }
    return out;
}

PeriodicityReport periodicity_check(const KchiClosedTables& tab, u64 A, u64 A2, int sign)
{
    const std::vector<UnitPhase> f = product_table(tab, A, A2, sign);
    const u64 qt = tab.qt();
    auto is_period = [&](u64 d) {
        for (u64 m = 0; m < qt; ++m)
            if (!(f[m] == f[(m + d) % qt])) return false;
        return true;
    };
    PeriodicityReport rep;
    rep.claimed = product_modulus(tab.p(), tab.n(), A, A2, tab.t());
    for (u64 d = 1; d <= qt; d *= tab.p())
        if (is_period(d)) {
            rep.smallest = d;
            break;
        }
    // For Q = 1 the product is the indicator of a class mod p.
    rep.claimed_ok = is_period(std::max(rep.claimed, tab.p()));
    return rep;
}

std::vector<cplx> product_sums(const KchiClosedTables& tab, u64 A, u64 A2, int sign)
{
    const u64 Q = product_modulus(tab.p(), tab.n(), A, A2, tab.t());
    if (Q == 1) {
        const auto k1 = tab.eval(A, 1), k2 = tab.eval(A2, 1);
        const UnitPhase v = (sign > 0 ? k1.first : k1.second) * (sign > 0 ? k2.first : k2.second).conj();
        return {v.value()};
    }
    std::vector<cplx> f(Q, 0.0);
    for (u64 u = 1; u < Q; ++u) {
        if (u % tab.p() == 0) continue;
        const auto k1 = tab.eval(A, u), k2 = tab.eval(A2, u);
        f[u] = ((sign > 0 ? k1.first : k1.second) * (sign > 0 ? k2.first : k2.second).conj()).value();
    }
    return dft(f, -1);
}

cplx product_sum(const DirichletCharacter& chi, const DirichletCharacter& chi2, unsigned t, i64 v, int sign)
{
    if (!chi.primitive() || !chi2.primitive()) throw DomainError("product_sum: characters must be primitive");
    const KchiClosedTables tab(chi.table().p(), chi.table().n(), t);
    const u64 A = chi.postnikov_A(), A2 = chi2.postnikov_A();
    const u64 Q = product_modulus(tab.p(), tab.n(), A, A2, t);
    if (Q == 1) {
        const u64 m = ModRing(tab.qt()).reduce_signed(v);
        const auto k1 = tab.eval(A, m), k2 = tab.eval(A2, m);
        return ((sign > 0 ? k1.first : k1.second) * (sign > 0 ? k2.first : k2.second).conj()).value();
    }
    const std::vector<cplx> all = product_sums(tab, A, A2, sign);
    return all[ModRing(Q).reduce_signed(v)];
}

// ------------------------------------------------------------------ completion

CompletionBound complete_incomplete_sum(std::span<const cplx> f, u64 M)
{
    const u64 Q = f.size();
    if (Q == 0) throw std::invalid_argument("complete_incomplete_sum: empty table");
    CompletionBound out{0.0, 0.0};
    for (u64 m = 1; m <= M; ++m) out.partial += f[m % Q];
    const std::vector<cplx> fhat = dft(std::vector<cplx>(f.begin(), f.end()), -1);
    double acc = 0.0;
    for (u64 v = 0; v < Q; ++v) {
        const double frac = static_cast<double>(std::min(v, Q - v)) / static_cast<double>(Q);
        const double w = v == 0 ? static_cast<double>(M) : std::min(static_cast<double>(M), 1.0 / frac);
        acc += std::abs(fhat[v]) * w;
    }
    out.bound = acc / static_cast<double>(Q);
    return out;
}

// -------------------------------------------------------------------- output

void write_trace_csv(std::ostream& os, std::span<const TraceRow> rows)
{
    os << "p,n,qtilde,arg,case,abs_value,ratio\n";
    os << std::setprecision(12);
    for (const auto& r : rows)
        os << r.p << ',' << r.n << ',' << r.qt << ',' << r.arg << ',' << r.kind << ',' << r.abs_value << ',' << r.ratio
           << '\n';
}

void write_trace_json(std::ostream& os, std::span<const TraceRow> rows)
{
    os << std::setprecision(12);
    for (const auto& r : rows)
        os << "{\"p\":" << r.p << ",\"n\":" << r.n << ",\"qtilde\":" << r.qt << ",\"arg\":" << r.arg << ",\"case\":\""
           << r.kind << "\",\"abs_value\":" << r.abs_value << ",\"ratio\":" << r.ratio << "}\n";
}

} // namespace pstat
