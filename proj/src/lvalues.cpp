#include "pstat/lvalues.hpp"

#include "pstat/fft.hpp"
#include "pstat/parallel.hpp"

#include "json.hpp"

#include <boost/math/special_functions/bernoulli.hpp>
#include <boost/math/special_functions/factorials.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <numbers>
#include <ostream>
#include <sstream>

namespace pstat {

namespace {

constexpr int kShift = 30;
constexpr int kBernoulliTerms = 10;

const std::array<double, kBernoulliTerms>& em_coefficients()
{
    // B_2j / (2j)! times the rising factorial (1/2)(3/2)...(1/2 + 2j - 2).
    static const std::array<double, kBernoulliTerms> c = [] {
        std::array<double, kBernoulliTerms> out{};
        double rising = 0.5;
        for (int j = 1; j <= kBernoulliTerms; ++j) {
            out[j - 1] = boost::math::bernoulli_b2n<double>(j) / boost::math::factorial<double>(2 * j) * rising;
            rising *= (0.5 + 2 * j - 1) * (0.5 + 2 * j);
        }
        return out;
    }();
    return c;
}

unsigned exponent_of(u64 p, u64 x, const char* what)
{
    unsigned e = 0;
    u64 y = x;
    while (y > 1 && y % p == 0) {
        y /= p;
        ++e;
    }
    if (y != 1 || x == 0) throw DomainError(std::string(what) + " must be a power of p");
    return e;
}

/// q^-1/2 zeta(1/2, g^k / q) in dlog order.
std::shared_ptr<const std::vector<double>> hurwitz_units(const UnitGroupTable& t)
{
    static std::mutex mu;
    static std::map<std::pair<u64, unsigned>, std::shared_ptr<const std::vector<double>>> memo;
    const auto key = std::make_pair(t.p(), t.n());
    {
        std::lock_guard lock(mu);
        if (auto it = memo.find(key); it != memo.end()) return it->second;
    }
    auto z = std::make_shared<std::vector<double>>(t.phi());
    const double q = static_cast<double>(t.q());
    const double scale = 1.0 / std::sqrt(q);
    for (u64 k = 0; k < t.phi(); ++k) (*z)[k] = scale * hurwitz_zeta_half(static_cast<double>(t.power(k)) / q);
    std::lock_guard lock(mu);
    return memo.emplace(key, std::move(z)).first->second;
}

/// Index b mod phi(q2) of a character mod q2 to its lift inside the index group mod phi(q).
std::vector<u64> lift_indices(const std::shared_ptr<const UnitGroupTable>& big, unsigned n2)
{
    const auto small = UnitGroupTable::get(big->p(), n2);
    std::vector<u64> out(small->phi());
    for (u64 b = 0; b < small->phi(); ++b) out[b] = DirichletCharacter(small, b).lift_to(big).index();
    return out;
}

struct SplitMix {
    u64 state;
    u64 operator()()
    {
        u64 z = (state += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }
    u64 below(u64 m) { return (*this)() % m; }
};

} // namespace

// ------------------------------------------------------------------ Hurwitz

double hurwitz_zeta_half(double x)
{
    if (!(x > 0)) throw DomainError("hurwitz_zeta_half: x must be positive");
    double sum = 0.0;
    for (int k = 0; k < kShift; ++k) sum += 1.0 / std::sqrt(x + k);
    const double y = x + kShift;
    const double ry = std::sqrt(y);
    sum += -2.0 * ry + 0.5 / ry;
    double power = 1.0 / (ry * y);  // y^(-1/2 - 1)
    const double y2 = 1.0 / (y * y);
    for (double c : em_coefficients()) {
        sum += c * power;
        power *= y2;
    }
    return sum;
}

double riemann_zeta_half()
{
    static const double z = hurwitz_zeta_half(1.0);
    return z;
}

// ----------------------------------------------------------------- L-values

cplx lvalue_central(const DirichletCharacter& chi)
{
    if (!chi.primitive()) throw DomainError("lvalue_central: character is not primitive");
    const UnitGroupTable& t = chi.table();
    const auto z = hurwitz_units(t);
    const u64 phi = t.phi();
    std::vector<std::uint32_t> idx(phi);
    u64 acc = 0;
    const u64 step = chi.index() % phi;
    for (u64 k = 0; k < phi; ++k) {
        idx[k] = static_cast<std::uint32_t>(acc);
        acc += step;
        if (acc >= phi) acc -= phi;
    }
    const RootTable roots(phi);
    return simd::weighted_root_sum(*z, idx, roots);
}

LValueTable::LValueTable(u64 p, unsigned n) : table_(UnitGroupTable::get(p, n))
{
    const auto z = hurwitz_units(*table_);
    values_ = dft(std::vector<cplx>(z->begin(), z->end()), +1);
}

std::shared_ptr<const LValueTable> LValueTable::get(u64 p, unsigned n)
{
    static std::mutex mu;
    static std::map<std::pair<u64, unsigned>, std::shared_ptr<const LValueTable>> memo;
    const auto key = std::make_pair(p, n);
    {
        std::lock_guard lock(mu);
        if (auto it = memo.find(key); it != memo.end()) return it->second;
    }
    auto built = std::make_shared<const LValueTable>(p, n);
    std::lock_guard lock(mu);
    return memo.emplace(key, std::move(built)).first->second;
}

cplx gauss_sum(const DirichletCharacter& chi)
{
    const UnitGroupTable& t = chi.table();
    const double q = static_cast<double>(t.q());
    const double phi = static_cast<double>(t.phi());
    const ModRing r(t.phi());
    cplx s = 0.0;
    for (u64 k = 0; k < t.phi(); ++k)
        s += expi(static_cast<double>(r.mul(chi.index(), k)) / phi + static_cast<double>(t.power(k)) / q);
    return s;
}

cplx root_number(const DirichletCharacter& chi)
{
    const cplx ik = chi.parity() ? cplx(0, 1) : cplx(1, 0);
    return gauss_sum(chi) / (ik * std::sqrt(static_cast<double>(chi.q())));
}

double afe_cutoff(double x, u64 q, int parity)
{
    const double s0 = (0.5 + parity) / 2.0;
    return boost::math::gamma_q(s0, std::numbers::pi * x * x / static_cast<double>(q));
}

// ------------------------------------------------------------ smooth weights

double SmoothWeight::bump(double u)
{
    if (u <= -1.0 || u >= 1.0) return 0.0;
    return std::exp(-1.0 / (1.0 - u * u));
}

double SmoothWeight::partition(double u)
{
    if (u <= -1.0 || u >= 1.0) return 0.0;
    const double b = bump(u);
    const double other = u >= 0 ? bump(u - 1.0) : bump(u + 1.0);
    return b / (b + other);
}

double SmoothWeight::operator()(double x) const
{
    if (x <= lower() || x >= upper()) return 0.0;
    return partition(std::log2(x / N));
}

std::vector<double> SmoothWeight::derivative_constants() const
{
    const double h = N * 1e-3;
    const int samples = 3000;
    std::vector<double> out(4, 0.0);
    for (int i = 1; i < samples; ++i) {
        const double x = lower() + (upper() - lower()) * i / samples;
        const double f0 = (*this)(x), fp = (*this)(x + h), fm = (*this)(x - h);
        const double fp2 = (*this)(x + 2 * h), fm2 = (*this)(x - 2 * h);
        const double d1 = (fp - fm) / (2 * h);
        const double d2 = (fp - 2 * f0 + fm) / (h * h);
        const double d3 = (fp2 - 2 * fp + 2 * fm - fm2) / (2 * h * h * h);
        const double d4 = (fp2 - 4 * fp + 6 * f0 - 4 * fm + fm2) / (h * h * h * h);
        out[0] = std::max(out[0], std::abs(d1) * N);
        out[1] = std::max(out[1], std::abs(d2) * N * N);
        out[2] = std::max(out[2], std::abs(d3) * N * N * N);
        out[3] = std::max(out[3], std::abs(d4) * N * N * N * N);
    }
    return out;
}

std::vector<double> dyadic_scales(double limit)
{
    std::vector<double> out;
    for (double N = 1.0; N <= limit; N *= 2.0) out.push_back(N);
    return out;
}

// ------------------------------------------------------------------ AFE check

AfeResult lvalue_afe(const DirichletCharacter& chi, double eps)
{
    if (!chi.primitive()) throw DomainError("lvalue_afe: character is not primitive");
    const u64 q = chi.q();
    const int kappa = chi.parity();
    const cplx root = root_number(chi);
    const double qd = static_cast<double>(q);
    const u64 n_end = static_cast<u64>(std::ceil(std::sqrt(60.0 * qd / std::numbers::pi))) + 1;

    std::vector<double> cut(n_end + 1, 0.0);
    std::vector<cplx> val(n_end + 1, 0.0);
    for (u64 n = 1; n <= n_end; ++n) {
        cut[n] = afe_cutoff(static_cast<double>(n), q, kappa) / std::sqrt(static_cast<double>(n));
        val[n] = chi(static_cast<i64>(n % q));
    }

    AfeResult out;
    const double limit = std::pow(qd, 0.5 + eps);
    double energy = 0.0;
    for (double N : dyadic_scales(2.0 * static_cast<double>(n_end))) {
        AfePiece piece{N, 0.0, 0.0};
        const u64 lo = static_cast<u64>(std::floor(N / 2)) + 1;
        const u64 hi = std::min<u64>(n_end, static_cast<u64>(std::ceil(2 * N)) - 1);
        for (u64 n = lo; n <= hi; ++n) {
            const double w = cut[n] * SmoothWeight::partition(std::log2(static_cast<double>(n) / N));
            piece.direct += w * val[n];
            piece.dual += w * std::conj(val[n]);
        }
        piece.dual *= root;
        out.value += piece.direct + piece.dual;
        if (N <= limit) {
            energy += std::norm(piece.direct) + std::norm(piece.dual);
            out.pieces.push_back(piece);
        } else {
            out.tail += piece.direct + piece.dual;
        }
    }
    const double K = static_cast<double>(out.pieces.size());
    out.bound = 4.0 * K * energy + 2.0 * std::norm(out.tail);
    out.actual = std::norm(lvalue_central(chi));
    out.log_constant = 4.0 * K / std::log(qd);
    return out;
}

// --------------------------------------------------------- short second moment

std::vector<u64> subgroup_indices(u64 p, unsigned n, unsigned m)
{
    if (m > n) throw DomainError("subgroup_indices: m > n");
    const u64 phi_m = m == 0 ? 1 : (p - 1) * ipow(p, m - 1);
    const u64 stride = ((p - 1) * ipow(p, n - 1)) / phi_m;
    std::vector<u64> out(phi_m);
    for (u64 k = 0; k < phi_m; ++k) out[k] = k * stride;
    return out;
}

double short_second_moment(const LValueTable& L, u64 index, u64 q1)
{
    const unsigned m1 = exponent_of(L.p(), q1, "q1");
    if (m1 < 1 || m1 >= L.n()) throw DomainError("short_second_moment: need p <= q1 < q");
    double s = 0.0;
    for (u64 off : subgroup_indices(L.p(), L.n(), m1)) s += std::norm(L[index + off]);
    return s;
}

double short_second_moment(const DirichletCharacter& chi, u64 q1)
{
    return short_second_moment(*LValueTable::get(chi.table().p(), chi.table().n()), chi.index(), q1);
}

// ---------------------------------------------------------------- Poisson step

WeightTransform::WeightTransform(double N, double shift, double tol, Quadrature method)
    : N_(N), shift_(shift), lo_(N / 2), hi_(2 * N - shift), tol_(tol), method_(method)
{
}

double WeightTransform::W(double y) const
{
    const SmoothWeight v{N_};
    return v(y + shift_) * v(y);
}

cplx WeightTransform::operator()(double xi) const
{
    return method_ == Quadrature::kronrod ? kronrod(xi) : simpson(xi);
}

cplx WeightTransform::simpson(double xi) const
{
    if (empty()) return 0.0;
    const double two_pi_xi = 2.0 * std::numbers::pi * xi;
    auto f = [&](double y) { return W(y) * std::polar(1.0, -two_pi_xi * y); };

    struct Simpson {
        const decltype(f)& g;
        cplx run(double a, double b, cplx fa, cplx fm, cplx fb, cplx whole, double eps, int depth) const
        {
            const double m = 0.5 * (a + b);
            const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
            const cplx flm = g(lm), frm = g(rm);
            const cplx left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            const cplx right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            const cplx delta = left + right - whole;
            if (std::abs(delta) <= 15.0 * eps) return left + right + delta / 15.0;
            if (depth <= 0) throw QuadratureError("WeightTransform: adaptive Simpson did not converge");
            return run(a, m, fa, flm, fm, left, 0.5 * eps, depth - 1) + run(m, b, fm, frm, fb, right, 0.5 * eps, depth - 1);
        }
    } rule{f};

    const double len = hi_ - lo_;
    const std::size_t panels = 8 + static_cast<std::size_t>(4.0 * std::abs(xi) * len);
    const double width = len / static_cast<double>(panels);
    const double eps = tol_ * N_ / static_cast<double>(panels);
    cplx total = 0.0;
    cplx fa = f(lo_);
    for (std::size_t i = 0; i < panels; ++i) {
        const double a = lo_ + width * static_cast<double>(i);
        const double b = i + 1 == panels ? hi_ : a + width;
        const double m = 0.5 * (a + b);
        const cplx fm = f(m), fb = f(b);
        const cplx whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        total += rule.run(a, b, fa, fm, fb, whole, eps, 40);
        fa = fb;
    }
    return total;
}

cplx WeightTransform::kronrod(double xi) const
{
    if (empty()) return 0.0;
    using Rule = boost::math::quadrature::gauss_kronrod<double, 31>;
    const double two_pi_xi = 2.0 * std::numbers::pi * xi;
    auto f = [&](double y) { return W(y) * std::polar(1.0, -two_pi_xi * y); };

    // Bisect on the absolute Kronrod-Gauss difference; the rule's own
    // adaptive driver stops on a relative error and stalls on tiny values.
    auto run = [&](auto& self, double a, double b, double eps, int depth) -> cplx {
        double err = 0.0;
        const cplx r = Rule::integrate(f, a, b, 0, 0.0, &err);
        if (err <= eps) return r;
        if (depth <= 0) throw QuadratureError("WeightTransform: adaptive Gauss-Kronrod did not converge");
        const double m = 0.5 * (a + b);
        return self(self, a, m, 0.5 * eps, depth - 1) + self(self, m, b, 0.5 * eps, depth - 1);
    };

    const double len = hi_ - lo_;
    const std::size_t panels = 2 + static_cast<std::size_t>(std::abs(xi) * len / 4.0);
    const double width = len / static_cast<double>(panels);
    const double eps = tol_ * N_ / static_cast<double>(panels);
    cplx total = 0.0;
    for (std::size_t i = 0; i < panels; ++i) {
        const double a = lo_ + width * static_cast<double>(i);
        const double b = i + 1 == panels ? hi_ : a + width;
        total += run(run, a, b, eps, 30);
    }
    return total;
}

u64 dual_cutoff(u64 Q1, double N, double c)
{
    return static_cast<u64>(std::ceil(c * static_cast<double>(Q1) / N));
}

std::vector<PoissonCheck> poisson_step_checks(std::span<const DirichletCharacter> chis, u64 q1, double N, u64 h,
                                              double cutoff, bool measure_tail)
{
    std::vector<PoissonCheck> out(chis.size());
    if (chis.empty()) return out;
    const UnitGroupTable& t = chis.front().table();
    const u64 q = t.q();
    const unsigned m1 = exponent_of(t.p(), q1, "q1");
    if (m1 >= t.n()) throw DomainError("poisson_step_check: need Q1 = q/q1 > 1");
    for (const auto& chi : chis)
        if (chi.q() != q) throw DomainError("poisson_step_checks: characters of different moduli");
    const u64 Q1 = q / q1;
    const unsigned tq = t.n() - m1;
    const double shift = static_cast<double>(h * q1);
    const u64 J = dual_cutoff(Q1, N, cutoff);

    const WeightTransform wt(N, shift);
    std::vector<cplx> what;
    if (!wt.empty()) {
        what.resize((measure_tail ? 2 * J : J) + 1);
        for (u64 j = 0; j < what.size(); ++j) what[j] = wt(static_cast<double>(j) / static_cast<double>(Q1));
    }

    const SmoothWeight v{N};
    const double scale = 1.0 / std::sqrt(static_cast<double>(Q1));
    for (std::size_t c = 0; c < chis.size(); ++c) {
        const DirichletCharacter& chi = chis[c];
        PoissonCheck& r = out[c];
        r.J = J;
        for (u64 n = static_cast<u64>(std::floor(N / 2)) + 1; static_cast<double>(n) + shift < 2 * N; ++n) {
            const double w = v(static_cast<double>(n) + shift) * v(static_cast<double>(n));
            if (w == 0.0) continue;
            r.direct += w * chi(static_cast<i64>((n + h * q1) % q)) * std::conj(chi(static_cast<i64>(n % q)));
        }
        if (!what.empty()) {
            const std::vector<cplx> K = kchi_direct_all_j(chi, static_cast<i64>(h), tq);
            auto band = [&](u64 from, u64 to) {
                cplx s = 0.0;
                for (u64 j = from; j <= to; ++j)
                    s += what[j] * K[j % Q1] + std::conj(what[j]) * K[(Q1 - j % Q1) % Q1];
                return s;
            };
            r.dual = scale * (what[0] * K[0] + band(1, J));
            if (measure_tail) r.tail = std::abs(scale * band(J + 1, 2 * J));
        }
        r.residual = std::abs(r.direct - r.dual);
    }
    return out;
}

PoissonCheck poisson_step_check(const DirichletCharacter& chi, u64 q1, double N, u64 h, double cutoff, bool measure_tail)
{
    return poisson_step_checks(std::span(&chi, 1), q1, N, h, cutoff, measure_tail).front();
}

// ----------------------------------------------------------- A coefficients

DualWeights::DualWeights(u64 p, u64 q, u64 q1, double N, double cutoff) : p_(p), q_(q), q1_(q1), N_(N)
{
    if (q % q1 || q1 % p || q1 >= q) throw DomainError("DualWeights: need p | q1 | q and q1 < q");
    J_ = dual_cutoff(q / q1, N, cutoff);
    const double hmax = 1.5 * N / static_cast<double>(q1);
    H_ = static_cast<u64>(std::ceil(hmax)) - 1;
    if (H_ == static_cast<u64>(-1)) H_ = 0;
    w_.resize(H_);
    parallel_for(H_, 0, [&](std::size_t i) {
        const WeightTransform wt(N, static_cast<double>((i + 1) * q1));
        std::vector<cplx> row(J_ + 1);
        for (u64 j = 0; j <= J_; ++j) row[j] = wt(static_cast<double>(j) / static_cast<double>(q / q1));
        w_[i] = std::move(row);
    });
}

cplx DualWeights::at(u64 h, i64 j) const
{
    if (h == 0 || h > H_) return 0.0;
    const u64 aj = static_cast<u64>(j < 0 ? -j : j);
    if (aj > J_) return 0.0;
    const cplx w = w_[h - 1][aj];
    return j < 0 ? std::conj(w) : w;
}

cplx coefficients_A(const DualWeights& w, i64 m, unsigned eta)
{
    const u64 p = w.p();
    const u64 am = static_cast<u64>(m < 0 ? -m : m);
    if (am == 0 || am % p == 0) throw DomainError("coefficients_A: m must be nonzero and coprime to p");
    const u64 pe = ipow(p, eta);
    cplx s = 0.0;
    for (u64 hp = 1; hp * hp <= am; ++hp) {
        if (am % hp) continue;
        for (u64 d : {hp, am / hp}) {
            const u64 jp = am / d;
            const i64 js = m < 0 ? -static_cast<i64>(jp) : static_cast<i64>(jp);
            s += w.at(d * pe, js * static_cast<i64>(pe));
            if (d * d == am) break;
        }
    }
    return s / w.N();
}

u64 coefficient_range(const DualWeights& w, unsigned eta)
{
    const u64 pe = ipow(w.p(), eta);
    return (w.H() / pe) * (w.J() / pe);
}

// ------------------------------------------------------------- moment bounds

std::vector<std::pair<double, double>> b_profile(const DirichletCharacter& chi, u64 q1, double eps)
{
    const UnitGroupTable& t = chi.table();
    const u64 q = t.q();
    const unsigned m1 = exponent_of(t.p(), q1, "q1");
    const double phi1 = static_cast<double>((t.p() - 1) * ipow(t.p(), m1 - 1));
    std::vector<std::pair<double, double>> out;
    for (double N : dyadic_scales(std::pow(static_cast<double>(q), 0.5 + eps))) {
        const SmoothWeight v{N};
        std::vector<cplx> residue(q1, 0.0);
        for (u64 n = static_cast<u64>(std::floor(N / 2)) + 1; static_cast<double>(n) < 2 * N; ++n)
            residue[n % q1] += v(static_cast<double>(n)) * chi(static_cast<i64>(n % q));
        double b = 0.0;
        for (const cplx& r : residue) b += std::norm(r);
        out.emplace_back(N, phi1 * b / N);
    }
    return out;
}

SecondMomentCheck verify_prop_31(const DirichletCharacter& chi, u64 q1, double cutoff)
{
    const UnitGroupTable& t = chi.table();
    const u64 p = t.p(), q = t.q();
    const unsigned m1 = exponent_of(p, q1, "q1");
    if (m1 < 1 || m1 >= t.n()) throw DomainError("verify_prop_31: need p <= q1 < q");
    const u64 Q1 = q / q1;
    const unsigned tq = t.n() - m1;
    const double phi1 = static_cast<double>((p - 1) * ipow(p, m1 - 1));

    SecondMomentCheck out;
    out.lhs = short_second_moment(chi, q1);
    const auto profile = b_profile(chi, q1);
    double best = -1.0;
    for (const auto& [N, b] : profile)
        if (b > best * (1.0 + 1e-12)) {
            best = b;
            out.N = N;
        }
    for (const auto& [N, b] : profile)
        if (N != out.N && std::abs(b - best) <= 1e-12 * best) out.tie = true;
    out.b_direct = best;
    const double N = out.N;

    const DualWeights w(p, q, q1, N, cutoff);
    const SmoothWeight v{N};
    double diag = 0.0;
    for (u64 n = static_cast<u64>(std::floor(N / 2)) + 1; static_cast<double>(n) < 2 * N; ++n)
        if (n % p) diag += v(static_cast<double>(n)) * v(static_cast<double>(n));

    for (u64 h = 1; h <= w.H(); ++h) {
        const std::vector<cplx> K = kchi_direct_all_j(chi, static_cast<i64>(h), tq);
        out.zero_freq += w.at(h, 0) * K[0] / N;
        for (i64 j = -static_cast<i64>(w.J()); j <= static_cast<i64>(w.J()); ++j) {
            if (j == 0) continue;
            if (kchi_reduce(p, j, static_cast<i64>(h), tq, t.n()).kind == KchiCase::reduce) continue;
            const u64 jm = static_cast<u64>(((j % static_cast<i64>(Q1)) + static_cast<i64>(Q1)) % static_cast<i64>(Q1));
            out.other += w.at(h, j) * K[jm] / N;
        }
    }
    for (unsigned eta = 0; eta < tq && ipow(p, eta) <= w.H(); ++eta) {
        const std::vector<cplx> K = kchi_m_direct_all(chi, tq - eta);
        const i64 qe = static_cast<i64>(ipow(p, tq - eta));
        const i64 range = static_cast<i64>(coefficient_range(w, eta));
        const double weight = std::pow(static_cast<double>(p), 0.5 * eta);
        for (i64 m = -range; m <= range; ++m) {
            if (m == 0 || m % static_cast<i64>(p) == 0) continue;
            const cplx A = coefficients_A(w, m, eta);
            if (A == 0.0) continue;
            out.k_sum += weight * K[static_cast<u64>(((m % qe) + qe) % qe)] * A;
        }
    }
    const double rq = 1.0 / std::sqrt(static_cast<double>(Q1));
    out.b_dual = phi1 / N * diag + 2.0 * phi1 * rq * (out.zero_freq + out.k_sum + out.other).real();
    out.rhs = static_cast<double>(q1) * (1.0 + rq * std::abs(out.k_sum.real()));
    out.ratio = out.lhs / (out.rhs * std::pow(static_cast<double>(q), kEpsilon));
    out.weyl_rhs = static_cast<double>(q1) + std::sqrt(static_cast<double>(Q1));
    return out;
}

ShortMomentCheck verify_prop_51(const LValueTable& L, u64 chi_index, u64 q1, u64 q2, std::span<const u64> psi)
{
    const u64 p = L.p();
    const unsigned m1 = exponent_of(p, q1, "q1"), m2 = exponent_of(p, q2, "q2");
    if (!(1 <= m1 && m1 <= m2 && m2 < L.n())) throw DomainError("verify_prop_51: need p <= q1 <= q2 < q");
    const auto lifts = lift_indices(L.units(), m2);
    ShortMomentCheck out;
    out.size = psi.size();
    for (u64 b : psi) out.lhs += short_second_moment(L, chi_index + lifts[b % lifts.size()], q1);
    const double s = static_cast<double>(psi.size());
    const double d1 = static_cast<double>(q1), d2 = static_cast<double>(q2), dq = std::pow(static_cast<double>(p), L.n());
    out.rhs = (d1 + std::pow(d1, 0.25) * std::pow(d2, 0.25)) * s + std::sqrt(dq) * std::sqrt(s);
    out.ratio = psi.empty() ? 0.0 : out.lhs / (out.rhs * std::pow(dq, kEpsilon));
    return out;
}

std::vector<u64> conjugate_family(std::span<const u64> psi, u64 phi2)
{
    std::vector<u64> out;
    out.reserve(psi.size());
    for (u64 b : psi) out.push_back((phi2 - b % phi2) % phi2);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<PsiFamily> psi_families(u64 p, unsigned n2, std::size_t random_count, u64 seed)
{
    const u64 phi2 = (p - 1) * ipow(p, n2 - 1);
    SplitMix rng{seed};
    std::vector<PsiFamily> out;
    out.push_back({"empty", {}});
    out.push_back({"principal", {0}});
    out.push_back({"singleton", {rng.below(phi2)}});
    PsiFamily full{"full", {}}, even{"even", {}}, odd{"odd", {}};
    for (u64 b = 0; b < phi2; ++b) {
        full.members.push_back(b);
        (b % 2 ? odd : even).members.push_back(b);
    }
    out.push_back(std::move(full));
    out.push_back(std::move(even));
    out.push_back(std::move(odd));
    std::vector<u64> perm(phi2);
    for (std::size_t r = 0; r < random_count; ++r) {
        for (u64 b = 0; b < phi2; ++b) perm[b] = b;
        for (u64 i = phi2 - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
        const u64 size = 1 + rng.below(phi2);
        std::vector<u64> members(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(size));
        std::sort(members.begin(), members.end());
        out.push_back({"random-" + std::to_string(r), members});
        out.push_back({"random-" + std::to_string(r) + "-conj", conjugate_family(members, phi2)});
    }
    return out;
}

// ----------------------------------------------------------------- moments

double moment(u64 p, unsigned n, double k, bool include_principal)
{
    double s = include_principal ? std::pow(std::abs(riemann_zeta_half()), k) : 0.0;
    for (unsigned m = 1; m <= n; ++m) {
        const auto L = LValueTable::get(p, m);
        for (double a : primitive_abs_values(*L)) s += std::pow(a, k);
    }
    return s;
}

void write_moment_csv(std::ostream& os, std::span<const MomentRow> rows)
{
    os << "q,moment,moment_over_q2\n";
    std::ostringstream line;
    line << std::setprecision(12);
    for (const auto& r : rows) line << r.q << ',' << r.moment << ',' << r.normalized << '\n';
    os << line.str();
}

double loglog_slope(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("loglog_slope: need two or more points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// ------------------------------------------------------------- large values

std::vector<double> primitive_abs_values(const LValueTable& L)
{
    std::vector<double> out;
    const u64 p = L.p();
    const auto& v = L.values();
    for (u64 a = 1; a < v.size(); ++a)
        if (L.n() == 1 || a % p) out.push_back(std::abs(v[a]));
    return out;
}

u64 large_value_count(std::span<const double> abs_values, double V)
{
    return static_cast<u64>(std::count_if(abs_values.begin(), abs_values.end(), [V](double a) { return a > V; }));
}

std::vector<u64> r2_set(const LValueTable& L, u64 chi_index, u64 q2, double V)
{
    const unsigned m2 = exponent_of(L.p(), q2, "q2");
    if (m2 >= L.n()) throw DomainError("r2_set: need q2 < q");
    const auto lifts = lift_indices(L.units(), m2);
    std::vector<u64> out;
    for (u64 b = 0; b < lifts.size(); ++b)
        if (std::abs(L[chi_index + lifts[b]]) > V) out.push_back(b);
    return out;
}

std::vector<u64> psi_set(const LValueTable& L, u64 chi_index, u64 q1, u64 q2, double V)
{
    const unsigned m1 = exponent_of(L.p(), q1, "q1"), m2 = exponent_of(L.p(), q2, "q2");
    if (m1 > m2) throw DomainError("psi_set: need q1 <= q2");
    const auto lifts = lift_indices(L.units(), m2);
    const auto sub = subgroup_indices(L.p(), L.n(), m1);
    std::vector<u64> out;
    for (u64 b = 0; b < lifts.size(); ++b)
        for (u64 off : sub)
            if (std::abs(L[chi_index + lifts[b] + off]) > V) {
                out.push_back(b);
                break;
            }
    return out;
}

BookkeepingCheck bookkeeping_identity(const LValueTable& L, u64 q2, double V)
{
    const unsigned m2 = exponent_of(L.p(), q2, "q2");
    if (m2 < 1 || m2 >= L.n()) throw DomainError("bookkeeping_identity: need p <= q2 < q");
    const auto lifts = lift_indices(L.units(), m2);
    BookkeepingCheck out;
    out.q2 = q2;
    out.phi_q2 = lifts.size();
    const auto& v = L.values();
    for (u64 a = 1; a < v.size(); ++a) {
        if (L.n() > 1 && a % L.p() == 0) continue;
        if (std::abs(v[a]) > V) ++out.r;
        for (u64 off : lifts)
            if (std::abs(L[a + off]) > V) ++out.sum_r2;
    }
    out.exact = out.sum_r2 == out.phi_q2 * out.r;
    out.with_q2 = static_cast<double>(out.sum_r2) / static_cast<double>(q2);
    return out;
}

LargeValuesReport large_values(const LValueTable& L, std::size_t points)
{
    return large_values(ipow(L.p(), L.n()), primitive_abs_values(L), points);
}

LargeValuesReport large_values(u64 modulus, std::span<const double> absv, std::size_t points)
{
    if (points < 2) throw std::invalid_argument("large_values: need two or more grid points");
    LargeValuesReport out;
    out.q = modulus;
    const double q = static_cast<double>(out.q);
    out.v_low = std::pow(q, 1.0 / 8.0 - 0.05);
    out.v_high = std::pow(q, 1.0 / 6.0 + 0.05);
    const double from = out.v_low / 2, to = out.v_high * 2;
    for (std::size_t i = 0; i < points; ++i) {
        const double V = from * std::pow(to / from, static_cast<double>(i) / static_cast<double>(points - 1));
        LargeValuesRow row;
        row.V = V;
        row.count = large_value_count(absv, V);
        row.in_range = V >= out.v_low && V <= out.v_high;
        row.twelfth_ratio = static_cast<double>(row.count) * std::pow(V, 12) / std::pow(q, 2.1);
        row.fourth_ratio = static_cast<double>(row.count) * std::pow(V, 4) / std::pow(q, 1.1);
        if (row.in_range) out.sup_twelfth_in_range = std::max(out.sup_twelfth_in_range, row.twelfth_ratio);
        out.sup_fourth = std::max(out.sup_fourth, row.fourth_ratio);
        out.rows.push_back(row);
    }
    return out;
}

// ------------------------------------------------------------ persistence

LValueStore::LValueStore(std::filesystem::path file) : file_(std::move(file))
{
    std::ifstream in(file_);
    if (!in) return;
    std::string line;
    if (!std::getline(in, line)) return;
    const auto header = nlohmann::json::parse(line, nullptr, false);
    if (header.is_discarded() || header.value("format", "") != "pstat-lvalues" || header.value("version", 0) != kVersion)
        throw std::runtime_error("LValueStore: unsupported store header in " + file_.string());
    while (std::getline(in, line)) {
        const auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) continue;  // a torn final line from an interrupted run
        LValueRecord r;
        r.p = j.at("p").get<u64>();
        r.n = j.at("n").get<unsigned>();
        r.char_index = j.at("char_index").get<u64>();
        r.re_L = j.at("re_L").get<double>();
        r.im_L = j.at("im_L").get<double>();
        r.method = j.at("method").get<std::string>();
        r.accuracy = j.at("accuracy").get<double>();
        records_[{r.p, r.n, r.char_index}] = r;
    }
}

const LValueRecord* LValueStore::find(u64 p, unsigned n, u64 index) const
{
    auto it = records_.find({p, n, index});
    return it == records_.end() ? nullptr : &it->second;
}

void LValueStore::append(const LValueRecord& r)
{
    append(std::span(&r, 1));
}

void LValueStore::append(std::span<const LValueRecord> rs)
{
    if (rs.empty()) return;
    const bool fresh = !std::filesystem::exists(file_) || std::filesystem::file_size(file_) == 0;
    if (fresh && file_.has_parent_path()) std::filesystem::create_directories(file_.parent_path());
    std::ofstream out(file_, std::ios::app);
    if (!out) throw std::runtime_error("LValueStore: cannot write " + file_.string());
    if (fresh) out << nlohmann::json{{"format", "pstat-lvalues"}, {"version", kVersion}}.dump() << '\n';
    for (const auto& r : rs) {
        const nlohmann::json j{{"p", r.p},       {"n", r.n},       {"char_index", r.char_index}, {"re_L", r.re_L},
                               {"im_L", r.im_L}, {"method", r.method}, {"accuracy", r.accuracy}};
        out << j.dump() << '\n';
        records_[{r.p, r.n, r.char_index}] = r;
    }
    out.flush();
    if (!out) throw std::runtime_error("LValueStore: write failed on " + file_.string());
}

std::size_t scan_lvalues(LValueStore& store, u64 p, unsigned n, unsigned workers, bool batched)
{
    const auto t = UnitGroupTable::get(p, n);
    std::vector<u64> missing;
    for (const auto& chi : primitive_characters(t))
        if (!store.find(p, n, chi.index())) missing.push_back(chi.index());
    if (missing.empty()) return 0;
    std::vector<cplx> values(missing.size());
    if (batched) {
        const auto L = LValueTable::get(p, n);
        for (std::size_t i = 0; i < missing.size(); ++i) values[i] = (*L)[missing[i]];
    } else {
        parallel_for(missing.size(), workers,
                     [&](std::size_t i) { values[i] = lvalue_central(DirichletCharacter(t, missing[i])); });
    }
    const std::string method = batched ? "hurwitz-euler-maclaurin-dft" : "hurwitz-euler-maclaurin";
    std::vector<LValueRecord> rs;
    rs.reserve(missing.size());
    for (std::size_t i = 0; i < missing.size(); ++i)
        rs.push_back({p, n, missing[i], values[i].real(), values[i].imag(), method, 1e-8});
    store.append(rs);
    return missing.size();
}

std::vector<double> stored_abs_values(const LValueStore& store, u64 p, unsigned n)
{
    const auto t = UnitGroupTable::get(p, n);
    std::vector<double> out;
    for (const auto& chi : primitive_characters(t)) {
        const LValueRecord* r = store.find(p, n, chi.index());
        if (!r) throw std::runtime_error("stored_abs_values: missing character " + std::to_string(chi.index()));
        out.push_back(std::abs(cplx(r->re_L, r->im_L)));
    }
    return out;
}

} // namespace pstat
