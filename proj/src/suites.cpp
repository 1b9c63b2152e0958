#include "pstat/suites.hpp"

#include "pstat/characters.hpp"
#include "pstat/lvalues.hpp"
#include "pstat/parallel.hpp"
#include "pstat/phase.hpp"
#include "pstat/tracefn.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <mutex>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

namespace pstat {

std::size_t SuiteReport::failures() const
{
    return static_cast<std::size_t>(std::count_if(cases.begin(), cases.end(), [](const SuiteCase& c) { return !c.pass; }));
}

double SuiteReport::worst_ratio() const
{
    double w = 0;
    for (const auto& c : cases)
        if (c.tolerance > 0) w = std::max(w, c.residual / c.tolerance);
    return w;
}

void write_report_jsonl(std::ostream& os, const SuiteReport& r)
{
    for (const auto& c : r.cases) {
        nlohmann::ordered_json j;
        j["suite"] = r.suite;
        j["case"] = c.label;
        j["residual"] = c.residual;
        j["tolerance"] = c.tolerance;
        j["pass"] = c.pass;
        for (const auto& [k, v] : c.detail.items()) j[k] = v;
        os << j.dump() << '\n';
    }
    nlohmann::ordered_json s;
    s["suite"] = r.suite;
    s["summary"] = true;
    s["cases"] = r.cases.size();
    s["failures"] = r.failures();
    s["worst_ratio"] = r.worst_ratio();
    s["passed"] = r.passed();
    os << s.dump() << '\n';
}

namespace {

using Cells = std::vector<std::pair<u64, unsigned>>;

Cells cells(const SuiteOptions& o, std::vector<u64> primes, unsigned n_min, unsigned n_max)
{
    if (!o.primes.empty()) primes = o.primes;
    if (o.n_min) {
        n_min = o.n_min;
        n_max = std::max(o.n_min, o.n_max);
    }
    Cells out;
    for (u64 p : primes)
        for (unsigned n = n_min; n <= n_max; ++n) out.emplace_back(p, n);
    return out;
}

std::string cell_label(u64 p, unsigned n)
{
    return "p=" + std::to_string(p) + " n=" + std::to_string(n);
}

SuiteCase count_case(std::string label, u64 checked, u64 failures)
{
    SuiteCase c;
    c.label = std::move(label);
    c.residual = static_cast<double>(failures);
    c.tolerance = 0;
    c.pass = failures == 0;
    c.detail["checked"] = checked;
    return c;
}

SuiteCase bound_case(std::string label, double residual, double tolerance)
{
    SuiteCase c;
    c.label = std::move(label);
    c.residual = residual;
    c.tolerance = tolerance;
    c.pass = residual <= tolerance;
    return c;
}

/// `count` distinct indices below `range`, sorted, drawn from the seed.
std::vector<u64> sample_indices(u64 range, u64 count, u64 seed)
{
    std::vector<u64> all(range);
    std::iota(all.begin(), all.end(), u64{0});
    if (count >= range) return all;
    std::mt19937_64 rng(seed);
    for (u64 i = 0; i < count; ++i) std::swap(all[i], all[i + rng() % (range - i)]);
    all.resize(count);
    std::sort(all.begin(), all.end());
    return all;
}

std::vector<u64> unit_residues(u64 p, u64 modulus)
{
    std::vector<u64> out;
    for (u64 a = 1; a < modulus; ++a)
        if (a % p) out.push_back(a);
    return out;
}

} // namespace

// ---------------------------------------------------------------------- padic

SuiteReport suite_padic(const SuiteOptions& o)
{
    SuiteReport rep{"padic", {}};
    constexpr u64 kSample = 400;
    for (auto [p, n] : cells(o, {3, 5, 7, 11}, 1, 5)) {
        const u64 q = ipow(p, n);
        const u64 pn1 = q / p;
        const std::string cell = cell_label(p, n);
        const std::vector<u64> ks = sample_indices(pn1, kSample, o.seed ^ q);

        {
            const std::vector<u64> table = plog_table(p, n);
            u64 bad = 0;
            for (u64 k = 0; k < pn1; ++k) bad += table[k] != plog(PadicResidue(p, n, (1 + k * p) % q), n).value();
            rep.add(count_case(cell + " plog table", pn1, bad));
        }
        {
            u64 bad = 0, checked = 0;
            for (u64 a : ks)
                for (u64 b : sample_indices(pn1, 20, o.seed + a)) {
                    const PadicResidue x(p, n, (1 + a * p) % q), y(p, n, (1 + b * p) % q);
                    bad += plog(x * y, n) != plog(x, n) + plog(y, n);
                    ++checked;
                }
            rep.add(count_case(cell + " plog homomorphism", checked, bad));
        }
        {
            u64 bad = 0;
            for (u64 k = 0; k < pn1; ++k) {
                const PadicResidue x(p, n, (1 + k * p) % q);
                bad += plog(x, n).ord() != PadicResidue(p, n, k * p % q).ord();
            }
            rep.add(count_case(cell + " plog isometry", pn1, bad));
        }
        {
            u64 bad = 0;
            const u64 q2 = ipow(p, n + 2);
            for (u64 k : ks) bad += plog(PadicResidue(p, n + 2, (1 + k * p) % q2), n + 2).reduced(n) != plog(PadicResidue(p, n, (1 + k * p) % q), n);
            rep.add(count_case(cell + " plog precision stability", ks.size(), bad));
        }
        {
            const SqrtBranch branch(p);
            const ModRing r(q);
            u64 bad_square = 0, bad_branch = 0, bad_lift = 0, checked = 0;
            const std::vector<u64> xs = sample_indices(q, 4 * kSample, o.seed + q);
            for (u64 x : xs) {
                if (x % p == 0 || legendre(x % p, p) != 1) continue;
                ++checked;
                const PadicResidue y = psqrt(PadicResidue(p, n, x), branch, n);
                bad_square += r.mul(y.value(), y.value()) != x;
                bad_branch += y.value() % p != branch(x % p);
                const ModEvaluator f = [x](u64 z, const ModRing& ring) { return ring.sub(ring.mul(z, z), ring.reduce(x)); };
                const ModEvaluator df = [](u64 z, const ModRing& ring) { return ring.mul(2, z); };
                bad_lift += hensel_lift(f, df, PadicResidue(p, 1, branch(x % p)), n) != y;
            }
            rep.add(count_case(cell + " psqrt squares back", checked, bad_square));
            rep.add(count_case(cell + " psqrt branch", checked, bad_branch));
            rep.add(count_case(cell + " hensel lift", checked, bad_lift));
        }
    }
    return rep;
}

// ----------------------------------------------------------------- stationary

SuiteReport suite_stationary(const SuiteOptions& o)
{
    const double tol = o.tol > 0 ? o.tol : 1e-8;
    std::vector<AnalyticPhase> phases;
    for (auto& f : bundled_phase_suite()) {
        const u64 p = f.modulus.p();
        const unsigned n = f.modulus.n();
        if (!o.primes.empty() && std::find(o.primes.begin(), o.primes.end(), p) == o.primes.end()) continue;
        if (o.n_min && (n < o.n_min || n > std::max(o.n_min, o.n_max))) continue;
        phases.push_back(std::move(f));
    }
    std::vector<SuiteCase> out(phases.size());
    parallel_for(phases.size(), o.workers, [&](std::size_t i) {
        const AnalyticPhase& f = phases[i];
        const double scale = std::pow(static_cast<double>(f.modulus.p()), 0.5 * f.modulus.n());
        const cplx direct = sum_direct(f);
        const cplx stat = sum_stationary(f);
        const HypothesisReport hyp = check_hypotheses(f);
        SuiteCase c = bound_case(f.name, std::abs(stat - direct), tol * scale);
        c.pass = c.pass && hyp.ok();
        c.detail["p"] = f.modulus.p();
        c.detail["n"] = f.modulus.n();
        c.detail["hypothesis_pairs"] = hyp.pairs_checked;
        c.detail["hypotheses_exhaustive"] = hyp.exhaustive;
        c.detail["hypothesis_failures"] = hyp.failures;
        out[i] = std::move(c);
    });
    return {"stationary", std::move(out)};
}

// ----------------------------------------------------------------------- kchi

namespace {

void kchi_closed_cell(SuiteReport& rep, const SuiteOptions& o, u64 p, unsigned n, unsigned t, double tol)
{
    const auto table = UnitGroupTable::get(p, n);
    const KchiClosedTables tab(p, n, t);
    const u64 qt = tab.qt();

    // One representative character per class A mod qt.
    std::vector<u64> rep_index(qt, ~u64{0});
    std::vector<u64> class_size(qt, 0);
    u64 primitive = 0;
    for (u64 a = 0; a < table->phi(); ++a) {
        const DirichletCharacter chi(table, a);
        if (!chi.primitive()) continue;
        ++primitive;
        const u64 A = chi.postnikov_A() % qt;
        if (rep_index[A] == ~u64{0}) rep_index[A] = a;
        ++class_size[A];
    }
    std::vector<u64> classes;
    for (u64 A = 0; A < qt; ++A)
        if (rep_index[A] != ~u64{0}) classes.push_back(A);
    const u64 cap = std::max<u64>(1, o.kchi_budget / qt);
    const bool sampled = classes.size() > cap;
    if (sampled) {
        std::vector<u64> keep;
        for (u64 i : sample_indices(classes.size(), cap, o.seed ^ (qt * 0x9e3779b97f4a7c15ULL))) keep.push_back(classes[i]);
        classes = std::move(keep);
    }

    const KchiDirectSweep sweep(table, t);
    std::vector<double> worst(qt, 0.0);
    u64 covered = 0;
    std::mutex mu;
    parallel_for(classes.size(), o.workers, [&](std::size_t i) {
        const u64 A = classes[i];
        const std::vector<cplx> direct = sweep(rep_index[A]);
        const std::vector<cplx> closed = tab.values(A);
        std::vector<double> res(qt, 0.0);
        for (u64 m = 1; m < qt; ++m)
            if (m % p) res[m] = std::abs(closed[m] - direct[m]);
        std::lock_guard lock(mu);
        for (u64 m = 0; m < qt; ++m) worst[m] = std::max(worst[m], res[m]);
        covered += class_size[A];
    });

    const std::string base = cell_label(p, n) + " qt=" + std::to_string(qt);
    SuiteCase summary = count_case(base + " classes", classes.size(), 0);
    summary.detail["classes_total"] = std::count_if(rep_index.begin(), rep_index.end(), [](u64 x) { return x != ~u64{0}; });
    summary.detail["sampled"] = sampled;
    summary.detail["characters_covered"] = covered;
    summary.detail["primitive_characters"] = primitive;
    rep.add(std::move(summary));
    for (u64 m = 1; m < qt; ++m) {
        if (m % p == 0) continue;
        SuiteCase c = bound_case(base + " m=" + std::to_string(m), worst[m], tol);
        c.detail["qtilde"] = qt;
        c.detail["m"] = m;
        rep.add(std::move(c));
    }
}

void kchi_reduction_cell(SuiteReport& rep, const SuiteOptions& o, u64 p, unsigned n, unsigned t, double tol)
{
    const auto table = UnitGroupTable::get(p, n);
    const auto prim = primitive_characters(table);
    std::vector<DirichletCharacter> chis{prim.front()};
    const u64 extra = std::mt19937_64(o.seed + ipow(p, n))() % prim.size();
    if (extra != 0) chis.push_back(prim[extra]);
    const u64 qt = ipow(p, t);

    std::map<KchiCase, std::pair<u64, double>> by_case;  // count, worst residual
    for (const auto& chi : chis) {
        std::vector<std::vector<cplx>> reduced(t + 1);
        for (unsigned s = 1; s <= t; ++s) reduced[s] = kchi_m_direct_all(chi, s);
        for (unsigned e = 0; e <= t; ++e)
            for (u64 u : {u64{1}, p - 1}) {
                const u64 h = ipow(p, e) * u % qt;
                const std::vector<cplx> direct = kchi_direct_all_j(chi, static_cast<i64>(h), t);
                for (u64 j = 0; j < qt; ++j) {
                    const KchiReduction red = kchi_reduce(p, static_cast<i64>(j), static_cast<i64>(h), t, n);
                    const cplx expect = red.kind == KchiCase::reduce ? red.scale * reduced[red.t_reduced][red.m_reduced] : cplx(red.value);
                    auto& slot = by_case[red.kind];
                    ++slot.first;
                    slot.second = std::max(slot.second, std::abs(direct[j] - expect));
                }
                if (e == t) break;  // h = 0 once
            }
    }
    const double root = std::sqrt(static_cast<double>(qt));
    for (KchiCase k : {KchiCase::reduce, KchiCase::full, KchiCase::minus_over_p, KchiCase::zero}) {
        const auto it = by_case.find(k);
        SuiteCase c = bound_case(cell_label(p, n) + " qt=" + std::to_string(qt) + " reduction " + to_string(k),
                                 it == by_case.end() ? 0.0 : it->second.second, tol);
        const u64 seen = it == by_case.end() ? 0 : it->second.first;
        c.pass = c.pass && seen > 0;
        c.detail["instances"] = seen;
        if (k == KchiCase::full) c.detail["closed_value"] = root * (1.0 - 1.0 / static_cast<double>(p));
        if (k == KchiCase::minus_over_p) c.detail["closed_value"] = -root / static_cast<double>(p);
        rep.add(std::move(c));
    }
}

} // namespace

SuiteReport suite_kchi(const SuiteOptions& o)
{
    SuiteReport rep{"kchi", {}};
    const double tol = o.tol > 0 ? o.tol : 1e-8;
    for (auto [p, n] : cells(o, {3, 5, 7}, 3, 5))
        for (unsigned t = 2; t < n; ++t) {
            if (o.t && t != o.t) continue;
            kchi_closed_cell(rep, o, p, n, t, tol);
            kchi_reduction_cell(rep, o, p, n, t, tol);
        }
    return rep;
}

// ------------------------------------------------------------------- products

namespace {

struct ProductSweep {
    u64 pairs = 0;
    u64 periodicity_failures = 0;
    u64 indicator_pairs = 0;
    double indicator_residual = 0;
    u64 vanishing_entries = 0;
    double vanishing_residual = 0;
    double sup_ratio = 0;
};

ProductSweep product_sweep(const KchiClosedTables& tab, int sign, unsigned workers)
{
    const u64 p = tab.p();
    const std::vector<u64> units = unit_residues(p, ipow(p, tab.n() - 1));
    std::vector<ProductSweep> rows(units.size());
    parallel_for(units.size(), workers, [&](std::size_t i) {
        ProductSweep& s = rows[i];
        const u64 A = units[i];
        for (u64 B : units) {
            ++s.pairs;
            const PeriodicityReport per = periodicity_check(tab, A, B, sign);
            s.periodicity_failures += !per.claimed_ok;
            const u64 Q = per.claimed;
            if (Q == 1) {
                ++s.indicator_pairs;
                const auto f = product_table(tab, A, B, sign);
                for (u64 m = 1; m < tab.qt(); ++m) {
                    if (m % p == 0) continue;
                    const double ind = legendre(A % p * (m % p), p) == 1 ? 1.0 : 0.0;
                    s.indicator_residual = std::max(s.indicator_residual, std::abs(f[m].value() - cplx(ind, 0)));
                }
                continue;
            }
            const auto sums = product_sums(tab, A, B, sign);
            const double root = std::sqrt(static_cast<double>(Q));
            for (u64 v = 0; v < Q; ++v) {
                if (Q >= p * p && v % p == 0) {
                    ++s.vanishing_entries;
                    s.vanishing_residual = std::max(s.vanishing_residual, std::abs(sums[v]));
                }
                s.sup_ratio = std::max(s.sup_ratio, std::abs(sums[v]) / root);
            }
        }
    });
    ProductSweep total;
    for (const auto& s : rows) {
        total.pairs += s.pairs;
        total.periodicity_failures += s.periodicity_failures;
        total.indicator_pairs += s.indicator_pairs;
        total.indicator_residual = std::max(total.indicator_residual, s.indicator_residual);
        total.vanishing_entries += s.vanishing_entries;
        total.vanishing_residual = std::max(total.vanishing_residual, s.vanishing_residual);
        total.sup_ratio = std::max(total.sup_ratio, s.sup_ratio);
    }
    return total;
}

} // namespace

SuiteReport suite_products(const SuiteOptions& o)
{
    SuiteReport rep{"products", {}};
    const Cells cs = o.primes.empty() && !o.n_min ? Cells{{3, 5}, {5, 4}} : cells(o, {3, 5}, 4, 4);
    for (auto [p, n] : cs)
        for (unsigned t = 2; t < n; ++t) {
            if (o.t && t != o.t) continue;
            const KchiClosedTables tab(p, n, t);
            for (int sign : {1, -1}) {
                const ProductSweep s = product_sweep(tab, sign, o.workers);
                const std::string base =
                    cell_label(p, n) + " qt=" + std::to_string(tab.qt()) + (sign > 0 ? " plus" : " minus");
                SuiteCase per = count_case(base + " periodicity", s.pairs, s.periodicity_failures);
                rep.add(std::move(per));
                SuiteCase ind = bound_case(base + " indicator", s.indicator_residual, 1e-12);
                ind.detail["pairs"] = s.indicator_pairs;
                rep.add(std::move(ind));
                SuiteCase van = bound_case(base + " vanishing", s.vanishing_residual, o.tol > 0 ? o.tol : 1e-8);
                van.detail["entries"] = s.vanishing_entries;
                rep.add(std::move(van));
                SuiteCase sup = bound_case(base + " sup ratio", s.sup_ratio, 4.0);
                sup.detail["pairs"] = s.pairs;
                rep.add(std::move(sup));
            }
        }
    return rep;
}

std::vector<ProductConstant> product_constants(u64 p, unsigned n, unsigned workers)
{
    std::vector<ProductConstant> out;
    for (unsigned t = 2; t < n; ++t) {
        const KchiClosedTables tab(p, n, t);
        for (int sign : {1, -1}) {
            const ProductSweep s = product_sweep(tab, sign, workers);
            out.push_back({p, n, tab.qt(), sign, s.pairs, s.sup_ratio});
        }
    }
    return out;
}

void write_product_constants_csv(std::ostream& os, const std::vector<ProductConstant>& rows)
{
    std::ostringstream s;
    s << "p,n,qtilde,sign,pairs,sup_ratio\n" << std::setprecision(12);
    for (const auto& r : rows) s << r.p << ',' << r.n << ',' << r.qtilde << ',' << r.sign << ',' << r.pairs << ',' << r.sup_ratio << '\n';
    os << s.str();
}

// -------------------------------------------------------------------- poisson

SuiteReport suite_poisson(const SuiteOptions& o)
{
    const double tol = o.tol > 0 ? o.tol : 1e-6;
    struct Config {
        u64 p;
        unsigned n;
        u64 q1;
        double N;
        u64 h;
    };
    std::vector<Config> configs;
    for (auto [p, n] : cells(o, {3, 5}, 2, 4))
        for (unsigned m1 = 1; m1 < n; ++m1) {
            if (o.m1 && m1 != o.m1) continue;
            const u64 q1 = ipow(p, m1);
            for (double N : {4.0, 16.0, 64.0}) {
                std::vector<u64> hs;
                for (u64 h = 1; static_cast<double>(h * q1) < 1.5 * N; ++h) hs.push_back(h);
                if (hs.size() > 4) hs = {hs[0], hs[1], hs[hs.size() / 2], hs.back()};
                for (u64 h : hs) configs.push_back({p, n, q1, N, h});
            }
        }
    std::vector<SuiteCase> out(configs.size());
    parallel_for(configs.size(), o.workers, [&](std::size_t i) {
        const Config& c = configs[i];
        const auto table = UnitGroupTable::get(c.p, c.n);
        const auto prim = primitive_characters(table);
        std::vector<DirichletCharacter> chis{prim.front()};
        const u64 extra = std::mt19937_64(o.seed + table->q())() % prim.size();
        if (extra != 0) chis.push_back(prim[extra]);
        const auto checks = poisson_step_checks(chis, c.q1, c.N, c.h);
        double worst = 0;
        for (const auto& r : checks) worst = std::max(worst, r.residual);
        SuiteCase s = bound_case(cell_label(c.p, c.n) + " q1=" + std::to_string(c.q1) + " N=" +
                                     std::to_string(static_cast<u64>(c.N)) + " h=" + std::to_string(c.h),
                                 worst, tol * c.N);
        s.detail["J"] = checks.front().J;
        s.detail["characters"] = chis.size();
        out[i] = std::move(s);
    });
    return {"poisson", std::move(out)};
}

// ------------------------------------------------------------------ postnikov

SuiteReport suite_postnikov(const SuiteOptions& o)
{
    SuiteReport rep{"postnikov", {}};
    for (auto [p, n] : cells(o, {3, 5, 7}, 2, 5)) {
        if (n < 2) continue;
        const auto table = UnitGroupTable::get(p, n);
        const std::string cell = cell_label(p, n);
        const u64 pn1 = table->q() / p;

        const bool consistent = postnikov_tables_consistent(*table);
        const u64 ell = table->log_table()[1];
        const bool valuation_one = ell % p == 0 && (ell / p) % p != 0;
        SuiteCase tables = count_case(cell + " tables", pn1, (consistent ? 0 : 1) + (valuation_one ? 0 : 1));
        tables.detail["plog_1p_valuation_one"] = valuation_one;
        rep.add(std::move(tables));

        const auto prim = primitive_characters(table);
        const u64 stride = std::max<u64>(1, (prim.size() * pn1 + o.postnikov_budget - 1) / o.postnikov_budget);
        const bool brute = table->q() <= 625;
        std::vector<PostnikovCheck> checks(prim.size());
        parallel_for(prim.size(), o.workers, [&](std::size_t i) { checks[i] = verify_postnikov(prim[i], stride, brute); });
        u64 not_unit = 0, violations = 0, not_unique = 0;
        for (const auto& c : checks) {
            not_unit += !c.unit;
            violations += c.violations != 0;
            if (c.solutions) not_unique += *c.solutions != 1;
        }
        SuiteCase c = count_case(cell + " characters", prim.size(), not_unit + violations + not_unique);
        c.detail["k_stride"] = stride;
        c.detail["not_unit"] = not_unit;
        c.detail["with_violations"] = violations;
        c.detail["brute_force_uniqueness"] = brute;
        c.detail["not_unique"] = not_unique;
        rep.add(std::move(c));
    }
    return rep;
}

} // namespace pstat
