#pragma once

// Invariant suites shared by the command-line front end and the acceptance
// runner. Each suite returns one record per case with its residual.

#include "pstat/padic.hpp"

#include "json.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace pstat {

struct SuiteCase {
    std::string label;
    double residual = 0;
    double tolerance = 0;
    bool pass = true;
    nlohmann::ordered_json detail = nlohmann::ordered_json::object();
};

struct SuiteReport {
    std::string suite;
    std::vector<SuiteCase> cases;

    std::size_t failures() const;
    bool passed() const { return failures() == 0; }
    /// Largest residual / tolerance over the cases with a positive tolerance.
    double worst_ratio() const;
    void add(SuiteCase c) { cases.push_back(std::move(c)); }
};

/// One JSON object per case, then a summary object.
void write_report_jsonl(std::ostream& os, const SuiteReport& r);

/// Selection of moduli and knobs for a suite run. Empty or zero fields fall
/// back to the suite's own defaults.
struct SuiteOptions {
    std::vector<u64> primes;
    unsigned n_min = 0, n_max = 0;
    unsigned t = 0;     ///< qtilde = p^t (0: every 2 <= t < n)
    unsigned m1 = 0;    ///< q1 = p^m1 (0: every 1 <= m1 < n)
    double tol = 0;     ///< 0: the suite's tolerance
    u64 seed = 1;
    unsigned workers = 0;
    /// Work cap (classes times qtilde) per kchi cell before classes are sampled.
    u64 kchi_budget = 1'200'000'000ULL;
    /// Work cap (characters times p^(n-1)) per Postnikov cell before k is strided.
    u64 postnikov_budget = 200'000'000ULL;
};

/// plog homomorphism, isometry and precision stability; psqrt squaring back,
/// branch agreement and Hensel lifting.
SuiteReport suite_padic(const SuiteOptions& o);
/// |sum_stationary - sum_direct| <= tol p^(n/2) over the bundled phases
/// (tol 1e-8), together with the declared hypotheses.
SuiteReport suite_stationary(const SuiteOptions& o);
/// Closed form against direct sums per (qtilde, m), worst over the classes
/// A mod qtilde; reduction table over all j for h of every valuation.
SuiteReport suite_kchi(const SuiteOptions& o);
/// Periodicity, vanishing, the Q = 1 indicator and sup |sum| / Q^1/2 <= 4
/// over every pair of Postnikov units.
SuiteReport suite_products(const SuiteOptions& o);
/// Poisson-step residual <= tol N (tol 1e-6).
SuiteReport suite_poisson(const SuiteOptions& o);
/// Existence, unit-ness and uniqueness of the Postnikov unit.
SuiteReport suite_postnikov(const SuiteOptions& o);

struct ProductConstant {
    u64 p;
    unsigned n;
    u64 qtilde;
    int sign;
    u64 pairs;
    double sup_ratio;  ///< sup over pairs and v of |sum| / Q^1/2 (Q > 1)
};
/// One row per (t, sign) for the full pair sweep mod p^n.
std::vector<ProductConstant> product_constants(u64 p, unsigned n, unsigned workers = 0);
void write_product_constants_csv(std::ostream& os, const std::vector<ProductConstant>& rows);

} // namespace pstat
