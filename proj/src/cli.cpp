#include "pstat/cli.hpp"

#include "pstat/characters.hpp"
#include "pstat/lvalues.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

namespace pstat {

namespace fs = std::filesystem;

namespace {

constexpr const char* kSuites[] = {"padic", "stationary", "kchi", "products", "poisson", "postnikov"};
constexpr const char* kScans[] = {"moments", "large-values", "product-constants"};

unsigned power_exponent(u64 p, u64 x, const char* what)
{
    unsigned e = 0;
    u64 y = x;
    while (y > 1 && y % p == 0) {
        y /= p;
        ++e;
    }
    if (y != 1 || e == 0) throw ConfigError(std::string(what) + " must be a positive power of p");
    return e;
}

unsigned top_exponent(const RunConfig& c) { return std::max(c.n, c.nmax); }

/// Rows of a scan already computed, keyed by a string; JSON lines under a
/// {"format":"pstat-rows","version":1,"kind":...} header. Unparsable lines
/// (an interrupted append) are skipped.
class RowCache {
public:
    RowCache(fs::path file, std::string kind) : file_(std::move(file)), kind_(std::move(kind))
    {
        if (file_.empty()) return;
        std::ifstream in(file_);
        std::string line;
        if (!in || !std::getline(in, line)) return;
        const auto h = nlohmann::json::parse(line, nullptr, false);
        if (h.is_discarded() || h.value("format", "") != "pstat-rows" || h.value("version", 0) != 1 ||
            h.value("kind", "") != kind_)
            throw ConfigError("unsupported row cache " + file_.string());
        while (std::getline(in, line)) {
            const auto j = nlohmann::json::parse(line, nullptr, false);
            if (j.is_discarded() || !j.is_object() || !j.contains("key") || !j.contains("row")) continue;
            rows_[j["key"].get<std::string>()] = j["row"];
        }
    }

    const nlohmann::json* find(const std::string& key) const
    {
        auto it = rows_.find(key);
        return it == rows_.end() ? nullptr : &it->second;
    }

    void put(const std::string& key, const nlohmann::json& row)
    {
        rows_[key] = row;
        if (file_.empty()) return;
        const bool fresh = !fs::exists(file_) || fs::file_size(file_) == 0;
        std::ofstream out(file_, std::ios::app);
        if (!out) throw ConfigError("cannot write cache file " + file_.string());
        if (fresh) out << nlohmann::json{{"format", "pstat-rows"}, {"version", 1}, {"kind", kind_}}.dump() << '\n';
        out << nlohmann::json{{"key", key}, {"row", row}}.dump() << '\n';
    }

private:
    fs::path file_;
    std::string kind_;
    std::map<std::string, nlohmann::json> rows_;
};

fs::path ensure_dir(const fs::path& dir)
{
    if (dir.empty()) return dir;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw ConfigError("cannot create directory " + dir.string());
    const fs::path probe = dir / ".pstat-write-probe";
    {
        std::ofstream t(probe);
        if (!t) throw ConfigError("directory is not writable: " + dir.string());
    }
    fs::remove(probe, ec);
    return dir;
}

/// Persistence directory for partial results: the cache directory, else the
/// output directory, else none.
fs::path state_dir(const RunConfig& c)
{
    if (!c.cache_dir.empty()) return ensure_dir(c.cache_dir);
    if (!c.out.empty()) return ensure_dir(c.out);
    return {};
}

/// Writes `text` to out_dir/name, or to `fallback` when no directory was given.
void emit(const RunConfig& c, const std::string& name, const std::string& text, std::ostream& fallback, std::ostream& err)
{
    if (c.out.empty()) {
        fallback << text;
        return;
    }
    const fs::path file = ensure_dir(c.out) / name;
    std::ofstream f(file, std::ios::binary | std::ios::trunc);
    if (!f || !(f << text)) throw ConfigError("cannot write " + file.string());
    err << "wrote " << file.string() << '\n';
}

std::string number(double x)
{
    std::ostringstream s;
    s << std::setprecision(12) << x;
    return s.str();
}

void preload_tables(const RunConfig& c)
{
    if (c.cache_dir.empty() || c.primes.empty() || !c.n) return;
    ensure_dir(c.cache_dir);
    for (u64 p : c.primes)
        for (unsigned n = c.n; n <= top_exponent(c); ++n) UnitGroupTable::get(p, n, c.cache_dir);
}

std::vector<u64> scan_primes(const RunConfig& c) { return c.primes.empty() ? std::vector<u64>{3} : c.primes; }

unsigned scan_exponent(const RunConfig& c, const char* kind)
{
    const unsigned n = c.nmax ? c.nmax : c.n;
    if (!n) throw ConfigError(std::string("scan ") + kind + " needs --n");
    return n;
}

int scan_moments(const RunConfig& c, std::ostream& out, std::ostream& err)
{
    const unsigned lo = c.n ? c.n : 2;
    const unsigned hi = c.nmax ? c.nmax : lo;
    if (lo < 1) throw ConfigError("scan moments needs n >= 1");
    const fs::path dir = state_dir(c);
    for (u64 p : scan_primes(c)) {
        const std::string tag = "p" + std::to_string(p) + "_k" + number(c.k);
        RowCache cache(dir.empty() ? fs::path{} : dir / ("moments_" + tag + ".jsonl"), "moments");
        std::vector<MomentRow> rows;
        std::vector<double> qs, ms;
        for (unsigned n = lo; n <= hi; ++n) {
            const std::string key = "n=" + std::to_string(n);
            double m;
            if (const auto* row = cache.find(key)) {
                m = row->at("moment").get<double>();
            } else {
                m = moment(p, n, c.k);
                cache.put(key, {{"p", p}, {"n", n}, {"k", c.k}, {"moment", m}});
            }
            const double q = static_cast<double>(ipow(p, n));
            rows.push_back({ipow(p, n), m, m / (q * q)});
            qs.push_back(q);
            ms.push_back(m);
        }
        std::ostringstream csv;
        write_moment_csv(csv, rows);
        emit(c, "moments_" + tag + ".csv", csv.str(), out, err);
        if (rows.size() >= 2) err << "log-log slope p=" << p << ": " << number(loglog_slope(qs, ms)) << '\n';
    }
    return kExitPass;
}

int scan_large_values(const RunConfig& c, std::ostream& out, std::ostream& err)
{
    const unsigned n = scan_exponent(c, "large-values");
    const fs::path dir = state_dir(c);
    for (u64 p : scan_primes(c)) {
        std::vector<double> absv;
        if (dir.empty()) {
            absv = primitive_abs_values(*LValueTable::get(p, n));
        } else {
            LValueStore store(dir / ("lvalues_p" + std::to_string(p) + "_n" + std::to_string(n) + ".jsonl"));
            const std::size_t added = scan_lvalues(store, p, n, c.workers, true);
            if (added) err << "stored " << added << " central values\n";
            absv = stored_abs_values(store, p, n);
        }
        const LargeValuesReport r = large_values(ipow(p, n), absv);
        std::ostringstream csv;
        csv << "V,count,in_range,twelfth_ratio,fourth_ratio\n";
        for (const auto& row : r.rows)
            csv << number(row.V) << ',' << row.count << ',' << (row.in_range ? 1 : 0) << ',' << number(row.twelfth_ratio)
                << ',' << number(row.fourth_ratio) << '\n';
        const std::string tag = "p" + std::to_string(p) + "_n" + std::to_string(n);
        emit(c, "large_values_" + tag + ".csv", csv.str(), out, err);
        nlohmann::ordered_json s;
        s["q"] = r.q;
        s["v_low"] = r.v_low;
        s["v_high"] = r.v_high;
        s["primitive_characters"] = absv.size();
        s["sup_twelfth_in_range"] = r.sup_twelfth_in_range;
        s["sup_fourth"] = r.sup_fourth;
        emit(c, "large_values_" + tag + ".json", s.dump() + "\n", out, err);
    }
    return kExitPass;
}

int scan_product_constants(const RunConfig& c, std::ostream& out, std::ostream& err)
{
    const unsigned n = scan_exponent(c, "product-constants");
    if (n < 3) throw ConfigError("scan product-constants needs n >= 3");
    const fs::path dir = state_dir(c);
    for (u64 p : scan_primes(c)) {
        const std::string tag = "p" + std::to_string(p) + "_n" + std::to_string(n);
        RowCache cache(dir.empty() ? fs::path{} : dir / ("product_constants_" + tag + ".jsonl"), "product-constants");
        std::vector<ProductConstant> rows;
        const std::string key = "all";
        if (const auto* row = cache.find(key)) {
            for (const auto& j : *row)
                rows.push_back({j.at("p").get<u64>(), j.at("n").get<unsigned>(), j.at("qtilde").get<u64>(),
                                j.at("sign").get<int>(), j.at("pairs").get<u64>(), j.at("sup_ratio").get<double>()});
        } else {
            rows = product_constants(p, n, c.workers);
            nlohmann::json arr = nlohmann::json::array();
            for (const auto& r : rows)
                arr.push_back({{"p", r.p}, {"n", r.n}, {"qtilde", r.qtilde}, {"sign", r.sign}, {"pairs", r.pairs},
                               {"sup_ratio", r.sup_ratio}});
            cache.put(key, arr);
        }
        std::ostringstream csv;
        write_product_constants_csv(csv, rows);
        emit(c, "product_constants_" + tag + ".csv", csv.str(), out, err);
    }
    return kExitPass;
}

void add_run_flags(CLI::App* cmd, RunConfig& c)
{
    cmd->add_option("--p", c.primes, "odd prime(s), comma separated")->delimiter(',');
    cmd->add_option("--n", c.n, "exponent of q = p^n (lower end of a range)");
    cmd->add_option("--nmax", c.nmax, "upper exponent of a range");
    cmd->add_option("--q1", c.q1, "q1 = p^m1");
    cmd->add_option("--q2", c.q2, "q2 = p^m2");
    cmd->add_option("--qtilde", c.qtilde, "qtilde = p^t");
    cmd->add_option("--k", c.k, "moment order")->capture_default_str();
    cmd->add_option("--seed", c.seed, "seed for sampled sweeps")->capture_default_str();
    cmd->add_option("--out", c.out, "output directory (default: standard output)");
    cmd->add_option("--cache-dir", c.cache_dir, std::string("cache directory (default: $") + kCacheDirEnv + ")");
    cmd->add_option("--workers", c.workers, "worker threads (0: all cores)")->capture_default_str();
    cmd->add_option("--tol", c.tol, "tolerance override");
    cmd->add_flag("--allow-large", c.allow_large, "lift the desk-scale cap on q");
}

} // namespace

void validate(const RunConfig& c)
{
    for (u64 p : c.primes)
        if (!is_odd_prime(p)) throw ConfigError("p must be an odd prime (got " + std::to_string(p) + ")");
    if (c.n && c.nmax && c.nmax < c.n) throw ConfigError("--nmax must be at least --n");
    const unsigned top = top_exponent(c);
    for (u64 p : c.primes.empty() ? std::vector<u64>{3} : c.primes) {
        if (static_cast<double>(top) * std::log2(static_cast<double>(p)) > 60)
            throw ConfigError("q = p^n does not fit in 60 bits");
        if (top && !c.allow_large && ipow(p, top) > kDeskScaleCap)
            throw ConfigError("q = " + std::to_string(ipow(p, top)) + " exceeds the desk-scale cap " +
                              std::to_string(kDeskScaleCap) + " (pass --allow-large to override)");
    }
    if (c.q1 || c.q2 || c.qtilde) {
        if (c.primes.size() != 1) throw ConfigError("--q1, --q2 and --qtilde need exactly one --p");
        const u64 p = c.primes.front();
        const unsigned n = c.n ? c.n : c.nmax;
        const u64 q = n ? ipow(p, n) : 0;
        unsigned m1 = 0, m2 = 0;
        if (c.q1) m1 = power_exponent(p, *c.q1, "q1");
        if (c.q2) m2 = power_exponent(p, *c.q2, "q2");
        if (c.q1 && c.q2 && m1 > m2) throw ConfigError("need q1 <= q2");
        if (q && c.q2 && *c.q2 >= q) throw ConfigError("need q2 < q");
        if (q && c.q1 && *c.q1 >= q) throw ConfigError("need q1 < q");
        if (c.qtilde) {
            const unsigned t = power_exponent(p, *c.qtilde, "qtilde");
            if (t < 2) throw ConfigError("need qtilde >= p^2");
            if (q && *c.qtilde >= q) throw ConfigError("need qtilde < q");
        }
    }
    if (c.tol && !(*c.tol > 0 && std::isfinite(*c.tol))) throw ConfigError("--tol must be positive");
    if (!(c.k > 0 && std::isfinite(c.k))) throw ConfigError("--k must be positive");
}

SuiteOptions suite_options(const RunConfig& c)
{
    SuiteOptions o;
    o.primes = c.primes;
    o.n_min = c.n ? c.n : c.nmax;
    o.n_max = c.nmax ? c.nmax : c.n;
    if (c.qtilde) o.t = power_exponent(c.primes.front(), *c.qtilde, "qtilde");
    if (c.q1) o.m1 = power_exponent(c.primes.front(), *c.q1, "q1");
    if (c.tol) o.tol = *c.tol;
    o.seed = c.seed;
    o.workers = c.workers;
    return o;
}

int cmd_verify(const std::string& suite, const RunConfig& c, std::ostream& out, std::ostream& err)
{
    validate(c);
    preload_tables(c);
    const SuiteOptions o = suite_options(c);
    SuiteReport r;
    if (suite == "padic") r = suite_padic(o);
    else if (suite == "stationary") r = suite_stationary(o);
    else if (suite == "kchi") r = suite_kchi(o);
    else if (suite == "products") r = suite_products(o);
    else if (suite == "poisson") r = suite_poisson(o);
    else if (suite == "postnikov") r = suite_postnikov(o);
    else throw ConfigError("unknown suite " + suite);
    std::ostringstream report;
    write_report_jsonl(report, r);
    emit(c, "verify_" + suite + ".jsonl", report.str(), out, err);
    err << "verify " << suite << ": " << r.cases.size() << " cases, " << r.failures() << " failures\n";
    return r.passed() ? kExitPass : kExitFail;
}

int cmd_scan(const std::string& kind, const RunConfig& c, std::ostream& out, std::ostream& err)
{
    validate(c);
    preload_tables(c);
    if (kind == "moments") return scan_moments(c, out, err);
    if (kind == "large-values") return scan_large_values(c, out, err);
    if (kind == "product-constants") return scan_product_constants(c, out, err);
    throw ConfigError("unknown scan " + kind);
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"p-adic stationary phase, trace functions and central L-values at prime-power moduli", "pstat"};
    app.require_subcommand(1);
    RunConfig cfg;
    std::string suite, kind;

    auto* verify = app.add_subcommand("verify", "run an invariant suite; exit 1 on any violation");
    verify->add_option("suite", suite, "suite name")->required()->check(CLI::IsMember(std::vector<std::string>(std::begin(kSuites), std::end(kSuites))));
    add_run_flags(verify, cfg);

    auto* scan = app.add_subcommand("scan", "emit moment, large-value or product-constant tables");
    scan->add_option("kind", kind, "scan kind")->required()->check(CLI::IsMember(std::vector<std::string>(std::begin(kScans), std::end(kScans))));
    add_run_flags(scan, cfg);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? kExitPass : kExitConfig;
    }
    if (cfg.cache_dir.empty())
        if (const char* env = std::getenv(kCacheDirEnv)) cfg.cache_dir = env;

    try {
        if (verify->parsed()) return cmd_verify(suite, cfg, out, err);
        return cmd_scan(kind, cfg, out, err);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const DomainError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFail;
    }
}

} // namespace pstat
