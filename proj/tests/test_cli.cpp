#include "doctest.h"
#include "pstat/cli.hpp"

#include "json.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

using namespace pstat;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out, err;
};

Run cli(std::vector<std::string> args)
{
    args.insert(args.begin(), "pstat");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& f)
{
    std::ifstream in(f, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::size_t line_count(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

fs::path fresh_dir(const std::string& name)
{
    const fs::path d = fs::temp_directory_path() / name;
    fs::remove_all(d);
    return d;
}

RunConfig with_p(u64 p, unsigned n)
{
    RunConfig c;
    c.primes = {p};
    c.n = n;
    return c;
}

} // namespace

TEST_CASE("configuration validation")
{
    CHECK_NOTHROW(validate(with_p(3, 5)));
    CHECK_THROWS_AS(validate(with_p(2, 5)), ConfigError);
    CHECK_THROWS_AS(validate(with_p(9, 2)), ConfigError);

    RunConfig c = with_p(3, 5);
    c.nmax = 4;
    CHECK_THROWS_AS(validate(c), ConfigError);

    c = with_p(3, 12);  // 531441 > 5e5
    CHECK_THROWS_AS(validate(c), ConfigError);
    c.allow_large = true;
    CHECK_NOTHROW(validate(c));

    c = with_p(3, 5);
    c.q1 = 9;
    c.q2 = 27;
    CHECK_NOTHROW(validate(c));
    c.q1 = 81;
    CHECK_THROWS_AS(validate(c), ConfigError);  // q1 > q2
    c.q1 = 12;
    CHECK_THROWS_AS(validate(c), ConfigError);  // not a power of p
    c.q1 = 9;
    c.q2 = 243;
    CHECK_THROWS_AS(validate(c), ConfigError);  // q2 = q
    c.q2.reset();
    c.qtilde = 3;
    CHECK_THROWS_AS(validate(c), ConfigError);  // qtilde < p^2
    c.qtilde = 81;
    CHECK_NOTHROW(validate(c));

    c = with_p(3, 5);
    c.tol = -1.0;
    CHECK_THROWS_AS(validate(c), ConfigError);
    c.tol.reset();
    c.k = 0;
    CHECK_THROWS_AS(validate(c), ConfigError);

    RunConfig two;
    two.primes = {3, 5};
    two.q1 = 9;
    CHECK_THROWS_AS(validate(two), ConfigError);

    c = with_p(5, 4);
    c.nmax = 6;
    c.qtilde = 25;
    c.q1 = 5;
    const SuiteOptions o = suite_options(c);
    CHECK(o.n_min == 4);
    CHECK(o.n_max == 6);
    CHECK(o.t == 2);
    CHECK(o.m1 == 1);
}

TEST_CASE("exit codes")
{
    CHECK(cli({"verify", "padic"}).code == kExitPass);
    CHECK(cli({"verify", "padic", "--p", "2"}).code == kExitConfig);
    CHECK(cli({"verify", "nonsense"}).code == kExitConfig);
    CHECK(cli({}).code == kExitConfig);
    CHECK(cli({"verify", "kchi", "--p", "3", "--n", "4", "--bogus"}).code == kExitConfig);
    CHECK(cli({"scan", "moments", "--p", "3", "--nmax", "13"}).code == kExitConfig);
    CHECK(cli({"--help"}).code == kExitPass);
    // A tolerance no floating-point sum can meet.
    CHECK(cli({"verify", "kchi", "--p", "3", "--n", "4", "--tol", "1e-300"}).code == kExitFail);
}

TEST_CASE("verify kchi report lists every (m, qtilde) residual")
{
    const Run r = cli({"verify", "kchi", "--p", "3", "--n", "5"});
    REQUIRE(r.code == kExitPass);
    std::istringstream in(r.out);
    std::string line;
    std::map<u64, std::set<u64>> seen;
    nlohmann::json last;
    while (std::getline(in, line)) {
        last = nlohmann::json::parse(line);  // throws on invalid JSON
        if (last.contains("m")) seen[last["qtilde"].get<u64>()].insert(last["m"].get<u64>());
    }
    CHECK(seen[9].size() == 6);
    CHECK(seen[27].size() == 18);
    CHECK(seen[81].size() == 54);
    CHECK(last["summary"] == true);
    CHECK(last["failures"] == 0);
}

TEST_CASE("reports go to the output directory and are byte-identical on rerun")
{
    const fs::path dir = fresh_dir("pstat_cli_verify");
    for (const char* suite : {"padic", "products", "postnikov"}) {
        REQUIRE(cli({"verify", suite, "--p", "3", "--n", "4", "--out", dir.string()}).code == kExitPass);
        const fs::path file = dir / (std::string("verify_") + suite + ".jsonl");
        REQUIRE(fs::exists(file));
        const std::string first = slurp(file);
        REQUIRE(cli({"verify", suite, "--p", "3", "--n", "4", "--out", dir.string(), "--workers", "3"}).code == kExitPass);
        CHECK(slurp(file) == first);
    }
    fs::remove_all(dir);
}

TEST_CASE("scan moments: CSV, determinism and resume")
{
    const fs::path out = fresh_dir("pstat_cli_moments");
    const fs::path cache = fresh_dir("pstat_cli_moments_cache");
    const std::vector<std::string> args{"scan", "moments", "--p", "3", "--nmax", "5", "--k", "12",
                                        "--out", out.string(), "--cache-dir", cache.string()};
    REQUIRE(cli(args).code == kExitPass);
    const std::string csv = slurp(out / "moments_p3_k12.csv");
    CHECK(csv.rfind("q,moment,moment_over_q2\n9,", 0) == 0);
    CHECK(line_count(csv) == 5);
    const fs::path rows = cache / "moments_p3_k12.jsonl";
    REQUIRE(fs::exists(rows));
    const std::size_t cached = line_count(slurp(rows));
    CHECK(cached == 5);  // header + four rows

    fs::remove(out / "moments_p3_k12.csv");
    REQUIRE(cli(args).code == kExitPass);
    CHECK(slurp(out / "moments_p3_k12.csv") == csv);
    CHECK(line_count(slurp(rows)) == cached);  // nothing recomputed

    // Without persistence the numbers are the same.
    const Run plain = cli({"scan", "moments", "--p", "3", "--nmax", "5"});
    CHECK(plain.out == csv);
    fs::remove_all(out);
    fs::remove_all(cache);
}

TEST_CASE("cache directory from the environment")
{
    const fs::path cache = fresh_dir("pstat_cli_env_cache");
    ::setenv(kCacheDirEnv, cache.string().c_str(), 1);
    const Run r = cli({"scan", "moments", "--p", "3", "--n", "3", "--nmax", "4"});
    ::unsetenv(kCacheDirEnv);
    REQUIRE(r.code == kExitPass);
    CHECK(fs::exists(cache / "moments_p3_k12.jsonl"));
    CHECK(fs::exists(cache / "units_p3_n3.bin"));
    fs::remove_all(cache);
}

TEST_CASE("scan large-values spans the range of interest")
{
    const fs::path out = fresh_dir("pstat_cli_lv");
    const std::vector<std::string> args{"scan", "large-values", "--p", "3", "--n", "6", "--out", out.string()};
    REQUIRE(cli(args).code == kExitPass);
    const std::string csv = slurp(out / "large_values_p3_n6.csv");
    const auto summary = nlohmann::json::parse(slurp(out / "large_values_p3_n6.json"));
    const double q = 729;
    CHECK(summary["q"] == 729);
    CHECK(summary["v_low"].get<double>() == doctest::Approx(std::pow(q, 1.0 / 8 - 0.05)));
    CHECK(summary["v_high"].get<double>() == doctest::Approx(std::pow(q, 1.0 / 6 + 0.05)));
    CHECK(summary["primitive_characters"] == 324);
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    CHECK(line == "V,count,in_range,twelfth_ratio,fourth_ratio");
    double first = 0, last = 0;
    int rows = 0, inside = 0;
    while (std::getline(in, line)) {
        const double V = std::stod(line.substr(0, line.find(',')));
        if (!rows) first = V;
        last = V;
        ++rows;
        inside += line.find(",1,") != std::string::npos;
    }
    CHECK(rows == 24);
    CHECK(first < summary["v_low"].get<double>());
    CHECK(last > summary["v_high"].get<double>());
    CHECK(inside > 0);
    // The store written on the first run is reused.
    CHECK(fs::exists(out / "lvalues_p3_n6.jsonl"));
    const std::string store = slurp(out / "lvalues_p3_n6.jsonl");
    REQUIRE(cli(args).code == kExitPass);
    CHECK(slurp(out / "large_values_p3_n6.csv") == csv);
    CHECK(slurp(out / "lvalues_p3_n6.jsonl") == store);
    fs::remove_all(out);
}

TEST_CASE("scan product-constants")
{
    const Run r = cli({"scan", "product-constants", "--p", "3", "--n", "4"});
    REQUIRE(r.code == kExitPass);
    CHECK(r.out.rfind("p,n,qtilde,sign,pairs,sup_ratio\n3,4,9,1,", 0) == 0);
    CHECK(line_count(r.out) == 5);  // t = 2, 3 and both signs
    CHECK(cli({"scan", "product-constants", "--p", "3", "--n", "2"}).code == kExitConfig);
}

TEST_CASE("unwritable output directory")
{
    const fs::path blocker = fresh_dir("pstat_cli_blocker");
    std::ofstream(blocker) << "a file, not a directory";
    const Run r = cli({"scan", "moments", "--p", "3", "--nmax", "3", "--out", (blocker / "sub").string()});
    CHECK(r.code == kExitConfig);
    fs::remove_all(blocker);
}
