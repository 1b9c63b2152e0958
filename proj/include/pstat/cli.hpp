#pragma once

// Command-line front end: `verify <suite>` and `scan <kind>`.
//
// Exit codes: 0 every assertion passed, 1 an assertion failed, 2 invalid
// configuration. The cache directory defaults to $PSTAT_CACHE_DIR.

#include "pstat/padic.hpp"
#include "pstat/suites.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pstat {

inline constexpr const char* kCacheDirEnv = "PSTAT_CACHE_DIR";
inline constexpr u64 kDeskScaleCap = 500'000;

enum ExitCode : int { kExitPass = 0, kExitFail = 1, kExitConfig = 2 };

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::vector<u64> primes;
    unsigned n = 0;      ///< 0: command default
    unsigned nmax = 0;   ///< 0: same as n
    std::optional<u64> q1, q2, qtilde;
    double k = 12;
    u64 seed = 1;
    std::optional<double> tol;
    unsigned workers = 0;
    std::filesystem::path out;
    std::filesystem::path cache_dir;
    bool allow_large = false;
};

/// Checks primes, exponent ranges, the desk-scale cap and p <= q1 <= q2 < q
/// (q the smallest modulus selected). Throws ConfigError.
void validate(const RunConfig& c);

/// Maps a validated configuration onto suite options.
SuiteOptions suite_options(const RunConfig& c);

int cmd_verify(const std::string& suite, const RunConfig& c, std::ostream& out, std::ostream& err);
int cmd_scan(const std::string& kind, const RunConfig& c, std::ostream& out, std::ostream& err);

/// Parses argv and dispatches; never throws.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace pstat
