#include "pstat/characters.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <map>
#include <random>

namespace pstat {

namespace {

std::vector<u64> prime_factors(u64 x)
{
    std::vector<u64> out;
    for (u64 d = 2; d * d <= x; ++d) {
        if (x % d) continue;
        out.push_back(d);
        while (x % d == 0) x /= d;
    }
    if (x > 1) out.push_back(x);
    return out;
}

constexpr std::array<char, 8> kMagic{'P', 'S', 'T', 'A', 'T', 'C', 'H', 'R'};

template <class T>
void put(std::ostream& os, T v)
{
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
bool take(std::istream& is, T& v)
{
    return static_cast<bool>(is.read(reinterpret_cast<char*>(&v), sizeof v));
}

} // namespace

u64 find_generator(u64 p, unsigned n)
{
    const PrimePowerModulus m(p, n);
    const ModRing r(m.q());
    const u64 phi = m.phi();
    std::vector<u64> primes = prime_factors(p - 1);
    if (n >= 2) primes.push_back(p);
    for (u64 g = 2; g < m.q(); ++g) {
        if (g % p == 0) continue;
        bool ok = true;
        for (u64 l : primes)
            if (r.pow(g, phi / l) == 1) {
                ok = false;
                break;
            }
        if (ok) return g;
    }
    throw std::logic_error("find_generator: no generator found");
}

UnitGroupTable::UnitGroupTable(u64 p, unsigned n) : m_(p, n), g_(find_generator(p, n))
{
    if (m_.q() > (u64{1} << 31)) throw std::invalid_argument("UnitGroupTable: modulus too large for a full table");
    const ModRing r(m_.q());
    dlog_.assign(m_.q(), kNotUnit);
    u64 x = 1;
    for (u64 k = 0; k < m_.phi(); ++k) {
        dlog_[x] = static_cast<std::uint32_t>(k);
        x = r.mul(x, g_);
    }
    build_powers();
}

UnitGroupTable::UnitGroupTable(const PrimePowerModulus& m, u64 g, std::vector<std::uint32_t> dlog)
    : m_(m), g_(g), dlog_(std::move(dlog))
{
    build_powers();
}

void UnitGroupTable::build_powers()
{
    pow_.assign(m_.phi(), 0);
    for (u64 x = 0; x < m_.q(); ++x)
        if (dlog_[x] != kNotUnit) pow_[dlog_[x]] = static_cast<std::uint32_t>(x);
}

u64 UnitGroupTable::dlog(u64 u) const
{
    const std::uint32_t k = dlog_[u % m_.q()];
    if (k == kNotUnit) throw DomainError("dlog: not a unit");
    return k;
}

const std::vector<u64>& UnitGroupTable::log_table() const
{
    std::call_once(log_once_, [this] {
        log_ = plog_table(p(), n());
        c_.resize(log_.size());
        for (u64 k = 0; k < c_.size(); ++k) c_[k] = dlog(1 + k * p()) / (p() - 1);
    });
    return log_;
}

const std::vector<u64>& UnitGroupTable::c_table() const
{
    log_table();
    return c_;
}

void UnitGroupTable::save(const std::filesystem::path& file) const
{
    std::filesystem::create_directories(file.parent_path());
    const std::filesystem::path tmp = file.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary);
        if (!os) throw std::runtime_error("cannot write character cache " + tmp.string());
        os.write(kMagic.data(), kMagic.size());
        put<std::uint32_t>(os, kCacheVersion);
        put<std::uint64_t>(os, p());
        put<std::uint32_t>(os, n());
        put<std::uint64_t>(os, g_);
        os.write(reinterpret_cast<const char*>(dlog_.data()), static_cast<std::streamsize>(dlog_.size() * 4));
        if (!os) throw std::runtime_error("short write to character cache " + tmp.string());
    }
    std::filesystem::rename(tmp, file);
}

std::shared_ptr<UnitGroupTable> UnitGroupTable::load(const std::filesystem::path& file, u64 p, unsigned n)
{
    std::ifstream is(file, std::ios::binary);
    if (!is) return nullptr;
    std::array<char, 8> magic{};
    std::uint32_t version = 0, nn = 0;
    std::uint64_t pp = 0, g = 0;
    if (!is.read(magic.data(), magic.size()) || magic != kMagic) return nullptr;
    if (!take(is, version) || version != kCacheVersion) return nullptr;
    if (!take(is, pp) || !take(is, nn) || !take(is, g) || pp != p || nn != n) return nullptr;
    const PrimePowerModulus m(p, n);
    if (g != find_generator(p, n)) return nullptr;
    std::vector<std::uint32_t> dlog(m.q());
    if (!is.read(reinterpret_cast<char*>(dlog.data()), static_cast<std::streamsize>(dlog.size() * 4))) return nullptr;

    // Spot checks against the generator.
    const ModRing r(m.q());
    std::mt19937_64 rng(m.q());
    for (int i = 0; i < 64; ++i) {
        const u64 x = rng() % m.q();
        if ((dlog[x] == kNotUnit) != (x % p == 0)) return nullptr;
        if (dlog[x] != kNotUnit && r.pow(g, dlog[x]) != x) return nullptr;
    }
    return std::shared_ptr<UnitGroupTable>(new UnitGroupTable(m, g, std::move(dlog)));
}

std::shared_ptr<const UnitGroupTable> UnitGroupTable::get(u64 p, unsigned n, const std::filesystem::path& cache_dir)
{
    static std::mutex mu;
    static std::map<std::pair<u64, unsigned>, std::shared_ptr<const UnitGroupTable>> memo;
    std::lock_guard lock(mu);
    auto& slot = memo[{p, n}];
    std::filesystem::path file;
    if (!cache_dir.empty()) file = cache_dir / ("units_p" + std::to_string(p) + "_n" + std::to_string(n) + ".bin");
    if (slot) {
        if (!file.empty() && !std::filesystem::exists(file)) slot->save(file);
        return slot;
    }
    if (!file.empty())
        if (auto t = load(file, p, n)) return slot = std::move(t);
    auto t = std::make_shared<UnitGroupTable>(p, n);
    if (!file.empty()) t->save(file);
    return slot = std::move(t);
}

DirichletCharacter::DirichletCharacter(std::shared_ptr<const UnitGroupTable> table, u64 index)
    : table_(std::move(table)), a_(index % table_->phi())
{
    if (a_ == 0)
        cond_ = 0;
    else
        cond_ = table_->n() - static_cast<unsigned>(ordp(table_->p(), a_).value());
}

u64 DirichletCharacter::phase(u64 x) const
{
    const u64 k = table_->dlog_table()[x % table_->q()];
    return static_cast<u64>(static_cast<u128>(a_) * k % table_->phi());
}

cplx DirichletCharacter::operator()(i64 x) const
{
    const u64 r = ModRing(q()).reduce_signed(x);
    if (!is_unit(r)) return 0.0;
    return expi(static_cast<double>(phase(r)) / static_cast<double>(table_->phi()));
}

DirichletCharacter DirichletCharacter::conj() const { return {table_, table_->phi() - a_}; }

DirichletCharacter DirichletCharacter::operator*(const DirichletCharacter& o) const
{
    if (!(o.modulus() == modulus())) throw std::invalid_argument("character product: moduli differ");
    return {table_, (a_ + o.a_) % table_->phi()};
}

DirichletCharacter DirichletCharacter::inducer(const std::filesystem::path& cache_dir) const
{
    if (principal()) throw DomainError("inducer: the principal character has no primitive inducer of positive level");
    if (primitive()) return *this;
    const u64 p = table_->p();
    auto low = UnitGroupTable::get(p, cond_, cache_dir);
    const u64 a0 = a_ / ipow(p, table_->n() - cond_);
    const u64 c = low->dlog(table_->generator() % low->q());
    const u64 cinv = ModRing(low->phi()).inv(c % low->phi());
    return {low, static_cast<u64>(static_cast<u128>(a0) * cinv % low->phi())};
}

DirichletCharacter DirichletCharacter::lift_to(std::shared_ptr<const UnitGroupTable> target) const
{
    if (target->p() != table_->p() || target->n() < table_->n())
        throw std::invalid_argument("lift_to: target modulus must be a multiple of the current one");
    const u64 c = table_->dlog(target->generator() % table_->q());
    const u64 ac = static_cast<u64>(static_cast<u128>(a_) * c % table_->phi());
    return {target, ac * ipow(table_->p(), target->n() - table_->n())};
}

u64 DirichletCharacter::postnikov_A() const
{
    const unsigned n = table_->n();
    if (!primitive() || n < 2) throw DomainError("postnikov_A: needs a primitive character with n >= 2");
    const u64 p = table_->p();
    const u64 pn1 = ipow(p, n - 1);
    const auto& L = table_->log_table();
    const auto& c = table_->c_table();
    const ModRing r(pn1);
    const u64 ell = L[1] / p; // plog(1+p) has valuation exactly 1
    return r.mul(r.mul(a_ % pn1, c[1] % pn1), r.inv(ell % pn1));
}

std::vector<DirichletCharacter> characters_mod(std::shared_ptr<const UnitGroupTable> table)
{
    std::vector<DirichletCharacter> out;
    out.reserve(table->phi());
    for (u64 a = 0; a < table->phi(); ++a) out.emplace_back(table, a);
    return out;
}

std::vector<DirichletCharacter> primitive_characters(std::shared_ptr<const UnitGroupTable> table)
{
    std::vector<DirichletCharacter> out;
    for (u64 a = 0; a < table->phi(); ++a) {
        DirichletCharacter chi(table, a);
        if (chi.primitive()) out.push_back(std::move(chi));
    }
    return out;
}

u64 postnikov_violations(const DirichletCharacter& chi, u64 A, u64 stride)
{
    const UnitGroupTable& t = chi.table();
    const u64 p = t.p(), q = t.q();
    const auto& L = t.log_table();
    const ModRing r(q);
    const u64 Aq = A % q;
    u64 bad = 0;
    auto check = [&](u64 k) {
        // chi(1+kp) = e(ph / phi) with (p-1) | ph, i.e. e(p (ph/(p-1)) / q).
        const u64 ph = chi.phase(1 + k * p);
        if (ph % (p - 1) != 0 || r.mul(p, ph / (p - 1)) != r.mul(Aq, L[k])) ++bad;
    };
    const u64 K = L.size();
    if (stride <= 1) {
        for (u64 k = 0; k < K; ++k) check(k);
    } else {
        check(1);
        for (u64 k = 0; k < K; k += stride) check(k);
    }
    return bad;
}

PostnikovCheck verify_postnikov(const DirichletCharacter& chi, u64 stride, bool brute_force_uniqueness)
{
    PostnikovCheck out;
    out.A = chi.postnikov_A();
    out.unit = out.A % chi.table().p() != 0;
    out.violations = postnikov_violations(chi, out.A, stride);
    out.exhaustive = stride <= 1;
    if (brute_force_uniqueness) {
        const u64 pn1 = chi.q() / chi.table().p();
        const auto& L = chi.table().log_table();
        const u64 p = chi.table().p(), q = chi.q();
        const ModRing r(q);
        const u64 ph = chi.phase(1 + p);
        u64 count = 0;
        for (u64 cand = 0; cand < pn1; ++cand) {
            // Quick reject on k = 1 before the full sweep.
            if (r.mul(p, ph / (p - 1)) != r.mul(cand, L[1])) continue;
            if (postnikov_violations(chi, cand, stride) == 0) ++count;
        }
        out.solutions = count;
    }
    return out;
}

bool postnikov_tables_consistent(const UnitGroupTable& t)
{
    if (t.n() < 2) return true;
    const auto& L = t.log_table();
    const auto& c = t.c_table();
    const ModRing r(t.q());
    if (ordp(t.p(), L[1]) != Valuation(1)) return false;
    for (u64 k = 0; k < L.size(); ++k)
        if (r.mul(c[k], L[1]) != r.mul(c[1], L[k])) return false;
    return true;
}

cplx orthogonality_sum(const UnitGroupTable& t, u64 u, u64 v)
{
    const u64 du = t.dlog(u), dv = t.dlog(v), phi = t.phi();
    const u64 diff = (du + phi - dv) % phi;
    cplx acc = 0.0;
    for (u64 b = 0; b < phi; ++b)
        acc += expi(static_cast<double>(static_cast<u128>(b) * diff % phi) / static_cast<double>(phi));
    return acc;
}

u64 delta_q(const DirichletCharacter& a, const DirichletCharacter& b)
{
    if (!(a.modulus() == b.modulus())) throw std::invalid_argument("delta_q: moduli differ");
    const u64 p = a.table().p();
    const unsigned n = a.table().n();
    const u64 pn1 = ipow(p, n - 1);
    const u64 d = (a.postnikov_A() + pn1 - b.postnikov_A()) % pn1;
    const Valuation v = ordp(p, d);
    const unsigned e = v.is_infinite() ? n - 1 : std::min<unsigned>(static_cast<unsigned>(v.value()), n - 1);
    return ipow(p, e);
}

} // namespace pstat
