#include "flagcast/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <utility>

#include "flagcast/errors.hpp"
#include "flagcast/util.hpp"

namespace flagcast {

namespace {

// Global category spaces personal pools are drawn from. Attacker
// infrastructure lives in a disjoint code range so a trace can be audited for
// leakage of post-compromise vocabulary into pre-compromise windows.
constexpr std::uint64_t kGeoSpace = 10000;
constexpr std::uint64_t kAsnSpace = 5000;
constexpr std::uint64_t kUaSpace = 20000;
constexpr std::int32_t kAttackerBase = 1 << 20;

// Field-level missingness, mimicking collection gaps in real telemetry.
constexpr double kMissingPasswordStatus = 0.05;
constexpr double kMissingGeoStatus = 0.05;
constexpr double kMissingAsn = 0.02;
constexpr double kMissingSuccess = 0.02;
constexpr double kMissingVerifiedMobile = 0.02;

constexpr std::array<const char*, 4> kArchetypeNames = {
    "robust", "vulnerable", "fake_dormant", "fake_active"};

bool known_archetype(const std::string& name) {
    return std::find(kArchetypeNames.begin(), kArchetypeNames.end(), name) !=
           kArchetypeNames.end();
}

bool fake_archetype(const std::string& name) {
    return name == "fake_dormant" || name == "fake_active";
}

void check_probability(double v, const std::string& what) {
    if (!(v >= 0.0 && v <= 1.0)) {
        throw SpecError(what + " must lie in [0,1], got " + format_double(v));
    }
}

struct Pools {
    std::vector<std::int32_t> geo;
    std::vector<std::int32_t> asn;
    std::vector<std::int32_t> ua;
};

struct AccountState {
    AccountId id;
    std::size_t archetype = 0;
    Day creation{0};
    std::int8_t verified_mobile = 0;
    Pools base;
    Rng rng{0};

    // Compromise schedule. onset/flag may run past the trace; the daily loop
    // clips them naturally.
    std::optional<Day> compromise;
    std::optional<Day> onset;
    std::optional<Day> flag;
    double onset_rate = 0.0;
    Pools onset_pools;
};

std::int32_t pick(Rng& rng, const std::vector<std::int32_t>& pool) {
    return pool[rng.next_below(pool.size())];
}

LoginEvent draw_event(Rng& rng, AccountId id, Day day, const Pools& pools,
                      double fail_rate, std::int8_t vm_latch) {
    LoginEvent e;
    e.account = id;
    e.day = day;
    e.source = static_cast<std::int32_t>(rng.next_below(3));
    e.login_type = static_cast<std::int32_t>(rng.next_below(2));
    e.status = static_cast<std::int32_t>(rng.next_below(3));
    e.password_status = rng.next_bernoulli(kMissingPasswordStatus)
                            ? kSentinel
                            : static_cast<std::int32_t>(rng.next_below(3));
    e.action = static_cast<std::int32_t>(rng.next_below(4));
    e.geo = pick(rng, pools.geo);
    e.geo_status = rng.next_bernoulli(kMissingGeoStatus)
                       ? kSentinel
                       : static_cast<std::int32_t>(rng.next_below(2));
    e.asn = rng.next_bernoulli(kMissingAsn) ? kSentinel : pick(rng, pools.asn);
    e.user_agent = pick(rng, pools.ua);
    e.success = rng.next_bernoulli(kMissingSuccess)
                    ? std::int8_t{-1}
                    : static_cast<std::int8_t>(rng.next_bernoulli(fail_rate) ? 0 : 1);
    e.verified_mobile =
        rng.next_bernoulli(kMissingVerifiedMobile) ? std::int8_t{-1} : vm_latch;
    return e;
}

std::vector<std::int32_t> draw_pool(Rng& rng, std::int32_t size,
                                    std::uint64_t space, std::int32_t offset) {
    std::vector<std::int32_t> pool(static_cast<std::size_t>(size));
    for (auto& code : pool) {
        code = offset + static_cast<std::int32_t>(rng.next_below(space));
    }
    return pool;
}

std::int32_t extension_size(std::int32_t pool, double multiplier) {
    auto grown = static_cast<std::int32_t>(std::ceil(pool * multiplier));
    return std::max(0, grown - pool);
}

}  // namespace

void Archetype::validate() const {
    if (!known_archetype(name)) {
        throw SpecError("unknown archetype '" + name +
                        "'; expected robust, vulnerable, fake_dormant, or "
                        "fake_active");
    }
    if (count < 0) throw SpecError("archetype " + name + ": count must be >= 0");
    if (!(daily_login_rate >= 0.0) || !std::isfinite(daily_login_rate)) {
        throw SpecError("archetype " + name + ": daily_login_rate must be >= 0");
    }
    if (geo_pool < 1 || asn_pool < 1 || ua_pool < 1) {
        throw SpecError("archetype " + name + ": pool sizes must be >= 1");
    }
    check_probability(fail_rate, "archetype " + name + ": fail_rate");
    check_probability(verified_mobile_prob,
                      "archetype " + name + ": verified_mobile_prob");
    check_probability(vulnerability, "archetype " + name + ": vulnerability");
}

void CampaignSpec::validate() const {
    if (start_day.index < 0) throw SpecError("campaign start_day must be >= 0");
    if (n_victims < 1) throw SpecError("campaign n_victims must be >= 1");
    auto check_mult = [](double m, const char* what) {
        if (!(m >= 1.0) || !std::isfinite(m)) {
            throw SpecError(std::string("campaign ") + what + " must be >= 1");
        }
    };
    check_mult(rate_multiplier, "rate_multiplier");
    check_mult(geo_multiplier, "geo_multiplier");
    check_mult(asn_multiplier, "asn_multiplier");
    check_mult(ua_multiplier, "ua_multiplier");
    if (exploit_delay_max < 0) {
        throw SpecError("campaign exploit_delay_max must be >= 0");
    }
}

void LagDistribution::validate() const {
    if (cdf.empty()) throw SpecError("lag cdf has no entries");
    std::int32_t prev_lag = std::numeric_limits<std::int32_t>::min();
    double prev_cum = 0.0;
    for (const auto& [lag, cum] : cdf) {
        if (lag < 0) throw SpecError("lag cdf contains a negative lag");
        if (lag <= prev_lag) {
            throw SpecError("lag cdf lags must be strictly increasing");
        }
        if (cum < prev_cum || cum > 1.0) {
            throw SpecError("lag cdf cumulative values must be non-decreasing "
                            "and end at 1");
        }
        prev_lag = lag;
        prev_cum = cum;
    }
    if (prev_cum != 1.0) throw SpecError("lag cdf must end at exactly 1");
}

std::int32_t LagDistribution::sample(Rng& rng) const {
    double u = rng.next_double();
    for (const auto& [lag, cum] : cdf) {
        if (u < cum) return lag;
    }
    return cdf.back().first;  // unreachable once validated; u < 1 always
}

LagDistribution default_flagging_lag() {
    return LagDistribution{{{1, 0.7431},
                            {2, 0.7890},
                            {3, 0.8198},
                            {4, 0.8489},
                            {5, 0.8650},
                            {6, 0.8859},
                            {7, 0.9000},
                            {21, 0.9859},
                            {28, 1.0}}};
}

Archetype default_archetype(const std::string& name) {
    Archetype a;
    a.name = name;
    if (name == "robust") {
        a.daily_login_rate = 0.3;
        a.geo_pool = 2;
        a.asn_pool = 2;
        a.ua_pool = 3;
        a.fail_rate = 0.05;
        a.verified_mobile_prob = 0.7;
        a.vulnerability = 0.002;
    } else if (name == "vulnerable") {
        a.daily_login_rate = 0.45;
        a.geo_pool = 3;
        a.asn_pool = 3;
        a.ua_pool = 6;
        a.fail_rate = 0.18;
        a.verified_mobile_prob = 0.15;
        a.vulnerability = 0.8;
    } else if (name == "fake_dormant") {
        a.daily_login_rate = 0.05;
        a.geo_pool = 1;
        a.asn_pool = 1;
        a.ua_pool = 2;
        a.fail_rate = 0.02;
    } else if (name == "fake_active") {
        a.daily_login_rate = 1.5;
        a.geo_pool = 4;
        a.asn_pool = 4;
        a.ua_pool = 8;
        a.fail_rate = 0.3;
    } else {
        throw SpecError("unknown archetype '" + name + "'");
    }
    return a;
}

void SynthSpec::validate() const {
    // The trace must be long enough to host any classification exercise
    // preset, whose widest layout spans 118 days.
    if (n_days < 118) {
        throw SpecError("n_days must be >= 118, got " + std::to_string(n_days));
    }
    if (archetypes.empty()) throw SpecError("population has no archetypes");
    std::int64_t total = 0;
    for (std::size_t i = 0; i < archetypes.size(); ++i) {
        archetypes[i].validate();
        for (std::size_t j = 0; j < i; ++j) {
            if (archetypes[j].name == archetypes[i].name) {
                throw SpecError("archetype '" + archetypes[i].name +
                                "' listed twice");
            }
        }
        total += archetypes[i].count;
    }
    if (total < 1) throw SpecError("population is empty; no archetype has a count");
    for (std::size_t i = 0; i < campaigns.size(); ++i) {
        campaigns[i].validate();
        if (campaigns[i].start_day.index >= n_days) {
            throw SpecError("campaign " + std::to_string(i) + " starts on day " +
                            std::to_string(campaigns[i].start_day.index) +
                            " beyond the trace (n_days=" + std::to_string(n_days) +
                            ")");
        }
    }
    lag.validate();
}

SynthOutput generate(const SynthSpec& spec, int threads) {
    spec.validate();

    std::vector<AccountState> states;
    std::int64_t total = 0;
    for (const auto& a : spec.archetypes) total += a.count;
    states.reserve(static_cast<std::size_t>(total));

    // Static account draws. The per-account stream is consumed in a fixed
    // order (creation, device latch, pools, fake_active lag) and then handed
    // to the daily loop, so campaign assignment below cannot perturb it.
    std::uint64_t next_id = 1;
    for (std::size_t ai = 0; ai < spec.archetypes.size(); ++ai) {
        const Archetype& arche = spec.archetypes[ai];
        const bool fake = fake_archetype(arche.name);
        for (std::int64_t k = 0; k < arche.count; ++k, ++next_id) {
            AccountState st;
            st.id = AccountId{next_id};
            st.archetype = ai;
            st.rng = Rng(derive_seed(spec.seed, next_id));
            if (fake) {
                st.creation = Day{static_cast<std::int32_t>(
                    st.rng.next_in(0, spec.n_days - 1))};
            } else if (st.rng.next_bernoulli(0.7)) {
                st.creation = Day{0};
            } else {
                st.creation = Day{static_cast<std::int32_t>(
                    st.rng.next_in(1, spec.n_days - 1))};
            }
            st.verified_mobile =
                st.rng.next_bernoulli(arche.verified_mobile_prob) ? 1 : 0;
            st.base.geo = draw_pool(st.rng, arche.geo_pool, kGeoSpace, 0);
            st.base.asn = draw_pool(st.rng, arche.asn_pool, kAsnSpace, 0);
            st.base.ua = draw_pool(st.rng, arche.ua_pool, kUaSpace, 0);
            if (arche.name == "fake_active") {
                // Abuse starts the day the account is born and the flagging
                // pipeline lags it like any other detection.
                st.onset = st.creation;
                st.flag = st.creation + spec.lag.sample(st.rng);
                st.onset_rate = arche.daily_login_rate;
                st.onset_pools = st.base;
            }
            states.push_back(std::move(st));
        }
    }

    // Campaign victim assignment. All draws here come from a per-campaign
    // stream and happen in ascending account order, in both signal modes, so
    // the flag schedule is identical whether or not behavior is coupled.
    for (std::size_t ci = 0; ci < spec.campaigns.size(); ++ci) {
        const CampaignSpec& camp = spec.campaigns[ci];
        Rng rng(derive_seed(spec.seed, "campaign." + std::to_string(ci)));

        // Weighted sampling without replacement via exponential keys:
        // key = Exp(1)/weight, keep the n smallest.
        std::vector<std::pair<double, std::size_t>> keyed;
        for (std::size_t si = 0; si < states.size(); ++si) {
            const AccountState& st = states[si];
            const Archetype& arche = spec.archetypes[st.archetype];
            if (fake_archetype(arche.name)) continue;
            if (arche.vulnerability <= 0.0) continue;
            if (st.creation > camp.start_day) continue;
            if (st.compromise) continue;
            double key = -std::log1p(-rng.next_double()) / arche.vulnerability;
            keyed.emplace_back(key, si);
        }
        if (std::cmp_less(keyed.size(), camp.n_victims)) {
            throw SpecError("campaign " + std::to_string(ci) + " requests " +
                            std::to_string(camp.n_victims) +
                            " victims but only " + std::to_string(keyed.size()) +
                            " accounts are eligible");
        }
        std::sort(keyed.begin(), keyed.end());
        keyed.resize(static_cast<std::size_t>(camp.n_victims));
        std::sort(keyed.begin(), keyed.end(),
                  [](const auto& a, const auto& b) { return a.second < b.second; });

        for (const auto& [key, si] : keyed) {
            AccountState& st = states[si];
            const Archetype& arche = spec.archetypes[st.archetype];
            st.compromise = camp.start_day;
            std::int32_t delay = static_cast<std::int32_t>(
                rng.next_in(0, camp.exploit_delay_max));
            st.onset = camp.start_day + delay;
            st.flag = *st.onset + spec.lag.sample(rng);
            st.onset_rate = arche.daily_login_rate * camp.rate_multiplier;
            st.onset_pools = st.base;
            auto extend = [&rng](std::vector<std::int32_t>& pool, std::int32_t n,
                                 std::uint64_t space) {
                for (std::int32_t i = 0; i < n; ++i) {
                    pool.push_back(kAttackerBase +
                                   static_cast<std::int32_t>(rng.next_below(space)));
                }
            };
            extend(st.onset_pools.geo,
                   extension_size(arche.geo_pool, camp.geo_multiplier), kGeoSpace);
            extend(st.onset_pools.asn,
                   extension_size(arche.asn_pool, camp.asn_multiplier), kAsnSpace);
            extend(st.onset_pools.ua,
                   extension_size(arche.ua_pool, camp.ua_multiplier), kUaSpace);
        }
    }

    // Event generation. Per-account buffers keep the result independent of
    // how accounts are chunked across workers.
    std::vector<std::vector<LoginEvent>> buffers(states.size());
    const bool coupled = spec.behavioral_signal;
    parallel_for(states.size(), static_cast<unsigned>(std::max(1, threads)),
                 [&](std::size_t begin, std::size_t end) {
        for (std::size_t si = begin; si < end; ++si) {
            AccountState& st = states[si];
            const Archetype& arche = spec.archetypes[st.archetype];
            const bool fake = fake_archetype(arche.name);
            auto& buf = buffers[si];
            for (Day d = st.creation; d.index < spec.n_days; d = d + 1) {
                double rate = arche.daily_login_rate;
                const Pools* pools = &st.base;
                bool forced = false;
                if (coupled && st.onset) {
                    if (d == *st.onset) {
                        // The flag anchors to the most recent prior login, so
                        // one is guaranteed here and none until the flag.
                        rate = st.onset_rate;
                        pools = &st.onset_pools;
                        forced = true;
                    } else if (d > *st.onset && d <= *st.flag) {
                        continue;
                    } else if (d > *st.flag && fake) {
                        break;  // suspended on detection
                    }
                }
                std::int64_t n = st.rng.next_poisson(rate);
                if (forced && n < 1) n = 1;
                for (std::int64_t i = 0; i < n; ++i) {
                    buf.push_back(draw_event(st.rng, st.id, d, *pools,
                                             arche.fail_rate, st.verified_mobile));
                }
            }
        }
    });

    SynthOutput out;
    std::size_t total_events = 0;
    for (const auto& buf : buffers) total_events += buf.size();
    out.logins.reserve(total_events);
    for (auto& buf : buffers) {
        out.logins.insert(out.logins.end(), buf.begin(), buf.end());
        buf.clear();
        buf.shrink_to_fit();
    }
    // Input is account-major with ascending days, so a stable sort on day
    // yields (day, account, emission order).
    std::stable_sort(out.logins.begin(), out.logins.end(),
                     [](const LoginEvent& a, const LoginEvent& b) {
                         return a.day < b.day;
                     });

    out.truth.reserve(states.size());
    for (const AccountState& st : states) {
        const Archetype& arche = spec.archetypes[st.archetype];
        TruthRecord t;
        t.account = st.id;
        t.archetype = arche.name;
        t.compromise_day = st.compromise;
        t.is_fake = fake_archetype(arche.name);
        if (st.flag && st.flag->index < spec.n_days) {
            t.flag_day = st.flag;
            if (coupled) t.lag_days = *st.flag - *st.onset;
            out.flags.push_back(FlagEvent{st.id, *st.flag});
        }
        out.truth.push_back(std::move(t));
    }
    std::sort(out.flags.begin(), out.flags.end(),
              [](const FlagEvent& a, const FlagEvent& b) {
                  if (a.day != b.day) return a.day < b.day;
                  return a.account < b.account;
              });
    return out;
}

namespace {

using kv::as_bool;
using kv::as_double;
using kv::as_int;
using kv::require;
using kv::take;

bool any_key_with_prefix(const std::map<std::string, std::string>& kv,
                         const std::string& prefix) {
    auto it = kv.lower_bound(prefix);
    return it != kv.end() && it->first.compare(0, prefix.size(), prefix) == 0;
}

LagDistribution parse_lag_cdf(const std::string& value, const std::string& origin) {
    LagDistribution d;
    std::size_t start = 0;
    while (start <= value.size()) {
        std::size_t comma = value.find(',', start);
        std::string entry = comma == std::string::npos
                                ? value.substr(start)
                                : value.substr(start, comma - start);
        std::size_t colon = entry.find(':');
        if (colon == std::string::npos) {
            throw ConfigError(origin + ": lag.cdf entry '" + entry +
                              "' is not lag:cumulative");
        }
        auto lag = as_int(entry.substr(0, colon), "lag.cdf", origin);
        auto cum = as_double(entry.substr(colon + 1), "lag.cdf", origin);
        d.cdf.emplace_back(static_cast<std::int32_t>(lag), cum);
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return d;
}

}  // namespace

SynthSpec parse_synth_spec(std::map<std::string, std::string>& kv,
                           const std::string& origin) {
    SynthSpec s;
    s.archetypes.clear();
    if (auto v = take(kv, "n_days")) {
        s.n_days = static_cast<std::int32_t>(as_int(*v, "n_days", origin));
    }
    if (auto v = take(kv, "seed")) {
        std::uint64_t seed = 0;
        if (!parse_u64(*v, seed)) {
            throw ConfigError(origin + ": key 'seed' has non-integer value '" + *v +
                              "'");
        }
        s.seed = seed;
    }
    if (auto v = take(kv, "signal.behavioral")) {
        s.behavioral_signal = as_bool(*v, "signal.behavioral", origin);
    }

    for (const char* name : kArchetypeNames) {
        const std::string prefix = std::string("accounts.") + name + ".";
        if (!any_key_with_prefix(kv, prefix)) continue;
        Archetype a = default_archetype(name);
        if (auto v = take(kv, prefix + "count")) {
            a.count = as_int(*v, prefix + "count", origin);
        }
        if (auto v = take(kv, prefix + "daily_login_rate")) {
            a.daily_login_rate = as_double(*v, prefix + "daily_login_rate", origin);
        }
        auto pool = [&](const char* field, std::int32_t& out) {
            if (auto v = take(kv, prefix + field)) {
                out = static_cast<std::int32_t>(as_int(*v, prefix + field, origin));
            }
        };
        pool("geo_pool", a.geo_pool);
        pool("asn_pool", a.asn_pool);
        pool("ua_pool", a.ua_pool);
        if (auto v = take(kv, prefix + "fail_rate")) {
            a.fail_rate = as_double(*v, prefix + "fail_rate", origin);
        }
        if (auto v = take(kv, prefix + "verified_mobile_prob")) {
            a.verified_mobile_prob =
                as_double(*v, prefix + "verified_mobile_prob", origin);
        }
        if (auto v = take(kv, prefix + "vulnerability")) {
            a.vulnerability = as_double(*v, prefix + "vulnerability", origin);
        }
        s.archetypes.push_back(std::move(a));
    }

    for (std::size_t i = 0;; ++i) {
        const std::string prefix = "campaign." + std::to_string(i) + ".";
        if (!any_key_with_prefix(kv, prefix)) break;
        CampaignSpec c;
        c.start_day = Day{static_cast<std::int32_t>(
            as_int(require(kv, prefix + "start_day", origin),
                   prefix + "start_day", origin))};
        c.n_victims = as_int(require(kv, prefix + "n_victims", origin),
                             prefix + "n_victims", origin);
        auto mult = [&](const char* field, double& out) {
            if (auto v = take(kv, prefix + field)) {
                out = as_double(*v, prefix + field, origin);
            }
        };
        mult("rate_multiplier", c.rate_multiplier);
        mult("geo_multiplier", c.geo_multiplier);
        mult("asn_multiplier", c.asn_multiplier);
        mult("ua_multiplier", c.ua_multiplier);
        if (auto v = take(kv, prefix + "exploit_delay_max")) {
            c.exploit_delay_max = static_cast<std::int32_t>(
                as_int(*v, prefix + "exploit_delay_max", origin));
        }
        s.campaigns.push_back(c);
    }

    if (auto v = take(kv, "lag.cdf")) {
        s.lag = parse_lag_cdf(*v, origin);
    }

    s.validate();
    return s;
}

std::string serialize_synth_spec(const SynthSpec& s) {
    std::string out;
    out += "n_days=" + std::to_string(s.n_days) + "\n";
    out += "seed=" + std::to_string(s.seed) + "\n";
    out += std::string("signal.behavioral=") + (s.behavioral_signal ? "1" : "0") +
           "\n";
    for (const Archetype& a : s.archetypes) {
        const std::string prefix = "accounts." + a.name + ".";
        out += prefix + "count=" + std::to_string(a.count) + "\n";
        out += prefix + "daily_login_rate=" + format_double(a.daily_login_rate) +
               "\n";
        out += prefix + "geo_pool=" + std::to_string(a.geo_pool) + "\n";
        out += prefix + "asn_pool=" + std::to_string(a.asn_pool) + "\n";
        out += prefix + "ua_pool=" + std::to_string(a.ua_pool) + "\n";
        out += prefix + "fail_rate=" + format_double(a.fail_rate) + "\n";
        out += prefix + "verified_mobile_prob=" +
               format_double(a.verified_mobile_prob) + "\n";
        out += prefix + "vulnerability=" + format_double(a.vulnerability) + "\n";
    }
    for (std::size_t i = 0; i < s.campaigns.size(); ++i) {
        const CampaignSpec& c = s.campaigns[i];
        const std::string prefix = "campaign." + std::to_string(i) + ".";
        out += prefix + "start_day=" + std::to_string(c.start_day.index) + "\n";
        out += prefix + "n_victims=" + std::to_string(c.n_victims) + "\n";
        out += prefix + "rate_multiplier=" + format_double(c.rate_multiplier) + "\n";
        out += prefix + "geo_multiplier=" + format_double(c.geo_multiplier) + "\n";
        out += prefix + "asn_multiplier=" + format_double(c.asn_multiplier) + "\n";
        out += prefix + "ua_multiplier=" + format_double(c.ua_multiplier) + "\n";
        out += prefix + "exploit_delay_max=" + std::to_string(c.exploit_delay_max) +
               "\n";
    }
    std::string cdf;
    for (const auto& [lag, cum] : s.lag.cdf) {
        if (!cdf.empty()) cdf += ",";
        cdf += std::to_string(lag) + ":" + format_double(cum);
    }
    out += "lag.cdf=" + cdf + "\n";
    return out;
}

namespace {

struct LineCursor {
    std::string_view text;
    std::size_t pos = 0;
    std::size_t line_no = 0;

    bool next(std::string_view& line) {
        if (pos >= text.size()) return false;
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos) {
            line = text.substr(pos);
            pos = text.size();
        } else {
            line = text.substr(pos, nl - pos);
            pos = nl + 1;
        }
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        ++line_no;
        return true;
    }
};

constexpr std::string_view kTruthHeader =
    "account\tarchetype\tcompromise_day\tis_fake\tflag_day";

std::optional<Day> parse_optional_day(std::string_view field,
                                      const std::string& origin,
                                      std::size_t line_no) {
    if (field.empty()) return std::nullopt;
    std::int64_t v = 0;
    if (!parse_i64(field, v) || v < 0 ||
        v > std::numeric_limits<std::int32_t>::max()) {
        throw ParseError(origin, line_no, 1,
                         "bad day value '" + std::string(field) + "'");
    }
    return Day{static_cast<std::int32_t>(v)};
}

}  // namespace

void write_truth_file(const std::filesystem::path& path,
                      std::span<const TruthRecord> truth) {
    std::string out;
    out.reserve(truth.size() * 24 + 64);
    out += kTruthHeader;
    out += '\n';
    for (const TruthRecord& t : truth) {
        out += std::to_string(t.account.id);
        out += '\t';
        out += t.archetype;
        out += '\t';
        if (t.compromise_day) out += std::to_string(t.compromise_day->index);
        out += t.is_fake ? "\t1\t" : "\t0\t";
        if (t.flag_day) out += std::to_string(t.flag_day->index);
        out += '\n';
    }
    write_file(path, out);
}

std::vector<TruthRecord> parse_truth_text(const std::string& text,
                                          const std::string& origin) {
    LineCursor cursor{text};
    std::string_view line;
    if (!cursor.next(line) || line != kTruthHeader) {
        throw ParseError(origin, 1, 1, "expected truth header '" +
                                           std::string(kTruthHeader) + "'");
    }
    std::vector<TruthRecord> out;
    while (cursor.next(line)) {
        if (line.empty()) continue;
        auto fields = split_tsv(line);
        if (fields.size() != 5) {
            throw ParseError(origin, cursor.line_no, 1,
                             "expected 5 fields, got " +
                                 std::to_string(fields.size()));
        }
        TruthRecord t;
        std::uint64_t acct = 0;
        if (!parse_u64(fields[0], acct)) {
            throw ParseError(origin, cursor.line_no, 1,
                             "bad account id '" + std::string(fields[0]) + "'");
        }
        t.account = AccountId{acct};
        if (fields[1].empty()) {
            throw ParseError(origin, cursor.line_no, 1, "empty archetype");
        }
        t.archetype = std::string(fields[1]);
        t.compromise_day = parse_optional_day(fields[2], origin, cursor.line_no);
        if (fields[3] == "0") {
            t.is_fake = false;
        } else if (fields[3] == "1") {
            t.is_fake = true;
        } else {
            throw ParseError(origin, cursor.line_no, 1,
                             "is_fake must be 0 or 1, got '" +
                                 std::string(fields[3]) + "'");
        }
        t.flag_day = parse_optional_day(fields[4], origin, cursor.line_no);
        if (t.flag_day && t.compromise_day && *t.flag_day < *t.compromise_day) {
            throw ParseError(origin, cursor.line_no, 1,
                             "flag_day precedes compromise_day");
        }
        out.push_back(std::move(t));
    }
    return out;
}

std::vector<TruthRecord> parse_truth_file(const std::filesystem::path& path) {
    return parse_truth_text(read_file(path), path.string());
}

LagDistribution compute_lag_cdf(const AccountSetLedger& ledger,
                                const DayInterval& interval) {
    if (!ledger.coverage().contains(interval)) {
        throw CoverageError(
            "lag interval [" + std::to_string(interval.start.index) + "," +
            std::to_string(interval.end.index) + "] outside trace coverage [" +
            std::to_string(ledger.coverage().start.index) + "," +
            std::to_string(ledger.coverage().end.index) + "]");
    }
    std::map<std::int32_t, std::int64_t> counts;
    std::int64_t total = 0;
    for (const auto& [account, flag_days] : ledger.flag_days()) {
        auto fit = std::lower_bound(flag_days.begin(), flag_days.end(),
                                    interval.start);
        if (fit == flag_days.end() || *fit > interval.end) continue;
        const Day first_flag = *fit;

        auto lit = ledger.login_days().find(account);
        if (lit == ledger.login_days().end()) continue;
        const auto& login_days = lit->second;
        auto in_interval = std::lower_bound(login_days.begin(), login_days.end(),
                                            interval.start);
        if (in_interval == login_days.end() || *in_interval > interval.end) {
            continue;
        }
        // Most recent login at or before the first flag; it may precede the
        // interval, matching how the lag is measured operationally.
        auto anchor = std::upper_bound(login_days.begin(), login_days.end(),
                                       first_flag);
        if (anchor == login_days.begin()) continue;
        ++counts[first_flag - *(anchor - 1)];
        ++total;
    }
    if (total == 0) {
        throw EmptyDistributionError(
            "no account has both a login and a flag inside [" +
            std::to_string(interval.start.index) + "," +
            std::to_string(interval.end.index) + "]");
    }
    LagDistribution d;
    std::int64_t running = 0;
    for (const auto& [lag, n] : counts) {
        running += n;
        d.cdf.emplace_back(lag, static_cast<double>(running) /
                                    static_cast<double>(total));
    }
    return d;
}

}  // namespace flagcast
