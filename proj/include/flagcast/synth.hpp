#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flagcast/core.hpp"
#include "flagcast/ingest.hpp"
#include "flagcast/rng.hpp"

namespace flagcast {

struct Archetype {
    std::string name;
    std::int64_t count = 0;
    double daily_login_rate = 0.0;
    std::int32_t geo_pool = 1;
    std::int32_t asn_pool = 1;
    std::int32_t ua_pool = 1;
    double fail_rate = 0.0;
    double verified_mobile_prob = 0.0;
    double vulnerability = 0.0;  // victim-sampling weight per campaign

    void validate() const;  // SpecError
    bool operator==(const Archetype&) const = default;
};

struct CampaignSpec {
    Day start_day{0};
    std::int64_t n_victims = 0;
    double rate_multiplier = 3.0;
    double geo_multiplier = 4.0;
    double asn_multiplier = 4.0;
    double ua_multiplier = 4.0;
    std::int32_t exploit_delay_max = 14;  // uniform delay in [0, max] days

    void validate() const;  // SpecError
    bool operator==(const CampaignSpec&) const = default;
};

struct TruthRecord {
    AccountId account;
    std::string archetype;
    std::optional<Day> compromise_day;
    bool is_fake = false;
    std::optional<Day> flag_day;
    // Scheduled flagging lag; only set when the trace also realizes it as
    // flag_day minus the most recent prior login day.
    std::optional<std::int32_t> lag_days;
    bool operator==(const TruthRecord&) const = default;
};

struct LagDistribution {
    // (lag in days, cumulative probability); lags strictly increasing,
    // cumulative values non-decreasing and ending at 1.
    std::vector<std::pair<std::int32_t, double>> cdf;

    void validate() const;  // SpecError
    std::int32_t sample(Rng& rng) const;
    bool operator==(const LagDistribution&) const = default;
};

// The production flagging pipeline's measured lag profile.
LagDistribution default_flagging_lag();

struct SynthSpec {
    std::int32_t n_days = 118;
    std::uint64_t seed = 42;
    // When false, compromise changes nothing about behavior: flags still fire
    // on schedule but carry no learnable trace.
    bool behavioral_signal = true;
    std::vector<Archetype> archetypes;
    std::vector<CampaignSpec> campaigns;
    LagDistribution lag = default_flagging_lag();

    void validate() const;  // SpecError
    bool operator==(const SynthSpec&) const = default;
};

// Archetype parameter sets used when a spec names an archetype but omits
// fields. Counts default to zero; a spec only populates what it names.
Archetype default_archetype(const std::string& name);

// Consumes recognized keys from kv; unknown keys are left behind for the
// caller to reject. ConfigError on malformed values, SpecError on infeasible
// combinations (via validate).
SynthSpec parse_synth_spec(std::map<std::string, std::string>& kv,
                           const std::string& origin);
std::string serialize_synth_spec(const SynthSpec& spec);

struct SynthOutput {
    std::vector<LoginEvent> logins;  // sorted by (day, account, emission order)
    std::vector<FlagEvent> flags;    // sorted by (day, account)
    std::vector<TruthRecord> truth;  // sorted by account
};

SynthOutput generate(const SynthSpec& spec, int threads = 1);

void write_truth_file(const std::filesystem::path& path,
                      std::span<const TruthRecord> truth);
std::vector<TruthRecord> parse_truth_text(const std::string& text,
                                          const std::string& origin);
std::vector<TruthRecord> parse_truth_file(const std::filesystem::path& path);

// Empirical flagging lag over accounts with at least one login and one flag
// inside the interval: first in-interval flag minus the most recent login at
// or before it. Accounts with no such login are skipped.
LagDistribution compute_lag_cdf(const AccountSetLedger& ledger,
                                const DayInterval& interval);

}  // namespace flagcast
