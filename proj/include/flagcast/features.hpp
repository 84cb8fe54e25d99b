#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "flagcast/core.hpp"
#include "flagcast/ingest.hpp"

namespace flagcast {

inline constexpr std::size_t kFeatureCount = 13;

// Index constants double as the frozen on-disk feature order.
enum FeatureIndex : std::size_t {
    kLoginAttempts = 0,
    kUniqSources = 1,
    kUniqLoginTypes = 2,
    kUniqStatuses = 3,
    kUniqPasswordStatuses = 4,
    kUniqActions = 5,
    kUniqGeos = 6,
    kUniqGeoStatuses = 7,
    kUniqAsns = 8,
    kUniqUserAgents = 9,
    kSuccessfulLogins = 10,
    kUnsuccessfulLogins = 11,
    kVerifiedMobile = 12,
};

inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "login_attempts",     "uniq_sources",     "uniq_login_types",
    "uniq_statuses",      "uniq_password_statuses", "uniq_actions",
    "uniq_geos",          "uniq_geo_statuses", "uniq_asns",
    "uniq_user_agents",   "successful_logins", "unsuccessful_logins",
    "verified_mobile"};

// Comma-joined kFeatureNames; recorded in model files so importances stay
// attributable if the order ever changes.
std::string feature_order_tag();

// One account-day row. verified_mobile is stored 0/1 in the last slot.
struct DailyFeatures {
    AccountId account;
    Day day;
    std::array<std::int64_t, kFeatureCount> v{};

    bool operator==(const DailyFeatures&) const = default;
};

struct FeatureVector {
    AccountId account;
    DayInterval window;
    std::array<double, kFeatureCount> values{};

    bool operator==(const FeatureVector&) const = default;
};

struct FeatureOptions {
    // Default: uniqueness features aggregate as the sum of daily unique
    // counts. When set, they are recomputed as distinct counts over the whole
    // window instead.
    bool window_distinct_uniques = false;

    bool operator==(const FeatureOptions&) const = default;
};

// Rows sorted by account; at most one row per account.
class FeatureTable {
public:
    explicit FeatureTable(std::vector<FeatureVector> rows);
    FeatureTable() = default;

    const FeatureVector* find(AccountId account) const;
    const std::vector<FeatureVector>& rows() const { return rows_; }
    std::size_t size() const { return rows_.size(); }

    bool operator==(const FeatureTable&) const = default;

private:
    std::vector<FeatureVector> rows_;
};

// All events must share one account and one day; the span must be non-empty.
DailyFeatures daily_features(std::span<const LoginEvent> events_of_day);

// Aggregates one account's daily rows (one row per day, all inside `window`)
// under the sum-of-daily-uniques rule. Empty input means the account was not
// active, hence no vector.
std::optional<FeatureVector> aggregate_window(std::span<const DailyFeatures> daily,
                                              const DayInterval& window);

// One vector per account active in the window. The ledger must have been
// built from `events`; it supplies the coverage contract.
FeatureTable extract_all(const AccountSetLedger& ledger,
                         std::span<const LoginEvent> events,
                         const DayInterval& window, const FeatureOptions& options = {},
                         unsigned threads = 1);

void write_feature_dump(const std::filesystem::path& path, const FeatureTable& table);

}  // namespace flagcast
