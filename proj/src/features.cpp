#include "flagcast/features.hpp"

#include <algorithm>
#include <unordered_map>

#include "flagcast/errors.hpp"
#include "flagcast/util.hpp"

namespace flagcast {

std::string feature_order_tag() {
    std::string tag;
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        if (i) tag.push_back(',');
        tag.append(kFeatureNames[i]);
    }
    return tag;
}

FeatureTable::FeatureTable(std::vector<FeatureVector> rows) : rows_(std::move(rows)) {
    std::sort(rows_.begin(), rows_.end(),
              [](const FeatureVector& a, const FeatureVector& b) {
                  return a.account < b.account;
              });
    for (std::size_t i = 1; i < rows_.size(); ++i) {
        if (rows_[i - 1].account == rows_[i].account) {
            throw ContractError("duplicate feature row for account " +
                                std::to_string(rows_[i].account.id));
        }
    }
}

const FeatureVector* FeatureTable::find(AccountId account) const {
    auto it = std::lower_bound(rows_.begin(), rows_.end(), account,
                               [](const FeatureVector& row, AccountId a) {
                                   return row.account < a;
                               });
    if (it == rows_.end() || it->account != account) return nullptr;
    return &*it;
}

namespace {

std::int64_t distinct_nonsentinel(std::vector<std::int32_t>& codes) {
    std::sort(codes.begin(), codes.end());
    std::int64_t count = 0;
    for (std::size_t i = 0; i < codes.size(); ++i) {
        if (codes[i] == kSentinel) continue;
        if (i == 0 || codes[i] != codes[i - 1]) ++count;
    }
    return count;
}

constexpr std::array<std::int32_t LoginEvent::*, 9> kCategoricalFields = {
    &LoginEvent::source,     &LoginEvent::login_type, &LoginEvent::status,
    &LoginEvent::password_status, &LoginEvent::action, &LoginEvent::geo,
    &LoginEvent::geo_status, &LoginEvent::asn,        &LoginEvent::user_agent};

}  // namespace

DailyFeatures daily_features(std::span<const LoginEvent> events_of_day) {
    if (events_of_day.empty()) {
        throw ContractError("daily_features needs at least one event");
    }
    const AccountId account = events_of_day.front().account;
    const Day day = events_of_day.front().day;
    for (const auto& e : events_of_day) {
        if (e.account != account || e.day != day) {
            throw ContractError("daily_features got a mixed account/day batch");
        }
    }

    DailyFeatures out;
    out.account = account;
    out.day = day;
    out.v[kLoginAttempts] = static_cast<std::int64_t>(events_of_day.size());

    std::vector<std::int32_t> codes;
    codes.reserve(events_of_day.size());
    for (std::size_t field = 0; field < kCategoricalFields.size(); ++field) {
        codes.clear();
        for (const auto& e : events_of_day) codes.push_back(e.*kCategoricalFields[field]);
        out.v[kUniqSources + field] = distinct_nonsentinel(codes);
    }

    for (const auto& e : events_of_day) {
        if (e.success == 1) ++out.v[kSuccessfulLogins];
        if (e.success == 0) ++out.v[kUnsuccessfulLogins];
        if (e.verified_mobile == 1) out.v[kVerifiedMobile] = 1;
    }
    return out;
}

std::optional<FeatureVector> aggregate_window(std::span<const DailyFeatures> daily,
                                              const DayInterval& window) {
    if (daily.empty()) return std::nullopt;

    const AccountId account = daily.front().account;
    std::vector<Day> days;
    days.reserve(daily.size());
    for (const auto& row : daily) {
        if (row.account != account) {
            throw ContractError("aggregate_window got rows from several accounts");
        }
        if (!window.contains(row.day)) {
            throw ContractError("daily row on day " + std::to_string(row.day.index) +
                                " lies outside the aggregation window");
        }
        days.push_back(row.day);
    }
    std::sort(days.begin(), days.end());
    if (std::adjacent_find(days.begin(), days.end()) != days.end()) {
        throw ContractError("aggregate_window expects one row per day");
    }

    FeatureVector out;
    out.account = account;
    out.window = window;
    std::int64_t mobile = 0;
    for (const auto& row : daily) {
        for (std::size_t i = kLoginAttempts; i <= kUnsuccessfulLogins; ++i) {
            out.values[i] += static_cast<double>(row.v[i]);
        }
        mobile |= row.v[kVerifiedMobile];
    }
    out.values[kVerifiedMobile] = static_cast<double>(mobile);
    return out;
}

FeatureTable extract_all(const AccountSetLedger& ledger,
                         std::span<const LoginEvent> events,
                         const DayInterval& window, const FeatureOptions& options,
                         unsigned threads) {
    if (!ledger.coverage().contains(window)) {
        throw CoverageError("window [" + std::to_string(window.start.index) + "," +
                            std::to_string(window.end.index) +
                            "] leaves trace coverage [" +
                            std::to_string(ledger.coverage().start.index) + "," +
                            std::to_string(ledger.coverage().end.index) + "]");
    }

    std::unordered_map<AccountId, std::vector<std::uint32_t>, AccountIdHash> buckets;
    for (std::size_t i = 0; i < events.size(); ++i) {
        if (window.contains(events[i].day)) {
            buckets[events[i].account].push_back(static_cast<std::uint32_t>(i));
        }
    }

    AccountSet accounts;
    accounts.reserve(buckets.size());
    for (const auto& [account, idx] : buckets) accounts.push_back(account);
    accset::normalize(accounts);

    std::vector<FeatureVector> rows(accounts.size());
    parallel_for(accounts.size(), threads, [&](std::size_t begin, std::size_t end) {
        std::vector<LoginEvent> day_batch;
        std::vector<DailyFeatures> daily;
        std::vector<std::int32_t> codes;
        for (std::size_t r = begin; r < end; ++r) {
            auto& idx = buckets.at(accounts[r]);
            std::sort(idx.begin(), idx.end(), [&](std::uint32_t a, std::uint32_t b) {
                if (events[a].day != events[b].day) return events[a].day < events[b].day;
                return a < b;
            });
            daily.clear();
            for (std::size_t i = 0; i < idx.size();) {
                day_batch.clear();
                const Day day = events[idx[i]].day;
                for (; i < idx.size() && events[idx[i]].day == day; ++i) {
                    day_batch.push_back(events[idx[i]]);
                }
                daily.push_back(daily_features(day_batch));
            }
            FeatureVector row = *aggregate_window(daily, window);

            if (options.window_distinct_uniques) {
                for (std::size_t field = 0; field < kCategoricalFields.size();
                     ++field) {
                    codes.clear();
                    for (std::uint32_t i : idx) {
                        codes.push_back(events[i].*kCategoricalFields[field]);
                    }
                    row.values[kUniqSources + field] =
                        static_cast<double>(distinct_nonsentinel(codes));
                }
            }
            rows[r] = row;
        }
    });

    return FeatureTable(std::move(rows));
}

void write_feature_dump(const std::filesystem::path& path, const FeatureTable& table) {
    std::string out = "account\twindow_start\twindow_end";
    for (std::size_t i = 1; i <= kFeatureCount; ++i) {
        out += "\tf" + std::to_string(i);
    }
    out.push_back('\n');
    for (const auto& row : table.rows()) {
        out += std::to_string(row.account.id);
        out += "\t" + std::to_string(row.window.start.index);
        out += "\t" + std::to_string(row.window.end.index);
        for (double v : row.values) {
            out.push_back('\t');
            out += format_double(v);
        }
        out.push_back('\n');
    }
    write_file(path, out);
}

}  // namespace flagcast
