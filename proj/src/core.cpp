#include "flagcast/core.hpp"

#include <algorithm>
#include <limits>

namespace flagcast {

namespace accset {

void normalize(AccountSet& s) {
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
}

bool contains(const AccountSet& s, AccountId a) {
    return std::binary_search(s.begin(), s.end(), a);
}

bool is_subset(const AccountSet& sub, const AccountSet& super) {
    return std::includes(super.begin(), super.end(), sub.begin(), sub.end());
}

AccountSet set_union(const AccountSet& a, const AccountSet& b) {
    AccountSet out;
    out.reserve(a.size() + b.size());
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

AccountSet set_intersection(const AccountSet& a, const AccountSet& b) {
    AccountSet out;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                          std::back_inserter(out));
    return out;
}

AccountSet set_difference(const AccountSet& a, const AccountSet& b) {
    AccountSet out;
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(),
                        std::back_inserter(out));
    return out;
}

}  // namespace accset

namespace {

void normalize_days(AccountSetLedger::DayMap& m) {
    for (auto& [account, days] : m) {
        std::sort(days.begin(), days.end());
        days.erase(std::unique(days.begin(), days.end()), days.end());
    }
}

}  // namespace

AccountSetLedger::AccountSetLedger(DayMap login_days, DayMap flag_days)
    : login_days_(std::move(login_days)), flag_days_(std::move(flag_days)) {
    normalize_days(login_days_);
    normalize_days(flag_days_);

    Day lo{std::numeric_limits<std::int32_t>::max()};
    Day hi{std::numeric_limits<std::int32_t>::min()};
    bool any = false;
    for (const auto* map : {&login_days_, &flag_days_}) {
        for (const auto& [account, days] : *map) {
            if (days.empty()) continue;
            any = true;
            lo = std::min(lo, days.front());
            hi = std::max(hi, days.back());
        }
    }
    if (!any) {
        throw ConfigError("cannot build a ledger from an empty trace");
    }
    coverage_ = DayInterval(lo, hi);
}

void AccountSetLedger::check_coverage(const DayInterval& window) const {
    if (!coverage_.contains(window)) {
        throw CoverageError("window [" + std::to_string(window.start.index) + "," +
                            std::to_string(window.end.index) +
                            "] leaves trace coverage [" +
                            std::to_string(coverage_.start.index) + "," +
                            std::to_string(coverage_.end.index) + "]");
    }
}

namespace {

// Days are sorted, so window membership is a single range probe.
bool any_day_in(const std::vector<Day>& days, const DayInterval& window) {
    auto it = std::lower_bound(days.begin(), days.end(), window.start);
    return it != days.end() && *it <= window.end;
}

}  // namespace

AccountSet AccountSetLedger::active_accounts(const DayInterval& window) const {
    check_coverage(window);
    AccountSet out;
    for (const auto& [account, days] : login_days_) {
        if (any_day_in(days, window)) out.push_back(account);
    }
    accset::normalize(out);
    return out;
}

AccountSet AccountSetLedger::flagged_accounts(const DayInterval& window) const {
    check_coverage(window);
    AccountSet out;
    for (const auto& [account, days] : flag_days_) {
        if (any_day_in(days, window)) out.push_back(account);
    }
    accset::normalize(out);
    return out;
}

std::optional<Day> AccountSetLedger::first_seen(AccountId account) const {
    auto it = login_days_.find(account);
    if (it == login_days_.end() || it->second.empty()) return std::nullopt;
    return it->second.front();
}

bool AccountSetLedger::active_in(AccountId account, const DayInterval& window) const {
    auto it = login_days_.find(account);
    return it != login_days_.end() && any_day_in(it->second, window);
}

bool AccountSetLedger::flagged_in(AccountId account, const DayInterval& window) const {
    auto it = flag_days_.find(account);
    return it != flag_days_.end() && any_day_in(it->second, window);
}

bool AccountSetLedger::flagged_on_or_before(AccountId account, Day day) const {
    auto it = flag_days_.find(account);
    if (it == flag_days_.end() || it->second.empty()) return false;
    return it->second.front() <= day;
}

std::optional<Day> AccountSetLedger::first_flagged(AccountId account) const {
    auto it = flag_days_.find(account);
    if (it == flag_days_.end() || it->second.empty()) return std::nullopt;
    return it->second.front();
}

std::int64_t AccountSetLedger::active_days_before(AccountId account, Day day) const {
    auto it = login_days_.find(account);
    if (it == login_days_.end()) return 0;
    const auto& days = it->second;
    return std::lower_bound(days.begin(), days.end(), day) - days.begin();
}

}  // namespace flagcast
