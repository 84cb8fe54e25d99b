#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "flagcast/errors.hpp"

namespace flagcast {

// Whole-day index into a trace. Day 0 is the first day of a trace that starts
// at its own epoch; loaded traces may sit anywhere on the axis.
struct Day {
    std::int32_t index = 0;

    auto operator<=>(const Day&) const = default;
};

inline Day operator+(Day d, std::int32_t days) { return Day{d.index + days}; }
inline Day operator-(Day d, std::int32_t days) { return Day{d.index - days}; }
inline std::int32_t operator-(Day a, Day b) { return a.index - b.index; }

// Opaque account identifier. Compared and hashed by value only.
struct AccountId {
    std::uint64_t id = 0;

    auto operator<=>(const AccountId&) const = default;
};

struct AccountIdHash {
    std::size_t operator()(const AccountId& a) const noexcept {
        return std::hash<std::uint64_t>{}(a.id);
    }
};

struct DayHash {
    std::size_t operator()(const Day& d) const noexcept {
        return std::hash<std::int32_t>{}(d.index);
    }
};

// Closed interval of days. start <= end always holds.
struct DayInterval {
    Day start;
    Day end;

    DayInterval() = default;
    DayInterval(Day s, Day e) : start(s), end(e) {
        if (start > end) {
            throw ContractError("day interval start " + std::to_string(s.index) +
                                " exceeds end " + std::to_string(e.index));
        }
    }

    std::int32_t length_days() const { return end - start + 1; }
    bool contains(Day d) const { return start <= d && d <= end; }
    bool contains(const DayInterval& other) const {
        return start <= other.start && other.end <= end;
    }

    auto operator<=>(const DayInterval&) const = default;
};

// Canonical account-set representation: a sorted, duplicate-free vector.
// Keeps set algebra deterministic and cheap at trace scale.
using AccountSet = std::vector<AccountId>;

namespace accset {

// Sorts and deduplicates in place, turning any vector into a valid AccountSet.
void normalize(AccountSet& s);

bool contains(const AccountSet& s, AccountId a);
bool is_subset(const AccountSet& sub, const AccountSet& super);
AccountSet set_union(const AccountSet& a, const AccountSet& b);
AccountSet set_intersection(const AccountSet& a, const AccountSet& b);
AccountSet set_difference(const AccountSet& a, const AccountSet& b);

}  // namespace accset

// Per-account day sets for logins (L_d transposed) and suspicious flags
// (S_d transposed). Immutable after construction; safe for concurrent reads.
class AccountSetLedger {
public:
    using DayMap = std::unordered_map<AccountId, std::vector<Day>, AccountIdHash>;

    // Takes raw per-account day lists in any order, possibly with duplicates;
    // normalizes them and derives coverage = [min day, max day] over both maps.
    // Throws ConfigError when both maps are empty (an empty trace has no epoch).
    AccountSetLedger(DayMap login_days, DayMap flag_days);

    const DayInterval& coverage() const { return coverage_; }

    // Day 0 of this trace: the minimum day present across both inputs.
    Day epoch() const { return coverage_.start; }

    // Union of L_d over the window. Throws CoverageError if the window leaves
    // coverage.
    AccountSet active_accounts(const DayInterval& window) const;

    // Union of S_d over the window.
    AccountSet flagged_accounts(const DayInterval& window) const;

    // Minimum login day of the account; absent when never seen.
    std::optional<Day> first_seen(AccountId account) const;

    // Point queries used by exercise assembly. All are pure and total.
    bool active_in(AccountId account, const DayInterval& window) const;
    bool flagged_in(AccountId account, const DayInterval& window) const;
    bool flagged_on_or_before(AccountId account, Day day) const;
    std::optional<Day> first_flagged(AccountId account) const;

    // Number of distinct login days strictly before `day`.
    std::int64_t active_days_before(AccountId account, Day day) const;

    const DayMap& login_days() const { return login_days_; }
    const DayMap& flag_days() const { return flag_days_; }

    bool operator==(const AccountSetLedger& other) const {
        return login_days_ == other.login_days_ && flag_days_ == other.flag_days_;
    }

private:
    void check_coverage(const DayInterval& window) const;

    DayMap login_days_;
    DayMap flag_days_;
    DayInterval coverage_;
};

}  // namespace flagcast
