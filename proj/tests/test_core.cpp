#include "doctest.h"

#include <algorithm>
#include <set>
#include <utility>
#include <vector>

#include "flagcast/core.hpp"
#include "flagcast/rng.hpp"

using namespace flagcast;

namespace {

using RawEvents = std::vector<std::pair<AccountId, Day>>;

AccountSetLedger::DayMap to_map(const RawEvents& raw) {
    AccountSetLedger::DayMap m;
    for (const auto& [a, d] : raw) m[a].push_back(d);
    return m;
}

// Brute-force oracle: scan the raw record list, no ledger machinery.
AccountSet scan_accounts(const RawEvents& raw, const DayInterval& w) {
    std::set<AccountId> hits;
    for (const auto& [a, d] : raw) {
        if (w.contains(d)) hits.insert(a);
    }
    return AccountSet(hits.begin(), hits.end());
}

RawEvents random_events(Rng& rng, std::size_t n_accounts, std::size_t n_events,
                        std::int32_t max_day) {
    RawEvents raw;
    raw.reserve(n_events);
    for (std::size_t i = 0; i < n_events; ++i) {
        AccountId a{rng.next_below(n_accounts) + 1};
        Day d{static_cast<std::int32_t>(rng.next_below(max_day + 1))};
        raw.emplace_back(a, d);
    }
    return raw;
}

}  // namespace

TEST_SUITE_BEGIN("core");

TEST_CASE("day interval basics") {
    DayInterval w{Day{3}, Day{7}};
    CHECK(w.length_days() == 5);
    CHECK(w.contains(Day{3}));
    CHECK(w.contains(Day{7}));
    CHECK_FALSE(w.contains(Day{8}));
    CHECK(w.contains(DayInterval{Day{4}, Day{7}}));
    CHECK_FALSE(w.contains(DayInterval{Day{2}, Day{5}}));
    CHECK_THROWS_AS(DayInterval(Day{5}, Day{4}), ContractError);
}

TEST_CASE("account set algebra matches std::set oracle") {
    Rng rng(7);
    for (int rep = 0; rep < 50; ++rep) {
        AccountSet a, b;
        std::set<AccountId> oa, ob;
        for (int i = 0; i < 40; ++i) {
            AccountId x{rng.next_below(30)};
            AccountId y{rng.next_below(30)};
            a.push_back(x);
            b.push_back(y);
            oa.insert(x);
            ob.insert(y);
        }
        accset::normalize(a);
        accset::normalize(b);

        std::set<AccountId> ou, oi, od;
        std::set_union(oa.begin(), oa.end(), ob.begin(), ob.end(),
                       std::inserter(ou, ou.end()));
        std::set_intersection(oa.begin(), oa.end(), ob.begin(), ob.end(),
                              std::inserter(oi, oi.end()));
        std::set_difference(oa.begin(), oa.end(), ob.begin(), ob.end(),
                            std::inserter(od, od.end()));

        CHECK(accset::set_union(a, b) == AccountSet(ou.begin(), ou.end()));
        CHECK(accset::set_intersection(a, b) == AccountSet(oi.begin(), oi.end()));
        CHECK(accset::set_difference(a, b) == AccountSet(od.begin(), od.end()));
        CHECK(accset::is_subset(accset::set_intersection(a, b), a));
        for (AccountId x : a) CHECK(accset::contains(a, x));
    }
}

TEST_CASE("active_accounts trivial cases") {
    AccountSetLedger ledger(to_map({{AccountId{1}, Day{3}}}), {});
    CHECK(ledger.active_accounts({Day{3}, Day{3}}) == AccountSet{AccountId{1}});

    AccountSetLedger two(to_map({{AccountId{1}, Day{3}}, {AccountId{2}, Day{5}}}), {});
    CHECK(two.active_accounts({Day{3}, Day{5}}) ==
          AccountSet{AccountId{1}, AccountId{2}});
    // No overlap with the window means no accounts, even with activity elsewhere.
    CHECK(two.active_accounts({Day{3}, Day{4}}) == AccountSet{AccountId{1}});
}

TEST_CASE("window before any activity is empty") {
    // Coverage must still admit the window, so anchor it with another account.
    AccountSetLedger ledger(
        to_map({{AccountId{1}, Day{3}}, {AccountId{9}, Day{0}}}), {});
    CHECK(ledger.active_accounts({Day{0}, Day{2}}) == AccountSet{AccountId{9}});
}

TEST_CASE("flagged_accounts trivial cases") {
    AccountSetLedger no_flags(to_map({{AccountId{1}, Day{7}}, {AccountId{1}, Day{13}}}),
                              {});
    CHECK(no_flags.flagged_accounts({Day{7}, Day{13}}).empty());

    AccountSetLedger one(to_map({{AccountId{1}, Day{7}}, {AccountId{2}, Day{13}}}),
                         to_map({{AccountId{1}, Day{9}}}));
    CHECK(one.flagged_accounts({Day{7}, Day{13}}) == AccountSet{AccountId{1}});
}

TEST_CASE("first_seen") {
    AccountSetLedger ledger(to_map({{AccountId{1}, Day{5}},
                                    {AccountId{1}, Day{2}},
                                    {AccountId{1}, Day{9}}}),
                            {});
    CHECK(ledger.first_seen(AccountId{1}) == Day{2});
    CHECK_FALSE(ledger.first_seen(AccountId{42}).has_value());
}

TEST_CASE("randomized ledger matches brute-force scan") {
    Rng rng(1234);
    RawEvents logins = random_events(rng, 1000, 8000, 30);
    RawEvents flags = random_events(rng, 1000, 600, 30);
    AccountSetLedger ledger(to_map(logins), to_map(flags));

    DayInterval w{Day{10}, Day{16}};
    CHECK(ledger.active_accounts(w) == scan_accounts(logins, w));
    CHECK(ledger.flagged_accounts(w) == scan_accounts(flags, w));

    for (int rep = 0; rep < 20; ++rep) {
        Day s{static_cast<std::int32_t>(rng.next_below(31))};
        Day e{static_cast<std::int32_t>(s.index + rng.next_below(31 - s.index))};
        DayInterval win{s, e};
        CHECK(ledger.active_accounts(win) == scan_accounts(logins, win));
        CHECK(ledger.flagged_accounts(win) == scan_accounts(flags, win));
    }
}

TEST_CASE("first_seen equals min over raw events") {
    Rng rng(99);
    RawEvents logins = random_events(rng, 200, 2000, 50);
    AccountSetLedger ledger(to_map(logins), {});
    for (std::uint64_t id = 1; id <= 200; ++id) {
        std::optional<Day> expect;
        for (const auto& [a, d] : logins) {
            if (a == AccountId{id} && (!expect || d < *expect)) expect = d;
        }
        CHECK(ledger.first_seen(AccountId{id}) == expect);
    }
}

TEST_CASE("window nesting implies subset results") {
    Rng rng(5);
    RawEvents logins = random_events(rng, 300, 3000, 40);
    RawEvents flags = random_events(rng, 300, 300, 40);
    AccountSetLedger ledger(to_map(logins), to_map(flags));
    for (int rep = 0; rep < 20; ++rep) {
        Day s{static_cast<std::int32_t>(rng.next_below(20))};
        Day e{static_cast<std::int32_t>(s.index + 5 + rng.next_below(10))};
        DayInterval inner{s, e};
        DayInterval outer{Day{s.index - static_cast<std::int32_t>(rng.next_below(
                                            static_cast<std::uint64_t>(s.index) + 1))},
                          Day{e.index + static_cast<std::int32_t>(rng.next_below(
                                            static_cast<std::uint64_t>(40 - e.index) + 1))}};
        CHECK(accset::is_subset(ledger.active_accounts(inner),
                                ledger.active_accounts(outer)));
        CHECK(accset::is_subset(ledger.flagged_accounts(inner),
                                ledger.flagged_accounts(outer)));
    }
}

TEST_CASE("construction is order-independent") {
    Rng rng(77);
    RawEvents logins = random_events(rng, 100, 1000, 20);
    RawEvents flags = random_events(rng, 100, 100, 20);
    AccountSetLedger a(to_map(logins), to_map(flags));

    for (int rep = 0; rep < 5; ++rep) {
        for (std::size_t i = logins.size(); i > 1; --i) {
            std::swap(logins[i - 1], logins[rng.next_below(i)]);
        }
        AccountSetLedger b(to_map(logins), to_map(flags));
        CHECK(a == b);
    }
}

TEST_CASE("coverage checks name the offending bound") {
    AccountSetLedger ledger(to_map({{AccountId{1}, Day{5}}, {AccountId{1}, Day{12}}}),
                            {});
    CHECK(ledger.coverage() == DayInterval{Day{5}, Day{12}});
    CHECK(ledger.epoch() == Day{5});
    CHECK_THROWS_AS(ledger.active_accounts({Day{4}, Day{10}}), CoverageError);
    CHECK_THROWS_AS(ledger.active_accounts({Day{6}, Day{13}}), CoverageError);
    try {
        ledger.active_accounts({Day{6}, Day{13}});
    } catch (const CoverageError& e) {
        CHECK(std::string(e.what()).find("13") != std::string::npos);
        CHECK(std::string(e.what()).find("12") != std::string::npos);
    }
}

TEST_CASE("empty trace refuses to build") {
    CHECK_THROWS_AS(AccountSetLedger({}, {}), ConfigError);
}

TEST_CASE("point queries match brute force") {
    Rng rng(31);
    RawEvents logins = random_events(rng, 150, 1500, 25);
    RawEvents flags = random_events(rng, 150, 200, 25);
    AccountSetLedger ledger(to_map(logins), to_map(flags));

    for (std::uint64_t id = 1; id <= 150; ++id) {
        AccountId a{id};
        DayInterval w{Day{8}, Day{14}};
        bool active = false, flagged = false;
        std::int64_t days_before = 0;
        std::set<Day> distinct_login_days;
        std::optional<Day> first_flag;
        for (const auto& [acc, d] : logins) {
            if (acc != a) continue;
            if (w.contains(d)) active = true;
            distinct_login_days.insert(d);
        }
        for (Day d : distinct_login_days) {
            if (d < Day{13}) ++days_before;
        }
        for (const auto& [acc, d] : flags) {
            if (acc != a) continue;
            if (w.contains(d)) flagged = true;
            if (!first_flag || d < *first_flag) first_flag = d;
        }
        CHECK(ledger.active_in(a, w) == active);
        CHECK(ledger.flagged_in(a, w) == flagged);
        CHECK(ledger.active_days_before(a, Day{13}) == days_before);
        CHECK(ledger.first_flagged(a) == first_flag);
        CHECK(ledger.flagged_on_or_before(a, Day{10}) ==
              (first_flag && *first_flag <= Day{10}));
    }
}

TEST_SUITE_END();
