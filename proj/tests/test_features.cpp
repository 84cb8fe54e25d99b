#include "doctest.h"

#include <map>
#include <set>
#include <string>
#include <vector>

#include "flagcast/features.hpp"
#include "flagcast/rng.hpp"
#include "flagcast/util.hpp"

using namespace flagcast;

namespace {

LoginEvent make_event(std::uint64_t acct, std::int32_t day) {
    LoginEvent e;
    e.account = AccountId{acct};
    e.day = Day{day};
    e.source = 0;
    e.login_type = 0;
    e.status = 0;
    e.password_status = 0;
    e.action = 0;
    e.geo = 7;
    e.geo_status = 0;
    e.asn = 100;
    e.user_agent = 0;
    e.success = 1;
    e.verified_mobile = 0;
    return e;
}

LoginEvent random_event(Rng& rng, std::uint64_t acct, std::int32_t day) {
    LoginEvent e;
    e.account = AccountId{acct};
    e.day = Day{day};
    e.source = static_cast<std::int32_t>(rng.next_in(-1, 2));
    e.login_type = static_cast<std::int32_t>(rng.next_in(-1, 3));
    e.status = static_cast<std::int32_t>(rng.next_in(-1, 2));
    e.password_status = static_cast<std::int32_t>(rng.next_in(-1, 2));
    e.action = static_cast<std::int32_t>(rng.next_in(-1, 3));
    e.geo = static_cast<std::int32_t>(rng.next_in(-1, 9));
    e.geo_status = static_cast<std::int32_t>(rng.next_in(-1, 2));
    e.asn = static_cast<std::int32_t>(rng.next_in(-1, 19));
    e.user_agent = static_cast<std::int32_t>(rng.next_in(-1, 5));
    e.success = static_cast<std::int8_t>(rng.next_in(-1, 1));
    e.verified_mobile = static_cast<std::int8_t>(rng.next_in(-1, 1));
    return e;
}

// Independent recount with std::set; shares no code with the library path.
std::array<std::int64_t, 13> recount_day(const std::vector<LoginEvent>& events) {
    std::array<std::int64_t, 13> f{};
    f[0] = static_cast<std::int64_t>(events.size());
    auto uniq = [&](auto field) {
        std::set<std::int32_t> s;
        for (const auto& e : events) {
            if (field(e) != kSentinel) s.insert(field(e));
        }
        return static_cast<std::int64_t>(s.size());
    };
    f[1] = uniq([](const LoginEvent& e) { return e.source; });
    f[2] = uniq([](const LoginEvent& e) { return e.login_type; });
    f[3] = uniq([](const LoginEvent& e) { return e.status; });
    f[4] = uniq([](const LoginEvent& e) { return e.password_status; });
    f[5] = uniq([](const LoginEvent& e) { return e.action; });
    f[6] = uniq([](const LoginEvent& e) { return e.geo; });
    f[7] = uniq([](const LoginEvent& e) { return e.geo_status; });
    f[8] = uniq([](const LoginEvent& e) { return e.asn; });
    f[9] = uniq([](const LoginEvent& e) { return e.user_agent; });
    for (const auto& e : events) {
        if (e.success == 1) ++f[10];
        if (e.success == 0) ++f[11];
        if (e.verified_mobile == 1) f[12] = 1;
    }
    return f;
}

// Window aggregation oracle straight from raw events: group by day, recount,
// then combine under the declared rule.
std::array<double, 13> reaggregate(const std::vector<LoginEvent>& events,
                                   bool window_distinct) {
    std::map<std::int32_t, std::vector<LoginEvent>> by_day;
    for (const auto& e : events) by_day[e.day.index].push_back(e);
    std::array<double, 13> out{};
    for (const auto& [day, evs] : by_day) {
        auto f = recount_day(evs);
        for (std::size_t i = 0; i < 12; ++i) out[i] += static_cast<double>(f[i]);
        out[12] = std::max(out[12], static_cast<double>(f[12]));
    }
    if (window_distinct) {
        auto whole = recount_day(events);
        for (std::size_t i = 1; i <= 9; ++i) out[i] = static_cast<double>(whole[i]);
    }
    return out;
}

}  // namespace

TEST_SUITE_BEGIN("features");

TEST_CASE("singleton event") {
    auto e = make_event(1, 0);
    auto f = daily_features(std::span(&e, 1));
    CHECK(f.v[kLoginAttempts] == 1);
    for (std::size_t i = kUniqSources; i <= kUniqUserAgents; ++i) CHECK(f.v[i] == 1);
    CHECK(f.v[kSuccessfulLogins] == 1);
    CHECK(f.v[kUnsuccessfulLogins] == 0);
    CHECK(f.v[kVerifiedMobile] == 0);

    // sentinel fields drop out of the unique counts
    e.geo = kSentinel;
    e.success = -1;
    auto g = daily_features(std::span(&e, 1));
    CHECK(g.v[kUniqGeos] == 0);
    CHECK(g.v[kSuccessfulLogins] == 0);
    CHECK(g.v[kUnsuccessfulLogins] == 0);
}

TEST_CASE("uniqueness counts distinct codes only") {
    std::vector<LoginEvent> events{make_event(1, 0), make_event(1, 0)};
    events[1].geo = 9;
    auto f = daily_features(events);
    CHECK(f.v[kUniqGeos] == 2);
    CHECK(f.v[kUniqSources] == 1);
    CHECK(f.v[kLoginAttempts] == 2);
}

TEST_CASE("mixed account or day violates the contract") {
    std::vector<LoginEvent> mixed{make_event(1, 0), make_event(2, 0)};
    CHECK_THROWS_AS(daily_features(mixed), ContractError);
    std::vector<LoginEvent> days{make_event(1, 0), make_event(1, 1)};
    CHECK_THROWS_AS(daily_features(days), ContractError);
    CHECK_THROWS_AS(daily_features({}), ContractError);
}

TEST_CASE("random account-day equals set-based recount") {
    Rng rng(2601);
    for (int rep = 0; rep < 40; ++rep) {
        std::vector<LoginEvent> events;
        std::size_t n = 1 + rng.next_below(50);
        for (std::size_t i = 0; i < n; ++i) events.push_back(random_event(rng, 5, 3));
        auto f = daily_features(events);
        auto expect = recount_day(events);
        for (std::size_t i = 0; i < 13; ++i) CHECK(f.v[i] == expect[i]);
        // invariants
        for (std::size_t i = kUniqSources; i <= kUniqUserAgents; ++i) {
            CHECK(f.v[i] <= f.v[kLoginAttempts]);
        }
        CHECK(f.v[kSuccessfulLogins] + f.v[kUnsuccessfulLogins] <=
              f.v[kLoginAttempts]);
    }
}

TEST_CASE("f11 plus f12 equals f1 when success is always present") {
    Rng rng(77);
    std::vector<LoginEvent> events;
    for (int i = 0; i < 30; ++i) {
        auto e = random_event(rng, 2, 4);
        e.success = static_cast<std::int8_t>(rng.next_below(2));
        events.push_back(e);
    }
    auto f = daily_features(events);
    CHECK(f.v[kSuccessfulLogins] + f.v[kUnsuccessfulLogins] == f.v[kLoginAttempts]);
}

TEST_CASE("aggregate_window identity and additivity") {
    auto e = make_event(1, 3);
    auto d = daily_features(std::span(&e, 1));
    auto v = aggregate_window(std::span(&d, 1), DayInterval{Day{0}, Day{6}});
    REQUIRE(v.has_value());
    for (std::size_t i = 0; i < 13; ++i) {
        CHECK(v->values[i] == static_cast<double>(d.v[i]));
    }

    auto e2 = make_event(1, 4);
    e2.geo = 9;
    auto d2 = daily_features(std::span(&e2, 1));
    std::vector<DailyFeatures> both{d, d2};
    auto w = aggregate_window(both, DayInterval{Day{0}, Day{6}});
    REQUIRE(w.has_value());
    CHECK(w->values[kUniqGeos] == 2);  // one distinct geo per day, summed
    CHECK(w->values[kLoginAttempts] == 2);

    CHECK_FALSE(aggregate_window({}, DayInterval{Day{0}, Day{6}}).has_value());
}

TEST_CASE("aggregate_window rejects bad input") {
    auto e1 = make_event(1, 3);
    auto e2 = make_event(2, 4);
    auto d1 = daily_features(std::span(&e1, 1));
    auto d2 = daily_features(std::span(&e2, 1));
    std::vector<DailyFeatures> mixed{d1, d2};
    CHECK_THROWS_AS(aggregate_window(mixed, DayInterval{Day{0}, Day{6}}),
                    ContractError);

    std::vector<DailyFeatures> outside{d1};
    CHECK_THROWS_AS(aggregate_window(outside, DayInterval{Day{4}, Day{6}}),
                    ContractError);

    std::vector<DailyFeatures> dup{d1, d1};
    CHECK_THROWS_AS(aggregate_window(dup, DayInterval{Day{0}, Day{6}}), ContractError);
}

TEST_CASE("seven random days re-aggregate from raw events") {
    Rng rng(909);
    for (int rep = 0; rep < 25; ++rep) {
        std::vector<LoginEvent> all;
        std::vector<DailyFeatures> daily;
        for (std::int32_t day = 0; day < 7; ++day) {
            if (rng.next_bernoulli(0.25)) continue;
            std::vector<LoginEvent> evs;
            std::size_t n = 1 + rng.next_below(6);
            for (std::size_t i = 0; i < n; ++i) evs.push_back(random_event(rng, 9, day));
            daily.push_back(daily_features(evs));
            all.insert(all.end(), evs.begin(), evs.end());
        }
        if (daily.empty()) continue;
        auto v = aggregate_window(daily, DayInterval{Day{0}, Day{6}});
        REQUIRE(v.has_value());
        auto expect = reaggregate(all, false);
        for (std::size_t i = 0; i < 13; ++i) CHECK(v->values[i] == expect[i]);
    }
}

TEST_CASE("extract_all covers exactly the active accounts") {
    std::vector<LoginEvent> events;
    for (std::int32_t d = 0; d < 3; ++d) events.push_back(make_event(1, d));
    events.push_back(make_event(2, 5));
    events.push_back(make_event(3, 9));
    auto ledger = build_ledger(events, std::vector<FlagEvent>{{AccountId{1}, Day{0}}});

    DayInterval window{Day{0}, Day{6}};
    auto table = extract_all(ledger, events, window);
    CHECK(table.size() == 2);
    REQUIRE(table.find(AccountId{1}) != nullptr);
    REQUIRE(table.find(AccountId{2}) != nullptr);
    CHECK(table.find(AccountId{3}) == nullptr);
    CHECK(table.find(AccountId{1})->values[kLoginAttempts] == 3);
    CHECK(table.find(AccountId{1})->window == window);

    // inactive window inside coverage yields an empty mapping
    auto empty = extract_all(ledger, events, DayInterval{Day{7}, Day{8}});
    CHECK(empty.size() == 0);

    CHECK_THROWS_AS(extract_all(ledger, events, DayInterval{Day{0}, Day{20}}),
                    CoverageError);
}

TEST_CASE("extract_all matches per-account oracle and is thread-invariant") {
    Rng rng(3111);
    std::vector<LoginEvent> events;
    for (std::uint64_t acct = 1; acct <= 10; ++acct) {
        for (std::int32_t day = 0; day < 14; ++day) {
            std::size_t n = rng.next_below(4);
            for (std::size_t i = 0; i < n; ++i) {
                events.push_back(random_event(rng, acct, day));
            }
        }
    }
    auto ledger = build_ledger(events, std::vector<FlagEvent>{{AccountId{1}, Day{0}}});
    DayInterval window{Day{3}, Day{9}};

    for (bool distinct : {false, true}) {
        FeatureOptions opt{distinct};
        auto t1 = extract_all(ledger, events, window, opt, 1);
        auto t3 = extract_all(ledger, events, window, opt, 3);
        CHECK(t1 == t3);
        CHECK(t1 == extract_all(ledger, events, window, opt, 1));

        double total_logins = 0;
        for (const auto& row : t1.rows()) {
            std::vector<LoginEvent> mine;
            for (const auto& e : events) {
                if (e.account == row.account && window.contains(e.day)) {
                    mine.push_back(e);
                }
            }
            CHECK_FALSE(mine.empty());
            auto expect = reaggregate(mine, distinct);
            for (std::size_t i = 0; i < 13; ++i) CHECK(row.values[i] == expect[i]);
            total_logins += row.values[kLoginAttempts];
        }
        // conservation: account f1 totals add up to the window's event count
        std::int64_t in_window = 0;
        for (const auto& e : events) {
            if (window.contains(e.day)) ++in_window;
        }
        CHECK(total_logins == static_cast<double>(in_window));
        CHECK(t1.size() == ledger.active_accounts(window).size());
    }
}

TEST_CASE("window growth never shrinks features") {
    Rng rng(414);
    std::vector<LoginEvent> events;
    for (std::int32_t day = 0; day < 14; ++day) {
        std::size_t n = rng.next_below(5);
        for (std::size_t i = 0; i < n; ++i) events.push_back(random_event(rng, 1, day));
    }
    if (events.empty()) events.push_back(make_event(1, 0));
    auto ledger = build_ledger(events, std::vector<FlagEvent>{{AccountId{1}, Day{0}}});

    auto small = extract_all(ledger, events, DayInterval{Day{2}, Day{8}});
    auto big = extract_all(ledger, events, DayInterval{Day{0}, Day{13}});
    const auto* s = small.find(AccountId{1});
    const auto* b = big.find(AccountId{1});
    if (s && b) {
        for (std::size_t i = 0; i < 12; ++i) CHECK(s->values[i] <= b->values[i]);
    }
}

TEST_CASE("window-distinct switch changes only the uniqueness rule") {
    // same geo on two days: daily sums count it twice, window-distinct once
    std::vector<LoginEvent> events{make_event(1, 2), make_event(1, 3)};
    auto ledger = build_ledger(events, std::vector<FlagEvent>{{AccountId{1}, Day{0}}});
    DayInterval window{Day{0}, Day{3}};

    auto sum = extract_all(ledger, events, window);
    auto distinct = extract_all(ledger, events, window, FeatureOptions{true});
    CHECK(sum.find(AccountId{1})->values[kUniqGeos] == 2);
    CHECK(distinct.find(AccountId{1})->values[kUniqGeos] == 1);
    CHECK(sum.find(AccountId{1})->values[kLoginAttempts] ==
          distinct.find(AccountId{1})->values[kLoginAttempts]);
}

TEST_CASE("feature dump writes one row per account") {
    std::vector<LoginEvent> events{make_event(1, 0), make_event(2, 1)};
    auto ledger = build_ledger(events, std::vector<FlagEvent>{{AccountId{1}, Day{0}}});
    auto table = extract_all(ledger, events, DayInterval{Day{0}, Day{1}});

    auto tmp = std::filesystem::temp_directory_path() / "flagcast_dump.tsv";
    write_feature_dump(tmp, table);
    auto text = read_file(tmp);
    std::filesystem::remove(tmp);

    CHECK(text.find("account\twindow_start\twindow_end\tf1\tf2") == 0);
    CHECK(text.find("\tf13\n") != std::string::npos);
    CHECK(text.find("\n1\t0\t1\t1\t") != std::string::npos);
}

TEST_CASE("feature order tag is stable") {
    auto tag = feature_order_tag();
    CHECK(tag.find("login_attempts,uniq_sources") == 0);
    CHECK(tag.find("verified_mobile") != std::string::npos);
}

TEST_SUITE_END();
