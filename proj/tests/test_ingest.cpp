#include "doctest.h"

#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "flagcast/ingest.hpp"
#include "flagcast/rng.hpp"
#include "flagcast/util.hpp"

using namespace flagcast;

namespace {

const std::string kHeader = std::string(kLoginHeader) + "\n";

std::string login_line(std::uint64_t acct, const std::string& day,
                       const std::string& rest = "0\t0\t0\t0\t0\t0\t0\t0\t0\t1\t0") {
    return std::to_string(acct) + "\t" + day + "\t" + rest + "\n";
}

std::vector<LoginEvent> random_logins(Rng& rng, std::size_t n, std::uint64_t accounts,
                                      std::int32_t max_day) {
    std::vector<LoginEvent> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        LoginEvent e;
        e.account = AccountId{rng.next_below(accounts) + 1};
        e.day = Day{static_cast<std::int32_t>(rng.next_below(max_day + 1))};
        e.source = static_cast<std::int32_t>(rng.next_in(-1, 3));
        e.login_type = static_cast<std::int32_t>(rng.next_in(-1, 3));
        e.status = static_cast<std::int32_t>(rng.next_in(-1, 2));
        e.password_status = static_cast<std::int32_t>(rng.next_in(-1, 2));
        e.action = static_cast<std::int32_t>(rng.next_in(-1, 4));
        e.geo = static_cast<std::int32_t>(rng.next_in(-1, 5000));
        e.geo_status = static_cast<std::int32_t>(rng.next_in(-1, 2));
        e.asn = static_cast<std::int32_t>(rng.next_in(-1, 70000));
        e.user_agent = static_cast<std::int32_t>(rng.next_in(-1, 900));
        e.success = static_cast<std::int8_t>(rng.next_in(-1, 1));
        e.verified_mobile = static_cast<std::int8_t>(rng.next_in(-1, 1));
        out.push_back(e);
    }
    return out;
}

}  // namespace

TEST_SUITE_BEGIN("ingest");

TEST_CASE("empty files parse to empty sequences") {
    CHECK(parse_login_text(kHeader, "t").empty());
    CHECK(parse_flag_text(std::string(kFlagHeader) + "\n", "t").empty());
}

TEST_CASE("single line parses field-exact") {
    auto events = parse_login_text(
        kHeader + "1001\t4\t2\t1\t0\t-1\t3\t7\t1\t64512\t9\t1\t0\n", "t");
    REQUIRE(events.size() == 1);
    const LoginEvent& e = events[0];
    CHECK(e.account == AccountId{1001});
    CHECK(e.day == Day{4});
    CHECK(e.source == 2);
    CHECK(e.login_type == 1);
    CHECK(e.status == 0);
    CHECK(e.password_status == kSentinel);
    CHECK(e.action == 3);
    CHECK(e.geo == 7);
    CHECK(e.geo_status == 1);
    CHECK(e.asn == 64512);
    CHECK(e.user_agent == 9);
    CHECK(e.success == 1);
    CHECK(e.verified_mobile == 0);

    auto flags = parse_flag_text("account\tday\n77\t3\n", "t");
    REQUIRE(flags.size() == 1);
    CHECK(flags[0] == FlagEvent{AccountId{77}, Day{3}});
}

TEST_CASE("non-numeric day cites its line") {
    std::string text = kHeader;
    for (int i = 0; i < 5; ++i) text += login_line(100 + i, "2");
    text += login_line(200, "notaday");
    CHECK_THROWS_AS(parse_login_text(text, "bad.tsv"), ParseError);
    try {
        parse_login_text(text, "bad.tsv");
    } catch (const ParseError& e) {
        CHECK(e.line() == 7);
        CHECK(std::string(e.what()).find("bad.tsv:7") != std::string::npos);
    }
}

TEST_CASE("header is required and validated") {
    CHECK_THROWS_AS(parse_login_text("", "t"), ParseError);
    CHECK_THROWS_AS(parse_login_text("acct\tday\n", "t"), ParseError);
    CHECK_THROWS_AS(parse_flag_text("account\tday\textra\n", "t"), ParseError);
    try {
        parse_login_text("wrong\n", "t");
    } catch (const ParseError& e) {
        CHECK(e.line() == 1);
    }
}

TEST_CASE("malformed rows are rejected with locations") {
    // wrong column count
    CHECK_THROWS_AS(parse_login_text(kHeader + "1\t2\t3\n", "t"), ParseError);
    // negative day
    CHECK_THROWS_AS(parse_login_text(kHeader + login_line(1, "-2"), "t"), ParseError);
    // category code below sentinel
    CHECK_THROWS_AS(
        parse_login_text(kHeader + "1\t0\t-2\t0\t0\t0\t0\t0\t0\t0\t0\t1\t0\n", "t"),
        ParseError);
    // boolean out of range
    CHECK_THROWS_AS(
        parse_login_text(kHeader + "1\t0\t0\t0\t0\t0\t0\t0\t0\t0\t0\t2\t0\n", "t"),
        ParseError);
    // non-numeric account
    CHECK_THROWS_AS(parse_flag_text("account\tday\nabc\t3\n", "t"), ParseError);
}

TEST_CASE("fractional days truncate, open category codes pass through") {
    auto events = parse_login_text(kHeader + login_line(1, "2.9") +
                                       login_line(1, "4.0") + login_line(1, "0.25"),
                                   "t");
    REQUIRE(events.size() == 3);
    CHECK(events[0].day == Day{2});
    CHECK(events[1].day == Day{4});
    CHECK(events[2].day == Day{0});

    auto open = parse_login_text(
        kHeader + "1\t0\t999999\t0\t0\t0\t0\t0\t0\t0\t0\t1\t0\n", "t");
    CHECK(open[0].source == 999999);
}

TEST_CASE("golden files parse and rewrite byte-identically") {
    auto dir = std::filesystem::path(TEST_DATA_DIR);
    auto logins = parse_login_file(dir / "golden_logins.tsv");
    auto flags = parse_flag_file(dir / "golden_flags.tsv");
    REQUIRE(logins.size() == 5);
    REQUIRE(flags.size() == 2);
    CHECK(logins[0].account == AccountId{1001});
    CHECK(logins[1].password_status == kSentinel);
    CHECK(logins[2].user_agent == kSentinel);
    CHECK(logins[2].verified_mobile == -1);
    CHECK(logins[3].asn == kSentinel);
    CHECK(logins[3].success == -1);
    CHECK(flags[1] == FlagEvent{AccountId{3003}, Day{4}});

    auto tmp = std::filesystem::temp_directory_path() / "flagcast_golden";
    write_login_file(tmp / "logins.tsv", logins);
    write_flag_file(tmp / "flags.tsv", flags);
    CHECK(read_file(tmp / "logins.tsv") == read_file(dir / "golden_logins.tsv"));
    CHECK(read_file(tmp / "flags.tsv") == read_file(dir / "golden_flags.tsv"));
    std::filesystem::remove_all(tmp);
}

TEST_CASE("write/parse round trip preserves events and ledger") {
    Rng rng(555);
    auto logins = random_logins(rng, 2000, 300, 40);
    std::vector<FlagEvent> flags;
    for (int i = 0; i < 150; ++i) {
        flags.push_back({AccountId{rng.next_below(300) + 1},
                         Day{static_cast<std::int32_t>(rng.next_below(41))}});
    }
    auto tmp = std::filesystem::temp_directory_path() / "flagcast_roundtrip";
    write_login_file(tmp / "logins.tsv", logins);
    write_flag_file(tmp / "flags.tsv", flags);
    auto logins2 = parse_login_file(tmp / "logins.tsv");
    auto flags2 = parse_flag_file(tmp / "flags.tsv");
    CHECK(logins == logins2);
    CHECK(flags == flags2);
    CHECK(build_ledger(logins, flags) == build_ledger(logins2, flags2));
    std::filesystem::remove_all(tmp);
}

TEST_CASE("build_ledger reflects events exactly") {
    std::vector<LoginEvent> logins(1);
    logins[0].account = AccountId{1};
    logins[0].day = Day{4};
    std::vector<FlagEvent> flags = {{AccountId{1}, Day{6}},
                                    {AccountId{1}, Day{6}}};  // duplicate collapses
    auto ledger = build_ledger(logins, flags);
    CHECK(ledger.coverage() == DayInterval{Day{4}, Day{6}});
    CHECK(ledger.login_days().at(AccountId{1}) == std::vector<Day>{Day{4}});
    CHECK(ledger.flag_days().at(AccountId{1}) == std::vector<Day>{Day{6}});

    CHECK_THROWS_AS(build_ledger({}, {}), ConfigError);
}

TEST_CASE("ledger queries over parsed events match brute force") {
    Rng rng(808);
    auto logins = random_logins(rng, 10000, 800, 60);
    std::vector<FlagEvent> flags;
    for (int i = 0; i < 700; ++i) {
        flags.push_back({AccountId{rng.next_below(800) + 1},
                         Day{static_cast<std::int32_t>(rng.next_below(61))}});
    }
    auto ledger = build_ledger(logins, flags);

    for (int rep = 0; rep < 10; ++rep) {
        Day s{static_cast<std::int32_t>(rng.next_below(50))};
        DayInterval w{s, Day{static_cast<std::int32_t>(
                             s.index + rng.next_below(60 - s.index + 1))}};
        std::set<AccountId> active, flagged;
        for (const auto& e : logins) {
            if (w.contains(e.day)) active.insert(e.account);
        }
        for (const auto& f : flags) {
            if (w.contains(f.day)) flagged.insert(f.account);
        }
        CHECK(ledger.active_accounts(w) == AccountSet(active.begin(), active.end()));
        CHECK(ledger.flagged_accounts(w) == AccountSet(flagged.begin(), flagged.end()));
    }
}

TEST_CASE("fuzzed input never crashes") {
    Rng rng(1337);
    const std::string alphabet = "0123456789\t.-ax\n";
    for (int rep = 0; rep < 300; ++rep) {
        std::string text = kHeader;
        std::size_t len = rng.next_below(200);
        for (std::size_t i = 0; i < len; ++i) {
            text += alphabet[rng.next_below(alphabet.size())];
        }
        try {
            auto events = parse_login_text(text, "fuzz");
            for (const auto& e : events) CHECK(e.day.index >= 0);
        } catch (const ParseError&) {
            // located rejection is the other acceptable outcome
        }
    }
}

TEST_SUITE_END();
