#include "doctest.h"

#include <atomic>
#include <cmath>
#include <string>
#include <vector>

#include "flagcast/errors.hpp"
#include "flagcast/rng.hpp"
#include "flagcast/util.hpp"

using namespace flagcast;

TEST_SUITE_BEGIN("util");

TEST_CASE("split_tsv") {
    auto f = split_tsv("a\tb\tc");
    REQUIRE(f.size() == 3);
    CHECK(f[0] == "a");
    CHECK(f[2] == "c");

    CHECK(split_tsv("").size() == 1);
    auto g = split_tsv("a\t\tb\t");
    REQUIRE(g.size() == 4);
    CHECK(g[1] == "");
    CHECK(g[3] == "");
}

TEST_CASE("strict numeric parsing") {
    std::int64_t i = 0;
    CHECK(parse_i64("12", i));
    CHECK(i == 12);
    CHECK(parse_i64("-3", i));
    CHECK(i == -3);
    CHECK_FALSE(parse_i64("12x", i));
    CHECK_FALSE(parse_i64("", i));
    CHECK_FALSE(parse_i64(" 12", i));
    CHECK_FALSE(parse_i64("+4", i));

    double d = 0;
    CHECK(parse_f64("1.5", d));
    CHECK(d == 1.5);
    CHECK(parse_f64("1e-3", d));
    CHECK(d == 1e-3);
    CHECK_FALSE(parse_f64("1.5.2", d));
}

TEST_CASE("format_double round-trips exactly") {
    Rng rng(404);
    std::vector<double> samples = {0.0, 1.0, 0.5, 1.0 / 3.0, 85.61, 1e-300, 1e300};
    for (int i = 0; i < 500; ++i) {
        samples.push_back(rng.next_double());
        samples.push_back(rng.next_double() * 1e6 - 5e5);
    }
    for (double v : samples) {
        double back = 0;
        REQUIRE(parse_f64(format_double(v), back));
        CHECK(back == v);
    }
    CHECK(format_double(5.0) == "5");
}

TEST_CASE("fnv1a64 reference vectors") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("file digest equals string digest") {
    auto path = std::filesystem::temp_directory_path() / "flagcast_digest_test.txt";
    write_file(path, "day\t1\n");
    CHECK(fnv1a64_file(path) == fnv1a64("day\t1\n"));
    std::filesystem::remove(path);
}

TEST_CASE("kv parsing") {
    auto kv = parse_kv_text("a = 1\n# comment\n\nb=two words  \nc=x=y\n", "test");
    CHECK(kv.at("a") == "1");
    CHECK(kv.at("b") == "two words");
    CHECK(kv.at("c") == "x=y");
    CHECK(kv.size() == 3);

    CHECK_THROWS_AS(parse_kv_text("a=1\na=2\n", "t"), ParseError);
    CHECK_THROWS_AS(parse_kv_text("novalue\n", "t"), ParseError);
    CHECK_THROWS_AS(parse_kv_text("=1\n", "t"), ParseError);
    try {
        parse_kv_text("ok=1\nbroken\n", "cfg");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
        CHECK(std::string(e.what()).find("cfg:2") != std::string::npos);
    }
}

TEST_CASE("parallel_for covers the range once") {
    for (unsigned threads : {1u, 2u, 5u}) {
        std::atomic<std::uint64_t> sum{0};
        parallel_for(1000, threads, [&](std::size_t b, std::size_t e) {
            std::uint64_t local = 0;
            for (std::size_t i = b; i < e; ++i) local += i;
            sum += local;
        });
        CHECK(sum == 1000ull * 999 / 2);
    }
    parallel_for(0, 4, [&](std::size_t, std::size_t) { CHECK(false); });
}

TEST_CASE("parallel_for propagates exceptions") {
    CHECK_THROWS_AS(
        parallel_for(100, 4,
                     [&](std::size_t b, std::size_t) {
                         if (b == 0) throw ConfigError("boom");
                     }),
        ConfigError);
}

TEST_CASE("rng determinism and bounds") {
    Rng a(42), b(42), c(43);
    bool all_equal = true, any_diff = false;
    for (int i = 0; i < 100; ++i) {
        std::uint64_t va = a.next_u64();
        all_equal = all_equal && (va == b.next_u64());
        any_diff = any_diff || (va != c.next_u64());
    }
    CHECK(all_equal);
    CHECK(any_diff);

    Rng r(7);
    for (int i = 0; i < 1000; ++i) {
        CHECK(r.next_below(13) < 13);
        auto v = r.next_in(-5, 5);
        CHECK(v >= -5);
        CHECK(v <= 5);
        double d = r.next_double();
        CHECK(d >= 0.0);
        CHECK(d < 1.0);
    }
}

TEST_CASE("poisson sample mean is near lambda") {
    Rng r(2024);
    for (double lambda : {0.3, 4.0, 50.0}) {
        double sum = 0;
        const int n = 20000;
        for (int i = 0; i < n; ++i) sum += static_cast<double>(r.next_poisson(lambda));
        double mean = sum / n;
        CHECK(std::abs(mean - lambda) < 5.0 * std::sqrt(lambda / n) + 0.01);
    }
    CHECK(r.next_poisson(0.0) == 0);
}

TEST_CASE("derive_seed separates streams") {
    auto s1 = derive_seed(1, "undersample");
    auto s2 = derive_seed(1, "fit");
    auto s3 = derive_seed(2, "undersample");
    CHECK(s1 != s2);
    CHECK(s1 != s3);
    CHECK(derive_seed(1, "undersample") == s1);
    CHECK(derive_seed(9, std::uint64_t{0}) != derive_seed(9, std::uint64_t{1}));
}

TEST_SUITE_END();
