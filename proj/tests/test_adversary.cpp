#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <fstream>

#include "cbsim/adversary.hpp"
#include "doctest.h"

using namespace cbsim;

namespace {

// O(horizon * w) recount of the max window sum, straight from the definition.
std::int64_t brute_force_max_window(const ArrivalSchedule& s, Slot w) {
    Slot last = 0;
    for (const auto& [slot, count] : s.arrivals) last = std::max(last, slot);
    std::int64_t best = 0;
    for (Slot t = 0; t <= last; ++t) {
        std::int64_t sum = 0;
        for (Slot u = t; u < t + w; ++u) sum += s.at(u);
        best = std::max(best, sum);
    }
    return best;
}

std::string write_temp(const std::string& name, const std::string& content) {
    std::string path = "adversary_test_" + name;
    std::ofstream out(path, std::ios::binary);
    out << content;
    return path;
}

}  // namespace

TEST_CASE("window cap uses the natural log and clamps at zero") {
    // 1 - 5/ln(256) ~ 0.098316
    double expect_256 = 1.0 - 5.0 / std::log(256.0);
    CHECK(window_arrival_cap(1'000'000, 256) == std::int64_t(std::floor(expect_256 * 1e6)));
    // For kappa = 64 the fraction is negative (5/ln 64 ~ 1.2022), so the cap
    // clamps to zero and only empty schedules satisfy it.
    CHECK(1.0 - 5.0 / std::log(64.0) < 0);
    CHECK(window_arrival_cap(65536, 64) == 0);
    CHECK(window_arrival_cap(100, 0.5) == 50);
    CHECK_THROWS_AS(window_arrival_cap(0, 64), std::invalid_argument);
}

TEST_CASE("batch schedule") {
    ArrivalSchedule one = batch_schedule(1);
    CHECK(one.total() == 1);
    CHECK(one.at(0) == 1);

    ArrivalSchedule big = batch_schedule(10000);
    CHECK(big.total() == 10000);
    CHECK(big.at(0) == 10000);
    CHECK(big.at(1) == 0);

    CHECK_THROWS_AS(batch_schedule(0), std::invalid_argument);
    CHECK_THROWS_AS(batch_schedule(-5), std::invalid_argument);
}

TEST_CASE("batch of w arrivals violates the window cap at slot 0") {
    for (int kappa : {6, 64, 256}) {
        Slot w = 16 * Slot(kappa) * Slot(kappa);
        auto v = validate_schedule(batch_schedule(w), w, kappa);
        REQUIRE(v.has_value());
        CHECK(v->window_start == 0);
        CHECK(v->window_sum == w);
    }
}

TEST_CASE("empty schedule validates ok") {
    ArrivalSchedule empty;
    CHECK(!validate_schedule(empty, 65536, 64).has_value());
    CHECK(!validate_schedule(empty, 65536, 256).has_value());
    CHECK(max_window_sum(empty, 1024) == 0);
}

TEST_CASE("smooth schedule fills every window to exactly the cap") {
    const Slot w = 16 * 256 * 256;
    ArrivalSchedule s = windowed_rate_schedule(w, 256, 3 * w, ArrivalPattern::Smooth, 1);
    const std::int64_t cap = window_arrival_cap(w, 256);
    CHECK(s.declared_rate.value() == doctest::Approx(double(cap) / double(w)));
    CHECK(!validate_schedule(s, w, 256).has_value());
    CHECK(max_window_sum(s, w) == cap);
    // aligned windows are exactly full
    std::int64_t first = 0;
    for (Slot t = 0; t < w; ++t) first += s.at(t);
    CHECK(first == cap);
}

TEST_CASE("rate override shapes the cap") {
    const Slot w = 65536;
    ArrivalSchedule s =
        windowed_rate_schedule(w, 64, 2 * w, ArrivalPattern::Smooth, 3, 0.7979);
    const std::int64_t cap = window_arrival_cap(w, 0.7979);
    CHECK(max_window_sum(s, w) == cap);
    CHECK(!validate_schedule(s, w, cap).has_value());
    // but against the kappa-64 formula cap (zero) it is a violation
    auto v = validate_schedule(s, w, 64);
    REQUIRE(v.has_value());
    CHECK(v->cap == 0);
}

TEST_CASE("kappa-64 formula cap produces an empty schedule") {
    const Slot w = 65536;
    for (auto pattern :
         {ArrivalPattern::Smooth, ArrivalPattern::FrontloadedBursts, ArrivalPattern::RandomSpread}) {
        ArrivalSchedule s = windowed_rate_schedule(w, 64, 4 * w, pattern, 9);
        CHECK(s.total() == 0);
        CHECK(!validate_schedule(s, w, 64).has_value());
    }
}

TEST_CASE("zero horizon gives an empty schedule") {
    ArrivalSchedule s = windowed_rate_schedule(16 * 256 * 256, 256, 0, ArrivalPattern::Smooth, 1);
    CHECK(s.total() == 0);
}

TEST_CASE("bursts drop the whole cap at window starts") {
    const Slot w = 16 * 256 * 256;
    ArrivalSchedule s = windowed_rate_schedule(w, 256, 3 * w, ArrivalPattern::FrontloadedBursts, 1);
    const std::int64_t cap = window_arrival_cap(w, 256);
    CHECK(s.at(0) == cap);
    CHECK(s.at(w) == cap);
    CHECK(s.at(2 * w) == cap);
    CHECK(s.arrivals.size() == 3);
    CHECK(!validate_schedule(s, w, 256).has_value());
}

TEST_CASE("generator soundness across patterns, kappas and seeds") {
    const int kappa = 256;
    const Slot w = 16 * Slot(kappa) * Slot(kappa);
    for (auto pattern : {ArrivalPattern::Smooth, ArrivalPattern::FrontloadedBursts,
                         ArrivalPattern::RandomSpread}) {
        for (std::uint64_t seed : {0ull, 7ull, 123456789ull}) {
            ArrivalSchedule s = windowed_rate_schedule(w, kappa, 2 * w + w / 3, pattern, seed);
            CHECK(!validate_schedule(s, w, kappa).has_value());
        }
    }
    // one larger threshold, one window deep
    const Slot w2 = 16 * 1024 * 1024;
    ArrivalSchedule big =
        windowed_rate_schedule(w2, 1024, w2 + w2 / 5, ArrivalPattern::Smooth, 3);
    CHECK(!validate_schedule(big, w2, 1024).has_value());
}

TEST_CASE("rate-override generator soundness at small w") {
    for (double rate : {0.1, 0.5, 0.7979, 1.0}) {
        for (auto pattern : {ArrivalPattern::Smooth, ArrivalPattern::FrontloadedBursts,
                             ArrivalPattern::RandomSpread}) {
            for (std::uint64_t seed : {1ull, 42ull}) {
                ArrivalSchedule s =
                    windowed_rate_schedule(576, 6, 4000, pattern, seed, rate);
                std::int64_t cap = window_arrival_cap(576, rate);
                CHECK(!validate_schedule(s, 576, cap).has_value());
            }
        }
    }
}

TEST_CASE("window precondition") {
    CHECK_THROWS_AS(windowed_rate_schedule(16 * 64 * 64 - 1, 64, 1000, ArrivalPattern::Smooth, 0),
                    std::invalid_argument);
}

TEST_CASE("validator agrees with brute force on small schedules") {
    for (std::uint64_t seed : {11ull, 22ull, 33ull}) {
        ArrivalSchedule s = windowed_rate_schedule(576, 6, 9000, ArrivalPattern::RandomSpread, seed,
                                                   0.9);
        for (Slot w : {17, 576, 2048}) {
            CHECK(max_window_sum(s, w) == brute_force_max_window(s, w));
        }
    }
    // and on a lumpy hand-made schedule
    ArrivalSchedule lumpy;
    lumpy.arrivals = {{0, 5}, {3, 2}, {4, 9}, {100, 1}, {101, 1}, {105, 30}};
    lumpy.horizon = 106;
    for (Slot w : {1, 2, 5, 7, 100}) {
        CHECK(max_window_sum(lumpy, w) == brute_force_max_window(lumpy, w));
    }
}

TEST_CASE("first violation is the earliest window start") {
    ArrivalSchedule s;
    s.arrivals = {{10, 4}, {12, 4}};
    s.horizon = 13;
    auto v = validate_schedule(s, 5, std::int64_t(7));
    REQUIRE(v.has_value());
    CHECK(v->window_start == 8);  // [8,13) holds both bursts
    CHECK(v->window_sum == 8);
}

TEST_CASE("arrival trace loading") {
    auto path = write_temp("ok.csv", "0,5\n100,3\n");
    ArrivalSchedule s = load_arrival_trace(path);
    CHECK(s.at(0) == 5);
    CHECK(s.at(100) == 3);
    CHECK(s.total() == 8);
    CHECK(s.horizon == 101);
    std::remove(path.c_str());

    auto empty = write_temp("empty.csv", "");
    CHECK(load_arrival_trace(empty).total() == 0);
    std::remove(empty.c_str());

    auto comments = write_temp("comments.csv", "# header\n5,2\n\n# more\n9,1\n");
    ArrivalSchedule c = load_arrival_trace(comments);
    CHECK(c.total() == 3);
    std::remove(comments.c_str());

    auto bad = write_temp("bad.csv", "0,-1\n");
    CHECK_THROWS_WITH_AS(load_arrival_trace(bad), doctest::Contains(":1:"), std::runtime_error);
    std::remove(bad.c_str());

    auto junk = write_temp("junk.csv", "0,5\nnot a line\n");
    CHECK_THROWS_WITH_AS(load_arrival_trace(junk), doctest::Contains(":2:"), std::runtime_error);
    std::remove(junk.c_str());

    CHECK_THROWS_AS(load_arrival_trace("does_not_exist.csv"), std::runtime_error);
}
