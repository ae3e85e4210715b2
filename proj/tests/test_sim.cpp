#include <doctest.h>

#include <cmath>
#include <set>
#include <stdexcept>

#include "rss_sentinel/sim.hpp"

using namespace rss_sentinel;

namespace {

EnvironmentSpec single_link() {
    EnvironmentSpec env;
    env.ap_positions = {{0.0, 0.0}};
    env.mp_positions = {{10.0, 0.0}};
    env.tx_power_dbm = -30.0;
    env.path_loss_exponent = 2.0;
    env.ref_distance_m = 1.0;
    return env;
}

}  // namespace

TEST_CASE("noise-free link follows the path-loss formula") {
    const RssTrace t = simulate_trace(single_link(), 0, 30, {}, 7);
    REQUIRE(t.samples.size() == 30);
    for (const auto& s : t.samples) CHECK(s.rss_dbm == doctest::Approx(-50.0).epsilon(1e-12));
}

TEST_CASE("offset shifts every sample") {
    const RssTrace t = simulate_trace(single_link(), 0, 10, {-5.0, 0.0}, 7);
    for (const auto& s : t.samples) CHECK(s.rss_dbm == doctest::Approx(-55.0).epsilon(1e-12));
}

TEST_CASE("intrusion inside the area attenuates the path") {
    EnvironmentSpec env = single_link();
    env.areas = {{{5.0, 0.5}, 1.0}};
    env.intrusion_atten_db = 8.0;
    const RssTrace t = simulate_trace(env, 1, 10, {}, 7);
    for (const auto& s : t.samples) CHECK(s.rss_dbm == doctest::Approx(-58.0).epsilon(1e-12));
    for (const auto& m : t.true_state) CHECK(m.state_id == 1);
}

TEST_CASE("schedule concatenates segments with continuous timestamps") {
    EnvironmentSpec env = single_link();
    env.areas = {{{5.0, 0.0}, 1.0}};
    const RssTrace t = simulate_schedule(env, {{0, 10}, {1, 10}}, {}, 3);
    REQUIRE(t.true_state.size() == 20);
    for (int i = 0; i < 20; ++i) {
        CHECK(t.true_state[static_cast<std::size_t>(i)].timestamp_s == i);
        CHECK(t.true_state[static_cast<std::size_t>(i)].state_id == (i < 10 ? 0 : 1));
    }
}

TEST_CASE("single-segment schedule equals simulate_trace") {
    const EnvironmentSpec env = default_environment();
    const RssTrace a = simulate_schedule(env, {{0, 5}}, {}, 11);
    const RssTrace b = simulate_trace(env, 0, 5, {}, 11);
    REQUIRE(a.samples.size() == b.samples.size());
    for (std::size_t i = 0; i < a.samples.size(); ++i) CHECK(a.samples[i].rss_dbm == b.samples[i].rss_dbm);
}

TEST_CASE("equal seeds give identical traces, different seeds do not") {
    const EnvironmentSpec env = default_environment();
    const RssTrace a = simulate_schedule(env, {{0, 30}, {2, 30}}, {-4.0, 1.5}, 99);
    const RssTrace b = simulate_schedule(env, {{0, 30}, {2, 30}}, {-4.0, 1.5}, 99);
    const RssTrace c = simulate_schedule(env, {{0, 30}, {2, 30}}, {-4.0, 1.5}, 100);
    bool differs = false;
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        CHECK(a.samples[i].rss_dbm == b.samples[i].rss_dbm);
        differs = differs || a.samples[i].rss_dbm != c.samples[i].rss_dbm;
    }
    CHECK(differs);
}

TEST_CASE("zero noise reproduces the closed form on every path") {
    EnvironmentSpec env = default_environment();
    env.shadowing_sigma_db = 0.0;
    env.intrusion_sigma_db = 0.0;
    env.resolution_db = 0.0;
    const RssTrace t = simulate_trace(env, 0, 3, {}, 1);
    const std::size_t n_mp = env.mp_positions.size();
    for (const auto& s : t.samples) {
        const Point2 ap = env.ap_positions[static_cast<std::size_t>(s.path_id) / n_mp];
        const Point2 mp = env.mp_positions[static_cast<std::size_t>(s.path_id) % n_mp];
        const double d = std::sqrt((ap.x - mp.x) * (ap.x - mp.x) + (ap.y - mp.y) * (ap.y - mp.y));
        CHECK(s.rss_dbm == doctest::Approx(-30.0 - 25.0 * std::log10(d)).epsilon(1e-12));
    }
}

TEST_CASE("paths outside the active area are untouched by intrusion") {
    EnvironmentSpec env = default_environment();
    env.shadowing_sigma_db = 0.0;
    env.intrusion_sigma_db = 0.0;
    env.resolution_db = 0.0;
    for (int area = 0; area < static_cast<int>(env.areas.size()); ++area) {
        const auto hit = affected_paths(env, area);
        const RssTrace quiet = simulate_trace(env, 0, 2, {}, 5);
        const RssTrace busy = simulate_trace(env, area + 1, 2, {}, 5);
        for (std::size_t i = 0; i < quiet.samples.size(); ++i) {
            const auto j = static_cast<std::size_t>(quiet.samples[i].path_id);
            const double drop = quiet.samples[i].rss_dbm - busy.samples[i].rss_dbm;
            CHECK(drop == doctest::Approx(hit[j] ? env.intrusion_atten_db : 0.0));
        }
    }
}

TEST_CASE("point to segment distance") {
    CHECK(point_segment_distance({5, 3}, {0, 0}, {10, 0}) == doctest::Approx(3.0));
    CHECK(point_segment_distance({-3, 4}, {0, 0}, {10, 0}) == doctest::Approx(5.0));
    CHECK(point_segment_distance({13, 4}, {0, 0}, {10, 0}) == doctest::Approx(5.0));
    CHECK(point_segment_distance({1, 1}, {2, 2}, {2, 2}) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("default environment has distinct intrusion signatures") {
    const EnvironmentSpec env = default_environment();
    CHECK(env.num_paths() == 15);
    CHECK(env.num_states() == 5);
    std::set<std::vector<bool>> signatures;
    for (int a = 0; a < 4; ++a) {
        const auto hit = affected_paths(env, a);
        int count = 0;
        for (bool h : hit) count += h;
        CHECK(count > 0);
        signatures.insert(hit);
    }
    CHECK(signatures.size() == 4);
}

TEST_CASE("resolution rounds readings") {
    const RssTrace t = simulate_trace(default_environment(), 1, 20, {-4.0, 1.5}, 8);
    for (const auto& s : t.samples) CHECK(s.rss_dbm == std::round(s.rss_dbm));
}

TEST_CASE("invalid inputs are rejected") {
    EnvironmentSpec env = single_link();
    CHECK_THROWS_AS(simulate_trace(env, 1, 10, {}, 1), std::invalid_argument);
    CHECK_THROWS_AS(simulate_trace(env, 0, 0, {}, 1), std::invalid_argument);
    CHECK_THROWS_AS(simulate_schedule(env, {}, {}, 1), std::invalid_argument);
    CHECK_THROWS_AS(simulate_trace(env, 0, 5, {0.0, -1.0}, 1), std::invalid_argument);
    env.ap_positions.clear();
    CHECK_THROWS_AS(simulate_trace(env, 0, 5, {}, 1), std::invalid_argument);
}
