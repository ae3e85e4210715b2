#include "rss_sentinel/sim.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "rss_sentinel/random.hpp"

namespace rss_sentinel {

void EnvironmentSpec::validate() const {
    if (ap_positions.empty()) throw std::invalid_argument("environment: ap_positions is empty");
    if (mp_positions.empty()) throw std::invalid_argument("environment: mp_positions is empty");
    if (!(path_loss_exponent >= 1.0))
        throw std::invalid_argument("environment: path_loss_exponent must be >= 1");
    if (!(ref_distance_m > 0.0)) throw std::invalid_argument("environment: ref_distance_m must be > 0");
    if (!(shadowing_sigma_db >= 0.0) || !(intrusion_sigma_db >= 0.0))
        throw std::invalid_argument("environment: noise sigmas must be >= 0");
    if (!(resolution_db >= 0.0)) throw std::invalid_argument("environment: resolution_db must be >= 0");
    for (const auto& area : areas)
        if (!(area.radius_m > 0.0)) throw std::invalid_argument("environment: area radius must be > 0");
    for (const auto& ap : ap_positions)
        for (const auto& mp : mp_positions)
            if (std::hypot(ap.x - mp.x, ap.y - mp.y) <= 0.0)
                throw std::invalid_argument("environment: an AP and an MP share a position");
}

double point_segment_distance(Point2 p, Point2 a, Point2 b) {
    const double dx = b.x - a.x;
    const double dy = b.y - a.y;
    const double len2 = dx * dx + dy * dy;
    double t = 0.0;
    if (len2 > 0.0) t = std::clamp(((p.x - a.x) * dx + (p.y - a.y) * dy) / len2, 0.0, 1.0);
    return std::hypot(p.x - (a.x + t * dx), p.y - (a.y + t * dy));
}

std::vector<bool> affected_paths(const EnvironmentSpec& env, int area_index) {
    const auto& area = env.areas.at(static_cast<std::size_t>(area_index));
    const std::size_t n_mp = env.mp_positions.size();
    std::vector<bool> hit(static_cast<std::size_t>(env.num_paths()));
    for (std::size_t j = 0; j < hit.size(); ++j) {
        const Point2 ap = env.ap_positions[j / n_mp];
        const Point2 mp = env.mp_positions[j % n_mp];
        hit[j] = point_segment_distance(area.centroid, ap, mp) <= area.radius_m;
    }
    return hit;
}

double mean_path_rss(const EnvironmentSpec& env, int path_id) {
    const std::size_t n_mp = env.mp_positions.size();
    const Point2 ap = env.ap_positions[static_cast<std::size_t>(path_id) / n_mp];
    const Point2 mp = env.mp_positions[static_cast<std::size_t>(path_id) % n_mp];
    const double d = std::hypot(ap.x - mp.x, ap.y - mp.y);
    return env.tx_power_dbm - 10.0 * env.path_loss_exponent * std::log10(d / env.ref_distance_m);
}

RssTrace simulate_schedule(const EnvironmentSpec& env, const Schedule& schedule,
                           const DomainShift& shift, std::uint64_t seed) {
    env.validate();
    if (schedule.empty()) throw std::invalid_argument("simulate: schedule is empty");
    if (!(shift.extra_sigma_db >= 0.0)) throw std::invalid_argument("simulate: extra_sigma_db must be >= 0");
    const int num_states = env.num_states();
    std::int64_t total = 0;
    for (const auto& [state, duration] : schedule) {
        if (state < 0 || state >= num_states)
            throw std::invalid_argument("simulate: state " + std::to_string(state) + " out of range 0.." +
                                        std::to_string(num_states - 1));
        if (duration < 1) throw std::invalid_argument("simulate: duration must be >= 1 s");
        total += duration;
    }

    const int p = env.num_paths();
    std::vector<double> base(static_cast<std::size_t>(p));
    for (int j = 0; j < p; ++j) base[static_cast<std::size_t>(j)] = mean_path_rss(env, j) + shift.offset_db;
    std::vector<std::vector<bool>> hits;
    for (int a = 0; a < static_cast<int>(env.areas.size()); ++a) hits.push_back(affected_paths(env, a));

    std::vector<std::mt19937_64> streams;
    streams.reserve(static_cast<std::size_t>(p));
    for (int j = 0; j < p; ++j) streams.emplace_back(mix_seed(seed, static_cast<std::uint64_t>(j)));
    std::normal_distribution<double> unit(0.0, 1.0);

    const double sigma = std::sqrt(env.shadowing_sigma_db * env.shadowing_sigma_db +
                                   shift.extra_sigma_db * shift.extra_sigma_db);

    RssTrace trace;
    trace.num_paths = p;
    trace.samples.reserve(static_cast<std::size_t>(total * p));
    trace.true_state.reserve(static_cast<std::size_t>(total));
    std::int64_t t = 0;
    for (const auto& [state, duration] : schedule) {
        for (std::int64_t s = 0; s < duration; ++s, ++t) {
            trace.true_state.push_back({t, state});
            for (int j = 0; j < p; ++j) {
                auto& rng = streams[static_cast<std::size_t>(j)];
                // Both draws are always consumed so a path's stream does not depend on the schedule.
                const double shadow = unit(rng);
                const double body = unit(rng);
                double rss = base[static_cast<std::size_t>(j)] + sigma * shadow;
                if (state != 0 && hits[static_cast<std::size_t>(state - 1)][static_cast<std::size_t>(j)])
                    rss -= env.intrusion_atten_db + env.intrusion_sigma_db * body;
                if (env.resolution_db > 0.0) rss = std::round(rss / env.resolution_db) * env.resolution_db;
                trace.samples.push_back({t, j, rss});
            }
        }
    }
    return trace;
}

RssTrace simulate_trace(const EnvironmentSpec& env, int state, std::int64_t duration_s,
                        const DomainShift& shift, std::uint64_t seed) {
    return simulate_schedule(env, {{state, duration_s}}, shift, seed);
}

EnvironmentSpec default_environment() {
    EnvironmentSpec env;
    env.ap_positions = {{0.0, 0.0}, {0.0, 5.0}, {0.0, 10.0}, {0.0, 15.0}, {0.0, 20.0}};
    env.mp_positions = {{20.0, 2.0}, {20.0, 10.0}, {20.0, 18.0}};
    env.areas = {{{4.0, 3.0}, 1.5}, {{10.0, 12.0}, 1.5}, {{16.0, 5.0}, 1.5}, {{15.0, 17.0}, 1.5}};
    env.tx_power_dbm = -30.0;
    env.path_loss_exponent = 2.5;
    env.ref_distance_m = 1.0;
    env.shadowing_sigma_db = 1.0;
    env.intrusion_atten_db = 6.0;
    env.intrusion_sigma_db = 2.0;
    env.resolution_db = 1.0;
    return env;
}

}  // namespace rss_sentinel
