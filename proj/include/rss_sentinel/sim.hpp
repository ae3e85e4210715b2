#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace rss_sentinel {

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

struct Area {
    Point2 centroid;
    double radius_m = 1.0;
};

// Synthetic deployment: every AP -> MP pair is one propagation path.
// Path j covers ap j / |mps| and mp j % |mps|.
struct EnvironmentSpec {
    std::vector<Point2> ap_positions;
    std::vector<Point2> mp_positions;
    std::vector<Area> areas;
    double tx_power_dbm = -30.0;
    double path_loss_exponent = 2.0;
    double ref_distance_m = 1.0;
    double shadowing_sigma_db = 0.0;
    double intrusion_atten_db = 0.0;
    double intrusion_sigma_db = 0.0;
    // 0 keeps readings continuous; otherwise readings are rounded to this step.
    double resolution_db = 0.0;

    int num_paths() const { return static_cast<int>(ap_positions.size() * mp_positions.size()); }
    int num_states() const { return 1 + static_cast<int>(areas.size()); }
    void validate() const;
};

struct DomainShift {
    double offset_db = 0.0;
    double extra_sigma_db = 0.0;
};

struct RssSample {
    std::int64_t timestamp_s = 0;
    int path_id = 0;
    double rss_dbm = 0.0;
};

struct StateMark {
    std::int64_t timestamp_s = 0;
    int state_id = 0;
};

struct RssTrace {
    std::vector<RssSample> samples;      // ordered by (timestamp, path)
    std::vector<StateMark> true_state;   // one entry per timestamp
    double sample_rate_hz = 1.0;
    int num_paths = 0;
};

using Schedule = std::vector<std::pair<int, std::int64_t>>;  // (state, duration_s)

// Minimum distance from `p` to the segment [a, b].
double point_segment_distance(Point2 p, Point2 a, Point2 b);

// Paths whose AP->MP segment passes within the radius of area `area_index`.
std::vector<bool> affected_paths(const EnvironmentSpec& env, int area_index);

// Noise-free received power of path j under state 0 with no shift.
double mean_path_rss(const EnvironmentSpec& env, int path_id);

RssTrace simulate_trace(const EnvironmentSpec& env, int state, std::int64_t duration_s,
                        const DomainShift& shift, std::uint64_t seed);

RssTrace simulate_schedule(const EnvironmentSpec& env, const Schedule& schedule,
                           const DomainShift& shift, std::uint64_t seed);

// Five APs along one wall, three MPs along the opposite wall and four
// intrusion areas, each shadowing a distinct subset of the fifteen paths.
EnvironmentSpec default_environment();

}  // namespace rss_sentinel
