#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tihdp/engine.hpp"

namespace tihdp {

inline constexpr const char* kTrajSchema = "tihdp-traj-1";

// Line-delimited episode log: one header line, then one line per control
// step. Append-only; readable while being written.
class TrajectoryWriter {
public:
    void open(const std::string& path, const std::string& layout_tag, const std::string& variant,
              std::uint64_t seed, const ScenarioConfig& scenario, const WorldState& initial);
    // Call after engine_step with the advanced world (post-step state).
    void write_step(const EnvStepRecord& rec, const WorldState& world_after);
    void close();

private:
    std::ofstream os_;
    std::string path_;
    long step_ = 0;
};

// Parsed trajectory. Reading stops at the first malformed line; `truncated`
// is set and `steps` holds the valid prefix.
struct TrajRobotStep {
    Vec2 position;
    double heading = 0.0;
    Vec2 velocity;
    double angular_velocity = 0.0;
    int move = 0, turn = 0;
    int target = -1;
    int alpha = 0, beta = 0;
    std::vector<double> priorities;
};

struct TrajObjectStep {
    Vec2 position;
    Vec2 velocity;
    bool completed = false;
};

struct TrajStep {
    long t = 0;
    std::vector<TrajRobotStep> robots;
    std::vector<TrajObjectStep> objects;
    double team_reward = 0.0;
    std::vector<double> lo_rewards;
};

struct Trajectory {
    std::string schema;
    std::string layout_tag;
    std::string variant;
    std::uint64_t seed = 0;
    nlohmann::json scenario;
    std::vector<std::string> classes;  // per object
    std::vector<Vec2> goals;           // per object
    std::vector<TrajStep> steps;
    bool truncated = false;
    std::string warning;
};

Trajectory read_trajectory(const std::string& path);

// Delivery metrics recomputed from logs alone: per episode, the fraction of
// non-heavy objects completed at the final logged step.
struct LogMetrics {
    int episodes = 0;
    double cor = 0.0;
    double tocr = 0.0;
};
LogMetrics metrics_from_logs(const std::vector<std::string>& paths);

}  // namespace tihdp
