#pragma once

#include <vector>

#include "tihdp/rng.hpp"
#include "tihdp/scenario.hpp"
#include "tihdp/vec2.hpp"

namespace tihdp {

// Discrete drive command; both fields in {-1, 0, +1}.
// move: +1 forward, -1 backward. turn: +1 left (counterclockwise), -1 right.
struct Command {
    int move = 0;
    int turn = 0;
};

struct RobotBody {
    int id = 0;
    Vec2 position;
    double heading = 0.0;  // radians in [-pi, pi)
    Vec2 linear_velocity;
    double angular_velocity = 0.0;
    Command last_command;
    double body_radius = 0.15;
};

struct TransportObject {
    int id = 0;
    Vec2 position;
    Vec2 goal;
    Vec2 velocity;
    double mass = 1.0;  // hidden from all actor observations
    WeightClass weight_class = WeightClass::Light;
    bool completed = false;
    double disc_radius = 0.15;
};

struct WorldState {
    std::vector<RobotBody> robots;
    std::vector<TransportObject> objects;
    long step_index = 0;
    Rng rng;
};

// Per-control-step diagnostics from the contact solver.
struct StepStats {
    double max_contact_force = 0.0;  // largest single robot->object force seen
};

// Circular placement with seeded perturbations; throws std::runtime_error if
// a non-overlapping layout cannot be sampled within 100 attempts.
WorldState world_reset(const ScenarioConfig& config, std::uint64_t seed);

// Advances one control step (substepped physics) with one command per robot.
StepStats world_step(WorldState& state, const ScenarioConfig& config,
                     const std::vector<Command>& commands);

// Velocity component of object l toward its goal; zero inside the goal ball.
double object_reward(const WorldState& state, const ScenarioConfig& config, int l);

// Sum of object rewards, shared by every robot's task-allocation learner.
double team_reward(const WorldState& state, const ScenarioConfig& config);

// Target-transport reward plus collision penalty plus approach bonus.
double robot_low_reward(const WorldState& state, const ScenarioConfig& config,
                        int robot, int target);

}  // namespace tihdp
