#include "tihdp/scripted.hpp"

#include <cmath>
#include <limits>

namespace tihdp {

namespace {

Command drive_towards(const RobotBody& me, Vec2 point) {
    Vec2 d = point - me.position;
    if (norm(d) < 0.02) return {0, 0};
    double desired = std::atan2(d.y, d.x);
    double err = wrap_angle(desired - me.heading);
    Command cmd;
    cmd.turn = err > 0.05 ? 1 : (err < -0.05 ? -1 : 0);
    cmd.move = std::fabs(err) < M_PI / 3.0 ? 1 : 0;
    return cmd;
}

Command push_command(const WorldState& state, const ScenarioConfig& config, int robot, int target) {
    const RobotBody& me = state.robots[static_cast<std::size_t>(robot)];
    const TransportObject& obj = state.objects[static_cast<std::size_t>(target)];
    const PhysicsParams& ph = config.physics;

    Vec2 axis = unit(obj.position - obj.goal);  // points from the goal out through the object
    if (axis == Vec2{0.0, 0.0}) return {0, 0};
    Vec2 from_obj = me.position - obj.position;
    double align = dot(unit(from_obj), axis);

    if (align > 0.7) {
        // behind the object: drive straight through it toward the goal
        Vec2 aim = obj.position - axis * 0.1;
        return drive_towards(me, aim);
    }
    double ring = ph.body_radius + ph.disc_radius;
    if (align > -0.2) {
        // on the flank; the far-side point is reachable without crossing the object
        Vec2 behind = obj.position + axis * (ring + 0.05);
        return drive_towards(me, behind);
    }
    // goal side: circle around via a lateral waypoint on the robot's side
    double side = axis.x * from_obj.y - axis.y * from_obj.x;
    Vec2 lateral = side >= 0.0 ? perp(axis) : -perp(axis);
    Vec2 waypoint = obj.position + lateral * (ring + 0.25);
    return drive_towards(me, waypoint);
}

}  // namespace

std::vector<ScriptedDecision> scripted_policy_all(const WorldState& state,
                                                  const ScenarioConfig& config) {
    const int n = static_cast<int>(state.robots.size());
    const int m = static_cast<int>(state.objects.size());
    std::vector<ScriptedDecision> out(static_cast<std::size_t>(n));

    std::vector<int> need(static_cast<std::size_t>(m), 0);
    for (int l = 0; l < m; ++l) {
        const auto& o = state.objects[static_cast<std::size_t>(l)];
        if (o.completed || o.weight_class == WeightClass::Heavy) continue;
        need[static_cast<std::size_t>(l)] = o.weight_class == WeightClass::Medium ? 2 : 1;
    }

    std::vector<int> assigned(static_cast<std::size_t>(n), -1);
    std::vector<int> got(static_cast<std::size_t>(m), 0);
    auto dist = [&](int i, int l) {
        return norm(state.objects[static_cast<std::size_t>(l)].position -
                    state.robots[static_cast<std::size_t>(i)].position);
    };

    for (;;) {
        int free_robots = 0;
        for (int i = 0; i < n; ++i)
            if (assigned[static_cast<std::size_t>(i)] < 0) ++free_robots;
        if (free_robots == 0) break;

        int best_i = -1, best_l = -1;
        double best_d = std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i) {
            if (assigned[static_cast<std::size_t>(i)] >= 0) continue;
            for (int l = 0; l < m; ++l) {
                int remaining = need[static_cast<std::size_t>(l)] - got[static_cast<std::size_t>(l)];
                if (remaining <= 0) continue;
                // an unstarted Medium claim needs a full pair available
                if (remaining == 2 && free_robots < 2) continue;
                double d = dist(i, l);
                if (d < best_d) {
                    best_d = d;
                    best_i = i;
                    best_l = l;
                }
            }
        }
        if (best_i < 0) break;
        assigned[static_cast<std::size_t>(best_i)] = best_l;
        got[static_cast<std::size_t>(best_l)] += 1;
        if (need[static_cast<std::size_t>(best_l)] - got[static_cast<std::size_t>(best_l)] > 0) {
            // complete the Medium pair with the next nearest free robot
            int partner = -1;
            double pd = std::numeric_limits<double>::infinity();
            for (int i = 0; i < n; ++i) {
                if (assigned[static_cast<std::size_t>(i)] >= 0) continue;
                double d = dist(i, best_l);
                if (d < pd) {
                    pd = d;
                    partner = i;
                }
            }
            if (partner >= 0) {
                assigned[static_cast<std::size_t>(partner)] = best_l;
                got[static_cast<std::size_t>(best_l)] += 1;
            }
        }
    }

    // leftover robots lend a hand on their nearest open task
    for (int i = 0; i < n; ++i) {
        if (assigned[static_cast<std::size_t>(i)] >= 0) continue;
        int best_l = -1;
        double best_d = std::numeric_limits<double>::infinity();
        for (int l = 0; l < m; ++l) {
            if (need[static_cast<std::size_t>(l)] == 0) continue;
            double d = dist(i, l);
            if (d < best_d) {
                best_d = d;
                best_l = l;
            }
        }
        assigned[static_cast<std::size_t>(i)] = best_l;
    }

    for (int i = 0; i < n; ++i) {
        int l = assigned[static_cast<std::size_t>(i)];
        out[static_cast<std::size_t>(i)].target = l;
        out[static_cast<std::size_t>(i)].command =
            l >= 0 ? push_command(state, config, i, l) : Command{0, 0};
    }
    return out;
}

ScriptedDecision scripted_policy(const WorldState& state, const ScenarioConfig& config, int robot) {
    return scripted_policy_all(state, config).at(static_cast<std::size_t>(robot));
}

}  // namespace tihdp
