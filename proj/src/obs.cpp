#include "tihdp/obs.hpp"

#include <algorithm>
#include <cmath>

namespace tihdp {

std::string ObsConfig::layout_tag() const {
    return "obs-v1:J" + std::to_string(nearby_robots) + ":K" +
           std::to_string(nearby_objects) + ":hi" + std::to_string(high_dim()) +
           ":lo" + std::to_string(low_dim());
}

NearestEntities nearest_entities(const WorldState& state, int robot, int J, int K) {
    const auto& me = state.robots[static_cast<std::size_t>(robot)];

    std::vector<int> robots;
    for (const auto& r : state.robots)
        if (r.id != robot) robots.push_back(r.id);
    std::stable_sort(robots.begin(), robots.end(), [&](int a, int b) {
        double da = norm(state.robots[static_cast<std::size_t>(a)].position - me.position);
        double db = norm(state.robots[static_cast<std::size_t>(b)].position - me.position);
        if (da != db) return da < db;
        return a < b;
    });

    std::vector<int> objects;
    for (const auto& o : state.objects)
        if (!o.completed) objects.push_back(o.id);
    std::stable_sort(objects.begin(), objects.end(), [&](int a, int b) {
        double da = norm(state.objects[static_cast<std::size_t>(a)].position - me.position);
        double db = norm(state.objects[static_cast<std::size_t>(b)].position - me.position);
        if (da != db) return da < db;
        return a < b;
    });

    NearestEntities out;
    out.robot_ids.assign(static_cast<std::size_t>(J), -1);
    out.object_ids.assign(static_cast<std::size_t>(K), -1);
    for (int j = 0; j < J && j < static_cast<int>(robots.size()); ++j)
        out.robot_ids[static_cast<std::size_t>(j)] = robots[static_cast<std::size_t>(j)];
    for (int k = 0; k < K && k < static_cast<int>(objects.size()); ++k)
        out.object_ids[static_cast<std::size_t>(k)] = objects[static_cast<std::size_t>(k)];
    return out;
}

namespace {

// Own block: last command pair, ego-frame linear velocity, angular velocity.
void push_own_block(std::vector<double>& v, const RobotBody& me) {
    v.push_back(static_cast<double>(me.last_command.move));
    v.push_back(static_cast<double>(me.last_command.turn));
    Vec2 ego_v = rotate(me.linear_velocity, -me.heading);
    v.push_back(ego_v.x);
    v.push_back(ego_v.y);
    v.push_back(me.angular_velocity);
}

// Robot slot: relative position, relative heading (cos, sin), relative
// velocity, angular velocity, valid flag. All-zero with flag 0 for padding.
void push_robot_slot(std::vector<double>& v, const WorldState& s,
                     const RobotBody& me, int id) {
    if (id < 0) {
        v.insert(v.end(), 8, 0.0);
        return;
    }
    const auto& other = s.robots[static_cast<std::size_t>(id)];
    Vec2 rel_p = rotate(other.position - me.position, -me.heading);
    double rel_h = other.heading - me.heading;
    Vec2 rel_v = rotate(other.linear_velocity - me.linear_velocity, -me.heading);
    v.push_back(rel_p.x);
    v.push_back(rel_p.y);
    v.push_back(std::cos(rel_h));
    v.push_back(std::sin(rel_h));
    v.push_back(rel_v.x);
    v.push_back(rel_v.y);
    v.push_back(other.angular_velocity);
    v.push_back(1.0);
}

// Object slot: relative position, relative goal position, ego-frame velocity,
// valid flag.
void push_object_slot(std::vector<double>& v, const WorldState& s,
                      const RobotBody& me, int id) {
    if (id < 0) {
        v.insert(v.end(), 7, 0.0);
        return;
    }
    const auto& o = s.objects[static_cast<std::size_t>(id)];
    Vec2 rel_p = rotate(o.position - me.position, -me.heading);
    Vec2 rel_g = rotate(o.goal - me.position, -me.heading);
    Vec2 ego_w = rotate(o.velocity, -me.heading);
    v.push_back(rel_p.x);
    v.push_back(rel_p.y);
    v.push_back(rel_g.x);
    v.push_back(rel_g.y);
    v.push_back(ego_w.x);
    v.push_back(ego_w.y);
    v.push_back(1.0);
}

}  // namespace

std::vector<double> build_high_obs(const WorldState& state, int robot,
                                   const ObsConfig& config,
                                   NearestEntities* neighbors_out) {
    const auto& me = state.robots[static_cast<std::size_t>(robot)];
    NearestEntities near =
        nearest_entities(state, robot, config.nearby_robots, config.nearby_objects);

    std::vector<double> v;
    v.reserve(static_cast<std::size_t>(config.high_dim()));
    push_own_block(v, me);
    for (int id : near.robot_ids) push_robot_slot(v, state, me, id);
    for (int id : near.object_ids) push_object_slot(v, state, me, id);
    if (neighbors_out) *neighbors_out = std::move(near);
    return v;
}

std::vector<double> build_low_obs(const WorldState& state, int robot, int target) {
    const auto& me = state.robots[static_cast<std::size_t>(robot)];
    const auto& tgt = state.objects.at(static_cast<std::size_t>(target));

    std::vector<double> v;
    v.reserve(ObsConfig::low_dim());
    push_own_block(v, me);

    NearestEntities near = nearest_entities(state, robot, 1, 0);
    push_robot_slot(v, state, me, near.robot_ids[0]);

    Vec2 rel_p = rotate(tgt.position - me.position, -me.heading);
    Vec2 rel_g = rotate(tgt.goal - me.position, -me.heading);
    Vec2 ego_w = rotate(tgt.velocity, -me.heading);
    v.push_back(rel_p.x);
    v.push_back(rel_p.y);
    v.push_back(rel_g.x);
    v.push_back(rel_g.y);
    v.push_back(ego_w.x);
    v.push_back(ego_w.y);

    // Nearest uncompleted object other than the target, for collision avoidance.
    int nearest = -1;
    double best = 0.0;
    for (const auto& o : state.objects) {
        if (o.id == target || o.completed) continue;
        double d = norm(o.position - me.position);
        if (nearest < 0 || d < best) {
            nearest = o.id;
            best = d;
        }
    }
    if (nearest < 0) {
        v.insert(v.end(), 5, 0.0);
    } else {
        const auto& o = state.objects[static_cast<std::size_t>(nearest)];
        Vec2 np = rotate(o.position - me.position, -me.heading);
        Vec2 nw = rotate(o.velocity, -me.heading);
        v.push_back(np.x);
        v.push_back(np.y);
        v.push_back(nw.x);
        v.push_back(nw.y);
        v.push_back(1.0);
    }
    return v;
}

std::vector<double> build_global_state(const WorldState& state) {
    std::vector<double> v;
    v.reserve(static_cast<std::size_t>(
        global_state_dim(static_cast<int>(state.robots.size()),
                         static_cast<int>(state.objects.size()))));
    for (const auto& r : state.robots) {
        v.push_back(r.position.x);
        v.push_back(r.position.y);
        v.push_back(std::cos(r.heading));
        v.push_back(std::sin(r.heading));
        v.push_back(r.linear_velocity.x);
        v.push_back(r.linear_velocity.y);
        v.push_back(r.angular_velocity);
    }
    for (const auto& o : state.objects) {
        v.push_back(o.position.x);
        v.push_back(o.position.y);
        v.push_back(o.goal.x);
        v.push_back(o.goal.y);
        v.push_back(o.velocity.x);
        v.push_back(o.velocity.y);
        for (int c = 0; c < 3; ++c)
            v.push_back(static_cast<int>(o.weight_class) == c ? 1.0 : 0.0);
        v.push_back(o.completed ? 1.0 : 0.0);
    }
    return v;
}

std::vector<double> build_baseline_obs(const WorldState& state, int robot,
                                       BaselineVariant variant,
                                       const ObsConfig& config,
                                       NearestEntities* neighbors_out) {
    if (variant == BaselineVariant::Local)
        return build_high_obs(state, robot, config, neighbors_out);

    // Global: world-frame blocks, observing robot first, no weight one-hots.
    std::vector<double> v;
    v.reserve(static_cast<std::size_t>(
        baseline_global_dim(static_cast<int>(state.robots.size()),
                            static_cast<int>(state.objects.size()))));
    auto push_robot = [&](const RobotBody& r) {
        v.push_back(r.position.x);
        v.push_back(r.position.y);
        v.push_back(std::cos(r.heading));
        v.push_back(std::sin(r.heading));
        v.push_back(r.linear_velocity.x);
        v.push_back(r.linear_velocity.y);
        v.push_back(r.angular_velocity);
    };
    push_robot(state.robots[static_cast<std::size_t>(robot)]);
    for (const auto& r : state.robots)
        if (r.id != robot) push_robot(r);
    for (const auto& o : state.objects) {
        v.push_back(o.position.x);
        v.push_back(o.position.y);
        v.push_back(o.goal.x);
        v.push_back(o.goal.y);
        v.push_back(o.velocity.x);
        v.push_back(o.velocity.y);
        v.push_back(o.completed ? 1.0 : 0.0);
    }
    if (neighbors_out)
        *neighbors_out = nearest_entities(state, robot, config.nearby_robots,
                                          config.nearby_objects);
    return v;
}

}  // namespace tihdp
