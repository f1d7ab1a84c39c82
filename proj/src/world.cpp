#include "tihdp/world.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace tihdp {

namespace {

Vec2 disc_sample(Rng& rng, double radius) {
    double u1 = rng.uniform();
    double u2 = rng.uniform();
    double r = radius * std::sqrt(u1);
    double th = 2.0 * M_PI * u2;
    return {r * std::cos(th), r * std::sin(th)};
}

bool layout_overlaps(const WorldState& s) {
    for (std::size_t i = 0; i < s.robots.size(); ++i) {
        for (std::size_t j = i + 1; j < s.robots.size(); ++j) {
            double min_d = s.robots[i].body_radius + s.robots[j].body_radius;
            if (norm(s.robots[i].position - s.robots[j].position) < min_d) return true;
        }
        for (const auto& o : s.objects) {
            double min_d = s.robots[i].body_radius + o.disc_radius;
            if (norm(s.robots[i].position - o.position) < min_d) return true;
        }
    }
    for (std::size_t a = 0; a < s.objects.size(); ++a) {
        for (std::size_t b = a + 1; b < s.objects.size(); ++b) {
            double min_d = s.objects[a].disc_radius + s.objects[b].disc_radius;
            if (norm(s.objects[a].position - s.objects[b].position) < min_d) return true;
        }
    }
    return false;
}

}  // namespace

WorldState world_reset(const ScenarioConfig& config, std::uint64_t seed) {
    config.validate();
    const int n = config.robots;
    const int m = config.objects();
    const auto& pl = config.placement;
    const auto& ph = config.physics;

    WorldState state;
    state.rng = Rng(seed);

    // Class labels per object slot: counts expanded then shuffled once per reset.
    std::vector<WeightClass> classes;
    classes.insert(classes.end(), config.light, WeightClass::Light);
    classes.insert(classes.end(), config.medium, WeightClass::Medium);
    classes.insert(classes.end(), config.heavy, WeightClass::Heavy);
    state.rng.shuffle(classes);

    for (int attempt = 0; attempt < 100; ++attempt) {
        state.robots.assign(n, RobotBody{});
        state.objects.assign(m, TransportObject{});

        for (int i = 0; i < n; ++i) {
            auto& r = state.robots[i];
            r.id = i;
            double angle = 2.0 * M_PI * i / n;
            Vec2 ref{pl.robot_circle_radius * std::cos(angle),
                     pl.robot_circle_radius * std::sin(angle)};
            r.position = ref + disc_sample(state.rng, pl.robot_perturbation_radius);
            r.heading = wrap_angle(state.rng.uniform(-M_PI, M_PI));
            r.body_radius = ph.body_radius;
        }
        for (int l = 0; l < m; ++l) {
            auto& o = state.objects[l];
            o.id = l;
            double angle = 2.0 * M_PI * l / m;
            Vec2 ref{pl.object_circle_radius * std::cos(angle),
                     pl.object_circle_radius * std::sin(angle)};
            o.position = ref + disc_sample(state.rng, pl.object_perturbation_radius);
            o.goal = {pl.goal_circle_radius * std::cos(angle),
                      pl.goal_circle_radius * std::sin(angle)};
            o.weight_class = classes[l];
            o.mass = ph.mass_for(classes[l]);
            o.disc_radius = ph.disc_radius;
            o.completed = norm(o.goal - o.position) <= config.goal_radius;
        }

        if (!layout_overlaps(state)) return state;
    }
    throw std::runtime_error("world_reset: infeasible geometry, bodies still overlap after 100 attempts");
}

StepStats world_step(WorldState& state, const ScenarioConfig& config,
                     const std::vector<Command>& commands) {
    if (commands.size() != state.robots.size())
        throw std::invalid_argument("world_step: one command per robot required");

    const auto& ph = config.physics;
    const double dt = ph.dt_physics;
    const int substeps = ph.substeps();
    // Penetration past this depth adds no force; robots are clamped here so
    // they cannot sink through bodies that refuse to move.
    const double overlap_cap = ph.f_max / ph.contact_stiffness;

    StepStats stats;
    const int n = static_cast<int>(state.robots.size());
    const int m = static_cast<int>(state.objects.size());
    std::vector<Vec2> net_force(m);

    for (int sub = 0; sub < substeps; ++sub) {
        // Robot kinematics: commanded twist applied instantaneously.
        for (int i = 0; i < n; ++i) {
            auto& r = state.robots[i];
            r.angular_velocity = commands[i].turn * ph.omega_max;
            r.heading = wrap_angle(r.heading + r.angular_velocity * dt);
            r.linear_velocity = heading_dir(r.heading) * (commands[i].move * ph.v_max);
            r.position += r.linear_velocity * dt;
        }

        // Robot-robot overlap: symmetric positional projection, ascending pair order.
        for (int i = 0; i < n; ++i) {
            for (int j = i + 1; j < n; ++j) {
                Vec2 d = state.robots[j].position - state.robots[i].position;
                double dist = norm(d);
                double min_d = state.robots[i].body_radius + state.robots[j].body_radius;
                if (dist < min_d) {
                    Vec2 axis = dist > 0.0 ? d / dist : Vec2{1.0, 0.0};
                    double push = 0.5 * (min_d - dist);
                    state.robots[i].position -= axis * push;
                    state.robots[j].position += axis * push;
                }
            }
        }

        // Penalty contact: each robot transmits at most f_max to an object.
        std::fill(net_force.begin(), net_force.end(), Vec2{});
        for (int i = 0; i < n; ++i) {
            for (int l = 0; l < m; ++l) {
                Vec2 d = state.objects[l].position - state.robots[i].position;
                double dist = norm(d);
                double overlap = state.robots[i].body_radius + state.objects[l].disc_radius - dist;
                if (overlap > 0.0 && dist > 0.0) {
                    double f = std::min(ph.contact_stiffness * overlap, ph.f_max);
                    assert(f <= ph.f_max);
                    stats.max_contact_force = std::max(stats.max_contact_force, f);
                    net_force[l] += (d / dist) * f;
                }
            }
        }

        // Object integration under Coulomb friction (quasi-static pushing).
        for (int l = 0; l < m; ++l) {
            auto& o = state.objects[l];
            double fn = norm(net_force[l]);
            double static_limit = ph.mu_static * o.mass * ph.gravity;
            bool at_rest = (o.velocity.x == 0.0 && o.velocity.y == 0.0);
            if (at_rest) {
                if (fn > static_limit) {
                    Vec2 fric_dir = unit(net_force[l]);
                    Vec2 accel = (net_force[l] - fric_dir * (ph.mu_kinetic * o.mass * ph.gravity)) / o.mass;
                    o.velocity += accel * dt;
                }
            } else {
                Vec2 fric_dir = unit(o.velocity);
                Vec2 accel = (net_force[l] - fric_dir * (ph.mu_kinetic * o.mass * ph.gravity)) / o.mass;
                Vec2 next = o.velocity + accel * dt;
                // Friction alone cannot reverse motion; it stops the object.
                if (dot(next, o.velocity) < 0.0 && fn <= static_limit) next = Vec2{};
                o.velocity = next;
            }
            o.position += o.velocity * dt;
        }

        // Robots slide along bodies that stayed at rest instead of sinking in.
        for (int i = 0; i < n; ++i) {
            for (int l = 0; l < m; ++l) {
                const auto& o = state.objects[l];
                if (o.velocity.x != 0.0 || o.velocity.y != 0.0) continue;
                Vec2 d = o.position - state.robots[i].position;
                double dist = norm(d);
                double overlap = state.robots[i].body_radius + o.disc_radius - dist;
                double excess = overlap - overlap_cap;
                if (excess > 0.0 && dist > 0.0) {
                    state.robots[i].position -= (d / dist) * excess;
                }
            }
        }
    }

    state.step_index += 1;
    for (int i = 0; i < n; ++i) state.robots[i].last_command = commands[i];
    // Memoryless completion predicate, recomputed every control step.
    for (auto& o : state.objects)
        o.completed = norm(o.goal - o.position) <= config.goal_radius;
    return stats;
}

double object_reward(const WorldState& state, const ScenarioConfig& config, int l) {
    const auto& o = state.objects.at(static_cast<std::size_t>(l));
    Vec2 to_goal = o.goal - o.position;
    double dist = norm(to_goal);
    if (dist <= config.goal_radius) return 0.0;  // also guards the dist == 0 singularity
    return dot(o.velocity, to_goal / dist);
}

double team_reward(const WorldState& state, const ScenarioConfig& config) {
    double total = 0.0;
    for (int l = 0; l < static_cast<int>(state.objects.size()); ++l)
        total += object_reward(state, config, l);
    return total;
}

double robot_low_reward(const WorldState& state, const ScenarioConfig& config,
                        int robot, int target) {
    const auto& r = state.robots.at(static_cast<std::size_t>(robot));
    const auto& tgt = state.objects.at(static_cast<std::size_t>(target));

    double reward = object_reward(state, config, target);

    // Collision term: nearest uncompleted object other than the target.
    int nearest = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int l = 0; l < static_cast<int>(state.objects.size()); ++l) {
        if (l == target || state.objects[l].completed) continue;
        double d = norm(state.objects[l].position - r.position);
        if (d < best) {
            best = d;
            nearest = l;
        }
    }
    if (nearest >= 0) reward += std::min(0.0, object_reward(state, config, nearest));

    Vec2 to_target = tgt.position - r.position;
    bool approaching = dot(r.linear_velocity, to_target) > 0.0;
    bool close = norm(to_target) < config.physics.approach_distance;
    if (approaching || close) reward += 1.0;
    return reward;
}

}  // namespace tihdp
