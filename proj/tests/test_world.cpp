#include <doctest.h>

#include <cmath>
#include <vector>

#include "tihdp/world.hpp"

using namespace tihdp;

namespace {

ScenarioConfig basic_scenario(int robots, int light, int medium, int heavy) {
    ScenarioConfig sc;
    sc.robots = robots;
    sc.light = light;
    sc.medium = medium;
    sc.heavy = heavy;
    return sc;
}

// Hand-built world: robots head-on against one object along +x, no placement
// randomness involved.
WorldState push_setup(const ScenarioConfig& sc, int pushers, WeightClass cls) {
    WorldState state;
    state.rng = Rng(0);
    for (int i = 0; i < pushers; ++i) {
        RobotBody r;
        r.id = i;
        // Pushers fan out slightly behind the object, all aimed at it.
        double lateral = (i - (pushers - 1) * 0.5) * 0.32;
        r.position = Vec2{-0.31, lateral};
        r.heading = std::atan2(-lateral, 0.31);
        r.body_radius = sc.physics.body_radius;
        state.robots.push_back(r);
    }
    TransportObject o;
    o.id = 0;
    o.position = Vec2{0.0, 0.0};
    o.goal = Vec2{50.0, 0.0};
    o.weight_class = cls;
    o.mass = sc.physics.mass_for(cls);
    o.disc_radius = sc.physics.disc_radius;
    state.objects.push_back(o);
    return state;
}

double push_displacement(int pushers, WeightClass cls, int steps) {
    ScenarioConfig sc = basic_scenario(pushers, 1, 0, 0);
    WorldState state = push_setup(sc, pushers, cls);
    std::vector<Command> forward(pushers, Command{1, 0});
    for (int t = 0; t < steps; ++t) world_step(state, sc, forward);
    return norm(state.objects[0].position);
}

}  // namespace

TEST_CASE("forward command integrates to 0.026 m per control step") {
    ScenarioConfig sc = basic_scenario(1, 1, 0, 0);
    WorldState state;
    state.rng = Rng(0);
    RobotBody r;
    r.position = Vec2{0.0, 0.0};
    r.heading = 0.0;
    state.robots.push_back(r);
    TransportObject o;
    o.position = Vec2{10.0, 10.0};
    o.goal = Vec2{12.0, 10.0};
    state.objects.push_back(o);

    world_step(state, sc, {Command{1, 0}});
    CHECK(state.robots[0].position.x == doctest::Approx(0.026).epsilon(1e-12));
    CHECK(state.robots[0].position.y == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(state.step_index == 1);
}

TEST_CASE("null command leaves state unchanged except the step index") {
    ScenarioConfig sc = basic_scenario(2, 1, 1, 0);
    WorldState state = world_reset(sc, 5);
    WorldState before = state;
    world_step(state, sc, std::vector<Command>(2));
    CHECK(state.step_index == before.step_index + 1);
    for (int i = 0; i < 2; ++i) {
        CHECK(state.robots[i].position == before.robots[i].position);
        CHECK(state.robots[i].heading == before.robots[i].heading);
    }
    for (std::size_t l = 0; l < state.objects.size(); ++l)
        CHECK(state.objects[l].position == before.objects[l].position);
}

TEST_CASE("weight-class push thresholds") {
    CHECK(push_displacement(1, WeightClass::Light, 100) > 1e-3);
    CHECK(push_displacement(1, WeightClass::Medium, 100) <= 1e-9);
    CHECK(push_displacement(2, WeightClass::Medium, 100) > 1e-3);
    for (int pushers = 1; pushers <= 4; ++pushers)
        CHECK(push_displacement(pushers, WeightClass::Heavy, 100) <= 1e-9);
}

TEST_CASE("medium object stays exactly at rest under a single pusher") {
    // 50-step variant of the threshold check, pinned to zero displacement.
    CHECK(push_displacement(1, WeightClass::Medium, 50) == 0.0);
}

TEST_CASE("contact force never exceeds the per-robot cap") {
    ScenarioConfig sc = basic_scenario(2, 0, 1, 0);
    WorldState state = push_setup(sc, 2, WeightClass::Medium);
    std::vector<Command> forward(2, Command{1, 0});
    for (int t = 0; t < 60; ++t) {
        StepStats stats = world_step(state, sc, forward);
        CHECK(stats.max_contact_force <= sc.physics.f_max + 1e-9);
    }
}

TEST_CASE("reset places rings and perturbations as configured") {
    ScenarioConfig sc = basic_scenario(3, 2, 1, 1);
    WorldState state = world_reset(sc, 0);
    REQUIRE(state.robots.size() == 3);
    REQUIRE(state.objects.size() == 4);

    for (int i = 0; i < 3; ++i) {
        double angle = 2.0 * M_PI * i / 3.0;
        Vec2 ref{std::cos(angle), std::sin(angle)};
        CHECK(norm(state.robots[i].position - ref) <=
              sc.placement.robot_perturbation_radius + 1e-12);
        CHECK(state.robots[i].heading >= -M_PI);
        CHECK(state.robots[i].heading < M_PI);
        CHECK(norm(state.robots[i].linear_velocity) == 0.0);
    }
    int classes[3] = {0, 0, 0};
    for (int l = 0; l < 4; ++l) {
        double angle = 2.0 * M_PI * l / 4.0;
        Vec2 obj_ref = Vec2{std::cos(angle), std::sin(angle)} * 2.0;
        Vec2 goal_ref = Vec2{std::cos(angle), std::sin(angle)} * 3.0;
        CHECK(norm(state.objects[l].position - obj_ref) <=
              sc.placement.object_perturbation_radius + 1e-12);
        CHECK(norm(state.objects[l].goal - goal_ref) < 1e-12);
        CHECK(!state.objects[l].completed);
        classes[static_cast<int>(state.objects[l].weight_class)]++;
    }
    CHECK(classes[0] == 2);
    CHECK(classes[1] == 1);
    CHECK(classes[2] == 1);
}

TEST_CASE("zero perturbation pins robots to reference positions") {
    ScenarioConfig sc = basic_scenario(3, 2, 1, 1);
    sc.placement.robot_perturbation_radius = 0.0;
    WorldState state = world_reset(sc, 9);
    for (int i = 0; i < 3; ++i) {
        double angle = 2.0 * M_PI * i / 3.0;
        CHECK(state.robots[i].position.x == doctest::Approx(std::cos(angle)).epsilon(1e-12));
        CHECK(state.robots[i].position.y == doctest::Approx(std::sin(angle)).epsilon(1e-12));
    }
}

TEST_CASE("reset is bit-deterministic and seed-sensitive") {
    ScenarioConfig sc = basic_scenario(3, 2, 1, 1);
    WorldState a = world_reset(sc, 123);
    WorldState b = world_reset(sc, 123);
    for (int i = 0; i < 3; ++i) {
        CHECK(a.robots[i].position == b.robots[i].position);
        CHECK(a.robots[i].heading == b.robots[i].heading);
    }
    for (int l = 0; l < 4; ++l) {
        CHECK(a.objects[l].position == b.objects[l].position);
        CHECK(a.objects[l].weight_class == b.objects[l].weight_class);
    }
    WorldState c = world_reset(sc, 124);
    bool differs = false;
    for (int i = 0; i < 3; ++i)
        if (!(a.robots[i].position == c.robots[i].position)) differs = true;
    CHECK(differs);
}

TEST_CASE("stepping is bit-deterministic under a fixed command script") {
    ScenarioConfig sc = basic_scenario(3, 2, 1, 1);
    auto run = [&]() {
        WorldState state = world_reset(sc, 77);
        Rng script(9);
        for (int t = 0; t < 50; ++t) {
            std::vector<Command> cmds;
            for (int i = 0; i < 3; ++i)
                cmds.push_back(Command{script.uniform_int(3) - 1, script.uniform_int(3) - 1});
            world_step(state, sc, cmds);
        }
        return state;
    };
    WorldState a = run();
    WorldState b = run();
    for (int i = 0; i < 3; ++i) {
        CHECK(a.robots[i].position == b.robots[i].position);
        CHECK(a.robots[i].heading == b.robots[i].heading);
        CHECK(a.robots[i].linear_velocity == b.robots[i].linear_velocity);
    }
    for (int l = 0; l < 4; ++l) {
        CHECK(a.objects[l].position == b.objects[l].position);
        CHECK(a.objects[l].velocity == b.objects[l].velocity);
    }
}

TEST_CASE("object with no contacts decelerates monotonically to rest") {
    ScenarioConfig sc = basic_scenario(1, 1, 0, 0);
    WorldState state;
    state.rng = Rng(0);
    RobotBody r;
    r.position = Vec2{30.0, 30.0};
    state.robots.push_back(r);
    TransportObject o;
    o.position = Vec2{0.0, 0.0};
    o.goal = Vec2{40.0, 40.0};
    o.velocity = Vec2{0.2, 0.1};
    o.mass = sc.physics.mass_light;
    state.objects.push_back(o);

    double prev = norm(state.objects[0].velocity);
    for (int t = 0; t < 30; ++t) {
        world_step(state, sc, {Command{0, 0}});
        double cur = norm(state.objects[0].velocity);
        CHECK(cur <= prev + 1e-12);
        prev = cur;
    }
    CHECK(prev == 0.0);
}

TEST_CASE("object rewards follow the velocity-toward-goal projection") {
    ScenarioConfig sc = basic_scenario(1, 2, 0, 0);
    WorldState state;
    state.rng = Rng(0);
    RobotBody r;
    r.position = Vec2{20.0, 20.0};
    state.robots.push_back(r);

    TransportObject a;
    a.position = Vec2{0.0, 0.0};
    a.goal = Vec2{1.0, 0.0};
    a.velocity = Vec2{0.1, 0.0};
    state.objects.push_back(a);
    TransportObject b;
    b.id = 1;
    b.position = Vec2{5.0, 5.0};
    b.goal = Vec2{6.0, 5.0};
    b.velocity = Vec2{0.0, 0.2};
    state.objects.push_back(b);

    CHECK(object_reward(state, sc, 0) == doctest::Approx(0.1));
    CHECK(object_reward(state, sc, 1) == doctest::Approx(0.0));

    state.objects[0].velocity = Vec2{-0.1, 0.0};
    state.objects[0].goal = Vec2{2.0, 0.0};
    CHECK(object_reward(state, sc, 0) == doctest::Approx(-0.1));

    // Inside the goal ball the contribution is zeroed.
    state.objects[0].position = Vec2{1.95, 0.0};
    state.objects[0].velocity = Vec2{0.1, 0.0};
    CHECK(object_reward(state, sc, 0) == 0.0);
    // Exactly at the goal: singularity guard.
    state.objects[0].position = state.objects[0].goal;
    CHECK(object_reward(state, sc, 0) == 0.0);

    state.objects[0].position = Vec2{0.0, 0.0};
    state.objects[0].velocity = Vec2{0.1, 0.0};
    CHECK(team_reward(state, sc) == doctest::Approx(0.1));
}

TEST_CASE("robot low reward combines target, collision, and approach terms") {
    ScenarioConfig sc = basic_scenario(1, 2, 0, 0);
    WorldState state;
    state.rng = Rng(0);
    RobotBody r;
    r.position = Vec2{0.0, 0.0};
    r.heading = 0.0;
    r.linear_velocity = Vec2{0.2, 0.0};
    state.robots.push_back(r);

    TransportObject target;
    target.position = Vec2{1.0, 0.0};
    target.goal = Vec2{2.0, 0.0};
    target.velocity = Vec2{0.1, 0.0};
    state.objects.push_back(target);
    TransportObject other;
    other.id = 1;
    other.position = Vec2{0.0, 3.0};
    other.goal = Vec2{0.0, 4.0};
    other.velocity = Vec2{0.0, 0.05};
    state.objects.push_back(other);

    // Approaching the target: r_target=0.1, min(0, 0.05)=0, bonus 1.
    CHECK(robot_low_reward(state, sc, 0, 0) == doctest::Approx(1.1));

    // Stationary but within E of the target still earns the bonus.
    state.robots[0].linear_velocity = Vec2{0.0, 0.0};
    state.robots[0].position = Vec2{0.8, 0.0};
    state.objects[0].velocity = Vec2{0.0, 0.0};
    state.objects[1].velocity = Vec2{0.0, 0.0};
    CHECK(robot_low_reward(state, sc, 0, 0) == doctest::Approx(1.0));

    // Receding and far: negative nearest-object reward passes through.
    state.robots[0].position = Vec2{0.0, 0.0};
    state.robots[0].linear_velocity = Vec2{-0.2, 0.0};
    state.objects[1].velocity = Vec2{0.0, -0.2};
    CHECK(robot_low_reward(state, sc, 0, 0) == doctest::Approx(-0.2));
}

TEST_CASE("completion predicate is memoryless") {
    ScenarioConfig sc = basic_scenario(1, 1, 0, 0);
    WorldState state;
    state.rng = Rng(0);
    RobotBody r;
    r.position = Vec2{-0.31, 0.0};
    r.heading = 0.0;
    state.robots.push_back(r);
    TransportObject o;
    o.position = Vec2{0.05, 0.0};
    o.goal = Vec2{0.0, 0.0};
    state.objects.push_back(o);

    world_step(state, sc, {Command{0, 0}});
    CHECK(state.objects[0].completed);

    // Push it out of the goal ball; the flag must clear again.
    int guard = 0;
    while (state.objects[0].completed && guard++ < 200)
        world_step(state, sc, {Command{1, 0}});
    CHECK(!state.objects[0].completed);
    CHECK(norm(state.objects[0].position - state.objects[0].goal) > sc.goal_radius);
}

TEST_CASE("reward magnitude never exceeds object speed") {
    ScenarioConfig sc = basic_scenario(2, 2, 1, 0);
    WorldState state = world_reset(sc, 3);
    Rng script(4);
    for (int t = 0; t < 40; ++t) {
        std::vector<Command> cmds;
        for (int i = 0; i < 2; ++i)
            cmds.push_back(Command{script.uniform_int(3) - 1, script.uniform_int(3) - 1});
        world_step(state, sc, cmds);
        for (int l = 0; l < 3; ++l)
            CHECK(std::abs(object_reward(state, sc, l)) <=
                  norm(state.objects[l].velocity) + 1e-12);
    }
}

TEST_CASE("robots do not sink into resting objects") {
    ScenarioConfig sc = basic_scenario(1, 0, 0, 1);
    WorldState state = push_setup(sc, 1, WeightClass::Heavy);
    for (int t = 0; t < 100; ++t) world_step(state, sc, {Command{1, 0}});
    double gap = norm(state.robots[0].position - state.objects[0].position);
    double touch = sc.physics.body_radius + sc.physics.disc_radius;
    // Penetration stays within the force-cap overlap budget.
    CHECK(gap >= touch - sc.physics.f_max / sc.physics.contact_stiffness - 1e-9);
}
