#pragma once

#include <stdexcept>
#include <string>

namespace tihdp {

enum class WeightClass { Light = 0, Medium = 1, Heavy = 2 };

inline const char* weight_class_name(WeightClass w) {
    switch (w) {
        case WeightClass::Light: return "light";
        case WeightClass::Medium: return "medium";
        default: return "heavy";
    }
}

struct PhysicsParams {
    double v_max = 0.26;             // m/s, commanded linear speed
    double omega_max = 1.82;         // rad/s, commanded turn rate
    double f_max = 5.0;              // N, per-robot contact force cap
    double mu_static = 0.3;
    double mu_kinetic = 0.3;
    double gravity = 9.81;           // m/s^2
    double dt_control = 0.1;         // s, one control step
    double dt_physics = 0.01;        // s, one integration substep
    double approach_distance = 0.3;  // m, "close enough" radius E in the lo reward
    double body_radius = 0.15;       // m, robot disc
    double disc_radius = 0.15;       // m, object disc
    double contact_stiffness = 500.0;  // N/m penalty spring
    double mass_light = 1.0;
    double mass_medium = 2.5;
    double mass_heavy = 100.0;

    int substeps() const {
        return static_cast<int>(dt_control / dt_physics + 0.5);
    }
    double mass_for(WeightClass w) const {
        switch (w) {
            case WeightClass::Light: return mass_light;
            case WeightClass::Medium: return mass_medium;
            default: return mass_heavy;
        }
    }
};

struct PlacementParams {
    double robot_circle_radius = 1.0;
    double object_circle_radius = 2.0;
    double goal_circle_radius = 3.0;
    double robot_perturbation_radius = 0.5;
    double object_perturbation_radius = 0.3;
};

struct ScenarioConfig {
    int robots = 3;
    int light = 2;
    int medium = 1;
    int heavy = 1;
    double goal_radius = 0.1;  // D
    int episode_length = 400;  // control steps
    PlacementParams placement;
    PhysicsParams physics;

    int objects() const { return light + medium + heavy; }
    int transportable() const { return light + medium; }

    void validate() const {
        if (robots < 1) throw std::invalid_argument("scenario: robots must be >= 1");
        if (objects() < 1) throw std::invalid_argument("scenario: objects must be >= 1");
        if (light < 0 || medium < 0 || heavy < 0)
            throw std::invalid_argument("scenario: class counts must be non-negative");
        if (goal_radius <= 0.0) throw std::invalid_argument("scenario: goal_radius must be > 0");
        if (episode_length < 1)
            throw std::invalid_argument("scenario: episode_length must be >= 1");
    }
};

}  // namespace tihdp
