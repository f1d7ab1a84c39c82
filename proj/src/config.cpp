#include "tihdp/config.hpp"

#include <fstream>
#include <sstream>

namespace tihdp {

namespace {

class Reader {
public:
    explicit Reader(const nlohmann::json& doc) : doc_(doc) {}

    template <typename T>
    void require(const char* path, T& out) {
        const nlohmann::json* node = find(path);
        if (!node) {
            problems_ << "missing key: " << path << "\n";
            return;
        }
        read(path, *node, out);
    }

    template <typename T>
    void optional(const char* path, T& out) {
        const nlohmann::json* node = find(path);
        if (node) read(path, *node, out);
    }

    void finish() const {
        std::string p = problems_.str();
        if (!p.empty()) throw ConfigError("invalid config:\n" + p);
    }

private:
    const nlohmann::json* find(const char* path) const {
        const nlohmann::json* cur = &doc_;
        std::string part;
        std::istringstream ss(path);
        while (std::getline(ss, part, '.')) {
            if (!cur->is_object() || !cur->contains(part)) return nullptr;
            cur = &(*cur)[part];
        }
        return cur;
    }

    template <typename T>
    void read(const char* path, const nlohmann::json& node, T& out) {
        try {
            out = node.get<T>();
        } catch (const nlohmann::json::exception&) {
            problems_ << "wrong type for key: " << path << "\n";
        }
    }

    const nlohmann::json& doc_;
    std::ostringstream problems_;
};

}  // namespace

TrainConfig parse_config(const nlohmann::json& doc) {
    TrainConfig cfg;
    Reader r(doc);

    std::string variant;
    r.require("variant", variant);
    r.require("scenario.robots", cfg.run.scenario.robots);
    r.require("scenario.light", cfg.run.scenario.light);
    r.require("scenario.medium", cfg.run.scenario.medium);
    r.require("scenario.heavy", cfg.run.scenario.heavy);
    r.require("scenario.goal_radius", cfg.run.scenario.goal_radius);
    r.require("scenario.episode_length", cfg.run.scenario.episode_length);
    r.require("observation.nearby_robots", cfg.run.obs.nearby_robots);
    r.require("observation.nearby_objects", cfg.run.obs.nearby_objects);
    r.require("priority.k_phi", cfg.run.k_phi);
    r.require("network.hidden", cfg.layout.hidden);
    r.require("network.lstm_hidden", cfg.layout.lstm_hidden);
    r.require("ppo.gamma", cfg.ppo.gamma);
    r.require("ppo.gae_lambda", cfg.ppo.gae_lambda);
    r.require("ppo.clip", cfg.ppo.clip);
    r.require("ppo.learning_rate", cfg.ppo.learning_rate);
    r.require("ppo.entropy_coef", cfg.ppo.entropy_coef);
    r.require("ppo.value_coef", cfg.ppo.value_coef);
    r.require("ppo.epochs", cfg.ppo.epochs);
    r.require("ppo.minibatches", cfg.ppo.minibatches);
    r.require("ppo.max_grad_norm", cfg.ppo.max_grad_norm);
    r.require("ppo.bptt_chunk", cfg.ppo.bptt_chunk);
    r.require("ppo.parallel_envs", cfg.ppo.parallel_envs);
    r.require("ppo.total_env_steps", cfg.ppo.total_env_steps);
    r.require("ppo.checkpoint_interval", cfg.ppo.checkpoint_interval);

    PhysicsParams& ph = cfg.run.scenario.physics;
    r.optional("physics.v_max", ph.v_max);
    r.optional("physics.omega_max", ph.omega_max);
    r.optional("physics.f_max", ph.f_max);
    r.optional("physics.mu_static", ph.mu_static);
    r.optional("physics.mu_kinetic", ph.mu_kinetic);
    r.optional("physics.gravity", ph.gravity);
    r.optional("physics.dt_control", ph.dt_control);
    r.optional("physics.dt_physics", ph.dt_physics);
    r.optional("physics.approach_distance", ph.approach_distance);
    r.optional("physics.body_radius", ph.body_radius);
    r.optional("physics.disc_radius", ph.disc_radius);
    r.optional("physics.contact_stiffness", ph.contact_stiffness);
    r.optional("physics.mass_light", ph.mass_light);
    r.optional("physics.mass_medium", ph.mass_medium);
    r.optional("physics.mass_heavy", ph.mass_heavy);

    PlacementParams& pl = cfg.run.scenario.placement;
    r.optional("placement.robot_circle_radius", pl.robot_circle_radius);
    r.optional("placement.object_circle_radius", pl.object_circle_radius);
    r.optional("placement.goal_circle_radius", pl.goal_circle_radius);
    r.optional("placement.robot_perturbation_radius", pl.robot_perturbation_radius);
    r.optional("placement.object_perturbation_radius", pl.object_perturbation_radius);

    r.finish();

    try {
        cfg.layout.variant = parse_variant(variant);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("invalid config:\n") + e.what() + "\n");
    }
    cfg.layout.obs = cfg.run.obs;
    cfg.layout.robots = cfg.run.scenario.robots;
    cfg.layout.objects = cfg.run.scenario.objects();
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("invalid config:\n") + e.what() + "\n");
    }
    return cfg;
}

TrainConfig load_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file: " + path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(is);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config parse error in " + path + ": " + e.what());
    }
    return parse_config(doc);
}

nlohmann::ordered_json resolved_config(const TrainConfig& cfg) {
    nlohmann::ordered_json j;
    j["variant"] = variant_name(cfg.layout.variant);
    j["scenario"] = {{"robots", cfg.run.scenario.robots},
                     {"light", cfg.run.scenario.light},
                     {"medium", cfg.run.scenario.medium},
                     {"heavy", cfg.run.scenario.heavy},
                     {"goal_radius", cfg.run.scenario.goal_radius},
                     {"episode_length", cfg.run.scenario.episode_length}};
    j["observation"] = {{"nearby_robots", cfg.run.obs.nearby_robots},
                        {"nearby_objects", cfg.run.obs.nearby_objects}};
    j["priority"] = {{"k_phi", cfg.run.k_phi}};
    j["network"] = {{"hidden", cfg.layout.hidden}, {"lstm_hidden", cfg.layout.lstm_hidden}};
    const PpoConfig& p = cfg.ppo;
    j["ppo"] = {{"gamma", p.gamma},
                {"gae_lambda", p.gae_lambda},
                {"clip", p.clip},
                {"learning_rate", p.learning_rate},
                {"entropy_coef", p.entropy_coef},
                {"value_coef", p.value_coef},
                {"epochs", p.epochs},
                {"minibatches", p.minibatches},
                {"max_grad_norm", p.max_grad_norm},
                {"bptt_chunk", p.bptt_chunk},
                {"parallel_envs", p.parallel_envs},
                {"total_env_steps", p.total_env_steps},
                {"checkpoint_interval", p.checkpoint_interval}};
    const PhysicsParams& ph = cfg.run.scenario.physics;
    j["physics"] = {{"v_max", ph.v_max},
                    {"omega_max", ph.omega_max},
                    {"f_max", ph.f_max},
                    {"mu_static", ph.mu_static},
                    {"mu_kinetic", ph.mu_kinetic},
                    {"gravity", ph.gravity},
                    {"dt_control", ph.dt_control},
                    {"dt_physics", ph.dt_physics},
                    {"approach_distance", ph.approach_distance},
                    {"body_radius", ph.body_radius},
                    {"disc_radius", ph.disc_radius},
                    {"contact_stiffness", ph.contact_stiffness},
                    {"mass_light", ph.mass_light},
                    {"mass_medium", ph.mass_medium},
                    {"mass_heavy", ph.mass_heavy}};
    const PlacementParams& pl = cfg.run.scenario.placement;
    j["placement"] = {{"robot_circle_radius", pl.robot_circle_radius},
                      {"object_circle_radius", pl.object_circle_radius},
                      {"goal_circle_radius", pl.goal_circle_radius},
                      {"robot_perturbation_radius", pl.robot_perturbation_radius},
                      {"object_perturbation_radius", pl.object_perturbation_radius}};
    return j;
}

}  // namespace tihdp
