#include "tihdp/trajlog.hpp"

#include <stdexcept>

namespace tihdp {

void TrajectoryWriter::open(const std::string& path, const std::string& layout_tag,
                            const std::string& variant, std::uint64_t seed,
                            const ScenarioConfig& scenario, const WorldState& initial) {
    path_ = path;
    step_ = 0;
    os_.open(path, std::ios::trunc);
    if (!os_) throw std::runtime_error("trajectory log: cannot open for write: " + path);

    nlohmann::ordered_json h;
    h["schema"] = kTrajSchema;
    h["layout"] = layout_tag;
    h["variant"] = variant;
    h["seed"] = seed;
    h["scenario"] = {{"robots", scenario.robots},
                     {"light", scenario.light},
                     {"medium", scenario.medium},
                     {"heavy", scenario.heavy},
                     {"goal_radius", scenario.goal_radius},
                     {"episode_length", scenario.episode_length}};
    nlohmann::ordered_json objs = nlohmann::ordered_json::array();
    for (const auto& o : initial.objects)
        objs.push_back({{"class", weight_class_name(o.weight_class)}, {"goal", {o.goal.x, o.goal.y}}});
    h["objects"] = objs;
    os_ << h.dump() << "\n";
}

void TrajectoryWriter::write_step(const EnvStepRecord& rec, const WorldState& world_after) {
    nlohmann::ordered_json line;
    line["t"] = step_++;
    nlohmann::ordered_json robots = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < world_after.robots.size(); ++i) {
        const RobotBody& b = world_after.robots[i];
        const RobotStepRecord& rr = rec.robots[i];
        nlohmann::ordered_json r;
        r["p"] = {b.position.x, b.position.y};
        r["h"] = b.heading;
        r["v"] = {b.linear_velocity.x, b.linear_velocity.y};
        r["w"] = b.angular_velocity;
        r["cmd"] = {rr.move_index - 1, rr.turn_index - 1};
        r["target"] = rr.target;
        r["alpha"] = rr.alpha;
        r["beta"] = rr.beta;
        r["phi"] = rr.priorities;
        robots.push_back(std::move(r));
    }
    line["robots"] = robots;
    nlohmann::ordered_json objects = nlohmann::ordered_json::array();
    for (const auto& o : world_after.objects) {
        objects.push_back({{"p", {o.position.x, o.position.y}},
                           {"v", {o.velocity.x, o.velocity.y}},
                           {"done", o.completed}});
    }
    line["objects"] = objects;
    line["reward"] = {{"team", rec.team_reward}, {"lo", [&] {
                          nlohmann::ordered_json lo = nlohmann::ordered_json::array();
                          for (const auto& rr : rec.robots) lo.push_back(rr.lo_valid ? rr.lo_reward : 0.0);
                          return lo;
                      }()}};
    os_ << line.dump() << "\n";
    if (!os_) throw std::runtime_error("trajectory log: write failed: " + path_);
}

void TrajectoryWriter::close() {
    if (os_.is_open()) os_.close();
}

namespace {

Vec2 vec_from(const nlohmann::json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

}  // namespace

Trajectory read_trajectory(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("trajectory log: cannot open: " + path);

    Trajectory traj;
    std::string line;
    if (!std::getline(is, line) || line.empty()) {
        traj.truncated = true;
        traj.warning = "empty file, no header";
        return traj;
    }
    try {
        nlohmann::json h = nlohmann::json::parse(line);
        traj.schema = h.at("schema").get<std::string>();
        if (traj.schema != kTrajSchema)
            throw std::runtime_error("trajectory log: unknown schema " + traj.schema);
        traj.layout_tag = h.at("layout").get<std::string>();
        traj.variant = h.at("variant").get<std::string>();
        traj.seed = h.at("seed").get<std::uint64_t>();
        traj.scenario = h.at("scenario");
        for (const auto& o : h.at("objects")) {
            traj.classes.push_back(o.at("class").get<std::string>());
            traj.goals.push_back(vec_from(o.at("goal")));
        }
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("trajectory log: bad header: ") + e.what());
    }

    long lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        TrajStep step;
        try {
            nlohmann::json j = nlohmann::json::parse(line);
            step.t = j.at("t").get<long>();
            for (const auto& r : j.at("robots")) {
                TrajRobotStep rs;
                rs.position = vec_from(r.at("p"));
                rs.heading = r.at("h").get<double>();
                rs.velocity = vec_from(r.at("v"));
                rs.angular_velocity = r.at("w").get<double>();
                rs.move = r.at("cmd").at(0).get<int>();
                rs.turn = r.at("cmd").at(1).get<int>();
                rs.target = r.at("target").get<int>();
                rs.alpha = r.at("alpha").get<int>();
                rs.beta = r.at("beta").get<int>();
                rs.priorities = r.at("phi").get<std::vector<double>>();
                step.robots.push_back(std::move(rs));
            }
            for (const auto& o : j.at("objects")) {
                TrajObjectStep os;
                os.position = vec_from(o.at("p"));
                os.velocity = vec_from(o.at("v"));
                os.completed = o.at("done").get<bool>();
                step.objects.push_back(os);
            }
            step.team_reward = j.at("reward").at("team").get<double>();
            step.lo_rewards = j.at("reward").at("lo").get<std::vector<double>>();
        } catch (const nlohmann::json::exception& e) {
            traj.truncated = true;
            traj.warning = "malformed record at line " + std::to_string(lineno) + ": " + e.what() +
                           "; rendering available prefix";
            break;
        }
        traj.steps.push_back(std::move(step));
    }
    return traj;
}

LogMetrics metrics_from_logs(const std::vector<std::string>& paths) {
    LogMetrics m;
    double frac_sum = 0.0;
    int all_count = 0;
    for (const std::string& p : paths) {
        Trajectory traj = read_trajectory(p);
        if (traj.steps.empty()) continue;
        const TrajStep& last = traj.steps.back();
        int transportable = 0, delivered = 0;
        for (std::size_t l = 0; l < traj.classes.size(); ++l) {
            if (traj.classes[l] == "heavy") continue;
            ++transportable;
            if (l < last.objects.size() && last.objects[l].completed) ++delivered;
        }
        double frac = transportable > 0 ? static_cast<double>(delivered) / transportable : 1.0;
        frac_sum += frac;
        if (delivered == transportable) ++all_count;
        ++m.episodes;
    }
    if (m.episodes > 0) {
        m.cor = frac_sum / m.episodes;
        m.tocr = static_cast<double>(all_count) / m.episodes;
    }
    return m;
}

}  // namespace tihdp
