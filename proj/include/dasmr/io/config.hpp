#pragma once

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <cstdint>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dasmr/agent/sac_crossq.hpp"
#include "dasmr/env/dasmr_env.hpp"
#include "dasmr/kinematics.hpp"
#include "dasmr/replay/her_buffer.hpp"

namespace dasmr::io {

/// Everything a run needs, with defaults reproducing the reference training
/// setup. Serialized as a sectioned key = value file; unknown keys are
/// rejected with line diagnostics.
struct RunConfig {
    env::WorldConfig world;
    kinematics::RobotParams robot;
    replay::HerConfig her;
    agent::AgentConfig agent;
    std::uint64_t seed = 9527;
    long total_steps = 300'000;
    int log_every_episodes = 10;
    long checkpoint_every_steps = 0;  ///< 0 = final checkpoint only

    void validate() const {
        world.validate();
        robot.validate();
        her.validate();
        agent.validate();
        if (total_steps < 1) throw std::invalid_argument("RunConfig: total_steps must be >= 1");
        if (log_every_episodes < 1)
            throw std::invalid_argument("RunConfig: log_every_episodes must be >= 1");
        if (checkpoint_every_steps < 0)
            throw std::invalid_argument("RunConfig: checkpoint_every_steps must be >= 0");
    }
};

namespace detail {

struct ConfigField {
    std::string section;
    std::string key;
    std::function<std::string(const RunConfig&)> get;
    std::function<bool(RunConfig&, const std::string&)> set;  // false = parse failure
};

inline std::string num_str(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline bool parse_double(const std::string& s, double& out) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (errno != 0 || end != s.c_str() + s.size() || s.empty()) return false;
    out = v;
    return true;
}

inline bool parse_long(const std::string& s, long long& out) {
    errno = 0;
    char* end = nullptr;
    const long long v = std::strtoll(s.c_str(), &end, 10);
    if (errno != 0 || end != s.c_str() + s.size() || s.empty()) return false;
    out = v;
    return true;
}

inline bool parse_u64(const std::string& s, std::uint64_t& out) {
    if (s.empty() || s[0] == '-') return false;
    errno = 0;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
    if (errno != 0 || end != s.c_str() + s.size()) return false;
    out = v;
    return true;
}

inline bool parse_bool(const std::string& s, bool& out) {
    if (s == "true" || s == "1") {
        out = true;
        return true;
    }
    if (s == "false" || s == "0") {
        out = false;
        return true;
    }
    return false;
}

inline bool parse_int_list(const std::string& s, std::vector<int>& out) {
    std::vector<int> v;
    std::string item;
    std::istringstream is(s);
    while (std::getline(is, item, ',')) {
        long long x;
        if (!parse_long(item, x) || x < 1) return false;
        v.push_back(static_cast<int>(x));
    }
    if (v.empty()) return false;
    out = std::move(v);
    return true;
}

inline std::string int_list_str(const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ',';
        s += std::to_string(v[i]);
    }
    return s;
}

#define DASMR_CFG_DOUBLE(sec, name, expr)                                          \
    fields.push_back({sec, name,                                                   \
                      [](const RunConfig& c) { return num_str(c.expr); },          \
                      [](RunConfig& c, const std::string& s) {                     \
                          double v;                                                \
                          if (!parse_double(s, v)) return false;                   \
                          c.expr = v;                                              \
                          return true;                                             \
                      }})

#define DASMR_CFG_LONG(sec, name, expr, type)                                      \
    fields.push_back({sec, name,                                                   \
                      [](const RunConfig& c) { return std::to_string(c.expr); },   \
                      [](RunConfig& c, const std::string& s) {                     \
                          long long v;                                             \
                          if (!parse_long(s, v)) return false;                     \
                          c.expr = static_cast<type>(v);                           \
                          return true;                                             \
                      }})

#define DASMR_CFG_BOOL(sec, name, expr)                                            \
    fields.push_back({sec, name,                                                   \
                      [](const RunConfig& c) { return c.expr ? "true" : "false"; },\
                      [](RunConfig& c, const std::string& s) {                     \
                          bool v;                                                  \
                          if (!parse_bool(s, v)) return false;                     \
                          c.expr = v;                                              \
                          return true;                                             \
                      }})

inline const std::vector<ConfigField>& config_fields() {
    static const std::vector<ConfigField> fields = [] {
        std::vector<ConfigField> fields;
        DASMR_CFG_DOUBLE("world", "workspace_half", world.workspace_half);
        DASMR_CFG_DOUBLE("world", "obstacle_x", world.obstacle_x);
        DASMR_CFG_DOUBLE("world", "obstacle_y", world.obstacle_y);
        DASMR_CFG_DOUBLE("world", "obstacle_radius", world.obstacle_radius);
        DASMR_CFG_DOUBLE("world", "goal_x_min", world.goal_x_min);
        DASMR_CFG_DOUBLE("world", "goal_x_max", world.goal_x_max);
        DASMR_CFG_DOUBLE("world", "goal_y_min", world.goal_y_min);
        DASMR_CFG_DOUBLE("world", "goal_y_max", world.goal_y_max);
        DASMR_CFG_DOUBLE("world", "d_th", world.d_th);
        DASMR_CFG_DOUBLE("world", "dt", world.dt);
        DASMR_CFG_LONG("world", "max_steps", world.max_steps, int);
        DASMR_CFG_DOUBLE("world", "collision_margin", world.collision_margin);
        DASMR_CFG_DOUBLE("world", "footprint_length", world.footprint_length);
        DASMR_CFG_DOUBLE("world", "footprint_width", world.footprint_width);
        DASMR_CFG_BOOL("world", "dense_reward", world.dense_reward);
        DASMR_CFG_BOOL("world", "collision_terminates", world.collision_terminates);

        DASMR_CFG_DOUBLE("robot", "wheelbase_L", robot.wheelbase_L);
        DASMR_CFG_DOUBLE("robot", "track_W", robot.track_W);
        DASMR_CFG_DOUBLE("robot", "wheel_radius_r", robot.wheel_radius_r);
        DASMR_CFG_DOUBLE("robot", "v_max", robot.v_max);
        DASMR_CFG_DOUBLE("robot", "omega_max", robot.omega_max);
        DASMR_CFG_DOUBLE("robot", "phi_max", robot.phi_max);
        DASMR_CFG_DOUBLE("robot", "twist_time_constant", robot.twist_time_constant);

        DASMR_CFG_LONG("her", "capacity", her.capacity, std::size_t);
        DASMR_CFG_LONG("her", "n_sampled_goal", her.n_sampled_goal, int);
        DASMR_CFG_BOOL("her", "enabled", her.enabled);

        DASMR_CFG_DOUBLE("agent", "gamma", agent.gamma);
        DASMR_CFG_LONG("agent", "batch_size", agent.batch_size, int);
        DASMR_CFG_LONG("agent", "learning_starts", agent.learning_starts, long);
        DASMR_CFG_LONG("agent", "policy_delay", agent.policy_delay, int);
        DASMR_CFG_DOUBLE("agent", "entropy_target", agent.entropy_target);
        DASMR_CFG_DOUBLE("agent", "init_log_alpha", agent.init_log_alpha);
        DASMR_CFG_DOUBLE("agent", "lr", agent.lr);
        DASMR_CFG_DOUBLE("agent", "adam_beta1", agent.adam_beta1);
        DASMR_CFG_DOUBLE("agent", "adam_beta2", agent.adam_beta2);
        DASMR_CFG_DOUBLE("agent", "adam_eps", agent.adam_eps);
        fields.push_back({"agent", "actor_hidden",
                          [](const RunConfig& c) { return int_list_str(c.agent.actor_hidden); },
                          [](RunConfig& c, const std::string& s) {
                              return parse_int_list(s, c.agent.actor_hidden);
                          }});
        fields.push_back({"agent", "critic_hidden",
                          [](const RunConfig& c) { return int_list_str(c.agent.critic_hidden); },
                          [](RunConfig& c, const std::string& s) {
                              return parse_int_list(s, c.agent.critic_hidden);
                          }});
        DASMR_CFG_BOOL("agent", "batch_norm", agent.batch_norm);
        DASMR_CFG_BOOL("agent", "renorm", agent.renorm);
        DASMR_CFG_DOUBLE("agent", "bn_momentum", agent.bn_momentum);
        DASMR_CFG_LONG("agent", "renorm_warmup", agent.renorm_warmup, long);

        fields.push_back({"run", "seed",
                          [](const RunConfig& c) { return std::to_string(c.seed); },
                          [](RunConfig& c, const std::string& s) {
                              return parse_u64(s, c.seed);
                          }});
        DASMR_CFG_LONG("run", "total_steps", total_steps, long);
        DASMR_CFG_LONG("run", "log_every_episodes", log_every_episodes, int);
        DASMR_CFG_LONG("run", "checkpoint_every_steps", checkpoint_every_steps, long);
        return fields;
    }();
    return fields;
}

#undef DASMR_CFG_DOUBLE
#undef DASMR_CFG_LONG
#undef DASMR_CFG_BOOL

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace detail

/// Parses a sectioned key = value config. Every key is optional (defaults
/// apply); unknown sections or keys fail with the offending line number.
/// '#' and ';' start comments.
inline RunConfig parse_config(std::istream& is) {
    RunConfig cfg;
    const auto& fields = detail::config_fields();
    std::string line, section;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const std::size_t hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::runtime_error("config line " + std::to_string(line_no) +
                                         ": unterminated section header");
            section = detail::trim(line.substr(1, line.size() - 2));
            bool known = false;
            for (const auto& f : fields) known = known || f.section == section;
            if (!known)
                throw std::runtime_error("config line " + std::to_string(line_no) +
                                         ": unknown section [" + section + "]");
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config line " + std::to_string(line_no) +
                                     ": expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        const detail::ConfigField* match = nullptr;
        for (const auto& f : fields)
            if (f.section == section && f.key == key) match = &f;
        if (!match)
            throw std::runtime_error("config line " + std::to_string(line_no) +
                                     ": unknown key '" + key + "' in section [" + section + "]");
        if (!match->set(cfg, value))
            throw std::runtime_error("config line " + std::to_string(line_no) +
                                     ": bad value for key '" + key + "': " + value);
    }
    cfg.validate();
    return cfg;
}

inline RunConfig parse_config_string(const std::string& text) {
    std::istringstream is(text);
    return parse_config(is);
}

inline RunConfig parse_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open config file: " + path);
    return parse_config(f);
}

/// Emits every field grouped by section. parse(serialize(c)) == c.
inline std::string serialize_config(const RunConfig& cfg) {
    const auto& fields = detail::config_fields();
    std::string out, section;
    for (const auto& f : fields) {
        if (f.section != section) {
            if (!out.empty()) out += '\n';
            out += "[" + f.section + "]\n";
            section = f.section;
        }
        out += f.key + " = " + f.get(cfg) + "\n";
    }
    return out;
}

inline void write_config_file(const std::string& path, const RunConfig& cfg) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open config file for writing: " + path);
    f << serialize_config(cfg);
    if (!f) throw std::runtime_error("failed writing config file: " + path);
}

}  // namespace dasmr::io
