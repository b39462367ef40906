// Command-line entry point: train / eval / rollout / plot.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dasmr/env/dasmr_env.hpp"
#include "dasmr/eval/runner.hpp"
#include "dasmr/io/config.hpp"
#include "dasmr/io/svg_plot.hpp"
#include "dasmr/io/trace.hpp"
#include "dasmr/train/driver.hpp"

namespace fs = std::filesystem;
using dasmr::agent::SacCrossQAgent;
using dasmr::core::RngStream;
using dasmr::env::DasmrEnv;
using dasmr::io::RunConfig;
using dasmr::train::LogRecord;
using dasmr::train::TrainDriver;

namespace {

std::string fmt_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string log_line(const LogRecord& r) {
    std::string s = "{\"env_step\":" + std::to_string(r.env_step);
    s += ",\"episode\":" + std::to_string(r.episode);
    s += ",\"return\":" + fmt_g(r.episode_return);
    s += ",\"length\":" + std::to_string(r.episode_length);
    s += ",\"rolling_sr\":" + fmt_g(r.rolling_sr_percent);
    s += ",\"critic_loss\":" + fmt_g(r.critic_loss);
    s += ",\"actor_loss\":" + fmt_g(r.actor_loss);
    s += ",\"alpha_loss\":" + fmt_g(r.alpha_loss);
    s += ",\"alpha\":" + fmt_g(r.alpha);
    s += "}";
    return s;
}

void atomic_write(const fs::path& path, const std::function<void(std::ostream&)>& writer) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary);
        if (!f) throw std::runtime_error("cannot open for writing: " + tmp.string());
        writer(f);
        if (!f) throw std::runtime_error("failed writing: " + tmp.string());
    }
    fs::rename(tmp, path);
}

RunConfig config_from_checkpoint(const std::string& path, dasmr::io::CheckpointReader& reader) {
    (void)path;
    return dasmr::io::parse_config_string(reader.text("config"));
}

SacCrossQAgent<float> make_agent(const RunConfig& cfg) {
    return SacCrossQAgent<float>(DasmrEnv::obs_dim, DasmrEnv::action_dim, cfg.agent,
                                 RngStream::substream(cfg.seed, "init"),
                                 RngStream::substream(cfg.seed, "agent"));
}

dasmr::io::TraceMeta trace_meta(const RunConfig& cfg, double gx, double gy) {
    dasmr::io::TraceMeta m;
    m.goal_x = gx;
    m.goal_y = gy;
    m.obstacle_x = cfg.world.obstacle_x;
    m.obstacle_y = cfg.world.obstacle_y;
    m.obstacle_radius = cfg.world.obstacle_radius;
    m.workspace_half = cfg.world.workspace_half;
    return m;
}

int cmd_train(const std::string& config_path, const std::string& resume_path, bool has_seed,
              std::uint64_t seed, bool has_steps, long total_steps, const std::string& out_dir) {
    RunConfig cfg;
    if (!resume_path.empty()) {
        std::ifstream f(resume_path, std::ios::binary);
        if (!f) throw std::runtime_error("cannot open checkpoint: " + resume_path);
        dasmr::io::CheckpointReader reader(f);
        cfg = config_from_checkpoint(resume_path, reader);
    } else {
        cfg = dasmr::io::parse_config_file(config_path);
    }
    if (has_seed) cfg.seed = seed;
    if (has_steps) cfg.total_steps = total_steps;
    cfg.validate();

    fs::create_directories(out_dir);
    dasmr::io::write_config_file((fs::path(out_dir) / "config.ini").string(), cfg);

    std::ofstream log_file(fs::path(out_dir) / "train_log.ndjson",
                           resume_path.empty() ? std::ios::trunc : std::ios::app);
    if (!log_file) throw std::runtime_error("cannot open train log in " + out_dir);

    dasmr::train::DriverOptions opt;
    opt.agent = cfg.agent;
    opt.her = cfg.her;
    opt.seed = cfg.seed;
    opt.total_steps = cfg.total_steps;
    opt.log_every_episodes = cfg.log_every_episodes;
    opt.config_text = dasmr::io::serialize_config(cfg);
    opt.log_sink = [&log_file](const LogRecord& r) { log_file << log_line(r) << '\n'; };

    DasmrEnv env(cfg.world, cfg.robot, RngStream::substream(cfg.seed, "env"));
    TrainDriver<DasmrEnv> driver(std::move(env), std::move(opt));

    if (!resume_path.empty()) {
        std::ifstream f(resume_path, std::ios::binary);
        driver.load_checkpoint(f);
        if (driver.done())
            throw std::runtime_error("checkpoint already at or past total_steps; nothing to do");
    }

    const long every = cfg.checkpoint_every_steps;
    driver.run([&](TrainDriver<DasmrEnv>& d) {
        if (every > 0 && d.env_steps() % every == 0 && !d.done()) {
            const fs::path p =
                fs::path(out_dir) / ("checkpoint_step" + std::to_string(d.env_steps()) + ".ckpt");
            atomic_write(p, [&](std::ostream& os) { d.save_checkpoint(os); });
        }
    });
    atomic_write(fs::path(out_dir) / "checkpoint_final.ckpt",
                 [&](std::ostream& os) { driver.save_checkpoint(os); });

    std::cout << "trained " << driver.env_steps() << " steps, " << driver.episodes_finished()
              << " episodes, rolling SR " << driver.rolling_sr_percent() << "%, run dir "
              << out_dir << "\n";
    return 0;
}

int cmd_eval(const std::string& ckpt_path, int episodes, const std::string& mode_str,
             const std::string& out_dir) {
    dasmr::eval::SeedMode mode;
    if (mode_str == "seen")
        mode = dasmr::eval::SeedMode::seen;
    else if (mode_str == "unseen")
        mode = dasmr::eval::SeedMode::unseen;
    else
        throw std::runtime_error("--seed-mode must be 'seen' or 'unseen'");

    std::ifstream f(ckpt_path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open checkpoint: " + ckpt_path);
    dasmr::io::CheckpointReader reader(f);
    RunConfig cfg = config_from_checkpoint(ckpt_path, reader);
    SacCrossQAgent<float> agent = make_agent(cfg);
    dasmr::train::load_agent_state(reader, agent);

    auto policy = [&agent](const std::vector<double>& obs) {
        return agent.act(obs, /*deterministic=*/true);
    };
    dasmr::eval::EvalOptions opt;
    opt.episodes = episodes;
    opt.seed_mode = mode;
    opt.run_seed = cfg.seed;
    const dasmr::eval::EvalOutcome outcome = dasmr::eval::run_eval(policy, cfg.world, cfg.robot, opt);

    fs::create_directories(out_dir);
    nlohmann::json report;
    const auto& m = outcome.metrics;
    report["seed_mode"] = m.seed_mode;
    report["episodes"] = m.episodes;
    report["successes"] = m.successes;
    report["sr_percent"] = m.sr_percent;
    report["ae"] = m.ae;
    report["sigma"] = m.sigma;
    report["ae_failures"] = m.ae_fail;
    report["sigma_failures"] = m.sigma_fail;
    report["spl"] = m.spl;
    report["per_episode"] = nlohmann::json::array();
    for (std::size_t i = 0; i < outcome.episodes.size(); ++i) {
        const auto& ep = outcome.episodes[i];
        char name[32];
        std::snprintf(name, sizeof(name), "trace_ep%03zu.csv", i);
        dasmr::io::write_trace_file((fs::path(out_dir) / name).string(),
                                    trace_meta(cfg, ep.goal_x, ep.goal_y), ep.trajectory);
        report["per_episode"].push_back({{"success", ep.success},
                                         {"final_error", ep.final_error},
                                         {"path_length", ep.path_length},
                                         {"shortest_path", ep.shortest_path},
                                         {"goal", {ep.goal_x, ep.goal_y}},
                                         {"trace", name}});
    }
    std::ofstream rf(fs::path(out_dir) / "report.json", std::ios::binary);
    rf << report.dump(2) << '\n';
    if (!rf) throw std::runtime_error("failed writing report.json in " + out_dir);

    std::printf("SR %.1f%% | AE %.3f (sigma %.3f) | AE-failures %.3f (sigma %.3f) | SPL %.3f | "
                "episodes %d | mode %s\n",
                m.sr_percent, m.ae, m.sigma, m.ae_fail, m.sigma_fail, m.spl, m.episodes,
                m.seed_mode.c_str());
    return 0;
}

int cmd_rollout(const std::string& ckpt_path, double gx, double gy,
                const std::string& trace_path) {
    std::ifstream f(ckpt_path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open checkpoint: " + ckpt_path);
    dasmr::io::CheckpointReader reader(f);
    RunConfig cfg = config_from_checkpoint(ckpt_path, reader);
    if (!dasmr::env::in_workspace(gx, gy, cfg.world))
        throw std::runtime_error("goal outside workspace");
    SacCrossQAgent<float> agent = make_agent(cfg);
    dasmr::train::load_agent_state(reader, agent);

    DasmrEnv env(cfg.world, cfg.robot, RngStream::substream(cfg.seed, "rollout"));
    auto policy = [&agent](const std::vector<double>& obs) {
        return agent.act(obs, /*deterministic=*/true);
    };
    const double goal[2] = {gx, gy};
    const dasmr::eval::EpisodeResult ep = dasmr::eval::run_episode(env, policy, goal);
    dasmr::io::write_trace_file(trace_path, trace_meta(cfg, gx, gy), ep.trajectory);
    std::printf("success=%s final_error=%.6f path_length=%.6f trace=%s\n",
                ep.success ? "true" : "false", ep.final_error, ep.path_length,
                trace_path.c_str());
    return 0;
}

int cmd_plot(const std::string& trace_path, const std::string& out_path) {
    const auto [meta, rows] = dasmr::io::read_trace_file(trace_path);
    dasmr::io::write_svg_file(out_path, meta, rows);
    std::cout << "wrote " << out_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"double-Ackermann steering robot RL workbench"};
    app.require_subcommand(1);

    auto* t = app.add_subcommand("train", "train a policy");
    std::string t_config, t_resume, t_out = "run";
    std::uint64_t t_seed = 0;
    long t_steps = 0;
    auto* t_config_opt = t->add_option("--config", t_config, "run config file");
    auto* t_resume_opt = t->add_option("--resume", t_resume, "checkpoint to resume from");
    auto* t_seed_opt = t->add_option("--seed", t_seed, "override the run seed");
    auto* t_steps_opt = t->add_option("--total-steps", t_steps, "override total env steps");
    t->add_option("--out", t_out, "output directory (default: run)");

    auto* e = app.add_subcommand("eval", "evaluate a checkpoint");
    std::string e_ckpt, e_mode = "seen", e_out = "eval_out";
    int e_episodes = 100;
    e->add_option("--checkpoint", e_ckpt, "checkpoint file")->required();
    e->add_option("--episodes", e_episodes, "number of episodes (default: 100)");
    e->add_option("--seed-mode", e_mode, "seen|unseen (default: seen)");
    e->add_option("--out", e_out, "output directory (default: eval_out)");

    auto* r = app.add_subcommand("rollout", "run one episode toward a goal");
    std::string r_ckpt, r_trace = "rollout_trace.csv";
    std::vector<double> r_goal;
    r->add_option("--checkpoint", r_ckpt, "checkpoint file")->required();
    r->add_option("--goal", r_goal, "goal position x y")->expected(2)->required();
    r->add_option("--trace", r_trace, "trace output file");

    auto* p = app.add_subcommand("plot", "render a trace as SVG");
    std::string p_trace, p_out = "trace.svg";
    p->add_option("--trace", p_trace, "trace file")->required();
    p->add_option("--out", p_out, "SVG output file");

    CLI11_PARSE(app, argc, argv);

    try {
        if (t->parsed()) {
            if (t_config_opt->count() == 0 && t_resume_opt->count() == 0)
                throw std::runtime_error("train needs --config or --resume");
            if (t_config_opt->count() > 0 && t_resume_opt->count() > 0)
                throw std::runtime_error("--config and --resume are mutually exclusive");
            return cmd_train(t_config, t_resume, t_seed_opt->count() > 0, t_seed,
                             t_steps_opt->count() > 0, t_steps, t_out);
        }
        if (e->parsed()) return cmd_eval(e_ckpt, e_episodes, e_mode, e_out);
        if (r->parsed()) return cmd_rollout(r_ckpt, r_goal[0], r_goal[1], r_trace);
        if (p->parsed()) return cmd_plot(p_trace, p_out);
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    }
    return 1;
}
