#include "usf/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "usf/cli/config_file.hpp"
#include "usf/cli/svg_plot.hpp"
#include "usf/core/error.hpp"
#include "usf/harness/goals.hpp"
#include "usf/harness/metrics.hpp"
#include "usf/harness/verification.hpp"

namespace usf::cli {

namespace fs = std::filesystem;

namespace {

/// Options shared by commands that build an ExperimentConfig.
struct ConfigOptions {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string seeds;
    std::string env;
    std::string agent;
    std::string structure;
    std::map<std::string, std::string> keys;
    std::map<std::string, CLI::Option*> key_options;

    void attach(CLI::App* app) {
        app->add_option("-c,--config", config_path, "config file ([section] / key = value)");
        app->add_option("--set", overrides, "override, e.g. --set hyperparameters.lr=1e-3 (repeatable)");
        app->add_option("--seeds", seeds, "seed list, e.g. 0..4 (falls back to $USF_LAB_SEED)");
        app->add_option("--env", env, "shorthand for experiment.env");
        app->add_option("--agent", agent, "shorthand for experiment.agent");
        app->add_option("--structure", structure, "shorthand for gridworld.structure");
        for (const ConfigKey& key : config_keys()) {
            key_options[key.dotted()] =
                app->add_option("--" + key.dotted(), keys[key.dotted()], key.help)->group("Configuration keys");
        }
    }

    harness::ExperimentConfig build() const {
        Entries entries;
        if (!config_path.empty()) {
            entries = read_entries(config_path);
        }
        auto push = [&entries](const std::string& dotted, const std::string& value) {
            if (!value.empty()) {
                entries.emplace_back(dotted, value);
            }
        };
        push("experiment.env", env);
        push("experiment.agent", agent);
        push("gridworld.structure", structure);
        for (const ConfigKey& key : config_keys()) {
            if (key_options.at(key.dotted())->count() > 0) {
                entries.emplace_back(key.dotted(), keys.at(key.dotted()));
            }
        }
        for (const std::string& o : overrides) {
            entries.push_back(parse_assignment(o));
        }
        push("experiment.seeds", seeds);
        const bool has_seeds = std::any_of(entries.begin(), entries.end(),
                                           [](const auto& e) { return e.first == "experiment.seeds"; });
        if (!has_seeds) {
            if (const char* env_seed = std::getenv("USF_LAB_SEED"); env_seed != nullptr && *env_seed != '\0') {
                entries.emplace_back("experiment.seeds", env_seed);
            }
        }
        return build_config(entries);
    }
};

std::string fixed(double v, int digits = 3) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(digits);
    os << v;
    return os.str();
}

double last_value(const std::vector<harness::EvalRecord>& records, const std::string& set, int stage) {
    double v = std::nan("");
    for (const auto& r : records) {
        if (r.eval_set == set && r.stage == stage) {
            v = r.done_rate;
        }
    }
    return v;
}

int eval_command(const harness::ExperimentConfig& config, const std::string& checkpoint, std::uint64_t seed,
                 const std::string& set, int episodes, std::ostream& out) {
    auto env = harness::make_env(config, derive_seed(seed, 5));
    const harness::GoalSets goals = harness::make_goal_sets(config, *env, seed);
    const std::vector<Eigen::VectorXd>* chosen = nullptr;
    if (set == "source") {
        chosen = &goals.source;
    } else if (set == "target") {
        chosen = &goals.target;
    } else if (set == "holdout") {
        chosen = &goals.holdout;
    } else {
        throw ConfigError("unknown goal set '" + set + "' (valid: source, target, holdout)");
    }
    if (chosen->empty()) {
        throw ConfigError("goal set '" + set + "' is empty for this config");
    }
    auto agent = agents::make_agent(config.agent, agents::env_spec(*env), derive_seed(seed, 1));
    agents::load_checkpoint(*agent, checkpoint);
    const harness::EvalResult r =
        harness::evaluate(*agent, *env, *chosen, episodes > 0 ? episodes : config.eval_episodes_per_goal);
    out << "goals=" << set << " episodes=" << r.episodes << " done_rate=" << fixed(r.done_rate)
        << " mean_steps=" << fixed(r.mean_steps, 2) << "\n";
    return 0;
}

int verify_command(std::uint64_t seed, std::ostream& out) {
    bool all = true;
    for (const harness::CheckResult& c : harness::run_verification_suite(seed)) {
        out << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
        all = all && c.passed;
    }
    return all ? 0 : 1;
}

} // namespace

std::vector<harness::SeedRun> train(const harness::ExperimentConfig& config, const std::string& dir,
                                    std::ostream& log) {
    fs::create_directories(dir);
    {
        std::ofstream cfg(fs::path(dir) / "config.cfg");
        cfg << serialize(config);
    }
    std::mutex log_mutex;
    const harness::StageHook hook = [&](std::uint64_t seed, int stage, const agents::Agent& agent,
                                        const replay::DualStore&) {
        const fs::path path =
            fs::path(dir) / ("checkpoint_stage" + std::to_string(stage) + "_seed" + std::to_string(seed) + ".bin");
        agents::save_checkpoint(agent, path.string());
        const std::lock_guard<std::mutex> lock(log_mutex);
        log << "seed " << seed << ": stage " << stage << " done, wrote " << path.filename().string() << "\n";
    };
    std::vector<harness::SeedRun> runs = harness::run_two_stage(config, hook);
    for (const harness::SeedRun& run : runs) {
        harness::save_metrics_csv((fs::path(dir) / ("metrics_seed" + std::to_string(run.seed) + ".csv")).string(),
                                  run.metrics.records);
    }
    const std::vector<harness::EvalRecord> all = harness::collect_records(runs);
    harness::save_metrics_csv((fs::path(dir) / "metrics.csv").string(), all);
    {
        std::ofstream agg(fs::path(dir) / "aggregate.csv");
        harness::write_aggregate_csv(agg, all);
    }
    for (const harness::SeedRun& run : runs) {
        const int last_stage = config.stage2_steps > 0 ? 2 : 1;
        log << "seed " << run.seed << ": final done_rate train " << fixed(last_value(run.metrics.records, "train", last_stage))
            << ", holdout " << fixed(last_value(run.metrics.records, "holdout", last_stage)) << "\n";
    }
    return runs;
}

void plot(const std::vector<std::string>& csv_paths, const std::vector<std::string>& metrics, int window,
          const std::string& dir) {
    if (window < 1) {
        throw ConfigError("window must be at least 1");
    }
    fs::create_directories(dir);
    std::vector<std::vector<harness::EvalRecord>> files;
    for (const std::string& p : csv_paths) {
        files.push_back(harness::load_metrics_csv(p));
    }
    for (const std::string& name : metrics) {
        const harness::Metric metric = harness::metric_from_string(name);
        PlotSpec spec;
        spec.title = name + " (window " + std::to_string(window) + ")";
        spec.y_label = name;
        for (std::size_t f = 0; f < files.size(); ++f) {
            const auto& records = files[f];
            std::set<std::uint64_t> seeds;
            std::vector<std::string> sets;
            for (const auto& r : records) {
                seeds.insert(r.seed);
                if (std::find(sets.begin(), sets.end(), r.eval_set) == sets.end()) {
                    sets.push_back(r.eval_set);
                }
                if (r.stage == 2 && (!spec.shade_from || r.step < *spec.shade_from)) {
                    spec.shade_from = static_cast<double>(r.step);
                }
            }
            for (const std::string& set : sets) {
                std::vector<harness::Series> runs;
                for (std::uint64_t seed : seeds) {
                    harness::Series s = harness::extract(records, seed, std::nullopt, set, metric);
                    s.values = harness::smooth(s.values, window);
                    runs.push_back(std::move(s));
                }
                const harness::AggregateSeries agg = harness::aggregate(runs);
                PlotLine line;
                line.label = files.size() > 1 ? fs::path(csv_paths[f]).stem().string() + " " + set : set;
                line.x.assign(agg.steps.begin(), agg.steps.end());
                line.mean = agg.mean;
                line.band = agg.stderr_;
                spec.lines.push_back(std::move(line));
            }
        }
        std::ofstream svg(fs::path(dir) / ("curve_" + name + ".svg"));
        svg << render_svg(spec);
        if (!svg) {
            throw std::runtime_error("could not write curve_" + name + ".svg under " + dir);
        }
    }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"usf_lab: universal successor feature experiments"};
    app.name("usf_lab");
    app.require_subcommand(1);

    ConfigOptions train_opts;
    std::string train_out = "runs";
    CLI::App* train_cmd = app.add_subcommand("train", "two-stage training over the configured seeds");
    train_opts.attach(train_cmd);
    train_cmd->add_option("-o,--out", train_out, "output directory")->capture_default_str();

    ConfigOptions eval_opts;
    std::string checkpoint;
    std::string goal_set = "source";
    int episodes = 0;
    long long eval_seed = -1;
    CLI::App* eval_cmd = app.add_subcommand("eval", "greedy evaluation of a checkpoint");
    eval_opts.attach(eval_cmd);
    eval_cmd->add_option("--checkpoint", checkpoint, "checkpoint_stage{K}_seed{N}.bin")->required();
    eval_cmd->add_option("--goals", goal_set, "goal set: source, target or holdout")->capture_default_str();
    eval_cmd->add_option("--episodes", episodes, "episodes per goal (default experiment.eval_episodes_per_goal)");
    eval_cmd->add_option("--seed", eval_seed, "seed whose goal sets to use (default: first configured seed)");

    std::vector<std::string> csvs;
    std::vector<std::string> plot_metrics{"done_rate"};
    int window = 50;
    std::string plot_out = ".";
    CLI::App* plot_cmd = app.add_subcommand("plot", "smoothed mean +- stderr curves from metrics CSVs");
    plot_cmd->add_option("csv", csvs, "metrics CSV files")->required();
    plot_cmd->add_option("--metric", plot_metrics, "done_rate, mean_steps, td_error, loss_q, loss_psi or all")
        ->capture_default_str();
    plot_cmd->add_option("--window", window, "moving-mean window (50 gridworld, 25 reacher)")->capture_default_str();
    plot_cmd->add_option("-o,--out", plot_out, "output directory")->capture_default_str();

    std::uint64_t verify_seed = 0;
    CLI::App* verify_cmd = app.add_subcommand("verify", "gradient checks and oracle equivalence suites");
    verify_cmd->add_option("--seed", verify_seed, "seed of the random draws")->capture_default_str();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (train_cmd->parsed()) {
            train(train_opts.build(), train_out, out);
            return 0;
        }
        if (eval_cmd->parsed()) {
            harness::ExperimentConfig config;
            if (eval_opts.config_path.empty()) {
                const fs::path beside = fs::path(checkpoint).parent_path() / "config.cfg";
                if (fs::exists(beside)) {
                    eval_opts.config_path = beside.string();
                }
            }
            config = eval_opts.build();
            const std::uint64_t seed = eval_seed >= 0 ? static_cast<std::uint64_t>(eval_seed) : config.seeds.front();
            return eval_command(config, checkpoint, seed, goal_set, episodes, out);
        }
        if (plot_cmd->parsed()) {
            if (plot_metrics.size() == 1 && plot_metrics[0] == "all") {
                plot_metrics.clear();
                for (harness::Metric m : harness::all_metrics()) {
                    plot_metrics.push_back(harness::to_string(m));
                }
            }
            plot(csvs, plot_metrics, window, plot_out);
            out << "wrote " << plot_metrics.size() << " plot(s) to " << plot_out << "\n";
            return 0;
        }
        if (verify_cmd->parsed()) {
            return verify_command(verify_seed, out);
        }
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return 2;
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

} // namespace usf::cli
