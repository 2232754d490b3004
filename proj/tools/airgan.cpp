// Command-line front end for simulations, exploration, RR-GAN training and studies.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "airgan/harness/config.hpp"
#include "airgan/harness/metrics.hpp"
#include "airgan/harness/runner.hpp"
#include "airgan/harness/studies.hpp"

namespace fs = std::filesystem;
using namespace airgan;
using namespace airgan::harness;

namespace {

struct Common {
    std::string config;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string out;
    std::vector<int> drones;
    bool desk_scale = false;
    std::string format = "both";
    bool quiet = false;
};

void add_common(CLI::App* app, Common& c)
{
    app->add_option("--config", c.config, "experiment config (INI)")->check(CLI::ExistingFile);
    app->add_option_function<std::uint64_t>(
        "--seed",
        [&c](const std::uint64_t& s) {
            c.seed = s;
            c.seed_set = true;
        },
        "first evaluation seed");
    app->add_option("--out", c.out, "output directory");
    app->add_option("--drones", c.drones, "drone count (repeatable)");
    app->add_flag("--desk-scale", c.desk_scale, "32x32 reduced RR-GAN architecture");
    app->add_option("--format", c.format, "export format: csv, json, both");
    app->add_flag("--quiet", c.quiet, "no progress on stderr");
}

ExperimentConfig resolve(const Common& c)
{
    ExperimentConfig cfg = c.config.empty() ? ExperimentConfig{} : load_config(c.config);
    if (c.seed_set) {
        cfg.seed = c.seed;
    }
    if (!c.out.empty()) {
        cfg.output_dir = c.out;
    }
    if (c.desk_scale) {
        cfg.rrgan.desk_scale = true;
    }
    if (c.drones.size() == 1) {
        cfg.env.n_drones = c.drones.front();
    }
    cfg.validate();
    return cfg;
}

std::vector<int> drone_list(const Common& c, const ExperimentConfig& cfg, std::vector<int> fallback)
{
    if (!c.drones.empty()) {
        return c.drones;
    }
    return c.config.empty() ? fallback : std::vector<int>{cfg.env.n_drones};
}

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream out = open_output(path);
    out << text;
    close_output(out, path);
}

void export_all(const std::vector<RunMetrics>& runs, const ExperimentConfig& cfg, const Common& c)
{
    const fs::path dir = cfg.output_dir;
    export_metrics(runs, parse_format(c.format), dir);
    write_timing_csv(runs, dir / "timing.csv");
    write_text(dir / "config.ini", format_config(cfg));
}

void print_summary(const std::vector<RunMetrics>& runs)
{
    std::cout << summary_header << '\n';
    for (const SummaryRow& s : summarize(runs)) {
        std::cout << s.cell << ',' << s.method << ',' << s.n_drones << ',' << s.runs << ',' << s.failed << ','
                  << format_double(s.mean) << ',' << format_double(s.median) << ',' << format_double(s.q1) << ','
                  << format_double(s.q3) << ',' << format_double(s.convergence_median) << '\n';
    }
}

nlohmann::json map_json(const radio::RewardMap& m)
{
    nlohmann::json channels = nlohmann::json::array();
    for (int ch = 0; ch < m.channels; ++ch) {
        nlohmann::json rows = nlohmann::json::array();
        for (int r = 0; r < m.rows; ++r) {
            nlohmann::json row = nlohmann::json::array();
            for (int col = 0; col < m.cols; ++col) {
                row.push_back(m.at(ch, radio::Cell{col, r}));
            }
            rows.push_back(std::move(row));
        }
        channels.push_back(std::move(rows));
    }
    return {{"channels", m.channels}, {"rows", m.rows}, {"cols", m.cols}, {"values", channels}};
}

std::vector<Method> parse_methods(const std::vector<std::string>& names)
{
    std::vector<Method> out;
    for (const std::string& n : names) {
        out.push_back(parse_method(n));
    }
    return out;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"airgan: multi-drone placement simulator and experiment harness"};
    app.require_subcommand(1);

    Common common;
    std::size_t steps = 0;
    std::vector<std::string> method_names;
    std::vector<int> clusters{1, 2, 3, 4, 5};
    bool symmetric = false;
    std::string in_dir;

    auto* simulate = app.add_subcommand("simulate", "sample a field and random-walk the drones");
    add_common(simulate, common);
    simulate->add_option("--steps", steps, "steps (default steps_per_episode)");

    auto* explore = app.add_subcommand("explore", "greedy exploration and its reward map");
    add_common(explore, common);

    auto* train = app.add_subcommand("train", "train (or load) the RR-GAN model for the config");
    add_common(train, common);

    auto* run = app.add_subcommand("run", "the configured method over the configured seeds");
    add_common(run, common);

    auto* compare = app.add_subcommand("compare", "all methods on shared fields");
    add_common(compare, common);
    compare->add_option("--methods", method_names, "subset of methods");

    auto* robustness = app.add_subcommand("robustness", "greedy-factor and exploration-window sweeps");
    add_common(robustness, common);

    auto* scalability = app.add_subcommand("scalability", "cluster-count sweep at fixed population");
    add_common(scalability, common);
    scalability->add_option("--clusters", clusters, "cluster counts");
    scalability->add_option("--methods", method_names, "methods (default rrgan)");

    auto* neighbor = app.add_subcommand("neighbor", "two drones, two clusters");
    add_common(neighbor, common);
    neighbor->add_flag("--symmetric", symmetric, "equal cluster sizes");

    auto* exp = app.add_subcommand("export", "re-export metrics.json as csv or json");
    exp->add_option("--in", in_dir, "directory holding metrics.json")->required();
    exp->add_option("--out", common.out, "output directory")->required();
    exp->add_option("--format", common.format, "csv, json, both");

    CLI11_PARSE(app, argc, argv);

    try {
        std::ostream* progress = nullptr;
        if (!common.quiet) {
            progress = &std::cerr;
        }

        if (*exp) {
            std::ifstream in(fs::path(in_dir) / "metrics.json");
            if (!in) {
                throw Error("cannot read " + (fs::path(in_dir) / "metrics.json").string());
            }
            const auto runs = runs_from_json(nlohmann::json::parse(in));
            export_metrics(runs, parse_format(common.format), common.out);
            return 0;
        }

        ExperimentConfig cfg = resolve(common);
        const fs::path dir = cfg.output_dir;

        if (*simulate) {
            const FieldCase fc = make_field_case(cfg.env, cfg.radio, cfg.seed);
            Rng rng(mix_seed(cfg.seed, method_stream(Method::random)));
            radio::WorldState s = fc.env->initial_state(static_cast<std::size_t>(cfg.env.n_drones));
            write_text(dir / "world.txt", radio::serialize_world_state(s));
            std::ofstream traj = open_output(dir / "trajectory.csv");
            traj << "tick,total_connected,per_agent,cells\n";
            auto conn = fc.env->connectivity(s.drone_cells);
            traj << 0 << ',' << conn.total_connected << ',' << join_counts(conn.per_agent_counts) << ','
                 << join_cells(s.drone_cells) << '\n';
            const std::size_t n_steps = steps ? steps : cfg.steps_per_episode;
            for (std::size_t t = 0; t < n_steps; ++t) {
                auto r = fc.env->step(s, agents::random_walk(s.n_drones(), rng));
                s = std::move(r.state);
                traj << s.tick << ',' << r.connectivity.total_connected << ','
                     << join_counts(r.connectivity.per_agent_counts) << ',' << join_cells(s.drone_cells) << '\n';
            }
            close_output(traj, dir / "trajectory.csv");
            std::cout << "field " << fc.digest << " users " << fc.field->size() << '\n';
            return 0;
        }

        if (*explore) {
            const FieldCase fc = make_field_case(cfg.env, cfg.radio, cfg.seed);
            radio::GreedyOptions go;
            go.stop_window = cfg.explore_rounds;
            go.rng_seed = mix_seed(cfg.seed, 7);
            const auto g = fc.env->greedy_explore(fc.env->initial_state(static_cast<std::size_t>(cfg.env.n_drones)), go);
            nlohmann::json j{{"schema", 1},
                             {"seed", cfg.seed},
                             {"field_digest", fc.digest},
                             {"rounds", g.rounds},
                             {"best_total", g.best_total},
                             {"observations", map_json(g.observations)},
                             {"oracle", map_json(fc.env->oracle_reward_map(g.final_state.drone_cells))}};
            std::ofstream out = open_output(dir / "reward_map.json");
            out << j.dump(1) << '\n';
            close_output(out, dir / "reward_map.json");
            std::ofstream commits = open_output(dir / "commits.csv");
            commits << "round,agent,from,to,count_before,count_after\n";
            for (const auto& c : g.commits) {
                commits << c.round << ',' << c.agent << ',' << join_cells({c.from}) << ',' << join_cells({c.to}) << ','
                        << c.count_before << ',' << c.count_after << '\n';
            }
            close_output(commits, dir / "commits.csv");
            std::cout << "rounds " << g.rounds << " total " << g.best_total << '\n';
            return 0;
        }

        if (*train) {
            auto model = provide_rrgan(cfg, progress);
            std::cout << "model " << rrgan_checkpoint_path(cfg).string() << '\n';
            return 0;
        }

        std::vector<RunMetrics> runs;
        if (*run) {
            runs = run_cell(cfg, {cfg.method}, "default", progress);
        } else if (*compare) {
            const auto methods = method_names.empty()
                ? std::vector<Method>(all_methods.begin(), all_methods.end())
                : parse_methods(method_names);
            runs = run_comparison(cfg, drone_list(common, cfg, {1, 2, 4, 8}), methods, progress);
        } else if (*robustness) {
            RobustnessSweep sweep;
            sweep.drones = drone_list(common, cfg, {2, 4, 8});
            runs = run_robustness(cfg, sweep, progress);
        } else if (*scalability) {
            const auto methods = method_names.empty() ? std::vector<Method>{Method::rrgan} : parse_methods(method_names);
            runs = run_scalability(cfg, clusters, drone_list(common, cfg, {2, 4, 8}), methods, progress);
        } else if (*neighbor) {
            const auto cases = run_neighbor(cfg, symmetric, progress);
            const auto j = neighbor_json(cases, symmetric);
            std::ofstream out = open_output(dir / "neighbor.json");
            out << j.dump(1) << '\n';
            close_output(out, dir / "neighbor.json");
            write_text(dir / "config.ini", format_config(cfg));
            std::cout << "split_fraction " << j["split_fraction"].get<double>() << '\n';
            return 0;
        }
        export_all(runs, cfg, common);
        print_summary(runs);
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
