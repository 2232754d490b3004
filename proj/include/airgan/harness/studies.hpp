#pragma once

#include <cstddef>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "airgan/harness/metrics.hpp"
#include "airgan/harness/runner.hpp"

namespace airgan::harness {

inline bool uses(const std::vector<Method>& methods, Method m)
{
    return std::find(methods.begin(), methods.end(), m) != methods.end();
}

inline std::string cell_label(const std::string& name, double value)
{
    return name + "=" + format_double(value);
}

/// Every method on the same fields, for every seed and drone count.
inline std::vector<RunMetrics> run_cell(const ExperimentConfig& c, const std::vector<Method>& methods,
                                        const std::string& cell, std::ostream* progress = nullptr)
{
    std::unique_ptr<rrgan::GanTrainer> model;
    if (uses(methods, Method::rrgan)) {
        model = provide_rrgan(c, progress);
    }
    std::vector<RunMetrics> out;
    for (std::uint64_t seed : evaluation_seeds(c)) {
        const FieldCase fc = make_field_case(c.env, c.radio, seed);
        auto runs = run_field(methods, fc, c, model.get(), cell);
        if (progress) {
            *progress << cell << " drones " << c.env.n_drones << " seed " << seed;
            for (const RunMetrics& r : runs) {
                *progress << ' ' << r.method << '=' << (r.failed ? std::string("failed") : format_double(run_score(r)));
            }
            *progress << '\n';
        }
        out.insert(out.end(), std::make_move_iterator(runs.begin()), std::make_move_iterator(runs.end()));
    }
    return out;
}

inline std::vector<RunMetrics> run_comparison(ExperimentConfig c, const std::vector<int>& drones,
                                              const std::vector<Method>& methods, std::ostream* progress = nullptr)
{
    std::vector<RunMetrics> out;
    for (int n : drones) {
        c.env.n_drones = n;
        auto runs = run_cell(c, methods, "default", progress);
        out.insert(out.end(), std::make_move_iterator(runs.begin()), std::make_move_iterator(runs.end()));
    }
    return out;
}

struct RobustnessSweep {
    std::vector<int> drones{2, 4, 8};
    std::vector<double> greedy_factors{0.7, 0.8, 0.9};
    std::vector<std::size_t> explore_rounds{100, 1000, 10000, 100000};
    std::vector<Method> greedy_methods{Method::qlearning, Method::sarsa};
    std::vector<Method> rounds_methods{Method::rrgan};
};

/// Greedy-factor cells run the tabular learners at the configured learning rate and
/// discount; rounds cells retrain RR-GAN on maps explored with each stop window.
inline std::vector<RunMetrics> run_robustness(ExperimentConfig c, const RobustnessSweep& sweep,
                                              std::ostream* progress = nullptr)
{
    std::vector<RunMetrics> out;
    for (int n : sweep.drones) {
        c.env.n_drones = n;
        for (double g : sweep.greedy_factors) {
            ExperimentConfig cc = c;
            cc.greedy_factor = g;
            auto runs = run_cell(cc, sweep.greedy_methods, cell_label("greedy_factor", g), progress);
            out.insert(out.end(), std::make_move_iterator(runs.begin()), std::make_move_iterator(runs.end()));
        }
        if (sweep.rounds_methods.empty()) {
            continue;
        }
        for (std::size_t r : sweep.explore_rounds) {
            ExperimentConfig cc = c;
            cc.explore_rounds = r;
            auto runs = run_cell(cc, sweep.rounds_methods, cell_label("explore_rounds", static_cast<double>(r)),
                                 progress);
            out.insert(out.end(), std::make_move_iterator(runs.begin()), std::make_move_iterator(runs.end()));
        }
    }
    return out;
}

/// Number of Gaussian layers varies at a fixed total population.
inline std::vector<RunMetrics> run_scalability(ExperimentConfig c, const std::vector<int>& cluster_counts,
                                               const std::vector<int>& drones, const std::vector<Method>& methods,
                                               std::ostream* progress = nullptr)
{
    std::vector<RunMetrics> out;
    const radio::EnvConfig base = c.env;
    for (int k : cluster_counts) {
        for (int n : drones) {
            c.env = base.with_cluster_count(k);
            c.env.n_drones = n;
            require(c.env.total_users() == base.total_users(), "scalability: population changed");
            auto runs = run_cell(c, methods, cell_label("clusters", k), progress);
            out.insert(out.end(), std::make_move_iterator(runs.begin()), std::make_move_iterator(runs.end()));
        }
    }
    return out;
}

// ---- neighbour awareness ----

/// Two drones, two Gaussian clusters; the uniform layer keeps the configured size.
inline radio::EnvConfig neighbor_env(const radio::EnvConfig& base, bool symmetric)
{
    radio::EnvConfig e = base;
    e.n_drones = 2;
    e.n_clusters = 2;
    const int gaussian = base.total_users() - base.uniform_user_count;
    if (symmetric) {
        e.cluster_user_counts = {gaussian / 2, gaussian - gaussian / 2};
    } else {
        e.cluster_user_counts = {gaussian * 3 / 5, gaussian - gaussian * 3 / 5};
    }
    e.cluster_stddevs_m = {6.0, 6.0};
    return e;
}

struct NeighborCase {
    std::uint64_t seed = 0;
    radio::RewardMap predicted;
    std::vector<radio::Cell> targets;
    std::vector<radio::Cell> final_cells;
    /// Nearest cluster centre of each final cell.
    std::vector<int> regions;
    bool distinct_regions = false;
    bool distinct_argmax = false;
    int total_connected = 0;
    int best_total = 0;
};

inline int nearest_cluster(const radio::UserField& field, radio::Position p)
{
    int best = -1;
    double best_d = 0.0;
    for (std::size_t i = 0; i < field.cluster_centers.size(); ++i) {
        const double d = agents::squared_distance(p, field.cluster_centers[i]);
        if (best < 0 || d < best_d) {
            best = static_cast<int>(i);
            best_d = d;
        }
    }
    return best;
}

/// RR-GAN on the two-cluster field of every evaluation seed: both predicted channels, the
/// targets and where the drones end after one episode.
inline std::vector<NeighborCase> run_neighbor(ExperimentConfig c, bool symmetric, std::ostream* progress = nullptr)
{
    c.env = neighbor_env(c.env, symmetric);
    auto model = provide_rrgan(c, progress);
    std::vector<NeighborCase> out;
    for (std::uint64_t seed : evaluation_seeds(c)) {
        const FieldCase fc = make_field_case(c.env, c.radio, seed);
        Rng rng(mix_seed(seed, method_stream(Method::rrgan)));
        radio::WorldState s = fc.env->initial_state(2);
        const rrgan::ActPlan plan = rrgan::predict_and_act(*model, s, rng);
        NeighborCase nc;
        nc.seed = seed;
        nc.predicted = plan.prediction.lattice;
        nc.targets = plan.targets;
        for (std::size_t t = 0; t < c.steps_per_episode; ++t) {
            std::vector<radio::Action> a;
            for (std::size_t k = 0; k < 2; ++k) {
                a.push_back(rrgan::step_toward(s.lattice, s.drone_cells[k], nc.targets[k]));
            }
            s = fc.env->step(s, a).state;
        }
        nc.final_cells = s.drone_cells;
        for (const radio::Cell& cell : s.drone_cells) {
            nc.regions.push_back(nearest_cluster(*fc.field, s.lattice.center(cell)));
        }
        nc.distinct_regions = nc.regions[0] != nc.regions[1];
        nc.distinct_argmax = nc.targets[0] != nc.targets[1];
        nc.total_connected = fc.env->connectivity(s.drone_cells).total_connected;
        nc.best_total = agents::theoretical_best(fc.env->table(), 2).total_connected;
        out.push_back(std::move(nc));
    }
    return out;
}

inline nlohmann::json neighbor_json(const std::vector<NeighborCase>& cases, bool symmetric)
{
    using nlohmann::json;
    json j{{"schema", 1}, {"symmetric", symmetric}, {"cases", json::array()}};
    std::size_t split = 0;
    for (const NeighborCase& nc : cases) {
        json channels = json::array();
        for (int ch = 0; ch < nc.predicted.channels; ++ch) {
            json rows = json::array();
            for (int r = 0; r < nc.predicted.rows; ++r) {
                json row = json::array();
                for (int col = 0; col < nc.predicted.cols; ++col) {
                    row.push_back(nc.predicted.at(ch, radio::Cell{col, r}));
                }
                rows.push_back(std::move(row));
            }
            channels.push_back(std::move(rows));
        }
        auto cells = [](const std::vector<radio::Cell>& v) {
            json a = json::array();
            for (const radio::Cell& c : v) {
                a.push_back({c.col, c.row});
            }
            return a;
        };
        j["cases"].push_back({{"seed", nc.seed},
                              {"predicted", channels},
                              {"targets", cells(nc.targets)},
                              {"final_cells", cells(nc.final_cells)},
                              {"regions", nc.regions},
                              {"distinct_regions", nc.distinct_regions},
                              {"distinct_argmax", nc.distinct_argmax},
                              {"total_connected", nc.total_connected},
                              {"best_total", nc.best_total}});
        split += nc.distinct_regions ? 1 : 0;
    }
    j["split_fraction"] = cases.empty() ? 0.0 : static_cast<double>(split) / static_cast<double>(cases.size());
    return j;
}

} // namespace airgan::harness
