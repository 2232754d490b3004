#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <fstream>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "airgan/agents/best.hpp"
#include "airgan/agents/dqn.hpp"
#include "airgan/agents/kmeans.hpp"
#include "airgan/agents/tabular.hpp"
#include "airgan/core/hash.hpp"
#include "airgan/harness/config.hpp"
#include "airgan/harness/metrics.hpp"
#include "airgan/nn/checkpoint.hpp"
#include "airgan/radio/environment.hpp"
#include "airgan/rrgan/policy.hpp"

namespace airgan::harness {

/// One evaluation field, shared read-only by every method run on that seed.
struct FieldCase {
    std::uint64_t seed = 0;
    std::shared_ptr<const radio::UserField> field;
    std::shared_ptr<const radio::RadioEnvironment> env;
    std::string digest;
};

inline std::uint64_t field_seed(const radio::EnvConfig& env, std::uint64_t seed) { return mix_seed(env.seed, seed); }

inline FieldCase make_field_case(const radio::EnvConfig& env, const radio::RadioParams& params, std::uint64_t seed)
{
    FieldCase fc;
    fc.seed = seed;
    fc.field = std::make_shared<const radio::UserField>(radio::sample_user_field(env, field_seed(env, seed)));
    fc.env = std::make_shared<const radio::RadioEnvironment>(env, params, fc.field);
    fc.digest = hex_digest(radio::serialize_user_field(*fc.field));
    return fc;
}

/// Evaluation seeds are config.seed, config.seed + 1, ...
inline std::vector<std::uint64_t> evaluation_seeds(const ExperimentConfig& c)
{
    std::vector<std::uint64_t> out;
    for (std::size_t i = 0; i < c.seeds; ++i) {
        out.push_back(c.seed + i);
    }
    return out;
}

inline std::uint64_t method_stream(Method m) { return 100 + static_cast<std::uint64_t>(m); }

// ---- RR-GAN model ----

inline rrgan::GanConfig gan_config(const ExperimentConfig& c, std::size_t n_drones)
{
    rrgan::GanConfig g = c.rrgan.desk_scale ? rrgan::GanConfig::desk(n_drones) : rrgan::GanConfig::full(n_drones);
    g.seed = mix_seed(c.rrgan.train_seed_base, n_drones);
    return g;
}

/// Everything the trained model depends on, as text; its digest names the cache file.
inline std::string rrgan_training_key(const ExperimentConfig& c)
{
    ExperimentConfig k;
    k.env = c.env;
    k.radio = c.radio;
    k.explore_rounds = c.explore_rounds;
    k.rrgan = c.rrgan;
    k.rrgan.checkpoint.clear();
    std::ostringstream os;
    os << "[rrgan-training]\n" << format_config(k);
    return os.str();
}

inline std::filesystem::path rrgan_checkpoint_path(const ExperimentConfig& c)
{
    if (!c.rrgan.checkpoint.empty()) {
        return c.rrgan.checkpoint;
    }
    return std::filesystem::path(c.output_dir) / "models"
        / ("rrgan_" + std::to_string(c.env.n_drones) + "d_" + hex_digest(rrgan_training_key(c)) + ".ckpt");
}

/// Greedy explorations on the training seed range.
inline void fill_experience(rrgan::GanTrainer& model, const ExperimentConfig& c)
{
    const auto& g = model.config().generator;
    for (std::size_t i = 0; i < c.rrgan.train_fields; ++i) {
        const std::uint64_t s = c.rrgan.train_seed_base + i;
        const FieldCase fc = make_field_case(c.env, c.radio, s);
        radio::GreedyOptions go;
        go.stop_window = c.explore_rounds;
        go.rng_seed = mix_seed(s, 7);
        const auto greedy = fc.env->greedy_explore(fc.env->initial_state(g.n_drones), go);
        model.store().push(rrgan::make_experience(*fc.env, greedy, g.height, g.width));
    }
}

/// Network state plus the stored experience maps, which inference samples from.
inline nn::Checkpoint rrgan_checkpoint(rrgan::GanTrainer& model, const std::string& key)
{
    nn::Checkpoint ck = model.checkpoint();
    ck.meta["training_key"] = key;
    ck.meta["store_size"] = model.store().size();
    for (std::size_t i = 0; i < model.store().size(); ++i) {
        const rrgan::Experience& e = model.store().at(i);
        ck.add("store." + std::to_string(i) + ".environment", e.environment);
        ck.add("store." + std::to_string(i) + ".reward_map", e.reward_map);
    }
    return ck;
}

inline void restore_rrgan(rrgan::GanTrainer& model, const nn::Checkpoint& ck)
{
    model.restore(ck);
    const auto& g = model.config().generator;
    const std::size_t n = ck.meta.value("store_size", std::size_t{0});
    for (std::size_t i = 0; i < n; ++i) {
        rrgan::Experience e;
        e.environment = nn::Tensor({1, 1, g.height, g.width});
        e.reward_map = nn::Tensor({1, g.n_drones, g.height, g.width});
        ck.restore("store." + std::to_string(i) + ".environment", e.environment);
        ck.restore("store." + std::to_string(i) + ".reward_map", e.reward_map);
        model.store().push(std::move(e));
    }
}

/// Loads the cached model for this training setup or trains and caches it. The training
/// log goes next to the checkpoint.
inline std::unique_ptr<rrgan::GanTrainer> provide_rrgan(const ExperimentConfig& c, std::ostream* progress = nullptr)
{
    const auto n = static_cast<std::size_t>(c.env.n_drones);
    auto model = std::make_unique<rrgan::GanTrainer>(gan_config(c, n));
    const auto path = rrgan_checkpoint_path(c);
    const std::string key = rrgan_training_key(c);
    if (std::filesystem::exists(path)) {
        const nn::Checkpoint ck = nn::load_checkpoint(path.string());
        if (c.rrgan.checkpoint.empty()) {
            require(ck.meta.value("training_key", std::string{}) == key,
                    "cached model " + path.string() + " was trained with a different setup");
        }
        restore_rrgan(*model, ck);
        return model;
    }
    if (progress) {
        *progress << "rrgan: exploring " << c.rrgan.train_fields << " fields for " << n << " drones\n";
    }
    fill_experience(*model, c);
    std::filesystem::create_directories(path.parent_path());
    auto log_path = path;
    log_path.replace_extension(".train.csv");
    std::ofstream log = open_output(log_path);
    rrgan::write_epoch_header(log);
    for (std::size_t e = 0; e < c.rrgan.epochs; ++e) {
        const rrgan::EpochLog l = model->train_epoch();
        rrgan::write_epoch_row(log, l);
        log.flush();
        if (progress && (l.epoch % 10 == 0 || l.epoch == c.rrgan.epochs)) {
            *progress << "rrgan: epoch " << l.epoch << " rmse " << l.reconstruction_rmse << "\n";
        }
        if (l.aborted) {
            throw NumericError("rrgan training aborted: " + l.diagnostic);
        }
    }
    close_output(log, log_path);
    nn::save_checkpoint(path.string(), rrgan_checkpoint(*model, key));
    return model;
}

// ---- per-method episode loops ----

struct EpisodeOutcome {
    int total = 0;
    std::vector<int> per_agent;
    std::vector<radio::Cell> cells;
};

using EpisodeStop = std::function<bool(const std::vector<EpisodeOutcome>&)>;

namespace detail {

inline EpisodeOutcome outcome(const radio::WorldState& s, const radio::ConnectivityResult& c)
{
    return {c.total_connected, c.per_agent_counts, s.drone_cells};
}

inline std::size_t cell_index(const radio::WorldState& s, std::size_t k) { return s.lattice.index(s.drone_cells[k]); }

/// Runs `episodes` episodes from the start corner; `act(state)` gives the joint action
/// and `learn(state, actions, result)` sees every transition. `stop` (if set) ends the run
/// early once it returns true on the outcomes so far.
template <class Begin, class Act, class Learn>
std::vector<EpisodeOutcome> run_episodes(const radio::RadioEnvironment& env, std::size_t n_drones,
                                         const ExperimentConfig& c, Begin begin, Act act, Learn learn,
                                         const EpisodeStop& stop)
{
    std::vector<EpisodeOutcome> out;
    for (std::size_t e = 0; e < c.episodes; ++e) {
        radio::WorldState s = env.initial_state(n_drones);
        radio::ConnectivityResult conn = env.connectivity(s.drone_cells);
        begin(s, e);
        for (std::size_t t = 0; t < c.steps_per_episode; ++t) {
            const std::vector<radio::Action> a = act(s);
            radio::StepResult r = env.step(s, a);
            learn(s, a, r, t + 1 == c.steps_per_episode);
            s = std::move(r.state);
            conn = std::move(r.connectivity);
        }
        out.push_back(outcome(s, conn));
        if (stop && stop(out)) {
            break;
        }
    }
    return out;
}

inline std::vector<EpisodeOutcome> run_tabular(const radio::RadioEnvironment& env, std::size_t n,
                                               const ExperimentConfig& c, Rng& rng, bool sarsa, const EpisodeStop& stop)
{
    std::vector<agents::QTable> tables(n, agents::QTable(env.lattice().size(), c.learning_rate, c.discount));
    std::vector<radio::Action> pending(n);
    auto choose = [&](const radio::WorldState& s, std::size_t k) {
        return agents::select_action(tables[k].row(cell_index(s, k)), c.greedy_factor, rng);
    };
    return run_episodes(
        env, n, c,
        [&](const radio::WorldState& s, std::size_t) {
            for (std::size_t k = 0; k < n; ++k) {
                pending[k] = choose(s, k);
            }
        },
        [&](const radio::WorldState& s) {
            if (!sarsa) {
                for (std::size_t k = 0; k < n; ++k) {
                    pending[k] = choose(s, k);
                }
            }
            return pending;
        },
        [&](const radio::WorldState& s, const std::vector<radio::Action>& a, const radio::StepResult& r, bool) {
            for (std::size_t k = 0; k < n; ++k) {
                const std::size_t from = cell_index(s, k), to = cell_index(r.state, k);
                if (sarsa) {
                    pending[k] = choose(r.state, k);
                    tables[k].sarsa_update(from, a[k], r.rewards[k], to, pending[k]);
                } else {
                    tables[k].q_update(from, a[k], r.rewards[k], to);
                }
            }
        },
        stop);
}

inline std::vector<EpisodeOutcome> run_dqn(const radio::RadioEnvironment& env, std::size_t n,
                                           const ExperimentConfig& c, Rng& rng, std::uint64_t seed,
                                           const EpisodeStop& stop)
{
    const auto obs = agents::dqn_observations(*env.field(), env.lattice(), c.dqn.crop);
    std::vector<agents::DqnModel> models;
    for (std::size_t k = 0; k < n; ++k) {
        agents::DqnConfig dc = c.dqn;
        dc.seed = mix_seed(seed, 200 + k);
        dc.reward_scale = env.n_users() > 0 ? 100.0 / static_cast<double>(env.n_users()) : 1.0;
        models.emplace_back(dc);
    }
    return run_episodes(
        env, n, c, [](const radio::WorldState&, std::size_t) {},
        [&](const radio::WorldState& s) {
            std::vector<radio::Action> a(n);
            for (std::size_t k = 0; k < n; ++k) {
                a[k] = agents::select_action(models[k].q_values(obs[cell_index(s, k)]), c.greedy_factor, rng);
            }
            return a;
        },
        [&](const radio::WorldState& s, const std::vector<radio::Action>& a, const radio::StepResult& r, bool) {
            for (std::size_t k = 0; k < n; ++k) {
                models[k].step({obs[cell_index(s, k)], a[k], static_cast<double>(r.rewards[k]),
                                obs[cell_index(r.state, k)], false});
            }
        },
        stop);
}

inline std::vector<EpisodeOutcome> run_kmeans(const radio::RadioEnvironment& env, std::size_t n,
                                              const ExperimentConfig& c, std::uint64_t seed, const EpisodeStop& stop)
{
    std::unique_ptr<agents::KMeansController> ctl;
    return run_episodes(
        env, n, c,
        [&](const radio::WorldState& s, std::size_t e) {
            Rng init(mix_seed(seed, 300 + e));
            ctl = std::make_unique<agents::KMeansController>(s, init);
        },
        [&](const radio::WorldState& s) { return ctl->step(s); },
        [](const radio::WorldState&, const std::vector<radio::Action>&, const radio::StepResult&, bool) {},
        stop);
}

inline std::vector<EpisodeOutcome> run_random(const radio::RadioEnvironment& env, std::size_t n,
                                              const ExperimentConfig& c, Rng& rng, const EpisodeStop& stop)
{
    return run_episodes(
        env, n, c, [](const radio::WorldState&, std::size_t) {},
        [&](const radio::WorldState&) { return agents::random_walk(n, rng); },
        [](const radio::WorldState&, const std::vector<radio::Action>&, const radio::StepResult&, bool) {},
        stop);
}

/// One prediction per episode from the start state, then a walk toward the channel argmaxes.
inline std::vector<EpisodeOutcome> run_rrgan(const radio::RadioEnvironment& env, std::size_t n,
                                             const ExperimentConfig& c, Rng& rng, rrgan::GanTrainer& model,
                                             const EpisodeStop& stop)
{
    require(model.config().generator.n_drones == n, "rrgan model was trained for a different drone count");
    std::vector<radio::Cell> targets;
    return run_episodes(
        env, n, c,
        [&](const radio::WorldState& s, std::size_t) { targets = rrgan::predict_and_act(model, s, rng).targets; },
        [&](const radio::WorldState& s) {
            std::vector<radio::Action> a(n);
            for (std::size_t k = 0; k < n; ++k) {
                a[k] = rrgan::step_toward(s.lattice, s.drone_cells[k], targets[k]);
            }
            return a;
        },
        [](const radio::WorldState&, const std::vector<radio::Action>&, const radio::StepResult&, bool) {},
        stop);
}

} // namespace detail

inline std::vector<EpisodeOutcome> run_method_episodes(Method m, const FieldCase& fc, const ExperimentConfig& c,
                                                       rrgan::GanTrainer* model, const EpisodeStop& stop = {})
{
    const auto n = static_cast<std::size_t>(c.env.n_drones);
    Rng rng(mix_seed(fc.seed, method_stream(m)));
    switch (m) {
    case Method::qlearning: return detail::run_tabular(*fc.env, n, c, rng, false, stop);
    case Method::sarsa: return detail::run_tabular(*fc.env, n, c, rng, true, stop);
    case Method::dqn: return detail::run_dqn(*fc.env, n, c, rng, fc.seed, stop);
    case Method::kmeans: return detail::run_kmeans(*fc.env, n, c, fc.seed, stop);
    case Method::random: return detail::run_random(*fc.env, n, c, rng, stop);
    case Method::rrgan:
        require(model != nullptr, "rrgan run without a model");
        return detail::run_rrgan(*fc.env, n, c, rng, *model, stop);
    case Method::best: break;
    }
    throw Error("run_method_episodes: best has no episode loop");
}

/// All `methods` on one field. Learning methods run first; theoretical_best is warm-started
/// from the best final placement of every run, so it bounds every episode. A method that
/// throws becomes a failed run and the others continue.
inline std::vector<RunMetrics> run_field(const std::vector<Method>& methods, const FieldCase& fc,
                                         const ExperimentConfig& c, rrgan::GanTrainer* model,
                                         const std::string& cell = "default")
{
    const int n = c.env.n_drones;
    std::vector<RunMetrics> out;
    std::vector<std::vector<radio::Cell>> warm;
    for (Method m : methods) {
        if (m == Method::best) {
            continue;
        }
        RunMetrics r;
        r.cell = cell;
        r.method = std::string(method_name(m));
        r.n_drones = n;
        r.seed = fc.seed;
        r.n_users = static_cast<int>(fc.field->size());
        r.field_digest = fc.digest;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            const auto episodes = run_method_episodes(m, fc, c, model);
            const EpisodeOutcome* top = nullptr;
            for (const EpisodeOutcome& e : episodes) {
                r.totals.push_back(e.total);
                r.per_agent.push_back(e.per_agent);
                r.final_cells.push_back(e.cells);
                if (!top || e.total > top->total) {
                    top = &e;
                }
            }
            if (top) {
                warm.push_back(top->cells);
            }
        } catch (const std::exception& e) {
            r.totals.clear();
            r.per_agent.clear();
            r.final_cells.clear();
            r.failed = true;
            r.diagnostic = e.what();
        }
        r.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        out.push_back(std::move(r));
    }

    const auto t0 = std::chrono::steady_clock::now();
    agents::BestOptions bo;
    bo.seed = mix_seed(fc.seed, method_stream(Method::best));
    const agents::BestPlacement best
        = agents::theoretical_best(fc.env->table(), static_cast<std::size_t>(n), bo, warm);
    const double best_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    for (RunMetrics& r : out) {
        r.best_total = best.total_connected;
        for (int total : r.totals) {
            require(total <= best.total_connected, "theoretical best below a " + r.method + " episode");
            r.fractions.push_back(best.total_connected > 0
                                      ? static_cast<double>(total) / static_cast<double>(best.total_connected)
                                      : 1.0);
        }
    }
    if (std::find(methods.begin(), methods.end(), Method::best) != methods.end()) {
        RunMetrics r;
        r.cell = cell;
        r.method = "best";
        r.n_drones = n;
        r.seed = fc.seed;
        r.n_users = static_cast<int>(fc.field->size());
        r.field_digest = fc.digest;
        r.best_total = best.total_connected;
        const auto conn = fc.env->connectivity(best.cells);
        for (std::size_t e = 0; e < c.episodes; ++e) {
            r.totals.push_back(best.total_connected);
            r.per_agent.push_back(conn.per_agent_counts);
            r.final_cells.push_back(best.cells);
            r.fractions.push_back(1.0);
        }
        r.wall_clock_s = best_time;
        out.push_back(std::move(r));
    }
    return out;
}

} // namespace airgan::harness
