#pragma once

#include <algorithm>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "airgan/core/error.hpp"
#include "airgan/core/rng.hpp"
#include "airgan/radio/connectivity.hpp"
#include "airgan/radio/params.hpp"
#include "airgan/radio/user_field.hpp"
#include "airgan/radio/world.hpp"

namespace airgan::radio {

/// Per-agent channel x rows x cols grid of connected-user fractions, at lattice resolution.
struct RewardMap {
    int channels = 0;
    int rows = 0;
    int cols = 0;
    double resolution_m = 0.0;
    std::vector<double> values;

    RewardMap() = default;
    RewardMap(int channels_, const Lattice& lattice)
        : channels(channels_)
        , rows(lattice.rows)
        , cols(lattice.cols)
        , resolution_m(lattice.step_m)
        , values(static_cast<std::size_t>(channels_) * lattice.size(), 0.0)
    {
    }

    std::size_t plane() const { return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols); }
    double& at(int ch, Cell c)
    {
        return values[static_cast<std::size_t>(ch) * plane() + static_cast<std::size_t>(c.row * cols + c.col)];
    }
    double at(int ch, Cell c) const
    {
        return values[static_cast<std::size_t>(ch) * plane() + static_cast<std::size_t>(c.row * cols + c.col)];
    }

    /// Argmax cell of one channel; ties resolve to the lowest linear index.
    Cell argmax(int ch) const
    {
        const auto begin = values.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(ch) * plane());
        const auto best = std::max_element(begin, begin + static_cast<std::ptrdiff_t>(plane()));
        const auto linear = static_cast<int>(best - begin);
        return {linear % cols, linear / cols};
    }

    /// Channels reordered so that channel i holds old channel order[i].
    RewardMap permuted(std::span<const std::size_t> order) const
    {
        RewardMap out = *this;
        for (std::size_t i = 0; i < order.size(); ++i) {
            std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(order[i] * plane()), plane(),
                        out.values.begin() + static_cast<std::ptrdiff_t>(i * plane()));
        }
        return out;
    }
};

struct StepResult {
    WorldState state;
    std::vector<int> rewards;
    ConnectivityResult connectivity;
};

struct GreedyOptions {
    std::size_t stop_window = 1000;
    std::size_t max_rounds = 1000000;
    std::uint64_t rng_seed = 0;
    /// Probability that a candidate is a single lattice step; otherwise it is a jump to a
    /// uniformly drawn lattice cell.
    double local_move_probability = 0.5;
};

struct GreedyCommit {
    std::size_t round = 0;
    std::size_t agent = 0;
    Cell from;
    Cell to;
    int count_before = 0;
    int count_after = 0;
};

struct GreedyResult {
    /// Oracle values on the cells each agent probed, others at their final cells; 0 elsewhere.
    RewardMap observations;
    /// Joint placement after every commit, starting with the initial placement.
    std::vector<std::vector<Cell>> trajectory;
    std::vector<GreedyCommit> commits;
    std::size_t rounds = 0;
    int best_total = 0;
    WorldState final_state;
};

/// Radio environment bound to one user field, with a precomputed link table.
class RadioEnvironment {
public:
    RadioEnvironment(const EnvConfig& config, const RadioParams& params, std::shared_ptr<const UserField> field)
        : config_(config)
        , params_(params)
        , lattice_(Lattice::from(config))
        , field_(std::move(field))
        , table_(*field_, lattice_, LinkModel(params))
    {
    }

    RadioEnvironment(const WorldState& state, const RadioParams& params)
        : params_(params)
        , lattice_(state.lattice)
        , field_(state.user_field)
        , table_(*state.user_field, state.lattice, LinkModel(params))
    {
        config_.area_length_m = lattice_.cols * lattice_.step_m;
        config_.area_width_m = lattice_.rows * lattice_.step_m;
        config_.step_size_m = lattice_.step_m;
        config_.n_drones = static_cast<int>(state.n_drones());
    }

    const EnvConfig& config() const { return config_; }
    const RadioParams& params() const { return params_; }
    const Lattice& lattice() const { return lattice_; }
    const LinkTable& table() const { return table_; }
    const std::shared_ptr<const UserField>& field() const { return field_; }
    std::size_t n_users() const { return field_->size(); }

    WorldState initial_state(std::size_t n_drones) const
    {
        WorldState s;
        s.lattice = lattice_;
        s.drone_cells.assign(n_drones, lattice_.start_corner());
        s.user_field = field_;
        return s;
    }

    ConnectivityResult connectivity(std::span<const Cell> cells) const { return table_.connectivity(cells); }

    StepResult step(const WorldState& state, std::span<const Action> joint_action) const
    {
        require(joint_action.size() == state.n_drones(), "step: one action per agent required");
        const ConnectivityResult before = table_.connectivity(state.drone_cells);
        StepResult out;
        out.state = state;
        for (std::size_t k = 0; k < joint_action.size(); ++k) {
            out.state.drone_cells[k] = lattice_.moved(state.drone_cells[k], joint_action[k]);
        }
        ++out.state.tick;
        out.connectivity = table_.connectivity(out.state.drone_cells);
        out.rewards.resize(joint_action.size());
        for (std::size_t k = 0; k < joint_action.size(); ++k) {
            out.rewards[k] = out.connectivity.per_agent_counts[k] - before.per_agent_counts[k];
        }
        return out;
    }

    /// Channel n at cell c: connected fraction of agent n when placed at c with all other
    /// agents at their current cells.
    RewardMap oracle_reward_map(std::span<const Cell> cells) const
    {
        RewardMap map(static_cast<int>(cells.size()), lattice_);
        const double total = static_cast<double>(n_users());
        if (total == 0.0) {
            return map;
        }
        std::vector<Cell> trial(cells.begin(), cells.end());
        for (std::size_t n = 0; n < cells.size(); ++n) {
            for (std::size_t c = 0; c < lattice_.size(); ++c) {
                trial[n] = lattice_.cell(c);
                map.at(static_cast<int>(n), trial[n]) = table_.connectivity(trial).per_agent_counts[n] / total;
            }
            trial[n] = cells[n];
        }
        return map;
    }

    GreedyResult greedy_explore(const WorldState& start, const GreedyOptions& options) const
    {
        const std::size_t n_agents = start.n_drones();
        const std::size_t n_cells = lattice_.size();
        Rng rng(options.rng_seed);
        std::vector<Cell> cells = start.drone_cells;
        ConnectivityResult current = table_.connectivity(cells);

        std::vector<std::vector<char>> probed(n_agents, std::vector<char>(n_cells, 0));
        std::vector<std::vector<char>> rejected(n_agents, std::vector<char>(n_cells, 0));
        std::vector<std::size_t> rejected_count(n_agents, 0);
        for (std::size_t k = 0; k < n_agents; ++k) {
            probed[k][lattice_.index(cells[k])] = 1;
        }

        GreedyResult result;
        result.trajectory.push_back(cells);
        result.best_total = current.total_connected;
        std::size_t last_improvement = 0;
        std::size_t round = 0;

        const bool local_only = options.local_move_probability >= 1.0;
        auto reachable_candidates = [&](std::size_t k) {
            if (!local_only) {
                return n_cells - 1;
            }
            std::size_t n = 0;
            for (Action a : {Action::east, Action::west, Action::south, Action::north}) {
                n += lattice_.moved(cells[k], a) != cells[k] ? 1 : 0;
            }
            return n;
        };
        auto all_stuck = [&] {
            for (std::size_t k = 0; k < n_agents; ++k) {
                if (rejected_count[k] < reachable_candidates(k)) {
                    return false;
                }
            }
            return true;
        };

        while (round < options.max_rounds && round - last_improvement < options.stop_window) {
            ++round;
            for (std::size_t k = 0; k < n_agents; ++k) {
                Cell candidate;
                if (uniform01(rng) < options.local_move_probability) {
                    candidate = lattice_.moved(cells[k], action_from_index(uniform_index(rng, 4)));
                } else {
                    candidate = lattice_.cell(uniform_index(rng, n_cells));
                }
                if (candidate == cells[k]) {
                    continue;
                }
                const std::size_t ci = lattice_.index(candidate);
                probed[k][ci] = 1;
                std::vector<Cell> trial = cells;
                trial[k] = candidate;
                ConnectivityResult after = table_.connectivity(trial);
                if (after.per_agent_counts[k] > current.per_agent_counts[k]) {
                    result.commits.push_back({round, k, cells[k], candidate, current.per_agent_counts[k],
                                              after.per_agent_counts[k]});
                    cells = std::move(trial);
                    current = std::move(after);
                    result.trajectory.push_back(cells);
                    for (std::size_t j = 0; j < n_agents; ++j) {
                        std::fill(rejected[j].begin(), rejected[j].end(), 0);
                        rejected_count[j] = 0;
                    }
                } else if (!rejected[k][ci]) {
                    rejected[k][ci] = 1;
                    ++rejected_count[k];
                }
            }
            if (current.total_connected > result.best_total) {
                result.best_total = current.total_connected;
                last_improvement = round;
            }
            // Every agent has already been refused on every reachable candidate: the state
            // can no longer change, so the remaining rounds would be idle.
            if (all_stuck()) {
                break;
            }
        }
        result.rounds = round;

        result.final_state = start;
        result.final_state.drone_cells = cells;
        result.final_state.tick = start.tick + round;
        result.observations = RewardMap(static_cast<int>(n_agents), lattice_);
        const double total = static_cast<double>(n_users());
        if (total > 0.0) {
            for (std::size_t k = 0; k < n_agents; ++k) {
                for (std::size_t c = 0; c < n_cells; ++c) {
                    if (probed[k][c]) {
                        const Cell cell = lattice_.cell(c);
                        result.observations.at(static_cast<int>(k), cell)
                            = table_.count_if_placed(cells, k, cell) / total;
                    }
                }
            }
        }
        return result;
    }

private:
    EnvConfig config_;
    RadioParams params_;
    Lattice lattice_;
    std::shared_ptr<const UserField> field_;
    LinkTable table_;
};

inline StepResult step(const WorldState& state, std::span<const Action> joint_action, const RadioParams& params)
{
    return RadioEnvironment(state, params).step(state, joint_action);
}

inline RewardMap oracle_reward_map(const WorldState& state, const RadioParams& params)
{
    return RadioEnvironment(state, params).oracle_reward_map(state.drone_cells);
}

inline GreedyResult greedy_explore(const WorldState& state, const RadioParams& params, std::size_t stop_window,
                                   std::size_t max_rounds, std::uint64_t rng_seed)
{
    GreedyOptions options;
    options.stop_window = stop_window;
    options.max_rounds = max_rounds;
    options.rng_seed = rng_seed;
    return RadioEnvironment(state, params).greedy_explore(state, options);
}

} // namespace airgan::radio
