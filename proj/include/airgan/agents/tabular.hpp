#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "airgan/core/error.hpp"
#include "airgan/core/rng.hpp"
#include "airgan/nn/checkpoint.hpp"
#include "airgan/radio/world.hpp"

namespace airgan::agents {

using radio::Action;
using radio::action_count;

struct PolicyParams {
    /// Probability of exploiting the current best action.
    double greedy_factor = 0.9;
    std::uint64_t rng_seed = 0;

    void validate() const
    {
        require_config(greedy_factor >= 0.0 && greedy_factor <= 1.0, "greedy_factor must lie in [0, 1]");
    }
};

/// Index of the largest value; ties go to the lowest index.
inline std::size_t argmax_action(std::span<const double> q_row)
{
    require(q_row.size() == action_count, "q row must hold one value per action");
    std::size_t best = 0;
    for (std::size_t a = 1; a < q_row.size(); ++a) {
        if (q_row[a] > q_row[best]) {
            best = a;
        }
    }
    return best;
}

/// Exploit with probability greedy_factor, otherwise a uniform action. Draws one uniform
/// for the coin and, when exploring, one index.
inline Action select_action(std::span<const double> q_row, double greedy_factor, Rng& rng)
{
    const std::size_t best = argmax_action(q_row);
    if (uniform01(rng) < greedy_factor) {
        return radio::action_from_index(best);
    }
    return radio::action_from_index(uniform_index(rng, action_count));
}

/// One agent's action values over its own lattice cell.
class QTable {
public:
    QTable(std::size_t n_states, double learning_rate = 0.1, double discount = 0.5)
        : n_states_(n_states)
        , learning_rate_(learning_rate)
        , discount_(discount)
        , values_(n_states * action_count, 0.0)
    {
        require_config(n_states >= 1, "q table needs at least one state");
        require_config(learning_rate >= 0.0 && learning_rate <= 1.0, "learning rate must lie in [0, 1]");
        require_config(discount >= 0.0 && discount < 1.0, "discount must lie in [0, 1)");
    }

    std::size_t n_states() const { return n_states_; }
    double learning_rate() const { return learning_rate_; }
    double discount() const { return discount_; }
    const std::vector<double>& values() const { return values_; }

    std::span<const double> row(std::size_t s) const
    {
        check_state(s);
        return {values_.data() + s * action_count, action_count};
    }

    double at(std::size_t s, Action a) const { return row(s)[radio::action_index(a)]; }
    void set(std::size_t s, Action a, double v)
    {
        check_state(s);
        values_[s * action_count + radio::action_index(a)] = v;
    }

    double max_value(std::size_t s) const
    {
        const auto r = row(s);
        return *std::max_element(r.begin(), r.end());
    }

    /// Off-policy backup toward r + discount * max_a' Q(s', a').
    void q_update(std::size_t s, Action a, double reward, std::size_t s_next)
    {
        backup(s, a, reward + discount_ * max_value(s_next));
    }

    /// On-policy backup toward r + discount * Q(s', a').
    void sarsa_update(std::size_t s, Action a, double reward, std::size_t s_next, Action a_next)
    {
        backup(s, a, reward + discount_ * at(s_next, a_next));
    }

    nn::Checkpoint checkpoint(const std::string& kind = "qtable") const
    {
        nn::Checkpoint ck;
        ck.kind = kind;
        ck.meta["n_states"] = n_states_;
        ck.meta["learning_rate"] = learning_rate_;
        ck.meta["discount"] = discount_;
        nn::BasicTensor<double> t({n_states_, action_count});
        std::copy(values_.begin(), values_.end(), t.data().begin());
        ck.add("values", t, true);
        return ck;
    }

    static QTable from_checkpoint(const nn::Checkpoint& ck)
    {
        require_config(ck.kind == "qtable" || ck.kind == "sarsa", "checkpoint kind '" + ck.kind + "' is not a q table");
        QTable q(ck.meta.at("n_states").get<std::size_t>(), ck.meta.at("learning_rate").get<double>(),
                 ck.meta.at("discount").get<double>());
        nn::BasicTensor<double> t({q.n_states_, action_count});
        ck.restore("values", t);
        std::copy(t.data().begin(), t.data().end(), q.values_.begin());
        return q;
    }

private:
    void check_state(std::size_t s) const
    {
        if (s >= n_states_) {
            throw Error("q table: state " + std::to_string(s) + " out of range (" + std::to_string(n_states_)
                        + " states)");
        }
    }

    void backup(std::size_t s, Action a, double target)
    {
        check_state(s);
        double& q = values_[s * action_count + radio::action_index(a)];
        q += learning_rate_ * (target - q);
        if (!std::isfinite(q)) {
            throw NumericError("q table: non-finite value at state " + std::to_string(s));
        }
    }

    std::size_t n_states_;
    double learning_rate_;
    double discount_;
    std::vector<double> values_;
};

/// Uniform joint action.
inline std::vector<Action> random_walk(std::size_t n_agents, Rng& rng)
{
    std::vector<Action> out(n_agents);
    for (Action& a : out) {
        a = radio::action_from_index(uniform_index(rng, action_count));
    }
    return out;
}

} // namespace airgan::agents
