#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "airgan/agents/tabular.hpp"
#include "airgan/core/error.hpp"
#include "airgan/core/rng.hpp"
#include "airgan/nn/checkpoint.hpp"
#include "airgan/nn/network.hpp"
#include "airgan/nn/optim.hpp"
#include "airgan/radio/user_field.hpp"
#include "airgan/radio/world.hpp"

namespace airgan::agents {

/// Agent-centred user-density crop, shape (1, crop, crop); shared between replay entries.
using Observation = std::shared_ptr<const nn::Tensor>;

struct DqnConfig {
    std::size_t crop = 25;
    std::size_t conv1 = 16;
    std::size_t conv2 = 32;
    std::size_t hidden = 128;
    std::size_t replay_capacity = 10000;
    std::size_t batch_size = 32;
    std::size_t sync_interval = 250;
    /// Gradient step every this many transitions.
    std::size_t train_every = 1;
    double discount = 0.5;
    /// Multiplies rewards before the regression target is formed.
    double reward_scale = 1.0;
    nn::OptimizerConfig optimizer{nn::OptimizerKind::adam, 1e-3};
    std::uint64_t seed = 0;

    static DqnConfig desk()
    {
        DqnConfig c;
        c.crop = 12;
        c.conv1 = 8;
        c.conv2 = 16;
        c.hidden = 32;
        c.replay_capacity = 2000;
        c.batch_size = 16;
        c.sync_interval = 100;
        c.train_every = 4;
        return c;
    }

    void validate() const
    {
        require_config(crop >= 4, "dqn crop must be at least 4 pixels");
        require_config(conv1 >= 1 && conv2 >= 1 && hidden >= 1, "dqn layer widths must be positive");
        require_config(replay_capacity >= 1 && batch_size >= 1, "dqn replay capacity and batch size must be positive");
        require_config(sync_interval >= 1 && train_every >= 1, "dqn sync and train intervals must be positive");
        require_config(discount >= 0.0 && discount < 1.0, "dqn discount must lie in [0, 1)");
        optimizer.validate();
    }
};

struct Transition {
    Observation observation;
    Action action = Action::stay;
    double reward = 0.0;
    Observation next_observation;
    bool terminal = false;
};

/// Per-cell observations for one field. The window is twice the area's larger extent,
/// centred on the cell, so the whole field is always in view; values are counts over the
/// largest count seen in any window.
inline std::vector<Observation> dqn_observations(const radio::UserField& field, const radio::Lattice& lattice,
                                                 std::size_t crop)
{
    const double span = 2.0 * std::max(lattice.cols, lattice.rows) * lattice.step_m;
    const double bin = span / static_cast<double>(crop);
    std::vector<nn::Tensor> grids;
    float peak = 0.0f;
    for (std::size_t c = 0; c < lattice.size(); ++c) {
        const radio::Position centre = lattice.center(lattice.cell(c));
        nn::Tensor g({1, crop, crop});
        for (const radio::Position& p : field.positions) {
            const double fx = (p.x - centre.x) / bin + 0.5 * static_cast<double>(crop);
            const double fy = (p.y - centre.y) / bin + 0.5 * static_cast<double>(crop);
            if (fx < 0.0 || fy < 0.0 || fx >= static_cast<double>(crop) || fy >= static_cast<double>(crop)) {
                continue;
            }
            float& v = g[static_cast<std::size_t>(fy) * crop + static_cast<std::size_t>(fx)];
            v += 1.0f;
            peak = std::max(peak, v);
        }
        grids.push_back(std::move(g));
    }
    std::vector<Observation> out;
    for (auto& g : grids) {
        if (peak > 0.0f) {
            g *= 1.0f / peak;
        }
        out.push_back(std::make_shared<const nn::Tensor>(std::move(g)));
    }
    return out;
}

/// Online/target value-network pair with a ring replay buffer.
class DqnModel {
public:
    explicit DqnModel(const DqnConfig& config)
        : config_(config)
        , rng_(mix_seed(config.seed, 1))
        , optimizer_(config.optimizer)
    {
        config_.validate();
        Rng init(mix_seed(config.seed, 0));
        const std::size_t reduced = config.crop / 2 / 2;
        online_.emplace<nn::Conv2d<float>>(1, config.conv1, 3, 3, 1, init);
        online_.emplace<nn::ReLU<float>>();
        online_.emplace<nn::MaxPool2d<float>>();
        online_.emplace<nn::Conv2d<float>>(config.conv1, config.conv2, 3, 3, 1, init);
        online_.emplace<nn::ReLU<float>>();
        online_.emplace<nn::MaxPool2d<float>>();
        online_.emplace<nn::Linear<float>>(config.conv2 * reduced * reduced, config.hidden, init);
        online_.emplace<nn::ReLU<float>>();
        online_.emplace<nn::Linear<float>>(config.hidden, action_count, init);
        target_ = online_;
    }

    const DqnConfig& config() const { return config_; }
    std::size_t steps() const { return steps_; }
    std::size_t replay_size() const { return replay_.size(); }
    nn::Sequential<float>& online() { return online_; }
    nn::Sequential<float>& target() { return target_; }

    std::vector<double> q_values(const Observation& obs) { return evaluate(online_, obs); }
    std::vector<double> target_values(const Observation& obs) { return evaluate(target_, obs); }

    struct StepResult {
        bool trained = false;
        double loss = 0.0;
    };

    /// Stores the transition, then trains and syncs on their schedules.
    StepResult step(Transition t)
    {
        check_observation(t.observation);
        check_observation(t.next_observation);
        if (replay_.size() < config_.replay_capacity) {
            replay_.push_back(std::move(t));
        } else {
            replay_[next_slot_] = std::move(t);
        }
        next_slot_ = (next_slot_ + 1) % config_.replay_capacity;
        ++steps_;
        StepResult out;
        if (steps_ % config_.train_every == 0) {
            out.trained = true;
            out.loss = train_batch();
        }
        if (steps_ % config_.sync_interval == 0) {
            target_ = online_;
        }
        return out;
    }

    /// One regression step on a batch drawn with replacement; returns the half mean
    /// squared error before the update.
    double train_batch()
    {
        require(!replay_.empty(), "dqn: replay buffer is empty");
        const std::size_t b = config_.batch_size, c = config_.crop, plane = c * c;
        nn::Tensor obs({b, 1, c, c}), next({b, 1, c, c});
        std::vector<const Transition*> batch;
        for (std::size_t i = 0; i < b; ++i) {
            const Transition& t = replay_[uniform_index(rng_, replay_.size())];
            std::copy(t.observation->data().begin(), t.observation->data().end(), obs.raw() + i * plane);
            std::copy(t.next_observation->data().begin(), t.next_observation->data().end(), next.raw() + i * plane);
            batch.push_back(&t);
        }
        const nn::PassContext ctx{nn::Mode::eval};
        const nn::Tensor next_q = target_.forward(next, ctx);
        std::vector<nn::LayerCache<float>> caches;
        const nn::Tensor q = online_.forward(obs, ctx, caches);
        nn::Tensor grad(q.shape());
        double loss = 0.0;
        for (std::size_t i = 0; i < b; ++i) {
            const Transition& t = *batch[i];
            double y = config_.reward_scale * t.reward;
            if (!t.terminal) {
                y += config_.discount
                    * *std::max_element(next_q.data().begin() + static_cast<std::ptrdiff_t>(i * action_count),
                                        next_q.data().begin() + static_cast<std::ptrdiff_t>((i + 1) * action_count));
            }
            const std::size_t j = i * action_count + radio::action_index(t.action);
            const double err = q[j] - y;
            loss += 0.5 * err * err / static_cast<double>(b);
            grad[j] = static_cast<float>(err / static_cast<double>(b));
        }
        if (!std::isfinite(loss)) {
            throw NumericError("dqn: non-finite loss");
        }
        online_.zero_grad();
        online_.backward(caches, grad);
        optimizer_.step(online_.parameters());
        return loss;
    }

    /// Network weights only; the replay buffer and optimizer moments are not saved.
    nn::Checkpoint checkpoint()
    {
        nn::Checkpoint ck;
        ck.kind = "dqn";
        ck.layers = online_.specs();
        ck.meta["crop"] = config_.crop;
        ck.meta["steps"] = steps_;
        nn::add_network_state(ck, online_.parameters("online."), online_.buffers("online."));
        nn::add_network_state(ck, target_.parameters("target."), target_.buffers("target."));
        return ck;
    }

    void restore(const nn::Checkpoint& ck)
    {
        require_config(ck.kind == "dqn", "checkpoint kind '" + ck.kind + "' is not dqn");
        require_config(ck.layers == online_.specs(), "dqn checkpoint architecture differs from the config");
        nn::restore_network_state(ck, online_.parameters("online."), online_.buffers("online."));
        nn::restore_network_state(ck, target_.parameters("target."), target_.buffers("target."));
        steps_ = ck.meta.value("steps", std::size_t{0});
    }

private:
    void check_observation(const Observation& obs) const
    {
        require(obs != nullptr, "dqn: missing observation");
        if (obs->shape() != nn::Shape{1, config_.crop, config_.crop}) {
            throw ShapeError("dqn: observation shape " + nn::shape_string(obs->shape()) + " does not match crop "
                             + std::to_string(config_.crop));
        }
    }

    std::vector<double> evaluate(nn::Sequential<float>& net, const Observation& obs) const
    {
        check_observation(obs);
        const nn::Tensor q = net.forward(obs->reshaped({1, 1, config_.crop, config_.crop}), nn::PassContext{nn::Mode::eval});
        return {q.data().begin(), q.data().end()};
    }

    DqnConfig config_;
    Rng rng_;
    nn::Optimizer<float> optimizer_;
    nn::Sequential<float> online_;
    nn::Sequential<float> target_;
    std::vector<Transition> replay_;
    std::size_t next_slot_ = 0;
    std::size_t steps_ = 0;
};

} // namespace airgan::agents
