#pragma once

#include <cstdlib>
#include <span>
#include <utility>
#include <vector>

#include "airgan/core/rng.hpp"
#include "airgan/rrgan/trainer.hpp"

namespace airgan::rrgan {

/// Generator output at raster and lattice resolution.
struct PredictedRewardMap {
    Tensor raster;            // (1, n, H, W)
    radio::RewardMap lattice; // per-cell average of the raster
};

/// Lattice move that most reduces the L-infinity distance to `target` (then L1); ties go
/// to the x-axis moves, and "stay" once at the target.
inline radio::Action step_toward(const radio::Lattice& lattice, radio::Cell from, radio::Cell target)
{
    if (from == target) {
        return radio::Action::stay;
    }
    auto score = [&](radio::Cell c) {
        const int dx = std::abs(c.col - target.col), dy = std::abs(c.row - target.row);
        return std::pair{std::max(dx, dy), dx + dy};
    };
    radio::Action best = radio::Action::stay;
    auto best_score = score(from);
    for (radio::Action a : {radio::Action::east, radio::Action::west, radio::Action::south, radio::Action::north}) {
        const auto s = score(lattice.moved(from, a));
        if (s < best_score) {
            best_score = s;
            best = a;
        }
    }
    return best;
}

struct ActPlan {
    PredictedRewardMap prediction;
    std::vector<radio::Cell> targets;
    std::vector<radio::Action> actions;
};

/// Agent k heads for the argmax of channel k (ties to the lowest linear cell index).
inline ActPlan plan_from_prediction(PredictedRewardMap prediction, const radio::WorldState& world)
{
    require(static_cast<std::size_t>(prediction.lattice.channels) == world.n_drones(),
            "predict_and_act: map channel count differs from the number of drones");
    ActPlan plan;
    for (std::size_t k = 0; k < world.n_drones(); ++k) {
        const radio::Cell target = prediction.lattice.argmax(static_cast<int>(k));
        plan.targets.push_back(target);
        plan.actions.push_back(step_toward(world.lattice, world.drone_cells[k], target));
    }
    plan.prediction = std::move(prediction);
    return plan;
}

inline PredictedRewardMap predict_reward_map(GanTrainer& model, const Tensor& environment, const Tensor& experience,
                                             const radio::Lattice& lattice)
{
    PredictedRewardMap p;
    p.raster = model.predict(environment, experience);
    p.lattice = lattice_average(p.raster, lattice);
    return p;
}

/// Joint action toward the predicted optimum for the state's user field.
inline ActPlan predict_and_act(GanTrainer& model, const radio::WorldState& world, Rng& rng)
{
    world.validate();
    const auto& g = model.config().generator;
    const Tensor environment = density_grid(*world.user_field, world.lattice, g.height, g.width);
    return plan_from_prediction(predict_reward_map(model, environment, model.experience_input(rng), world.lattice),
                                world);
}

} // namespace airgan::rrgan
