#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "airgan/core/error.hpp"
#include "airgan/core/hash.hpp"
#include "airgan/core/rng.hpp"
#include "airgan/rrgan/grid.hpp"

namespace airgan::rrgan {

/// One stored (environment, reward map) pair, rasterised to the generator resolution.
struct Experience {
    Tensor environment; // (1, 1, H, W)
    Tensor reward_map;  // (1, n, H, W)
    std::uint64_t field_digest = 0;
};

/// Bounded ring of experiences; the oldest entry is overwritten when full.
class ExperienceStore {
public:
    explicit ExperienceStore(std::size_t capacity = 512)
        : capacity_(capacity)
    {
        require_config(capacity >= 1, "experience store capacity must be positive");
    }

    std::size_t capacity() const { return capacity_; }
    std::size_t size() const { return items_.size(); }
    bool empty() const { return items_.empty(); }
    const Experience& at(std::size_t i) const { return items_.at(i); }

    void push(Experience e)
    {
        if (!items_.empty()) {
            e.environment.require_same_shape(items_.front().environment, "experience store");
            e.reward_map.require_same_shape(items_.front().reward_map, "experience store");
        }
        if (items_.size() < capacity_) {
            items_.push_back(std::move(e));
        } else {
            items_[next_] = std::move(e);
            next_ = (next_ + 1) % capacity_;
        }
    }

    std::size_t sample_index(Rng& rng) const
    {
        require(!items_.empty(), "experience store is empty");
        return uniform_index(rng, items_.size());
    }

    /// Uniformly chosen stored reward map, or zeros shaped like `shape` when empty.
    Tensor random_map(Rng& rng, const nn::Shape& shape) const
    {
        if (items_.empty()) {
            return Tensor(shape);
        }
        return items_[sample_index(rng)].reward_map;
    }

private:
    std::size_t capacity_;
    std::size_t next_ = 0;
    std::vector<Experience> items_;
};

/// Experience from a greedy exploration: channels in canonical order of the final cells.
inline Experience make_experience(const radio::RadioEnvironment& env, const radio::GreedyResult& greedy,
                                  std::size_t height, std::size_t width)
{
    const auto order = canonical_order(greedy.final_state.drone_cells, env.lattice());
    Experience e;
    e.environment = density_grid(*env.field(), env.lattice(), height, width);
    e.reward_map = rasterize(greedy.observations.permuted(order), height, width);
    e.field_digest = fnv1a(radio::serialize_user_field(*env.field()));
    return e;
}

/// Held-out field with the oracle map at the greedy final placement, canonical channels.
struct HoldoutSample {
    Tensor environment;
    radio::RewardMap oracle;
};

inline HoldoutSample make_holdout(const radio::RadioEnvironment& env, const radio::GreedyResult& greedy,
                                  std::size_t height, std::size_t width)
{
    const auto& cells = greedy.final_state.drone_cells;
    const auto order = canonical_order(cells, env.lattice());
    return {density_grid(*env.field(), env.lattice(), height, width), env.oracle_reward_map(cells).permuted(order)};
}

} // namespace airgan::rrgan
