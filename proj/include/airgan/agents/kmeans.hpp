#pragma once

#include <cstddef>
#include <limits>
#include <vector>

#include "airgan/core/error.hpp"
#include "airgan/core/rng.hpp"
#include "airgan/radio/user_field.hpp"
#include "airgan/radio/world.hpp"

namespace airgan::agents {

using radio::Position;

inline double squared_distance(Position a, Position b)
{
    const double dx = a.x - b.x, dy = a.y - b.y;
    return dx * dx + dy * dy;
}

/// Lattice action whose destination centre is strictly closest to `target`; "stay" unless
/// some move gets strictly closer.
inline radio::Action step_toward_point(const radio::Lattice& lattice, radio::Cell from, Position target)
{
    radio::Action best = radio::Action::stay;
    double best_d = squared_distance(lattice.center(from), target);
    for (radio::Action a : {radio::Action::east, radio::Action::west, radio::Action::south, radio::Action::north}) {
        const double d = squared_distance(lattice.center(lattice.moved(from, a)), target);
        if (d < best_d) {
            best_d = d;
            best = a;
        }
    }
    return best;
}

/// Lloyd iterations on per-agent centroids; agents walk one lattice step per tick toward
/// their centroid.
class KMeansController {
public:
    /// Centroids start at the agents' cell centres. An agent sharing its start with an
    /// earlier agent gets a uniformly drawn point instead, so co-located starts still split.
    KMeansController(const radio::WorldState& state, Rng& rng)
    {
        state.validate();
        const double length = state.lattice.cols * state.lattice.step_m;
        const double width = state.lattice.rows * state.lattice.step_m;
        for (std::size_t k = 0; k < state.n_drones(); ++k) {
            Position p = state.lattice.center(state.drone_cells[k]);
            for (std::size_t j = 0; j < k; ++j) {
                if (state.drone_cells[j] == state.drone_cells[k]) {
                    p = {uniform01(rng) * length, uniform01(rng) * width};
                    break;
                }
            }
            centroids_.push_back(p);
        }
        assigned_.resize(centroids_.size());
    }

    const std::vector<Position>& centroids() const { return centroids_; }
    const std::vector<std::vector<std::size_t>>& assigned_users() const { return assigned_; }

    /// One assignment and update pass. Users go to the nearest centroid (lowest index on
    /// ties); an agent left without users keeps its centroid.
    void iterate(const radio::UserField& field)
    {
        for (auto& a : assigned_) {
            a.clear();
        }
        for (std::size_t u = 0; u < field.size(); ++u) {
            assigned_[nearest(field.positions[u])].push_back(u);
        }
        for (std::size_t k = 0; k < centroids_.size(); ++k) {
            if (assigned_[k].empty()) {
                continue;
            }
            double sx = 0.0, sy = 0.0;
            for (std::size_t u : assigned_[k]) {
                sx += field.positions[u].x;
                sy += field.positions[u].y;
            }
            const double n = static_cast<double>(assigned_[k].size());
            centroids_[k] = {sx / n, sy / n};
        }
    }

    /// Sum of squared user-to-assigned-centroid distances for the current assignment.
    double objective(const radio::UserField& field) const
    {
        double total = 0.0;
        for (std::size_t k = 0; k < centroids_.size(); ++k) {
            for (std::size_t u : assigned_[k]) {
                total += squared_distance(field.positions[u], centroids_[k]);
            }
        }
        return total;
    }

    /// Iterate once, then one step per agent toward its centroid.
    std::vector<radio::Action> step(const radio::WorldState& state)
    {
        state.validate();
        require(state.n_drones() == centroids_.size(), "kmeans: agent count changed");
        require(state.n_users() > 0, "kmeans: no users");
        iterate(*state.user_field);
        std::vector<radio::Action> out;
        for (std::size_t k = 0; k < centroids_.size(); ++k) {
            out.push_back(step_toward_point(state.lattice, state.drone_cells[k], centroids_[k]));
        }
        return out;
    }

private:
    std::size_t nearest(Position p) const
    {
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < centroids_.size(); ++k) {
            const double d = squared_distance(p, centroids_[k]);
            if (d < best_d) {
                best_d = d;
                best = k;
            }
        }
        return best;
    }

    std::vector<Position> centroids_;
    std::vector<std::vector<std::size_t>> assigned_;
};

} // namespace airgan::agents
