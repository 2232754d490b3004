#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "airgan/core/error.hpp"
#include "airgan/radio/link.hpp"
#include "airgan/radio/world.hpp"

namespace airgan::radio {

inline constexpr int unassigned = -1;

struct ConnectivityResult {
    std::vector<int> per_agent_counts;
    int total_connected = 0;
    /// Serving agent per user, or `unassigned`.
    std::vector<int> assignment;
};

namespace detail {

// A user is a candidate of agent k when k's cone covers it and SINR_k passes the threshold;
// the user is served by its strongest candidate (lowest index on ties).
template <class RsrpFn, class CoveredFn>
ConnectivityResult assign_users(std::size_t n_users, std::size_t n_agents, const LinkModel& model,
                                RsrpFn&& signal_of, CoveredFn&& covered_by)
{
    ConnectivityResult result;
    result.per_agent_counts.assign(n_agents, 0);
    result.assignment.assign(n_users, unassigned);
    std::vector<double> signal(n_agents);
    for (std::size_t u = 0; u < n_users; ++u) {
        for (std::size_t k = 0; k < n_agents; ++k) {
            signal[k] = signal_of(k, u);
        }
        int best = unassigned;
        for (std::size_t k = 0; k < n_agents; ++k) {
            if (!covered_by(k, u)) {
                continue;
            }
            double interference = 0.0;
            for (std::size_t i = 0; i < n_agents; ++i) {
                if (i != k) {
                    interference += signal[i];
                }
            }
            if (sinr(signal[k], interference, model.noise_watts) >= model.sinr_threshold
                && (best == unassigned || signal[k] > signal[static_cast<std::size_t>(best)])) {
                best = static_cast<int>(k);
            }
        }
        if (best != unassigned) {
            result.assignment[u] = best;
            ++result.per_agent_counts[static_cast<std::size_t>(best)];
            ++result.total_connected;
        }
    }
    return result;
}

inline double horizontal_distance_sq(Position a, Position b)
{
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    return dx * dx + dy * dy;
}

} // namespace detail

/// Direct evaluation from positions; no precomputation.
inline ConnectivityResult connectivity(const WorldState& state, const RadioParams& params)
{
    state.validate();
    require(state.n_drones() >= 1, "connectivity: at least one drone required");
    const LinkModel model(params);
    const auto& users = state.user_field->positions;
    std::vector<Position> drones;
    for (const Cell& c : state.drone_cells) {
        drones.push_back(state.lattice.center(c));
    }
    const double radius_sq = model.coverage_radius_m * model.coverage_radius_m;
    return detail::assign_users(
        users.size(), drones.size(), model,
        [&](std::size_t k, std::size_t u) {
            const double h2 = detail::horizontal_distance_sq(drones[k], users[u]);
            return rsrp(model, slant_distance_m(std::sqrt(h2), model.height_gap_m));
        },
        [&](std::size_t k, std::size_t u) {
            return detail::horizontal_distance_sq(drones[k], users[u]) <= radius_sq;
        });
}

/// Per-(lattice cell, user) received power and cone coverage for one user field. The
/// values are computed with the same expressions as `connectivity`, so both paths agree
/// exactly.
class LinkTable {
public:
    LinkTable(const UserField& field, const Lattice& lattice, const LinkModel& model)
        : lattice_(lattice)
        , model_(model)
        , n_users_(field.size())
        , rsrp_(lattice.size() * field.size())
        , covered_(lattice.size() * field.size())
    {
        const double radius_sq = model.coverage_radius_m * model.coverage_radius_m;
        for (std::size_t c = 0; c < lattice.size(); ++c) {
            const Position centre = lattice.center(lattice.cell(c));
            for (std::size_t u = 0; u < n_users_; ++u) {
                const double h2 = detail::horizontal_distance_sq(centre, field.positions[u]);
                rsrp_[c * n_users_ + u] = rsrp(model, slant_distance_m(std::sqrt(h2), model.height_gap_m));
                covered_[c * n_users_ + u] = h2 <= radius_sq ? 1 : 0;
            }
        }
    }

    LinkTable(const WorldState& state, const RadioParams& params)
        : LinkTable(*state.user_field, state.lattice, LinkModel(params))
    {
    }

    const Lattice& lattice() const { return lattice_; }
    const LinkModel& model() const { return model_; }
    std::size_t n_users() const { return n_users_; }

    double rsrp_at(std::size_t cell, std::size_t user) const { return rsrp_[cell * n_users_ + user]; }
    bool covered_at(std::size_t cell, std::size_t user) const { return covered_[cell * n_users_ + user] != 0; }
    std::span<const double> rsrp_row(std::size_t cell) const { return {rsrp_.data() + cell * n_users_, n_users_}; }
    std::span<const std::uint8_t> covered_row(std::size_t cell) const
    {
        return {covered_.data() + cell * n_users_, n_users_};
    }

    ConnectivityResult connectivity(std::span<const Cell> cells) const
    {
        require(!cells.empty(), "connectivity: at least one drone required");
        std::vector<std::size_t> index;
        index.reserve(cells.size());
        for (const Cell& c : cells) {
            require(lattice_.contains(c), "connectivity: drone cell outside lattice");
            index.push_back(lattice_.index(c));
        }
        return detail::assign_users(
            n_users_, cells.size(), model_,
            [&](std::size_t k, std::size_t u) { return rsrp_[index[k] * n_users_ + u]; },
            [&](std::size_t k, std::size_t u) { return covered_[index[k] * n_users_ + u] != 0; });
    }

    /// Connected count of `agent` if it were moved to `cell`, everyone else unchanged.
    int count_if_placed(std::span<const Cell> cells, std::size_t agent, Cell cell) const
    {
        std::vector<Cell> trial(cells.begin(), cells.end());
        trial[agent] = cell;
        return connectivity(trial).per_agent_counts[agent];
    }

private:
    Lattice lattice_;
    LinkModel model_;
    std::size_t n_users_;
    std::vector<double> rsrp_;
    std::vector<std::uint8_t> covered_;
};

} // namespace airgan::radio
