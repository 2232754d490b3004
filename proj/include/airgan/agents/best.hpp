#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "airgan/core/error.hpp"
#include "airgan/core/rng.hpp"
#include "airgan/radio/connectivity.hpp"

namespace airgan::agents {

using radio::Cell;

struct BestPlacement {
    std::vector<Cell> cells;
    int total_connected = 0;
    bool exhaustive = false;
};

struct BestOptions {
    /// Exhaustive joint search up to this many drones, hill climbing above.
    std::size_t exhaustive_max_drones = 4;
    std::size_t restarts = 32;
    std::uint64_t seed = 0;
};

/// Total connected count over joint placements, evaluated incrementally from a link table.
///
/// A user is connected iff its strongest station covers it and passes the SINR threshold:
/// cone radius is shared, and SINR_k = r_k / (N + S - r_k) grows with r_k, so no weaker
/// station can pass when the strongest fails. Interference is S - r_max here rather than a
/// sum over the others, so totals can differ from `connectivity` by rounding at the
/// threshold boundary; final placements are re-scored exactly.
class PlacementScorer {
public:
    explicit PlacementScorer(const radio::LinkTable& table)
        : table_(table)
        , n_users_(table.n_users())
    {
    }

    struct Partial {
        std::vector<double> sum, strongest;
        std::vector<std::uint8_t> covered;
    };

    Partial empty() const { return {std::vector<double>(n_users_, 0.0), std::vector<double>(n_users_, -1.0), std::vector<std::uint8_t>(n_users_, 0)}; }

    void add(const Partial& in, std::size_t cell, Partial& out) const
    {
        const auto r = table_.rsrp_row(cell);
        const auto c = table_.covered_row(cell);
        out.sum.resize(n_users_);
        out.strongest.resize(n_users_);
        out.covered.resize(n_users_);
        for (std::size_t u = 0; u < n_users_; ++u) {
            out.sum[u] = in.sum[u] + r[u];
            const bool stronger = r[u] > in.strongest[u];
            out.strongest[u] = stronger ? r[u] : in.strongest[u];
            out.covered[u] = stronger ? c[u] : in.covered[u];
        }
    }

    int total(const Partial& p) const
    {
        const double noise = table_.model().noise_watts, thr = table_.model().sinr_threshold;
        int n = 0;
        for (std::size_t u = 0; u < n_users_; ++u) {
            const double s = p.strongest[u];
            n += (p.covered[u] && s >= thr * (noise + (p.sum[u] - s))) ? 1 : 0;
        }
        return n;
    }

    /// Total with `cell` added to `p`, without materialising the result.
    int total_with(const Partial& p, std::size_t cell) const
    {
        const auto r = table_.rsrp_row(cell);
        const auto c = table_.covered_row(cell);
        const double noise = table_.model().noise_watts, thr = table_.model().sinr_threshold;
        int n = 0;
        for (std::size_t u = 0; u < n_users_; ++u) {
            const double sum = p.sum[u] + r[u];
            const bool stronger = r[u] > p.strongest[u];
            const double s = stronger ? r[u] : p.strongest[u];
            const bool cov = stronger ? c[u] != 0 : p.covered[u] != 0;
            n += (cov && s >= thr * (noise + (sum - s))) ? 1 : 0;
        }
        return n;
    }

    Partial of(std::span<const std::size_t> cells) const
    {
        Partial p = empty(), next;
        for (std::size_t c : cells) {
            add(p, c, next);
            std::swap(p, next);
        }
        return p;
    }

    int total(std::span<const std::size_t> cells) const { return total(of(cells)); }

private:
    const radio::LinkTable& table_;
    std::size_t n_users_;
};

namespace detail {

// Nondecreasing cell index tuples only: drones are interchangeable.
inline void exhaustive_search(const PlacementScorer& scorer, std::size_t n_cells, std::size_t n_drones,
                              std::vector<PlacementScorer::Partial>& partials, std::vector<std::size_t>& chosen,
                              std::size_t first, int& best, std::vector<std::size_t>& best_cells)
{
    const std::size_t depth = chosen.size();
    if (depth + 1 == n_drones) {
        for (std::size_t c = first; c < n_cells; ++c) {
            const int t = scorer.total_with(partials[depth], c);
            if (t > best) {
                best = t;
                best_cells = chosen;
                best_cells.push_back(c);
            }
        }
        return;
    }
    for (std::size_t c = first; c < n_cells; ++c) {
        scorer.add(partials[depth], c, partials[depth + 1]);
        chosen.push_back(c);
        exhaustive_search(scorer, n_cells, n_drones, partials, chosen, c, best, best_cells);
        chosen.pop_back();
    }
}

// Coordinate ascent: each drone in turn moves to its best cell given the others, until a
// full sweep changes nothing.
inline int hill_climb(const PlacementScorer& scorer, std::size_t n_cells, std::vector<std::size_t>& cells)
{
    int current = scorer.total(cells);
    bool improved = true;
    while (improved) {
        improved = false;
        for (std::size_t k = 0; k < cells.size(); ++k) {
            std::vector<std::size_t> others = cells;
            others.erase(others.begin() + static_cast<std::ptrdiff_t>(k));
            const auto base = scorer.of(others);
            std::size_t best_cell = cells[k];
            int best = current;
            for (std::size_t c = 0; c < n_cells; ++c) {
                const int t = scorer.total_with(base, c);
                if (t > best) {
                    best = t;
                    best_cell = c;
                }
            }
            if (best_cell != cells[k]) {
                cells[k] = best_cell;
                current = best;
                improved = true;
            }
        }
    }
    return current;
}

} // namespace detail

/// Best joint placement: exact for up to `exhaustive_max_drones` drones, otherwise the best
/// of multi-restart hill climbing (random starts plus every `warm_starts` placement).
inline BestPlacement theoretical_best(const radio::LinkTable& table, std::size_t n_drones,
                                      const BestOptions& options = {},
                                      std::span<const std::vector<Cell>> warm_starts = {})
{
    require(n_drones >= 1, "theoretical_best: at least one drone");
    const radio::Lattice& lattice = table.lattice();
    const std::size_t n_cells = lattice.size();
    const PlacementScorer scorer(table);
    std::vector<std::size_t> best_cells(n_drones, lattice.index(lattice.start_corner()));
    int best = scorer.total(best_cells);
    BestPlacement out;

    if (n_drones <= options.exhaustive_max_drones) {
        std::vector<PlacementScorer::Partial> partials(n_drones);
        partials[0] = scorer.empty();
        std::vector<std::size_t> chosen;
        best = -1;
        detail::exhaustive_search(scorer, n_cells, n_drones, partials, chosen, 0, best, best_cells);
        out.exhaustive = true;
    } else {
        Rng rng(options.seed);
        auto consider = [&](std::vector<std::size_t> cells) {
            const int t = detail::hill_climb(scorer, n_cells, cells);
            if (t > best) {
                best = t;
                best_cells = cells;
            }
        };
        for (const auto& w : warm_starts) {
            require(w.size() == n_drones, "theoretical_best: warm start has the wrong drone count");
            std::vector<std::size_t> cells;
            for (const Cell& c : w) {
                cells.push_back(lattice.index(c));
            }
            consider(cells);
        }
        for (std::size_t r = 0; r < options.restarts; ++r) {
            std::vector<std::size_t> cells(n_drones);
            for (auto& c : cells) {
                c = uniform_index(rng, n_cells);
            }
            consider(cells);
        }
    }
    for (std::size_t c : best_cells) {
        out.cells.push_back(lattice.cell(c));
    }
    out.total_connected = table.connectivity(out.cells).total_connected;
    return out;
}

} // namespace airgan::agents
