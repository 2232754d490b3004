#pragma once

#include <algorithm>
#include <array>
#include <compare>
#include <cstdint>
#include <memory>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "airgan/core/error.hpp"
#include "airgan/radio/params.hpp"
#include "airgan/radio/user_field.hpp"

namespace airgan::radio {

struct Cell {
    int col = 0;
    int row = 0;
    friend auto operator<=>(const Cell&, const Cell&) = default;
};

enum class Action : int { east = 0, west = 1, south = 2, north = 3, stay = 4 };

inline constexpr std::size_t action_count = 5;
inline constexpr std::array<Action, action_count> all_actions{
    Action::east, Action::west, Action::south, Action::north, Action::stay};

inline constexpr std::string_view action_name(Action a)
{
    switch (a) {
    case Action::east: return "east";
    case Action::west: return "west";
    case Action::south: return "south";
    case Action::north: return "north";
    case Action::stay: return "stay";
    }
    return "?";
}

inline Action action_from_index(std::size_t i)
{
    require(i < action_count, "action index out of range");
    return static_cast<Action>(i);
}

inline std::size_t action_index(Action a) { return static_cast<std::size_t>(a); }

/// Drone positions are the centres of a cols x rows lattice; col grows with x (east),
/// row grows with y (north).
struct Lattice {
    int cols = 10;
    int rows = 10;
    double step_m = 10.0;

    static Lattice from(const EnvConfig& config)
    {
        config.validate();
        return {config.lattice_cols(), config.lattice_rows(), config.step_size_m};
    }

    std::size_t size() const { return static_cast<std::size_t>(cols) * static_cast<std::size_t>(rows); }
    bool contains(Cell c) const { return c.col >= 0 && c.col < cols && c.row >= 0 && c.row < rows; }
    Cell clamp(Cell c) const { return {std::clamp(c.col, 0, cols - 1), std::clamp(c.row, 0, rows - 1)}; }

    std::size_t index(Cell c) const
    {
        return static_cast<std::size_t>(c.row) * static_cast<std::size_t>(cols) + static_cast<std::size_t>(c.col);
    }

    Cell cell(std::size_t linear) const
    {
        return {static_cast<int>(linear % static_cast<std::size_t>(cols)),
                static_cast<int>(linear / static_cast<std::size_t>(cols))};
    }

    Position center(Cell c) const { return {(c.col + 0.5) * step_m, (c.row + 0.5) * step_m}; }

    /// Maximum x, minimum y.
    Cell start_corner() const { return {cols - 1, 0}; }

    Cell moved(Cell c, Action a) const
    {
        switch (a) {
        case Action::east: ++c.col; break;
        case Action::west: --c.col; break;
        case Action::south: --c.row; break;
        case Action::north: ++c.row; break;
        case Action::stay: break;
        }
        return clamp(c);
    }
};

struct WorldState {
    Lattice lattice;
    std::vector<Cell> drone_cells;
    std::shared_ptr<const UserField> user_field;
    std::uint64_t tick = 0;

    std::size_t n_drones() const { return drone_cells.size(); }
    std::size_t n_users() const { return user_field ? user_field->size() : 0; }

    void validate() const
    {
        require(user_field != nullptr, "world state has no user field");
        for (const Cell& c : drone_cells) {
            require(lattice.contains(c), "drone cell outside lattice");
        }
    }
};

/// All drones placed at the start corner.
inline WorldState initial_state(const EnvConfig& config, std::shared_ptr<const UserField> field)
{
    const Lattice lattice = Lattice::from(config);
    WorldState state;
    state.lattice = lattice;
    state.drone_cells.assign(static_cast<std::size_t>(config.n_drones), lattice.start_corner());
    state.user_field = std::move(field);
    return state;
}

// Text record, version 1: "airgan-worldstate 1", lattice line, tick, drone cells, then the
// embedded user field record.
inline std::string serialize_world_state(const WorldState& state)
{
    std::ostringstream os;
    os << "airgan-worldstate 1\n";
    os << "lattice " << state.lattice.cols << ' ' << state.lattice.rows << ' ' << std::hexfloat
       << state.lattice.step_m << std::defaultfloat << '\n';
    os << "tick " << state.tick << '\n';
    os << "drones " << state.drone_cells.size() << '\n';
    for (const Cell& c : state.drone_cells) {
        os << c.col << ' ' << c.row << '\n';
    }
    if (state.user_field) {
        write_user_field(os, *state.user_field);
    }
    return os.str();
}

inline WorldState parse_world_state(const std::string& text)
{
    std::istringstream is(text);
    std::string tag;
    int version = 0;
    if (!(is >> tag >> version) || tag != "airgan-worldstate" || version != 1) {
        throw ConfigError("not an airgan-worldstate v1 record");
    }
    WorldState state;
    std::string step;
    if (!(is >> tag >> state.lattice.cols >> state.lattice.rows >> step) || tag != "lattice") {
        throw ConfigError("worldstate: expected lattice line");
    }
    state.lattice.step_m = detail::parse_double(step);
    if (!(is >> tag >> state.tick) || tag != "tick") {
        throw ConfigError("worldstate: expected tick line");
    }
    std::size_t n = 0;
    if (!(is >> tag >> n) || tag != "drones") {
        throw ConfigError("worldstate: expected drones line");
    }
    state.drone_cells.resize(n);
    for (auto& c : state.drone_cells) {
        is >> c.col >> c.row;
    }
    state.user_field = std::make_shared<const UserField>(read_user_field(is));
    state.validate();
    return state;
}

} // namespace airgan::radio
