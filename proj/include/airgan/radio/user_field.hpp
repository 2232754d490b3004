#pragma once

#include <algorithm>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "airgan/core/error.hpp"
#include "airgan/core/rng.hpp"
#include "airgan/radio/params.hpp"

namespace airgan::radio {

struct Position {
    double x = 0.0;
    double y = 0.0;
    friend bool operator==(const Position&, const Position&) = default;
};

/// Sampled user population. Layer indices 0..k-1 are Gaussian clusters, layer k is the
/// uniform layer.
struct UserField {
    std::vector<Position> positions;
    std::vector<int> layer_of_user;
    std::vector<Position> cluster_centers;

    std::size_t size() const { return positions.size(); }
    friend bool operator==(const UserField&, const UserField&) = default;
};

/// Two-stage layered sampler: cluster centres uniformly over the area, then axis-aligned
/// Gaussian users around each centre, then the uniform layer. Samples outside the area are
/// clamped onto its boundary.
inline UserField sample_user_field(const EnvConfig& config, std::uint64_t rng_seed)
{
    config.validate();
    Rng rng(rng_seed);
    std::uniform_real_distribution<double> along_x(0.0, config.area_length_m);
    std::uniform_real_distribution<double> along_y(0.0, config.area_width_m);
    std::normal_distribution<double> standard_normal(0.0, 1.0);
    auto clamp = [&](Position p) {
        p.x = std::clamp(p.x, 0.0, config.area_length_m);
        p.y = std::clamp(p.y, 0.0, config.area_width_m);
        return p;
    };

    UserField field;
    field.positions.reserve(static_cast<std::size_t>(config.total_users()));
    field.layer_of_user.reserve(static_cast<std::size_t>(config.total_users()));
    for (int c = 0; c < config.n_clusters; ++c) {
        const double x = along_x(rng);
        const double y = along_y(rng);
        field.cluster_centers.push_back({x, y});
    }
    for (int c = 0; c < config.n_clusters; ++c) {
        const Position centre = field.cluster_centers[static_cast<std::size_t>(c)];
        const double sigma = config.cluster_stddevs_m[static_cast<std::size_t>(c)];
        for (int u = 0; u < config.cluster_user_counts[static_cast<std::size_t>(c)]; ++u) {
            const double zx = standard_normal(rng);
            const double zy = standard_normal(rng);
            field.positions.push_back(clamp({centre.x + sigma * zx, centre.y + sigma * zy}));
            field.layer_of_user.push_back(c);
        }
    }
    for (int u = 0; u < config.uniform_user_count; ++u) {
        const double x = along_x(rng);
        const double y = along_y(rng);
        field.positions.push_back({x, y});
        field.layer_of_user.push_back(config.n_clusters);
    }
    return field;
}

// Text record, version 1:
//   airgan-userfield 1
//   centers <k>
//   <x> <y>            (k lines, hex-float)
//   users <n>
//   <layer> <x> <y>    (n lines, hex-float)
inline void write_user_field(std::ostream& os, const UserField& field)
{
    os << "airgan-userfield 1\n";
    os << "centers " << field.cluster_centers.size() << '\n';
    os << std::hexfloat;
    for (const auto& c : field.cluster_centers) {
        os << c.x << ' ' << c.y << '\n';
    }
    os << std::defaultfloat;
    os << "users " << field.positions.size() << '\n';
    os << std::hexfloat;
    for (std::size_t i = 0; i < field.positions.size(); ++i) {
        os << field.layer_of_user[i] << ' ' << field.positions[i].x << ' ' << field.positions[i].y
           << '\n';
    }
    os << std::defaultfloat;
}

inline std::string serialize_user_field(const UserField& field)
{
    std::ostringstream os;
    write_user_field(os, field);
    return os.str();
}

namespace detail {
inline double parse_double(const std::string& token)
{
    // operator>> does not accept hexfloat on libstdc++; strtod does.
    std::size_t used = 0;
    const double value = std::stod(token, &used);
    if (used != token.size()) {
        throw ConfigError("malformed number '" + token + "'");
    }
    return value;
}
} // namespace detail

inline UserField read_user_field(std::istream& is)
{
    std::string tag;
    int version = 0;
    if (!(is >> tag >> version) || tag != "airgan-userfield" || version != 1) {
        throw ConfigError("not an airgan-userfield v1 record");
    }
    UserField field;
    std::size_t count = 0;
    if (!(is >> tag >> count) || tag != "centers") {
        throw ConfigError("userfield: expected 'centers'");
    }
    for (std::size_t i = 0; i < count; ++i) {
        std::string sx, sy;
        is >> sx >> sy;
        field.cluster_centers.push_back({detail::parse_double(sx), detail::parse_double(sy)});
    }
    if (!(is >> tag >> count) || tag != "users") {
        throw ConfigError("userfield: expected 'users'");
    }
    for (std::size_t i = 0; i < count; ++i) {
        int layer = 0;
        std::string sx, sy;
        if (!(is >> layer >> sx >> sy)) {
            throw ConfigError("userfield: truncated user list");
        }
        field.layer_of_user.push_back(layer);
        field.positions.push_back({detail::parse_double(sx), detail::parse_double(sy)});
    }
    return field;
}

} // namespace airgan::radio
