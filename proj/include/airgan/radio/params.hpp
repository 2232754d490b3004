#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include "airgan/core/error.hpp"

namespace airgan::radio {

inline constexpr double speed_of_light_m_per_s = 299792458.0;

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watts_to_dbm(double watts) { return 10.0 * std::log10(watts) + 30.0; }

/// Communication parameters. Defaults are the reference deployment: 0 dB SINR floor,
/// 60 degree directivity, 2.4 GHz carrier, 40 dBm EIRP, 200 kHz, 10^-20.4 W/Hz noise,
/// users at 1.5 m and drones at 30 m.
struct RadioParams {
    double sinr_threshold_db = 0.0;
    double antenna_directivity_deg = 60.0;
    double carrier_freq_hz = 2.4e9;
    double eirp_watts = 10.0;
    double bandwidth_hz = 200e3;
    double noise_psd_w_per_hz = 3.981071705534969e-21;
    double user_height_m = 1.5;
    double drone_height_m = 30.0;

    void validate() const
    {
        require_config(antenna_directivity_deg > 0.0 && antenna_directivity_deg < 90.0,
                       "antenna_directivity_deg must lie in (0, 90)");
        require_config(carrier_freq_hz > 0.0, "carrier_freq_hz must be positive");
        require_config(eirp_watts > 0.0, "eirp_watts must be positive");
        require_config(bandwidth_hz > 0.0, "bandwidth_hz must be positive");
        require_config(noise_psd_w_per_hz > 0.0, "noise_psd_w_per_hz must be positive");
        require_config(user_height_m > 0.0, "user_height_m must be positive");
        require_config(drone_height_m > user_height_m, "drone_height_m must exceed user_height_m");
        require_config(std::isfinite(sinr_threshold_db), "sinr_threshold_db must be finite");
    }
};

/// Linear-unit view of RadioParams, converted once.
struct LinkModel {
    double eirp_watts;
    double carrier_freq_hz;
    double noise_watts;
    double sinr_threshold;
    double height_gap_m;
    double coverage_radius_m;

    explicit LinkModel(const RadioParams& p)
        : eirp_watts(p.eirp_watts)
        , carrier_freq_hz(p.carrier_freq_hz)
        , noise_watts(p.noise_psd_w_per_hz * p.bandwidth_hz)
        , sinr_threshold(db_to_linear(p.sinr_threshold_db))
        , height_gap_m(p.drone_height_m - p.user_height_m)
        , coverage_radius_m((p.drone_height_m - p.user_height_m)
                            * std::tan(p.antenna_directivity_deg * std::numbers::pi / 180.0))
    {
        p.validate();
    }
};

/// Area, lattice and user-population layout of one environment.
struct EnvConfig {
    double area_length_m = 100.0;
    double area_width_m = 100.0;
    double step_size_m = 10.0;
    int n_clusters = 3;
    std::vector<int> cluster_user_counts{300, 250, 200};
    std::vector<double> cluster_stddevs_m{10.0, 7.0, 6.0};
    int uniform_user_count = 300;
    int n_drones = 1;
    std::uint64_t seed = 19;

    int total_users() const
    {
        return std::accumulate(cluster_user_counts.begin(), cluster_user_counts.end(), 0)
            + uniform_user_count;
    }

    int lattice_cols() const { return static_cast<int>(std::lround(area_length_m / step_size_m)); }
    int lattice_rows() const { return static_cast<int>(std::lround(area_width_m / step_size_m)); }

    void validate() const
    {
        require_config(area_length_m > 0.0 && area_width_m > 0.0, "area dimensions must be positive");
        require_config(step_size_m > 0.0, "step_size_m must be positive");
        auto divisible = [&](double extent) {
            const double cells = extent / step_size_m;
            return std::abs(cells - std::round(cells)) < 1e-9 && std::round(cells) >= 1.0;
        };
        require_config(divisible(area_length_m) && divisible(area_width_m),
                       "area dimensions must be divisible by step_size_m");
        require_config(n_clusters >= 0, "n_clusters must be non-negative");
        require_config(cluster_user_counts.size() == static_cast<std::size_t>(n_clusters)
                           && cluster_stddevs_m.size() == static_cast<std::size_t>(n_clusters),
                       "cluster_user_counts and cluster_stddevs_m must both have n_clusters entries");
        for (int c : cluster_user_counts) {
            require_config(c >= 0, "cluster user counts must be non-negative");
        }
        for (double s : cluster_stddevs_m) {
            require_config(s >= 0.0 && std::isfinite(s), "cluster stddevs must be non-negative");
        }
        require_config(uniform_user_count >= 0, "uniform_user_count must be non-negative");
        require_config(n_drones >= 1, "n_drones must be at least 1");
    }

    /// Same total population spread over a different number of Gaussian layers; the
    /// uniform layer is kept and the Gaussian share is split evenly.
    EnvConfig with_cluster_count(int clusters) const
    {
        EnvConfig out = *this;
        const int gaussian_total = total_users() - uniform_user_count;
        out.n_clusters = clusters;
        out.cluster_user_counts.assign(static_cast<std::size_t>(clusters), 0);
        out.cluster_stddevs_m.assign(static_cast<std::size_t>(clusters), 0.0);
        if (clusters == 0) {
            out.uniform_user_count += gaussian_total;
            return out;
        }
        for (int i = 0; i < clusters; ++i) {
            out.cluster_user_counts[static_cast<std::size_t>(i)]
                = gaussian_total / clusters + (i < gaussian_total % clusters ? 1 : 0);
            out.cluster_stddevs_m[static_cast<std::size_t>(i)] = cluster_stddevs_m.empty()
                ? 8.0
                : cluster_stddevs_m[static_cast<std::size_t>(i) % cluster_stddevs_m.size()];
        }
        return out;
    }
};

} // namespace airgan::radio
