#pragma once

#include <cmath>
#include <numbers>

#include "airgan/core/error.hpp"
#include "airgan/radio/params.hpp"

namespace airgan::radio {

inline double wavelength_m(double carrier_freq_hz) { return speed_of_light_m_per_s / carrier_freq_hz; }

/// Free-space loss factor (4 pi d / lambda)^2.
inline double path_loss(double distance_m, double carrier_freq_hz)
{
    if (!(distance_m > 0.0)) {
        throw Error("path_loss: distance must be positive");
    }
    const double ratio = 4.0 * std::numbers::pi * distance_m / wavelength_m(carrier_freq_hz);
    return ratio * ratio;
}

/// Received power in watts: EIRP c^2 / (4 pi f d)^2.
inline double rsrp(double eirp_watts, double carrier_freq_hz, double distance_m)
{
    if (!(distance_m > 0.0)) {
        throw Error("rsrp: distance must be positive");
    }
    const double denom = 4.0 * std::numbers::pi * carrier_freq_hz * distance_m;
    return eirp_watts * speed_of_light_m_per_s * speed_of_light_m_per_s / (denom * denom);
}

inline double rsrp(const RadioParams& params, double distance_m)
{
    return rsrp(params.eirp_watts, params.carrier_freq_hz, distance_m);
}

inline double rsrp(const LinkModel& model, double distance_m)
{
    return rsrp(model.eirp_watts, model.carrier_freq_hz, distance_m);
}

inline double noise_power_watts(const RadioParams& params)
{
    return params.noise_psd_w_per_hz * params.bandwidth_hz;
}

inline double sinr(double signal_watts, double interference_watts, double noise_watts)
{
    return signal_watts / (noise_watts + interference_watts);
}

/// Slant distance between a drone and a user separated horizontally by `horizontal_m`.
inline double slant_distance_m(double horizontal_m, double height_gap_m)
{
    return std::sqrt(horizontal_m * horizontal_m + height_gap_m * height_gap_m);
}

} // namespace airgan::radio
