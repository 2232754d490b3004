#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "airgan/core/error.hpp"
#include "airgan/nn/tensor.hpp"
#include "airgan/radio/environment.hpp"

namespace airgan::rrgan {

using nn::Tensor;

/// Users per pixel over an H x W raster of the area, divided by the largest pixel count.
/// Shape (1, 1, H, W); all zeros for an empty field.
inline Tensor density_grid(const radio::UserField& field, double area_length_m, double area_width_m,
                           std::size_t height, std::size_t width)
{
    require(area_length_m > 0.0 && area_width_m > 0.0, "density_grid: area must be positive");
    Tensor grid({1, 1, height, width});
    for (const radio::Position& p : field.positions) {
        const auto col = std::min(width - 1, static_cast<std::size_t>(std::max(0.0, p.x / area_length_m * width)));
        const auto row = std::min(height - 1, static_cast<std::size_t>(std::max(0.0, p.y / area_width_m * height)));
        grid[row * width + col] += 1.0f;
    }
    const float peak = *std::max_element(grid.data().begin(), grid.data().end());
    if (peak > 0.0f) {
        grid *= 1.0f / peak;
    }
    return grid;
}

inline Tensor density_grid(const radio::UserField& field, const radio::Lattice& lattice, std::size_t height,
                           std::size_t width)
{
    return density_grid(field, lattice.cols * lattice.step_m, lattice.rows * lattice.step_m, height, width);
}

/// Lattice cell covering pixel (h, w) of an H x W raster.
inline radio::Cell pixel_cell(std::size_t h, std::size_t w, std::size_t height, std::size_t width,
                              const radio::Lattice& lattice)
{
    return {static_cast<int>(w * static_cast<std::size_t>(lattice.cols) / width),
            static_cast<int>(h * static_cast<std::size_t>(lattice.rows) / height)};
}

/// Nearest-neighbour raster of a lattice reward map, shape (1, channels, H, W).
inline Tensor rasterize(const radio::RewardMap& map, std::size_t height, std::size_t width)
{
    const radio::Lattice lattice{map.cols, map.rows, map.resolution_m};
    Tensor out({1, static_cast<std::size_t>(map.channels), height, width});
    for (int ch = 0; ch < map.channels; ++ch) {
        for (std::size_t h = 0; h < height; ++h) {
            for (std::size_t w = 0; w < width; ++w) {
                out.at(0, static_cast<std::size_t>(ch), h, w)
                    = static_cast<float>(map.at(ch, pixel_cell(h, w, height, width, lattice)));
            }
        }
    }
    return out;
}

/// Average of the pixels falling in each lattice cell; `raster` is (1, C, H, W) or (C, H, W).
inline radio::RewardMap lattice_average(const Tensor& raster, const radio::Lattice& lattice)
{
    require(raster.rank() == 4 || raster.rank() == 3, "lattice_average: expected a (1, C, H, W) raster");
    const std::size_t off = raster.rank() - 3;
    if (off == 1) {
        require(raster.dim(0) == 1, "lattice_average: single raster expected");
    }
    const std::size_t C = raster.dim(off), H = raster.dim(off + 1), W = raster.dim(off + 2);
    require(H >= static_cast<std::size_t>(lattice.rows) && W >= static_cast<std::size_t>(lattice.cols),
            "lattice_average: raster coarser than the lattice");
    radio::RewardMap map(static_cast<int>(C), lattice);
    std::vector<int> count(lattice.size(), 0);
    for (std::size_t h = 0; h < H; ++h) {
        for (std::size_t w = 0; w < W; ++w) {
            ++count[lattice.index(pixel_cell(h, w, H, W, lattice))];
        }
    }
    for (std::size_t c = 0; c < C; ++c) {
        for (std::size_t h = 0; h < H; ++h) {
            for (std::size_t w = 0; w < W; ++w) {
                map.at(static_cast<int>(c), pixel_cell(h, w, H, W, lattice)) += raster[(c * H + h) * W + w];
            }
        }
    }
    for (std::size_t c = 0; c < C; ++c) {
        for (std::size_t i = 0; i < lattice.size(); ++i) {
            map.values[c * lattice.size() + i] /= count[i];
        }
    }
    return map;
}

/// Agent order sorted by lattice index of their cells (stable). Agents that share a start
/// are exchangeable, so maps are stored with channels in this order.
inline std::vector<std::size_t> canonical_order(std::span<const radio::Cell> cells, const radio::Lattice& lattice)
{
    std::vector<std::size_t> order(cells.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return lattice.index(cells[a]) < lattice.index(cells[b]); });
    return order;
}

inline int chebyshev(radio::Cell a, radio::Cell b) { return std::max(std::abs(a.col - b.col), std::abs(a.row - b.row)); }

} // namespace airgan::rrgan
