#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "airgan/core/error.hpp"
#include "airgan/nn/network.hpp"

namespace airgan::rrgan {

struct ConsensusConfig {
    /// Weight of the gradient-of-squared-norm term; 0 gives plain simultaneous updates.
    /// Network curvature along the gradient is ~1e4 times the gradient norm, hence the scale.
    double gamma = 1e-5;
    /// Finite-difference step along each player's unit gradient direction.
    double probe_step = 1e-3;
    /// Apply the consensus term every `interval` updates (1 = every update).
    std::size_t interval = 1;

    void validate() const
    {
        require_config(gamma >= 0.0, "consensus gamma must be non-negative");
        require_config(probe_step > 0.0, "consensus probe step must be positive");
        require_config(interval >= 1, "consensus interval must be at least 1");
    }
};

/// Two-player game with an exact Jacobian of its game vector: v(x) stacks each player's
/// gradient of its own loss with respect to its own parameters.
struct DifferentiableGame {
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> game_vector;
    std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> jacobian;
};

/// Generator minimises f = theta . phi, discriminator minimises -f.
inline DifferentiableGame bilinear_game(std::size_t dim = 1)
{
    const auto d = static_cast<Eigen::Index>(dim);
    DifferentiableGame g;
    g.game_vector = [d](const Eigen::VectorXd& x) {
        Eigen::VectorXd v(2 * d);
        v.head(d) = x.tail(d);
        v.tail(d) = -x.head(d);
        return v;
    };
    g.jacobian = [d](const Eigen::VectorXd&) {
        Eigen::MatrixXd j = Eigen::MatrixXd::Zero(2 * d, 2 * d);
        j.topRightCorner(d, d).setIdentity();
        j.bottomLeftCorner(d, d) = -Eigen::MatrixXd::Identity(d, d);
        return j;
    };
    return g;
}

/// x <- x - alpha * v(x) - gamma * J(x)^T v(x); the last term is the gradient of
/// 0.5 * |v(x)|^2.
inline Eigen::VectorXd consensus_step(const DifferentiableGame& game, const Eigen::VectorXd& x, double alpha,
                                      double gamma)
{
    const Eigen::VectorXd v = game.game_vector(x);
    Eigen::VectorXd next = x - alpha * v;
    if (gamma != 0.0) {
        next -= gamma * (game.jacobian(x).transpose() * v);
    }
    return next;
}

namespace detail {

template <class T>
std::vector<float> flatten_grads(const std::vector<nn::Parameter<T>>& params)
{
    std::vector<float> out;
    out.reserve(nn::parameter_count(params));
    for (const auto& p : params) {
        out.insert(out.end(), p.grad->data().begin(), p.grad->data().end());
    }
    return out;
}

template <class T>
void write_grads(const std::vector<nn::Parameter<T>>& params, const std::vector<float>& flat)
{
    std::size_t k = 0;
    for (const auto& p : params) {
        for (T& g : p.grad->data()) {
            g = static_cast<T>(flat.at(k++));
        }
    }
}

// values += scale * direction
template <class T>
void displace(const std::vector<nn::Parameter<T>>& params, const std::vector<float>& direction, double scale)
{
    std::size_t k = 0;
    for (const auto& p : params) {
        for (T& v : p.value->data()) {
            v = static_cast<T>(v + scale * direction.at(k++));
        }
    }
}

inline double norm(const std::vector<float>& v)
{
    double s = 0.0;
    for (float x : v) {
        s += static_cast<double>(x) * x;
    }
    return std::sqrt(s);
}

inline bool all_finite(const std::vector<float>& v)
{
    for (float x : v) {
        if (!std::isfinite(x)) {
            return false;
        }
    }
    return true;
}

} // namespace detail

} // namespace airgan::rrgan
