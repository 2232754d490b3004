#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "airgan/core/error.hpp"
#include "airgan/nn/network.hpp"

namespace airgan::nn {

enum class OptimizerKind { sgd, adam, rmsprop };

inline const char* optimizer_name(OptimizerKind k)
{
    switch (k) {
    case OptimizerKind::sgd: return "sgd";
    case OptimizerKind::adam: return "adam";
    case OptimizerKind::rmsprop: return "rmsprop";
    }
    return "?";
}

inline OptimizerKind optimizer_from_name(const std::string& s)
{
    if (s == "sgd") {
        return OptimizerKind::sgd;
    }
    if (s == "adam") {
        return OptimizerKind::adam;
    }
    if (s == "rmsprop") {
        return OptimizerKind::rmsprop;
    }
    throw ConfigError("unknown optimizer '" + s + "'");
}

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::adam;
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    /// RMSProp squared-gradient decay.
    double decay = 0.9;
    double epsilon = 1e-8;

    void validate() const
    {
        require_config(learning_rate > 0.0, "learning rate must be positive");
        require_config(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0, "adam betas must lie in [0, 1)");
        require_config(decay >= 0.0 && decay < 1.0, "rmsprop decay must lie in [0, 1)");
        require_config(epsilon > 0.0, "optimizer epsilon must be positive");
    }
};

/// First-order optimizer over a fixed parameter list; applies the gradients currently
/// stored in each Parameter::grad.
template <class T>
class Optimizer {
public:
    explicit Optimizer(OptimizerConfig config = {})
        : config_(config)
    {
        config_.validate();
    }

    const OptimizerConfig& config() const { return config_; }
    std::size_t steps() const { return steps_; }

    void step(const std::vector<Parameter<T>>& params)
    {
        if (first_.empty()) {
            for (const auto& p : params) {
                first_.emplace_back(p.value->shape());
                second_.emplace_back(p.value->shape());
            }
        }
        require(first_.size() == params.size(), "optimizer: parameter list changed between steps");
        ++steps_;
        const double lr = config_.learning_rate;
        const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
        const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
        for (std::size_t i = 0; i < params.size(); ++i) {
            BasicTensor<T>& value = *params[i].value;
            const BasicTensor<T>& grad = *params[i].grad;
            value.require_same_shape(grad, "optimizer step");
            BasicTensor<T>& m = first_[i];
            BasicTensor<T>& v = second_[i];
            for (std::size_t j = 0; j < value.size(); ++j) {
                const double g = grad[j];
                switch (config_.kind) {
                case OptimizerKind::sgd: value[j] = static_cast<T>(value[j] - lr * g); break;
                case OptimizerKind::adam: {
                    const double mj = config_.beta1 * m[j] + (1.0 - config_.beta1) * g;
                    const double vj = config_.beta2 * v[j] + (1.0 - config_.beta2) * g * g;
                    m[j] = static_cast<T>(mj);
                    v[j] = static_cast<T>(vj);
                    value[j] = static_cast<T>(value[j] - lr * (mj / c1) / (std::sqrt(vj / c2) + config_.epsilon));
                    break;
                }
                case OptimizerKind::rmsprop: {
                    const double vj = config_.decay * v[j] + (1.0 - config_.decay) * g * g;
                    v[j] = static_cast<T>(vj);
                    value[j] = static_cast<T>(value[j] - lr * g / (std::sqrt(vj) + config_.epsilon));
                    break;
                }
                }
            }
        }
    }

    void reset()
    {
        first_.clear();
        second_.clear();
        steps_ = 0;
    }

    // Moment buffers for checkpointing; empty before the first step.
    std::vector<BasicTensor<T>>& first_moments() { return first_; }
    std::vector<BasicTensor<T>>& second_moments() { return second_; }
    void set_steps(std::size_t s) { steps_ = s; }

private:
    OptimizerConfig config_;
    std::vector<BasicTensor<T>> first_;
    std::vector<BasicTensor<T>> second_;
    std::size_t steps_ = 0;
};

} // namespace airgan::nn
