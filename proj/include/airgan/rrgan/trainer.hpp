#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "airgan/core/error.hpp"
#include "airgan/core/rng.hpp"
#include "airgan/nn/checkpoint.hpp"
#include "airgan/nn/optim.hpp"
#include "airgan/rrgan/consensus.hpp"
#include "airgan/rrgan/discriminator.hpp"
#include "airgan/rrgan/experience.hpp"
#include "airgan/rrgan/generator.hpp"
#include "airgan/rrgan/losses.hpp"

namespace airgan::rrgan {

struct GanConfig {
    GeneratorConfig generator;
    DiscriminatorConfig discriminator;
    nn::OptimizerConfig optimizer{nn::OptimizerKind::adam, 1e-4};
    double lambda = 100.0;
    ReconstructionNorm reconstruction = ReconstructionNorm::l2;
    ConsensusConfig consensus;
    std::size_t batch_size = 4;
    std::size_t store_capacity = 512;
    std::uint64_t seed = 1;

    static GanConfig full(std::size_t n_drones)
    {
        GanConfig c;
        c.generator = GeneratorConfig::full(n_drones);
        c.discriminator = DiscriminatorConfig::full(n_drones);
        return c;
    }

    /// 32x32 reduced networks; heavier reconstruction weight, larger step and sparser
    /// consensus steps.
    static GanConfig desk(std::size_t n_drones)
    {
        GanConfig c;
        c.generator = GeneratorConfig::desk(n_drones);
        c.discriminator = DiscriminatorConfig::desk(n_drones);
        c.optimizer.learning_rate = 3e-4;
        c.lambda = 1000.0;
        c.consensus.interval = 4;
        return c;
    }

    void validate() const
    {
        generator.validate();
        discriminator.validate();
        optimizer.validate();
        consensus.validate();
        require_config(lambda >= 0.0, "lambda must be non-negative");
        require_config(batch_size >= 1, "batch size must be positive");
        require_config(discriminator.in_channels == generator.in_channels()
                           && discriminator.height == generator.height && discriminator.width == generator.width,
                       "discriminator input must match the generator's environment + map stack");
    }
};

struct EpochLog {
    std::size_t epoch = 0;
    double generator_loss = 0.0;
    double discriminator_loss = 0.0;
    double reconstruction_rmse = 0.0;
    std::size_t holdout_argmax_hits = 0;
    std::size_t holdout_total = 0;
    /// Share of real scored > 0.5 and fake scored < 0.5 during the epoch's updates.
    double discriminator_accuracy = 0.0;
    bool aborted = false;
    std::string diagnostic;
};

inline void write_epoch_header(std::ostream& os)
{
    os << "epoch,generator_loss,discriminator_loss,reconstruction_rmse,holdout_argmax_hits,holdout_total,"
          "discriminator_accuracy\n";
}

inline void write_epoch_row(std::ostream& os, const EpochLog& e)
{
    os << e.epoch << ',' << e.generator_loss << ',' << e.discriminator_loss << ',' << e.reconstruction_rmse << ','
       << e.holdout_argmax_hits << ',' << e.holdout_total << ',' << e.discriminator_accuracy << '\n';
}

struct GanBatch {
    Tensor environment; // (N, 1, H, W)
    Tensor experience;  // (N, n, H, W), generator's stored-map input
    Tensor real;        // (N, n, H, W)
    std::uint64_t noise_seed = 0;
};

struct StepReport {
    GanLossValues losses;
    double discriminator_accuracy = 0.0;
    bool used_consensus = false;
};

class GanTrainer {
public:
    explicit GanTrainer(const GanConfig& config)
        : config_(config)
        , generator_((config.validate(), config.generator), mix_seed(config.seed, 1))
        , discriminator_(config.discriminator, mix_seed(config.seed, 2))
        , store_(config.store_capacity)
        , gen_opt_(config.optimizer)
        , disc_opt_(config.optimizer)
        , rng_(mix_seed(config.seed, 3))
    {
    }

    const GanConfig& config() const { return config_; }
    Generator& generator() { return generator_; }
    Discriminator& discriminator() { return discriminator_; }
    ExperienceStore& store() { return store_; }
    const ExperienceStore& store() const { return store_; }
    std::size_t steps() const { return steps_; }
    std::size_t epochs() const { return epochs_; }

    nn::Shape map_shape(std::size_t batch = 1) const
    {
        return {batch, config_.generator.n_drones, config_.generator.height, config_.generator.width};
    }

    /// Generator input map for inference: a uniformly drawn stored map, zeros if none.
    Tensor experience_input(Rng& rng) const { return store_.random_map(rng, map_shape()); }

    GanBatch make_batch(std::span<const std::size_t> indices)
    {
        require(!indices.empty(), "make_batch: empty batch");
        std::vector<const Tensor*> env, exp, real;
        std::vector<Tensor> drawn;
        drawn.reserve(indices.size());
        for (std::size_t i : indices) {
            const Experience& e = store_.at(i);
            env.push_back(&e.environment);
            real.push_back(&e.reward_map);
            drawn.push_back(store_.random_map(rng_, map_shape()));
        }
        for (const Tensor& t : drawn) {
            exp.push_back(&t);
        }
        GanBatch b;
        b.environment = nn::stack_batch<float>(env);
        b.experience = nn::stack_batch<float>(exp);
        b.real = nn::stack_batch<float>(real);
        b.noise_seed = rng_();
        return b;
    }

    /// One simultaneous generator/discriminator update; throws NumericError on a
    /// non-finite loss or gradient (parameters are left untouched in that case).
    StepReport train_step(const GanBatch& batch)
    {
        const bool consensus = config_.consensus.gamma > 0.0 && steps_ % config_.consensus.interval == 0;
        Pass base = game_pass(batch, true, true, true, consensus);
        check_finite(base);
        std::vector<float> g_theta = base.gen_theta;
        std::vector<float> g_phi = base.disc_phi;
        if (consensus) {
            add_consensus(batch, base, g_theta, g_phi);
        }
        auto gp = generator_.parameters();
        auto dp = discriminator_.parameters();
        detail::write_grads(gp, g_theta);
        detail::write_grads(dp, g_phi);
        gen_opt_.step(gp);
        disc_opt_.step(dp);
        ++steps_;
        StepReport r;
        r.losses = base.losses;
        r.used_consensus = consensus;
        std::size_t correct = 0;
        for (std::size_t i = 0; i < base.d_real.size(); ++i) {
            correct += base.d_real[i] > 0.5 ? 1 : 0;
            correct += base.d_fake[i] < 0.5 ? 1 : 0;
        }
        r.discriminator_accuracy = static_cast<double>(correct) / (2.0 * static_cast<double>(base.d_real.size()));
        return r;
    }

    /// One pass over the shuffled store in batches; a non-finite update aborts the rest
    /// of the epoch and is reported in the log.
    EpochLog train_epoch(const std::vector<HoldoutSample>& holdout = {})
    {
        require(!store_.empty(), "train: experience store is empty");
        std::vector<std::size_t> order(store_.size());
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng_);
        EpochLog log;
        log.epoch = ++epochs_;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += config_.batch_size) {
            const std::size_t end = std::min(order.size(), start + config_.batch_size);
            const GanBatch batch = make_batch(std::span<const std::size_t>(order.data() + start, end - start));
            try {
                const StepReport r = train_step(batch);
                log.generator_loss += r.losses.generator;
                log.discriminator_loss += r.losses.discriminator;
                log.reconstruction_rmse += r.losses.reconstruction;
                log.discriminator_accuracy += r.discriminator_accuracy;
                ++batches;
            } catch (const NumericError& e) {
                log.aborted = true;
                log.diagnostic = e.what();
                break;
            }
        }
        if (batches > 0) {
            const double b = static_cast<double>(batches);
            log.generator_loss /= b;
            log.discriminator_loss /= b;
            log.reconstruction_rmse /= b;
            log.discriminator_accuracy /= b;
        }
        if (!holdout.empty()) {
            log.holdout_argmax_hits = holdout_hits(holdout);
            log.holdout_total = holdout.size() * config_.generator.n_drones;
        }
        return log;
    }

    std::vector<EpochLog> train(std::size_t epochs, const std::vector<HoldoutSample>& holdout = {},
                                std::ostream* csv = nullptr)
    {
        std::vector<EpochLog> logs;
        for (std::size_t e = 0; e < epochs; ++e) {
            logs.push_back(train_epoch(holdout));
            if (csv) {
                write_epoch_row(*csv, logs.back());
            }
        }
        return logs;
    }

    /// Eval-mode generator output, (1, n, H, W).
    Tensor predict(const Tensor& environment, const Tensor& experience)
    {
        return generator_.forward(nn::concat_channels(environment, experience), nn::PassContext{});
    }

    /// Number of (field, channel) pairs whose predicted argmax lies within Chebyshev
    /// distance `tolerance` of the oracle argmax.
    std::size_t holdout_hits(const std::vector<HoldoutSample>& holdout, int tolerance = 2)
    {
        Rng rng(mix_seed(config_.seed, 4));
        std::size_t hits = 0;
        for (const HoldoutSample& s : holdout) {
            const radio::Lattice lattice{s.oracle.cols, s.oracle.rows, s.oracle.resolution_m};
            const radio::RewardMap pred = lattice_average(predict(s.environment, experience_input(rng)), lattice);
            for (int ch = 0; ch < s.oracle.channels; ++ch) {
                hits += chebyshev(pred.argmax(ch), s.oracle.argmax(ch)) <= tolerance ? 1 : 0;
            }
        }
        return hits;
    }

    nn::Checkpoint checkpoint()
    {
        nn::Checkpoint ck;
        ck.kind = "rrgan";
        ck.layers = generator_.specs();
        const auto d = discriminator_.specs();
        ck.layers.insert(ck.layers.end(), d.begin(), d.end());
        nn::add_network_state(ck, generator_.parameters(), generator_.buffers());
        nn::add_network_state(ck, discriminator_.parameters(), discriminator_.buffers());
        ck.meta["n_drones"] = config_.generator.n_drones;
        ck.meta["height"] = config_.generator.height;
        ck.meta["width"] = config_.generator.width;
        ck.meta["generator_widths"] = config_.generator.widths;
        ck.meta["discriminator_widths"] = config_.discriminator.widths;
        ck.meta["steps"] = steps_;
        ck.meta["epochs"] = epochs_;
        return ck;
    }

    void restore(const nn::Checkpoint& ck)
    {
        if (ck.kind != "rrgan") {
            throw ConfigError("checkpoint kind '" + ck.kind + "' is not an rrgan model");
        }
        nn::restore_network_state(ck, generator_.parameters(), generator_.buffers());
        nn::restore_network_state(ck, discriminator_.parameters(), discriminator_.buffers());
        steps_ = ck.meta.value("steps", std::size_t{0});
        epochs_ = ck.meta.value("epochs", std::size_t{0});
    }

    /// Restart both optimizers (e.g. before adapting a trained model to a new field).
    void reset_optimizers()
    {
        gen_opt_.reset();
        disc_opt_.reset();
    }

private:
    // Gradients of both losses with respect to both players' parameters; entries that were
    // not requested stay empty.
    struct Pass {
        std::vector<float> gen_theta, gen_phi;   // d L_G / d theta, d L_G / d phi
        std::vector<float> disc_theta, disc_phi; // d L_D / d theta, d L_D / d phi
        GanLossValues losses;
        std::vector<double> d_real, d_fake;
        Generator::Cache gc;
        Discriminator::Cache rc, fc;
    };

    // With `pattern`, the pass reuses that pass's activation pattern (probe passes).
    Pass game_pass(const GanBatch& b, bool update_stats, bool want_lg, bool want_ld, bool cross,
                   const Pass* pattern = nullptr)
    {
        const bool frozen = pattern != nullptr;
        const nn::PassContext gctx{nn::Mode::train, update_stats, b.noise_seed, frozen};
        const nn::PassContext rctx{nn::Mode::train, update_stats, mix_seed(b.noise_seed, 1), frozen};
        const nn::PassContext fctx{nn::Mode::train, update_stats, mix_seed(b.noise_seed, 2), frozen};
        const std::size_t N = b.environment.dim(0);

        Pass p;
        if (frozen) {
            p.gc = pattern->gc;
            p.fc = pattern->fc;
            p.rc = pattern->rc;
        }
        Generator::Cache& gc = p.gc;
        Discriminator::Cache &rc = p.rc, &fc = p.fc;
        const Tensor fake = generator_.forward(nn::concat_channels(b.environment, b.experience), gctx, gc);
        const Tensor sf = discriminator_.forward(nn::concat_channels(b.environment, fake), fctx, fc);
        Tensor sr;
        if (want_ld || update_stats) {
            sr = discriminator_.forward(nn::concat_channels(b.environment, b.real), rctx, rc);
        }

        p.d_fake.resize(N);
        p.d_real.assign(N, 0.5);
        for (std::size_t i = 0; i < N; ++i) {
            p.d_fake[i] = logistic(sf[i]);
            if (!sr.empty()) {
                p.d_real[i] = logistic(sr[i]);
            }
        }
        Tensor recon_grad;
        p.losses = gan_losses(p.d_real, p.d_fake, fake, b.real, config_.lambda, config_.reconstruction);
        reconstruction_error(fake, b.real, config_.reconstruction, &recon_grad);
        const std::size_t n_env = b.environment.dim(1);

        if (want_ld) {
            Tensor gr({N, 1}), gf({N, 1});
            for (std::size_t i = 0; i < N; ++i) {
                gr[i] = static_cast<float>((p.d_real[i] - 1.0) / static_cast<double>(N));
                gf[i] = static_cast<float>(p.d_fake[i] / static_cast<double>(N));
            }
            discriminator_.zero_grad();
            discriminator_.backward(rc, gr);
            const Tensor gin = discriminator_.backward(fc, gf);
            p.disc_phi = detail::flatten_grads(discriminator_.parameters());
            if (cross) {
                generator_.zero_grad();
                generator_.backward(gc, nn::split_channels(gin, n_env).second);
                p.disc_theta = detail::flatten_grads(generator_.parameters());
            }
        }
        if (want_lg) {
            Tensor gg({N, 1});
            for (std::size_t i = 0; i < N; ++i) {
                gg[i] = static_cast<float>((p.d_fake[i] - 1.0) / static_cast<double>(N));
            }
            discriminator_.zero_grad();
            Tensor g_map = nn::split_channels(discriminator_.backward(fc, gg), n_env).second;
            if (cross) {
                p.gen_phi = detail::flatten_grads(discriminator_.parameters());
            }
            for (std::size_t i = 0; i < g_map.size(); ++i) {
                g_map[i] += static_cast<float>(config_.lambda) * recon_grad[i];
            }
            generator_.zero_grad();
            generator_.backward(gc, g_map);
            p.gen_theta = detail::flatten_grads(generator_.parameters());
        }
        return p;
    }

    static void check_finite(const Pass& p)
    {
        const bool ok = std::isfinite(p.losses.generator) && std::isfinite(p.losses.discriminator)
            && detail::all_finite(p.gen_theta) && detail::all_finite(p.disc_phi) && detail::all_finite(p.gen_phi)
            && detail::all_finite(p.disc_theta);
        if (!ok) {
            throw NumericError("non-finite GAN loss or gradient (generator loss " + std::to_string(p.losses.generator)
                               + ", discriminator loss " + std::to_string(p.losses.discriminator) + ")");
        }
    }

    // Adds gamma * J^T v, where v = (dL_G/dtheta, dL_D/dphi). Player p's share is the
    // Hessian of L_p times its own gradient block, taken as a forward difference of the
    // full gradient of L_p along that block's unit direction. Probes keep the base pass's
    // ReLU and max-pool pattern: across kinks the gradient jumps, and a plain difference
    // then measures the jumps rather than the curvature.
    void add_consensus(const GanBatch& batch, const Pass& base, std::vector<float>& g_theta, std::vector<float>& g_phi)
    {
        const double h = config_.consensus.probe_step;
        const double gamma = config_.consensus.gamma;
        auto gp = generator_.parameters();
        auto dp = discriminator_.parameters();
        std::vector<float> c_theta(g_theta.size(), 0.0f), c_phi(g_phi.size(), 0.0f);

        auto accumulate = [](std::vector<float>& acc, const std::vector<float>& probe, const std::vector<float>& at,
                             double scale) {
            for (std::size_t i = 0; i < acc.size(); ++i) {
                acc[i] += static_cast<float>((static_cast<double>(probe[i]) - at[i]) * scale);
            }
        };

        const double n_gen = detail::norm(base.gen_theta);
        if (n_gen > 0.0) {
            const std::vector<Tensor> saved = snapshot(gp);
            detail::displace(gp, base.gen_theta, h / n_gen);
            const Pass probe = game_pass(batch, false, true, false, true, &base);
            restore_values(gp, saved);
            check_finite(probe);
            accumulate(c_theta, probe.gen_theta, base.gen_theta, n_gen / h);
            accumulate(c_phi, probe.gen_phi, base.gen_phi, n_gen / h);
        }
        const double n_disc = detail::norm(base.disc_phi);
        if (n_disc > 0.0) {
            const std::vector<Tensor> saved = snapshot(dp);
            detail::displace(dp, base.disc_phi, h / n_disc);
            const Pass probe = game_pass(batch, false, false, true, true, &base);
            restore_values(dp, saved);
            check_finite(probe);
            accumulate(c_theta, probe.disc_theta, base.disc_theta, n_disc / h);
            accumulate(c_phi, probe.disc_phi, base.disc_phi, n_disc / h);
        }
        for (std::size_t i = 0; i < g_theta.size(); ++i) {
            g_theta[i] += static_cast<float>(gamma * c_theta[i]);
        }
        for (std::size_t i = 0; i < g_phi.size(); ++i) {
            g_phi[i] += static_cast<float>(gamma * c_phi[i]);
        }
    }

    static std::vector<Tensor> snapshot(const std::vector<nn::Parameter<float>>& params)
    {
        std::vector<Tensor> out;
        for (const auto& p : params) {
            out.push_back(*p.value);
        }
        return out;
    }

    static void restore_values(const std::vector<nn::Parameter<float>>& params, const std::vector<Tensor>& saved)
    {
        for (std::size_t i = 0; i < params.size(); ++i) {
            *params[i].value = saved[i];
        }
    }

    GanConfig config_;
    Generator generator_;
    Discriminator discriminator_;
    ExperienceStore store_;
    nn::Optimizer<float> gen_opt_, disc_opt_;
    Rng rng_;
    std::size_t steps_ = 0;
    std::size_t epochs_ = 0;
};

} // namespace airgan::rrgan
