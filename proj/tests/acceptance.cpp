// Acceptance run: one PASS/FAIL line per criterion, exit code 1 if any fails.
//   acceptance [--out DIR] [--cli PATH] [name ...]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "CLI11.hpp"

#include "airgan/harness/metrics.hpp"
#include "airgan/harness/runner.hpp"
#include "airgan/harness/studies.hpp"
#include "airgan/rrgan/consensus.hpp"

#include "support.hpp"

namespace fs = std::filesystem;
using namespace airgan;
using namespace airgan::harness;
using airgan::testing::DbOracle;
using airgan::testing::DTensor;
using airgan::testing::random_tensor;
using airgan::testing::rel;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    std::string name;
    std::function<Outcome()> run;
};

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

fs::path out_root = "acceptance";
std::string cli_path;

fs::path fresh_dir(const std::string& name)
{
    const fs::path p = out_root / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

// ---- radio ----

Outcome radio_oracle()
{
    Rng rng(2024);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    double worst = 0.0;
    for (int draw = 0; draw < 100; ++draw) {
        radio::RadioParams p;
        p.carrier_freq_hz = std::pow(10.0, 8.5 + 2.0 * u01(rng));
        p.eirp_watts = std::pow(10.0, -1.0 + 3.0 * u01(rng));
        p.bandwidth_hz = std::pow(10.0, 4.0 + 3.0 * u01(rng));
        p.noise_psd_w_per_hz = std::pow(10.0, -22.0 + 2.0 * u01(rng));
        p.user_height_m = 0.5 + 2.0 * u01(rng);
        p.drone_height_m = p.user_height_m + 5.0 + 100.0 * u01(rng);
        const radio::LinkModel model(p);
        const double gap = p.drone_height_m - p.user_height_m;
        const double d = radio::slant_distance_m(200.0 * u01(rng), gap);
        worst = std::max(worst, rel(radio::path_loss(d, p.carrier_freq_hz), DbOracle::path_loss(d, p.carrier_freq_hz)));
        worst = std::max(worst, rel(radio::rsrp(model, d), DbOracle::rsrp_w(p.eirp_watts, p.carrier_freq_hz, d)));

        const int n = 1 + static_cast<int>(u01(rng) * 4);
        std::vector<double> s;
        for (int k = 0; k < n; ++k) {
            s.push_back(DbOracle::rsrp_w(p.eirp_watts, p.carrier_freq_hz, radio::slant_distance_m(200.0 * u01(rng), gap)));
        }
        const long double noise = static_cast<long double>(p.noise_psd_w_per_hz) * p.bandwidth_hz;
        for (int k = 0; k < n; ++k) {
            long double interference = 0.0L;
            double lib_interference = 0.0;
            for (int i = 0; i < n; ++i) {
                if (i != k) {
                    interference += s[static_cast<std::size_t>(i)];
                    lib_interference += s[static_cast<std::size_t>(i)];
                }
            }
            const double expected = static_cast<double>(s[static_cast<std::size_t>(k)] / (noise + interference));
            worst = std::max(worst, rel(radio::sinr(s[static_cast<std::size_t>(k)], lib_interference, model.noise_watts),
                                        expected));
        }
    }
    return {worst < 1e-9, fmt("max relative error %.2e over 100 draws (limit 1e-9)", worst)};
}

Outcome greedy_vs_brute_force()
{
    const radio::EnvConfig cfg;
    const radio::RadioParams p;
    int hits = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto field = std::make_shared<const radio::UserField>(radio::sample_user_field(cfg, 1000 + seed));
        radio::RadioEnvironment env(cfg, p, field);
        int best = 0;
        for (std::size_t c = 0; c < env.lattice().size(); ++c) {
            best = std::max(best, env.connectivity(std::vector<radio::Cell>{env.lattice().cell(c)}).total_connected);
        }
        radio::GreedyOptions go;
        go.stop_window = 100000;
        go.rng_seed = seed;
        const auto g = env.greedy_explore(env.initial_state(1), go);
        hits += env.connectivity(g.final_state.drone_cells).total_connected == best;
    }
    return {hits >= 19, fmt("greedy final cell is the exhaustive argmax in %d/20 seeds (need 19)", hits)};
}

// ---- nn / rrgan ----

Outcome gradient_suite()
{
    using namespace nn;
    Rng rng(21);
    const Shape shape{4, 6, 6, 6};
    const PassContext train{Mode::train, true, 5};
    std::vector<std::pair<std::string, double>> errors;
    auto layer = [&](const std::string& name, Layer<double>& l, DTensor x, const PassContext& ctx) {
        errors.emplace_back(name, airgan::testing::layer_grad_check(l, std::move(x), ctx).max_relative_error);
    };
    Conv2d<double> conv(6, 4, 3, 3, 1, rng);
    layer("conv3x3", conv, random_tensor(shape, 1), train);
    Conv2d<double> strided(6, 3, 4, 4, 2, rng);
    layer("conv4x4/2", strided, random_tensor(shape, 2), train);
    UpsampleConv2d<double> up(6, 4, 3, 9, 13, rng);
    layer("upsample-conv", up, random_tensor(shape, 3), train);
    MaxPool2d<double> pool;
    layer("maxpool", pool, airgan::testing::well_separated(shape, 4), train);
    BatchNorm2d<double> bn(6);
    layer("batchnorm-train", bn, random_tensor(shape, 5), train);
    BatchNorm2d<double> bn_eval(6);
    LayerCache<double> warm;
    bn_eval.forward(random_tensor(shape, 6), train, warm);
    layer("batchnorm-eval", bn_eval, random_tensor(shape, 7), {});
    Linear<double> fc(6 * 6 * 6, 5, rng);
    layer("linear", fc, random_tensor(shape, 8), train);
    ReLU<double> relu;
    layer("relu", relu, airgan::testing::well_separated(shape, 9), train);
    Sigmoid<double> sig;
    layer("sigmoid", sig, random_tensor(shape, 10, -3.0, 3.0), train);
    Dropout<double> drop(0.5);
    layer("dropout", drop, random_tensor(shape, 11), {Mode::train, true, 77});

    // Composed desk networks; probes keep the base activation pattern.
    {
        rrgan::GeneratorT<double> g(rrgan::GeneratorConfig::desk(2), 11);
        DTensor input = random_tensor({2, 3, 32, 32}, 12, 0.0, 1.0);
        const DTensor w = random_tensor({2, 2, 32, 32}, 13);
        const PassContext ctx{Mode::train, false, 7};
        rrgan::GeneratorT<double>::Cache cache;
        g.forward(input, ctx, cache);
        g.zero_grad();
        DTensor gin = g.backward(cache, w);
        PassContext frozen = ctx;
        frozen.frozen_pattern = true;
        auto targets = g.parameters();
        targets.push_back({"input", &input, &gin});
        const auto r = check_gradients(
            targets,
            [&] {
                rrgan::GeneratorT<double>::Cache c = cache;
                return airgan::testing::weighted_sum(g.forward(input, frozen, c), w);
            },
            1e-4, 200, 21);
        errors.emplace_back("desk-generator", r.max_relative_error);
    }
    {
        rrgan::DiscriminatorT<double> d(rrgan::DiscriminatorConfig::desk(2), 14);
        DTensor input = random_tensor({3, 3, 32, 32}, 15, 0.0, 1.0);
        const DTensor w = random_tensor({3, 1}, 16);
        const PassContext ctx{Mode::train, false, 99};
        rrgan::DiscriminatorT<double>::Cache cache;
        d.forward(input, ctx, cache);
        d.zero_grad();
        DTensor gin = d.backward(cache, w);
        PassContext frozen = ctx;
        frozen.frozen_pattern = true;
        auto targets = d.parameters();
        targets.push_back({"input", &input, &gin});
        const auto r = check_gradients(
            targets,
            [&] {
                rrgan::DiscriminatorT<double>::Cache c = cache;
                return airgan::testing::weighted_sum(d.forward(input, frozen, c), w);
            },
            1e-4, 200, 22);
        errors.emplace_back("desk-discriminator", r.max_relative_error);
    }
    double worst = 0.0;
    std::string worst_name;
    for (const auto& [name, e] : errors) {
        if (e >= worst) {
            worst = e;
            worst_name = name;
        }
    }
    return {worst < 1e-4, fmt("%zu checks, worst %.2e (%s), limit 1e-4", errors.size(), worst, worst_name.c_str())};
}

Outcome architecture()
{
    const std::size_t n = 3;
    const rrgan::Generator g(rrgan::GeneratorConfig::full(n), 1);
    const std::vector<std::pair<std::string, nn::Shape>> expected{
        {"Down 1", {1, 64, 100, 100}}, {"Down 2", {1, 128, 50, 50}}, {"Down 3", {1, 256, 25, 25}},
        {"Down 4", {1, 512, 12, 12}},  {"Down 5", {1, 1024, 6, 6}},  {"Up 1", {1, 512, 12, 12}},
        {"Up 2", {1, 256, 25, 25}},    {"Up 3", {1, 128, 50, 50}},   {"Up 4", {1, 64, 100, 100}},
        {"Out Conv", {1, n, 100, 100}},
    };
    const auto got = g.block_output_shapes();
    std::string seq;
    for (const auto& [name, shape] : got) {
        seq += (seq.empty() ? "" : " ") + std::to_string(shape[2]);
    }
    return {got == expected, "resolutions " + seq};
}

Outcome consensus()
{
    const auto game = rrgan::bilinear_game();
    Eigen::VectorXd x(2);
    x << 1.0, 1.0;
    const double r0 = x.norm();
    double worst = 0.0;
    for (int k = 1; k <= 100; ++k) {
        x = rrgan::consensus_step(game, x, 0.1, 0.0);
        worst = std::max(worst, std::abs(x.norm() / (r0 * std::pow(1.01, 0.5 * k)) - 1.0));
    }
    x << 1.0, 1.0;
    int reached = 0;
    for (int k = 1; k <= 1000 && !reached; ++k) {
        x = rrgan::consensus_step(game, x, 0.1, 0.5);
        if (x.norm() < 1e-3) {
            reached = k;
        }
    }
    return {worst < 1e-9 && reached > 0,
            fmt("plain growth error %.1e (limit 1e-9); gamma 0.5 reaches |x|<1e-3 at step %d (limit 1000)", worst,
                reached)};
}

Outcome rrgan_desk()
{
    ExperimentConfig c;
    c.env.n_drones = 2;
    c.rrgan.desk_scale = true;
    rrgan::GanTrainer model(gan_config(c, 2));
    fill_experience(model, c);
    const auto& g = model.config().generator;
    std::vector<rrgan::HoldoutSample> holdout;
    for (std::uint64_t s = 0; s < 100; ++s) {
        const FieldCase fc = make_field_case(c.env, c.radio, s);
        radio::GreedyOptions go;
        go.stop_window = c.explore_rounds;
        go.rng_seed = mix_seed(s, 7);
        holdout.push_back(rrgan::make_holdout(*fc.env, fc.env->greedy_explore(fc.env->initial_state(2), go), g.height,
                                              g.width));
    }
    const auto logs = model.train(c.rrgan.epochs, holdout);
    const rrgan::EpochLog& last = logs.back();
    const double share = static_cast<double>(last.holdout_argmax_hits) / static_cast<double>(last.holdout_total);

    // Overfit one (environment, map) pair.
    rrgan::GanConfig oc = rrgan::GanConfig::desk(2);
    oc.optimizer.learning_rate = 2e-3;
    rrgan::GanTrainer single(oc);
    const FieldCase fc = make_field_case(c.env, c.radio, 42);
    radio::GreedyOptions go;
    go.stop_window = c.explore_rounds;
    single.store().push(
        rrgan::make_experience(*fc.env, fc.env->greedy_explore(fc.env->initial_state(2), go), g.height, g.width));
    double rmse = 1.0;
    std::size_t epoch = 0;
    while (epoch < 300 && rmse >= 0.05) {
        const auto l = single.train_epoch();
        rmse = l.reconstruction_rmse;
        epoch = l.epoch;
    }
    return {share >= 0.7 && rmse < 0.05,
            fmt("%zu maps, %zu epochs: held-out argmax within 2 cells %zu/%zu (%.0f%%, need 70%%); overfit RMSE %.5f "
                "at epoch %zu (need < 0.05)",
                model.store().size(), last.epoch, last.holdout_argmax_hits, last.holdout_total, 100.0 * share, rmse,
                epoch)};
}

// ---- agents / harness ----

Outcome tabular_convergence()
{
    ExperimentConfig c;
    c.env.n_drones = 1;
    c.episodes = 2000;
    c.learning_rate = 0.1;
    c.discount = 0.5;
    c.greedy_factor = 0.9;
    int ok = 0;
    std::size_t latest = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const FieldCase fc = make_field_case(c.env, c.radio, seed);
        const int best = agents::theoretical_best(fc.env->table(), 1).total_connected;
        std::vector<double> fractions;
        std::size_t hit = 0;
        run_method_episodes(Method::qlearning, fc, c, nullptr, [&](const std::vector<EpisodeOutcome>& out) {
            fractions.push_back(static_cast<double>(out.back().total) / static_cast<double>(best));
            hit = moving_mean_hit(fractions, 0.95);
            return hit > 0;
        });
        if (hit) {
            ++ok;
            latest = std::max(latest, hit);
        }
    }
    return {ok >= 18, fmt("%d/20 seeds reach a 10-episode mean >= 95%% of the optimum within 2000 episodes "
                          "(need 18; slowest at episode %zu)",
                          ok, latest)};
}

Outcome ordering()
{
    ExperimentConfig c;
    c.rrgan.desk_scale = true;
    c.seeds = 20;
    c.output_dir = (out_root / "ordering").string();
    const std::vector<Method> methods{Method::qlearning, Method::sarsa, Method::dqn,
                                      Method::kmeans,    Method::random, Method::rrgan};
    const auto runs = run_comparison(c, {4, 8}, methods, &std::cerr);
    export_metrics(runs, ExportFormat::both, c.output_dir);
    const auto summary = summarize(runs);
    auto mean = [&](Method m, int n) {
        const SummaryRow* row = find_summary(summary, std::string(method_name(m)), n);
        require(row != nullptr, "no summary for " + std::string(method_name(m)));
        return row->mean;
    };

    const double gan4 = mean(Method::rrgan, 4);
    double base4 = 0.0;
    for (Method m : {Method::qlearning, Method::sarsa, Method::dqn, Method::kmeans}) {
        base4 = std::max(base4, mean(m, 4));
    }
    const bool gan_ok = gan4 >= base4 - 0.05;
    bool kmeans_last = true;
    std::string detail = fmt("4 drones: rrgan %.3f vs best baseline %.3f (need >= %.3f)", gan4, base4, base4 - 0.05);
    for (int n : {4, 8}) {
        const double km = mean(Method::kmeans, n);
        int above = 0;
        detail += fmt("; %d drones mean:", n);
        for (Method m : {Method::qlearning, Method::sarsa, Method::dqn, Method::kmeans, Method::rrgan}) {
            detail += fmt(" %s %.3f", std::string(method_name(m)).c_str(), mean(m, n));
            above += m != Method::kmeans && mean(m, n) > km;
        }
        kmeans_last = kmeans_last && above == 4;
        detail += fmt(" (kmeans rank %d of 5)", 1 + above);
    }
    return {gan_ok && kmeans_last, detail};
}

// Evaluated at every drone count of the robustness sweep; the trend has to hold in each.
Outcome greedy_factor_trend()
{
    ExperimentConfig c;
    c.seeds = 10;
    bool ok = true;
    std::string detail = "Q-learning, 10 seeds, median convergence episode at greedy 0.7 / 0.8 / 0.9:";
    for (int n : {2, 4, 8}) {
        c.env.n_drones = n;
        std::vector<double> medians;
        for (double gf : {0.7, 0.8, 0.9}) {
            c.greedy_factor = gf;
            std::vector<double> conv;
            for (std::uint64_t seed : evaluation_seeds(c)) {
                const FieldCase fc = make_field_case(c.env, c.radio, seed);
                std::vector<double> totals;
                for (const EpisodeOutcome& o : run_method_episodes(Method::qlearning, fc, c, nullptr)) {
                    totals.push_back(o.total);
                }
                conv.push_back(static_cast<double>(convergence_episode(totals)));
            }
            medians.push_back(quantile(conv, 0.5));
        }
        ok = ok && medians[1] <= medians[0] && medians[2] <= medians[1];
        detail += fmt(" %d drones %g / %g / %g;", n, medians[0], medians[1], medians[2]);
    }
    return {ok, detail + " need non-increasing at each drone count"};
}

Outcome determinism()
{
    if (cli_path.empty() || !fs::exists(cli_path)) {
        return {false, "command-line binary not found: '" + cli_path + "'"};
    }
    const fs::path dir = fresh_dir("determinism");
    ExperimentConfig c;
    c.episodes = 10;
    c.seeds = 2;
    c.rrgan.desk_scale = true;
    c.rrgan.train_fields = 8;
    c.rrgan.epochs = 3;
    {
        std::ofstream ini(dir / "compare.ini");
        ini << format_config(c);
    }
    const char* files[] = {"rows.csv", "summary.csv", "failures.csv", "metrics.json"};
    std::string text[2][4];
    for (int run = 0; run < 2; ++run) {
        const fs::path out = dir / ("run" + std::to_string(run));
        const std::string cmd = "\"" + cli_path + "\" compare --quiet --config \"" + (dir / "compare.ini").string()
            + "\" --drones 1 --drones 2 --out \"" + out.string() + "\" > \"" + (out.string() + ".log") + "\" 2>&1";
        if (std::system(cmd.c_str()) != 0) {
            return {false, "compare run failed, see " + out.string() + ".log"};
        }
        for (int f = 0; f < 4; ++f) {
            text[run][f] = slurp(out / files[f]);
        }
    }
    int same = 0;
    std::size_t bytes = 0;
    for (int f = 0; f < 4; ++f) {
        same += !text[0][f].empty() && text[0][f] == text[1][f];
        bytes += text[0][f].size();
    }
    return {same == 4, fmt("%d/4 export files byte-identical across two compare runs (%zu bytes, all methods, 1 and 2 "
                           "drones)",
                           same, bytes)};
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"acceptance criteria"};
    std::string out = out_root.string();
    std::vector<std::string> only;
    app.add_option("--out", out, "working directory for outputs and cached models");
    app.add_option("--cli", cli_path, "airgan command-line binary");
    app.add_option("names", only, "run only these criteria");
    CLI11_PARSE(app, argc, argv);
    out_root = out;
    fs::create_directories(out_root);

    const std::vector<Criterion> all{
        {"radio_oracle", radio_oracle},
        {"gradient_suite", gradient_suite},
        {"architecture", architecture},
        {"consensus", consensus},
        {"greedy_vs_brute_force", greedy_vs_brute_force},
        {"tabular_convergence", tabular_convergence},
        {"rrgan_desk", rrgan_desk},
        {"ordering", ordering},
        {"greedy_factor_trend", greedy_factor_trend},
        {"determinism", determinism},
    };
    int failed = 0;
    for (const Criterion& c : all) {
        if (!only.empty() && std::find(only.begin(), only.end(), c.name) == only.end()) {
            continue;
        }
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failed += !o.pass;
        std::cout << (o.pass ? "PASS " : "FAIL ") << c.name << ": " << o.detail << fmt(" [%.1f s]", s) << std::endl;
    }
    return failed ? 1 : 0;
}
