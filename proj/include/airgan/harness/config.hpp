#pragma once

#include <array>
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "airgan/agents/dqn.hpp"
#include "airgan/core/error.hpp"
#include "airgan/radio/params.hpp"

namespace airgan::harness {

enum class Method { qlearning, sarsa, dqn, kmeans, random, best, rrgan };

inline constexpr std::array<Method, 7> all_methods{Method::qlearning, Method::sarsa, Method::dqn, Method::kmeans,
                                                   Method::random, Method::best, Method::rrgan};

inline constexpr std::string_view method_name(Method m)
{
    switch (m) {
    case Method::qlearning: return "qlearning";
    case Method::sarsa: return "sarsa";
    case Method::dqn: return "dqn";
    case Method::kmeans: return "kmeans";
    case Method::random: return "random";
    case Method::best: return "best";
    case Method::rrgan: return "rrgan";
    }
    return "?";
}

inline Method parse_method(std::string_view name)
{
    for (Method m : all_methods) {
        if (method_name(m) == name) {
            return m;
        }
    }
    throw ConfigError("unknown method '" + std::string(name) + "'");
}

/// Training setup for the RR-GAN model used in experiments. Training fields are drawn from
/// a seed range disjoint from the evaluation seeds.
struct RrganSettings {
    bool desk_scale = false;
    std::size_t train_fields = 200;
    std::size_t epochs = 120;
    std::uint64_t train_seed_base = 1000000;
    /// Empty: cache under output_dir, keyed by the training setup.
    std::string checkpoint;
};

struct ExperimentConfig {
    radio::EnvConfig env;
    radio::RadioParams radio;
    Method method = Method::qlearning;
    std::size_t episodes = 100;
    std::size_t steps_per_episode = 200;
    /// Greedy-exploration stop window for RR-GAN reward maps.
    std::size_t explore_rounds = 1000;
    double greedy_factor = 0.9;
    double learning_rate = 0.1;
    double discount = 0.5;
    std::size_t seeds = 20;
    std::uint64_t seed = 0;
    std::string output_dir = "out";
    agents::DqnConfig dqn = agents::DqnConfig::desk();
    RrganSettings rrgan;

    void validate() const
    {
        env.validate();
        radio.validate();
        require_config(episodes >= 1, "episodes must be positive");
        require_config(steps_per_episode >= 1, "steps_per_episode must be positive");
        require_config(explore_rounds >= 1, "explore_rounds must be positive");
        require_config(seeds >= 1, "seeds must be positive");
        require_config(greedy_factor >= 0.0 && greedy_factor <= 1.0, "greedy_factor must lie in [0, 1]");
        require_config(learning_rate >= 0.0 && learning_rate <= 1.0, "learning_rate must lie in [0, 1]");
        require_config(discount >= 0.0 && discount < 1.0, "discount must lie in [0, 1)");
        require_config(rrgan.train_fields >= 1 && rrgan.epochs >= 1, "rrgan train_fields and epochs must be positive");
        require_config(!output_dir.empty(), "output_dir must be set");
        dqn.validate();
    }
};

namespace detail {

/// Shortest text that reads back to the same value.
template <class T>
std::string text_of(T v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

template <class T>
std::string join_list(const std::vector<T>& values)
{
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        out += (i ? "," : "") + text_of(values[i]);
    }
    return out;
}

template <class T>
std::vector<T> split_list(const std::string& text, const std::string& key)
{
    std::vector<T> out;
    std::istringstream is(text);
    std::string item;
    while (std::getline(is, item, ',')) {
        std::istringstream one(item);
        T v{};
        if (!(one >> v)) {
            throw ConfigError("bad list entry '" + item + "' for " + key);
        }
        out.push_back(v);
    }
    return out;
}

template <class T>
void read(const boost::property_tree::ptree& tree, const std::string& key, T& value)
{
    if (auto node = tree.get_child_optional(key)) {
        try {
            value = node->get_value<T>();
        } catch (const boost::property_tree::ptree_bad_data&) {
            throw ConfigError("bad value '" + node->data() + "' for " + key);
        }
    }
}

inline void read_bool(const boost::property_tree::ptree& tree, const std::string& key, bool& value)
{
    if (auto node = tree.get_child_optional(key)) {
        const std::string& s = node->data();
        if (s == "true" || s == "1") {
            value = true;
        } else if (s == "false" || s == "0") {
            value = false;
        } else {
            throw ConfigError("bad boolean '" + s + "' for " + key);
        }
    }
}

inline const std::array<std::string_view, 6> known_sections{"env", "radio", "experiment", "tabular", "dqn", "rrgan"};

} // namespace detail

/// INI text; sections env, radio, experiment, tabular, dqn, rrgan. Keys are the field names.
/// Missing keys keep their defaults; unknown sections or keys are errors.
inline ExperimentConfig parse_config(const std::string& text)
{
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream is(text);
    try {
        pt::read_ini(is, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    ExperimentConfig c;
    static const std::vector<std::string> keys[] = {
        {"area_length_m", "area_width_m", "step_size_m", "n_clusters", "cluster_user_counts", "cluster_stddevs_m",
         "uniform_user_count", "n_drones", "seed"},
        {"sinr_threshold_db", "antenna_directivity_deg", "carrier_freq_hz", "eirp_watts", "bandwidth_hz",
         "noise_psd_w_per_hz", "user_height_m", "drone_height_m"},
        {"method", "episodes", "steps_per_episode", "explore_rounds", "greedy_factor", "seeds", "seed", "output_dir"},
        {"learning_rate", "discount"},
        {"crop", "conv1", "conv2", "hidden", "replay_capacity", "batch_size", "sync_interval", "train_every",
         "discount", "learning_rate"},
        {"desk_scale", "train_fields", "epochs", "train_seed_base", "checkpoint"},
    };
    for (const auto& [section, body] : tree) {
        std::size_t s = 0;
        while (s < detail::known_sections.size() && detail::known_sections[s] != section) {
            ++s;
        }
        if (s == detail::known_sections.size()) {
            throw ConfigError("config: unknown section [" + section + "]");
        }
        for (const auto& [key, value] : body) {
            bool found = false;
            for (const auto& k : keys[s]) {
                found = found || k == key;
            }
            if (!found) {
                throw ConfigError("config: unknown key '" + key + "' in [" + section + "]");
            }
        }
    }

    const auto section = [&](const std::string& name) {
        const auto child = tree.get_child_optional(name);
        return child ? *child : pt::ptree{};
    };
    const pt::ptree env = section("env");
    detail::read(env, "area_length_m", c.env.area_length_m);
    detail::read(env, "area_width_m", c.env.area_width_m);
    detail::read(env, "step_size_m", c.env.step_size_m);
    detail::read(env, "n_clusters", c.env.n_clusters);
    if (auto v = env.get_optional<std::string>("cluster_user_counts")) {
        c.env.cluster_user_counts = detail::split_list<int>(*v, "cluster_user_counts");
    }
    if (auto v = env.get_optional<std::string>("cluster_stddevs_m")) {
        c.env.cluster_stddevs_m = detail::split_list<double>(*v, "cluster_stddevs_m");
    }
    detail::read(env, "uniform_user_count", c.env.uniform_user_count);
    detail::read(env, "n_drones", c.env.n_drones);
    detail::read(env, "seed", c.env.seed);

    const pt::ptree radio = section("radio");
    detail::read(radio, "sinr_threshold_db", c.radio.sinr_threshold_db);
    detail::read(radio, "antenna_directivity_deg", c.radio.antenna_directivity_deg);
    detail::read(radio, "carrier_freq_hz", c.radio.carrier_freq_hz);
    detail::read(radio, "eirp_watts", c.radio.eirp_watts);
    detail::read(radio, "bandwidth_hz", c.radio.bandwidth_hz);
    detail::read(radio, "noise_psd_w_per_hz", c.radio.noise_psd_w_per_hz);
    detail::read(radio, "user_height_m", c.radio.user_height_m);
    detail::read(radio, "drone_height_m", c.radio.drone_height_m);

    const pt::ptree ex = section("experiment");
    if (auto v = ex.get_optional<std::string>("method")) {
        c.method = parse_method(*v);
    }
    detail::read(ex, "episodes", c.episodes);
    detail::read(ex, "steps_per_episode", c.steps_per_episode);
    detail::read(ex, "explore_rounds", c.explore_rounds);
    detail::read(ex, "greedy_factor", c.greedy_factor);
    detail::read(ex, "seeds", c.seeds);
    detail::read(ex, "seed", c.seed);
    detail::read(ex, "output_dir", c.output_dir);

    const pt::ptree tab = section("tabular");
    detail::read(tab, "learning_rate", c.learning_rate);
    detail::read(tab, "discount", c.discount);

    const pt::ptree dqn = section("dqn");
    detail::read(dqn, "crop", c.dqn.crop);
    detail::read(dqn, "conv1", c.dqn.conv1);
    detail::read(dqn, "conv2", c.dqn.conv2);
    detail::read(dqn, "hidden", c.dqn.hidden);
    detail::read(dqn, "replay_capacity", c.dqn.replay_capacity);
    detail::read(dqn, "batch_size", c.dqn.batch_size);
    detail::read(dqn, "sync_interval", c.dqn.sync_interval);
    detail::read(dqn, "train_every", c.dqn.train_every);
    detail::read(dqn, "discount", c.dqn.discount);
    detail::read(dqn, "learning_rate", c.dqn.optimizer.learning_rate);

    const pt::ptree gan = section("rrgan");
    detail::read_bool(gan, "desk_scale", c.rrgan.desk_scale);
    detail::read(gan, "train_fields", c.rrgan.train_fields);
    detail::read(gan, "epochs", c.rrgan.epochs);
    detail::read(gan, "train_seed_base", c.rrgan.train_seed_base);
    detail::read(gan, "checkpoint", c.rrgan.checkpoint);

    c.validate();
    return c;
}

inline ExperimentConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config '" + path + "'");
    }
    std::ostringstream os;
    os << in.rdbuf();
    return parse_config(os.str());
}

/// Every field, in the order parse_config reads them; parse_config(format_config(c)) == c.
inline std::string format_config(const ExperimentConfig& c)
{
    std::ostringstream os;
    os << "[env]\n"
       << "area_length_m = " << detail::text_of(c.env.area_length_m) << "\n"
       << "area_width_m = " << detail::text_of(c.env.area_width_m) << "\n"
       << "step_size_m = " << detail::text_of(c.env.step_size_m) << "\n"
       << "n_clusters = " << detail::text_of(c.env.n_clusters) << "\n"
       << "cluster_user_counts = " << detail::join_list(c.env.cluster_user_counts) << "\n"
       << "cluster_stddevs_m = " << detail::join_list(c.env.cluster_stddevs_m) << "\n"
       << "uniform_user_count = " << detail::text_of(c.env.uniform_user_count) << "\n"
       << "n_drones = " << detail::text_of(c.env.n_drones) << "\n"
       << "seed = " << detail::text_of(c.env.seed) << "\n\n"
       << "[radio]\n"
       << "sinr_threshold_db = " << detail::text_of(c.radio.sinr_threshold_db) << "\n"
       << "antenna_directivity_deg = " << detail::text_of(c.radio.antenna_directivity_deg) << "\n"
       << "carrier_freq_hz = " << detail::text_of(c.radio.carrier_freq_hz) << "\n"
       << "eirp_watts = " << detail::text_of(c.radio.eirp_watts) << "\n"
       << "bandwidth_hz = " << detail::text_of(c.radio.bandwidth_hz) << "\n"
       << "noise_psd_w_per_hz = " << detail::text_of(c.radio.noise_psd_w_per_hz) << "\n"
       << "user_height_m = " << detail::text_of(c.radio.user_height_m) << "\n"
       << "drone_height_m = " << detail::text_of(c.radio.drone_height_m) << "\n\n"
       << "[experiment]\n"
       << "method = " << method_name(c.method) << "\n"
       << "episodes = " << detail::text_of(c.episodes) << "\n"
       << "steps_per_episode = " << detail::text_of(c.steps_per_episode) << "\n"
       << "explore_rounds = " << detail::text_of(c.explore_rounds) << "\n"
       << "greedy_factor = " << detail::text_of(c.greedy_factor) << "\n"
       << "seeds = " << detail::text_of(c.seeds) << "\n"
       << "seed = " << detail::text_of(c.seed) << "\n"
       << "output_dir = " << c.output_dir << "\n\n"
       << "[tabular]\n"
       << "learning_rate = " << detail::text_of(c.learning_rate) << "\n"
       << "discount = " << detail::text_of(c.discount) << "\n\n"
       << "[dqn]\n"
       << "crop = " << detail::text_of(c.dqn.crop) << "\n"
       << "conv1 = " << c.dqn.conv1 << "\n"
       << "conv2 = " << c.dqn.conv2 << "\n"
       << "hidden = " << detail::text_of(c.dqn.hidden) << "\n"
       << "replay_capacity = " << detail::text_of(c.dqn.replay_capacity) << "\n"
       << "batch_size = " << detail::text_of(c.dqn.batch_size) << "\n"
       << "sync_interval = " << detail::text_of(c.dqn.sync_interval) << "\n"
       << "train_every = " << detail::text_of(c.dqn.train_every) << "\n"
       << "discount = " << detail::text_of(c.dqn.discount) << "\n"
       << "learning_rate = " << detail::text_of(c.dqn.optimizer.learning_rate) << "\n\n"
       << "[rrgan]\n"
       << "desk_scale = " << (c.rrgan.desk_scale ? "true" : "false") << "\n"
       << "train_fields = " << detail::text_of(c.rrgan.train_fields) << "\n"
       << "epochs = " << detail::text_of(c.rrgan.epochs) << "\n"
       << "train_seed_base = " << detail::text_of(c.rrgan.train_seed_base) << "\n"
       << "checkpoint = " << c.rrgan.checkpoint << "\n";
    return os.str();
}

} // namespace airgan::harness
