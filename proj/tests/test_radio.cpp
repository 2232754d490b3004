#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <random>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "airgan/radio/environment.hpp"

#include "support.hpp"

using namespace airgan;
using namespace airgan::radio;
using airgan::testing::DbOracle;
using airgan::testing::rel;

namespace {

std::shared_ptr<const UserField> field_from(std::vector<Position> users)
{
    UserField f;
    f.layer_of_user.assign(users.size(), 0);
    f.positions = std::move(users);
    return std::make_shared<const UserField>(std::move(f));
}

WorldState state_with(std::vector<Cell> drones, std::shared_ptr<const UserField> field)
{
    WorldState s;
    s.drone_cells = std::move(drones);
    s.user_field = std::move(field);
    return s;
}

EnvConfig uniform_config(int users)
{
    EnvConfig cfg;
    cfg.n_clusters = 0;
    cfg.cluster_user_counts.clear();
    cfg.cluster_stddevs_m.clear();
    cfg.uniform_user_count = users;
    return cfg;
}

} // namespace

TEST(Link, PathLossMatchesLogDomainOracle)
{
    Rng rng(1);
    std::uniform_real_distribution<double> logd(-1.0, 4.0), logf(8.0, 11.0);
    for (int i = 0; i < 100; ++i) {
        const double d = std::pow(10.0, logd(rng)), f = std::pow(10.0, logf(rng));
        EXPECT_LT(rel(path_loss(d, f), DbOracle::path_loss(d, f)), 1e-9);
    }
}

TEST(Link, PathLossReferenceValues)
{
    const double lambda = wavelength_m(2.4e9);
    EXPECT_NEAR(path_loss(lambda / (4.0 * std::numbers::pi), 2.4e9), 1.0, 1e-12);
    EXPECT_LT(rel(path_loss(100.0, 2.4e9), 1.0120e8), 1e-4);
    EXPECT_NEAR(10.0 * std::log10(path_loss(100.0, 2.4e9)), 80.05, 0.005);
    for (double d : {1.0, 7.5, 120.0}) {
        EXPECT_NEAR(path_loss(2.0 * d, 2.4e9) / path_loss(d, 2.4e9), 4.0, 1e-12);
    }
    EXPECT_THROW(path_loss(0.0, 2.4e9), Error);
    EXPECT_THROW(rsrp(10.0, 2.4e9, -1.0), Error);
}

TEST(Link, RsrpReferenceValues)
{
    const RadioParams p;
    EXPECT_LT(rel(rsrp(p, 100.0), 9.881e-8), 1e-3);
    EXPECT_NEAR(watts_to_dbm(rsrp(p, 100.0)), -40.05, 0.005);
    EXPECT_NEAR(dbm_to_watts(40.0), 10.0, 1e-12);
    EXPECT_NEAR(rsrp(p, wavelength_m(p.carrier_freq_hz) / (4.0 * std::numbers::pi)), p.eirp_watts, 1e-12);
    const double k = rsrp(p, 10.0) * 100.0;
    for (double d : {20.0, 50.0, 100.0}) {
        EXPECT_LT(rel(rsrp(p, d) * d * d, k), 1e-12);
    }
}

// 100 random parameter draws: path loss, RSRP and SINR of every user of a random layout
// against the log-domain oracle with interference summed in long double.
TEST(Link, RadioOracleRandomDraws)
{
    Rng rng(2024);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    double worst = 0.0;
    for (int draw = 0; draw < 100; ++draw) {
        RadioParams p;
        p.carrier_freq_hz = std::pow(10.0, 8.5 + 2.0 * u01(rng));
        p.eirp_watts = std::pow(10.0, -1.0 + 3.0 * u01(rng));
        p.bandwidth_hz = std::pow(10.0, 4.0 + 3.0 * u01(rng));
        p.noise_psd_w_per_hz = std::pow(10.0, -22.0 + 2.0 * u01(rng));
        p.user_height_m = 0.5 + 2.0 * u01(rng);
        p.drone_height_m = p.user_height_m + 5.0 + 100.0 * u01(rng);
        const LinkModel model(p);
        const double gap = p.drone_height_m - p.user_height_m;
        const double horizontal = 200.0 * u01(rng);
        const double d = slant_distance_m(horizontal, gap);
        EXPECT_LT(rel(d, std::hypot(horizontal, gap)), 1e-12);
        worst = std::max(worst, rel(path_loss(d, p.carrier_freq_hz), DbOracle::path_loss(d, p.carrier_freq_hz)));
        worst = std::max(worst, rel(rsrp(p, d), DbOracle::rsrp_w(p.eirp_watts, p.carrier_freq_hz, d)));
        worst = std::max(worst, rel(rsrp(model, d), DbOracle::rsrp_w(p.eirp_watts, p.carrier_freq_hz, d)));

        const int n_drones = 1 + static_cast<int>(u01(rng) * 4);
        std::vector<double> s;
        for (int k = 0; k < n_drones; ++k) {
            s.push_back(DbOracle::rsrp_w(p.eirp_watts, p.carrier_freq_hz, slant_distance_m(200.0 * u01(rng), gap)));
        }
        const long double noise = static_cast<long double>(p.noise_psd_w_per_hz) * p.bandwidth_hz;
        EXPECT_LT(rel(noise_power_watts(p), static_cast<double>(noise)), 1e-12);
        for (int k = 0; k < n_drones; ++k) {
            long double interference = 0.0L;
            for (int i = 0; i < n_drones; ++i) {
                if (i != k) {
                    interference += s[static_cast<std::size_t>(i)];
                }
            }
            const double expected = static_cast<double>(s[static_cast<std::size_t>(k)] / (noise + interference));
            double lib_interference = 0.0;
            for (int i = 0; i < n_drones; ++i) {
                lib_interference += i != k ? s[static_cast<std::size_t>(i)] : 0.0;
            }
            worst = std::max(worst, rel(sinr(s[static_cast<std::size_t>(k)], lib_interference, model.noise_watts), expected));
        }
    }
    EXPECT_LT(worst, 1e-9);
}

TEST(Link, ReferenceNoiseAndConeRadius)
{
    const RadioParams p;
    const LinkModel m(p);
    EXPECT_LT(rel(m.noise_watts, 7.962e-16), 1e-3);
    EXPECT_NEAR(m.coverage_radius_m, 28.5 * std::tan(std::numbers::pi / 3.0), 1e-12);
    EXPECT_NEAR(m.coverage_radius_m, 49.36, 0.005);
    EXPECT_DOUBLE_EQ(m.sinr_threshold, 1.0);
}

TEST(Params, Validation)
{
    RadioParams p;
    p.antenna_directivity_deg = 90.0;
    EXPECT_THROW(p.validate(), ConfigError);
    p = {};
    p.drone_height_m = 1.0;
    EXPECT_THROW(p.validate(), ConfigError);
    EnvConfig c;
    c.step_size_m = 30.0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.cluster_stddevs_m.pop_back();
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.n_drones = 0;
    EXPECT_THROW(c.validate(), ConfigError);
}

TEST(UserFieldSampling, DefaultPopulation)
{
    const EnvConfig cfg;
    const UserField f = sample_user_field(cfg, 19);
    EXPECT_EQ(f.size(), 1050u);
    EXPECT_EQ(cfg.total_users(), 1050);
    EXPECT_EQ(f.cluster_centers.size(), 3u);
    EXPECT_EQ(std::count(f.layer_of_user.begin(), f.layer_of_user.end(), 0), 300);
    EXPECT_EQ(std::count(f.layer_of_user.begin(), f.layer_of_user.end(), 2), 200);
    EXPECT_EQ(std::count(f.layer_of_user.begin(), f.layer_of_user.end(), 3), 300);
    for (const Position& p : f.positions) {
        EXPECT_TRUE(p.x >= 0.0 && p.x <= 100.0 && p.y >= 0.0 && p.y <= 100.0);
    }
}

TEST(UserFieldSampling, UniformLayerPassesQuadrantChiSquare)
{
    // chi-square with 3 dof, p = 0.01 critical value 11.345; allow one failure in 50.
    int failures = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const UserField f = sample_user_field(uniform_config(100), seed);
        ASSERT_EQ(f.size(), 100u);
        int q[4] = {0, 0, 0, 0};
        for (const Position& p : f.positions) {
            ++q[(p.x >= 50.0 ? 1 : 0) + (p.y >= 50.0 ? 2 : 0)];
        }
        double chi = 0.0;
        for (int c : q) {
            chi += (c - 25.0) * (c - 25.0) / 25.0;
        }
        failures += chi > 11.345;
    }
    EXPECT_LE(failures, 2);
}

TEST(UserFieldSampling, ZeroSpreadCollapsesOntoCentres)
{
    EnvConfig cfg;
    cfg.cluster_stddevs_m = {0.0, 0.0, 0.0};
    const UserField f = sample_user_field(cfg, 7);
    for (std::size_t u = 0; u < f.size(); ++u) {
        const int layer = f.layer_of_user[u];
        if (layer < 3) {
            EXPECT_EQ(f.positions[u], f.cluster_centers[static_cast<std::size_t>(layer)]);
        }
    }
}

TEST(UserFieldSampling, BroadClustersAreClamped)
{
    EnvConfig cfg;
    cfg.cluster_stddevs_m = {200.0, 200.0, 200.0};
    const UserField f = sample_user_field(cfg, 3);
    int on_edge = 0;
    for (const Position& p : f.positions) {
        EXPECT_TRUE(p.x >= 0.0 && p.x <= 100.0 && p.y >= 0.0 && p.y <= 100.0);
        on_edge += p.x == 0.0 || p.x == 100.0 || p.y == 0.0 || p.y == 100.0;
    }
    EXPECT_GT(on_edge, 100);
}

TEST(UserFieldSampling, DeterministicAndSerializable)
{
    const EnvConfig cfg;
    const UserField a = sample_user_field(cfg, 123), b = sample_user_field(cfg, 123);
    EXPECT_EQ(serialize_user_field(a), serialize_user_field(b));
    EXPECT_NE(serialize_user_field(a), serialize_user_field(sample_user_field(cfg, 124)));
    std::istringstream is(serialize_user_field(a));
    EXPECT_EQ(read_user_field(is), a);
}

TEST(UserFieldSampling, ClusterCountSweepKeepsPopulation)
{
    const EnvConfig cfg;
    for (int k = 0; k <= 6; ++k) {
        const EnvConfig c = cfg.with_cluster_count(k);
        EXPECT_EQ(c.total_users(), 1050);
        EXPECT_EQ(sample_user_field(c, 1).size(), 1050u);
        EXPECT_EQ(c.n_clusters, k);
    }
}

TEST(WorldStateRecord, RoundTrip)
{
    const EnvConfig cfg;
    WorldState s = initial_state(cfg, std::make_shared<const UserField>(sample_user_field(cfg, 5)));
    s.drone_cells = {{3, 4}};
    s.tick = 17;
    const WorldState back = parse_world_state(serialize_world_state(s));
    EXPECT_EQ(back.drone_cells, s.drone_cells);
    EXPECT_EQ(back.tick, 17u);
    EXPECT_EQ(*back.user_field, *s.user_field);
    EXPECT_EQ(serialize_world_state(back), serialize_world_state(s));
}

TEST(LatticeLayout, CornerAndCentres)
{
    const Lattice l = Lattice::from(EnvConfig{});
    EXPECT_EQ(l.size(), 100u);
    EXPECT_EQ(l.start_corner(), (Cell{9, 0}));
    EXPECT_EQ(l.center({0, 0}), (Position{5.0, 5.0}));
    EXPECT_EQ(l.center({9, 9}), (Position{95.0, 95.0}));
    for (std::size_t i = 0; i < l.size(); ++i) {
        EXPECT_EQ(l.index(l.cell(i)), i);
    }
}

TEST(Connectivity, UserBelowDrone)
{
    const RadioParams p;
    const LinkModel m(p);
    const auto field = field_from({{55.0, 55.0}});
    const auto r = connectivity(state_with({{5, 5}}, field), p);
    EXPECT_EQ(r.total_connected, 1);
    EXPECT_EQ(r.assignment[0], 0);
    const double s = sinr(rsrp(p, 28.5), 0.0, m.noise_watts);
    EXPECT_LT(rel(s, DbOracle::rsrp_w(10.0, 2.4e9, 28.5) / 7.962e-16), 1e-3);
    EXPECT_LT(rel(sinr(rsrp(p, 100.0), 0.0, m.noise_watts), 1.241e8), 1e-3);
}

TEST(Connectivity, EquidistantDronesFailThreshold)
{
    const RadioParams p;
    const auto field = field_from({{50.0, 55.0}});
    const auto r = connectivity(state_with({{4, 5}, {5, 5}}, field), p);
    EXPECT_EQ(r.total_connected, 0);
    EXPECT_EQ(r.assignment[0], unassigned);
    const double s = rsrp(p, slant_distance_m(5.0, 28.5));
    EXPECT_LT(sinr(s, s, LinkModel(p).noise_watts), 1.0);
}

TEST(Connectivity, ConeRadiusBounds)
{
    const RadioParams p;
    const double radius = LinkModel(p).coverage_radius_m;
    const auto inside = field_from({{55.0 + radius - 1e-6, 55.0}});
    const auto outside = field_from({{55.0 + 49.37, 55.0}});
    EXPECT_EQ(connectivity(state_with({{5, 5}}, inside), p).total_connected, 1);
    EXPECT_EQ(connectivity(state_with({{5, 5}}, outside), p).total_connected, 0);
}

TEST(Connectivity, StrongestServerAndConservation)
{
    const EnvConfig cfg;
    const RadioParams p;
    const LinkModel m(p);
    Rng rng(9);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto field = std::make_shared<const UserField>(sample_user_field(cfg, seed));
        std::vector<Cell> cells;
        const std::size_t n = 1 + uniform_index(rng, 6);
        for (std::size_t k = 0; k < n; ++k) {
            cells.push_back({static_cast<int>(uniform_index(rng, 10)), static_cast<int>(uniform_index(rng, 10))});
        }
        const WorldState s = state_with(cells, field);
        const auto r = connectivity(s, p);
        int sum = 0;
        for (int c : r.per_agent_counts) {
            sum += c;
        }
        EXPECT_EQ(sum, r.total_connected);
        EXPECT_LE(r.total_connected, static_cast<int>(field->size()));
        EXPECT_EQ(r.total_connected, static_cast<int>(std::count_if(r.assignment.begin(), r.assignment.end(),
                                                                       [](int a) { return a != unassigned; })));
        LinkTable table(*field, s.lattice, m);
        const auto t = table.connectivity(cells);
        EXPECT_EQ(t.assignment, r.assignment);
        for (std::size_t u = 0; u < field->size(); ++u) {
            const int a = r.assignment[u];
            if (a == unassigned) {
                continue;
            }
            const Position pu = field->positions[u];
            const Position pa = s.lattice.center(cells[static_cast<std::size_t>(a)]);
            EXPECT_LE(std::hypot(pu.x - pa.x, pu.y - pa.y), m.coverage_radius_m);
            for (std::size_t k = 0; k < n; ++k) {
                const Position pk = s.lattice.center(cells[k]);
                EXPECT_LE(std::hypot(pu.x - pa.x, pu.y - pa.y), std::hypot(pu.x - pk.x, pu.y - pk.y) + 1e-9);
            }
        }
    }
}

TEST(Connectivity, AddingAgentNeverHelpsOthers)
{
    const EnvConfig cfg;
    const RadioParams p;
    const LinkModel m(p);
    const auto field = std::make_shared<const UserField>(sample_user_field(cfg, 4));
    const Lattice lat = Lattice::from(cfg);
    LinkTable table(*field, lat, m);
    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<Cell> cells;
        for (int k = 0; k < 3; ++k) {
            cells.push_back(lat.cell(uniform_index(rng, 100)));
        }
        std::vector<Cell> more = cells;
        more.push_back(lat.cell(uniform_index(rng, 100)));
        for (std::size_t u = 0; u < field->size(); u += 7) {
            double i3 = 0.0, i4 = 0.0;
            for (std::size_t k = 1; k < 3; ++k) {
                i3 += table.rsrp_at(lat.index(cells[k]), u);
            }
            i4 = i3 + table.rsrp_at(lat.index(more[3]), u);
            const double s = table.rsrp_at(lat.index(cells[0]), u);
            EXPECT_LE(sinr(s, i4, m.noise_watts), sinr(s, i3, m.noise_watts));
        }
        const auto a = table.connectivity(cells), b = table.connectivity(more);
        for (std::size_t k = 0; k < 3; ++k) {
            EXPECT_LE(b.per_agent_counts[k], a.per_agent_counts[k]);
        }
    }
}

TEST(Step, StayGivesZeroRewards)
{
    const EnvConfig cfg;
    const RadioParams p;
    RadioEnvironment env(cfg, p, std::make_shared<const UserField>(sample_user_field(cfg, 2)));
    WorldState s = env.initial_state(3);
    s.drone_cells = {{2, 2}, {5, 5}, {7, 1}};
    const auto r = env.step(s, std::vector<Action>(3, Action::stay));
    EXPECT_EQ(r.rewards, (std::vector<int>{0, 0, 0}));
    EXPECT_EQ(r.state.drone_cells, s.drone_cells);
    EXPECT_EQ(r.state.tick, s.tick + 1);
}

TEST(Step, BoundaryMovesClamp)
{
    const EnvConfig cfg;
    const RadioParams p;
    RadioEnvironment env(cfg, p, std::make_shared<const UserField>(sample_user_field(cfg, 2)));
    const WorldState s = env.initial_state(1); // (9, 0)
    for (Action a : {Action::east, Action::south}) {
        const auto r = env.step(s, std::vector<Action>{a});
        EXPECT_EQ(r.state.drone_cells[0], (Cell{9, 0}));
        EXPECT_EQ(r.rewards[0], 0);
    }
    EXPECT_EQ(env.step(s, std::vector<Action>{Action::west}).state.drone_cells[0], (Cell{8, 0}));
    EXPECT_EQ(env.step(s, std::vector<Action>{Action::north}).state.drone_cells[0], (Cell{9, 1}));
    EXPECT_THROW(env.step(s, std::vector<Action>{}), Error);
}

TEST(Step, RewardIsConnectivityDifference)
{
    const EnvConfig cfg;
    const RadioParams p;
    const auto field = std::make_shared<const UserField>(sample_user_field(cfg, 8));
    RadioEnvironment env(cfg, p, field);
    Rng rng(6);
    WorldState s = env.initial_state(2);
    for (int t = 0; t < 100; ++t) {
        std::vector<Action> a{action_from_index(uniform_index(rng, 5)), Action::stay};
        const auto before = connectivity(s, p);
        const auto r = env.step(s, a);
        const auto after = connectivity(r.state, p);
        for (std::size_t k = 0; k < 2; ++k) {
            EXPECT_EQ(r.rewards[k], after.per_agent_counts[k] - before.per_agent_counts[k]);
        }
        s = r.state;
    }
}

TEST(OracleMap, PointMassPeaksUnderneath)
{
    // 10 degree cone: radius ~5 m, so only the cell nearest the point mass covers it.
    RadioParams p;
    p.antenna_directivity_deg = 10.0;
    std::vector<Position> users(40, Position{33.0, 71.0});
    users.push_back({95.0, 5.0});
    const auto field = field_from(users);
    const WorldState s = state_with({{9, 0}}, field);
    const RewardMap map = oracle_reward_map(s, p);
    EXPECT_EQ(map.argmax(0), (Cell{3, 7}));
    EXPECT_DOUBLE_EQ(map.at(0, {3, 7}), 40.0 / 41.0);
    EXPECT_DOUBLE_EQ(map.at(0, {9, 0}), 1.0 / 41.0);
    EXPECT_EQ(std::count(map.values.begin(), map.values.end(), 0.0), 98);
    for (double v : map.values) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
    }
}

TEST(OracleMap, EmptyFieldIsZero)
{
    const WorldState s = state_with({{9, 0}, {1, 1}}, field_from({}));
    const RewardMap map = oracle_reward_map(s, RadioParams{});
    EXPECT_EQ(map.channels, 2);
    for (double v : map.values) {
        EXPECT_EQ(v, 0.0);
    }
}

TEST(OracleMap, SecondAgentInterferes)
{
    const EnvConfig cfg;
    const RadioParams p;
    const auto field = std::make_shared<const UserField>(sample_user_field(cfg, 12));
    const RewardMap solo = oracle_reward_map(state_with({{4, 4}}, field), p);
    const RewardMap duo = oracle_reward_map(state_with({{4, 4}, {5, 4}}, field), p);
    EXPECT_LT(duo.at(0, {5, 4}), solo.at(0, {5, 4}));
    EXPECT_LT(duo.at(0, {4, 4}), solo.at(0, {4, 4}));
}

TEST(OracleMap, ValuesEqualConnectedFraction)
{
    const EnvConfig cfg;
    const RadioParams p;
    Rng rng(10);
    for (int trial = 0; trial < 100; ++trial) {
        const auto field = std::make_shared<const UserField>(sample_user_field(cfg, static_cast<std::uint64_t>(trial % 5)));
        const std::size_t n = 1 + uniform_index(rng, 3);
        std::vector<Cell> cells;
        for (std::size_t k = 0; k < n; ++k) {
            cells.push_back(Lattice{}.cell(uniform_index(rng, 100)));
        }
        const RewardMap map = oracle_reward_map(state_with(cells, field), p);
        const std::size_t agent = uniform_index(rng, n);
        const Cell c = Lattice{}.cell(uniform_index(rng, 100));
        std::vector<Cell> moved = cells;
        moved[agent] = c;
        const auto r = connectivity(state_with(moved, field), p);
        EXPECT_EQ(map.at(static_cast<int>(agent), c), r.per_agent_counts[agent] / 1050.0);
    }
}

TEST(Greedy, ZeroWindowKeepsStart)
{
    const EnvConfig cfg;
    const RadioParams p;
    const WorldState s = initial_state(cfg, std::make_shared<const UserField>(sample_user_field(cfg, 1)));
    const auto g = greedy_explore(s, p, 0, 0, 3);
    ASSERT_EQ(g.trajectory.size(), 1u);
    EXPECT_EQ(g.trajectory[0], s.drone_cells);
    EXPECT_EQ(g.rounds, 0u);
    EXPECT_EQ(g.final_state.drone_cells, s.drone_cells);
}

TEST(Greedy, CommitsAreMonotonePerAgent)
{
    EnvConfig cfg;
    cfg.n_drones = 3;
    const RadioParams p;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto field = std::make_shared<const UserField>(sample_user_field(cfg, seed));
        RadioEnvironment env(cfg, p, field);
        GreedyOptions o;
        o.stop_window = 300;
        o.rng_seed = seed;
        const auto g = env.greedy_explore(env.initial_state(3), o);
        EXPECT_EQ(g.trajectory.size(), g.commits.size() + 1);
        for (std::size_t i = 0; i < g.commits.size(); ++i) {
            const auto& c = g.commits[i];
            EXPECT_GT(c.count_after, c.count_before);
            const auto before = env.connectivity(g.trajectory[i]);
            const auto after = env.connectivity(g.trajectory[i + 1]);
            EXPECT_EQ(before.per_agent_counts[c.agent], c.count_before);
            EXPECT_EQ(after.per_agent_counts[c.agent], c.count_after);
        }
        EXPECT_EQ(g.final_state.drone_cells, g.trajectory.back());
        for (double v : g.observations.values) {
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 1.0);
        }
    }
}

TEST(Greedy, ObservationsAreSparseOracleValues)
{
    const EnvConfig cfg;
    const RadioParams p;
    const auto field = std::make_shared<const UserField>(sample_user_field(cfg, 77));
    RadioEnvironment env(cfg, p, field);
    GreedyOptions o;
    o.stop_window = 10;
    o.rng_seed = 1;
    const auto g = env.greedy_explore(env.initial_state(1), o);
    const RewardMap oracle = env.oracle_reward_map(g.final_state.drone_cells);
    int zeros = 0;
    for (std::size_t c = 0; c < 100; ++c) {
        const Cell cell = env.lattice().cell(c);
        const double v = g.observations.at(0, cell);
        if (v != 0.0) {
            EXPECT_EQ(v, oracle.at(0, cell));
        }
        zeros += v == 0.0;
    }
    EXPECT_GT(zeros, 0);
}

TEST(Greedy, SingleDroneFindsExhaustiveArgmax)
{
    const EnvConfig cfg;
    const RadioParams p;
    int hits = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto field = std::make_shared<const UserField>(sample_user_field(cfg, 1000 + seed));
        RadioEnvironment env(cfg, p, field);
        int best = 0;
        for (std::size_t c = 0; c < 100; ++c) {
            const Cell cell = env.lattice().cell(c);
            best = std::max(best, env.connectivity(std::vector<Cell>{cell}).total_connected);
        }
        const auto g = greedy_explore(env.initial_state(1), p, 100000, 1000000, seed);
        hits += env.connectivity(g.final_state.drone_cells).total_connected == best;
    }
    EXPECT_GE(hits, 19);
}
