#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "qtube/errors.hpp"
#include "qtube/experiment.hpp"

using namespace qtube;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

// small barrier scenario that runs in well under a second
RunConfig mini_config(Scenario scenario) {
    RunConfig cfg;
    cfg.scenario = scenario;
    cfg.grid = {-30.0, 30.0, 1024};
    cfg.potential = {PotentialSpec::Kind::tanh_barrier, 30.0, 5.0, -2.0, 2.0};
    cfg.packets = {{-10.0, 8.0, 1.0, 1.0}};
    cfg.prop = {5e-4, 600, 20, 1.0};
    cfg.ensemble = {16, SamplingScheme::even, 1e-4, 4, 32};
    cfg.tube.enabled = false;
    const double inf = std::numeric_limits<double>::infinity();
    cfg.domains = {{"T", 2.0, inf}, {"R", -inf, -2.0}, {"I", -2.0, 2.0}};
    cfg.out_dir = "exp_test_out";
    return cfg;
}

}  // namespace

TEST_CASE("tunnel preset reproduces the published parameters") {
    const RunConfig cfg = tunnel_preset();
    REQUIRE(cfg.packets.size() == 3);
    CHECK(cfg.packets[0].c.real() == 1.0);
    CHECK(cfg.packets[1].c.real() == 0.75);
    CHECK(cfg.packets[2].c.real() == 0.5);
    CHECK(cfg.packets[0].x0 == -10.0);
    CHECK(cfg.packets[1].x0 == -12.0);
    CHECK(cfg.packets[2].x0 == -9.0);
    CHECK(cfg.packets[0].p0 == 10.0);
    CHECK(cfg.packets[1].p0 == 20.0);
    CHECK(cfg.packets[2].p0 == 15.0);
    CHECK(cfg.packets[0].sigma0 == 0.2);
    CHECK(cfg.packets[1].sigma0 == 1.6);
    CHECK(cfg.packets[2].sigma0 == 0.8);
    CHECK(cfg.potential.V0 == 150.0);
    CHECK(cfg.potential.alpha == 10.0);
    CHECK(cfg.potential.x_minus == -2.0);
    CHECK(cfg.potential.x_plus == 2.0);
    CHECK(cfg.prop.mass == 1.0);
    CHECK(cfg.prop.dt * cfg.prop.n_steps == doctest::Approx(1.5));
    CHECK(cfg.tube.target_label == "T");
    CHECK(cfg.tube.bracket_lo == -12.5);
    CHECK(cfg.tube.bracket_hi == -8.5);
}

TEST_CASE("grating preset reproduces the published parameters") {
    const RunConfig cfg = grating_preset();
    REQUIRE(cfg.packets.size() == 5);
    for (int i = 0; i < 5; ++i) {
        CHECK(cfg.packets[static_cast<size_t>(i)].x0 == -4.0 + 2.0 * i);
        CHECK(cfg.packets[static_cast<size_t>(i)].p0 == 0.0);
        CHECK(cfg.packets[static_cast<size_t>(i)].sigma0 == 0.2);
        CHECK(cfg.packets[static_cast<size_t>(i)].c.real() == 1.0);
    }
    CHECK(cfg.potential.kind == PotentialSpec::Kind::free);
    CHECK(cfg.grating.n_slits == 5);
    CHECK(cfg.grating.spacing == 2.0);
    CHECK(cfg.grating.t_segment == 10.0);
    CHECK(cfg.grating.t_fraunhofer == 20.0);
    CHECK(cfg.grating.branch_swarm_width == 0.030);
}

TEST_CASE("config file application and validation") {
    const std::string path = "test_config.conf";
    write_file(path,
               "# comment line\n"
               "[grid]\n"
               "x_min = -25\n"
               "x_max = 25   # inline comment\n"
               "n_points = 512\n"
               "[propagation]\n"
               "dt = 1e-3\n"
               "n_steps = 100\n"
               "[ensemble]\n"
               "scheme = quantile\n"
               "n_trajectories = 32\n"
               "[packet]\n"
               "x0 = -5\n"
               "p0 = 2\n"
               "sigma0 = 0.5\n"
               "[packet]\n"
               "x0 = 5\n"
               "c = 0.5\n"
               "[domains]\n"
               "left = -inf 0\n"
               "right = 0 inf\n"
               "[output]\n"
               "directory = my_out\n"
               "export_snapshots = true\n");

    RunConfig cfg = tunnel_preset();
    apply_config_file(cfg, path);
    CHECK(cfg.grid.x_min == -25.0);
    CHECK(cfg.grid.n_points == 512);
    CHECK(cfg.prop.dt == 1e-3);
    CHECK(cfg.prop.n_steps == 100);
    CHECK(cfg.ensemble.scheme == SamplingScheme::quantile);
    CHECK(cfg.ensemble.n_trajectories == 32);
    // packet sections replace the preset packets
    REQUIRE(cfg.packets.size() == 2);
    CHECK(cfg.packets[0].x0 == -5.0);
    CHECK(cfg.packets[1].c.real() == 0.5);
    CHECK(cfg.packets[1].sigma0 == 1.0);  // default
    REQUIRE(cfg.domains.size() == 2);
    CHECK(cfg.domains[0].label == "left");
    CHECK(std::isinf(cfg.domains[0].lo));
    CHECK(cfg.out_dir == "my_out");
    CHECK(cfg.export_snapshots);
    fs::remove(path);
}

TEST_CASE("unknown keys and sections are hard errors") {
    const std::string path = "test_bad_config.conf";

    write_file(path, "[grid]\nx_min = -25\nspacing = 2\n");
    RunConfig cfg = tunnel_preset();
    CHECK_THROWS_AS(apply_config_file(cfg, path), ConfigError);

    write_file(path, "[gird]\nx_min = -25\n");
    CHECK_THROWS_AS(apply_config_file(cfg, path), ConfigError);

    write_file(path, "[grid]\nx_min = abc\n");
    CHECK_THROWS_AS(apply_config_file(cfg, path), ConfigError);

    write_file(path, "x_min = -25\n");
    CHECK_THROWS_AS(apply_config_file(cfg, path), ConfigError);

    CHECK_THROWS_AS(apply_config_file(cfg, "no_such_file.conf"), ConfigError);
    fs::remove(path);
}

TEST_CASE("free single-packet run keeps unit probability in the full domain") {
    RunConfig cfg = mini_config(Scenario::custom);
    cfg.potential = PotentialSpec{};
    const double inf = std::numeric_limits<double>::infinity();
    cfg.domains = {{"all", -inf, inf}};
    cfg.out_dir = "exp_free_out";
    const ExperimentReport report = run_custom(cfg);
    REQUIRE(report.series_labels.size() == 1);
    for (double p : report.series[0]) CHECK(p == doctest::Approx(1.0).epsilon(1e-10));
    fs::remove_all(cfg.out_dir);
}

TEST_CASE("identical configs give byte-identical outputs") {
    RunConfig a = mini_config(Scenario::custom);
    a.out_dir = "exp_det_a";
    RunConfig b = mini_config(Scenario::custom);
    b.out_dir = "exp_det_b";
    run_custom(a);
    run_custom(b);
    CHECK(slurp("exp_det_a/report.json") == slurp("exp_det_b/report.json"));
    CHECK(slurp("exp_det_a/series.csv") == slurp("exp_det_b/series.csv"));
    CHECK(slurp("exp_det_a/trajectories.csv") == slurp("exp_det_b/trajectories.csv"));
    fs::remove_all("exp_det_a");
    fs::remove_all("exp_det_b");
}

TEST_CASE("tunnel scenario through the custom path is byte-identical") {
    RunConfig a = mini_config(Scenario::tunnel);
    a.out_dir = "exp_eq_tunnel";
    RunConfig b = mini_config(Scenario::custom);
    b.out_dir = "exp_eq_custom";
    run_tunneling(a);
    run_custom(b);
    CHECK(slurp("exp_eq_tunnel/report.json") == slurp("exp_eq_custom/report.json"));
    CHECK(slurp("exp_eq_tunnel/series.csv") == slurp("exp_eq_custom/series.csv"));
    fs::remove_all("exp_eq_tunnel");
    fs::remove_all("exp_eq_custom");

    RunConfig wrong = mini_config(Scenario::custom);
    CHECK_THROWS_AS(run_tunneling(wrong), ConfigError);
}

TEST_CASE("output schemas") {
    RunConfig cfg = mini_config(Scenario::custom);
    cfg.out_dir = "exp_schema_out";
    cfg.export_snapshots = true;
    const ExperimentReport report = run_custom(cfg);

    std::ifstream series(cfg.out_dir + "/series.csv");
    std::string header;
    std::getline(series, header);
    CHECK(header == "t,P_T,P_R,P_I");
    int rows = 0;
    std::string line;
    while (std::getline(series, line)) ++rows;
    CHECK(rows == static_cast<int>(report.times.size()));

    CHECK(fs::exists(cfg.out_dir + "/report.json"));
    CHECK(fs::exists(cfg.out_dir + "/trajectories.csv"));
    CHECK(fs::exists(cfg.out_dir + "/snapshots.csv"));

    // probabilities partition unity at every snapshot
    for (size_t i = 0; i < report.times.size(); ++i) {
        const double sum = report.series[0][i] + report.series[1][i] + report.series[2][i];
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-8));
    }
    fs::remove_all(cfg.out_dir);
}

TEST_CASE("report carries diagnostics and trajectory audits") {
    RunConfig cfg = mini_config(Scenario::custom);
    cfg.out_dir = "exp_diag_out";
    const ExperimentReport report = run_custom(cfg);
    CHECK(report.max_norm_drift <= 1e-9);
    CHECK(report.max_energy_drift_rel <= 1e-6);
    REQUIRE(report.noncrossing.has_value());
    CHECK(report.noncrossing->violations.empty());
    REQUIRE(report.born.has_value());
    CHECK(report.born->pairs_considered > 0);
    fs::remove_all(cfg.out_dir);
}

TEST_CASE("run validations") {
    RunConfig cfg = mini_config(Scenario::custom);
    cfg.packets.clear();
    CHECK_THROWS_AS(run_custom(cfg), ConfigError);

    cfg = mini_config(Scenario::custom);
    cfg.tube.enabled = true;
    cfg.tube.target_label = "missing";
    CHECK_THROWS_AS(run_custom(cfg), ConfigError);

    cfg = mini_config(Scenario::grating);
    CHECK_THROWS_AS(run_grating(cfg), ConfigError);  // grating block disabled
}
