#include <gtest/gtest.h>

#include "ncmimo/campaign.hpp"
#include "ncmimo/io.hpp"
#include "ncmimo/scenario.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace ncmimo;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "ncmimo_tests";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int run(const std::string& args) {
  const std::string cmd = std::string(NCMIMO_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Presets, Example1) {
  const Scenario sc = preset("example1");
  ASSERT_EQ(sc.geometry.tx_count(), 3);
  ASSERT_EQ(sc.geometry.rx_count(), 5);
  EXPECT_EQ(sc.geometry.transmitters[0], Position3d(0, -5000, 0));
  EXPECT_EQ(sc.geometry.transmitters[1], Position3d(0, 5000, 0));
  EXPECT_EQ(sc.geometry.transmitters[2], Position3d(5000, 5000, 0));
  EXPECT_EQ(sc.radar.carrier_frequency, 3e8);
  EXPECT_EQ(sc.radar.snapshot_count, 50);
  EXPECT_EQ(sc.radar.snapshot_interval, 0.01);
  EXPECT_EQ(sc.truth.order(), 2);
  EXPECT_TRUE(sc.truth.planar());
  EXPECT_EQ(sc.truth(0, 0), 9800.0);
  EXPECT_EQ(sc.truth(0, 1), 100.0);
  EXPECT_EQ(sc.truth(0, 2), -20.0);
  EXPECT_EQ(sc.truth(1, 0), 0.0);
  EXPECT_EQ(sc.schedule.pulses_per_cit, 8);
  EXPECT_EQ(sc.schedule.pulse_repetition, 1.25e-3);
  EXPECT_EQ(sc.reflection, draw_reflection(15, sc.reflection_seed));
}

TEST(Presets, Example2) {
  const Scenario sc = preset("example2");
  EXPECT_EQ(sc.truth.order(), 1);
  EXPECT_EQ(sc.truth(0, 0), 8400.0);
  EXPECT_EQ(sc.truth(1, 0), 9800.0);
  EXPECT_EQ(sc.truth(0, 1), 40.0);
  EXPECT_EQ(sc.truth(1, 1), -50.0);
  EXPECT_EQ(sc.radar.snapshot_count, 50);
  EXPECT_EQ(sc.radar.snapshot_interval, 0.04);
  EXPECT_THROW(preset("example3"), ConfigError);
}

TEST(ScenarioConfig, RoundTripsLosslessly) {
  for (const char* name : {"example1", "example2"}) {
    const Scenario a = preset(name);
    const std::string text = serialize_scenario(a);
    const Scenario b = parse_scenario(text);
    EXPECT_EQ(b.name, a.name);
    EXPECT_EQ(b.truth.table(), a.truth.table());
    EXPECT_EQ(b.truth.planar(), a.truth.planar());
    ASSERT_EQ(b.geometry.rx_count(), a.geometry.rx_count());
    for (int n = 0; n < a.geometry.rx_count(); ++n) EXPECT_EQ(b.geometry.receivers[n], a.geometry.receivers[n]);
    EXPECT_EQ(b.radar.carrier_frequency, a.radar.carrier_frequency);
    EXPECT_EQ(b.radar.snapshot_interval, a.radar.snapshot_interval);
    EXPECT_EQ(b.reflection, a.reflection);
    EXPECT_EQ(b.estimator.half_widths, a.estimator.half_widths);
    EXPECT_EQ(serialize_scenario(b), text);
  }
}

TEST(ScenarioConfig, LoadsFromFile) {
  const fs::path p = scratch("scenario.yaml");
  Scenario sc = preset("example2");
  sc.name = "edited";
  write_text(p, serialize_scenario(sc));
  const Scenario back = load_scenario(p.string());
  EXPECT_EQ(back.name, "edited");
  EXPECT_EQ(back.truth.table(), sc.truth.table());
  EXPECT_THROW(load_scenario((fs::temp_directory_path() / "ncmimo_tests" / "nope.yaml").string()), ConfigError);
}

TEST(ScenarioConfig, MissingReceiversNamesTheKey) {
  std::string text = serialize_scenario(preset("example1"));
  const auto start = text.find("  receivers:");
  const auto end = text.find("radar:");
  ASSERT_NE(start, std::string::npos);
  text.erase(start, end - start);
  try {
    parse_scenario(text);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("receivers"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("geometry"), std::string::npos) << e.what();
  }
}

TEST(ScenarioConfig, InvariantFailuresAreNamed) {
  std::string text = serialize_scenario(preset("example1"));
  const auto at = text.find("snapshot_count: 50");
  ASSERT_NE(at, std::string::npos);
  text.replace(at, 18, "snapshot_count: 0");
  try {
    parse_scenario(text);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("snapshot_count"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_scenario("[1, 2]"), ConfigError);
  EXPECT_THROW(parse_scenario("name: x\n  bad: [\n"), ConfigError);
}

TEST(ParameterNames, RoundTrip) {
  EXPECT_EQ(parameter_name(2, 0), "x_pos");
  EXPECT_EQ(parameter_name(2, 4), "y_vel");
  EXPECT_EQ(parameter_unit(2, 5), "m/s^2");
  EXPECT_EQ(parameter_name(1, 3), "y_vel");
  for (int i = 0; i < 9; ++i) EXPECT_EQ(parameter_index(2, parameter_name(2, i)), i);
  EXPECT_THROW(parameter_index(2, "w_pos"), ConfigError);
}

TEST(DopplerCheck, StaticTargetIsZero) {
  Scenario sc = preset("example1");
  sc.truth = MotionCoefficientsd::planar_from(Eigen::VectorXd::Constant(1, 9800.0), Eigen::VectorXd::Zero(1));
  EXPECT_EQ(check_doppler_cit(sc), 0.0);
}

TEST(DopplerCheck, FasterTargetSpreadsMore) {
  // Constant velocity, so the spread is the v^2/r term alone. With example1's
  // -20 m/s^2 the acceleration term dominates and partly cancels it instead.
  Scenario sc = preset("example1");
  Eigen::Matrix<double, 3, Eigen::Dynamic> t = sc.truth.table();
  t.col(2).setZero();
  sc.truth = MotionCoefficientsd(t, true);
  const double base = check_doppler_cit(sc);
  t.col(1) *= 2;
  sc.truth = MotionCoefficientsd(t, true);
  const double doubled = check_doppler_cit(sc);
  EXPECT_GT(doubled, base);
  EXPECT_NEAR(doubled / base, 4.0, 0.1);
}

TEST(DopplerCheck, MatchesDirectSpread) {
  // brute force over every path and CIT with the scene-level Doppler
  const Scenario sc = preset("example1");
  const double span = (sc.schedule.pulses_per_cit - 1) * sc.schedule.pulse_repetition;
  double worst = 0;
  for (int k = 0; k < sc.radar.snapshot_count; ++k)
    for (int m = 0; m < 3; ++m)
      for (int n = 0; n < 5; ++n) {
        const double t = sc.radar.time_of(k);
        worst = std::max(worst, std::abs(doppler_at(sc.geometry, sc.truth, sc.radar, m, n, t, 1e-5) -
                                         doppler_at(sc.geometry, sc.truth, sc.radar, m, n, t + span, 1e-5)));
      }
  EXPECT_NEAR(check_doppler_cit(sc), worst, 1e-12);
}

TEST(SnapshotFile, RoundTripIsExact) {
  const Scenario sc = preset("example1");
  const SnapshotSet s = synthesize(sc, 0.5, 314);
  const fs::path p = scratch("snaps.bin");
  write_snapshots(p, s);
  EXPECT_EQ(fs::file_size(p), 8u + 12u + 8u + 8u + 16u * 15u * 50u);
  const SnapshotSet back = read_snapshots(p);
  EXPECT_EQ(back.tx_count, 3);
  EXPECT_EQ(back.rx_count, 5);
  EXPECT_EQ(back.seed, 314u);
  EXPECT_EQ(back.noise_variance, 0.5);
  EXPECT_EQ(back.data, s.data);
}

TEST(SnapshotFile, RejectsDamage) {
  const Scenario sc = preset("example2");
  const fs::path p = scratch("damaged.bin");
  write_snapshots(p, synthesize(sc, 0.5, 1));
  fs::resize_file(p, fs::file_size(p) - 3);
  EXPECT_THROW(read_snapshots(p), IoError);
  write_text(p, "not a snapshot file at all");
  EXPECT_THROW(read_snapshots(p), IoError);
  EXPECT_THROW(read_snapshots(scratch("missing.bin")), IoError);
  EXPECT_THROW(write_snapshots("/nonexistent-dir/x.bin", synthesize(sc, 0.5, 1)), IoError);
}

TEST(Emit, RmseCsvLayout) {
  RmseTable t;
  t.rows.push_back({0.0, "x_pos", "m", 1.5, 2.25, 100, 0});
  t.rows.push_back({-5.0, "location", "m", 0.1, 1e-20, 99, 1});
  EXPECT_EQ(format_rmse_csv(t),
            "snr_db,parameter,unit,rmse,crb_std,trials,excluded\n"
            "0,x_pos,m,1.5,2.25,100,0\n"
            "-5,location,m,0.1,1e-20,99,1\n");
}

TEST(Emit, ContourLayoutAndEmptyRejection) {
  ContourGrid g{{1, 99.0, 101.0, 2}, {2, -21.0, -19.0, 3}, Eigen::MatrixXd(2, 3)};
  g.values << 1, 2, 3, 4.5, 5, 6;
  EXPECT_EQ(format_contour(g, 2), "# axis1 x_vel 99 101 2\n# axis2 x_acc -21 -19 3\n1,2,3\n4.5,5,6\n");
  ContourGrid empty{{1, 0, 1, 2}, {2, 0, 1, 2}, Eigen::MatrixXd()};
  EXPECT_THROW(format_contour(empty, 2), IoError);
}

TEST(Emit, CrbCsv) {
  const Scenario sc = preset("example2");
  const auto crb = scenario_crb(sc, 1.0);
  const std::string csv = format_crb_csv(crb);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "parameter,unit,crb_std");
  EXPECT_NE(csv.find("\nx_pos,m,"), std::string::npos);
  EXPECT_NE(csv.find("\ny_vel,m/s,"), std::string::npos);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
}

TEST(Emit, NumbersRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, 9847.5, -1e-300, 6.02214076e23}) EXPECT_EQ(std::stod(format_number(v)), v);
  EXPECT_EQ(format_number(std::numeric_limits<double>::infinity()), "inf");
}

TEST(Campaign, NoiselessSingleTrialIsExact) {
  const Scenario sc = preset("example1");
  CampaignSpec spec;
  spec.snr_db = {std::numeric_limits<double>::infinity()};
  spec.trials = 1;
  spec.box = BoxPolicy::init_centered;
  const RmseTable t = run_campaign(sc, spec);
  ASSERT_EQ(t.rows.size(), 7u);
  for (const auto& r : t.rows) {
    EXPECT_LE(r.rmse, 1e-3) << r.parameter;
    EXPECT_EQ(r.trials, 1);
    EXPECT_EQ(r.excluded, 0);
  }
}

TEST(Campaign, DeterministicAndThreadCountIndependent) {
  const Scenario sc = preset("example2");
  CampaignSpec spec;
  spec.snr_db = {0.0, 10.0};
  spec.trials = 4;
  spec.optimizer.population = 24;
  spec.optimizer.generations = 30;
  spec.base_seed = 77;
  spec.threads = 1;
  const std::string a = format_rmse_csv(run_campaign(sc, spec));
  spec.threads = 3;
  const std::string b = format_rmse_csv(run_campaign(sc, spec));
  EXPECT_EQ(a, b);
  spec.base_seed = 78;
  EXPECT_NE(format_rmse_csv(run_campaign(sc, spec)), a);
}

TEST(Campaign, TableShape) {
  const Scenario sc = preset("example2");
  CampaignSpec spec;
  spec.snr_db = {5.0};
  spec.trials = 2;
  spec.optimizer.population = 16;
  spec.optimizer.generations = 10;
  const RmseTable t = run_campaign(sc, spec);
  ASSERT_EQ(t.rows.size(), 5u);
  for (const auto& r : t.rows) {
    EXPECT_GE(r.rmse, 0.0);
    EXPECT_GT(r.crb_std, 0.0);
  }
  const auto& loc = t.at(5.0, "location");
  EXPECT_NEAR(loc.crb_std * loc.crb_std,
              t.at(5.0, "x_pos").crb_std * t.at(5.0, "x_pos").crb_std +
                  t.at(5.0, "y_pos").crb_std * t.at(5.0, "y_pos").crb_std,
              1e-9 * loc.crb_std * loc.crb_std);
  EXPECT_THROW(t.at(0.0, "x_pos"), std::out_of_range);
}

TEST(Campaign, RejectsBadSpecs) {
  const Scenario sc = preset("example2");
  CampaignSpec spec;
  EXPECT_THROW(run_campaign(sc, spec), std::invalid_argument);
  spec.snr_db = {0.0};
  spec.trials = 0;
  EXPECT_THROW(run_campaign(sc, spec), std::invalid_argument);
  spec.trials = 1;
  spec.snr_db = {std::numeric_limits<double>::infinity()};
  EXPECT_THROW(run_campaign(sc, spec), CampaignError);
}

TEST(Campaign, TooManyFailuresFailTheCampaign) {
  Scenario sc = preset("example2");
  // the coarse initializer needs half-widths for every order
  sc.estimator.half_widths = {30.0, 5.0};
  CampaignSpec spec;
  spec.snr_db = {0.0};
  spec.trials = 3;
  spec.box = BoxPolicy::init_centered;
  spec.optimizer.population = 8;
  spec.optimizer.generations = 2;
  // A geometry with collinear receivers makes every init-centered trial throw.
  for (auto& q : sc.geometry.receivers) q.y() = 0.0;
  EXPECT_THROW(run_campaign(sc, spec), CampaignError);
}

TEST(Cli, ExitCodes) {
  const fs::path out = scratch("cli_crb.csv");
  EXPECT_EQ(run("crb --scenario example1 --snr 0 --out " + out.string()), 0);
  EXPECT_NE(slurp(out).find("x_pos,m,"), std::string::npos);
  EXPECT_NE(run("crb --scenario nowhere"), 0);
  EXPECT_NE(run("bogus"), 0);
  EXPECT_NE(run("estimate --snapshots " + scratch("missing.bin").string()), 0);
  EXPECT_EQ(run("check-doppler"), 0);
}

TEST(Cli, SimulateThenEstimate) {
  const fs::path snaps = scratch("cli.bin"), est = scratch("cli_est.json");
  ASSERT_EQ(run("simulate --scenario example2 --snr 10 --seed 5 --out " + snaps.string()), 0);
  ASSERT_EQ(run("estimate --scenario example2 --seed 5 --population 24 --generations 30 --snapshots " +
                snaps.string() + " --out " + est.string()),
            0);
  const std::string text = slurp(est);
  EXPECT_NE(text.find("\"x_pos\""), std::string::npos);
  EXPECT_NE(text.find("\"positive_ll\""), std::string::npos);
  // a scenario with a different snapshot count does not match this file
  Scenario shorter = preset("example2");
  shorter.radar.snapshot_count = 20;
  const fs::path yaml = scratch("short.yaml");
  write_text(yaml, serialize_scenario(shorter));
  EXPECT_NE(run("estimate --scenario " + yaml.string() + " --snapshots " + snaps.string()), 0);
}

TEST(Cli, ContourFile) {
  const fs::path out = scratch("contour.txt");
  ASSERT_EQ(run("contour --scenario example1 --snr 0 --seed 2 --axis1 x_vel:98:102:5 --axis2 x_acc:-24:-16:4 --out " +
                out.string()),
            0);
  const std::string text = slurp(out);
  EXPECT_EQ(text.rfind("# axis1 x_vel 98 102 5\n# axis2 x_acc -24 -16 4\n", 0), 0u);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 7);
  EXPECT_NE(run("contour --axis1 x_vel:1:0:5 --axis2 x_acc:-24:-16:4"), 0);
}
