#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "cvqkd/app.hpp"
#include "cvqkd/errors.hpp"

using namespace cvqkd;
using namespace cvqkd::app;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code;
  std::string out, err;
};

CliRun cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("cvqkd_app_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::string value_of(const std::string& text, const std::string& key) {
  const auto at = text.find(key + " = ");
  if (at == std::string::npos) return {};
  const auto start = at + key.size() + 3;
  return text.substr(start, text.find('\n', start) - start);
}

}  // namespace

TEST(Config, parse_lines) {
  std::istringstream in("# comment\nchannel.eta_ch = 0.5  # trailing\n\n  signal.alpha=1.25\n");
  const auto m = parse_config(in);
  EXPECT_EQ(m.at("channel.eta_ch"), "0.5");
  EXPECT_EQ(m.at("signal.alpha"), "1.25");
  std::istringstream bad("no equals sign here\n");
  EXPECT_THROW(parse_config(bad), ValidationError);
}

TEST(Config, defaults_resolve) {
  const RunConfig c = resolve(default_config());
  EXPECT_EQ(c.alpha, 0.8);
  EXPECT_FALSE(c.threshold.has_value());
  EXPECT_EQ(c.eta_grid.size(), 9u);
  EXPECT_EQ(c.eta_grid[2], 0.3);
  EXPECT_EQ(c.threshold_grid.size(), 61u);
  EXPECT_EQ(c.key_rate_convention, QuadratureConvention::half());
  EXPECT_EQ(c.homodyne_convention, QuadratureConvention::quarter());
}

TEST(Config, rooftop_preset) {
  const RunConfig c = resolve(rooftop_preset());
  EXPECT_NEAR(c.channel.transmittance(), 0.6391, 1e-12);
  EXPECT_EQ(c.plan.pulse_rate_hz, 1e5);
  EXPECT_EQ(c.pulses, 1'000'000u);
}

TEST(Config, every_problem_is_reported) {
  ConfigMap m = default_config();
  m["channel.eta_ch"] = "1.5";
  m["signal.alpha"] = "abc";
  m["frame.calibration_window"] = "0";
  m["bogus.key"] = "1";
  try {
    resolve(m);
    FAIL();
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    EXPECT_GE(e.problems().size(), 4u);
    for (const char* key : {"channel.eta_ch", "signal.alpha", "frame.calibration_window", "bogus.key"}) {
      EXPECT_NE(msg.find(key), std::string::npos) << key;
    }
  }
}

TEST(Config, grid_syntax) {
  ConfigMap m = default_config();
  m["optimizer.eta_grid"] = "0.25, 0.5,0.75";
  m["montecarlo.thresholds"] = "0:0.1:0.3";
  const RunConfig c = resolve(m);
  EXPECT_EQ(c.eta_grid, (std::vector<double>{0.25, 0.5, 0.75}));
  EXPECT_EQ(c.mc_thresholds, (std::vector<double>{0.0, 0.1, 0.2, 0.3}));
  m["montecarlo.thresholds"] = "1:0:2";
  EXPECT_THROW(resolve(m), ValidationError);
}

TEST(Cli, keyrate_rooftop_preset) {
  const auto dir = scratch("keyrate");
  const auto r = cli({"keyrate", "--preset", "rooftop", "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string report = slurp(dir / "keyrate_report.txt");
  EXPECT_NEAR(std::stod(value_of(report, "key_rate_bits_per_pulse")), 0.032, 0.15 * 0.032);
  EXPECT_NEAR(std::stod(value_of(report, "threshold")), 1.18, 0.05);
  EXPECT_NEAR(std::stod(value_of(report, "throughput_bits_per_s")), 3200, 0.15 * 3200);
  EXPECT_TRUE(fs::exists(dir / "keyrate_report.csv"));
  EXPECT_TRUE(fs::exists(dir / "manifest.json"));
}

TEST(Cli, zero_amplitude_lossless_gives_zero_key) {
  const auto dir = scratch("zero");
  const auto r = cli({"keyrate", "--eta-ch", "1", "--eta-det", "1", "--alpha", "0", "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(value_of(slurp(dir / "keyrate_report.txt"), "key_rate_bits_per_pulse"), "0");
}

TEST(Cli, explicit_threshold_and_cascade) {
  const auto dir = scratch("explicit");
  const auto r = cli({"keyrate", "--eta-ch", "0.8", "--eta-det", "0.8", "--threshold", "1.5", "--cascade", "ideal",
                      "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string report = slurp(dir / "keyrate_report.txt");
  EXPECT_EQ(value_of(report, "threshold"), "1.5");
  EXPECT_EQ(value_of(report, "cascade"), "ideal");
}

TEST(Cli, curves_outputs) {
  const auto dir = scratch("curves");
  const auto r = cli({"curves", "--set", "optimizer.eta_grid=0.3,0.64", "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"alpha_opt.csv", "error_rate.csv", "key_rate.csv"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  const std::string alpha = slurp(dir / "alpha_opt.csv");
  EXPECT_EQ(alpha.substr(0, alpha.find('\n')), "eta,alpha_opt,key_rate,converged");
  EXPECT_EQ(std::count(alpha.begin(), alpha.end(), '\n'), 3);
}

TEST(Cli, simulate_is_deterministic) {
  const auto a = scratch("sim_a"), b = scratch("sim_b"), c = scratch("sim_c");
  const std::vector<std::string> base{"simulate", "--pulses", "20000", "--seed", "9", "--dump-session"};
  auto with = [&](const fs::path& d) {
    auto v = base;
    v.insert(v.end(), {"--out", d.string()});
    return v;
  };
  ASSERT_EQ(cli(with(a)).code, 0);
  ASSERT_EQ(cli(with(b)).code, 0);
  for (const char* f : {"simulation.csv", "session.csv", "manifest.json"}) {
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  auto other = with(c);
  other[4] = "10";
  ASSERT_EQ(cli(other).code, 0);
  EXPECT_NE(slurp(a / "simulation.csv"), slurp(c / "simulation.csv"));
}

TEST(Cli, manifest_records_hashes) {
  const auto dir = scratch("manifest");
  ASSERT_EQ(cli({"optimize-threshold", "--out", dir.string()}).code, 0);
  const std::string manifest = slurp(dir / "manifest.json");
  EXPECT_NE(manifest.find("\"command\": \"optimize-threshold\""), std::string::npos) << manifest;
  EXPECT_NE(manifest.find(sha256_file(dir / "optimize_threshold.txt")), std::string::npos);
  EXPECT_EQ(sha256_file(dir / "optimize_threshold.txt").size(), 64u);
}

TEST(Cli, optimize_alpha) {
  const auto dir = scratch("alpha");
  ASSERT_EQ(cli({"optimize-alpha", "--eta-ch", "0.8", "--eta-det", "0.8", "--cascade", "ideal", "--out", dir.string()})
                .code,
            0);
  const std::string text = slurp(dir / "optimize_alpha.txt");
  EXPECT_NEAR(std::stod(value_of(text, "alpha_opt")), 0.80, 0.02);
  EXPECT_EQ(value_of(text, "converged"), "true");
}

TEST(Cli, noise_report) {
  const auto dir = scratch("noise");
  const auto r = cli({"noise", "--pulses", "100000", "--unbalance", "0.01", "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string text = slurp(dir / "noise_report.txt");
  EXPECT_NEAR(std::stod(value_of(text, "unbalance_excess_noise")), unbalance_excess_noise(0.01), 1e-15);
  EXPECT_FALSE(value_of(text, "consistent_with_zero").empty());
}

TEST(Cli, too_few_pulses_is_a_validation_error) {
  const auto r = cli({"noise", "--pulses", "10", "--out", scratch("few").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("error"), std::string::npos);
}

TEST(Cli, malformed_config_lists_all_fields) {
  const auto cfg = fs::temp_directory_path() / "cvqkd_bad.cfg";
  {
    std::ofstream out(cfg);
    out << "channel.eta_ch = 2\nchannel.eta_det = -1\nsignal.alpha = x\n";
  }
  const auto r = cli({"keyrate", "--config", cfg.string(), "--out", scratch("badcfg").string()});
  EXPECT_EQ(r.code, 2);
  for (const char* key : {"channel.eta_ch", "channel.eta_det", "signal.alpha"}) {
    EXPECT_NE(r.err.find(key), std::string::npos) << key;
  }
  fs::remove(cfg);
}

TEST(Cli, usage_errors) {
  EXPECT_EQ(cli({}).code, 2);
  EXPECT_EQ(cli({"frobnicate"}).code, 2);
  EXPECT_EQ(cli({"keyrate", "--set", "novalue"}).code, 2);
  EXPECT_EQ(cli({"--help"}).code, 0);
}

TEST(Cli, flags_override_config_and_set_overrides_flags) {
  const auto dir = scratch("precedence");
  const auto r = cli({"keyrate", "--alpha", "0.5", "--set", "signal.alpha=0.9", "--eta-ch", "0.64", "--out",
                      dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(value_of(slurp(dir / "keyrate_report.txt"), "alpha"), "0.9");
}

TEST(Cli, non_convergence_exit_code) {
  const auto dir = scratch("nonconv");
  const auto r = cli({"optimize-alpha", "--eta-ch", "1", "--eta-det", "1", "--out", dir.string()});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("did not converge"), std::string::npos);
  EXPECT_EQ(value_of(slurp(dir / "optimize_alpha.txt"), "converged"), "false");
}
