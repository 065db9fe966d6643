#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "cvqkd/app.hpp"
#include "cvqkd/errors.hpp"
#include "cvqkd/format.hpp"

namespace cvqkd::app {

namespace {

void ensure_out_dir(const RunConfig& config) {
  std::error_code ec;
  std::filesystem::create_directories(config.out_dir, ec);
  const auto probe = config.out_dir / ".write_probe";
  std::ofstream test(probe);
  if (ec || !test) throw ValidationError({"output.dir '" + config.out_dir.string() + "' is not writable"});
  test.close();
  std::filesystem::remove(probe, ec);
}

std::ofstream open_artifact(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

double eta_of(const RunConfig& c) { return c.channel.transmittance(); }

}  // namespace

CommandResult cmd_keyrate(const RunConfig& config, std::ostream& log) {
  ensure_out_dir(config);
  SecurityContext ctx = config.key_rate_model().context(config.alpha, eta_of(config), config.threshold.value_or(0.0));
  const KeyRateReport report = key_rate(ctx, config.key_rate_model().quadrature);
  const double rate = config.plan.pulse_rate_hz;

  CommandResult result;
  const auto text = config.out_dir / "keyrate_report.txt";
  {
    auto out = open_artifact(text);
    write_report_text(out, report, rate);
    out << "cascade = " << config.cascade.describe() << '\n';
  }
  const auto csv = config.out_dir / "keyrate_report.csv";
  {
    auto out = open_artifact(csv);
    out << report_csv_header() << '\n' << report_csv_row(report, rate) << '\n';
  }
  result.artifacts = {text, csv};
  log << "G = " << report.key_rate << " bits/pulse at threshold " << report.threshold << " (eta = " << report.eta
      << "), throughput " << report.throughput(rate) << " bit/s at " << rate << " Hz\n";
  return result;
}

CommandResult cmd_curves(const RunConfig& config, std::ostream& log) {
  ensure_out_dir(config);
  const KeyRateModel model = config.key_rate_model();
  const double eta = eta_of(config);
  CommandResult result;

  const auto alpha_path = config.out_dir / "alpha_opt.csv";
  const CurveTable alphas = alpha_curve(config.eta_grid, model, config.alpha_range);
  {
    auto out = open_artifact(alpha_path);
    alphas.write_csv(out);
  }
  const auto error_path = config.out_dir / "error_rate.csv";
  {
    auto out = open_artifact(error_path);
    error_rate_curve(config.error_thresholds, config.alpha, eta, config.homodyne_convention).write_csv(out);
  }
  const auto key_path = config.out_dir / "key_rate.csv";
  {
    auto out = open_artifact(key_path);
    key_rate_curve(config.threshold_grid, config.alpha, eta, model).write_csv(out);
  }
  result.artifacts = {alpha_path, error_path, key_path};
  for (const auto& row : alphas.rows) {
    if (row[3] == 0.0) {
      log << "alpha optimization did not converge at eta = " << row[0] << '\n';
      result.exit_code = kNonConvergence;
    }
  }
  log << "wrote " << alpha_path.string() << ", " << error_path.string() << ", " << key_path.string() << '\n';
  return result;
}

CommandResult cmd_simulate(const RunConfig& config, std::ostream& log) {
  ensure_out_dir(config);
  const ExperimentSettings settings = config.experiment();
  if (settings.n_pulses < 1000) throw ValidationError({"montecarlo.pulses must be >= 1000"});
  const auto session = simulate_session(settings);

  CommandResult result;
  const auto summary_path = config.out_dir / "simulation.csv";
  {
    auto out = open_artifact(summary_path);
    out << summary_csv_header() << '\n';
    for (const double t : config.mc_thresholds) {
      const auto s = score_session(session, settings, t);
      out << summary_csv_row(s) << '\n';
      log << "threshold " << t << ": accepted " << s.n_accepted << "/" << s.n_sent << ", error "
          << (s.empirical_error ? format_double(*s.empirical_error) : "n/a") << " vs " << s.analytic_error
          << " (z = " << (s.z_error ? format_double(*s.z_error) : "n/a") << ")\n";
    }
  }
  result.artifacts.push_back(summary_path);
  if (config.dump_session) {
    const auto session_path = config.out_dir / "session.csv";
    auto out = open_artifact(session_path);
    write_session_csv(out, session);
    out.close();
    result.artifacts.push_back(session_path);
  }
  return result;
}

CommandResult cmd_noise(const RunConfig& config, std::ostream& log) {
  ensure_out_dir(config);
  const auto session = simulate_session(config.experiment());
  const auto [signal, vacuum] = split_by_kind(session);
  const ExcessNoiseEstimate est = estimate_excess_noise(signal, vacuum);
  constexpr double kAccuracy = 0.03;

  CommandResult result;
  const auto path = config.out_dir / "noise_report.txt";
  {
    auto out = open_artifact(path);
    out << "n_signal = " << est.n_signal << '\n'
        << "n_vacuum = " << est.n_vacuum << '\n'
        << "epsilon = " << format_double(est.epsilon) << '\n'
        << "ci95_lower = " << format_double(est.ci.lower) << '\n'
        << "ci95_upper = " << format_double(est.ci.upper) << '\n';
    if (est.positive) out << "epsilon_positive = " << format_double(est.positive->first) << '\n';
    if (est.negative) out << "epsilon_negative = " << format_double(est.negative->first) << '\n';
    out << "accuracy = " << format_double(kAccuracy) << '\n'
        << "consistent_with_zero = " << (est.ci.contains(0.0) && est.ci.half_width() <= kAccuracy ? "true" : "false")
        << '\n'
        << "unbalance = " << format_double(config.channel.unbalance) << '\n'
        << "unbalance_excess_noise = " << format_double(unbalance_excess_noise(config.channel.unbalance)) << '\n'
        << "model_excess_noise = " << format_double(config.channel.total_excess_noise()) << '\n';
  }
  result.artifacts.push_back(path);
  log << "excess noise " << est.epsilon << " [" << est.ci.lower << ", " << est.ci.upper << "] (95%), unbalance share "
      << unbalance_excess_noise(config.channel.unbalance) << '\n';
  return result;
}

CommandResult cmd_optimize_alpha(const RunConfig& config, std::ostream& log) {
  ensure_out_dir(config);
  const auto r = optimal_alpha(eta_of(config), config.key_rate_model(), config.alpha_range);
  const auto path = config.out_dir / "optimize_alpha.txt";
  {
    auto out = open_artifact(path);
    out << "eta = " << format_double(eta_of(config)) << '\n'
        << "alpha_opt = " << format_double(r.argument) << '\n'
        << "key_rate = " << format_double(r.objective) << '\n'
        << "iterations = " << r.iterations << '\n'
        << "converged = " << (r.converged ? "true" : "false") << '\n'
        << "bracket_lower = " << format_double(r.bracket.first) << '\n'
        << "bracket_upper = " << format_double(r.bracket.second) << '\n';
  }
  log << "alpha_opt = " << r.argument << " (G = " << r.objective << ")" << (r.converged ? "" : " NOT CONVERGED")
      << '\n';
  return {r.converged ? kSuccess : kNonConvergence, {path}};
}

CommandResult cmd_optimize_threshold(const RunConfig& config, std::ostream& log) {
  ensure_out_dir(config);
  if (!(config.alpha > 0.0)) throw ValidationError({"signal.alpha must be > 0 for threshold optimization"});
  const auto r = optimal_threshold(config.alpha, eta_of(config), config.key_rate_model());
  const auto path = config.out_dir / "optimize_threshold.txt";
  {
    auto out = open_artifact(path);
    out << "alpha = " << format_double(config.alpha) << '\n'
        << "eta = " << format_double(eta_of(config)) << '\n'
        << "threshold_opt = " << format_double(r.argument) << '\n'
        << "key_rate = " << format_double(r.objective) << '\n'
        << "iterations = " << r.iterations << '\n'
        << "converged = " << (r.converged ? "true" : "false") << '\n'
        << "bracket_lower = " << format_double(r.bracket.first) << '\n'
        << "bracket_upper = " << format_double(r.bracket.second) << '\n';
  }
  log << "threshold_opt = " << r.argument << " (G = " << r.objective << ")"
      << (r.converged ? "" : " no positive key region") << '\n';
  return {r.converged ? kSuccess : kNonConvergence, {path}};
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App cli{"BPSK coherent-state CV-QKD over a lossy free-space channel", "cvqkd"};
  cli.require_subcommand(1);

  std::string preset, config_file;
  std::map<std::string, std::string> flag_values;
  std::vector<std::string> sets;
  bool dump = false;

  struct FlagKey {
    const char* flag;
    const char* key;
    const char* help;
  };
  static const FlagKey kFlags[] = {
      {"--eta-ch", "channel.eta_ch", "channel transmittance"},
      {"--eta-det", "channel.eta_det", "detection efficiency"},
      {"--alpha", "signal.alpha", "signal amplitude"},
      {"--threshold", "security.threshold", "postselection threshold or 'auto'"},
      {"--excess-noise", "channel.excess_noise", "excess noise (shot-noise units)"},
      {"--unbalance", "channel.unbalance", "homodyne unbalance fraction"},
      {"--pulses", "montecarlo.pulses", "Monte Carlo signal pulses"},
      {"--pulse-rate", "frame.pulse_rate_hz", "pulse rate in Hz"},
      {"--seed", "montecarlo.seed", "generator seed"},
      {"--cascade", "security.cascade", "ideal | constant:<f> | table:<path>"},
      {"--out", "output.dir", "output directory"},
  };

  auto add_common = [&](CLI::App* app) {
    app->add_option("--preset", preset, "parameter preset")->check(CLI::IsMember({"rooftop"}));
    app->add_option("--config", config_file, "configuration file with `key = value` lines");
    app->add_option("--set", sets, "override any configuration key: key=value");
    app->add_flag("--dump-session", dump, "also write the calibrated session CSV (simulate)");
    for (const auto& f : kFlags) {
      app->add_option_function<std::string>(
          f.flag, [&flag_values, key = f.key](const std::string& v) { flag_values[key] = v; }, f.help);
    }
  };

  using Command = CommandResult (*)(const RunConfig&, std::ostream&);
  const std::pair<const char*, Command> kCommands[] = {
      {"keyrate", cmd_keyrate},
      {"curves", cmd_curves},
      {"simulate", cmd_simulate},
      {"noise", cmd_noise},
      {"optimize-alpha", cmd_optimize_alpha},
      {"optimize-threshold", cmd_optimize_threshold},
  };
  const char* descriptions[] = {
      "key rate report at the configured operating point",
      "curve tables: optimal alpha vs eta, error rate and key rate vs threshold",
      "Monte Carlo session with postselection and error counting",
      "excess-noise estimate from a simulated session",
      "optimal signal amplitude for the configured transmittance",
      "optimal postselection threshold",
  };
  std::vector<CLI::App*> subs;
  for (std::size_t i = 0; i < std::size(kCommands); ++i) {
    subs.push_back(cli.add_subcommand(kCommands[i].first, descriptions[i]));
    add_common(subs.back());
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    cli.parse(reversed);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, e2;
    const int code = cli.exit(e, o, e2);
    out << o.str();
    err << e2.str();
    return code == 0 ? kSuccess : kValidationError;
  }

  std::size_t which = 0;
  while (!subs[which]->parsed()) ++which;
  const std::string command = kCommands[which].first;

  try {
    ConfigMap merged;
    if (preset == "rooftop") merged = rooftop_preset();
    if (!config_file.empty()) {
      for (const auto& [k, v] : load_config_file(config_file)) merged[k] = v;
    }
    for (const auto& [k, v] : flag_values) merged[k] = v;
    std::vector<std::string> bad_sets;
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) {
        bad_sets.push_back("--set expects key=value, got '" + s + "'");
        continue;
      }
      merged[s.substr(0, eq)] = s.substr(eq + 1);
    }
    if (dump) merged["montecarlo.dump_session"] = "true";
    if (!bad_sets.empty()) throw ValidationError(bad_sets);

    const RunConfig config = resolve(merged);
    CommandResult result = kCommands[which].second(config, out);
    write_manifest(command, config, result.artifacts);
    if (result.exit_code == kNonConvergence) err << "error: " << command << " did not converge; see artifacts\n";
    return result.exit_code;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kValidationError;
  } catch (const InsufficientDataError& e) {
    err << "error: insufficient data: " << e.what() << '\n';
    return kValidationError;
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << '\n';
    return kValidationError;
  } catch (const ConvergenceError& e) {
    err << "error: " << e.what() << '\n';
    return kNonConvergence;
  }
}

}  // namespace cvqkd::app
