#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

#include "cvqkd/app.hpp"
#include "cvqkd/errors.hpp"

namespace cvqkd::app {

ConfigMap default_config() {
  return {
      {"channel.eta_ch", "1"},
      {"channel.eta_det", "1"},
      {"channel.excess_noise", "0"},
      {"channel.unbalance", "0"},
      {"signal.alpha", "0.8"},
      {"security.threshold", "auto"},
      {"security.cascade", "default"},
      {"security.vacuum_variance", "0.5"},
      {"security.eve_knowledge", "magnitude"},
      {"homodyne.vacuum_variance", "0.25"},
      {"frame.signal_duration_ns", "400"},
      {"frame.gap_duration_ns", "9600"},
      {"frame.pulse_rate_hz", "100000"},
      {"frame.calibration_window", "100"},
      {"optimizer.eta_grid", "0.1:0.1:0.9"},
      {"optimizer.threshold_grid", "0:0.05:3"},
      {"optimizer.alpha_min", "0.05"},
      {"optimizer.alpha_max", "3"},
      {"curves.error_thresholds", "0:0.25:2"},
      {"montecarlo.pulses", "100000"},
      {"montecarlo.seed", "1"},
      {"montecarlo.thresholds", "0:0.25:2"},
      {"montecarlo.reference_excess_noise", "0"},
      {"montecarlo.dump_session", "false"},
      {"output.dir", "out"},
  };
}

ConfigMap rooftop_preset() {
  return {
      {"channel.eta_ch", "0.77"},
      {"channel.eta_det", "0.83"},
      {"channel.excess_noise", "0"},
      {"channel.unbalance", "0"},
      {"signal.alpha", "0.8"},
      {"security.threshold", "auto"},
      {"security.cascade", "default"},
      {"frame.pulse_rate_hz", "100000"},
      {"frame.signal_duration_ns", "400"},
      {"frame.gap_duration_ns", "9600"},
      {"frame.calibration_window", "100"},
      {"montecarlo.pulses", "1000000"},
  };
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

ConfigMap parse_config(std::istream& in) {
  ConfigMap map;
  std::string line;
  std::vector<std::string> problems;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      problems.push_back("config line " + std::to_string(line_no) + ": expected 'key = value'");
      continue;
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) {
      problems.push_back("config line " + std::to_string(line_no) + ": empty key");
      continue;
    }
    map[key] = trim(line.substr(eq + 1));
  }
  if (!problems.empty()) throw ValidationError(problems);
  return map;
}

ConfigMap load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError({"cannot read config file '" + path.string() + "'"});
  return parse_config(in);
}

namespace {

class Reader {
 public:
  explicit Reader(const ConfigMap& map) : map_(map) {}

  const std::string& raw(const std::string& key) { return map_.at(key); }

  double number(const std::string& key) {
    const std::string& text = map_.at(key);
    std::size_t used = 0;
    double value = 0.0;
    try {
      value = std::stod(text, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != text.size() || !std::isfinite(value)) {
      check.require(false, key + ": '" + text + "' is not a finite number");
      return 0.0;
    }
    return value;
  }

  std::uint64_t count(const std::string& key) {
    const std::string& text = map_.at(key);
    const bool digits = !text.empty() && std::all_of(text.begin(), text.end(), [](char c) { return c >= '0' && c <= '9'; });
    if (!digits) {
      check.require(false, key + ": '" + text + "' is not a non-negative integer");
      return 0;
    }
    try {
      return std::stoull(text);
    } catch (const std::exception&) {
      check.require(false, key + ": '" + text + "' is out of range");
      return 0;
    }
  }

  bool flag(const std::string& key) {
    const std::string& text = map_.at(key);
    if (text == "true" || text == "1" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "no") return false;
    check.require(false, key + ": '" + text + "' is not a boolean");
    return false;
  }

  // Comma list or start:step:stop range.
  std::vector<double> grid(const std::string& key) {
    const std::string& text = map_.at(key);
    std::vector<double> out;
    if (trim(text).empty()) {
      check.require(false, key + ": grid must not be empty");
      return out;
    }
    auto to_double = [&](const std::string& s, bool& ok) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(trim(s), &used);
      } catch (const std::exception&) {
        used = 0;
      }
      ok = used > 0 && used == trim(s).size() && std::isfinite(v);
      return v;
    };
    bool ok = true;
    if (text.find(':') != std::string::npos) {
      std::vector<std::string> parts;
      std::stringstream ss(text);
      for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
      bool a = false, b = false, c = false;
      const double start = parts.size() == 3 ? to_double(parts[0], a) : 0.0;
      const double step = parts.size() == 3 ? to_double(parts[1], b) : 0.0;
      const double stop = parts.size() == 3 ? to_double(parts[2], c) : 0.0;
      if (!(a && b && c) || !(step > 0.0) || stop < start) {
        check.require(false, key + ": range must be start:step:stop with step > 0 and stop >= start");
        return out;
      }
      const auto n = static_cast<long>(std::floor((stop - start) / step + 1e-9)) + 1;
      // Snap to 1e-12 so 0.1:0.1:0.9 yields 0.3, not 0.30000000000000004.
      for (long i = 0; i < n; ++i) out.push_back(std::round((start + step * static_cast<double>(i)) * 1e12) / 1e12);
      return out;
    }
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');) {
      const double v = to_double(item, ok);
      if (!ok) {
        check.require(false, key + ": '" + trim(item) + "' is not a number");
        return {};
      }
      out.push_back(v);
    }
    check.require(std::is_sorted(out.begin(), out.end()), key + ": grid must be sorted ascending");
    return out;
  }

  FieldChecker check;

 private:
  const ConfigMap& map_;
};

template <typename F>
void absorb(FieldChecker& check, F&& validate) {
  try {
    validate();
  } catch (const ValidationError& e) {
    for (const auto& p : e.problems()) check.require(false, p);
  }
}

}  // namespace

RunConfig resolve(const ConfigMap& overrides) {
  ConfigMap entries = default_config();
  FieldChecker unknown;
  for (const auto& [key, value] : overrides) {
    unknown.require(entries.contains(key), "unknown configuration key '" + key + "'");
    entries[key] = value;
  }

  Reader in(entries);
  in.check.merge(unknown);
  RunConfig c;
  c.entries = entries;

  c.channel.eta_ch = in.number("channel.eta_ch");
  c.channel.eta_det = in.number("channel.eta_det");
  c.channel.excess_noise = in.number("channel.excess_noise");
  c.channel.unbalance = in.number("channel.unbalance");
  absorb(in.check, [&] { c.channel.validate(); });

  c.alpha = in.number("signal.alpha");
  in.check.require(c.alpha >= 0.0, "signal.alpha must be >= 0");

  if (const auto& t = in.raw("security.threshold"); t != "auto") {
    c.threshold = in.number("security.threshold");
    in.check.require(*c.threshold >= 0.0, "security.threshold must be >= 0 or 'auto'");
  }
  absorb(in.check, [&] {
    const auto& spec = in.raw("security.cascade");
    c.cascade = spec == "default" ? CascadeModel::default_table() : CascadeModel::parse(spec);
  });
  c.key_rate_convention.vacuum_variance = in.number("security.vacuum_variance");
  in.check.require(c.key_rate_convention.vacuum_variance > 0.0, "security.vacuum_variance must be > 0");
  c.homodyne_convention.vacuum_variance = in.number("homodyne.vacuum_variance");
  in.check.require(c.homodyne_convention.vacuum_variance > 0.0, "homodyne.vacuum_variance must be > 0");
  if (const auto& eve = in.raw("security.eve_knowledge"); eve == "magnitude") {
    c.eve = EveKnowledge::outcome_magnitude;
  } else if (eve == "signed") {
    c.eve = EveKnowledge::signed_outcome;
  } else {
    in.check.require(false, "security.eve_knowledge must be 'magnitude' or 'signed'");
  }

  c.plan.signal_duration_s = in.number("frame.signal_duration_ns") * 1e-9;
  c.plan.gap_duration_s = in.number("frame.gap_duration_ns") * 1e-9;
  c.plan.pulse_rate_hz = in.number("frame.pulse_rate_hz");
  const auto window = in.count("frame.calibration_window");
  c.plan.calibration_window = static_cast<int>(std::min<std::uint64_t>(window, 1'000'000));
  absorb(in.check, [&] { c.plan.validate(); });

  c.eta_grid = in.grid("optimizer.eta_grid");
  for (const double eta : c.eta_grid) {
    in.check.require(eta > 0.0 && eta <= 1.0, "optimizer.eta_grid values must lie in (0, 1]");
  }
  c.threshold_grid = in.grid("optimizer.threshold_grid");
  c.error_thresholds = in.grid("curves.error_thresholds");
  c.mc_thresholds = in.grid("montecarlo.thresholds");
  for (const auto* g : {&c.threshold_grid, &c.error_thresholds, &c.mc_thresholds}) {
    in.check.require(g->empty() || g->front() >= 0.0, "threshold grids must be >= 0");
  }
  c.alpha_range = {in.number("optimizer.alpha_min"), in.number("optimizer.alpha_max")};
  in.check.require(c.alpha_range.first > 0.0 && c.alpha_range.second > c.alpha_range.first,
                   "optimizer.alpha_min/alpha_max must satisfy 0 < min < max");

  c.pulses = in.count("montecarlo.pulses");
  in.check.require(c.pulses >= 1, "montecarlo.pulses must be >= 1");
  c.seed = in.count("montecarlo.seed");
  c.reference_excess_noise = in.number("montecarlo.reference_excess_noise");
  in.check.require(c.reference_excess_noise >= 0.0, "montecarlo.reference_excess_noise must be >= 0");
  c.dump_session = in.flag("montecarlo.dump_session");

  c.out_dir = in.raw("output.dir");
  in.check.require(!c.out_dir.empty(), "output.dir must not be empty");

  in.check.throw_if_failed();
  return c;
}

KeyRateModel RunConfig::key_rate_model() const {
  KeyRateModel m;
  m.cascade = cascade;
  m.convention = key_rate_convention;
  m.eve = eve;
  return m;
}

ExperimentSettings RunConfig::experiment() const {
  ExperimentSettings s;
  s.n_pulses = pulses;
  s.alpha = alpha;
  s.channel = channel;
  s.plan = plan;
  s.seed = seed;
  s.convention = homodyne_convention;
  s.reference_excess_noise = reference_excess_noise;
  return s;
}

}  // namespace cvqkd::app
