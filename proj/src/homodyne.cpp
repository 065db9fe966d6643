#include "cvqkd/homodyne.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include <boost/math/distributions/fisher_f.hpp>

#include "cvqkd/errors.hpp"

namespace cvqkd {

Rng make_stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

void FramePlan::validate() const {
  FieldChecker check;
  check.require(std::isfinite(signal_duration_s) && signal_duration_s > 0.0,
                "frame.signal_duration must be > 0");
  check.require(std::isfinite(gap_duration_s) && gap_duration_s > 0.0,
                "frame.gap_duration must be > 0");
  check.require(std::isfinite(pulse_rate_hz) && pulse_rate_hz > 0.0,
                "frame.pulse_rate must be > 0");
  if (check.ok()) {
    // 1 ppm slack for decimal round-off in durations.
    check.require(signal_duration_s + gap_duration_s <= slot_duration_s() * (1.0 + 1e-6),
                  "frame: signal + gap duration exceeds 1 / pulse_rate");
  }
  check.require(calibration_window >= 2, "frame.calibration_window must be >= 2");
  check.throw_if_failed();
}

Drift constant_drift(double offset) {
  return [offset](std::uint64_t) { return offset; };
}

Drift linear_drift(double per_record) {
  return [per_record](std::uint64_t index) { return per_record * static_cast<double>(index); };
}

Drift sinusoidal_drift(double amplitude, double period_records) {
  if (!(period_records > 0.0)) throw std::domain_error("sinusoidal_drift: period must be > 0");
  return [amplitude, period_records](std::uint64_t index) {
    return amplitude * std::sin(2.0 * std::numbers::pi * static_cast<double>(index) / period_records);
  };
}

double sample_outcome(double mean, double excess_noise, Rng& rng,
                      const QuadratureConvention& convention) {
  if (!(excess_noise >= 0.0)) throw std::domain_error("sample_outcome: excess noise must be >= 0");
  std::normal_distribution<double> normal(mean, std::sqrt(convention.outcome_variance(excess_noise)));
  return normal(rng);
}

std::vector<PulseRecord> generate_session(std::uint64_t n_signals, double alpha,
                                          const ChannelParams& params, const FramePlan& plan,
                                          Rng& rng, const Drift& drift,
                                          const QuadratureConvention& convention,
                                          std::uint64_t first_signal) {
  FieldChecker check;
  check.require(n_signals >= 1, "session: n_signals must be >= 1");
  check.require(std::isfinite(alpha) && alpha >= 0.0, "session: alpha must be >= 0");
  check.throw_if_failed();
  params.validate();
  plan.validate();
  convention.validate();

  const double mean = convention.outcome_mean(attenuate_amplitude(alpha, params.transmittance()));
  const double signal_sigma = std::sqrt(convention.outcome_variance(params.total_excess_noise()));
  const double vacuum_sigma = std::sqrt(convention.outcome_variance(0.0));

  std::normal_distribution<double> standard(0.0, 1.0);
  std::vector<PulseRecord> records;
  records.reserve(2 * n_signals);
  for (std::uint64_t k = 0; k < n_signals; ++k) {
    const std::uint64_t slot = 2 * (first_signal + k);
    const bool bit = (rng() >> 63) != 0;
    const double offset_s = drift ? drift(slot) : 0.0;
    const double offset_v = drift ? drift(slot + 1) : 0.0;
    const double signal = (bit ? mean : -mean) + signal_sigma * standard(rng) + offset_s;
    const double vacuum = vacuum_sigma * standard(rng) + offset_v;
    records.push_back({slot, PulseKind::signal, bit, signal, std::nullopt});
    records.push_back({slot + 1, PulseKind::vacuum, std::nullopt, vacuum, std::nullopt});
  }
  return records;
}

std::vector<PulseRecord> calibrate(std::span<const PulseRecord> records, int window) {
  if (window < 1) throw ValidationError({"calibration window must be >= 1"});
  std::vector<std::uint64_t> vac_index;
  std::vector<double> vac_raw;
  for (const auto& r : records) {
    if (!r.is_signal()) {
      vac_index.push_back(r.index);
      vac_raw.push_back(r.raw);
    }
  }
  if (!std::is_sorted(vac_index.begin(), vac_index.end())) {
    throw std::invalid_argument("calibrate: records must be sorted by index");
  }
  const auto w = static_cast<std::size_t>(window);
  if (vac_index.size() < w) {
    throw InsufficientDataError("calibrate: " + std::to_string(vac_index.size()) +
                                " vacuum records, window needs " + std::to_string(w));
  }

  const std::ptrdiff_t n_vac = static_cast<std::ptrdiff_t>(vac_index.size());
  std::vector<PulseRecord> out(records.begin(), records.end());
  for (auto& r : out) {
    const auto pos = std::lower_bound(vac_index.begin(), vac_index.end(), r.index) - vac_index.begin();
    std::ptrdiff_t left = pos - 1;
    std::ptrdiff_t right = pos;
    if (!r.is_signal()) ++right;  // skip self
    const std::size_t take = r.is_signal() ? w : std::min(w, vac_index.size() - 1);
    double sum = 0.0;
    for (std::size_t taken = 0; taken < take; ++taken) {
      bool use_left;
      if (left < 0) {
        use_left = false;
      } else if (right >= n_vac) {
        use_left = true;
      } else {
        use_left = r.index - vac_index[left] <= vac_index[right] - r.index;
      }
      sum += use_left ? vac_raw[left--] : vac_raw[right++];
    }
    r.calibrated = r.raw - sum / static_cast<double>(take);
  }
  return out;
}

std::pair<std::vector<PulseRecord>, std::vector<PulseRecord>> split_by_kind(
    std::span<const PulseRecord> records) {
  std::pair<std::vector<PulseRecord>, std::vector<PulseRecord>> parts;
  for (const auto& r : records) (r.is_signal() ? parts.first : parts.second).push_back(r);
  return parts;
}

namespace {

double value_of(const PulseRecord& r) { return r.calibrated.value_or(r.raw); }

struct Moments {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;  // sum of squared deviations

  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
};

ConfidenceInterval ratio_interval(double ratio, double dof_num, double dof_den, double confidence) {
  const boost::math::fisher_f_distribution<double> f(dof_num, dof_den);
  const double tail = 0.5 * (1.0 - confidence);
  return {ratio / boost::math::quantile(f, 1.0 - tail) - 1.0,
          ratio / boost::math::quantile(f, tail) - 1.0};
}

}  // namespace

ExcessNoiseEstimate estimate_excess_noise(std::span<const PulseRecord> signal_records,
                                          std::span<const PulseRecord> vacuum_records,
                                          double confidence) {
  constexpr std::size_t kMinRecords = 1000;
  if (signal_records.size() < kMinRecords || vacuum_records.size() < kMinRecords) {
    throw InsufficientDataError("estimate_excess_noise: need >= 1000 records of each kind, got " +
                                std::to_string(signal_records.size()) + " signal / " +
                                std::to_string(vacuum_records.size()) + " vacuum");
  }
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw std::domain_error("estimate_excess_noise: confidence must lie in (0, 1)");
  }

  Moments vac;
  for (const auto& r : vacuum_records) vac.add(value_of(r));
  Moments pos, neg, unlabeled;
  for (const auto& r : signal_records) {
    const double x = value_of(r);
    if (!r.alice_bit) unlabeled.add(x);
    else if (*r.alice_bit) pos.add(x);
    else neg.add(x);
  }

  const double vac_var = vac.m2 / static_cast<double>(vac.n - 1);
  std::size_t groups = 0;
  double pooled_m2 = 0.0;
  for (const Moments* g : {&pos, &neg, &unlabeled}) {
    if (g->n > 0) {
      ++groups;
      pooled_m2 += g->m2;
    }
  }
  const double sig_dof = static_cast<double>(signal_records.size() - groups);
  const double sig_var = pooled_m2 / sig_dof;
  if (!(vac_var > 0.0) || !(sig_var > 0.0)) {
    throw std::domain_error("estimate_excess_noise: degenerate (zero) sample variance");
  }

  const double vac_dof = static_cast<double>(vac.n - 1);
  ExcessNoiseEstimate est;
  est.n_signal = signal_records.size();
  est.n_vacuum = vacuum_records.size();
  est.epsilon = sig_var / vac_var - 1.0;
  est.ci = ratio_interval(sig_var / vac_var, sig_dof, vac_dof, confidence);

  auto one_sign = [&](const Moments& g) -> std::optional<std::pair<double, ConfidenceInterval>> {
    if (g.n < 2 || !(g.m2 > 0.0)) return std::nullopt;
    const double r = (g.m2 / static_cast<double>(g.n - 1)) / vac_var;
    return std::make_pair(r - 1.0, ratio_interval(r, static_cast<double>(g.n - 1), vac_dof, confidence));
  };
  est.positive = one_sign(pos);
  est.negative = one_sign(neg);
  return est;
}

}  // namespace cvqkd
