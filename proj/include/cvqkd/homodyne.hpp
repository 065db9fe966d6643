#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "cvqkd/channel.hpp"
#include "cvqkd/qstate.hpp"

namespace cvqkd {

using Rng = std::mt19937_64;

// Independent generator sub-stream `stream` of a seeded run.
Rng make_stream(std::uint64_t seed, std::uint64_t stream = 0);

enum class PulseKind : std::uint8_t { signal, vacuum };

struct PulseRecord {
  std::uint64_t index = 0;
  PulseKind kind = PulseKind::vacuum;
  std::optional<bool> alice_bit;  // present iff kind == signal; true = +alpha
  double raw = 0.0;
  std::optional<double> calibrated;

  bool is_signal() const { return kind == PulseKind::signal; }
  friend bool operator==(const PulseRecord&, const PulseRecord&) = default;
};

// Time structure of the modulation: every signal slot is followed by an
// unmodulated gap whose outcome is a vacuum reference.
struct FramePlan {
  double signal_duration_s = 400e-9;
  double gap_duration_s = 600e-9;
  double pulse_rate_hz = 1e6;
  int calibration_window = 100;

  // 400 ns signal / 600 ns vacuum at 1 MHz.
  static constexpr FramePlan megahertz() { return {}; }
  // Same pulse shape at the 100 kHz operating rate.
  static constexpr FramePlan operational() { return {400e-9, 9600e-9, 1e5, 100}; }

  double slot_duration_s() const { return 1.0 / pulse_rate_hz; }
  void validate() const;
};

// Additive slow drift of the detector offset, evaluated at the record index.
using Drift = std::function<double(std::uint64_t)>;

Drift constant_drift(double offset);
Drift linear_drift(double per_record);
Drift sinusoidal_drift(double amplitude, double period_records);

// One Gaussian outcome with the given mean and variance (1 + eps) * V.
double sample_outcome(double mean, double excess_noise, Rng& rng,
                      const QuadratureConvention& convention = {});

// Interleaved signal/vacuum records: record 2k is signal k, record 2k+1 the
// vacuum gap after it. Indices start at 2 * first_signal so that sessions
// generated in blocks concatenate seamlessly. Excess noise is applied to the
// signal slots only; vacuum slots carry pure shot noise.
std::vector<PulseRecord> generate_session(std::uint64_t n_signals, double alpha,
                                          const ChannelParams& params, const FramePlan& plan,
                                          Rng& rng, const Drift& drift = {},
                                          const QuadratureConvention& convention = {},
                                          std::uint64_t first_signal = 0);

// Subtracts from every record the mean of its `window` nearest vacuum records
// (ties resolved toward earlier records). A vacuum record is never part of its
// own window. Records must be sorted by index.
std::vector<PulseRecord> calibrate(std::span<const PulseRecord> records, int window);

struct ConfidenceInterval {
  double lower = 0.0;
  double upper = 0.0;
  bool contains(double x) const { return lower <= x && x <= upper; }
  double half_width() const { return 0.5 * (upper - lower); }
};

struct ExcessNoiseEstimate {
  double epsilon = 0.0;
  ConfidenceInterval ci;
  std::size_t n_signal = 0;
  std::size_t n_vacuum = 0;
  // Estimates restricted to one modulation sign; absent when the signal
  // records carry no bits or a class is too small.
  std::optional<std::pair<double, ConfidenceInterval>> positive;
  std::optional<std::pair<double, ConfidenceInterval>> negative;
};

// eps = Var(signal) / Var(vacuum) - 1 on calibrated outcomes. Signal variance
// is taken within each modulation class so the +-mean does not count as
// noise. Both calibrated samples carry the same V / window calibration
// variance, which scales the estimate by window / (window + 1).
ExcessNoiseEstimate estimate_excess_noise(std::span<const PulseRecord> signal_records,
                                          std::span<const PulseRecord> vacuum_records,
                                          double confidence = 0.95);

// Splits a session into (signal, vacuum) records.
std::pair<std::vector<PulseRecord>, std::vector<PulseRecord>> split_by_kind(
    std::span<const PulseRecord> records);

// Line-oriented CSV: header `index,kind,bit,raw,calibrated`, doubles written
// in shortest round-trip form, empty field for absent values.
void write_session_csv(std::ostream& out, std::span<const PulseRecord> records);
std::vector<PulseRecord> read_session_csv(std::istream& in);

}  // namespace cvqkd
