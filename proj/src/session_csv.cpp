#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>

#include "cvqkd/homodyne.hpp"

namespace cvqkd {

namespace {

void put_double(std::ostream& out, double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  out.write(buf, res.ptr - buf);
}

template <typename T>
T parse_number(std::string_view field, std::size_t line) {
  T value{};
  const auto res = std::from_chars(field.data(), field.data() + field.size(), value);
  if (res.ec != std::errc{} || res.ptr != field.data() + field.size()) {
    throw std::runtime_error("session csv line " + std::to_string(line) + ": bad number '" +
                             std::string(field) + "'");
  }
  return value;
}

}  // namespace

void write_session_csv(std::ostream& out, std::span<const PulseRecord> records) {
  out << "index,kind,bit,raw,calibrated\n";
  for (const auto& r : records) {
    out << r.index << ',' << (r.is_signal() ? "signal" : "vacuum") << ',';
    if (r.alice_bit) out << (*r.alice_bit ? '1' : '0');
    out << ',';
    put_double(out, r.raw);
    out << ',';
    if (r.calibrated) put_double(out, *r.calibrated);
    out << '\n';
  }
}

std::vector<PulseRecord> read_session_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "index,kind,bit,raw,calibrated") {
    throw std::runtime_error("session csv: missing header 'index,kind,bit,raw,calibrated'");
  }
  std::vector<PulseRecord> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::string_view rest(line);
    std::string_view fields[5];
    for (int i = 0; i < 5; ++i) {
      const auto comma = rest.find(',');
      if ((comma == std::string_view::npos) != (i == 4)) {
        throw std::runtime_error("session csv line " + std::to_string(line_no) + ": expected 5 fields");
      }
      fields[i] = rest.substr(0, comma);
      if (i < 4) rest.remove_prefix(comma + 1);
    }
    PulseRecord r;
    r.index = parse_number<std::uint64_t>(fields[0], line_no);
    if (fields[1] == "signal") r.kind = PulseKind::signal;
    else if (fields[1] == "vacuum") r.kind = PulseKind::vacuum;
    else throw std::runtime_error("session csv line " + std::to_string(line_no) + ": bad kind");
    if (fields[2] == "1") r.alice_bit = true;
    else if (fields[2] == "0") r.alice_bit = false;
    else if (!fields[2].empty()) throw std::runtime_error("session csv line " + std::to_string(line_no) + ": bad bit");
    if (r.is_signal() != r.alice_bit.has_value()) {
      throw std::runtime_error("session csv line " + std::to_string(line_no) +
                               ": signal records need a bit, vacuum records must not have one");
    }
    r.raw = parse_number<double>(fields[3], line_no);
    if (!fields[4].empty()) r.calibrated = parse_number<double>(fields[4], line_no);
    records.push_back(r);
  }
  return records;
}

}  // namespace cvqkd
