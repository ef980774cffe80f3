#pragma once

// Packet loss/delay traces: two text formats and a Gilbert-Elliott generator.
//
//   loss-only:   "seq,0" (arrived) or "seq,1" (lost), one packet per line
//   delay-loss:  "seq,arrival_ms", arrival_ms = -1 meaning lost
//
// Packet seq is sent at 20*seq ms. Loss-only arrivals get zero network delay.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace latres {

struct TraceEvent {
  std::uint32_t seq = 0;
  bool lost = false;
  double arrival_ms = 0.0;  // meaningful only when !lost

  double send_ms() const { return 20.0 * seq; }
  bool operator==(const TraceEvent&) const = default;
};

enum class TraceFormat { kLossOnly, kDelayLoss };

struct Trace {
  TraceFormat format = TraceFormat::kDelayLoss;
  std::vector<TraceEvent> events;

  // Event for `seq`, or nullptr if the trace has no line for it.
  const TraceEvent* find(std::uint32_t seq) const;
  double loss_rate() const;
};

// Blank lines and lines starting with '#' are skipped. With no explicit
// format, a trace whose values are all "0" or "1" is loss-only.
// Errors are ParseError carrying the 1-based line number.
Trace parse_trace(std::string_view text, std::optional<TraceFormat> format = std::nullopt);
std::string serialize_trace(const Trace& trace);

struct GilbertElliottParams {
  double p_good_to_bad = 0.0;
  double p_bad_to_good = 1.0;
  double loss_in_bad = 1.0;
  double jitter_std_ms = 0.0;
  double base_delay_ms = 0.0;
};

void validate(const GilbertElliottParams& p);
// loss_in_bad * p_gb / (p_gb + p_bg); 0 when the chain never leaves "good".
double stationary_loss_rate(const GilbertElliottParams& p);

// Starts in the good state. Each packet is emitted from the current state,
// then the state transitions.
Trace generate_trace(const GilbertElliottParams& params, std::size_t n_packets,
                     std::uint64_t seed);

// Named configurations: "profile10" (about 10% loss, short bursts, mild
// jitter) and "burst120", "burst320", "burst1000" (mean loss-burst length of
// 120/320/1000 ms at 10% loss).
GilbertElliottParams channel_preset(std::string_view name);

}  // namespace latres
