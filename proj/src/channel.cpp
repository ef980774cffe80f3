#include "latres/channel.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "latres/common.hpp"
#include "latres/rng.hpp"

namespace latres {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

struct RawLine {
  std::size_t line_no;
  std::string_view seq;
  std::string_view value;
};

}  // namespace

const TraceEvent* Trace::find(std::uint32_t seq) const {
  // Events are sorted by seq.
  std::size_t lo = 0, hi = events.size();
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (events[mid].seq < seq) {
      lo = mid + 1;
    } else {
      hi = mid;
    }
  }
  return lo < events.size() && events[lo].seq == seq ? &events[lo] : nullptr;
}

double Trace::loss_rate() const {
  if (events.empty()) return 0.0;
  std::size_t lost = 0;
  for (const auto& e : events) lost += e.lost ? 1 : 0;
  return static_cast<double>(lost) / static_cast<double>(events.size());
}

Trace parse_trace(std::string_view text, std::optional<TraceFormat> format) {
  std::vector<RawLine> lines;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const std::size_t nl = text.find('\n');
    std::string_view line = trim(text.substr(0, nl));
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    if (line.empty() || line.front() == '#') continue;
    const std::size_t comma = line.find(',');
    if (comma == std::string_view::npos) {
      throw ParseError("trace line " + std::to_string(line_no) + ": expected 'seq,value'",
                       line_no);
    }
    lines.push_back({line_no, trim(line.substr(0, comma)), trim(line.substr(comma + 1))});
  }

  Trace trace;
  if (format) {
    trace.format = *format;
  } else {
    bool binary = !lines.empty();
    for (const auto& l : lines) binary = binary && (l.value == "0" || l.value == "1");
    trace.format = binary ? TraceFormat::kLossOnly : TraceFormat::kDelayLoss;
  }

  for (const auto& l : lines) {
    const auto fail = [&](const std::string& why) {
      return ParseError("trace line " + std::to_string(l.line_no) + ": " + why, l.line_no);
    };
    TraceEvent e;
    {
      const auto [ptr, ec] = std::from_chars(l.seq.data(), l.seq.data() + l.seq.size(), e.seq);
      if (ec != std::errc() || ptr != l.seq.data() + l.seq.size()) {
        throw fail("bad sequence number '" + std::string(l.seq) + "'");
      }
    }
    if (!trace.events.empty() && e.seq <= trace.events.back().seq) {
      throw fail("sequence numbers must be strictly increasing");
    }
    if (trace.format == TraceFormat::kLossOnly) {
      if (l.value == "1") {
        e.lost = true;
      } else if (l.value == "0") {
        e.arrival_ms = e.send_ms();
      } else {
        throw fail("loss flag must be 0 or 1");
      }
    } else {
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(l.value.data(), l.value.data() + l.value.size(), v);
      if (ec != std::errc() || ptr != l.value.data() + l.value.size() || !std::isfinite(v)) {
        throw fail("bad arrival time '" + std::string(l.value) + "'");
      }
      if (v == -1.0) {
        e.lost = true;
      } else if (v < e.send_ms()) {
        throw fail("negative delay: arrival " + std::string(l.value) + " ms before send time");
      } else {
        e.arrival_ms = v;
      }
    }
    trace.events.push_back(e);
  }
  return trace;
}

std::string serialize_trace(const Trace& trace) {
  std::string out;
  char buf[64];
  for (const auto& e : trace.events) {
    if (trace.format == TraceFormat::kLossOnly) {
      std::snprintf(buf, sizeof buf, "%u,%d\n", e.seq, e.lost ? 1 : 0);
    } else if (e.lost) {
      std::snprintf(buf, sizeof buf, "%u,-1\n", e.seq);
    } else {
      std::snprintf(buf, sizeof buf, "%u,%.17g\n", e.seq, e.arrival_ms);
    }
    out += buf;
  }
  return out;
}

void validate(const GilbertElliottParams& p) {
  const auto prob = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!prob(p.p_good_to_bad) || !prob(p.p_bad_to_good) || !prob(p.loss_in_bad)) {
    throw std::invalid_argument("Gilbert-Elliott probabilities must lie in [0,1]");
  }
  if (!(p.jitter_std_ms >= 0.0) || !(p.base_delay_ms >= 0.0)) {
    throw std::invalid_argument("Gilbert-Elliott delays must be non-negative");
  }
}

double stationary_loss_rate(const GilbertElliottParams& p) {
  const double denom = p.p_good_to_bad + p.p_bad_to_good;
  if (p.p_good_to_bad == 0.0 || denom == 0.0) return 0.0;
  return p.loss_in_bad * p.p_good_to_bad / denom;
}

Trace generate_trace(const GilbertElliottParams& params, std::size_t n_packets,
                     std::uint64_t seed) {
  validate(params);
  if (n_packets == 0) throw std::invalid_argument("trace needs at least one packet");
  Rng rng(seed);
  Trace trace;
  trace.format = TraceFormat::kDelayLoss;
  trace.events.reserve(n_packets);
  bool bad = false;
  for (std::size_t i = 0; i < n_packets; ++i) {
    TraceEvent e;
    e.seq = static_cast<std::uint32_t>(i);
    const bool lost = bad && rng.bernoulli(params.loss_in_bad);
    const double jitter = std::abs(rng.normal()) * params.jitter_std_ms;
    e.lost = lost;
    if (!lost) {
      // 0.1 ms resolution keeps serialized traces exact.
      e.arrival_ms = std::round((e.send_ms() + params.base_delay_ms + jitter) * 10.0) / 10.0;
    }
    trace.events.push_back(e);
    bad = bad ? !rng.bernoulli(params.p_bad_to_good) : rng.bernoulli(params.p_good_to_bad);
  }
  return trace;
}

GilbertElliottParams channel_preset(std::string_view name) {
  // Mean bad-state sojourn is 1/p_bg packets of 20 ms; p_gb then sets the
  // stationary loss to 10% with loss_in_bad = 1.
  const auto burst = [](double burst_ms) {
    GilbertElliottParams p;
    p.p_bad_to_good = 20.0 / burst_ms;
    p.p_good_to_bad = p.p_bad_to_good * 0.1 / 0.9;
    p.loss_in_bad = 1.0;
    p.base_delay_ms = 20.0;
    p.jitter_std_ms = 8.0;
    return p;
  };
  if (name == "profile10") {
    GilbertElliottParams p;
    p.p_good_to_bad = 0.05;
    p.p_bad_to_good = 0.45;
    p.loss_in_bad = 1.0;
    p.base_delay_ms = 20.0;
    p.jitter_std_ms = 8.0;
    return p;
  }
  if (name == "burst120") return burst(120.0);
  if (name == "burst320") return burst(320.0);
  if (name == "burst1000") return burst(1000.0);
  throw std::invalid_argument("unknown channel preset '" + std::string(name) + "'");
}

}  // namespace latres
