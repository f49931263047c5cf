#include "hsps/cli/timetags.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <queue>
#include <sstream>

#include <fmt/format.h>

#include "hsps/errors.hpp"

namespace hsps::cli {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::optional<double> to_double(std::string_view s) {
  s = trim(s);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

// Releases timestamps in order once more than `depth` are pending.
class Reorder {
 public:
  Reorder(std::vector<double>& out, std::size_t depth, const char* name)
      : out_(out), depth_(depth), name_(name) {}

  void push(double t, int line) {
    heap_.push(t);
    if (heap_.size() > depth_) pop(line);
  }

  void drain(int line) {
    while (!heap_.empty()) pop(line);
  }

 private:
  void pop(int line) {
    const double t = heap_.top();
    heap_.pop();
    if (!out_.empty() && t < out_.back())
      throw ParseError(fmt::format("{} timestamps out of order beyond the sort buffer", name_), line,
                       "timestamp");
    out_.push_back(t);
  }

  std::vector<double>& out_;
  std::size_t depth_;
  const char* name_;
  std::priority_queue<double, std::vector<double>, std::greater<>> heap_;
};

}  // namespace

TimeTags parse_time_tags(const std::string& text, const TimeTagOptions& options) {
  TimeTags tags;
  Reorder trig(tags.trigger_ns, std::max<std::size_t>(options.sort_buffer, 1), "trigger");
  Reorder sig(tags.signal_ns, std::max<std::size_t>(options.sort_buffer, 1), "signal");
  std::optional<double> scale;  // to ns
  bool seen_row = false;
  int line_no = 0;
  std::istringstream in(text);
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty()) continue;
    if (line.front() == '#') {
      const auto body = trim(line.substr(1));
      const auto eq = body.find('=');
      if (eq == std::string_view::npos) continue;
      const auto key = lower(trim(body.substr(0, eq)));
      const auto value = trim(body.substr(eq + 1));
      if (key == "units") {
        const auto u = lower(value);
        if (u == "ns") {
          scale = 1.0;
        } else if (u == "ps") {
          scale = 1.0e-3;
        } else {
          throw ParseError(fmt::format("unsupported time unit '{}'", value), line_no, "units");
        }
      } else if (key == "integration_time_s") {
        const auto v = to_double(value);
        if (!v || !(*v > 0.0))
          throw ParseError("integration_time_s must be a positive number", line_no, "integration_time_s");
        tags.integration_time_s = v;
      }
      continue;
    }

    const auto comma = line.find(',');
    if (comma == std::string_view::npos)
      throw ParseError("expected 'channel,timestamp'", line_no, "channel");
    const auto label = lower(trim(line.substr(0, comma)));
    auto rest = line.substr(comma + 1);
    rest = rest.substr(0, rest.find(','));
    const auto stamp = to_double(rest);
    if (!stamp) {
      if (!seen_row) {  // column header
        seen_row = true;
        continue;
      }
      throw ParseError(fmt::format("invalid timestamp '{}'", trim(rest)), line_no, "timestamp");
    }
    seen_row = true;
    if (!scale) throw ParseError("missing '# units=ps|ns' header before the first row", line_no, "units");
    const double t = *stamp * *scale;
    if (label == "trigger" || label == "t" || label == "1") {
      trig.push(t, line_no);
    } else if (label == "signal" || label == "s" || label == "2") {
      sig.push(t, line_no);
    } else {
      throw ParseError(fmt::format("unknown channel label '{}'", trim(line.substr(0, comma))), line_no,
                       "channel");
    }
  }
  trig.drain(line_no);
  sig.drain(line_no);
  if (tags.trigger_ns.empty() && tags.signal_ns.empty()) tags.warnings.push_back("no events in input");
  return tags;
}

TimeTags read_time_tags(const std::filesystem::path& path, const TimeTagOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open time-tag file '{}'", path.string()));
  std::ostringstream text;
  text << in.rdbuf();
  return parse_time_tags(text.str(), options);
}

}  // namespace hsps::cli
