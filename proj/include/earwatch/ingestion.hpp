#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <istream>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "earwatch/errors.hpp"
#include "earwatch/trace.hpp"

namespace earwatch {

// Frame-record line format, one UTF-8 JSON object per LF-terminated line:
//   {"t": <seconds>, "face": <bool>, ...}
// A face-present record carries exactly one of "landmarks" (array of 68
// [x, y] pixel pairs) or "ear" (number); a face-absent record carries
// neither. Unknown fields are rejected so typos surface immediately.
//
// The CSV alternative for hand-authored eye-only traces has the header
// "t,face,ear" with face in {0,1} and an empty ear cell when face is 0.

inline constexpr std::string_view kCsvHeader = "t,face,ear";

namespace detail {

inline std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

inline double require_finite_number(const nlohmann::json& value,
                                    const std::string& path,
                                    std::size_t line_no) {
  if (!value.is_number()) {
    throw SchemaError("expected a number", path, line_no);
  }
  const double d = value.get<double>();
  if (!std::isfinite(d)) {
    throw SchemaError("value is not finite", path, line_no);
  }
  return d;
}

inline double parse_strict_double(std::string_view text,
                                  const std::string& path,
                                  std::size_t line_no) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end) {
    throw ParseError("cannot parse number in field " + path, line_no);
  }
  if (!std::isfinite(value)) {
    throw SchemaError("value is not finite", path, line_no);
  }
  return value;
}

}  // namespace detail

/// Parses one JSON frame record. line_no is only used to position errors.
inline FrameObservation parse_frame_record(std::string_view line,
                                           std::size_t line_no = 0) {
  nlohmann::json record;
  try {
    record = nlohmann::json::parse(detail::strip_cr(line));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(e.what(), line_no);
  }
  if (!record.is_object()) {
    throw SchemaError("record is not an object", "", line_no);
  }
  for (const auto& item : record.items()) {
    const std::string& key = item.key();
    if (key != "t" && key != "face" && key != "landmarks" && key != "ear") {
      throw SchemaError("unknown field", key, line_no);
    }
  }
  if (!record.contains("t")) throw SchemaError("missing field", "t", line_no);
  if (!record.contains("face")) throw SchemaError("missing field", "face", line_no);

  FrameObservation obs;
  obs.t = detail::require_finite_number(record["t"], "t", line_no);
  if (obs.t < 0.0) {
    throw SchemaError("timestamp is negative", "t", line_no);
  }
  if (!record["face"].is_boolean()) {
    throw SchemaError("expected a boolean", "face", line_no);
  }
  obs.face_present = record["face"].get<bool>();

  const bool has_landmarks = record.contains("landmarks");
  const bool has_ear = record.contains("ear");
  if (!obs.face_present) {
    if (has_landmarks || has_ear) {
      throw SchemaError("face-absent record must carry neither landmarks nor ear",
                        has_landmarks ? "landmarks" : "ear", line_no);
    }
    return obs;
  }
  if (has_landmarks == has_ear) {
    throw SchemaError("face-present record must carry exactly one of landmarks or ear",
                      "", line_no);
  }

  if (has_ear) {
    const double ear = detail::require_finite_number(record["ear"], "ear", line_no);
    if (ear < 0.0) throw SchemaError("ear is negative", "ear", line_no);
    obs.ear = ear;
    return obs;
  }

  const nlohmann::json& landmarks = record["landmarks"];
  if (!landmarks.is_array()) {
    throw SchemaError("expected an array", "landmarks", line_no);
  }
  if (landmarks.size() != 68) {
    throw SchemaError("expected 68 landmarks, got " + std::to_string(landmarks.size()),
                      "landmarks", line_no);
  }
  FaceLandmarks68 face;
  for (std::size_t i = 0; i < 68; ++i) {
    const nlohmann::json& pt = landmarks[i];
    const std::string path = "landmarks[" + std::to_string(i) + "]";
    if (!pt.is_array() || pt.size() != 2) {
      throw SchemaError("expected an [x, y] pair", path, line_no);
    }
    face.points[i].x = detail::require_finite_number(pt[0], path + "[0]", line_no);
    face.points[i].y = detail::require_finite_number(pt[1], path + "[1]", line_no);
  }
  obs.landmarks = face;
  return obs;
}

/// Parses one CSV data row (after the "t,face,ear" header).
inline FrameObservation parse_csv_record(std::string_view line,
                                         std::size_t line_no = 0) {
  const std::string_view row = detail::strip_cr(line);
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = row.find(',', start);
    fields.push_back(row.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (fields.size() != 3) {
    throw ParseError("expected 3 CSV fields, got " + std::to_string(fields.size()),
                     line_no);
  }

  FrameObservation obs;
  obs.t = detail::parse_strict_double(fields[0], "t", line_no);
  if (obs.t < 0.0) throw SchemaError("timestamp is negative", "t", line_no);

  if (fields[1] == "1") {
    obs.face_present = true;
  } else if (fields[1] == "0") {
    obs.face_present = false;
  } else {
    throw SchemaError("face must be 0 or 1", "face", line_no);
  }

  if (!obs.face_present) {
    if (!fields[2].empty()) {
      throw SchemaError("ear must be empty when face is 0", "ear", line_no);
    }
    return obs;
  }
  if (fields[2].empty()) {
    throw SchemaError("ear is required when face is 1", "ear", line_no);
  }
  const double ear = detail::parse_strict_double(fields[2], "ear", line_no);
  if (ear < 0.0) throw SchemaError("ear is negative", "ear", line_no);
  obs.ear = ear;
  return obs;
}

/// Serializes an observation to one compact JSON line (no trailing newline).
/// Reparsing the result yields the identical observation.
inline std::string to_json_line(const FrameObservation& obs) {
  nlohmann::ordered_json record;
  record["t"] = obs.t;
  record["face"] = obs.face_present;
  if (obs.ear) {
    record["ear"] = *obs.ear;
  } else if (obs.landmarks) {
    nlohmann::ordered_json points = nlohmann::ordered_json::array();
    for (const Point2& p : obs.landmarks->points) {
      points.push_back(nlohmann::ordered_json::array({p.x, p.y}));
    }
    record["landmarks"] = std::move(points);
  }
  return record.dump();
}

/// Streaming reader over a trace source. Yields one observation at a time
/// and never buffers more than the current line, so arbitrarily long traces
/// read in constant memory. The format is sniffed from the first line: a
/// "t,face,ear" header selects CSV, anything else is treated as JSON lines.
class TraceReader {
 public:
  explicit TraceReader(std::istream& in) : in_(&in) {}

  explicit TraceReader(const std::filesystem::path& path)
      : owned_(std::make_unique<std::ifstream>(path)), in_(owned_.get()) {
    if (!*owned_) {
      throw IoError("cannot open trace file: " + path.string());
    }
  }

  /// Next observation, or nullopt at end of stream. Blank lines are skipped.
  std::optional<FrameObservation> next() {
    std::string line;
    while (std::getline(*in_, line)) {
      ++line_no_;
      std::string_view view = detail::strip_cr(line);
      if (line_no_ == 1 && view == kCsvHeader) {
        csv_mode_ = true;
        continue;
      }
      if (view.empty()) continue;
      if (csv_mode_) return parse_csv_record(view, line_no_);
      return parse_frame_record(view, line_no_);
    }
    if (in_->bad()) throw IoError("read failure on trace stream");
    return std::nullopt;
  }

  std::size_t line_number() const { return line_no_; }

 private:
  std::unique_ptr<std::ifstream> owned_;
  std::istream* in_;
  bool csv_mode_ = false;
  std::size_t line_no_ = 0;
};

inline Trace read_trace(std::istream& in, std::string source_id) {
  Trace trace;
  trace.source_id = std::move(source_id);
  TraceReader reader(in);
  while (auto obs = reader.next()) {
    trace.frames.push_back(std::move(*obs));
  }
  return trace;
}

inline Trace read_trace(const std::filesystem::path& path) {
  Trace trace;
  trace.source_id = path.filename().string();
  TraceReader reader(path);
  while (auto obs = reader.next()) {
    trace.frames.push_back(std::move(*obs));
  }
  return trace;
}

inline void write_trace(std::ostream& out, const Trace& trace) {
  for (const FrameObservation& obs : trace.frames) {
    out << to_json_line(obs) << '\n';
  }
}

struct ValidationIssue {
  enum class Kind { NonMonotonicTimestamp, DuplicateTimestamp, GapWarning };

  Kind kind{};
  std::size_t frame_index = 0;
  std::string detail;

  bool is_warning() const { return kind == Kind::GapWarning; }
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;

  bool clean() const { return issues.empty(); }
  std::size_t violation_count() const {
    return static_cast<std::size_t>(
        std::count_if(issues.begin(), issues.end(),
                      [](const ValidationIssue& i) { return !i.is_warning(); }));
  }
};

/// Reports timestamp problems without rejecting the trace: out-of-order and
/// duplicate timestamps are violations, an inter-frame gap above 10x the
/// median interval is a warning only. The median is the lower median of the
/// observed intervals.
inline ValidationReport validate_trace(const Trace& trace) {
  ValidationReport report;
  const auto& frames = trace.frames;
  std::vector<double> intervals;
  intervals.reserve(frames.size());
  for (std::size_t i = 1; i < frames.size(); ++i) {
    const double prev = frames[i - 1].t;
    const double cur = frames[i].t;
    if (cur < prev) {
      report.issues.push_back({ValidationIssue::Kind::NonMonotonicTimestamp, i,
                               "timestamp moves backwards"});
    } else if (cur == prev) {
      report.issues.push_back({ValidationIssue::Kind::DuplicateTimestamp, i,
                               "duplicate timestamp"});
    }
    intervals.push_back(cur - prev);
  }
  if (intervals.empty()) return report;

  std::vector<double> sorted = intervals;
  const std::size_t mid = (sorted.size() - 1) / 2;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(mid),
                   sorted.end());
  const double median = sorted[mid];
  if (median > 0.0) {
    for (std::size_t i = 0; i < intervals.size(); ++i) {
      if (intervals[i] > 10.0 * median) {
        report.issues.push_back({ValidationIssue::Kind::GapWarning, i + 1,
                                 "inter-frame gap exceeds 10x median interval"});
      }
    }
  }
  return report;
}

}  // namespace earwatch
