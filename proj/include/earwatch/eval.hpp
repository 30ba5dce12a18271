#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "earwatch/detector.hpp"
#include "earwatch/errors.hpp"
#include "earwatch/format.hpp"
#include "earwatch/synth.hpp"
#include "earwatch/trace.hpp"

namespace earwatch {

/// Detection latency budget: an alarm up to this long after an episode ends
/// still counts, covering the score accumulation delay.
inline constexpr double kDefaultGraceS = 2.0;

/// A benchmark row passes when at least this many of its episodes are
/// detected.
inline constexpr int kRowPassMinimum = 2;

struct EventLog {
  std::vector<Event> events;
  DetectorConfig config_used;
  std::string trace_id;
};

/// Batch run over a whole trace; identical to folding step() frame by frame.
inline EventLog run_detector_on_trace(const Trace& trace,
                                      const DetectorConfig& config) {
  config.validate();
  EventLog log;
  log.config_used = config;
  log.trace_id = trace.source_id;
  DetectorState state;
  for (std::size_t i = 0; i < trace.frames.size(); ++i) {
    try {
      StepResult result = step(std::move(state), trace.frames[i], config);
      state = std::move(result.state);
      log.events.insert(log.events.end(), result.events.begin(), result.events.end());
    } catch (const NonMonotonicTimestampError& e) {
      throw NonMonotonicTimestampError("frame " + std::to_string(i) + ": " + e.what());
    } catch (const DegenerateEyeError& e) {
      throw DegenerateEyeError("frame " + std::to_string(i) + ": " + e.what());
    }
  }
  return log;
}

struct EpisodeResult {
  Episode episode;
  bool detected = false;
  std::optional<double> detection_latency_s;
};

struct EvalReport {
  std::vector<EpisodeResult> per_episode;
  int detected_count = 0;
  int episode_count = 0;
  int false_alarm_count = 0;
  double correct_rate_percent = 0.0;
};

/// Correct rate in percent: 100 * correct / total.
inline double correct_rate(int correct, int total) {
  if (total == 0) throw ZeroTotalError("correct rate over zero tests");
  return 100.0 * static_cast<double>(correct) / static_cast<double>(total);
}

/// Matches alarm activations against ground-truth episodes. An episode is
/// detected when an AlarmOn falls inside [start, end + grace_s]; the latency
/// is measured from the episode start to the first such activation. AlarmOn
/// events outside every window are false alarms. False alarms are reported
/// but do not enter the correct rate.
inline EvalReport match_alarms(const EventLog& log,
                               std::span<const Episode> episodes,
                               double grace_s = kDefaultGraceS) {
  EvalReport report;
  report.episode_count = static_cast<int>(episodes.size());

  std::vector<double> alarm_times;
  for (const Event& e : log.events) {
    if (e.kind == EventKind::AlarmOn) alarm_times.push_back(e.t);
  }

  std::vector<bool> alarm_matched(alarm_times.size(), false);
  for (const Episode& episode : episodes) {
    EpisodeResult result;
    result.episode = episode;
    for (std::size_t i = 0; i < alarm_times.size(); ++i) {
      const double t = alarm_times[i];
      if (t >= episode.start_s && t <= episode.end_s + grace_s) {
        alarm_matched[i] = true;
        if (!result.detected) {
          result.detected = true;
          result.detection_latency_s = t - episode.start_s;
        }
      }
    }
    if (result.detected) ++report.detected_count;
    report.per_episode.push_back(result);
  }
  for (bool matched : alarm_matched) {
    if (!matched) ++report.false_alarm_count;
  }
  if (report.episode_count > 0) {
    report.correct_rate_percent =
        correct_rate(report.detected_count, report.episode_count);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Scenario table: run all ten bundled benchmark rows and aggregate a correct
// rate over row passes.

struct TableRowResult {
  Scenario scenario;
  int episode_count = 0;
  int detected = 0;
  int false_alarms = 0;
  bool passed = false;
};

struct TableReport {
  std::vector<TableRowResult> rows;
  int passed_count = 0;
  double correct_rate_percent = 0.0;
  double grace_s = kDefaultGraceS;
};

/// Runs one loaded scenario: generate the trace, evaluate with the row's
/// thresholds layered over the given base config, match against the labels.
inline TableRowResult run_scenario(const Scenario& scenario,
                                   const DetectorConfig& base,
                                   double grace_s = kDefaultGraceS) {
  TableRowResult result;
  result.scenario = scenario;
  DetectorConfig config = base;
  config.ear_threshold = scenario.ear_threshold;
  config.score_threshold = scenario.score_threshold;
  const LabeledTrace labeled = generate_trace(scenario);
  const EventLog log = run_detector_on_trace(labeled.trace, config);
  const EvalReport report = match_alarms(log, labeled.episodes, grace_s);
  result.episode_count = report.episode_count;
  result.detected = report.detected_count;
  result.false_alarms = report.false_alarm_count;
  result.passed = report.detected_count >= kRowPassMinimum;
  return result;
}

/// Loads the ten bundled scenario files from a directory (by their canonical
/// names) and evaluates each row. Throws MissingScenarioError when a file is
/// absent.
inline TableReport run_scenario_table(const std::filesystem::path& scenario_dir,
                                      double grace_s = kDefaultGraceS,
                                      const DetectorConfig& base = {}) {
  TableReport report;
  report.grace_s = grace_s;
  for (const std::string& name : scenario_row_names()) {
    const std::filesystem::path file = scenario_dir / (name + ".json");
    if (!std::filesystem::exists(file)) {
      throw MissingScenarioError("missing scenario file: " + file.string());
    }
    const Scenario scenario = load_scenario(file);
    report.rows.push_back(run_scenario(scenario, base, grace_s));
  }
  for (const TableRowResult& row : report.rows) {
    if (row.passed) ++report.passed_count;
  }
  report.correct_rate_percent =
      correct_rate(report.passed_count, static_cast<int>(report.rows.size()));
  return report;
}

/// One event as a compact JSON line: {"kind":...,"t":...,"score":...} plus
/// "ear" when the frame carried one.
inline std::string event_to_json_line(const Event& event) {
  nlohmann::ordered_json doc;
  doc["kind"] = to_string(event.kind);
  doc["t"] = event.t;
  doc["score"] = event.score;
  if (event.ear) doc["ear"] = *event.ear;
  return doc.dump();
}

inline std::string serialize_events(std::span<const Event> events) {
  std::string out;
  for (const Event& e : events) {
    out += event_to_json_line(e);
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Rendering. Correct rates print with two decimal places.

inline std::string format_report(const EvalReport& report,
                                 const std::string& trace_id) {
  std::ostringstream out;
  out << "trace: " << trace_id << '\n';
  out << "episodes: " << report.episode_count
      << "  detected: " << report.detected_count
      << "  false alarms: " << report.false_alarm_count << '\n';
  for (const EpisodeResult& ep : report.per_episode) {
    out << "  episode [" << format_fixed(ep.episode.start_s, 3) << ", "
        << format_fixed(ep.episode.end_s, 3) << "]  ";
    if (ep.detected) {
      out << "detected  latency " << format_fixed(*ep.detection_latency_s, 3)
          << " s";
    } else {
      out << "missed";
    }
    out << '\n';
  }
  if (report.episode_count > 0) {
    out << "correct rate: " << format_fixed(report.correct_rate_percent, 2)
        << "%\n";
  }
  return out.str();
}

inline std::string format_table(const TableReport& report) {
  std::ostringstream out;
  out << "row                        individual  ear_thr  sensitivity  light     "
         "remarks          detected  result\n";
  for (const TableRowResult& row : report.rows) {
    char line[160];
    std::snprintf(line, sizeof(line),
                  "%-25s  %-10s  %-7s  %-11d  %-8s  %-15s  %d out of %d  %s",
                  row.scenario.name.c_str(), row.scenario.individual.c_str(),
                  format_double(row.scenario.ear_threshold).c_str(),
                  row.scenario.score_threshold, to_string(row.scenario.light),
                  to_string(row.scenario.remark), row.detected,
                  row.episode_count, row.passed ? "pass" : "FAIL");
    out << line << '\n';
  }
  out << "rows passed: " << report.passed_count << " of " << report.rows.size()
      << '\n';
  out << "correct rate: " << format_fixed(report.correct_rate_percent, 2)
      << "%\n";
  return out.str();
}

inline nlohmann::ordered_json report_to_json(const EvalReport& report,
                                             const std::string& trace_id) {
  nlohmann::ordered_json doc;
  doc["trace"] = trace_id;
  doc["episode_count"] = report.episode_count;
  doc["detected_count"] = report.detected_count;
  doc["false_alarm_count"] = report.false_alarm_count;
  nlohmann::ordered_json episodes = nlohmann::ordered_json::array();
  for (const EpisodeResult& ep : report.per_episode) {
    nlohmann::ordered_json item;
    item["start_s"] = ep.episode.start_s;
    item["end_s"] = ep.episode.end_s;
    item["detected"] = ep.detected;
    if (ep.detection_latency_s) item["latency_s"] = *ep.detection_latency_s;
    episodes.push_back(std::move(item));
  }
  doc["episodes"] = std::move(episodes);
  if (report.episode_count > 0) {
    doc["correct_rate_percent"] = report.correct_rate_percent;
  }
  return doc;
}

inline nlohmann::ordered_json table_to_json(const TableReport& report) {
  nlohmann::ordered_json doc;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const TableRowResult& row : report.rows) {
    nlohmann::ordered_json item;
    item["name"] = row.scenario.name;
    item["individual"] = row.scenario.individual;
    item["ear_threshold"] = row.scenario.ear_threshold;
    item["sensitivity"] = row.scenario.score_threshold;
    item["light"] = to_string(row.scenario.light);
    item["remarks"] = to_string(row.scenario.remark);
    item["episode_count"] = row.episode_count;
    item["detected"] = row.detected;
    item["false_alarms"] = row.false_alarms;
    item["passed"] = row.passed;
    rows.push_back(std::move(item));
  }
  doc["rows"] = std::move(rows);
  doc["passed_count"] = report.passed_count;
  doc["correct_rate_percent"] = report.correct_rate_percent;
  doc["grace_s"] = report.grace_s;
  return doc;
}

}  // namespace earwatch
