#pragma once

#include <algorithm>
#include <cassert>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "earwatch/errors.hpp"
#include "earwatch/geometry.hpp"
#include "earwatch/trace.hpp"

namespace earwatch {

enum class EyeState { Open, Closed, NoFace };

inline const char* to_string(EyeState s) {
  switch (s) {
    case EyeState::Open: return "open";
    case EyeState::Closed: return "closed";
    case EyeState::NoFace: return "no_face";
  }
  return "?";
}

/// All tunable thresholds of the detector. The defaults are calibrated for
/// roughly 30 fps input; the detector itself is driven purely by record
/// timestamps, nominal_fps is only used by the trace generator and reports.
struct DetectorConfig {
  double ear_threshold = 0.20;   // EAR below this counts as a closed eye
  int score_threshold = 10;      // alarm while score is strictly above this
  int score_increment = 1;       // added per closed frame
  int score_decrement = 1;       // removed per open frame (floored at 0)
  int perclos_window = 90;       // sliding window length, frames
  int no_face_limit = 15;        // consecutive absent-face frames before
                                 // the driver is assumed asleep
  double blink_min_s = 0.1;      // physiological blink band, inclusive
  double blink_max_s = 0.4;
  double nominal_fps = 30.0;

  /// Upper bound on the score so the alarm releases promptly after very
  /// long closures. Unset means 3 * score_threshold.
  std::optional<int> score_cap;

  /// Landmark layout used when records carry full 68-point faces.
  EyeIndexMap eye_indices{};

  int effective_score_cap() const {
    return score_cap ? *score_cap : 3 * score_threshold;
  }

  void validate() const {
    if (!(ear_threshold > 0.0)) {
      throw InvalidConfigError("ear_threshold must be positive");
    }
    if (score_threshold < 1) {
      throw InvalidConfigError("score_threshold must be positive");
    }
    if (score_increment < 1 || score_decrement < 1) {
      throw InvalidConfigError("score_increment and score_decrement must be >= 1");
    }
    if (perclos_window < 1) {
      throw InvalidConfigError("perclos_window must be positive");
    }
    if (no_face_limit < 1) {
      throw InvalidConfigError("no_face_limit must be positive");
    }
    if (!(blink_min_s > 0.0) || !(blink_min_s < blink_max_s)) {
      throw InvalidConfigError("blink band requires 0 < blink_min_s < blink_max_s");
    }
    if (!(nominal_fps > 0.0)) {
      throw InvalidConfigError("nominal_fps must be positive");
    }
    if (score_cap && *score_cap < 1) {
      throw InvalidConfigError("score_cap must be positive when set");
    }
    for (std::size_t i : eye_indices.left) {
      if (i >= 68) throw InvalidConfigError("left eye index out of range");
    }
    for (std::size_t i : eye_indices.right) {
      if (i >= 68) throw InvalidConfigError("right eye index out of range");
    }
  }
};

enum class EventKind {
  AlarmOn,
  AlarmOff,
  Blink,
  LongClosureStart,
  FaceLost,
  FaceRecovered,
};

inline const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::AlarmOn: return "alarm_on";
    case EventKind::AlarmOff: return "alarm_off";
    case EventKind::Blink: return "blink";
    case EventKind::LongClosureStart: return "long_closure_start";
    case EventKind::FaceLost: return "face_lost";
    case EventKind::FaceRecovered: return "face_recovered";
  }
  return "?";
}

/// One observable output of the detector. AlarmOn/AlarmOff strictly
/// alternate within a log, starting with AlarmOn.
struct Event {
  EventKind kind{};
  double t = 0.0;
  int score = 0;
  std::optional<double> ear;

  friend bool operator==(const Event&, const Event&) = default;
};

enum class ClosureKind { ShortNoise, Blink, LongClosure };

/// The evolving detector state. A single-owner value: step() consumes one
/// state and returns the next, so distinct detectors never share anything.
struct DetectorState {
  int score = 0;
  bool alarm_active = false;
  int consecutive_no_face = 0;
  std::optional<double> closure_started_at;
  bool long_closure_signaled = false;
  std::deque<EyeState> perclos_buffer;
  int closed_in_buffer = 0;
  std::optional<double> last_timestamp;

  friend bool operator==(const DetectorState&, const DetectorState&) = default;
};

/// Absent EAR means no face was found. At the threshold itself the eye
/// counts as open, keeping the boundary deterministic.
inline EyeState classify_eye_state(std::optional<double> ear,
                                   const DetectorConfig& config) {
  if (!ear) return EyeState::NoFace;
  return *ear < config.ear_threshold ? EyeState::Closed : EyeState::Open;
}

/// Buckets a finished closed run by its duration against the blink band.
inline ClosureKind classify_closure(double duration_s,
                                    const DetectorConfig& config) {
  if (duration_s < config.blink_min_s) return ClosureKind::ShortNoise;
  if (duration_s <= config.blink_max_s) return ClosureKind::Blink;
  return ClosureKind::LongClosure;
}

struct StepResult {
  DetectorState state;
  std::vector<Event> events;
};

/// EAR for one observation: precomputed value if the record carries one,
/// otherwise derived from the landmarks. Absent when no face was found.
inline std::optional<double> observation_ear(const FrameObservation& obs,
                                             const DetectorConfig& config) {
  if (!obs.face_present) return std::nullopt;
  if (obs.ear) return obs.ear;
  if (obs.landmarks) return mean_ear(extract_eyes(*obs.landmarks, config.eye_indices));
  return std::nullopt;
}

/// Advances the detector by one frame.
///
/// Per frame: the eye state is classified from the EAR; absent-face frames
/// leave the score untouched until no_face_limit consecutive misses, after
/// which each one scores as closed (the driver is assumed asleep). Closed
/// frames raise the score, open frames lower it (floored at zero), and the
/// alarm is active exactly while the score strictly exceeds score_threshold.
/// A closed run that ends inside the blink band emits Blink; a run that
/// outgrows the band emits LongClosureStart once.
///
/// Throws NonMonotonicTimestampError when the observation does not advance
/// the clock.
inline StepResult step(DetectorState state, const FrameObservation& obs,
                       const DetectorConfig& config) {
  if (state.last_timestamp && !(obs.t > *state.last_timestamp)) {
    throw NonMonotonicTimestampError(
        "timestamp " + std::to_string(obs.t) + " does not advance past " +
        std::to_string(*state.last_timestamp));
  }

  std::vector<EventKind> emitted;
  const std::optional<double> ear = observation_ear(obs, config);
  const EyeState raw = classify_eye_state(ear, config);

  EyeState effective;
  if (raw == EyeState::NoFace) {
    state.consecutive_no_face += 1;
    if (state.consecutive_no_face == config.no_face_limit) {
      emitted.push_back(EventKind::FaceLost);
    }
    effective = state.consecutive_no_face >= config.no_face_limit
                    ? EyeState::Closed
                    : EyeState::NoFace;
  } else {
    if (state.consecutive_no_face >= config.no_face_limit) {
      emitted.push_back(EventKind::FaceRecovered);
    }
    state.consecutive_no_face = 0;
    effective = raw;
  }

  if (effective == EyeState::Closed) {
    if (!state.closure_started_at) {
      state.closure_started_at = obs.t;
      state.long_closure_signaled = false;
    } else if (!state.long_closure_signaled &&
               obs.t - *state.closure_started_at > config.blink_max_s) {
      emitted.push_back(EventKind::LongClosureStart);
      state.long_closure_signaled = true;
    }
  } else if (state.closure_started_at) {
    const double duration = obs.t - *state.closure_started_at;
    if (classify_closure(duration, config) == ClosureKind::Blink) {
      emitted.push_back(EventKind::Blink);
    }
    state.closure_started_at.reset();
    state.long_closure_signaled = false;
  }

  if (effective == EyeState::Closed) {
    state.score = std::min(state.score + config.score_increment,
                           config.effective_score_cap());
  } else if (effective == EyeState::Open) {
    state.score = std::max(0, state.score - config.score_decrement);
  }

  const bool alarm_now = state.score > config.score_threshold;
  if (alarm_now && !state.alarm_active) {
    emitted.push_back(EventKind::AlarmOn);
  } else if (!alarm_now && state.alarm_active) {
    emitted.push_back(EventKind::AlarmOff);
  }
  state.alarm_active = alarm_now;
  assert(state.alarm_active == (state.score > config.score_threshold));
  assert(state.score >= 0);

  state.perclos_buffer.push_back(effective);
  if (effective == EyeState::Closed) state.closed_in_buffer += 1;
  while (static_cast<int>(state.perclos_buffer.size()) > config.perclos_window) {
    if (state.perclos_buffer.front() == EyeState::Closed) {
      state.closed_in_buffer -= 1;
    }
    state.perclos_buffer.pop_front();
  }

  state.last_timestamp = obs.t;

  std::vector<Event> events;
  events.reserve(emitted.size());
  for (EventKind kind : emitted) {
    events.push_back(Event{kind, obs.t, state.score, ear});
  }
  return StepResult{std::move(state), std::move(events)};
}

/// Fraction of frames in the sliding window whose effective eye state was
/// closed. Throws EmptyWindowError before the first frame.
inline double perclos(const DetectorState& state) {
  if (state.perclos_buffer.empty()) {
    throw EmptyWindowError("no frames processed yet");
  }
  return static_cast<double>(state.closed_in_buffer) /
         static_cast<double>(state.perclos_buffer.size());
}

/// Blink events per minute over the window (now_s - window_s, now_s].
inline double blink_rate(std::span<const Event> events, double window_s,
                         double now_s) {
  int count = 0;
  for (const Event& e : events) {
    if (e.kind == EventKind::Blink && e.t > now_s - window_s && e.t <= now_s) {
      ++count;
    }
  }
  return 60.0 * static_cast<double>(count) / window_s;
}

/// Convenience wrapper owning one config + state pair. Must be fed frames
/// sequentially; distinct instances are fully independent.
class Detector {
 public:
  explicit Detector(DetectorConfig config) : config_(std::move(config)) {
    config_.validate();
  }

  std::vector<Event> feed(const FrameObservation& obs) {
    StepResult result = step(std::move(state_), obs, config_);
    state_ = std::move(result.state);
    return std::move(result.events);
  }

  const DetectorState& state() const { return state_; }
  const DetectorConfig& config() const { return config_; }

 private:
  DetectorConfig config_;
  DetectorState state_;
};

}  // namespace earwatch
