#pragma once

#include <optional>
#include <string>
#include <vector>

#include "earwatch/geometry.hpp"

namespace earwatch {

/// One timestamped input record, the decoupled stand-in for a video frame.
/// A face-present record carries either the full 68-point landmark set or a
/// precomputed eye aspect ratio, never both; a face-absent record carries
/// neither.
struct FrameObservation {
  double t = 0.0;
  bool face_present = false;
  std::optional<FaceLandmarks68> landmarks;
  std::optional<double> ear;

  friend bool operator==(const FrameObservation&, const FrameObservation&) = default;
};

/// An ordered, strictly-increasing-timestamp sequence of frame observations.
struct Trace {
  std::vector<FrameObservation> frames;
  std::string source_id;
};

}  // namespace earwatch
