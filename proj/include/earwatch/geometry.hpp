#pragma once

#include <array>
#include <cmath>
#include <cstddef>

#include "earwatch/errors.hpp"

namespace earwatch {

/// A 2D landmark position in pixel units.
struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

inline bool is_finite(const Point2& p) {
  return std::isfinite(p.x) && std::isfinite(p.y);
}

/// The six ocular landmarks of one eye, ordered a1..a6: a1 and a4 are the
/// horizontal corners (outer, inner), a2/a3 sit on the upper lid and a6/a5
/// on the lower lid directly beneath them.
struct EyeLandmarks {
  std::array<Point2, 6> points{};

  friend bool operator==(const EyeLandmarks&, const EyeLandmarks&) = default;
};

/// Full 68-point facial landmark set as produced by the common
/// shape-predictor layout.
struct FaceLandmarks68 {
  std::array<Point2, 68> points{};

  friend bool operator==(const FaceLandmarks68&, const FaceLandmarks68&) = default;
};

struct EyePair {
  EyeLandmarks left;
  EyeLandmarks right;

  friend bool operator==(const EyePair&, const EyePair&) = default;
};

/// Zero-based positions of the per-eye landmarks inside the 68-point
/// layout. The defaults follow the de facto shape-predictor convention;
/// override when a landmark source uses a different layout.
struct EyeIndexMap {
  std::array<std::size_t, 6> left{36, 37, 38, 39, 40, 41};
  std::array<std::size_t, 6> right{42, 43, 44, 45, 46, 47};

  friend bool operator==(const EyeIndexMap&, const EyeIndexMap&) = default;
};

inline constexpr EyeIndexMap kStandard68EyeIndices{};

inline double euclidean_distance(const Point2& p, const Point2& q) {
  const double dx = p.x - q.x;
  const double dy = p.y - q.y;
  return std::sqrt(dx * dx + dy * dy);
}

/// Eye aspect ratio: (|a2-a6| + |a3-a5|) / (2 |a1-a4|). High while the eye
/// is open (around 0.24), low when closed (around 0.15). Throws
/// DegenerateEyeError when a1 == a4; that only happens on corrupt landmark
/// input and must not be mistaken for a closed eye.
inline double compute_ear(const EyeLandmarks& eye) {
  const auto& a = eye.points;
  const double horizontal = euclidean_distance(a[0], a[3]);
  if (horizontal == 0.0) {
    throw DegenerateEyeError("horizontal eye landmarks a1 and a4 coincide");
  }
  const double vertical_a = euclidean_distance(a[1], a[5]);
  const double vertical_b = euclidean_distance(a[2], a[4]);
  return (vertical_a + vertical_b) / (2.0 * horizontal);
}

inline EyeLandmarks pick_eye(const FaceLandmarks68& face,
                             const std::array<std::size_t, 6>& indices) {
  EyeLandmarks eye;
  for (std::size_t i = 0; i < indices.size(); ++i) {
    eye.points[i] = face.points.at(indices[i]);
  }
  return eye;
}

inline EyePair extract_eyes(const FaceLandmarks68& face,
                            const EyeIndexMap& map = kStandard68EyeIndices) {
  return EyePair{pick_eye(face, map.left), pick_eye(face, map.right)};
}

/// Arithmetic mean of the two per-eye aspect ratios.
inline double mean_ear(const EyePair& pair) {
  return (compute_ear(pair.left) + compute_ear(pair.right)) / 2.0;
}

}  // namespace earwatch
