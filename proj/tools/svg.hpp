#pragma once

#include <algorithm>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "earwatch/detector.hpp"
#include "earwatch/format.hpp"

namespace earwatch::tools {

/// Self-contained SVG line chart of EAR and score over time, with the two
/// thresholds dashed and alarm-active spans shaded.
inline std::string render_svg(const std::vector<double>& times,
                              const std::vector<std::optional<double>>& ears,
                              const std::vector<int>& scores,
                              const std::vector<bool>& alarms,
                              const DetectorConfig& config) {
  const double width = 960.0, height = 360.0;
  const double left = 56.0, right = 904.0, top = 24.0, bottom = 320.0;

  double t_max = 1.0, ear_max = 0.5, score_max = config.score_threshold + 5;
  for (double t : times) t_max = std::max(t_max, t);
  for (const auto& e : ears) {
    if (e) ear_max = std::max(ear_max, *e);
  }
  for (int s : scores) score_max = std::max(score_max, static_cast<double>(s));

  const auto x_of = [&](double t) {
    return left + (right - left) * (t / t_max);
  };
  const auto y_ear = [&](double e) {
    return bottom - (bottom - top) * (e / ear_max);
  };
  const auto y_score = [&](double s) {
    return bottom - (bottom - top) * (s / score_max);
  };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " "
      << height << "\">\n";
  out << "<rect width=\"" << width << "\" height=\"" << height
      << "\" fill=\"white\"/>\n";

  // alarm spans
  std::size_t i = 0;
  while (i < alarms.size()) {
    if (!alarms[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < alarms.size() && alarms[j]) ++j;
    const double x0 = x_of(times[i]);
    const double x1 = x_of(times[j - 1]);
    out << "<rect x=\"" << format_double(x0) << "\" y=\"" << top << "\" width=\""
        << format_double(std::max(1.0, x1 - x0)) << "\" height=\""
        << (bottom - top) << "\" fill=\"#fdd\"/>\n";
    i = j;
  }

  // axes
  out << "<line x1=\"" << left << "\" y1=\"" << bottom << "\" x2=\"" << right
      << "\" y2=\"" << bottom << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left
      << "\" y2=\"" << bottom << "\" stroke=\"black\"/>\n";

  // thresholds
  out << "<line x1=\"" << left << "\" y1=\"" << format_double(y_ear(config.ear_threshold))
      << "\" x2=\"" << right << "\" y2=\"" << format_double(y_ear(config.ear_threshold))
      << "\" stroke=\"#2a6\" stroke-dasharray=\"6 4\"/>\n";
  out << "<line x1=\"" << left << "\" y1=\""
      << format_double(y_score(config.score_threshold)) << "\" x2=\"" << right
      << "\" y2=\"" << format_double(y_score(config.score_threshold))
      << "\" stroke=\"#a33\" stroke-dasharray=\"6 4\"/>\n";

  // EAR polyline segments (broken where the face is missing)
  out << "<g fill=\"none\" stroke=\"#26c\" stroke-width=\"1.5\">\n";
  std::ostringstream seg;
  bool open_path = false;
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (ears[k]) {
      if (!open_path) {
        seg.str("");
        seg << "<polyline points=\"";
        open_path = true;
      }
      seg << format_double(x_of(times[k])) << "," << format_double(y_ear(*ears[k]))
          << " ";
    } else if (open_path) {
      out << seg.str() << "\"/>\n";
      open_path = false;
    }
  }
  if (open_path) out << seg.str() << "\"/>\n";
  out << "</g>\n";

  // score polyline
  out << "<polyline fill=\"none\" stroke=\"#c22\" stroke-width=\"1.5\" points=\"";
  for (std::size_t k = 0; k < times.size(); ++k) {
    out << format_double(x_of(times[k])) << ","
        << format_double(y_score(scores[k])) << " ";
  }
  out << "\"/>\n";

  out << "<text x=\"" << left << "\" y=\"16\" font-family=\"sans-serif\" "
         "font-size=\"12\" fill=\"#26c\">eye aspect ratio</text>\n";
  out << "<text x=\"" << (left + 130) << "\" y=\"16\" font-family=\"sans-serif\" "
         "font-size=\"12\" fill=\"#c22\">score</text>\n";
  out << "<text x=\"" << (right - 60) << "\" y=\"" << (bottom + 16)
      << "\" font-family=\"sans-serif\" font-size=\"12\">t = "
      << format_double(t_max) << " s</text>\n";
  out << "</svg>\n";
  return out.str();
}

}  // namespace earwatch::tools
