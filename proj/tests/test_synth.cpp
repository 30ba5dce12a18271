#include <set>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "earwatch/detector.hpp"
#include "earwatch/synth.hpp"

namespace earwatch {
namespace {

std::string serialize(const Trace& trace) {
  std::ostringstream out;
  write_trace(out, trace);
  return out.str();
}

TEST(GenerateTrace, ConstantOpenSegment) {
  ScenarioScript script;
  script.duration_s = 10.0;
  script.fps = 30.0;
  script.segments = {{0.0, 10.0, SegmentKind::OpenEyes, 0.0}};
  const LabeledTrace labeled = generate_trace(script);
  ASSERT_EQ(labeled.trace.frames.size(), 300u);
  for (const FrameObservation& obs : labeled.trace.frames) {
    ASSERT_TRUE(obs.face_present);
    ASSERT_DOUBLE_EQ(*obs.ear, 0.24);
  }
  EXPECT_TRUE(labeled.episodes.empty());
}

TEST(GenerateTrace, ClosedSegmentBecomesEpisode) {
  ScenarioScript script;
  script.duration_s = 10.0;
  script.segments = {{3.0, 7.0, SegmentKind::ClosedEyes, 0.0}};
  const LabeledTrace labeled = generate_trace(script);
  ASSERT_EQ(labeled.episodes.size(), 1u);
  EXPECT_DOUBLE_EQ(labeled.episodes[0].start_s, 3.0);
  EXPECT_DOUBLE_EQ(labeled.episodes[0].end_s, 7.0);
  // Frames inside the segment carry the closed baseline.
  EXPECT_DOUBLE_EQ(*labeled.trace.frames[90].ear, 0.15);   // t = 3.0
  EXPECT_DOUBLE_EQ(*labeled.trace.frames[89].ear, 0.24);   // t just before
  EXPECT_DOUBLE_EQ(*labeled.trace.frames[210].ear, 0.24);  // t = 7.0
}

TEST(GenerateTrace, BlinkShorterThanEpisodeCutoffIsNotLabeled) {
  ScenarioScript script;
  script.duration_s = 5.0;
  script.segments = {{1.0, 1.3, SegmentKind::ClosedEyes, 0.0}};
  const LabeledTrace labeled = generate_trace(script);
  EXPECT_TRUE(labeled.episodes.empty());
}

TEST(GenerateTrace, DeterministicUnderFixedSeed) {
  ScenarioScript script;
  script.duration_s = 20.0;
  script.noise_stddev = 0.03;
  script.dropout_probability = 0.2;
  script.seed = 777;
  script.segments = {{5.0, 9.0, SegmentKind::ClosedEyes, 0.0}};
  const std::string first = serialize(generate_trace(script).trace);
  const std::string second = serialize(generate_trace(script).trace);
  EXPECT_EQ(first, second);
  EXPECT_FALSE(first.empty());

  script.seed = 778;
  EXPECT_NE(serialize(generate_trace(script).trace), first);
}

TEST(GenerateTrace, BlinkSegmentClosesForPointTwoSecondsPerPeriod) {
  ScenarioScript script;
  script.duration_s = 8.0;
  script.segments = {{0.0, 7.0, SegmentKind::Blink, 1.0}};
  const LabeledTrace labeled = generate_trace(script);
  // Each period opens with a closed run of 0.2 s: six frames at 30 fps,
  // plus at most one more where i/30 rounds just under the period edge.
  for (int period = 0; period < 7; ++period) {
    for (int k = 0; k < 6; ++k) {
      ASSERT_DOUBLE_EQ(*labeled.trace.frames[period * 30 + k].ear, 0.15);
    }
    ASSERT_DOUBLE_EQ(*labeled.trace.frames[period * 30 + 7].ear, 0.24);
    int closed = 0;
    for (int k = 0; k < 30; ++k) {
      if (*labeled.trace.frames[period * 30 + k].ear == 0.15) ++closed;
    }
    ASSERT_TRUE(closed == 6 || closed == 7) << "period " << period;
  }
  EXPECT_TRUE(labeled.episodes.empty());

  // The detector sees exactly 7 blinks.
  Detector detector{DetectorConfig{}};
  int blinks = 0;
  for (const FrameObservation& obs : labeled.trace.frames) {
    for (const Event& e : detector.feed(obs)) {
      if (e.kind == EventKind::Blink) ++blinks;
    }
  }
  EXPECT_EQ(blinks, 7);
}

TEST(GenerateTrace, FaceAbsentSegmentAndFullDropout) {
  ScenarioScript script;
  script.duration_s = 2.0;
  script.segments = {{0.0, 1.0, SegmentKind::FaceAbsent, 0.0}};
  const LabeledTrace labeled = generate_trace(script);
  for (int i = 0; i < 30; ++i) {
    ASSERT_FALSE(labeled.trace.frames[i].face_present);
  }
  ASSERT_TRUE(labeled.trace.frames[30].face_present);

  ScenarioScript dropout_script;
  dropout_script.duration_s = 2.0;
  dropout_script.dropout_probability = 1.0;
  for (const FrameObservation& obs : generate_trace(dropout_script).trace.frames) {
    ASSERT_FALSE(obs.face_present);
  }
}

TEST(GenerateTrace, NoiseNeverDrivesEarNegative) {
  ScenarioScript script;
  script.duration_s = 30.0;
  script.baseline_closed_ear = 0.02;
  script.baseline_open_ear = 0.24;
  script.noise_stddev = 0.2;
  script.seed = 5;
  script.segments = {{0.0, 30.0, SegmentKind::ClosedEyes, 0.0}};
  for (const FrameObservation& obs : generate_trace(script).trace.frames) {
    ASSERT_GE(*obs.ear, 0.0);
  }
}

TEST(GenerateTrace, GeneratedTracesValidateCleanly) {
  for (const std::string& name : scenario_row_names()) {
    const LabeledTrace labeled = generate_trace(scenario_from_table_row(name));
    EXPECT_TRUE(validate_trace(labeled.trace).clean()) << name;
  }
}

TEST(GenerateTrace, InvalidScriptsRejected) {
  ScenarioScript overlap;
  overlap.segments = {{0.0, 5.0, SegmentKind::OpenEyes, 0.0},
                      {4.0, 8.0, SegmentKind::ClosedEyes, 0.0}};
  EXPECT_THROW(generate_trace(overlap), InvalidScriptError);

  ScenarioScript outside;
  outside.duration_s = 10.0;
  outside.segments = {{5.0, 11.0, SegmentKind::OpenEyes, 0.0}};
  EXPECT_THROW(generate_trace(outside), InvalidScriptError);

  ScenarioScript inverted;
  inverted.baseline_open_ear = 0.15;
  inverted.baseline_closed_ear = 0.24;
  EXPECT_THROW(generate_trace(inverted), InvalidScriptError);

  ScenarioScript no_period;
  no_period.segments = {{0.0, 5.0, SegmentKind::Blink, 0.0}};
  EXPECT_THROW(generate_trace(no_period), InvalidScriptError);

  ScenarioScript bad_dropout;
  bad_dropout.dropout_probability = 1.5;
  EXPECT_THROW(generate_trace(bad_dropout), InvalidScriptError);
}

TEST(ScenarioRows, ZeroNoiseBaselinesClassifyCleanlyAtEveryTableThreshold) {
  // With noise and dropout stripped, open frames must classify open and
  // closed frames closed at each threshold the benchmark rows use.
  for (const std::string& name : scenario_row_names()) {
    Scenario scenario = scenario_from_table_row(name);
    scenario.script.noise_stddev = 0.0;
    scenario.script.dropout_probability = 0.0;
    const LabeledTrace labeled = generate_trace(scenario);
    for (double threshold : {0.2, 0.22, 0.25}) {
      DetectorConfig config;
      config.ear_threshold = threshold;
      for (const FrameObservation& obs : labeled.trace.frames) {
        const bool in_episode = [&] {
          for (const Episode& ep : labeled.episodes) {
            if (obs.t >= ep.start_s && obs.t < ep.end_s) return true;
          }
          return false;
        }();
        const EyeState state = classify_eye_state(obs.ear, config);
        ASSERT_EQ(state, in_episode ? EyeState::Closed : EyeState::Open)
            << name << " t=" << obs.t << " threshold=" << threshold;
      }
    }
  }
}

TEST(ScenarioRows, TableMappings) {
  const Scenario bright = scenario_from_table_row("row01-a-bright-normal");
  EXPECT_DOUBLE_EQ(bright.script.noise_stddev, 0.005);
  EXPECT_DOUBLE_EQ(bright.script.dropout_probability, 0.0);
  EXPECT_EQ(bright.script.segments.size(), 3u);
  EXPECT_DOUBLE_EQ(bright.ear_threshold, 0.2);
  EXPECT_EQ(bright.score_threshold, 48);

  const Scenario dim = scenario_from_table_row("row02-a-dim-normal");
  EXPECT_DOUBLE_EQ(dim.script.noise_stddev, 0.02);

  const Scenario sunglasses = scenario_from_table_row("row03-a-bright-sunglasses");
  EXPECT_DOUBLE_EQ(sunglasses.script.dropout_probability, 1.0);

  const Scenario rainy = scenario_from_table_row("row06-b-dim-rainy");
  EXPECT_DOUBLE_EQ(rainy.script.noise_stddev, 0.04);
  EXPECT_DOUBLE_EQ(rainy.ear_threshold, 0.25);
  EXPECT_EQ(rainy.score_threshold, 43);

  const Scenario night = scenario_from_table_row("row09-c-verydim-night");
  EXPECT_DOUBLE_EQ(night.script.noise_stddev, 0.05);
  EXPECT_DOUBLE_EQ(night.script.dropout_probability, 0.5);
  EXPECT_DOUBLE_EQ(night.ear_threshold, 0.22);

  EXPECT_THROW(scenario_from_table_row("row99-z"), UnknownRowError);
}

TEST(ScenarioRows, TenRowsWithUniqueSeeds) {
  const auto names = scenario_row_names();
  ASSERT_EQ(names.size(), 10u);
  std::set<std::uint64_t> seeds;
  for (const std::string& name : names) {
    seeds.insert(scenario_from_table_row(name).script.seed);
  }
  EXPECT_EQ(seeds.size(), 10u);
}

TEST(ScenarioJson, RoundTrip) {
  const Scenario original = scenario_from_table_row("row09-c-verydim-night");
  const nlohmann::ordered_json doc = scenario_to_json(original);
  const Scenario reparsed = scenario_from_json(nlohmann::json::parse(doc.dump()));
  EXPECT_EQ(reparsed.name, original.name);
  EXPECT_EQ(reparsed.individual, original.individual);
  EXPECT_EQ(reparsed.light, original.light);
  EXPECT_EQ(reparsed.remark, original.remark);
  EXPECT_DOUBLE_EQ(reparsed.ear_threshold, original.ear_threshold);
  EXPECT_EQ(reparsed.score_threshold, original.score_threshold);
  EXPECT_EQ(reparsed.script.segments, original.script.segments);
  EXPECT_EQ(reparsed.script.seed, original.script.seed);
  EXPECT_DOUBLE_EQ(reparsed.script.noise_stddev, original.script.noise_stddev);

  // Same script, same seed: regenerating from the reparsed scenario is
  // byte-identical.
  EXPECT_EQ(serialize(generate_trace(reparsed).trace),
            serialize(generate_trace(original).trace));
}

}  // namespace
}  // namespace earwatch
