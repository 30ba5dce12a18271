// earwatch command line tool: replay landmark/EAR traces through the
// drowsiness detector, synthesize scenario traces, evaluate event logs
// against ground truth, and dump per-frame plot data.

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <istream>
#include <memory>
#include <optional>
#include <streambuf>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "earwatch/detector.hpp"
#include "earwatch/errors.hpp"
#include "earwatch/eval.hpp"
#include "earwatch/format.hpp"
#include "earwatch/ingestion.hpp"
#include "earwatch/synth.hpp"
#include "svg.hpp"

namespace {

using namespace earwatch;

// Exit codes: 0 ok, 1 parse error, 2 schema/config error, 3 non-monotonic
// timestamps, 4 I/O error, 5 invalid scenario script.
int exit_code_for(const Error& e) {
  if (dynamic_cast<const ParseError*>(&e)) return 1;
  if (dynamic_cast<const SchemaError*>(&e)) return 2;
  if (dynamic_cast<const DegenerateEyeError*>(&e)) return 2;
  if (dynamic_cast<const InvalidConfigError*>(&e)) return 2;
  if (dynamic_cast<const NonMonotonicTimestampError*>(&e)) return 3;
  if (dynamic_cast<const InvalidScriptError*>(&e)) return 5;
  return 4;  // IoError, MissingScenario and anything else environmental
}

// ---------------------------------------------------------------------------
// Detector configuration from an optional JSON file plus per-flag overrides.

struct DetectorOptions {
  std::string config_file;
  std::optional<double> ear_threshold;
  std::optional<int> score_threshold;
  std::optional<int> score_increment;
  std::optional<int> score_decrement;
  std::optional<int> perclos_window;
  std::optional<int> no_face_limit;
  std::optional<double> blink_min_s;
  std::optional<double> blink_max_s;
  std::optional<double> nominal_fps;
  std::optional<int> score_cap;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_file,
                    "JSON file with detector settings (flags win over file values)");
    cmd->add_option("--ear-threshold", ear_threshold,
                    "EAR below this counts as closed (default 0.2)");
    cmd->add_option("--score-threshold", score_threshold,
                    "alarm while score exceeds this (default 10)");
    cmd->add_option("--score-increment", score_increment,
                    "score added per closed frame (default 1)");
    cmd->add_option("--score-decrement", score_decrement,
                    "score removed per open frame (default 1)");
    cmd->add_option("--perclos-window", perclos_window,
                    "PERCLOS sliding window, frames (default 90)");
    cmd->add_option("--no-face-limit", no_face_limit,
                    "consecutive no-face frames before assuming sleep (default 15)");
    cmd->add_option("--blink-min", blink_min_s,
                    "blink band lower edge, seconds (default 0.1)");
    cmd->add_option("--blink-max", blink_max_s,
                    "blink band upper edge, seconds (default 0.4)");
    cmd->add_option("--fps", nominal_fps,
                    "nominal frames per second, informational (default 30)");
    cmd->add_option("--score-cap", score_cap,
                    "score ceiling (default 3x score threshold)");
  }

  DetectorConfig resolve() const {
    DetectorConfig config;
    if (!config_file.empty()) config = from_file(config_file);
    if (ear_threshold) config.ear_threshold = *ear_threshold;
    if (score_threshold) config.score_threshold = *score_threshold;
    if (score_increment) config.score_increment = *score_increment;
    if (score_decrement) config.score_decrement = *score_decrement;
    if (perclos_window) config.perclos_window = *perclos_window;
    if (no_face_limit) config.no_face_limit = *no_face_limit;
    if (blink_min_s) config.blink_min_s = *blink_min_s;
    if (blink_max_s) config.blink_max_s = *blink_max_s;
    if (nominal_fps) config.nominal_fps = *nominal_fps;
    if (score_cap) config.score_cap = *score_cap;
    config.validate();
    return config;
  }

  static DetectorConfig from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path.string());
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("config ") + path.string() + ": " + e.what());
    }
    if (!doc.is_object()) throw SchemaError("config is not an object", "", 0);
    DetectorConfig config;
    try {
      for (const auto& item : doc.items()) {
        const std::string& key = item.key();
        const nlohmann::json& value = item.value();
        if (key == "ear_threshold") config.ear_threshold = value.get<double>();
        else if (key == "score_threshold") config.score_threshold = value.get<int>();
        else if (key == "score_increment") config.score_increment = value.get<int>();
        else if (key == "score_decrement") config.score_decrement = value.get<int>();
        else if (key == "perclos_window") config.perclos_window = value.get<int>();
        else if (key == "no_face_limit") config.no_face_limit = value.get<int>();
        else if (key == "blink_min_s") config.blink_min_s = value.get<double>();
        else if (key == "blink_max_s") config.blink_max_s = value.get<double>();
        else if (key == "nominal_fps") config.nominal_fps = value.get<double>();
        else if (key == "score_cap") config.score_cap = value.get<int>();
        else if (key == "eye_indices") {
          for (std::size_t i = 0; i < 6; ++i) {
            config.eye_indices.left[i] = value.at("left").at(i).get<std::size_t>();
            config.eye_indices.right[i] = value.at("right").at(i).get<std::size_t>();
          }
        } else {
          throw SchemaError("unknown config field", key, 0);
        }
      }
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(e.what(), "", 0);
    }
    return config;
  }
};

// ---------------------------------------------------------------------------
// Input plumbing: files, stdin, or a one-shot TCP listener speaking the same
// line format.

class FdStreambuf : public std::streambuf {
 public:
  explicit FdStreambuf(int fd) : fd_(fd) {}
  ~FdStreambuf() override {
    if (fd_ >= 0) ::close(fd_);
  }

 protected:
  int_type underflow() override {
    const ssize_t n = ::read(fd_, buffer_, sizeof(buffer_));
    if (n <= 0) return traits_type::eof();
    setg(buffer_, buffer_, buffer_ + n);
    return traits_type::to_int_type(buffer_[0]);
  }

 private:
  int fd_ = -1;
  char buffer_[4096];
};

struct TcpEndpoint {
  std::string host;
  int port = 0;
};

std::optional<TcpEndpoint> parse_tcp_url(const std::string& input) {
  constexpr std::string_view prefix = "tcp://";
  if (input.rfind(prefix, 0) != 0) return std::nullopt;
  const std::string rest = input.substr(prefix.size());
  const auto colon = rest.rfind(':');
  if (colon == std::string::npos) {
    throw IoError("tcp input needs host:port, got " + input);
  }
  TcpEndpoint ep;
  ep.host = rest.substr(0, colon);
  try {
    ep.port = std::stoi(rest.substr(colon + 1));
  } catch (const std::exception&) {
    throw IoError("bad tcp port in " + input);
  }
  return ep;
}

/// Binds the endpoint, reports the actual address on stderr, and blocks for
/// one connection. Returns the connected socket fd.
int accept_one_connection(const TcpEndpoint& ep) {
  const int listener = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listener < 0) throw IoError("cannot create socket");
  const int one = 1;
  ::setsockopt(listener, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));

  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<uint16_t>(ep.port));
  if (::inet_pton(AF_INET, ep.host.c_str(), &addr.sin_addr) != 1) {
    ::close(listener);
    throw IoError("cannot parse IPv4 address: " + ep.host);
  }
  if (::bind(listener, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    ::close(listener);
    throw IoError("cannot bind " + ep.host + ":" + std::to_string(ep.port));
  }
  if (::listen(listener, 1) != 0) {
    ::close(listener);
    throw IoError("cannot listen on " + ep.host + ":" + std::to_string(ep.port));
  }
  sockaddr_in bound{};
  socklen_t len = sizeof(bound);
  ::getsockname(listener, reinterpret_cast<sockaddr*>(&bound), &len);
  std::fprintf(stderr, "listening on %s:%d\n", ep.host.c_str(),
               static_cast<int>(ntohs(bound.sin_port)));

  const int conn = ::accept(listener, nullptr, nullptr);
  ::close(listener);
  if (conn < 0) throw IoError("accept failed");
  return conn;
}

struct InputSource {
  std::unique_ptr<std::ifstream> file;
  std::unique_ptr<FdStreambuf> socket_buf;
  std::unique_ptr<std::istream> socket_stream;
  std::istream* stream = nullptr;
};

InputSource open_input(const std::string& descriptor) {
  InputSource src;
  if (descriptor == "-") {
    src.stream = &std::cin;
    return src;
  }
  if (auto ep = parse_tcp_url(descriptor)) {
    src.socket_buf = std::make_unique<FdStreambuf>(accept_one_connection(*ep));
    src.socket_stream = std::make_unique<std::istream>(src.socket_buf.get());
    src.stream = src.socket_stream.get();
    return src;
  }
  src.file = std::make_unique<std::ifstream>(descriptor);
  if (!*src.file) throw IoError("cannot open input: " + descriptor);
  src.stream = src.file.get();
  return src;
}

struct OutputSink {
  std::unique_ptr<std::ofstream> file;
  std::ostream* stream = nullptr;
};

OutputSink open_output(const std::string& descriptor) {
  OutputSink sink;
  if (descriptor == "-") {
    sink.stream = &std::cout;
    return sink;
  }
  sink.file = std::make_unique<std::ofstream>(descriptor);
  if (!*sink.file) throw IoError("cannot open output: " + descriptor);
  sink.stream = sink.file.get();
  return sink;
}

/// Runs the alarm hook in detached-from-processing threads; failures are
/// diagnostics only. Joined at scope exit so the process does not quit with
/// hooks mid-flight.
class AlarmHook {
 public:
  explicit AlarmHook(std::string command) : command_(std::move(command)) {}

  ~AlarmHook() {
    for (std::thread& t : threads_) {
      if (t.joinable()) t.join();
    }
  }

  void fire() {
    if (command_.empty()) return;
    threads_.emplace_back([cmd = command_] {
      const int status = std::system(cmd.c_str());
      if (status != 0) {
        std::fprintf(stderr, "alarm hook exited with status %d: %s\n", status,
                     cmd.c_str());
      }
    });
  }

 private:
  std::string command_;
  std::vector<std::thread> threads_;
};

// ---------------------------------------------------------------------------
// Subcommands.

struct ReplayArgs {
  std::string input = "-";
  std::string output = "-";
  std::string on_alarm;
  DetectorOptions detector;
};

int run_replay(const ReplayArgs& args) {
  const DetectorConfig config = args.detector.resolve();
  InputSource input = open_input(args.input);
  OutputSink sink = open_output(args.output);
  AlarmHook hook(args.on_alarm);

  Detector detector(config);
  TraceReader reader(*input.stream);
  while (true) {
    std::optional<FrameObservation> obs;
    try {
      obs = reader.next();
    } catch (const Error&) {
      sink.stream->flush();  // keep the partial event output
      throw;
    }
    if (!obs) break;
    for (const Event& event : detector.feed(*obs)) {
      *sink.stream << event_to_json_line(event) << '\n';
      sink.stream->flush();
      if (event.kind == EventKind::AlarmOn) hook.fire();
    }
  }
  sink.stream->flush();
  return 0;
}

struct SimulateArgs {
  std::string scenario_path;
  std::string out = "-";
  std::string labels_out;
};

int run_simulate(const SimulateArgs& args) {
  const Scenario scenario = load_scenario(args.scenario_path);
  const LabeledTrace labeled = generate_trace(scenario);

  OutputSink sink = open_output(args.out);
  write_trace(*sink.stream, labeled.trace);
  sink.stream->flush();

  std::string labels_path = args.labels_out;
  if (labels_path.empty() && args.out != "-") {
    labels_path = args.out + ".labels.json";
  }
  if (!labels_path.empty()) {
    std::ofstream labels(labels_path);
    if (!labels) throw IoError("cannot open labels output: " + labels_path);
    labels << labels_to_json(labeled.trace.source_id, labeled.episodes).dump(2)
           << '\n';
  }
  return 0;
}

struct EvalArgs {
  std::string trace_path;
  std::string labels_path;
  std::string table_dir;
  double grace_s = kDefaultGraceS;
  bool as_json = false;
  DetectorOptions detector;
};

int run_eval(const EvalArgs& args) {
  if (!args.table_dir.empty()) {
    const TableReport report =
        run_scenario_table(args.table_dir, args.grace_s, args.detector.resolve());
    if (args.as_json) {
      std::cout << table_to_json(report).dump(2) << '\n';
    } else {
      std::cout << format_table(report);
    }
    return 0;
  }
  if (args.trace_path.empty() || args.labels_path.empty()) {
    throw IoError("eval needs either --table or both --trace and --labels");
  }
  const DetectorConfig config = args.detector.resolve();
  const Trace trace = read_trace(args.trace_path);
  const std::vector<Episode> episodes = load_labels(args.labels_path);
  const EventLog log = run_detector_on_trace(trace, config);
  const EvalReport report = match_alarms(log, episodes, args.grace_s);
  if (args.as_json) {
    std::cout << report_to_json(report, trace.source_id).dump(2) << '\n';
  } else {
    std::cout << format_report(report, trace.source_id);
  }
  return 0;
}

struct PlotArgs {
  std::string trace_path;
  std::string out = "-";
  std::string svg_out;
  DetectorOptions detector;
};

int run_plot(const PlotArgs& args) {
  const DetectorConfig config = args.detector.resolve();
  const Trace trace = read_trace(args.trace_path);
  OutputSink sink = open_output(args.out);

  *sink.stream << "t,ear,eye_state,score,alarm_active,perclos\n";

  std::vector<double> times;
  std::vector<std::optional<double>> ears;
  std::vector<int> scores;
  std::vector<bool> alarms;

  Detector detector(config);
  for (const FrameObservation& obs : trace.frames) {
    detector.feed(obs);
    const DetectorState& state = detector.state();
    const std::optional<double> ear = observation_ear(obs, config);
    const EyeState effective = state.perclos_buffer.back();
    *sink.stream << format_double(obs.t) << ','
                 << (ear ? format_double(*ear) : std::string{}) << ','
                 << to_string(effective) << ',' << state.score << ','
                 << (state.alarm_active ? '1' : '0') << ','
                 << format_double(perclos(state)) << '\n';
    if (!args.svg_out.empty()) {
      times.push_back(obs.t);
      ears.push_back(ear);
      scores.push_back(state.score);
      alarms.push_back(state.alarm_active);
    }
  }
  sink.stream->flush();

  if (!args.svg_out.empty()) {
    std::ofstream svg(args.svg_out);
    if (!svg) throw IoError("cannot open svg output: " + args.svg_out);
    svg << tools::render_svg(times, ears, scores, alarms, config);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"earwatch: eye-aspect-ratio drowsiness detection engine"};
  app.require_subcommand(1);

  ReplayArgs replay_args;
  CLI::App* replay = app.add_subcommand(
      "replay", "stream a trace through the detector, emitting event lines");
  replay->add_option("--input,-i", replay_args.input,
                     "trace file, '-' for stdin, or tcp://host:port to listen");
  replay->add_option("--output,-o", replay_args.output,
                     "event sink file or '-' for stdout");
  replay->add_option("--on-alarm", replay_args.on_alarm,
                     "shell command run once per alarm activation");
  replay_args.detector.attach(replay);

  SimulateArgs simulate_args;
  CLI::App* simulate = app.add_subcommand(
      "simulate", "generate a labeled trace from a scenario script");
  simulate->add_option("--scenario,-s", simulate_args.scenario_path,
                       "scenario JSON file")->required();
  simulate->add_option("--out,-o", simulate_args.out,
                       "trace output file or '-' for stdout");
  simulate->add_option("--labels", simulate_args.labels_out,
                       "labels sidecar path (default <out>.labels.json)");

  EvalArgs eval_args;
  CLI::App* eval = app.add_subcommand(
      "eval", "score detector output against ground-truth episodes");
  eval->add_option("--trace,-t", eval_args.trace_path, "trace file");
  eval->add_option("--labels,-l", eval_args.labels_path, "labels sidecar file");
  eval->add_option("--table", eval_args.table_dir,
                   "run the bundled benchmark rows from this scenario directory");
  eval->add_option("--grace", eval_args.grace_s,
                   "detection window extension past episode end, seconds");
  eval->add_flag("--json", eval_args.as_json, "emit the report as JSON");
  eval_args.detector.attach(eval);

  PlotArgs plot_args;
  CLI::App* plot = app.add_subcommand(
      "plot", "dump per-frame detector state as CSV (and optionally SVG)");
  plot->add_option("--trace,-t", plot_args.trace_path, "trace file")->required();
  plot->add_option("--out,-o", plot_args.out, "CSV output file or '-'");
  plot->add_option("--svg", plot_args.svg_out, "also write an SVG chart here");
  plot_args.detector.attach(plot);

  CLI11_PARSE(app, argc, argv);

  try {
    if (replay->parsed()) return run_replay(replay_args);
    if (simulate->parsed()) return run_simulate(simulate_args);
    if (eval->parsed()) return run_eval(eval_args);
    if (plot->parsed()) return run_plot(plot_args);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  }
  return 0;
}
