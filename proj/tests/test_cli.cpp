// End-to-end tests spawning the earwatch binary. Golden files live in
// tests/data/golden and were produced by the commands noted on each test;
// regenerate them with the same commands after an intentional format change.

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <gtest/gtest.h>

namespace {

namespace fs = std::filesystem;

std::string env_or_die(const char* name) {
  const char* value = std::getenv(name);
  EXPECT_NE(value, nullptr) << "missing env var " << name;
  return value ? value : "";
}

std::string binary() { return env_or_die("EARWATCH_BIN"); }
fs::path data_dir() { return env_or_die("EARWATCH_DATA"); }
fs::path scenario_dir() { return env_or_die("EARWATCH_SCENARIOS"); }

fs::path make_temp_dir() {
  static int counter = 0;
  const fs::path dir = fs::temp_directory_path() /
                       ("earwatch_cli_" + std::to_string(::getpid()) + "_" +
                        std::to_string(counter++));
  fs::create_directories(dir);
  return dir;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  EXPECT_TRUE(in.good()) << "cannot read " << path;
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

struct CommandResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

CommandResult run_cli(const std::string& args) {
  const fs::path dir = make_temp_dir();
  const fs::path out_path = dir / "stdout";
  const fs::path err_path = dir / "stderr";
  const std::string command = binary() + " " + args + " >" + out_path.string() +
                              " 2>" + err_path.string();
  const int status = std::system(command.c_str());
  CommandResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  result.out = read_file(out_path);
  result.err = read_file(err_path);
  return result;
}

int count_lines_containing(const std::string& text, const std::string& needle) {
  int count = 0;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.find(needle) != std::string::npos) ++count;
  }
  return count;
}

// golden: earwatch replay -i fixture_mixed.jsonl -o golden/fixture_mixed.events.jsonl
TEST(Replay, GoldenEventLog) {
  const fs::path events = make_temp_dir() / "events.jsonl";
  const CommandResult result = run_cli(
      "replay -i " + (data_dir() / "fixture_mixed.jsonl").string() + " -o " +
      events.string());
  EXPECT_EQ(result.exit_code, 0);
  const std::string golden = read_file(data_dir() / "golden/fixture_mixed.events.jsonl");
  EXPECT_EQ(read_file(events), golden);

  // byte-identical on a second run
  const fs::path events2 = make_temp_dir() / "events.jsonl";
  run_cli("replay -i " + (data_dir() / "fixture_mixed.jsonl").string() + " -o " +
          events2.string());
  EXPECT_EQ(read_file(events2), golden);
}

TEST(Replay, AllOpenTraceProducesNoEvents) {
  const CommandResult result =
      run_cli("replay -i " + (data_dir() / "fixture_open.jsonl").string() + " -o -");
  EXPECT_EQ(result.exit_code, 0);
  EXPECT_TRUE(result.out.empty());
}

TEST(Replay, CsvInputWorks) {
  const CommandResult result =
      run_cli("replay -i " + (data_dir() / "fixture_eyes.csv").string() + " -o -");
  EXPECT_EQ(result.exit_code, 0);
  EXPECT_EQ(count_lines_containing(result.out, "alarm_on"), 1);
  EXPECT_NE(result.out.find("\"t\":1.0"), std::string::npos);
}

TEST(Replay, MalformedLineExitsOneAfterPartialOutput) {
  const CommandResult result =
      run_cli("replay -i " + (data_dir() / "fixture_badline.jsonl").string() + " -o -");
  EXPECT_EQ(result.exit_code, 1);
  EXPECT_EQ(count_lines_containing(result.out, "alarm_on"), 1);  // partial output
  EXPECT_NE(result.err.find("line 13"), std::string::npos);
}

TEST(Replay, SchemaViolationExitsTwo) {
  const CommandResult result = run_cli(
      "replay -i " + (data_dir() / "fixture_schema_bad.jsonl").string() + " -o -");
  EXPECT_EQ(result.exit_code, 2);
  EXPECT_NE(result.err.find("typo"), std::string::npos);
}

TEST(Replay, NonMonotonicTimestampExitsThree) {
  const CommandResult result =
      run_cli("replay -i " + (data_dir() / "fixture_nonmono.jsonl").string() + " -o -");
  EXPECT_EQ(result.exit_code, 3);
}

TEST(Replay, MissingInputExitsFour) {
  const CommandResult result = run_cli("replay -i /nonexistent/trace.jsonl -o -");
  EXPECT_EQ(result.exit_code, 4);
}

TEST(Replay, AlarmHookRunsOncePerActivation) {
  const fs::path marker = make_temp_dir() / "hook.log";
  const CommandResult result = run_cli(
      "replay -i " + (data_dir() / "fixture_closed25.jsonl").string() +
      " -o - --on-alarm 'echo fired >> " + marker.string() + "'");
  EXPECT_EQ(result.exit_code, 0);
  EXPECT_EQ(count_lines_containing(read_file(marker), "fired"), 1);
}

TEST(Replay, FailingAlarmHookDoesNotAbortProcessing) {
  const CommandResult result = run_cli(
      "replay -i " + (data_dir() / "fixture_closed25.jsonl").string() +
      " -o - --on-alarm /nonexistent_hook_binary_xyz");
  EXPECT_EQ(result.exit_code, 0);
  EXPECT_EQ(count_lines_containing(result.out, "alarm_on"), 1);
  EXPECT_NE(result.err.find("alarm hook"), std::string::npos);
}

TEST(Replay, FlagsOverrideConfigFile) {
  const fs::path dir = make_temp_dir();
  const fs::path config = dir / "config.json";
  std::ofstream(config) << R"({"ear_threshold":0.3})";

  // File alone: 0.24 counts as closed, alarm fires.
  const CommandResult file_only = run_cli(
      "replay -i " + (data_dir() / "fixture_open.jsonl").string() +
      " -o - --config " + config.string());
  EXPECT_EQ(file_only.exit_code, 0);
  EXPECT_EQ(count_lines_containing(file_only.out, "alarm_on"), 1);

  // Flag wins over file: threshold back to 0.2, trace is all open.
  const CommandResult with_flag = run_cli(
      "replay -i " + (data_dir() / "fixture_open.jsonl").string() +
      " -o - --config " + config.string() + " --ear-threshold 0.2");
  EXPECT_EQ(with_flag.exit_code, 0);
  EXPECT_TRUE(with_flag.out.empty());
}

TEST(Replay, BadConfigFileExitsTwo) {
  const fs::path config = make_temp_dir() / "config.json";
  std::ofstream(config) << R"({"ear_treshold":0.3})";  // typo field
  const CommandResult result = run_cli(
      "replay -i " + (data_dir() / "fixture_open.jsonl").string() + " -o - --config " +
      config.string());
  EXPECT_EQ(result.exit_code, 2);
}

TEST(Replay, TcpListenerAcceptsOneStream) {
  const int port = 42000 + static_cast<int>(::getpid() % 10000);
  const fs::path events = make_temp_dir() / "events.jsonl";
  const std::string url = "tcp://127.0.0.1:" + std::to_string(port);

  const pid_t pid = ::fork();
  ASSERT_GE(pid, 0);
  if (pid == 0) {
    const int devnull = ::open("/dev/null", O_WRONLY);
    ::dup2(devnull, 2);
    ::execl(binary().c_str(), "earwatch", "replay", "--input", url.c_str(),
            "--output", events.string().c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }

  int fd = -1;
  for (int attempt = 0; attempt < 200; ++attempt) {
    fd = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<uint16_t>(port));
    ::inet_pton(AF_INET, "127.0.0.1", &addr.sin_addr);
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) == 0) break;
    ::close(fd);
    fd = -1;
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  ASSERT_GE(fd, 0) << "could not connect to replay listener";

  std::string payload;
  for (int i = 0; i < 12; ++i) {
    payload += "{\"t\":" + std::to_string(i * 0.1) + ",\"face\":true,\"ear\":0.15}\n";
  }
  ASSERT_EQ(::write(fd, payload.data(), payload.size()),
            static_cast<ssize_t>(payload.size()));
  ::close(fd);

  int status = 0;
  ASSERT_EQ(::waitpid(pid, &status, 0), pid);
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), 0);
  EXPECT_EQ(count_lines_containing(read_file(events), "alarm_on"), 1);
}

TEST(Simulate, DeterministicOutputsAndSidecarLabels) {
  const fs::path dir = make_temp_dir();
  const fs::path trace1 = dir / "one.jsonl";
  const fs::path trace2 = dir / "two.jsonl";
  const std::string scenario = (scenario_dir() / "row01-a-bright-normal.json").string();

  EXPECT_EQ(run_cli("simulate -s " + scenario + " -o " + trace1.string()).exit_code, 0);
  EXPECT_EQ(run_cli("simulate -s " + scenario + " -o " + trace2.string()).exit_code, 0);

  const std::string first = read_file(trace1);
  EXPECT_EQ(first, read_file(trace2));
  EXPECT_EQ(count_lines_containing(first, "\"t\":"), 1800);  // 60 s x 30 fps
  EXPECT_EQ(read_file(trace1.string() + ".labels.json"),
            read_file(trace2.string() + ".labels.json"));
}

TEST(Simulate, MissingScenarioExitsFour) {
  EXPECT_EQ(run_cli("simulate -s /nonexistent/scenario.json -o -").exit_code, 4);
}

TEST(Simulate, InvalidScriptExitsFive) {
  const CommandResult result = run_cli(
      "simulate -s " + (data_dir() / "fixture_bad.scenario.json").string() + " -o -");
  EXPECT_EQ(result.exit_code, 5);
}

// golden: earwatch eval -t fixture_mixed.jsonl -l fixture_mixed.labels.json
TEST(Eval, GoldenReport) {
  const CommandResult result = run_cli(
      "eval -t " + (data_dir() / "fixture_mixed.jsonl").string() + " -l " +
      (data_dir() / "fixture_mixed.labels.json").string());
  EXPECT_EQ(result.exit_code, 0);
  EXPECT_EQ(result.out, read_file(data_dir() / "golden/fixture_mixed.eval.txt"));
}

// golden: earwatch eval --table scenarios
TEST(Eval, GoldenBenchmarkTable) {
  const CommandResult result = run_cli("eval --table " + scenario_dir().string());
  EXPECT_EQ(result.exit_code, 0);
  EXPECT_EQ(result.out, read_file(data_dir() / "golden/table.eval.txt"));
}

TEST(Eval, JsonReportParses) {
  const CommandResult result = run_cli(
      "eval --json -t " + (data_dir() / "fixture_mixed.jsonl").string() + " -l " +
      (data_dir() / "fixture_mixed.labels.json").string());
  EXPECT_EQ(result.exit_code, 0);
  EXPECT_NE(result.out.find("\"detected_count\": 1"), std::string::npos);
  EXPECT_NE(result.out.find("\"false_alarm_count\": 1"), std::string::npos);
}

// golden: earwatch plot -t fixture_closed25.jsonl -o golden/fixture_closed25.plot.csv
TEST(Plot, GoldenCsvScoreRampAndAlarmFlip) {
  const fs::path csv = make_temp_dir() / "plot.csv";
  const CommandResult result = run_cli(
      "plot -t " + (data_dir() / "fixture_closed25.jsonl").string() + " -o " +
      csv.string());
  EXPECT_EQ(result.exit_code, 0);
  const std::string content = read_file(csv);
  EXPECT_EQ(content, read_file(data_dir() / "golden/fixture_closed25.plot.csv"));

  // score column counts 1..25 and the alarm column flips at data row 11
  std::istringstream in(content);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "t,ear,eye_state,score,alarm_active,perclos");
  int row = 0;
  while (std::getline(in, line)) {
    ++row;
    std::vector<std::string> fields;
    std::istringstream fields_in(line);
    std::string field;
    while (std::getline(fields_in, field, ',')) fields.push_back(field);
    ASSERT_EQ(fields.size(), 6u);
    EXPECT_EQ(fields[3], std::to_string(row));
    EXPECT_EQ(fields[4], row >= 11 ? "1" : "0");
  }
  EXPECT_EQ(row, 25);
}

TEST(Plot, EmptyTraceYieldsHeaderOnlyCsv) {
  const fs::path dir = make_temp_dir();
  const fs::path empty = dir / "empty.jsonl";
  std::ofstream(empty).close();
  const CommandResult result =
      run_cli("plot -t " + empty.string() + " -o -");
  EXPECT_EQ(result.exit_code, 0);
  EXPECT_EQ(result.out, "t,ear,eye_state,score,alarm_active,perclos\n");
}

TEST(Plot, SvgIsDeterministicAndWellFormed) {
  const fs::path dir = make_temp_dir();
  const fs::path svg1 = dir / "one.svg";
  const fs::path svg2 = dir / "two.svg";
  const std::string base = "plot -t " + (data_dir() / "fixture_mixed.jsonl").string();
  EXPECT_EQ(run_cli(base + " -o - --svg " + svg1.string()).exit_code, 0);
  EXPECT_EQ(run_cli(base + " -o - --svg " + svg2.string()).exit_code, 0);
  const std::string content = read_file(svg1);
  EXPECT_EQ(content, read_file(svg2));
  EXPECT_EQ(content.rfind("<svg", 0), 0u);
  EXPECT_NE(content.find("</svg>"), std::string::npos);
}

}  // namespace
