// Writes the ten bundled benchmark scenario files into a directory so they
// can be regenerated after editing the row definitions.

#include <filesystem>
#include <iostream>

#include "earwatch/synth.hpp"

int main(int argc, char** argv) {
  const std::filesystem::path dir = argc > 1 ? argv[1] : "scenarios";
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  try {
    for (const std::string& name : earwatch::scenario_row_names()) {
      const earwatch::Scenario scenario = earwatch::scenario_from_table_row(name);
      earwatch::save_scenario(dir / (name + ".json"), scenario);
      std::cout << (dir / (name + ".json")).string() << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
