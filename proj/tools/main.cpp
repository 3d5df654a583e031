#include <cstdio>
#include <string>
#include <thread>

#include "CLI11.hpp"

#include "cboed/cboed.h"

int main(int argc, char** argv) {
  CLI::App app{"Consistent-Bayes expected information gain and experimental design studies"};
  std::string config;
  std::string output;
  unsigned threads = 0;
  bool quiet = false;
  app.add_option("--config", config, "Study config (JSON)")->required()->check(CLI::ExistingFile);
  app.add_option("--threads", threads, "Worker threads; 0 uses all cores")->default_val(0);
  app.add_option("--output", output, "Output directory, overriding the config");
  app.add_flag("--quiet", quiet, "Suppress progress messages");
  app.footer("Exit status: 0 success, 1 invalid config, 2 computation error.");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }
  return cboed_run_study(config.c_str(), output.empty() ? nullptr : output.c_str(), threads, quiet ? 1 : 0);
}
