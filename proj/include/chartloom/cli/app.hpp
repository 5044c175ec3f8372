#pragma once

#include <string>
#include <vector>

namespace chartloom::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 2,       // bad arguments, config, or input paths
  kExitGateway = 3,     // model call failed after retries
  kExitGeneration = 4,  // report generation failed
  kExitEvaluation = 5,  // judging or richness failed
};

int run_cli(int argc, char** argv);
// args[0] is the program name.
int run_cli(const std::vector<std::string>& args);

}  // namespace chartloom::cli
