#include "chartloom/cli/app.hpp"

int main(int argc, char** argv) { return chartloom::cli::run_cli(argc, argv); }
