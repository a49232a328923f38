#include <iostream>
#include <string>
#include <vector>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "cli.hpp"

int main(int argc, char** argv) {
  // Logs go to stderr so stdout carries only command output.
  spdlog::set_default_logger(spdlog::stderr_color_mt("genearl"));
  std::vector<std::string> args(argv + 1, argv + argc);
  return genearl::cli::run(args, std::cout, std::cerr);
}
