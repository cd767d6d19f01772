#include <iostream>
#include <string>
#include <vector>

#include "atla/cli_io/cli.h"

int main(int argc, char** argv) {
  return atla::cli_io::RunCli(std::vector<std::string>(argv, argv + argc), std::cout,
                              std::cerr);
}
