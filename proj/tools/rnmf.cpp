#include <iostream>

#include "rnmf_cli.hpp"

int main(int argc, char** argv) {
  return rnmf::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
