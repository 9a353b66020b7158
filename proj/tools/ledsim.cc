#include <iostream>

#include "ledsim/cli.h"

int main(int argc, char** argv) {
  return ledsim::cli::Main(argc, argv, std::cout, std::cerr);
}
