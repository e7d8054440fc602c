#include <iostream>

#include "figrelabel/cli.hpp"

int main(int argc, char **argv) {
  return figrelabel::run_cli(argc, argv, std::cout, std::cerr);
}
