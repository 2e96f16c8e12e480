#include "robustalloc/cli.hpp"

int main(int argc, char** argv) {
  return robustalloc::cli_main(argc, argv);
}
