// Regenerates tests/fixtures/synthetic:
//   ./build/tests/sfadapt_make_synthetic tests/fixtures/synthetic
#include <iostream>

#include "fixtures.hpp"

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: " << argv[0] << " <output dir>\n";
    return 1;
  }
  fixtures::write_synthetic_set(argv[1]);
  return 0;
}
