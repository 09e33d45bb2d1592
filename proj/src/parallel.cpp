#include "sfadapt/parallel.hpp"

#include <omp.h>

namespace sfa {

int max_threads() { return omp_get_max_threads(); }

void set_threads(int n) {
  if (n >= 1) omp_set_num_threads(n);
}

}  // namespace sfa
