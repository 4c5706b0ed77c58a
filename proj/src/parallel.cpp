#include "conjpt/parallel.hpp"

#include <omp.h>

namespace conjpt {

namespace {
int default_threads = 0;
}

void set_thread_count(int n) {
  if (default_threads == 0) default_threads = omp_get_max_threads();
  omp_set_num_threads(n > 0 ? n : default_threads);
}

int thread_count() { return omp_get_max_threads(); }

}  // namespace conjpt
