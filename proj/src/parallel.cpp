#include "koopman/parallel.hpp"

#include <omp.h>

#include <cstdlib>
#include <string>

namespace koopman {

int configure_threads_from_env() {
  if (const char* env = std::getenv("KOOPMAN_THREADS")) {
    try {
      const int cap = std::stoi(env);
      if (cap > 0) omp_set_num_threads(cap);
    } catch (const std::exception&) {
      // unparsable value: keep the OpenMP default
    }
  }
  return omp_get_max_threads();
}

int max_threads() { return omp_get_max_threads(); }

}  // namespace koopman
