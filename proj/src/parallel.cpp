#include "vsgraph/parallel.hpp"

#include <cstdlib>
#include <string>

namespace vsgraph {

int thread_count() {
  static const int count = [] {
    if (const char* env = std::getenv("VSGRAPH_THREADS")) {
      try {
        const int n = std::stoi(env);
        if (n >= 1) return std::min(n, 256);
      } catch (...) {
        // fall through to the default
      }
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
  }();
  return count;
}

}  // namespace vsgraph
