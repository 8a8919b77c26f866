#include "mmf/common.hpp"

#include <charconv>
#include <cstdlib>
#include <thread>

namespace mmf {

std::string format_double(double value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

int worker_count() {
  int requested = 0;
  if (const char* env = std::getenv("MMF_THREADS")) {
    requested = std::atoi(env);
    if (requested < 0) requested = 0;
  }
  if (requested == 0) {
    unsigned hw = std::thread::hardware_concurrency();
    requested = hw == 0 ? 1 : static_cast<int>(hw);
  }
  return requested < 1 ? 1 : requested;
}

}  // namespace mmf
