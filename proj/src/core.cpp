#include "condmv/core.hpp"
#include "condmv/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace condmv {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_parameter: return "invalid-parameter";
    case ErrorCode::unsupported_dimension: return "unsupported-dimension";
    case ErrorCode::unknown_preset: return "unknown-preset";
    case ErrorCode::no_oracle_available: return "no-oracle-available";
    case ErrorCode::unsupported_law: return "unsupported-law";
    case ErrorCode::strategy_unsupported: return "strategy-unsupported";
    case ErrorCode::simulation_diverged: return "simulation-diverged";
    case ErrorCode::alphabet_mismatch: return "alphabet-mismatch";
    case ErrorCode::non_spd: return "non-spd";
    case ErrorCode::widen_domain: return "widen-domain";
    case ErrorCode::empty_ensemble: return "empty-ensemble";
    case ErrorCode::config: return "config";
    case ErrorCode::insufficient_data: return "insufficient-data";
    case ErrorCode::output_exists: return "output-exists";
    case ErrorCode::io: return "io";
  }
  return "unknown";
}

int default_workers() {
  if (const char* env = std::getenv("CONDMV_WORKERS")) {
    try {
      const int w = std::stoi(env);
      if (w > 0) return w;
    } catch (const std::exception&) {
    }
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for(std::size_t count, int workers,
                  const std::function<void(std::size_t, std::size_t)>& body) {
  if (count == 0) return;
  const std::size_t w = std::clamp<std::size_t>(workers <= 0 ? 1 : workers, 1, count);
  if (w == 1) {
    body(0, count);
    return;
  }
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errors(w);
  threads.reserve(w);
  for (std::size_t t = 0; t < w; ++t) {
    const std::size_t begin = count * t / w;
    const std::size_t end = count * (t + 1) / w;
    threads.emplace_back([&, t, begin, end] {
      try {
        body(begin, end);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : threads) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace condmv
