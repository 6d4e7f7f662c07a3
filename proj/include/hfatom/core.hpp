#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace hfatom {

// Error taxonomy shared by every module.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InvalidInput : Error {
  using Error::Error;
};
struct DomainError : Error {
  using Error::Error;
};
struct ResolutionError : Error {
  using Error::Error;
};
struct OverflowError : Error {
  using Error::Error;
};
// Carries the iterate/bracket history of the solver that gave up.
struct SolverFailure : Error {
  SolverFailure(const std::string &what, std::vector<double> hist = {})
      : Error(what), history(std::move(hist)) {}
  std::vector<double> history;
};

// Every numerical knob in one place.
struct NumericsSettings {
  // grid: r_i = r_min * exp(i h), i = 0..n-1
  double r_min = 1e-6;
  double r_max = 60.0;
  std::size_t n = 4000;

  double shoot_tol = 1e-12;        // bisection on the TF initial slope
  double eigen_tol = 1e-10;        // node-count bisection on eigenvalues
  double density_neg_tol = 1e-12;  // relative slack for "nonnegative" densities
  double smear_points_per_width = 4.0;
  double smear_relevance = 1e-9;   // |f| r^3 below this fraction of its max is not resolved
  double box_sensitivity = 5.0;    // |eps| < box_sensitivity / r_max^2 is flagged
  double tail_cutoff = 1e-12;      // relative size below which tails are ignored

  // Defaults for an atom with nuclear charge Z and N electrons.
  static NumericsSettings for_atom(double Z, double N) {
    NumericsSettings s;
    s.r_min = 1e-6 / Z;
    s.r_max = std::max(60.0, 12.0 * std::cbrt(std::max(N, 0.0)));
    return s;
  }
};

inline constexpr double pi = std::numbers::pi;

inline bool all_finite(const std::vector<double> &v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

inline double pos(double x) { return x > 0.0 ? x : 0.0; }

// Worker count: HFATOM_THREADS if set and positive, else the hardware concurrency.
inline unsigned worker_count() {
  if (const char *e = std::getenv("HFATOM_THREADS")) {
    const int v = std::atoi(e);
    if (v > 0) return unsigned(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

// Runs f(i) for i in [0, n) on up to `threads` workers. Each index is visited once;
// results must be written to per-index slots so the outcome is order independent.
// The first exception is rethrown after all workers stop.
template <class F> void parallel_for(std::size_t n, F &&f, unsigned threads = worker_count()) {
  threads = std::max(1u, std::min<unsigned>(threads, unsigned(std::max<std::size_t>(n, 1))));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto work = [&] {
    for (std::size_t i; !failed && (i = next++) < n;) {
      try {
        f(i);
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(work);
  work();
  for (auto &t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

} // namespace hfatom
