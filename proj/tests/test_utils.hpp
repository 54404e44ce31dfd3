#pragma once

#include <cmath>
#include <cstdlib>
#include <iostream>
#include <string>

// Always-on checks; never compiled out in Release.
#define REQUIRE(cond, msg)                                                      \
  do {                                                                          \
    if (!(cond)) {                                                              \
      std::cerr << "[FAIL] " << __FILE__ << ":" << __LINE__ << " " << msg      \
                << "\n";                                                        \
      std::exit(1);                                                             \
    }                                                                           \
  } while (0)

#define REQUIRE_THROWS(expr, msg)                                               \
  do {                                                                          \
    bool threw_ = false;                                                        \
    try {                                                                       \
      (void)(expr);                                                             \
    } catch (const std::exception&) {                                           \
      threw_ = true;                                                            \
    }                                                                           \
    REQUIRE(threw_, msg);                                                       \
  } while (0)

inline void require_close(double a, double b, double tol, const std::string& what) {
  if (!(std::isfinite(a) && std::isfinite(b)) || std::abs(a - b) > tol) {
    std::cerr << "[FAIL] " << what << ": " << a << " vs " << b
              << " (|diff|=" << std::abs(a - b) << ", tol=" << tol << ")\n";
    std::exit(1);
  }
}

inline void require_rel(double a, double b, double rtol, const std::string& what) {
  const double denom = std::max({std::abs(a), std::abs(b), 1e-300});
  if (!(std::isfinite(a) && std::isfinite(b)) || std::abs(a - b) / denom > rtol) {
    std::cerr << "[FAIL] " << what << ": " << a << " vs " << b
              << " (rel=" << std::abs(a - b) / denom << ", rtol=" << rtol << ")\n";
    std::exit(1);
  }
}

inline void pass(const std::string& name) { std::cout << "[PASS] " << name << "\n"; }
