#pragma once

// Two statistical smoke tests from NIST SP 800-22: frequency (monobit)
// and runs.

#include <cstddef>

#include "unitor/edon80.hpp"

namespace unitor::edon80 {

inline constexpr std::size_t kMinSmokeBits = 100;
inline constexpr double kSmokeAlpha = 0.01;

struct SmokeReport {
  double monobit_p = 0.0;
  double runs_p = 0.0;

  bool monobit_passed(double alpha = kSmokeAlpha) const { return monobit_p >= alpha; }
  bool runs_passed(double alpha = kSmokeAlpha) const { return runs_p >= alpha; }
  bool passed(double alpha = kSmokeAlpha) const { return monobit_passed(alpha) && runs_passed(alpha); }
};

/// Throws std::invalid_argument for fewer than 100 bits.
SmokeReport nist_smoke(const BitString& bits);

}  // namespace unitor::edon80
