#include "unitor/randomness.hpp"

#include <cmath>
#include <stdexcept>

namespace unitor::edon80 {

SmokeReport nist_smoke(const BitString& bits) {
  const std::size_t n = bits.size();
  if (n < kMinSmokeBits) throw std::invalid_argument("at least 100 bits are required");
  const double nd = static_cast<double>(n);
  const double ones = static_cast<double>(bits.count_ones());

  SmokeReport r;
  const double s_obs = std::fabs(2.0 * ones - nd) / std::sqrt(nd);
  r.monobit_p = std::erfc(s_obs / std::sqrt(2.0));

  // Runs test is not applicable when the frequency pre-test fails; P = 0.
  const double pi = ones / nd;
  if (std::fabs(pi - 0.5) >= 2.0 / std::sqrt(nd)) {
    r.runs_p = 0.0;
    return r;
  }
  std::size_t runs = 1;
  for (std::size_t i = 1; i < n; ++i)
    if (bits[i] != bits[i - 1]) ++runs;
  const double spread = 2.0 * nd * pi * (1.0 - pi);
  r.runs_p = std::erfc(std::fabs(static_cast<double>(runs) - spread) /
                       (2.0 * std::sqrt(2.0 * nd) * pi * (1.0 - pi)));
  return r;
}

}  // namespace unitor::edon80
