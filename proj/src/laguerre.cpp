#include "pacs/laguerre.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace pacs {

namespace {

void check_arguments(unsigned m, double x) {
  if (m > kMaxLaguerreOrder) {
    throw std::out_of_range("laguerre: order " + std::to_string(m) + " exceeds " +
                            std::to_string(kMaxLaguerreOrder));
  }
  if (!std::isfinite(x)) {
    throw std::invalid_argument("laguerre: argument must be finite");
  }
}

}  // namespace

double laguerre_series(unsigned m, double x) {
  check_arguments(m, x);
  // term_n = (-x)^n C(m, n) / n!, built up from term_0 = 1
  double term = 1.0;
  double sum = 1.0;
  for (unsigned n = 1; n <= m; ++n) {
    term *= -x * static_cast<double>(m - n + 1) / (static_cast<double>(n) * static_cast<double>(n));
    sum += term;
  }
  return sum;
}

double laguerre_recurrence(unsigned m, double x) {
  check_arguments(m, x);
  if (m == 0) return 1.0;
  double prev = 1.0;
  double curr = 1.0 - x;
  for (unsigned k = 1; k < m; ++k) {
    const double next = ((2.0 * k + 1.0 - x) * curr - k * prev) / (k + 1.0);
    prev = curr;
    curr = next;
  }
  return curr;
}

double laguerre(unsigned m, double x) {
  return m <= kLaguerreSeriesCutoff ? laguerre_series(m, x) : laguerre_recurrence(m, x);
}

}  // namespace pacs
