#pragma once

namespace pacs {

/// Highest order accepted by the Laguerre evaluators; m! overflows a double above this.
inline constexpr unsigned kMaxLaguerreOrder = 170;

/// Orders up to this value are evaluated from the defining series, above it by recurrence.
inline constexpr unsigned kLaguerreSeriesCutoff = 12;

/// L_m(x) from the explicit sum over (-1)^n x^n m! / ((n!)^2 (m-n)!).
double laguerre_series(unsigned m, double x);

/// L_m(x) from L_{k+1} = ((2k+1-x) L_k - k L_{k-1}) / (k+1).
double laguerre_recurrence(unsigned m, double x);

/// Laguerre polynomial of order m. Throws std::out_of_range when m exceeds
/// kMaxLaguerreOrder and std::invalid_argument for non-finite x.
double laguerre(unsigned m, double x);

}  // namespace pacs
