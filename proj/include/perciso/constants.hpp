#pragma once

namespace perciso {

// Universal floor |gamma| >= c0 * sqrt(vol(gamma)) over all lattice circuits.
// Fixed by exhaustive scan over circuits with vol <= 30 (the unit square is
// the extremal case; every circuit with perimeter >= 18 clears 18/sqrt(30)).
// The scan is re-run by the geometry test suite.
inline constexpr double kIsoC0 = 2.0;

inline constexpr double kTwoSqrtTwo = 2.8284271247461903;

}  // namespace perciso
