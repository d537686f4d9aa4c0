#pragma once

// Levy transform M = int sign(X) dX with the left-continuous sign
// (sign(0) = -1) and the Tanaka residual L = |X| - M.

#include "driftcam/grid_paths.hpp"

namespace driftcam {

/// +1 for x > 0, -1 otherwise (including 0, -0.0 and NaN).
constexpr int sign_of(double x) noexcept { return x > 0.0 ? 1 : -1; }

/// H[k] = sign(X[k]).
PathSample sign_integrand(const PathSample& X);

/// M[0] = 0, M[k+1] = M[k] + sign(X[k]) (X[k+1] - X[k]). Requires X[0] == 0.
PathSample levy_transform(const PathSample& X);

/// L[k] = |X[k]| - levy_transform(X)[k]. Requires X[0] == 0.
PathSample local_time_estimate(const PathSample& X);

}  // namespace driftcam
