#include "driftcam/levy_transform.hpp"

#include <cmath>
#include <stdexcept>

namespace driftcam {

namespace {

void require_origin(const PathSample& X, const char* what) {
    if (X[0] != 0.0) {
        throw std::invalid_argument(std::string(what) + ": path must start at 0");
    }
}

}  // namespace

PathSample sign_integrand(const PathSample& X) {
    std::vector<double> h(X.size());
    for (std::size_t k = 0; k < h.size(); ++k) h[k] = sign_of(X[k]);
    return PathSample(X.grid(), std::move(h));
}

PathSample levy_transform(const PathSample& X) {
    require_origin(X, "levy_transform");
    return ito_sum_left(sign_integrand(X), X);
}

PathSample local_time_estimate(const PathSample& X) {
    require_origin(X, "local_time_estimate");
    const PathSample M = levy_transform(X);
    std::vector<double> L(X.size());
    for (std::size_t k = 0; k < L.size(); ++k) L[k] = std::abs(X[k]) - M[k];
    return PathSample(X.grid(), std::move(L));
}

}  // namespace driftcam
