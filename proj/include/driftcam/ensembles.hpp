#pragma once

// Seeded ensembles: path i always draws from stream i of the master seed.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "driftcam/concat_scheme.hpp"
#include "driftcam/filter_drift.hpp"
#include "driftcam/grid_paths.hpp"

namespace driftcam {

std::vector<PathSample> brownian_paths(const TimeGrid& grid, std::size_t n_paths,
                                       std::uint64_t seed, unsigned jobs = 1);

/// Each path draws epsilon (unless pinned) and then B from its own stream.
std::vector<HiddenDriftPath> hidden_paths(double mu, const TimeGrid& grid, std::size_t n_paths,
                                          std::uint64_t seed, unsigned jobs = 1,
                                          std::optional<int> epsilon = std::nullopt);

std::vector<Concatenation> concat_paths(const ConcatConfig& config, std::size_t n_paths,
                                        unsigned jobs = 1);

/// S = mu t + B on each Brownian path.
std::vector<PathSample> drifted_paths(double mu, const TimeGrid& grid, std::size_t n_paths,
                                      std::uint64_t seed, unsigned jobs = 1);

/// Seed of run r in a repeated study, derived from the master seed.
std::uint64_t run_seed(std::uint64_t master, std::uint64_t run) noexcept;

}  // namespace driftcam
