#include "driftcam/ensembles.hpp"

#include "driftcam/parallel.hpp"

namespace driftcam {

std::vector<PathSample> brownian_paths(const TimeGrid& grid, std::size_t n_paths,
                                       std::uint64_t seed, unsigned jobs) {
    std::vector<PathSample> out(n_paths, PathSample::constant(grid, 0.0));
    parallel_for(n_paths, jobs, [&](std::size_t i) {
        SeededRng rng(seed, i);
        out[i] = sample_brownian(grid, rng);
    });
    return out;
}

std::vector<HiddenDriftPath> hidden_paths(double mu, const TimeGrid& grid, std::size_t n_paths,
                                          std::uint64_t seed, unsigned jobs,
                                          std::optional<int> epsilon) {
    std::vector<std::optional<HiddenDriftPath>> slots(n_paths);
    parallel_for(n_paths, jobs, [&](std::size_t i) {
        SeededRng rng(seed, i);
        const DriftScenario scenario =
            epsilon ? DriftScenario(mu, *epsilon) : DriftScenario::sample(mu, rng);
        slots[i] = simulate_hidden_path(scenario, grid, rng);
    });
    std::vector<HiddenDriftPath> out;
    out.reserve(n_paths);
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

std::vector<Concatenation> concat_paths(const ConcatConfig& config, std::size_t n_paths,
                                        unsigned jobs) {
    config.validate();
    std::vector<std::optional<Concatenation>> slots(n_paths);
    parallel_for(n_paths, jobs, [&](std::size_t i) {
        SeededRng rng(config.seed, i);
        slots[i] = build_concatenation(config, rng);
    });
    std::vector<Concatenation> out;
    out.reserve(n_paths);
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

std::vector<PathSample> drifted_paths(double mu, const TimeGrid& grid, std::size_t n_paths,
                                      std::uint64_t seed, unsigned jobs) {
    auto paths = brownian_paths(grid, n_paths, seed, jobs);
    const auto drift = riemann_left(PathSample::constant(grid, mu));
    for (auto& p : paths) p = p + drift;
    return paths;
}

std::uint64_t run_seed(std::uint64_t master, std::uint64_t run) noexcept {
    return splitmix64(master ^ splitmix64(run + 0x632be59bd9b4e019ULL));
}

}  // namespace driftcam
