#pragma once

// Discrete-time scrambling of a biased independent sign sequence (eps_n)_{n<=0}
// into a fair i.i.d. sequence h_n eps_n, where each h_n is read off a private
// block I_n of strictly earlier signs. All probabilities are exact rationals.

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>
#include <json.hpp>

#include "driftcam/grid_paths.hpp"

namespace driftcam {

using Rational = boost::multiprecision::cpp_rational;

/// Accepts "a/b", integers and plain decimals ("0.7" is 7/10 exactly).
Rational parse_rational(std::string_view text);
std::string to_string(const Rational& r);

/// P[eps_n = +1] for n = 0, -1, -2, ...
class BiasedBitLaw {
public:
    enum class Kind { Constant, Periodic, Table, Geometric };

    static BiasedBitLaw constant(Rational p);
    /// p_n = values[|n| mod size].
    static BiasedBitLaw periodic(std::vector<Rational> values);
    /// p_n = values[|n|]; indices past the table are an error.
    static BiasedBitLaw table(std::vector<Rational> values);
    /// p_n = scale * ratio^|n|.
    static BiasedBitLaw geometric(Rational scale, Rational ratio);

    static BiasedBitLaw from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;

    Kind kind() const noexcept { return kind_; }
    /// Throws invalid_argument for n > 0, past-the-table n, or p_n outside (0, 1).
    Rational p(std::int64_t n) const;

private:
    BiasedBitLaw(Kind kind, std::vector<Rational> values);

    Kind kind_;
    std::vector<Rational> values_;
};

struct DiffuseReport {
    std::int64_t horizon = 0;
    Rational partial_sum;            // sum_{n=-horizon}^{0} min(p_n, 1 - p_n)
    std::vector<Rational> terms;     // terms[k] belongs to n = -k
    Rational tail_sum;               // terms with |n| > horizon / 2
    double tail_threshold = 0.0;
    bool flagged_non_diffuse = false;
};

DiffuseReport check_diffuse(const BiasedBitLaw& law, std::int64_t horizon,
                            double tail_threshold = 1e-3);

/// Pairwise disjoint blocks I_n for n = 0, -1, ..., -(window - 1), each
/// strictly decreasing with all members below n, plus the levels
/// I^(0) = I_0, I^(l+1) = union of I_n over n in I^(l) and the residual J.
class IndexFamily {
public:
    IndexFamily(std::size_t window, std::size_t bits_per_set, std::size_t depth,
                std::vector<std::vector<std::int64_t>> sets);

    std::size_t window() const noexcept { return sets_.size(); }
    std::size_t bits_per_set() const noexcept { return bits_per_set_; }
    std::size_t depth() const noexcept { return depth_; }
    /// I_n, for n in the window.
    const std::vector<std::int64_t>& set(std::int64_t n) const;
    /// Deepest (most negative) index in any block.
    std::int64_t horizon() const noexcept { return horizon_; }
    /// levels()[l] = I^(l), sorted decreasing, for l = 0..depth.
    const std::vector<std::vector<std::int64_t>>& levels() const noexcept { return levels_; }
    /// {horizon, ..., -1} minus every level, sorted decreasing.
    const std::vector<std::int64_t>& residual() const noexcept { return residual_; }

    nlohmann::json to_json() const;

private:
    std::size_t bits_per_set_;
    std::size_t depth_;
    std::vector<std::vector<std::int64_t>> sets_;
    std::vector<std::vector<std::int64_t>> levels_;
    std::vector<std::int64_t> residual_;
    std::int64_t horizon_ = 0;
};

/// Greedy round-robin assignment: in round r every unfinished n with |n| < r
/// takes the largest free index below n and below its current members.
IndexFamily build_index_family(std::size_t n_window, std::size_t bits_per_set,
                               std::size_t depth = 4);

struct FamilyCheck {
    bool disjoint = true;
    bool below_owner = true;     // i < n for every i in I_n
    bool levels_bounded = true;  // I^(l) within {..., -l-2, -l-1}
    bool levels_disjoint = true;
    bool residual_closed = true; // m in J implies I_m within J
    std::vector<std::string> failures;

    bool pass() const noexcept {
        return disjoint && below_owner && levels_bounded && levels_disjoint && residual_closed;
    }
};

FamilyCheck check_family(const IndexFamily& family);

enum class Decision { Plus, Minus, Undecided };

std::string_view to_string(Decision d) noexcept;
/// +1, -1 or 0.
int to_int(Decision d) noexcept;

struct ExtractorState {
    Rational low;
    Rational high;
    std::size_t bits_consumed = 0;
    Decision decision = Decision::Undecided;
};

/// Interval splitting: +1 keeps the left p_i share of the current interval,
/// -1 the right share; decides once the interval sits inside [0, 1/2) (+1)
/// or [1/2, 1) (-1).
ExtractorState extract_fair_bit(std::span<const int> bits, std::span<const Rational> probs);

/// Von Neumann pairing: a bit waits for a later bit with the same p; an
/// unequal pair decides (first bit's value), an equal pair is discarded.
/// Bits with p = 1/2 decide on their own.
struct Extraction {
    Decision decision = Decision::Undecided;
    std::size_t bits_consumed = 0;
};

Extraction extract_balanced_bit(std::span<const int> bits, std::span<const Rational> probs);

enum class ExtractorKind { Balanced, Interval };

std::string_view to_string(ExtractorKind kind) noexcept;
ExtractorKind extractor_from_string(std::string_view name);
Extraction extract(ExtractorKind kind, std::span<const int> bits, std::span<const Rational> probs);

/// Width bound prod max(p_i, 1 - p_i) on the interval extractor's undecided mass.
Rational undecided_bound(std::span<const Rational> probs);

using BitAssignment = std::map<std::int64_t, int>;

struct ScrambledEntry {
    std::int64_t n;
    int eps;
    Decision h;
    int product;  // h * eps, 0 when undecided
    std::size_t bits_consumed;
    bool decided;
};

struct ScrambledRecord {
    std::vector<ScrambledEntry> entries;  // n = 0, -1, ...
};

/// Indices {n} and I_n for the first `window` n of the family.
std::vector<std::int64_t> referenced_indices(const IndexFamily& family, std::size_t window);

ScrambledRecord scramble(const BiasedBitLaw& law, const IndexFamily& family,
                         const BitAssignment& eps, std::size_t window,
                         ExtractorKind kind = ExtractorKind::Balanced);
/// Draws the referenced signs from `rng` (ascending |n|), then scrambles.
ScrambledRecord scramble(const BiasedBitLaw& law, const IndexFamily& family, SeededRng& rng,
                         std::size_t window, ExtractorKind kind = ExtractorKind::Balanced);

constexpr std::size_t kEnumerationBudget = 24;

class BudgetExceeded : public std::invalid_argument {
public:
    explicit BudgetExceeded(std::size_t bits);
    std::size_t bits() const noexcept { return bits_; }

private:
    std::size_t bits_;
};

struct IndexMarginal {
    std::int64_t n;
    Rational h_plus, h_minus, product_plus, product_minus, undecided;
};

struct JointLaw {
    std::vector<std::int64_t> window;      // 0, -1, ...
    std::vector<std::int64_t> referenced;  // enumerated sign indices
    std::size_t bits_per_set = 0;
    ExtractorKind extractor = ExtractorKind::Balanced;
    /// Law of (h_n eps_n) over the window, entries in {+1, -1, 0 = undecided}.
    std::map<std::vector<int>, Rational> outcomes;
    Rational undecided_mass;  // P[some h_n undecided]
    std::vector<IndexMarginal> marginals;

    nlohmann::json to_json() const;
};

/// Enumerates every sign assignment of the referenced indices, using the
/// first `bits_per_set` members of each I_n. Throws BudgetExceeded past 24 bits.
JointLaw exact_joint_law(const BiasedBitLaw& law, const IndexFamily& family, std::size_t window,
                         std::size_t bits_per_set, ExtractorKind kind = ExtractorKind::Balanced);

/// Number of sign indices exact_joint_law would enumerate.
std::size_t enumeration_bits(const IndexFamily& family, std::size_t window,
                             std::size_t bits_per_set);

struct ExactnessReport {
    bool fair = true;                // P[h_n = +1] = P[h_n = -1] = (1 - undecided_n)/2
    bool products_fair = true;       // same for h_n eps_n
    bool factorized = true;          // joint law = product of marginals
    bool conditionally_fair = true;  // P[+1 | past] = P[-1 | past] for every past value
    std::vector<std::string> failures;

    bool pass() const noexcept { return fair && products_fair && factorized && conditionally_fair; }
};

ExactnessReport check_exactness(const JointLaw& law);

}  // namespace driftcam
