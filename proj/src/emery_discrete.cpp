#include "driftcam/emery_discrete.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <limits>
#include <set>
#include <type_traits>

namespace driftcam {

namespace mp = boost::multiprecision;

namespace {

const Rational kHalf(1, 2);

bool in_open_unit(const Rational& p) { return p > 0 && p < 1; }

void require_prob(const Rational& p, const char* what) {
    if (!in_open_unit(p)) {
        throw std::invalid_argument(std::string(what) + ": probability " + to_string(p) +
                                    " outside (0, 1)");
    }
}

mp::cpp_int parse_integer(std::string_view s) {
    if (s.empty()) throw std::invalid_argument("parse_rational: empty integer");
    std::size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
    if (i == s.size()) throw std::invalid_argument("parse_rational: malformed integer");
    for (std::size_t k = i; k < s.size(); ++k) {
        if (!std::isdigit(static_cast<unsigned char>(s[k]))) {
            throw std::invalid_argument("parse_rational: malformed number '" + std::string(s) + "'");
        }
    }
    mp::cpp_int v(std::string(s.substr(i)));
    return s[0] == '-' ? mp::cpp_int(-v) : v;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

Rational parse_decimal(std::string_view s) {
    long exp10 = 0;
    if (const auto e = s.find_first_of("eE"); e != std::string_view::npos) {
        exp10 = static_cast<long>(parse_integer(s.substr(e + 1)));
        s = s.substr(0, e);
    }
    bool negative = false;
    if (!s.empty() && (s[0] == '-' || s[0] == '+')) {
        negative = s[0] == '-';
        s.remove_prefix(1);
    }
    std::string digits;
    const auto dot = s.find('.');
    if (dot == std::string_view::npos) {
        digits = std::string(s);
    } else {
        digits = std::string(s.substr(0, dot)) + std::string(s.substr(dot + 1));
        exp10 -= static_cast<long>(s.size() - dot - 1);
    }
    if (digits.empty()) throw std::invalid_argument("parse_rational: malformed number");
    Rational r(parse_integer(digits));
    const mp::cpp_int scale = mp::pow(mp::cpp_int(10), static_cast<unsigned>(std::labs(exp10)));
    r = exp10 >= 0 ? Rational(r * scale) : Rational(r / Rational(scale));
    return negative ? Rational(-r) : r;
}

Rational rational_from_json(const nlohmann::json& j, const char* field) {
    if (j.is_string()) return parse_rational(j.get<std::string>());
    if (j.is_number_integer()) return Rational(j.get<long long>());
    if (j.is_number()) return parse_rational(format_double(j.get<double>()));
    throw std::invalid_argument(std::string("law: field '") + field + "' must be a number or rational string");
}

std::vector<Rational> rationals_from_json(const nlohmann::json& j, const char* field) {
    if (!j.is_array() || j.empty()) {
        throw std::invalid_argument(std::string("law: field '") + field + "' must be a nonempty array");
    }
    std::vector<Rational> out;
    for (const auto& x : j) out.push_back(rational_from_json(x, field));
    return out;
}

std::size_t offset_of(std::int64_t n) { return static_cast<std::size_t>(-n); }

}  // namespace

Rational parse_rational(std::string_view text) {
    const std::string_view s = trim(text);
    if (const auto slash = s.find('/'); slash != std::string_view::npos) {
        const mp::cpp_int num = parse_integer(trim(s.substr(0, slash)));
        const mp::cpp_int den = parse_integer(trim(s.substr(slash + 1)));
        if (den == 0) throw std::invalid_argument("parse_rational: zero denominator");
        return Rational(num, den);
    }
    return parse_decimal(s);
}

std::string to_string(const Rational& r) { return r.str(); }

BiasedBitLaw::BiasedBitLaw(Kind kind, std::vector<Rational> values)
    : kind_(kind), values_(std::move(values)) {}

BiasedBitLaw BiasedBitLaw::constant(Rational p) {
    require_prob(p, "BiasedBitLaw::constant");
    return BiasedBitLaw(Kind::Constant, {std::move(p)});
}

BiasedBitLaw BiasedBitLaw::periodic(std::vector<Rational> values) {
    if (values.empty()) throw std::invalid_argument("BiasedBitLaw::periodic: empty period");
    for (const auto& p : values) require_prob(p, "BiasedBitLaw::periodic");
    return BiasedBitLaw(Kind::Periodic, std::move(values));
}

BiasedBitLaw BiasedBitLaw::table(std::vector<Rational> values) {
    if (values.empty()) throw std::invalid_argument("BiasedBitLaw::table: empty table");
    for (const auto& p : values) require_prob(p, "BiasedBitLaw::table");
    return BiasedBitLaw(Kind::Table, std::move(values));
}

BiasedBitLaw BiasedBitLaw::geometric(Rational scale, Rational ratio) {
    require_prob(scale, "BiasedBitLaw::geometric");
    if (!(ratio > 0 && ratio <= 1)) {
        throw std::invalid_argument("BiasedBitLaw::geometric: ratio must lie in (0, 1]");
    }
    return BiasedBitLaw(Kind::Geometric, {std::move(scale), std::move(ratio)});
}

Rational BiasedBitLaw::p(std::int64_t n) const {
    if (n > 0) throw std::invalid_argument("BiasedBitLaw: index must be <= 0");
    const std::size_t k = offset_of(n);
    switch (kind_) {
        case Kind::Constant:
            return values_[0];
        case Kind::Periodic:
            return values_[k % values_.size()];
        case Kind::Table:
            if (k >= values_.size()) {
                throw std::invalid_argument("BiasedBitLaw: index " + std::to_string(n) +
                                            " is past the table");
            }
            return values_[k];
        case Kind::Geometric: {
            Rational r = values_[0] * Rational(mp::pow(mp::numerator(values_[1]), static_cast<unsigned>(k)),
                                               mp::pow(mp::denominator(values_[1]), static_cast<unsigned>(k)));
            require_prob(r, "BiasedBitLaw::geometric");
            return r;
        }
    }
    throw std::logic_error("BiasedBitLaw: bad kind");
}

BiasedBitLaw BiasedBitLaw::from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("kind")) {
        throw std::invalid_argument("law: expected an object with a 'kind' field");
    }
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "constant") return constant(rational_from_json(j.at("p"), "p"));
    if (kind == "periodic") return periodic(rationals_from_json(j.at("p"), "p"));
    if (kind == "table") return table(rationals_from_json(j.at("p"), "p"));
    if (kind == "geometric") {
        return geometric(rational_from_json(j.at("scale"), "scale"),
                         rational_from_json(j.at("ratio"), "ratio"));
    }
    throw std::invalid_argument("law: unknown kind '" + kind + "'");
}

nlohmann::json BiasedBitLaw::to_json() const {
    auto strings = [this] {
        nlohmann::json a = nlohmann::json::array();
        for (const auto& v : values_) a.push_back(to_string(v));
        return a;
    };
    switch (kind_) {
        case Kind::Constant:
            return {{"kind", "constant"}, {"p", to_string(values_[0])}};
        case Kind::Periodic:
            return {{"kind", "periodic"}, {"p", strings()}};
        case Kind::Table:
            return {{"kind", "table"}, {"p", strings()}};
        case Kind::Geometric:
            return {{"kind", "geometric"},
                    {"scale", to_string(values_[0])},
                    {"ratio", to_string(values_[1])}};
    }
    throw std::logic_error("BiasedBitLaw: bad kind");
}

DiffuseReport check_diffuse(const BiasedBitLaw& law, std::int64_t horizon, double tail_threshold) {
    if (horizon < 1) throw std::invalid_argument("check_diffuse: horizon must be at least 1");
    DiffuseReport r;
    r.horizon = horizon;
    r.tail_threshold = tail_threshold;
    for (std::int64_t k = 0; k <= horizon; ++k) {
        const Rational p = law.p(-k);
        require_prob(p, "check_diffuse");
        Rational term = p < 1 - p ? p : Rational(1 - p);
        r.partial_sum += term;
        if (2 * k > horizon) r.tail_sum += term;
        r.terms.push_back(std::move(term));
    }
    r.flagged_non_diffuse = r.tail_sum.convert_to<double>() < tail_threshold;
    return r;
}

IndexFamily::IndexFamily(std::size_t window, std::size_t bits_per_set, std::size_t depth,
                         std::vector<std::vector<std::int64_t>> sets)
    : bits_per_set_(bits_per_set), depth_(depth), sets_(std::move(sets)) {
    if (window == 0 || sets_.size() != window) {
        throw std::invalid_argument("IndexFamily: need one block per window index");
    }
    for (const auto& s : sets_) {
        for (auto i : s) horizon_ = std::min(horizon_, i);
    }
    std::set<std::int64_t> used;
    std::vector<std::int64_t> level = sets_[0];
    for (std::size_t l = 0; l <= depth_; ++l) {
        std::sort(level.begin(), level.end(), std::greater<>());
        used.insert(level.begin(), level.end());
        levels_.push_back(level);
        std::vector<std::int64_t> next;
        for (auto n : level) {
            if (offset_of(n) < sets_.size()) {
                const auto& block = sets_[offset_of(n)];
                next.insert(next.end(), block.begin(), block.end());
            }
        }
        level = std::move(next);
    }
    for (std::int64_t i = -1; i >= horizon_; --i) {
        if (!used.count(i)) residual_.push_back(i);
    }
}

const std::vector<std::int64_t>& IndexFamily::set(std::int64_t n) const {
    if (n > 0 || offset_of(n) >= sets_.size()) {
        throw std::out_of_range("IndexFamily: index " + std::to_string(n) + " outside the window");
    }
    return sets_[offset_of(n)];
}

nlohmann::json IndexFamily::to_json() const {
    nlohmann::json blocks = nlohmann::json::array();
    for (std::size_t k = 0; k < sets_.size(); ++k) {
        blocks.push_back({{"n", -static_cast<std::int64_t>(k)}, {"indices", sets_[k]}});
    }
    return {{"window", sets_.size()},
            {"bits_per_set", bits_per_set_},
            {"depth", depth_},
            {"horizon", horizon_},
            {"sets", blocks},
            {"levels", levels_},
            {"residual_size", residual_.size()}};
}

IndexFamily build_index_family(std::size_t n_window, std::size_t bits_per_set, std::size_t depth) {
    if (n_window == 0) throw std::invalid_argument("build_index_family: window must be at least 1");
    if (bits_per_set == 0) {
        throw std::invalid_argument("build_index_family: bits_per_set must be at least 1");
    }
    std::vector<std::vector<std::int64_t>> sets(n_window);
    std::vector<char> taken(1, 1);  // taken[k] for index -k; 0 is never handed out
    std::size_t full = 0;
    for (std::size_t round = 1; full < n_window; ++round) {
        for (std::size_t k = 0; k < std::min(round, n_window); ++k) {
            auto& block = sets[k];
            if (block.size() >= bits_per_set) continue;
            std::size_t cand = (block.empty() ? k : offset_of(block.back())) + 1;
            while (cand < taken.size() && taken[cand]) ++cand;
            if (cand >= taken.size()) taken.resize(cand + 1, 0);
            taken[cand] = 1;
            block.push_back(-static_cast<std::int64_t>(cand));
            if (block.size() == bits_per_set) ++full;
        }
    }
    return IndexFamily(n_window, bits_per_set, depth, std::move(sets));
}

FamilyCheck check_family(const IndexFamily& family) {
    FamilyCheck c;
    std::map<std::int64_t, std::int64_t> owner;
    for (std::size_t k = 0; k < family.window(); ++k) {
        const std::int64_t n = -static_cast<std::int64_t>(k);
        const auto& block = family.set(n);
        for (std::size_t t = 0; t < block.size(); ++t) {
            const auto i = block[t];
            if (!(i < n) || (t > 0 && !(i < block[t - 1]))) {
                c.below_owner = false;
                c.failures.push_back("I_" + std::to_string(n) + " member " + std::to_string(i) +
                                     " out of order");
            }
            if (auto [it, fresh] = owner.emplace(i, n); !fresh) {
                c.disjoint = false;
                c.failures.push_back("index " + std::to_string(i) + " in I_" +
                                     std::to_string(it->second) + " and I_" + std::to_string(n));
            }
        }
    }
    std::map<std::int64_t, std::size_t> level_of;
    const auto& levels = family.levels();
    for (std::size_t l = 0; l < levels.size(); ++l) {
        const auto bound = -static_cast<std::int64_t>(l) - 1;
        for (auto i : levels[l]) {
            if (i > bound) {
                c.levels_bounded = false;
                c.failures.push_back("level " + std::to_string(l) + " holds " + std::to_string(i));
            }
            if (auto [it, fresh] = level_of.emplace(i, l); !fresh) {
                c.levels_disjoint = false;
                c.failures.push_back("index " + std::to_string(i) + " in levels " +
                                     std::to_string(it->second) + " and " + std::to_string(l));
            }
        }
    }
    const std::set<std::int64_t> residual(family.residual().begin(), family.residual().end());
    for (auto m : family.residual()) {
        if (offset_of(m) >= family.window()) continue;
        for (auto i : family.set(m)) {
            if (!residual.count(i)) {
                c.residual_closed = false;
                c.failures.push_back("I_" + std::to_string(m) + " member " + std::to_string(i) +
                                     " leaves J");
            }
        }
    }
    return c;
}

std::string_view to_string(Decision d) noexcept {
    switch (d) {
        case Decision::Plus: return "+1";
        case Decision::Minus: return "-1";
        case Decision::Undecided: break;
    }
    return "undecided";
}

int to_int(Decision d) noexcept {
    return d == Decision::Plus ? 1 : d == Decision::Minus ? -1 : 0;
}

namespace {

void require_bits(std::span<const int> bits, std::span<const Rational> probs, const char* what) {
    if (bits.size() != probs.size()) {
        throw std::invalid_argument(std::string(what) + ": bits and probs differ in length");
    }
    for (std::size_t i = 0; i < bits.size(); ++i) {
        if (bits[i] != 1 && bits[i] != -1) {
            throw std::invalid_argument(std::string(what) + ": bits must be +1 or -1");
        }
        require_prob(probs[i], what);
    }
}

}  // namespace

ExtractorState extract_fair_bit(std::span<const int> bits, std::span<const Rational> probs) {
    require_bits(bits, probs, "extract_fair_bit");
    ExtractorState s{Rational(0), Rational(1), 0, Decision::Undecided};
    for (std::size_t i = 0; i < bits.size(); ++i) {
        const Rational cut = s.low + probs[i] * (s.high - s.low);
        if (bits[i] == 1) {
            s.high = cut;
        } else {
            s.low = cut;
        }
        s.bits_consumed = i + 1;
        if (s.high <= kHalf) {
            s.decision = Decision::Plus;
            break;
        }
        if (s.low >= kHalf) {
            s.decision = Decision::Minus;
            break;
        }
    }
    return s;
}

Extraction extract_balanced_bit(std::span<const int> bits, std::span<const Rational> probs) {
    require_bits(bits, probs, "extract_balanced_bit");
    std::vector<std::pair<const Rational*, int>> waiting;
    for (std::size_t i = 0; i < bits.size(); ++i) {
        const Extraction done{bits[i] == 1 ? Decision::Plus : Decision::Minus, i + 1};
        if (probs[i] == kHalf) return done;
        auto it = std::find_if(waiting.begin(), waiting.end(),
                               [&](const auto& w) { return *w.first == probs[i]; });
        if (it == waiting.end()) {
            waiting.emplace_back(&probs[i], bits[i]);
            continue;
        }
        if (it->second != bits[i]) {
            return {it->second == 1 ? Decision::Plus : Decision::Minus, i + 1};
        }
        waiting.erase(it);
    }
    return {Decision::Undecided, bits.size()};
}

std::string_view to_string(ExtractorKind kind) noexcept {
    return kind == ExtractorKind::Balanced ? "balanced" : "interval";
}

ExtractorKind extractor_from_string(std::string_view name) {
    if (name == "balanced") return ExtractorKind::Balanced;
    if (name == "interval") return ExtractorKind::Interval;
    throw std::invalid_argument("unknown extractor '" + std::string(name) + "'");
}

Extraction extract(ExtractorKind kind, std::span<const int> bits, std::span<const Rational> probs) {
    if (kind == ExtractorKind::Balanced) return extract_balanced_bit(bits, probs);
    const auto s = extract_fair_bit(bits, probs);
    return {s.decision, s.bits_consumed};
}

Rational undecided_bound(std::span<const Rational> probs) {
    Rational r(1);
    for (const auto& p : probs) r *= p > kHalf ? p : Rational(1 - p);
    return r;
}

namespace {

std::vector<std::int64_t> block_prefix(const IndexFamily& family, std::int64_t n, std::size_t bits) {
    const auto& block = family.set(n);
    return {block.begin(), block.begin() + static_cast<std::ptrdiff_t>(std::min(bits, block.size()))};
}

std::vector<std::int64_t> referenced_prefix(const IndexFamily& family, std::size_t window,
                                            std::size_t bits) {
    if (window == 0 || window > family.window()) {
        throw std::invalid_argument("window must lie in 1.." + std::to_string(family.window()));
    }
    std::set<std::int64_t, std::greater<>> refs;
    for (std::size_t k = 0; k < window; ++k) {
        const auto n = -static_cast<std::int64_t>(k);
        refs.insert(n);
        const auto block = block_prefix(family, n, bits);
        refs.insert(block.begin(), block.end());
    }
    return {refs.begin(), refs.end()};
}

}  // namespace

std::vector<std::int64_t> referenced_indices(const IndexFamily& family, std::size_t window) {
    return referenced_prefix(family, window, family.bits_per_set());
}

ScrambledRecord scramble(const BiasedBitLaw& law, const IndexFamily& family,
                         const BitAssignment& eps, std::size_t window, ExtractorKind kind) {
    if (window == 0 || window > family.window()) {
        throw std::invalid_argument("scramble: window must lie in 1.." + std::to_string(family.window()));
    }
    auto sign_at = [&](std::int64_t i) {
        const auto it = eps.find(i);
        if (it == eps.end()) throw std::invalid_argument("scramble: no sign for index " + std::to_string(i));
        if (it->second != 1 && it->second != -1) {
            throw std::invalid_argument("scramble: signs must be +1 or -1");
        }
        return it->second;
    };
    ScrambledRecord rec;
    for (std::size_t k = 0; k < window; ++k) {
        const auto n = -static_cast<std::int64_t>(k);
        const auto& block = family.set(n);
        std::vector<int> bits;
        std::vector<Rational> probs;
        for (auto i : block) {
            bits.push_back(sign_at(i));
            probs.push_back(law.p(i));
        }
        const auto x = extract(kind, bits, probs);
        const int e = sign_at(n);
        const bool decided = x.decision != Decision::Undecided;
        rec.entries.push_back({n, e, x.decision, decided ? to_int(x.decision) * e : 0,
                               x.bits_consumed, decided});
    }
    return rec;
}

ScrambledRecord scramble(const BiasedBitLaw& law, const IndexFamily& family, SeededRng& rng,
                         std::size_t window, ExtractorKind kind) {
    BitAssignment eps;
    for (auto i : referenced_indices(family, window)) {
        const double p = law.p(i).convert_to<double>();
        eps[i] = rng.uniform() < p ? 1 : -1;
    }
    return scramble(law, family, eps, window, kind);
}

BudgetExceeded::BudgetExceeded(std::size_t bits)
    : std::invalid_argument("enumeration needs " + std::to_string(bits) + " bits, budget is " +
                            std::to_string(kEnumerationBudget)),
      bits_(bits) {}

std::size_t enumeration_bits(const IndexFamily& family, std::size_t window, std::size_t bits_per_set) {
    return referenced_prefix(family, window, bits_per_set).size();
}

namespace {

__extension__ typedef unsigned __int128 Wide;

mp::cpp_int to_big(Wide x) {
    mp::cpp_int hi = static_cast<std::uint64_t>(x >> 64);
    return (hi << 64) + static_cast<std::uint64_t>(x);
}

template <class W>
W from_big(const mp::cpp_int& x) {
    if constexpr (std::is_same_v<W, mp::cpp_int>) {
        return x;
    } else {
        const auto lo = static_cast<std::uint64_t>(x & std::numeric_limits<std::uint64_t>::max());
        const auto hi = static_cast<std::uint64_t>(x >> 64);
        return (static_cast<W>(hi) << 64) | lo;
    }
}

struct EnumPlan {
    std::size_t n_refs = 0;
    std::size_t window = 0;
    std::vector<mp::cpp_int> weight_plus, weight_minus;  // per ref position
    std::vector<int> owner_block;                        // -1 when not in any block
    std::vector<int> owner_bit;
    std::vector<int> window_eps_pos;     // position of eps_n per window slot
    std::vector<std::vector<int>> table; // per window slot: local mask -> +1 / -1 / 0
};

template <class W>
void enumerate(const EnumPlan& plan, std::vector<W>& acc) {
    std::vector<W> wplus(plan.n_refs), wminus(plan.n_refs);
    for (std::size_t i = 0; i < plan.n_refs; ++i) {
        wplus[i] = from_big<W>(plan.weight_plus[i]);
        wminus[i] = from_big<W>(plan.weight_minus[i]);
    }
    std::vector<int> sign(plan.n_refs, 0);
    std::vector<std::uint32_t> mask(plan.window, 0);
    std::vector<std::size_t> pow3(plan.window, 1);
    for (std::size_t j = 1; j < plan.window; ++j) pow3[j] = pow3[j - 1] * 3;

    std::function<void(std::size_t, const W&)> rec = [&](std::size_t pos, const W& w) {
        if (pos == plan.n_refs) {
            std::size_t code = 0;
            for (std::size_t j = 0; j < plan.window; ++j) {
                const int h = plan.table[j][mask[j]];
                const int prod = h * sign[static_cast<std::size_t>(plan.window_eps_pos[j])];
                code += pow3[j] * static_cast<std::size_t>(prod == 1 ? 0 : prod == -1 ? 1 : 2);
            }
            acc[code] += w;
            return;
        }
        const int blk = plan.owner_block[pos];
        const auto bit = static_cast<std::uint32_t>(1u << (blk >= 0 ? plan.owner_bit[pos] : 0));
        if (W wp = w * wplus[pos]; wp != 0) {
            sign[pos] = 1;
            if (blk >= 0) mask[static_cast<std::size_t>(blk)] |= bit;
            rec(pos + 1, wp);
            if (blk >= 0) mask[static_cast<std::size_t>(blk)] &= ~bit;
        }
        if (W wm = w * wminus[pos]; wm != 0) {
            sign[pos] = -1;
            rec(pos + 1, wm);
        }
    };
    rec(0, W(1));
}

}  // namespace

JointLaw exact_joint_law(const BiasedBitLaw& law, const IndexFamily& family, std::size_t window,
                         std::size_t bits_per_set, ExtractorKind kind) {
    if (bits_per_set == 0 || bits_per_set > family.bits_per_set()) {
        throw std::invalid_argument("exact_joint_law: bits_per_set must lie in 1.." +
                                    std::to_string(family.bits_per_set()));
    }
    const auto refs = referenced_prefix(family, window, bits_per_set);
    if (refs.size() > kEnumerationBudget) throw BudgetExceeded(refs.size());

    EnumPlan plan;
    plan.n_refs = refs.size();
    plan.window = window;
    plan.owner_block.assign(refs.size(), -1);
    plan.owner_bit.assign(refs.size(), 0);
    std::map<std::int64_t, std::size_t> pos_of;
    mp::cpp_int total = 1;
    std::vector<Rational> p_of(refs.size());
    for (std::size_t i = 0; i < refs.size(); ++i) {
        pos_of[refs[i]] = i;
        p_of[i] = law.p(refs[i]);
        const mp::cpp_int num = mp::numerator(p_of[i]);
        const mp::cpp_int den = mp::denominator(p_of[i]);
        plan.weight_plus.push_back(num);
        plan.weight_minus.push_back(den - num);
        total *= den;
    }

    JointLaw out;
    out.referenced = refs;
    out.bits_per_set = bits_per_set;
    out.extractor = kind;
    for (std::size_t j = 0; j < window; ++j) {
        const auto n = -static_cast<std::int64_t>(j);
        out.window.push_back(n);
        plan.window_eps_pos.push_back(static_cast<int>(pos_of.at(n)));
        const auto block = block_prefix(family, n, bits_per_set);
        std::vector<Rational> probs;
        for (std::size_t t = 0; t < block.size(); ++t) {
            const auto pos = pos_of.at(block[t]);
            plan.owner_block[pos] = static_cast<int>(j);
            plan.owner_bit[pos] = static_cast<int>(t);
            probs.push_back(p_of[pos]);
        }
        // Lookup table over the block's sign patterns, and the exact law of h_n.
        std::vector<int> table(std::size_t{1} << block.size());
        IndexMarginal m{n, 0, 0, 0, 0, 0};
        std::vector<int> bits(block.size());
        for (std::size_t mask = 0; mask < table.size(); ++mask) {
            Rational w(1);
            for (std::size_t t = 0; t < block.size(); ++t) {
                bits[t] = (mask >> t) & 1 ? 1 : -1;
                w *= bits[t] == 1 ? probs[t] : Rational(1 - probs[t]);
            }
            table[mask] = to_int(extract(kind, bits, probs).decision);
            (table[mask] == 1 ? m.h_plus : table[mask] == -1 ? m.h_minus : m.undecided) += w;
        }
        plan.table.push_back(std::move(table));
        out.marginals.push_back(m);
    }

    std::size_t cells = 1;
    for (std::size_t j = 0; j < window; ++j) {
        cells *= 3;
        if (cells > (std::size_t{1} << 22)) {
            throw std::invalid_argument("exact_joint_law: window too wide for a dense table");
        }
    }
    std::vector<mp::cpp_int> acc_big(cells);
    if (mp::msb(total) < 120) {
        std::vector<Wide> acc(cells, 0);
        enumerate(plan, acc);
        for (std::size_t c = 0; c < cells; ++c) acc_big[c] = to_big(acc[c]);
    } else {
        enumerate(plan, acc_big);
    }

    for (auto& m : out.marginals) {
        m.product_plus = 0;
        m.product_minus = 0;
    }
    for (std::size_t c = 0; c < cells; ++c) {
        if (acc_big[c] == 0) continue;
        const Rational prob(acc_big[c], total);
        std::vector<int> values(window);
        std::size_t code = c;
        bool undecided = false;
        for (std::size_t j = 0; j < window; ++j) {
            const auto digit = code % 3;
            code /= 3;
            values[j] = digit == 0 ? 1 : digit == 1 ? -1 : 0;
            if (values[j] == 1) out.marginals[j].product_plus += prob;
            if (values[j] == -1) out.marginals[j].product_minus += prob;
            undecided = undecided || values[j] == 0;
        }
        if (undecided) out.undecided_mass += prob;
        out.outcomes.emplace(std::move(values), prob);
    }
    return out;
}

nlohmann::json JointLaw::to_json() const {
    auto label = [](int v) { return v == 1 ? "+1" : v == -1 ? "-1" : "U"; };
    nlohmann::json marg = nlohmann::json::array();
    for (const auto& m : marginals) {
        marg.push_back({{"n", m.n},
                        {"P_h_plus", to_string(m.h_plus)},
                        {"P_h_minus", to_string(m.h_minus)},
                        {"P_product_plus", to_string(m.product_plus)},
                        {"P_product_minus", to_string(m.product_minus)},
                        {"undecided", to_string(m.undecided)}});
    }
    nlohmann::json table = nlohmann::json::array();
    for (const auto& [values, prob] : outcomes) {
        nlohmann::json v = nlohmann::json::array();
        for (int x : values) v.push_back(label(x));
        table.push_back({{"products", v}, {"probability", to_string(prob)}});
    }
    return {{"window", window},
            {"referenced_bits", referenced.size()},
            {"bits_per_set", bits_per_set},
            {"extractor", std::string(to_string(extractor))},
            {"undecided_mass", to_string(undecided_mass)},
            {"marginals", marg},
            {"joint", table}};
}

ExactnessReport check_exactness(const JointLaw& law) {
    ExactnessReport r;
    const std::size_t w = law.window.size();
    for (const auto& m : law.marginals) {
        const Rational half_decided = (1 - m.undecided) / 2;
        if (m.h_plus != m.h_minus || m.h_plus != half_decided) {
            r.fair = false;
            r.failures.push_back("h_" + std::to_string(m.n) + ": P[+1] = " + to_string(m.h_plus) +
                                 ", P[-1] = " + to_string(m.h_minus));
        }
        if (m.product_plus != m.product_minus || m.product_plus != half_decided) {
            r.products_fair = false;
            r.failures.push_back("h_" + std::to_string(m.n) + " eps_" + std::to_string(m.n) +
                                 ": P[+1] = " + to_string(m.product_plus) +
                                 ", P[-1] = " + to_string(m.product_minus));
        }
    }
    auto prob_of = [&](const std::vector<int>& v) {
        const auto it = law.outcomes.find(v);
        return it == law.outcomes.end() ? Rational(0) : it->second;
    };
    auto marginal = [&](std::size_t j, int v) {
        const auto& m = law.marginals[j];
        return v == 1 ? m.product_plus : v == -1 ? m.product_minus : m.undecided;
    };
    std::size_t cells = 1;
    for (std::size_t j = 0; j < w; ++j) cells *= 3;
    std::vector<int> v(w);
    for (std::size_t c = 0; c < cells; ++c) {
        std::size_t code = c;
        Rational product(1);
        for (std::size_t j = 0; j < w; ++j) {
            const auto digit = code % 3;
            code /= 3;
            v[j] = digit == 0 ? 1 : digit == 1 ? -1 : 0;
            product *= marginal(j, v[j]);
        }
        if (prob_of(v) != product && r.factorized) {
            r.factorized = false;
            r.failures.push_back("joint law does not factor at cell " + std::to_string(c));
        }
        if (v[0] == 1) {
            auto mirror = v;
            mirror[0] = -1;
            if (prob_of(v) != prob_of(mirror) && r.conditionally_fair) {
                r.conditionally_fair = false;
                r.failures.push_back("h_0 eps_0 not fair given the past at cell " +
                                     std::to_string(c));
            }
        }
    }
    return r;
}

}  // namespace driftcam
