#include "kvsched/selectors.hpp"

#include "kvsched/rng.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <limits>
#include <numeric>

namespace kvsched {

namespace {

using u128 = unsigned __int128;

constexpr std::uint64_t kInf = std::numeric_limits<std::uint64_t>::max();
// 22, not 20: the worked example's pool is one long-prompt request plus 21
// short ones and must stay within the oracle's reach.
constexpr std::size_t kBruteForceLimit = 22;
constexpr std::size_t kDpPoolLimit = 100;
constexpr std::size_t kDpCellLimit = 2'000'000;

// F(a) < F(b) with F = sum_o / k^2, exact.
bool f_less(std::uint64_t sum_a, std::uint64_t k_a, std::uint64_t sum_b, std::uint64_t k_b) {
    return static_cast<u128>(sum_a) * k_b * k_b < static_cast<u128>(sum_b) * k_a * k_a;
}

std::vector<Request> sorted_batch(std::span<const Request> pool, const std::vector<std::size_t>& members) {
    std::vector<Request> batch;
    batch.reserve(members.size());
    for (std::size_t i : members) {
        batch.push_back(pool[i]);
    }
    std::sort(batch.begin(), batch.end(), [](const Request& a, const Request& b) {
        return a.o != b.o ? a.o < b.o : a.id < b.id;
    });
    return batch;
}

// Pool indices ordered by ascending request id; used for lexicographic
// comparison of member sets as sorted id lists (equal-sized sets compare by
// the smallest id in their symmetric difference).
std::vector<std::size_t> id_order(std::span<const Request> pool) {
    std::vector<std::size_t> order(pool.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return pool[a].id < pool[b].id; });
    return order;
}

using DpMask = std::array<std::uint64_t, 2>;

bool mask_test(const DpMask& m, std::size_t i) { return (m[i >> 6] >> (i & 63)) & 1; }

void mask_set(DpMask& m, std::size_t i) { m[i >> 6] |= std::uint64_t{1} << (i & 63); }

// True iff a's sorted id list is lexicographically smaller than b's.
bool mask_lex_less(const DpMask& a, const DpMask& b, const std::vector<std::size_t>& by_id) {
    for (std::size_t i : by_id) {
        const bool in_a = mask_test(a, i);
        const bool in_b = mask_test(b, i);
        if (in_a != in_b) {
            return in_a;
        }
    }
    return false;
}

std::vector<std::size_t> mask_members(const DpMask& m, std::size_t n) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < n; ++i) {
        if (mask_test(m, i)) {
            out.push_back(i);
        }
    }
    return out;
}

// Shared knapsack DP over (batch size, memory) with explicit member sets.
// weights[i] is the quantized (or exact) memory of request i; capacity is the
// matching bound. Returns the member indices of the argmin-F cell.
std::vector<std::size_t> dp_select(std::span<const Request> pool,
                                   const std::vector<std::uint64_t>& weights,
                                   std::uint64_t capacity) {
    const std::size_t n = pool.size();
    const std::size_t cols = static_cast<std::size_t>(capacity) + 1;
    const std::vector<std::size_t> by_id = id_order(pool);

    std::vector<std::uint64_t> dp((n + 1) * cols, kInf);
    std::vector<DpMask> member((n + 1) * cols, DpMask{0, 0});
    auto cell = [cols](std::size_t k, std::uint64_t m) { return k * cols + m; };
    dp[cell(0, 0)] = 0;

    for (std::size_t i = 0; i < n; ++i) {
        const std::uint64_t w = weights[i];
        if (w > capacity) {
            continue;
        }
        for (std::size_t k = std::min(i, n - 1) + 1; k-- > 0;) {
            for (std::uint64_t m = capacity - w + 1; m-- > 0;) {
                const std::uint64_t val = dp[cell(k, m)];
                if (val == kInf) {
                    continue;
                }
                const std::uint64_t new_val = val + pool[i].o;
                const std::size_t target = cell(k + 1, m + w);
                if (new_val < dp[target]) {
                    dp[target] = new_val;
                    member[target] = member[cell(k, m)];
                    mask_set(member[target], i);
                } else if (new_val == dp[target]) {
                    DpMask candidate = member[cell(k, m)];
                    mask_set(candidate, i);
                    if (mask_lex_less(candidate, member[target], by_id)) {
                        member[target] = candidate;
                    }
                }
            }
        }
    }

    bool found = false;
    std::uint64_t best_sum = 0;
    std::size_t best_k = 0;
    std::uint64_t best_m = 0;
    for (std::size_t k = 1; k <= n; ++k) {
        for (std::uint64_t m = 0; m <= capacity; ++m) {
            const std::uint64_t val = dp[cell(k, m)];
            if (val == kInf) {
                continue;
            }
            bool take = false;
            if (!found) {
                take = true;
            } else if (f_less(val, k, best_sum, best_k)) {
                take = true;
            } else if (!f_less(best_sum, best_k, val, k)) {
                // F ties: larger k, then smaller m, then lexicographic members.
                if (k > best_k) {
                    take = true;
                } else if (k == best_k && m < best_m) {
                    take = true;
                } else if (k == best_k && m == best_m &&
                           mask_lex_less(member[cell(k, m)], member[cell(best_k, best_m)], by_id)) {
                    take = true;
                }
            }
            if (take) {
                found = true;
                best_sum = val;
                best_k = k;
                best_m = m;
            }
        }
    }
    if (!found) {
        return {};
    }
    return mask_members(member[cell(best_k, best_m)], n);
}

void check_dp_budget(std::span<const Request> pool, std::uint64_t capacity) {
    const std::size_t cells = (pool.size() + 1) * (static_cast<std::size_t>(capacity) + 1);
    if (pool.size() > kDpPoolLimit || cells > kDpCellLimit) {
        throw std::invalid_argument(
            "pool exceeds the exact_dp budget (n <= " + std::to_string(kDpPoolLimit) +
            ", (n+1)*(M+1) <= " + std::to_string(kDpCellLimit) + "); use scaled_dp instead");
    }
}

void validate_config(const SelectorConfig& config) {
    if (config.epsilon.num == 0 || config.epsilon.den == 0) {
        throw std::invalid_argument("selector epsilon must be a positive rational");
    }
    if (config.precision_b == 0) {
        throw std::invalid_argument("selector precision_B must be >= 1");
    }
    if (config.sample_fraction.num == 0 || config.sample_fraction.den == 0 ||
        config.sample_fraction.num > config.sample_fraction.den) {
        throw std::invalid_argument("sample_fraction must be in (0, 1]");
    }
    if (config.quantile_p.num == 0 || config.quantile_p.den == 0 ||
        config.quantile_p.num >= config.quantile_p.den) {
        throw std::invalid_argument("quantile_p must be in (0, 1)");
    }
}

// Nearest-rank lower quantile of ascending `values`: rank = max(1, ceil(p*N)).
std::uint64_t nearest_rank_quantile(std::vector<std::uint64_t> values, Rational p) {
    std::sort(values.begin(), values.end());
    const std::uint64_t n = values.size();
    std::uint64_t rank = (p.num * n + p.den - 1) / p.den;
    rank = std::max<std::uint64_t>(1, rank);
    return values[rank - 1];
}

}  // namespace

const char* selector_kind_name(SelectorKind kind) {
    switch (kind) {
        case SelectorKind::brute_force: return "brute_force";
        case SelectorKind::exact_dp: return "exact_dp";
        case SelectorKind::scaled_dp: return "scaled_dp";
        case SelectorKind::local_swap: return "local_swap";
        case SelectorKind::quantile_greedy: return "quantile_greedy";
    }
    return "unknown";
}

SelectorKind selector_kind_from_name(const std::string& name) {
    if (name == "brute_force") return SelectorKind::brute_force;
    if (name == "exact_dp") return SelectorKind::exact_dp;
    if (name == "scaled_dp") return SelectorKind::scaled_dp;
    if (name == "local_swap") return SelectorKind::local_swap;
    if (name == "quantile_greedy") return SelectorKind::quantile_greedy;
    throw std::invalid_argument("unknown selector kind: " + name);
}

std::vector<Request> select_brute_force(std::span<const Request> pool, Tokens memory_limit) {
    if (pool.empty()) {
        return {};
    }
    if (pool.size() > kBruteForceLimit) {
        throw std::invalid_argument("brute-force selector is an oracle, pool limit is " +
                                    std::to_string(kBruteForceLimit));
    }
    const std::size_t n = pool.size();
    const std::uint32_t full = static_cast<std::uint32_t>((std::uint64_t{1} << n) - 1);
    const std::vector<std::size_t> by_id = id_order(pool);

    auto lex_less = [&](std::uint32_t a, std::uint32_t b) {
        for (std::size_t i : by_id) {
            const bool in_a = (a >> i) & 1;
            const bool in_b = (b >> i) & 1;
            if (in_a != in_b) {
                return in_a;
            }
        }
        return false;
    };

    bool found = false;
    std::uint32_t best = 0;
    std::uint64_t best_o = 0;
    std::uint64_t best_mem = 0;
    std::uint32_t best_k = 0;
    for (std::uint32_t mask = 1; mask <= full; ++mask) {
        std::uint64_t sum_o = 0;
        std::uint64_t sum_mem = 0;
        for (std::uint32_t rest = mask; rest != 0; rest &= rest - 1) {
            const Request& r = pool[static_cast<std::size_t>(std::countr_zero(rest))];
            sum_o += r.o;
            sum_mem += r.footprint();
        }
        if (sum_mem > memory_limit) {
            continue;
        }
        const std::uint32_t k = static_cast<std::uint32_t>(std::popcount(mask));
        bool take = false;
        if (!found) {
            take = true;
        } else if (f_less(sum_o, k, best_o, best_k)) {
            take = true;
        } else if (!f_less(best_o, best_k, sum_o, k)) {
            if (k > best_k) {
                take = true;
            } else if (k == best_k) {
                if (sum_mem < best_mem) {
                    take = true;
                } else if (sum_mem == best_mem && lex_less(mask, best)) {
                    take = true;
                }
            }
        }
        if (take) {
            found = true;
            best = mask;
            best_o = sum_o;
            best_mem = sum_mem;
            best_k = k;
        }
    }
    if (!found) {
        return {};
    }
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < n; ++i) {
        if ((best >> i) & 1) {
            members.push_back(i);
        }
    }
    return sorted_batch(pool, members);
}

std::vector<Request> select_exact_dp(std::span<const Request> pool, Tokens memory_limit) {
    if (pool.empty()) {
        return {};
    }
    check_dp_budget(pool, memory_limit);
    std::vector<std::uint64_t> weights;
    weights.reserve(pool.size());
    for (const Request& r : pool) {
        weights.push_back(r.footprint());
    }
    return sorted_batch(pool, dp_select(pool, weights, memory_limit));
}

std::vector<Request> select_scaled_dp(std::span<const Request> pool, Tokens memory_limit,
                                      const SelectorConfig& config) {
    validate_config(config);
    if (pool.empty()) {
        return {};
    }
    // lambda = max(1, eps*M/B) as the exact rational num/den.
    const u128 num = static_cast<u128>(config.epsilon.num) * memory_limit;
    const u128 den = static_cast<u128>(config.epsilon.den) * config.precision_b;

    std::vector<std::uint64_t> weights;
    weights.reserve(pool.size());
    std::uint64_t capacity;
    if (num <= den) {  // lambda = 1
        for (const Request& r : pool) {
            weights.push_back(r.footprint());
        }
        capacity = memory_limit;
    } else {
        for (const Request& r : pool) {
            weights.push_back(static_cast<std::uint64_t>(static_cast<u128>(r.footprint()) * den / num));
        }
        capacity = static_cast<std::uint64_t>(static_cast<u128>(memory_limit) * den / num);
    }
    check_dp_budget(pool, capacity);
    return sorted_batch(pool, dp_select(pool, weights, capacity));
}

namespace {

// First-improvement exchange loop shared by select_local_swap and the
// LP-guided planner. `batch` holds pool indices and is refined in place.
void swap_refine(std::vector<std::size_t>& batch, std::span<const Request> pool,
                 Tokens memory_limit) {
    const std::size_t n = pool.size();
    std::vector<char> in_batch(n, 0);
    Tokens mem = 0;
    for (std::size_t i : batch) {
        in_batch[i] = 1;
        mem += pool[i].footprint();
    }

    const std::size_t sweep_cap = 10 * n;
    std::size_t sweeps = 0;
    bool improved = true;
    while (improved) {
        if (++sweeps > sweep_cap) {
            throw std::runtime_error("local_swap exceeded its sweep cap; F failed to settle");
        }
        improved = false;
        for (std::size_t pos = 0; pos < batch.size() && !improved; ++pos) {
            const Request& out = pool[batch[pos]];
            for (std::size_t cand = 0; cand < n; ++cand) {
                if (in_batch[cand]) {
                    continue;
                }
                const Request& in = pool[cand];
                if (mem + in.footprint() - out.footprint() > memory_limit) {
                    continue;
                }
                // Same batch size, so F strictly decreases iff the sum of
                // outputs does.
                if (in.o < out.o) {
                    mem += in.footprint() - out.footprint();
                    in_batch[batch[pos]] = 0;
                    in_batch[cand] = 1;
                    batch[pos] = cand;
                    improved = true;
                    break;
                }
            }
        }
    }
}

}  // namespace

std::vector<Request> select_local_swap(std::span<const Request> pool, Tokens memory_limit) {
    if (pool.empty()) {
        return {};
    }
    const std::size_t n = pool.size();

    std::vector<std::size_t> by_footprint(n);
    std::iota(by_footprint.begin(), by_footprint.end(), std::size_t{0});
    std::stable_sort(by_footprint.begin(), by_footprint.end(), [&](std::size_t a, std::size_t b) {
        return pool[a].footprint() < pool[b].footprint();
    });

    std::vector<std::size_t> batch;
    Tokens mem = 0;
    for (std::size_t i : by_footprint) {
        if (mem + pool[i].footprint() <= memory_limit) {
            mem += pool[i].footprint();
            batch.push_back(i);
        }
    }
    swap_refine(batch, pool, memory_limit);
    return sorted_batch(pool, batch);
}

std::vector<Request> refine_local_swap(const std::vector<Request>& seed,
                                       std::span<const Request> pool, Tokens memory_limit) {
    std::vector<std::size_t> batch;
    batch.reserve(seed.size());
    for (const Request& r : seed) {
        bool found = false;
        for (std::size_t i = 0; i < pool.size(); ++i) {
            if (pool[i].id == r.id) {
                batch.push_back(i);
                found = true;
                break;
            }
        }
        if (!found) {
            throw std::invalid_argument("seed request " + std::to_string(r.id) +
                                        " is not in the pool");
        }
    }
    swap_refine(batch, pool, memory_limit);
    return sorted_batch(pool, batch);
}

std::vector<Request> select_quantile_greedy(std::span<const Request> pool, Tokens memory_limit,
                                            const SelectorConfig& config, std::uint64_t rng_seed,
                                            QuantileGreedyDetail* detail) {
    validate_config(config);
    if (pool.empty()) {
        return {};
    }
    const std::size_t n = pool.size();

    std::vector<std::size_t> by_o(n);
    std::iota(by_o.begin(), by_o.end(), std::size_t{0});
    std::stable_sort(by_o.begin(), by_o.end(),
                     [&](std::size_t a, std::size_t b) { return pool[a].o < pool[b].o; });

    // Sample without replacement by a partial Fisher-Yates shuffle.
    const std::size_t sample_size = std::max<std::size_t>(
        1, static_cast<std::size_t>(config.sample_fraction.num * n / config.sample_fraction.den));
    std::vector<std::size_t> indices(n);
    std::iota(indices.begin(), indices.end(), std::size_t{0});
    SplitMix64 rng(rng_seed);
    for (std::size_t j = 0; j < sample_size; ++j) {
        const std::size_t pick = j + static_cast<std::size_t>(rng.next_below(n - j));
        std::swap(indices[j], indices[pick]);
    }
    std::vector<std::uint64_t> sample_fo;
    std::vector<std::uint64_t> sample_o;
    sample_fo.reserve(sample_size);
    sample_o.reserve(sample_size);
    for (std::size_t j = 0; j < sample_size; ++j) {
        sample_fo.push_back(pool[indices[j]].footprint());
        sample_o.push_back(pool[indices[j]].o);
    }
    const Tokens q_p = nearest_rank_quantile(std::move(sample_fo), config.quantile_p);
    const Tokens q_o = nearest_rank_quantile(std::move(sample_o), config.quantile_p);

    std::vector<std::size_t> batch;
    std::vector<char> in_batch(n, 0);
    Tokens mem = 0;
    for (std::size_t i : by_o) {
        const Request& r = pool[i];
        if (r.footprint() <= q_p && r.o <= q_o && mem + r.footprint() <= memory_limit) {
            mem += r.footprint();
            batch.push_back(i);
            in_batch[i] = 1;
        }
    }
    if (detail != nullptr) {
        detail->q_p = q_p;
        detail->q_o = q_o;
        detail->phase1.clear();
        for (std::size_t i : batch) {
            detail->phase1.push_back(pool[i].id);
        }
    }

    // Phase 2: fill remaining capacity by ascending o/(s+o), exact compare.
    std::vector<std::size_t> remaining;
    for (std::size_t i : by_o) {
        if (!in_batch[i]) {
            remaining.push_back(i);
        }
    }
    std::stable_sort(remaining.begin(), remaining.end(), [&](std::size_t a, std::size_t b) {
        return static_cast<u128>(pool[a].o) * pool[b].footprint() <
               static_cast<u128>(pool[b].o) * pool[a].footprint();
    });
    for (std::size_t i : remaining) {
        if (mem + pool[i].footprint() <= memory_limit) {
            mem += pool[i].footprint();
            batch.push_back(i);
        }
    }
    return sorted_batch(pool, batch);
}

std::vector<Request> select_batch(std::span<const Request> pool, Tokens memory_limit,
                                  const SelectorConfig& config) {
    switch (config.kind) {
        case SelectorKind::brute_force:
            return select_brute_force(pool, memory_limit);
        case SelectorKind::exact_dp:
            return select_exact_dp(pool, memory_limit);
        case SelectorKind::scaled_dp:
            return select_scaled_dp(pool, memory_limit, config);
        case SelectorKind::local_swap:
            return select_local_swap(pool, memory_limit);
        case SelectorKind::quantile_greedy:
            return select_quantile_greedy(pool, memory_limit, config, config.seed);
    }
    throw std::invalid_argument("unknown selector kind");
}

}  // namespace kvsched
