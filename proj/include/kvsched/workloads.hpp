#pragma once

#include "kvsched/core.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace kvsched {

enum class DistributionKind { uniform, normal, binomial, exponential, mixed };

const char* distribution_kind_name(DistributionKind kind);
DistributionKind distribution_kind_from_name(const std::string& name);

/// Synthetic workload parameters. Defaults are the reference setup: M = 100,
/// lengths capped at 50.
///
/// Sampling is fully specified so instances reproduce across platforms:
/// SplitMix64 seeded with `seed`, one request at a time (s first, then o),
/// uniform doubles from the top 53 bits. Per-value draws:
///   uniform      raw = lo + u*(hi - lo)                         (1 draw)
///   normal       Box-Muller cosine branch, second value unused  (2 draws)
///   binomial     count of `binomial_n` draws u < p, plus 1      (n draws)
///   exponential  raw = -scale * ln(1 - u)                       (1 draw)
///   mixed s      branch draw u < 0.8 -> exponential(10), else
///                lognormal exp(mu + sigma*z) via Box-Muller;
///                raw > 50 redrawn once as uniform(40, 50)
///   mixed o      exponential(exp_scale)
/// Every raw value is clipped to [clip_lo, clip_hi] and then rounded half-up.
/// If a request ends up with s + o > M the whole pair is redrawn.
struct DistributionSpec {
    DistributionKind kind = DistributionKind::uniform;
    double uniform_lo = 1.0;
    double uniform_hi = 51.0;
    double normal_mu = 25.0;
    double normal_sigma = 8.33;
    std::uint64_t binomial_n = 49;
    double binomial_p = 0.5;
    double exp_scale = 5.0;
    double mixed_exp_scale = 10.0;
    double mixed_lognormal_mu = std::log(40.0);
    double mixed_lognormal_sigma = 0.25;
    double clip_lo = 1.0;
    double clip_hi = 50.0;
    std::uint64_t seed = 0;
};

/// Worst case for shortest-output-first: M short-output long-prompt requests
/// (sqrt(M)-1, 1) ahead of M^1.5 long-output short-prompt ones (1, 2).
/// M must be a perfect square in [4, 2500].
Instance gen_adversarial_sf(Tokens memory_limit);

/// Worst case for smallest-total-first: type 1 = (1, sqrt(M)-1) x M,
/// type 2 = (sqrt(M), 1) x M^1.5. Same M constraints.
Instance gen_adversarial_sf2(Tokens memory_limit);

/// 3-Partition reduction: one request (x_i, 1) per integer. Requires
/// |xs| = 3m, sum = m*T and T/4 <= x < T/2. The memory limit is T plus the
/// three decode tokens a full triple needs, so a triple fits exactly when its
/// integers sum to at most T.
Instance gen_3partition(const std::vector<std::uint64_t>& xs, std::uint64_t t_sum);

/// Partition reduction targeting makespan: requests (x_i, 1) with sum = 2T.
/// The memory limit is T plus the two decode tokens of a balanced pair-slot.
Instance gen_partition_makespan(const std::vector<std::uint64_t>& xs, std::uint64_t t_sum);

/// n requests drawn from `spec`; ids are 0..n-1 in draw order.
Instance gen_synthetic(const DistributionSpec& spec, std::size_t n, Tokens memory_limit);

/// Instance JSON: {"memory_limit": int, "requests": [{"id","s","o"}...]}.
Instance load_instance_json(const std::string& path);
void save_instance_json(const Instance& instance, const std::string& path);

/// Schedule JSON: {"starts": {"<id>": int}}.
StartSchedule load_schedule_json(const std::string& path);
void save_schedule_json(const StartSchedule& schedule, const std::string& path);

/// CSV trace with header "s,o", one request per row, ids assigned by row
/// index. Malformed or invalid rows report their line number.
Instance load_trace_csv(const std::string& path, Tokens memory_limit);
void save_trace_csv(const Instance& instance, const std::string& path);

}  // namespace kvsched
