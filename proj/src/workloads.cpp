#include "kvsched/workloads.hpp"

#include "kvsched/rng.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace kvsched {

namespace {

std::uint64_t isqrt_exact(Tokens m) {
    const auto root = static_cast<std::uint64_t>(std::llround(std::sqrt(static_cast<double>(m))));
    if (root * root != m) {
        throw ValidationError("memory limit " + std::to_string(m) + " is not a perfect square");
    }
    return root;
}

void check_adversarial_budget(Tokens m) {
    if (m < 4) {
        throw ValidationError("adversarial instances need M >= 4");
    }
    if (m > 2500) {
        throw ValidationError("adversarial instances are capped at M = 2500 (M^1.5 requests)");
    }
}

double clip(double x, double lo, double hi) { return std::min(hi, std::max(lo, x)); }

Tokens round_half_up(double x) { return static_cast<Tokens>(std::floor(x + 0.5)); }

struct Sampler {
    const DistributionSpec& spec;
    SplitMix64 rng;

    explicit Sampler(const DistributionSpec& s) : spec(s), rng(s.seed) {}

    double standard_normal() {
        const double u1 = 1.0 - rng.next_double();  // (0, 1]
        const double u2 = rng.next_double();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    double exponential(double scale) { return -scale * std::log(1.0 - rng.next_double()); }

    double raw_plain(DistributionKind kind) {
        switch (kind) {
            case DistributionKind::uniform:
                return spec.uniform_lo + rng.next_double() * (spec.uniform_hi - spec.uniform_lo);
            case DistributionKind::normal:
                return spec.normal_mu + spec.normal_sigma * standard_normal();
            case DistributionKind::binomial: {
                std::uint64_t successes = 0;
                for (std::uint64_t i = 0; i < spec.binomial_n; ++i) {
                    if (rng.next_double() < spec.binomial_p) {
                        ++successes;
                    }
                }
                return static_cast<double>(successes + 1);
            }
            case DistributionKind::exponential:
                return exponential(spec.exp_scale);
            case DistributionKind::mixed:
                break;
        }
        throw std::logic_error("raw_plain called with mixed kind");
    }

    double raw_mixed_s() {
        double raw;
        if (rng.next_double() < 0.8) {
            raw = exponential(spec.mixed_exp_scale);
        } else {
            raw = std::exp(spec.mixed_lognormal_mu + spec.mixed_lognormal_sigma * standard_normal());
        }
        if (raw > spec.clip_hi) {
            raw = 40.0 + rng.next_double() * 10.0;
        }
        return raw;
    }

    Tokens finish(double raw) { return round_half_up(clip(raw, spec.clip_lo, spec.clip_hi)); }

    std::pair<Tokens, Tokens> draw_pair() {
        if (spec.kind == DistributionKind::mixed) {
            return {finish(raw_mixed_s()), finish(exponential(spec.exp_scale))};
        }
        return {finish(raw_plain(spec.kind)), finish(raw_plain(spec.kind))};
    }
};

}  // namespace

const char* distribution_kind_name(DistributionKind kind) {
    switch (kind) {
        case DistributionKind::uniform: return "uniform";
        case DistributionKind::normal: return "normal";
        case DistributionKind::binomial: return "binomial";
        case DistributionKind::exponential: return "exponential";
        case DistributionKind::mixed: return "mixed";
    }
    return "unknown";
}

DistributionKind distribution_kind_from_name(const std::string& name) {
    if (name == "uniform") return DistributionKind::uniform;
    if (name == "normal") return DistributionKind::normal;
    if (name == "binomial") return DistributionKind::binomial;
    if (name == "exponential") return DistributionKind::exponential;
    if (name == "mixed") return DistributionKind::mixed;
    throw std::invalid_argument("unknown distribution: " + name);
}

Instance gen_adversarial_sf(Tokens memory_limit) {
    check_adversarial_budget(memory_limit);
    const std::uint64_t root = isqrt_exact(memory_limit);
    std::vector<Request> requests;
    requests.reserve(memory_limit + memory_limit * root);
    RequestId id = 0;
    for (std::uint64_t i = 0; i < memory_limit; ++i) {
        requests.push_back({id++, root - 1, 1});
    }
    for (std::uint64_t i = 0; i < memory_limit * root; ++i) {
        requests.push_back({id++, 1, 2});
    }
    return Instance(std::move(requests), memory_limit);
}

Instance gen_adversarial_sf2(Tokens memory_limit) {
    check_adversarial_budget(memory_limit);
    const std::uint64_t root = isqrt_exact(memory_limit);
    std::vector<Request> requests;
    requests.reserve(memory_limit + memory_limit * root);
    RequestId id = 0;
    for (std::uint64_t i = 0; i < memory_limit; ++i) {
        requests.push_back({id++, 1, root - 1});
    }
    for (std::uint64_t i = 0; i < memory_limit * root; ++i) {
        requests.push_back({id++, root, 1});
    }
    return Instance(std::move(requests), memory_limit);
}

Instance gen_3partition(const std::vector<std::uint64_t>& xs, std::uint64_t t_sum) {
    if (xs.empty() || xs.size() % 3 != 0) {
        throw ValidationError("3-partition needs |xs| = 3m, got " + std::to_string(xs.size()));
    }
    const std::uint64_t m = xs.size() / 3;
    std::uint64_t total = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const std::uint64_t x = xs[i];
        if (4 * x < t_sum) {
            throw ValidationError("x[" + std::to_string(i) + "] = " + std::to_string(x) +
                                  " is below T/4");
        }
        if (2 * x >= t_sum) {
            throw ValidationError("x[" + std::to_string(i) + "] = " + std::to_string(x) +
                                  " is not below T/2");
        }
        total += x;
    }
    if (total != m * t_sum) {
        throw ValidationError("xs sum to " + std::to_string(total) + ", expected m*T = " +
                              std::to_string(m * t_sum));
    }
    // M = T + 3: a triple occupies sum(x) plus one decode token per member at
    // its single decode step, so triples fit exactly when sum(x) <= T.
    std::vector<Request> requests;
    requests.reserve(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        requests.push_back({i, xs[i], 1});
    }
    return Instance(std::move(requests), t_sum + 3);
}

Instance gen_partition_makespan(const std::vector<std::uint64_t>& xs, std::uint64_t t_sum) {
    std::uint64_t total = 0;
    for (std::uint64_t x : xs) {
        total += x;
    }
    if (total != 2 * t_sum) {
        throw ValidationError("xs sum to " + std::to_string(total) + ", expected 2T = " +
                              std::to_string(2 * t_sum));
    }
    // M = T + 2: a balanced pair-slot occupies its sum plus one decode token
    // per member.
    std::vector<Request> requests;
    requests.reserve(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        requests.push_back({i, xs[i], 1});
    }
    return Instance(std::move(requests), t_sum + 2);
}

Instance gen_synthetic(const DistributionSpec& spec, std::size_t n, Tokens memory_limit) {
    Sampler sampler(spec);
    std::vector<Request> requests;
    requests.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::pair<Tokens, Tokens> pair{0, 0};
        bool ok = false;
        for (int attempt = 0; attempt < 10000; ++attempt) {
            pair = sampler.draw_pair();
            if (pair.first + pair.second <= memory_limit) {
                ok = true;
                break;
            }
        }
        if (!ok) {
            throw ValidationError("memory limit " + std::to_string(memory_limit) +
                                  " cannot accommodate draws from this distribution");
        }
        requests.push_back({i, pair.first, pair.second});
    }
    return Instance(std::move(requests), memory_limit);
}

Instance load_instance_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open " + path);
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path + ": " + e.what());
    }
    std::vector<Request> requests;
    for (const auto& r : j.at("requests")) {
        requests.push_back({r.at("id").get<RequestId>(), r.at("s").get<Tokens>(),
                            r.at("o").get<Tokens>()});
    }
    return Instance(std::move(requests), j.at("memory_limit").get<Tokens>());
}

void save_instance_json(const Instance& instance, const std::string& path) {
    nlohmann::json j;
    j["memory_limit"] = instance.memory_limit();
    j["requests"] = nlohmann::json::array();
    for (const Request& r : instance.requests()) {
        j["requests"].push_back({{"id", r.id}, {"s", r.s}, {"o", r.o}});
    }
    std::ofstream out(path);
    if (!out) {
        throw ValidationError("cannot write " + path);
    }
    out << j.dump(2) << '\n';
}

StartSchedule load_schedule_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open " + path);
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path + ": " + e.what());
    }
    StartSchedule schedule;
    for (const auto& [key, value] : j.at("starts").items()) {
        schedule.starts[std::stoull(key)] = value.get<Time>();
    }
    return schedule;
}

void save_schedule_json(const StartSchedule& schedule, const std::string& path) {
    nlohmann::json starts = nlohmann::json::object();
    for (const auto& [id, p] : schedule.starts) {
        starts[std::to_string(id)] = p;
    }
    nlohmann::json j;
    j["starts"] = std::move(starts);
    std::ofstream out(path);
    if (!out) {
        throw ValidationError("cannot write " + path);
    }
    out << j.dump(2) << '\n';
}

Instance load_trace_csv(const std::string& path, Tokens memory_limit) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open " + path);
    }
    std::string line;
    if (!std::getline(in, line) || line != "s,o") {
        throw ValidationError(path + ":1: expected header \"s,o\"");
    }
    std::vector<Request> requests;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw ValidationError(path + ":" + std::to_string(line_no) + ": expected \"s,o\" row");
        }
        Tokens s = 0;
        Tokens o = 0;
        try {
            s = std::stoull(line.substr(0, comma));
            o = std::stoull(line.substr(comma + 1));
        } catch (const std::exception&) {
            throw ValidationError(path + ":" + std::to_string(line_no) + ": malformed row \"" +
                                  line + "\"");
        }
        if (s < 1 || o < 1) {
            throw ValidationError(path + ":" + std::to_string(line_no) +
                                  ": s and o must be >= 1");
        }
        if (s + o > memory_limit) {
            throw ValidationError(path + ":" + std::to_string(line_no) + ": s + o = " +
                                  std::to_string(s + o) + " exceeds memory limit " +
                                  std::to_string(memory_limit));
        }
        requests.push_back({requests.size(), s, o});
    }
    return Instance(std::move(requests), memory_limit);
}

void save_trace_csv(const Instance& instance, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw ValidationError("cannot write " + path);
    }
    out << "s,o\n";
    for (const Request& r : instance.requests()) {
        out << r.s << ',' << r.o << '\n';
    }
}

}  // namespace kvsched
