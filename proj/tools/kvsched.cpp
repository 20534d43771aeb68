#include "kvsched/lp.hpp"
#include "kvsched/schedulers.hpp"
#include "kvsched/selectors.hpp"
#include "kvsched/sim.hpp"
#include "kvsched/verify.hpp"
#include "kvsched/workloads.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <thread>

namespace {

using nlohmann::json;
using namespace kvsched;

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 1;
constexpr int kExitVerifyFailure = 2;
constexpr int kExitRuntimeError = 3;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

Rational parse_decimal(const std::string& text) {
    const auto dot = text.find('.');
    try {
        if (dot == std::string::npos) {
            return {std::stoull(text), 1};
        }
        const std::string whole = text.substr(0, dot);
        const std::string frac = text.substr(dot + 1);
        if (frac.empty() || frac.size() > 18) {
            throw ConfigError("cannot parse decimal: " + text);
        }
        std::uint64_t den = 1;
        for (std::size_t i = 0; i < frac.size(); ++i) {
            den *= 10;
        }
        const std::uint64_t num =
            (whole.empty() ? 0 : std::stoull(whole)) * den + std::stoull(frac);
        return {num, den};
    } catch (const std::exception&) {
        throw ConfigError("cannot parse decimal: " + text);
    }
}

SelectorConfig selector_from_json(const json& j, std::uint64_t default_seed) {
    SelectorConfig config;
    config.seed = default_seed;
    if (j.contains("kind")) {
        config.kind = selector_kind_from_name(j.at("kind").get<std::string>());
    }
    if (j.contains("epsilon")) {
        if (j.at("epsilon").is_string()) {
            config.epsilon = parse_decimal(j.at("epsilon").get<std::string>());
        } else {
            config.epsilon = parse_decimal(std::to_string(j.at("epsilon").get<double>()));
        }
    }
    if (j.contains("precision_b")) {
        config.precision_b = j.at("precision_b").get<std::uint64_t>();
    }
    if (j.contains("sample_fraction")) {
        config.sample_fraction = parse_decimal(j.at("sample_fraction").get<std::string>());
    }
    if (j.contains("quantile_p")) {
        config.quantile_p = parse_decimal(j.at("quantile_p").get<std::string>());
    }
    if (j.contains("seed")) {
        config.seed = j.at("seed").get<std::uint64_t>();
    }
    return config;
}

struct NamedScheduler {
    std::string name;
    SchedulerSpec spec;
};

NamedScheduler scheduler_from_json(const json& j, std::uint64_t seed) {
    NamedScheduler named;
    named.spec.kind = scheduler_kind_from_name(j.at("kind").get<std::string>());
    named.name = scheduler_kind_name(named.spec.kind);
    if (j.contains("selector")) {
        named.spec.selector = selector_from_json(j.at("selector"), seed);
        if (named.spec.kind == SchedulerKind::sorted_f) {
            named.name += std::string(":") + selector_kind_name(named.spec.selector.kind);
        }
    } else if (named.spec.kind == SchedulerKind::sorted_f) {
        named.spec.selector.kind = SelectorKind::local_swap;
        named.spec.selector.seed = seed;
        named.name += ":local_swap";
    }
    if (j.contains("horizon")) {
        named.spec.horizon_override = j.at("horizon").get<Time>();
    }
    if (j.contains("lp_max_cells")) {
        named.spec.lp_max_cells = j.at("lp_max_cells").get<std::size_t>();
    }
    return named;
}

DistributionSpec distribution_from_json(const json& j, std::uint64_t seed) {
    DistributionSpec spec;
    spec.kind = distribution_kind_from_name(j.at("kind").get<std::string>());
    spec.seed = j.value("seed", seed);
    if (j.contains("uniform_lo")) spec.uniform_lo = j.at("uniform_lo").get<double>();
    if (j.contains("uniform_hi")) spec.uniform_hi = j.at("uniform_hi").get<double>();
    if (j.contains("normal_mu")) spec.normal_mu = j.at("normal_mu").get<double>();
    if (j.contains("normal_sigma")) spec.normal_sigma = j.at("normal_sigma").get<double>();
    if (j.contains("exp_scale")) spec.exp_scale = j.at("exp_scale").get<double>();
    return spec;
}

// Generator spec -> instance, plus a note for reduction instances.
Instance instance_from_generator(const json& j, std::uint64_t seed, std::string* note) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "adversarial_sf") {
        return gen_adversarial_sf(j.at("memory_limit").get<Tokens>());
    }
    if (kind == "adversarial_sf2") {
        return gen_adversarial_sf2(j.at("memory_limit").get<Tokens>());
    }
    if (kind == "3partition") {
        const auto xs = j.at("xs").get<std::vector<std::uint64_t>>();
        const auto t_sum = j.at("T").get<std::uint64_t>();
        Instance inst = gen_3partition(xs, t_sum);
        if (note != nullptr) {
            const std::uint64_t m = xs.size() / 3;
            *note = "solvable 3-partition optimum: 3m(m+1)/2 = " +
                    std::to_string(3 * m * (m + 1) / 2);
        }
        return inst;
    }
    if (kind == "partition_makespan") {
        return gen_partition_makespan(j.at("xs").get<std::vector<std::uint64_t>>(),
                                      j.at("T").get<std::uint64_t>());
    }
    // Synthetic distributions.
    DistributionSpec spec = distribution_from_json(j, seed);
    return gen_synthetic(spec, j.at("n").get<std::size_t>(), j.at("memory_limit").get<Tokens>());
}

Instance instance_from_config(const json& config, std::uint64_t seed, std::string* note) {
    if (!config.contains("instance")) {
        throw ConfigError("config needs an \"instance\" section");
    }
    const json& inst = config.at("instance");
    if (inst.contains("file")) {
        return load_instance_json(inst.at("file").get<std::string>());
    }
    if (inst.contains("trace")) {
        if (!inst.contains("memory_limit")) {
            throw ConfigError("trace ingestion needs \"memory_limit\"");
        }
        return load_trace_csv(inst.at("trace").get<std::string>(),
                              inst.at("memory_limit").get<Tokens>());
    }
    if (inst.contains("generator")) {
        return instance_from_generator(inst.at("generator"), seed, note);
    }
    throw ConfigError("instance section needs \"file\", \"trace\" or \"generator\"");
}

json load_config(const std::string& path) {
    if (path.empty()) {
        return json::object();
    }
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config " + path);
    }
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    return j;
}

Instance subsample(const Instance& instance, std::size_t n) {
    if (n > instance.size()) {
        throw ConfigError("subsample size " + std::to_string(n) + " exceeds instance size " +
                          std::to_string(instance.size()));
    }
    std::vector<Request> requests(instance.requests().begin(),
                                  instance.requests().begin() + static_cast<std::ptrdiff_t>(n));
    return Instance(std::move(requests), instance.memory_limit());
}

struct RunCell {
    NamedScheduler scheduler;
    std::size_t size = 0;
    bool ok = false;
    Metrics metrics;
    std::uint64_t wall_ms = 0;
    std::string error;
};

int cmd_generate(const json& config, const std::string& out_dir, const std::string& lp_text) {
    std::string note;
    Instance inst = instance_from_config(config, config.value("seed", 1ULL), &note);
    std::filesystem::create_directories(out_dir);
    const std::string name = config.value("name", std::string("instance"));
    const std::string path = (std::filesystem::path(out_dir) / (name + ".json")).string();
    save_instance_json(inst, path);
    std::cout << "wrote " << path << " (" << inst.size() << " requests, M = "
              << inst.memory_limit() << ")\n";
    if (!note.empty()) {
        std::cout << note << "\n";
    }
    if (!lp_text.empty()) {
        std::ofstream lp(lp_text);
        if (!lp) {
            throw std::runtime_error("cannot write " + lp_text);
        }
        write_lp_text(build_model(inst), lp);
        std::cout << "wrote " << lp_text << "\n";
    }
    return kExitOk;
}

int cmd_run(const json& config, const std::string& out_dir, int jobs,
            const std::string& trace_dir) {
    const std::uint64_t seed = config.value("seed", 1ULL);
    std::string note;
    Instance base = instance_from_config(config, seed, &note);

    const char* scheduler_key =
        config.contains("schedulers") ? "schedulers" : "scheduler";
    if (!config.contains(scheduler_key) || config.at(scheduler_key).empty()) {
        throw ConfigError("config needs a nonempty \"schedulers\" list");
    }
    std::vector<NamedScheduler> schedulers;
    for (const json& j : config.at(scheduler_key)) {
        schedulers.push_back(scheduler_from_json(j, seed));
    }

    ExecutionPolicy policy;
    if (config.contains("admission")) {
        const std::string admission = config.at("admission").get<std::string>();
        if (admission == "skip_scan") {
            policy.admission = AdmissionPolicy::skip_scan;
        } else if (admission != "prefix_blocking") {
            throw ConfigError("admission must be prefix_blocking or skip_scan");
        }
    }

    std::vector<std::size_t> sizes;
    if (config.contains("sizes")) {
        sizes = config.at("sizes").get<std::vector<std::size_t>>();
    } else {
        sizes.push_back(base.size());
    }

    std::vector<RunCell> cells;
    for (const NamedScheduler& sched : schedulers) {
        for (std::size_t n : sizes) {
            if (n > base.size()) {
                throw ConfigError("size " + std::to_string(n) + " exceeds instance size " +
                                  std::to_string(base.size()));
            }
            cells.push_back({sched, n, false, {}, 0, {}});
        }
    }

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        while (true) {
            const std::size_t at = next.fetch_add(1);
            if (at >= cells.size()) {
                return;
            }
            RunCell& cell = cells[at];
            try {
                Instance inst = subsample(base, cell.size);
                const auto t0 = std::chrono::steady_clock::now();
                SchedulerRun run = run_scheduler(inst, cell.scheduler.spec, policy);
                cell.wall_ms = static_cast<std::uint64_t>(
                    std::chrono::duration_cast<std::chrono::milliseconds>(
                        std::chrono::steady_clock::now() - t0)
                        .count());
                cell.metrics = run.metrics;
                cell.ok = true;
                if (!trace_dir.empty()) {
                    std::filesystem::create_directories(trace_dir);
                    std::string name = cell.scheduler.name;
                    std::replace(name.begin(), name.end(), ':', '_');
                    std::ofstream trace((std::filesystem::path(trace_dir) /
                                         (name + "_n" + std::to_string(cell.size) + ".csv"))
                                            .string());
                    write_trace_csv(run.trace, trace);
                }
            } catch (const std::exception& e) {
                cell.error = e.what();
            }
        }
    };
    std::vector<std::thread> threads;
    for (int i = 0; i < std::max(1, jobs); ++i) {
        threads.emplace_back(worker);
    }
    for (auto& t : threads) {
        t.join();
    }

    std::stable_sort(cells.begin(), cells.end(), [](const RunCell& a, const RunCell& b) {
        if (a.scheduler.name != b.scheduler.name) {
            return a.scheduler.name < b.scheduler.name;
        }
        return a.size < b.size;
    });

    std::filesystem::create_directories(out_dir);
    const std::string csv_path = (std::filesystem::path(out_dir) / "results.csv").string();
    std::ofstream csv(csv_path);
    if (!csv) {
        throw std::runtime_error("cannot write " + csv_path);
    }
    csv << "scheduler,n,tel,mean_latency,makespan,utilization,wall_ms\n";
    char buffer[64];
    for (const RunCell& cell : cells) {
        if (!cell.ok) {
            csv << "# error scheduler=" << cell.scheduler.name << " n=" << cell.size
                << " message=" << cell.error << "\n";
            continue;
        }
        std::snprintf(buffer, sizeof(buffer), "%.6f", cell.metrics.mean_latency);
        csv << cell.scheduler.name << ',' << cell.size << ',' << cell.metrics.tel << ','
            << buffer << ',' << cell.metrics.makespan << ',';
        std::snprintf(buffer, sizeof(buffer), "%.6f", cell.metrics.mean_utilization);
        csv << buffer << ',' << cell.wall_ms << '\n';
    }

    const std::string log_path = (std::filesystem::path(out_dir) / "run.log").string();
    std::ofstream log(log_path, std::ios::app);
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    log << "run finished at " << now << " cells=" << cells.size() << " seed=" << seed << "\n";

    std::cout << "wrote " << csv_path << " (" << cells.size() << " cells)\n";
    bool any_error = false;
    for (const RunCell& cell : cells) {
        if (!cell.ok) {
            std::cerr << "cell failed: " << cell.scheduler.name << " n=" << cell.size << ": "
                      << cell.error << "\n";
            any_error = true;
        }
    }
    return any_error ? kExitRuntimeError : kExitOk;
}

struct ResultRow {
    std::string scheduler;
    std::size_t n = 0;
    std::uint64_t tel = 0;
    double mean_latency = 0.0;
};

std::vector<ResultRow> read_results(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open results file " + path);
    }
    std::string line;
    if (!std::getline(in, line) ||
        line != "scheduler,n,tel,mean_latency,makespan,utilization,wall_ms") {
        throw ConfigError(path + ": unexpected results schema");
    }
    std::vector<ResultRow> rows;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') {
            continue;
        }
        ResultRow row;
        std::istringstream ss(line);
        std::string field;
        std::getline(ss, row.scheduler, ',');
        std::getline(ss, field, ',');
        row.n = std::stoull(field);
        std::getline(ss, field, ',');
        row.tel = std::stoull(field);
        std::getline(ss, field, ',');
        row.mean_latency = std::stod(field);
        rows.push_back(row);
    }
    return rows;
}

int cmd_compare(const std::vector<std::string>& files, const std::string& baseline) {
    std::vector<ResultRow> rows;
    for (const std::string& file : files) {
        auto part = read_results(file);
        rows.insert(rows.end(), part.begin(), part.end());
    }
    if (rows.empty()) {
        throw ConfigError("no result rows to compare");
    }
    const std::string base = baseline.empty() ? rows.front().scheduler : baseline;
    std::map<std::size_t, std::uint64_t> base_tel;
    for (const ResultRow& row : rows) {
        if (row.scheduler == base) {
            base_tel[row.n] = row.tel;
        }
    }
    if (base_tel.empty()) {
        throw ConfigError("baseline scheduler \"" + base + "\" not present in the results");
    }

    std::stable_sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
        if (a.scheduler != b.scheduler) {
            return a.scheduler < b.scheduler;
        }
        return a.n < b.n;
    });
    std::cout << "| scheduler | n | tel | mean_latency | tel_ratio_vs_" << base << " |\n";
    std::cout << "|---|---|---|---|---|\n";
    char buffer[64];
    for (const ResultRow& row : rows) {
        auto it = base_tel.find(row.n);
        if (it == base_tel.end()) {
            throw ConfigError("baseline has no row for n=" + std::to_string(row.n));
        }
        std::snprintf(buffer, sizeof(buffer), "%.4f",
                      static_cast<double>(row.tel) / static_cast<double>(it->second));
        std::cout << "| " << row.scheduler << " | " << row.n << " | " << row.tel << " | "
                  << row.mean_latency << " | " << buffer << " |\n";
    }
    return kExitOk;
}

int cmd_verify(const std::string& suite, int jobs) {
    const auto result = verify::run_suite(suite, jobs);
    for (const auto& check : result.checks) {
        std::cout << (check.passed ? "[PASS] " : "[FAIL] ") << result.suite << "." << check.name
                  << " " << check.details << "\n";
    }
    std::cout << "RESULT " << result.suite << " " << (result.passed() ? "PASS" : "FAIL") << "\n";
    return result.passed() ? kExitOk : kExitVerifyFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"memory-constrained LLM inference scheduling toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    std::uint64_t seed_flag = 0;
    bool seed_set = false;
    int jobs = 2;
    if (const char* env_jobs = std::getenv("KVSCHED_JOBS")) {
        jobs = std::max(1, std::atoi(env_jobs));
    }
    std::vector<std::string> scheduler_flags;
    std::string selector_flag;
    std::string epsilon_flag;
    std::uint64_t horizon_flag = 0;
    bool horizon_set = false;
    std::string trace_dir;
    std::string lp_text;

    app.add_option("--config", config_path, "JSON config file");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--trace-dir", trace_dir, "also write per-cell step traces here (run)");
    app.add_option("--lp-text", lp_text, "also export the instance's LP model here (generate)");
    app.add_option_function<std::uint64_t>(
        "--seed", [&](std::uint64_t v) { seed_flag = v; seed_set = true; }, "RNG seed");
    app.add_option("--jobs", jobs, "parallel cells (default $KVSCHED_JOBS or 2)");
    app.add_option("--scheduler", scheduler_flags, "scheduler kind (repeatable)");
    app.add_option("--selector", selector_flag, "selector for sorted_f");
    app.add_option("--epsilon", epsilon_flag, "selector epsilon (decimal)");
    app.add_option_function<std::uint64_t>(
        "--horizon", [&](std::uint64_t v) { horizon_flag = v; horizon_set = true; },
        "LP horizon override");

    auto* generate = app.add_subcommand("generate", "write an instance file");
    auto* run = app.add_subcommand("run", "run a scheduler suite and emit results.csv");
    auto* compare = app.add_subcommand("compare", "join result files into a ratio table");
    auto* verify_cmd = app.add_subcommand("verify", "run a verification suite");
    for (CLI::App* sub : {generate, run, compare, verify_cmd}) {
        sub->fallthrough();
    }

    std::vector<std::string> compare_files;
    std::string baseline;
    compare->add_option("files", compare_files, "results.csv files")->required();
    compare->add_option("--baseline", baseline, "baseline scheduler name");

    std::string suite;
    verify_cmd->add_option("suite", suite, "one of: example1 lemma1 adversarial np_reduction cr_bound lp_chain separate_bound")
        ->required();

    CLI11_PARSE(app, argc, argv);

    try {
        json config = load_config(config_path);
        if (seed_set) {
            config["seed"] = seed_flag;
        }
        if (!scheduler_flags.empty()) {
            json list = json::array();
            for (const std::string& name : scheduler_flags) {
                json spec;
                spec["kind"] = name;
                if (!selector_flag.empty() && name == "sorted_f") {
                    spec["selector"] = {{"kind", selector_flag}};
                    if (!epsilon_flag.empty()) {
                        spec["selector"]["epsilon"] = epsilon_flag;
                    }
                }
                if (horizon_set && (name == "sorted_lp" || name == "lp_swap")) {
                    spec["horizon"] = horizon_flag;
                }
                list.push_back(spec);
            }
            config["schedulers"] = list;
        }

        if (generate->parsed()) {
            return cmd_generate(config, out_dir, lp_text);
        }
        if (run->parsed()) {
            return cmd_run(config, out_dir, jobs, trace_dir);
        }
        if (compare->parsed()) {
            return cmd_compare(compare_files, baseline);
        }
        if (verify_cmd->parsed()) {
            return cmd_verify(suite, jobs);
        }
        return kExitConfigError;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return kExitRuntimeError;
    }
}
