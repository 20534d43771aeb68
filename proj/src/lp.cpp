#include "kvsched/lp.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

namespace kvsched {

std::uint64_t IpModel::objective_constant() const {
    std::uint64_t sum = 0;
    for (const Request& r : requests) {
        sum += r.o;
    }
    return sum;
}

Tokens IpModel::memory_coefficient(Time t, std::size_t i, Time k) const {
    if (t < 1 || t > horizon || k >= t) {
        return 0;
    }
    const Request& r = requests[i];
    if (t > k + r.o) {
        return 0;
    }
    return r.s + (t - k);
}

Tokens IpModel::row_activity(Time t, const StartSchedule& schedule) const {
    Tokens activity = 0;
    for (std::size_t i = 0; i < requests.size(); ++i) {
        activity += memory_coefficient(t, i, schedule.start_of(requests[i].id));
    }
    return activity;
}

Time default_horizon(const Instance& instance) {
    Time sum = 0;
    for (const Request& r : instance.requests()) {
        sum += r.o;
    }
    return sum;
}

IpModel build_model(const Instance& instance, std::optional<Time> horizon_override) {
    Time max_o = 0;
    for (const Request& r : instance.requests()) {
        max_o = std::max(max_o, r.o);
    }
    IpModel model;
    model.requests = instance.requests();
    model.memory_limit = instance.memory_limit();
    if (horizon_override) {
        if (*horizon_override < max_o) {
            throw ValidationError("horizon " + std::to_string(*horizon_override) +
                                  " is below the longest output " + std::to_string(max_o));
        }
        model.horizon = *horizon_override;
    } else {
        model.horizon = default_horizon(instance);
    }
    return model;
}

namespace {

// Primal simplex in revised form. Rows: n start-once equalities then
// `horizon` memory rows with slacks. Columns of x[i][k] are generated from
// (i, k); the dense basis inverse is updated by row operations each pivot.
class Simplex {
public:
    Simplex(const IpModel& model, const LpOptions& options)
        : model_(model),
          n_(model.requests.size()),
          horizon_(model.horizon),
          m_(n_ + horizon_),
          nx_(n_ * (horizon_ + 1)),
          num_vars_(nx_ + horizon_) {
        binv_.assign(m_ * m_, 0.0);
        x_b_.assign(m_, 0.0);
        basis_.assign(m_, 0);
        pos_in_basis_.assign(num_vars_, -1);
        b_.assign(m_, 0.0);
        for (std::size_t i = 0; i < n_; ++i) {
            b_[i] = 1.0;
        }
        for (std::size_t t = 1; t <= horizon_; ++t) {
            b_[n_ + t - 1] = static_cast<double>(model_.memory_limit);
        }
        if (options.warm_start != nullptr && !init_warm(*options.warm_start)) {
            init_cold();
        } else if (options.warm_start == nullptr) {
            init_cold();
        }
        max_iterations_ = options.max_iterations != 0
                              ? options.max_iterations
                              : 20'000 + 20 * m_;
    }

    LpSolution run() {
        const double entering_tol = 1e-6;
        std::size_t iterations = 0;
        std::size_t stall = 0;
        bool bland = false;
        double last_objective = current_objective();

        while (true) {
            if (iterations > max_iterations_) {
                throw std::runtime_error("LP did not converge within " +
                                         std::to_string(max_iterations_) + " iterations");
            }
            ++iterations;

            compute_duals();
            const std::ptrdiff_t entering = price(entering_tol, bland);
            if (entering < 0) {
                break;  // optimal
            }

            std::vector<double> direction(m_, 0.0);
            ftran(static_cast<std::size_t>(entering), direction);

            // Ratio test: smallest theta, ties to the smallest leaving index.
            std::ptrdiff_t leave = -1;
            double theta = 0.0;
            for (std::size_t r = 0; r < m_; ++r) {
                if (direction[r] > 1e-9) {
                    const double ratio = std::max(x_b_[r], 0.0) / direction[r];
                    if (leave < 0 || ratio < theta - 1e-12 ||
                        (ratio < theta + 1e-12 && basis_[r] < basis_[leave])) {
                        leave = static_cast<std::ptrdiff_t>(r);
                        theta = ratio;
                    }
                }
            }
            if (leave < 0) {
                throw std::runtime_error("LP relaxation is unbounded (broken model)");
            }
            pivot(static_cast<std::size_t>(entering), static_cast<std::size_t>(leave), direction);

            const double objective = current_objective();
            if (objective < last_objective - 1e-10) {
                stall = 0;
                last_objective = objective;
            } else if (++stall > 4 * m_ + 200) {
                bland = true;  // anti-cycling fallback
            }

            if (iterations % 512 == 0 && residual_infnorm() > 1e-7) {
                refactorize();
            }
        }

        return extract(iterations);
    }

private:
    // Variable layout: x[i][k] -> i*(horizon+1)+k, slack(t) -> nx_ + t - 1.
    std::size_t xvar(std::size_t i, Time k) const { return i * (horizon_ + 1) + k; }
    bool is_slack(std::size_t var) const { return var >= nx_; }
    Time slack_row_time(std::size_t var) const { return var - nx_ + 1; }

    double cost(std::size_t var) const {
        if (is_slack(var)) {
            return 0.0;
        }
        return static_cast<double>(var % (horizon_ + 1));
    }

    void set_basis(std::size_t row, std::size_t var) {
        basis_[row] = var;
        pos_in_basis_[var] = static_cast<std::ptrdiff_t>(row);
    }

    void init_cold() {
        std::fill(binv_.begin(), binv_.end(), 0.0);
        for (std::size_t r = 0; r < m_; ++r) {
            binv_[r * m_ + r] = 1.0;
        }
        for (std::size_t i = 0; i < n_; ++i) {
            set_basis(i, xvar(i, horizon_));
        }
        for (std::size_t t = 1; t <= horizon_; ++t) {
            set_basis(n_ + t - 1, nx_ + t - 1);
        }
        x_b_ = b_;
    }

    // Basis from an integral schedule: x[i][p_i] plus all slacks. With rows
    // (conv, mem) and columns (x, slacks) the basis is block lower triangular
    // with unit diagonal, so its inverse is written down directly.
    bool init_warm(const StartSchedule& schedule) {
        std::vector<Time> starts(n_, 0);
        for (std::size_t i = 0; i < n_; ++i) {
            auto it = schedule.starts.find(model_.requests[i].id);
            if (it == schedule.starts.end()) {
                return false;
            }
            starts[i] = std::min<Time>(it->second, horizon_);
        }
        std::vector<double> slack(horizon_ + 1, 0.0);
        for (std::size_t t = 1; t <= horizon_; ++t) {
            double activity = 0.0;
            for (std::size_t i = 0; i < n_; ++i) {
                activity += static_cast<double>(model_.memory_coefficient(t, i, starts[i]));
            }
            slack[t] = static_cast<double>(model_.memory_limit) - activity;
            if (slack[t] < 0.0) {
                return false;  // not feasible for this horizon; use cold start
            }
        }

        std::fill(binv_.begin(), binv_.end(), 0.0);
        for (std::size_t r = 0; r < m_; ++r) {
            binv_[r * m_ + r] = 1.0;
        }
        for (std::size_t i = 0; i < n_; ++i) {
            set_basis(i, xvar(i, starts[i]));
            x_b_[i] = 1.0;
            const Time e = std::min<Time>(starts[i] + model_.requests[i].o, horizon_);
            for (Time t = starts[i] + 1; t <= e; ++t) {
                binv_[(n_ + t - 1) * m_ + i] =
                    -static_cast<double>(model_.memory_coefficient(t, i, starts[i]));
            }
        }
        for (std::size_t t = 1; t <= horizon_; ++t) {
            set_basis(n_ + t - 1, nx_ + t - 1);
            x_b_[n_ + t - 1] = slack[t];
        }
        return true;
    }

    double current_objective() const {
        double obj = 0.0;
        for (std::size_t r = 0; r < m_; ++r) {
            obj += cost(basis_[r]) * x_b_[r];
        }
        return obj;
    }

    void compute_duals() {
        duals_.assign(m_, 0.0);
        for (std::size_t r = 0; r < m_; ++r) {
            const double c = cost(basis_[r]);
            if (c == 0.0) {
                continue;
            }
            const double* row = &binv_[r * m_];
            for (std::size_t j = 0; j < m_; ++j) {
                duals_[j] += c * row[j];
            }
        }
        // Prefix sums over memory duals for O(1) column pricing:
        // P[t] = sum_{tau<=t} y_mem[tau], Q[t] = sum tau*y_mem[tau].
        prefix_y_.assign(horizon_ + 1, 0.0);
        prefix_ty_.assign(horizon_ + 1, 0.0);
        for (Time t = 1; t <= horizon_; ++t) {
            prefix_y_[t] = prefix_y_[t - 1] + duals_[n_ + t - 1];
            prefix_ty_[t] = prefix_ty_[t - 1] + static_cast<double>(t) * duals_[n_ + t - 1];
        }
    }

    double reduced_cost(std::size_t var) const {
        if (is_slack(var)) {
            return -duals_[n_ + slack_row_time(var) - 1];
        }
        const std::size_t i = var / (horizon_ + 1);
        const Time k = var % (horizon_ + 1);
        const Request& r = model_.requests[i];
        const Time e = std::min<Time>(k + r.o, horizon_);
        const double py = prefix_y_[e] - prefix_y_[k];
        const double qy = prefix_ty_[e] - prefix_ty_[k];
        return static_cast<double>(k) - duals_[i] -
               ((static_cast<double>(r.s) - static_cast<double>(k)) * py + qy);
    }

    std::ptrdiff_t price(double tol, bool bland) const {
        std::ptrdiff_t best = -1;
        double best_rc = -tol;
        for (std::size_t var = 0; var < num_vars_; ++var) {
            if (pos_in_basis_[var] >= 0) {
                continue;
            }
            const double rc = reduced_cost(var);
            if (rc < best_rc) {
                if (bland) {
                    return static_cast<std::ptrdiff_t>(var);
                }
                best_rc = rc;
                best = static_cast<std::ptrdiff_t>(var);
            }
        }
        return best;
    }

    // direction = B^-1 * column(var)
    void ftran(std::size_t var, std::vector<double>& direction) const {
        if (is_slack(var)) {
            const std::size_t col = n_ + slack_row_time(var) - 1;
            for (std::size_t r = 0; r < m_; ++r) {
                direction[r] = binv_[r * m_ + col];
            }
            return;
        }
        const std::size_t i = var / (horizon_ + 1);
        const Time k = var % (horizon_ + 1);
        const Request& req = model_.requests[i];
        const Time e = std::min<Time>(k + req.o, horizon_);
        for (std::size_t r = 0; r < m_; ++r) {
            const double* row = &binv_[r * m_];
            double v = row[i];
            for (Time t = k + 1; t <= e; ++t) {
                v += static_cast<double>(req.s + (t - k)) * row[n_ + t - 1];
            }
            direction[r] = v;
        }
    }

    void pivot(std::size_t entering, std::size_t leave, const std::vector<double>& direction) {
        const double piv = direction[leave];
        double* lrow = &binv_[leave * m_];
        const double inv = 1.0 / piv;
        for (std::size_t j = 0; j < m_; ++j) {
            lrow[j] *= inv;
        }
        x_b_[leave] *= inv;
        for (std::size_t r = 0; r < m_; ++r) {
            if (r == leave) {
                continue;
            }
            const double f = direction[r];
            if (std::abs(f) < 1e-13) {
                continue;
            }
            double* row = &binv_[r * m_];
            for (std::size_t j = 0; j < m_; ++j) {
                row[j] -= f * lrow[j];
            }
            x_b_[r] -= f * x_b_[leave];
        }
        for (std::size_t r = 0; r < m_; ++r) {
            if (x_b_[r] < 0.0 && x_b_[r] > -1e-9) {
                x_b_[r] = 0.0;
            }
        }
        pos_in_basis_[basis_[leave]] = -1;
        set_basis(leave, entering);
    }

    // Column of a variable into a dense vector (for refactorization and
    // residual checks).
    void dense_column(std::size_t var, std::vector<double>& col) const {
        std::fill(col.begin(), col.end(), 0.0);
        if (is_slack(var)) {
            col[n_ + slack_row_time(var) - 1] = 1.0;
            return;
        }
        const std::size_t i = var / (horizon_ + 1);
        const Time k = var % (horizon_ + 1);
        const Request& req = model_.requests[i];
        const Time e = std::min<Time>(k + req.o, horizon_);
        col[i] = 1.0;
        for (Time t = k + 1; t <= e; ++t) {
            col[n_ + t - 1] = static_cast<double>(req.s + (t - k));
        }
    }

    double residual_infnorm() const {
        std::vector<double> residual = b_;
        std::vector<double> col(m_);
        for (std::size_t r = 0; r < m_; ++r) {
            if (x_b_[r] == 0.0) {
                continue;
            }
            dense_column(basis_[r], col);
            for (std::size_t j = 0; j < m_; ++j) {
                residual[j] -= col[j] * x_b_[r];
            }
        }
        double norm = 0.0;
        for (double v : residual) {
            norm = std::max(norm, std::abs(v));
        }
        return norm;
    }

    void refactorize() {
        // Gauss-Jordan on [B | I].
        std::vector<double> bmat(m_ * m_, 0.0);
        std::vector<double> col(m_);
        for (std::size_t c = 0; c < m_; ++c) {
            dense_column(basis_[c], col);
            for (std::size_t r = 0; r < m_; ++r) {
                bmat[r * m_ + c] = col[r];
            }
        }
        std::vector<double> inv(m_ * m_, 0.0);
        for (std::size_t r = 0; r < m_; ++r) {
            inv[r * m_ + r] = 1.0;
        }
        for (std::size_t c = 0; c < m_; ++c) {
            std::size_t pivot_row = c;
            double best = std::abs(bmat[c * m_ + c]);
            for (std::size_t r = c + 1; r < m_; ++r) {
                if (std::abs(bmat[r * m_ + c]) > best) {
                    best = std::abs(bmat[r * m_ + c]);
                    pivot_row = r;
                }
            }
            if (best < 1e-12) {
                throw std::runtime_error("numerical failure: basis became singular");
            }
            if (pivot_row != c) {
                for (std::size_t j = 0; j < m_; ++j) {
                    std::swap(bmat[pivot_row * m_ + j], bmat[c * m_ + j]);
                    std::swap(inv[pivot_row * m_ + j], inv[c * m_ + j]);
                }
            }
            const double inv_piv = 1.0 / bmat[c * m_ + c];
            for (std::size_t j = 0; j < m_; ++j) {
                bmat[c * m_ + j] *= inv_piv;
                inv[c * m_ + j] *= inv_piv;
            }
            for (std::size_t r = 0; r < m_; ++r) {
                if (r == c) {
                    continue;
                }
                const double f = bmat[r * m_ + c];
                if (f == 0.0) {
                    continue;
                }
                for (std::size_t j = 0; j < m_; ++j) {
                    bmat[r * m_ + j] -= f * bmat[c * m_ + j];
                    inv[r * m_ + j] -= f * inv[c * m_ + j];
                }
            }
        }
        binv_ = std::move(inv);
        for (std::size_t r = 0; r < m_; ++r) {
            double v = 0.0;
            const double* row = &binv_[r * m_];
            for (std::size_t j = 0; j < m_; ++j) {
                v += row[j] * b_[j];
            }
            x_b_[r] = std::max(v, 0.0);
        }
    }

    LpSolution extract(std::size_t iterations) const {
        LpSolution solution;
        solution.iterations = iterations;
        solution.x.assign(n_, std::vector<double>(horizon_ + 1, 0.0));
        for (std::size_t r = 0; r < m_; ++r) {
            const std::size_t var = basis_[r];
            if (is_slack(var)) {
                continue;
            }
            const std::size_t i = var / (horizon_ + 1);
            const Time k = var % (horizon_ + 1);
            solution.x[i][k] = std::max(x_b_[r], 0.0);
        }
        solution.expected_start.assign(n_, 0.0);
        double objective = static_cast<double>(model_.objective_constant());
        for (std::size_t i = 0; i < n_; ++i) {
            double total = 0.0;
            double weighted = 0.0;
            for (Time k = 0; k <= horizon_; ++k) {
                total += solution.x[i][k];
                weighted += static_cast<double>(k) * solution.x[i][k];
            }
            if (std::abs(total - 1.0) > 1e-6) {
                throw std::runtime_error("numerical failure: start-once row of request " +
                                         std::to_string(model_.requests[i].id) + " sums to " +
                                         std::to_string(total));
            }
            solution.expected_start[i] = weighted;
            objective += weighted;
        }
        for (Time t = 1; t <= horizon_; ++t) {
            double activity = 0.0;
            for (std::size_t i = 0; i < n_; ++i) {
                const Time lo = t > model_.requests[i].o ? t - model_.requests[i].o : 0;
                for (Time k = lo; k < t; ++k) {
                    if (solution.x[i][k] != 0.0) {
                        activity += static_cast<double>(model_.requests[i].s + (t - k)) *
                                    solution.x[i][k];
                    }
                }
            }
            const double limit = static_cast<double>(model_.memory_limit);
            if (activity > limit + std::max(1e-6, 1e-9 * limit)) {
                throw std::runtime_error("numerical failure: memory row " + std::to_string(t) +
                                         " at " + std::to_string(activity) + " exceeds " +
                                         std::to_string(limit));
            }
        }
        solution.objective = objective;
        return solution;
    }

    const IpModel& model_;
    std::size_t n_;
    Time horizon_;
    std::size_t m_;
    std::size_t nx_;
    std::size_t num_vars_;
    std::size_t max_iterations_ = 0;

    std::vector<double> binv_;
    std::vector<double> x_b_;
    std::vector<double> b_;
    std::vector<std::size_t> basis_;
    std::vector<std::ptrdiff_t> pos_in_basis_;
    std::vector<double> duals_;
    std::vector<double> prefix_y_;
    std::vector<double> prefix_ty_;
};

}  // namespace

LpSolution solve_lp(const IpModel& model, const LpOptions& options) {
    if (model.requests.empty()) {
        LpSolution empty;
        return empty;
    }
    const std::size_t cells = model.requests.size() * static_cast<std::size_t>(model.horizon);
    if (cells > options.max_cells) {
        throw std::invalid_argument("model has n*horizon = " + std::to_string(cells) +
                                    " cells, over the budget of " +
                                    std::to_string(options.max_cells));
    }
    Simplex simplex(model, options);
    return simplex.run();
}

std::map<RequestId, double> expected_starts(const IpModel& model, const LpSolution& solution) {
    std::map<RequestId, double> out;
    for (std::size_t i = 0; i < model.requests.size(); ++i) {
        out[model.requests[i].id] = solution.expected_start[i];
    }
    return out;
}

namespace {

class BranchAndBound {
public:
    enum class Goal { tel, makespan };

    BranchAndBound(const Instance& instance, Time horizon, Goal goal)
        : instance_(instance), horizon_(horizon), goal_(goal) {
        const std::size_t n = instance.size();
        order_.resize(n);
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        std::sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) {
            const Request& ra = instance_.requests()[a];
            const Request& rb = instance_.requests()[b];
            if (ra.footprint() != rb.footprint()) {
                return ra.footprint() > rb.footprint();
            }
            return ra.id < rb.id;
        });
        by_id_.resize(n);
        std::iota(by_id_.begin(), by_id_.end(), std::size_t{0});
        std::sort(by_id_.begin(), by_id_.end(), [&](std::size_t a, std::size_t b) {
            return instance_.requests()[a].id < instance_.requests()[b].id;
        });
        rest_o_sum_.assign(n + 1, 0);
        rest_o_max_.assign(n + 1, 0);
        for (std::size_t d = n; d-- > 0;) {
            const Request& r = instance_.requests()[order_[d]];
            rest_o_sum_[d] = rest_o_sum_[d + 1] + r.o;
            rest_o_max_[d] = std::max<std::uint64_t>(rest_o_max_[d + 1], r.o);
        }
        starts_.assign(n, 0);
        seed_incumbent();
    }

    IpOracleResult solve() {
        dfs(0, 0);
        IpOracleResult result;
        result.objective = best_obj_;
        for (std::size_t i = 0; i < instance_.size(); ++i) {
            result.schedule.starts[instance_.requests()[i].id] = best_starts_[i];
        }
        return result;
    }

private:
    struct Placed {
        Time start;
        Tokens s;
        Tokens o;
    };

    void seed_incumbent() {
        // One request at a time in search order; always feasible and within
        // the default horizon.
        Time cursor = 0;
        std::vector<Time> starts(instance_.size(), 0);
        std::uint64_t tel = 0;
        for (std::size_t idx : order_) {
            const Request& r = instance_.requests()[idx];
            starts[idx] = cursor;
            cursor += r.o;
            tel += cursor;
        }
        Time max_start = 0;
        for (Time p : starts) {
            max_start = std::max(max_start, p);
        }
        if (max_start <= horizon_) {
            have_best_ = true;
            best_starts_ = starts;
            best_obj_ = goal_ == Goal::tel ? tel : cursor;
        }
    }

    bool fits(Time p, const Request& r) const {
        // Usage of a fixed set peaks at completion checkpoints.
        auto usage_at = [&](Time c) {
            Tokens usage = 0;
            for (const Placed& q : placed_) {
                if (c > q.start && c <= q.start + q.o) {
                    usage += q.s + (c - q.start);
                }
            }
            if (c > p && c <= p + r.o) {
                usage += r.s + (c - p);
            }
            return usage;
        };
        if (usage_at(p + r.o) > instance_.memory_limit()) {
            return false;
        }
        for (const Placed& q : placed_) {
            if (usage_at(q.start + q.o) > instance_.memory_limit()) {
                return false;
            }
        }
        return true;
    }

    bool lex_smaller_than_best() const {
        for (std::size_t idx : by_id_) {
            if (starts_[idx] != best_starts_[idx]) {
                return starts_[idx] < best_starts_[idx];
            }
        }
        return false;
    }

    void dfs(std::size_t depth, std::uint64_t partial) {
        if (depth == instance_.size()) {
            if (!have_best_ || partial < best_obj_ ||
                (partial == best_obj_ && lex_smaller_than_best())) {
                have_best_ = true;
                best_obj_ = partial;
                best_starts_ = starts_;
            }
            return;
        }
        const std::size_t idx = order_[depth];
        const Request& r = instance_.requests()[idx];
        for (Time t = 0; t <= horizon_; ++t) {
            std::uint64_t next_partial;
            std::uint64_t bound;
            if (goal_ == Goal::tel) {
                next_partial = partial + (t + r.o);
                bound = next_partial + rest_o_sum_[depth + 1];
            } else {
                next_partial = std::max<std::uint64_t>(partial, t + r.o);
                bound = std::max(next_partial, rest_o_max_[depth + 1]);
            }
            if (have_best_ && bound > best_obj_) {
                break;  // both bounds grow with t
            }
            if (!fits(t, r)) {
                continue;
            }
            placed_.push_back({t, r.s, r.o});
            starts_[idx] = t;
            dfs(depth + 1, next_partial);
            placed_.pop_back();
        }
        starts_[idx] = 0;
    }

    const Instance& instance_;
    Time horizon_;
    Goal goal_;
    std::vector<std::size_t> order_;
    std::vector<std::size_t> by_id_;
    std::vector<std::uint64_t> rest_o_sum_;
    std::vector<std::uint64_t> rest_o_max_;
    std::vector<Placed> placed_;
    std::vector<Time> starts_;
    bool have_best_ = false;
    std::uint64_t best_obj_ = 0;
    std::vector<Time> best_starts_;
};

IpOracleResult run_oracle(const Instance& instance, Time horizon, BranchAndBound::Goal goal) {
    if (instance.size() > 8 || horizon > 32) {
        throw std::invalid_argument("exact oracle is guarded to n <= 8 and horizon <= 32");
    }
    if (instance.empty()) {
        return {};
    }
    BranchAndBound search(instance, horizon, goal);
    return search.solve();
}

}  // namespace

IpOracleResult solve_ip_exact(const Instance& instance, Time horizon) {
    return run_oracle(instance, horizon, BranchAndBound::Goal::tel);
}

IpOracleResult solve_min_makespan(const Instance& instance, Time horizon) {
    return run_oracle(instance, horizon, BranchAndBound::Goal::makespan);
}

void write_lp_text(const IpModel& model, std::ostream& out) {
    out << "\\ time-indexed relaxation, " << model.num_variables() << " variables, "
        << model.num_rows() << " rows; objective omits the constant "
        << model.objective_constant() << "\n";
    out << "Minimize\n obj:";
    bool first = true;
    for (std::size_t i = 0; i < model.requests.size(); ++i) {
        for (Time k = 1; k <= model.horizon; ++k) {
            out << (first ? " " : " + ") << k << " x_" << model.requests[i].id << "_" << k;
            first = false;
        }
    }
    if (first) {
        out << " 0";
    }
    out << "\nSubject To\n";
    for (std::size_t i = 0; i < model.requests.size(); ++i) {
        out << " start_" << model.requests[i].id << ":";
        for (Time k = 0; k <= model.horizon; ++k) {
            out << (k == 0 ? " " : " + ") << "x_" << model.requests[i].id << "_" << k;
        }
        out << " = 1\n";
    }
    for (Time t = 1; t <= model.horizon; ++t) {
        out << " mem_" << t << ":";
        bool any = false;
        for (std::size_t i = 0; i < model.requests.size(); ++i) {
            const Time lo = t > model.requests[i].o ? t - model.requests[i].o : 0;
            for (Time k = lo; k < t; ++k) {
                out << (any ? " + " : " ") << model.memory_coefficient(t, i, k) << " x_"
                    << model.requests[i].id << "_" << k;
                any = true;
            }
        }
        if (!any) {
            out << " 0 x_dummy";
        }
        out << " <= " << model.memory_limit << "\n";
    }
    out << "Bounds\n";
    for (std::size_t i = 0; i < model.requests.size(); ++i) {
        for (Time k = 0; k <= model.horizon; ++k) {
            out << " 0 <= x_" << model.requests[i].id << "_" << k << " <= 1\n";
        }
    }
    out << "End\n";
}

void write_solution_json(const IpModel& model, const LpSolution& solution, std::ostream& out) {
    nlohmann::json j;
    j["objective"] = solution.objective;
    nlohmann::json y = nlohmann::json::object();
    for (std::size_t i = 0; i < model.requests.size(); ++i) {
        y[std::to_string(model.requests[i].id)] = solution.expected_start[i];
    }
    j["y"] = std::move(y);
    out << j.dump(2) << '\n';
}

}  // namespace kvsched
