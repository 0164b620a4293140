#include "carts/convergence.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "carts/domain.hpp"
#include "carts/errors.hpp"

namespace carts::lab {

namespace {

// SplitMix64 stream; one per trial.
class TrialRng {
public:
    explicit TrialRng(std::uint64_t state) : state_(state) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

private:
    std::uint64_t state_;
};

void check_rates(double alpha, double beta, double gamma, double epsilon) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw InvalidTheoryParams("alpha must lie in (0, 1]");
    if (!(beta > 0.0 && beta <= 1.0)) throw InvalidTheoryParams("beta must lie in (0, 1]");
    if (!(gamma > 0.0 && gamma <= 1.0)) throw InvalidTheoryParams("gamma must lie in (0, 1]");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw InvalidTheoryParams("epsilon must lie in (0, 1)");
}

int step(int coverage, const SimParams& params, TrialRng& rng) {
    if (coverage >= params.opt) return coverage;
    if (!(rng.uniform() < params.p())) return coverage;
    int gain = 1;
    if (params.model == IncrementModel::generous) gain += static_cast<int>(rng.next() % 3);
    return std::min(params.opt, coverage + gain);
}

struct Tally {
    std::uint64_t successes = 0;
    std::uint64_t hits = 0;
    std::uint64_t capped = 0;
    std::uint64_t sum = 0;
    unsigned __int128 sum_sq = 0;
};

// Splits trials into contiguous chunks; sums are integers so the result is
// independent of the thread count.
template <typename TrialFn>
Tally run_trials(const SimParams& params, TrialFn trial) {
    std::size_t workers = params.threads ? params.threads : std::thread::hardware_concurrency();
    workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(1, params.trials / 256));
    std::vector<Tally> partial(workers);
    {
        std::vector<std::jthread> pool;
        const std::size_t chunk = (params.trials + workers - 1) / workers;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                const std::size_t begin = w * chunk;
                const std::size_t end = std::min(params.trials, begin + chunk);
                for (std::size_t i = begin; i < end; ++i) trial(i, partial[w]);
            });
        }
    }
    Tally total;
    for (const auto& t : partial) {
        total.successes += t.successes;
        total.hits += t.hits;
        total.capped += t.capped;
        total.sum += t.sum;
        total.sum_sq += t.sum_sq;
    }
    return total;
}

}  // namespace

void SimParams::validate() const {
    check_rates(alpha, beta, gamma, epsilon);
    if (opt < 0) throw InvalidTheoryParams("OPT must be >= 0");
    if (c0 < 0 || c0 > opt) throw InvalidTheoryParams("C0 must lie in [0, OPT]");
    if (trials == 0) throw InvalidTheoryParams("at least one trial is required");
}

int coverage_target(double alpha, int opt) {
    const double raw = alpha * static_cast<double>(opt);
    return static_cast<int>(std::ceil(raw - 1e-9));
}

int lambda_bound(double alpha, double beta, double gamma, int opt, int c0, double epsilon) {
    check_rates(alpha, beta, gamma, epsilon);
    if (opt < 0 || c0 < 0) throw InvalidTheoryParams("OPT and C0 must be >= 0");
    const double p = beta * gamma;
    const double gap = std::max(0.0, alpha * static_cast<double>(opt) - static_cast<double>(c0));
    const double value = (gap + 2.0 * std::log(1.0 / epsilon)) / p;
    const double nearest = std::round(value);
    if (std::abs(value - nearest) <= 1e-9 * std::max(1.0, std::abs(value)))
        return static_cast<int>(nearest);
    return static_cast<int>(std::ceil(value));
}

double expected_iterations_bound(int opt, int c0, double beta, double gamma) {
    if (!(beta > 0.0 && beta <= 1.0)) throw InvalidTheoryParams("beta must lie in (0, 1]");
    if (!(gamma > 0.0 && gamma <= 1.0)) throw InvalidTheoryParams("gamma must lie in (0, 1]");
    if (opt < 0 || c0 < 0 || c0 > opt) throw InvalidTheoryParams("need 0 <= C0 <= OPT");
    const double p = beta * gamma;
    return static_cast<double>(opt - c0) / p + 2.0 / p;
}

std::vector<int> simulate_trial(const SimParams& params, std::size_t t_max,
                                std::uint64_t trial_index) {
    TrialRng rng(derive_seed(params.seed, trial_index));
    std::vector<int> trace;
    trace.reserve(t_max + 1);
    int c = params.c0;
    trace.push_back(c);
    for (std::size_t m = 0; m < t_max; ++m) {
        c = step(c, params, rng);
        trace.push_back(c);
    }
    return trace;
}

double binomial_upper_tail(int n, double p, int k) {
    if (k <= 0) return 1.0;
    if (k > n) return 0.0;
    if (p >= 1.0) return 1.0;
    if (p <= 0.0) return 0.0;
    const long double lp = std::log(static_cast<long double>(p));
    const long double lq = std::log1p(-static_cast<long double>(p));
    const long double ln_nfact = std::lgamma(static_cast<long double>(n) + 1);
    long double sum = 0;
    for (int j = k; j <= n; ++j) {
        const long double log_term = ln_nfact - std::lgamma(static_cast<long double>(j) + 1) -
                                     std::lgamma(static_cast<long double>(n - j) + 1) + j * lp +
                                     (n - j) * lq;
        sum += std::exp(log_term);
    }
    return static_cast<double>(std::min<long double>(1, sum));
}

SimReport verify_theorem(const SimParams& params, bool keep_traces) {
    params.validate();
    SimReport report;
    report.kind = "theorem";
    report.params = params;
    report.trials = params.trials;
    report.lambda = lambda_bound(params.alpha, params.beta, params.gamma, params.opt, params.c0,
                                 params.epsilon);
    const int target = coverage_target(params.alpha, params.opt);
    const auto horizon = static_cast<std::size_t>(report.lambda);

    if (keep_traces) report.traces.resize(params.trials);
    const Tally tally = run_trials(params, [&](std::size_t i, Tally& t) {
        auto trace = simulate_trial(params, horizon, i);
        if (trace.back() >= target) ++t.successes;
        if (keep_traces) report.traces[i] = std::move(trace);
    });

    const double n = static_cast<double>(params.trials);
    report.empirical_success = static_cast<double>(tally.successes) / n;
    report.success_se =
        std::sqrt(report.empirical_success * (1.0 - report.empirical_success) / n);
    if (params.opt - params.c0 <= 60) {
        report.binomial_oracle = binomial_upper_tail(report.lambda, params.p(), target - params.c0);
    }
    const double floor = 1.0 - params.epsilon;
    report.bound_holds = report.empirical_success >= floor - 3.0 * report.success_se &&
                         (!report.binomial_oracle || *report.binomial_oracle >= floor);
    return report;
}

SimReport verify_corollary(const SimParams& params, bool keep_traces) {
    params.validate();
    SimReport report;
    report.kind = "corollary";
    report.params = params;
    report.trials = params.trials;
    report.lambda = lambda_bound(params.alpha, params.beta, params.gamma, params.opt, params.c0,
                                 params.epsilon);
    report.oracle_mean = static_cast<double>(params.opt - params.c0) / params.p();
    report.corollary_bound =
        expected_iterations_bound(params.opt, params.c0, params.beta, params.gamma);

    if (keep_traces) report.traces.resize(params.trials);
    const Tally tally = run_trials(params, [&](std::size_t i, Tally& t) {
        TrialRng rng(derive_seed(params.seed, i));
        int c = params.c0;
        std::uint64_t steps = 0;
        std::vector<int> trace;
        if (keep_traces) trace.push_back(c);
        while (c < params.opt && steps < kHittingTimeCap) {
            c = step(c, params, rng);
            ++steps;
            if (keep_traces) trace.push_back(c);
        }
        if (c < params.opt) {
            ++t.capped;
        } else {
            ++t.hits;
            t.sum += steps;
            t.sum_sq += static_cast<unsigned __int128>(steps) * steps;
        }
        if (keep_traces) report.traces[i] = std::move(trace);
    });

    report.cap_exceeded = tally.capped;
    if (tally.hits > 0) {
        const double n = static_cast<double>(tally.hits);
        const double mean = static_cast<double>(tally.sum) / n;
        const double mean_sq = static_cast<double>(tally.sum_sq) / n;
        const double var = tally.hits > 1 ? std::max(0.0, (mean_sq - mean * mean) * n / (n - 1)) : 0.0;
        report.mean_hitting_time = mean;
        report.hitting_time_se = std::sqrt(var / n);
    }
    const double tol = 3.0 * report.hitting_time_se + 1e-9;
    report.bound_holds = tally.capped == 0 && report.mean_hitting_time <= report.corollary_bound &&
                         std::abs(report.mean_hitting_time - report.oracle_mean) <= tol;
    return report;
}

}  // namespace carts::lab
