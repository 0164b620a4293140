#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace carts::lab {

/// How a successful refinement round changes coverage.
enum class IncrementModel {
    worst_case,  // exactly +1
    generous,    // +Uniform{1,2,3}, capped at OPT
};

/// Agent-reliability model of the refinement loop.
struct SimParams {
    double beta = 1.0;
    double gamma = 1.0;
    int opt = 0;
    int c0 = 0;
    double alpha = 1.0;
    double epsilon = 0.05;
    std::size_t trials = 10000;
    std::uint64_t seed = 0;
    IncrementModel model = IncrementModel::worst_case;
    /// Worker threads; 0 picks the hardware concurrency. Results do not depend on it.
    std::size_t threads = 0;

    double p() const { return beta * gamma; }
    /// Throws InvalidTheoryParams.
    void validate() const;
};

/// Smallest integer coverage that satisfies C >= alpha * opt.
int coverage_target(double alpha, int opt);

/// ceil((max(0, alpha*opt - c0) + 2 ln(1/epsilon)) / (beta*gamma)).
/// Values within 1e-9 of an integer are treated as that integer.
int lambda_bound(double alpha, double beta, double gamma, int opt, int c0, double epsilon);

/// (opt - c0)/(beta*gamma) + 2/(beta*gamma).
double expected_iterations_bound(int opt, int c0, double beta, double gamma);

/// Coverage trace C_0..C_{t_max} of one trial. Trial i of a run draws from the
/// stream derive_seed(params.seed, i).
std::vector<int> simulate_trial(const SimParams& params, std::size_t t_max,
                                std::uint64_t trial_index = 0);

/// Pr[Binomial(n, p) >= k], summed exactly in log space.
double binomial_upper_tail(int n, double p, int k);

struct SimReport {
    std::string kind;  // "theorem" or "corollary"
    SimParams params;
    int lambda = 0;
    std::size_t trials = 0;

    // theorem
    double empirical_success = 0.0;
    double success_se = 0.0;
    std::optional<double> binomial_oracle;

    // corollary
    double mean_hitting_time = 0.0;
    double hitting_time_se = 0.0;
    double oracle_mean = 0.0;
    double corollary_bound = 0.0;
    std::size_t cap_exceeded = 0;

    /// False when the simulation contradicts the stated bound for these parameters.
    bool bound_holds = true;

    std::vector<std::vector<int>> traces;
};

inline constexpr std::uint64_t kHittingTimeCap = 10'000'000;

/// Runs `trials` trials for T = lambda_bound(params) rounds each.
SimReport verify_theorem(const SimParams& params, bool keep_traces = false);

/// Runs every trial until coverage reaches OPT (or the step cap).
SimReport verify_corollary(const SimParams& params, bool keep_traces = false);

}  // namespace carts::lab
