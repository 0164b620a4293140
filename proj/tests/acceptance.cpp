// Acceptance suite: one PASS/FAIL line per criterion, exit 1 on any FAIL.
#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <iostream>
#include <random>
#include <sstream>

#include "carts/agents.hpp"
#include "carts/convergence.hpp"
#include "carts/coverage.hpp"
#include "carts/errors.hpp"
#include "carts/pipeline.hpp"
#include "test_support.hpp"

using namespace carts;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

// Probability-mass recurrence for Pr[Bin(n, p) >= k].
double tail_by_dp(int n, double p, int k) {
    std::vector<double> mass(n + 1, 0.0);
    mass[0] = 1.0;
    for (int trial = 1; trial <= n; ++trial) {
        for (int j = trial; j >= 1; --j) mass[j] = mass[j] * (1 - p) + mass[j - 1] * p;
        mass[0] *= 1 - p;
    }
    double tail = 0.0;
    for (int j = k; j <= n; ++j) tail += mass[j];
    return tail;
}

struct Check {
    bool ok = true;
    std::ostringstream detail;

    void require(bool cond, const std::string& what) {
        if (!cond && ok) detail << what;
        ok = ok && cond;
    }
};

int exit_status(const std::string& command) {
    const int raw = std::system(command.c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

std::string quoted(const fs::path& p) { return "'" + p.string() + "'"; }

std::string fixture_command(const fs::path& out, const std::string& backend_args) {
    return std::string(CARTS_CLI_PATH) + " run --dataset " + quoted(carts::testing::fixture("speakers.jsonl")) +
           " " + backend_args + " --mode carts --chains 2 --iterations 2 --seed 7 --out " + quoted(out) +
           " >/dev/null 2>&1";
}

std::string mock_args() {
    return "--backend mock --script " + quoted(carts::testing::fixture("speakers_script.json"));
}

lab::SimParams theorem_params() {
    lab::SimParams s;
    s.beta = 0.8;
    s.gamma = 0.75;
    s.opt = 10;
    s.c0 = 0;
    s.alpha = 1.0;
    s.epsilon = 0.05;
    s.trials = 10000;
    s.seed = 2024;
    return s;
}

Check criterion_theorem() {
    Check c;
    const auto start = Clock::now();
    const auto report = lab::verify_theorem(theorem_params());
    const double elapsed = seconds_since(start);
    const double oracle = tail_by_dp(27, 0.6, 10);
    c.require(report.lambda == 27, "lambda != 27");
    c.require(report.binomial_oracle && std::abs(*report.binomial_oracle - oracle) < 1e-12,
              "binomial oracle disagrees with recurrence");
    c.require(std::abs(report.empirical_success - oracle) <= 0.01, "empirical success off the oracle by > 0.01");
    c.require(report.empirical_success >= 0.95, "empirical success < 0.95");
    c.require(elapsed < 5.0, "runtime >= 5 s");
    c.detail << (c.ok ? "" : "; ") << "lambda=" << report.lambda << " success=" << report.empirical_success
             << " oracle=" << oracle << " time=" << elapsed << "s";
    return c;
}

Check criterion_corollary() {
    Check c;
    const auto start = Clock::now();
    // (gap, p) with beta = p, gamma = 1 and OPT = gap, C0 = 0.
    for (auto [gap, p] : {std::pair{5, 0.3}, std::pair{10, 0.6}, std::pair{20, 0.9}}) {
        lab::SimParams s;
        s.beta = p;
        s.gamma = 1.0;
        s.opt = gap;
        s.c0 = 0;
        s.trials = 10000;
        s.seed = 77;
        const auto r = lab::verify_corollary(s);
        const double oracle = gap / p;
        const double bound = gap / p + 2 / p;
        c.require(std::abs(r.mean_hitting_time - oracle) <= 3 * r.hitting_time_se,
                  "mean outside 3 SE at gap " + std::to_string(gap));
        c.require(r.mean_hitting_time <= bound, "mean above bound at gap " + std::to_string(gap));
        c.require(r.cap_exceeded == 0, "hitting-time cap reached");
        c.detail << (c.ok ? "" : "; ") << "(" << gap << "," << p << ") mean=" << r.mean_hitting_time
                 << " oracle=" << oracle << " bound=" << bound << " ";
    }
    const double elapsed = seconds_since(start);
    c.require(elapsed < 30.0, "runtime >= 30 s");
    c.detail << "time=" << elapsed << "s";
    return c;
}

Check criterion_lambda() {
    Check c;
    c.require(lab::lambda_bound(1, 0.8, 0.75, 10, 0, 0.05) == 27, "spot check 1");
    c.require(lab::lambda_bound(1, 1, 1, 1, 0, std::exp(-0.5)) == 2, "spot check 2");
    c.require(lab::lambda_bound(0.5, 1, 0.5, 10, 5, 0.1) == 10, "spot check 3");

    std::mt19937_64 rng(5150);
    std::uniform_real_distribution<double> unit(0.05, 1.0);
    std::uniform_real_distribution<double> eps(0.01, 0.6);
    std::uniform_int_distribution<int> opt_dist(0, 50);
    const int tuples = 1500;
    for (int i = 0; i < tuples; ++i) {
        const double a = unit(rng), b = unit(rng), g = unit(rng), e = eps(rng);
        const int opt = opt_dist(rng);
        const int c0 = std::uniform_int_distribution<int>(0, opt)(rng);
        const int base = lab::lambda_bound(a, b, g, opt, c0, e);
        const double up = 1.0 + unit(rng);
        c.require(lab::lambda_bound(a, std::min(1.0, b * up), g, opt, c0, e) <= base, "beta monotonicity");
        c.require(lab::lambda_bound(a, b, std::min(1.0, g * up), opt, c0, e) <= base, "gamma monotonicity");
        c.require(lab::lambda_bound(a, b, g, opt, c0, std::min(0.99, e * up)) <= base, "epsilon monotonicity");
        c.require(lab::lambda_bound(std::min(1.0, a * up), b, g, opt, c0, e) >= base, "alpha monotonicity");
        c.require(lab::lambda_bound(a, b, g, opt + 1 + opt_dist(rng), c0, e) >= base, "OPT monotonicity");
        c.require(lab::lambda_bound(a, b, g, opt, c0 + 1, e) <= base, "C0 monotonicity");
    }
    c.detail << (c.ok ? "" : "; ") << "3 spot checks, " << tuples << " random tuples";
    return c;
}

Check criterion_monotone() {
    Check c;
    std::mt19937_64 rng(4242);
    const KeywordOverlapScorer scorer;
    const std::size_t k_chars = 40;
    const TitleLimits limits{k_chars, 10};
    int runs = 0;
    for (; runs < 1000; ++runs) {
        const std::size_t chains = 1 + rng() % 3;
        const std::size_t rounds = 1 + rng() % 4;
        auto run = carts::testing::random_run(rng, chains, rounds);
        PipelineConfig config;
        config.chains = chains;
        config.budget = rounds;
        config.max_chars = k_chars;
        config.seed = rng();
        std::optional<PipelineResult> result;
        try {
            result = run_carts(run.job, config,
                               {carts::testing::script(run.streams), carts::testing::default_prompts(), &scorer});
        } catch (const Error& e) {
            c.require(false, std::string("run failed: ") + e.what());
            break;
        }
        for (const auto& t : result->traces) {
            const auto trace = t.best_coverage_trace(limits);
            c.require(std::is_sorted(trace.begin(), trace.end()), "best-coverage trace decreased");
        }
        c.require(result->final_title.char_len() <= k_chars, "final title longer than K");
    }
    c.detail << (c.ok ? "" : "; ") << runs << " runs";
    return c;
}

Check criterion_oracle() {
    Check c;
    std::mt19937_64 rng(8080);
    const TitleLimits limits{30, 10};
    static const std::vector<std::string> words = {"alpha", "beta", "gamma", "delta", "omega", "sigma", "kappa"};
    int pools = 0;
    for (; pools < 200; ++pools) {
        const std::size_t n_items = 1 + rng() % 6;
        const std::size_t n_cands = 1 + rng() % 8;
        const std::size_t feasible_slot = rng() % n_cands;
        std::vector<ScoredTitle> pool;
        for (std::size_t i = 0; i < n_cands; ++i) {
            std::string text;
            const std::size_t max_words = i == feasible_slot ? 3 : 9;
            const std::size_t n_words = 1 + rng() % max_words;
            for (std::size_t w = 0; w < n_words; ++w) text += (w ? " " : "") + words[rng() % words.size()];
            std::vector<std::pair<std::string, int>> bits;
            for (std::size_t it = 0; it < n_items; ++it)
                bits.emplace_back("it-" + std::to_string(it), static_cast<int>(rng() % 2));
            pool.push_back({CandidateTitle(text, static_cast<int>(rng() % 3), static_cast<int>(i),
                                           Provenance::refined),
                            RelevanceVector(std::move(bits))});
        }
        std::vector<CandidateTitle> titles;
        for (const auto& s : pool) titles.push_back(s.title);
        const auto summary = moderate(pool, limits);
        const auto pick = arbitrate(titles, summary, ArbiterMode::rule, ModuleJob{}, {}, nullptr);
        const auto* entry = summary.find(pick.text());
        const auto oracle = brute_force_opt(pool, limits);
        c.require(entry && entry->verdict.feasible, "arbitration picked an infeasible title");
        c.require(entry && entry->coverage == oracle.opt,
                  "pool " + std::to_string(pools) + ": arbitration coverage != brute-force OPT");
    }
    c.detail << (c.ok ? "" : "; ") << pools << " pools";
    return c;
}

Check criterion_determinism() {
    Check c;
    const fs::path dir = fs::temp_directory_path() / "carts_acceptance";
    fs::create_directories(dir);
    const auto a = dir / "run_a.jsonl";
    const auto b = dir / "run_b.jsonl";
    c.require(exit_status(fixture_command(a, mock_args())) == 0, "first run failed");
    c.require(exit_status(fixture_command(b, mock_args())) == 0, "second run failed");
    const auto golden = slurp(carts::testing::fixture("speakers_carts_golden.jsonl"));
    c.require(!golden.empty(), "golden file missing");
    c.require(slurp(a) == slurp(b), "runs differ");
    c.require(slurp(a) == golden, "output differs from golden file");
    c.detail << (c.ok ? "" : "; ") << slurp(a).size() << " bytes compared";
    return c;
}

Check criterion_hermetic() {
    Check c;
    const fs::path dir = fs::temp_directory_path() / "carts_acceptance";
    fs::create_directories(dir);
    const std::string preload = std::string("LD_PRELOAD=") + CARTS_NO_NETWORK_LIB + " ";
    // The shim exits with 97 on the first socket().
    const int control = exit_status(preload + fixture_command(dir / "control.jsonl",
                                                              "--backend llm --endpoint http://127.0.0.1:9"));
    c.require(control == 97, "positive control did not trip the socket guard");
    const int mock = exit_status(preload + fixture_command(dir / "hermetic.jsonl", mock_args()));
    c.require(mock == 0, "mock run opened a socket or failed");
    c.detail << (c.ok ? "" : "; ") << "control exit=" << control << " mock exit=" << mock;
    return c;
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Check()>>> criteria = {
        {"1 theorem verification", criterion_theorem},
        {"2 corollary verification", criterion_corollary},
        {"3 lambda spot checks and monotonicity", criterion_lambda},
        {"4 monotone coverage over random scripted runs", criterion_monotone},
        {"5 rule arbitration equals brute-force OPT", criterion_oracle},
        {"6 deterministic fixture matches golden file", criterion_determinism},
        {"7 mock backend opens no sockets", criterion_hermetic},
    };
    bool all = true;
    for (const auto& [name, run] : criteria) {
        Check result;
        try {
            result = run();
        } catch (const std::exception& e) {
            result.ok = false;
            result.detail << "exception: " << e.what();
        }
        all = all && result.ok;
        std::cout << (result.ok ? "PASS" : "FAIL") << " criterion " << name << " (" << result.detail.str()
                  << ")" << std::endl;
    }
    return all ? 0 : 1;
}
