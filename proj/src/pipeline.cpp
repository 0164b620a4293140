#include "carts/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <future>
#include <thread>

#include "carts/convergence.hpp"
#include "carts/errors.hpp"

namespace carts {

namespace {

int objective(const CandidateTitle& title, const RelevanceVector& bits, const TitleLimits& limits) {
    return feasible(title, limits).feasible ? bits.coverage() : 0;
}

AgentContext context_for(const ModuleJob& job, const PipelineConfig& config, const RunContext& run,
                         std::uint64_t stream) {
    return AgentContext{run.backend, run.prompts, config.parse_retries, job.module_id,
                        derive_seed(config.seed, stream)};
}

void check_run(const RunContext& run) {
    if (!run.backend || !run.prompts || !run.scorer)
        throw InvalidValue("run context needs a backend, prompts and a scorer");
}

std::vector<KeywordSet> distill_all(const ModuleJob& job, const PipelineConfig& config,
                                    const RunContext& run) {
    const auto ctx = context_for(job, config, run, 0);
    std::vector<std::future<KeywordSet>> pending;
    pending.reserve(job.items.size());
    for (const auto& item : job.items) {
        pending.push_back(std::async(std::launch::async, [&, item_ptr = &item] {
            return distill(*item_ptr, config.keywords_per_item, ctx);
        }));
    }
    std::vector<KeywordSet> keywords;
    std::string failure;
    for (auto& f : pending) {
        try {
            keywords.push_back(f.get());
        } catch (const Error& e) {
            if (failure.empty()) failure = std::string("keyword distillation: ") + e.what();
        }
    }
    if (!failure.empty()) throw JobFailed(job.module_id, failure);
    return keywords;
}

}  // namespace

std::vector<int> RefinementTrace::best_coverage_trace(const TitleLimits& limits) const {
    std::vector<int> out;
    out.reserve(steps.size() + 1);
    out.push_back(objective(initial, initial_bits, limits));
    for (const auto& s : steps) out.push_back(s.best_coverage);
    return out;
}

std::size_t iteration_budget(const PipelineConfig& config, std::size_t job_size) {
    if (const auto* explicit_rounds = std::get_if<std::size_t>(&config.budget)) return *explicit_rounds;
    const auto& theory = std::get<TheoryBudget>(config.budget);
    const int opt = theory.opt_estimate.value_or(static_cast<int>(job_size));
    return static_cast<std::size_t>(lab::lambda_bound(theory.alpha, theory.beta, theory.gamma, opt,
                                                      theory.c0_estimate, theory.epsilon));
}

RefinementTrace refine_chain(const CandidateTitle& initial, const ModuleJob& job,
                             std::span<const KeywordSet> keywords, const TitleLimits& limits,
                             std::size_t rounds, const RelevanceScorer& scorer,
                             const AgentContext& ctx) {
    const auto n = static_cast<int>(job.items.size());
    const auto initial_bits = coverage(initial, job, keywords, scorer);
    RefinementTrace trace{initial.chain_id(), initial, initial_bits, {}, initial, initial_bits, false, {}};

    bool best_feasible = feasible(initial, limits).feasible;
    int best_value = best_feasible ? initial_bits.coverage() : 0;

    for (std::size_t m = 1; m <= rounds; ++m) {
        if (best_feasible && trace.best_bits.coverage() == n) break;
        try {
            auto report = evaluate(trace.best, job, keywords, scorer, limits, ctx);
            auto next = regenerate(trace.best, report, job, keywords, limits, ctx)
                            .with_iteration(static_cast<int>(m));
            auto bits = coverage(next, job, keywords, scorer);
            auto verdict = feasible(next, limits);

            const bool accept = verdict.feasible &&
                                (!best_feasible || bits.coverage() > trace.best_bits.coverage());
            if (accept) {
                trace.best = next;
                trace.best_bits = bits;
                best_feasible = true;
                best_value = bits.coverage();
            }
            trace.steps.push_back(RefinementStep{std::move(next), std::move(bits),
                                                 std::move(verdict.violations), std::move(report),
                                                 accept, best_value});
        } catch (const Error& e) {
            trace.degraded = true;
            trace.error = e.what();
            break;
        }
    }
    return trace;
}

PipelineResult run_carts(const ModuleJob& job, const PipelineConfig& config, const RunContext& run) {
    check_run(run);
    validate_job(job);
    config.validate();
    const auto limits = TitleLimits::from(config);
    const auto rounds = iteration_budget(config, job.items.size());
    const auto keywords = distill_all(job, config, run);

    struct ChainOutcome {
        std::optional<RefinementTrace> trace;
        std::string error;
    };
    std::vector<std::future<ChainOutcome>> pending;
    for (std::size_t c = 0; c < config.chains; ++c) {
        pending.push_back(std::async(std::launch::async, [&, c]() -> ChainOutcome {
            const auto chain_id = static_cast<int>(c);
            const auto ctx = context_for(job, config, run, c + 1);
            try {
                auto initial = generate_initial(job, keywords, limits, ctx, chain_id);
                return {refine_chain(initial, job, keywords, limits, rounds, *run.scorer, ctx), {}};
            } catch (const Error& e) {
                return {std::nullopt, "chain " + std::to_string(c) + ": " + e.what()};
            }
        }));
    }

    std::vector<RefinementTrace> traces;
    std::vector<std::string> errors;
    for (auto& f : pending) {
        auto outcome = f.get();
        if (outcome.trace) traces.push_back(std::move(*outcome.trace));
        else errors.push_back(std::move(outcome.error));
    }
    if (traces.empty()) throw JobFailed(job.module_id, "all chains failed; first: " + errors.front());

    std::vector<CandidateTitle> candidates;
    std::vector<ScoredTitle> chain_bests;
    std::vector<ScoredTitle> pool;
    for (const auto& t : traces) {
        candidates.push_back(t.best);
        chain_bests.push_back({t.best, t.best_bits});
        pool.push_back({t.initial, t.initial_bits});
        for (const auto& s : t.steps) pool.push_back({s.title, s.bits});
    }

    const auto summary = moderate(chain_bests, limits);
    const auto arbiter_ctx = context_for(job, config, run, 0);
    auto final_title = arbitrate(candidates, summary, config.arbiter, job, keywords, &arbiter_ctx);
    const auto& final_bits =
        std::find_if(chain_bests.begin(), chain_bests.end(),
                     [&](const ScoredTitle& s) { return s.title == final_title; })
            ->bits;
    auto verdict = feasible(final_title, limits);

    std::optional<int> pool_opt;
    try {
        pool_opt = brute_force_opt(pool, limits).opt;
    } catch (const NoFeasibleCandidate&) {
    }

    return PipelineResult{
        job.module_id,
        "carts",
        final_title,
        final_bits,
        verdict.feasible,
        std::move(verdict.violations),
        keywords,
        std::move(candidates),
        std::move(traces),
        summary.render(),
        pool_opt,
        pool.size(),
        rounds,
        config,
    };
}

PipelineResult run_vanilla(const ModuleJob& job, const PipelineConfig& config,
                           const RunContext& run) {
    check_run(run);
    validate_job(job);
    config.validate();
    const auto limits = TitleLimits::from(config);
    std::vector<KeywordSet> keywords;
    if (run.scorer->kind() == ScorerKind::keyword_overlap) {
        keywords = distill_all(job, config, run);
    } else {
        for (const auto& item : job.items) keywords.push_back({item.id, {}});
    }

    const auto ctx = context_for(job, config, run, 1);
    std::optional<CandidateTitle> title;
    try {
        title = generate_baseline(job, limits, ctx);
    } catch (const Error& e) {
        throw JobFailed(job.module_id, e.what());
    }
    auto bits = coverage(*title, job, keywords, *run.scorer);
    auto verdict = feasible(*title, limits);
    std::optional<int> pool_opt;
    if (verdict.feasible) pool_opt = bits.coverage();

    return PipelineResult{
        job.module_id,
        "vanilla",
        *title,
        std::move(bits),
        verdict.feasible,
        std::move(verdict.violations),
        std::move(keywords),
        {*title},
        {},
        {},
        pool_opt,
        1,
        0,
        config,
    };
}

std::vector<JobOutcome> run_batch(std::span<const ModuleJob> jobs, const PipelineConfig& config,
                                  const RunContext& run, RunMode mode, std::size_t workers) {
    std::vector<JobOutcome> outcomes(jobs.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
            outcomes[i].module_id = jobs[i].module_id;
            try {
                outcomes[i].result = mode == RunMode::carts ? run_carts(jobs[i], config, run)
                                                            : run_vanilla(jobs[i], config, run);
            } catch (const Error& e) {
                outcomes[i].error = e.what();
            }
        }
    };
    workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(1, jobs.size()));
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    return outcomes;
}

}  // namespace carts
