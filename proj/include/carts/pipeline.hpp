#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "carts/agents.hpp"
#include "carts/backend.hpp"
#include "carts/coverage.hpp"
#include "carts/domain.hpp"
#include "carts/prompts.hpp"

namespace carts {

/// One evaluate -> regenerate round of a chain.
struct RefinementStep {
    CandidateTitle title;
    RelevanceVector bits;
    std::vector<std::string> violations;
    /// Critique of the title this round refined.
    std::optional<FeedbackReport> feedback;
    bool accepted = false;
    /// Objective value of the chain's best title after this round
    /// (its coverage when feasible, 0 otherwise).
    int best_coverage = 0;

    bool operator==(const RefinementStep&) const = default;
};

struct RefinementTrace {
    int chain_id = 0;
    CandidateTitle initial;
    RelevanceVector initial_bits;
    std::vector<RefinementStep> steps;
    CandidateTitle best;
    RelevanceVector best_bits;
    bool degraded = false;
    std::string error;

    /// C_best(0), C_best(1), ... : the objective value of `best` after each round.
    std::vector<int> best_coverage_trace(const TitleLimits& limits) const;

    bool operator==(const RefinementTrace&) const = default;
};

struct PipelineResult {
    std::string module_id;
    std::string mode;  // "carts" or "vanilla"
    CandidateTitle final_title;
    RelevanceVector final_coverage;
    bool feasible = true;
    std::vector<std::string> violations;
    std::vector<KeywordSet> keywords;
    /// Chain-best titles offered to arbitration, by chain id.
    std::vector<CandidateTitle> candidates;
    std::vector<RefinementTrace> traces;
    std::string moderator_summary;
    /// Best feasible coverage over every title generated in the run; empty
    /// when none was feasible.
    std::optional<int> pool_opt;
    std::size_t pool_size = 0;
    std::size_t iterations = 0;
    PipelineConfig config;

    bool operator==(const PipelineResult&) const = default;
};

/// Explicit T passes through; theory inputs go through the convergence bound
/// with OPT defaulting to `job_size`. Throws InvalidTheoryParams.
std::size_t iteration_budget(const PipelineConfig& config, std::size_t job_size);

/// Runs up to `rounds` evaluate -> regenerate rounds. A regenerated title
/// replaces the chain's best only if it is feasible and either strictly raises
/// coverage or the current best is infeasible. Stops early once a feasible
/// best covers every item. Agent errors end the chain with `degraded` set.
RefinementTrace refine_chain(const CandidateTitle& initial, const ModuleJob& job,
                             std::span<const KeywordSet> keywords, const TitleLimits& limits,
                             std::size_t rounds, const RelevanceScorer& scorer,
                             const AgentContext& ctx);

struct RunContext {
    std::shared_ptr<AgentBackend> backend;
    std::shared_ptr<const PromptLibrary> prompts;
    const RelevanceScorer* scorer = nullptr;
};

/// Distill -> k independent chains -> moderate -> arbitrate. Throws JobFailed.
PipelineResult run_carts(const ModuleJob& job, const PipelineConfig& config, const RunContext& run);

/// Single generation without keywords or refinement. Keywords are still
/// distilled when the scorer needs them to score the result. Throws JobFailed.
PipelineResult run_vanilla(const ModuleJob& job, const PipelineConfig& config,
                           const RunContext& run);

enum class RunMode { carts, vanilla };

struct JobOutcome {
    std::string module_id;
    std::optional<PipelineResult> result;
    std::string error;
};

/// Processes jobs on `workers` threads; outcomes come back in input order.
std::vector<JobOutcome> run_batch(std::span<const ModuleJob> jobs, const PipelineConfig& config,
                                  const RunContext& run, RunMode mode, std::size_t workers);

}  // namespace carts
