#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "carts/backend.hpp"
#include "carts/coverage.hpp"
#include "carts/domain.hpp"
#include "carts/prompts.hpp"

namespace carts {

/// What every agent call needs besides its own inputs.
struct AgentContext {
    std::shared_ptr<AgentBackend> backend;
    std::shared_ptr<const PromptLibrary> prompts;
    std::size_t parse_retries = 2;
    std::string module_id;
    std::uint64_t seed = 0;
};

struct FeedbackReport {
    RelevanceVector bits;
    std::vector<std::string> flagged_uncovered;  // U_m, in item order
    std::string critique;
    bool length_ok = true;

    bool operator==(const FeedbackReport&) const = default;
};

struct ModeratorEntry {
    std::string text;
    int coverage = 0;
    std::size_t items = 0;
    std::size_t char_len = 0;
    FeasibilityVerdict verdict;
    std::string provenance;
};

/// Deterministic per-candidate digest handed to the arbitrator.
struct ModeratorSummary {
    std::vector<ModeratorEntry> entries;

    /// One line per candidate, in input order.
    std::string render() const;
    const ModeratorEntry* find(std::string_view text) const;
};

/// "id | catalog | title_text | keywords: k1, k2" per item, newline separated.
/// Keywords are omitted when `keywords` is empty.
std::string items_block(const ModuleJob& job, std::span<const KeywordSet> keywords);

/// Text after a case-insensitive "title:" prefix on the first line that has one.
std::optional<std::string> parse_title_reply(std::string_view reply);

/// Comma-separated keywords, trimmed, empties dropped, truncated to `limit`.
std::vector<std::string> parse_keyword_reply(std::string_view reply, std::size_t limit);

KeywordSet distill(const Item& item, std::size_t keywords_per_item, const AgentContext& ctx);

CandidateTitle generate_initial(const ModuleJob& job, std::span<const KeywordSet> keywords,
                                const TitleLimits& limits, const AgentContext& ctx, int chain_id);

/// GAG prompt without keyword blocks; provenance baseline.
CandidateTitle generate_baseline(const ModuleJob& job, const TitleLimits& limits,
                                 const AgentContext& ctx);

FeedbackReport evaluate(const CandidateTitle& title, const ModuleJob& job,
                        std::span<const KeywordSet> keywords, const RelevanceScorer& scorer,
                        const TitleLimits& limits, const AgentContext& ctx);

CandidateTitle regenerate(const CandidateTitle& prev, const FeedbackReport& report,
                          const ModuleJob& job, std::span<const KeywordSet> keywords,
                          const TitleLimits& limits, const AgentContext& ctx);

ModeratorSummary moderate(std::span<const ScoredTitle> candidates, const TitleLimits& limits);

/// Picks one of `candidates` (deduplicated by text first).
/// Rule mode: feasible first, then coverage, then shorter, then lexicographic.
/// LLM mode: left-fold pairwise tournament; a reply that is neither title is
/// retried and then settled by the rule for that pair.
CandidateTitle arbitrate(std::span<const CandidateTitle> candidates, const ModeratorSummary& summary,
                         ArbiterMode mode, const ModuleJob& job,
                         std::span<const KeywordSet> keywords, const AgentContext* ctx);

}  // namespace carts
