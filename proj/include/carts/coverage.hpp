#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "carts/backend.hpp"
#include "carts/domain.hpp"
#include "carts/prompts.hpp"

namespace carts {

/// Bounds a title must respect: the length limit K plus the style predicates.
struct TitleLimits {
    std::size_t max_chars = 60;
    std::size_t max_words = 10;

    static TitleLimits from(const PipelineConfig& config) {
        return {config.max_chars, config.max_words};
    }
};

struct Constraint {
    std::string name;
    std::function<bool(const CandidateTitle&, const TitleLimits&)> holds;
};

/// Ordered list of named predicates; the first entry is always "length".
class ConstraintSet {
public:
    /// length, word_count, single_line.
    static const ConstraintSet& standard();

    ConstraintSet& add(Constraint constraint);
    const std::vector<Constraint>& constraints() const { return constraints_; }

private:
    std::vector<Constraint> constraints_;
};

struct FeasibilityVerdict {
    bool feasible = true;
    std::vector<std::string> violations;
};

FeasibilityVerdict feasible(const CandidateTitle& title, const TitleLimits& limits,
                            const ConstraintSet& constraints = ConstraintSet::standard());

inline FeasibilityVerdict feasible(const CandidateTitle& title, const PipelineConfig& config) {
    return feasible(title, TitleLimits::from(config));
}

/// Binary relevance indicator R(title, item).
class RelevanceScorer {
public:
    virtual ~RelevanceScorer() = default;
    virtual ScorerKind kind() const = 0;
    virtual int score(const CandidateTitle& title, const Item& item, const KeywordSet& keywords,
                      std::string_view module_id) const = 0;
};

/// 1 iff some keyword's token sequence occurs contiguously in the title tokens.
/// Tokens are lowercased and split on non-alphanumeric boundaries; no stemming.
class KeywordOverlapScorer final : public RelevanceScorer {
public:
    ScorerKind kind() const override { return ScorerKind::keyword_overlap; }
    int score(const CandidateTitle& title, const Item& item, const KeywordSet& keywords,
              std::string_view module_id) const override;
};

/// Asks a judge agent for a strict "1"/"0" verdict per item.
class LlmJudgeScorer final : public RelevanceScorer {
public:
    LlmJudgeScorer(std::shared_ptr<AgentBackend> backend, PromptTemplate judge,
                   std::size_t parse_retries, std::uint64_t seed = 0);

    ScorerKind kind() const override { return ScorerKind::llm_judge; }
    /// Throws JudgeParseFailure or BackendError.
    int score(const CandidateTitle& title, const Item& item, const KeywordSet& keywords,
              std::string_view module_id) const override;

private:
    std::shared_ptr<AgentBackend> backend_;
    PromptTemplate judge_;
    std::size_t parse_retries_;
    std::uint64_t seed_;
};

/// Catalog, title text and supplement joined as one product description.
std::string product_info(const Item& item);

int relevance(const CandidateTitle& title, const Item& item, const KeywordSet& keywords,
              const RelevanceScorer& scorer, std::string_view module_id = {});

/// Keywords must hold one set per item, in job order.
RelevanceVector coverage(const CandidateTitle& title, const ModuleJob& job,
                         std::span<const KeywordSet> keywords, const RelevanceScorer& scorer);

struct ScoredTitle {
    CandidateTitle title;
    RelevanceVector bits;
};

struct OptResult {
    CandidateTitle title;
    int opt = 0;
};

/// Exhaustive search for the best feasible title in a pool: maximal coverage,
/// then smaller char_len, then lexicographically smaller text.
/// Throws NoFeasibleCandidate, or InvalidValue for an empty pool.
OptResult brute_force_opt(std::span<const ScoredTitle> pool, const TitleLimits& limits);

OptResult brute_force_opt(std::span<const CandidateTitle> pool, const ModuleJob& job,
                          std::span<const KeywordSet> keywords, const RelevanceScorer& scorer,
                          const PipelineConfig& config);

}  // namespace carts
