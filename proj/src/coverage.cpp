#include "carts/coverage.hpp"

#include <algorithm>
#include <limits>

#include "carts/errors.hpp"
#include "carts/text.hpp"

namespace carts {

const ConstraintSet& ConstraintSet::standard() {
    static const ConstraintSet set = [] {
        ConstraintSet s;
        s.add({"length", [](const CandidateTitle& t, const TitleLimits& l) {
                   return t.char_len() <= l.max_chars;
               }});
        s.add({"word_count", [](const CandidateTitle& t, const TitleLimits& l) {
                   return t.word_count() <= l.max_words;
               }});
        s.add({"single_line", [](const CandidateTitle& t, const TitleLimits&) {
                   return !text::has_line_break(t.text());
               }});
        return s;
    }();
    return set;
}

ConstraintSet& ConstraintSet::add(Constraint constraint) {
    constraints_.push_back(std::move(constraint));
    return *this;
}

FeasibilityVerdict feasible(const CandidateTitle& title, const TitleLimits& limits,
                            const ConstraintSet& constraints) {
    FeasibilityVerdict verdict;
    for (const auto& c : constraints.constraints()) {
        if (!c.holds(title, limits)) verdict.violations.push_back(c.name);
    }
    verdict.feasible = verdict.violations.empty();
    return verdict;
}

int KeywordOverlapScorer::score(const CandidateTitle& title, const Item&,
                                const KeywordSet& keywords, std::string_view) const {
    const auto title_tokens = text::tokenize(title.text());
    for (const auto& keyword : keywords.keywords) {
        const auto kw_tokens = text::tokenize(keyword);
        if (kw_tokens.empty()) continue;
        auto hit = std::search(title_tokens.begin(), title_tokens.end(), kw_tokens.begin(),
                               kw_tokens.end());
        if (hit != title_tokens.end()) return 1;
    }
    return 0;
}

LlmJudgeScorer::LlmJudgeScorer(std::shared_ptr<AgentBackend> backend, PromptTemplate judge,
                               std::size_t parse_retries, std::uint64_t seed)
    : backend_(std::move(backend)), judge_(std::move(judge)), parse_retries_(parse_retries),
      seed_(seed) {}

int LlmJudgeScorer::score(const CandidateTitle& title, const Item& item, const KeywordSet& keywords,
                          std::string_view module_id) const {
    AgentRequest request;
    request.role = AgentRole::judge;
    request.module_id = std::string(module_id);
    request.scope = item.id;
    request.seed = seed_;
    request.prompt = judge_.render({
        {"title", title.text()},
        {"prod_info", product_info(item)},
        {"keywords", text::join(keywords.keywords, ", ")},
    });
    std::string last;
    for (std::size_t attempt = 0; attempt <= parse_retries_; ++attempt) {
        last = text::trim(backend_->complete(request));
        if (last == "1") return 1;
        if (last == "0") return 0;
    }
    throw JudgeParseFailure(parse_retries_ + 1, last);
}

std::string product_info(const Item& item) {
    std::vector<std::string> parts;
    for (const auto* field : {&item.catalog, &item.title_text, &item.supplement}) {
        auto trimmed = text::trim(*field);
        if (!trimmed.empty()) parts.push_back(std::move(trimmed));
    }
    return text::join(parts, " | ");
}

int relevance(const CandidateTitle& title, const Item& item, const KeywordSet& keywords,
              const RelevanceScorer& scorer, std::string_view module_id) {
    if (keywords.item_id != item.id)
        throw InvalidValue("keyword set for " + keywords.item_id + " paired with item " + item.id);
    return scorer.score(title, item, keywords, module_id);
}

RelevanceVector coverage(const CandidateTitle& title, const ModuleJob& job,
                         std::span<const KeywordSet> keywords, const RelevanceScorer& scorer) {
    if (keywords.size() != job.items.size())
        throw InvalidValue("expected one keyword set per item in module " + job.module_id);
    std::vector<std::pair<std::string, int>> bits;
    bits.reserve(job.items.size());
    for (std::size_t i = 0; i < job.items.size(); ++i) {
        bits.emplace_back(job.items[i].id,
                          relevance(title, job.items[i], keywords[i], scorer, job.module_id));
    }
    return RelevanceVector(std::move(bits));
}

OptResult brute_force_opt(std::span<const ScoredTitle> pool, const TitleLimits& limits) {
    if (pool.empty()) throw InvalidValue("candidate pool is empty");

    std::vector<const ScoredTitle*> admissible;
    for (const auto& entry : pool) {
        if (feasible(entry.title, limits).feasible) admissible.push_back(&entry);
    }
    if (admissible.empty()) throw NoFeasibleCandidate();

    int best_cov = -1;
    for (const auto* e : admissible) best_cov = std::max(best_cov, e->bits.coverage());
    std::erase_if(admissible, [&](const ScoredTitle* e) { return e->bits.coverage() != best_cov; });

    std::size_t shortest = std::numeric_limits<std::size_t>::max();
    for (const auto* e : admissible) shortest = std::min(shortest, e->title.char_len());
    std::erase_if(admissible, [&](const ScoredTitle* e) { return e->title.char_len() != shortest; });

    const ScoredTitle* winner = admissible.front();
    for (const auto* e : admissible) {
        if (e->title.text() < winner->title.text()) winner = e;
    }
    return {winner->title, best_cov};
}

OptResult brute_force_opt(std::span<const CandidateTitle> pool, const ModuleJob& job,
                          std::span<const KeywordSet> keywords, const RelevanceScorer& scorer,
                          const PipelineConfig& config) {
    std::vector<ScoredTitle> scored;
    scored.reserve(pool.size());
    for (const auto& title : pool) scored.push_back({title, coverage(title, job, keywords, scorer)});
    return brute_force_opt(scored, TitleLimits::from(config));
}

}  // namespace carts
