#include "carts/agents.hpp"

#include <algorithm>
#include <sstream>
#include <type_traits>

#include "carts/errors.hpp"
#include "carts/text.hpp"

namespace carts {

namespace {

Bindings common_bindings(const ModuleJob& job, std::span<const KeywordSet> keywords,
                         const TitleLimits& limits) {
    return {
        {"prod_info_and_keys", items_block(job, keywords)},
        {"max_chars", std::to_string(limits.max_chars)},
        {"max_words", std::to_string(limits.max_words)},
    };
}

AgentRequest make_request(AgentRole role, const AgentContext& ctx, std::string scope,
                          std::string prompt) {
    AgentRequest request;
    request.role = role;
    request.module_id = ctx.module_id;
    request.scope = std::move(scope);
    request.prompt = std::move(prompt);
    request.seed = ctx.seed;
    return request;
}

// Calls the backend until `parse` yields a value, at most parse_retries + 1 times.
template <typename Parse>
auto call_with_retries(const AgentContext& ctx, const AgentRequest& request, Parse parse)
    -> std::decay_t<decltype(*parse(std::string{}))> {
    std::string last;
    for (std::size_t attempt = 0; attempt <= ctx.parse_retries; ++attempt) {
        last = ctx.backend->complete(request);
        if (auto parsed = parse(last)) return *parsed;
    }
    throw ParseFailure(std::string(to_string(request.role)), ctx.parse_retries + 1, last);
}

std::string strip_quotes(std::string s) {
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = text::trim(s.substr(1, s.size() - 2));
    return s;
}

std::string chain_scope(int chain_id) { return std::to_string(chain_id); }

// Rule-mode preference: feasible, then coverage, then shorter, then lexicographic.
bool rule_prefers(const ModeratorEntry& a, const ModeratorEntry& b) {
    if (a.verdict.feasible != b.verdict.feasible) return a.verdict.feasible;
    if (a.coverage != b.coverage) return a.coverage > b.coverage;
    if (a.char_len != b.char_len) return a.char_len < b.char_len;
    return a.text < b.text;
}

}  // namespace

std::string ModeratorSummary::render() const {
    std::ostringstream out;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto& e = entries[i];
        out << (i + 1) << ". \"" << e.text << "\" | coverage " << e.coverage << "/" << e.items
            << " | chars " << e.char_len << " | ";
        if (e.verdict.feasible) {
            out << "feasible";
        } else {
            out << "infeasible: " << text::join(e.verdict.violations, ", ");
        }
        out << " | " << e.provenance << "\n";
    }
    return out.str();
}

const ModeratorEntry* ModeratorSummary::find(std::string_view text) const {
    auto it = std::find_if(entries.begin(), entries.end(),
                           [&](const ModeratorEntry& e) { return e.text == text; });
    return it == entries.end() ? nullptr : &*it;
}

std::string items_block(const ModuleJob& job, std::span<const KeywordSet> keywords) {
    std::string out;
    for (std::size_t i = 0; i < job.items.size(); ++i) {
        const auto& item = job.items[i];
        if (i) out += '\n';
        out += item.id + " | " + item.catalog + " | " + item.title_text;
        if (!keywords.empty()) {
            out += " | keywords: ";
            out += text::join(keywords[i].keywords, ", ");
        }
    }
    return out;
}

std::optional<std::string> parse_title_reply(std::string_view reply) {
    for (const auto& raw_line : text::split(reply, '\n')) {
        std::string line = text::trim(raw_line);
        if (!line.empty() && line.front() == '"') line = text::trim(line.substr(1));
        if (!text::iequals_prefix(line, "title:")) continue;
        std::string title = text::trim(std::string_view(line).substr(6));
        if (!title.empty() && title.front() == '"') title = text::trim(title.substr(1));
        if (!title.empty() && title.back() == '"') title = text::trim(title.substr(0, title.size() - 1));
        if (title.empty()) return std::nullopt;
        return title;
    }
    return std::nullopt;
}

std::vector<std::string> parse_keyword_reply(std::string_view reply, std::size_t limit) {
    std::vector<std::string> keywords;
    for (const auto& part : text::split(reply, ',')) {
        auto kw = text::trim(part);
        if (kw.empty()) continue;
        keywords.push_back(std::move(kw));
        if (keywords.size() == limit) break;
    }
    return keywords;
}

KeywordSet distill(const Item& item, std::size_t keywords_per_item, const AgentContext& ctx) {
    if (keywords_per_item == 0) throw InvalidValue("keywords per item must be at least 1");
    const auto prompt = ctx.prompts->keywords.render({
        {"prod_info", product_info(item)},
        {"l", std::to_string(keywords_per_item)},
    });
    const auto request = make_request(AgentRole::keywords, ctx, item.id, prompt);
    auto keywords = call_with_retries(ctx, request, [&](const std::string& reply) {
        auto kws = parse_keyword_reply(reply, keywords_per_item);
        return kws.empty() ? std::nullopt : std::optional(std::move(kws));
    });
    return {item.id, std::move(keywords)};
}

CandidateTitle generate_initial(const ModuleJob& job, std::span<const KeywordSet> keywords,
                                const TitleLimits& limits, const AgentContext& ctx, int chain_id) {
    const auto prompt = ctx.prompts->gag.render(common_bindings(job, keywords, limits));
    const auto request = make_request(AgentRole::gag, ctx, chain_scope(chain_id), prompt);
    auto text = call_with_retries(ctx, request, parse_title_reply);
    return CandidateTitle(std::move(text), 0, chain_id, Provenance::initial);
}

CandidateTitle generate_baseline(const ModuleJob& job, const TitleLimits& limits,
                                 const AgentContext& ctx) {
    const auto prompt = ctx.prompts->gag.render(common_bindings(job, {}, limits));
    const auto request = make_request(AgentRole::gag, ctx, "vanilla", prompt);
    auto text = call_with_retries(ctx, request, parse_title_reply);
    return CandidateTitle(std::move(text), 0, 0, Provenance::baseline);
}

FeedbackReport evaluate(const CandidateTitle& title, const ModuleJob& job,
                        std::span<const KeywordSet> keywords, const RelevanceScorer& scorer,
                        const TitleLimits& limits, const AgentContext& ctx) {
    FeedbackReport report;
    report.bits = coverage(title, job, keywords, scorer);
    report.length_ok = feasible(title, limits).feasible;

    auto bindings = common_bindings(job, keywords, limits);
    bindings["title"] = title.text();
    const auto prompt = ctx.prompts->feedback.render(bindings);
    const auto request =
        make_request(AgentRole::feedback, ctx, chain_scope(title.chain_id()), prompt);
    report.critique = call_with_retries(ctx, request, [](const std::string& reply) {
        auto critique = text::trim(reply);
        return critique.empty() ? std::nullopt : std::optional(std::move(critique));
    });

    const auto lowered = text::to_lower_ascii(report.critique);
    for (const auto& item : job.items) {
        if (report.bits.bit(item.id) != 0) continue;
        const auto item_title = text::to_lower_ascii(text::trim(item.title_text));
        if (text::contains_delimited(report.critique, item.id) ||
            lowered.find(item_title) != std::string::npos) {
            report.flagged_uncovered.push_back(item.id);
        }
    }
    if (report.flagged_uncovered.empty()) report.flagged_uncovered = report.bits.uncovered();
    return report;
}

CandidateTitle regenerate(const CandidateTitle& prev, const FeedbackReport& report,
                          const ModuleJob& job, std::span<const KeywordSet> keywords,
                          const TitleLimits& limits, const AgentContext& ctx) {
    auto bindings = common_bindings(job, keywords, limits);
    bindings["title"] = prev.text();
    bindings["feedback"] = report.critique;
    const auto prompt = ctx.prompts->regeneration.render(bindings);
    const auto request =
        make_request(AgentRole::regeneration, ctx, chain_scope(prev.chain_id()), prompt);
    auto text = call_with_retries(ctx, request, parse_title_reply);

    auto trace = prev.trace();
    trace.push_back("feedback@" + std::to_string(prev.iteration()) + ": " + report.critique);
    return CandidateTitle(std::move(text), prev.iteration() + 1, prev.chain_id(),
                          Provenance::refined, std::move(trace));
}

ModeratorSummary moderate(std::span<const ScoredTitle> candidates, const TitleLimits& limits) {
    ModeratorSummary summary;
    for (const auto& c : candidates) {
        ModeratorEntry entry;
        entry.text = c.title.text();
        entry.coverage = c.bits.coverage();
        entry.items = c.bits.size();
        entry.char_len = c.title.char_len();
        entry.verdict = feasible(c.title, limits);
        entry.provenance = "chain " + std::to_string(c.title.chain_id()) + ", iteration " +
                           std::to_string(c.title.iteration()) + ", " +
                           std::string(to_string(c.title.provenance()));
        summary.entries.push_back(std::move(entry));
    }
    return summary;
}

CandidateTitle arbitrate(std::span<const CandidateTitle> candidates, const ModeratorSummary& summary,
                         ArbiterMode mode, const ModuleJob& job,
                         std::span<const KeywordSet> keywords, const AgentContext* ctx) {
    if (candidates.empty()) throw InvalidValue("arbitration needs at least one candidate");
    std::vector<CandidateTitle> unique;
    for (const auto& c : candidates) {
        const bool seen = std::any_of(unique.begin(), unique.end(),
                                      [&](const CandidateTitle& u) { return u.text() == c.text(); });
        if (!seen) unique.push_back(c);
    }
    auto entry_of = [&](const CandidateTitle& c) -> const ModeratorEntry& {
        const auto* e = summary.find(c.text());
        if (!e) throw InvalidValue("moderator summary lacks candidate \"" + c.text() + "\"");
        return *e;
    };

    if (mode == ArbiterMode::rule || unique.size() == 1) {
        const CandidateTitle* best = &unique.front();
        for (const auto& c : unique) {
            if (rule_prefers(entry_of(c), entry_of(*best))) best = &c;
        }
        return *best;
    }

    if (!ctx) throw InvalidValue("llm arbitration needs an agent context");
    CandidateTitle champion = unique.front();
    for (std::size_t i = 1; i < unique.size(); ++i) {
        const auto& challenger = unique[i];
        auto bindings = common_bindings(job, keywords, {});
        bindings["title"] = champion.text();
        bindings["title_2"] = challenger.text();
        bindings["summary"] = summary.render();
        const auto prompt = ctx->prompts->arbitrator.render(bindings);
        const auto request =
            make_request(AgentRole::arbitrator, *ctx, "round-" + std::to_string(i), prompt);
        std::optional<int> pick;
        for (std::size_t attempt = 0; attempt <= ctx->parse_retries && !pick; ++attempt) {
            const auto reply = strip_quotes(text::trim(ctx->backend->complete(request)));
            if (reply == champion.text()) pick = 0;
            else if (reply == challenger.text()) pick = 1;
        }
        if (!pick) pick = rule_prefers(entry_of(challenger), entry_of(champion)) ? 1 : 0;
        if (*pick == 1) champion = challenger;
    }
    return champion;
}

}  // namespace carts
