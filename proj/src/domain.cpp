#include "carts/domain.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "carts/errors.hpp"
#include "carts/text.hpp"

namespace carts {

const Item* ModuleJob::find(std::string_view item_id) const {
    auto it = std::find_if(items.begin(), items.end(),
                           [&](const Item& item) { return item.id == item_id; });
    return it == items.end() ? nullptr : &*it;
}

const ModuleJob& validate_job(const ModuleJob& job) {
    if (job.items.empty()) throw EmptyJob(job.module_id);
    std::unordered_set<std::string> seen;
    for (const auto& item : job.items) {
        if (item.id.empty()) throw InvalidValue("module " + job.module_id + " has an item with an empty id");
        if (text::trim(item.title_text).empty()) throw EmptyTitleText(item.id);
        if (!seen.insert(item.id).second) throw DuplicateItemId(item.id);
    }
    return job;
}

std::string_view to_string(Provenance p) {
    switch (p) {
        case Provenance::initial: return "initial";
        case Provenance::refined: return "refined";
        case Provenance::baseline: return "baseline";
    }
    return "initial";
}

Provenance provenance_from_string(std::string_view s) {
    if (s == "initial") return Provenance::initial;
    if (s == "refined") return Provenance::refined;
    if (s == "baseline") return Provenance::baseline;
    throw InvalidValue("unknown provenance: " + std::string(s));
}

CandidateTitle::CandidateTitle(std::string text, int iteration, int chain_id, Provenance provenance,
                               std::vector<std::string> trace)
    : text_(std::move(text)),
      char_len_(text::char_length(text_)),
      word_count_(text::word_count(text_)),
      iteration_(iteration),
      chain_id_(chain_id),
      provenance_(provenance),
      trace_(std::move(trace)) {
    if (text_.empty()) throw InvalidValue("title text is empty");
    if (text::has_line_break(text_)) throw InvalidValue("title text contains a line break");
    if (iteration_ < 0) throw InvalidValue("negative iteration index");
}

CandidateTitle CandidateTitle::with_iteration(int iteration) const {
    CandidateTitle copy = *this;
    copy.iteration_ = iteration;
    return copy;
}

RelevanceVector::RelevanceVector(std::vector<std::pair<std::string, int>> bits)
    : bits_(std::move(bits)) {
    std::unordered_set<std::string> seen;
    for (const auto& [id, bit] : bits_) {
        if (bit != 0 && bit != 1) throw InvalidValue("relevance bit for " + id + " is not 0/1");
        if (!seen.insert(id).second) throw InvalidValue("relevance vector repeats id " + id);
        coverage_ += bit;
    }
}

int RelevanceVector::bit(std::string_view item_id) const {
    for (const auto& [id, bit] : bits_) {
        if (id == item_id) return bit;
    }
    throw InvalidValue("relevance vector has no item " + std::string(item_id));
}

std::vector<std::string> RelevanceVector::uncovered() const {
    std::vector<std::string> out;
    for (const auto& [id, bit] : bits_) {
        if (bit == 0) out.push_back(id);
    }
    return out;
}

bool RelevanceVector::matches(const ModuleJob& job) const {
    if (bits_.size() != job.items.size()) return false;
    for (std::size_t i = 0; i < bits_.size(); ++i) {
        if (bits_[i].first != job.items[i].id) return false;
    }
    return true;
}

std::string_view to_string(BackendKind k) { return k == BackendKind::llm ? "llm" : "mock"; }

std::string_view to_string(ScorerKind k) {
    return k == ScorerKind::llm_judge ? "llm_judge" : "keyword_overlap";
}

std::string_view to_string(ArbiterMode m) { return m == ArbiterMode::llm ? "llm" : "rule"; }

void PipelineConfig::validate() const {
    if (max_chars == 0) throw InvalidConfig("max_chars must be positive");
    if (max_words == 0) throw InvalidConfig("max_words must be positive");
    if (keywords_per_item == 0) throw InvalidConfig("keywords per item must be at least 1");
    if (chains == 0) throw InvalidConfig("at least one chain is required");
    if (!(temperature >= 0.0) || !std::isfinite(temperature))
        throw InvalidConfig("temperature must be a finite value >= 0");
    if (const auto* theory = std::get_if<TheoryBudget>(&budget)) {
        if (!(theory->alpha > 0.0 && theory->alpha <= 1.0))
            throw InvalidTheoryParams("alpha must lie in (0, 1]");
        if (!(theory->beta > 0.0 && theory->beta <= 1.0))
            throw InvalidTheoryParams("beta must lie in (0, 1]");
        if (!(theory->gamma > 0.0 && theory->gamma <= 1.0))
            throw InvalidTheoryParams("gamma must lie in (0, 1]");
        if (!(theory->epsilon > 0.0 && theory->epsilon < 1.0))
            throw InvalidTheoryParams("epsilon must lie in (0, 1)");
        if (theory->opt_estimate && *theory->opt_estimate < 0)
            throw InvalidTheoryParams("OPT estimate must be >= 0");
        if (theory->c0_estimate < 0) throw InvalidTheoryParams("C0 estimate must be >= 0");
    }
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace carts
