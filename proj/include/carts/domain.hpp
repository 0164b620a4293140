#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace carts {

/// One recommended item: catalog path, title text and optional supplementary text.
struct Item {
    std::string id;
    std::string catalog;
    std::string title_text;
    std::string supplement;

    bool operator==(const Item&) const = default;
};

/// The items shown together in one carousel module.
struct ModuleJob {
    std::string module_id;
    std::vector<Item> items;
    std::optional<std::string> anchor_id;

    std::size_t size() const { return items.size(); }
    const Item* find(std::string_view item_id) const;

    bool operator==(const ModuleJob&) const = default;
};

/// Checks the job invariants and returns it unchanged.
/// Throws EmptyJob, EmptyTitleText or DuplicateItemId.
const ModuleJob& validate_job(const ModuleJob& job);

struct KeywordSet {
    std::string item_id;
    std::vector<std::string> keywords;

    bool operator==(const KeywordSet&) const = default;
};

enum class Provenance { initial, refined, baseline };

std::string_view to_string(Provenance p);
Provenance provenance_from_string(std::string_view s);

/// A generated module title. Lengths are derived from the text on construction.
class CandidateTitle {
public:
    /// Throws InvalidValue when the text is empty or spans several lines.
    CandidateTitle(std::string text, int iteration, int chain_id, Provenance provenance,
                   std::vector<std::string> trace = {});

    const std::string& text() const { return text_; }
    std::size_t char_len() const { return char_len_; }
    std::size_t word_count() const { return word_count_; }
    int iteration() const { return iteration_; }
    int chain_id() const { return chain_id_; }
    Provenance provenance() const { return provenance_; }
    const std::vector<std::string>& trace() const { return trace_; }

    CandidateTitle with_iteration(int iteration) const;

    bool operator==(const CandidateTitle&) const = default;

private:
    std::string text_;
    std::size_t char_len_;
    std::size_t word_count_;
    int iteration_;
    int chain_id_;
    Provenance provenance_;
    std::vector<std::string> trace_;
};

/// Per-item relevance bits of one title, kept in job item order.
class RelevanceVector {
public:
    RelevanceVector() = default;
    /// Throws InvalidValue on a bit outside {0,1} or a repeated id.
    explicit RelevanceVector(std::vector<std::pair<std::string, int>> bits);

    const std::vector<std::pair<std::string, int>>& bits() const { return bits_; }
    int coverage() const { return coverage_; }
    std::size_t size() const { return bits_.size(); }
    /// Throws InvalidValue for an unknown id.
    int bit(std::string_view item_id) const;
    std::vector<std::string> uncovered() const;
    /// Keys equal the job's item ids, in order.
    bool matches(const ModuleJob& job) const;

    bool operator==(const RelevanceVector&) const = default;

private:
    std::vector<std::pair<std::string, int>> bits_;
    int coverage_ = 0;
};

enum class BackendKind { llm, mock };
enum class ScorerKind { keyword_overlap, llm_judge };
enum class ArbiterMode { rule, llm };

std::string_view to_string(BackendKind k);
std::string_view to_string(ScorerKind k);
std::string_view to_string(ArbiterMode m);

/// Inputs for deriving the refinement budget from the convergence bound.
struct TheoryBudget {
    double alpha = 1.0;
    double beta = 0.0;
    double gamma = 0.0;
    double epsilon = 0.05;
    std::optional<int> opt_estimate;  // defaults to the job size
    int c0_estimate = 0;

    bool operator==(const TheoryBudget&) const = default;
};

struct PipelineConfig {
    std::size_t max_chars = 60;
    std::size_t max_words = 10;
    std::size_t keywords_per_item = 5;
    std::size_t chains = 2;
    /// Refinement rounds per chain, either explicit or derived from theory inputs.
    std::variant<std::size_t, TheoryBudget> budget = std::size_t{3};
    BackendKind backend = BackendKind::mock;
    ScorerKind scorer = ScorerKind::keyword_overlap;
    ArbiterMode arbiter = ArbiterMode::rule;
    double temperature = 0.7;
    std::size_t parse_retries = 2;
    std::uint64_t seed = 0;

    /// Throws InvalidConfig (or InvalidTheoryParams for the theory inputs).
    void validate() const;

    bool operator==(const PipelineConfig&) const = default;
};

/// Deterministic 64-bit mix of a seed and a stream index (SplitMix64 finalizer).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace carts
