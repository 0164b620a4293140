#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "carts/backend.hpp"
#include "carts/domain.hpp"
#include "carts/pipeline.hpp"
#include "carts/prompts.hpp"

namespace carts::testing {

inline std::filesystem::path fixture(const std::string& name) {
    return std::filesystem::path(CARTS_FIXTURE_DIR) / name;
}

inline std::shared_ptr<const PromptLibrary> default_prompts() {
    static const auto lib = std::make_shared<const PromptLibrary>(PromptLibrary::defaults());
    return lib;
}

inline Item item(std::string id, std::string title, std::string catalog = "Catalog",
                 std::string supplement = {}) {
    return Item{std::move(id), std::move(catalog), std::move(title), std::move(supplement)};
}

inline std::shared_ptr<ScriptedBackend> script(
    std::map<std::string, std::vector<std::string>> streams) {
    return std::make_shared<ScriptedBackend>(std::move(streams));
}

inline AgentContext context(std::shared_ptr<AgentBackend> backend, std::size_t retries = 2,
                            std::string module_id = "m") {
    return AgentContext{std::move(backend), default_prompts(), retries, std::move(module_id), 0};
}

/// The committed three-item speaker fixture: k = 2 chains, T = 2 rounds, seed 7.
inline PipelineConfig speakers_config() {
    PipelineConfig config;
    config.max_chars = 60;
    config.max_words = 10;
    config.keywords_per_item = 5;
    config.chains = 2;
    config.budget = std::size_t{2};
    config.seed = 7;
    return config;
}

/// A random job together with a script whose every stream is long enough for
/// `chains` chains of `rounds` rounds. Titles are drawn from the item keyword
/// vocabulary so coverage varies; some exceed the length or word limits.
/// Chain 0's initial title is always feasible.
struct RandomRun {
    ModuleJob job;
    std::map<std::string, std::vector<std::string>> streams;
};

inline RandomRun random_run(std::mt19937_64& rng, std::size_t chains, std::size_t rounds,
                            std::size_t max_items = 6) {
    static const std::vector<std::string> vocab = {
        "audio", "party",  "outdoor", "rugged", "lights", "bass",   "travel", "smart",
        "home",  "studio", "gaming",  "retro",  "wireless", "compact", "premium", "kids"};
    auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };

    RandomRun run;
    run.job.module_id = "rand";
    const std::size_t n_items = 1 + pick(max_items);
    for (std::size_t i = 0; i < n_items; ++i) {
        const auto id = "it-" + std::to_string(i);
        run.job.items.push_back(item(id, "Item " + std::to_string(i) + " " + vocab[pick(vocab.size())]));
        std::string kws;
        const std::size_t n_kw = 1 + pick(3);
        for (std::size_t k = 0; k < n_kw; ++k) kws += (k ? ", " : "") + vocab[pick(vocab.size())];
        run.streams["keywords:" + id] = {kws};
    }
    auto random_title = [&](bool keep_short) {
        const std::size_t words = keep_short ? 1 + pick(3) : 1 + pick(14);
        std::string t = "title:";
        for (std::size_t w = 0; w < words; ++w) t += " " + vocab[pick(vocab.size())];
        return t;
    };
    for (std::size_t c = 0; c < chains; ++c) {
        const auto scope = std::to_string(c);
        run.streams["gag:" + scope] = {random_title(c == 0)};
        auto& fb = run.streams["feedback:" + scope];
        auto& regen = run.streams["regeneration:" + scope];
        for (std::size_t m = 0; m < rounds; ++m) {
            fb.push_back(pick(2) ? "Cover " + run.job.items[pick(n_items)].id + " better." : "Needs work.");
            if (pick(6) == 0) regen.push_back("no usable title here");
            regen.push_back(random_title(false));
        }
    }
    return run;
}

}  // namespace carts::testing
