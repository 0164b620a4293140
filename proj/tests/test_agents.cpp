#include <gtest/gtest.h>

#include "carts/agents.hpp"
#include "carts/errors.hpp"
#include "test_support.hpp"

using namespace carts;
using carts::testing::context;
using carts::testing::item;
using carts::testing::script;

namespace {

ModuleJob three_items() {
    return {"m",
            {item("a", "Red Kettle", "Kitchen"), item("b", "Blue Toaster", "Kitchen"),
             item("c", "Green Blender", "Kitchen")},
            std::nullopt};
}

std::vector<KeywordSet> three_keywords() { return {{"a", {"kettle"}}, {"b", {"toaster"}}, {"c", {"blender"}}}; }

CandidateTitle title(const std::string& text, int iteration = 0, int chain = 0) {
    return CandidateTitle(text, iteration, chain, iteration ? Provenance::refined : Provenance::initial);
}

}  // namespace

TEST(ParseTitleReply, Variants) {
    EXPECT_EQ(parse_title_reply("title: Summer Picks"), "Summer Picks");
    EXPECT_EQ(parse_title_reply("Sure!\nTitle:   Summer Picks  "), "Summer Picks");
    EXPECT_EQ(parse_title_reply("\"title: Summer Picks\""), "Summer Picks");
    EXPECT_EQ(parse_title_reply("TITLE: \"Summer Picks\""), "Summer Picks");
    EXPECT_EQ(parse_title_reply("Summer Picks"), std::nullopt);
    EXPECT_EQ(parse_title_reply("title:   "), std::nullopt);
}

TEST(ParseKeywordReply, TrimsDropsEmptiesAndTruncates) {
    EXPECT_EQ(parse_keyword_reply(" a, b ,, c,d ", 3), (std::vector<std::string>{"a", "b", "c"}));
    EXPECT_TRUE(parse_keyword_reply(" , ", 5).empty());
}

TEST(ItemsBlock, Format) {
    const auto job = three_items();
    const auto kws = three_keywords();
    EXPECT_EQ(items_block(job, kws),
              "a | Kitchen | Red Kettle | keywords: kettle\n"
              "b | Kitchen | Blue Toaster | keywords: toaster\n"
              "c | Kitchen | Green Blender | keywords: blender");
    EXPECT_EQ(items_block(job, {}), "a | Kitchen | Red Kettle\nb | Kitchen | Blue Toaster\nc | Kitchen | Green Blender");
}

TEST(Distill, RetriesThenFails) {
    auto backend = script({{"keywords:a", {"", "kettle, red, steel"}}, {"keywords:b", {"", " ", ","}}});
    const auto ctx = context(backend, 2);
    auto kws = distill(item("a", "Red Kettle"), 2, ctx);
    EXPECT_EQ(kws, (KeywordSet{"a", {"kettle", "red"}}));
    EXPECT_THROW(distill(item("b", "Blue Toaster"), 2, ctx), ParseFailure);
    const auto reqs = backend->requests();
    ASSERT_FALSE(reqs.empty());
    EXPECT_NE(reqs.front().prompt.find("Catalog | Red Kettle"), std::string::npos);
    EXPECT_EQ(reqs.front().scope, "a");
}

TEST(GenerateInitial, UsesChainScopeAndKeywords) {
    auto backend = script({{"gag:1", {"title: Kitchen Helpers"}}});
    const auto job = three_items();
    const auto kws = three_keywords();
    auto t = generate_initial(job, kws, TitleLimits{}, context(backend), 1);
    EXPECT_EQ(t.text(), "Kitchen Helpers");
    EXPECT_EQ(t.chain_id(), 1);
    EXPECT_EQ(t.iteration(), 0);
    EXPECT_EQ(t.provenance(), Provenance::initial);
    const auto prompt = backend->requests().front().prompt;
    EXPECT_NE(prompt.find("keywords: toaster"), std::string::npos);
    EXPECT_TRUE(find_placeholders(prompt).empty());
}

TEST(GenerateBaseline, OmitsKeywords) {
    auto backend = script({{"gag:vanilla", {"title: Kitchen Helpers"}}});
    auto t = generate_baseline(three_items(), TitleLimits{}, context(backend));
    EXPECT_EQ(t.provenance(), Provenance::baseline);
    EXPECT_EQ(backend->requests().front().prompt.find("keywords:"), std::string::npos);
}

TEST(Evaluate, FlagsItemNamedById) {
    auto backend = script({{"feedback:0", {"Please cover c as well."}}});
    auto report = evaluate(title("Red Kettle"), three_items(), three_keywords(), KeywordOverlapScorer{},
                           TitleLimits{}, context(backend));
    EXPECT_EQ(report.bits.coverage(), 1);
    EXPECT_EQ(report.flagged_uncovered, std::vector<std::string>{"c"});
    EXPECT_TRUE(report.length_ok);
}

TEST(Evaluate, FlagsItemNamedByTitle) {
    auto backend = script({{"feedback:0", {"The blue toaster is missing."}}});
    auto report = evaluate(title("Red Kettle"), three_items(), three_keywords(), KeywordOverlapScorer{},
                           TitleLimits{}, context(backend));
    EXPECT_EQ(report.flagged_uncovered, std::vector<std::string>{"b"});
}

TEST(Evaluate, FallsBackToAllUncovered) {
    auto backend = script({{"feedback:0", {"   ", "Be more specific."}}});
    auto report = evaluate(title("Red Kettle"), three_items(), three_keywords(), KeywordOverlapScorer{},
                           TitleLimits{9, 10}, context(backend));
    EXPECT_EQ(report.critique, "Be more specific.");
    EXPECT_EQ(report.flagged_uncovered, (std::vector<std::string>{"b", "c"}));
    EXPECT_FALSE(report.length_ok);
}

TEST(Regenerate, IncrementsIterationAndExtendsTrace) {
    auto backend = script({{"regeneration:0", {"title: Kettle and Toaster"}}});
    FeedbackReport report;
    report.critique = "Add the toaster.";
    auto prev = title("Red Kettle", 2);
    auto next = regenerate(prev, report, three_items(), three_keywords(), TitleLimits{}, context(backend));
    EXPECT_EQ(next.text(), "Kettle and Toaster");
    EXPECT_EQ(next.iteration(), 3);
    EXPECT_EQ(next.provenance(), Provenance::refined);
    EXPECT_EQ(next.trace(), std::vector<std::string>{"feedback@2: Add the toaster."});
    const auto prompt = backend->requests().front().prompt;
    EXPECT_NE(prompt.find("Red Kettle"), std::string::npos);
    EXPECT_NE(prompt.find("Add the toaster."), std::string::npos);
}

TEST(Regenerate, ParseFailureAfterRetries) {
    auto backend = script({{"regeneration", {"no", "still no"}}});
    FeedbackReport report;
    report.critique = "x";
    EXPECT_THROW(regenerate(title("T"), report, three_items(), three_keywords(), TitleLimits{},
                            context(backend, 1)),
                 ParseFailure);
}

TEST(Moderate, RendersOneLinePerCandidate) {
    std::vector<ScoredTitle> cands = {
        {title("Kettle and Toaster", 1, 0), RelevanceVector({{"a", 1}, {"b", 1}, {"c", 0}})},
        {title("Kettle Toaster Blender Picks For Every Kitchen", 0, 1),
         RelevanceVector({{"a", 1}, {"b", 1}, {"c", 1}})},
    };
    auto summary = moderate(cands, TitleLimits{30, 10});
    EXPECT_EQ(summary.render(),
              "1. \"Kettle and Toaster\" | coverage 2/3 | chars 18 | feasible | chain 0, iteration 1, refined\n"
              "2. \"Kettle Toaster Blender Picks For Every Kitchen\" | coverage 3/3 | chars 46 | "
              "infeasible: length | chain 1, iteration 0, initial\n");
    ASSERT_NE(summary.find("Kettle and Toaster"), nullptr);
    EXPECT_EQ(summary.find("nope"), nullptr);
}

namespace {

struct ArbitrationCase {
    std::vector<ScoredTitle> scored;
    std::vector<CandidateTitle> titles;
    ModeratorSummary summary;
};

ArbitrationCase arbitration_case(const TitleLimits& limits) {
    ArbitrationCase c;
    c.scored = {
        {title("Kettle", 0, 0), RelevanceVector({{"a", 1}, {"b", 0}, {"c", 0}})},
        {title("Toaster and Blender", 0, 1), RelevanceVector({{"a", 0}, {"b", 1}, {"c", 1}})},
        {title("Kettle Toaster and Blender for All", 0, 2), RelevanceVector({{"a", 1}, {"b", 1}, {"c", 1}})},
        {title("Kettle Toaster Blender", 0, 3), RelevanceVector({{"a", 1}, {"b", 1}, {"c", 1}})},
    };
    for (const auto& s : c.scored) c.titles.push_back(s.title);
    c.summary = moderate(c.scored, limits);
    return c;
}

}  // namespace

TEST(Arbitrate, RulePrefersFeasibleCoverageThenShorter) {
    auto c = arbitration_case(TitleLimits{30, 10});
    auto pick = arbitrate(c.titles, c.summary, ArbiterMode::rule, three_items(), three_keywords(), nullptr);
    EXPECT_EQ(pick.text(), "Kettle Toaster Blender");

    // With K = 20 both full-coverage titles are infeasible.
    c = arbitration_case(TitleLimits{20, 10});
    pick = arbitrate(c.titles, c.summary, ArbiterMode::rule, three_items(), three_keywords(), nullptr);
    EXPECT_EQ(pick.text(), "Toaster and Blender");
}

TEST(Arbitrate, DeduplicatesByText) {
    std::vector<ScoredTitle> scored = {{title("Same", 0, 0), RelevanceVector({{"a", 1}})},
                                       {title("Same", 2, 1), RelevanceVector({{"a", 1}})}};
    auto summary = moderate(scored, TitleLimits{});
    std::vector<CandidateTitle> titles = {scored[0].title, scored[1].title};
    auto backend = script({});
    auto ctx = context(backend);
    auto pick = arbitrate(titles, summary, ArbiterMode::llm, three_items(), three_keywords(), &ctx);
    EXPECT_EQ(pick, scored[0].title);
    EXPECT_TRUE(backend->requests().empty());
}

TEST(Arbitrate, LlmTournamentFollowsValidReplies) {
    auto c = arbitration_case(TitleLimits{60, 10});
    auto backend = script({{"arbitrator:round-1", {"Toaster and Blender"}},
                           {"arbitrator:round-2", {"\"Toaster and Blender\""}},
                           {"arbitrator:round-3", {"  Kettle Toaster Blender  "}}});
    auto ctx = context(backend);
    auto pick = arbitrate(c.titles, c.summary, ArbiterMode::llm, three_items(), three_keywords(), &ctx);
    EXPECT_EQ(pick.text(), "Kettle Toaster Blender");
    const auto reqs = backend->requests();
    ASSERT_EQ(reqs.size(), 3u);
    EXPECT_NE(reqs[0].prompt.find("1. The original title: Kettle"), std::string::npos);
    EXPECT_NE(reqs[0].prompt.find("2. The refined title: Toaster and Blender"), std::string::npos);
}

TEST(Arbitrate, InvalidRepliesFallBackToRule) {
    auto c = arbitration_case(TitleLimits{60, 10});
    // Round 1 keeps picking something else; the rule prefers the higher coverage challenger.
    auto backend = script({{"arbitrator:round-1", {"neither", "a third title", "still neither"}},
                           {"arbitrator:round-2", {"Toaster and Blender"}},
                           {"arbitrator:round-3", {"Toaster and Blender"}}});
    auto ctx = context(backend, 2);
    auto pick = arbitrate(c.titles, c.summary, ArbiterMode::llm, three_items(), three_keywords(), &ctx);
    EXPECT_EQ(pick.text(), "Toaster and Blender");
    EXPECT_EQ(backend->requests().size(), 5u);
}

TEST(LlmJudgeScorer, StrictBinaryReplies) {
    auto backend = script({{"judge:a", {"1"}}, {"judge:b", {"maybe", " 0 "}}, {"judge:c", {"yes", "no", "?"}}});
    LlmJudgeScorer scorer(backend, carts::testing::default_prompts()->judge, 2);
    const auto job = three_items();
    const auto kws = three_keywords();
    const auto t = title("Kettle");
    EXPECT_EQ(relevance(t, job.items[0], kws[0], scorer), 1);
    EXPECT_EQ(relevance(t, job.items[1], kws[1], scorer), 0);
    EXPECT_THROW(relevance(t, job.items[2], kws[2], scorer), JudgeParseFailure);
}

TEST(ProductInfo, JoinsNonEmptyFields) {
    EXPECT_EQ(product_info(item("a", "Red Kettle", "Kitchen", "1.7 litres")), "Kitchen | Red Kettle | 1.7 litres");
    EXPECT_EQ(product_info(item("a", "Red Kettle", "  ")), "Red Kettle");
}
