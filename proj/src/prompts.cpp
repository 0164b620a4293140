#include "carts/prompts.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <optional>
#include <sstream>

#include "carts/errors.hpp"

namespace carts {

namespace {

constexpr std::string_view kKeywordsPrompt =
    R"(You are an English speaking eCommerce catalog specialist. You are an expert in generating keywords for a given product.

Consider the following product:
{prod_info}

Output at most 5 short keywords relevant to the product.

Please just output the keywords and separate them with commas.
Do not add any other text.
)";

constexpr std::string_view kGagPrompt =
    R"(You are an eCommerce specialist. Your expertise is in generating a title for a group of items presented in an eCommerce module.
Your task is to name this eCommerce module.

The list of products and their associated keywords are:
{prod_info_and_keys}

Generate a module title for the list of items to explain them, aiming to increase customer engagement and improve eCommerce module transparency.

Restrict the response to the following format strictly:

"title: A maximum of 10 word title that is relevant to the list of items."
)";

constexpr std::string_view kFeedbackPrompt =
    R"(You are an evaluator that evaluates the generated titles for a group of items.

Here is the generated title:
{title}
Here is the set of items and their associated keywords that the title is generated for them:
{prod_info_and_keys}

Determine if the title is relevant enough to some or all of the items and can increase customer engagement or improve ecommerece module transparency.
If so, provide concise feedback pointing to at least one such uncovered item that the generator could improve on.

Keep the feedback within 30 words.
)";

constexpr std::string_view kRegenerationPrompt =
    R"(You are an eCommerce title generation specialist working in a refinement circle. Your task is to improve a previously generated title based on feedback from an evaluator.

The list of items and their associated keywords are:
{prod_info_and_keys}

The original title was:
{title}

The evaluator provided the following feedback:
{feedback}

Generate a refined title that
(1) addresses at least one uncovered or weakly covered item indicated in the feedback
(2) preserves all existing item coverage in the original title.
(3) Ensure the revised title is no more than 10 words and formatted exactly as follows:
title: <your refined title>
)";

constexpr std::string_view kArbitratorPrompt =
    R"(You are an eCommerece specialist tasked with selecting the best title for an eCommerce module after refinement.
You are given two titles:

1. The original title: {title}
2. The refined title: {title_2}

These titles are generated based on the following list of products and their associated keywords:
{prod_info_and_keys}

Select the title that is more relevant and likely to increase customer engagement and improve module transparency.
Output only the selected title.
)";

// Relevance judge used by the llm_judge scorer. Not one of the pipeline agents.
constexpr std::string_view kJudgePrompt =
    R"(You are judging whether an eCommerce module title describes a product.

Module title:
{title}

Product:
{prod_info}

Answer with a single character: 1 if the title is relevant to this product, 0 if it is not.
Do not add any other text.
)";

bool is_placeholder_char(char c) {
    return std::islower(static_cast<unsigned char>(c)) || std::isdigit(static_cast<unsigned char>(c)) ||
           c == '_';
}

// Placeholder starting at `pos` (which holds '{'), or nullopt.
std::optional<std::string_view> placeholder_at(std::string_view text, std::size_t pos) {
    std::size_t end = pos + 1;
    while (end < text.size() && is_placeholder_char(text[end])) ++end;
    if (end == pos + 1 || end >= text.size() || text[end] != '}') return std::nullopt;
    return text.substr(pos + 1, end - pos - 1);
}

}  // namespace

PromptTemplate::PromptTemplate(std::string name, std::string body)
    : name_(std::move(name)), body_(std::move(body)) {}

std::vector<std::string> find_placeholders(std::string_view text) {
    std::vector<std::string> names;
    for (std::size_t pos = text.find('{'); pos != std::string_view::npos;
         pos = text.find('{', pos + 1)) {
        if (auto name = placeholder_at(text, pos)) {
            std::string n(*name);
            if (std::find(names.begin(), names.end(), n) == names.end()) names.push_back(n);
        }
    }
    return names;
}

std::vector<std::string> PromptTemplate::placeholders() const { return find_placeholders(body_); }

std::string PromptTemplate::render(const Bindings& bindings) const {
    std::string out;
    out.reserve(body_.size() + 256);
    std::string_view body = body_;
    std::size_t pos = 0;
    while (pos < body.size()) {
        const auto brace = body.find('{', pos);
        if (brace == std::string_view::npos) {
            out.append(body.substr(pos));
            break;
        }
        out.append(body.substr(pos, brace - pos));
        auto name = placeholder_at(body, brace);
        if (!name) {
            out.push_back('{');
            pos = brace + 1;
            continue;
        }
        auto it = bindings.find(*name);
        if (it == bindings.end())
            throw TemplateError("template '" + name_ + "' has unbound placeholder {" +
                                std::string(*name) + "}");
        out.append(it->second);
        pos = brace + name->size() + 2;
    }
    return out;
}

PromptLibrary PromptLibrary::defaults() {
    return PromptLibrary{
        PromptTemplate("keywords", std::string(kKeywordsPrompt)),
        PromptTemplate("gag", std::string(kGagPrompt)),
        PromptTemplate("feedback", std::string(kFeedbackPrompt)),
        PromptTemplate("regeneration", std::string(kRegenerationPrompt)),
        PromptTemplate("arbitrator", std::string(kArbitratorPrompt)),
        PromptTemplate("judge", std::string(kJudgePrompt)),
    };
}

PromptLibrary PromptLibrary::load_dir(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw FileNotFound(dir.string());
    PromptLibrary lib = defaults();
    for (PromptTemplate* tpl : {&lib.keywords, &lib.gag, &lib.feedback, &lib.regeneration,
                                &lib.arbitrator, &lib.judge}) {
        const auto file = dir / (tpl->name() + ".txt");
        if (!std::filesystem::exists(file)) continue;
        std::ifstream in(file, std::ios::binary);
        if (!in) throw IoError("cannot read " + file.string());
        std::ostringstream body;
        body << in.rdbuf();
        *tpl = PromptTemplate(tpl->name(), body.str());
    }
    return lib;
}

}  // namespace carts
