#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace carts {

using Bindings = std::map<std::string, std::string, std::less<>>;

/// Plain-text prompt body with `{name}` placeholders.
class PromptTemplate {
public:
    PromptTemplate() = default;
    PromptTemplate(std::string name, std::string body);

    const std::string& name() const { return name_; }
    const std::string& body() const { return body_; }

    /// Placeholder names in order of first appearance.
    std::vector<std::string> placeholders() const;

    /// Substitutes every placeholder in a single pass; bound values are not
    /// rescanned. Throws TemplateError naming the first unbound placeholder.
    std::string render(const Bindings& bindings) const;

private:
    std::string name_;
    std::string body_;
};

/// Placeholder names still present in rendered text (`{identifier}` only).
std::vector<std::string> find_placeholders(std::string_view text);

struct PromptLibrary {
    PromptTemplate keywords;
    PromptTemplate gag;
    PromptTemplate feedback;
    PromptTemplate regeneration;
    PromptTemplate arbitrator;
    PromptTemplate judge;

    static PromptLibrary defaults();
    /// Starts from the defaults and replaces every template whose
    /// `<name>.txt` exists in `dir`. Throws FileNotFound for a missing dir.
    static PromptLibrary load_dir(const std::filesystem::path& dir);
};

}  // namespace carts
