#include "glarify/prompts.hpp"

#include <map>
#include <utility>

#include "glarify/error.hpp"

namespace glarify {
namespace {

constexpr std::pair<std::string_view, std::string_view> kEmbedded[] = {
#include "glarify/prompt_templates.inc"
};

std::string trim_newlines(std::string_view s) {
    while (!s.empty() && (s.front() == '\n' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.remove_suffix(1);
    return std::string(s);
}

PromptTemplate split_sections(std::string_view raw) {
    constexpr std::string_view kSystem = "[system]";
    constexpr std::string_view kUser = "[user]";
    const auto sys = raw.find(kSystem);
    const auto usr = raw.find(kUser);
    if (sys == std::string_view::npos || usr == std::string_view::npos || usr < sys)
        return PromptTemplate{trim_newlines(raw), {}};
    return PromptTemplate{trim_newlines(raw.substr(sys + kSystem.size(), usr - sys - kSystem.size())),
                          trim_newlines(raw.substr(usr + kUser.size()))};
}

const std::map<std::string, PromptTemplate, std::less<>>& registry() {
    static const auto* templates = [] {
        auto* m = new std::map<std::string, PromptTemplate, std::less<>>();
        for (const auto& [name, raw] : kEmbedded) m->emplace(std::string(name), split_sections(raw));
        return m;
    }();
    return *templates;
}

}  // namespace

const PromptTemplate& prompt_template(std::string_view name) {
    const auto& reg = registry();
    auto it = reg.find(name);
    if (it == reg.end()) throw UsageError("unknown prompt template " + std::string(name));
    return it->second;
}

}  // namespace glarify
