#include <cctype>

#include "glarify/error.hpp"
#include "glarify/llm_client.hpp"

namespace glarify {
namespace {

bool iequals(std::string_view a, std::string_view b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (std::tolower(static_cast<unsigned char>(a[i])) != std::tolower(static_cast<unsigned char>(b[i])))
            return false;
    return true;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

}  // namespace

nlohmann::json extract_json_block(std::string_view text) {
    std::size_t pos = 0;
    while ((pos = text.find("```", pos)) != std::string_view::npos) {
        const std::size_t label_start = pos + 3;
        const std::size_t eol = text.find('\n', label_start);
        if (eol == std::string_view::npos) break;
        const auto label = trim(text.substr(label_start, eol - label_start));
        const std::size_t close = text.find("```", eol + 1);
        if (iequals(label, "json")) {
            if (close == std::string_view::npos) throw DataError("unterminated structured block");
            const std::size_t body = eol + 1;
            try {
                return nlohmann::json::parse(text.substr(body, close - body));
            } catch (const nlohmann::json::parse_error& e) {
                throw DataError("structured block parse error at offset " + std::to_string(body + e.byte - 1) +
                                ": " + e.what());
            }
        }
        if (close == std::string_view::npos) break;
        pos = close + 3;
    }
    const auto whole = trim(text);
    if (!whole.empty()) {
        auto parsed = nlohmann::json::parse(whole, nullptr, /*allow_exceptions=*/false);
        if (!parsed.is_discarded()) return parsed;
    }
    throw DataError("no structured block");
}

}  // namespace glarify
