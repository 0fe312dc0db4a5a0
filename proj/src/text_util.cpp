#include "glarify/text_util.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace glarify::text {
namespace {

// Sorted; checked with binary_search.
constexpr std::string_view kStopwords[] = {
    "a",       "about",  "above", "after", "again",   "against", "all",    "am",     "an",
    "and",     "any",    "are",   "as",    "at",      "be",      "because", "been",  "before",
    "being",   "below",  "between", "both", "but",    "by",      "can",    "could",  "did",
    "do",      "does",   "doing", "down",  "during",  "each",    "few",    "for",    "from",
    "further", "had",    "has",   "have",  "having",  "he",      "her",    "here",   "hers",
    "herself", "him",    "himself", "his", "how",     "i",       "if",     "in",     "into",
    "is",      "it",     "its",   "itself", "just",   "me",      "more",   "most",   "my",
    "myself",  "no",     "nor",   "not",   "now",     "of",      "off",    "on",     "once",
    "only",    "or",     "other", "our",   "ours",    "out",     "over",   "own",    "same",
    "she",     "should", "so",    "some",  "such",    "than",    "that",   "the",    "their",
    "them",    "then",   "there", "these", "they",    "this",    "those",  "through", "to",
    "too",     "under",  "until", "up",    "very",    "was",     "we",     "were",   "what",
    "when",    "where",  "which", "while", "who",     "whom",    "why",    "will",   "with",
    "would",   "you",    "your",  "yours"};

bool is_word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0 || (static_cast<unsigned char>(c) & 0x80);
}

}  // namespace

std::vector<std::string> tokenize(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const char c = s[i];
        const bool inner_apostrophe = c == '\'' && !cur.empty() && i + 1 < s.size() && is_word_char(s[i + 1]);
        if (is_word_char(c) || inner_apostrophe) {
            cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

bool is_stopword(std::string_view t) {
    return std::binary_search(std::begin(kStopwords), std::end(kStopwords), t);
}

std::vector<std::string> content_words(std::string_view s) {
    auto toks = tokenize(s);
    std::erase_if(toks, [](const std::string& t) { return is_stopword(t); });
    return toks;
}

std::string strip_q_tags(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        if (s[i] == '<') {
            std::size_t j = i + 1;
            if (j < s.size() && s[j] == '/') ++j;
            if (j < s.size() && s[j] == 'Q') {
                std::size_t k = j + 1;
                while (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) ++k;
                if (k > j + 1 && k < s.size() && s[k] == '>') {
                    i = k + 1;
                    continue;
                }
            }
        }
        out.push_back(s[i++]);
    }
    return out;
}

std::string normalize_whitespace(std::string_view s) {
    std::string out;
    bool pending_space = false;
    for (char c : s) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            pending_space = !out.empty();
        } else {
            if (pending_space) out.push_back(' ');
            pending_space = false;
            out.push_back(c);
        }
    }
    return out;
}

std::string render_template(std::string_view tmpl,
                            const std::vector<std::pair<std::string, std::string>>& values) {
    std::string out;
    std::size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl[i] == '{') {
            const auto close = tmpl.find('}', i + 1);
            if (close != std::string_view::npos) {
                const auto name = tmpl.substr(i + 1, close - i - 1);
                auto it = std::find_if(values.begin(), values.end(),
                                       [&](const auto& kv) { return kv.first == name; });
                if (it != values.end()) {
                    out += it->second;
                    i = close + 1;
                    continue;
                }
            }
        }
        out.push_back(tmpl[i++]);
    }
    return out;
}

}  // namespace glarify::text
