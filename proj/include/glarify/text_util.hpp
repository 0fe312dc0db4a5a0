#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace glarify::text {

/// Lowercased alphanumeric tokens of `s` (apostrophes kept inside words).
std::vector<std::string> tokenize(std::string_view s);

bool is_stopword(std::string_view lowercase_token);

/// Tokens of `s` that are not stopwords, in order, duplicates kept.
std::vector<std::string> content_words(std::string_view s);

/// Removes every `<Qn>` / `</Qn>` tag, leaving the text between them.
std::string strip_q_tags(std::string_view s);

/// Collapses whitespace runs to a single space and trims both ends.
std::string normalize_whitespace(std::string_view s);

/// Replaces `{name}` placeholders. Unknown placeholders are left as-is.
std::string render_template(std::string_view tmpl,
                            const std::vector<std::pair<std::string, std::string>>& values);

}  // namespace glarify::text
