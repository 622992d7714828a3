#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace cgan::data {

using Tokens = std::vector<std::string>;

inline constexpr std::size_t kMaxCaptionTokens = 40;
inline constexpr std::size_t kMaxQuestionTokens = 20;
inline constexpr std::size_t kMaxAnswerTokens = 20;

/// Lowercases, spells out digit runs as words, splits contractions into two
/// tokens ("can't" -> "ca n't", "it's" -> "it 's"), drops punctuation and
/// splits on whitespace.
Tokens preprocess_text(std::string_view raw);

/// "25" -> {"twenty", "five"}; runs with a leading zero or longer than nine
/// digits are spelled digit by digit.
Tokens spell_number(std::string_view digits);

/// First `limit` tokens. Idempotent.
Tokens truncate(Tokens tokens, std::size_t limit);

std::string join(const Tokens& tokens, std::string_view sep = " ");

}  // namespace cgan::data
