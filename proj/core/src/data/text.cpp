#include "cgan/data/text.hpp"

#include <array>
#include <cctype>

namespace cgan::data {

namespace {

constexpr std::array<std::string_view, 20> kOnes = {
    "zero",    "one",     "two",       "three",    "four",     "five",    "six",
    "seven",   "eight",   "nine",      "ten",      "eleven",   "twelve",  "thirteen",
    "fourteen", "fifteen", "sixteen",  "seventeen", "eighteen", "nineteen"};
constexpr std::array<std::string_view, 10> kTens = {"",      "",      "twenty",  "thirty", "forty",
                                                    "fifty", "sixty", "seventy", "eighty", "ninety"};

void below_thousand(unsigned n, Tokens& out) {
  if (n >= 100) {
    out.emplace_back(kOnes[n / 100]);
    out.emplace_back("hundred");
    n %= 100;
    if (n == 0) return;
  }
  if (n < 20) {
    out.emplace_back(kOnes[n]);
    return;
  }
  out.emplace_back(kTens[n / 10]);
  if (n % 10) out.emplace_back(kOnes[n % 10]);
}

// Suffixes split off as their own token, longest first.
constexpr std::array<std::string_view, 7> kClitics = {"n't", "'re", "'ve", "'ll", "'s", "'d", "'m"};

void split_word(std::string word, Tokens& out) {
  std::string suffix;
  for (auto clitic : kClitics) {
    if (word.size() > clitic.size() && word.ends_with(clitic)) {
      suffix = std::string(clitic);
      word.resize(word.size() - clitic.size());
      break;
    }
  }
  // Stray quotes are dropped once clitics are separated.
  std::string stem;
  for (char c : word)
    if (c != '\'') stem.push_back(c);
  if (!stem.empty()) {
    // Digit runs become number words; letter runs stay as they are.
    std::size_t i = 0;
    while (i < stem.size()) {
      const bool digit = std::isdigit(static_cast<unsigned char>(stem[i])) != 0;
      std::size_t j = i;
      while (j < stem.size() && (std::isdigit(static_cast<unsigned char>(stem[j])) != 0) == digit) ++j;
      if (digit) {
        for (auto& t : spell_number(std::string_view(stem).substr(i, j - i))) out.push_back(std::move(t));
      } else {
        out.push_back(stem.substr(i, j - i));
      }
      i = j;
    }
  }
  if (!suffix.empty()) out.push_back(std::move(suffix));
}

}  // namespace

Tokens spell_number(std::string_view digits) {
  Tokens out;
  if (digits.empty()) return out;
  if ((digits.size() > 1 && digits[0] == '0') || digits.size() > 9) {
    for (char c : digits) out.emplace_back(kOnes[static_cast<std::size_t>(c - '0')]);
    return out;
  }
  unsigned long n = std::stoul(std::string(digits));
  if (n == 0) {
    out.emplace_back("zero");
    return out;
  }
  const unsigned millions = static_cast<unsigned>(n / 1000000);
  const unsigned thousands = static_cast<unsigned>((n / 1000) % 1000);
  const unsigned rest = static_cast<unsigned>(n % 1000);
  if (millions) {
    below_thousand(millions, out);
    out.emplace_back("million");
  }
  if (thousands) {
    below_thousand(thousands, out);
    out.emplace_back("thousand");
  }
  if (rest) below_thousand(rest, out);
  return out;
}

Tokens preprocess_text(std::string_view raw) {
  std::string cleaned;
  cleaned.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const auto c = static_cast<unsigned char>(raw[i]);
    // U+2019 right single quotation mark reads as an apostrophe.
    if (c == 0xE2 && i + 2 < raw.size() && static_cast<unsigned char>(raw[i + 1]) == 0x80 &&
        static_cast<unsigned char>(raw[i + 2]) == 0x99) {
      cleaned.push_back('\'');
      i += 2;
    } else if (std::isalnum(c) || c == '\'') {
      cleaned.push_back(static_cast<char>(std::tolower(c)));
    } else if (c >= 0x80) {
      cleaned.push_back(static_cast<char>(c));
    } else {
      cleaned.push_back(' ');
    }
  }
  Tokens out;
  std::size_t i = 0;
  while (i < cleaned.size()) {
    while (i < cleaned.size() && cleaned[i] == ' ') ++i;
    std::size_t j = i;
    while (j < cleaned.size() && cleaned[j] != ' ') ++j;
    if (j > i) split_word(cleaned.substr(i, j - i), out);
    i = j;
  }
  return out;
}

Tokens truncate(Tokens tokens, std::size_t limit) {
  if (tokens.size() > limit) tokens.resize(limit);
  return tokens;
}

std::string join(const Tokens& tokens, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += sep;
    out += tokens[i];
  }
  return out;
}

}  // namespace cgan::data
