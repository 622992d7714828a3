#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "cgan/data/text.hpp"

namespace cgan::data {

using TokenIds = std::vector<int>;

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kStart = 1;
  static constexpr int kEnd = 2;
  static constexpr int kUnk = 3;
  static constexpr int kNumReserved = 4;

  /// Reserved tokens only.
  Vocabulary();
  /// Reserved tokens followed by `tokens` in the given order.
  explicit Vocabulary(const std::vector<std::string>& tokens, std::size_t min_count = 1);

  [[nodiscard]] std::size_t size() const { return id_to_token_.size(); }
  [[nodiscard]] std::size_t min_count() const { return min_count_; }
  [[nodiscard]] int id(const std::string& token) const;
  [[nodiscard]] bool contains(const std::string& token) const { return token_to_id_.contains(token); }
  [[nodiscard]] const std::string& token(int id) const;
  [[nodiscard]] const std::vector<std::string>& tokens() const { return id_to_token_; }

  /// Unknown tokens map to kUnk.
  [[nodiscard]] TokenIds encode(const Tokens& tokens) const;
  [[nodiscard]] Tokens decode(std::span<const int> ids) const;

  /// One token per line in id order, reserved tokens first.
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.id_to_token_ == b.id_to_token_; }

 private:
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, int> token_to_id_;
  std::size_t min_count_ = 1;
};

/// Keeps tokens seen at least `min_count` times; ids follow descending count,
/// ties broken lexicographically. Throws on an empty corpus.
Vocabulary build_vocabulary(std::span<const Tokens> corpus, std::size_t min_count);

}  // namespace cgan::data
