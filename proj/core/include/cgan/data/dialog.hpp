#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "cgan/autodiff/tensor.hpp"
#include "cgan/data/text.hpp"
#include "cgan/data/vocabulary.hpp"

namespace cgan::data {

inline constexpr std::size_t kRoundsPerDialog = 10;
inline constexpr std::size_t kCandidatesPerRound = 100;

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A dialog exactly as stored in the dataset JSON.
struct RawRound {
  std::string question;
  std::string answer;
  std::vector<std::string> answer_options;
  int gt_index = 0;
};

struct RawRecord {
  std::string image_id;
  std::string caption;
  std::vector<RawRound> dialog;
};

/// A dialog after preprocessing, still as token strings.
struct TextRound {
  Tokens question;
  Tokens answer;
  std::vector<Tokens> candidates;
  int gt_index = 0;
};

struct TextRecord {
  std::string image_id;
  Tokens caption;
  std::vector<TextRound> rounds;
};

/// A dialog in vocabulary ids.
struct DialogRound {
  TokenIds question;
  TokenIds answer;
  std::vector<TokenIds> candidates;
  int gt_index = 0;
};

struct DialogRecord {
  std::string image_id;
  TokenIds caption;
  std::vector<DialogRound> rounds;
};

/// Region features per image id, each an N x d_img tensor.
using FeatureStore = std::map<std::string, ad::Tensor>;

struct TextDataset {
  std::vector<TextRecord> records;
  FeatureStore features;
};

/// Throws DataError naming `index` when the record breaks an invariant:
/// round count, length limits, candidate count, gt_index range, or the
/// ground-truth candidate differing from the human answer.
void validate_record(const TextRecord& record, std::size_t index);

/// Applies the 40/20/20 token limits (candidates use the answer limit).
TextRecord truncate_record(TextRecord record);

/// Preprocesses, truncates and validates one raw record.
TextRecord prepare_record(const RawRecord& raw, std::size_t index);

DialogRecord encode_record(const TextRecord& record, const Vocabulary& vocab);
std::vector<DialogRecord> encode_records(const std::vector<TextRecord>& records, const Vocabulary& vocab);

/// Training corpus for the vocabulary: captions, questions and answers.
std::vector<Tokens> vocabulary_corpus(const std::vector<TextRecord>& records);

/// Dataset JSON:
///   {"records": [{"image_id", "caption", "dialog": [{"question", "answer",
///   "answer_options": [100 strings], "gt_index"} x 10]}]}
/// Text is preprocessed and truncated on load, then validated.
std::vector<TextRecord> load_visdial_json(const std::filesystem::path& path);
std::vector<TextRecord> parse_visdial_json(const std::string& text);

std::string dump_visdial_json(const std::vector<RawRecord>& records);
void save_visdial_json(const std::filesystem::path& path, const std::vector<RawRecord>& records);

/// Feature file: "CGFV" | u32 version | u64 count | per image { u16 id_len |
/// id | u32 N | u32 d | N*d f32 }, little-endian.
void save_features(const std::filesystem::path& path, const FeatureStore& features);
FeatureStore load_features(const std::filesystem::path& path);

}  // namespace cgan::data
