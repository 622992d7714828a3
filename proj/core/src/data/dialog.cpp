#include "cgan/data/dialog.hpp"

#include <bit>
#include <fstream>
#include <sstream>

#include "cgan/util/atomic_file.hpp"
#include "json.hpp"

namespace cgan::data {

namespace {

[[noreturn]] void fail(std::size_t index, const std::string& what) {
  throw DataError("record " + std::to_string(index) + ": " + what);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

template <typename T>
void put_le(std::string& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
}

template <typename T>
T get_le(const std::string& bytes, std::size_t& pos) {
  if (bytes.size() - pos < sizeof(T)) throw DataError("feature file: truncated");
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i)
    value |= static_cast<T>(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
  pos += sizeof(T);
  return value;
}

}  // namespace

void validate_record(const TextRecord& record, std::size_t index) {
  if (record.caption.empty()) fail(index, "empty caption");
  if (record.caption.size() > kMaxCaptionTokens) fail(index, "caption longer than 40 tokens");
  if (record.rounds.size() != kRoundsPerDialog) {
    fail(index, "expected 10 rounds, found " + std::to_string(record.rounds.size()));
  }
  for (std::size_t t = 0; t < record.rounds.size(); ++t) {
    const auto& r = record.rounds[t];
    const std::string where = "round " + std::to_string(t) + ": ";
    if (r.question.empty()) fail(index, where + "empty question");
    if (r.answer.empty()) fail(index, where + "empty answer");
    if (r.question.size() > kMaxQuestionTokens) fail(index, where + "question longer than 20 tokens");
    if (r.answer.size() > kMaxAnswerTokens) fail(index, where + "answer longer than 20 tokens");
    if (r.candidates.size() != kCandidatesPerRound) {
      fail(index, where + "expected 100 candidates, found " + std::to_string(r.candidates.size()));
    }
    if (r.gt_index < 0 || static_cast<std::size_t>(r.gt_index) >= r.candidates.size()) {
      fail(index, where + "gt_index " + std::to_string(r.gt_index) + " out of range");
    }
    for (const auto& c : r.candidates) {
      if (c.empty()) fail(index, where + "empty candidate");
      if (c.size() > kMaxAnswerTokens) fail(index, where + "candidate longer than 20 tokens");
    }
    if (r.candidates[static_cast<std::size_t>(r.gt_index)] != r.answer) {
      fail(index, where + "candidate at gt_index differs from the human answer");
    }
  }
}

TextRecord truncate_record(TextRecord record) {
  record.caption = truncate(std::move(record.caption), kMaxCaptionTokens);
  for (auto& r : record.rounds) {
    r.question = truncate(std::move(r.question), kMaxQuestionTokens);
    r.answer = truncate(std::move(r.answer), kMaxAnswerTokens);
    for (auto& c : r.candidates) c = truncate(std::move(c), kMaxAnswerTokens);
  }
  return record;
}

TextRecord prepare_record(const RawRecord& raw, std::size_t index) {
  TextRecord rec;
  rec.image_id = raw.image_id;
  rec.caption = preprocess_text(raw.caption);
  for (const auto& rr : raw.dialog) {
    TextRound r;
    r.question = preprocess_text(rr.question);
    r.answer = preprocess_text(rr.answer);
    r.candidates.reserve(rr.answer_options.size());
    for (const auto& opt : rr.answer_options) r.candidates.push_back(preprocess_text(opt));
    r.gt_index = rr.gt_index;
    rec.rounds.push_back(std::move(r));
  }
  rec = truncate_record(std::move(rec));
  validate_record(rec, index);
  return rec;
}

DialogRecord encode_record(const TextRecord& record, const Vocabulary& vocab) {
  DialogRecord out;
  out.image_id = record.image_id;
  out.caption = vocab.encode(record.caption);
  out.rounds.reserve(record.rounds.size());
  for (const auto& r : record.rounds) {
    DialogRound dr;
    dr.question = vocab.encode(r.question);
    dr.answer = vocab.encode(r.answer);
    dr.candidates.reserve(r.candidates.size());
    for (const auto& c : r.candidates) dr.candidates.push_back(vocab.encode(c));
    dr.gt_index = r.gt_index;
    out.rounds.push_back(std::move(dr));
  }
  return out;
}

std::vector<DialogRecord> encode_records(const std::vector<TextRecord>& records, const Vocabulary& vocab) {
  std::vector<DialogRecord> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(encode_record(r, vocab));
  return out;
}

std::vector<Tokens> vocabulary_corpus(const std::vector<TextRecord>& records) {
  std::vector<Tokens> corpus;
  for (const auto& rec : records) {
    corpus.push_back(rec.caption);
    for (const auto& r : rec.rounds) {
      corpus.push_back(r.question);
      corpus.push_back(r.answer);
    }
  }
  return corpus;
}

std::vector<TextRecord> parse_visdial_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("dataset JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("records") || !doc["records"].is_array()) {
    throw DataError("dataset JSON: missing top-level \"records\" array");
  }
  std::vector<TextRecord> out;
  const auto& records = doc["records"];
  out.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& jr = records[i];
    RawRecord raw;
    try {
      raw.image_id = jr.at("image_id").get<std::string>();
      raw.caption = jr.at("caption").get<std::string>();
      for (const auto& jd : jr.at("dialog")) {
        RawRound rr;
        rr.question = jd.at("question").get<std::string>();
        rr.answer = jd.at("answer").get<std::string>();
        rr.answer_options = jd.at("answer_options").get<std::vector<std::string>>();
        rr.gt_index = jd.at("gt_index").get<int>();
        raw.dialog.push_back(std::move(rr));
      }
    } catch (const nlohmann::json::exception& e) {
      fail(i, std::string("malformed field: ") + e.what());
    }
    out.push_back(prepare_record(raw, i));
  }
  return out;
}

std::vector<TextRecord> load_visdial_json(const std::filesystem::path& path) {
  return parse_visdial_json(read_file(path));
}

std::string dump_visdial_json(const std::vector<RawRecord>& records) {
  nlohmann::ordered_json doc;
  auto& arr = doc["records"] = nlohmann::ordered_json::array();
  for (const auto& rec : records) {
    nlohmann::ordered_json jr;
    jr["image_id"] = rec.image_id;
    jr["caption"] = rec.caption;
    auto& dialog = jr["dialog"] = nlohmann::ordered_json::array();
    for (const auto& r : rec.dialog) {
      nlohmann::ordered_json jd;
      jd["question"] = r.question;
      jd["answer"] = r.answer;
      jd["answer_options"] = r.answer_options;
      jd["gt_index"] = r.gt_index;
      dialog.push_back(std::move(jd));
    }
    arr.push_back(std::move(jr));
  }
  return doc.dump() + "\n";
}

void save_visdial_json(const std::filesystem::path& path, const std::vector<RawRecord>& records) {
  util::write_file_atomic(path, dump_visdial_json(records));
}

void save_features(const std::filesystem::path& path, const FeatureStore& features) {
  std::string out = "CGFV";
  put_le<std::uint32_t>(out, 1);
  put_le<std::uint64_t>(out, features.size());
  for (const auto& [id, tensor] : features) {
    if (id.size() > 0xFFFF) throw DataError("feature file: image id too long");
    put_le<std::uint16_t>(out, static_cast<std::uint16_t>(id.size()));
    out += id;
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(tensor.rows()));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(tensor.cols()));
    for (double v : tensor.data()) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  util::write_file_atomic(path, out);
}

FeatureStore load_features(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  if (bytes.size() < 4 || bytes.compare(0, 4, "CGFV") != 0) throw DataError("feature file: bad magic in " + path.string());
  std::size_t pos = 4;
  const auto version = get_le<std::uint32_t>(bytes, pos);
  if (version != 1) throw DataError("feature file: unsupported version " + std::to_string(version));
  const auto count = get_le<std::uint64_t>(bytes, pos);
  FeatureStore out;
  for (std::uint64_t k = 0; k < count; ++k) {
    const auto len = get_le<std::uint16_t>(bytes, pos);
    if (bytes.size() - pos < len) throw DataError("feature file: truncated");
    std::string id = bytes.substr(pos, len);
    pos += len;
    const auto n = get_le<std::uint32_t>(bytes, pos);
    const auto d = get_le<std::uint32_t>(bytes, pos);
    const std::size_t numel = static_cast<std::size_t>(n) * d;
    if ((bytes.size() - pos) / 4 < numel) throw DataError("feature file: truncated payload for " + id);
    std::vector<double> data(numel);
    for (auto& v : data) v = static_cast<double>(std::bit_cast<float>(get_le<std::uint32_t>(bytes, pos)));
    ad::Tensor t(ad::Shape{n, d}, std::move(data));
    if (!t.all_finite()) throw DataError("feature file: non-finite values for " + id);
    if (!out.emplace(std::move(id), std::move(t)).second) throw DataError("feature file: duplicate image id");
  }
  if (pos != bytes.size()) throw DataError("feature file: trailing bytes");
  return out;
}

}  // namespace cgan::data
