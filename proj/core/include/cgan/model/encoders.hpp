#pragma once

#include <span>
#include <string>
#include <vector>

#include "cgan/data/dialog.hpp"
#include "cgan/model/coattention.hpp"
#include "cgan/model/lstm.hpp"

namespace cgan::model {

struct EncoderDims {
  std::size_t vocab = 0;
  std::size_t d_img = 32;
  std::size_t d = 64;      // shared feature width; also the LSTM hidden size
  std::size_t d_emb = 64;
  std::size_t h_att = 64;  // co-attention hidden size

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

/// Embedding, image projection and the two LSTMs that produce V, U and Q.
struct EncoderParams {
  ad::Var embedding;  // vocab x d_emb
  ad::Var image_w;    // d_img x d
  ad::Var image_b;    // 1 x d
  LstmParams question;
  LstmParams history;

  static EncoderParams create(const std::string& prefix, const EncoderDims& dims, Rng& rng);
  void collect(ad::ParamList& out) const;
};

struct ImageFeatures {
  ad::Var projected;  // N x d
};

struct HistoryEncoding {
  ad::Var u;           // (T+1) x d; row 0 is the caption
  std::size_t rounds;  // T
};

struct QuestionEncoding {
  ad::Var q;        // L x d
  ad::Var q_final;  // 1 x d
  std::size_t length;
};

struct ContextFeatures {
  ImageFeatures image;
  HistoryEncoding history;
  QuestionEncoding question;
};

/// History utterance t + 1: question t followed by answer t.
data::TokenIds utterance(const data::DialogRound& round);

ImageFeatures project_image_features(const ad::Tensor& image, const EncoderParams& params);

/// Features for round t: the caption and rounds 0..t-1 as history, question t.
ContextFeatures encode_context(const data::DialogRecord& record, const ad::Tensor& image, std::size_t t,
                               const EncoderParams& params);

/// Encoder parameters plus the co-attention chain; turns (image, history,
/// question) into an EncoderContext for any set of rounds of one dialog.
class ContextEncoder {
 public:
  ContextEncoder() = default;
  ContextEncoder(const std::string& prefix, const EncoderDims& dims, Rng& rng);

  [[nodiscard]] const EncoderDims& dims() const { return dims_; }
  [[nodiscard]] const EncoderParams& encoder() const { return encoder_; }
  [[nodiscard]] const CoAttentionParams& attention() const { return attention_; }
  [[nodiscard]] const ad::Var& embedding() const { return encoder_.embedding; }

  /// One context per requested round, all computed in one batched pass.
  [[nodiscard]] std::vector<EncoderContext> encode(const data::DialogRecord& record, const ad::Tensor& image,
                                                   std::span<const std::size_t> rounds) const;
  [[nodiscard]] EncoderContext encode_round(const data::DialogRecord& record, const ad::Tensor& image,
                                            std::size_t t) const;

  void collect(ad::ParamList& out) const;

 private:
  EncoderDims dims_;
  EncoderParams encoder_;
  CoAttentionParams attention_;
};

}  // namespace cgan::model
