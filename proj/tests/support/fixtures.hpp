#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "cgan/data/dialog.hpp"
#include "cgan/model/critic.hpp"
#include "cgan/model/discriminator.hpp"
#include "cgan/model/generator.hpp"
#include "cgan/train/adversarial.hpp"

namespace cgan::testing {

/// d = h = d_emb = 4, d_img = 6.
model::EncoderDims tiny_dims(std::size_t vocab);
model::GeneratorConfig tiny_generator_config(std::size_t vocab);
model::DiscriminatorConfig tiny_discriminator_config(std::size_t vocab);

/// Random dialog over content ids [4, vocab): `rounds` rounds, each with
/// `candidates` candidate answers (the human answer at gt_index).
data::DialogRecord random_record(std::size_t vocab, model::Rng& rng, std::size_t rounds = 10,
                                 std::size_t candidates = 100, std::size_t max_len = 4);

/// N x d_img standard-normal-ish features.
ad::Tensor random_image(std::size_t regions, std::size_t d_img, model::Rng& rng);

ad::Tensor random_tensor(const ad::Shape& shape, model::Rng& rng, double scale = 1.0);

/// Dialogs with their features kept alive together.
struct OwnedSet {
  data::FeatureStore features;
  train::DialogSet set;
};
std::unique_ptr<OwnedSet> random_set(std::size_t records, std::size_t vocab, std::size_t d_img, model::Rng& rng);

/// The enumerable policy: content words {x, y, z} (ids 4..6), answers of
/// exactly two words, UNK masked. Nine possible answers.
struct ToyProblem {
  static constexpr std::size_t kVocab = 7;
  std::unique_ptr<model::Generator> gen;
  std::unique_ptr<model::Discriminator> dis;
  data::DialogRecord record;
  ad::Tensor image;

  [[nodiscard]] model::EncoderContext context() const;
  /// All nine answers in lexicographic id order.
  [[nodiscard]] static std::vector<data::TokenIds> answers();
};
ToyProblem make_toy(std::uint64_t seed);

/// Per-coordinate agreement of a sampled estimate with an exact value: a
/// coordinate passes when its relative error is within rel_tol or its
/// deviation is within z_tol standard errors.
struct CoordinateComparison {
  std::size_t coordinates = 0;
  std::size_t failures = 0;
  double worst_relative = 0.0;
  double worst_z = 0.0;
};
CoordinateComparison compare_coordinates(std::span<const double> estimate, std::span<const double> exact,
                                         std::span<const double> standard_error, double rel_tol, double z_tol);

}  // namespace cgan::testing
