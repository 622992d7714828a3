#include "support/fixtures.hpp"

#include <cmath>

namespace cgan::testing {

model::EncoderDims tiny_dims(std::size_t vocab) { return {vocab, 6, 4, 4, 4}; }

model::GeneratorConfig tiny_generator_config(std::size_t vocab) {
  model::GeneratorConfig c;
  c.dims = tiny_dims(vocab);
  c.k_max = 6;
  return c;
}

model::DiscriminatorConfig tiny_discriminator_config(std::size_t vocab) { return {vocab, 4, 4, 4, 4}; }

ad::Tensor random_tensor(const ad::Shape& shape, model::Rng& rng, double scale) {
  ad::Tensor t(shape);
  for (double& v : t.data()) v = (2.0 * model::uniform01(rng) - 1.0) * scale;
  return t;
}

ad::Tensor random_image(std::size_t regions, std::size_t d_img, model::Rng& rng) {
  return random_tensor({regions, d_img}, rng, 1.0);
}

namespace {

data::TokenIds random_tokens(std::size_t vocab, model::Rng& rng, std::size_t max_len) {
  const std::size_t len = 1 + static_cast<std::size_t>(model::uniform01(rng) * static_cast<double>(max_len));
  data::TokenIds t(len);
  for (int& id : t) {
    id = data::Vocabulary::kNumReserved +
         static_cast<int>(model::uniform01(rng) * static_cast<double>(vocab - data::Vocabulary::kNumReserved));
  }
  return t;
}

}  // namespace

data::DialogRecord random_record(std::size_t vocab, model::Rng& rng, std::size_t rounds, std::size_t candidates,
                                 std::size_t max_len) {
  data::DialogRecord rec;
  rec.image_id = "img" + std::to_string(rng() % 1000000);
  rec.caption = random_tokens(vocab, rng, max_len + 2);
  for (std::size_t t = 0; t < rounds; ++t) {
    data::DialogRound r;
    r.question = random_tokens(vocab, rng, max_len);
    r.answer = random_tokens(vocab, rng, max_len);
    r.gt_index = static_cast<int>(model::uniform01(rng) * static_cast<double>(candidates));
    for (std::size_t c = 0; c < candidates; ++c) {
      r.candidates.push_back(static_cast<int>(c) == r.gt_index ? r.answer : random_tokens(vocab, rng, max_len));
    }
    rec.rounds.push_back(std::move(r));
  }
  return rec;
}

std::unique_ptr<OwnedSet> random_set(std::size_t records, std::size_t vocab, std::size_t d_img, model::Rng& rng) {
  auto out = std::make_unique<OwnedSet>();
  for (std::size_t i = 0; i < records; ++i) {
    auto rec = random_record(vocab, rng);
    rec.image_id = "img" + std::to_string(i);
    out->features[rec.image_id] = random_image(5, d_img, rng);
    out->set.records.push_back(std::move(rec));
  }
  out->set.features = &out->features;
  return out;
}

model::EncoderContext ToyProblem::context() const { return gen->encoder().encode_round(record, image, 0); }

std::vector<data::TokenIds> ToyProblem::answers() {
  std::vector<data::TokenIds> out;
  for (int a = 4; a < 7; ++a)
    for (int b = 4; b < 7; ++b) out.push_back({a, b});
  return out;
}

ToyProblem make_toy(std::uint64_t seed) {
  ToyProblem toy;
  model::GeneratorConfig cfg;
  cfg.dims = tiny_dims(ToyProblem::kVocab);
  cfg.k_max = 2;
  cfg.fixed_length = true;
  cfg.emit_unk = false;
  toy.gen = std::make_unique<model::Generator>(cfg, seed);
  toy.dis = std::make_unique<model::Discriminator>(tiny_discriminator_config(ToyProblem::kVocab), seed + 1);
  model::Rng rng(seed + 2);
  toy.record = random_record(ToyProblem::kVocab, rng, 1, 3, 3);
  toy.image = random_image(4, cfg.dims.d_img, rng);
  // Larger output weights make the policy clearly non-uniform.
  auto params = toy.gen->params();
  for (auto& p : params.params()) {
    if (p.name() == "gen.dec.out_w") {
      for (double& v : p.mutable_value().data()) v *= 4.0;
    }
  }
  return toy;
}

CoordinateComparison compare_coordinates(std::span<const double> estimate, std::span<const double> exact,
                                         std::span<const double> standard_error, double rel_tol, double z_tol) {
  CoordinateComparison c;
  c.coordinates = exact.size();
  for (std::size_t i = 0; i < exact.size(); ++i) {
    const double diff = std::abs(estimate[i] - exact[i]);
    const double rel = exact[i] == 0.0 ? (diff == 0.0 ? 0.0 : INFINITY) : diff / std::abs(exact[i]);
    const double z = standard_error[i] > 0.0 ? diff / standard_error[i] : (diff == 0.0 ? 0.0 : INFINITY);
    const bool ok = rel <= rel_tol || z <= z_tol;
    if (!ok) ++c.failures;
    c.worst_relative = std::max(c.worst_relative, std::min(rel, 1e300));
    c.worst_z = std::max(c.worst_z, std::min(z, 1e300));
  }
  return c;
}

}  // namespace cgan::testing
