#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cgan/data/dialog.hpp"

namespace cgan::data {

/// Grid-scene dialog task. Each image is an R x R grid; some cells hold an
/// object with a shape and a color, and every question has a programmatic
/// answer. Follow-up questions ("what shape is it") refer to the object of
/// the previous round, so answering them needs the dialog history.
struct SceneConfig {
  std::size_t grid = 4;
  std::size_t d_img = 32;
  std::size_t min_objects = 3;
  std::size_t max_objects = 5;
  double noise = 0.1;
  double follow_up_prob = 0.4;
  /// Chance that a shape-addressed question names a shape absent from the scene.
  double absent_prob = 0.15;
  /// Upper bound on same-template alternatives per candidate list.
  std::size_t max_same_template = 40;
};

const std::vector<std::string>& shape_names();
const std::vector<std::string>& color_names();

struct Cell {
  bool present = false;
  int shape = -1;
  int color = -1;
};

struct SceneSpec {
  std::size_t grid = 4;
  std::vector<Cell> cells;  // row-major, grid * grid

  [[nodiscard]] std::size_t regions() const { return cells.size(); }
  [[nodiscard]] std::optional<std::size_t> find_shape(int shape) const;
};

/// N x d_img region features: one-hot shape, one-hot color, presence flag,
/// one-hot row and column, plus Gaussian noise drawn from `seed`. Values are
/// rounded to float precision so they survive the feature file unchanged.
ad::Tensor scene_features(const SceneSpec& scene, const SceneConfig& config, std::uint64_t seed);

/// Template semantics. `previous` is the cell the previous round was about,
/// if any. Returns nullopt when the question matches no template (or is a
/// follow-up without a referent).
struct TemplateAnswer {
  Tokens answer;
  std::optional<std::size_t> referent;
};
std::optional<TemplateAnswer> answer_question(const SceneSpec& scene, const Tokens& question,
                                              std::optional<std::size_t> previous);

/// Re-derives every human answer of `record` from `scene`; returns the index
/// of the first inconsistent round, or nullopt when all agree.
std::optional<std::size_t> find_inconsistent_round(const TextRecord& record, const SceneSpec& scene);

struct SyntheticDataset {
  std::vector<RawRecord> records;
  std::vector<SceneSpec> scenes;
  FeatureStore features;
};

/// Deterministic in (count, seed, config, id_prefix). Candidate lists hold the
/// human answer, the other answers of the same question template, and answers
/// drawn from other scenes' dialogs.
SyntheticDataset synthesize_dataset(std::size_t count, std::uint64_t seed, const SceneConfig& config,
                                    const std::string& id_prefix = "synth_");

}  // namespace cgan::data
