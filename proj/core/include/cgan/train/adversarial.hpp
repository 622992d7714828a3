#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cgan/autodiff/optim.hpp"
#include "cgan/data/dialog.hpp"
#include "cgan/model/critic.hpp"
#include "cgan/model/discriminator.hpp"
#include "cgan/model/generator.hpp"

namespace cgan::train {

/// Encoded dialogs plus their region features.
struct DialogSet {
  std::vector<data::DialogRecord> records;
  const data::FeatureStore* features = nullptr;

  [[nodiscard]] const ad::Tensor& image(const data::DialogRecord& record) const;
  [[nodiscard]] std::size_t size() const { return records.size(); }
};

/// All rounds of a dialog: 0..9.
std::vector<std::size_t> all_rounds(const data::DialogRecord& record);

struct MCConfig {
  std::size_t rollouts = 5;
};

enum class RewardMode { kGlobal, kIntermediate };

/// A sampled answer with its rewards. `context` indexes the contexts the
/// rollout was drawn from.
struct Rollout {
  std::size_t context = 0;
  data::TokenIds tokens;
  std::vector<double> log_probs;
  std::vector<double> rewards;  // one per token
  std::optional<double> reward;
  double baseline = 0.0;
};

/// Reward of complete answers for one context, each in [0, 1].
using RewardFn = std::function<std::vector<double>(const model::EncoderContext&, std::span<const data::TokenIds>)>;

/// Discriminator score of token sequences; a trailing END is dropped.
RewardFn discriminator_reward(const model::Discriminator& dis);

model::DiscriminatorExample make_example(const model::EncoderContext& context, const data::TokenIds& tokens);

/// N sampled completions of `prefix`.
std::vector<data::TokenIds> mc_rollouts(const model::Generator& gen, const model::EncoderContext& context,
                                        const data::TokenIds& prefix, const MCConfig& cfg, model::Rng& rng);

/// r_k for every token: for k < K the mean reward of N completions of the
/// first k tokens, for the last token the reward of the answer itself.
std::vector<double> intermediate_rewards(const model::Generator& gen, const model::EncoderContext& context,
                                         const data::TokenIds& tokens, const RewardFn& reward, const MCConfig& cfg,
                                         model::Rng& rng);

/// Surrogate whose gradient is -(1/B) sum_b sum_k grad log p(a_k) * clip(r - b, -1, 1).
/// `contexts` must be on the active tape for gradients to reach the encoder.
ad::Var policy_gradient_loss(const model::Generator& gen, std::span<const model::EncoderContext> contexts,
                             std::span<const Rollout> rollouts, RewardMode mode);

/// Mean over rollouts of sum_k advantage_k * log p(a_k).
double policy_objective(std::span<const Rollout> rollouts, RewardMode mode);

/// Re-encodes `rounds`, takes one ascent step on the expected reward and
/// returns the objective before the step.
double policy_gradient_update(const model::Generator& gen, const data::DialogRecord& record, const ad::Tensor& image,
                              std::span<const std::size_t> rounds, std::span<const Rollout> rollouts, RewardMode mode,
                              ad::ParamList& params, ad::AdamState& adam);

/// Teacher-forced MLE step on the human answers of `rounds`; returns the
/// loss before the step.
double mle_update(const model::Generator& gen, const data::DialogRecord& record, const ad::Tensor& image,
                  std::span<const std::size_t> rounds, ad::ParamList& params, ad::AdamState& adam);

struct CriticStep {
  std::vector<double> baselines;  // predicted before the update
  double mse = 0.0;
};

CriticStep critic_step(const model::Critic& critic, const data::DialogRecord& record, const ad::Tensor& image,
                       std::span<const std::size_t> rounds, std::span<const double> rewards, ad::ParamList& params,
                       ad::AdamState& adam);

/// One BCE step; returns the loss before the step.
double discriminator_update(const model::Discriminator& dis, std::span<const model::DiscriminatorExample> positives,
                            std::span<const model::DiscriminatorExample> negatives, ad::ParamList& params,
                            ad::AdamState& adam);

/// Human answers as positives and sampled answers as negatives for every
/// round of `record`. Memories come from the generator's encoder.
void collect_examples(const model::Generator& gen, const data::DialogRecord& record, const ad::Tensor& image,
                      model::Rng& rng, std::vector<model::DiscriminatorExample>& positives,
                      std::vector<model::DiscriminatorExample>& negatives);

struct Schedule {
  double lr = 1e-3;
  double lr_min = 1e-5;
  double decay = 0.9;  // per epoch
  double clip_norm = 5.0;

  [[nodiscard]] double at_epoch(std::size_t epoch) const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double lr = 0.0;
  double loss = 0.0;
  std::optional<double> accuracy;
};

using LogSink = std::function<void(const std::string& jsonl_line)>;

std::vector<EpochRecord> pretrain_generator(const model::Generator& gen, const DialogSet& data, std::size_t epochs,
                                            const Schedule& schedule, std::uint64_t seed, const LogSink& sink = {});

std::vector<EpochRecord> pretrain_discriminator(const model::Discriminator& dis, const model::Generator& gen,
                                                const DialogSet& data, std::size_t epochs, const Schedule& schedule,
                                                std::uint64_t seed, const LogSink& sink = {});

struct AdversarialConfig {
  std::size_t iterations = 0;  // generator steps; each covers every round of one dialog
  RewardMode mode = RewardMode::kIntermediate;
  bool teacher_forcing = true;
  std::size_t dis_update_period = 20;
  MCConfig mc;
  double gen_lr = 1e-4;
  double critic_lr = 1e-3;
  double dis_lr = 1e-4;
  double clip_norm = 5.0;
  std::uint64_t seed = 0;
  bool log_wallclock = false;
};

struct IterationRecord {
  std::size_t iter = 0;
  double gen_obj = 0.0;
  std::optional<double> mle_loss;
  double critic_mse = 0.0;
  std::optional<double> dis_loss;
  double mean_reward = 0.0;
  std::optional<double> wallclock_ms;
};

std::string to_jsonl(const IterationRecord& record);
std::string to_jsonl(const EpochRecord& record, const std::string& stage);

std::vector<IterationRecord> train_adversarial(const model::Generator& gen, const model::Discriminator& dis,
                                               const model::Critic& critic, const DialogSet& data,
                                               const AdversarialConfig& cfg, const LogSink& sink = {});

}  // namespace cgan::train
