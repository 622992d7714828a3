#include "cgan/train/adversarial.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "cgan/autodiff/ops.hpp"
#include "json.hpp"

namespace cgan::train {

namespace {

using data::Vocabulary;
using model::EncoderContext;

data::TokenIds strip_end(const data::TokenIds& tokens) {
  data::TokenIds w = tokens;
  if (!w.empty() && w.back() == Vocabulary::kEnd) w.pop_back();
  return w;
}

double advantage(double reward, double baseline) { return std::clamp(reward - baseline, -1.0, 1.0); }

std::vector<double> token_advantages(const Rollout& r, RewardMode mode) {
  std::vector<double> adv(r.tokens.size());
  if (mode == RewardMode::kGlobal) {
    if (!r.reward) throw std::invalid_argument("policy gradient: rollout without a final reward");
    std::fill(adv.begin(), adv.end(), advantage(*r.reward, r.baseline));
  } else {
    if (r.rewards.size() != r.tokens.size()) {
      throw std::invalid_argument("policy gradient: rollout has " + std::to_string(r.rewards.size()) +
                                  " intermediate rewards for " + std::to_string(r.tokens.size()) + " tokens");
    }
    for (std::size_t k = 0; k < adv.size(); ++k) adv[k] = advantage(r.rewards[k], r.baseline);
  }
  return adv;
}

/// Zeroes gradients, records `build` on a fresh tape, back-propagates and
/// takes one Adam step. Returns the loss value.
template <typename Build>
double optimize(ad::ParamList& params, ad::AdamState& adam, Build&& build) {
  params.zero_grad();
  ad::Tape tape;
  ad::Var loss;
  {
    ad::TapeScope scope(tape);
    loss = build();
  }
  const double value = loss.value().item();
  ad::backward(tape, loss);
  ad::adam_step(params, adam);
  return value;
}

std::vector<std::size_t> shuffled_order(std::size_t n, model::Rng& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  // Fisher-Yates with the portable uniform draw.
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(model::uniform01(rng) * static_cast<double>(i));
    std::swap(order[i - 1], order[std::min(j, i - 1)]);
  }
  return order;
}

}  // namespace

const ad::Tensor& DialogSet::image(const data::DialogRecord& record) const {
  if (features == nullptr) throw data::DataError("dialog set has no features");
  const auto it = features->find(record.image_id);
  if (it == features->end()) throw data::DataError("no features for image " + record.image_id);
  return it->second;
}

std::vector<std::size_t> all_rounds(const data::DialogRecord& record) {
  std::vector<std::size_t> r(record.rounds.size());
  std::iota(r.begin(), r.end(), 0);
  return r;
}

model::DiscriminatorExample make_example(const EncoderContext& context, const data::TokenIds& tokens) {
  return {context.v_tilde.value(), context.u_tilde.value(), context.question, strip_end(tokens)};
}

RewardFn discriminator_reward(const model::Discriminator& dis) {
  return [&dis](const EncoderContext& context, std::span<const data::TokenIds> answers) {
    std::vector<model::DiscriminatorExample> examples;
    examples.reserve(answers.size());
    for (const auto& a : answers) examples.push_back(make_example(context, a));
    return dis.human_probability(examples);
  };
}

std::vector<data::TokenIds> mc_rollouts(const model::Generator& gen, const EncoderContext& context,
                                        const data::TokenIds& prefix, const MCConfig& cfg, model::Rng& rng) {
  if (cfg.rollouts == 0) throw std::invalid_argument("mc_rollouts: need at least one rollout");
  const std::vector<data::TokenIds> prefixes(cfg.rollouts, prefix);
  return gen.complete(context, prefixes, rng);
}

std::vector<double> intermediate_rewards(const model::Generator& gen, const EncoderContext& context,
                                         const data::TokenIds& tokens, const RewardFn& reward, const MCConfig& cfg,
                                         model::Rng& rng) {
  if (tokens.empty()) throw std::invalid_argument("intermediate_rewards: empty answer");
  if (cfg.rollouts == 0) throw std::invalid_argument("intermediate_rewards: need at least one rollout");
  const std::size_t K = tokens.size();
  const std::size_t n = cfg.rollouts;
  std::vector<data::TokenIds> prefixes;
  prefixes.reserve((K - 1) * n);
  for (std::size_t k = 1; k < K; ++k) {
    const data::TokenIds prefix(tokens.begin(), tokens.begin() + static_cast<std::ptrdiff_t>(k));
    for (std::size_t i = 0; i < n; ++i) prefixes.push_back(prefix);
  }
  std::vector<data::TokenIds> scored = gen.complete(context, prefixes, rng);
  scored.push_back(tokens);
  const std::vector<double> r = reward(context, scored);
  if (r.size() != scored.size()) throw std::logic_error("intermediate_rewards: reward count mismatch");
  std::vector<double> out(K, 0.0);
  for (std::size_t k = 0; k + 1 < K; ++k) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += (r[k * n + i] - mean) / static_cast<double>(i + 1);
    out[k] = mean;
  }
  out[K - 1] = r.back();
  return out;
}

ad::Var policy_gradient_loss(const model::Generator& gen, std::span<const EncoderContext> contexts,
                             std::span<const Rollout> rollouts, RewardMode mode) {
  if (rollouts.empty()) throw std::invalid_argument("policy gradient: no rollouts");
  std::vector<const EncoderContext*> ctx;
  std::vector<data::TokenIds> seqs;
  std::vector<std::vector<double>> weights;
  const double scale = 1.0 / static_cast<double>(rollouts.size());
  for (const auto& r : rollouts) {
    if (r.context >= contexts.size()) throw std::out_of_range("policy gradient: rollout context out of range");
    ctx.push_back(&contexts[r.context]);
    seqs.push_back(r.tokens);
    auto adv = token_advantages(r, mode);
    for (double& a : adv) a *= scale;
    weights.push_back(std::move(adv));
  }
  return gen.weighted_nll(ctx, seqs, weights);
}

double policy_objective(std::span<const Rollout> rollouts, RewardMode mode) {
  if (rollouts.empty()) return 0.0;
  double total = 0.0;
  for (const auto& r : rollouts) {
    const auto adv = token_advantages(r, mode);
    for (std::size_t k = 0; k < adv.size(); ++k) total += adv[k] * r.log_probs.at(k);
  }
  return total / static_cast<double>(rollouts.size());
}

double policy_gradient_update(const model::Generator& gen, const data::DialogRecord& record, const ad::Tensor& image,
                              std::span<const std::size_t> rounds, std::span<const Rollout> rollouts, RewardMode mode,
                              ad::ParamList& params, ad::AdamState& adam) {
  const double objective = policy_objective(rollouts, mode);
  optimize(params, adam, [&] {
    const auto contexts = gen.encode(record, image, rounds);
    return policy_gradient_loss(gen, contexts, rollouts, mode);
  });
  return objective;
}

double mle_update(const model::Generator& gen, const data::DialogRecord& record, const ad::Tensor& image,
                  std::span<const std::size_t> rounds, ad::ParamList& params, ad::AdamState& adam) {
  if (rounds.empty()) throw std::invalid_argument("mle_update: empty batch");
  return optimize(params, adam, [&] {
    const auto contexts = gen.encode(record, image, rounds);
    std::vector<data::TokenIds> answers;
    for (std::size_t t : rounds) answers.push_back(record.rounds[t].answer);
    return gen.mle_loss(contexts, answers);
  });
}

CriticStep critic_step(const model::Critic& critic, const data::DialogRecord& record, const ad::Tensor& image,
                       std::span<const std::size_t> rounds, std::span<const double> rewards, ad::ParamList& params,
                       ad::AdamState& adam) {
  if (rewards.size() != rounds.size()) throw std::invalid_argument("critic_step: one reward per round");
  CriticStep out;
  out.mse = optimize(params, adam, [&] {
    const auto contexts = critic.encode(record, image, rounds);
    const ad::Var b = critic.baseline(contexts);
    out.baselines = b.value().values();
    ad::Tensor target = ad::Tensor::matrix(rewards.size(), 1);
    for (std::size_t i = 0; i < rewards.size(); ++i) target[i] = rewards[i];
    return ad::mse(b, ad::Var::constant(std::move(target)));
  });
  return out;
}

double discriminator_update(const model::Discriminator& dis, std::span<const model::DiscriminatorExample> positives,
                            std::span<const model::DiscriminatorExample> negatives, ad::ParamList& params,
                            ad::AdamState& adam) {
  return optimize(params, adam, [&] { return dis.bce_loss(positives, negatives); });
}

void collect_examples(const model::Generator& gen, const data::DialogRecord& record, const ad::Tensor& image,
                      model::Rng& rng, std::vector<model::DiscriminatorExample>& positives,
                      std::vector<model::DiscriminatorExample>& negatives) {
  ad::NoGradScope no_grad;
  const auto rounds = all_rounds(record);
  const auto contexts = gen.encode(record, image, rounds);
  const auto responses = gen.decode_batch(contexts, model::DecodeMode::kSample, rng);
  for (std::size_t i = 0; i < contexts.size(); ++i) {
    positives.push_back(make_example(contexts[i], record.rounds[rounds[i]].answer));
    negatives.push_back(make_example(contexts[i], responses[i].tokens));
  }
}

double Schedule::at_epoch(std::size_t epoch) const {
  return std::max(lr_min, lr * std::pow(decay, static_cast<double>(epoch)));
}

std::string to_jsonl(const IterationRecord& r) {
  nlohmann::ordered_json j;
  j["iter"] = r.iter;
  j["gen_obj"] = r.gen_obj;
  if (r.mle_loss) j["mle_loss"] = *r.mle_loss;
  j["critic_mse"] = r.critic_mse;
  if (r.dis_loss) j["dis_loss"] = *r.dis_loss;
  j["mean_reward"] = r.mean_reward;
  if (r.wallclock_ms) j["wallclock_ms"] = *r.wallclock_ms;
  return j.dump();
}

std::string to_jsonl(const EpochRecord& r, const std::string& stage) {
  nlohmann::ordered_json j;
  j["stage"] = stage;
  j["epoch"] = r.epoch;
  j["lr"] = r.lr;
  j["loss"] = r.loss;
  if (r.accuracy) j["accuracy"] = *r.accuracy;
  return j.dump();
}

std::vector<EpochRecord> pretrain_generator(const model::Generator& gen, const DialogSet& data, std::size_t epochs,
                                            const Schedule& schedule, std::uint64_t seed, const LogSink& sink) {
  std::vector<EpochRecord> log;
  if (epochs == 0) return log;
  if (data.records.empty()) throw std::invalid_argument("pretrain_generator: empty dataset");
  ad::ParamList params = gen.params();
  ad::AdamState adam;
  adam.clip_norm = schedule.clip_norm;
  model::Rng rng(seed);
  for (std::size_t e = 0; e < epochs; ++e) {
    adam.learning_rate = schedule.at_epoch(e);
    double total = 0.0;
    for (std::size_t i : shuffled_order(data.size(), rng)) {
      const auto& rec = data.records[i];
      total += mle_update(gen, rec, data.image(rec), all_rounds(rec), params, adam);
    }
    log.push_back({e + 1, adam.learning_rate, total / static_cast<double>(data.size()), std::nullopt});
    if (sink) sink(to_jsonl(log.back(), "generator"));
  }
  return log;
}

std::vector<EpochRecord> pretrain_discriminator(const model::Discriminator& dis, const model::Generator& gen,
                                                const DialogSet& data, std::size_t epochs, const Schedule& schedule,
                                                std::uint64_t seed, const LogSink& sink) {
  std::vector<EpochRecord> log;
  if (epochs == 0) return log;
  if (data.records.empty()) throw std::invalid_argument("pretrain_discriminator: empty dataset");
  ad::ParamList params = dis.params();
  ad::AdamState adam;
  adam.clip_norm = schedule.clip_norm;
  model::Rng rng(seed);
  for (std::size_t e = 0; e < epochs; ++e) {
    adam.learning_rate = schedule.at_epoch(e);
    double total = 0.0;
    std::size_t correct = 0, seen = 0;
    for (std::size_t i : shuffled_order(data.size(), rng)) {
      const auto& rec = data.records[i];
      std::vector<model::DiscriminatorExample> pos, neg;
      collect_examples(gen, rec, data.image(rec), rng, pos, neg);
      for (double p : dis.human_probability(pos)) correct += p > 0.5;
      for (double p : dis.human_probability(neg)) correct += p < 0.5;
      seen += pos.size() + neg.size();
      total += discriminator_update(dis, pos, neg, params, adam);
    }
    log.push_back({e + 1, adam.learning_rate, total / static_cast<double>(data.size()),
                   static_cast<double>(correct) / static_cast<double>(seen)});
    if (sink) sink(to_jsonl(log.back(), "discriminator"));
  }
  return log;
}

std::vector<IterationRecord> train_adversarial(const model::Generator& gen, const model::Discriminator& dis,
                                               const model::Critic& critic, const DialogSet& data,
                                               const AdversarialConfig& cfg, const LogSink& sink) {
  std::vector<IterationRecord> log;
  if (cfg.iterations == 0) return log;
  if (data.records.empty()) throw std::invalid_argument("train_adversarial: empty dataset");
  if (cfg.dis_update_period == 0) throw std::invalid_argument("train_adversarial: dis_update_period must be positive");

  ad::ParamList gen_params = gen.params(), dis_params = dis.params(), critic_params = critic.params();
  ad::AdamState gen_adam, dis_adam, critic_adam;
  gen_adam.learning_rate = cfg.gen_lr;
  dis_adam.learning_rate = cfg.dis_lr;
  critic_adam.learning_rate = cfg.critic_lr;
  gen_adam.clip_norm = dis_adam.clip_norm = critic_adam.clip_norm = cfg.clip_norm;

  model::Rng rng(cfg.seed);
  const RewardFn reward = discriminator_reward(dis);
  std::vector<std::size_t> order;
  std::size_t cursor = 0;
  auto next_record = [&]() -> const data::DialogRecord& {
    if (cursor == order.size()) {
      order = shuffled_order(data.size(), rng);
      cursor = 0;
    }
    return data.records[order[cursor++]];
  };

  const auto start = std::chrono::steady_clock::now();
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    IterationRecord rec;
    rec.iter = it + 1;
    const auto& dialog = next_record();
    const auto& image = data.image(dialog);
    const auto rounds = all_rounds(dialog);

    std::vector<Rollout> rollouts;
    {
      ad::NoGradScope no_grad;
      const auto contexts = gen.encode(dialog, image, rounds);
      const auto responses = gen.decode_batch(contexts, model::DecodeMode::kSample, rng);
      for (std::size_t i = 0; i < contexts.size(); ++i) {
        Rollout r;
        r.context = i;
        r.tokens = responses[i].tokens;
        r.log_probs = responses[i].log_probs;
        const std::array<data::TokenIds, 1> one{r.tokens};
        r.reward = reward(contexts[i], one).front();
        if (cfg.mode == RewardMode::kIntermediate) {
          r.rewards = intermediate_rewards(gen, contexts[i], r.tokens, reward, cfg.mc, rng);
        }
        rollouts.push_back(std::move(r));
      }
    }

    std::vector<double> finals;
    for (const auto& r : rollouts) finals.push_back(*r.reward);
    const CriticStep cs = critic_step(critic, dialog, image, rounds, finals, critic_params, critic_adam);
    for (std::size_t i = 0; i < rollouts.size(); ++i) rollouts[i].baseline = cs.baselines[i];
    rec.critic_mse = cs.mse;
    rec.mean_reward = std::accumulate(finals.begin(), finals.end(), 0.0) / static_cast<double>(finals.size());

    rec.gen_obj = policy_gradient_update(gen, dialog, image, rounds, rollouts, cfg.mode, gen_params, gen_adam);
    if (cfg.teacher_forcing) rec.mle_loss = mle_update(gen, dialog, image, rounds, gen_params, gen_adam);

    if ((it + 1) % cfg.dis_update_period == 0) {
      const auto& fresh = next_record();
      std::vector<model::DiscriminatorExample> pos, neg;
      collect_examples(gen, fresh, data.image(fresh), rng, pos, neg);
      rec.dis_loss = discriminator_update(dis, pos, neg, dis_params, dis_adam);
    }
    if (cfg.log_wallclock) {
      rec.wallclock_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    }
    log.push_back(rec);
    if (sink) sink(to_jsonl(rec));
  }
  return log;
}

}  // namespace cgan::train
