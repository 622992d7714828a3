#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numeric>

#include "cgan/autodiff/ops.hpp"
#include "cgan/data/synthetic.hpp"
#include "cgan/train/adversarial.hpp"
#include "support/fixtures.hpp"

namespace ad = cgan::ad;
namespace data = cgan::data;
namespace model = cgan::model;
namespace train = cgan::train;
using data::TokenIds;
using data::Vocabulary;
using model::Rng;

namespace {

std::vector<ad::Tensor> snapshot(const ad::ParamList& params) {
  std::vector<ad::Tensor> out;
  for (const auto& p : params.params()) out.push_back(p.value());
  return out;
}

bool unchanged(const ad::ParamList& params, const std::vector<ad::Tensor>& before) {
  for (std::size_t i = 0; i < before.size(); ++i)
    if (!(params.params()[i].value() == before[i])) return false;
  return true;
}

// Flattened gradient of `build` with respect to `params`.
template <typename Build>
std::vector<double> gradient_of(ad::ParamList& params, Build&& build) {
  params.zero_grad();
  ad::Tape tape;
  ad::Var loss;
  {
    ad::TapeScope s(tape);
    loss = build();
  }
  ad::backward(tape, loss);
  std::vector<double> g;
  for (const auto& p : params.params())
    for (double v : p.grad_span()) g.push_back(v);
  return g;
}

train::RewardFn constant_reward(double c) {
  return [c](const model::EncoderContext&, std::span<const TokenIds> answers) {
    return std::vector<double>(answers.size(), c);
  };
}

// Desk-scale synthetic data at tiny dims.
struct SyntheticSet {
  data::SyntheticDataset raw;
  data::Vocabulary vocab;
  train::DialogSet set;

  explicit SyntheticSet(std::size_t dialogs) {
    data::SceneConfig cfg;
    raw = data::synthesize_dataset(dialogs, 5, cfg);
    std::vector<data::TextRecord> text;
    for (std::size_t i = 0; i < raw.records.size(); ++i) text.push_back(data::prepare_record(raw.records[i], i));
    const auto corpus = data::vocabulary_corpus(text);
    vocab = data::build_vocabulary(corpus, 1);
    set.records = data::encode_records(text, vocab);
    set.features = &raw.features;
  }
};

}  // namespace

TEST(Rollouts, DeterministicPolicyGivesIdenticalCompletions) {
  auto toy = cgan::testing::make_toy(1);
  auto params = toy.gen->params();
  params.find("gen.dec.out_b")->node()->value[5] = 1000.0;
  Rng rng(1);
  const auto ctx = toy.context();
  const auto seqs = train::mc_rollouts(*toy.gen, ctx, {4}, {7}, rng);
  ASSERT_EQ(seqs.size(), 7u);
  for (const auto& s : seqs) EXPECT_EQ(s, (TokenIds{4, 5}));
}

TEST(Rollouts, CompletePrefixIsReturnedUnchanged) {
  model::Generator gen(cgan::testing::tiny_generator_config(9), 2);
  Rng rng(2);
  const auto rec = cgan::testing::random_record(9, rng, 1, 2);
  const auto ctx = gen.encoder().encode_round(rec, cgan::testing::random_image(3, 6, rng), 0);
  const TokenIds done{5, 6, Vocabulary::kEnd};
  for (const auto& s : train::mc_rollouts(gen, ctx, done, {4}, rng)) EXPECT_EQ(s, done);
  EXPECT_THROW((void)train::mc_rollouts(gen, ctx, {5}, {0}, rng), std::invalid_argument);
}

TEST(Rollouts, SuffixDistributionMatchesPolicy) {
  auto toy = cgan::testing::make_toy(3);
  const auto ctx = toy.context();
  Rng rng(3);
  constexpr std::size_t kDraws = 20000;
  const auto seqs = train::mc_rollouts(*toy.gen, ctx, {6}, {kDraws}, rng);
  std::map<int, std::size_t> counts;
  for (const auto& s : seqs) {
    ASSERT_EQ(s.size(), 2u);
    ASSERT_EQ(s[0], 6);
    ++counts[s[1]];
  }
  const auto dist = toy.gen->step_distributions(ctx, {6});
  for (int b = 4; b < 7; ++b) {
    const double p = dist[1][static_cast<std::size_t>(b)];
    const double f = static_cast<double>(counts[b]) / kDraws;
    EXPECT_LE(std::abs(f - p), 3.0 * std::sqrt(p * (1 - p) / kDraws)) << "token " << b;
  }
}

TEST(IntermediateRewards, DeterministicPolicyEqualsFinalReward) {
  model::GeneratorConfig cfg = cgan::testing::tiny_generator_config(8);
  cfg.k_max = 4;
  model::Generator gen(cfg, 4);
  auto params = gen.params();
  params.find("gen.dec.out_b")->node()->value[7] = 1000.0;
  model::Discriminator dis(cgan::testing::tiny_discriminator_config(8), 4);
  Rng rng(4);
  const auto rec = cgan::testing::random_record(8, rng, 1, 2);
  const auto ctx = gen.encoder().encode_round(rec, cgan::testing::random_image(3, 6, rng), 0);
  const auto response = gen.decode(ctx, model::DecodeMode::kSample, rng);
  ASSERT_EQ(response.tokens, (TokenIds{7, 7, 7, 7, Vocabulary::kEnd}));
  const auto reward = train::discriminator_reward(dis);
  const auto r = train::intermediate_rewards(gen, ctx, response.tokens, reward, {5}, rng);
  ASSERT_EQ(r.size(), response.tokens.size());
  const double final_reward = dis.discriminate(train::make_example(ctx, response.tokens));
  for (double v : r) EXPECT_EQ(v, final_reward);
}

TEST(IntermediateRewards, ConstantDiscriminator) {
  auto toy = cgan::testing::make_toy(5);
  Rng rng(5);
  const auto r = train::intermediate_rewards(*toy.gen, toy.context(), {4, 6}, constant_reward(0.37), {5}, rng);
  EXPECT_EQ(r, (std::vector<double>{0.37, 0.37}));
  EXPECT_THROW((void)train::intermediate_rewards(*toy.gen, toy.context(), {}, constant_reward(0.1), {5}, rng),
               std::invalid_argument);
}

TEST(IntermediateRewards, LastTokenUsesDirectReward) {
  auto toy = cgan::testing::make_toy(6);
  Rng rng(6);
  const auto ctx = toy.context();
  const auto reward = train::discriminator_reward(*toy.dis);
  const auto r = train::intermediate_rewards(*toy.gen, ctx, {5, 4}, reward, {3}, rng);
  EXPECT_EQ(r.back(), toy.dis->discriminate(train::make_example(ctx, {5, 4})));
  for (double v : r) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(IntermediateRewards, FirstTokenConvergesToExpectedReward) {
  auto toy = cgan::testing::make_toy(7);
  Rng rng(7);
  const auto ctx = toy.context();
  const auto reward = train::discriminator_reward(*toy.dis);
  const auto dist = toy.gen->step_distributions(ctx, {4});
  double mean = 0.0, second = 0.0;
  for (int b = 4; b < 7; ++b) {
    const double p = dist[1][static_cast<std::size_t>(b)];
    const double r = toy.dis->discriminate(train::make_example(ctx, {4, b}));
    mean += p * r;
    second += p * r * r;
  }
  const double se = std::sqrt((second - mean * mean) / 5000.0);
  const auto r = train::intermediate_rewards(*toy.gen, ctx, {4, 5}, reward, {5000}, rng);
  EXPECT_LE(std::abs(r[0] - mean), 3.0 * se);
}

TEST(PolicyGradient, PerfectBaselineGivesZeroGradient) {
  auto toy = cgan::testing::make_toy(8);
  auto params = toy.gen->params();
  const auto before = snapshot(params);
  std::vector<train::Rollout> rollouts;
  for (const auto& a : cgan::testing::ToyProblem::answers()) {
    train::Rollout r;
    r.tokens = a;
    r.log_probs = {-1.0, -1.0};
    r.reward = 0.25 + 0.05 * a[0];
    r.baseline = *r.reward;
    rollouts.push_back(r);
  }
  ad::AdamState adam;
  const std::array<std::size_t, 1> rounds{0};
  const double obj = train::policy_gradient_update(*toy.gen, toy.record, toy.image, rounds, rollouts,
                                                   train::RewardMode::kGlobal, params, adam);
  EXPECT_EQ(obj, 0.0);
  EXPECT_TRUE(params.grads_all_zero());
  EXPECT_TRUE(unchanged(params, before));
}

TEST(PolicyGradient, SingleActionVocabularyGivesZeroGradient) {
  model::GeneratorConfig cfg;
  cfg.dims = cgan::testing::tiny_dims(5);
  cfg.k_max = 3;
  cfg.fixed_length = true;
  cfg.emit_unk = false;
  model::Generator gen(cfg, 9);
  Rng rng(9);
  const auto rec = cgan::testing::random_record(5, rng, 1, 2);
  const auto image = cgan::testing::random_image(3, 6, rng);
  const auto ctx = gen.encoder().encode_round(rec, image, 0);
  const auto response = gen.decode(ctx, model::DecodeMode::kSample, rng);
  EXPECT_EQ(response.tokens, (TokenIds{4, 4, 4}));
  for (double lp : response.log_probs) EXPECT_EQ(lp, 0.0);
  train::Rollout r;
  r.tokens = response.tokens;
  r.log_probs = response.log_probs;
  r.reward = 0.9;
  auto params = gen.params();
  const std::array<std::size_t, 1> rounds{0};
  const auto g = gradient_of(params, [&] {
    const auto contexts = gen.encode(rec, image, rounds);
    return train::policy_gradient_loss(gen, contexts, std::span<const train::Rollout>(&r, 1),
                                       train::RewardMode::kGlobal);
  });
  for (double v : g) EXPECT_EQ(v, 0.0);
}

TEST(PolicyGradient, MissingRewardsRejected) {
  auto toy = cgan::testing::make_toy(10);
  const std::vector<model::EncoderContext> ctx{toy.context()};
  train::Rollout r;
  r.tokens = {4, 5};
  r.log_probs = {-1.0, -1.0};
  const std::array<train::Rollout, 1> rs{r};
  EXPECT_THROW((void)train::policy_gradient_loss(*toy.gen, ctx, rs, train::RewardMode::kGlobal), std::invalid_argument);
  EXPECT_THROW((void)train::policy_gradient_loss(*toy.gen, ctx, rs, train::RewardMode::kIntermediate),
               std::invalid_argument);
  EXPECT_THROW((void)train::policy_gradient_loss(*toy.gen, ctx, {}, train::RewardMode::kGlobal), std::invalid_argument);
}

TEST(PolicyGradient, GlobalAndIntermediateAgreeWhenRewardsAreFlat) {
  auto toy = cgan::testing::make_toy(11);
  const std::vector<model::EncoderContext> ctx{toy.context()};
  train::Rollout r;
  r.tokens = {6, 4};
  r.reward = 0.8;
  r.rewards = {0.8, 0.8};
  r.baseline = 0.1;
  const std::array<train::Rollout, 1> rs{r};
  const double g = train::policy_gradient_loss(*toy.gen, ctx, rs, train::RewardMode::kGlobal).value().item();
  const double i = train::policy_gradient_loss(*toy.gen, ctx, rs, train::RewardMode::kIntermediate).value().item();
  EXPECT_EQ(g, i);
}

TEST(PolicyGradient, AdvantageIsClipped) {
  train::Rollout r;
  r.tokens = {4};
  r.log_probs = {-2.0};
  r.reward = 1.0;
  r.baseline = -3.0;
  const std::array<train::Rollout, 1> rs{r};
  EXPECT_EQ(train::policy_objective(rs, train::RewardMode::kGlobal), -2.0);
}

TEST(PolicyGradient, ConstantBaselineLeavesExactGradientUnchanged) {
  auto toy = cgan::testing::make_toy(12);
  auto params = toy.gen->params();
  const auto answers = cgan::testing::ToyProblem::answers();
  const auto ctx0 = toy.context();
  const std::vector<model::EncoderContext> one{ctx0};
  const auto lp = toy.gen->token_log_probs(std::vector<model::EncoderContext>(answers.size(), ctx0), answers);
  auto exact = [&](double b) {
    return gradient_of(params, [&] {
      const std::array<std::size_t, 1> rounds{0};
      const auto contexts = toy.gen->encode(toy.record, toy.image, rounds);
      std::vector<const model::EncoderContext*> ptrs(answers.size(), &contexts[0]);
      std::vector<std::vector<double>> w;
      for (std::size_t s = 0; s < answers.size(); ++s) {
        const double pi = std::exp(lp[s][0] + lp[s][1]);
        const double r = toy.dis->discriminate(train::make_example(ctx0, answers[s]));
        w.push_back({pi * (r - b), pi * (r - b)});
      }
      return toy.gen->weighted_nll(ptrs, answers, w);
    });
  };
  const auto g0 = exact(0.0);
  const auto g1 = exact(0.4);
  double scale = 0.0;
  for (double v : g0) scale = std::max(scale, std::abs(v));
  ASSERT_GT(scale, 0.0);
  for (std::size_t i = 0; i < g0.size(); ++i) EXPECT_NEAR(g0[i], g1[i], 1e-10 * std::max(1.0, scale));
}

TEST(PolicyGradient, TrainedBaselineReducesVariance) {
  auto toy = cgan::testing::make_toy(13);
  model::Critic critic(cgan::testing::tiny_dims(cgan::testing::ToyProblem::kVocab), 13);
  const auto ctx = toy.context();
  const auto reward = train::discriminator_reward(*toy.dis);
  Rng rng(13);
  const std::array<std::size_t, 1> rounds{0};

  // Fit the critic to sampled rewards of this context.
  auto critic_params = critic.params();
  ad::AdamState critic_adam;
  critic_adam.learning_rate = 1e-2;
  for (int i = 0; i < 300; ++i) {
    const auto s = toy.gen->decode(ctx, model::DecodeMode::kSample, rng);
    const std::array<TokenIds, 1> one{s.tokens};
    const std::array<double, 1> r{reward(ctx, one)[0]};
    (void)train::critic_step(critic, toy.record, toy.image, rounds, r, critic_params, critic_adam);
  }
  const double b = critic.baseline(critic.encode(toy.record, toy.image, rounds)).value().item();

  auto params = toy.gen->params();
  constexpr int kBatches = 200;
  constexpr std::size_t kBatch = 8;
  std::vector<double> sum0, sq0, sumb, sqb;
  for (int k = 0; k < kBatches; ++k) {
    std::vector<train::Rollout> rs;
    for (std::size_t i = 0; i < kBatch; ++i) {
      const auto s = toy.gen->decode(ctx, model::DecodeMode::kSample, rng);
      train::Rollout r;
      r.tokens = s.tokens;
      r.log_probs = s.log_probs;
      const std::array<TokenIds, 1> one{s.tokens};
      r.reward = reward(ctx, one)[0];
      rs.push_back(r);
    }
    auto grad_with = [&](double baseline) {
      for (auto& r : rs) r.baseline = baseline;
      return gradient_of(params, [&] {
        const auto contexts = toy.gen->encode(toy.record, toy.image, rounds);
        return train::policy_gradient_loss(*toy.gen, contexts, rs, train::RewardMode::kGlobal);
      });
    };
    const auto g0 = grad_with(0.0);
    const auto gb = grad_with(b);
    if (sum0.empty()) sum0.assign(g0.size(), 0.0), sq0 = sumb = sqb = sum0;
    for (std::size_t i = 0; i < g0.size(); ++i) {
      sum0[i] += g0[i];
      sq0[i] += g0[i] * g0[i];
      sumb[i] += gb[i];
      sqb[i] += gb[i] * gb[i];
    }
  }
  std::size_t better = 0, active = 0;
  for (std::size_t i = 0; i < sum0.size(); ++i) {
    const double v0 = sq0[i] / kBatches - std::pow(sum0[i] / kBatches, 2);
    const double vb = sqb[i] / kBatches - std::pow(sumb[i] / kBatches, 2);
    if (v0 == 0.0 && vb == 0.0) continue;
    ++active;
    better += vb <= v0 ? 1 : 0;
  }
  ASSERT_GT(active, 0u);
  EXPECT_GE(static_cast<double>(better) / static_cast<double>(active), 0.8) << better << "/" << active;
}

TEST(CriticStep, RewardCountMustMatchRounds) {
  auto toy = cgan::testing::make_toy(14);
  model::Critic critic(cgan::testing::tiny_dims(cgan::testing::ToyProblem::kVocab), 14);
  auto params = critic.params();
  ad::AdamState adam;
  const std::array<std::size_t, 1> rounds{0};
  const std::array<double, 2> rewards{0.1, 0.2};
  EXPECT_THROW((void)train::critic_step(critic, toy.record, toy.image, rounds, rewards, params, adam),
               std::invalid_argument);
}

TEST(Schedule, DecaysToFloor) {
  train::Schedule s{1e-3, 1e-5, 0.5, 5.0};
  EXPECT_EQ(s.at_epoch(0), 1e-3);
  EXPECT_EQ(s.at_epoch(1), 5e-4);
  EXPECT_EQ(s.at_epoch(20), 1e-5);
}

TEST(Jsonl, FieldOrderAndOptionalFields) {
  train::IterationRecord r;
  r.iter = 3;
  r.gen_obj = 0.5;
  r.critic_mse = 0.25;
  r.mean_reward = 0.75;
  EXPECT_EQ(train::to_jsonl(r), R"({"iter":3,"gen_obj":0.5,"critic_mse":0.25,"mean_reward":0.75})");
  r.mle_loss = 1.5;
  r.dis_loss = 0.125;
  EXPECT_EQ(train::to_jsonl(r),
            R"({"iter":3,"gen_obj":0.5,"mle_loss":1.5,"critic_mse":0.25,"dis_loss":0.125,"mean_reward":0.75})");
  train::EpochRecord e{2, 0.001, 3.5, 0.75};
  EXPECT_EQ(train::to_jsonl(e, "discriminator"),
            R"({"stage":"discriminator","epoch":2,"lr":0.001,"loss":3.5,"accuracy":0.75})");
}

class AdversarialLoop : public ::testing::Test {
 protected:
  static constexpr std::size_t kVocab = 10;
  Rng rng{15};
  std::unique_ptr<cgan::testing::OwnedSet> data = cgan::testing::random_set(10, kVocab, 6, rng);
  model::Generator gen{cgan::testing::tiny_generator_config(kVocab), 15};
  model::Discriminator dis{cgan::testing::tiny_discriminator_config(kVocab), 16};
  model::Critic critic{cgan::testing::tiny_dims(kVocab), 17};

  train::AdversarialConfig config(std::size_t iterations) const {
    train::AdversarialConfig c;
    c.iterations = iterations;
    c.mc.rollouts = 2;
    c.seed = 3;
    return c;
  }
};

TEST_F(AdversarialLoop, ZeroIterationsLeaveEverythingBitIdentical) {
  const auto g = snapshot(gen.params()), d = snapshot(dis.params()), c = snapshot(critic.params());
  const auto log = train::train_adversarial(gen, dis, critic, data->set, config(0));
  EXPECT_TRUE(log.empty());
  EXPECT_TRUE(unchanged(gen.params(), g));
  EXPECT_TRUE(unchanged(dis.params(), d));
  EXPECT_TRUE(unchanged(critic.params(), c));
}

TEST_F(AdversarialLoop, TwentyStepsGiveOneDiscriminatorUpdate) {
  std::vector<std::string> lines;
  const auto log = train::train_adversarial(gen, dis, critic, data->set, config(20),
                                            [&](const std::string& l) { lines.push_back(l); });
  ASSERT_EQ(log.size(), 20u);
  ASSERT_EQ(lines.size(), 20u);
  std::size_t updates = 0;
  for (const auto& r : log) updates += r.dis_loss.has_value() ? 1 : 0;
  EXPECT_EQ(updates, 1u);
  EXPECT_TRUE(log.back().dis_loss.has_value());
  EXPECT_NE(lines.back().find("dis_loss"), std::string::npos);
  EXPECT_EQ(lines.front().find("wallclock_ms"), std::string::npos);
}

TEST_F(AdversarialLoop, SmokeRunStaysFiniteAndInRange) {
  auto cfg = config(50);
  cfg.dis_update_period = 5;
  const auto before = snapshot(gen.params());
  const auto log = train::train_adversarial(gen, dis, critic, data->set, cfg);
  ASSERT_EQ(log.size(), 50u);
  for (const auto& r : log) {
    EXPECT_TRUE(std::isfinite(r.gen_obj));
    ASSERT_TRUE(r.mle_loss.has_value());
    EXPECT_TRUE(std::isfinite(*r.mle_loss));
    EXPECT_GE(*r.mle_loss, 0.0);
    EXPECT_TRUE(std::isfinite(r.critic_mse));
    EXPECT_GE(r.mean_reward, 0.0);
    EXPECT_LE(r.mean_reward, 1.0);
    if (r.dis_loss) {
      EXPECT_TRUE(std::isfinite(*r.dis_loss));
    }
  }
  EXPECT_FALSE(unchanged(gen.params(), before));
}

TEST_F(AdversarialLoop, SameSeedSameLog) {
  model::Generator gen2{cgan::testing::tiny_generator_config(kVocab), 15};
  model::Discriminator dis2{cgan::testing::tiny_discriminator_config(kVocab), 16};
  model::Critic critic2{cgan::testing::tiny_dims(kVocab), 17};
  auto cfg = config(6);
  cfg.dis_update_period = 3;
  std::string a, b;
  (void)train::train_adversarial(gen, dis, critic, data->set, cfg, [&](const std::string& l) { a += l + "\n"; });
  (void)train::train_adversarial(gen2, dis2, critic2, data->set, cfg, [&](const std::string& l) { b += l + "\n"; });
  EXPECT_EQ(a, b);
}

TEST_F(AdversarialLoop, GlobalModeWithoutTeacherForcing) {
  auto cfg = config(3);
  cfg.mode = train::RewardMode::kGlobal;
  cfg.teacher_forcing = false;
  const auto log = train::train_adversarial(gen, dis, critic, data->set, cfg);
  for (const auto& r : log) EXPECT_FALSE(r.mle_loss.has_value());
}

TEST_F(AdversarialLoop, RejectsBadConfiguration) {
  auto cfg = config(1);
  cfg.dis_update_period = 0;
  EXPECT_THROW((void)train::train_adversarial(gen, dis, critic, data->set, cfg), std::invalid_argument);
  train::DialogSet empty;
  EXPECT_THROW((void)train::train_adversarial(gen, dis, critic, empty, config(1)), std::invalid_argument);
}

TEST(Pretrain, ZeroEpochsLeaveParametersUnchanged) {
  Rng rng(18);
  auto data = cgan::testing::random_set(2, 9, 6, rng);
  model::Generator gen(cgan::testing::tiny_generator_config(9), 18);
  model::Discriminator dis(cgan::testing::tiny_discriminator_config(9), 18);
  const auto g = snapshot(gen.params());
  const auto d = snapshot(dis.params());
  EXPECT_TRUE(train::pretrain_generator(gen, data->set, 0, {}, 1).empty());
  EXPECT_TRUE(train::pretrain_discriminator(dis, gen, data->set, 0, {}, 1).empty());
  EXPECT_TRUE(unchanged(gen.params(), g));
  EXPECT_TRUE(unchanged(dis.params(), d));
}

TEST(Pretrain, MissingFeaturesRejected) {
  Rng rng(19);
  auto data = cgan::testing::random_set(2, 9, 6, rng);
  data->set.records[1].image_id = "unknown";
  model::Generator gen(cgan::testing::tiny_generator_config(9), 19);
  EXPECT_THROW((void)train::pretrain_generator(gen, data->set, 1, {}, 1), data::DataError);
}

TEST(Pretrain, GeneratorLossDecreasesOnSyntheticDialogs) {
  SyntheticSet synth(20);
  model::GeneratorConfig cfg;
  cfg.dims = {synth.vocab.size(), 32, 8, 8, 8};
  model::Generator gen(cfg, 20);
  train::Schedule schedule{1e-2, 1e-5, 0.9, 5.0};
  std::vector<std::string> lines;
  const auto log = train::pretrain_generator(gen, synth.set, 5, schedule, 20,
                                             [&](const std::string& l) { lines.push_back(l); });
  ASSERT_EQ(log.size(), 5u);
  EXPECT_LT(log[4].loss, log[0].loss);
  EXPECT_EQ(lines.size(), 5u);
  EXPECT_EQ(log[1].lr, 1e-2 * 0.9);
}

TEST(Pretrain, DiscriminatorBeatsChanceAfterOneEpoch) {
  SyntheticSet synth(20);
  model::GeneratorConfig gcfg;
  gcfg.dims = {synth.vocab.size(), 32, 8, 8, 8};
  model::Generator gen(gcfg, 21);
  model::Discriminator dis({synth.vocab.size(), 8, 8, 8, 8}, 21);
  train::Schedule schedule{1e-2, 1e-5, 0.9, 5.0};
  const auto log = train::pretrain_discriminator(dis, gen, synth.set, 2, schedule, 21);
  ASSERT_EQ(log.size(), 2u);
  ASSERT_TRUE(log[1].accuracy.has_value());
  // The accuracy of epoch 2 is measured before each of its updates, i.e. after epoch 1's training.
  EXPECT_GT(*log[1].accuracy, 0.5);
  std::vector<model::DiscriminatorExample> pos, neg;
  Rng rng(22);
  train::collect_examples(gen, synth.set.records[0], synth.set.image(synth.set.records[0]), rng, pos, neg);
  EXPECT_GT(dis.accuracy(pos, neg), 0.5);
}
