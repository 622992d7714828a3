#include <benchmark/benchmark.h>

#include "cgan/autodiff/ops.hpp"
#include "cgan/data/synthetic.hpp"
#include "cgan/eval/metrics.hpp"
#include "cgan/train/adversarial.hpp"

namespace ad = cgan::ad;
namespace data = cgan::data;
namespace model = cgan::model;
namespace train = cgan::train;

namespace {

ad::Tensor filled(std::size_t rows, std::size_t cols, model::Rng& rng) {
  ad::Tensor t = ad::Tensor::matrix(rows, cols);
  for (double& v : t.data()) v = model::uniform01(rng) - 0.5;
  return t;
}

// A small synthetic split encoded with its own vocabulary.
struct Workload {
  data::SyntheticDataset raw;
  data::Vocabulary vocab;
  train::DialogSet set;

  explicit Workload(std::size_t dialogs) {
    raw = data::synthesize_dataset(dialogs, 1, data::SceneConfig{});
    std::vector<data::TextRecord> text;
    for (std::size_t i = 0; i < raw.records.size(); ++i) text.push_back(data::prepare_record(raw.records[i], i));
    vocab = data::build_vocabulary(data::vocabulary_corpus(text), 1);
    set.records = data::encode_records(text, vocab);
    set.features = &raw.features;
  }

  [[nodiscard]] model::GeneratorConfig generator(std::size_t d) const {
    model::GeneratorConfig g;
    g.dims = {vocab.size(), 32, d, d, d};
    return g;
  }
};

const Workload& workload() {
  static const Workload w(20);
  return w;
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  model::Rng rng(1);
  const auto a = ad::Var::constant(filled(n, n, rng));
  const auto b = ad::Var::constant(filled(n, n, rng));
  for (auto _ : state) benchmark::DoNotOptimize(ad::matmul(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(16)->Arg(64)->Arg(128);

void BM_EncodeDialog(benchmark::State& state) {
  const auto& w = workload();
  model::Generator gen(w.generator(static_cast<std::size_t>(state.range(0))), 1);
  const auto& rec = w.set.records[0];
  const auto rounds = train::all_rounds(rec);
  ad::NoGradScope ng;
  for (auto _ : state) benchmark::DoNotOptimize(gen.encode(rec, w.set.image(rec), rounds));
}
BENCHMARK(BM_EncodeDialog)->Arg(16)->Arg(64);

void BM_MleStep(benchmark::State& state) {
  const auto& w = workload();
  model::Generator gen(w.generator(static_cast<std::size_t>(state.range(0))), 1);
  auto params = gen.params();
  ad::AdamState adam;
  const auto& rec = w.set.records[0];
  const auto rounds = train::all_rounds(rec);
  for (auto _ : state) benchmark::DoNotOptimize(train::mle_update(gen, rec, w.set.image(rec), rounds, params, adam));
}
BENCHMARK(BM_MleStep)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_SampleAnswer(benchmark::State& state) {
  const auto& w = workload();
  model::Generator gen(w.generator(64), 1);
  const auto& rec = w.set.records[0];
  ad::NoGradScope ng;
  const auto ctx = gen.encoder().encode_round(rec, w.set.image(rec), 3);
  model::Rng rng(2);
  for (auto _ : state) benchmark::DoNotOptimize(gen.decode(ctx, model::DecodeMode::kSample, rng));
}
BENCHMARK(BM_SampleAnswer);

void BM_RankRound(benchmark::State& state) {
  const auto& w = workload();
  model::Generator gen(w.generator(64), 1);
  const auto& rec = w.set.records[0];
  ad::NoGradScope ng;
  const auto ctx = gen.encoder().encode_round(rec, w.set.image(rec), 3);
  const auto& round = rec.rounds[3];
  for (auto _ : state) benchmark::DoNotOptimize(cgan::eval::rank_candidates(gen, ctx, round.candidates, round.gt_index));
}
BENCHMARK(BM_RankRound)->Unit(benchmark::kMillisecond);

void BM_IntermediateRewards(benchmark::State& state) {
  const auto& w = workload();
  model::Generator gen(w.generator(64), 1);
  model::Discriminator dis({w.vocab.size(), 64, 64, 64, 64}, 1);
  const auto& rec = w.set.records[0];
  ad::NoGradScope ng;
  const auto ctx = gen.encoder().encode_round(rec, w.set.image(rec), 3);
  const auto reward = train::discriminator_reward(dis);
  const data::TokenIds answer = rec.rounds[3].answer;
  train::MCConfig mc{static_cast<std::size_t>(state.range(0))};
  model::Rng rng(3);
  for (auto _ : state) benchmark::DoNotOptimize(train::intermediate_rewards(gen, ctx, answer, reward, mc, rng));
}
BENCHMARK(BM_IntermediateRewards)->Arg(1)->Arg(5)->Unit(benchmark::kMillisecond);

void BM_AdversarialIteration(benchmark::State& state) {
  const auto& w = workload();
  model::Generator gen(w.generator(64), 1);
  model::Discriminator dis({w.vocab.size(), 64, 64, 64, 64}, 2);
  model::Critic critic(w.generator(64).dims, 3);
  train::AdversarialConfig cfg;
  cfg.iterations = 1;
  cfg.mode = state.range(0) == 0 ? train::RewardMode::kGlobal : train::RewardMode::kIntermediate;
  for (auto _ : state) benchmark::DoNotOptimize(train::train_adversarial(gen, dis, critic, w.set, cfg));
}
BENCHMARK(BM_AdversarialIteration)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
