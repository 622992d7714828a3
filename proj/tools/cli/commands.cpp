#include "cli/commands.hpp"

#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "cgan/autodiff/checkpoint.hpp"
#include "cgan/eval/metrics.hpp"
#include "cgan/util/atomic_file.hpp"
#include "cli/config.hpp"

namespace cgan::cli {

namespace fs = std::filesystem;

namespace {

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed * 0x9E3779B97F4A7C15ULL + stream;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

enum Stream : std::uint64_t {
  kGenInit = 1,
  kDisInit,
  kCriticInit,
  kGenOrder,
  kDisOrder,
  kGan,
  kSample,
  kSynthTrain,
  kSynthVal,
  kSynthTest,
};

struct Context {
  RunConfig config;
  std::ostream& out;
  std::shared_ptr<spdlog::logger> log;

  void announce(const fs::path& path) const { out << "wrote " << path.string() << "\n"; }
};

fs::path split_path(const Context& ctx, const std::string& split) { return fs::path(ctx.config.get("data_dir")) / (split + ".json"); }
fs::path out_path(const Context& ctx, const std::string& name) { return fs::path(ctx.config.get("out_dir")) / name; }

void require_file(const fs::path& p, const char* what) {
  if (!fs::exists(p)) throw std::runtime_error(std::string("missing ") + what + ": " + p.string());
}

struct LoadedSplit {
  data::FeatureStore features;
  train::DialogSet set;
};

LoadedSplit load_split(const Context& ctx, const std::string& split, const data::Vocabulary& vocab) {
  const fs::path json = split_path(ctx, split);
  require_file(json, "dataset");
  const fs::path feats = fs::path(ctx.config.get("data_dir")) / "features.bin";
  require_file(feats, "feature file");
  LoadedSplit s;
  s.features = data::load_features(feats);
  s.set.records = data::encode_records(data::load_visdial_json(json), vocab);
  ctx.log->info("loaded {} dialogs from {}", s.set.records.size(), json.string());
  return s;
}

data::Vocabulary load_vocab(const fs::path& path) {
  require_file(path, "vocabulary");
  return data::Vocabulary::load(path);
}

void load_params(const fs::path& path, ad::ParamList& params, const char* what) {
  require_file(path, what);
  ad::load_checkpoint(path, params);
}

std::string join_lines(const std::vector<std::string>& lines) {
  std::string s;
  for (const auto& l : lines) s += l + "\n";
  return s;
}

std::string fmt4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

// --- subcommands ---------------------------------------------------------------

void cmd_synth(Context& ctx) {
  const auto scene = ctx.config.scene();
  const std::uint64_t seed = ctx.config.get_seed("seed");
  data::FeatureStore all;
  const fs::path dir = ctx.config.get("data_dir");
  const std::pair<const char*, Stream> splits[] = {{"train", kSynthTrain}, {"val", kSynthVal}, {"test", kSynthTest}};
  for (const auto& [name, stream] : splits) {
    const std::size_t count = ctx.config.get_size(std::string("synth_") + name);
    if (count == 0) continue;
    auto ds = data::synthesize_dataset(count, derive_seed(seed, stream), scene, std::string(name) + "_");
    data::save_visdial_json(dir / (std::string(name) + ".json"), ds.records);
    ctx.announce(dir / (std::string(name) + ".json"));
    all.merge(ds.features);
  }
  data::save_features(dir / "features.bin", all);
  ctx.announce(dir / "features.bin");
}

void cmd_pretrain_gen(Context& ctx) {
  const fs::path json = split_path(ctx, "train");
  require_file(json, "dataset");
  const auto text = data::load_visdial_json(json);
  const auto vocab = data::build_vocabulary(data::vocabulary_corpus(text), ctx.config.get_size("min_count"));
  ctx.log->info("vocabulary: {} tokens", vocab.size());
  const fs::path feats = fs::path(ctx.config.get("data_dir")) / "features.bin";
  require_file(feats, "feature file");
  const auto features = data::load_features(feats);
  train::DialogSet set{data::encode_records(text, vocab), &features};

  const std::uint64_t seed = ctx.config.get_seed("seed");
  model::Generator gen(ctx.config.generator(vocab.size()), derive_seed(seed, kGenInit));
  std::vector<std::string> lines;
  train::pretrain_generator(gen, set, ctx.config.get_size("gen_epochs"), ctx.config.schedule(),
                            derive_seed(seed, kGenOrder), [&](const std::string& line) {
                              ctx.log->info("{}", line);
                              lines.push_back(line);
                            });
  vocab.save(out_path(ctx, "vocab.txt"));
  ctx.announce(out_path(ctx, "vocab.txt"));
  ad::save_checkpoint(out_path(ctx, "gen.ckpt"), gen.params());
  ctx.announce(out_path(ctx, "gen.ckpt"));
  util::write_file_atomic(out_path(ctx, "pretrain_gen.jsonl"), join_lines(lines));
  ctx.announce(out_path(ctx, "pretrain_gen.jsonl"));
}

void cmd_pretrain_dis(Context& ctx, const fs::path& gen_path, const fs::path& vocab_path) {
  const auto vocab = load_vocab(vocab_path);
  auto split = load_split(ctx, "train", vocab);
  split.set.features = &split.features;
  const std::uint64_t seed = ctx.config.get_seed("seed");
  model::Generator gen(ctx.config.generator(vocab.size()), derive_seed(seed, kGenInit));
  auto gp = gen.params();
  load_params(gen_path, gp, "generator checkpoint");
  model::Discriminator dis(ctx.config.discriminator(vocab.size()), derive_seed(seed, kDisInit));
  std::vector<std::string> lines;
  train::pretrain_discriminator(dis, gen, split.set, ctx.config.get_size("dis_epochs"), ctx.config.schedule(),
                                derive_seed(seed, kDisOrder), [&](const std::string& line) {
                                  ctx.log->info("{}", line);
                                  lines.push_back(line);
                                });
  ad::save_checkpoint(out_path(ctx, "dis.ckpt"), dis.params());
  ctx.announce(out_path(ctx, "dis.ckpt"));
  util::write_file_atomic(out_path(ctx, "pretrain_dis.jsonl"), join_lines(lines));
  ctx.announce(out_path(ctx, "pretrain_dis.jsonl"));
}

void cmd_train_gan(Context& ctx, const fs::path& gen_path, const fs::path& dis_path, const fs::path& critic_path,
                   const fs::path& vocab_path) {
  const auto vocab = load_vocab(vocab_path);
  auto split = load_split(ctx, "train", vocab);
  split.set.features = &split.features;
  const std::uint64_t seed = ctx.config.get_seed("seed");
  model::Generator gen(ctx.config.generator(vocab.size()), derive_seed(seed, kGenInit));
  auto gp = gen.params();
  load_params(gen_path, gp, "generator checkpoint");
  model::Discriminator dis(ctx.config.discriminator(vocab.size()), derive_seed(seed, kDisInit));
  auto dp = dis.params();
  load_params(dis_path, dp, "discriminator checkpoint");
  model::Critic critic(ctx.config.critic_dims(vocab.size()), derive_seed(seed, kCriticInit));
  if (!critic_path.empty()) {
    auto cp = critic.params();
    load_params(critic_path, cp, "critic checkpoint");
  }
  auto cfg = ctx.config.adversarial();
  cfg.seed = derive_seed(seed, kGan);
  std::vector<std::string> lines;
  train::train_adversarial(gen, dis, critic, split.set, cfg, [&](const std::string& line) {
    ctx.log->debug("{}", line);
    if (lines.size() % 50 == 49) ctx.log->info("{}", line);
    lines.push_back(line);
  });
  ad::save_checkpoint(out_path(ctx, "gan_gen.ckpt"), gen.params());
  ctx.announce(out_path(ctx, "gan_gen.ckpt"));
  ad::save_checkpoint(out_path(ctx, "gan_dis.ckpt"), dis.params());
  ctx.announce(out_path(ctx, "gan_dis.ckpt"));
  ad::save_checkpoint(out_path(ctx, "critic.ckpt"), critic.params());
  ctx.announce(out_path(ctx, "critic.ckpt"));
  util::write_file_atomic(out_path(ctx, "train_gan.jsonl"), join_lines(lines));
  ctx.announce(out_path(ctx, "train_gan.jsonl"));
}

void cmd_eval(Context& ctx, const fs::path& gen_path, const fs::path& vocab_path, const std::string& split_name,
              const std::string& model_name, const fs::path& report) {
  const auto vocab = load_vocab(vocab_path);
  auto split = load_split(ctx, split_name, vocab);
  split.set.features = &split.features;
  model::Generator gen(ctx.config.generator(vocab.size()), derive_seed(ctx.config.get_seed("seed"), kGenInit));
  auto gp = gen.params();
  load_params(gen_path, gp, "generator checkpoint");
  const auto r = eval::evaluate_split(gen, split.set);
  const std::string row = eval::report_row(model_name, split_name, r);
  ctx.log->info("{}", row);
  const std::array<std::string, 1> rows{row};
  const fs::path path = report.empty() ? out_path(ctx, "eval_" + split_name + ".csv") : report;
  eval::write_report(path, rows);
  ctx.announce(path);
}

void cmd_sample(Context& ctx, const fs::path& gen_path, const fs::path& dis_path, const fs::path& vocab_path,
                const std::string& split_name, std::size_t index, bool greedy) {
  const auto vocab = load_vocab(vocab_path);
  auto split = load_split(ctx, split_name, vocab);
  split.set.features = &split.features;
  if (index >= split.set.records.size()) {
    throw UsageError("record index " + std::to_string(index) + " outside split of " +
                     std::to_string(split.set.records.size()));
  }
  const std::uint64_t seed = ctx.config.get_seed("seed");
  model::Generator gen(ctx.config.generator(vocab.size()), derive_seed(seed, kGenInit));
  auto gp = gen.params();
  load_params(gen_path, gp, "generator checkpoint");
  std::optional<model::Discriminator> dis;
  if (!dis_path.empty()) {
    dis.emplace(ctx.config.discriminator(vocab.size()), derive_seed(seed, kDisInit));
    auto dp = dis->params();
    load_params(dis_path, dp, "discriminator checkpoint");
  }
  const auto& rec = split.set.records[index];
  const auto rounds = train::all_rounds(rec);
  ad::NoGradScope no_grad;
  const auto contexts = gen.encode(rec, split.set.image(rec), rounds);
  model::Rng rng(derive_seed(seed, kSample));
  auto words = [&](const data::TokenIds& ids) { return data::join(vocab.decode(ids)); };
  auto vec = [](const ad::Tensor& t) {
    std::string s = "[";
    for (std::size_t i = 0; i < t.size(); ++i) s += (i ? ", " : "") + fmt4(t[i]);
    return s + "]";
  };
  static const char* kStepNames[] = {"image-1", "history", "question", "image-2"};
  std::ostream& o = ctx.out;
  o << "image " << rec.image_id << "\n";
  o << "caption: " << words(rec.caption) << "\n";
  for (std::size_t i = 0; i < rounds.size(); ++i) {
    const auto& r = rec.rounds[rounds[i]];
    const auto resp = gen.decode(contexts[i], greedy ? model::DecodeMode::kGreedy : model::DecodeMode::kSample, rng);
    o << "round " << rounds[i] + 1 << "\n";
    o << "  Q: " << words(r.question) << "\n";
    o << "  human: " << words(r.answer) << "\n";
    o << "  model: " << words(resp.words()) << "\n";
    o << "  token log-probs:";
    for (double lp : resp.log_probs) o << " " << fmt4(lp);
    o << "\n";
    if (dis) o << "  reward: " << fmt4(dis->discriminate(train::make_example(contexts[i], resp.tokens))) << "\n";
    for (std::size_t s = 0; s < 4; ++s) o << "  attention " << kStepNames[s] << ": " << vec(contexts[i].alphas[s]) << "\n";
  }
}

std::shared_ptr<spdlog::logger> make_logger(std::ostream& err) {
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
  auto logger = std::make_shared<spdlog::logger>("cgan", sink);
  logger->set_pattern("[%l] %v");
  logger->set_level(spdlog::level::info);
  if (const char* env = std::getenv("CGAN_LOG_LEVEL")) {
    const auto level = spdlog::level::from_str(env);
    // from_str maps unknown names to "off"; only accept exact matches.
    if (level != spdlog::level::off || std::string(env) == "off") logger->set_level(level);
  }
  return logger;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Co-attentive visual dialog generator with adversarial training"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "key=value configuration file");
  app.add_option("--set", overrides, "override one key (key=value); repeatable");
  std::string data_dir, out_dir;
  app.add_option("--data", data_dir, "dataset directory (data_dir)");
  app.add_option("--out", out_dir, "output directory (out_dir)");

  auto* synth = app.add_subcommand("synth-data", "generate the synthetic grid-scene dialog dataset");
  auto* pgen = app.add_subcommand("pretrain-gen", "build the vocabulary and pretrain the generator with MLE");
  auto* pdis = app.add_subcommand("pretrain-dis", "pretrain the discriminator against generator samples");
  auto* gan = app.add_subcommand("train-gan", "adversarial fine-tuning with REINFORCE");
  auto* ev = app.add_subcommand("eval", "rank the 100 candidates of every round and report metrics");
  auto* smp = app.add_subcommand("sample", "print generated answers with attention weights");
  auto* cfg_cmd = app.add_subcommand("config", "print the effective configuration");

  std::string gen_path, dis_path, critic_path, vocab_path, split = "test", model_name = "model", report;
  std::size_t iters = 0, index = 0;
  bool have_iters = false, use_sample = false;
  for (auto* sc : {pdis, gan, ev, smp}) {
    sc->add_option("--gen", gen_path, "generator checkpoint")->required();
    sc->add_option("--vocab", vocab_path, "vocabulary file (default: next to --gen)");
  }
  gan->add_option("--dis", dis_path, "discriminator checkpoint")->required();
  gan->add_option("--critic", critic_path, "critic checkpoint to resume from");
  auto* iters_opt = gan->add_option("--iters", iters, "generator steps (overrides gan_iters)");
  smp->add_option("--dis", dis_path, "discriminator checkpoint; prints rewards");
  for (auto* sc : {ev, smp}) sc->add_option("--split", split, "dataset split")->capture_default_str();
  ev->add_option("--name", model_name, "model column of the report")->capture_default_str();
  ev->add_option("--report", report, "CSV path (default: <out>/eval_<split>.csv)");
  smp->add_option("--index", index, "record index within the split")->capture_default_str();
  smp->add_flag("--sample", use_sample, "sample instead of greedy decoding");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return e.get_exit_code() == 0 ? kExitOk : kExitUsage;
  }
  have_iters = iters_opt->count() > 0;

  Context ctx{RunConfig{}, out, make_logger(err)};
  try {
    if (!config_path.empty()) ctx.config.load(config_path);
    for (const auto& o : overrides) ctx.config.set(o);
    if (!data_dir.empty()) ctx.config.set("data_dir", data_dir);
    if (!out_dir.empty()) ctx.config.set("out_dir", out_dir);
    if (have_iters) ctx.config.set("gan_iters", std::to_string(iters));
    (void)ctx.config.generator(1);  // dimension consistency
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  const fs::path vocab = vocab_path.empty() && !gen_path.empty() ? fs::path(gen_path).parent_path() / "vocab.txt"
                                                                  : fs::path(vocab_path);
  try {
    if (synth->parsed()) cmd_synth(ctx);
    if (pgen->parsed()) cmd_pretrain_gen(ctx);
    if (pdis->parsed()) cmd_pretrain_dis(ctx, gen_path, vocab);
    if (gan->parsed()) cmd_train_gan(ctx, gen_path, dis_path, critic_path, vocab);
    if (ev->parsed()) cmd_eval(ctx, gen_path, vocab, split, model_name, report);
    if (smp->parsed()) cmd_sample(ctx, gen_path, dis_path, vocab, split, index, !use_sample);
    if (cfg_cmd->parsed()) out << ctx.config.dump();
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace cgan::cli
