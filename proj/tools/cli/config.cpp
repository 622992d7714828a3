#include "cli/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace cgan::cli {

namespace {

enum class Kind { kSize, kDouble, kBool, kMode, kText };

struct KeySpec {
  const char* key;
  const char* value;
  Kind kind;
  const char* doc;
};

constexpr KeySpec kKeys[] = {
    {"seed", "1", Kind::kSize, "base seed for initialization, sampling and data order"},
    {"d", "64", Kind::kSize, "shared feature width (attention guidance)"},
    {"d_emb", "64", Kind::kSize, "token embedding width"},
    {"h_lstm", "64", Kind::kSize, "encoder/decoder LSTM hidden size (must equal d)"},
    {"h", "64", Kind::kSize, "co-attention hidden size"},
    {"d_img", "32", Kind::kSize, "region feature width"},
    {"dis_hidden", "64", Kind::kSize, "discriminator fusion width"},
    {"dis_h_lstm", "64", Kind::kSize, "discriminator pair LSTM hidden size"},
    {"min_count", "5", Kind::kSize, "minimum training count for a vocabulary word"},
    {"k_max", "20", Kind::kSize, "maximum answer length in words"},
    {"emit_unk", "true", Kind::kBool, "allow the generator to emit <unk>"},
    {"length_normalized", "false", Kind::kBool, "rank candidates by per-token log-likelihood"},
    {"mc_rollouts", "5", Kind::kSize, "Monte Carlo completions per token"},
    {"lr", "1e-3", Kind::kDouble, "pretraining learning rate at epoch 1"},
    {"lr_min", "1e-5", Kind::kDouble, "learning rate floor"},
    {"lr_decay", "0.8", Kind::kDouble, "per-epoch learning rate factor"},
    {"clip_norm", "5", Kind::kDouble, "global gradient norm clip (0 disables)"},
    {"gen_epochs", "8", Kind::kSize, "generator pretraining epochs"},
    {"dis_epochs", "2", Kind::kSize, "discriminator pretraining epochs"},
    {"gan_iters", "600", Kind::kSize, "adversarial generator steps (one dialog each)"},
    {"gan_gen_lr", "1e-4", Kind::kDouble, "generator learning rate during adversarial training"},
    {"gan_dis_lr", "1e-4", Kind::kDouble, "discriminator learning rate during adversarial training"},
    {"critic_lr", "1e-3", Kind::kDouble, "critic learning rate"},
    {"dis_update_period", "20", Kind::kSize, "generator steps per discriminator update"},
    {"teacher_forcing", "true", Kind::kBool, "interleave MLE updates on human answers"},
    {"mode", "intermediate", Kind::kMode, "reward mode: global | intermediate"},
    {"log_wallclock", "false", Kind::kBool, "add wallclock_ms to training logs"},
    {"synth_train", "2000", Kind::kSize, "synthetic training dialogs"},
    {"synth_val", "0", Kind::kSize, "synthetic validation dialogs"},
    {"synth_test", "100", Kind::kSize, "synthetic test dialogs"},
    {"synth_grid", "4", Kind::kSize, "scene grid side"},
    {"synth_min_objects", "3", Kind::kSize, "fewest objects per scene"},
    {"synth_max_objects", "5", Kind::kSize, "most objects per scene"},
    {"synth_noise", "0.1", Kind::kDouble, "feature noise standard deviation"},
    {"synth_follow_up", "0.4", Kind::kDouble, "probability of a follow-up question"},
    {"data_dir", "data", Kind::kText, "dataset directory"},
    {"out_dir", "run", Kind::kText, "output directory"},
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

const KeySpec* find_spec(const std::string& key) {
  for (const auto& k : kKeys)
    if (key == k.key) return &k;
  return nullptr;
}

bool parse_size(const std::string& v, std::size_t& out) {
  const auto* end = v.data() + v.size();
  const auto res = std::from_chars(v.data(), end, out);
  return res.ec == std::errc() && res.ptr == end && !v.empty();
}

bool parse_double(const std::string& v, double& out) {
  if (v.empty()) return false;
  std::size_t pos = 0;
  try {
    out = std::stod(v, &pos);
  } catch (const std::exception&) {
    return false;
  }
  return pos == v.size() && std::isfinite(out);
}

bool parse_bool(const std::string& v, bool& out) {
  if (v == "true" || v == "1") {
    out = true;
    return true;
  }
  if (v == "false" || v == "0") {
    out = false;
    return true;
  }
  return false;
}

}  // namespace

RunConfig::RunConfig() {
  for (const auto& k : kKeys) entries_[k.key] = {k.value, k.doc};
}

void RunConfig::check(const std::string& key, const std::string& value) const {
  const KeySpec* spec = find_spec(key);
  if (spec == nullptr) throw ConfigError("unknown config key '" + key + "'");
  std::size_t s;
  double d;
  bool b;
  switch (spec->kind) {
    case Kind::kSize:
      if (!parse_size(value, s)) throw ConfigError("config key '" + key + "' needs a non-negative integer, got '" + value + "'");
      break;
    case Kind::kDouble:
      if (!parse_double(value, d)) throw ConfigError("config key '" + key + "' needs a number, got '" + value + "'");
      break;
    case Kind::kBool:
      if (!parse_bool(value, b)) throw ConfigError("config key '" + key + "' needs true or false, got '" + value + "'");
      break;
    case Kind::kMode:
      if (value != "global" && value != "intermediate") {
        throw ConfigError("config key 'mode' must be global or intermediate, got '" + value + "'");
      }
      break;
    case Kind::kText:
      if (value.empty()) throw ConfigError("config key '" + key + "' must not be empty");
      break;
  }
}

void RunConfig::set(const std::string& key, const std::string& value) {
  check(key, value);
  entries_[key].value = value;
}

void RunConfig::set(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + assignment + "'");
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void RunConfig::parse(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    try {
      set(line);
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

void RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  parse(ss.str(), path.string());
}

const std::string& RunConfig::get(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second.value;
}

std::size_t RunConfig::get_size(const std::string& key) const {
  std::size_t v = 0;
  parse_size(get(key), v);
  return v;
}

double RunConfig::get_double(const std::string& key) const {
  double v = 0.0;
  parse_double(get(key), v);
  return v;
}

bool RunConfig::get_bool(const std::string& key) const {
  bool v = false;
  parse_bool(get(key), v);
  return v;
}

std::uint64_t RunConfig::get_seed(const std::string& key) const { return get_size(key); }

std::string RunConfig::dump() const {
  std::string out;
  for (const auto& [k, e] : entries_) out += k + "=" + e.value + "\n";
  return out;
}

model::GeneratorConfig RunConfig::generator(std::size_t vocab) const {
  if (get_size("h_lstm") != get_size("d")) throw ConfigError("h_lstm must equal d (LSTM states feed the attention)");
  model::GeneratorConfig g;
  g.dims = {vocab, get_size("d_img"), get_size("d"), get_size("d_emb"), get_size("h")};
  g.k_max = get_size("k_max");
  g.emit_unk = get_bool("emit_unk");
  g.length_normalized = get_bool("length_normalized");
  return g;
}

model::DiscriminatorConfig RunConfig::discriminator(std::size_t vocab) const {
  return {vocab, get_size("d"), get_size("d_emb"), get_size("dis_h_lstm"), get_size("dis_hidden")};
}

model::EncoderDims RunConfig::critic_dims(std::size_t vocab) const { return generator(vocab).dims; }

train::Schedule RunConfig::schedule() const {
  return {get_double("lr"), get_double("lr_min"), get_double("lr_decay"), get_double("clip_norm")};
}

train::AdversarialConfig RunConfig::adversarial() const {
  train::AdversarialConfig a;
  a.iterations = get_size("gan_iters");
  a.mode = get("mode") == "global" ? train::RewardMode::kGlobal : train::RewardMode::kIntermediate;
  a.teacher_forcing = get_bool("teacher_forcing");
  a.dis_update_period = get_size("dis_update_period");
  a.mc.rollouts = get_size("mc_rollouts");
  a.gen_lr = get_double("gan_gen_lr");
  a.dis_lr = get_double("gan_dis_lr");
  a.critic_lr = get_double("critic_lr");
  a.clip_norm = get_double("clip_norm");
  a.seed = get_seed("seed");
  a.log_wallclock = get_bool("log_wallclock");
  return a;
}

data::SceneConfig RunConfig::scene() const {
  data::SceneConfig s;
  s.grid = get_size("synth_grid");
  s.d_img = get_size("d_img");
  s.min_objects = get_size("synth_min_objects");
  s.max_objects = get_size("synth_max_objects");
  s.noise = get_double("synth_noise");
  s.follow_up_prob = get_double("synth_follow_up");
  return s;
}

}  // namespace cgan::cli
