#include "cgan/data/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <numeric>
#include <random>
#include <stdexcept>

namespace cgan::data {

namespace {

enum class Kind { Color, Where, WhatAt, Exists, Count, FollowShape, FollowColor, FollowWhere };

constexpr std::array<Kind, 5> kBaseKinds = {Kind::Color, Kind::Where, Kind::WhatAt, Kind::Exists, Kind::Count};
constexpr std::array<Kind, 3> kFollowKinds = {Kind::FollowShape, Kind::FollowColor, Kind::FollowWhere};

const std::string kCantTell = "I can't tell.";
const std::string kNothing = "Nothing is there.";
const std::string kYes = "Yes, there is.";
const std::string kNo = "No, there isn't.";

std::string render_color(int color) { return "It is " + color_names()[static_cast<std::size_t>(color)] + "."; }
std::string render_shape(int shape) { return "It is a " + shape_names()[static_cast<std::size_t>(shape)] + "."; }
std::string render_where(std::size_t cell, std::size_t grid) {
  return "It is in row " + std::to_string(cell / grid + 1) + " column " + std::to_string(cell % grid + 1) + ".";
}
std::string render_thing(int color, int shape) {
  return "A " + color_names()[static_cast<std::size_t>(color)] + " " + shape_names()[static_cast<std::size_t>(shape)] +
         ".";
}
std::string render_count(std::size_t n) { return n == 1 ? "There is 1." : "There are " + std::to_string(n) + "."; }

/// Every answer a question of this kind can receive.
std::vector<std::string> answer_space(Kind kind, const SceneConfig& cfg) {
  std::vector<std::string> out;
  const int shapes = static_cast<int>(shape_names().size());
  const int colors = static_cast<int>(color_names().size());
  switch (kind) {
    case Kind::Color:
    case Kind::FollowColor:
      for (int c = 0; c < colors; ++c) out.push_back(render_color(c));
      out.push_back(kCantTell);
      break;
    case Kind::Where:
    case Kind::FollowWhere:
      for (std::size_t cell = 0; cell < cfg.grid * cfg.grid; ++cell) out.push_back(render_where(cell, cfg.grid));
      out.push_back(kCantTell);
      break;
    case Kind::WhatAt:
      for (int c = 0; c < colors; ++c)
        for (int s = 0; s < shapes; ++s) out.push_back(render_thing(c, s));
      out.push_back(kNothing);
      break;
    case Kind::Exists:
      out = {kYes, kNo};
      break;
    case Kind::Count:
      for (std::size_t n = 0; n <= cfg.max_objects; ++n) out.push_back(render_count(n));
      break;
    case Kind::FollowShape:
      for (int s = 0; s < shapes; ++s) out.push_back(render_shape(s));
      break;
  }
  return out;
}

struct GeneratedRound {
  Kind kind;
  std::string question;
  std::string answer;
  std::optional<std::size_t> referent;
};

std::size_t pick(std::mt19937_64& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

bool coin(std::mt19937_64& rng, double p) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p; }

GeneratedRound make_round(const SceneSpec& scene, const SceneConfig& cfg, std::optional<std::size_t> previous,
                          std::mt19937_64& rng) {
  const auto& shapes = shape_names();
  const auto& colors = color_names();
  std::vector<std::size_t> occupied;
  for (std::size_t i = 0; i < scene.cells.size(); ++i)
    if (scene.cells[i].present) occupied.push_back(i);

  if (previous && coin(rng, cfg.follow_up_prob)) {
    const Cell& obj = scene.cells[*previous];
    switch (kFollowKinds[pick(rng, kFollowKinds.size())]) {
      case Kind::FollowShape:
        return {Kind::FollowShape, "What shape is it?", render_shape(obj.shape), previous};
      case Kind::FollowColor:
        return {Kind::FollowColor, "What color is it?", render_color(obj.color), previous};
      default:
        return {Kind::FollowWhere, "Where is it?", render_where(*previous, scene.grid), previous};
    }
  }

  const Kind kind = kBaseKinds[pick(rng, kBaseKinds.size())];
  switch (kind) {
    case Kind::Color:
    case Kind::Where: {
      std::vector<int> absent;
      for (int s = 0; s < static_cast<int>(shapes.size()); ++s)
        if (!scene.find_shape(s)) absent.push_back(s);
      const bool ask_absent = !absent.empty() && coin(rng, cfg.absent_prob);
      const std::string lead = kind == Kind::Color ? "What color is the " : "Where is the ";
      if (ask_absent) {
        const int s = absent[pick(rng, absent.size())];
        return {kind, lead + shapes[static_cast<std::size_t>(s)] + "?", kCantTell, std::nullopt};
      }
      const std::size_t cell = occupied[pick(rng, occupied.size())];
      const Cell& obj = scene.cells[cell];
      std::string answer = kind == Kind::Color ? render_color(obj.color) : render_where(cell, scene.grid);
      return {kind, lead + shapes[static_cast<std::size_t>(obj.shape)] + "?", std::move(answer), cell};
    }
    case Kind::WhatAt: {
      const std::size_t cell = coin(rng, 0.6) ? occupied[pick(rng, occupied.size())] : pick(rng, scene.cells.size());
      const std::string q = "What is in row " + std::to_string(cell / scene.grid + 1) + " column " +
                            std::to_string(cell % scene.grid + 1) + "?";
      const Cell& c = scene.cells[cell];
      if (!c.present) return {kind, q, kNothing, std::nullopt};
      return {kind, q, render_thing(c.color, c.shape), cell};
    }
    case Kind::Exists: {
      if (coin(rng, 0.5)) {
        const std::size_t cell = occupied[pick(rng, occupied.size())];
        const Cell& c = scene.cells[cell];
        return {kind,
                "Is there a " + colors[static_cast<std::size_t>(c.color)] + " " +
                    shapes[static_cast<std::size_t>(c.shape)] + "?",
                kYes, cell};
      }
      for (;;) {
        const int c = static_cast<int>(pick(rng, colors.size()));
        const int s = static_cast<int>(pick(rng, shapes.size()));
        auto at = scene.find_shape(s);
        if (at && scene.cells[*at].color == c) continue;
        return {kind,
                "Is there a " + colors[static_cast<std::size_t>(c)] + " " + shapes[static_cast<std::size_t>(s)] + "?",
                kNo, std::nullopt};
      }
    }
    default: {
      const int c = static_cast<int>(pick(rng, colors.size()));
      std::size_t n = 0;
      for (std::size_t cell : occupied)
        if (scene.cells[cell].color == c) ++n;
      return {Kind::Count, "How many " + colors[static_cast<std::size_t>(c)] + " shapes are there?", render_count(n),
              std::nullopt};
    }
  }
}

SceneSpec make_scene(const SceneConfig& cfg, std::mt19937_64& rng) {
  SceneSpec scene;
  scene.grid = cfg.grid;
  scene.cells.assign(cfg.grid * cfg.grid, Cell{});
  const std::size_t k = cfg.min_objects + pick(rng, cfg.max_objects - cfg.min_objects + 1);
  std::vector<int> shapes(shape_names().size());
  std::iota(shapes.begin(), shapes.end(), 0);
  std::shuffle(shapes.begin(), shapes.end(), rng);
  std::vector<std::size_t> cells(scene.cells.size());
  std::iota(cells.begin(), cells.end(), 0);
  std::shuffle(cells.begin(), cells.end(), rng);
  for (std::size_t i = 0; i < k; ++i) {
    Cell& c = scene.cells[cells[i]];
    c.present = true;
    c.shape = shapes[i];
    c.color = static_cast<int>(pick(rng, color_names().size()));
  }
  return scene;
}

std::optional<int> number_word(const std::string& word) {
  for (int n = 0; n <= 20; ++n) {
    const auto spelled = spell_number(std::to_string(n));
    if (spelled.size() == 1 && spelled[0] == word) return n;
  }
  return std::nullopt;
}

std::optional<int> index_of(const std::vector<std::string>& names, const std::string& word) {
  auto it = std::find(names.begin(), names.end(), word);
  if (it == names.end()) return std::nullopt;
  return static_cast<int>(it - names.begin());
}

void check_config(const SceneConfig& cfg) {
  if (cfg.grid == 0) throw std::invalid_argument("scene config: grid must be positive");
  if (cfg.d_img < shape_names().size() + color_names().size() + 1 + 2 * cfg.grid) {
    throw std::invalid_argument("scene config: d_img too small for the attribute encoding");
  }
  if (cfg.min_objects == 0 || cfg.min_objects > cfg.max_objects || cfg.max_objects > shape_names().size() ||
      cfg.max_objects > cfg.grid * cfg.grid) {
    throw std::invalid_argument("scene config: invalid object count range");
  }
}

}  // namespace

const std::vector<std::string>& shape_names() {
  static const std::vector<std::string> names = {"square", "circle", "triangle", "star", "heart", "diamond"};
  return names;
}

const std::vector<std::string>& color_names() {
  static const std::vector<std::string> names = {"red",   "green", "blue",   "yellow",
                                                 "white", "black", "orange", "purple"};
  return names;
}

std::optional<std::size_t> SceneSpec::find_shape(int shape) const {
  for (std::size_t i = 0; i < cells.size(); ++i)
    if (cells[i].present && cells[i].shape == shape) return i;
  return std::nullopt;
}

ad::Tensor scene_features(const SceneSpec& scene, const SceneConfig& config, std::uint64_t seed) {
  check_config(config);
  const std::size_t n = scene.cells.size();
  const std::size_t d = config.d_img;
  const std::size_t nshapes = shape_names().size();
  const std::size_t ncolors = color_names().size();
  ad::Tensor out = ad::Tensor::matrix(n, d);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, config.noise);
  for (std::size_t i = 0; i < n; ++i) {
    const Cell& c = scene.cells[i];
    if (c.present) {
      out.at(i, static_cast<std::size_t>(c.shape)) = 1.0;
      out.at(i, nshapes + static_cast<std::size_t>(c.color)) = 1.0;
      out.at(i, nshapes + ncolors) = 1.0;
    }
    out.at(i, nshapes + ncolors + 1 + i / scene.grid) = 1.0;
    out.at(i, nshapes + ncolors + 1 + scene.grid + i % scene.grid) = 1.0;
    for (std::size_t j = 0; j < d; ++j) {
      out.at(i, j) = static_cast<double>(static_cast<float>(out.at(i, j) + noise(rng)));
    }
  }
  return out;
}

std::optional<TemplateAnswer> answer_question(const SceneSpec& scene, const Tokens& q,
                                              std::optional<std::size_t> previous) {
  const auto& shapes = shape_names();
  const auto& colors = color_names();
  const auto toks = [](std::initializer_list<const char*> words) { return Tokens(words.begin(), words.end()); };
  const auto answer_of = [](const std::string& raw) { return preprocess_text(raw); };

  if (q == toks({"what", "shape", "is", "it"}) || q == toks({"what", "color", "is", "it"}) ||
      q == toks({"where", "is", "it"})) {
    if (!previous || *previous >= scene.cells.size() || !scene.cells[*previous].present) return std::nullopt;
    const Cell& obj = scene.cells[*previous];
    if (q[0] == "where") return TemplateAnswer{answer_of(render_where(*previous, scene.grid)), previous};
    if (q[1] == "shape") return TemplateAnswer{answer_of(render_shape(obj.shape)), previous};
    return TemplateAnswer{answer_of(render_color(obj.color)), previous};
  }
  // what color is the <shape> / where is the <shape>
  const bool color_q = q.size() == 5 && q[0] == "what" && q[1] == "color" && q[2] == "is" && q[3] == "the";
  const bool where_q = q.size() == 4 && q[0] == "where" && q[1] == "is" && q[2] == "the";
  if (color_q || where_q) {
    auto shape = index_of(shapes, q.back());
    if (!shape) return std::nullopt;
    auto cell = scene.find_shape(*shape);
    if (!cell) return TemplateAnswer{answer_of(kCantTell), std::nullopt};
    if (color_q) return TemplateAnswer{answer_of(render_color(scene.cells[*cell].color)), cell};
    return TemplateAnswer{answer_of(render_where(*cell, scene.grid)), cell};
  }
  // what is in row <r> column <c>
  if (q.size() == 7 && q[0] == "what" && q[1] == "is" && q[2] == "in" && q[3] == "row" && q[5] == "column") {
    auto r = number_word(q[4]);
    auto c = number_word(q[6]);
    if (!r || !c || *r < 1 || *c < 1 || static_cast<std::size_t>(*r) > scene.grid ||
        static_cast<std::size_t>(*c) > scene.grid) {
      return std::nullopt;
    }
    const std::size_t cell = static_cast<std::size_t>(*r - 1) * scene.grid + static_cast<std::size_t>(*c - 1);
    const Cell& obj = scene.cells[cell];
    if (!obj.present) return TemplateAnswer{answer_of(kNothing), std::nullopt};
    return TemplateAnswer{answer_of(render_thing(obj.color, obj.shape)), cell};
  }
  // is there a <color> <shape>
  if (q.size() == 5 && q[0] == "is" && q[1] == "there" && q[2] == "a") {
    auto color = index_of(colors, q[3]);
    auto shape = index_of(shapes, q[4]);
    if (!color || !shape) return std::nullopt;
    auto cell = scene.find_shape(*shape);
    if (cell && scene.cells[*cell].color == *color) return TemplateAnswer{answer_of(kYes), cell};
    return TemplateAnswer{answer_of(kNo), std::nullopt};
  }
  // how many <color> shapes are there
  if (q.size() == 6 && q[0] == "how" && q[1] == "many" && q[3] == "shapes" && q[4] == "are" && q[5] == "there") {
    auto color = index_of(colors, q[2]);
    if (!color) return std::nullopt;
    std::size_t n = 0;
    for (const auto& c : scene.cells)
      if (c.present && c.color == *color) ++n;
    return TemplateAnswer{answer_of(render_count(n)), std::nullopt};
  }
  return std::nullopt;
}

std::optional<std::size_t> find_inconsistent_round(const TextRecord& record, const SceneSpec& scene) {
  std::optional<std::size_t> previous;
  for (std::size_t t = 0; t < record.rounds.size(); ++t) {
    auto derived = answer_question(scene, record.rounds[t].question, previous);
    if (!derived || derived->answer != record.rounds[t].answer) return t;
    previous = derived->referent;
  }
  return std::nullopt;
}

SyntheticDataset synthesize_dataset(std::size_t count, std::uint64_t seed, const SceneConfig& config,
                                    const std::string& id_prefix) {
  if (count == 0) throw std::invalid_argument("synthesize_dataset: count must be positive");
  check_config(config);
  std::mt19937_64 rng(seed);
  SyntheticDataset out;
  std::vector<std::vector<GeneratedRound>> dialogs;
  dialogs.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    SceneSpec scene = make_scene(config, rng);
    char id[32];
    std::snprintf(id, sizeof(id), "%06zu", i);
    RawRecord rec;
    rec.image_id = id_prefix + id;
    // The caption names the first object in row-major order.
    const auto first = std::find_if(scene.cells.begin(), scene.cells.end(), [](const Cell& c) { return c.present; });
    std::size_t objects = 0;
    for (const auto& c : scene.cells) objects += c.present ? 1 : 0;
    rec.caption = "There are " + std::to_string(objects) + " shapes, including a " +
                  color_names()[static_cast<std::size_t>(first->color)] + " " +
                  shape_names()[static_cast<std::size_t>(first->shape)] + ".";
    std::vector<GeneratedRound> rounds;
    std::optional<std::size_t> previous;
    for (std::size_t t = 0; t < kRoundsPerDialog; ++t) {
      rounds.push_back(make_round(scene, config, previous, rng));
      previous = rounds.back().referent;
    }
    out.features.emplace(rec.image_id, scene_features(scene, config, rng()));
    out.records.push_back(std::move(rec));
    out.scenes.push_back(std::move(scene));
    dialogs.push_back(std::move(rounds));
  }

  // Candidate lists.
  std::vector<std::vector<std::string>> spaces;
  for (int k = 0; k <= static_cast<int>(Kind::FollowWhere); ++k) spaces.push_back(answer_space(static_cast<Kind>(k), config));
  std::vector<std::string> all_answers;
  for (const auto& s : spaces) all_answers.insert(all_answers.end(), s.begin(), s.end());
  std::sort(all_answers.begin(), all_answers.end());
  all_answers.erase(std::unique(all_answers.begin(), all_answers.end()), all_answers.end());

  for (std::size_t i = 0; i < count; ++i) {
    for (const auto& g : dialogs[i]) {
      std::vector<std::string> distractors;
      std::vector<std::string> same = spaces[static_cast<std::size_t>(g.kind)];
      std::erase(same, g.answer);
      std::shuffle(same.begin(), same.end(), rng);
      if (same.size() > config.max_same_template) same.resize(config.max_same_template);
      distractors = same;
      int attempts = 0;
      while (distractors.size() < kCandidatesPerRound - 1) {
        std::string pick_answer;
        if (count > 1 && attempts < 1000) {
          ++attempts;
          std::size_t other = pick(rng, count - 1);
          if (other >= i) ++other;
          pick_answer = dialogs[other][pick(rng, kRoundsPerDialog)].answer;
        } else {
          pick_answer = all_answers[pick(rng, all_answers.size())];
        }
        if (pick_answer == g.answer) continue;
        distractors.push_back(std::move(pick_answer));
      }
      std::shuffle(distractors.begin(), distractors.end(), rng);
      RawRound rr;
      rr.question = g.question;
      rr.answer = g.answer;
      rr.gt_index = static_cast<int>(pick(rng, kCandidatesPerRound));
      rr.answer_options = std::move(distractors);
      rr.answer_options.insert(rr.answer_options.begin() + rr.gt_index, g.answer);
      out.records[i].dialog.push_back(std::move(rr));
    }
  }
  return out;
}

}  // namespace cgan::data
