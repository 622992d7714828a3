#include "cgan/eval/metrics.hpp"

#include <cstdio>
#include <stdexcept>

#include "cgan/train/adversarial.hpp"
#include "cgan/util/atomic_file.hpp"

namespace cgan::eval {

std::size_t rank_of(std::span<const double> scores, std::size_t gt_index) {
  if (gt_index >= scores.size()) throw std::out_of_range("rank_of: gt_index outside the candidate list");
  const double gt = scores[gt_index];
  std::size_t rank = 1;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] > gt || (scores[i] == gt && i < gt_index)) ++rank;
  }
  return rank;
}

RankOutcome rank_candidates(const model::Generator& gen, const model::EncoderContext& context,
                            std::span<const data::TokenIds> candidates, int gt_index, std::string round_id) {
  if (candidates.size() != data::kCandidatesPerRound) {
    throw std::invalid_argument("rank_candidates: expected 100 candidates, got " + std::to_string(candidates.size()));
  }
  if (gt_index < 0 || static_cast<std::size_t>(gt_index) >= candidates.size()) {
    throw std::out_of_range("rank_candidates: gt_index " + std::to_string(gt_index) + " out of range");
  }
  const auto scores = gen.score_candidates(context, candidates);
  return {std::move(round_id), rank_of(scores, static_cast<std::size_t>(gt_index))};
}

EvalReport compute_metrics(std::span<const RankOutcome> outcomes) {
  if (outcomes.empty()) throw std::invalid_argument("compute_metrics: no outcomes");
  EvalReport r;
  double rr = 0.0, rank_sum = 0.0;
  std::size_t at1 = 0, at5 = 0, at10 = 0;
  for (const auto& o : outcomes) {
    if (o.rank == 0) throw std::invalid_argument("compute_metrics: rank must be at least 1");
    rr += 1.0 / static_cast<double>(o.rank);
    rank_sum += static_cast<double>(o.rank);
    at1 += o.rank <= 1;
    at5 += o.rank <= 5;
    at10 += o.rank <= 10;
  }
  const auto n = static_cast<double>(outcomes.size());
  r.mrr = rr / n;
  r.r_at_1 = static_cast<double>(at1) / n;
  r.r_at_5 = static_cast<double>(at5) / n;
  r.r_at_10 = static_cast<double>(at10) / n;
  r.mean_rank = rank_sum / n;
  r.rounds = outcomes.size();
  return r;
}

std::vector<RankOutcome> rank_split(const model::Generator& gen, const train::DialogSet& data) {
  ad::NoGradScope no_grad;
  std::vector<RankOutcome> out;
  for (const auto& rec : data.records) {
    const auto rounds = train::all_rounds(rec);
    const auto contexts = gen.encode(rec, data.image(rec), rounds);
    for (std::size_t i = 0; i < rounds.size(); ++i) {
      const auto& r = rec.rounds[rounds[i]];
      out.push_back(
          rank_candidates(gen, contexts[i], r.candidates, r.gt_index, rec.image_id + "#" + std::to_string(rounds[i])));
    }
  }
  return out;
}

EvalReport evaluate_split(const model::Generator& gen, const train::DialogSet& data) {
  return compute_metrics(rank_split(gen, data));
}

std::string report_row(const std::string& model, const std::string& split, const EvalReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.6f,%.6f,%.4f,%zu", r.mrr, r.r_at_1, r.r_at_5, r.r_at_10, r.mean_rank,
                r.rounds);
  return model + "," + split + "," + buf;
}

void write_report(const std::filesystem::path& path, std::span<const std::string> rows) {
  std::string text = std::string(kReportHeader) + "\n";
  for (const auto& row : rows) text += row + "\n";
  util::write_file_atomic(path, text);
}

}  // namespace cgan::eval
