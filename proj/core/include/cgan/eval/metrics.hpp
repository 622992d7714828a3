#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cgan/model/generator.hpp"

namespace cgan::train {
struct DialogSet;
}

namespace cgan::eval {

struct RankOutcome {
  std::string round_id;  // "<image_id>#<round>"
  std::size_t rank = 0;  // 1-based
};

struct EvalReport {
  double mrr = 0.0;
  double r_at_1 = 0.0;
  double r_at_5 = 0.0;
  double r_at_10 = 0.0;
  double mean_rank = 0.0;
  std::size_t rounds = 0;
};

/// 1-based rank of scores[gt_index] after a descending sort; equal scores
/// keep ascending candidate order.
std::size_t rank_of(std::span<const double> scores, std::size_t gt_index);

/// Scores the 100 candidates of one round with the generator.
RankOutcome rank_candidates(const model::Generator& gen, const model::EncoderContext& context,
                            std::span<const data::TokenIds> candidates, int gt_index, std::string round_id = {});

EvalReport compute_metrics(std::span<const RankOutcome> outcomes);

/// Every round of every record, with the ground-truth history.
std::vector<RankOutcome> rank_split(const model::Generator& gen, const train::DialogSet& data);
EvalReport evaluate_split(const model::Generator& gen, const train::DialogSet& data);

inline constexpr const char* kReportHeader = "model,split,mrr,r1,r5,r10,mean_rank,rounds";

/// One CSV data row (no newline). Values use fixed precision so reports
/// compare byte for byte.
std::string report_row(const std::string& model, const std::string& split, const EvalReport& report);

/// Header plus rows, written atomically.
void write_report(const std::filesystem::path& path, std::span<const std::string> rows);

}  // namespace cgan::eval
