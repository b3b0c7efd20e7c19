#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tquate/data.hpp"
#include "tquate/model.hpp"

namespace tquate {

struct RankingResult {
  double mrr = 0.0;
  double hits1 = 0.0;
  double hits3 = 0.0;
  double hits10 = 0.0;
  std::size_t n_queries = 0;
  /// Per-query ranks; query 2i is the tail query of fact i, 2i+1 its head query.
  std::vector<std::uint32_t> ranks;
};

/// Filtered rank of `gold`. Candidates listed in `filtered` (other than gold)
/// are ignored; ties count half, rounded toward the worse rank:
/// 1 + #greater + ceil(#ties / 2).
std::uint32_t rank_from_scores(std::span<const double> scores, EntityId gold, std::span<const EntityId> filtered);

std::uint32_t rank_query(const ModelParams& params, const Query& query, EntityId gold, const FilterIndex& filter);

RankingResult summarize_ranks(std::vector<std::uint32_t> ranks);

/// Two queries per fact: (h, r, ?, tau) and (t, r^-1, ?, tau).
RankingResult evaluate(const ModelParams& params, std::span<const Quadruple> split, const FilterIndex& filter,
                       unsigned threads = 1);

/// Aligned table with MRR and Hits@1/3/10.
std::string format_results_table(const RankingResult& result, std::string_view label);
void write_results_kv(const std::filesystem::path& path, const RankingResult& result, std::string_view split);
/// query id, gold entity, rank (tab separated).
void write_rank_dump(const std::filesystem::path& path, std::span<const Quadruple> split,
                     const RankingResult& result);

}  // namespace tquate
