#include "tquate/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "parallel.hpp"

namespace tquate {

namespace {
constexpr std::size_t kEvalChunk = 128;
}

std::uint32_t rank_from_scores(std::span<const double> scores, EntityId gold, std::span<const EntityId> filtered) {
  if (gold >= scores.size()) throw std::out_of_range("gold entity out of range");
  const double target = scores[gold];
  std::size_t greater = 0;
  std::size_t ties = 0;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    if (j == gold) continue;
    if (scores[j] > target) {
      ++greater;
    } else if (scores[j] == target) {
      ++ties;
    }
  }
  // Drop the other known answers; `filtered` is sorted and unique.
  for (EntityId e : filtered) {
    if (e == gold || e >= scores.size()) continue;
    if (scores[e] > target) {
      --greater;
    } else if (scores[e] == target) {
      --ties;
    }
  }
  return static_cast<std::uint32_t>(1 + greater + (ties + 1) / 2);
}

std::uint32_t rank_query(const ModelParams& params, const Query& query, EntityId gold, const FilterIndex& filter) {
  const auto scores = score_all_entities(params, query);
  return rank_from_scores(scores, gold, filter.answers(query.entity, query.relation, query.time));
}

RankingResult summarize_ranks(std::vector<std::uint32_t> ranks) {
  RankingResult r;
  r.n_queries = ranks.size();
  if (!ranks.empty()) {
    double rr = 0.0;
    std::size_t h1 = 0, h3 = 0, h10 = 0;
    for (std::uint32_t rank : ranks) {
      rr += 1.0 / rank;
      h1 += rank <= 1;
      h3 += rank <= 3;
      h10 += rank <= 10;
    }
    const double n = static_cast<double>(ranks.size());
    r.mrr = rr / n;
    r.hits1 = h1 / n;
    r.hits3 = h3 / n;
    r.hits10 = h10 / n;
  }
  r.ranks = std::move(ranks);
  return r;
}

RankingResult evaluate(const ModelParams& params, std::span<const Quadruple> split, const FilterIndex& filter,
                       unsigned threads) {
  std::vector<Query> queries;
  std::vector<EntityId> golds;
  queries.reserve(2 * split.size());
  golds.reserve(2 * split.size());
  for (const auto& q : split) {
    queries.push_back(tail_query(q));
    golds.push_back(q.tail);
    const Quadruple rq = reciprocal(q, params.num_relations);
    queries.push_back(tail_query(rq));
    golds.push_back(rq.tail);
  }

  std::vector<std::uint32_t> ranks(queries.size());
  const std::size_t chunks = (queries.size() + kEvalChunk - 1) / kEvalChunk;
  parallel_for(chunks, threads, [&](std::size_t c) {
    const std::size_t begin = c * kEvalChunk;
    const std::size_t end = std::min(queries.size(), begin + kEvalChunk);
    const auto scores = score_candidates(params, std::span<const Query>(queries).subspan(begin, end - begin));
    for (std::size_t i = begin; i < end; ++i) {
      const Query& q = queries[i];
      ranks[i] = rank_from_scores(scores.row(i - begin), golds[i], filter.answers(q.entity, q.relation, q.time));
    }
  });
  return summarize_ranks(std::move(ranks));
}

std::string format_results_table(const RankingResult& result, std::string_view label) {
  char buf[256];
  std::ostringstream os;
  std::snprintf(buf, sizeof(buf), "%-12s %8s %8s %8s %8s %10s\n", "split", "MRR", "Hits@1", "Hits@3", "Hits@10",
                "queries");
  os << buf;
  std::snprintf(buf, sizeof(buf), "%-12.*s %8.4f %8.4f %8.4f %8.4f %10zu\n", static_cast<int>(label.size()),
                label.data(), result.mrr, result.hits1, result.hits3, result.hits10, result.n_queries);
  os << buf;
  return os.str();
}

void write_results_kv(const std::filesystem::path& path, const RankingResult& result, std::string_view split) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  os << "split=" << split << "\n"
     << "mrr=" << num(result.mrr) << "\n"
     << "hits@1=" << num(result.hits1) << "\n"
     << "hits@3=" << num(result.hits3) << "\n"
     << "hits@10=" << num(result.hits10) << "\n"
     << "n_queries=" << result.n_queries << "\n";
}

void write_rank_dump(const std::filesystem::path& path, std::span<const Quadruple> split,
                     const RankingResult& result) {
  if (result.ranks.size() != 2 * split.size()) throw std::invalid_argument("rank dump: split does not match result");
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << "query\tgold\trank\n";
  for (std::size_t i = 0; i < split.size(); ++i) {
    os << 2 * i << '\t' << split[i].tail << '\t' << result.ranks[2 * i] << '\n';
    os << 2 * i + 1 << '\t' << split[i].head << '\t' << result.ranks[2 * i + 1] << '\n';
  }
}

}  // namespace tquate
