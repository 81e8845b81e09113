#include "dessim/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace dessim {

RoutingAssignment topk_reduce_route(const RouterBlock& block, const PoolConfig& cfg,
                                    int k_reduced) {
  if (k_reduced < 1 || k_reduced > cfg.top_k) {
    throw std::invalid_argument("k_reduced outside [1, top_k]");
  }
  return topk_route(activate(block, cfg), k_reduced);
}

namespace {

// Kept expert indices (ascending) after the cumulative-tail skipping rule:
// rank the selected gates descending, drop ranks i..K for the smallest
// i >= 2 whose tail sum falls below beta times the selected total.
std::vector<int> naee_kept(std::span<const double> row, int top_k, double beta) {
  std::vector<int> sel = select_top_gates(row, top_k);
  std::vector<int> ranked = sel;
  std::sort(ranked.begin(), ranked.end(), [&](int a, int b) {
    if (row[a] != row[b]) return row[a] > row[b];
    return a < b;
  });

  double total = 0.0;
  for (int i : sel) total += row[i];

  int keep = top_k;
  double tail = 0.0;
  std::vector<double> tails(top_k + 1, 0.0);
  for (int u = top_k; u >= 2; --u) {
    tail += row[ranked[u - 1]];
    tails[u] = tail;
  }
  for (int i = 2; i <= top_k; ++i) {
    if (tails[i] < beta * total) {
      keep = i - 1;
      break;
    }
  }
  if (keep == top_k) {
    return sel;
  }
  ranked.resize(keep);
  std::sort(ranked.begin(), ranked.end());
  return ranked;
}

TokenRoute route_over(std::span<const double> row, std::vector<int> kept) {
  TokenRoute tok;
  tok.gates = renormalize_over(row, kept);
  tok.experts = std::move(kept);
  return tok;
}

}  // namespace

RoutingAssignment naee_route(const RouterBlock& block, const PoolConfig& cfg, double beta) {
  if (!(beta > 0.0) || !(beta < 1.0)) {
    throw std::invalid_argument("naee beta outside (0, 1)");
  }
  GateMatrix gates = activate(block, cfg);
  RoutingAssignment assign;
  assign.tokens.resize(block.block_size);
  for (int n = 0; n < block.block_size; ++n) {
    auto row = gates.row(n);
    assign.tokens[n] = route_over(row, naee_kept(row, cfg.top_k, beta));
  }
  return assign;
}

RoutingAssignment mcmoe_route(const RouterBlock& block, const PoolConfig& cfg, double beta,
                              double important_fraction, ImportanceScore score) {
  if (!(beta > 0.0) || !(beta < 1.0)) {
    throw std::invalid_argument("mcmoe beta outside (0, 1)");
  }
  if (important_fraction < 0.0 || important_fraction > 1.0) {
    throw std::invalid_argument("important_fraction outside [0, 1]");
  }
  GateMatrix gates = activate(block, cfg);
  const int n_tokens = block.block_size;

  std::vector<double> scores(n_tokens, 0.0);
  for (int n = 0; n < n_tokens; ++n) {
    auto row = gates.row(n);
    if (score == ImportanceScore::max_gate) {
      scores[n] = *std::max_element(row.begin(), row.end());
    } else {
      double h = 0.0;
      for (double p : row) {
        if (p > 0.0) h -= p * std::log(p);
      }
      scores[n] = -h;
    }
  }

  int important = static_cast<int>(std::ceil(important_fraction * n_tokens));
  important = std::min(important, n_tokens);
  std::vector<int> order(n_tokens);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return scores[a] > scores[b]; });
  std::vector<char> keep_full(n_tokens, 0);
  for (int j = 0; j < important; ++j) {
    keep_full[order[j]] = 1;
  }

  RoutingAssignment assign;
  assign.tokens.resize(n_tokens);
  for (int n = 0; n < n_tokens; ++n) {
    auto row = gates.row(n);
    std::vector<int> kept =
        keep_full[n] ? select_top_gates(row, cfg.top_k) : naee_kept(row, cfg.top_k, beta);
    assign.tokens[n] = route_over(row, std::move(kept));
  }
  return assign;
}

RoutingAssignment baseline_route(const RouterBlock& block, const PoolConfig& cfg,
                                 const BaselineParams& params) {
  switch (params.method) {
    case BaselineMethod::topk_reduce:
      return topk_reduce_route(block, cfg, params.k_reduced);
    case BaselineMethod::naee:
      return naee_route(block, cfg, params.naee_beta);
    case BaselineMethod::mcmoe:
      return mcmoe_route(block, cfg, params.mcmoe_beta, params.mcmoe_important_fraction,
                         params.mcmoe_score);
  }
  throw std::invalid_argument("unknown baseline method");
}

}  // namespace dessim
