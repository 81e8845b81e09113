#pragma once

#include <span>
#include <vector>

#include "dessim/core.hpp"

namespace dessim {

/// Post-activation router weights, one row per token.
struct GateMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> probs;  // row-major

  double at(int token, int expert) const {
    return probs[static_cast<std::size_t>(token) * cols + expert];
  }
  std::span<const double> row(int token) const {
    return {probs.data() + static_cast<std::size_t>(token) * cols,
            static_cast<std::size_t>(cols)};
  }
};

/// Row-wise softmax (max-subtracted) or element-wise sigmoid of the logits.
GateMatrix activate(const RouterBlock& block, const PoolConfig& cfg);

/// Indices of the k largest gate values, ties broken by lower index.
/// Returned in ascending index order. This is the single selection
/// primitive used by every routing path so tie-breaks never diverge.
std::vector<int> select_top_gates(std::span<const double> gates, int k);

/// Same, restricted to the given candidate indices (ascending, unique).
std::vector<int> select_top_gates(std::span<const double> gates, int k,
                                  std::span<const int> candidates);

/// Gate weights for a selection, renormalized by the selected sum.
/// The sum runs over `selected` in ascending index order.
std::vector<double> renormalize_over(std::span<const double> gates,
                                     std::span<const int> selected);

/// Vanilla per-token top-K routing with renormalized gates.
RoutingAssignment topk_route(const GateMatrix& gates, int top_k);

/// Synthetic stand-in for the FFN experts: M fixed dim x dim linear maps
/// and one input vector per token, all drawn from the seeded Rng. Entries
/// of the expert maps are standard normal scaled by 1/sqrt(dim).
struct ExpertBank {
  int experts = 0;
  int dim = 0;
  int block_size = 0;
  std::vector<double> expert_weights;  // experts x dim x dim, row-major
  std::vector<double> token_inputs;    // block_size x dim, row-major

  std::span<const double> expert_matrix(int expert) const {
    std::size_t sz = static_cast<std::size_t>(dim) * dim;
    return {expert_weights.data() + expert * sz, sz};
  }
  std::span<const double> token_input(int token) const {
    return {token_inputs.data() + static_cast<std::size_t>(token) * dim,
            static_cast<std::size_t>(dim)};
  }
};

ExpertBank make_expert_bank(const PoolConfig& cfg, int block_size, std::uint64_t seed);

/// Output of expert `expert` applied to token `token`'s input.
std::vector<double> expert_output(const ExpertBank& bank, int expert, int token);

/// Weighted sum of selected experts' outputs per token, summed in
/// ascending expert index order. Returns block_size x dim, row-major.
std::vector<double> moe_forward(const RoutingAssignment& assign, const ExpertBank& bank);

/// Sorted union of all tokens' selected experts.
Coreset unique_experts(const RoutingAssignment& assign);

}  // namespace dessim
