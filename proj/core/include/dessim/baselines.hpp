#pragma once

#include "dessim/core.hpp"
#include "dessim/gating.hpp"

namespace dessim {

enum class BaselineMethod { topk_reduce, naee, mcmoe };

/// Token-importance score used by the MC-MoE adaptation. The source method
/// gives no formula for this setting; max_gate is the default and
/// neg_entropy is kept as an alternative reconstruction.
enum class ImportanceScore { max_gate, neg_entropy };

struct BaselineParams {
  BaselineMethod method = BaselineMethod::topk_reduce;
  int k_reduced = 1;
  double naee_beta = 0.5;
  double mcmoe_beta = 0.5;
  double mcmoe_important_fraction = 0.5;  // in [0, 1]
  ImportanceScore mcmoe_score = ImportanceScore::max_gate;
};

/// Vanilla routing with K replaced by k_reduced.
RoutingAssignment topk_reduce_route(const RouterBlock& block, const PoolConfig& cfg,
                                    int k_reduced);

/// Per token, ranks the K selected gate weights descending and drops the
/// bottom ranks i..K once their cumulative weight falls below beta times
/// the selected total. Rank 1 is always kept; kept gates are renormalized.
RoutingAssignment naee_route(const RouterBlock& block, const PoolConfig& cfg, double beta);

/// The top ceil(important_fraction * N) tokens by importance score keep
/// their full top-K; the rest receive NAEE skipping with threshold beta.
RoutingAssignment mcmoe_route(const RouterBlock& block, const PoolConfig& cfg, double beta,
                              double important_fraction,
                              ImportanceScore score = ImportanceScore::max_gate);

RoutingAssignment baseline_route(const RouterBlock& block, const PoolConfig& cfg,
                                 const BaselineParams& params);

}  // namespace dessim
