#pragma once

#include "dessim/core.hpp"
#include "dessim/gating.hpp"

namespace dessim {

/// Per-expert vote totals accumulated across a block. An entry is zero
/// unless the expert appeared in some token's local top-K.
struct VoteVector {
  std::vector<double> votes;
};

enum class DesStrategy { seq, vote };

/// Vote accumulation source. Votes are taken over post-activation weights
/// by default; raw-logit voting is kept as an ablation option.
enum class VoteSource { activated, raw_logits };

struct DesParams {
  DesStrategy strategy = DesStrategy::vote;
  int seq_k = 1;          // per-token local budget, strategy == seq
  double vote_beta = 1.0; // coreset budget factor, strategy == vote
};

void validate_params(const DesParams& params, const PoolConfig& cfg);

/// Coreset budget floor(beta * experts_total).
int vote_budget(double beta, int experts_total);

/// Union of each token's local top-k selections, taken on activated
/// gate weights. Sorted and deduplicated.
Coreset des_seq_coreset(const RouterBlock& block, const PoolConfig& cfg, int local_k);

struct VoteResult {
  Coreset coreset;
  VoteVector votes;
};

/// Masks each token's activated weights outside its local top-K, sums the
/// masked rows into a vote vector, and keeps the top floor(beta*M) experts
/// by total vote (ties broken by lower index).
VoteResult des_vote_coreset(const RouterBlock& block, const PoolConfig& cfg, double beta,
                            VoteSource source = VoteSource::activated);

/// Per-token top-K selection restricted to coreset members, gates
/// renormalized over the selection. Tokens select all members when the
/// coreset is smaller than K.
RoutingAssignment constrained_route(const RouterBlock& block, const PoolConfig& cfg,
                                    const Coreset& coreset);

struct DesResult {
  Coreset coreset;
  RoutingAssignment assignment;
};

/// Stage 1 (coreset consensus via the chosen strategy) composed with
/// stage 2 (constrained local routing).
DesResult des_run(const RouterBlock& block, const PoolConfig& cfg, const DesParams& params);

/// Single-pass equivalent of des_vote_coreset: one traversal of the block
/// computes the stable softmax, the top-K mask and the vote accumulation
/// per token without materializing the gate or mask matrices; one ranking
/// pass then produces the coreset. Contract: the coreset is set-identical
/// to des_vote_coreset's and votes agree within 1e-9 per entry.
VoteResult fused_vote_pipeline(const RouterBlock& block, const PoolConfig& cfg, double beta);

}  // namespace dessim
