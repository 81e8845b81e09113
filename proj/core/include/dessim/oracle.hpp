#pragma once

#include <cstdint>

#include "dessim/core.hpp"
#include "dessim/des.hpp"
#include "dessim/gating.hpp"

namespace dessim {

/// Exhaustive maximizer of the retained vote mass over all subsets of
/// size m_core; lowest-lexicographic subset among exact ties. Guarded to
/// pools of at most 20 experts — an oracle must never be approximate.
Coreset exhaustive_additive_coreset(const VoteVector& votes, int m_core);

/// Exhaustive minimizer of reconstruction_loss over all subsets of size
/// m_core. Guarded to experts_total <= 12 and block_size <= 8.
Coreset exhaustive_reconstruction_coreset(const RouterBlock& block, const PoolConfig& cfg,
                                          const ExpertBank& bank, int m_core);

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

/// Monte Carlo estimate of the unique-expert count when every token draws
/// an independent uniform K-subset. Trial t uses the derived stream
/// Rng::mix(seed, t), so any sharding of trials reproduces this result.
McEstimate mc_unique_experts(int experts_total, int top_k, int block_size, int trials,
                             std::uint64_t seed);

}  // namespace dessim
