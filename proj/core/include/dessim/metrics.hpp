#pragma once

#include <cstdint>
#include <vector>

#include "dessim/core.hpp"
#include "dessim/gating.hpp"

namespace dessim {

/// Per-expert activation frequency normalized by N*K selection slots, so
/// a full vanilla assignment's rates sum to 1.
struct HitRateVector {
  std::vector<double> rates;
};

/// Accumulates hit counts over one or many blocks of the same pool.
class HitRateAccumulator {
 public:
  HitRateAccumulator(int experts_total, int top_k);
  void add(const RoutingAssignment& assign);
  HitRateVector rates() const;

 private:
  std::vector<std::int64_t> counts_;
  std::int64_t slots_ = 0;
  int top_k_;
};

HitRateVector hit_rates(const RoutingAssignment& assign, int experts_total, int top_k);

/// Mean over tokens of |vanilla selection ∩ coreset| / K.
double topk_recall(const RoutingAssignment& vanilla, const Coreset& coreset);

struct ReconstructionLoss {
  double value = 0.0;
  int excluded_tokens = 0;  // tokens with vanishing vanilla output norm
};

/// Mean relative squared residual between the vanilla MoE output and the
/// coreset-constrained output on the synthetic bank.
ReconstructionLoss reconstruction_loss(const RouterBlock& block, const PoolConfig& cfg,
                                       const Coreset& coreset, const ExpertBank& bank);

/// N x M row-major map; entry (n, i) is the relative increase in token n's
/// reconstruction error when expert i is ablated from its vanilla
/// selection (0 when i is not selected).
std::vector<double> expert_importance_map(const RouterBlock& block, const PoolConfig& cfg,
                                          const ExpertBank& bank);

/// Cosine similarity of two hit-rate vectors.
double hit_rate_cosine(const HitRateVector& a, const HitRateVector& b);

/// Rates sorted descending, for long-tail comparison between methods.
std::vector<double> activation_frequency_curve(const HitRateVector& hits);

}  // namespace dessim
