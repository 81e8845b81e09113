#pragma once

#include <cstdint>
#include <vector>

#include "dessim/core.hpp"

namespace dessim {

/// Coefficients of the affine per-expert cost model: processing c tokens
/// through one expert costs fetch + compute * c.
struct LatencyParams {
  double compute_per_token = 0.0;  // marginal compute cost per routed token
  double fetch_per_expert = 0.0;   // weight-fetch cost per unique expert
};

struct TrafficReport {
  int unique_experts = 0;
  int total_selections = 0;
  double latency = 0.0;
  std::uint64_t memory_bytes = 0;
  std::vector<int> per_expert_counts;
};

/// Evaluates the block latency model two ways — summing the per-expert
/// count vector and forming the union of per-token selections — asserts
/// the two counting routes agree, and reports
/// latency = fetch * unique + compute * total_selections.
TrafficReport moe_latency(const RoutingAssignment& assign, const PoolConfig& cfg,
                          const LatencyParams& params);

/// Upper bound fetch * |coreset| + compute * block_size * top_k; dominates
/// moe_latency of any assignment routed within the coreset.
double coreset_latency_bound(const Coreset& coreset, int block_size, int top_k,
                             const LatencyParams& params);

/// Expected unique activated experts under uniform independent routing:
/// M * (1 - (1 - K/M)^N).
double expected_unique_experts(int experts_total, int top_k, int block_size);

std::uint64_t memory_footprint(int unique_experts, std::uint64_t bytes_per_expert);

}  // namespace dessim
