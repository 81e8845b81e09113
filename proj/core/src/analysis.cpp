#include "dessim/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dessim/gating.hpp"

namespace dessim {

TrafficReport moe_latency(const RoutingAssignment& assign, const PoolConfig& cfg,
                          const LatencyParams& params) {
  TrafficReport report;
  report.per_expert_counts.assign(cfg.experts_total, 0);

  // Route A: per-expert counts.
  for (const TokenRoute& tok : assign.tokens) {
    for (int e : tok.experts) {
      if (e < 0 || e >= cfg.experts_total) {
        throw std::invalid_argument("expert index out of range");
      }
      ++report.per_expert_counts[e];
    }
  }
  int unique_a = 0;
  int total_a = 0;
  for (int c : report.per_expert_counts) {
    if (c > 0) ++unique_a;
    total_a += c;
  }

  // Route B: union of per-token selections.
  Coreset uni = unique_experts(assign);
  int total_b = 0;
  for (const TokenRoute& tok : assign.tokens) {
    total_b += static_cast<int>(tok.experts.size());
  }

  if (unique_a != uni.size() || total_a != total_b) {
    throw std::logic_error("latency model forms disagree");
  }

  report.unique_experts = unique_a;
  report.total_selections = total_a;
  report.latency =
      params.fetch_per_expert * unique_a + params.compute_per_token * total_a;
  report.memory_bytes = memory_footprint(unique_a, cfg.bytes_per_expert);
  return report;
}

double coreset_latency_bound(const Coreset& coreset, int block_size, int top_k,
                             const LatencyParams& params) {
  return params.fetch_per_expert * coreset.size() +
         params.compute_per_token * (static_cast<double>(block_size) * top_k);
}

double expected_unique_experts(int experts_total, int top_k, int block_size) {
  if (top_k < 1 || top_k > experts_total) {
    throw std::invalid_argument("top_k outside [1, experts_total]");
  }
  if (block_size < 1) {
    throw std::invalid_argument("block_size < 1");
  }
  double m = static_cast<double>(experts_total);
  double miss = 1.0 - static_cast<double>(top_k) / m;
  return m * (1.0 - std::pow(miss, static_cast<double>(block_size)));
}

std::uint64_t memory_footprint(int unique_experts, std::uint64_t bytes_per_expert) {
  return static_cast<std::uint64_t>(unique_experts) * bytes_per_expert;
}

}  // namespace dessim
