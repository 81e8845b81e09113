#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace dessim {

enum class GateActivation { softmax, sigmoid };

/// Static description of an expert pool shared by all routing code.
struct PoolConfig {
  int experts_total = 0;                 // pool size M
  int top_k = 0;                         // experts selected per token
  GateActivation gate_activation = GateActivation::softmax;
  std::uint64_t bytes_per_expert = 1;    // weight bytes fetched per unique expert
  int hidden_dim = 1;                    // synthetic expert bank dimension
};

/// Returns cfg unchanged if all invariants hold, otherwise throws
/// std::invalid_argument naming the first violated invariant.
const PoolConfig& validate_config(const PoolConfig& cfg);

std::string pool_config_to_json(const PoolConfig& cfg);
PoolConfig pool_config_from_json(const std::string& text);

const char* to_string(GateActivation activation);
GateActivation gate_activation_from_string(const std::string& name);

/// One decoding block's router logits: block_size rows, experts columns.
struct RouterBlock {
  int block_size = 0;
  int experts = 0;
  std::vector<double> logits;  // row-major

  double at(int token, int expert) const {
    return logits[static_cast<std::size_t>(token) * experts + expert];
  }
  std::span<const double> row(int token) const {
    return {logits.data() + static_cast<std::size_t>(token) * experts,
            static_cast<std::size_t>(experts)};
  }
};

/// Builds a block and checks shape; entries must be finite.
RouterBlock make_router_block(int block_size, int experts, std::vector<double> logits);

/// Checks a block against a config (column count, finiteness).
void validate_block(const RouterBlock& block, const PoolConfig& cfg);

/// Ordered set of expert indices serving an entire block.
struct Coreset {
  std::vector<int> members;  // strictly increasing

  int size() const { return static_cast<int>(members.size()); }
  bool contains(int expert) const;

  /// Sorts, deduplicates and rejects negative indices.
  static Coreset of(std::vector<int> indices);
};

/// Per-token routing decision. Expert indices are kept in ascending order
/// with gates aligned; summations over a selection always run in this order.
struct TokenRoute {
  std::vector<int> experts;
  std::vector<double> gates;
};

struct RoutingAssignment {
  std::vector<TokenRoute> tokens;
  int block_size() const { return static_cast<int>(tokens.size()); }
};

/// Deterministic PRNG with a portable, fixed algorithm (splitmix64).
/// Identical seeds produce identical streams on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();

  /// Uniform in [0, 1), 53-bit resolution.
  double next_unit();

  /// Standard normal via Box-Muller; the paired value is cached.
  double next_normal();

  /// Uniform in [0, bound), bound >= 1, rejection-debiased.
  int next_below(int bound);

  /// Derives an independent stream seed from (seed, stream); used for
  /// per-block and per-trial generators so sharding cannot change results.
  static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream);

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace dessim
