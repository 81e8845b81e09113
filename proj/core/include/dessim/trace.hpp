#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dessim/core.hpp"

namespace dessim {

enum class SynthModel { iid_gaussian, dirichlet, shared_bias };

const char* to_string(SynthModel model);
SynthModel synth_model_from_string(const std::string& name);

/// Synthetic router-logit generator parameters. Under shared_bias each
/// token's logits are rho * block_bias + (1 - rho) * token_noise, so rho
/// dials the cross-token overlap in expert demand from independent (0) to
/// identical (1).
struct SynthParams {
  SynthModel model = SynthModel::shared_bias;
  double rho = 0.0;          // in [0, 1], shared_bias only
  double temperature = 1.0;  // > 0, scales logits
};

struct TraceHeader {
  int experts = 0;
  int top_k = 0;
  int layers = 0;
  int block_size = 0;
  int steps = 0;
  SynthModel model = SynthModel::iid_gaussian;
  double rho = 0.0;
  double temperature = 1.0;
  std::uint64_t seed = 0;
};

/// A dense sequence of router blocks ordered by (step, layer).
/// Logits are stored at 32-bit float precision, matching the file format.
struct TraceFile {
  TraceHeader header;
  std::vector<RouterBlock> blocks;

  const RouterBlock& block(int step, int layer) const;
  int block_count() const { return static_cast<int>(blocks.size()); }
};

/// Deterministic given seed; block (step, layer) uses the derived stream
/// Rng::mix(seed, step * layers + layer), so blocks may be generated in
/// parallel without changing the result.
TraceFile gen_trace(const PoolConfig& cfg, const SynthParams& params, int layers, int steps,
                    int block_size, std::uint64_t seed);

enum class TraceFormat { binary, jsonl };

struct TraceError : std::runtime_error {
  enum class Code {
    io,
    bad_magic,
    bad_version,
    bad_header,
    truncated,
    shape_mismatch,
    bad_value,
  };
  Code code;
  TraceError(Code c, const std::string& message)
      : std::runtime_error(message), code(c) {}
};

/// Serializes a trace. Binary: magic "MOET", version u16, little-endian
/// fixed-width header fields, logits as little-endian f32 row-major.
/// JSONL: one header object line followed by one object per block.
std::string encode_trace(const TraceFile& file, TraceFormat format);

/// Decodes either format (sniffed from the leading bytes).
TraceFile decode_trace(std::string_view bytes);

void write_trace(const TraceFile& file, const std::string& path,
                 TraceFormat format = TraceFormat::binary);
TraceFile read_trace(const std::string& path);

}  // namespace dessim
