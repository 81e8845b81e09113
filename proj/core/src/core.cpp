#include "dessim/core.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace dessim {

const PoolConfig& validate_config(const PoolConfig& cfg) {
  if (cfg.experts_total < 1) {
    throw std::invalid_argument("experts_total < 1");
  }
  if (cfg.top_k < 1) {
    throw std::invalid_argument("top_k < 1");
  }
  if (cfg.top_k > cfg.experts_total) {
    throw std::invalid_argument("top_k > experts_total");
  }
  if (cfg.bytes_per_expert == 0) {
    throw std::invalid_argument("bytes_per_expert == 0");
  }
  if (cfg.hidden_dim < 1) {
    throw std::invalid_argument("hidden_dim < 1");
  }
  return cfg;
}

const char* to_string(GateActivation activation) {
  return activation == GateActivation::softmax ? "softmax" : "sigmoid";
}

GateActivation gate_activation_from_string(const std::string& name) {
  if (name == "softmax") return GateActivation::softmax;
  if (name == "sigmoid") return GateActivation::sigmoid;
  throw std::invalid_argument("unknown gate activation: " + name);
}

// Keys follow the CLI's config-file dialect (long flag names), so a pool
// config document can double as a --config file.
std::string pool_config_to_json(const PoolConfig& cfg) {
  nlohmann::json j;
  j["experts"] = cfg.experts_total;
  j["top-k"] = cfg.top_k;
  j["activation"] = to_string(cfg.gate_activation);
  j["bytes-per-expert"] = cfg.bytes_per_expert;
  j["hidden-dim"] = cfg.hidden_dim;
  return j.dump();
}

PoolConfig pool_config_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  PoolConfig cfg;
  cfg.experts_total = j.at("experts").get<int>();
  cfg.top_k = j.at("top-k").get<int>();
  cfg.gate_activation = gate_activation_from_string(j.at("activation").get<std::string>());
  cfg.bytes_per_expert = j.at("bytes-per-expert").get<std::uint64_t>();
  cfg.hidden_dim = j.at("hidden-dim").get<int>();
  return cfg;
}

RouterBlock make_router_block(int block_size, int experts, std::vector<double> logits) {
  if (block_size < 1) {
    throw std::invalid_argument("block_size < 1");
  }
  if (experts < 1) {
    throw std::invalid_argument("experts < 1");
  }
  if (logits.size() != static_cast<std::size_t>(block_size) * experts) {
    throw std::invalid_argument("logits size does not match block_size x experts");
  }
  for (double v : logits) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("non-finite logit");
    }
  }
  return RouterBlock{block_size, experts, std::move(logits)};
}

void validate_block(const RouterBlock& block, const PoolConfig& cfg) {
  if (block.experts != cfg.experts_total) {
    throw std::invalid_argument("block column count does not match experts_total");
  }
  if (block.block_size < 1) {
    throw std::invalid_argument("block_size < 1");
  }
  if (block.logits.size() != static_cast<std::size_t>(block.block_size) * block.experts) {
    throw std::invalid_argument("logits size does not match block shape");
  }
  for (double v : block.logits) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("non-finite logit");
    }
  }
}

bool Coreset::contains(int expert) const {
  return std::binary_search(members.begin(), members.end(), expert);
}

Coreset Coreset::of(std::vector<int> indices) {
  std::sort(indices.begin(), indices.end());
  indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
  if (!indices.empty() && indices.front() < 0) {
    throw std::invalid_argument("negative expert index");
  }
  return Coreset{std::move(indices)};
}

std::uint64_t Rng::next_u64() {
  // splitmix64 (Steele, Lea, Flood 2014); fixed constants, no platform variance.
  state_ += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

double Rng::next_unit() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::next_normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // u1 in (0,1] so log stays finite.
  double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  double u2 = next_unit();
  double r = std::sqrt(-2.0 * std::log(u1));
  double theta = 2.0 * 3.14159265358979323846 * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

int Rng::next_below(int bound) {
  if (bound < 1) {
    throw std::invalid_argument("bound < 1");
  }
  std::uint64_t b = static_cast<std::uint64_t>(bound);
  std::uint64_t threshold = (-b) % b;  // 2^64 mod b
  for (;;) {
    std::uint64_t x = next_u64();
    if (x >= threshold) {
      return static_cast<int>(x % b);
    }
  }
}

std::uint64_t Rng::mix(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace dessim
