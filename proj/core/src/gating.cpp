#include "dessim/gating.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace dessim {

GateMatrix activate(const RouterBlock& block, const PoolConfig& cfg) {
  validate_block(block, cfg);
  GateMatrix out;
  out.rows = block.block_size;
  out.cols = block.experts;
  out.probs.resize(block.logits.size());

  if (cfg.gate_activation == GateActivation::sigmoid) {
    for (std::size_t i = 0; i < block.logits.size(); ++i) {
      out.probs[i] = 1.0 / (1.0 + std::exp(-block.logits[i]));
    }
    return out;
  }

  for (int n = 0; n < block.block_size; ++n) {
    auto row = block.row(n);
    double m = row[0];
    for (double v : row) m = std::max(m, v);
    double sum = 0.0;
    std::size_t base = static_cast<std::size_t>(n) * block.experts;
    for (int i = 0; i < block.experts; ++i) {
      double e = std::exp(row[i] - m);
      out.probs[base + i] = e;
      sum += e;
    }
    for (int i = 0; i < block.experts; ++i) {
      out.probs[base + i] /= sum;
    }
  }
  return out;
}

std::vector<int> select_top_gates(std::span<const double> gates, int k) {
  int m = static_cast<int>(gates.size());
  if (k > m) {
    throw std::invalid_argument("selection count exceeds gate count");
  }
  std::vector<int> idx(m);
  std::iota(idx.begin(), idx.end(), 0);
  std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), [&](int a, int b) {
    if (gates[a] != gates[b]) return gates[a] > gates[b];
    return a < b;
  });
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::vector<int> select_top_gates(std::span<const double> gates, int k,
                                  std::span<const int> candidates) {
  if (k > static_cast<int>(candidates.size())) {
    throw std::invalid_argument("selection count exceeds candidate count");
  }
  std::vector<int> idx(candidates.begin(), candidates.end());
  std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), [&](int a, int b) {
    if (gates[a] != gates[b]) return gates[a] > gates[b];
    return a < b;
  });
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::vector<double> renormalize_over(std::span<const double> gates,
                                     std::span<const int> selected) {
  double sum = 0.0;
  for (int i : selected) sum += gates[i];
  std::vector<double> out(selected.size());
  for (std::size_t j = 0; j < selected.size(); ++j) {
    out[j] = gates[selected[j]] / sum;
  }
  return out;
}

RoutingAssignment topk_route(const GateMatrix& gates, int top_k) {
  if (top_k < 1 || top_k > gates.cols) {
    throw std::invalid_argument("top_k out of range");
  }
  RoutingAssignment assign;
  assign.tokens.resize(gates.rows);
  for (int n = 0; n < gates.rows; ++n) {
    auto row = gates.row(n);
    TokenRoute& tok = assign.tokens[n];
    tok.experts = select_top_gates(row, top_k);
    tok.gates = renormalize_over(row, tok.experts);
  }
  return assign;
}

ExpertBank make_expert_bank(const PoolConfig& cfg, int block_size, std::uint64_t seed) {
  validate_config(cfg);
  if (block_size < 1) {
    throw std::invalid_argument("block_size < 1");
  }
  ExpertBank bank;
  bank.experts = cfg.experts_total;
  bank.dim = cfg.hidden_dim;
  bank.block_size = block_size;

  Rng rng(seed);
  double scale = 1.0 / std::sqrt(static_cast<double>(bank.dim));
  bank.expert_weights.resize(static_cast<std::size_t>(bank.experts) * bank.dim * bank.dim);
  for (double& w : bank.expert_weights) {
    w = rng.next_normal() * scale;
  }
  bank.token_inputs.resize(static_cast<std::size_t>(block_size) * bank.dim);
  for (double& x : bank.token_inputs) {
    x = rng.next_normal();
  }
  return bank;
}

std::vector<double> expert_output(const ExpertBank& bank, int expert, int token) {
  auto w = bank.expert_matrix(expert);
  auto x = bank.token_input(token);
  std::vector<double> y(bank.dim, 0.0);
  for (int r = 0; r < bank.dim; ++r) {
    double acc = 0.0;
    for (int c = 0; c < bank.dim; ++c) {
      acc += w[static_cast<std::size_t>(r) * bank.dim + c] * x[c];
    }
    y[r] = acc;
  }
  return y;
}

std::vector<double> moe_forward(const RoutingAssignment& assign, const ExpertBank& bank) {
  if (assign.block_size() != bank.block_size) {
    throw std::invalid_argument("assignment and bank block sizes differ");
  }
  std::vector<double> out(static_cast<std::size_t>(bank.block_size) * bank.dim, 0.0);
  for (int n = 0; n < bank.block_size; ++n) {
    const TokenRoute& tok = assign.tokens[n];
    double* y = out.data() + static_cast<std::size_t>(n) * bank.dim;
    for (std::size_t j = 0; j < tok.experts.size(); ++j) {
      int e = tok.experts[j];
      if (e < 0 || e >= bank.experts) {
        throw std::invalid_argument("expert index out of range for bank");
      }
      std::vector<double> ey = expert_output(bank, e, n);
      double g = tok.gates[j];
      for (int d = 0; d < bank.dim; ++d) {
        y[d] += g * ey[d];
      }
    }
  }
  return out;
}

Coreset unique_experts(const RoutingAssignment& assign) {
  std::vector<int> all;
  for (const TokenRoute& tok : assign.tokens) {
    all.insert(all.end(), tok.experts.begin(), tok.experts.end());
  }
  return Coreset::of(std::move(all));
}

}  // namespace dessim
