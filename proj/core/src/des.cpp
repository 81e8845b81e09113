#include "dessim/des.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace dessim {

void validate_params(const DesParams& params, const PoolConfig& cfg) {
  validate_config(cfg);
  if (params.strategy == DesStrategy::seq) {
    if (params.seq_k < 1) {
      throw std::invalid_argument("seq_k < 1");
    }
    if (params.seq_k > cfg.top_k) {
      throw std::invalid_argument("seq_k > top_k");
    }
  } else {
    if (!(params.vote_beta > 0.0) || params.vote_beta > 1.0) {
      throw std::invalid_argument("vote_beta outside (0, 1]");
    }
    if (vote_budget(params.vote_beta, cfg.experts_total) < 1) {
      throw std::invalid_argument("vote budget floor(beta*M) < 1");
    }
  }
}

int vote_budget(double beta, int experts_total) {
  return static_cast<int>(std::floor(beta * experts_total));
}

Coreset des_seq_coreset(const RouterBlock& block, const PoolConfig& cfg, int local_k) {
  if (local_k < 1 || local_k > cfg.top_k) {
    throw std::invalid_argument("local_k outside [1, top_k]");
  }
  GateMatrix gates = activate(block, cfg);
  std::vector<int> members;
  members.reserve(static_cast<std::size_t>(block.block_size) * local_k);
  for (int n = 0; n < block.block_size; ++n) {
    std::vector<int> sel = select_top_gates(gates.row(n), local_k);
    members.insert(members.end(), sel.begin(), sel.end());
  }
  return Coreset::of(std::move(members));
}

namespace {

int checked_budget(double beta, int experts_total) {
  if (!(beta > 0.0)) {
    throw std::invalid_argument("beta <= 0");
  }
  int m_core = vote_budget(beta, experts_total);
  if (m_core < 1) {
    throw std::invalid_argument("vote budget floor(beta*M) < 1");
  }
  if (m_core > experts_total) {
    throw std::invalid_argument("beta > 1");
  }
  return m_core;
}

}  // namespace

VoteResult des_vote_coreset(const RouterBlock& block, const PoolConfig& cfg, double beta,
                            VoteSource source) {
  validate_block(block, cfg);
  int m_core = checked_budget(beta, cfg.experts_total);

  GateMatrix gates = activate(block, cfg);
  const int m = cfg.experts_total;

  // Zero out weights outside each token's local top-K, then sum rows.
  std::vector<double> masked(gates.probs.size(), 0.0);
  for (int n = 0; n < block.block_size; ++n) {
    std::vector<int> sel = select_top_gates(gates.row(n), cfg.top_k);
    std::size_t base = static_cast<std::size_t>(n) * m;
    for (int i : sel) {
      masked[base + i] =
          source == VoteSource::activated ? gates.probs[base + i] : block.logits[base + i];
    }
  }

  VoteVector votes;
  votes.votes.assign(m, 0.0);
  for (int n = 0; n < block.block_size; ++n) {
    std::size_t base = static_cast<std::size_t>(n) * m;
    for (int i = 0; i < m; ++i) {
      votes.votes[i] += masked[base + i];
    }
  }

  Coreset coreset = Coreset::of(select_top_gates(votes.votes, m_core));
  return VoteResult{std::move(coreset), std::move(votes)};
}

RoutingAssignment constrained_route(const RouterBlock& block, const PoolConfig& cfg,
                                    const Coreset& coreset) {
  validate_block(block, cfg);
  if (coreset.members.empty()) {
    throw std::invalid_argument("empty coreset");
  }
  if (coreset.members.back() >= cfg.experts_total) {
    throw std::invalid_argument("coreset member out of range");
  }
  GateMatrix gates = activate(block, cfg);
  int select = std::min(cfg.top_k, coreset.size());

  RoutingAssignment assign;
  assign.tokens.resize(block.block_size);
  for (int n = 0; n < block.block_size; ++n) {
    auto row = gates.row(n);
    TokenRoute& tok = assign.tokens[n];
    tok.experts = select_top_gates(row, select, coreset.members);
    tok.gates = renormalize_over(row, tok.experts);
  }
  return assign;
}

DesResult des_run(const RouterBlock& block, const PoolConfig& cfg, const DesParams& params) {
  validate_params(params, cfg);
  Coreset coreset = params.strategy == DesStrategy::seq
                        ? des_seq_coreset(block, cfg, params.seq_k)
                        : des_vote_coreset(block, cfg, params.vote_beta).coreset;
  RoutingAssignment assign = constrained_route(block, cfg, coreset);
  return DesResult{std::move(coreset), std::move(assign)};
}

namespace {

// Fixed-size top-k tracker ordered by (value desc, index asc); insertion
// keeps the same total order as the reference partial sort.
struct TopKTracker {
  std::vector<double> vals;
  std::vector<int> ids;
  int capacity = 0;
  int count = 0;

  explicit TopKTracker(int k) : vals(k), ids(k), capacity(k) {}

  void reset() { count = 0; }

  bool beats(double v, int id, int slot) const {
    if (v != vals[slot]) return v > vals[slot];
    return id < ids[slot];
  }

  void offer(double v, int id) {
    if (count == capacity && !beats(v, id, count - 1)) {
      return;
    }
    int pos = count < capacity ? count : capacity - 1;
    while (pos > 0 && beats(v, id, pos - 1)) {
      vals[pos] = vals[pos - 1];
      ids[pos] = ids[pos - 1];
      --pos;
    }
    vals[pos] = v;
    ids[pos] = id;
    if (count < capacity) ++count;
  }
};

}  // namespace

VoteResult fused_vote_pipeline(const RouterBlock& block, const PoolConfig& cfg, double beta) {
  validate_block(block, cfg);
  int m_core = checked_budget(beta, cfg.experts_total);
  const int m = cfg.experts_total;
  const int k = cfg.top_k;

  VoteVector votes;
  votes.votes.assign(m, 0.0);
  std::vector<double> rowbuf(m);
  TopKTracker tracker(k);

  // Pass 1: per token, stable softmax (or sigmoid), local top-K and vote
  // accumulation in one traversal of the block.
  for (int n = 0; n < block.block_size; ++n) {
    auto row = block.row(n);
    if (cfg.gate_activation == GateActivation::softmax) {
      double mx = row[0];
      for (double v : row) mx = std::max(mx, v);
      double sum = 0.0;
      for (int i = 0; i < m; ++i) {
        double e = std::exp(row[i] - mx);
        rowbuf[i] = e;
        sum += e;
      }
      tracker.reset();
      for (int i = 0; i < m; ++i) {
        rowbuf[i] /= sum;
        tracker.offer(rowbuf[i], i);
      }
    } else {
      tracker.reset();
      for (int i = 0; i < m; ++i) {
        rowbuf[i] = 1.0 / (1.0 + std::exp(-row[i]));
        tracker.offer(rowbuf[i], i);
      }
    }
    for (int j = 0; j < tracker.count; ++j) {
      votes.votes[tracker.ids[j]] += tracker.vals[j];
    }
  }

  // Pass 2: rank votes and emit the coreset mask.
  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (votes.votes[a] != votes.votes[b]) return votes.votes[a] > votes.votes[b];
    return a < b;
  });
  std::vector<char> mask(m, 0);
  for (int j = 0; j < m_core; ++j) {
    mask[order[j]] = 1;
  }
  std::vector<int> members;
  members.reserve(m_core);
  for (int i = 0; i < m; ++i) {
    if (mask[i]) members.push_back(i);
  }
  return VoteResult{Coreset{std::move(members)}, std::move(votes)};
}

}  // namespace dessim
