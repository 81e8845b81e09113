// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Criteria with stated runtime budgets are timed and fail when
// they exceed them.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "dessim/analysis.hpp"
#include "dessim/baselines.hpp"
#include "dessim/des.hpp"
#include "dessim/metrics.hpp"
#include "dessim/oracle.hpp"
#include "dessim/trace.hpp"

using namespace dessim;

namespace {

#define EXPECT(cond, msg)              \
  do {                                 \
    if (!(cond)) {                     \
      detail = (msg);                  \
      return false;                    \
    }                                  \
  } while (0)

PoolConfig pool(int m, int k, GateActivation act = GateActivation::softmax, int dim = 16) {
  PoolConfig cfg;
  cfg.experts_total = m;
  cfg.top_k = k;
  cfg.gate_activation = act;
  cfg.bytes_per_expert = 1;
  cfg.hidden_dim = dim;
  return cfg;
}

RouterBlock random_block(int n, int m, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  std::vector<double> logits(static_cast<std::size_t>(n) * m);
  for (double& v : logits) v = scale * rng.next_normal();
  return make_router_block(n, m, std::move(logits));
}

bool same_assignment(const RoutingAssignment& a, const RoutingAssignment& b) {
  if (a.tokens.size() != b.tokens.size()) return false;
  for (std::size_t n = 0; n < a.tokens.size(); ++n) {
    if (a.tokens[n].experts != b.tokens[n].experts) return false;
    if (a.tokens[n].gates != b.tokens[n].gates) return false;
  }
  return true;
}

bool is_subset(const std::vector<int>& small, const std::vector<int>& big) {
  std::size_t j = 0;
  for (int v : small) {
    while (j < big.size() && big[j] < v) ++j;
    if (j == big.size() || big[j] != v) return false;
  }
  return true;
}

// --- criterion 1: coreset-size reproduction -------------------------------

bool criterion1(std::string& detail) {
  struct Case {
    double beta;
    int experts;
    int expect;
  };
  const Case cases[] = {{0.15, 256, 38}, {0.10, 256, 25}, {0.6, 64, 38}, {0.4, 64, 25}};
  for (const Case& c : cases) {
    EXPECT(vote_budget(c.beta, c.experts) == c.expect, "budget floor mismatch");
    PoolConfig cfg = pool(c.experts, 8);
    RouterBlock block = random_block(8, c.experts, 77);
    Coreset coreset = des_vote_coreset(block, cfg, c.beta).coreset;
    EXPECT(coreset.size() == c.expect, "coreset size mismatch");
  }
  return true;
}

// --- criterion 2: memory-column reproduction ------------------------------

bool criterion2(std::string& detail) {
  // bytes per expert calibrated from the vanilla row: 0.98 GB over 84
  // unique experts.
  const std::uint64_t bytes_per_expert = 11666667;
  struct Entry {
    int unique;
    double reported_gb;
  };
  const Entry entries[] = {{84, 0.98}, {56, 0.66}, {65, 0.76}, {66, 0.77},
                           {45, 0.53}, {38, 0.45}, {34, 0.40}, {25, 0.29}};
  for (const Entry& e : entries) {
    double bytes = static_cast<double>(memory_footprint(e.unique, bytes_per_expert));
    double rel = std::abs(bytes - e.reported_gb * 1e9) / (e.reported_gb * 1e9);
    EXPECT(rel <= 0.05, "memory entry outside 5% of the reported value");
  }
  return true;
}

// --- criterion 3: expert-explosion curve ----------------------------------

bool criterion3(std::string& detail) {
  const int trials = 100000;
  const int block_sizes[] = {1, 2, 4, 8, 16, 32, 64};
  for (int experts : {64, 256}) {
    double previous = 0.0;
    for (int n : block_sizes) {
      double closed = expected_unique_experts(experts, 8, n);
      McEstimate mc = mc_unique_experts(experts, 8, n, trials, 2026);
      EXPECT(std::abs(mc.mean - closed) <= 3.0 * mc.std_error,
             "Monte Carlo outside 3 standard errors of the closed form");
      EXPECT(closed >= previous, "closed form not monotone in N");
      EXPECT(closed < experts, "closed form does not saturate below M");
      EXPECT(mc.mean <= experts, "Monte Carlo mean above M");
      previous = closed;
    }
  }
  return true;
}

// --- criterion 4: latency-model consistency -------------------------------

bool criterion4(std::string& detail) {
  LatencyParams lat{0.1, 1.0};
  for (int i = 0; i < 10000; ++i) {
    Rng rng(40000 + static_cast<std::uint64_t>(i));
    int m = 4 + rng.next_below(125);
    int n = 1 + rng.next_below(32);
    int k = 1 + rng.next_below(std::min(m, 8));
    PoolConfig cfg = pool(m, k);
    RouterBlock block = random_block(n, m, 50000 + static_cast<std::uint64_t>(i));

    RoutingAssignment assign;
    Coreset coreset;
    switch (i % 3) {
      case 0:
        assign = topk_route(activate(block, cfg), k);
        coreset = unique_experts(assign);
        break;
      case 1:
        assign = naee_route(block, cfg, 0.5);
        coreset = unique_experts(assign);
        break;
      default: {
        int m_core = 1 + rng.next_below(m);
        coreset = des_vote_coreset(block, cfg, (m_core + 0.5) / m).coreset;
        assign = constrained_route(block, cfg, coreset);
        break;
      }
    }

    // moe_latency already cross-checks its two counting routes and throws
    // on mismatch; re-derive the union externally as a third opinion.
    TrafficReport report = moe_latency(assign, cfg, lat);
    std::set<int> external;
    int total = 0;
    for (const TokenRoute& tok : assign.tokens) {
      external.insert(tok.experts.begin(), tok.experts.end());
      total += static_cast<int>(tok.experts.size());
    }
    EXPECT(report.unique_experts == static_cast<int>(external.size()),
           "external union disagrees");
    EXPECT(report.total_selections == total, "external total disagrees");
    EXPECT(report.latency ==
               lat.fetch_per_expert * report.unique_experts +
                   lat.compute_per_token * report.total_selections,
           "latency not the affine combination of the counts");

    double bound = coreset_latency_bound(coreset, n, k, lat);
    EXPECT(report.latency <= bound + 1e-12, "coreset bound violated");
  }
  return true;
}

// --- criterion 5: DES-Vote additive optimality ----------------------------

bool criterion5(std::string& detail) {
  for (int i = 0; i < 500; ++i) {
    Rng rng(51000 + static_cast<std::uint64_t>(i));
    int m = 2 + rng.next_below(13);  // 2..14
    int n = 1 + rng.next_below(16);
    int k = 1 + rng.next_below(std::min(m, 8));
    int m_core = 1 + rng.next_below(m);
    PoolConfig cfg = pool(m, k);
    RouterBlock block = random_block(n, m, 52000 + static_cast<std::uint64_t>(i));

    VoteResult res = des_vote_coreset(block, cfg, (m_core + 0.5) / m);
    Coreset oracle = exhaustive_additive_coreset(res.votes, m_core);

    double mass_des = 0.0, mass_oracle = 0.0;
    for (int e : res.coreset.members) mass_des += res.votes.votes[e];
    for (int e : oracle.members) mass_oracle += res.votes.votes[e];
    EXPECT(mass_des == mass_oracle, "retained mass below the exhaustive maximum");
  }
  return true;
}

// --- criterion 6: fused/composed equivalence ------------------------------

bool criterion6(std::string& detail) {
  for (int i = 0; i < 1000; ++i) {
    Rng rng(61000 + static_cast<std::uint64_t>(i));
    int m = 2 + rng.next_below(511);  // 2..512
    int n = 1 + rng.next_below(64);
    int k = 1 + rng.next_below(std::min(m, 16));
    GateActivation act =
        rng.next_below(4) == 0 ? GateActivation::sigmoid : GateActivation::softmax;
    int m_core = 1 + rng.next_below(m);
    double beta = (m_core + 0.5) / m;
    PoolConfig cfg = pool(m, k, act);
    RouterBlock block = random_block(n, m, 62000 + static_cast<std::uint64_t>(i), 1.5);

    VoteResult composed = des_vote_coreset(block, cfg, beta);
    VoteResult fused = fused_vote_pipeline(block, cfg, beta);
    EXPECT(fused.coreset.members == composed.coreset.members,
           "fused coreset differs from the composed path");
    for (int e = 0; e < m; ++e) {
      double diff = std::abs(fused.votes.votes[e] - composed.votes.votes[e]);
      EXPECT(diff <= 1e-9, "fused votes drift past 1e-9");
    }
  }
  return true;
}

// --- criterion 7: degenerate limits ---------------------------------------

bool criterion7(std::string& detail) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    PoolConfig cfg = pool(24, 6);
    RouterBlock block = random_block(8, 24, 70000 + seed);
    RoutingAssignment vanilla = topk_route(activate(block, cfg), 6);

    DesResult full = des_run(block, cfg, DesParams{DesStrategy::vote, 1, 1.0});
    EXPECT(full.coreset.size() == 24, "beta=1 coreset is not the full pool");
    EXPECT(same_assignment(full.assignment, vanilla), "beta=1 routing differs from vanilla");

    DesResult seq = des_run(block, cfg, DesParams{DesStrategy::seq, 6, 1.0});
    EXPECT(seq.coreset.members == unique_experts(vanilla).members,
           "k=K coreset is not the vanilla union");
    EXPECT(same_assignment(seq.assignment, vanilla), "k=K routing differs from vanilla");

    RoutingAssignment kept = naee_route(block, cfg, 1e-12);
    EXPECT(same_assignment(kept, vanilla), "NAEE with beta->0 differs from vanilla");
  }

  SynthParams rho1;
  rho1.model = SynthModel::shared_bias;
  rho1.rho = 1.0;
  PoolConfig cfg = pool(24, 3);
  TraceFile file = gen_trace(cfg, rho1, 1, 10, 6, 71234);
  for (const RouterBlock& block : file.blocks) {
    RoutingAssignment assign = topk_route(activate(block, cfg), 3);
    EXPECT(unique_experts(assign).size() == 3, "rho=1 block activates more than K experts");
  }
  return true;
}

// --- criterion 8: monotonicity suite --------------------------------------

bool criterion8(std::string& detail) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    PoolConfig cfg = pool(20, 5);
    RouterBlock block = random_block(8, 20, 80000 + seed);
    RoutingAssignment vanilla = topk_route(activate(block, cfg), 5);
    VoteVector votes = des_vote_coreset(block, cfg, 1.0).votes;

    std::vector<int> previous;
    double prev_recall = 0.0, prev_mass = 0.0;
    for (int m_core = 1; m_core <= 20; ++m_core) {
      Coreset c = des_vote_coreset(block, cfg, (m_core + 0.5) / 20.0).coreset;
      EXPECT(c.size() == m_core, "vote budget not exact");
      EXPECT(is_subset(previous, c.members), "vote coresets not nested");
      double recall = topk_recall(vanilla, c);
      double mass = 0.0;
      for (int e : c.members) mass += votes.votes[e];
      EXPECT(recall >= prev_recall, "vote recall not monotone");
      EXPECT(mass >= prev_mass, "retained mass not monotone");
      previous = c.members;
      prev_recall = recall;
      prev_mass = mass;
    }

    previous.clear();
    prev_recall = 0.0;
    for (int k = 1; k <= 5; ++k) {
      Coreset c = des_seq_coreset(block, cfg, k);
      EXPECT(is_subset(previous, c.members), "seq coresets not nested");
      double recall = topk_recall(vanilla, c);
      EXPECT(recall >= prev_recall, "seq recall not monotone");
      previous = c.members;
      prev_recall = recall;
    }
  }
  return true;
}

// --- criterion 9: Fig. 3 substitute ----------------------------------------

bool criterion9(std::string& detail) {
  PoolConfig cfg = pool(64, 8, GateActivation::softmax, 16);
  SynthParams params;
  params.model = SynthModel::shared_bias;
  params.rho = 0.5;
  TraceFile file = gen_trace(cfg, params, 1, 200, 8, 42);
  ExpertBank bank = make_expert_bank(cfg, 8, 42);

  // Recall / reconstruction-loss curves at matched coreset sizes: for each
  // local budget k, DES-Vote is evaluated at each block's DES-Seq size.
  for (int k = 1; k <= 8; ++k) {
    double size_mean = 0, recall_seq = 0, recall_vote = 0, loss_seq = 0, loss_vote = 0;
    for (const RouterBlock& block : file.blocks) {
      RoutingAssignment vanilla = topk_route(activate(block, cfg), 8);
      Coreset seq = des_seq_coreset(block, cfg, k);
      Coreset vote = des_vote_coreset(block, cfg, (seq.size() + 0.5) / 64.0).coreset;
      size_mean += seq.size();
      recall_seq += topk_recall(vanilla, seq);
      recall_vote += topk_recall(vanilla, vote);
      loss_seq += reconstruction_loss(block, cfg, seq, bank).value;
      loss_vote += reconstruction_loss(block, cfg, vote, bank).value;
    }
    int blocks = file.block_count();
    std::printf(
        "[REPORT] criterion 9: k=%d mean_size=%.2f recall_seq=%.4f recall_vote=%.4f "
        "loss_seq=%.5f loss_vote=%.5f vote_beats_seq=%s\n",
        k, size_mean / blocks, recall_seq / blocks, recall_vote / blocks, loss_seq / blocks,
        loss_vote / blocks, (loss_vote <= loss_seq ? "yes" : "no"));
  }

  // Exhaustive lower bound on M <= 12 sub-instances (first 12 experts of
  // the first 10 blocks).
  PoolConfig sub_cfg = pool(12, 4, GateActivation::softmax, 16);
  for (int b = 0; b < 10; ++b) {
    const RouterBlock& block = file.blocks[b];
    std::vector<double> logits;
    logits.reserve(8 * 12);
    for (int n = 0; n < 8; ++n) {
      for (int i = 0; i < 12; ++i) logits.push_back(block.at(n, i));
    }
    RouterBlock sub = make_router_block(8, 12, std::move(logits));
    ExpertBank sub_bank = make_expert_bank(sub_cfg, 8, Rng::mix(42, 9000 + b));
    VoteVector votes = des_vote_coreset(sub, sub_cfg, 1.0).votes;

    for (int k = 1; k <= 2; ++k) {
      Coreset seq = des_seq_coreset(sub, sub_cfg, k);
      int size = seq.size();
      Coreset vote = Coreset::of(select_top_gates(votes.votes, size));
      Coreset best = exhaustive_reconstruction_coreset(sub, sub_cfg, sub_bank, size);
      double loss_best = reconstruction_loss(sub, sub_cfg, best, sub_bank).value;
      double loss_seq = reconstruction_loss(sub, sub_cfg, seq, sub_bank).value;
      double loss_vote = reconstruction_loss(sub, sub_cfg, vote, sub_bank).value;
      EXPECT(loss_best <= loss_seq + 1e-12, "oracle loss above DES-Seq");
      EXPECT(loss_best <= loss_vote + 1e-12, "oracle loss above DES-Vote");
    }
  }
  return true;
}

// --- criterion 10: Fig. 7 substitute ---------------------------------------

bool criterion10(std::string& detail) {
  PoolConfig cfg = pool(64, 8);
  SynthParams params;
  params.model = SynthModel::shared_bias;
  params.rho = 0.5;
  TraceFile file = gen_trace(cfg, params, 1, 50, 8, 42);

  HitRateAccumulator vanilla_acc(64, 8), vote_acc(64, 8), seq_acc(64, 8);
  for (const RouterBlock& block : file.blocks) {
    vanilla_acc.add(topk_route(activate(block, cfg), 8));
    vote_acc.add(des_run(block, cfg, DesParams{DesStrategy::vote, 1, 0.5}).assignment);
    seq_acc.add(des_run(block, cfg, DesParams{DesStrategy::seq, 4, 1.0}).assignment);
  }
  HitRateVector vanilla = vanilla_acc.rates();
  HitRateVector vote = vote_acc.rates();
  HitRateVector seq = seq_acc.rates();

  // Metric correctness: self-similarity and permutation invariance.
  EXPECT(std::abs(hit_rate_cosine(vanilla, vanilla) - 1.0) <= 1e-12,
         "cosine of identical vectors is not 1");
  double s_vote = hit_rate_cosine(vote, vanilla);
  double s_seq = hit_rate_cosine(seq, vanilla);

  std::vector<int> perm(64);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(4242);
  for (int i = 63; i > 0; --i) std::swap(perm[i], perm[rng.next_below(i + 1)]);
  HitRateVector vote_p, vanilla_p;
  vote_p.rates.resize(64);
  vanilla_p.rates.resize(64);
  for (int i = 0; i < 64; ++i) {
    vote_p.rates[perm[i]] = vote.rates[i];
    vanilla_p.rates[perm[i]] = vanilla.rates[i];
  }
  EXPECT(std::abs(hit_rate_cosine(vote_p, vanilla_p) - s_vote) <= 1e-12,
         "cosine not permutation invariant");

  std::printf(
      "[REPORT] criterion 10: observed cosine vs vanilla: des-vote s=%.4f des-seq s=%.4f "
      "(reported for comparison against >= 0.98)\n",
      s_vote, s_seq);

  std::vector<double> curve_vanilla = activation_frequency_curve(vanilla);
  std::vector<double> curve_vote = activation_frequency_curve(vote);
  std::printf("[REPORT] criterion 10: head-of-curve rates: vanilla=%.4f des-vote=%.4f\n",
              curve_vanilla[0], curve_vote[0]);
  return true;
}

// --- criterion 11: trace round-trip ----------------------------------------

bool criterion11(std::string& detail) {
  for (int i = 0; i < 100; ++i) {
    Rng rng(90000 + static_cast<std::uint64_t>(i));
    PoolConfig cfg = pool(2 + rng.next_below(39), 1, GateActivation::softmax, 1);
    cfg.top_k = 1 + rng.next_below(cfg.experts_total);
    SynthParams params;
    params.model = static_cast<SynthModel>(rng.next_below(3));
    params.rho = rng.next_unit();
    params.temperature = 0.5 + rng.next_unit();
    int layers = 1 + rng.next_below(3);
    int steps = 1 + rng.next_below(4);
    int block = 1 + rng.next_below(8);
    TraceFile file =
        gen_trace(cfg, params, layers, steps, block, 91000 + static_cast<std::uint64_t>(i));

    for (TraceFormat format : {TraceFormat::binary, TraceFormat::jsonl}) {
      std::string bytes = encode_trace(file, format);
      TraceFile back = decode_trace(bytes);
      EXPECT(encode_trace(back, format) == bytes, "round-trip bytes differ");
    }
  }
  return true;
}

struct Criterion {
  int id;
  const char* label;
  double budget_ms;  // 0 = no stated budget
  bool (*fn)(std::string&);
};

}  // namespace

int main() {
  const Criterion criteria[] = {
      {1, "coreset-size reproduction (floor(beta*M) budgets)", 1000, criterion1},
      {2, "memory-column reproduction within 5%", 1000, criterion2},
      {3, "expert-explosion curve: Monte Carlo vs closed form", 30000, criterion3},
      {4, "latency model: dual counting routes and coreset bound", 10000, criterion4},
      {5, "DES-Vote retains the exhaustive-maximal vote mass", 60000, criterion5},
      {6, "fused pipeline equals the composed vote path", 60000, criterion6},
      {7, "degenerate limits are exact", 0, criterion7},
      {8, "monotonicity and nesting", 0, criterion8},
      {9, "recall/loss curves with exhaustive lower bound", 0, criterion9},
      {10, "hit-rate cosine metric correctness and report", 0, criterion10},
      {11, "trace round-trips are byte-identical", 0, criterion11},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    auto start = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = c.fn(detail);
    double elapsed =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count();
    if (ok && c.budget_ms > 0 && elapsed > c.budget_ms) {
      ok = false;
      detail = "exceeded runtime budget";
    }
    std::printf("[%s] criterion %d: %s (%.0f ms)%s%s\n", ok ? "PASS" : "FAIL", c.id,
                c.label, elapsed, detail.empty() ? "" : " -- ", detail.c_str());
    if (!ok) ++failures;
  }
  if (failures > 0) {
    std::printf("%d criterion(s) failed\n", failures);
    return 1;
  }
  std::printf("all %zu criteria passed\n", std::size(criteria));
  return 0;
}
