#include "commands.hpp"

#include <algorithm>
#include <future>
#include <iostream>
#include <optional>
#include <stdexcept>

#include "dessim/analysis.hpp"
#include "dessim/baselines.hpp"
#include "dessim/des.hpp"
#include "dessim/metrics.hpp"
#include "dessim/oracle.hpp"
#include "dessim/trace.hpp"
#include "emit.hpp"

namespace dessim::cli {

namespace {

PoolConfig config_from_header(const TraceHeader& header, const std::string& activation,
                              std::uint64_t bytes_per_expert, int hidden_dim) {
  PoolConfig cfg;
  cfg.experts_total = header.experts;
  cfg.top_k = header.top_k;
  cfg.gate_activation = gate_activation_from_string(activation);
  cfg.bytes_per_expert = bytes_per_expert;
  cfg.hidden_dim = hidden_dim;
  return validate_config(cfg);
}

struct MethodOutcome {
  Coreset coreset;
  RoutingAssignment assignment;
};

MethodOutcome apply_method(const RouterBlock& block, const PoolConfig& cfg,
                           const MethodSpec& spec) {
  if (spec.method == "vanilla") {
    RoutingAssignment assign = topk_route(activate(block, cfg), cfg.top_k);
    Coreset coreset = unique_experts(assign);
    return {std::move(coreset), std::move(assign)};
  }
  if (spec.method == "des-seq") {
    if (!spec.k_given) throw std::invalid_argument("des-seq requires --k");
    DesParams params{DesStrategy::seq, spec.k, 1.0};
    DesResult res = des_run(block, cfg, params);
    return {std::move(res.coreset), std::move(res.assignment)};
  }
  if (spec.method == "des-vote") {
    if (!spec.beta_given) throw std::invalid_argument("des-vote requires --beta");
    DesParams params{DesStrategy::vote, 1, spec.beta};
    DesResult res = des_run(block, cfg, params);
    return {std::move(res.coreset), std::move(res.assignment)};
  }
  if (spec.method == "topk") {
    if (!spec.k_given) throw std::invalid_argument("topk requires --k");
    RoutingAssignment assign = topk_reduce_route(block, cfg, spec.k);
    Coreset coreset = unique_experts(assign);
    return {std::move(coreset), std::move(assign)};
  }
  if (spec.method == "naee") {
    if (!spec.beta_given) throw std::invalid_argument("naee requires --beta");
    RoutingAssignment assign = naee_route(block, cfg, spec.beta);
    Coreset coreset = unique_experts(assign);
    return {std::move(coreset), std::move(assign)};
  }
  if (spec.method == "mcmoe") {
    if (!spec.beta_given) throw std::invalid_argument("mcmoe requires --beta");
    RoutingAssignment assign = mcmoe_route(block, cfg, spec.beta, spec.fraction);
    Coreset coreset = unique_experts(assign);
    return {std::move(coreset), std::move(assign)};
  }
  throw std::invalid_argument("unknown method: " + spec.method);
}

std::string method_label(const MethodSpec& spec) {
  if (spec.method == "des-seq" || spec.method == "topk") {
    return spec.method + "(k=" + std::to_string(spec.k) + ")";
  }
  if (spec.method == "des-vote" || spec.method == "naee") {
    return spec.method + "(beta=" + format_double(spec.beta) + ")";
  }
  if (spec.method == "mcmoe") {
    return spec.method + "(beta=" + format_double(spec.beta) +
           ",f=" + format_double(spec.fraction) + ")";
  }
  return spec.method;
}

}  // namespace

int cmd_gen_trace(const GenTraceOptions& opt) {
  PoolConfig cfg;
  cfg.experts_total = opt.experts;
  cfg.top_k = opt.top_k;
  cfg.bytes_per_expert = 1;
  cfg.hidden_dim = 1;
  validate_config(cfg);

  SynthParams params;
  params.model = synth_model_from_string(opt.model);
  params.rho = opt.rho;
  params.temperature = opt.temperature;

  TraceFormat format;
  if (opt.format == "bin") {
    format = TraceFormat::binary;
  } else if (opt.format == "jsonl") {
    format = TraceFormat::jsonl;
  } else {
    throw std::invalid_argument("unknown format: " + opt.format);
  }

  TraceFile file = gen_trace(cfg, params, opt.layers, opt.steps, opt.block, opt.seed);
  write_trace(file, opt.output, format);
  std::cout << "wrote " << opt.output << ": experts=" << opt.experts
            << " top_k=" << opt.top_k << " layers=" << opt.layers << " steps=" << opt.steps
            << " block=" << opt.block << " model=" << opt.model
            << " rho=" << format_double(opt.rho)
            << " temperature=" << format_double(opt.temperature) << " seed=" << opt.seed
            << " format=" << opt.format << "\n";
  return 0;
}

int cmd_run(const RunOptions& opt) {
  TraceFile trace = read_trace(opt.trace_path);
  PoolConfig cfg = config_from_header(trace.header, opt.activation, opt.bytes_per_expert,
                                      opt.hidden_dim);
  LatencyParams lat{opt.compute_cost, opt.fetch_cost};

  std::optional<ExpertBank> bank;
  if (opt.bank_given) {
    bank = make_expert_bank(cfg, trace.header.block_size, opt.bank_seed);
  }

  Table table("dessim-run v1",
              {"step", "layer", "method", "coreset_size", "unique_experts",
               "total_selections", "latency", "memory_bytes", "topk_recall", "recon_loss",
               "recon_excluded"});

  std::string label = method_label(opt.method);
  double sum_coreset = 0, sum_unique = 0, sum_total = 0, sum_latency = 0, sum_memory = 0;
  double sum_recall = 0, sum_loss = 0;
  std::int64_t sum_excluded = 0;
  int rows = 0;

  for (int step = 0; step < trace.header.steps; ++step) {
    for (int layer = 0; layer < trace.header.layers; ++layer) {
      const RouterBlock& block = trace.block(step, layer);
      RoutingAssignment vanilla = topk_route(activate(block, cfg), cfg.top_k);
      MethodOutcome out = apply_method(block, cfg, opt.method);
      TrafficReport report = moe_latency(out.assignment, cfg, lat);
      double recall = topk_recall(vanilla, out.coreset);

      nlohmann::json loss_cell = nullptr;
      nlohmann::json excluded_cell = nullptr;
      if (bank) {
        ReconstructionLoss loss = reconstruction_loss(block, cfg, out.coreset, *bank);
        loss_cell = loss.value;
        excluded_cell = loss.excluded_tokens;
        sum_loss += loss.value;
        sum_excluded += loss.excluded_tokens;
      }

      table.add_row({step, layer, label, out.coreset.size(), report.unique_experts,
                     report.total_selections, report.latency, report.memory_bytes, recall,
                     loss_cell, excluded_cell});
      sum_coreset += out.coreset.size();
      sum_unique += report.unique_experts;
      sum_total += report.total_selections;
      sum_latency += report.latency;
      sum_memory += static_cast<double>(report.memory_bytes);
      sum_recall += recall;
      ++rows;
    }
  }

  table.add_row({"mean", "mean", label, sum_coreset / rows, sum_unique / rows,
                 sum_total / rows, sum_latency / rows, sum_memory / rows, sum_recall / rows,
                 bank ? nlohmann::json(sum_loss / rows) : nlohmann::json(nullptr),
                 bank ? nlohmann::json(static_cast<double>(sum_excluded) / rows)
                      : nlohmann::json(nullptr)});

  write_output(opt.output, opt.json ? table.json() : table.csv());
  return 0;
}

int cmd_sweep(const SweepOptions& opt) {
  TraceFile trace = read_trace(opt.trace_path);
  PoolConfig cfg = config_from_header(trace.header, opt.activation, opt.bytes_per_expert,
                                      opt.hidden_dim);
  LatencyParams lat{opt.compute_cost, opt.fetch_cost};

  bool uses_beta = opt.method == "des-vote" || opt.method == "naee";
  bool uses_k = opt.method == "des-seq" || opt.method == "topk";
  if (!uses_beta && !uses_k) {
    throw std::invalid_argument("sweep supports des-vote, des-seq, topk, naee");
  }
  if (uses_beta && opt.betas.empty()) {
    throw std::invalid_argument("empty beta grid");
  }
  if (uses_k && opt.ks.empty()) {
    throw std::invalid_argument("empty k grid");
  }

  std::optional<ExpertBank> bank;
  if (opt.bank_given) {
    bank = make_expert_bank(cfg, trace.header.block_size, opt.bank_seed);
  }

  std::vector<double> grid;
  if (uses_beta) {
    grid = opt.betas;
  } else {
    for (int k : opt.ks) grid.push_back(k);
  }
  std::sort(grid.begin(), grid.end());

  struct PointStats {
    double coreset = 0, unique = 0, latency = 0, memory = 0, recall = 0, loss = 0;
  };

  auto evaluate = [&](double value) {
    MethodSpec spec;
    spec.method = opt.method;
    if (uses_beta) {
      spec.beta = value;
      spec.beta_given = true;
    } else {
      spec.k = static_cast<int>(value);
      spec.k_given = true;
    }
    PointStats stats;
    int rows = 0;
    for (const RouterBlock& block : trace.blocks) {
      RoutingAssignment vanilla = topk_route(activate(block, cfg), cfg.top_k);
      MethodOutcome out = apply_method(block, cfg, spec);
      TrafficReport report = moe_latency(out.assignment, cfg, lat);
      stats.coreset += out.coreset.size();
      stats.unique += report.unique_experts;
      stats.latency += report.latency;
      stats.memory += static_cast<double>(report.memory_bytes);
      stats.recall += topk_recall(vanilla, out.coreset);
      if (bank) {
        stats.loss += reconstruction_loss(block, cfg, out.coreset, *bank).value;
      }
      ++rows;
    }
    stats.coreset /= rows;
    stats.unique /= rows;
    stats.latency /= rows;
    stats.memory /= rows;
    stats.recall /= rows;
    stats.loss /= rows;
    return stats;
  };

  // Grid points run concurrently; rows are emitted in grid order so the
  // output bytes never depend on scheduling.
  std::vector<std::future<PointStats>> futures;
  futures.reserve(grid.size());
  for (double value : grid) {
    futures.push_back(std::async(std::launch::async, evaluate, value));
  }

  Table table("dessim-sweep v1",
              {"method", "param", "value", "coreset_size_mean", "unique_mean",
               "latency_mean", "memory_mean", "recall_mean", "recon_loss_mean"});
  for (std::size_t i = 0; i < grid.size(); ++i) {
    PointStats stats = futures[i].get();
    nlohmann::json value = uses_beta ? nlohmann::json(grid[i])
                                     : nlohmann::json(static_cast<int>(grid[i]));
    table.add_row({opt.method, uses_beta ? "beta" : "k", value, stats.coreset, stats.unique,
                   stats.latency, stats.memory, stats.recall,
                   bank ? nlohmann::json(stats.loss) : nlohmann::json(nullptr)});
  }

  write_output(opt.output, opt.json ? table.json() : table.csv());
  return 0;
}

int cmd_explosion(const ExplosionOptions& opt) {
  if (opt.blocks.empty()) {
    throw std::invalid_argument("empty block list");
  }
  PoolConfig cfg;
  cfg.experts_total = opt.experts;
  cfg.top_k = opt.top_k;
  validate_config(cfg);

  std::optional<TraceFile> trace;
  std::optional<PoolConfig> trace_cfg;
  if (!opt.trace_path.empty()) {
    trace = read_trace(opt.trace_path);
    trace_cfg = config_from_header(trace->header, opt.activation, 1, 1);
    if (trace_cfg->experts_total != opt.experts || trace_cfg->top_k != opt.top_k) {
      throw std::invalid_argument("trace header does not match --experts/--top-k");
    }
  }

  std::vector<int> blocks = opt.blocks;
  std::sort(blocks.begin(), blocks.end());

  Table table("dessim-explosion v1",
              {"block_size", "closed_form", "mc_mean", "mc_std_error", "empirical"});
  for (int n : blocks) {
    double closed = expected_unique_experts(opt.experts, opt.top_k, n);
    McEstimate mc = mc_unique_experts(opt.experts, opt.top_k, n, opt.trials, opt.seed);

    nlohmann::json empirical = nullptr;
    if (trace && n <= trace->header.block_size) {
      double sum = 0.0;
      for (const RouterBlock& block : trace->blocks) {
        std::vector<double> logits(block.logits.begin(),
                                   block.logits.begin() +
                                       static_cast<std::size_t>(n) * block.experts);
        RouterBlock sub = make_router_block(n, block.experts, std::move(logits));
        RoutingAssignment assign = topk_route(activate(sub, *trace_cfg), trace_cfg->top_k);
        sum += unique_experts(assign).size();
      }
      empirical = sum / trace->block_count();
    }
    table.add_row({n, closed, mc.mean, mc.std_error, empirical});
  }

  write_output(opt.output, opt.json ? table.json() : table.csv());
  return 0;
}

int cmd_oracle_gap(const OracleGapOptions& opt) {
  if (opt.experts > 12) {
    throw std::invalid_argument("oracle-gap requires --experts <= 12");
  }
  if (opt.block > 8) {
    throw std::invalid_argument("oracle-gap requires --block <= 8");
  }
  if (opt.instances < 1) {
    throw std::invalid_argument("instances < 1");
  }
  PoolConfig cfg;
  cfg.experts_total = opt.experts;
  cfg.top_k = opt.top_k;
  cfg.hidden_dim = opt.hidden_dim;
  cfg.gate_activation = gate_activation_from_string(opt.activation);
  validate_config(cfg);

  SynthParams params;
  params.model = synth_model_from_string(opt.model);
  params.rho = opt.rho;
  params.temperature = opt.temperature;

  Table table("dessim-oracle-gap v1",
              {"instance", "k", "coreset_size", "recall_seq", "recall_vote", "loss_seq",
               "loss_vote", "loss_oracle", "vote_mass_check"});

  std::vector<double> mean_loss_seq(cfg.top_k, 0.0);
  std::vector<double> mean_loss_vote(cfg.top_k, 0.0);
  std::vector<double> mean_loss_oracle(cfg.top_k, 0.0);
  std::vector<double> mean_recall_seq(cfg.top_k, 0.0);
  std::vector<double> mean_recall_vote(cfg.top_k, 0.0);
  bool all_exact = true;

  for (int inst = 0; inst < opt.instances; ++inst) {
    std::uint64_t inst_seed = Rng::mix(opt.seed, static_cast<std::uint64_t>(inst));
    TraceFile file = gen_trace(cfg, params, 1, 1, opt.block, inst_seed);
    const RouterBlock& block = file.block(0, 0);
    ExpertBank bank = make_expert_bank(cfg, opt.block, Rng::mix(inst_seed, 1));
    RoutingAssignment vanilla = topk_route(activate(block, cfg), cfg.top_k);
    VoteVector votes = des_vote_coreset(block, cfg, 1.0).votes;

    for (int k = 1; k <= cfg.top_k; ++k) {
      Coreset seq = des_seq_coreset(block, cfg, k);
      int size = seq.size();
      Coreset vote = Coreset::of(select_top_gates(votes.votes, size));
      Coreset oracle_best = exhaustive_reconstruction_coreset(block, cfg, bank, size);

      double loss_seq = reconstruction_loss(block, cfg, seq, bank).value;
      double loss_vote = reconstruction_loss(block, cfg, vote, bank).value;
      double loss_oracle = reconstruction_loss(block, cfg, oracle_best, bank).value;

      // Retained-mass equality against the exhaustive additive oracle.
      Coreset additive = exhaustive_additive_coreset(votes, size);
      double mass_vote = 0.0, mass_additive = 0.0;
      for (int i : vote.members) mass_vote += votes.votes[i];
      for (int i : additive.members) mass_additive += votes.votes[i];
      bool exact = mass_vote == mass_additive;
      all_exact = all_exact && exact;

      double recall_seq = topk_recall(vanilla, seq);
      double recall_vote = topk_recall(vanilla, vote);

      table.add_row({inst, k, size, recall_seq, recall_vote, loss_seq, loss_vote,
                     loss_oracle, exact ? "exact" : "mismatch"});
      mean_loss_seq[k - 1] += loss_seq;
      mean_loss_vote[k - 1] += loss_vote;
      mean_loss_oracle[k - 1] += loss_oracle;
      mean_recall_seq[k - 1] += recall_seq;
      mean_recall_vote[k - 1] += recall_vote;
    }
  }

  for (int k = 1; k <= cfg.top_k; ++k) {
    table.add_row({"mean", k, nullptr, mean_recall_seq[k - 1] / opt.instances,
                   mean_recall_vote[k - 1] / opt.instances,
                   mean_loss_seq[k - 1] / opt.instances,
                   mean_loss_vote[k - 1] / opt.instances,
                   mean_loss_oracle[k - 1] / opt.instances,
                   all_exact ? "exact" : "mismatch"});
  }

  write_output(opt.output, opt.json ? table.json() : table.csv());
  return 0;
}

}  // namespace dessim::cli
