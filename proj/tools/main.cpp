#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "commands.hpp"
#include "dessim/trace.hpp"

namespace {

using dessim::cli::ExplosionOptions;
using dessim::cli::GenTraceOptions;
using dessim::cli::OracleGapOptions;
using dessim::cli::RunOptions;
using dessim::cli::SweepOptions;

// Expands `--config file.json` into `--key=value` arguments inserted right
// after the subcommand name. Keys already given on the command line are
// skipped, so explicit flags always take precedence.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::string config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config_path = args[i + 1];
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
      break;
    }
  }
  if (config_path.empty() || args.empty() || args[0].rfind("-", 0) == 0) {
    return args;
  }

  std::ifstream in(config_path);
  if (!in) {
    throw std::invalid_argument("cannot open config file: " + config_path);
  }
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("bad config file: " + std::string(e.what()));
  }
  if (!doc.is_object()) {
    throw std::invalid_argument("config file must hold a JSON object");
  }

  auto given = [&](const std::string& key) {
    std::string flag = "--" + key;
    for (const std::string& a : args) {
      if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
    }
    return false;
  };

  std::vector<std::string> extra;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (it.key() == "config" || given(it.key())) continue;
    const nlohmann::json& v = it.value();
    if (v.is_boolean()) {
      if (v.get<bool>()) extra.push_back("--" + it.key());
    } else if (v.is_string()) {
      extra.push_back("--" + it.key() + "=" + v.get<std::string>());
    } else {
      extra.push_back("--" + it.key() + "=" + v.dump());
    }
  }
  args.insert(args.begin() + 1, extra.begin(), extra.end());
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deterministic simulator for MoE routing under block-parallel decoding"};
  app.require_subcommand(1);

  GenTraceOptions gen;
  RunOptions run;
  SweepOptions sweep;
  ExplosionOptions explosion;
  OracleGapOptions gap;
  std::string config_placeholder;
  int rc = 0;

  auto* gen_cmd = app.add_subcommand("gen-trace", "Generate a synthetic router trace");
  gen_cmd->add_option("--experts", gen.experts, "Expert pool size M")->required();
  gen_cmd->add_option("--top-k", gen.top_k, "Experts per token K")->required();
  gen_cmd->add_option("--block", gen.block, "Parallel block size N")->required();
  gen_cmd->add_option("--layers", gen.layers, "MoE layers per step");
  gen_cmd->add_option("--steps", gen.steps, "Decoding steps");
  gen_cmd->add_option("--model", gen.model, "iid_gaussian | dirichlet | shared_bias");
  gen_cmd->add_option("--rho", gen.rho, "Cross-token coupling in [0,1]")
      ->check(CLI::Range(0.0, 1.0));
  gen_cmd->add_option("--temperature", gen.temperature, "Logit scale > 0")
      ->check(CLI::PositiveNumber);
  gen_cmd->add_option("--seed", gen.seed, "Generator seed");
  gen_cmd->add_option("--format", gen.format, "bin | jsonl");
  gen_cmd->add_option("-o,--output", gen.output, "Output path")->required();
  gen_cmd->add_option("--config", config_placeholder, "JSON config file (flags win)");
  gen_cmd->callback([&] { rc = dessim::cli::cmd_gen_trace(gen); });

  auto add_shared = [&](CLI::App* cmd, auto& opt) {
    cmd->add_option("--activation", opt.activation, "softmax | sigmoid");
    cmd->add_option("--a", opt.compute_cost, "Marginal compute cost per routed token");
    cmd->add_option("--b", opt.fetch_cost, "Weight-fetch cost per unique expert");
    cmd->add_option("--bytes-per-expert", opt.bytes_per_expert, "Expert weight bytes");
    cmd->add_option("--bank-seed", opt.bank_seed, "Synthetic expert bank seed");
    cmd->add_option("--hidden-dim", opt.hidden_dim, "Synthetic bank dimension");
    cmd->add_option("-o,--output", opt.output, "Output path (default stdout)");
    cmd->add_flag("--json", opt.json, "Emit JSON instead of CSV");
    cmd->add_option("--config", config_placeholder, "JSON config file (flags win)");
  };

  auto* run_cmd = app.add_subcommand("run", "Evaluate one method over a trace");
  run_cmd->add_option("--trace", run.trace_path, "Trace file")->required();
  run_cmd->add_option("--method", run.method.method,
                      "vanilla | des-seq | des-vote | topk | naee | mcmoe")
      ->required();
  auto* run_k = run_cmd->add_option("--k", run.method.k, "des-seq / topk budget");
  auto* run_beta = run_cmd->add_option("--beta", run.method.beta, "des-vote / naee / mcmoe");
  run_cmd->add_option("--fraction", run.method.fraction, "mcmoe important token fraction")
      ->check(CLI::Range(0.0, 1.0));
  add_shared(run_cmd, run);
  run_cmd->callback([&] {
    run.method.k_given = run_k->count() > 0;
    run.method.beta_given = run_beta->count() > 0;
    run.bank_given = run_cmd->count("--bank-seed") > 0;
    rc = dessim::cli::cmd_run(run);
  });

  auto* sweep_cmd = app.add_subcommand("sweep", "Grid-scan a method parameter");
  sweep_cmd->add_option("--trace", sweep.trace_path, "Trace file")->required();
  sweep_cmd->add_option("--method", sweep.method, "des-vote | des-seq | topk | naee")
      ->required();
  sweep_cmd->add_option("--betas", sweep.betas, "Comma-separated beta grid")
      ->delimiter(',');
  sweep_cmd->add_option("--ks", sweep.ks, "Comma-separated k grid")->delimiter(',');
  add_shared(sweep_cmd, sweep);
  sweep_cmd->callback([&] {
    sweep.bank_given = sweep_cmd->count("--bank-seed") > 0;
    rc = dessim::cli::cmd_sweep(sweep);
  });

  auto* exp_cmd = app.add_subcommand("explosion", "Unique-expert growth vs block size");
  exp_cmd->add_option("--experts", explosion.experts, "Expert pool size M")->required();
  exp_cmd->add_option("--top-k", explosion.top_k, "Experts per token K")->required();
  exp_cmd->add_option("--blocks", explosion.blocks, "Comma-separated block sizes")
      ->required()
      ->delimiter(',');
  exp_cmd->add_option("--trials", explosion.trials, "Monte Carlo trials")
      ->check(CLI::PositiveNumber);
  exp_cmd->add_option("--seed", explosion.seed, "Monte Carlo seed");
  exp_cmd->add_option("--trace", explosion.trace_path, "Optional trace for empirical column");
  exp_cmd->add_option("--activation", explosion.activation, "softmax | sigmoid");
  exp_cmd->add_option("-o,--output", explosion.output, "Output path (default stdout)");
  exp_cmd->add_flag("--json", explosion.json, "Emit JSON instead of CSV");
  exp_cmd->add_option("--config", config_placeholder, "JSON config file (flags win)");
  exp_cmd->callback([&] { rc = dessim::cli::cmd_explosion(explosion); });

  auto* gap_cmd = app.add_subcommand("oracle-gap", "Strategy losses vs exhaustive oracles");
  gap_cmd->add_option("--experts", gap.experts, "Pool size (<= 12)");
  gap_cmd->add_option("--top-k", gap.top_k, "Experts per token K");
  gap_cmd->add_option("--block", gap.block, "Block size (<= 8)");
  gap_cmd->add_option("--instances", gap.instances, "Instance count");
  gap_cmd->add_option("--seed", gap.seed, "Instance seed");
  gap_cmd->add_option("--model", gap.model, "iid_gaussian | dirichlet | shared_bias");
  gap_cmd->add_option("--rho", gap.rho, "Cross-token coupling in [0,1]")
      ->check(CLI::Range(0.0, 1.0));
  gap_cmd->add_option("--temperature", gap.temperature, "Logit scale > 0")
      ->check(CLI::PositiveNumber);
  gap_cmd->add_option("--hidden-dim", gap.hidden_dim, "Synthetic bank dimension");
  gap_cmd->add_option("--activation", gap.activation, "softmax | sigmoid");
  gap_cmd->add_option("-o,--output", gap.output, "Output path (default stdout)");
  gap_cmd->add_flag("--json", gap.json, "Emit JSON instead of CSV");
  gap_cmd->add_option("--config", config_placeholder, "JSON config file (flags win)");
  gap_cmd->callback([&] { rc = dessim::cli::cmd_oracle_gap(gap); });

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = expand_config(std::move(args));
    std::reverse(args.begin(), args.end());  // CLI11 consumes from the back
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const dessim::TraceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
  return rc;
}
