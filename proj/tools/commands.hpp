#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dessim::cli {

struct GenTraceOptions {
  int experts = 0;
  int top_k = 0;
  int block = 0;
  int layers = 1;
  int steps = 1;
  std::string model = "shared_bias";
  double rho = 0.5;
  double temperature = 1.0;
  std::uint64_t seed = 0;
  std::string format = "bin";  // bin | jsonl
  std::string output;
};

struct MethodSpec {
  std::string method;      // vanilla | des-seq | des-vote | topk | naee | mcmoe
  int k = 0;               // des-seq / topk
  double beta = 0.0;       // des-vote / naee / mcmoe
  double fraction = 0.5;   // mcmoe
  bool k_given = false;
  bool beta_given = false;
};

struct RunOptions {
  std::string trace_path;
  MethodSpec method;
  std::string activation = "softmax";
  double compute_cost = 0.1;           // --a
  double fetch_cost = 1.0;             // --b
  std::uint64_t bytes_per_expert = 1;  // --bytes-per-expert
  bool bank_given = false;
  std::uint64_t bank_seed = 0;
  int hidden_dim = 16;
  std::string output;
  bool json = false;
};

struct SweepOptions {
  std::string trace_path;
  std::string method;  // des-vote | des-seq | topk | naee
  std::vector<double> betas;
  std::vector<int> ks;
  std::string activation = "softmax";
  double compute_cost = 0.1;
  double fetch_cost = 1.0;
  std::uint64_t bytes_per_expert = 1;
  bool bank_given = false;
  std::uint64_t bank_seed = 0;
  int hidden_dim = 16;
  std::string output;
  bool json = false;
};

struct ExplosionOptions {
  int experts = 0;
  int top_k = 0;
  std::vector<int> blocks;
  int trials = 100000;
  std::uint64_t seed = 0;
  std::string trace_path;  // optional empirical column
  std::string activation = "softmax";
  std::string output;
  bool json = false;
};

struct OracleGapOptions {
  int experts = 8;
  int top_k = 2;
  int block = 4;
  int instances = 200;
  std::uint64_t seed = 0;
  std::string model = "shared_bias";
  double rho = 0.5;
  double temperature = 1.0;
  int hidden_dim = 16;
  std::string activation = "softmax";
  std::string output;
  bool json = false;
};

int cmd_gen_trace(const GenTraceOptions& opt);
int cmd_run(const RunOptions& opt);
int cmd_sweep(const SweepOptions& opt);
int cmd_explosion(const ExplosionOptions& opt);
int cmd_oracle_gap(const OracleGapOptions& opt);

}  // namespace dessim::cli
