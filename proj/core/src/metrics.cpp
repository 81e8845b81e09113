#include "dessim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dessim/des.hpp"

namespace dessim {

HitRateAccumulator::HitRateAccumulator(int experts_total, int top_k)
    : counts_(experts_total, 0), top_k_(top_k) {
  if (experts_total < 1 || top_k < 1 || top_k > experts_total) {
    throw std::invalid_argument("bad hit-rate dimensions");
  }
}

void HitRateAccumulator::add(const RoutingAssignment& assign) {
  for (const TokenRoute& tok : assign.tokens) {
    for (int e : tok.experts) {
      if (e < 0 || e >= static_cast<int>(counts_.size())) {
        throw std::invalid_argument("expert index out of range");
      }
      ++counts_[e];
    }
  }
  slots_ += static_cast<std::int64_t>(assign.block_size()) * top_k_;
}

HitRateVector HitRateAccumulator::rates() const {
  HitRateVector out;
  out.rates.resize(counts_.size(), 0.0);
  if (slots_ == 0) return out;
  for (std::size_t i = 0; i < counts_.size(); ++i) {
    out.rates[i] = static_cast<double>(counts_[i]) / static_cast<double>(slots_);
  }
  return out;
}

HitRateVector hit_rates(const RoutingAssignment& assign, int experts_total, int top_k) {
  HitRateAccumulator acc(experts_total, top_k);
  acc.add(assign);
  return acc.rates();
}

double topk_recall(const RoutingAssignment& vanilla, const Coreset& coreset) {
  if (vanilla.tokens.empty()) {
    throw std::invalid_argument("empty assignment");
  }
  double sum = 0.0;
  for (const TokenRoute& tok : vanilla.tokens) {
    int hit = 0;
    for (int e : tok.experts) {
      if (coreset.contains(e)) ++hit;
    }
    sum += static_cast<double>(hit) / static_cast<double>(tok.experts.size());
  }
  return sum / static_cast<double>(vanilla.tokens.size());
}

namespace {

double sq_norm(const double* v, int dim) {
  double s = 0.0;
  for (int d = 0; d < dim; ++d) s += v[d] * v[d];
  return s;
}

double sq_dist(const double* a, const double* b, int dim) {
  double s = 0.0;
  for (int d = 0; d < dim; ++d) {
    double diff = a[d] - b[d];
    s += diff * diff;
  }
  return s;
}

}  // namespace

ReconstructionLoss reconstruction_loss(const RouterBlock& block, const PoolConfig& cfg,
                                       const Coreset& coreset, const ExpertBank& bank) {
  if (bank.experts != cfg.experts_total || bank.dim != cfg.hidden_dim ||
      bank.block_size != block.block_size) {
    throw std::invalid_argument("bank does not match block/config");
  }
  RoutingAssignment vanilla = topk_route(activate(block, cfg), cfg.top_k);
  RoutingAssignment constrained = constrained_route(block, cfg, coreset);
  std::vector<double> y_van = moe_forward(vanilla, bank);
  std::vector<double> y_con = moe_forward(constrained, bank);

  ReconstructionLoss out;
  double sum = 0.0;
  int included = 0;
  for (int n = 0; n < block.block_size; ++n) {
    const double* a = y_van.data() + static_cast<std::size_t>(n) * bank.dim;
    const double* b = y_con.data() + static_cast<std::size_t>(n) * bank.dim;
    double denom = sq_norm(a, bank.dim);
    if (denom == 0.0) {
      ++out.excluded_tokens;
      continue;
    }
    sum += sq_dist(a, b, bank.dim) / denom;
    ++included;
  }
  out.value = included > 0 ? sum / included : 0.0;
  return out;
}

std::vector<double> expert_importance_map(const RouterBlock& block, const PoolConfig& cfg,
                                          const ExpertBank& bank) {
  if (bank.experts != cfg.experts_total || bank.dim != cfg.hidden_dim ||
      bank.block_size != block.block_size) {
    throw std::invalid_argument("bank does not match block/config");
  }
  GateMatrix gates = activate(block, cfg);
  RoutingAssignment vanilla = topk_route(gates, cfg.top_k);
  std::vector<double> y_van = moe_forward(vanilla, bank);

  const int m = cfg.experts_total;
  std::vector<double> map(static_cast<std::size_t>(block.block_size) * m, 0.0);

  for (int n = 0; n < block.block_size; ++n) {
    const TokenRoute& tok = vanilla.tokens[n];
    const double* y = y_van.data() + static_cast<std::size_t>(n) * bank.dim;
    double denom = sq_norm(y, bank.dim);
    if (denom == 0.0) continue;
    auto row = gates.row(n);
    for (int ablate : tok.experts) {
      std::vector<int> remaining;
      remaining.reserve(tok.experts.size() - 1);
      for (int e : tok.experts) {
        if (e != ablate) remaining.push_back(e);
      }
      std::vector<double> y_abl(bank.dim, 0.0);
      if (!remaining.empty()) {
        std::vector<double> g = renormalize_over(row, remaining);
        for (std::size_t j = 0; j < remaining.size(); ++j) {
          std::vector<double> ey = expert_output(bank, remaining[j], n);
          for (int d = 0; d < bank.dim; ++d) {
            y_abl[d] += g[j] * ey[d];
          }
        }
      }
      map[static_cast<std::size_t>(n) * m + ablate] = sq_dist(y, y_abl.data(), bank.dim) / denom;
    }
  }
  return map;
}

double hit_rate_cosine(const HitRateVector& a, const HitRateVector& b) {
  if (a.rates.size() != b.rates.size()) {
    throw std::invalid_argument("hit-rate vectors differ in length");
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.rates.size(); ++i) {
    dot += a.rates[i] * b.rates[i];
    na += a.rates[i] * a.rates[i];
    nb += b.rates[i] * b.rates[i];
  }
  if (na == 0.0 || nb == 0.0) {
    throw std::invalid_argument("cosine of zero vector");
  }
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<double> activation_frequency_curve(const HitRateVector& hits) {
  std::vector<double> out = hits.rates;
  std::sort(out.begin(), out.end(), std::greater<double>());
  return out;
}

}  // namespace dessim
