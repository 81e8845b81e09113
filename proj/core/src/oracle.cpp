#include "dessim/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "dessim/metrics.hpp"

namespace dessim {

namespace {

// Visits all size-m subsets of [0, total) in lexicographic order.
template <typename Visit>
void for_each_subset(int total, int m, Visit&& visit) {
  std::vector<int> comb(m);
  std::iota(comb.begin(), comb.end(), 0);
  for (;;) {
    visit(const_cast<const std::vector<int>&>(comb));
    int i = m - 1;
    while (i >= 0 && comb[i] == total - m + i) --i;
    if (i < 0) break;
    ++comb[i];
    for (int j = i + 1; j < m; ++j) comb[j] = comb[j - 1] + 1;
  }
}

}  // namespace

Coreset exhaustive_additive_coreset(const VoteVector& votes, int m_core) {
  const int m = static_cast<int>(votes.votes.size());
  if (m > 20) {
    throw std::invalid_argument("enumeration guard: more than 20 experts");
  }
  if (m_core < 1 || m_core > m) {
    throw std::invalid_argument("m_core outside [1, experts]");
  }
  std::vector<int> best;
  double best_mass = 0.0;
  bool first = true;
  for_each_subset(m, m_core, [&](const std::vector<int>& subset) {
    double mass = 0.0;
    for (int i : subset) mass += votes.votes[i];
    if (first || mass > best_mass) {
      best = subset;
      best_mass = mass;
      first = false;
    }
  });
  return Coreset{std::move(best)};
}

Coreset exhaustive_reconstruction_coreset(const RouterBlock& block, const PoolConfig& cfg,
                                          const ExpertBank& bank, int m_core) {
  if (cfg.experts_total > 12) {
    throw std::invalid_argument("enumeration guard: more than 12 experts");
  }
  if (block.block_size > 8) {
    throw std::invalid_argument("enumeration guard: more than 8 tokens");
  }
  if (m_core < 1 || m_core > cfg.experts_total) {
    throw std::invalid_argument("m_core outside [1, experts]");
  }
  std::vector<int> best;
  double best_loss = 0.0;
  bool first = true;
  for_each_subset(cfg.experts_total, m_core, [&](const std::vector<int>& subset) {
    Coreset candidate{subset};
    double loss = reconstruction_loss(block, cfg, candidate, bank).value;
    if (first || loss < best_loss) {
      best = subset;
      best_loss = loss;
      first = false;
    }
  });
  return Coreset{std::move(best)};
}

McEstimate mc_unique_experts(int experts_total, int top_k, int block_size, int trials,
                             std::uint64_t seed) {
  if (trials < 1) {
    throw std::invalid_argument("trials < 1");
  }
  if (top_k < 1 || top_k > experts_total) {
    throw std::invalid_argument("top_k outside [1, experts_total]");
  }
  std::vector<int> perm(experts_total);
  std::vector<char> seen(experts_total);

  double sum = 0.0;
  double sumsq = 0.0;
  for (int t = 0; t < trials; ++t) {
    Rng rng(Rng::mix(seed, static_cast<std::uint64_t>(t)));
    std::iota(perm.begin(), perm.end(), 0);
    std::fill(seen.begin(), seen.end(), 0);
    int uniq = 0;
    for (int n = 0; n < block_size; ++n) {
      // Partial Fisher-Yates: the first top_k entries are a uniform subset.
      for (int j = 0; j < top_k; ++j) {
        int swap_at = j + rng.next_below(experts_total - j);
        std::swap(perm[j], perm[swap_at]);
        if (!seen[perm[j]]) {
          seen[perm[j]] = 1;
          ++uniq;
        }
      }
    }
    sum += uniq;
    sumsq += static_cast<double>(uniq) * uniq;
  }

  McEstimate est;
  est.mean = sum / trials;
  if (trials > 1) {
    double var = (sumsq - sum * sum / trials) / (trials - 1);
    est.std_error = std::sqrt(std::max(0.0, var) / trials);
  }
  return est;
}

}  // namespace dessim
