#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "influence/error.hpp"
#include "influence/inference.hpp"

namespace influence {

namespace {

// Bounds on the relabelings searched. Beyond them the identity is used for
// hidden-state labels; pattern matchings are always searched exhaustively.
constexpr std::size_t kMaxStateLabelings = 4096;
constexpr std::size_t kMaxPatterns = 9;

double kl(std::span<const double> p, std::span<const double> q) {
  double d = 0.0;
  for (std::size_t s = 0; s < p.size(); ++s) {
    if (p[s] <= 0.0) continue;
    if (q[s] <= 0.0) return std::numeric_limits<double>::infinity();
    d += p[s] * std::log(p[s] / q[s]);
  }
  return std::max(d, 0.0);
}

// Row means of every parent matrix: the parent's contribution when its
// state is uniformly distributed.
std::vector<std::vector<std::vector<double>>> mean_rows(const ModelParams& p) {
  const std::size_t C = p.num_chains(), S = p.num_states();
  std::vector<std::vector<std::vector<double>>> out(C, std::vector<std::vector<double>>(C));
  for (std::size_t q = 0; q < C; ++q)
    for (std::size_t c = 0; c < C; ++c) {
      const Matrix& M = p.parent_matrix(q, c);
      std::vector<double> m(S, 0.0);
      for (std::size_t u = 0; u < S; ++u)
        for (std::size_t s = 0; s < S; ++s) m[s] += M(u, s) / static_cast<double>(S);
      out[q][c] = std::move(m);
    }
  return out;
}

// Row Prob(h^c | h^q = u, r = j), other parents uniform. labels[c] maps
// reference state labels to this model's labels.
void conditional_row(const ModelParams& p, const std::vector<std::vector<std::vector<double>>>& avg,
                     std::size_t j, std::size_t c, std::size_t q, std::size_t u,
                     const std::vector<std::vector<std::size_t>>& labels, std::span<double> out) {
  const std::size_t C = p.num_chains(), S = p.num_states();
  const Matrix& R = p.influence[j];
  const Matrix& M = p.parent_matrix(q, c);
  for (std::size_t s = 0; s < S; ++s) {
    const std::size_t ls = labels[c][s];
    double v = R(c, q) * M(labels[q][u], ls);
    for (std::size_t o = 0; o < C; ++o)
      if (o != q) v += R(c, o) * avg[o][c][ls];
    out[s] = v;
  }
}

}  // namespace

double kl_to_reference(const ModelParams& learned, const ModelParams& reference) {
  const std::size_t C = reference.num_chains(), S = reference.num_states(),
                    J = reference.num_patterns(), JL = learned.num_patterns();
  if (learned.num_chains() != C || learned.num_states() != S)
    throw DimensionMismatch("kl_to_reference: chain or state counts differ");
  if (JL < J) throw DimensionMismatch("kl_to_reference: learned model has fewer patterns");
  if (JL > kMaxPatterns) throw CapacityExceeded("kl_to_reference: too many patterns");

  const auto ref_avg = mean_rows(reference);
  const auto learned_avg = mean_rows(learned);

  // Enumerate per-chain state labelings (mixed radix over S! each).
  std::vector<std::size_t> perm(S);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::vector<std::size_t>> perms;
  do perms.push_back(perm);
  while (std::next_permutation(perm.begin(), perm.end()));
  std::size_t combos = 1;
  bool search_states = true;
  for (std::size_t c = 0; c < C; ++c) {
    if (combos > kMaxStateLabelings / perms.size()) {
      search_states = false;
      break;
    }
    combos *= perms.size();
  }
  if (!search_states) combos = 1;

  std::vector<std::vector<std::size_t>> identity(C, perms.front());
  std::vector<double> p_row(S), q_row(S);
  const double rows_per_pattern = static_cast<double>(C * C * S);

  double best = std::numeric_limits<double>::infinity();
  for (std::size_t combo = 0; combo < combos; ++combo) {
    std::vector<std::vector<std::size_t>> labels = identity;
    if (search_states) {
      std::size_t k = combo;
      for (std::size_t c = 0; c < C; ++c) {
        labels[c] = perms[k % perms.size()];
        k /= perms.size();
      }
    }
    // cost[jr][jl]: summed divergence of reference pattern jr against learned jl.
    Matrix cost(J, JL);
    for (std::size_t jr = 0; jr < J; ++jr)
      for (std::size_t jl = 0; jl < JL; ++jl) {
        double acc = 0.0;
        for (std::size_t c = 0; c < C; ++c)
          for (std::size_t q = 0; q < C; ++q)
            for (std::size_t u = 0; u < S; ++u) {
              conditional_row(reference, ref_avg, jr, c, q, u, identity, p_row);
              conditional_row(learned, learned_avg, jl, c, q, u, labels, q_row);
              acc += kl(p_row, q_row);
            }
        cost(jr, jl) = acc;
      }
    // Injective matchings: first J entries of every permutation of learned
    // labels, deduplicated by only scoring prefixes in order.
    std::vector<std::size_t> order(JL);
    std::iota(order.begin(), order.end(), 0);
    do {
      double total = 0.0;
      for (std::size_t jr = 0; jr < J; ++jr) total += cost(jr, order[jr]);
      best = std::min(best, total);
      std::reverse(order.begin() + static_cast<std::ptrdiff_t>(J), order.end());
    } while (std::next_permutation(order.begin(), order.end()));
  }
  return best / (rows_per_pattern * static_cast<double>(J));
}

}  // namespace influence
