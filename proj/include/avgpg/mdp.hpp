#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "avgpg/rng.hpp"
#include "avgpg/types.hpp"

namespace avgpg {

/// Finite MDP with rewards in [0, 1].  Transitions are stored per action as
/// an S x S row-stochastic matrix (row = current state), which keeps induced
/// chains a pure matrix expression.
template <typename Scalar>
struct TabularMdp {
  int n_states = 0;
  int n_actions = 0;
  Matrix<Scalar> rewards;                   // S x A
  std::vector<Matrix<Scalar>> transitions;  // [a] -> S x S
  Vector<Scalar> initial_dist;              // over S
};

template <typename Scalar>
struct RowSumViolation {
  int state;
  int action;
  Scalar deviation;  // |row sum - 1|
};

template <typename Scalar>
struct EntryViolation {
  int state;
  int action;
  Scalar value;
};

/// Report-only validation outcome; `ergodic` is the witness under the
/// uniform policy (irreducible and aperiodic induced chain).
template <typename Scalar>
struct ValidationReport {
  std::vector<RowSumViolation<Scalar>> row_sum_violations;
  std::vector<EntryViolation<Scalar>> negative_transition_entries;
  std::vector<EntryViolation<Scalar>> reward_range_violations;
  Scalar initial_dist_deviation = 0;
  bool initial_dist_nonnegative = true;
  bool irreducible = false;
  bool aperiodic = false;

  bool ergodic() const { return irreducible && aperiodic; }
  bool ok() const {
    return row_sum_violations.empty() && negative_transition_entries.empty() &&
           reward_range_violations.empty() && initial_dist_deviation <= Scalar(1e-12) &&
           initial_dist_nonnegative && ergodic();
  }
};

namespace detail {

// Strong connectivity of the positive-entry digraph, by BFS on the graph and
// its transpose from node 0.
template <typename Scalar>
bool strongly_connected(const Matrix<Scalar>& chain) {
  const int n = static_cast<int>(chain.rows());
  auto reach = [&](bool transpose) {
    std::vector<char> seen(n, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (int v = 0; v < n; ++v) {
        const Scalar w = transpose ? chain(v, u) : chain(u, v);
        if (w > Scalar(0) && !seen[v]) {
          seen[v] = 1;
          stack.push_back(v);
        }
      }
    }
    return std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; });
  };
  return reach(false) && reach(true);
}

// Period of an irreducible chain: gcd over edges (u,v) of depth(u)+1-depth(v)
// on a BFS tree.  Aperiodic iff the gcd is 1.
template <typename Scalar>
int chain_period(const Matrix<Scalar>& chain) {
  const int n = static_cast<int>(chain.rows());
  std::vector<int> depth(n, -1);
  std::vector<int> queue{0};
  depth[0] = 0;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const int u = queue[head];
    for (int v = 0; v < n; ++v) {
      if (chain(u, v) > Scalar(0) && depth[v] < 0) {
        depth[v] = depth[u] + 1;
        queue.push_back(v);
      }
    }
  }
  int g = 0;
  for (int u = 0; u < n; ++u) {
    for (int v = 0; v < n; ++v) {
      if (chain(u, v) > Scalar(0)) g = std::gcd(g, std::abs(depth[u] + 1 - depth[v]));
    }
  }
  return g == 0 ? 1 : g;
}

} // namespace detail

/// Uniform-policy chain: row-wise average of the per-action transition rows.
template <typename Scalar>
Matrix<Scalar> uniform_policy_chain(const TabularMdp<Scalar>& mdp) {
  Matrix<Scalar> chain = Matrix<Scalar>::Zero(mdp.n_states, mdp.n_states);
  for (const auto& p : mdp.transitions) chain += p;
  return chain / Scalar(mdp.n_actions);
}

template <typename Scalar>
ValidationReport<Scalar> validate_mdp(const TabularMdp<Scalar>& mdp) {
  ValidationReport<Scalar> report;
  for (int s = 0; s < mdp.n_states; ++s) {
    for (int a = 0; a < mdp.n_actions; ++a) {
      const Scalar dev = std::abs(mdp.transitions[a].row(s).sum() - Scalar(1));
      if (dev > Scalar(1e-12)) report.row_sum_violations.push_back({s, a, dev});
      for (int t = 0; t < mdp.n_states; ++t) {
        if (mdp.transitions[a](s, t) < Scalar(0))
          report.negative_transition_entries.push_back({s, a, mdp.transitions[a](s, t)});
      }
      const Scalar r = mdp.rewards(s, a);
      if (r < Scalar(0) || r > Scalar(1)) report.reward_range_violations.push_back({s, a, r});
    }
  }
  report.initial_dist_deviation = std::abs(mdp.initial_dist.sum() - Scalar(1));
  report.initial_dist_nonnegative = (mdp.initial_dist.array() >= Scalar(0)).all();

  const Matrix<Scalar> chain = uniform_policy_chain(mdp);
  report.irreducible = detail::strongly_connected(chain);
  report.aperiodic = report.irreducible && detail::chain_period(chain) == 1;
  return report;
}

/// Random ergodic MDP: each transition row is a Dirichlet(1) point mixed with
/// the uniform distribution by weight `smoothing`, so every entry is at least
/// smoothing / n_states and the chain is ergodic under any full-support
/// policy.  Pure function of the seed.
template <typename Scalar = double>
TabularMdp<Scalar> gen_random_ergodic(int n_states, int n_actions, double smoothing,
                                      std::uint64_t seed) {
  if (n_states < 1 || n_actions < 1) throw std::invalid_argument("gen_random_ergodic: empty MDP");
  if (!(smoothing > 0.0) || smoothing > 1.0)
    throw std::invalid_argument(
        "gen_random_ergodic: smoothing must lie in (0,1]; smoothing=0 loses the ergodicity "
        "guarantee");

  Rng rng = make_stream(seed, 0);
  TabularMdp<Scalar> mdp;
  mdp.n_states = n_states;
  mdp.n_actions = n_actions;
  mdp.rewards.resize(n_states, n_actions);
  mdp.transitions.assign(n_actions, Matrix<Scalar>::Zero(n_states, n_states));

  const Scalar floor = Scalar(smoothing) / Scalar(n_states);
  for (int s = 0; s < n_states; ++s) {
    for (int a = 0; a < n_actions; ++a) {
      // Exponential spacings normalize to a uniform simplex point.
      Vector<Scalar> g(n_states);
      for (int t = 0; t < n_states; ++t) g[t] = Scalar(-std::log1p(-uniform01(rng)));
      g /= g.sum();
      mdp.transitions[a].row(s) =
          (Scalar(1) - Scalar(smoothing)) * g.transpose() +
          Vector<Scalar>::Constant(n_states, floor).transpose();
      mdp.rewards(s, a) = Scalar(uniform01(rng));
    }
  }
  mdp.initial_dist = Vector<Scalar>::Constant(n_states, Scalar(1) / Scalar(n_states));
  return mdp;
}

/// Canonical 2-state, 2-action test fixture.  Action 0 keeps the current
/// state with probability 0.9, action 1 keeps it with probability 0.2;
/// reward is 1 in state 1 regardless of action; uniform initial distribution.
template <typename Scalar = double>
TabularMdp<Scalar> make_two_state() {
  TabularMdp<Scalar> mdp;
  mdp.n_states = 2;
  mdp.n_actions = 2;
  mdp.rewards.resize(2, 2);
  mdp.rewards << Scalar(0), Scalar(0), Scalar(1), Scalar(1);
  mdp.transitions.assign(2, Matrix<Scalar>(2, 2));
  mdp.transitions[0] << Scalar(0.9), Scalar(0.1), Scalar(0.1), Scalar(0.9);
  mdp.transitions[1] << Scalar(0.2), Scalar(0.8), Scalar(0.8), Scalar(0.2);
  mdp.initial_dist = Vector<Scalar>::Constant(2, Scalar(0.5));
  return mdp;
}

} // namespace avgpg
