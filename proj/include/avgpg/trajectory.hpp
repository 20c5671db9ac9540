#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "avgpg/mdp.hpp"
#include "avgpg/policy.hpp"
#include "avgpg/rng.hpp"

namespace avgpg {

/// One epoch's worth of experience; struct-of-arrays, all the same length.
/// `terminal_state` is the state reached after the last recorded step so
/// consecutive epochs chain into a single trajectory.
template <typename Scalar>
struct Trajectory {
  std::int64_t start_time = 0;
  std::vector<int> states;
  std::vector<int> actions;
  std::vector<Scalar> rewards;
  int terminal_state = 0;

  std::int64_t size() const { return static_cast<std::int64_t>(states.size()); }
};

/// Roll out `horizon` steps of a_t ~ pi(.|s_t), s_{t+1} ~ P(.|s_t, a_t).
/// Rewards are read off the MDP table, exactly.
template <typename Scalar>
Trajectory<Scalar> sample_trajectory(const TabularMdp<Scalar>& mdp,
                                     const SoftmaxPolicy<Scalar>& policy, int start_state,
                                     std::int64_t horizon, Rng& rng,
                                     std::int64_t start_time = 0) {
  if (horizon < 0) throw std::invalid_argument("sample_trajectory: negative horizon");
  if (start_state < 0 || start_state >= mdp.n_states)
    throw std::invalid_argument("sample_trajectory: start_state out of range");

  Trajectory<Scalar> traj;
  traj.start_time = start_time;
  traj.states.reserve(horizon);
  traj.actions.reserve(horizon);
  traj.rewards.reserve(horizon);

  const Matrix<Scalar> probs = prob_table(policy);
  int s = start_state;
  for (std::int64_t t = 0; t < horizon; ++t) {
    const int a = sample_index(probs.row(s), rng);
    traj.states.push_back(s);
    traj.actions.push_back(a);
    traj.rewards.push_back(mdp.rewards(s, a));
    s = sample_index(mdp.transitions[a].row(s), rng);
  }
  traj.terminal_state = s;
  return traj;
}

} // namespace avgpg
