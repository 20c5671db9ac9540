#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "avgpg/mdp.hpp"
#include "avgpg/policy.hpp"
#include "avgpg/types.hpp"

namespace avgpg {

/// Chain induced by a stochastic policy: P^pi(s,s') = sum_a pi(a|s) P(s'|s,a).
template <typename Scalar>
Matrix<Scalar> induced_chain(const TabularMdp<Scalar>& mdp, const SoftmaxPolicy<Scalar>& policy) {
  const Matrix<Scalar> probs = prob_table(policy);
  Matrix<Scalar> chain = Matrix<Scalar>::Zero(mdp.n_states, mdp.n_states);
  for (int a = 0; a < mdp.n_actions; ++a)
    chain += (mdp.transitions[a].array().colwise() * probs.col(a).array()).matrix();
  return chain;
}

/// Chain induced by a deterministic policy table.
template <typename Scalar>
Matrix<Scalar> induced_chain(const TabularMdp<Scalar>& mdp, const ActionTable& policy) {
  Matrix<Scalar> chain(mdp.n_states, mdp.n_states);
  for (int s = 0; s < mdp.n_states; ++s) chain.row(s) = mdp.transitions[policy[s]].row(s);
  return chain;
}

/// Expected one-step reward per state, r^pi(s) = sum_a pi(a|s) r(s,a).
template <typename Scalar>
Vector<Scalar> policy_reward(const TabularMdp<Scalar>& mdp, const SoftmaxPolicy<Scalar>& policy) {
  return (mdp.rewards.array() * prob_table(policy).array()).rowwise().sum();
}

/// Unique stationary distribution of an irreducible aperiodic chain, from the
/// least-squares solve of [chain^T - I; 1^T] d = [0; 1].  Throws when the
/// solve cannot certify a unique, strictly positive, balanced solution.
template <typename Scalar>
Vector<Scalar> stationary_distribution(const Matrix<Scalar>& chain) {
  const int n = static_cast<int>(chain.rows());
  Matrix<Scalar> lhs(n + 1, n);
  lhs.topRows(n) = chain.transpose() - Matrix<Scalar>::Identity(n, n);
  lhs.row(n).setOnes();
  Vector<Scalar> rhs = Vector<Scalar>::Zero(n + 1);
  rhs[n] = Scalar(1);

  Eigen::ColPivHouseholderQR<Matrix<Scalar>> qr(lhs);
  if (qr.rank() < n)
    throw std::runtime_error(
        "stationary solve failed: balance equations are rank-deficient (chain reducible or "
        "periodic)");
  const Vector<Scalar> d = qr.solve(rhs);

  const Scalar residual = (d.transpose() * chain - d.transpose()).cwiseAbs().maxCoeff();
  if (!(residual < Scalar(1e-12)))
    throw std::runtime_error("stationary solve failed: balance residual " +
                             std::to_string(static_cast<double>(residual)) + " exceeds 1e-12");
  if (!(d.minCoeff() > Scalar(0)))
    throw std::runtime_error(
        "stationary solve failed: distribution not strictly positive (chain reducible)");
  return d;
}

/// Differential value functions of one policy.
template <typename Scalar>
struct DifferentialValues {
  Vector<Scalar> V;  // zero mean under d^pi
  Matrix<Scalar> Q;  // S x A
  Matrix<Scalar> A;  // Q - V, broadcast over actions
};

namespace detail {

// V = (I - P^pi + 1 d^T)^{-1} (r^pi - J 1): the fundamental-matrix route,
// which bakes in the zero-mean normalization.
template <typename Scalar>
Vector<Scalar> bias_values(const Matrix<Scalar>& chain, const Vector<Scalar>& r_pi,
                           const Vector<Scalar>& d, Scalar j) {
  const int n = static_cast<int>(chain.rows());
  const Matrix<Scalar> fundamental =
      Matrix<Scalar>::Identity(n, n) - chain + Vector<Scalar>::Ones(n) * d.transpose();
  const Vector<Scalar> rhs = r_pi - Vector<Scalar>::Constant(n, j);
  Eigen::PartialPivLU<Matrix<Scalar>> lu(fundamental);
  const Vector<Scalar> v = lu.solve(rhs);
  const Scalar residual = (fundamental * v - rhs).cwiseAbs().maxCoeff();
  if (!v.allFinite() || !(residual < Scalar(1e-8))) {
    Eigen::JacobiSVD<Matrix<Scalar>> svd(fundamental);
    const Scalar cond =
        svd.singularValues()(0) / svd.singularValues()(svd.singularValues().size() - 1);
    throw std::runtime_error("differential value solve failed: condition number estimate " +
                             std::to_string(static_cast<double>(cond)));
  }
  return v;
}

template <typename Scalar>
Matrix<Scalar> q_from_v(const TabularMdp<Scalar>& mdp, const Vector<Scalar>& v, Scalar j) {
  Matrix<Scalar> q(mdp.n_states, mdp.n_actions);
  for (int a = 0; a < mdp.n_actions; ++a)
    q.col(a) = mdp.rewards.col(a) - Vector<Scalar>::Constant(mdp.n_states, j) +
               mdp.transitions[a] * v;
  return q;
}

} // namespace detail

/// Long-run average reward J = (d^pi)^T r^pi.
template <typename Scalar>
Scalar gain(const TabularMdp<Scalar>& mdp, const SoftmaxPolicy<Scalar>& policy) {
  const Matrix<Scalar> chain = induced_chain(mdp, policy);
  return stationary_distribution(chain).dot(policy_reward(mdp, policy));
}

template <typename Scalar>
Scalar gain(const TabularMdp<Scalar>& mdp, const ActionTable& policy) {
  const Matrix<Scalar> chain = induced_chain(mdp, policy);
  Vector<Scalar> r_pi(mdp.n_states);
  for (int s = 0; s < mdp.n_states; ++s) r_pi[s] = mdp.rewards(s, policy[s]);
  return stationary_distribution(chain).dot(r_pi);
}

template <typename Scalar>
DifferentialValues<Scalar> differential_values(const TabularMdp<Scalar>& mdp,
                                               const SoftmaxPolicy<Scalar>& policy) {
  const Matrix<Scalar> chain = induced_chain(mdp, policy);
  const Vector<Scalar> d = stationary_distribution(chain);
  const Vector<Scalar> r_pi = policy_reward(mdp, policy);
  const Scalar j = d.dot(r_pi);
  DifferentialValues<Scalar> values;
  values.V = detail::bias_values(chain, r_pi, d, j);
  values.Q = detail::q_from_v(mdp, values.V, j);
  values.A = values.Q.colwise() - values.V;
  return values;
}

/// Smallest t >= 1 with max_s TV(chain^t(s,.), d) <= 1/4.
template <typename Scalar>
int mixing_time(const Matrix<Scalar>& chain, const Vector<Scalar>& d) {
  constexpr int kCap = 1000000;
  Matrix<Scalar> power = chain;
  for (int t = 1; t <= kCap; ++t) {
    const Scalar tv =
        Scalar(0.5) * (power.rowwise() - d.transpose()).cwiseAbs().rowwise().sum().maxCoeff();
    if (tv <= Scalar(0.25)) return t;
    power *= chain;
  }
  throw std::runtime_error(
      "mixing_time: cap of 1e6 steps exceeded; chain effectively non-mixing at tolerance 1/4");
}

/// max_s 1 / d(s).
template <typename Scalar>
Scalar hitting_time(const Vector<Scalar>& d) {
  if (!(d.minCoeff() > Scalar(0)))
    throw std::invalid_argument("hitting_time: stationary mass must be strictly positive");
  return d.cwiseInverse().maxCoeff();
}

/// Per-state tail sums delta(s) = sum_{t >= N} ||chain^t(s,.) - d||_1 with
/// N = ceil(4 t_mix log2 T); the sum is truncated once the largest per-term
/// L1 distance drops below 1e-15.
template <typename Scalar>
Vector<Scalar> mixing_tail(const Matrix<Scalar>& chain, const Vector<Scalar>& d,
                           std::int64_t t_horizon) {
  const int t_mix = mixing_time(chain, d);
  if (t_horizon < 4 * static_cast<std::int64_t>(t_mix))
    throw std::invalid_argument("mixing_tail: requires T >= 4 * t_mix, got T = " +
                                std::to_string(t_horizon) + " with t_mix = " +
                                std::to_string(t_mix));
  const auto start =
      static_cast<std::int64_t>(std::ceil(4.0 * t_mix * std::log2(static_cast<double>(t_horizon))));

  // chain^start by binary exponentiation.
  const int n = static_cast<int>(chain.rows());
  Matrix<Scalar> power = Matrix<Scalar>::Identity(n, n);
  Matrix<Scalar> base = chain;
  for (std::int64_t e = start; e > 0; e >>= 1) {
    if (e & 1) power *= base;
    if (e > 1) base *= base;
  }

  Vector<Scalar> tail = Vector<Scalar>::Zero(n);
  constexpr std::int64_t kCap = 1000000;
  for (std::int64_t i = 0; i < kCap; ++i) {
    const Vector<Scalar> term = (power.rowwise() - d.transpose()).cwiseAbs().rowwise().sum();
    if (term.maxCoeff() < Scalar(1e-15)) return tail;
    tail += term;
    power *= chain;
  }
  throw std::runtime_error("mixing_tail: truncation cap exceeded; chain mixes too slowly");
}

/// Exact policy gradient, E_{d^pi, pi}[A(s,a) grad log pi(a|s)].
template <typename Scalar>
Vector<Scalar> exact_gradient(const TabularMdp<Scalar>& mdp, const SoftmaxPolicy<Scalar>& policy) {
  const Matrix<Scalar> chain = induced_chain(mdp, policy);
  const Vector<Scalar> d = stationary_distribution(chain);
  const DifferentialValues<Scalar> values = differential_values(mdp, policy);
  const Matrix<Scalar> probs = prob_table(policy);
  Vector<Scalar> grad = Vector<Scalar>::Zero(policy.dim());
  for (int s = 0; s < mdp.n_states; ++s)
    for (int a = 0; a < mdp.n_actions; ++a)
      grad += d[s] * probs(s, a) * values.A(s, a) * score(policy, s, a);
  return grad;
}

/// Fisher information E_{d^pi, pi}[score score^T]; symmetric PSD.
template <typename Scalar>
Matrix<Scalar> fisher_information(const TabularMdp<Scalar>& mdp,
                                  const SoftmaxPolicy<Scalar>& policy) {
  const Vector<Scalar> d = stationary_distribution(induced_chain(mdp, policy));
  const Matrix<Scalar> probs = prob_table(policy);
  Matrix<Scalar> fisher = Matrix<Scalar>::Zero(policy.dim(), policy.dim());
  for (int s = 0; s < mdp.n_states; ++s) {
    for (int a = 0; a < mdp.n_actions; ++a) {
      const Vector<Scalar> g = score(policy, s, a);
      fisher.template selfadjointView<Eigen::Lower>().rankUpdate(g, d[s] * probs(s, a));
    }
  }
  fisher.template triangularView<Eigen::StrictlyUpper>() =
      fisher.transpose().template triangularView<Eigen::StrictlyUpper>();
  return fisher;
}

/// Minimum-norm solution of F x = g through an eigendecomposition, dropping
/// eigenvalues below 1e-10 times the largest.  The softmax Fisher matrix is
/// always rank-deficient (scores sum to zero per state), so the cutoff is
/// load-bearing, not a safety net.
template <typename Scalar>
Vector<Scalar> pinv_solve(const Matrix<Scalar>& fisher, const Vector<Scalar>& g) {
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> eig(fisher);
  const Vector<Scalar>& lambda = eig.eigenvalues();
  const Scalar cutoff = Scalar(1e-10) * lambda.cwiseAbs().maxCoeff();
  Vector<Scalar> x = Vector<Scalar>::Zero(g.size());
  if (!(cutoff > Scalar(0))) return x;  // zero matrix
  for (int i = 0; i < lambda.size(); ++i) {
    if (lambda[i] > cutoff) {
      const Vector<Scalar> v = eig.eigenvectors().col(i);
      x += v * (v.dot(g) / lambda[i]);
    }
  }
  return x;
}

/// Natural-gradient direction omega* = F(theta)^+ grad J(theta).
template <typename Scalar>
Vector<Scalar> npg_direction(const TabularMdp<Scalar>& mdp, const SoftmaxPolicy<Scalar>& policy) {
  return pinv_solve(fisher_information(mdp, policy), exact_gradient(mdp, policy));
}

template <typename Scalar>
struct OptimalPolicy {
  Scalar J_star;
  ActionTable pi_star;
};

namespace detail {

template <typename Scalar>
std::pair<Scalar, Vector<Scalar>> evaluate_deterministic(const TabularMdp<Scalar>& mdp,
                                                         const ActionTable& policy) {
  const Matrix<Scalar> chain = induced_chain(mdp, policy);
  const Vector<Scalar> d = stationary_distribution(chain);
  Vector<Scalar> r_pi(mdp.n_states);
  for (int s = 0; s < mdp.n_states; ++s) r_pi[s] = mdp.rewards(s, policy[s]);
  const Scalar j = d.dot(r_pi);
  return {j, bias_values(chain, r_pi, d, j)};
}

template <typename Scalar>
Scalar enumerate_optimal_gain(const TabularMdp<Scalar>& mdp) {
  ActionTable policy = ActionTable::Zero(mdp.n_states);
  Scalar best = Scalar(0);
  bool first = true;
  while (true) {
    const Scalar j = gain(mdp, policy);
    if (first || j > best) best = j;
    first = false;
    int s = 0;
    while (s < mdp.n_states && ++policy[s] == mdp.n_actions) policy[s++] = 0;
    if (s == mdp.n_states) return best;
  }
}

} // namespace detail

/// Optimal average reward and a maximizing deterministic policy, by Howard
/// policy iteration (gain/bias evaluation alternating with greedy improvement
/// on r(s,a) + sum_s' P(s'|s,a) V(s')).  Small instances (|S|*A <= 16) are
/// cross-checked against exhaustive enumeration.
template <typename Scalar>
OptimalPolicy<Scalar> optimal_gain(const TabularMdp<Scalar>& mdp) {
  constexpr int kCap = 10000;
  // Start from the myopically greedy policy.
  ActionTable policy(mdp.n_states);
  for (int s = 0; s < mdp.n_states; ++s) mdp.rewards.row(s).maxCoeff(&policy[s]);

  Scalar j = Scalar(0);
  for (int iter = 0; iter < kCap; ++iter) {
    Vector<Scalar> v;
    std::tie(j, v) = detail::evaluate_deterministic(mdp, policy);
    bool improved = false;
    for (int s = 0; s < mdp.n_states; ++s) {
      Scalar best_q = mdp.rewards(s, policy[s]) + mdp.transitions[policy[s]].row(s).dot(v);
      int best_a = policy[s];
      for (int a = 0; a < mdp.n_actions; ++a) {
        const Scalar q = mdp.rewards(s, a) + mdp.transitions[a].row(s).dot(v);
        if (q > best_q + Scalar(1e-10)) {
          best_q = q;
          best_a = a;
        }
      }
      if (best_a != policy[s]) {
        policy[s] = best_a;
        improved = true;
      }
    }
    if (!improved) {
      if (static_cast<std::int64_t>(mdp.n_states) * mdp.n_actions <= 16) {
        const Scalar j_enum = detail::enumerate_optimal_gain(mdp);
        if (std::abs(j_enum - j) > Scalar(1e-9))
          throw std::runtime_error(
              "optimal_gain: policy iteration disagrees with exhaustive enumeration");
      }
      return {j, policy};
    }
  }
  throw std::runtime_error("optimal_gain: policy iteration exceeded 10^4 iterations");
}

/// Transferred function approximation error: the Eq-style residual of fitting
/// the advantage with score features, evaluated under the optimal policy's
/// state-action distribution.
template <typename Scalar>
Scalar transfer_error(const TabularMdp<Scalar>& mdp, const SoftmaxPolicy<Scalar>& policy,
                      const ActionTable& pi_star) {
  const Vector<Scalar> omega = npg_direction(mdp, policy);
  const Matrix<Scalar> advantage = differential_values(mdp, policy).A;
  const Vector<Scalar> d_star = stationary_distribution(induced_chain(mdp, pi_star));
  Scalar err = Scalar(0);
  for (int s = 0; s < mdp.n_states; ++s) {
    const int a = pi_star[s];
    const Scalar resid = score(policy, s, a).dot(omega) - advantage(s, a);
    err += d_star[s] * resid * resid;
  }
  return err;
}

/// Both sides of the performance-difference identity:
/// J(pi) - J(pi') and E_{d^pi, pi}[A^{pi'}(s,a)].
template <typename Scalar>
std::pair<Scalar, Scalar> performance_difference(const TabularMdp<Scalar>& mdp,
                                                 const SoftmaxPolicy<Scalar>& policy,
                                                 const SoftmaxPolicy<Scalar>& policy_prime) {
  const Scalar lhs = gain(mdp, policy) - gain(mdp, policy_prime);
  const Matrix<Scalar> advantage_prime = differential_values(mdp, policy_prime).A;
  const Vector<Scalar> d = stationary_distribution(induced_chain(mdp, policy));
  const Matrix<Scalar> probs = prob_table(policy);
  const Scalar rhs = (d.asDiagonal() * (probs.array() * advantage_prime.array()).matrix()).sum();
  return {lhs, rhs};
}

/// E_{s ~ d^{pi*}}[KL(pi*(.|s) || pi_theta(.|s))] for a deterministic pi*.
template <typename Scalar>
Scalar kl_to_reference(const TabularMdp<Scalar>& mdp, const ActionTable& pi_star,
                       const SoftmaxPolicy<Scalar>& policy) {
  const Vector<Scalar> d_star = stationary_distribution(induced_chain(mdp, pi_star));
  Scalar kl = Scalar(0);
  for (int s = 0; s < mdp.n_states; ++s)
    kl -= d_star[s] * log_action_probs(policy, s)[pi_star[s]];
  return kl;
}

/// Every analytic quantity for one (MDP, policy) pair.
template <typename Scalar>
struct OracleReport {
  Vector<Scalar> d_pi;
  Scalar J;
  Vector<Scalar> V;
  Matrix<Scalar> Q;
  Matrix<Scalar> A;
  Vector<Scalar> grad_J;
  Matrix<Scalar> fisher;
  Vector<Scalar> omega_star;
  int t_mix;
  Scalar t_hit;
};

template <typename Scalar>
OracleReport<Scalar> oracle_report(const TabularMdp<Scalar>& mdp,
                                   const SoftmaxPolicy<Scalar>& policy) {
  OracleReport<Scalar> report;
  const Matrix<Scalar> chain = induced_chain(mdp, policy);
  report.d_pi = stationary_distribution(chain);
  report.J = report.d_pi.dot(policy_reward(mdp, policy));
  const DifferentialValues<Scalar> values = differential_values(mdp, policy);
  report.V = values.V;
  report.Q = values.Q;
  report.A = values.A;
  report.grad_J = exact_gradient(mdp, policy);
  report.fisher = fisher_information(mdp, policy);
  report.omega_star = pinv_solve(report.fisher, report.grad_J);
  report.t_mix = mixing_time(chain, report.d_pi);
  report.t_hit = hitting_time(report.d_pi);
  return report;
}

/// Returns a list of violated report invariants (empty when all hold):
/// positivity and normalization of d_pi, the zero-mean normalization of V,
/// the Bellman residual, V = E_pi[Q], and the mixing-time value bounds.
template <typename Scalar>
std::vector<std::string> verify_oracle_report(const TabularMdp<Scalar>& mdp,
                                              const SoftmaxPolicy<Scalar>& policy,
                                              const OracleReport<Scalar>& report) {
  std::vector<std::string> violations;
  auto check = [&](bool ok, const std::string& what) {
    if (!ok) violations.push_back(what);
  };
  check(report.d_pi.minCoeff() > Scalar(0), "d_pi strictly positive");
  check(std::abs(report.d_pi.sum() - Scalar(1)) < Scalar(1e-10), "d_pi sums to 1 within 1e-10");
  check(std::abs(report.d_pi.dot(report.V)) < Scalar(1e-9), "sum_s d_pi(s) V(s) = 0 within 1e-9");

  Scalar bellman = Scalar(0);
  for (int a = 0; a < mdp.n_actions; ++a) {
    const Vector<Scalar> expected = mdp.rewards.col(a) -
                                    Vector<Scalar>::Constant(mdp.n_states, report.J) +
                                    mdp.transitions[a] * report.V;
    bellman = std::max(bellman, (report.Q.col(a) - expected).cwiseAbs().maxCoeff());
  }
  check(bellman < Scalar(1e-9), "Bellman residual < 1e-9");

  const Matrix<Scalar> probs = prob_table(policy);
  const Scalar v_consistency =
      ((probs.array() * report.Q.array()).rowwise().sum().matrix() - report.V)
          .cwiseAbs()
          .maxCoeff();
  check(v_consistency < Scalar(1e-9), "V(s) = sum_a pi(a|s) Q(s,a) within 1e-9");

  check(report.V.cwiseAbs().maxCoeff() <= Scalar(5) * Scalar(report.t_mix), "|V| <= 5 t_mix");
  check(report.Q.cwiseAbs().maxCoeff() <= Scalar(6) * Scalar(report.t_mix), "|Q| <= 6 t_mix");
  return violations;
}

} // namespace avgpg
