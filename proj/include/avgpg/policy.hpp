#pragma once

#include <memory>
#include <stdexcept>
#include <vector>

#include "avgpg/types.hpp"

namespace avgpg {

enum class PolicyKind { TabularSoftmax, LinearSoftmax };

/// Feature map for LinearSoftmax: one A x d matrix per state, row a = phi(s,a).
template <typename Scalar>
using FeatureMap = std::vector<Matrix<Scalar>>;

/// Immutable softmax policy.  Tabular logits are theta[s*A + a]; linear
/// logits are features[s] * theta.
template <typename Scalar>
struct SoftmaxPolicy {
  PolicyKind kind = PolicyKind::TabularSoftmax;
  int n_states = 0;
  int n_actions = 0;
  Vector<Scalar> theta;
  std::shared_ptr<const FeatureMap<Scalar>> features;  // LinearSoftmax only

  int dim() const { return static_cast<int>(theta.size()); }
};

/// A parameterization: everything about a policy class except theta.
template <typename Scalar>
struct PolicySpace {
  PolicyKind kind = PolicyKind::TabularSoftmax;
  int n_states = 0;
  int n_actions = 0;
  std::shared_ptr<const FeatureMap<Scalar>> features;

  int dim() const {
    return kind == PolicyKind::TabularSoftmax ? n_states * n_actions
                                              : static_cast<int>((*features)[0].cols());
  }

  SoftmaxPolicy<Scalar> make(const Vector<Scalar>& theta) const {
    if (static_cast<int>(theta.size()) != dim())
      throw std::invalid_argument("PolicySpace::make: theta dimension mismatch");
    if (!theta.allFinite())
      throw std::invalid_argument("PolicySpace::make: theta has non-finite entries");
    return SoftmaxPolicy<Scalar>{kind, n_states, n_actions, theta, features};
  }

  SoftmaxPolicy<Scalar> zero() const { return make(Vector<Scalar>::Zero(dim())); }

  static PolicySpace tabular(int n_states, int n_actions) {
    return PolicySpace{PolicyKind::TabularSoftmax, n_states, n_actions, nullptr};
  }

  static PolicySpace linear(FeatureMap<Scalar> features, int n_actions) {
    if (features.empty()) throw std::invalid_argument("PolicySpace::linear: no features");
    const auto d = features[0].cols();
    for (const auto& f : features)
      if (f.rows() != n_actions || f.cols() != d)
        throw std::invalid_argument("PolicySpace::linear: inconsistent feature dimensions");
    const int n_states = static_cast<int>(features.size());
    return PolicySpace{PolicyKind::LinearSoftmax, n_states, n_actions,
                       std::make_shared<const FeatureMap<Scalar>>(std::move(features))};
  }
};

template <typename Scalar>
Vector<Scalar> logits(const SoftmaxPolicy<Scalar>& policy, int s) {
  if (policy.kind == PolicyKind::TabularSoftmax)
    return policy.theta.segment(s * policy.n_actions, policy.n_actions);
  return (*policy.features)[s] * policy.theta;
}

/// log pi(.|s): max-shifted log-softmax, finite for any finite logits.
template <typename Scalar>
Vector<Scalar> log_action_probs(const SoftmaxPolicy<Scalar>& policy, int s) {
  Vector<Scalar> z = logits(policy, s);
  z.array() -= z.maxCoeff();
  const Scalar log_norm = std::log(z.array().exp().sum());
  return z.array() - log_norm;
}

template <typename Scalar>
Vector<Scalar> action_probs(const SoftmaxPolicy<Scalar>& policy, int s) {
  Vector<Scalar> z = logits(policy, s);
  z.array() -= z.maxCoeff();
  Vector<Scalar> p = z.array().exp();
  return p / p.sum();
}

/// S x A table of action probabilities, row s = pi(.|s).
template <typename Scalar>
Matrix<Scalar> prob_table(const SoftmaxPolicy<Scalar>& policy) {
  Matrix<Scalar> table(policy.n_states, policy.n_actions);
  for (int s = 0; s < policy.n_states; ++s) table.row(s) = action_probs(policy, s).transpose();
  return table;
}

/// Score function grad_theta log pi(a|s).  Tabular: on block s the entries
/// are 1{a'=a} - pi(a'|s), zero elsewhere.  Linear: phi(s,a) - E_pi[phi(s,.)].
template <typename Scalar>
Vector<Scalar> score(const SoftmaxPolicy<Scalar>& policy, int s, int a) {
  const Vector<Scalar> p = action_probs(policy, s);
  if (policy.kind == PolicyKind::TabularSoftmax) {
    Vector<Scalar> g = Vector<Scalar>::Zero(policy.dim());
    g.segment(s * policy.n_actions, policy.n_actions) = -p;
    g[s * policy.n_actions + a] += Scalar(1);
    return g;
  }
  const Matrix<Scalar>& phi = (*policy.features)[s];
  return phi.row(a).transpose() - phi.transpose() * p;
}

} // namespace avgpg
