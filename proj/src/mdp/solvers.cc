#include "atla/mdp/solvers.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "atla/common/error.h"

namespace atla::mdp {
namespace {

double MaxAbsDiff(const ValueVector& a, const ValueVector& b) {
  double diff = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a[i] - b[i]));
  }
  return diff;
}

void CheckShapes(const TabularMdp& mdp, const TabularPolicy& policy) {
  if (policy.n_states() != mdp.n_states() ||
      policy.n_actions() != mdp.n_actions()) {
    throw ValidationError("policy shape does not match MDP");
  }
}

void CheckMask(const TabularMdp& mdp, const ActionMask& mask) {
  if (mask.empty()) return;
  if (mask.n_states() != mdp.n_states() || mask.n_actions() != mdp.n_actions()) {
    throw ValidationError("action mask shape does not match MDP");
  }
  for (int s = 0; s < mdp.n_states(); ++s) {
    bool any = false;
    for (int a = 0; a < mdp.n_actions() && !any; ++a) any = mask.allowed(s, a);
    if (!any) {
      throw ValidationError("empty admissible action set at state " +
                            std::to_string(s));
    }
  }
}

// Best admissible Q-value; writes the chosen (lowest-index within kTieTol)
// action into *action when non-null.
double BestQ(const TabularMdp& mdp, const ValueVector& values,
             const ActionMask& mask, int s, int* action) {
  double best = -std::numeric_limits<double>::infinity();
  std::vector<double> q(mdp.n_actions(), best);
  for (int a = 0; a < mdp.n_actions(); ++a) {
    if (!mask.allowed(s, a)) continue;
    q[a] = QValue(mdp, values, s, a);
    best = std::max(best, q[a]);
  }
  if (action != nullptr) {
    const double tie = kTieTol * std::max(1.0, std::abs(best));
    for (int a = 0; a < mdp.n_actions(); ++a) {
      if (mask.allowed(s, a) && q[a] >= best - tie) {
        *action = a;
        break;
      }
    }
  }
  return best;
}

// ||V_k - V*|| <= gamma/(1-gamma) ||V_k - V_{k-1}||, so stopping once the
// sweep residual drops below this keeps the values within tol of the fixed
// point.
double StopThreshold(double tol, double gamma) {
  return gamma > 0.0 ? tol * (1.0 - gamma) / gamma
                     : std::numeric_limits<double>::infinity();
}

}  // namespace

double QValue(const TabularMdp& mdp, const ValueVector& values, int s, int a) {
  const double* p = mdp.transition_row(s, a);
  const double* r = mdp.reward_row(s, a);
  double q = 0.0;
  for (int next = 0; next < mdp.n_states(); ++next) {
    if (p[next] == 0.0) continue;
    q += p[next] * (r[next] + mdp.gamma() * values[next]);
  }
  return q;
}

ValueVector BellmanExpectation(const TabularMdp& mdp,
                               const TabularPolicy& policy,
                               const ValueVector& values) {
  ValueVector out(mdp.n_states(), 0.0);
  for (int s = 0; s < mdp.n_states(); ++s) {
    double v = 0.0;
    for (int a = 0; a < mdp.n_actions(); ++a) {
      const double pa = policy.prob(s, a);
      if (pa == 0.0) continue;
      v += pa * QValue(mdp, values, s, a);
    }
    out[s] = v;
  }
  return out;
}

ValueVector PolicyEvaluation(const TabularMdp& mdp, const TabularPolicy& policy,
                             double tol) {
  if (!(tol > 0.0)) throw ValidationError("tol must be positive");
  mdp.Validate();
  CheckShapes(mdp, policy);
  policy.Validate();

  // Collapse the policy into a state-to-state kernel once; each sweep is then
  // a dense |S|x|S| product.
  const int n = mdp.n_states();
  std::vector<double> kernel(static_cast<std::size_t>(n) * n, 0.0);
  std::vector<double> expected_reward(n, 0.0);
  for (int s = 0; s < n; ++s) {
    for (int a = 0; a < mdp.n_actions(); ++a) {
      const double pa = policy.prob(s, a);
      if (pa == 0.0) continue;
      const double* p = mdp.transition_row(s, a);
      const double* r = mdp.reward_row(s, a);
      for (int next = 0; next < n; ++next) {
        kernel[static_cast<std::size_t>(s) * n + next] += pa * p[next];
        expected_reward[s] += pa * p[next] * r[next];
      }
    }
  }

  ValueVector values(n, 0.0);
  ValueVector next_values(n, 0.0);
  const double gamma = mdp.gamma();
  const double stop = StopThreshold(tol, gamma);
  while (true) {
    for (int s = 0; s < n; ++s) {
      const double* row = kernel.data() + static_cast<std::size_t>(s) * n;
      double acc = 0.0;
      for (int next = 0; next < n; ++next) acc += row[next] * values[next];
      next_values[s] = expected_reward[s] + gamma * acc;
    }
    const double residual = MaxAbsDiff(next_values, values);
    values.swap(next_values);
    if (residual <= stop) break;
  }
  return values;
}

std::vector<int> GreedyActions(const TabularMdp& mdp, const ValueVector& values,
                               const ActionMask& mask) {
  CheckMask(mdp, mask);
  std::vector<int> actions(mdp.n_states(), 0);
  for (int s = 0; s < mdp.n_states(); ++s) {
    BestQ(mdp, values, mask, s, &actions[s]);
  }
  return actions;
}

SolveResult PolicyIteration(const TabularMdp& mdp, double tol) {
  mdp.Validate();
  SolveResult result;
  std::vector<int> actions(mdp.n_states(), 0);
  TabularPolicy policy = TabularPolicy::Deterministic(actions, mdp.n_actions());
  ValueVector values = PolicyEvaluation(mdp, policy, tol);
  result.value_history.push_back(values);
  constexpr int kMaxIterations = 10000;
  for (int it = 0; it < kMaxIterations; ++it) {
    ++result.iterations;
    std::vector<int> improved = GreedyActions(mdp, values);
    if (improved == actions) break;
    // Only ties separate the two policies: both are optimal. Adopt the
    // lowest-index greedy choice and stop.
    double gain = 0.0;
    for (int s = 0; s < mdp.n_states(); ++s) {
      gain = std::max(gain, QValue(mdp, values, s, improved[s]) -
                                QValue(mdp, values, s, actions[s]));
    }
    actions = std::move(improved);
    policy = TabularPolicy::Deterministic(actions, mdp.n_actions());
    values = PolicyEvaluation(mdp, policy, tol);
    result.value_history.push_back(values);
    if (gain <= tol) break;
  }
  result.policy = std::move(policy);
  result.values = std::move(values);
  return result;
}

SolveResult ValueIteration(const TabularMdp& mdp, double tol,
                           const ActionMask& mask) {
  if (!(tol > 0.0)) throw ValidationError("tol must be positive");
  mdp.Validate();
  CheckMask(mdp, mask);

  SolveResult result;
  const int n = mdp.n_states();
  const double gamma = mdp.gamma();
  const double stop = StopThreshold(tol, gamma);
  ValueVector values(n, 0.0);
  ValueVector next_values(n, 0.0);
  while (true) {
    for (int s = 0; s < n; ++s) {
      next_values[s] = BestQ(mdp, values, mask, s, nullptr);
    }
    const double residual = MaxAbsDiff(next_values, values);
    values.swap(next_values);
    result.residuals.push_back(residual);
    ++result.iterations;
    if (residual <= stop) break;
  }
  std::vector<int> actions = GreedyActions(mdp, values, mask);
  result.policy = TabularPolicy::Deterministic(actions, mdp.n_actions());
  result.values = std::move(values);
  return result;
}

double ExpectedTruncatedReturn(const TabularMdp& mdp,
                               const TabularPolicy& policy, int start,
                               int horizon) {
  CheckShapes(mdp, policy);
  if (start < 0 || start >= mdp.n_states()) {
    throw ValidationError("start state out of range");
  }
  const int n = mdp.n_states();
  std::vector<double> dist(n, 0.0);
  std::vector<double> next_dist(n, 0.0);
  dist[start] = 1.0;
  double total = 0.0;
  for (int t = 0; t < horizon; ++t) {
    std::fill(next_dist.begin(), next_dist.end(), 0.0);
    for (int s = 0; s < n; ++s) {
      if (dist[s] == 0.0) continue;
      for (int a = 0; a < mdp.n_actions(); ++a) {
        const double w = dist[s] * policy.prob(s, a);
        if (w == 0.0) continue;
        const double* p = mdp.transition_row(s, a);
        const double* r = mdp.reward_row(s, a);
        for (int next = 0; next < n; ++next) {
          if (p[next] == 0.0) continue;
          total += w * p[next] * r[next];
          next_dist[next] += w * p[next];
        }
      }
    }
    dist.swap(next_dist);
  }
  return total;
}

}  // namespace atla::mdp
