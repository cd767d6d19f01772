#ifndef ATLA_MDP_SOLVERS_H_
#define ATLA_MDP_SOLVERS_H_

#include <vector>

#include "atla/mdp/tabular_mdp.h"

namespace atla::mdp {

inline constexpr double kDefaultTol = 1e-10;

// Q-values within this distance of the maximum count as ties; ties resolve
// to the lowest action index.
inline constexpr double kTieTol = 1e-12;

// Iterates the Bellman expectation operator until the iterate is within tol
// of the true value in the sup norm.
ValueVector PolicyEvaluation(const TabularMdp& mdp, const TabularPolicy& policy,
                             double tol = kDefaultTol);

// One application of T^pi.
ValueVector BellmanExpectation(const TabularMdp& mdp,
                               const TabularPolicy& policy,
                               const ValueVector& values);

// Q(s, a) = sum_s' p(s'|s,a) [R(s,a,s') + gamma V(s')].
double QValue(const TabularMdp& mdp, const ValueVector& values, int s, int a);

// Greedy deterministic action per state over admissible actions.
std::vector<int> GreedyActions(const TabularMdp& mdp, const ValueVector& values,
                               const ActionMask& mask = {});

struct SolveResult {
  TabularPolicy policy;
  ValueVector values;
  int iterations = 0;
  // policy iteration: value vector of every evaluated policy, in order.
  std::vector<ValueVector> value_history;
  // value iteration: ||V_{k+1} - V_k||_inf for every sweep.
  std::vector<double> residuals;
};

SolveResult PolicyIteration(const TabularMdp& mdp, double tol = kDefaultTol);

// Throws ValidationError("empty admissible action set") when some state has
// every action masked out.
SolveResult ValueIteration(const TabularMdp& mdp, double tol = kDefaultTol,
                           const ActionMask& mask = {});

// Exact expected undiscounted sum of the first `horizon` rewards when starting
// from `start` and following `policy`. Propagates the state distribution
// forward, no sampling.
double ExpectedTruncatedReturn(const TabularMdp& mdp,
                               const TabularPolicy& policy, int start,
                               int horizon);

}  // namespace atla::mdp

#endif  // ATLA_MDP_SOLVERS_H_
