#ifndef ATLA_SAMDP_SAMDP_H_
#define ATLA_SAMDP_SAMDP_H_

#include <cstdint>
#include <optional>
#include <vector>

#include "atla/mdp/solvers.h"
#include "atla/mdp/tabular_mdp.h"
#include "json.hpp"

namespace atla::samdp {

using mdp::ActionMask;
using mdp::TabularMdp;
using mdp::TabularPolicy;
using mdp::ValueVector;

// State-adversarial MDP: a base MDP plus, for every state s, the ordered set
// B(s) of observations the adversary may present. s is always in B(s).
struct SaMdp {
  TabularMdp base;
  std::vector<std::vector<int>> perturbation_sets;
  int start_state = 0;

  int n_states() const { return base.n_states(); }
  int n_actions() const { return base.n_actions(); }
  bool InSet(int s, int observed) const;
  void Validate() const;
};

// nu(s_hat | s), dense (s, s_hat). Support must lie inside B(s).
class AdversaryMap {
 public:
  AdversaryMap() = default;
  explicit AdversaryMap(int n_states);

  static AdversaryMap Identity(int n_states);
  static AdversaryMap Deterministic(const std::vector<int>& observed);
  // Uniform over B(s).
  static AdversaryMap Uniform(const SaMdp& samdp);

  int n_states() const { return n_states_; }
  double prob(int s, int observed) const {
    return probs_[static_cast<std::size_t>(s) * n_states_ + observed];
  }
  void set_prob(int s, int observed, double p) {
    probs_[static_cast<std::size_t>(s) * n_states_ + observed] = p;
  }
  // Most likely observation for s, lowest index on ties.
  int ArgMax(int s) const;
  std::vector<int> Support(int s) const;

  void Validate(const SaMdp& samdp) const;

  bool operator==(const AdversaryMap&) const = default;

 private:
  int n_states_ = 0;
  std::vector<double> probs_;
};

// {"n_states": n, "probs": n x n rows}. Parsing checks the shape and that
// every row is a distribution.
nlohmann::json ToJson(const AdversaryMap& adversary);
AdversaryMap AdversaryMapFromJson(const nlohmann::json& doc);

// How the adversary MDP keeps the adversary inside B(s).
enum class SetConstraint {
  kMask,       // inadmissible actions removed from the action set
  kFiniteCost  // inadmissible actions pay a large negative reward
};

inline constexpr double kFiniteCost = -1e6;

struct AdversaryMdp {
  TabularMdp mdp;    // actions are observations s_hat, |A_hat| = |S|
  ActionMask mask;   // empty when built with kFiniteCost
};

// Merges the fixed agent policy into the dynamics: p_hat(s'|s,a_hat) =
// sum_a pi(a|a_hat) p(s'|s,a); R_hat is the negated conditional expected agent
// reward, zero where p_hat(s'|s,a_hat) = 0.
AdversaryMdp BuildAdversaryMdp(const SaMdp& samdp, const TabularPolicy& policy,
                               SetConstraint constraint = SetConstraint::kMask);

struct AdversarySolution {
  AdversaryMap adversary;
  // Value of the adversary in the adversary MDP (the negated agent value).
  ValueVector adversary_values;
};

AdversarySolution SolveOptimalAdversary(
    const SaMdp& samdp, const TabularPolicy& policy,
    double tol = mdp::kDefaultTol,
    SetConstraint constraint = SetConstraint::kMask);

// pi'(a|s) = sum_{s_hat} nu(s_hat|s) pi(a|s_hat).
TabularPolicy ComposePolicy(const TabularPolicy& policy,
                            const AdversaryMap& adversary);

ValueVector EvaluateUnderAdversary(const SaMdp& samdp,
                                   const TabularPolicy& policy,
                                   const AdversaryMap& adversary,
                                   double tol = mdp::kDefaultTol);

struct EnumerationResult {
  AdversaryMap adversary;
  ValueVector agent_values;
  std::uint64_t maps_evaluated = 0;
};

inline constexpr std::uint64_t kEnumerationLimit = 1000000;

// Brute-force oracle: evaluates every deterministic map s -> s_hat in B(s)
// and returns the one minimizing the agent value at every state. Refuses
// (ValidationError with the count) when prod |B(s)| exceeds `limit`.
EnumerationResult EnumerateAdversaries(const SaMdp& samdp,
                                       const TabularPolicy& policy,
                                       std::uint64_t limit = kEnumerationLimit);

// Number of deterministic adversaries, saturating at UINT64_MAX.
std::uint64_t CountDeterministicAdversaries(const SaMdp& samdp);

}  // namespace atla::samdp

#endif  // ATLA_SAMDP_SAMDP_H_
