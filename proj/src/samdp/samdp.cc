#include "atla/samdp/samdp.h"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "atla/common/error.h"

namespace atla::samdp {
namespace {

constexpr double kStochasticTol = 1e-12;

void CheckPolicy(const SaMdp& samdp, const TabularPolicy& policy) {
  if (policy.n_states() != samdp.n_states() ||
      policy.n_actions() != samdp.n_actions()) {
    throw ValidationError("policy shape does not match SA-MDP");
  }
  policy.Validate();
}

// Exact V for a deterministic adversary via a dense LU solve of
// (I - gamma P) V = r. Used only by the enumeration oracle.
Eigen::VectorXd SolveComposed(const SaMdp& samdp, const TabularPolicy& policy,
                              const std::vector<int>& observed) {
  const TabularMdp& base = samdp.base;
  const int n = base.n_states();
  Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  for (int s = 0; s < n; ++s) {
    const int shown = observed[s];
    for (int a = 0; a < base.n_actions(); ++a) {
      const double pa = policy.prob(shown, a);
      if (pa == 0.0) continue;
      const double* p = base.transition_row(s, a);
      const double* r = base.reward_row(s, a);
      for (int next = 0; next < n; ++next) {
        if (p[next] == 0.0) continue;
        system(s, next) -= base.gamma() * pa * p[next];
        rhs(s) += pa * p[next] * r[next];
      }
    }
  }
  return system.partialPivLu().solve(rhs);
}

}  // namespace

bool SaMdp::InSet(int s, int observed) const {
  const auto& set = perturbation_sets[s];
  return std::find(set.begin(), set.end(), observed) != set.end();
}

void SaMdp::Validate() const {
  base.Validate();
  if (static_cast<int>(perturbation_sets.size()) != base.n_states()) {
    throw ValidationError("perturbation set count != n_states");
  }
  for (int s = 0; s < base.n_states(); ++s) {
    const auto& set = perturbation_sets[s];
    if (set.empty()) {
      throw ValidationError("empty perturbation set at state " +
                            std::to_string(s));
    }
    for (int member : set) {
      if (member < 0 || member >= base.n_states()) {
        throw ValidationError("perturbation set of state " + std::to_string(s) +
                              " has invalid member " + std::to_string(member));
      }
    }
    if (!InSet(s, s)) {
      throw ValidationError("state " + std::to_string(s) +
                            " missing from its own perturbation set");
    }
  }
  if (start_state < 0 || start_state >= base.n_states()) {
    throw ValidationError("start state out of range");
  }
}

AdversaryMap::AdversaryMap(int n_states)
    : n_states_(n_states),
      probs_(static_cast<std::size_t>(n_states) * n_states, 0.0) {}

AdversaryMap AdversaryMap::Identity(int n_states) {
  AdversaryMap map(n_states);
  for (int s = 0; s < n_states; ++s) map.set_prob(s, s, 1.0);
  return map;
}

AdversaryMap AdversaryMap::Deterministic(const std::vector<int>& observed) {
  AdversaryMap map(static_cast<int>(observed.size()));
  for (int s = 0; s < map.n_states_; ++s) map.set_prob(s, observed[s], 1.0);
  return map;
}

nlohmann::json ToJson(const AdversaryMap& adversary) {
  nlohmann::json probs = nlohmann::json::array();
  for (int s = 0; s < adversary.n_states(); ++s) {
    nlohmann::json row = nlohmann::json::array();
    for (int o = 0; o < adversary.n_states(); ++o) row.push_back(adversary.prob(s, o));
    probs.push_back(std::move(row));
  }
  return {{"n_states", adversary.n_states()}, {"probs", std::move(probs)}};
}

AdversaryMap AdversaryMapFromJson(const nlohmann::json& doc) {
  try {
    AdversaryMap adversary(doc.at("n_states").get<int>());
    const auto& probs = doc.at("probs");
    const auto n = static_cast<std::size_t>(adversary.n_states());
    if (probs.size() != n) throw ValidationError("adversary rows != n_states");
    for (int s = 0; s < adversary.n_states(); ++s) {
      if (probs[s].size() != n) throw ValidationError("adversary columns != n_states");
      double total = 0.0;
      for (int o = 0; o < adversary.n_states(); ++o) {
        const double p = probs[s][o].get<double>();
        if (!(p >= 0.0)) throw ValidationError("negative adversary probability");
        adversary.set_prob(s, o, p);
        total += p;
      }
      if (std::abs(total - 1.0) > 1e-12) {
        throw ValidationError("adversary row " + std::to_string(s) + " does not sum to 1");
      }
    }
    return adversary;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed adversary document: ") + e.what());
  }
}

AdversaryMap AdversaryMap::Uniform(const SaMdp& samdp) {
  AdversaryMap map(samdp.n_states());
  for (int s = 0; s < samdp.n_states(); ++s) {
    const auto& set = samdp.perturbation_sets[s];
    for (int member : set) map.set_prob(s, member, 1.0 / set.size());
  }
  return map;
}

int AdversaryMap::ArgMax(int s) const {
  int best = 0;
  for (int o = 1; o < n_states_; ++o) {
    if (prob(s, o) > prob(s, best)) best = o;
  }
  return best;
}

std::vector<int> AdversaryMap::Support(int s) const {
  std::vector<int> support;
  for (int o = 0; o < n_states_; ++o) {
    if (prob(s, o) > 0.0) support.push_back(o);
  }
  return support;
}

void AdversaryMap::Validate(const SaMdp& samdp) const {
  if (n_states_ != samdp.n_states()) {
    throw ValidationError("adversary shape does not match SA-MDP");
  }
  for (int s = 0; s < n_states_; ++s) {
    double total = 0.0;
    for (int o = 0; o < n_states_; ++o) {
      const double p = prob(s, o);
      if (std::isnan(p) || p < 0.0 || p > 1.0) {
        throw ValidationError("adversary probability outside [0,1]");
      }
      if (p > 0.0 && !samdp.InSet(s, o)) {
        throw ValidationError("adversary support violation: state " +
                              std::to_string(s) + " observed as " +
                              std::to_string(o) + " outside B(s)");
      }
      total += p;
    }
    if (std::abs(total - 1.0) > kStochasticTol) {
      throw ValidationError("adversary row " + std::to_string(s) +
                            " does not sum to 1");
    }
  }
}

AdversaryMdp BuildAdversaryMdp(const SaMdp& samdp, const TabularPolicy& policy,
                               SetConstraint constraint) {
  samdp.Validate();
  CheckPolicy(samdp, policy);
  const TabularMdp& base = samdp.base;
  const int n = base.n_states();
  AdversaryMdp out{TabularMdp(n, n, base.gamma()), ActionMask()};
  if (constraint == SetConstraint::kMask) out.mask = ActionMask(n, n, false);

  std::vector<double> weighted(n);
  for (int s = 0; s < n; ++s) {
    for (int shown = 0; shown < n; ++shown) {
      const bool admissible = samdp.InSet(s, shown);
      if (constraint == SetConstraint::kMask) out.mask.set(s, shown, admissible);
      std::fill(weighted.begin(), weighted.end(), 0.0);
      for (int a = 0; a < base.n_actions(); ++a) {
        const double pa = policy.prob(shown, a);
        if (pa == 0.0) continue;
        const double* p = base.transition_row(s, a);
        const double* r = base.reward_row(s, a);
        for (int next = 0; next < n; ++next) {
          if (p[next] == 0.0) continue;
          out.mdp.set_transition(s, shown, next,
                                 out.mdp.transition(s, shown, next) + pa * p[next]);
          weighted[next] += pa * p[next] * r[next];
        }
      }
      for (int next = 0; next < n; ++next) {
        double r_hat = 0.0;
        if (base.terminal(s)) {
          r_hat = 0.0;
        } else if (!admissible && constraint == SetConstraint::kFiniteCost) {
          r_hat = kFiniteCost;
        } else {
          const double denom = out.mdp.transition(s, shown, next);
          r_hat = denom > 0.0 ? -weighted[next] / denom : 0.0;
        }
        out.mdp.set_reward(s, shown, next, r_hat);
      }
    }
    if (base.terminal(s)) out.mdp.MakeTerminal(s);
  }
  return out;
}

AdversarySolution SolveOptimalAdversary(const SaMdp& samdp,
                                        const TabularPolicy& policy, double tol,
                                        SetConstraint constraint) {
  AdversaryMdp adv = BuildAdversaryMdp(samdp, policy, constraint);
  mdp::SolveResult solved = mdp::ValueIteration(adv.mdp, tol, adv.mask);
  std::vector<int> observed(samdp.n_states());
  for (int s = 0; s < samdp.n_states(); ++s) observed[s] = solved.policy.ArgMax(s);
  AdversarySolution out;
  out.adversary = AdversaryMap::Deterministic(observed);
  out.adversary.Validate(samdp);
  // Report the exact value of the map actually returned, not the VI iterate.
  out.adversary_values = mdp::PolicyEvaluation(adv.mdp, solved.policy, tol);
  return out;
}

TabularPolicy ComposePolicy(const TabularPolicy& policy,
                            const AdversaryMap& adversary) {
  const int n = policy.n_states();
  TabularPolicy composed(n, policy.n_actions());
  for (int s = 0; s < n; ++s) {
    for (int shown = 0; shown < n; ++shown) {
      const double w = adversary.prob(s, shown);
      if (w == 0.0) continue;
      for (int a = 0; a < policy.n_actions(); ++a) {
        composed.set_prob(s, a, composed.prob(s, a) + w * policy.prob(shown, a));
      }
    }
    // A mixture of distributions can overshoot 1 by rounding.
    for (int a = 0; a < policy.n_actions(); ++a) {
      composed.set_prob(s, a, std::min(composed.prob(s, a), 1.0));
    }
  }
  return composed;
}

ValueVector EvaluateUnderAdversary(const SaMdp& samdp,
                                   const TabularPolicy& policy,
                                   const AdversaryMap& adversary, double tol) {
  samdp.Validate();
  CheckPolicy(samdp, policy);
  adversary.Validate(samdp);
  return mdp::PolicyEvaluation(samdp.base, ComposePolicy(policy, adversary), tol);
}

std::uint64_t CountDeterministicAdversaries(const SaMdp& samdp) {
  std::uint64_t count = 1;
  for (const auto& set : samdp.perturbation_sets) {
    const std::uint64_t size = set.size();
    if (size != 0 && count > std::numeric_limits<std::uint64_t>::max() / size) {
      return std::numeric_limits<std::uint64_t>::max();
    }
    count *= size;
  }
  return count;
}

EnumerationResult EnumerateAdversaries(const SaMdp& samdp,
                                       const TabularPolicy& policy,
                                       std::uint64_t limit) {
  samdp.Validate();
  CheckPolicy(samdp, policy);
  const std::uint64_t total = CountDeterministicAdversaries(samdp);
  if (total > limit) {
    std::ostringstream os;
    os << "enumeration refused: " << total
       << " deterministic adversaries exceed the limit of " << limit;
    throw ValidationError(os.str());
  }

  const int n = samdp.n_states();
  std::vector<int> digit(n, 0);
  std::vector<int> observed(n);
  Eigen::VectorXd pointwise_min =
      Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
  Eigen::VectorXd best_values;
  std::vector<int> best_map;
  double best_sum = std::numeric_limits<double>::infinity();
  EnumerationResult result;

  // Mixed-radix odometer over (B(0), ..., B(n-1)), fixed order.
  while (true) {
    for (int s = 0; s < n; ++s) observed[s] = samdp.perturbation_sets[s][digit[s]];
    const Eigen::VectorXd values = SolveComposed(samdp, policy, observed);
    ++result.maps_evaluated;
    pointwise_min = pointwise_min.cwiseMin(values);
    // A simultaneous minimizer also minimizes the sum, so the sum-argmin is
    // the candidate; it is checked against the pointwise minimum below.
    const double sum = values.sum();
    if (best_map.empty() ||
        sum < best_sum - 1e-12 * std::max(1.0, std::abs(best_sum))) {
      best_sum = sum;
      best_values = values;
      best_map = observed;
    }
    int s = 0;
    while (s < n) {
      if (++digit[s] < static_cast<int>(samdp.perturbation_sets[s].size())) break;
      digit[s] = 0;
      ++s;
    }
    if (s == n) break;
  }

  const double gap = (best_values - pointwise_min).maxCoeff();
  if (gap > 1e-8) {
    std::ostringstream os;
    os << "no simultaneous minimizer among enumerated adversaries (gap " << gap
       << ")";
    throw NumericalError(os.str());
  }
  result.adversary = AdversaryMap::Deterministic(best_map);
  result.agent_values.assign(best_values.data(), best_values.data() + n);
  return result;
}

}  // namespace atla::samdp
