#ifndef ATLA_MDP_TABULAR_MDP_H_
#define ATLA_MDP_TABULAR_MDP_H_

#include <cstddef>
#include <string>
#include <vector>

#include "json.hpp"

namespace atla::mdp {

// Finite discounted MDP (S, A, R, p, gamma) with dense (s, a, s') tensors.
// Terminal states are absorbing: they self-loop with zero reward under every
// action, which keeps all Bellman operators uniform.
class TabularMdp {
 public:
  TabularMdp() = default;
  TabularMdp(int n_states, int n_actions, double gamma);

  int n_states() const { return n_states_; }
  int n_actions() const { return n_actions_; }
  double gamma() const { return gamma_; }
  void set_gamma(double gamma) { gamma_ = gamma; }

  double transition(int s, int a, int next) const {
    return transition_[Index(s, a, next)];
  }
  double reward(int s, int a, int next) const {
    return reward_[Index(s, a, next)];
  }
  void set_transition(int s, int a, int next, double p) {
    transition_[Index(s, a, next)] = p;
  }
  void set_reward(int s, int a, int next, double r) {
    reward_[Index(s, a, next)] = r;
  }
  // Contiguous row p(. | s, a).
  const double* transition_row(int s, int a) const {
    return transition_.data() + Index(s, a, 0);
  }
  const double* reward_row(int s, int a) const {
    return reward_.data() + Index(s, a, 0);
  }

  bool terminal(int s) const { return terminal_[s] != 0; }
  // Marks s terminal and rewrites its rows into a zero-reward self-loop.
  void MakeTerminal(int s);
  void set_terminal_flag(int s, bool t) { terminal_[s] = t ? 1 : 0; }

  // Expected one-step reward sum_{s'} p(s'|s,a) R(s,a,s').
  double ExpectedReward(int s, int a) const;

  // Throws ValidationError describing the first violated invariant.
  void Validate() const;

  const std::vector<double>& transition_tensor() const { return transition_; }
  const std::vector<double>& reward_tensor() const { return reward_; }

  bool operator==(const TabularMdp&) const = default;

 private:
  std::size_t Index(int s, int a, int next) const {
    return (static_cast<std::size_t>(s) * n_actions_ + a) * n_states_ + next;
  }

  int n_states_ = 0;
  int n_actions_ = 0;
  double gamma_ = 0.0;
  std::vector<double> transition_;
  std::vector<double> reward_;
  std::vector<char> terminal_;
};

// Stochastic stationary policy pi(a|s), stored row-major (s, a).
class TabularPolicy {
 public:
  TabularPolicy() = default;
  TabularPolicy(int n_states, int n_actions);

  static TabularPolicy Uniform(int n_states, int n_actions);
  static TabularPolicy Deterministic(const std::vector<int>& actions,
                                     int n_actions);

  int n_states() const { return n_states_; }
  int n_actions() const { return n_actions_; }
  double prob(int s, int a) const { return probs_[Index(s, a)]; }
  void set_prob(int s, int a, double p) { probs_[Index(s, a)] = p; }
  const double* row(int s) const { return probs_.data() + Index(s, 0); }

  // Action with the largest probability, lowest index on ties.
  int ArgMax(int s) const;
  bool IsDeterministic() const;
  void Validate() const;

  bool operator==(const TabularPolicy&) const = default;

 private:
  std::size_t Index(int s, int a) const {
    return static_cast<std::size_t>(s) * n_actions_ + a;
  }

  int n_states_ = 0;
  int n_actions_ = 0;
  std::vector<double> probs_;
};

using ValueVector = std::vector<double>;

// Boolean admissibility matrix indexed (s, a); empty means all admissible.
class ActionMask {
 public:
  ActionMask() = default;
  ActionMask(int n_states, int n_actions, bool value);

  bool empty() const { return allowed_.empty(); }
  bool allowed(int s, int a) const {
    return allowed_.empty() ||
           allowed_[static_cast<std::size_t>(s) * n_actions_ + a] != 0;
  }
  void set(int s, int a, bool value) {
    allowed_[static_cast<std::size_t>(s) * n_actions_ + a] = value ? 1 : 0;
  }
  int n_states() const { return n_states_; }
  int n_actions() const { return n_actions_; }

 private:
  int n_states_ = 0;
  int n_actions_ = 0;
  std::vector<char> allowed_;
};

// JSON document {"n_states", "n_actions", "gamma", "transition", "reward",
// "terminal"} with nested (s, a, s') arrays. Probabilities are validated on
// load.
nlohmann::json ToJson(const TabularMdp& mdp);
TabularMdp MdpFromJson(const nlohmann::json& doc);
nlohmann::json ToJson(const TabularPolicy& policy);
TabularPolicy PolicyFromJson(const nlohmann::json& doc);

}  // namespace atla::mdp

#endif  // ATLA_MDP_TABULAR_MDP_H_
