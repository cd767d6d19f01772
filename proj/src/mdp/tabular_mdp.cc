#include "atla/mdp/tabular_mdp.h"

#include <cmath>
#include <sstream>

#include "atla/common/error.h"

namespace atla::mdp {
namespace {

constexpr double kStochasticTol = 1e-12;

std::string Where(int s, int a) {
  std::ostringstream os;
  os << "(s=" << s << ", a=" << a << ")";
  return os.str();
}

}  // namespace

TabularMdp::TabularMdp(int n_states, int n_actions, double gamma)
    : n_states_(n_states), n_actions_(n_actions), gamma_(gamma) {
  if (n_states <= 0 || n_actions <= 0) {
    throw ValidationError("TabularMdp needs at least one state and action");
  }
  const std::size_t size =
      static_cast<std::size_t>(n_states) * n_actions * n_states;
  transition_.assign(size, 0.0);
  reward_.assign(size, 0.0);
  terminal_.assign(n_states, 0);
}

void TabularMdp::MakeTerminal(int s) {
  terminal_[s] = 1;
  for (int a = 0; a < n_actions_; ++a) {
    for (int next = 0; next < n_states_; ++next) {
      transition_[Index(s, a, next)] = next == s ? 1.0 : 0.0;
      reward_[Index(s, a, next)] = 0.0;
    }
  }
}

double TabularMdp::ExpectedReward(int s, int a) const {
  const double* p = transition_row(s, a);
  const double* r = reward_row(s, a);
  double total = 0.0;
  for (int next = 0; next < n_states_; ++next) total += p[next] * r[next];
  return total;
}

void TabularMdp::Validate() const {
  if (n_states_ <= 0 || n_actions_ <= 0) {
    throw ValidationError("TabularMdp is empty");
  }
  if (!(gamma_ >= 0.0 && gamma_ < 1.0)) {
    throw ValidationError("gamma must lie in [0, 1)");
  }
  for (int s = 0; s < n_states_; ++s) {
    for (int a = 0; a < n_actions_; ++a) {
      double total = 0.0;
      for (int next = 0; next < n_states_; ++next) {
        const double p = transition(s, a, next);
        const double r = reward(s, a, next);
        if (std::isnan(p) || std::isnan(r) || !std::isfinite(r)) {
          throw ValidationError("non-finite entry at " + Where(s, a));
        }
        if (p < 0.0 || p > 1.0) {
          throw ValidationError("transition probability outside [0,1] at " +
                                Where(s, a));
        }
        if (terminal(s) &&
            ((next == s && p != 1.0) || (next != s && p != 0.0) || r != 0.0)) {
          throw ValidationError("terminal state is not a zero-reward self-loop " +
                                Where(s, a));
        }
        total += p;
      }
      if (std::abs(total - 1.0) > kStochasticTol) {
        throw ValidationError("transition row does not sum to 1 at " +
                              Where(s, a));
      }
    }
  }
}

TabularPolicy::TabularPolicy(int n_states, int n_actions)
    : n_states_(n_states),
      n_actions_(n_actions),
      probs_(static_cast<std::size_t>(n_states) * n_actions, 0.0) {}

TabularPolicy TabularPolicy::Uniform(int n_states, int n_actions) {
  TabularPolicy policy(n_states, n_actions);
  for (double& p : policy.probs_) p = 1.0 / n_actions;
  return policy;
}

TabularPolicy TabularPolicy::Deterministic(const std::vector<int>& actions,
                                           int n_actions) {
  TabularPolicy policy(static_cast<int>(actions.size()), n_actions);
  for (int s = 0; s < policy.n_states_; ++s) policy.set_prob(s, actions[s], 1.0);
  return policy;
}

int TabularPolicy::ArgMax(int s) const {
  int best = 0;
  for (int a = 1; a < n_actions_; ++a) {
    if (prob(s, a) > prob(s, best)) best = a;
  }
  return best;
}

bool TabularPolicy::IsDeterministic() const {
  for (double p : probs_) {
    if (p != 0.0 && p != 1.0) return false;
  }
  return true;
}

void TabularPolicy::Validate() const {
  for (int s = 0; s < n_states_; ++s) {
    double total = 0.0;
    for (int a = 0; a < n_actions_; ++a) {
      const double p = prob(s, a);
      if (std::isnan(p) || p < 0.0 || p > 1.0) {
        throw ValidationError("policy probability outside [0,1] at " +
                              Where(s, a));
      }
      total += p;
    }
    if (std::abs(total - 1.0) > kStochasticTol) {
      throw ValidationError("policy row " + std::to_string(s) +
                            " does not sum to 1");
    }
  }
}

ActionMask::ActionMask(int n_states, int n_actions, bool value)
    : n_states_(n_states),
      n_actions_(n_actions),
      allowed_(static_cast<std::size_t>(n_states) * n_actions, value ? 1 : 0) {}

nlohmann::json ToJson(const TabularMdp& mdp) {
  using nlohmann::json;
  json transition = json::array();
  json reward = json::array();
  json terminal = json::array();
  for (int s = 0; s < mdp.n_states(); ++s) {
    json ts = json::array();
    json rs = json::array();
    for (int a = 0; a < mdp.n_actions(); ++a) {
      json ta = json::array();
      json ra = json::array();
      for (int next = 0; next < mdp.n_states(); ++next) {
        ta.push_back(mdp.transition(s, a, next));
        ra.push_back(mdp.reward(s, a, next));
      }
      ts.push_back(std::move(ta));
      rs.push_back(std::move(ra));
    }
    transition.push_back(std::move(ts));
    reward.push_back(std::move(rs));
    terminal.push_back(mdp.terminal(s));
  }
  return json{{"n_states", mdp.n_states()},
              {"n_actions", mdp.n_actions()},
              {"gamma", mdp.gamma()},
              {"transition", std::move(transition)},
              {"reward", std::move(reward)},
              {"terminal", std::move(terminal)}};
}

TabularMdp MdpFromJson(const nlohmann::json& doc) {
  try {
    const int n_states = doc.at("n_states").get<int>();
    const int n_actions = doc.at("n_actions").get<int>();
    TabularMdp mdp(n_states, n_actions, doc.at("gamma").get<double>());
    const auto& transition = doc.at("transition");
    const auto& reward = doc.at("reward");
    if (transition.size() != static_cast<std::size_t>(n_states) ||
        reward.size() != static_cast<std::size_t>(n_states)) {
      throw ValidationError("transition/reward first dimension != n_states");
    }
    for (int s = 0; s < n_states; ++s) {
      if (transition[s].size() != static_cast<std::size_t>(n_actions) ||
          reward[s].size() != static_cast<std::size_t>(n_actions)) {
        throw ValidationError("transition/reward second dimension != n_actions");
      }
      for (int a = 0; a < n_actions; ++a) {
        if (transition[s][a].size() != static_cast<std::size_t>(n_states) ||
            reward[s][a].size() != static_cast<std::size_t>(n_states)) {
          throw ValidationError("transition/reward third dimension != n_states");
        }
        for (int next = 0; next < n_states; ++next) {
          mdp.set_transition(s, a, next, transition[s][a][next].get<double>());
          mdp.set_reward(s, a, next, reward[s][a][next].get<double>());
        }
      }
    }
    if (doc.contains("terminal")) {
      const auto& terminal = doc.at("terminal");
      if (terminal.size() != static_cast<std::size_t>(n_states)) {
        throw ValidationError("terminal mask length != n_states");
      }
      for (int s = 0; s < n_states; ++s) {
        mdp.set_terminal_flag(s, terminal[s].get<bool>());
      }
    }
    mdp.Validate();
    return mdp;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed MDP document: ") + e.what());
  }
}

nlohmann::json ToJson(const TabularPolicy& policy) {
  nlohmann::json probs = nlohmann::json::array();
  for (int s = 0; s < policy.n_states(); ++s) {
    nlohmann::json row = nlohmann::json::array();
    for (int a = 0; a < policy.n_actions(); ++a) row.push_back(policy.prob(s, a));
    probs.push_back(std::move(row));
  }
  return nlohmann::json{{"n_states", policy.n_states()},
                        {"n_actions", policy.n_actions()},
                        {"probs", std::move(probs)}};
}

TabularPolicy PolicyFromJson(const nlohmann::json& doc) {
  try {
    TabularPolicy policy(doc.at("n_states").get<int>(),
                         doc.at("n_actions").get<int>());
    const auto& probs = doc.at("probs");
    if (probs.size() != static_cast<std::size_t>(policy.n_states())) {
      throw ValidationError("policy rows != n_states");
    }
    for (int s = 0; s < policy.n_states(); ++s) {
      if (probs[s].size() != static_cast<std::size_t>(policy.n_actions())) {
        throw ValidationError("policy columns != n_actions");
      }
      for (int a = 0; a < policy.n_actions(); ++a) {
        policy.set_prob(s, a, probs[s][a].get<double>());
      }
    }
    policy.Validate();
    return policy;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed policy document: ") + e.what());
  }
}

}  // namespace atla::mdp
