#ifndef ATLA_SAMDP_POMDP_H_
#define ATLA_SAMDP_POMDP_H_

#include <string>
#include <string_view>
#include <vector>

#include "atla/samdp/samdp.h"
#include "json.hpp"

namespace atla::samdp {

// POMDP obtained by fixing the adversary: observations are the perturbed
// states that the adversary can actually emit, and O(o|s) = nu(o|s).
// Observation k stands for the state observation_states[k] and carries the
// same name as that state.
struct PomdpModel {
  std::vector<std::string> state_names;
  std::vector<std::string> action_names;
  std::vector<std::string> observation_names;
  std::vector<int> observation_states;
  std::vector<double> transition;  // (s, a, s')
  std::vector<double> reward;      // (s, a, s')
  std::vector<double> obs_prob;    // (s, o)
  std::vector<double> start;       // initial state distribution
  double gamma = 0.0;

  int n_states() const { return static_cast<int>(state_names.size()); }
  int n_actions() const { return static_cast<int>(action_names.size()); }
  int n_observations() const { return static_cast<int>(observation_names.size()); }

  double T(int s, int a, int next) const {
    return transition[(static_cast<std::size_t>(s) * n_actions() + a) * n_states() + next];
  }
  double R(int s, int a, int next) const {
    return reward[(static_cast<std::size_t>(s) * n_actions() + a) * n_states() + next];
  }
  double O(int s, int o) const {
    return obs_prob[static_cast<std::size_t>(s) * n_observations() + o];
  }

  void Validate() const;
  bool operator==(const PomdpModel&) const = default;
};

// Names default to s<i> and a<j>.
PomdpModel BuildPomdp(const SaMdp& samdp, const AdversaryMap& adversary,
                      std::vector<std::string> state_names = {},
                      std::vector<std::string> action_names = {});

// Plain-text POMDP interchange format (discount/values/states/actions/
// observations/start headers followed by T:, O: and R: entry lines). Only
// non-zero entries are written; doubles use shortest round-trip form.
std::string WritePomdpText(const PomdpModel& model);
PomdpModel ParsePomdpText(std::string_view text);

nlohmann::json PomdpToJson(const PomdpModel& model);
PomdpModel PomdpFromJson(const nlohmann::json& doc);

}  // namespace atla::samdp

#endif  // ATLA_SAMDP_POMDP_H_
