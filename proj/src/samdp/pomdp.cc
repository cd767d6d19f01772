#include "atla/samdp/pomdp.h"

#include <charconv>
#include <cmath>
#include <sstream>
#include <unordered_map>

#include "atla/common/error.h"
#include "atla/common/stats.h"

namespace atla::samdp {
namespace {

constexpr double kStochasticTol = 1e-12;

std::vector<std::string> DefaultNames(char prefix, int n) {
  std::vector<std::string> names;
  names.reserve(n);
  for (int i = 0; i < n; ++i) names.push_back(prefix + std::to_string(i));
  return names;
}

std::string_view Trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> SplitWhitespace(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    const std::size_t begin = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i > begin) out.push_back(s.substr(begin, i - begin));
  }
  return out;
}

std::vector<std::string_view> SplitColons(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t begin = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == ':') {
      out.push_back(Trim(s.substr(begin, i - begin)));
      begin = i + 1;
    }
  }
  return out;
}

double ParseNumber(std::string_view token, int line) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw ValidationError("line " + std::to_string(line) + ": bad number '" +
                          std::string(token) + "'");
  }
  return value;
}

// Resolves a name, an integer index, or '*' (returns -1) against a list.
class Lookup {
 public:
  explicit Lookup(const std::vector<std::string>& names) : size_(names.size()) {
    for (std::size_t i = 0; i < names.size(); ++i) index_[names[i]] = static_cast<int>(i);
  }
  int operator()(std::string_view token, int line) const {
    if (token == "*") return -1;
    auto it = index_.find(std::string(token));
    if (it != index_.end()) return it->second;
    int value = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec == std::errc() && ptr == token.data() + token.size() && value >= 0 &&
        static_cast<std::size_t>(value) < size_) {
      return value;
    }
    throw ValidationError("line " + std::to_string(line) + ": unknown name '" +
                          std::string(token) + "'");
  }

 private:
  std::size_t size_;
  std::unordered_map<std::string, int> index_;
};

std::vector<std::string> ParseNameList(std::string_view value, char prefix) {
  auto tokens = SplitWhitespace(value);
  if (tokens.size() == 1) {
    int count = 0;
    auto [ptr, ec] =
        std::from_chars(tokens[0].data(), tokens[0].data() + tokens[0].size(), count);
    if (ec == std::errc() && ptr == tokens[0].data() + tokens[0].size()) {
      return DefaultNames(prefix, count);
    }
  }
  std::vector<std::string> names;
  for (auto t : tokens) names.emplace_back(t);
  return names;
}

template <typename Fn>
void ForEachIndex(int index, int size, Fn&& fn) {
  if (index >= 0) {
    fn(index);
  } else {
    for (int i = 0; i < size; ++i) fn(i);
  }
}

}  // namespace

void PomdpModel::Validate() const {
  const int n = n_states();
  const int m = n_actions();
  const int k = n_observations();
  if (n == 0 || m == 0 || k == 0) throw ValidationError("empty POMDP");
  if (transition.size() != static_cast<std::size_t>(n) * m * n ||
      reward.size() != transition.size() ||
      obs_prob.size() != static_cast<std::size_t>(n) * k ||
      observation_states.size() != static_cast<std::size_t>(k) ||
      (!start.empty() && start.size() != static_cast<std::size_t>(n))) {
    throw ValidationError("POMDP tensor sizes are inconsistent");
  }
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ValidationError("discount outside [0,1)");
  for (int s = 0; s < n; ++s) {
    for (int a = 0; a < m; ++a) {
      double total = 0.0;
      for (int next = 0; next < n; ++next) total += T(s, a, next);
      if (std::abs(total - 1.0) > kStochasticTol) {
        throw ValidationError("T row (" + state_names[s] + ", " + action_names[a] +
                              ") does not sum to 1");
      }
    }
    double total = 0.0;
    for (int o = 0; o < k; ++o) total += O(s, o);
    if (std::abs(total - 1.0) > kStochasticTol) {
      throw ValidationError("O row " + state_names[s] + " does not sum to 1");
    }
  }
}

PomdpModel BuildPomdp(const SaMdp& samdp, const AdversaryMap& adversary,
                      std::vector<std::string> state_names,
                      std::vector<std::string> action_names) {
  samdp.Validate();
  adversary.Validate(samdp);
  const TabularMdp& base = samdp.base;
  const int n = base.n_states();
  PomdpModel model;
  model.state_names = state_names.empty() ? DefaultNames('s', n) : std::move(state_names);
  model.action_names =
      action_names.empty() ? DefaultNames('a', base.n_actions()) : std::move(action_names);
  if (model.n_states() != n || model.n_actions() != base.n_actions()) {
    throw ValidationError("state/action name count mismatch");
  }
  std::vector<int> column(n, -1);
  for (int shown = 0; shown < n; ++shown) {
    for (int s = 0; s < n; ++s) {
      if (adversary.prob(s, shown) > 0.0) {
        column[shown] = static_cast<int>(model.observation_states.size());
        model.observation_states.push_back(shown);
        model.observation_names.push_back(model.state_names[shown]);
        break;
      }
    }
  }
  const int k = model.n_observations();
  model.obs_prob.assign(static_cast<std::size_t>(n) * k, 0.0);
  for (int s = 0; s < n; ++s) {
    for (int shown = 0; shown < n; ++shown) {
      const double p = adversary.prob(s, shown);
      if (p > 0.0) model.obs_prob[static_cast<std::size_t>(s) * k + column[shown]] = p;
    }
  }
  model.transition = base.transition_tensor();
  model.reward = base.reward_tensor();
  model.gamma = base.gamma();
  model.start.assign(n, 0.0);
  model.start[samdp.start_state] = 1.0;
  model.Validate();
  return model;
}

std::string WritePomdpText(const PomdpModel& model) {
  std::ostringstream os;
  auto join = [&os](const std::vector<std::string>& names) {
    for (std::size_t i = 0; i < names.size(); ++i) os << (i ? " " : "") << names[i];
    os << "\n";
  };
  os << "discount: " << FormatDouble(model.gamma) << "\n";
  os << "values: reward\n";
  os << "states: ";
  join(model.state_names);
  os << "actions: ";
  join(model.action_names);
  os << "observations: ";
  join(model.observation_names);
  if (!model.start.empty()) {
    os << "start:";
    for (double p : model.start) os << " " << FormatDouble(p);
    os << "\n";
  }
  const int n = model.n_states();
  for (int a = 0; a < model.n_actions(); ++a) {
    for (int s = 0; s < n; ++s) {
      for (int next = 0; next < n; ++next) {
        const double p = model.T(s, a, next);
        if (p != 0.0) {
          os << "T: " << model.action_names[a] << " : " << model.state_names[s]
             << " : " << model.state_names[next] << " " << FormatDouble(p) << "\n";
        }
      }
    }
  }
  // Observations depend only on the state reached, never on the action.
  for (int s = 0; s < n; ++s) {
    for (int o = 0; o < model.n_observations(); ++o) {
      const double p = model.O(s, o);
      if (p != 0.0) {
        os << "O: * : " << model.state_names[s] << " : " << model.observation_names[o]
           << " " << FormatDouble(p) << "\n";
      }
    }
  }
  for (int a = 0; a < model.n_actions(); ++a) {
    for (int s = 0; s < n; ++s) {
      for (int next = 0; next < n; ++next) {
        const double r = model.R(s, a, next);
        if (r != 0.0) {
          os << "R: " << model.action_names[a] << " : " << model.state_names[s] << " : "
             << model.state_names[next] << " : * " << FormatDouble(r) << "\n";
        }
      }
    }
  }
  return os.str();
}

PomdpModel ParsePomdpText(std::string_view text) {
  PomdpModel model;
  bool have_discount = false;
  bool tensors_ready = false;
  std::unordered_map<std::string, int> state_index;

  auto ensure_tensors = [&](int line) {
    if (tensors_ready) return;
    if (model.state_names.empty() || model.action_names.empty() ||
        model.observation_names.empty()) {
      throw ValidationError("line " + std::to_string(line) +
                            ": entries before states/actions/observations headers");
    }
    const std::size_t n = model.state_names.size();
    const std::size_t m = model.action_names.size();
    model.transition.assign(n * m * n, 0.0);
    model.reward.assign(n * m * n, 0.0);
    model.obs_prob.assign(n * model.observation_names.size(), 0.0);
    for (const auto& name : model.observation_names) {
      int s = -1;
      for (std::size_t i = 0; i < n; ++i) {
        if (model.state_names[i] == name) s = static_cast<int>(i);
      }
      model.observation_states.push_back(s);
    }
    tensors_ready = true;
  };

  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = Trim(line);
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }
    const std::size_t colon = line.find(':');
    if (colon == std::string_view::npos) {
      throw ValidationError("line " + std::to_string(line_no) + ": expected 'key:'");
    }
    const std::string_view key = Trim(line.substr(0, colon));
    const std::string_view rest = line.substr(colon + 1);
    if (key == "discount") {
      model.gamma = ParseNumber(Trim(rest), line_no);
      have_discount = true;
    } else if (key == "values") {
      if (Trim(rest) != "reward") {
        throw ValidationError("only 'values: reward' is supported");
      }
    } else if (key == "states") {
      model.state_names = ParseNameList(rest, 's');
    } else if (key == "actions") {
      model.action_names = ParseNameList(rest, 'a');
    } else if (key == "observations") {
      model.observation_names = ParseNameList(rest, 'o');
    } else if (key == "start") {
      for (auto token : SplitWhitespace(rest)) {
        model.start.push_back(ParseNumber(token, line_no));
      }
    } else if (key == "T" || key == "O" || key == "R") {
      ensure_tensors(line_no);
      const Lookup states(model.state_names);
      const Lookup actions(model.action_names);
      const Lookup observations(model.observation_names);
      auto fields = SplitColons(rest);
      // The final field holds "<name> <number>".
      auto last = SplitWhitespace(fields.back());
      if (last.size() != 2) {
        throw ValidationError("line " + std::to_string(line_no) +
                              ": expected '<name> <value>' at end of entry");
      }
      fields.back() = last[0];
      const double value = ParseNumber(last[1], line_no);
      const int n = model.n_states();
      const int m = model.n_actions();
      if (key == "T") {
        if (fields.size() != 3) throw ValidationError("line " + std::to_string(line_no) + ": malformed T entry");
        const int a = actions(fields[0], line_no);
        const int s = states(fields[1], line_no);
        const int next = states(fields[2], line_no);
        ForEachIndex(a, m, [&](int ai) {
          ForEachIndex(s, n, [&](int si) {
            ForEachIndex(next, n, [&](int ni) {
              model.transition[(static_cast<std::size_t>(si) * m + ai) * n + ni] = value;
            });
          });
        });
      } else if (key == "O") {
        if (fields.size() != 3) throw ValidationError("line " + std::to_string(line_no) + ": malformed O entry");
        actions(fields[0], line_no);
        const int s = states(fields[1], line_no);
        const int o = observations(fields[2], line_no);
        const int k = model.n_observations();
        ForEachIndex(s, n, [&](int si) {
          ForEachIndex(o, k, [&](int oi) {
            model.obs_prob[static_cast<std::size_t>(si) * k + oi] = value;
          });
        });
      } else {
        if (fields.size() != 4) throw ValidationError("line " + std::to_string(line_no) + ": malformed R entry");
        const int a = actions(fields[0], line_no);
        const int s = states(fields[1], line_no);
        const int next = states(fields[2], line_no);
        observations(fields[3], line_no);
        ForEachIndex(a, m, [&](int ai) {
          ForEachIndex(s, n, [&](int si) {
            ForEachIndex(next, n, [&](int ni) {
              model.reward[(static_cast<std::size_t>(si) * m + ai) * n + ni] = value;
            });
          });
        });
      }
    } else {
      throw ValidationError("line " + std::to_string(line_no) + ": unknown key '" +
                            std::string(key) + "'");
    }
    if (end == text.size()) break;
  }
  if (!have_discount) throw ValidationError("missing discount line");
  ensure_tensors(line_no);
  model.Validate();
  return model;
}

nlohmann::json PomdpToJson(const PomdpModel& model) {
  using nlohmann::json;
  const int n = model.n_states();
  const int m = model.n_actions();
  json transition = json::array();
  json reward = json::array();
  json obs = json::array();
  for (int s = 0; s < n; ++s) {
    json ts = json::array();
    json rs = json::array();
    for (int a = 0; a < m; ++a) {
      json ta = json::array();
      json ra = json::array();
      for (int next = 0; next < n; ++next) {
        ta.push_back(model.T(s, a, next));
        ra.push_back(model.R(s, a, next));
      }
      ts.push_back(std::move(ta));
      rs.push_back(std::move(ra));
    }
    transition.push_back(std::move(ts));
    reward.push_back(std::move(rs));
    json os = json::array();
    for (int o = 0; o < model.n_observations(); ++o) os.push_back(model.O(s, o));
    obs.push_back(std::move(os));
  }
  return json{{"discount", model.gamma},
              {"states", model.state_names},
              {"actions", model.action_names},
              {"observations", model.observation_names},
              {"observation_states", model.observation_states},
              {"start", model.start},
              {"transition", std::move(transition)},
              {"reward", std::move(reward)},
              {"obs_prob", std::move(obs)}};
}

PomdpModel PomdpFromJson(const nlohmann::json& doc) {
  try {
    PomdpModel model;
    model.gamma = doc.at("discount").get<double>();
    model.state_names = doc.at("states").get<std::vector<std::string>>();
    model.action_names = doc.at("actions").get<std::vector<std::string>>();
    model.observation_names = doc.at("observations").get<std::vector<std::string>>();
    model.observation_states = doc.at("observation_states").get<std::vector<int>>();
    model.start = doc.at("start").get<std::vector<double>>();
    for (const auto& ts : doc.at("transition")) {
      for (const auto& ta : ts) {
        for (const auto& p : ta) model.transition.push_back(p.get<double>());
      }
    }
    for (const auto& rs : doc.at("reward")) {
      for (const auto& ra : rs) {
        for (const auto& r : ra) model.reward.push_back(r.get<double>());
      }
    }
    for (const auto& os : doc.at("obs_prob")) {
      for (const auto& p : os) model.obs_prob.push_back(p.get<double>());
    }
    model.Validate();
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed POMDP document: ") + e.what());
  }
}

}  // namespace atla::samdp
