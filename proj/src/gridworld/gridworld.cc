#include "atla/gridworld/gridworld.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "atla/common/error.h"
#include "atla/common/stats.h"

namespace atla::gridworld {
namespace {

std::string CellText(Cell c) {
  return "(" + std::to_string(c.x) + "," + std::to_string(c.y) + ")";
}

nlohmann::json CellJson(Cell c) { return nlohmann::json::array({c.x, c.y}); }

Cell CellFromJson(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2) {
    throw ValidationError("cell must be a [x, y] pair, got " + j.dump());
  }
  return {j[0].get<int>(), j[1].get<int>()};
}

bool Contains(const std::vector<Cell>& cells, Cell c) {
  return std::find(cells.begin(), cells.end(), c) != cells.end();
}

constexpr int kDx[kNumMoves] = {0, 0, -1, 1};
constexpr int kDy[kNumMoves] = {-1, 1, 0, 0};
constexpr const char* kMoveArrows[kNumMoves] = {"^", "v", "<", ">"};

}  // namespace

void GridSpec::Validate() const {
  if (width <= 0 || height <= 0) {
    throw ValidationError("grid dimensions must be positive");
  }
  auto in_bounds = [&](Cell c, const char* what) {
    if (c.x < 0 || c.x >= width || c.y < 0 || c.y >= height) {
      throw ValidationError(std::string(what) + " cell " + CellText(c) +
                            " outside " + std::to_string(width) + "x" +
                            std::to_string(height) + " grid");
    }
  };
  in_bounds(start, "start");
  in_bounds(target, "target");
  if (start == target) {
    throw ValidationError("start and target share cell " + CellText(start));
  }
  std::vector<Cell> seen = {start, target};
  auto check_list = [&](const std::vector<Cell>& cells, const char* what) {
    for (Cell c : cells) {
      in_bounds(c, what);
      if (Contains(seen, c)) {
        throw ValidationError(std::string(what) + " cell " + CellText(c) +
                              " overlaps another feature");
      }
      seen.push_back(c);
    }
  };
  check_list(traps, "trap");
  check_list(walls, "wall");
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw ValidationError("gamma must lie in [0, 1)");
  }
  if (horizon < 1) throw ValidationError("horizon must be >= 1");
}

nlohmann::json ToJson(const GridSpec& spec) {
  nlohmann::json traps = nlohmann::json::array();
  for (Cell c : spec.traps) traps.push_back(CellJson(c));
  nlohmann::json walls = nlohmann::json::array();
  for (Cell c : spec.walls) walls.push_back(CellJson(c));
  return nlohmann::json{{"name", spec.name},
                        {"width", spec.width},
                        {"height", spec.height},
                        {"start", CellJson(spec.start)},
                        {"target", CellJson(spec.target)},
                        {"traps", std::move(traps)},
                        {"walls", std::move(walls)},
                        {"gamma", spec.gamma},
                        {"step_reward", spec.step_reward},
                        {"horizon", spec.horizon}};
}

GridSpec GridSpecFromJson(const nlohmann::json& doc) {
  static const std::vector<std::string> kKeys = {
      "name",  "width", "height", "start",       "target", "traps",
      "walls", "gamma", "ascii",  "step_reward", "horizon", "comment"};
  for (const auto& [key, _] : doc.items()) {
    if (std::find(kKeys.begin(), kKeys.end(), key) == kKeys.end()) {
      throw ValidationError("unknown grid spec key '" + key + "'");
    }
  }
  try {
    GridSpec spec;
    const double gamma = doc.value("gamma", 0.9);
    const double step_reward = doc.value("step_reward", 0.0);
    if (doc.contains("ascii")) {
      std::string art;
      for (const auto& row : doc.at("ascii")) art += row.get<std::string>() + "\n";
      spec = GridSpecFromAscii(art, gamma, step_reward);
    } else {
      spec.width = doc.at("width").get<int>();
      spec.height = doc.at("height").get<int>();
      spec.start = CellFromJson(doc.at("start"));
      spec.target = CellFromJson(doc.at("target"));
      for (const auto& c : doc.value("traps", nlohmann::json::array())) {
        spec.traps.push_back(CellFromJson(c));
      }
      for (const auto& c : doc.value("walls", nlohmann::json::array())) {
        spec.walls.push_back(CellFromJson(c));
      }
      spec.gamma = gamma;
      spec.step_reward = step_reward;
    }
    spec.name = doc.value("name", std::string());
    spec.horizon = doc.value("horizon", 200);
    spec.Validate();
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed grid spec: ") + e.what());
  }
}

GridSpec GridSpecFromAscii(std::string_view art, double gamma,
                           double step_reward) {
  std::vector<std::string> rows;
  std::istringstream in{std::string(art)};
  for (std::string line; std::getline(in, line);) {
    line.erase(std::remove_if(line.begin(), line.end(),
                              [](unsigned char c) { return std::isspace(c); }),
               line.end());
    if (!line.empty()) rows.push_back(line);
  }
  if (rows.empty()) throw ValidationError("empty ASCII grid");
  GridSpec spec;
  spec.height = static_cast<int>(rows.size());
  spec.width = static_cast<int>(rows[0].size());
  spec.gamma = gamma;
  spec.step_reward = step_reward;
  bool have_start = false;
  bool have_target = false;
  for (int y = 0; y < spec.height; ++y) {
    if (static_cast<int>(rows[y].size()) != spec.width) {
      throw ValidationError("ASCII grid row " + std::to_string(y) +
                            " has length " + std::to_string(rows[y].size()) +
                            ", expected " + std::to_string(spec.width));
    }
    for (int x = 0; x < spec.width; ++x) {
      const Cell c{x, y};
      switch (rows[y][x]) {
        case 'S':
          if (have_start) throw ValidationError("second start at " + CellText(c));
          spec.start = c;
          have_start = true;
          break;
        case 'G':
          if (have_target) throw ValidationError("second target at " + CellText(c));
          spec.target = c;
          have_target = true;
          break;
        case 'T':
          spec.traps.push_back(c);
          break;
        case '#':
          spec.walls.push_back(c);
          break;
        case '.':
          break;
        default:
          throw ValidationError(std::string("unknown grid character '") +
                                rows[y][x] + "' at " + CellText(c));
      }
    }
  }
  if (!have_start) throw ValidationError("ASCII grid has no start 'S'");
  if (!have_target) throw ValidationError("ASCII grid has no target 'G'");
  spec.Validate();
  return spec;
}

std::string ToAscii(const GridSpec& spec) {
  std::vector<std::string> rows(spec.height, std::string(spec.width, '.'));
  for (Cell c : spec.traps) rows[c.y][c.x] = 'T';
  for (Cell c : spec.walls) rows[c.y][c.x] = '#';
  rows[spec.start.y][spec.start.x] = 'S';
  rows[spec.target.y][spec.target.x] = 'G';
  std::string out;
  for (const auto& row : rows) out += row + "\n";
  return out;
}

GridSpec LoadGridSpec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open grid spec '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  const bool is_json = path.size() >= 5 && path.substr(path.size() - 5) == ".json";
  if (is_json) {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(buffer.str());
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("grid spec '" + path + "' is not valid JSON: " + e.what());
    }
    return GridSpecFromJson(doc);
  }
  return GridSpecFromAscii(buffer.str());
}

GridWorld::GridWorld(GridSpec spec) : spec_(std::move(spec)) {
  spec_.Validate();
  index_.assign(static_cast<std::size_t>(spec_.width) * spec_.height, -1);
  for (int y = 0; y < spec_.height; ++y) {
    for (int x = 0; x < spec_.width; ++x) {
      if (Contains(spec_.walls, {x, y})) continue;
      index_[static_cast<std::size_t>(y) * spec_.width + x] =
          static_cast<int>(cells_.size());
      cells_.push_back({x, y});
    }
  }
  const int n = n_states();
  samdp::TabularMdp mdp(n, kNumMoves, spec_.gamma);
  for (int s = 0; s < n; ++s) {
    for (int a = 0; a < kNumMoves; ++a) {
      const int next = Next(s, a);
      mdp.set_transition(s, a, next, 1.0);
      mdp.set_reward(s, a, next, Reward(s, next));
    }
  }
  mdp.MakeTerminal(StateOf(spec_.target));
  samdp_.base = std::move(mdp);
  samdp_.perturbation_sets.resize(n);
  for (int s = 0; s < n; ++s) {
    auto& set = samdp_.perturbation_sets[s];
    set.push_back(s);
    const Cell c = CellOf(s);
    for (int a = 0; a < kNumMoves; ++a) {
      const int neighbour = StateOf({c.x + kDx[a], c.y + kDy[a]});
      if (neighbour >= 0) set.push_back(neighbour);
    }
  }
  samdp_.start_state = StateOf(spec_.start);
  samdp_.Validate();
}

int GridWorld::StateOf(Cell cell) const {
  if (cell.x < 0 || cell.x >= spec_.width || cell.y < 0 || cell.y >= spec_.height) {
    return -1;
  }
  return index_[static_cast<std::size_t>(cell.y) * spec_.width + cell.x];
}

bool GridWorld::IsTrap(int state) const {
  return Contains(spec_.traps, CellOf(state));
}

int GridWorld::Next(int state, int move) const {
  const Cell c = CellOf(state);
  const int next = StateOf({c.x + kDx[move], c.y + kDy[move]});
  return next >= 0 ? next : state;
}

double GridWorld::Reward(int /*state*/, int next) const {
  double r = spec_.step_reward;
  if (IsTarget(next)) r += 1.0;
  if (IsTrap(next)) r -= 1.0;
  return r;
}

double GridWorld::pitch() const {
  const int extent = std::max(spec_.width, spec_.height) - 1;
  return extent > 0 ? 1.0 / extent : 1.0;
}

int GridWorld::observation_dim(Encoding encoding) const {
  return encoding == Encoding::kOneHot ? n_states() : 2;
}

Eigen::VectorXd GridWorld::Observation(int state, Encoding encoding) const {
  if (encoding == Encoding::kOneHot) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n_states());
    v(state) = 1.0;
    return v;
  }
  const Cell c = CellOf(state);
  Eigen::VectorXd v(2);
  v << c.x * pitch(), c.y * pitch();
  return v;
}

samdp::SaMdp GridWorld::LinfSaMdp(double eps) const {
  if (eps < 0.0) throw ValidationError("epsilon must be non-negative");
  samdp::SaMdp out = samdp_;
  // A point at integer offset k lies inside the ball iff k * pitch <= eps.
  const int reach = static_cast<int>(std::floor(eps / pitch() + 1e-9));
  for (int s = 0; s < n_states(); ++s) {
    auto& set = out.perturbation_sets[s];
    set.assign(1, s);
    const Cell c = CellOf(s);
    for (int dy = -reach; dy <= reach; ++dy) {
      for (int dx = -reach; dx <= reach; ++dx) {
        if (dx == 0 && dy == 0) continue;
        const int other = StateOf({c.x + dx, c.y + dy});
        if (other >= 0) set.push_back(other);
      }
    }
  }
  return out;
}

samdp::SaMdp Compile(const GridSpec& spec) { return GridWorld(spec).samdp(); }

double EpisodeTrace::Return() const {
  double total = 0.0;
  for (const auto& step : steps) total += step.reward;
  return total;
}

std::vector<double> EpisodeTrace::AdversaryRewards() const {
  std::vector<double> out;
  out.reserve(steps.size());
  for (const auto& step : steps) out.push_back(-step.reward);
  return out;
}

int EpisodeTrace::CountVisits(const std::function<bool(int)>& predicate) const {
  int count = 0;
  for (const auto& step : steps) {
    if (predicate(step.next_state)) ++count;
  }
  return count;
}

PolicyFn SamplePolicy(const samdp::TabularPolicy& policy) {
  return [policy](int observed, Rng& rng) {
    return SampleIndex(rng, policy.row(observed), policy.n_actions());
  };
}

PolicyFn GreedyPolicy(const samdp::TabularPolicy& policy) {
  return [policy](int observed, Rng&) { return policy.ArgMax(observed); };
}

AdversaryFn SampleAdversary(const samdp::AdversaryMap& adversary) {
  return [adversary](int s, Rng& rng) {
    std::vector<double> row(adversary.n_states());
    for (int o = 0; o < adversary.n_states(); ++o) row[o] = adversary.prob(s, o);
    return SampleIndex(rng, row.data(), adversary.n_states());
  };
}

AdversaryFn IdentityAdversary() {
  return [](int s, Rng&) { return s; };
}

EpisodeTrace Rollout(const samdp::SaMdp& samdp, const PolicyFn& policy,
                     const AdversaryFn& adversary, int max_steps,
                     std::uint64_t seed) {
  if (max_steps < 1) throw ValidationError("max_steps must be >= 1");
  Rng rng = MakeRng(seed, "rollout");
  const auto& base = samdp.base;
  EpisodeTrace trace;
  trace.truncation_limit = max_steps;
  int s = samdp.start_state;
  for (int t = 0; t < max_steps; ++t) {
    if (base.terminal(s)) {
      trace.terminal = true;
      break;
    }
    TraceStep step;
    step.true_state = s;
    step.observed_state = adversary(s, rng);
    if (!samdp.InSet(s, step.observed_state)) {
      throw ValidationError("adversary left the perturbation set");
    }
    step.action = policy(step.observed_state, rng);
    const int next =
        SampleIndex(rng, base.transition_row(s, step.action), base.n_states());
    step.reward = base.reward(s, step.action, next);
    step.next_state = next;
    trace.steps.push_back(step);
    s = next;
  }
  if (base.terminal(s)) trace.terminal = true;
  return trace;
}

GridEnv::GridEnv(std::shared_ptr<const GridWorld> world, Encoding encoding,
                 int horizon)
    : world_(std::move(world)),
      encoding_(encoding),
      horizon_(horizon < 0 ? world_->spec().horizon : horizon) {
  state_ = world_->start_state();
}

int GridEnv::observation_dim() const { return world_->observation_dim(encoding_); }

void GridEnv::Reset(Rng&) {
  state_ = world_->start_state();
  t_ = 0;
}

Eigen::VectorXd GridEnv::Observe() const {
  return world_->Observation(state_, encoding_);
}

StepResult GridEnv::Step(const EnvAction& action, Rng&) {
  if (action.index < 0 || action.index >= kNumMoves) {
    throw ValidationError("grid action out of range");
  }
  const int next = world_->Next(state_, action.index);
  StepResult result;
  result.reward = world_->Reward(state_, next);
  state_ = next;
  ++t_;
  result.terminal = world_->IsTarget(state_);
  result.truncated = !result.terminal && t_ >= horizon_;
  return result;
}

std::unique_ptr<Environment> GridEnv::Clone() const {
  return std::make_unique<GridEnv>(*this);
}

std::string RenderCsv(const GridWorld& world, const std::vector<double>& values,
                      const std::vector<std::string>& arrows) {
  std::ostringstream os;
  os << "x,y,state,kind,value,arrow\n";
  for (int s = 0; s < world.n_states(); ++s) {
    const Cell c = world.CellOf(s);
    const char* kind = world.IsTarget(s)              ? "target"
                       : world.IsTrap(s)              ? "trap"
                       : c == world.spec().start      ? "start"
                                                      : "floor";
    os << c.x << "," << c.y << "," << s << "," << kind << ","
       << FormatDouble(values.at(s)) << "," << (arrows.empty() ? "" : arrows.at(s))
       << "\n";
  }
  return os.str();
}

std::string RenderAscii(const GridWorld& world, const std::vector<double>& values,
                        const std::vector<std::string>& arrows) {
  const GridSpec& spec = world.spec();
  std::ostringstream os;
  for (int y = 0; y < spec.height; ++y) {
    for (int x = 0; x < spec.width; ++x) {
      const int s = world.StateOf({x, y});
      std::ostringstream cell;
      if (s < 0) {
        cell << "#####";
      } else {
        const char tag = world.IsTarget(s)         ? 'G'
                         : world.IsTrap(s)         ? 'T'
                         : Cell{x, y} == spec.start ? 'S'
                                                    : ' ';
        cell << tag << (arrows.empty() ? " " : arrows.at(s)) << std::fixed
             << std::setprecision(2) << std::setw(6) << values.at(s);
      }
      os << "|" << std::setw(9) << cell.str();
    }
    os << "|\n";
  }
  return os.str();
}

std::vector<std::string> AgentArrows(const GridWorld& world,
                                     const samdp::TabularPolicy& policy) {
  std::vector<std::string> arrows(world.n_states());
  for (int s = 0; s < world.n_states(); ++s) {
    arrows[s] = world.IsTarget(s) ? "*" : kMoveArrows[policy.ArgMax(s)];
  }
  return arrows;
}

std::vector<std::string> AdversaryArrows(const GridWorld& world,
                                         const samdp::AdversaryMap& adversary) {
  std::vector<std::string> arrows(world.n_states());
  for (int s = 0; s < world.n_states(); ++s) {
    const Cell from = world.CellOf(s);
    const Cell to = world.CellOf(adversary.ArgMax(s));
    arrows[s] = "o";
    for (int a = 0; a < kNumMoves; ++a) {
      if (to.x - from.x == kDx[a] && to.y - from.y == kDy[a]) arrows[s] = kMoveArrows[a];
    }
    if ((to.x - from.x) != 0 && (to.y - from.y) != 0) arrows[s] = "x";
  }
  return arrows;
}

}  // namespace atla::gridworld
