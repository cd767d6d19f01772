#ifndef ATLA_GRIDWORLD_GRIDWORLD_H_
#define ATLA_GRIDWORLD_GRIDWORLD_H_

#include <Eigen/Core>
#include <compare>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "atla/common/environment.h"
#include "atla/common/rng.h"
#include "atla/samdp/samdp.h"
#include "json.hpp"

namespace atla::gridworld {

// x is the column (0 = left), y the row (0 = top).
struct Cell {
  int x = 0;
  int y = 0;
  auto operator<=>(const Cell&) const = default;
};

struct GridSpec {
  std::string name;
  int width = 0;
  int height = 0;
  Cell start;
  Cell target;              // reward +1 on entry, terminal
  std::vector<Cell> traps;  // reward -1 on every entry, not terminal
  std::vector<Cell> walls;
  double gamma = 0.9;
  double step_reward = 0.0;
  int horizon = 200;  // truncation limit for episodes

  // Throws ValidationError naming the offending cell.
  void Validate() const;
  bool operator==(const GridSpec&) const = default;
};

nlohmann::json ToJson(const GridSpec& spec);
GridSpec GridSpecFromJson(const nlohmann::json& doc);
// Characters: S start, G target, T trap, # wall, . floor. One row per line.
GridSpec GridSpecFromAscii(std::string_view art, double gamma = 0.9,
                           double step_reward = 0.0);
std::string ToAscii(const GridSpec& spec);
// Reads a .json spec, or ASCII art for any other extension.
GridSpec LoadGridSpec(const std::string& path);

enum Move : int { kUp = 0, kDown = 1, kLeft = 2, kRight = 3 };
inline constexpr int kNumMoves = 4;

enum class Encoding {
  kNormalizedXY,  // (x, y) / (max(width, height) - 1)
  kOneHot
};

// Compiled grid: states are the non-wall cells in row-major order.
class GridWorld {
 public:
  explicit GridWorld(GridSpec spec);

  const GridSpec& spec() const { return spec_; }
  // Deterministic-movement MDP; B(s) = {s} + valid 4-neighbours.
  const samdp::SaMdp& samdp() const { return samdp_; }

  int n_states() const { return static_cast<int>(cells_.size()); }
  int StateOf(Cell cell) const;  // -1 for walls / out of bounds
  Cell CellOf(int state) const { return cells_[state]; }
  int start_state() const { return samdp_.start_state; }
  bool IsTarget(int state) const { return CellOf(state) == spec_.target; }
  bool IsTrap(int state) const;

  // Successor under a move; walls and the border leave the agent in place.
  int Next(int state, int move) const;
  double Reward(int state, int next) const;

  // Distance between adjacent cells in the normalized encoding.
  double pitch() const;
  int observation_dim(Encoding encoding) const;
  Eigen::VectorXd Observation(int state, Encoding encoding) const;

  // B_eps(s): cells whose normalized (x, y) lies within eps of s in the
  // l-infinity norm, i.e. the grid points an l-inf observation attack of
  // radius eps can reach.
  samdp::SaMdp LinfSaMdp(double eps) const;

 private:
  GridSpec spec_;
  std::vector<Cell> cells_;
  std::vector<int> index_;  // width*height -> state or -1
  samdp::SaMdp samdp_;
};

samdp::SaMdp Compile(const GridSpec& spec);

// --- Tabular episode simulation -------------------------------------------

struct TraceStep {
  int true_state = 0;
  int observed_state = 0;
  int action = 0;
  double reward = 0.0;
  int next_state = 0;
};

struct EpisodeTrace {
  std::vector<TraceStep> steps;
  int truncation_limit = 0;
  bool terminal = false;

  double Return() const;
  std::vector<double> AdversaryRewards() const;
  // Number of steps whose successor state satisfies the predicate.
  int CountVisits(const std::function<bool(int)>& predicate) const;
};

using PolicyFn = std::function<int(int observed_state, Rng& rng)>;
using AdversaryFn = std::function<int(int true_state, Rng& rng)>;

PolicyFn SamplePolicy(const samdp::TabularPolicy& policy);
PolicyFn GreedyPolicy(const samdp::TabularPolicy& policy);
AdversaryFn SampleAdversary(const samdp::AdversaryMap& adversary);
AdversaryFn IdentityAdversary();

// s_hat ~ nu(.|s), a ~ pi(.|s_hat), environment step; starts at
// samdp.start_state and stops at a terminal state or after max_steps.
EpisodeTrace Rollout(const samdp::SaMdp& samdp, const PolicyFn& policy,
                     const AdversaryFn& adversary, int max_steps,
                     std::uint64_t seed);

// --- Vector-observation environment ----------------------------------------

class GridEnv : public Environment {
 public:
  // horizon < 0 uses the spec's truncation limit.
  GridEnv(std::shared_ptr<const GridWorld> world, Encoding encoding,
          int horizon = -1);

  int observation_dim() const override;
  ActionSpec action_spec() const override { return {true, kNumMoves, 0}; }
  void Reset(Rng& rng) override;
  Eigen::VectorXd Observe() const override;
  Eigen::VectorXd TrueState() const override { return Observe(); }
  StepResult Step(const EnvAction& action, Rng& rng) override;
  std::unique_ptr<Environment> Clone() const override;

  int state() const { return state_; }
  const GridWorld& world() const { return *world_; }
  const std::shared_ptr<const GridWorld>& world_ptr() const { return world_; }
  Encoding encoding() const { return encoding_; }
  int horizon() const { return horizon_; }

 private:
  std::shared_ptr<const GridWorld> world_;
  Encoding encoding_;
  int horizon_;
  int state_ = 0;
  int t_ = 0;
};

// --- Rendering --------------------------------------------------------------

// Per-cell table: x,y,state,kind,value,arrow. `arrows` holds one label per
// state ("^", "v", "<", ">", "o" for no move); empty strings are allowed.
std::string RenderCsv(const GridWorld& world, const std::vector<double>& values,
                      const std::vector<std::string>& arrows);
std::string RenderAscii(const GridWorld& world, const std::vector<double>& values,
                        const std::vector<std::string>& arrows);

std::vector<std::string> AgentArrows(const GridWorld& world,
                                     const samdp::TabularPolicy& policy);
// Direction from s to the adversary's most likely observation.
std::vector<std::string> AdversaryArrows(const GridWorld& world,
                                         const samdp::AdversaryMap& adversary);

}  // namespace atla::gridworld

#endif  // ATLA_GRIDWORLD_GRIDWORLD_H_
