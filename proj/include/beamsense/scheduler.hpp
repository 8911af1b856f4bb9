#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "beamsense/qnet.hpp"
#include "beamsense/radio.hpp"
#include "beamsense/random.hpp"

namespace beamsense {

double sigmoid(double x);

/// QoS reward in (0,1). `s_ib` and `s_tar` are linear power ratios. For
/// URLLC the queueing delay is floored at one TTI so an empty queue stays
/// finite. Saturates at the largest double below 1.
double reward(TrafficClass traffic, double s_ib, double s_tar, double tau_tar_ms, double tau_q_ms);

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

struct SchedulerAction {
  std::size_t rbg = 0;
  std::size_t ue = 0;  // slot index in the beam's attached list
  bool operator==(const SchedulerAction&) const = default;
};

using ActionMask = std::vector<bool>;

/// Epsilon-greedy over the valid entries of `q`. The exploration coin is
/// drawn on every call. Greedy ties go to the lowest index.
std::size_t select_from_q(const Eigen::VectorXd& q, const ActionMask& mask, double epsilon, Rng& rng);

SchedulerAction select_action(const QNetwork& net, const Sequence& state, double epsilon, Rng& rng,
                              const ActionMask& mask, std::size_t rbg = 0);

struct Experience {
  Sequence state;
  std::size_t action = 0;
  double reward = 0.0;
  Sequence next_state;  // empty when terminal
  ActionMask next_mask;
  bool terminal = false;
};

/// Bounded FIFO of experiences.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  /// Rejects rewards outside (0,1).
  void push(Experience e);
  /// Distinct indices drawn without replacement.
  std::vector<const Experience*> sample(std::size_t batch, Rng& rng) const;

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  const std::deque<Experience>& items() const { return items_; }

 private:
  std::size_t capacity_;
  std::deque<Experience> items_;
};

struct TrainStats {
  double loss = 0.0;         // mean squared TD error before the update
  double mean_reward = 0.0;  // over the mini-batch
};

/// One DQN update. Each sample moves its Q-value a fraction `lr` of the way
/// to its TD target in the linearized sense: the per-sample step is the
/// gradient normalized by its squared norm, and the batch step averages them.
TrainStats train_step(QNetwork& net, const QNetwork& target, const ReplayBuffer& replay, std::size_t batch,
                      double gamma, double lr, Rng& rng);

struct DqnConfig {
  std::string network = "lstm";  // or "feedforward"
  std::size_t max_ues = 6;
  std::size_t hidden = 20;
  std::size_t replay_capacity = 60;
  std::size_t batch = 20;
  std::size_t train_interval = 60;  // decisions
  std::size_t copy_interval = 120;  // decisions
  double gamma = 0.9;
  double epsilon = 0.1;
  double learning_rate = 0.5;
  double s_tar_db = 10.0;
  double tau_tar_ms = 1.0;
  // Queue age and backlog normalizers for the state.
  double age_scale_ms = 10.0;
  double backlog_scale_bits = 8192.0;

  void validate() const;
};

/// Features per UE slot: CQI on the current RBG / 15, URLLC flag, queue age,
/// backlog left after RBGs already granted this TTI.
inline constexpr std::size_t kSlotFeatures = 4;

struct TrainingPoint {
  std::uint64_t step = 0;  // decision count at the update
  double loss = 0.0;
  double mean_reward = 0.0;
};

class DqnAgent {
 public:
  DqnAgent(const DqnConfig& cfg, std::uint64_t seed);
  DqnAgent(const DqnAgent& other);
  DqnAgent& operator=(const DqnAgent& other);
  DqnAgent(DqnAgent&&) noexcept = default;
  DqnAgent& operator=(DqnAgent&&) noexcept = default;

  const DqnConfig& config() const { return cfg_; }
  QNetwork& online() { return *online_; }
  const QNetwork& online() const { return *online_; }
  const QNetwork& target() const { return *target_; }
  const ReplayBuffer& replay() const { return replay_; }
  Rng& rng() { return rng_; }
  std::uint64_t decisions() const { return decisions_; }
  std::uint64_t train_steps() const { return train_steps_; }
  const std::vector<TrainingPoint>& training_curve() const { return curve_; }

  double epsilon() const { return epsilon_; }
  void set_epsilon(double e) { epsilon_ = e; }
  bool learning() const { return learning_; }
  void set_learning(bool on) { learning_ = on; }

  /// Stores the experience, then trains and refreshes the target on their
  /// decision-count schedules. A no-op while learning is off.
  void record(Experience e);

  void sync_target();

  friend void write_checkpoint(std::ostream& out, const DqnAgent& agent);
  friend DqnAgent read_checkpoint(std::istream& in);

 private:
  DqnConfig cfg_;
  std::unique_ptr<QNetwork> online_;
  std::unique_ptr<QNetwork> target_;
  ReplayBuffer replay_;
  Rng rng_;
  double epsilon_;
  bool learning_ = true;
  std::uint64_t decisions_ = 0;
  std::uint64_t train_steps_ = 0;
  std::vector<TrainingPoint> curve_;
};

/// State for deciding RBG `rbg`; `granted_bits[k]` is capacity already
/// planned for slot k this TTI.
Eigen::VectorXd scheduler_state(const DqnConfig& cfg, std::span<UeState* const> attached, std::size_t rbg,
                                std::span<const std::uint64_t> granted_bits, const SimClock& clock);

/// Slots holding a UE with backlog left after planned grants; when none do,
/// every attached slot.
ActionMask scheduler_mask(const DqnConfig& cfg, std::span<UeState* const> attached,
                          std::span<const std::uint64_t> granted_bits);

/// Allocates every RBG of one beam for one TTI, one decision per RBG in
/// index order. Returns the UE id per RBG, empty when nothing is attached.
/// The decision sequence is one episode: the recurrent state starts fresh
/// and the last decision is terminal.
std::vector<std::size_t> schedule_tti(DqnAgent& agent, std::span<UeState* const> attached, std::size_t n_rbgs,
                                      const CqiTable& table, const SimClock& clock);

void write_checkpoint(std::ostream& out, const DqnAgent& agent);
DqnAgent read_checkpoint(std::istream& in);
void save_checkpoint(const std::filesystem::path& path, const DqnAgent& agent);
DqnAgent load_checkpoint(const std::filesystem::path& path);

/// step,loss,mean_reward
void write_training_curve(std::ostream& out, const DqnAgent& agent);

}  // namespace beamsense
