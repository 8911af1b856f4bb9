#pragma once

// Fixtures shared by the unit tests and the acceptance binary.

#include <vector>

#include "beamsense/radio.hpp"
#include "beamsense/scheduler.hpp"

namespace beamsense::fixtures {

// Two eMBB UEs, one at CQI 15 and one at CQI 1 on every RBG, with queues
// refilled to saturation each TTI.
struct TwoUeEnvironment {
  static constexpr std::size_t kRbgs = 8;
  static constexpr std::size_t kDominant = 0;

  CqiTable table;
  std::vector<UeState> ues;

  TwoUeEnvironment() : ues(2) {
    const int cqi[2] = {15, 1};
    for (std::size_t k = 0; k < 2; ++k) {
      ues[k].id = k;
      ues[k].traffic = TrafficClass::Embb;
      ues[k].cqi.assign(kRbgs, cqi[k]);
      ues[k].sinr_db.assign(kRbgs, table.midpoint_db(cqi[k]));
    }
  }

  void refill(const SimClock& clock) {
    for (auto& ue : ues) {
      ue.queue.clear();
      ue.head_sent_bits = 0;
      for (int p = 0; p < 64; ++p) ue.queue.push_back({clock.tti, kPacketBytes});
    }
  }

  std::vector<std::size_t> step(DqnAgent& agent, SimClock& clock) {
    refill(clock);
    std::vector<UeState*> attached{&ues[0], &ues[1]};
    auto map = schedule_tti(agent, attached, kRbgs, table, clock);
    clock.advance();
    return map;
  }
};

// Trains with exploration, then returns the greedy share of RBGs given to
// the CQI-15 UE.
inline double dominant_share_after_training(const DqnConfig& cfg, std::uint64_t seed, std::size_t train_ttis,
                                            std::size_t eval_ttis) {
  DqnAgent agent(cfg, seed);
  TwoUeEnvironment env;
  SimClock clock;
  for (std::size_t t = 0; t < train_ttis; ++t) env.step(agent, clock);
  agent.set_learning(false);
  agent.set_epsilon(0.0);
  std::size_t dominant = 0, total = 0;
  for (std::size_t t = 0; t < eval_ttis; ++t) {
    for (std::size_t ue : env.step(agent, clock)) {
      dominant += ue == TwoUeEnvironment::kDominant;
      ++total;
    }
  }
  return static_cast<double>(dominant) / static_cast<double>(total);
}

}  // namespace beamsense::fixtures
