#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <span>
#include <vector>

#include "beamsense/clustering.hpp"
#include "beamsense/geometry.hpp"
#include "beamsense/random.hpp"

namespace beamsense {

inline constexpr double kTtiSeconds = 1.0 / 7000.0;
inline constexpr double kTtiMs = 1.0 / 7.0;
inline constexpr std::uint32_t kPacketBytes = 32;

struct SimClock {
  std::uint64_t tti = 0;

  double now_ms() const { return static_cast<double>(tti) * kTtiMs; }
  double now_seconds() const { return static_cast<double>(tti) * kTtiSeconds; }
  void advance() { ++tti; }
};

enum class TrafficClass { Urllc, Embb };

struct Packet {
  std::uint64_t arrival_tti = 0;
  std::uint32_t size_bytes = kPacketBytes;
};

/// Piecewise-linear path traversed at constant speed; holds the last waypoint.
struct Trajectory {
  std::vector<Vec2> waypoints;
  double speed_mps = 0.0;

  Vec2 position_at(double t_seconds) const;
};

struct UeState {
  std::size_t id = 0;
  TrafficClass traffic = TrafficClass::Embb;
  Trajectory trajectory;
  Vec2 true_position;
  UncertainPoint observed;

  std::deque<Packet> queue;        // FIFO by arrival
  std::uint64_t head_sent_bits = 0;  // partial progress on queue.front()
  std::vector<int> cqi;            // per RBG, 0..15
  std::vector<double> sinr_db;     // per RBG

  std::uint64_t packets_arrived = 0;
  std::uint64_t packets_served = 0;
  std::uint64_t bits_served = 0;

  std::uint64_t backlog_bits() const;
  /// Head-of-line waiting time in TTIs; 0 for an empty queue.
  std::uint64_t head_of_line_ttis(const SimClock& clock) const;
};

/// Angular sector anchored at the gNB.
struct Beam {
  Vec2 origin;
  double azimuth = 0.0;  // radians
  double width = 0.0;    // radians, (0, 2pi]
  std::size_t cluster = 0;
  // Representative coincided with the origin; azimuth was set to 0.
  bool degenerate = false;

  /// Inclusive sector membership of a position.
  bool covers(Vec2 p) const;
};

/// Wraps an angle difference into [-pi, pi].
double wrap_angle(double a);

/// Beam width used when none is configured: 60 degrees.
inline constexpr double kDefaultBeamWidth = 3.14159265358979323846 / 3.0;

/// One beam per cluster, aimed from the gNB at the cluster representative.
std::vector<Beam> form_beams(const ClusteringResult& clusters, Vec2 gnb, double width = kDefaultBeamWidth);

/// Fraction of positions whose bearing from the gNB falls inside some beam.
double coverage_rate(std::span<const Beam> beams, std::span<const Vec2> true_positions, Vec2 gnb);

/// Poisson mean of 32-byte packet arrivals per TTI at the given load.
double arrivals_per_tti(double load_mbps);

/// Draws arrivals for every UE and appends them to the queues. Returns the
/// number of arrivals per UE.
std::vector<std::uint64_t> step_traffic(std::span<UeState> ues, double load_mbps, const SimClock& clock, Rng& rng);

/// Log-distance path loss, beam gain inside the sector, log-normal
/// shadowing. Outside the serving sector the link carries no signal and the
/// SINR is pinned to `out_of_beam_sinr_db`.
struct ChannelModel {
  double tx_power_dbm = -10.0;  // per RBG
  double pl0_db = 61.4;       // free space at 1 m, 28 GHz
  double d0_m = 1.0;
  double exponent = 2.5;
  double beam_gain_db = 20.0;
  double shadowing_sigma_db = 4.0;
  double noise_dbm = -111.4;  // thermal over one 360 kHz RBG plus 7 dB noise figure
  double out_of_beam_sinr_db = -30.0;

  double path_loss_db(double d_m) const;
  /// SINR for a given shadowing realization.
  double sinr_db(Vec2 ue, const Beam& serving, double shadowing_db) const;
  /// Draws shadowing from `rng`.
  double sample_sinr_db(Vec2 ue, const Beam& serving, Rng& rng) const;
};

/// Uniform quantization of SINR into CQI 0..15 and the matching
/// bits-per-RBG-per-TTI table.
class CqiTable {
 public:
  static constexpr int kLevels = 16;

  CqiTable(double min_db = -6.0, double max_db = 24.0, double rbg_bandwidth_hz = 360e3);

  /// CQI 0 below min_db; level q covers [min + (q-1)*step, min + q*step).
  int cqi(double sinr_db) const;
  double lower_edge_db(int cqi) const;
  double midpoint_db(int cqi) const;
  /// Shannon bits at the level midpoint over one RBG and one TTI; row 0 is 0.
  std::uint32_t bits_per_rbg(int cqi) const { return rate_[static_cast<std::size_t>(cqi)]; }
  const std::array<std::uint32_t, kLevels>& rates() const { return rate_; }

 private:
  double min_db_;
  double step_db_;
  std::array<std::uint32_t, kLevels> rate_{};
};

int cqi_from_sinr(double sinr_db);

struct TransmitResult {
  std::uint64_t bits = 0;
  std::uint64_t packets = 0;
  std::vector<std::uint64_t> delays_tti;  // one per dequeued packet, FIFO order
};

/// Sends up to `capacity_bits` from the head of the queue.
TransmitResult serve_queue(UeState& ue, std::uint64_t capacity_bits, const SimClock& clock);

/// Serves the UE over the RBGs assigned to it this TTI using its per-RBG CQI.
TransmitResult transmit(UeState& ue, std::span<const std::size_t> rbgs, const CqiTable& table,
                        const SimClock& clock);

}  // namespace beamsense
