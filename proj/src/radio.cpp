#include "beamsense/radio.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace beamsense {

Vec2 Trajectory::position_at(double t_seconds) const {
  if (waypoints.empty()) return {};
  double remaining = std::max(0.0, t_seconds) * speed_mps;
  for (std::size_t i = 0; i + 1 < waypoints.size(); ++i) {
    const double leg = distance(waypoints[i], waypoints[i + 1]);
    if (remaining <= leg) {
      if (leg == 0.0) return waypoints[i];
      const double f = remaining / leg;
      return waypoints[i] + f * (waypoints[i + 1] - waypoints[i]);
    }
    remaining -= leg;
  }
  return waypoints.back();
}

std::uint64_t UeState::backlog_bits() const {
  std::uint64_t bits = 0;
  for (const auto& p : queue) bits += 8ULL * p.size_bytes;
  return bits - head_sent_bits;
}

std::uint64_t UeState::head_of_line_ttis(const SimClock& clock) const {
  if (queue.empty()) return 0;
  return clock.tti - queue.front().arrival_tti;
}

double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * std::numbers::pi);
  return a;
}

bool Beam::covers(Vec2 p) const {
  if (width >= 2.0 * std::numbers::pi) return true;
  const Vec2 d = p - origin;
  if (d.x == 0.0 && d.y == 0.0) return true;
  const double off = std::abs(wrap_angle(std::atan2(d.y, d.x) - azimuth));
  return off <= 0.5 * width;
}

std::vector<Beam> form_beams(const ClusteringResult& clusters, Vec2 gnb, double width) {
  if (!(width > 0.0 && width <= 2.0 * std::numbers::pi)) {
    throw std::invalid_argument("form_beams: width must be in (0, 2pi]");
  }
  if (clusters.centers.empty()) throw std::invalid_argument("form_beams: no clusters");
  std::vector<Beam> beams;
  beams.reserve(clusters.centers.size());
  for (std::size_t j = 0; j < clusters.centers.size(); ++j) {
    const Vec2 d = clusters.centers[j] - gnb;
    Beam b{gnb, 0.0, width, j, false};
    if (d.x == 0.0 && d.y == 0.0) {
      b.degenerate = true;
    } else {
      b.azimuth = std::atan2(d.y, d.x);
    }
    beams.push_back(b);
  }
  return beams;
}

double coverage_rate(std::span<const Beam> beams, std::span<const Vec2> true_positions, Vec2 gnb) {
  if (true_positions.empty()) throw std::invalid_argument("coverage_rate: no UEs");
  std::size_t covered = 0;
  for (Vec2 p : true_positions) {
    for (const Beam& b : beams) {
      Beam anchored = b;
      anchored.origin = gnb;
      if (anchored.covers(p)) {
        ++covered;
        break;
      }
    }
  }
  return static_cast<double>(covered) / static_cast<double>(true_positions.size());
}

double arrivals_per_tti(double load_mbps) {
  if (!(load_mbps >= 0.0)) throw std::invalid_argument("arrivals_per_tti: load must be >= 0");
  return load_mbps * 1e6 * kTtiSeconds / (8.0 * kPacketBytes);
}

std::vector<std::uint64_t> step_traffic(std::span<UeState> ues, double load_mbps, const SimClock& clock, Rng& rng) {
  const double lambda = arrivals_per_tti(load_mbps);
  std::vector<std::uint64_t> counts(ues.size(), 0);
  for (std::size_t i = 0; i < ues.size(); ++i) {
    const std::uint64_t n = poisson(rng, lambda);
    for (std::uint64_t k = 0; k < n; ++k) ues[i].queue.push_back({clock.tti, kPacketBytes});
    ues[i].packets_arrived += n;
    counts[i] = n;
  }
  return counts;
}

double ChannelModel::path_loss_db(double d_m) const {
  return pl0_db + 10.0 * exponent * std::log10(std::max(d_m, d0_m) / d0_m);
}

double ChannelModel::sinr_db(Vec2 ue, const Beam& serving, double shadowing_db) const {
  if (!serving.covers(ue)) return out_of_beam_sinr_db;
  const double rx = tx_power_dbm + beam_gain_db - path_loss_db(distance(ue, serving.origin)) + shadowing_db;
  return rx - noise_dbm;
}

double ChannelModel::sample_sinr_db(Vec2 ue, const Beam& serving, Rng& rng) const {
  // Always draw, so the stream position does not depend on geometry.
  const double shadow = shadowing_sigma_db * standard_normal(rng);
  return sinr_db(ue, serving, shadow);
}

CqiTable::CqiTable(double min_db, double max_db, double rbg_bandwidth_hz)
    : min_db_(min_db), step_db_((max_db - min_db) / (kLevels - 1)) {
  if (!(max_db > min_db) || !(rbg_bandwidth_hz > 0.0)) throw std::invalid_argument("CqiTable: bad span");
  rate_[0] = 0;
  for (int q = 1; q < kLevels; ++q) {
    const double lin = std::pow(10.0, midpoint_db(q) / 10.0);
    rate_[static_cast<std::size_t>(q)] =
        static_cast<std::uint32_t>(std::floor(rbg_bandwidth_hz * kTtiSeconds * std::log2(1.0 + lin)));
  }
}

int CqiTable::cqi(double sinr_db) const {
  if (!(sinr_db >= min_db_)) return 0;
  const int q = 1 + static_cast<int>(std::floor((sinr_db - min_db_) / step_db_));
  return std::min(q, kLevels - 1);
}

double CqiTable::lower_edge_db(int cqi) const { return min_db_ + (cqi - 1) * step_db_; }

double CqiTable::midpoint_db(int cqi) const { return lower_edge_db(cqi) + 0.5 * step_db_; }

int cqi_from_sinr(double sinr_db) {
  static const CqiTable table;
  return table.cqi(sinr_db);
}

TransmitResult serve_queue(UeState& ue, std::uint64_t capacity_bits, const SimClock& clock) {
  TransmitResult res;
  while (capacity_bits > 0 && !ue.queue.empty()) {
    const std::uint64_t need = 8ULL * ue.queue.front().size_bytes - ue.head_sent_bits;
    if (capacity_bits >= need) {
      capacity_bits -= need;
      res.bits += need;
      res.delays_tti.push_back(clock.tti - ue.queue.front().arrival_tti);
      ++res.packets;
      ue.queue.pop_front();
      ue.head_sent_bits = 0;
    } else {
      ue.head_sent_bits += capacity_bits;
      res.bits += capacity_bits;
      capacity_bits = 0;
    }
  }
  ue.bits_served += res.bits;
  ue.packets_served += res.packets;
  return res;
}

TransmitResult transmit(UeState& ue, std::span<const std::size_t> rbgs, const CqiTable& table, const SimClock& clock) {
  std::uint64_t capacity = 0;
  for (std::size_t r : rbgs) {
    if (r >= ue.cqi.size()) throw std::out_of_range("transmit: RBG index beyond the UE's CQI report");
    capacity += table.bits_per_rbg(ue.cqi[r]);
  }
  return serve_queue(ue, capacity, clock);
}

}  // namespace beamsense
