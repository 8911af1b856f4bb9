#include "beamsense/scheduler.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "beamsense/text_io.hpp"
#include "json.hpp"

namespace beamsense {

using nlohmann::json;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double reward(TrafficClass traffic, double s_ib, double s_tar, double tau_tar_ms, double tau_q_ms) {
  if (!(s_tar > 0.0)) throw std::invalid_argument("reward: s_tar must be positive");
  if (!(tau_tar_ms > 0.0)) throw std::invalid_argument("reward: tau_tar must be positive");
  if (!(s_ib >= 0.0)) throw std::invalid_argument("reward: s_ib must be >= 0");
  if (!(tau_q_ms >= 0.0)) throw std::invalid_argument("reward: tau_q must be >= 0");
  double x = s_ib / s_tar;
  if (traffic == TrafficClass::Urllc) x *= tau_tar_ms / std::max(tau_q_ms, kTtiMs);
  static const double below_one = std::nextafter(1.0, 0.0);
  return std::min(sigmoid(x), below_one);
}

std::size_t select_from_q(const Eigen::VectorXd& q, const ActionMask& mask, double epsilon, Rng& rng) {
  if (mask.size() != static_cast<std::size_t>(q.size())) throw std::invalid_argument("select_action: mask width");
  std::vector<std::size_t> valid;
  for (std::size_t k = 0; k < mask.size(); ++k)
    if (mask[k]) valid.push_back(k);
  if (valid.empty()) throw std::invalid_argument("select_action: empty action mask");
  const double coin = uniform01(rng);
  if (coin < epsilon) return valid[uniform_index(rng, valid.size())];
  std::size_t best = valid.front();
  for (std::size_t k : valid)
    if (q[static_cast<Eigen::Index>(k)] > q[static_cast<Eigen::Index>(best)]) best = k;
  return best;
}

SchedulerAction select_action(const QNetwork& net, const Sequence& state, double epsilon, Rng& rng,
                              const ActionMask& mask, std::size_t rbg) {
  return {rbg, select_from_q(net.q_values(state), mask, epsilon, rng)};
}

// ---------------------------------------------------------------------------

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("ReplayBuffer: capacity must be positive");
}

void ReplayBuffer::push(Experience e) {
  if (!(e.reward > 0.0 && e.reward < 1.0)) throw std::invalid_argument("ReplayBuffer: reward outside (0,1)");
  if (items_.size() == capacity_) items_.pop_front();
  items_.push_back(std::move(e));
}

std::vector<const Experience*> ReplayBuffer::sample(std::size_t batch, Rng& rng) const {
  if (batch > items_.size()) throw std::invalid_argument("ReplayBuffer: batch larger than buffer");
  std::vector<std::size_t> idx(items_.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::vector<const Experience*> out;
  out.reserve(batch);
  for (std::size_t k = 0; k < batch; ++k) {
    const std::size_t j = k + uniform_index(rng, idx.size() - k);
    std::swap(idx[k], idx[j]);
    out.push_back(&items_[idx[k]]);
  }
  return out;
}

TrainStats train_step(QNetwork& net, const QNetwork& target, const ReplayBuffer& replay, std::size_t batch,
                      double gamma, double lr, Rng& rng) {
  if (batch == 0) throw std::invalid_argument("train_step: batch must be positive");
  const auto picks = replay.sample(batch, rng);
  Eigen::VectorXd step = Eigen::VectorXd::Zero(net.parameters().size());
  TrainStats stats;
  for (const Experience* e : picks) {
    double y = e->reward;
    if (!e->terminal) {
      const Eigen::VectorXd qn = target.q_values(e->next_state);
      double best = -std::numeric_limits<double>::infinity();
      for (Eigen::Index k = 0; k < qn.size(); ++k)
        if (e->next_mask.empty() || e->next_mask[static_cast<std::size_t>(k)]) best = std::max(best, qn[k]);
      y += gamma * best;
    }
    const double q = net.q_values(e->state)[static_cast<Eigen::Index>(e->action)];
    const double delta = y - q;
    const Eigen::VectorXd g = net.q_gradient(e->state, e->action);
    step += (delta / (g.squaredNorm() + 1e-12)) * g;
    stats.loss += delta * delta;
    stats.mean_reward += e->reward;
  }
  const double n = static_cast<double>(picks.size());
  net.set_parameters(net.parameters() + (lr / n) * step);
  stats.loss /= n;
  stats.mean_reward /= n;
  if (!net.all_finite()) throw std::runtime_error("train_step: non-finite Q-network parameters");
  return stats;
}

// ---------------------------------------------------------------------------

void DqnConfig::validate() const {
  if (max_ues == 0 || hidden == 0) throw std::invalid_argument("DqnConfig: max_ues and hidden must be positive");
  if (batch == 0 || batch > replay_capacity) throw std::invalid_argument("DqnConfig: need 0 < batch <= replay capacity");
  if (train_interval == 0 || copy_interval == 0) throw std::invalid_argument("DqnConfig: intervals must be positive");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("DqnConfig: gamma must be in [0,1)");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("DqnConfig: epsilon must be in [0,1]");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("DqnConfig: learning rate must be positive");
  if (!(tau_tar_ms > 0.0)) throw std::invalid_argument("DqnConfig: tau_tar must be positive");
  if (!(age_scale_ms > 0.0 && backlog_scale_bits > 0.0)) throw std::invalid_argument("DqnConfig: scales must be positive");
}

DqnAgent::DqnAgent(const DqnConfig& cfg, std::uint64_t seed)
    : cfg_(cfg), replay_(cfg.replay_capacity), rng_(derive_seed(seed, 0xA6E7)), epsilon_(cfg.epsilon) {
  cfg_.validate();
  online_ = make_qnet(cfg_.network, kSlotFeatures * cfg_.max_ues, cfg_.hidden, cfg_.max_ues, derive_seed(seed, 0x9E7));
  target_ = online_->clone();
}

DqnAgent::DqnAgent(const DqnAgent& o)
    : cfg_(o.cfg_),
      online_(o.online_->clone()),
      target_(o.target_->clone()),
      replay_(o.replay_),
      rng_(o.rng_),
      epsilon_(o.epsilon_),
      learning_(o.learning_),
      decisions_(o.decisions_),
      train_steps_(o.train_steps_),
      curve_(o.curve_) {}

DqnAgent& DqnAgent::operator=(const DqnAgent& o) {
  if (this != &o) *this = DqnAgent(o);
  return *this;
}

void DqnAgent::sync_target() { target_->set_parameters(online_->parameters()); }

void DqnAgent::record(Experience e) {
  if (!learning_) return;
  replay_.push(std::move(e));
  ++decisions_;
  if (decisions_ % cfg_.train_interval == 0 && replay_.size() >= cfg_.batch) {
    const TrainStats s = train_step(*online_, *target_, replay_, cfg_.batch, cfg_.gamma, cfg_.learning_rate, rng_);
    ++train_steps_;
    curve_.push_back({decisions_, s.loss, s.mean_reward});
  }
  if (decisions_ % cfg_.copy_interval == 0) sync_target();
}

// ---------------------------------------------------------------------------

namespace {

std::uint64_t remaining_bits(const UeState& ue, std::uint64_t granted) {
  const std::uint64_t b = ue.backlog_bits();
  return b > granted ? b - granted : 0;
}

void check_attached(const DqnConfig& cfg, std::span<UeState* const> attached,
                    std::span<const std::uint64_t> granted_bits) {
  if (attached.size() > cfg.max_ues) throw std::invalid_argument("scheduler: more attached UEs than max_ues");
  if (granted_bits.size() != attached.size()) throw std::invalid_argument("scheduler: granted_bits width");
}

}  // namespace

Eigen::VectorXd scheduler_state(const DqnConfig& cfg, std::span<UeState* const> attached, std::size_t rbg,
                                std::span<const std::uint64_t> granted_bits, const SimClock& clock) {
  check_attached(cfg, attached, granted_bits);
  Eigen::VectorXd s = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(kSlotFeatures * cfg.max_ues));
  for (std::size_t k = 0; k < attached.size(); ++k) {
    const UeState& ue = *attached[k];
    if (rbg >= ue.cqi.size()) throw std::out_of_range("scheduler: RBG beyond the UE's CQI report");
    const auto o = static_cast<Eigen::Index>(kSlotFeatures * k);
    s[o] = ue.cqi[rbg] / 15.0;
    s[o + 1] = ue.traffic == TrafficClass::Urllc ? 1.0 : 0.0;
    s[o + 2] = std::min(1.0, static_cast<double>(ue.head_of_line_ttis(clock)) * kTtiMs / cfg.age_scale_ms);
    s[o + 3] = std::min(1.0, static_cast<double>(remaining_bits(ue, granted_bits[k])) / cfg.backlog_scale_bits);
  }
  return s;
}

ActionMask scheduler_mask(const DqnConfig& cfg, std::span<UeState* const> attached,
                          std::span<const std::uint64_t> granted_bits) {
  check_attached(cfg, attached, granted_bits);
  ActionMask mask(cfg.max_ues, false);
  bool any = false;
  for (std::size_t k = 0; k < attached.size(); ++k) {
    mask[k] = remaining_bits(*attached[k], granted_bits[k]) > 0;
    any = any || mask[k];
  }
  if (!any) std::fill(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(attached.size()), true);
  return mask;
}

std::vector<std::size_t> schedule_tti(DqnAgent& agent, std::span<UeState* const> attached, std::size_t n_rbgs,
                                      const CqiTable& table, const SimClock& clock) {
  if (attached.empty()) return {};
  const DqnConfig& cfg = agent.config();
  for (const UeState* ue : attached) {
    if (ue->cqi.size() < n_rbgs || ue->sinr_db.size() < n_rbgs)
      throw std::invalid_argument("schedule_tti: UE channel report shorter than the RBG count");
  }
  const double s_tar = db_to_linear(cfg.s_tar_db);
  std::vector<std::uint64_t> granted(attached.size(), 0);
  std::vector<std::size_t> map(n_rbgs);
  Sequence seq;
  seq.reserve(n_rbgs);
  Experience prev;
  bool have_prev = false;
  for (std::size_t i = 0; i < n_rbgs; ++i) {
    seq.push_back(scheduler_state(cfg, attached, i, granted, clock));
    const ActionMask mask = scheduler_mask(cfg, attached, granted);
    if (have_prev) {
      prev.next_state = seq;
      prev.next_mask = mask;
      agent.record(std::move(prev));
    }
    const std::size_t a = select_from_q(agent.online().q_values(seq), mask, agent.epsilon(), agent.rng());
    UeState& ue = *attached[a];
    const double tau_q = static_cast<double>(ue.head_of_line_ttis(clock)) * kTtiMs;
    prev = Experience{seq, a, reward(ue.traffic, db_to_linear(ue.sinr_db[i]), s_tar, cfg.tau_tar_ms, tau_q), {}, {}, false};
    have_prev = true;
    granted[a] += table.bits_per_rbg(ue.cqi[i]);
    map[i] = ue.id;
  }
  prev.terminal = true;
  agent.record(std::move(prev));
  return map;
}

// ---------------------------------------------------------------------------

namespace {

constexpr int kCheckpointVersion = 1;

json vec_to_json(const Eigen::VectorXd& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

Eigen::VectorXd vec_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json seq_to_json(const Sequence& s) {
  json a = json::array();
  for (const auto& x : s) a.push_back(vec_to_json(x));
  return a;
}

Sequence seq_from_json(const json& j) {
  Sequence s;
  for (const auto& x : j) s.push_back(vec_from_json(x));
  return s;
}

json config_to_json(const DqnConfig& c) {
  return {{"network", c.network},       {"max_ues", c.max_ues},
          {"hidden", c.hidden},         {"replay_capacity", c.replay_capacity},
          {"batch", c.batch},           {"train_interval", c.train_interval},
          {"copy_interval", c.copy_interval}, {"gamma", c.gamma},
          {"epsilon", c.epsilon},       {"learning_rate", c.learning_rate},
          {"s_tar_db", c.s_tar_db},     {"tau_tar_ms", c.tau_tar_ms},
          {"age_scale_ms", c.age_scale_ms}, {"backlog_scale_bits", c.backlog_scale_bits}};
}

DqnConfig config_from_json(const json& j) {
  DqnConfig c;
  c.network = j.at("network").get<std::string>();
  c.max_ues = j.at("max_ues").get<std::size_t>();
  c.hidden = j.at("hidden").get<std::size_t>();
  c.replay_capacity = j.at("replay_capacity").get<std::size_t>();
  c.batch = j.at("batch").get<std::size_t>();
  c.train_interval = j.at("train_interval").get<std::size_t>();
  c.copy_interval = j.at("copy_interval").get<std::size_t>();
  c.gamma = j.at("gamma").get<double>();
  c.epsilon = j.at("epsilon").get<double>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.s_tar_db = j.at("s_tar_db").get<double>();
  c.tau_tar_ms = j.at("tau_tar_ms").get<double>();
  c.age_scale_ms = j.at("age_scale_ms").get<double>();
  c.backlog_scale_bits = j.at("backlog_scale_bits").get<double>();
  return c;
}

}  // namespace

void write_checkpoint(std::ostream& out, const DqnAgent& agent) {
  std::ostringstream rng_state;
  rng_state << agent.rng_;
  json replay = json::array();
  for (const auto& e : agent.replay_.items()) {
    replay.push_back({{"state", seq_to_json(e.state)},
                      {"action", e.action},
                      {"reward", e.reward},
                      {"next_state", seq_to_json(e.next_state)},
                      {"next_mask", e.next_mask},
                      {"terminal", e.terminal}});
  }
  json curve = json::array();
  for (const auto& p : agent.curve_) curve.push_back({p.step, p.loss, p.mean_reward});
  const json j = {{"format", "beamsense-dqn"},
                  {"version", kCheckpointVersion},
                  {"config", config_to_json(agent.cfg_)},
                  {"online", vec_to_json(agent.online_->parameters())},
                  {"target", vec_to_json(agent.target_->parameters())},
                  {"replay", replay},
                  {"rng", rng_state.str()},
                  {"epsilon", agent.epsilon_},
                  {"learning", agent.learning_},
                  {"decisions", agent.decisions_},
                  {"train_steps", agent.train_steps_},
                  {"curve", curve}};
  out << j.dump() << '\n';
}

DqnAgent read_checkpoint(std::istream& in) {
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("checkpoint: malformed JSON: ") + e.what());
  }
  if (j.value("format", "") != "beamsense-dqn") throw std::runtime_error("checkpoint: not a DQN checkpoint");
  if (j.value("version", 0) != kCheckpointVersion)
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(j.value("version", 0)));
  try {
    DqnAgent agent(config_from_json(j.at("config")), 0);
    agent.online_->set_parameters(vec_from_json(j.at("online")));
    agent.target_->set_parameters(vec_from_json(j.at("target")));
    for (const auto& e : j.at("replay")) {
      agent.replay_.push(Experience{seq_from_json(e.at("state")), e.at("action").get<std::size_t>(),
                                    e.at("reward").get<double>(), seq_from_json(e.at("next_state")),
                                    e.at("next_mask").get<std::vector<bool>>(), e.at("terminal").get<bool>()});
    }
    std::istringstream rs(j.at("rng").get<std::string>());
    rs >> agent.rng_;
    if (!rs) throw std::runtime_error("checkpoint: bad RNG state");
    agent.epsilon_ = j.at("epsilon").get<double>();
    agent.learning_ = j.at("learning").get<bool>();
    agent.decisions_ = j.at("decisions").get<std::uint64_t>();
    agent.train_steps_ = j.at("train_steps").get<std::uint64_t>();
    for (const auto& p : j.at("curve")) agent.curve_.push_back({p.at(0).get<std::uint64_t>(), p.at(1), p.at(2)});
    return agent;
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const DqnAgent& agent) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_checkpoint(out, agent);
}

DqnAgent load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return read_checkpoint(in);
}

void write_training_curve(std::ostream& out, const DqnAgent& agent) {
  out << "step,loss,mean_reward\n";
  for (const auto& p : agent.training_curve()) {
    out << p.step << ',' << format_double(p.loss) << ',' << format_double(p.mean_reward) << '\n';
  }
}

}  // namespace beamsense
