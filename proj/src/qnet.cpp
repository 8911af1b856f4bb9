#include "beamsense/qnet.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "beamsense/random.hpp"

namespace beamsense {

namespace {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using MapMatrix = Eigen::Map<Matrix>;
using ConstMapMatrix = Eigen::Map<const Matrix>;

Vector logistic(const Vector& z) { return (1.0 + (-z.array()).exp()).inverse().matrix(); }

void fill_uniform(Eigen::Ref<Vector> v, double limit, Rng& rng) {
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = uniform(rng, -limit, limit);
}

}  // namespace

QNetwork::QNetwork(std::size_t inputs, std::size_t hidden, std::size_t actions, std::size_t n_params)
    : inputs_(inputs), hidden_(hidden), actions_(actions), params_(Vector::Zero(static_cast<Eigen::Index>(n_params))) {
  if (inputs == 0 || hidden == 0 || actions == 0) throw std::invalid_argument("QNetwork: widths must be positive");
}

void QNetwork::set_parameters(const Eigen::VectorXd& p) {
  if (p.size() != params_.size()) throw std::invalid_argument("QNetwork: parameter count mismatch");
  params_ = p;
}

void QNetwork::check_sequence(const Sequence& seq) const {
  if (seq.empty()) throw std::invalid_argument("QNetwork: empty sequence");
  for (const auto& x : seq) {
    if (static_cast<std::size_t>(x.size()) != inputs_) throw std::invalid_argument("QNetwork: input width mismatch");
  }
}

// ---------------------------------------------------------------------------

LstmQNet::LstmQNet(std::size_t inputs, std::size_t hidden, std::size_t actions, std::uint64_t seed)
    : QNetwork(inputs, hidden, actions, 4 * hidden * (inputs + hidden) + 4 * hidden + actions * hidden + actions) {
  Rng rng = make_rng(seed, 0x157);
  const double limit = 1.0 / std::sqrt(static_cast<double>(hidden));
  fill_uniform(params_.head(static_cast<Eigen::Index>(gates_size())), limit, rng);
  // Forget gate starts open so early gradients flow through the cell.
  const auto H = static_cast<Eigen::Index>(hidden);
  params_.segment(static_cast<Eigen::Index>(gates_size()) + H, H).setOnes();
  fill_uniform(params_.segment(static_cast<Eigen::Index>(head_offset()), static_cast<Eigen::Index>(actions * hidden)),
               limit, rng);
}

namespace {

struct LstmView {
  ConstMapMatrix W;   // 4H x (I+H)
  Eigen::Map<const Vector> b;
  ConstMapMatrix Wq;  // A x H
  Eigen::Map<const Vector> bq;
};

struct LstmTrace {
  std::vector<Vector> xh, gi, gf, gg, go, c, h;  // c[0], h[0] are the zero initial state
};

LstmTrace lstm_forward(const LstmView& v, const Sequence& seq, Eigen::Index I, Eigen::Index H) {
  LstmTrace t;
  t.c.push_back(Vector::Zero(H));
  t.h.push_back(Vector::Zero(H));
  for (const auto& x : seq) {
    Vector xh(I + H);
    xh << x, t.h.back();
    const Vector z = v.W * xh + v.b;
    Vector i = logistic(z.segment(0, H));
    Vector f = logistic(z.segment(H, H));
    Vector g = z.segment(2 * H, H).array().tanh().matrix();
    Vector o = logistic(z.segment(3 * H, H));
    Vector c = f.cwiseProduct(t.c.back()) + i.cwiseProduct(g);
    Vector h = o.cwiseProduct(c.array().tanh().matrix());
    t.xh.push_back(std::move(xh));
    t.gi.push_back(std::move(i));
    t.gf.push_back(std::move(f));
    t.gg.push_back(std::move(g));
    t.go.push_back(std::move(o));
    t.c.push_back(std::move(c));
    t.h.push_back(std::move(h));
  }
  return t;
}

}  // namespace

Eigen::VectorXd LstmQNet::q_values(const Sequence& seq) const {
  check_sequence(seq);
  const auto I = static_cast<Eigen::Index>(inputs_), H = static_cast<Eigen::Index>(hidden_),
             A = static_cast<Eigen::Index>(actions_);
  const double* p = params_.data();
  const LstmView v{ConstMapMatrix(p, 4 * H, I + H), Eigen::Map<const Vector>(p + 4 * H * (I + H), 4 * H),
                   ConstMapMatrix(p + head_offset(), A, H), Eigen::Map<const Vector>(p + head_offset() + A * H, A)};
  const LstmTrace t = lstm_forward(v, seq, I, H);
  return v.Wq * t.h.back() + v.bq;
}

Eigen::VectorXd LstmQNet::q_gradient(const Sequence& seq, std::size_t action) const {
  check_sequence(seq);
  if (action >= actions_) throw std::out_of_range("LstmQNet: action index");
  const auto I = static_cast<Eigen::Index>(inputs_), H = static_cast<Eigen::Index>(hidden_),
             A = static_cast<Eigen::Index>(actions_);
  const double* p = params_.data();
  const LstmView v{ConstMapMatrix(p, 4 * H, I + H), Eigen::Map<const Vector>(p + 4 * H * (I + H), 4 * H),
                   ConstMapMatrix(p + head_offset(), A, H), Eigen::Map<const Vector>(p + head_offset() + A * H, A)};
  const LstmTrace t = lstm_forward(v, seq, I, H);

  Vector grad = Vector::Zero(params_.size());
  double* g = grad.data();
  MapMatrix dW(g, 4 * H, I + H);
  Eigen::Map<Vector> db(g + 4 * H * (I + H), 4 * H);
  MapMatrix dWq(g + head_offset(), A, H);
  Eigen::Map<Vector> dbq(g + head_offset() + A * H, A);

  const auto a = static_cast<Eigen::Index>(action);
  dWq.row(a) = t.h.back().transpose();
  dbq[a] = 1.0;

  Vector dh = v.Wq.row(a).transpose();
  Vector dc = Vector::Zero(H);
  Vector dz(4 * H);
  for (std::size_t s = seq.size(); s-- > 0;) {
    const Vector& i = t.gi[s];
    const Vector& f = t.gf[s];
    const Vector& gg = t.gg[s];
    const Vector& o = t.go[s];
    const Vector tc = t.c[s + 1].array().tanh().matrix();
    const Vector d_o = dh.cwiseProduct(tc);
    dc += dh.cwiseProduct(o).cwiseProduct((1.0 - tc.array().square()).matrix());
    const Vector d_i = dc.cwiseProduct(gg);
    const Vector d_g = dc.cwiseProduct(i);
    const Vector d_f = dc.cwiseProduct(t.c[s]);
    dz.segment(0, H) = d_i.array() * i.array() * (1.0 - i.array());
    dz.segment(H, H) = d_f.array() * f.array() * (1.0 - f.array());
    dz.segment(2 * H, H) = d_g.array() * (1.0 - gg.array().square());
    dz.segment(3 * H, H) = d_o.array() * o.array() * (1.0 - o.array());
    dW.noalias() += dz * t.xh[s].transpose();
    db += dz;
    dh = v.W.rightCols(H).transpose() * dz;
    dc = dc.cwiseProduct(f);
  }
  return grad;
}

// ---------------------------------------------------------------------------

FeedForwardQNet::FeedForwardQNet(std::size_t inputs, std::size_t hidden, std::size_t actions, std::uint64_t seed)
    : QNetwork(inputs, hidden, actions, hidden * inputs + hidden + actions * hidden + actions) {
  Rng rng = make_rng(seed, 0xFF);
  const auto I = static_cast<Eigen::Index>(inputs), H = static_cast<Eigen::Index>(hidden),
             A = static_cast<Eigen::Index>(actions);
  fill_uniform(params_.head(H * I), std::sqrt(6.0 / static_cast<double>(inputs + hidden)), rng);
  fill_uniform(params_.segment(H * I + H, A * H), std::sqrt(6.0 / static_cast<double>(hidden + actions)), rng);
}

Eigen::VectorXd FeedForwardQNet::q_values(const Sequence& seq) const {
  check_sequence(seq);
  const auto I = static_cast<Eigen::Index>(inputs_), H = static_cast<Eigen::Index>(hidden_),
             A = static_cast<Eigen::Index>(actions_);
  const double* p = params_.data();
  const Vector h = (ConstMapMatrix(p, H, I) * seq.back() + Eigen::Map<const Vector>(p + H * I, H)).array().tanh().matrix();
  return ConstMapMatrix(p + H * I + H, A, H) * h + Eigen::Map<const Vector>(p + H * I + H + A * H, A);
}

Eigen::VectorXd FeedForwardQNet::q_gradient(const Sequence& seq, std::size_t action) const {
  check_sequence(seq);
  if (action >= actions_) throw std::out_of_range("FeedForwardQNet: action index");
  const auto I = static_cast<Eigen::Index>(inputs_), H = static_cast<Eigen::Index>(hidden_),
             A = static_cast<Eigen::Index>(actions_);
  const double* p = params_.data();
  const Vector& x = seq.back();
  const Vector h = (ConstMapMatrix(p, H, I) * x + Eigen::Map<const Vector>(p + H * I, H)).array().tanh().matrix();
  const ConstMapMatrix W2(p + H * I + H, A, H);
  const auto a = static_cast<Eigen::Index>(action);

  Vector grad = Vector::Zero(params_.size());
  double* g = grad.data();
  MapMatrix dW2(g + H * I + H, A, H);
  dW2.row(a) = h.transpose();
  g[H * I + H + A * H + a] = 1.0;
  const Vector dz = W2.row(a).transpose().array() * (1.0 - h.array().square());
  MapMatrix(g, H, I) = dz * x.transpose();
  Eigen::Map<Vector>(g + H * I, H) = dz;
  return grad;
}

std::unique_ptr<QNetwork> make_qnet(const std::string& kind, std::size_t inputs, std::size_t hidden,
                                    std::size_t actions, std::uint64_t seed) {
  if (kind == "lstm") return std::make_unique<LstmQNet>(inputs, hidden, actions, seed);
  if (kind == "feedforward") return std::make_unique<FeedForwardQNet>(inputs, hidden, actions, seed);
  throw std::invalid_argument("unknown Q-network kind '" + kind + "'");
}

double q_gradient_check(const QNetwork& net, const Sequence& seq, std::size_t action, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("q_gradient_check: epsilon must be positive");
  const Vector analytic = net.q_gradient(seq, action);
  auto probe = net.clone();
  Vector p = net.parameters();
  const auto a = static_cast<Eigen::Index>(action);
  double worst = 0.0;
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    const double saved = p[k];
    p[k] = saved + eps;
    probe->set_parameters(p);
    const double up = probe->q_values(seq)[a];
    p[k] = saved - eps;
    probe->set_parameters(p);
    const double down = probe->q_values(seq)[a];
    p[k] = saved;
    const double numeric = (up - down) / (2.0 * eps);
    const double scale = std::max({std::abs(analytic[k]), std::abs(numeric), 1e-6});
    worst = std::max(worst, std::abs(analytic[k] - numeric) / scale);
  }
  return worst;
}

}  // namespace beamsense
