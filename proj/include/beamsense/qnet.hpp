#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace beamsense {

/// Inputs consumed in order; Q-values are read after the last one.
using Sequence = std::vector<Eigen::VectorXd>;

/// Q-function over a fixed action set. Parameters live in one flat vector so
/// optimizers, target copies and checkpoints treat every network alike.
class QNetwork {
 public:
  virtual ~QNetwork() = default;

  virtual std::unique_ptr<QNetwork> clone() const = 0;
  virtual std::string kind() const = 0;

  std::size_t input_width() const { return inputs_; }
  std::size_t action_count() const { return actions_; }
  std::size_t hidden_width() const { return hidden_; }

  const Eigen::VectorXd& parameters() const { return params_; }
  void set_parameters(const Eigen::VectorXd& p);
  bool all_finite() const { return params_.allFinite(); }

  virtual Eigen::VectorXd q_values(const Sequence& seq) const = 0;
  /// d Q[action] / d parameters.
  virtual Eigen::VectorXd q_gradient(const Sequence& seq, std::size_t action) const = 0;

 protected:
  QNetwork(std::size_t inputs, std::size_t hidden, std::size_t actions, std::size_t n_params);
  void check_sequence(const Sequence& seq) const;

  std::size_t inputs_;
  std::size_t hidden_;
  std::size_t actions_;
  Eigen::VectorXd params_;
};

/// LSTM cell followed by a linear head on the final hidden state.
/// Gate rows are ordered input, forget, candidate, output.
class LstmQNet final : public QNetwork {
 public:
  LstmQNet(std::size_t inputs, std::size_t hidden, std::size_t actions, std::uint64_t seed);

  std::unique_ptr<QNetwork> clone() const override { return std::make_unique<LstmQNet>(*this); }
  std::string kind() const override { return "lstm"; }

  Eigen::VectorXd q_values(const Sequence& seq) const override;
  Eigen::VectorXd q_gradient(const Sequence& seq, std::size_t action) const override;

 private:
  std::size_t gates_size() const { return 4 * hidden_ * (inputs_ + hidden_); }
  std::size_t head_offset() const { return gates_size() + 4 * hidden_; }
};

/// One tanh hidden layer on the last input of the sequence.
class FeedForwardQNet final : public QNetwork {
 public:
  FeedForwardQNet(std::size_t inputs, std::size_t hidden, std::size_t actions, std::uint64_t seed);

  std::unique_ptr<QNetwork> clone() const override { return std::make_unique<FeedForwardQNet>(*this); }
  std::string kind() const override { return "feedforward"; }

  Eigen::VectorXd q_values(const Sequence& seq) const override;
  Eigen::VectorXd q_gradient(const Sequence& seq, std::size_t action) const override;
};

std::unique_ptr<QNetwork> make_qnet(const std::string& kind, std::size_t inputs, std::size_t hidden,
                                    std::size_t actions, std::uint64_t seed);

/// Largest relative deviation between q_gradient and central differences.
double q_gradient_check(const QNetwork& net, const Sequence& seq, std::size_t action, double eps = 1e-6);

}  // namespace beamsense
