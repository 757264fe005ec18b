#ifndef LOGSIEVE_MLP_HPP
#define LOGSIEVE_MLP_HPP

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace logsieve {
namespace mlp {

// One training example: input vector and class label in [0, d_out).
struct Example {
  std::vector<double> x;
  int label = 0;
};

struct TrainConfig {
  double learning_rate = 1e-2;
  int epochs = 50;
  int batch_size = 32;
  std::uint64_t seed = 0;
  // Optional per-class loss weights (size d_out). Empty = unweighted.
  std::vector<double> class_weights;
};

// Per-layer gradients, same shapes as the model parameters.
struct Gradients {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;
};

// Dense feed-forward stack: ReLU on hidden layers, softmax on the output
// layer, trained with plain SGD on softmax cross-entropy (natural log).
class MlpModel {
 public:
  // Zero-initialized parameters (softmax of zeros = uniform output).
  explicit MlpModel(std::vector<int> dims);
  // He-style uniform init U(-sqrt(6/fan_in), +sqrt(6/fan_in)), zero
  // biases; deterministic given the seed.
  static MlpModel init(std::vector<int> dims, std::uint64_t seed);

  const std::vector<int>& dims() const { return dims_; }
  int layer_count() const { return static_cast<int>(weights_.size()); }
  int input_dim() const { return dims_.front(); }
  int output_dim() const { return dims_.back(); }

  // Weight matrix of layer l, row-major [out][in]; mutable overloads let
  // tests nudge single parameters for finite differences.
  const std::vector<double>& weights(int l) const { return weights_[l]; }
  const std::vector<double>& biases(int l) const { return biases_[l]; }
  std::vector<double>& weights(int l) { return weights_[l]; }
  std::vector<double>& biases(int l) { return biases_[l]; }

  // Class distribution for one input; entries >= 0, sum 1. Softmax is
  // computed with max subtraction. Throws ShapeError on a length
  // mismatch.
  std::vector<double> forward(const std::vector<double>& x) const;

  // Mean cross-entropy -ln p(label) over the batch. Throws
  // EmptyBatchError / ShapeError / Error (bad label).
  double loss(const std::vector<Example>& batch) const;
  double loss(const std::vector<Example>& batch,
              const std::vector<double>& class_weights) const;

  // Exact analytic gradients of loss(batch); softmax and cross-entropy
  // fuse into (p - one_hot) at the output.
  Gradients backward(const std::vector<Example>& batch) const;
  Gradients backward(const std::vector<Example>& batch,
                     const std::vector<double>& class_weights) const;

  // One SGD step: params -= lr * grads.
  void apply(const Gradients& g, double learning_rate);

  // Minibatch SGD over the dataset; seeded shuffle each epoch. The trace
  // receives the full-dataset loss after every epoch when non-null.
  static MlpModel train(const std::vector<Example>& dataset,
                        std::vector<int> dims, const TrainConfig& cfg,
                        std::vector<double>* epoch_loss_trace = nullptr);

  void save(std::ostream& os) const;
  static MlpModel load(std::istream& is);

 private:
  std::vector<int> dims_;
  std::vector<std::vector<double>> weights_;  // [l]: dims[l+1] x dims[l]
  std::vector<std::vector<double>> biases_;   // [l]: dims[l+1]
};

// Index of the largest entry; ties break toward the lowest index.
int argmax(const std::vector<double>& v);

}  // namespace mlp
}  // namespace logsieve

#endif  // LOGSIEVE_MLP_HPP
