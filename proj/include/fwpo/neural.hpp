#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "fwpo/rng.hpp"
#include "fwpo/types.hpp"

/// Small dense networks with hand-written backpropagation, Adam and Polyak
/// averaging. Batches are stored column-wise: one sample per column.
namespace fwpo::neural {

enum class Activation { Identity, Relu, Tanh };

Activation parse_activation(const std::string &name);
const char *to_string(Activation a);

struct Layer {
  Matrix W; // out x in
  Vector b; // out
};

struct DenseNet {
  std::vector<int> sizes; // input, hidden..., output
  std::vector<Layer> layers;
  Activation output = Activation::Identity; // hidden layers are always ReLU

  int input_size() const { return sizes.front(); }
  int output_size() const { return sizes.back(); }
  std::size_t parameter_count() const;
};

/// Weights uniform in +-1/sqrt(fan_in), final layer uniform in +-final_scale.
DenseNet make_net(const std::vector<int> &sizes, Activation output, Rng &rng,
                  double final_scale = 3e-3);
DenseNet zero_net(const std::vector<int> &sizes, Activation output);

struct Gradients {
  std::vector<Layer> layers; // summed over the batch
  Matrix input;              // d<upstream, f(x)>/dx, one column per sample
};

Gradients zero_gradients(const DenseNet &net);

Vector forward(const DenseNet &net, const Vector &x);
Matrix forward_batch(const DenseNet &net, const Matrix &X);

/// Gradients of sum_j <U_j, f(X_j)> with respect to the parameters and inputs.
Gradients backward_batch(const DenseNet &net, const Matrix &X, const Matrix &U);
Gradients backward(const DenseNet &net, const Vector &x, const Vector &u);

struct AdamState {
  std::vector<Layer> m, v;
  long step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

AdamState make_adam(const DenseNet &net);

/// Descends: theta -= lr * m_hat / (sqrt(v_hat) + eps).
void adam_step(DenseNet &net, const Gradients &grads, AdamState &state, double lr);

/// Plain gradient descent: theta -= lr * grad.
void sgd_step(DenseNet &net, const Gradients &grads, double lr);

/// target <- tau * online + (1 - tau) * target.
void soft_update(DenseNet &target, const DenseNet &online, double tau);

/// All parameters in serialization order: per layer, W row-major then b.
Vector flatten(const DenseNet &net);
Vector flatten(const std::vector<Layer> &layers);
void unflatten(DenseNet &net, const Vector &params);

/// Text format: "densenet", the layer sizes, the output activation, then
/// every parameter in flatten() order with 17 significant digits.
void save(const DenseNet &net, std::ostream &out);
DenseNet load(std::istream &in);

} // namespace fwpo::neural
