#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "fwpo/neural.hpp"

namespace fwpo::neural {

Activation parse_activation(const std::string &name) {
  if (name == "identity")
    return Activation::Identity;
  if (name == "relu")
    return Activation::Relu;
  if (name == "tanh")
    return Activation::Tanh;
  throw std::invalid_argument("unknown activation '" + name + "'");
}

const char *to_string(Activation a) {
  switch (a) {
  case Activation::Identity:
    return "identity";
  case Activation::Relu:
    return "relu";
  case Activation::Tanh:
    return "tanh";
  }
  return "identity";
}

std::size_t DenseNet::parameter_count() const {
  std::size_t n = 0;
  for (const auto &l : layers)
    n += static_cast<std::size_t>(l.W.size() + l.b.size());
  return n;
}

namespace {

void check_sizes(const std::vector<int> &sizes) {
  if (sizes.size() < 2)
    throw std::invalid_argument("DenseNet: need at least input and output sizes");
  for (int s : sizes)
    if (s < 1)
      throw std::invalid_argument("DenseNet: layer sizes must be positive");
}

// tanh rounds to exactly +-1 for large inputs; keep outputs strictly inside.
const double kTanhMax = std::nextafter(1.0, 0.0);

void activate(Matrix &Z, Activation a) {
  switch (a) {
  case Activation::Identity:
    break;
  case Activation::Relu:
    Z = Z.cwiseMax(0.0);
    break;
  case Activation::Tanh:
    Z = Z.array().tanh().min(kTanhMax).max(-kTanhMax).matrix();
    break;
  }
}

// Multiplies the upstream gradient by the activation derivative, given the
// activation output Y.
void activate_backward(Matrix &G, const Matrix &Y, Activation a) {
  switch (a) {
  case Activation::Identity:
    break;
  case Activation::Relu:
    G = (Y.array() > 0.0).select(G, 0.0);
    break;
  case Activation::Tanh:
    G = (G.array() * (1.0 - Y.array().square())).matrix();
    break;
  }
}

Activation layer_activation(const DenseNet &net, std::size_t i) {
  return i + 1 == net.layers.size() ? net.output : Activation::Relu;
}

} // namespace

DenseNet zero_net(const std::vector<int> &sizes, Activation output) {
  check_sizes(sizes);
  DenseNet net{sizes, {}, output};
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i)
    net.layers.push_back(Layer{Matrix::Zero(sizes[i + 1], sizes[i]), Vector::Zero(sizes[i + 1])});
  return net;
}

DenseNet make_net(const std::vector<int> &sizes, Activation output, Rng &rng,
                  double final_scale) {
  DenseNet net = zero_net(sizes, output);
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const double bound = i + 1 == net.layers.size() ? final_scale : 1.0 / std::sqrt(sizes[i]);
    std::uniform_real_distribution<double> u(-bound, bound);
    auto &l = net.layers[i];
    // Row-major fill so the draw order matches the serialization order.
    for (Eigen::Index r = 0; r < l.W.rows(); ++r)
      for (Eigen::Index c = 0; c < l.W.cols(); ++c)
        l.W(r, c) = u(rng);
    for (Eigen::Index r = 0; r < l.b.size(); ++r)
      l.b[r] = u(rng);
  }
  return net;
}

Gradients zero_gradients(const DenseNet &net) {
  Gradients g;
  for (const auto &l : net.layers)
    g.layers.push_back(Layer{Matrix::Zero(l.W.rows(), l.W.cols()), Vector::Zero(l.b.size())});
  g.input = Matrix::Zero(net.input_size(), 0);
  return g;
}

namespace {

std::vector<Matrix> forward_all(const DenseNet &net, const Matrix &X) {
  if (X.rows() != net.input_size())
    throw std::invalid_argument("DenseNet: input dimension mismatch");
  if (!X.allFinite())
    throw std::invalid_argument("DenseNet: input is not finite");
  std::vector<Matrix> acts;
  acts.reserve(net.layers.size() + 1);
  acts.push_back(X);
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const auto &l = net.layers[i];
    Matrix Z = l.W * acts.back();
    Z.colwise() += l.b;
    activate(Z, layer_activation(net, i));
    acts.push_back(std::move(Z));
  }
  return acts;
}

} // namespace

Matrix forward_batch(const DenseNet &net, const Matrix &X) { return forward_all(net, X).back(); }

Vector forward(const DenseNet &net, const Vector &x) {
  return forward_batch(net, Matrix(x)).col(0);
}

Gradients backward_batch(const DenseNet &net, const Matrix &X, const Matrix &U) {
  if (U.rows() != net.output_size() || U.cols() != X.cols())
    throw std::invalid_argument("DenseNet: upstream dimension mismatch");
  const auto acts = forward_all(net, X);
  Gradients g;
  g.layers.resize(net.layers.size());
  Matrix G = U;
  for (std::size_t k = net.layers.size(); k-- > 0;) {
    activate_backward(G, acts[k + 1], layer_activation(net, k));
    g.layers[k].W = G * acts[k].transpose();
    g.layers[k].b = G.rowwise().sum();
    G = net.layers[k].W.transpose() * G;
  }
  g.input = std::move(G);
  return g;
}

Gradients backward(const DenseNet &net, const Vector &x, const Vector &u) {
  return backward_batch(net, Matrix(x), Matrix(u));
}

AdamState make_adam(const DenseNet &net) {
  AdamState s;
  const Gradients z = zero_gradients(net);
  s.m = z.layers;
  s.v = z.layers;
  return s;
}

void adam_step(DenseNet &net, const Gradients &grads, AdamState &state, double lr) {
  if (state.m.size() != net.layers.size() || grads.layers.size() != net.layers.size())
    throw std::invalid_argument("adam_step: shape mismatch");
  ++state.step;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  auto update = [&](auto &param, const auto &grad, auto &m, auto &v) {
    m = state.beta1 * m + (1.0 - state.beta1) * grad;
    v = state.beta2 * v + (1.0 - state.beta2) * grad.cwiseProduct(grad);
    param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + state.eps);
  };
  for (std::size_t k = 0; k < net.layers.size(); ++k) {
    update(net.layers[k].W, grads.layers[k].W, state.m[k].W, state.v[k].W);
    update(net.layers[k].b, grads.layers[k].b, state.m[k].b, state.v[k].b);
  }
}

void sgd_step(DenseNet &net, const Gradients &grads, double lr) {
  for (std::size_t k = 0; k < net.layers.size(); ++k) {
    net.layers[k].W -= lr * grads.layers[k].W;
    net.layers[k].b -= lr * grads.layers[k].b;
  }
}

void soft_update(DenseNet &target, const DenseNet &online, double tau) {
  if (target.sizes != online.sizes)
    throw std::invalid_argument("soft_update: shape mismatch");
  if (!(tau >= 0.0 && tau <= 1.0))
    throw std::invalid_argument("soft_update: tau must lie in [0, 1]");
  for (std::size_t k = 0; k < target.layers.size(); ++k) {
    target.layers[k].W = tau * online.layers[k].W + (1.0 - tau) * target.layers[k].W;
    target.layers[k].b = tau * online.layers[k].b + (1.0 - tau) * target.layers[k].b;
  }
}

Vector flatten(const std::vector<Layer> &layers) {
  Eigen::Index n = 0;
  for (const auto &l : layers)
    n += l.W.size() + l.b.size();
  Vector out(n);
  Eigen::Index i = 0;
  for (const auto &l : layers) {
    for (Eigen::Index r = 0; r < l.W.rows(); ++r)
      for (Eigen::Index c = 0; c < l.W.cols(); ++c)
        out[i++] = l.W(r, c);
    for (Eigen::Index r = 0; r < l.b.size(); ++r)
      out[i++] = l.b[r];
  }
  return out;
}

Vector flatten(const DenseNet &net) { return flatten(net.layers); }

void unflatten(DenseNet &net, const Vector &params) {
  if (static_cast<std::size_t>(params.size()) != net.parameter_count())
    throw std::invalid_argument("unflatten: parameter count mismatch");
  Eigen::Index i = 0;
  for (auto &l : net.layers) {
    for (Eigen::Index r = 0; r < l.W.rows(); ++r)
      for (Eigen::Index c = 0; c < l.W.cols(); ++c)
        l.W(r, c) = params[i++];
    for (Eigen::Index r = 0; r < l.b.size(); ++r)
      l.b[r] = params[i++];
  }
}

void save(const DenseNet &net, std::ostream &out) {
  out << "densenet " << net.sizes.size();
  for (int s : net.sizes)
    out << ' ' << s;
  out << ' ' << to_string(net.output) << '\n';
  char buf[40];
  for (double x : flatten(net)) {
    std::snprintf(buf, sizeof buf, "%.17g", x);
    out << buf << '\n';
  }
}

DenseNet load(std::istream &in) {
  std::string tag;
  std::size_t count = 0;
  if (!(in >> tag >> count) || tag != "densenet" || count < 2 || count > 64)
    throw std::runtime_error("load: not a densenet snapshot");
  std::vector<int> sizes(count);
  for (auto &s : sizes)
    if (!(in >> s))
      throw std::runtime_error("load: truncated layer sizes");
  std::string act;
  if (!(in >> act))
    throw std::runtime_error("load: missing activation");
  DenseNet net = zero_net(sizes, parse_activation(act));
  Vector params(static_cast<Eigen::Index>(net.parameter_count()));
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    std::string tok;
    if (!(in >> tok))
      throw std::runtime_error("load: truncated parameters");
    params[i] = std::stod(tok);
  }
  unflatten(net, params);
  return net;
}

} // namespace fwpo::neural
