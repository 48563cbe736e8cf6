#include <cmath>
#include <numbers>

#include "fwpo/envs.hpp"

namespace fwpo::envs {

NetUtilConfig NetUtilConfig::diamond() {
  NetUtilConfig cfg;
  cfg.nodes = 4;
  cfg.edges = {
      {0, 1, 50.0, 1.0}, // e0
      {0, 2, 50.0, 1.5}, // e1
      {1, 3, 50.0, 1.0}, // e2
      {2, 3, 50.0, 1.5}, // e3
      {1, 2, 50.0, 2.0}, // e4
      {0, 3, 50.0, 1.0}, // e5
  };
  cfg.flows = {
      {0, 3, {{0, 2}, {1, 3}}},
      {1, 2, {{4}, {0, 5, 3}}},
  };
  return cfg;
}

void validate(const NetUtilConfig &cfg) {
  if (cfg.nodes < 2 || cfg.edges.empty() || cfg.flows.empty())
    throw std::invalid_argument("netutil: need nodes, edges and flows");
  const int ne = static_cast<int>(cfg.edges.size());
  for (const auto &e : cfg.edges) {
    if (e.u < 0 || e.u >= cfg.nodes || e.v < 0 || e.v >= cfg.nodes || e.u == e.v)
      throw std::invalid_argument("netutil: edge endpoints out of range");
    if (!(e.capacity > 0.0) || !(e.base_latency > 0.0))
      throw std::invalid_argument("netutil: capacities and base latencies must be positive");
  }
  for (const auto &f : cfg.flows) {
    if (f.paths.empty())
      throw std::invalid_argument("netutil: every flow needs at least one path");
    for (const auto &p : f.paths) {
      // Walk the (undirected) edges from src; the walk must end at dst.
      int at = f.src;
      for (int e : p) {
        if (e < 0 || e >= ne)
          throw std::invalid_argument("netutil: path edge index out of range");
        const auto &edge = cfg.edges[e];
        if (edge.u == at)
          at = edge.v;
        else if (edge.v == at)
          at = edge.u;
        else
          throw std::invalid_argument("netutil: path is not a connected walk");
      }
      if (p.empty() || at != f.dst)
        throw std::invalid_argument("netutil: path does not connect its flow's endpoints");
    }
  }
  if (!(cfg.rate_bound > 0.0) || cfg.period < 1 || cfg.episode_length < 1 || !(cfg.eps > 0.0))
    throw std::invalid_argument("netutil: rate_bound, period, episode_length, eps must be positive");
  if (cfg.amplitude < 0.0 || cfg.amplitude >= 1.0)
    throw std::invalid_argument("netutil: amplitude must lie in [0, 1)");
}

NetUtilOutcome netutil_evaluate(const NetUtilConfig &cfg, int phase, const Vector &rates) {
  const int ne = static_cast<int>(cfg.edges.size());
  const int nf = static_cast<int>(cfg.flows.size());
  const double mod =
      1.0 + cfg.amplitude * std::sin(2.0 * std::numbers::pi * phase / cfg.period);

  NetUtilOutcome out;
  out.load = Vector::Zero(ne);
  int k = 0;
  for (const auto &f : cfg.flows)
    for (const auto &p : f.paths) {
      for (int e : p)
        out.load[e] += rates[k];
      ++k;
    }
  out.latency.resize(ne);
  out.drop.resize(ne);
  for (int e = 0; e < ne; ++e) {
    const double rho = std::min(out.load[e] / cfg.edges[e].capacity, 0.99);
    out.latency[e] = cfg.edges[e].base_latency * mod / (1.0 - rho);
    out.drop[e] = std::max(0.0, out.load[e] - cfg.edges[e].capacity);
  }

  out.flow_latency = Vector::Zero(nf);
  out.flow_drop = Vector::Zero(nf);
  out.flow_throughput = Vector::Zero(nf);
  k = 0;
  for (int fi = 0; fi < nf; ++fi) {
    const auto &f = cfg.flows[fi];
    double total = 0.0, weighted = 0.0, plain = 0.0, drop = 0.0;
    for (const auto &p : f.paths) {
      const double r = rates[k++];
      double lat = 0.0;
      for (int e : p) {
        lat += out.latency[e];
        // Each flow carries its rate-proportional share of an edge's drop.
        if (out.drop[e] > 0.0)
          drop += out.drop[e] * r / out.load[e];
      }
      total += r;
      weighted += r * lat;
      plain += lat;
    }
    out.flow_latency[fi] = total > 0.0 ? weighted / total : plain / f.paths.size();
    out.flow_drop[fi] = drop;
    out.flow_throughput[fi] = total - drop;
    const double eps = cfg.eps;
    out.reward += std::log((out.flow_throughput[fi] + eps) /
                           (std::sqrt(drop + eps) * std::pow(out.flow_latency[fi] + eps, 1.5)));
  }
  return out;
}

namespace {

int path_count(const NetUtilConfig &cfg) {
  int n = 0;
  for (const auto &f : cfg.flows)
    n += static_cast<int>(f.paths.size());
  return n;
}

ConstraintSet rate_set(const NetUtilConfig &cfg) {
  const int n = path_count(cfg);
  const int ne = static_cast<int>(cfg.edges.size());
  Matrix A = Matrix::Zero(ne, n);
  Vector b(ne);
  int k = 0;
  for (const auto &f : cfg.flows)
    for (const auto &p : f.paths) {
      for (int e : p)
        A(e, k) += 1.0;
      ++k;
    }
  for (int e = 0; e < ne; ++e)
    b[e] = cfg.edges[e].capacity;
  return ConstraintSet::intersection(
      {ConstraintSet::box(Vector::Zero(n), Vector::Constant(n, cfg.rate_bound)),
       ConstraintSet::halfspaces(A, b)},
      Vector::Zero(n));
}

} // namespace

NetworkUtility::NetworkUtility(NetUtilConfig cfg)
    : cfg_((validate(cfg), std::move(cfg))), action_dim_(path_count(cfg_)),
      set_(rate_set(cfg_)) {}

ConstraintSet NetworkUtility::constraint_of(const Vector &) const { return set_; }

Vector NetworkUtility::encode(const Vector &load) const {
  const int ne = static_cast<int>(cfg_.edges.size());
  const double angle = 2.0 * std::numbers::pi * phase_ / cfg_.period;
  Vector s(2 + ne);
  s[0] = std::sin(angle);
  s[1] = std::cos(angle);
  for (int e = 0; e < ne; ++e)
    s[2 + e] = load[e] / cfg_.edges[e].capacity;
  return s;
}

Vector NetworkUtility::reset(std::uint64_t) {
  t_ = 0;
  phase_ = 0;
  state_ = encode(Vector::Zero(static_cast<int>(cfg_.edges.size())));
  return state_;
}

StepResult NetworkUtility::step(const Vector &action) {
  require_feasible(action);
  const auto out = netutil_evaluate(cfg_, phase_, action);
  phase_ = (phase_ + 1) % cfg_.period;
  ++t_;
  state_ = encode(out.load);
  return StepResult{state_, out.reward, false, t_ >= cfg_.episode_length};
}

std::unique_ptr<Environment> NetworkUtility::clone() const {
  return std::make_unique<NetworkUtility>(*this);
}

} // namespace fwpo::envs
