// Acceptance suite: one PASS/FAIL line per criterion.
//
//   fwpo_acceptance [--only 1,2,...] [--out DIR]
//
// Exit status is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "fwpo/agents.hpp"
#include "fwpo/geometry.hpp"
#include "fwpo/harness.hpp"
#include "fwpo/neural.hpp"
#include "fwpo/tabular.hpp"
#include "oracles.hpp"

using namespace fwpo;
using geometry::ConstraintSet;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char *f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 1. lmo over random bounded polytopes vs vertex enumeration -------------------

Verdict lmo_vs_enumeration() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  std::normal_distribution<double> n01;
  std::uniform_int_distribution<int> dim(1, 4);
  std::bernoulli_distribution coin(0.5);
  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    const int n = dim(rng);
    // A box keeps the set bounded; random cuts with b > 0 keep the origin inside.
    const int extra = std::uniform_int_distribution<int>(0, 10 - 2 * n)(rng);
    Matrix A(2 * n + extra, n);
    Vector b(2 * n + extra);
    A.topRows(n) = Matrix::Identity(n, n);
    A.middleRows(n, n) = -Matrix::Identity(n, n);
    for (int i = 0; i < 2 * n; ++i)
      b[i] = 0.5 + std::abs(n01(rng));
    for (int i = 2 * n; i < 2 * n + extra; ++i) {
      for (int j = 0; j < n; ++j)
        A(i, j) = n01(rng);
      b[i] = 0.2 + std::abs(n01(rng));
    }
    Matrix E(0, n);
    Vector d(0);
    std::vector<ConstraintSet> members{ConstraintSet::halfspaces(A, b)};
    if (n > 1 && coin(rng)) {
      E.resize(1, n);
      for (int j = 0; j < n; ++j)
        E(0, j) = n01(rng);
      d.resize(1);
      d[0] = 0.0;
      members.push_back(ConstraintSet::hyperplanes(E, d));
    }
    const auto set = ConstraintSet::intersection(members, Vector::Zero(n));
    Vector g(n);
    for (int j = 0; j < n; ++j)
      g[j] = n01(rng);
    const Vector x = geometry::lmo(set, g);
    const auto verts = oracle::polytope_vertices(A, b, E, d);
    double err = std::abs(x.dot(g) - oracle::max_linear(verts, g));
    if (((A * x - b).array() > 1e-6).any() ||
        (E.rows() > 0 && (E * x - d).cwiseAbs().maxCoeff() > 1e-6))
      err = std::max(err, 1.0);
    worst = std::max(worst, err);
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-6 && secs < 30.0,
          fmt("200 polytopes, max |objective - brute force| = %.2e (tol 1e-6), %.2f s (limit 30 s)",
              worst, secs)};
}

// 2. Projection vs feasibility-filtered grid ------------------------------------

// Raw description of a random intersection; feasibility is checked here
// without the library.
struct RawSet {
  int n = 0;
  Vector lo, hi;
  bool ball = false, plane = false, l1 = false;
  Vector center;
  double radius = 0;
  Vector e; // e . x = 0
  Vector w;
  double budget = 0;

  bool inequalities_hold(const Vector &x) const {
    if (((x - hi).array() > 0).any() || ((lo - x).array() > 0).any())
      return false;
    if (ball && (x - center).norm() > radius)
      return false;
    if (l1 && w.cwiseProduct(x).cwiseAbs().sum() > budget)
      return false;
    return true;
  }

  ConstraintSet build() const {
    std::vector<ConstraintSet> m{ConstraintSet::box(lo, hi)};
    if (ball)
      m.push_back(ConstraintSet::l2_ball(center, radius));
    if (plane)
      m.push_back(ConstraintSet::hyperplanes(e.transpose(), Vector::Zero(1)));
    if (l1)
      m.push_back(ConstraintSet::weighted_l1(w, budget));
    return ConstraintSet::intersection(m, Vector::Zero(n));
  }
};

RawSet random_raw_set(std::mt19937_64 &rng, int t) {
  std::uniform_real_distribution<double> u(0, 1);
  RawSet s;
  s.n = 1 + t % 3;
  const int n = s.n;
  s.lo.resize(n);
  s.hi.resize(n);
  for (int i = 0; i < n; ++i) {
    s.lo[i] = -0.2 - 0.8 * u(rng);
    s.hi[i] = 0.2 + 0.8 * u(rng);
  }
  // Every fourth case has all four members.
  const bool all = t % 4 == 0;
  s.ball = all || u(rng) < 0.6;
  s.plane = n > 1 && (all || u(rng) < 0.4);
  s.l1 = all || u(rng) < 0.6;
  s.center.resize(n);
  for (int i = 0; i < n; ++i)
    s.center[i] = 0.2 * (u(rng) - 0.5);
  s.radius = s.center.norm() + 0.2 + 0.6 * u(rng); // contains the origin
  s.e.resize(n);
  for (int i = 0; i < n; ++i)
    s.e[i] = u(rng) - 0.5;
  s.e[static_cast<Eigen::Index>(u(rng) * n) % n] += 1.0;
  s.w.resize(n);
  for (int i = 0; i < n; ++i)
    s.w[i] = 0.2 + 1.8 * u(rng);
  s.budget = 0.3 + 1.2 * u(rng);
  return s;
}

// Calls f on every feasible grid point. With a hyperplane the grid covers the
// other coordinates and the pivot coordinate is solved from the equation.
void feasible_grid(const RawSet &s, double h, const std::function<void(const Vector &)> &f) {
  if (!s.plane) {
    oracle::for_grid(s.lo, s.hi, h, [&](const Vector &x) {
      if (s.inequalities_hold(x))
        f(x);
    });
    return;
  }
  Eigen::Index p = 0;
  s.e.cwiseAbs().maxCoeff(&p);
  const int n = s.n;
  Vector lo(n - 1), hi(n - 1);
  for (int i = 0, k = 0; i < n; ++i)
    if (i != p) {
      lo[k] = s.lo[i];
      hi[k++] = s.hi[i];
    }
  oracle::for_grid(lo, hi, h, [&](const Vector &y) {
    Vector x(n);
    double rest = 0.0;
    for (int i = 0, k = 0; i < n; ++i)
      if (i != p) {
        x[i] = y[k++];
        rest += s.e[i] * x[i];
      }
    x[p] = -rest / s.e[p];
    if (s.inequalities_hold(x))
      f(x);
  });
}

Verdict projection_vs_grid() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(202);
  std::normal_distribution<double> n01;
  const double h = 0.02;
  double worst_excess = -1e300, worst_angle = -1e300, worst_feas = 0.0;
  int all_four = 0;
  for (int t = 0; t < 100; ++t) {
    const auto raw = random_raw_set(rng, t);
    all_four += raw.ball && raw.plane && raw.l1;
    const auto set = raw.build();
    Vector z(raw.n);
    for (int i = 0; i < raw.n; ++i)
      z[i] = 1.5 * n01(rng);
    const Vector y = geometry::project(set, z);

    double feas = std::max(0.0, std::max((y - raw.hi).maxCoeff(), (raw.lo - y).maxCoeff()));
    if (raw.ball)
      feas = std::max(feas, (y - raw.center).norm() - raw.radius);
    if (raw.plane)
      feas = std::max(feas, std::abs(raw.e.dot(y)));
    if (raw.l1)
      feas = std::max(feas, raw.w.cwiseProduct(y).cwiseAbs().sum() - raw.budget);
    worst_feas = std::max(worst_feas, feas);

    double best = 1e300, angle = -1e300;
    feasible_grid(raw, h, [&](const Vector &x) {
      best = std::min(best, (x - z).norm());
      angle = std::max(angle, (z - y).dot(x - y));
    });
    const double slack = h * std::sqrt(static_cast<double>(raw.n)) + 1e-6;
    worst_excess = std::max(worst_excess, (y - z).norm() - best - slack);
    worst_angle = std::max(worst_angle, angle);
  }
  const double secs = seconds_since(t0);
  const bool pass = worst_excess <= 0.0 && worst_angle <= 1e-6 && worst_feas <= 1e-6 && secs < 60.0;
  return {pass, fmt("100 projections (%g with all four members): distance excess over grid "
                    "%.2e (<= 0), max obtuse-angle product %.2e (tol 1e-6), %.2f s",
                    all_four, worst_excess + 0.0, worst_angle, secs) +
                    fmt(", max infeasibility %.1e", worst_feas)};
}

// 3 and 4. Tabular FWPO on the synthetic MDP --------------------------------------

struct TabularRun {
  tabular::SmoothMdp mdp;
  tabular::FwpoRun run;
  double seconds = 0;
};

const TabularRun &synthetic_run() {
  static const TabularRun r = [] {
    TabularRun out;
    out.mdp = tabular::synthetic_mdp(0, 0.9);
    Rng rng(1);
    out.mdp.L = tabular::estimate_smoothness(out.mdp, rng, 300);
    const auto t0 = Clock::now();
    // 501 steps give the gaps G_0..G_500 (T = 500); the first 500 policy
    // updates are the monotonicity check.
    out.run = tabular::run_fwpo(out.mdp, tabular::anchor_policy(out.mdp), 501);
    out.seconds = seconds_since(t0);
    return out;
  }();
  return r;
}

Verdict monotonicity() {
  const auto &r = synthetic_run();
  double worst = 0.0;
  const auto &h = r.run.history;
  for (std::size_t k = 1; k < h.size(); ++k)
    worst = std::max(worst, h[k - 1].J - h[k].J);
  worst = std::max(worst, h.back().J - tabular::objective(r.mdp, r.run.policy));
  return {worst <= 1e-9 && r.seconds < 10.0,
          fmt("largest decrease of J over 500 iterations %.2e (tol 1e-9), J %.6f -> %.6f, %.2f s",
              worst, h.front().J, h.back().J, r.seconds)};
}

// Diameter of one synthetic C(s) from its raw description.
double raw_diameter(const ConstraintSet &set) {
  if (const auto *ball = set.get_if<geometry::L2Ball>())
    return 2.0 * ball->radius;
  const auto sys = geometry::flatten(set);
  return oracle::max_pairwise_distance(oracle::polytope_vertices(sys.A, sys.b, sys.E, sys.d));
}

Verdict gap_bound() {
  const auto &r = synthetic_run();
  const auto &mdp = r.mdp;
  double dmax = 0.0;
  for (const auto &c : mdp.constraints)
    dmax = std::max(dmax, raw_diameter(c));
  const double bound = 2.0 * mdp.L * dmax * dmax /
                       (std::pow(1.0 - mdp.gamma, 3) * mdp.mu_min() * mdp.mu_min());
  const auto &h = r.run.history;
  double sum_sq = 0.0, min_gap = 1e300;
  for (std::size_t k = 0; k + 1 < h.size(); ++k)
    sum_sq += h[k].G * h[k].G;
  for (const auto &d : h)
    min_gap = std::min(min_gap, d.G);
  sum_sq += h.back().G * h.back().G;
  const double rate = std::sqrt(bound / 501.0);
  const bool agree = std::abs(bound - tabular::gap_bound(mdp)) <= 1e-9 * bound;
  return {sum_sq <= bound && min_gap <= rate && agree,
          fmt("sum G_k^2 = %.4g <= %.4g; min G_k = %.3e <= %.3e (T = 500)", sum_sq, bound,
              min_gap, rate) +
              (agree ? std::string() : " [library bound disagrees with raw diameters]")};
}

// 5. Quadratic bandit with an interior optimum -------------------------------------

Verdict bandit() {
  Vector lo(2), hi(2), star(2);
  lo << -1, -1;
  hi << 1, 1;
  star << 0.3, -0.2; // the constrained optimum is a* itself
  const auto mdp = tabular::quadratic_bandit(ConstraintSet::box(lo, hi), star, 8.0, 0.1);
  const auto run = tabular::run_fwpo(mdp, tabular::anchor_policy(mdp), 200);
  int first = -1;
  for (std::size_t k = 0; k < run.history.size(); ++k)
    if (run.history[k].G < 1e-3) {
      first = static_cast<int>(k);
      break;
    }
  const double dist = (run.policy.action(0) - star).norm();
  return {first >= 0 && dist < 1e-2,
          fmt("gap < 1e-3 first at iteration %g (limit 200), final gap %.2e, distance to the "
              "known optimum %.2e",
              first, run.history.back().G, dist)};
}

// 6. Backprop vs central differences --------------------------------------------------

double min_kink_distance(const neural::DenseNet &net, const Vector &x) {
  double best = 1e300;
  Vector h = x;
  for (std::size_t k = 0; k < net.layers.size(); ++k) {
    const Vector z = net.layers[k].W * h + net.layers[k].b;
    const bool relu = k + 1 < net.layers.size() || net.output == neural::Activation::Relu;
    if (relu)
      best = std::min(best, z.cwiseAbs().minCoeff());
    h = relu ? Vector(z.cwiseMax(0.0)) : z;
  }
  return best;
}

Verdict gradient_checks() {
  const auto t0 = Clock::now();
  Rng rng(606);
  std::normal_distribution<double> n01;
  std::uniform_int_distribution<int> width(1, 8), depth(0, 3), act(0, 2);
  double worst = 0.0;
  int nets = 0, skipped = 0;
  while (nets < 50) {
    std::vector<int> sizes{width(rng)};
    for (int k = depth(rng); k > 0; --k)
      sizes.push_back(width(rng));
    sizes.push_back(width(rng));
    const auto out = static_cast<neural::Activation>(act(rng));
    const auto net = neural::make_net(sizes, out, rng, 0.5);
    Vector x(sizes.front()), u(sizes.back());
    for (auto &v : x)
      v = n01(rng);
    for (auto &v : u)
      v = n01(rng);
    if (min_kink_distance(net, x) < 1e-4) {
      ++skipped;
      continue;
    }
    const auto g = neural::backward(net, x, u);
    neural::DenseNet probe = net;
    const Vector fd = oracle::fd_gradient(
        [&](const Vector &p) {
          neural::unflatten(probe, p);
          return u.dot(neural::forward(probe, x));
        },
        neural::flatten(net));
    const Vector an = neural::flatten(g.layers);
    for (Eigen::Index i = 0; i < an.size(); ++i)
      worst = std::max(worst, oracle::rel_err(an[i], fd[i]));
    const Vector fdx =
        oracle::fd_gradient([&](const Vector &z) { return u.dot(neural::forward(net, z)); }, x);
    for (Eigen::Index i = 0; i < x.size(); ++i)
      worst = std::max(worst, oracle::rel_err(g.input(i, 0), fdx[i]));
    ++nets;
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-4 && secs < 30.0,
          fmt("50 nets (%g inputs near a kink redrawn), max rel. error %.2e (tol 1e-4), %.2f s",
              skipped, worst, secs)};
}

// 7. Regression onto gradient targets equals plain DDPG -------------------------------

Verdict equivalence() {
  Rng rng(707);
  std::normal_distribution<double> n01;
  const int sd = 4, ad = 3, B = 12;
  const double eta1 = 0.25, eta2 = 0.8;
  const auto actor = neural::make_net({sd, 24, 24, ad}, neural::Activation::Tanh, rng, 0.5);
  const auto critic = neural::make_net({sd + ad, 24, 24, 1}, neural::Activation::Identity, rng, 1.0);
  Matrix S(sd, B);
  for (Eigen::Index i = 0; i < S.size(); ++i)
    S.data()[i] = n01(rng);

  const Matrix pi = neural::forward_batch(actor, S);
  const Matrix targets = pi + eta1 * agents::action_gradients(critic, S, pi);
  auto regressed = actor;
  neural::sgd_step(regressed, agents::regression_gradient(actor, S, targets, 1.0 / (2.0 * B)),
                   eta2);

  auto g = agents::dpg_gradient(actor, critic, S);
  for (auto &l : g.layers) {
    l.W = -l.W;
    l.b = -l.b;
  }
  auto ascended = actor;
  neural::sgd_step(ascended, g, eta1 * eta2);

  const Vector d1 = neural::flatten(regressed) - neural::flatten(actor);
  const Vector d2 = neural::flatten(ascended) - neural::flatten(actor);
  const double diff = (d1 - d2).cwiseAbs().maxCoeff();
  return {diff <= 1e-10 && d2.cwiseAbs().maxCoeff() > 1e-8,
          fmt("max |regression step - DDPG step| = %.2e (tol 1e-10), step size %.2e", diff,
              d2.cwiseAbs().maxCoeff())};
}

// 8. Executed actions always feasible --------------------------------------------------

harness::ExperimentConfig desk_config(const std::string &env, const std::string &algo) {
  std::istringstream in("env.name = " + env + "\nalgo.name = " + algo +
                        "\nalgo.warmup_steps = 1000\ntrain.total_steps = 20000\n"
                        "train.eval_every = 5000\ntrain.eval_episodes = 5\n"
                        "train.checkpoint = false\ntrain.event_log = true\n");
  auto cfg = harness::parse_config(in);
  // Bike allocations and link rates live far outside tanh's range.
  if (env == "bss" || env == "netutil")
    cfg.agent.actor_output = neural::Activation::Identity;
  return cfg;
}

Verdict executed_feasibility(const fs::path &out) {
  const auto t0 = Clock::now();
  long steps = 0, infeasible = 0;
  int runs = 0;
  std::string worst;
  for (const std::string env : {"bss", "netutil", "reacher", "power"}) {
    std::vector<std::string> algos{"nfwpo", "ddpg_projection", "ddpg_shaping"};
    if (env == "bss")
      algos.push_back("fwpo_tabular");
    for (const auto &algo : algos) {
      const auto cfg = desk_config(env, algo);
      const auto run = harness::run_training(cfg, 0, out / "feasibility" / (env + "_" + algo));
      // Recount from the per-step event log.
      std::ifstream in(run.events);
      std::string line;
      std::getline(in, line);
      long n = 0, bad = 0;
      while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string f;
        for (int i = 0; i < 3; ++i)
          std::getline(ls, f, ',');
        bad += f != "1";
        ++n;
      }
      if (n != cfg.total_steps || bad != run.executed_violations)
        ++bad;
      if (bad)
        worst += " " + env + "/" + algo;
      steps += n;
      infeasible += bad;
      ++runs;
    }
  }
  const double secs = seconds_since(t0);
  return {infeasible == 0,
          fmt("%g runs x 20000 steps, %g executed actions outside their set at tol 1e-6, %.0f s",
              runs, static_cast<double>(infeasible), secs) +
              worst};
}

// 9. NFWPO vs DDPG+Projection on the point-mass reacher ---------------------------------

harness::ExperimentConfig trend_config(const std::string &algo) {
  std::istringstream in("env.name = reacher\nalgo.name = " + algo +
                        "\nalgo.noise_sigma = 0.02\nalgo.warmup_steps = 1000\n"
                        "algo.buffer_capacity = 10000\ntrain.total_steps = 50000\n"
                        "train.eval_every = 1000\ntrain.eval_episodes = 10\n"
                        "train.seeds = 0..4\n");
  return harness::parse_config(in);
}

Verdict trend(const fs::path &out) {
  const auto t0 = Clock::now();
  const auto nf = harness::sweep(trend_config("nfwpo"), {0, 1, 2, 3, 4}, out / "trend_nfwpo");
  const double t_nf = seconds_since(t0);
  const auto dp = harness::sweep(trend_config("ddpg_projection"), {0, 1, 2, 3, 4},
                                 out / "trend_ddpg_projection");
  const double secs = seconds_since(t0);
  auto mean_violations = [](const harness::SweepResult &s) {
    double v = 0.0;
    for (const auto &r : s.runs)
      v += static_cast<double>(r.pre_violations);
    return v / static_cast<double>(s.runs.size());
  };
  const double vn = mean_violations(nf), vd = mean_violations(dp);
  const bool ret_ok = nf.final_mean >= dp.final_mean;
  const bool vio_ok = vn <= 0.5 * vd;
  // One core per seed; the budget is 30 min per seed for both algorithms.
  const bool time_ok = secs < 5 * 30 * 60;
  return {ret_ok && vio_ok && time_ok,
          fmt("final-10 return NFWPO %.4f vs DDPG+Projection %.4f", nf.final_mean, dp.final_mean) +
              (ret_ok ? " (ok)" : " (NFWPO lower)") +
              fmt("; pre-projection violations %.0f vs %.0f, ratio %.3f (<= 0.5)", vn, vd,
                  vn / vd) +
              fmt("; %.0f s + %.0f s", t_nf, secs - t_nf)};
}

// 10. Determinism of metrics files ------------------------------------------------------

Verdict determinism(const fs::path &out) {
  int compared = 0, differing = 0;
  auto check = [&](const harness::ExperimentConfig &cfg, const std::string &tag) {
    for (std::uint64_t seed : {0u, 7u}) {
      const auto a = harness::run_training(cfg, seed, out / "determinism" / (tag + "_a"));
      const auto b = harness::run_training(cfg, seed, out / "determinism" / (tag + "_b"));
      ++compared;
      differing += slurp(a.metrics) != slurp(b.metrics) || slurp(a.metrics).empty();
    }
  };
  for (const std::string algo : {"nfwpo", "ddpg_projection", "ddpg_shaping"}) {
    auto cfg = desk_config("power", algo);
    cfg.total_steps = 3000;
    cfg.eval_every = 500;
    cfg.event_log = false;
    check(cfg, "power_" + algo);
  }
  auto tab = desk_config("bss", "fwpo_tabular");
  tab.total_steps = 3000;
  tab.eval_every = 500;
  tab.event_log = false;
  check(tab, "bss_tabular");
  return {differing == 0, fmt("%g pairs of runs, %g with differing metrics CSVs", compared,
                              differing)};
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Acceptance checks"};
  std::string only;
  std::string out = (fs::temp_directory_path() / "fwpo_acceptance").string();
  app.add_option("--only", only, "Comma-separated criteria to run (default: all)");
  app.add_option("--out", out, "Scratch directory for training runs");
  CLI11_PARSE(app, argc, argv);

  std::set<int> wanted;
  if (only.empty()) {
    for (int i = 1; i <= 10; ++i)
      wanted.insert(i);
  } else {
    for (const auto s : harness::parse_seeds(only))
      wanted.insert(static_cast<int>(s));
  }

  const fs::path dir = out;
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"lmo matches vertex enumeration", lmo_vs_enumeration},
      {"projection beats grid, obtuse angle", projection_vs_grid},
      {"tabular FWPO monotone", monotonicity},
      {"tabular FWPO gap bound", gap_bound},
      {"quadratic bandit converges", bandit},
      {"backprop matches finite differences", gradient_checks},
      {"regression update equals DDPG", equivalence},
      {"executed actions feasible", [&] { return executed_feasibility(dir); }},
      {"NFWPO vs DDPG+Projection trend", [&] { return trend(dir); }},
      {"byte-identical metrics", [&] { return determinism(dir); }},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!wanted.count(id))
      continue;
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception &e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failed += !v.pass;
    std::printf("criterion %2d %s: %s: %s\n", id, v.pass ? "PASS" : "FAIL",
                criteria[i].first.c_str(), v.detail.c_str());
    std::fflush(stdout);
  }
  return failed;
}
