#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "fwpo/harness.hpp"

namespace fwpo::harness {

Learner parse_learner(const std::string &name) {
  if (name == "fwpo_tabular")
    return Learner::FwpoTabular;
  try {
    switch (agents::parse_algo(name)) {
    case agents::Algo::Nfwpo:
      return Learner::Nfwpo;
    case agents::Algo::DdpgProjection:
      return Learner::DdpgProjection;
    case agents::Algo::DdpgShaping:
      return Learner::DdpgShaping;
    }
  } catch (const std::invalid_argument &) {
  }
  throw ConfigError("unknown algorithm '" + name + "'");
}

const char *to_string(Learner l) {
  switch (l) {
  case Learner::Nfwpo:
    return "nfwpo";
  case Learner::DdpgProjection:
    return "ddpg_projection";
  case Learner::DdpgShaping:
    return "ddpg_shaping";
  case Learner::FwpoTabular:
    return "fwpo_tabular";
  }
  return "nfwpo";
}

namespace {

agents::Algo algo_of(Learner l) {
  switch (l) {
  case Learner::DdpgProjection:
    return agents::Algo::DdpgProjection;
  case Learner::DdpgShaping:
    return agents::Algo::DdpgShaping;
  default:
    return agents::Algo::Nfwpo;
  }
}

[[noreturn]] void bad_value(const std::string &key, const std::string &value, const char *what) {
  throw ConfigError(key + ": '" + value + "' is not " + what);
}

double to_double(const std::string &key, const std::string &v) {
  char *end = nullptr;
  errno = 0;
  const double x = std::strtod(v.c_str(), &end);
  if (v.empty() || *end != '\0' || errno == ERANGE)
    bad_value(key, v, "a number");
  return x;
}

long to_long(const std::string &key, const std::string &v) {
  char *end = nullptr;
  errno = 0;
  const long x = std::strtol(v.c_str(), &end, 10);
  if (v.empty() || *end != '\0' || errno == ERANGE)
    bad_value(key, v, "an integer");
  return x;
}

int to_int(const std::string &key, const std::string &v) {
  const long x = to_long(key, v);
  if (x < INT32_MIN || x > INT32_MAX)
    bad_value(key, v, "a 32-bit integer");
  return static_cast<int>(x);
}

bool to_bool(const std::string &key, const std::string &v) {
  if (v == "true" || v == "1")
    return true;
  if (v == "false" || v == "0")
    return false;
  bad_value(key, v, "a boolean");
}

std::vector<std::string> split(const std::string &s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep))
    out.push_back(cur);
  return out;
}

std::string trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos)
    return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<int> to_int_list(const std::string &key, const std::string &v) {
  std::vector<int> out;
  if (trim(v).empty())
    return out;
  for (const auto &part : split(v, ','))
    out.push_back(to_int(key, trim(part)));
  return out;
}

Vector to_vector(const std::string &key, const std::string &v) {
  const auto parts = split(v, ',');
  Vector out(static_cast<Eigen::Index>(parts.size()));
  for (std::size_t i = 0; i < parts.size(); ++i)
    out[static_cast<Eigen::Index>(i)] = to_double(key, trim(parts[i]));
  return out;
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string fmt(bool b) { return b ? "true" : "false"; }
std::string fmt(long x) { return std::to_string(x); }
std::string fmt(int x) { return std::to_string(x); }

template <class Seq> std::string join(const Seq &xs) {
  std::string out;
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(xs.size()); ++i)
    out += (i ? "," : "") + fmt(xs[i]);
  return out;
}

struct Key {
  const char *name;
  void (*set)(ExperimentConfig &, const std::string &key, const std::string &value);
  std::string (*get)(const ExperimentConfig &);
};

#define FWPO_KEY(NAME, FIELD, PARSE)                                                               \
  Key {                                                                                            \
    NAME, [](ExperimentConfig &c, const std::string &k, const std::string &v) { c.FIELD = PARSE(k, v); }, \
        [](const ExperimentConfig &c) { return fmt(c.FIELD); }                                     \
  }

const std::vector<Key> &keys() {
  static const std::vector<Key> table = {
      {"env.name", [](ExperimentConfig &c, const std::string &, const std::string &v) { c.env = v; },
       [](const ExperimentConfig &c) { return c.env; }},
      FWPO_KEY("env.bss.stations", bss.n, to_int),
      FWPO_KEY("env.bss.bikes", bss.m, to_int),
      FWPO_KEY("env.bss.capacity", bss.C, to_int),
      FWPO_KEY("env.bss.w_move", bss.w_move, to_double),
      FWPO_KEY("env.bss.w_lost", bss.w_lost, to_double),
      FWPO_KEY("env.bss.w_over", bss.w_over, to_double),
      FWPO_KEY("env.bss.demand_lo", bss.d_lo, to_int),
      FWPO_KEY("env.bss.demand_hi", bss.d_hi, to_int),
      FWPO_KEY("env.bss.episode_length", bss.episode_length, to_int),
      {"env.netutil.topology",
       [](ExperimentConfig &c, const std::string &k, const std::string &v) {
         // Only one topology is built in; the key exists so configs and
         // manifests name it explicitly.
         if (v != "diamond")
           bad_value(k, v, "a known topology (diamond)");
         (void)c;
       },
       [](const ExperimentConfig &) { return std::string("diamond"); }},
      {"env.netutil.capacity",
       [](ExperimentConfig &c, const std::string &k, const std::string &v) {
         const double cap = to_double(k, v);
         for (auto &e : c.netutil.edges)
           e.capacity = cap;
       },
       [](const ExperimentConfig &c) {
         return c.netutil.edges.empty() ? std::string("0") : fmt(c.netutil.edges.front().capacity);
       }},
      FWPO_KEY("env.netutil.rate_bound", netutil.rate_bound, to_double),
      FWPO_KEY("env.netutil.amplitude", netutil.amplitude, to_double),
      FWPO_KEY("env.netutil.period", netutil.period, to_int),
      FWPO_KEY("env.netutil.episode_length", netutil.episode_length, to_int),
      FWPO_KEY("env.netutil.eps", netutil.eps, to_double),
      {"env.pointmass.dim",
       [](ExperimentConfig &c, const std::string &k, const std::string &v) {
         c.pointmass.dim = to_int(k, v);
         if (c.pointmass.dim > 0 && c.pointmass.goal.size() != c.pointmass.dim)
           c.pointmass.goal = Vector::Zero(c.pointmass.dim);
       },
       [](const ExperimentConfig &c) { return fmt(c.pointmass.dim); }},
      {"env.pointmass.goal",
       [](ExperimentConfig &c, const std::string &k, const std::string &v) {
         c.pointmass.goal = to_vector(k, v);
       },
       [](const ExperimentConfig &c) { return join(c.pointmass.goal); }},
      FWPO_KEY("env.pointmass.dt", pointmass.dt, to_double),
      FWPO_KEY("env.pointmass.friction", pointmass.friction, to_double),
      FWPO_KEY("env.pointmass.start_radius", pointmass.start_radius, to_double),
      FWPO_KEY("env.pointmass.episode_length", pointmass.episode_length, to_int),
      FWPO_KEY("env.pointmass.goal_tolerance", pointmass.goal_tolerance, to_double),
      FWPO_KEY("env.pointmass.sum_bound", pointmass.sum_bound, to_double),
      FWPO_KEY("env.pointmass.energy", pointmass.energy, to_double),
      FWPO_KEY("env.pointmass.bound", pointmass.bound, to_double),
      FWPO_KEY("env.pointmass.power", pointmass.power, to_double),
      {"algo.name", [](ExperimentConfig &, const std::string &, const std::string &) {},
       [](const ExperimentConfig &c) { return std::string(to_string(c.learner)); }},
      FWPO_KEY("algo.fw_lr", agent.fw_lr, to_double),
      FWPO_KEY("algo.actor_lr", agent.actor_lr, to_double),
      FWPO_KEY("algo.critic_lr", agent.critic_lr, to_double),
      FWPO_KEY("algo.tau", agent.tau, to_double),
      FWPO_KEY("algo.noise_sigma", agent.noise_sigma, to_double),
      FWPO_KEY("algo.batch_size", agent.batch_size, to_int),
      FWPO_KEY("algo.gamma", agent.gamma, to_double),
      FWPO_KEY("algo.shaping_weight", agent.shaping_weight, to_double),
      FWPO_KEY("algo.warmup_steps", agent.warmup_steps, to_int),
      FWPO_KEY("algo.actor_update_period", agent.actor_update_period, to_int),
      {"algo.buffer_capacity",
       [](ExperimentConfig &c, const std::string &k, const std::string &v) {
         const long n = to_long(k, v);
         if (n < 1)
           bad_value(k, v, "a positive integer");
         c.agent.buffer_capacity = static_cast<std::size_t>(n);
       },
       [](const ExperimentConfig &c) { return std::to_string(c.agent.buffer_capacity); }},
      {"algo.hidden",
       [](ExperimentConfig &c, const std::string &k, const std::string &v) {
         c.agent.hidden = to_int_list(k, v);
       },
       [](const ExperimentConfig &c) { return join(c.agent.hidden); }},
      {"algo.actor_output",
       [](ExperimentConfig &c, const std::string &k, const std::string &v) {
         try {
           c.agent.actor_output = neural::parse_activation(v);
         } catch (const std::invalid_argument &) {
           bad_value(k, v, "an activation (identity, relu, tanh)");
         }
       },
       [](const ExperimentConfig &c) { return std::string(neural::to_string(c.agent.actor_output)); }},
      FWPO_KEY("algo.epsilon", tabular.epsilon, to_double),
      FWPO_KEY("algo.target_period", tabular.target_period, to_int),
      FWPO_KEY("train.total_steps", total_steps, to_long),
      FWPO_KEY("train.eval_every", eval_every, to_long),
      FWPO_KEY("train.eval_episodes", eval_episodes, to_int),
      {"train.seeds",
       [](ExperimentConfig &c, const std::string &, const std::string &v) { c.seeds = parse_seeds(v); },
       [](const ExperimentConfig &c) {
         std::string out;
         for (std::size_t i = 0; i < c.seeds.size(); ++i)
           out += (i ? "," : "") + std::to_string(c.seeds[i]);
         return out;
       }},
      {"train.out_dir", [](ExperimentConfig &c, const std::string &, const std::string &v) { c.out_dir = v; },
       [](const ExperimentConfig &c) { return c.out_dir; }},
      FWPO_KEY("train.wall_clock", wall_clock, to_bool),
      FWPO_KEY("train.event_log", event_log, to_bool),
      FWPO_KEY("train.checkpoint", checkpoint, to_bool),
      {"train.parallel",
       [](ExperimentConfig &c, const std::string &k, const std::string &v) {
         c.exec = to_bool(k, v) ? Exec::Parallel : Exec::Serial;
       },
       [](const ExperimentConfig &c) { return fmt(c.exec == Exec::Parallel); }},
  };
  return table;
}

#undef FWPO_KEY

const Key *find_key(const std::string &name) {
  for (const auto &k : keys())
    if (name == k.name)
      return &k;
  return nullptr;
}

} // namespace

std::vector<std::uint64_t> parse_seeds(const std::string &text) {
  std::vector<std::uint64_t> out;
  auto number = [&](const std::string &s) -> std::uint64_t {
    const std::string t = trim(s);
    char *end = nullptr;
    errno = 0;
    const unsigned long long x = std::strtoull(t.c_str(), &end, 10);
    if (t.empty() || t[0] == '-' || *end != '\0' || errno == ERANGE)
      throw ConfigError("seeds: '" + text + "' is not a seed list like 0..4 or 0,1,2");
    return x;
  };
  for (const auto &part : split(text, ',')) {
    const auto dots = part.find("..");
    if (dots == std::string::npos) {
      out.push_back(number(part));
      continue;
    }
    const auto lo = number(part.substr(0, dots)), hi = number(part.substr(dots + 2));
    if (hi < lo || hi - lo > 100000)
      throw ConfigError("seeds: bad range '" + trim(part) + "'");
    for (auto s = lo; s <= hi; ++s)
      out.push_back(s);
  }
  if (out.empty())
    throw ConfigError("seeds: empty list");
  return out;
}

ExperimentConfig parse_config(std::istream &in) {
  std::vector<std::pair<std::string, std::string>> entries;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos)
      line.resize(hash);
    line = trim(line);
    if (line.empty())
      continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (!find_key(key))
      throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    for (const auto &e : entries)
      if (e.first == key)
        throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    entries.emplace_back(std::move(key), std::move(value));
  }

  ExperimentConfig cfg;
  for (const auto &[k, v] : entries)
    if (k == "algo.name")
      cfg.learner = parse_learner(v);
  cfg.agent = agents::AgentConfig::defaults(algo_of(cfg.learner));
  for (const auto &[k, v] : entries)
    find_key(k)->set(cfg, k, v);
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot open config file '" + path.string() + "'");
  try {
    return parse_config(in);
  } catch (const ConfigError &e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void validate(const ExperimentConfig &cfg) {
  auto check = [](bool ok, const std::string &msg) {
    if (!ok)
      throw ConfigError(msg);
  };
  check(cfg.env == "bss" || cfg.env == "netutil" || cfg.env == "reacher" || cfg.env == "power",
        "env.name must be one of bss, netutil, reacher, power");
  check(cfg.learner != Learner::FwpoTabular || cfg.env == "bss",
        "algo.name = fwpo_tabular is only available for env.name = bss");
  try {
    agents::validate(cfg.agent);
    make_env(cfg);
  } catch (const std::invalid_argument &e) {
    throw ConfigError(e.what());
  }
  check(cfg.agent.hidden.size() <= 8, "algo.hidden: at most 8 hidden layers");
  check(cfg.tabular.epsilon >= 0.0 && cfg.tabular.epsilon <= 1.0, "algo.epsilon must lie in [0, 1]");
  check(cfg.tabular.target_period >= 1, "algo.target_period must be at least 1");
  check(cfg.total_steps >= cfg.agent.warmup_steps, "train.total_steps must be at least algo.warmup_steps");
  check(cfg.eval_every >= 1, "train.eval_every must be at least 1");
  check(cfg.eval_episodes >= 1, "train.eval_episodes must be at least 1");
  check(!cfg.seeds.empty(), "train.seeds must not be empty");
}

std::map<std::string, std::string> resolved(const ExperimentConfig &cfg) {
  std::map<std::string, std::string> out;
  for (const auto &k : keys())
    out[k.name] = k.get(cfg);
  return out;
}

std::string to_text(const ExperimentConfig &cfg) {
  std::string out;
  for (const auto &[k, v] : resolved(cfg))
    out += k + " = " + v + "\n";
  return out;
}

std::unique_ptr<envs::Environment> make_env(const ExperimentConfig &cfg) {
  if (cfg.env == "bss")
    return std::make_unique<envs::BikeSharing>(cfg.bss);
  if (cfg.env == "netutil")
    return std::make_unique<envs::NetworkUtility>(cfg.netutil);
  if (cfg.env == "reacher" || cfg.env == "power") {
    auto pm = cfg.pointmass;
    pm.variant = cfg.env == "reacher" ? envs::PointMassVariant::Reacher : envs::PointMassVariant::Power;
    return std::make_unique<envs::PointMass>(pm);
  }
  throw ConfigError("unknown environment '" + cfg.env + "'");
}

} // namespace fwpo::harness
