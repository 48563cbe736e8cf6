#include "fwpo/constraint_text.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <map>
#include <memory>
#include <stdexcept>
#include <variant>
#include <vector>

namespace fwpo::geometry {
namespace {

struct Value;
using List = std::vector<Value>;
struct Call {
  std::string name;
  std::map<std::string, Value> args;
};
struct Value {
  std::variant<double, List, std::shared_ptr<Call>> v;
};

class Parser {
public:
  explicit Parser(std::string_view s) : s_(s) {}

  Value parse_top() {
    Value v = value();
    skip();
    if (pos_ != s_.size())
      fail("trailing characters");
    return v;
  }

private:
  [[noreturn]] void fail(const std::string &msg) const {
    throw std::invalid_argument("constraint set text, offset " + std::to_string(pos_) + ": " +
                                msg);
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_])))
      ++pos_;
  }

  bool peek(char c) {
    skip();
    return pos_ < s_.size() && s_[pos_] == c;
  }

  void expect(char c) {
    if (!peek(c))
      fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  std::string ident() {
    skip();
    const auto start = pos_;
    while (pos_ < s_.size() &&
           (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
      ++pos_;
    if (start == pos_)
      fail("expected identifier");
    return std::string(s_.substr(start, pos_ - start));
  }

  Value value() {
    skip();
    if (pos_ >= s_.size())
      fail("unexpected end of input");
    const char c = s_[pos_];
    if (c == '[') {
      ++pos_;
      List items;
      if (!peek(']')) {
        items.push_back(value());
        while (peek(',')) {
          ++pos_;
          items.push_back(value());
        }
      }
      expect(']');
      return Value{std::move(items)};
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      auto call = std::make_shared<Call>();
      call->name = ident();
      expect('(');
      if (!peek(')')) {
        do {
          if (peek(','))
            ++pos_;
          std::string key = ident();
          expect('=');
          if (call->args.count(key))
            fail("duplicate argument '" + key + "'");
          call->args.emplace(std::move(key), value());
        } while (peek(','));
      }
      expect(')');
      return Value{std::move(call)};
    }
    double x = 0.0;
    const char *begin = s_.data() + pos_;
    const auto [ptr, ec] = std::from_chars(begin, s_.data() + s_.size(), x);
    if (ec != std::errc())
      fail("expected number");
    pos_ += static_cast<std::size_t>(ptr - begin);
    return Value{x};
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

[[noreturn]] void bad(const std::string &msg) { throw std::invalid_argument(msg); }

double as_number(const Value &v, const std::string &what) {
  if (const auto *d = std::get_if<double>(&v.v))
    return *d;
  bad(what + ": expected a number");
}

Vector as_vector(const Value &v, const std::string &what) {
  const auto *l = std::get_if<List>(&v.v);
  if (!l)
    bad(what + ": expected a list of numbers");
  Vector out(static_cast<Eigen::Index>(l->size()));
  for (std::size_t i = 0; i < l->size(); ++i)
    out[static_cast<Eigen::Index>(i)] = as_number((*l)[i], what);
  return out;
}

Matrix as_matrix(const Value &v, const std::string &what) {
  const auto *l = std::get_if<List>(&v.v);
  if (!l || l->empty())
    bad(what + ": expected a nonempty list of rows");
  std::vector<Vector> rows;
  for (const auto &r : *l)
    rows.push_back(as_vector(r, what));
  Matrix out(static_cast<Eigen::Index>(rows.size()), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != out.cols())
      bad(what + ": ragged matrix");
    out.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  }
  return out;
}

const Value &arg(const Call &c, const std::string &key) {
  const auto it = c.args.find(key);
  if (it == c.args.end())
    bad(c.name + ": missing argument '" + key + "'");
  return it->second;
}

void only(const Call &c, std::initializer_list<const char *> keys) {
  for (const auto &[k, _] : c.args) {
    bool known = false;
    for (const char *key : keys)
      known = known || k == key;
    if (!known)
      bad(c.name + ": unknown argument '" + k + "'");
  }
}

ConstraintSet build(const Value &v) {
  const auto *cp = std::get_if<std::shared_ptr<Call>>(&v.v);
  if (!cp)
    bad("expected a set expression such as box(...)");
  const Call &c = **cp;
  if (c.name == "box") {
    only(c, {"lo", "hi"});
    return ConstraintSet::box(as_vector(arg(c, "lo"), "box.lo"), as_vector(arg(c, "hi"), "box.hi"));
  }
  if (c.name == "halfspaces") {
    only(c, {"A", "b"});
    return ConstraintSet::halfspaces(as_matrix(arg(c, "A"), "halfspaces.A"),
                                     as_vector(arg(c, "b"), "halfspaces.b"));
  }
  if (c.name == "hyperplanes") {
    only(c, {"E", "d"});
    return ConstraintSet::hyperplanes(as_matrix(arg(c, "E"), "hyperplanes.E"),
                                      as_vector(arg(c, "d"), "hyperplanes.d"));
  }
  if (c.name == "l2_ball") {
    only(c, {"center", "radius"});
    return ConstraintSet::l2_ball(as_vector(arg(c, "center"), "l2_ball.center"),
                                  as_number(arg(c, "radius"), "l2_ball.radius"));
  }
  if (c.name == "quadratic_groups") {
    only(c, {"dim", "groups", "radii"});
    const double dim = as_number(arg(c, "dim"), "quadratic_groups.dim");
    const auto *gl = std::get_if<List>(&arg(c, "groups").v);
    if (!gl)
      bad("quadratic_groups.groups: expected a list of index lists");
    std::vector<std::vector<int>> groups;
    for (const auto &g : *gl) {
      const Vector idx = as_vector(g, "quadratic_groups.groups");
      std::vector<int> group;
      for (double x : idx) {
        if (x != static_cast<int>(x))
          bad("quadratic_groups.groups: indices must be integers");
        group.push_back(static_cast<int>(x));
      }
      groups.push_back(std::move(group));
    }
    const Vector radii = as_vector(arg(c, "radii"), "quadratic_groups.radii");
    return ConstraintSet::quadratic_groups(static_cast<int>(dim), std::move(groups),
                                           std::vector<double>(radii.begin(), radii.end()));
  }
  if (c.name == "weighted_l1") {
    only(c, {"weights", "budget"});
    return ConstraintSet::weighted_l1(as_vector(arg(c, "weights"), "weighted_l1.weights"),
                                      as_number(arg(c, "budget"), "weighted_l1.budget"));
  }
  if (c.name == "intersection") {
    only(c, {"anchor", "members"});
    const auto *ml = std::get_if<List>(&arg(c, "members").v);
    if (!ml)
      bad("intersection.members: expected a list of sets");
    std::vector<ConstraintSet> members;
    for (const auto &m : *ml)
      members.push_back(build(m));
    return ConstraintSet::intersection(std::move(members),
                                       as_vector(arg(c, "anchor"), "intersection.anchor"));
  }
  bad("unknown set kind '" + c.name + "'");
}

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string vec(const Vector &v) {
  std::string s = "[";
  for (Eigen::Index i = 0; i < v.size(); ++i)
    s += (i ? "," : "") + num(v[i]);
  return s + "]";
}

std::string mat(const Matrix &m) {
  std::string s = "[";
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    s += (i ? "," : "") + vec(m.row(i).transpose());
  return s + "]";
}

} // namespace

ConstraintSet parse_constraint_set(std::string_view text) {
  return build(Parser(text).parse_top());
}

std::string to_text(const ConstraintSet &set) {
  return std::visit(
      [&](const auto &s) -> std::string {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Box>) {
          return "box(lo=" + vec(s.lo) + ",hi=" + vec(s.hi) + ")";
        } else if constexpr (std::is_same_v<T, Halfspaces>) {
          return "halfspaces(A=" + mat(s.A) + ",b=" + vec(s.b) + ")";
        } else if constexpr (std::is_same_v<T, Hyperplanes>) {
          return "hyperplanes(E=" + mat(s.E) + ",d=" + vec(s.d) + ")";
        } else if constexpr (std::is_same_v<T, L2Ball>) {
          return "l2_ball(center=" + vec(s.center) + ",radius=" + num(s.radius) + ")";
        } else if constexpr (std::is_same_v<T, QuadraticGroups>) {
          std::string g = "[";
          for (std::size_t k = 0; k < s.groups.size(); ++k) {
            g += k ? ",[" : "[";
            for (std::size_t i = 0; i < s.groups[k].size(); ++i)
              g += (i ? "," : "") + std::to_string(s.groups[k][i]);
            g += "]";
          }
          g += "]";
          return "quadratic_groups(dim=" + std::to_string(s.dim) + ",groups=" + g +
                 ",radii=" + vec(Eigen::Map<const Vector>(s.radii.data(),
                                                          static_cast<Eigen::Index>(s.radii.size()))) +
                 ")";
        } else if constexpr (std::is_same_v<T, WeightedL1>) {
          return "weighted_l1(weights=" + vec(s.weights) + ",budget=" + num(s.budget) + ")";
        } else {
          std::string m = "[";
          for (std::size_t k = 0; k < s.members.size(); ++k)
            m += (k ? "," : "") + to_text(s.members[k]);
          return "intersection(anchor=" + vec(s.anchor) + ",members=" + m + "])";
        }
      },
      set.node());
}

} // namespace fwpo::geometry
