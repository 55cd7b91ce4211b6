#include "regtv/jet.hpp"

#include "regtv/errors.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <algorithm>
#include <string>

namespace regtv {

namespace {

void enumerate_degree(int dim, int var, int remaining, std::vector<int>& current,
                      std::vector<int>& out) {
  if (var == dim - 1) {
    current[var] = remaining;
    out.insert(out.end(), current.begin(), current.end());
    return;
  }
  for (int e = remaining; e >= 0; --e) {
    current[var] = e;
    enumerate_degree(dim, var + 1, remaining - e, current, out);
  }
  current[var] = 0;
}

double factorial_of(std::span<const int> alpha) {
  double f = 1.0;
  for (int e : alpha) {
    for (int k = 2; k <= e; ++k) f *= k;
  }
  return f;
}

std::mutex& layout_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

JetLayout::JetLayout(int dim, int order) : dim_(dim), order_(order) {
  if (dim < 0 || order < 0) throw ArgumentError("jet layout: dimension and order must be nonnegative");
  std::vector<int> current(static_cast<std::size_t>(std::max(dim, 1)), 0);
  degree_offset_.push_back(0);
  for (int g = 0; g <= order; ++g) {
    if (dim == 0) {
      if (g == 0) degree_.push_back(0);
    } else {
      const std::size_t before = exponents_.size();
      enumerate_degree(dim, 0, g, current, exponents_);
      const std::size_t added = (exponents_.size() - before) / static_cast<std::size_t>(dim);
      degree_.insert(degree_.end(), added, g);
    }
    degree_offset_.push_back(static_cast<int>(degree_.size()));
  }

  auto& lookup = lookup_;
  for (int i = 0; i < size(); ++i) {
    auto e = exponents(i);
    lookup.emplace(std::vector<int>(e.begin(), e.end()), i);
    factorial_.push_back(factorial_of(e));
  }

  shift_.assign(static_cast<std::size_t>(size()) * dim_, -1);
  std::vector<int> work(static_cast<std::size_t>(dim_));
  for (int i = 0; i < size(); ++i) {
    if (degree_[i] == order_) continue;
    auto e = exponents(i);
    for (int v = 0; v < dim_; ++v) {
      work.assign(e.begin(), e.end());
      ++work[v];
      shift_[static_cast<std::size_t>(i) * dim_ + v] = lookup.at(work);
    }
  }

  for (int i = 0; i < size(); ++i) {
    const int limit = degree_offset_[order_ - degree_[i] + 1];
    auto ei = exponents(i);
    for (int j = 0; j < limit; ++j) {
      auto ej = exponents(j);
      for (int v = 0; v < dim_; ++v) work[v] = ei[v] + ej[v];
      const int out = dim_ == 0 ? 0 : lookup.at(work);
      products_.push_back({i, j, out, factorial_[out] / (factorial_[i] * factorial_[j])});
    }
  }
  // Keep terms grouped by output for cache-friendly accumulation.
  std::stable_sort(products_.begin(), products_.end(),
                   [](const ProductTerm& a, const ProductTerm& b) { return a.out < b.out; });
}

std::shared_ptr<const JetLayout> JetLayout::get(int dim, int order) {
  if (dim < 0 || order < 0) throw ArgumentError("jet layout: dimension and order must be nonnegative");
  static std::map<std::pair<int, int>, std::shared_ptr<const JetLayout>> cache;
  std::lock_guard<std::mutex> lock(layout_mutex());
  auto key = std::make_pair(dim, order);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto layout = std::make_shared<const JetLayout>(dim, order);
  cache.emplace(key, layout);
  return layout;
}

int JetLayout::index_of(std::span<const int> alpha) const {
  if (static_cast<int>(alpha.size()) != dim_) {
    throw ArgumentError("multi-index has " + std::to_string(alpha.size()) + " entries, layout has " +
                        std::to_string(dim_) + " variables");
  }
  int deg = 0;
  for (int e : alpha) {
    if (e < 0) throw ArgumentError("multi-index entries must be nonnegative");
    deg += e;
  }
  if (deg > order_) return -1;
  return lookup_.at(std::vector<int>(alpha.begin(), alpha.end()));
}

// ---------------------------------------------------------------------------

Jet::Jet(std::shared_ptr<const JetLayout> layout, PointPtr point, Eigen::VectorXd values)
    : layout_(std::move(layout)), point_(std::move(point)), values_(std::move(values)) {
  if (values_.size() != layout_->size()) throw ArgumentError("jet: value table does not match layout size");
  if (point_->size() != layout_->dim()) throw ArgumentError("jet: base point dimension does not match layout");
}

Jet Jet::constant(double c, std::shared_ptr<const JetLayout> layout, PointPtr point) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(layout->size());
  v[0] = c;
  return Jet(std::move(layout), std::move(point), std::move(v));
}

double Jet::derivative(std::span<const int> alpha) const {
  const int idx = layout_->index_of(alpha);
  if (idx < 0) throw CapabilityError("jet: derivative order exceeds jet order " + std::to_string(order()));
  return values_[idx];
}

Jet Jet::truncated(int order) const {
  if (order < 0) throw ArgumentError("jet: negative truncation order");
  if (order >= this->order()) return *this;
  auto layout = JetLayout::get(dim(), order);
  return Jet(layout, point_, values_.head(layout->size()));
}

Jet Jet::partial(int var) const {
  if (var < 0 || var >= dim()) throw ArgumentError("jet: partial derivative variable out of range");
  if (order() == 0) throw CapabilityError("jet: cannot differentiate an order-0 jet");
  auto layout = JetLayout::get(dim(), order() - 1);
  Eigen::VectorXd v(layout->size());
  for (int i = 0; i < layout->size(); ++i) v[i] = values_[layout_->shifted(i, var)];
  return Jet(layout, point_, std::move(v));
}

Eigen::VectorXd Jet::taylor_coefficients() const {
  Eigen::VectorXd c(values_.size());
  for (int i = 0; i < values_.size(); ++i) c[i] = values_[i] / layout_->factorial(i);
  return c;
}

Jet Jet::from_taylor(std::shared_ptr<const JetLayout> layout, PointPtr point, const Eigen::VectorXd& coefficients) {
  Eigen::VectorXd v(coefficients.size());
  for (int i = 0; i < coefficients.size(); ++i) v[i] = coefficients[i] * layout->factorial(i);
  return Jet(std::move(layout), std::move(point), std::move(v));
}

namespace {

void check_compatible(const Jet& a, const Jet& b) {
  if (a.dim() != b.dim()) throw ArgumentError("jet: operands have different dimensions");
  if (a.point_ptr() != b.point_ptr() && a.point() != b.point()) {
    throw ArgumentError("jet: operands are expanded at different base points");
  }
}

const std::shared_ptr<const JetLayout>& common_layout(const Jet& a, const Jet& b) {
  return a.order() <= b.order() ? a.layout_ptr() : b.layout_ptr();
}

Eigen::VectorXd product_values(const JetLayout& layout, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(layout.size());
  for (const auto& t : layout.product_terms()) out[t.out] += t.coeff * a[t.lhs] * b[t.rhs];
  return out;
}

}  // namespace

Jet& Jet::operator+=(const Jet& other) {
  check_compatible(*this, other);
  if (other.order() < order()) *this = truncated(other.order());
  values_ += other.values_.head(values_.size());
  return *this;
}

Jet& Jet::operator-=(const Jet& other) {
  check_compatible(*this, other);
  if (other.order() < order()) *this = truncated(other.order());
  values_ -= other.values_.head(values_.size());
  return *this;
}

Jet& Jet::operator*=(const Jet& other) {
  *this = *this * other;
  return *this;
}

std::vector<Jet> lift(const Eigen::VectorXd& point, int order) {
  if (order < 0) throw ArgumentError("lift: order must be nonnegative");
  const int dim = static_cast<int>(point.size());
  auto layout = JetLayout::get(dim, order);
  auto shared_point = std::make_shared<const Eigen::VectorXd>(point);
  std::vector<Jet> coords;
  coords.reserve(static_cast<std::size_t>(dim));
  std::vector<int> unit(static_cast<std::size_t>(dim), 0);
  for (int i = 0; i < dim; ++i) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(layout->size());
    v[0] = point[i];
    if (order >= 1) {
      unit[i] = 1;
      v[layout->index_of(unit)] = 1.0;
      unit[i] = 0;
    }
    coords.emplace_back(layout, shared_point, std::move(v));
  }
  return coords;
}

Jet lift_constant(double c, const Eigen::VectorXd& point, int order) {
  if (order < 0) throw ArgumentError("lift: order must be nonnegative");
  return Jet::constant(c, JetLayout::get(static_cast<int>(point.size()), order),
                       std::make_shared<const Eigen::VectorXd>(point));
}

Jet operator+(const Jet& a, const Jet& b) {
  Jet r = a;
  r += b;
  return r;
}

Jet operator-(const Jet& a, const Jet& b) {
  Jet r = a;
  r -= b;
  return r;
}

Jet operator*(const Jet& a, const Jet& b) {
  check_compatible(a, b);
  const auto& layout = common_layout(a, b);
  return Jet(layout, a.point_ptr(), product_values(*layout, a.values(), b.values()));
}

Jet operator/(const Jet& a, const Jet& b) { return a * reciprocal(b); }

Jet operator-(const Jet& a) { return a * -1.0; }

Jet operator+(const Jet& a, double c) {
  Jet r = a;
  r += c;
  return r;
}
Jet operator+(double c, const Jet& a) { return a + c; }
Jet operator-(const Jet& a, double c) { return a + (-c); }
Jet operator-(double c, const Jet& a) { return (-a) + c; }
Jet operator*(const Jet& a, double c) {
  Jet r = a;
  r *= c;
  return r;
}
Jet operator*(double c, const Jet& a) { return a * c; }
Jet operator/(const Jet& a, double c) {
  if (c == 0.0) throw SingularityError("jet: division by zero scalar");
  return a * (1.0 / c);
}
Jet operator/(double c, const Jet& a) { return reciprocal(a) * c; }

Jet compose(const Jet& g, std::span<const double> taylor) {
  const int k_max = g.order();
  auto coeff = [&](int k) { return k < static_cast<int>(taylor.size()) ? taylor[k] : 0.0; };
  if (k_max == 0) return Jet::constant(coeff(0), g.layout_ptr(), g.point_ptr());
  Eigen::VectorXd u = g.values();
  u[0] = 0.0;
  const JetLayout& layout = g.layout();
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(layout.size());
  acc[0] = coeff(k_max);
  for (int k = k_max - 1; k >= 0; --k) {
    acc = product_values(layout, acc, u);
    acc[0] += coeff(k);
  }
  return Jet(g.layout_ptr(), g.point_ptr(), std::move(acc));
}

namespace {

std::vector<double> exp_series(double x, int order) {
  std::vector<double> t(static_cast<std::size_t>(order) + 1);
  double e = std::exp(x);
  for (int k = 0; k <= order; ++k) {
    t[k] = e;
    e /= (k + 1);
  }
  return t;
}

std::vector<double> trig_series(double x, int order, bool cosine) {
  const double s = std::sin(x);
  const double c = std::cos(x);
  // Cycle of derivatives starting from sin: sin, cos, -sin, -cos.
  const double cycle_sin[4] = {s, c, -s, -c};
  const double cycle_cos[4] = {c, -s, -c, s};
  std::vector<double> t(static_cast<std::size_t>(order) + 1);
  double inv_fact = 1.0;
  for (int k = 0; k <= order; ++k) {
    t[k] = (cosine ? cycle_cos[k % 4] : cycle_sin[k % 4]) * inv_fact;
    inv_fact /= (k + 1);
  }
  return t;
}

bool is_integer(double p) { return std::floor(p) == p; }

std::vector<double> pow_series(double x, double p, int order) {
  std::vector<double> t(static_cast<std::size_t>(order) + 1, 0.0);
  if (x < 0.0 && !is_integer(p)) throw DomainError("pow: negative base with non-integer exponent");
  double binom = 1.0;
  for (int k = 0; k <= order; ++k) {
    if (k > 0) binom *= (p - k + 1) / k;
    if (binom == 0.0) break;
    const double e = p - k;
    if (x == 0.0) {
      if (e < 0.0) throw SingularityError("pow: derivative of x^p is unbounded at x = 0");
      t[k] = (e == 0.0) ? binom : 0.0;
    } else {
      t[k] = binom * std::pow(x, e);
    }
  }
  return t;
}

}  // namespace

Jet exp(const Jet& a) { return compose(a, exp_series(a.value(), a.order())); }

Jet log(const Jet& a) {
  const double x = a.value();
  if (!(x > 0.0)) throw DomainError("log: argument must be positive, got " + std::to_string(x));
  std::vector<double> t(static_cast<std::size_t>(a.order()) + 1);
  t[0] = std::log(x);
  double xp = 1.0;
  for (int k = 1; k <= a.order(); ++k) {
    xp *= x;
    t[k] = ((k % 2 == 1) ? 1.0 : -1.0) / (k * xp);
  }
  return compose(a, t);
}

Jet sin(const Jet& a) { return compose(a, trig_series(a.value(), a.order(), false)); }
Jet cos(const Jet& a) { return compose(a, trig_series(a.value(), a.order(), true)); }

Jet sqrt(const Jet& a) {
  if (a.value() < 0.0) throw DomainError("sqrt: negative argument");
  return pow(a, 0.5);
}

Jet pow(const Jet& a, double exponent) { return compose(a, pow_series(a.value(), exponent, a.order())); }

Jet reciprocal(const Jet& a) {
  if (a.value() == 0.0) throw SingularityError("division by a jet whose value is zero");
  return pow(a, -1.0);
}

double smooth_step(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  const double e0 = std::exp(-1.0 / t);
  const double e1 = std::exp(-1.0 / (1.0 - t));
  return e0 / (e0 + e1);
}

Jet smooth_step(const Jet& a) {
  const double t0 = a.value();
  const int order = a.order();
  std::vector<double> t(static_cast<std::size_t>(order) + 1, 0.0);
  if (t0 >= 1.0) {
    t[0] = 1.0;
  } else if (t0 > 0.0) {
    // Univariate expansion of S at t0, then composed with a.
    const Jet u = lift(Eigen::VectorXd::Constant(1, t0), order)[0];
    const Jet e0 = exp(-reciprocal(u));
    const Jet e1 = exp(-reciprocal(1.0 - u));
    const Eigen::VectorXd c = (e0 / (e0 + e1)).taylor_coefficients();
    for (int k = 0; k <= order; ++k) t[k] = c[k];
  }
  return compose(a, t);
}

Jet combine(Elementary op, std::span<const Jet> args, double exponent) {
  auto need = [&](std::size_t n) {
    if (args.size() != n) {
      throw ArgumentError("combine: operation expects " + std::to_string(n) + " arguments, got " +
                          std::to_string(args.size()));
    }
  };
  switch (op) {
    case Elementary::add: need(2); return args[0] + args[1];
    case Elementary::sub: need(2); return args[0] - args[1];
    case Elementary::mul: need(2); return args[0] * args[1];
    case Elementary::div: need(2); return args[0] / args[1];
    case Elementary::pow: need(1); return pow(args[0], exponent);
    case Elementary::exp: need(1); return exp(args[0]);
    case Elementary::log: need(1); return log(args[0]);
    case Elementary::sin: need(1); return sin(args[0]);
    case Elementary::cos: need(1); return cos(args[0]);
    case Elementary::sqrt: need(1); return sqrt(args[0]);
    case Elementary::smooth_step: need(1); return smooth_step(args[0]);
  }
  throw ArgumentError("combine: unknown operation");
}

}  // namespace regtv
