#pragma once

#include <Eigen/Core>

#include <map>
#include <memory>
#include <span>
#include <vector>

namespace regtv {

inline constexpr int kDefaultMaxOrder = 6;

// Exponent vector (one entry per variable) or, in the weight/derivative APIs,
// a list of component indices; the meaning is stated at each use site.
using MultiIndex = std::vector<int>;

// Dense graded-lexicographic enumeration of every multi-index of total degree
// <= order in `dim` variables, together with the product and shift tables used
// by jet arithmetic. Layouts are immutable and shared; get() caches them.
//
// The enumeration for order K is a prefix of the one for order K+1, so a jet
// is truncated by dropping the tail of its value vector.
class JetLayout {
 public:
  struct ProductTerm {
    int lhs;
    int rhs;
    int out;
    double coeff;  // gamma! / (alpha! beta!) for raw-derivative storage
  };

  static std::shared_ptr<const JetLayout> get(int dim, int order);

  int dim() const { return dim_; }
  int order() const { return order_; }
  int size() const { return static_cast<int>(degree_.size()); }

  std::span<const int> exponents(int i) const {
    return {exponents_.data() + static_cast<std::size_t>(i) * dim_, static_cast<std::size_t>(dim_)};
  }
  int degree(int i) const { return degree_[i]; }
  // First index of the block of total degree `g` (g may equal order + 1).
  int degree_offset(int g) const { return degree_offset_[g]; }
  double factorial(int i) const { return factorial_[i]; }

  // Index of `alpha` (exponent vector), or -1 when its degree exceeds order().
  int index_of(std::span<const int> alpha) const;
  // Index of exponents(i) + e_var, or -1 when that exceeds order().
  int shifted(int i, int var) const { return shift_[static_cast<std::size_t>(i) * dim_ + var]; }

  std::span<const ProductTerm> product_terms() const { return products_; }

  JetLayout(int dim, int order);

 private:
  int dim_;
  int order_;
  std::vector<int> exponents_;
  std::vector<int> degree_;
  std::vector<int> degree_offset_;
  std::vector<double> factorial_;
  std::vector<int> shift_;
  std::vector<ProductTerm> products_;
  std::map<std::vector<int>, int> lookup_;
};

// Truncated table of all partial derivatives d^alpha g(x), |alpha| <= order,
// of a smooth function g at a fixed base point x. Values are raw derivatives
// (not Taylor coefficients). Binary operations between jets of different
// order produce a jet of the smaller order.
class Jet {
 public:
  using PointPtr = std::shared_ptr<const Eigen::VectorXd>;

  Jet(std::shared_ptr<const JetLayout> layout, PointPtr point, Eigen::VectorXd values);

  static Jet constant(double c, std::shared_ptr<const JetLayout> layout, PointPtr point);

  int dim() const { return layout_->dim(); }
  int order() const { return layout_->order(); }
  double value() const { return values_[0]; }
  const Eigen::VectorXd& values() const { return values_; }
  const Eigen::VectorXd& point() const { return *point_; }
  const PointPtr& point_ptr() const { return point_; }
  const JetLayout& layout() const { return *layout_; }
  const std::shared_ptr<const JetLayout>& layout_ptr() const { return layout_; }

  // d^alpha g(x) for an exponent vector alpha; CapabilityError past order().
  double derivative(std::span<const int> alpha) const;

  Jet truncated(int order) const;
  // Jet of d g / d x_var, one order lower.
  Jet partial(int var) const;
  Jet zero_like() const { return constant(0.0, layout_, point_); }
  bool is_zero() const { return values_.isZero(0.0); }

  // Taylor coefficients c_alpha = d^alpha g / alpha! in layout order.
  Eigen::VectorXd taylor_coefficients() const;
  static Jet from_taylor(std::shared_ptr<const JetLayout> layout, PointPtr point,
                         const Eigen::VectorXd& coefficients);

  Jet& operator+=(const Jet& other);
  Jet& operator-=(const Jet& other);
  Jet& operator*=(const Jet& other);
  Jet& operator+=(double c) {
    values_[0] += c;
    return *this;
  }
  Jet& operator-=(double c) {
    values_[0] -= c;
    return *this;
  }
  Jet& operator*=(double c) {
    values_ *= c;
    return *this;
  }

 private:
  std::shared_ptr<const JetLayout> layout_;
  PointPtr point_;
  Eigen::VectorXd values_;
};

// Coordinate jets of the identity chart at `point`: jet i has value point[i]
// and gradient e_i.
std::vector<Jet> lift(const Eigen::VectorXd& point, int order);
Jet lift_constant(double c, const Eigen::VectorXd& point, int order);

Jet operator+(const Jet& a, const Jet& b);
Jet operator-(const Jet& a, const Jet& b);
Jet operator*(const Jet& a, const Jet& b);
Jet operator/(const Jet& a, const Jet& b);
Jet operator-(const Jet& a);
Jet operator+(const Jet& a, double c);
Jet operator+(double c, const Jet& a);
Jet operator-(const Jet& a, double c);
Jet operator-(double c, const Jet& a);
Jet operator*(const Jet& a, double c);
Jet operator*(double c, const Jet& a);
Jet operator/(const Jet& a, double c);
Jet operator/(double c, const Jet& a);

Jet exp(const Jet& a);
Jet log(const Jet& a);
Jet sin(const Jet& a);
Jet cos(const Jet& a);
Jet sqrt(const Jet& a);
Jet pow(const Jet& a, double exponent);
Jet reciprocal(const Jet& a);
// C-infinity step S(t) = e(t) / (e(t) + e(1 - t)), e(t) = exp(-1/t) for t > 0:
// 0 for t <= 0, 1 for t >= 1, all derivatives vanish at both junctions.
Jet smooth_step(const Jet& a);
double smooth_step(double t);

// f(g) where taylor[k] = f^(k)(g(x)) / k!; entries past taylor.size() are zero.
Jet compose(const Jet& g, std::span<const double> taylor);

enum class Elementary { add, sub, mul, div, pow, exp, log, sin, cos, sqrt, smooth_step };

// Dispatcher over the closed elementary set. `exponent` is used by pow only.
Jet combine(Elementary op, std::span<const Jet> args, double exponent = 0.0);

}  // namespace regtv
