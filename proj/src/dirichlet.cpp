#include "regtv/dirichlet.hpp"

#include "regtv/errors.hpp"

#include <string>

namespace regtv {

Jet gamma(const Jet& f, const Jet& g) {
  if (f.dim() != g.dim()) throw ArgumentError("gamma: operands have different dimensions");
  if (f.order() < 1 || g.order() < 1) throw CapabilityError("gamma: operands need order >= 1");
  Jet acc = f.partial(0) * g.partial(0);
  for (int i = 1; i < f.dim(); ++i) acc += f.partial(i) * g.partial(i);
  return acc;
}

Jet coordinate_jet(int i, const Jet& like) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(like.layout().size());
  v[0] = like.point()[i];
  if (like.order() >= 1) v[like.layout().shifted(0, i)] = 1.0;
  return Jet(like.layout_ptr(), like.point_ptr(), std::move(v));
}

Jet ou_generator(const Jet& f) {
  if (f.order() < 2) throw CapabilityError("ou_generator: operand needs order >= 2");
  Jet acc = f.zero_like().truncated(f.order() - 2);
  for (int i = 0; i < f.dim(); ++i) {
    const Jet di = f.partial(i);
    acc += di.partial(i);
    acc -= coordinate_jet(i, di) * di;
  }
  return acc;
}

Jet gamma(const Functional& f, const Functional& g, const Eigen::VectorXd& point, int order) {
  return gamma(f.component(point, order + 1), g.component(point, order + 1));
}

Jet ou_generator(const Functional& f, const Eigen::VectorXd& point, int order) {
  return ou_generator(f.component(point, order + 2));
}

namespace {

JetMatrix minor_of(const JetMatrix& m, int row, int col) {
  JetMatrix out;
  for (int i = 0; i < static_cast<int>(m.size()); ++i) {
    if (i == row) continue;
    std::vector<Jet> r;
    for (int j = 0; j < static_cast<int>(m.size()); ++j) {
      if (j != col) r.push_back(m[i][j]);
    }
    out.push_back(std::move(r));
  }
  return out;
}

void check_square(const JetMatrix& m) {
  const std::size_t d = m.size();
  if (d == 0) throw ArgumentError("determinant of an empty matrix");
  if (d > static_cast<std::size_t>(kMaxCofactorDim)) {
    throw ArgumentError("jet-valued determinant supports dimension <= " + std::to_string(kMaxCofactorDim));
  }
  for (const auto& r : m) {
    if (r.size() != d) throw ArgumentError("jet matrix is not square");
  }
}

}  // namespace

Jet determinant(const JetMatrix& m) {
  check_square(m);
  const int d = static_cast<int>(m.size());
  if (d == 1) return m[0][0];
  if (d == 2) return m[0][0] * m[1][1] - m[0][1] * m[1][0];
  Jet acc = m[0][0] * determinant(minor_of(m, 0, 0));
  for (int j = 1; j < d; ++j) {
    Jet term = m[0][j] * determinant(minor_of(m, 0, j));
    if (j % 2 == 0) acc += term;
    else acc -= term;
  }
  return acc;
}

JetMatrix adjugate(const JetMatrix& m) {
  check_square(m);
  const int d = static_cast<int>(m.size());
  JetMatrix adj(d);
  if (d == 1) {
    adj[0].push_back(m[0][0].zero_like() + 1.0);
    return adj;
  }
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      Jet c = determinant(minor_of(m, j, i));
      if ((i + j) % 2 == 1) c *= -1.0;
      adj[i].push_back(std::move(c));
    }
  }
  return adj;
}

Eigen::MatrixXd CovarianceMatrix::value() const {
  const int d = dim();
  Eigen::MatrixXd v(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) v(i, j) = entries[i][j].value();
  }
  return v;
}

CovarianceMatrix malliavin_matrix(const std::vector<Jet>& f) {
  const int d = static_cast<int>(f.size());
  if (d == 0) throw ArgumentError("malliavin_matrix: empty functional");
  if (d > kMaxCofactorDim) throw ArgumentError("malliavin_matrix: output dimension above cofactor limit");
  JetMatrix entries(d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      if (j < i) entries[i].push_back(entries[j][i]);
      else entries[i].push_back(gamma(f[i], f[j]));
    }
  }
  Jet det = determinant(entries);
  return {std::move(entries), std::move(det)};
}

CovarianceMatrix malliavin_matrix(const Functional& f, const Eigen::VectorXd& point, int order) {
  return malliavin_matrix(f.evaluate(point, order + 1));
}

namespace {

void check_eta(double eta) {
  if (!(eta > 0.0)) throw ArgumentError("cutoff level eta must be positive");
}

}  // namespace

double smooth_step(StepKind kind, double eta, double x) {
  check_eta(eta);
  if (kind == StepKind::psi) return smooth_step((x - 0.5 * eta) / (0.5 * eta));
  return 1.0 - smooth_step((x - eta) / eta);
}

Jet smooth_step(StepKind kind, double eta, const Jet& x) {
  check_eta(eta);
  if (kind == StepKind::psi) return smooth_step((x - 0.5 * eta) / (0.5 * eta));
  return 1.0 - smooth_step((x - eta) / eta);
}

Jet localized_inverse(const Jet& f, double eta) {
  check_eta(eta);
  if (f.value() <= 0.5 * eta) return f.zero_like();
  return smooth_step(StepKind::psi, eta, f) * reciprocal(f);
}

double localized_inverse(double f, double eta) {
  check_eta(eta);
  if (f <= 0.5 * eta) return 0.0;
  return smooth_step(StepKind::psi, eta, f) / f;
}

GaussianSpace::GaussianSpace(int dim, int quadrature_order, std::uint64_t seed, std::size_t mc_samples)
    : dim_(dim), quadrature_order_(quadrature_order), seed_(seed), mc_samples_(mc_samples) {
  if (dim < 1) throw ArgumentError("GaussianSpace: dimension must be positive");
  if (quadrature_order < 2) throw ArgumentError("GaussianSpace: quadrature order must be at least 2");
  rule_ = gauss_hermite(quadrature_order);
}

Estimate GaussianSpace::expectation(const std::function<double(const Eigen::VectorXd&)>& g) const {
  if (dim_ <= kMaxCofactorDim) return expectation(g, rule_);
  return monte_carlo(g, mc_samples_);
}

Estimate GaussianSpace::expectation(const std::function<double(const Eigen::VectorXd&)>& g,
                                    const GaussianRule& rule) const {
  return {tensor_expectation(rule, dim_, g), 0.0, true};
}

Estimate GaussianSpace::monte_carlo(const std::function<double(const Eigen::VectorXd&)>& g, std::size_t n) const {
  const Eigen::MatrixXd x = sample(n);
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  for_each_block(n, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      v[static_cast<Eigen::Index>(i)] = g(x.row(static_cast<Eigen::Index>(i)).transpose());
    }
  });
  return mean_estimate(v);
}

Eigen::MatrixXd GaussianSpace::sample(std::size_t n) const { return standard_normals(seed_, n, dim_); }

}  // namespace regtv
