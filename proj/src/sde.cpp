#include "regtv/sde.hpp"

#include "regtv/errors.hpp"

#include <Eigen/Eigenvalues>

#include <array>
#include <cmath>

namespace regtv {

namespace {

constexpr int kMaxState = 4;

// First-order dual number in up to kMaxState variables (state Jacobians).
struct Dual {
  double v = 0.0;
  std::array<double, kMaxState> g{};
};

Dual operator+(Dual a, const Dual& b) {
  a.v += b.v;
  for (int i = 0; i < kMaxState; ++i) a.g[i] += b.g[i];
  return a;
}
Dual operator*(Dual a, double c) {
  a.v *= c;
  for (double& x : a.g) x *= c;
  return a;
}
Dual operator*(double c, const Dual& a) { return a * c; }
Dual operator+(Dual a, double c) {
  a.v += c;
  return a;
}
Dual operator+(double c, const Dual& a) { return a + c; }
Dual operator-(const Dual& a) { return a * -1.0; }
Dual sin(const Dual& a) {
  Dual r = a * std::cos(a.v);
  r.v = std::sin(a.v);
  return r;
}
Dual cos(const Dual& a) {
  Dual r = a * -std::sin(a.v);
  r.v = std::cos(a.v);
  return r;
}

double cst(double, double c) { return c; }
Dual cst(const Dual&, double c) { return Dual{c, {}}; }
Jet cst(const Jet& like, double c) { return Jet::constant(c, like.layout_ptr(), like.point_ptr()); }

using std::cos;
using std::sin;

// sigma[i + d * j] is component i of sigma_j.
template <class S>
void brownian(const S* x, S* b, S* sigma) {
  b[0] = cst(x[0], 0.0);
  sigma[0] = cst(x[0], 1.0);
}

template <class S>
void linear_ou(const S* x, S* b, S* sigma) {
  b[0] = -x[0];
  sigma[0] = cst(x[0], 1.0);
}

template <class S>
void elliptic_2d(const S* x, S* b, S* sigma) {
  b[0] = -x[0] + 0.5 * sin(x[1]);
  b[1] = -x[1] + 0.5 * cos(x[0]);
  sigma[0] = 1.0 + 0.25 * sin(x[1]);
  sigma[1] = 0.25 * cos(x[0]);
  sigma[2] = 0.25 * sin(x[0]);
  sigma[3] = cst(x[0], 1.0);
}

template <class S>
void grushin(const S* x, S* b, S* sigma) {
  b[0] = cst(x[0], 0.0);
  b[1] = x[0];
  sigma[0] = cst(x[0], 1.0);
  sigma[1] = cst(x[0], 0.0);
}

struct ModelSpec {
  const char* name;
  int d;
  int m;
  std::vector<double> x0;
  void (*dbl)(const double*, double*, double*);
  void (*dual)(const Dual*, Dual*, Dual*);
  void (*jet)(const Jet*, Jet*, Jet*);
};

const std::vector<ModelSpec>& registry() {
  static const std::vector<ModelSpec> specs = {
      {"brownian", 1, 1, {0.0}, brownian<double>, brownian<Dual>, brownian<Jet>},
      {"linear-ou", 1, 1, {1.0}, linear_ou<double>, linear_ou<Dual>, linear_ou<Jet>},
      {"elliptic-2d", 2, 2, {0.5, -0.5}, elliptic_2d<double>, elliptic_2d<Dual>, elliptic_2d<Jet>},
      {"hormander-grushin", 2, 1, {0.0, 0.0}, grushin<double>, grushin<Dual>, grushin<Jet>},
  };
  return specs;
}

void require_finite(std::span<const double> v, const std::string& model) {
  for (double x : v) {
    if (!std::isfinite(x)) throw ModelError("model " + model + ": non-finite coefficient value");
  }
}

}  // namespace

std::vector<std::string> model_names() {
  std::vector<std::string> names;
  for (const ModelSpec& s : registry()) names.emplace_back(s.name);
  return names;
}

SdeModel make_model(const std::string& name) {
  for (const ModelSpec& s : registry()) {
    if (name != s.name) continue;
    SdeModel model;
    model.name = s.name;
    model.state_dim = s.d;
    model.noise_dim = s.m;
    model.x0 = Eigen::Map<const Eigen::VectorXd>(s.x0.data(), s.d);
    const int d = s.d;
    const int m = s.m;
    auto dbl = s.dbl;
    auto dual = s.dual;
    auto jet = s.jet;
    std::string label = s.name;
    model.coefficients = [dbl, label](std::span<const double> x, std::span<double> b, std::span<double> sigma) {
      dbl(x.data(), b.data(), sigma.data());
      require_finite(b, label);
      require_finite(sigma, label);
    };
    model.linearization = [dual, d, m, label](std::span<const double> x, Eigen::VectorXd& b, Eigen::MatrixXd& db,
                                              Eigen::MatrixXd& sigma, std::vector<Eigen::MatrixXd>& dsigma) {
      std::array<Dual, kMaxState> xd{};
      for (int l = 0; l < d; ++l) {
        xd[l].v = x[l];
        xd[l].g[l] = 1.0;
      }
      std::array<Dual, kMaxState> bd{};
      std::array<Dual, kMaxState * kMaxState> sd{};
      dual(xd.data(), bd.data(), sd.data());
      b.resize(d);
      db.resize(d, d);
      sigma.resize(d, m);
      dsigma.assign(static_cast<std::size_t>(m), Eigen::MatrixXd(d, d));
      for (int i = 0; i < d; ++i) {
        b[i] = bd[i].v;
        for (int l = 0; l < d; ++l) db(i, l) = bd[i].g[l];
        for (int j = 0; j < m; ++j) {
          sigma(i, j) = sd[i + d * j].v;
          for (int l = 0; l < d; ++l) dsigma[j](i, l) = sd[i + d * j].g[l];
        }
      }
      if (!b.allFinite() || !sigma.allFinite()) throw ModelError("model " + label + ": non-finite coefficient value");
    };
    model.jets = [jet, d, m](const std::vector<Jet>& x, std::vector<Jet>& b, std::vector<std::vector<Jet>>& sigma) {
      if (static_cast<int>(x.size()) != d) throw ArgumentError("model: state dimension mismatch");
      b.assign(static_cast<std::size_t>(d), x[0]);
      std::vector<Jet> flat(static_cast<std::size_t>(d * m), x[0]);
      jet(x.data(), b.data(), flat.data());
      sigma.assign(static_cast<std::size_t>(m), {});
      for (int j = 0; j < m; ++j) sigma[j].assign(flat.begin() + d * j, flat.begin() + d * (j + 1));
    };
    return model;
  }
  throw ModelError("unknown model '" + name + "'");
}

namespace {

void check_grid(const SdeModel& model, const Eigen::VectorXd& x0, double horizon, int n) {
  if (n < 1) throw ArgumentError("euler: need n >= 1");
  if (!(horizon > 0.0)) throw ArgumentError("euler: horizon must be positive");
  if (x0.size() != model.state_dim) throw ArgumentError("euler: initial state has the wrong dimension");
}

// Malliavin covariance along a path given its Brownian increments (n x m, row-major).
Eigen::MatrixXd flow_covariance(const SdeModel& model, const Eigen::VectorXd& x0, double step,
                                std::span<const double> increments, int n, double* terminal = nullptr) {
  const int d = model.state_dim;
  const int m = model.noise_dim;
  Eigen::VectorXd x = x0;
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd b;
  Eigen::MatrixXd db, sigma;
  std::vector<Eigen::MatrixXd> dsigma;
  for (int k = 0; k < n; ++k) {
    model.linearization(std::span<const double>(x.data(), static_cast<std::size_t>(d)), b, db, sigma, dsigma);
    Eigen::MatrixXd jac = Eigen::MatrixXd::Identity(d, d) + step * db;
    Eigen::VectorXd next = x + step * b;
    for (int j = 0; j < m; ++j) {
      const double dw = increments[static_cast<std::size_t>(k) * m + j];
      jac += dw * dsigma[j];
      next += dw * sigma.col(j);
    }
    cov = jac * cov * jac.transpose() + step * sigma * sigma.transpose();
    x = next;
  }
  if (terminal != nullptr) {
    for (int i = 0; i < d; ++i) terminal[i] = x[i];
  }
  return cov;
}

}  // namespace

Functional euler_functional(const SdeModel& model, const Eigen::VectorXd& x0, double horizon, int n, int max_order) {
  check_grid(model, x0, horizon, n);
  const int d = model.state_dim;
  const int m = model.noise_dim;
  const double h = horizon / n;
  const double sqrt_h = std::sqrt(h);
  auto jets = model.jets;
  std::string label = model.name;
  Functional::Body body = [=](const std::vector<Jet>& g) {
    std::vector<Jet> x;
    for (int i = 0; i < d; ++i) x.push_back(cst(g[0], x0[i]));
    std::vector<Jet> b;
    std::vector<std::vector<Jet>> sigma;
    for (int k = 0; k < n; ++k) {
      jets(x, b, sigma);
      for (int i = 0; i < d; ++i) {
        Jet next = x[i] + b[i] * h;
        for (int j = 0; j < m; ++j) next += sigma[j][i] * (g[static_cast<std::size_t>(k) * m + j] * sqrt_h);
        x[i] = std::move(next);
      }
    }
    for (const Jet& xi : x) {
      if (!xi.values().allFinite()) throw ModelError("model " + label + ": non-finite Euler state");
    }
    return x;
  };
  return Functional(n * m, d, std::move(body), max_order);
}

Eigen::VectorXd euler_terminal(const SdeModel& model, const Eigen::VectorXd& x0, double horizon, int n,
                               std::span<const double> g) {
  check_grid(model, x0, horizon, n);
  const int d = model.state_dim;
  const int m = model.noise_dim;
  if (static_cast<int>(g.size()) != n * m) throw ArgumentError("euler: need n * m Gaussian coordinates");
  const double h = horizon / n;
  const double sqrt_h = std::sqrt(h);
  Eigen::VectorXd x = x0;
  std::vector<double> b(static_cast<std::size_t>(d)), sigma(static_cast<std::size_t>(d * m));
  for (int k = 0; k < n; ++k) {
    model.coefficients(std::span<const double>(x.data(), static_cast<std::size_t>(d)), b, sigma);
    for (int i = 0; i < d; ++i) {
      double next = x[i] + b[i] * h;
      for (int j = 0; j < m; ++j) next += sigma[i + d * j] * sqrt_h * g[static_cast<std::size_t>(k) * m + j];
      x[i] = next;
    }
  }
  return x;
}

Eigen::MatrixXd euler_malliavin(const SdeModel& model, const Eigen::VectorXd& x0, double horizon, int n,
                                std::span<const double> g) {
  check_grid(model, x0, horizon, n);
  if (static_cast<int>(g.size()) != n * model.noise_dim) throw ArgumentError("euler: need n * m Gaussian coordinates");
  const double h = horizon / n;
  std::vector<double> inc(g.begin(), g.end());
  for (double& v : inc) v *= std::sqrt(h);
  return flow_covariance(model, x0, h, inc, n);
}

CoupledPaths simulate_coupled(const SdeModel& model, std::span<const int> levels, int n_ref, std::size_t paths,
                              std::uint64_t seed, bool with_det) {
  if (n_ref < 1) throw ArgumentError("simulate_coupled: n_ref must be >= 1");
  if (paths < 2) throw ArgumentError("simulate_coupled: need at least two paths");
  for (int n : levels) {
    if (n < 1 || n_ref % n != 0) throw ArgumentError("simulate_coupled: every level must divide n_ref");
  }
  const int d = model.state_dim;
  const int m = model.noise_dim;
  const double horizon = model.horizon;
  const std::size_t nl = levels.size();
  const Eigen::Index rows = static_cast<Eigen::Index>(paths);
  Eigen::MatrixXd ref(rows, d);
  std::vector<Eigen::MatrixXd> coarse(nl, Eigen::MatrixXd(rows, d));
  Eigen::VectorXd ref_det(with_det ? rows : 0);
  std::vector<Eigen::VectorXd> coarse_det(with_det ? nl : 0, Eigen::VectorXd(rows));

  for_each_block(paths, [&](std::size_t block, std::size_t begin, std::size_t end) {
    NormalSampler s(substream_seed(seed, block));
    std::vector<double> z(static_cast<std::size_t>(n_ref) * m);
    std::vector<double> inc;
    std::vector<double> b(static_cast<std::size_t>(d)), sigma(static_cast<std::size_t>(d * m));
    std::vector<double> x(static_cast<std::size_t>(d));
    for (std::size_t p = begin; p < end; ++p) {
      s.fill(z);
      for (std::size_t l = 0; l <= nl; ++l) {
        const int n = l < nl ? levels[l] : n_ref;
        const int ratio = n_ref / n;
        const double h = horizon / n;
        const double fine = std::sqrt(horizon / n_ref);
        inc.assign(static_cast<std::size_t>(n) * m, 0.0);
        for (int k = 0; k < n; ++k) {
          for (int j = 0; j < m; ++j) {
            double w = 0.0;
            for (int r = 0; r < ratio; ++r) w += z[(static_cast<std::size_t>(k) * ratio + r) * m + j];
            inc[static_cast<std::size_t>(k) * m + j] = fine * w;
          }
        }
        Eigen::MatrixXd& out = l < nl ? coarse[l] : ref;
        const Eigen::Index row = static_cast<Eigen::Index>(p);
        if (with_det) {
          std::array<double, kMaxState> xt{};
          const double det = flow_covariance(model, model.x0, h, inc, n, xt.data()).determinant();
          for (int i = 0; i < d; ++i) out(row, i) = xt[i];
          (l < nl ? coarse_det[l] : ref_det)[row] = det;
          continue;
        }
        for (int i = 0; i < d; ++i) x[i] = model.x0[i];
        for (int k = 0; k < n; ++k) {
          model.coefficients(x, b, sigma);
          for (int i = 0; i < d; ++i) {
            double next = x[i] + b[i] * h;
            for (int j = 0; j < m; ++j) next += sigma[i + d * j] * inc[static_cast<std::size_t>(k) * m + j];
            x[i] = next;
          }
        }
        for (int i = 0; i < d; ++i) out(row, i) = x[i];
      }
    }
  });

  const std::string base = model.name + ":seed=" + std::to_string(seed);
  CoupledPaths out{std::vector<int>(levels.begin(), levels.end()), {},
                   EmpiricalLaw(std::move(ref), seed, base + ":n=" + std::to_string(n_ref)), std::move(coarse_det),
                   std::move(ref_det)};
  for (std::size_t l = 0; l < nl; ++l) {
    out.coarse.emplace_back(std::move(coarse[l]), seed, base + ":n=" + std::to_string(levels[l]));
  }
  return out;
}

std::vector<Jet> lie_bracket(const std::vector<Jet>& phi, const std::vector<Jet>& psi) {
  if (phi.size() != psi.size() || phi.empty()) throw ArgumentError("lie_bracket: fields must share a dimension");
  const int d = static_cast<int>(phi.size());
  if (phi[0].order() < 1 || psi[0].order() < 1) throw CapabilityError("lie_bracket: fields need order >= 1");
  std::vector<Jet> out;
  for (int i = 0; i < d; ++i) {
    Jet c = phi[0] * psi[i].partial(0) - psi[0] * phi[i].partial(0);
    for (int l = 1; l < d; ++l) c += phi[l] * psi[i].partial(l) - psi[l] * phi[i].partial(l);
    out.push_back(std::move(c));
  }
  return out;
}

BracketReport hormander(const SdeModel& model, const Eigen::VectorXd& x, int depth) {
  if (depth < 0) throw ArgumentError("hormander: depth must be >= 0");
  if (depth > kDefaultMaxOrder) {
    throw CapabilityError("hormander: depth " + std::to_string(depth) + " exceeds the jet budget " +
                          std::to_string(kDefaultMaxOrder));
  }
  const int d = model.state_dim;
  if (x.size() != d) throw ArgumentError("hormander: point has the wrong dimension");
  const std::vector<Jet> xj = lift(x, depth);
  std::vector<Jet> b;
  std::vector<std::vector<Jet>> sigma;
  model.jets(xj, b, sigma);

  BracketReport r;
  r.depth = depth;
  std::vector<std::vector<Jet>> level = sigma;
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(d, d);
  for (int k = 0; k <= depth; ++k) {
    if (k > 0) {
      std::vector<std::vector<Jet>> next;
      for (const auto& psi : level) {
        for (const auto& s : sigma) next.push_back(lie_bracket(s, psi));
        next.push_back(lie_bracket(b, psi));
      }
      level = std::move(next);
      for (auto& s : sigma) {
        for (Jet& c : s) c = c.truncated(depth - k);
      }
      for (Jet& c : b) c = c.truncated(depth - k);
    }
    std::vector<Eigen::VectorXd> values;
    for (const auto& field : level) {
      Eigen::VectorXd v(d);
      for (int i = 0; i < d; ++i) v[i] = field[i].value();
      gram += v * v.transpose();
      values.push_back(std::move(v));
    }
    r.sets.push_back(std::move(values));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram, Eigen::EigenvaluesOnly);
    r.lambda.push_back(std::max(0.0, es.eigenvalues()[0]));
  }
  return r;
}

}  // namespace regtv
