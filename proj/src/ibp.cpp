#include "regtv/ibp.hpp"

#include "regtv/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace regtv {

namespace {

void check_alpha(std::span<const int> alpha, int d) {
  if (alpha.empty()) throw ArgumentError("weight: multi-index must have length >= 1");
  for (int a : alpha) {
    if (a < 0 || a >= d) {
      throw ArgumentError("weight: index " + std::to_string(a) + " outside 0.." + std::to_string(d - 1));
    }
  }
}

JetMatrix inverse_from_adjugate(const JetMatrix& adj, const Jet& inv_det) {
  JetMatrix out(adj.size());
  for (std::size_t i = 0; i < adj.size(); ++i) {
    for (const Jet& a : adj[i]) out[i].push_back(a * inv_det);
  }
  return out;
}

// One step H_i(F,G) = -sum_k [G gam^{ki} LF_k + G Gamma(gam^{ki}, F_k) + gam^{ki} Gamma(G, F_k)].
Jet weight_step(const std::vector<Jet>& f, const std::vector<Jet>& lf, const Jet& g, int i, const JetMatrix& gam) {
  Jet acc = g.zero_like();
  for (std::size_t k = 0; k < f.size(); ++k) {
    const Jet& gki = gam[k][i];
    acc += g * (gki * lf[k] + gamma(gki, f[k]));
    acc += gki * gamma(g, f[k]);
  }
  return -acc;
}

}  // namespace

Jet weight(const std::vector<Jet>& f, const Jet& g, std::span<const int> alpha, std::optional<double> eta) {
  const int d = static_cast<int>(f.size());
  check_alpha(alpha, d);
  if (eta && !(*eta > 0.0)) throw ArgumentError("weight: eta must be positive");
  int order = g.order();
  for (const Jet& fi : f) order = std::min(order, fi.order());
  if (order < static_cast<int>(alpha.size()) + 1) {
    throw CapabilityError("weight: jets of order " + std::to_string(order) + " cannot support |alpha| = " +
                          std::to_string(alpha.size()));
  }

  const CovarianceMatrix sigma = malliavin_matrix(f);
  const JetMatrix adj = adjugate(sigma.entries);
  std::vector<Jet> lf;
  for (const Jet& fi : f) lf.push_back(ou_generator(fi));

  JetMatrix first;
  JetMatrix rest;
  if (eta) {
    first = inverse_from_adjugate(adj, localized_inverse(sigma.det, *eta));
    if (alpha.size() > 1) rest = inverse_from_adjugate(adj, localized_inverse(sigma.det, 0.5 * *eta));
  } else {
    if (sigma.det.value() == 0.0) throw SingularityError("weight: Malliavin covariance is singular at the point");
    first = inverse_from_adjugate(adj, reciprocal(sigma.det));
    rest = first;
  }

  Jet h = g;
  for (std::size_t s = 0; s < alpha.size(); ++s) h = weight_step(f, lf, h, alpha[s], s == 0 ? first : rest);
  return h;
}

Jet weight(const WeightRequest& req) {
  const int need = req.order + static_cast<int>(req.alpha.size()) + 1;
  if (req.order < 0) throw ArgumentError("weight: negative output order");
  std::vector<Jet> f = req.f.evaluate(req.point, need);
  Jet g = req.g ? req.g->component(req.point, need) : f.at(0).zero_like() + 1.0;
  return weight(f, g, req.alpha, req.eta).truncated(req.order);
}

Jet weight_localized(const WeightRequest& req) {
  if (!req.eta) throw ArgumentError("weight_localized: eta is required");
  return weight(req);
}

double weight_value(const Functional& f, const std::optional<Functional>& g, std::span<const int> alpha,
                    std::optional<double> eta, const Eigen::VectorXd& point) {
  const int need = static_cast<int>(alpha.size()) + 1;
  std::vector<Jet> fj = f.evaluate(point, need);
  Jet gj = g ? g->component(point, need) : fj.at(0).zero_like() + 1.0;
  return weight(fj, gj, alpha, eta).value();
}

// ---------------------------------------------------------------------------

double derivative_tensor_norm(const Jet& f, int i) {
  if (i > f.order()) throw CapabilityError("derivative norm: order " + std::to_string(i) + " exceeds jet order");
  const JetLayout& layout = f.layout();
  double fact_i = 1.0;
  for (int k = 2; k <= i; ++k) fact_i *= k;
  double s = 0.0;
  for (int idx = layout.degree_offset(i); idx < layout.degree_offset(i + 1); ++idx) {
    const double v = f.values()[idx];
    s += fact_i / layout.factorial(idx) * v * v;
  }
  return std::sqrt(s);
}

double sobolev_seminorm(const Jet& f, int k) {
  double s = 0.0;
  for (int i = 1; i <= k; ++i) s += derivative_tensor_norm(f, i);
  return s;
}

NormReport sobolev_norm(const std::vector<Jet>& f, int k) {
  if (k < 0) throw ArgumentError("sobolev_norm: negative order");
  NormReport r;
  r.k = k;
  if (!f.empty()) r.point = f[0].point();
  for (const Jet& fi : f) {
    const double semi = sobolev_seminorm(fi, k);
    r.sobolev_1k.push_back(semi);
    r.sobolev_k.push_back(std::abs(fi.value()) + semi);
    r.sobolev_1k_total += semi;
    r.sobolev_k_total += std::abs(fi.value()) + semi;
  }
  return r;
}

NormReport sobolev_norm(const Functional& f, int k, const Eigen::VectorXd& point) {
  return sobolev_norm(f.evaluate(point, k), k);
}

NormReport nondegeneracy_stats(const Functional& f, int n, int k, const Eigen::VectorXd& point) {
  if (n < 0 || k < 0) throw ArgumentError("nondegeneracy_stats: n and k must be nonnegative");
  const int top = k + n + 2;
  const std::vector<Jet> fj = f.evaluate(point, top);
  const int d = static_cast<int>(fj.size());
  std::vector<Jet> lf;
  for (const Jet& fi : fj) lf.push_back(ou_generator(fi));

  auto semi_total = [&](int order) {
    double s = 0.0;
    for (const Jet& fi : fj) s += sobolev_seminorm(fi, order);
    return s;
  };
  auto lf_total = [&](int order) {
    double s = 0.0;
    for (const Jet& l : lf) s += std::abs(l.value()) + sobolev_seminorm(l, order);
    return s;
  };

  NormReport r = sobolev_norm(fj, k);
  r.point = point;
  r.n = n;
  const double det = malliavin_matrix(fj).det.value();
  const double f1 = semi_total(k + 1);
  if (det > 0.0) {
    r.alpha_k = std::pow(f1, 2.0 * (d - 1)) * (f1 + lf_total(k)) / det;
    r.beta_k = std::pow(f1, 2.0 * d) / det;
  } else {
    r.singular = true;
    r.alpha_k = std::numeric_limits<double>::infinity();
    r.beta_k = std::numeric_limits<double>::infinity();
  }
  const double fkn = semi_total(k + n + 1);
  r.k_nk = std::pow(fkn + lf_total(k + n), n) * std::pow(1.0 + fkn, 2.0 * d * (2 * n + k));
  const double fn = semi_total(n + 1);
  r.c_n = std::pow(fn + lf_total(n), n) * std::pow(1.0 + fn, 4.0 * d * n);
  return r;
}

// ---------------------------------------------------------------------------

MomentEstimate lp_moment(std::span<const double> samples, double p) {
  if (samples.size() < kMinMomentSamples) {
    throw ArgumentError("lp_moment: need at least " + std::to_string(kMinMomentSamples) + " samples");
  }
  if (!(p >= 1.0)) throw ArgumentError("lp_moment: p must be >= 1");
  std::size_t bad = 0;
  for (double v : samples) {
    if (!std::isfinite(v)) ++bad;
  }
  if (bad > 0) throw DataError("lp_moment: " + std::to_string(bad) + " non-finite samples");

  const std::size_t n = samples.size();
  std::vector<double> pw(n);
  for (std::size_t i = 0; i < n; ++i) pw[i] = std::pow(std::abs(samples[i]), p);
  const double total = pairwise_sum(pw);
  MomentEstimate m;
  m.value = std::pow(total / static_cast<double>(n), 1.0 / p);

  constexpr std::size_t kGroups = 50;
  std::vector<double> group_sum(kGroups, 0.0);
  std::vector<std::size_t> group_n(kGroups, 0);
  for (std::size_t g = 0; g < kGroups; ++g) {
    const std::size_t b = g * n / kGroups;
    const std::size_t e = (g + 1) * n / kGroups;
    group_sum[g] = pairwise_sum(std::span<const double>(pw).subspan(b, e - b));
    group_n[g] = e - b;
  }
  std::vector<double> theta(kGroups);
  double mean_theta = 0.0;
  for (std::size_t g = 0; g < kGroups; ++g) {
    theta[g] = std::pow((total - group_sum[g]) / static_cast<double>(n - group_n[g]), 1.0 / p);
    mean_theta += theta[g] / kGroups;
  }
  double ss = 0.0;
  for (double t : theta) ss += (t - mean_theta) * (t - mean_theta);
  m.se = std::sqrt(ss * (kGroups - 1.0) / kGroups);

  const double largest = *std::max_element(pw.begin(), pw.end());
  const double rel_se = m.value > 0.0 ? m.se / m.value : 0.0;
  m.heavy_tail = (total > 0.0 && largest / total > 0.05) || rel_se > 0.1;
  return m;
}

MomentEstimate lp_moment(const std::function<double(NormalSampler&, std::size_t)>& quantity, double p,
                         std::size_t n, std::uint64_t seed) {
  const Eigen::VectorXd v = sample_scalar(seed, n, quantity);
  return lp_moment(std::span<const double>(v.data(), v.size()), p);
}

QEstimate q_norm(const Functional& f, int l, std::size_t n, std::uint64_t seed) {
  if (l < 0) throw ArgumentError("q_norm: negative order");
  const Eigen::MatrixXd x = standard_normals(seed, n, f.input_dim());
  Eigen::VectorXd c(static_cast<Eigen::Index>(n));
  Eigen::VectorXd inv(static_cast<Eigen::Index>(n));
  for_each_block(n, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const Eigen::Index r = static_cast<Eigen::Index>(i);
      const Eigen::VectorXd pt = x.row(r).transpose();
      c[r] = nondegeneracy_stats(f, l, 0, pt).c_n;
      const double det = malliavin_matrix(f, pt, 0).det.value();
      inv[r] = std::pow(det, -2.0 * l);
    }
  });
  QEstimate q;
  q.c_norm = lp_moment(std::span<const double>(c.data(), c.size()), 2.0);
  q.inverse_det_moment = lp_moment(std::span<const double>(inv.data(), inv.size()), 1.0);
  q.value = q.c_norm.value * std::sqrt(q.inverse_det_moment.value);
  const double r1 = q.c_norm.value > 0.0 ? q.c_norm.se / q.c_norm.value : 0.0;
  const double r2 = q.inverse_det_moment.value > 0.0 ? q.inverse_det_moment.se / q.inverse_det_moment.value : 0.0;
  q.se = q.value * std::sqrt(r1 * r1 + 0.25 * r2 * r2);
  q.heavy_tail = q.c_norm.heavy_tail || q.inverse_det_moment.heavy_tail;
  return q;
}

DensityEstimate density_ibp(const Functional& f, const std::vector<Eigen::VectorXd>& grid, const MultiIndex& beta,
                            std::size_t n, std::optional<double> eta, std::uint64_t seed, double variance_cap) {
  const int d = f.output_dim();
  if (d > 2) throw ArgumentError("density_ibp: output dimension must be 1 or 2");
  if (n < 2) throw ArgumentError("density_ibp: need at least two samples");
  for (const auto& x : grid) {
    if (x.size() != d) throw ArgumentError("density_ibp: grid point dimension mismatch");
  }
  MultiIndex alpha;
  for (int i = 0; i < d; ++i) alpha.push_back(i);
  alpha.insert(alpha.end(), beta.begin(), beta.end());
  const double sign = (beta.size() % 2 == 0) ? 1.0 : -1.0;

  const Eigen::MatrixXd x = standard_normals(seed, n, f.input_dim());
  Eigen::VectorXd w(static_cast<Eigen::Index>(n));
  Eigen::MatrixXd fv(static_cast<Eigen::Index>(n), d);
  for_each_block(n, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const Eigen::Index r = static_cast<Eigen::Index>(i);
      const Eigen::VectorXd pt = x.row(r).transpose();
      const std::vector<Jet> fj = f.evaluate(pt, static_cast<int>(alpha.size()) + 1);
      const Jet one = fj[0].zero_like() + 1.0;
      w[r] = sign * weight(fj, one, alpha, eta).value();
      for (int j = 0; j < d; ++j) fv(r, j) = fj[j].value();
    }
  });

  DensityEstimate out;
  out.value.resize(static_cast<Eigen::Index>(grid.size()));
  out.se.resize(static_cast<Eigen::Index>(grid.size()));
  Eigen::VectorXd contrib(static_cast<Eigen::Index>(n));
  for (std::size_t g = 0; g < grid.size(); ++g) {
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
      bool inside = true;
      for (int j = 0; j < d; ++j) inside = inside && fv(i, j) > grid[g][j];
      contrib[i] = inside ? w[i] : 0.0;
    }
    const Estimate e = mean_estimate(contrib);
    out.value[static_cast<Eigen::Index>(g)] = e.value;
    out.se[static_cast<Eigen::Index>(g)] = e.se;
    out.max_variance = std::max(out.max_variance, e.se * e.se * static_cast<double>(n));
  }
  out.precision_warning = out.max_variance > variance_cap;
  return out;
}

}  // namespace regtv
