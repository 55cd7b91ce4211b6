#include "regtv/chaos.hpp"

#include "regtv/errors.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace regtv {

QuadraticChaos::QuadraticChaos(std::vector<Eigen::MatrixXd> components, bool identity_covariance)
    : a_(std::move(components)), identity_covariance_(identity_covariance) {
  if (a_.empty()) throw ArgumentError("chaos: need at least one component");
  const Eigen::Index m = a_[0].rows();
  if (m < 1) throw ArgumentError("chaos: empty matrix");
  for (const Eigen::MatrixXd& a : a_) {
    if (a.rows() != m || a.cols() != m) throw ArgumentError("chaos: components must be square and of equal size");
    if (!a.allFinite()) throw ArgumentError("chaos: non-finite matrix entry");
    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) throw ArgumentError("chaos: matrix is not symmetric");
  }
  if (identity_covariance_) {
    for (std::size_t i = 0; i < a_.size(); ++i) {
      for (std::size_t j = 0; j < a_.size(); ++j) {
        const double c = 2.0 * (a_[i] * a_[j]).trace();
        if (std::abs(c - (i == j ? 1.0 : 0.0)) > 1e-10) {
          throw ArgumentError("chaos: identity covariance claimed but 2 tr(A_i A_j) = " + std::to_string(c));
        }
      }
    }
  }
}

Eigen::VectorXd QuadraticChaos::value(const Eigen::VectorXd& x) const {
  if (x.size() != inputs()) throw ArgumentError("chaos: point has the wrong dimension");
  Eigen::VectorXd f(dim());
  for (int i = 0; i < dim(); ++i) f[i] = x.dot(a_[i] * x) - a_[i].trace();
  return f;
}

double QuadraticChaos::gamma(int i, int j, const Eigen::VectorXd& x) const {
  if (x.size() != inputs()) throw ArgumentError("chaos: point has the wrong dimension");
  return 4.0 * (a_[i] * x).dot(a_[j] * x);
}

QuadraticChaos load_chaos_csv(const std::string& path, bool identity_covariance) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  std::vector<Eigen::MatrixXd> mats;
  std::vector<std::vector<double>> rows;
  auto flush = [&] {
    if (rows.empty()) return;
    Eigen::MatrixXd a(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != rows[0].size()) throw DataError(path + ": ragged matrix rows");
      for (std::size_t c = 0; c < rows[r].size(); ++c) a(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
    mats.push_back(std::move(a));
    rows.clear();
  };
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      flush();
      continue;
    }
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    std::vector<double> row;
    std::string tok;
    while (ls >> tok) {
      try {
        row.push_back(std::stod(tok));
      } catch (...) {
        throw DataError(path + ": unparsable value '" + tok + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  flush();
  if (mats.empty()) throw DataError(path + ": no matrices");
  return QuadraticChaos(std::move(mats), identity_covariance);
}

QuadraticChaos chaos_family(int m, double band) {
  if (m < 1) throw ArgumentError("chaos_family: m must be >= 1");
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(m, m);
  for (int i = 0; i + 1 < m; ++i) {
    a(i, i + 1) = band;
    a(i + 1, i) = band;
  }
  a /= std::sqrt(2.0 * (a * a).trace());
  return QuadraticChaos({a}, true);
}

Functional chaos_functional(const QuadraticChaos& chaos) {
  const int m = chaos.inputs();
  const int d = chaos.dim();
  std::vector<Eigen::MatrixXd> a;
  for (int i = 0; i < d; ++i) a.push_back(chaos.component(i));
  return Functional(
      m, d,
      [a, m](const std::vector<Jet>& x) {
        std::vector<Jet> out;
        for (const Eigen::MatrixXd& ai : a) {
          Jet f = x[0] * 0.0 - ai.trace();
          for (int r = 0; r < m; ++r) {
            if (ai(r, r) != 0.0) f += (x[r] * x[r]) * ai(r, r);
            for (int c = r + 1; c < m; ++c) {
              if (ai(r, c) != 0.0) f += (x[r] * x[c]) * (2.0 * ai(r, c));
            }
          }
          out.push_back(std::move(f));
        }
        return out;
      },
      kDefaultMaxOrder);
}

namespace {

struct ChaosSample {
  Eigen::VectorXd f;
  Eigen::MatrixXd gamma;
};

ChaosSample draw(const QuadraticChaos& chaos, NormalSampler& s, Eigen::VectorXd& x) {
  const int d = chaos.dim();
  for (Eigen::Index r = 0; r < x.size(); ++r) x[r] = s();
  std::vector<Eigen::VectorXd> ax;
  ChaosSample out{Eigen::VectorXd(d), Eigen::MatrixXd(d, d)};
  for (int i = 0; i < d; ++i) {
    const Eigen::MatrixXd& a = chaos.component(i);
    ax.push_back(a.isDiagonal(0.0) ? Eigen::VectorXd(a.diagonal().cwiseProduct(x)) : Eigen::VectorXd(a * x));
    out.f[i] = x.dot(ax[i]) - a.trace();
  }
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j <= i; ++j) out.gamma(i, j) = out.gamma(j, i) = 4.0 * ax[i].dot(ax[j]);
  }
  return out;
}

}  // namespace

EmpiricalLaw sample_chaos(const QuadraticChaos& chaos, std::size_t n, std::uint64_t seed) {
  const int d = chaos.dim();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n), d);
  for_each_block(n, [&](std::size_t block, std::size_t begin, std::size_t end) {
    NormalSampler s(substream_seed(seed, block));
    Eigen::VectorXd x(chaos.inputs());
    for (std::size_t i = begin; i < end; ++i) {
      const ChaosSample c = draw(chaos, s, x);
      out.row(static_cast<Eigen::Index>(i)) = c.f.transpose();
    }
  });
  return EmpiricalLaw(std::move(out), seed, "chaos:m=" + std::to_string(chaos.inputs()));
}

FourthMomentReport fourth_moment_stats(const QuadraticChaos& chaos, std::size_t samples, std::uint64_t seed) {
  if (!chaos.identity_covariance()) {
    throw PreconditionError("fourth_moment_stats: identity-covariance normalisation is not set");
  }
  if (samples < 2) throw ArgumentError("fourth_moment_stats: need at least two samples");
  const int d = chaos.dim();
  const double n4 = d * d + 2.0 * d;  // E|N|^4 for N ~ N(0, I_d)
  FourthMomentReport r;
  r.det_reference = std::pow(2.0, d);

  Eigen::VectorXd gap(static_cast<Eigen::Index>(samples));
  Eigen::VectorXd lhs(static_cast<Eigen::Index>(samples));
  Eigen::VectorXd det(static_cast<Eigen::Index>(samples));
  for_each_block(samples, [&](std::size_t block, std::size_t begin, std::size_t end) {
    NormalSampler s(substream_seed(seed, block));
    Eigen::VectorXd x(chaos.inputs());
    for (std::size_t i = begin; i < end; ++i) {
      const ChaosSample c = draw(chaos, s, x);
      const Eigen::Index k = static_cast<Eigen::Index>(i);
      gap[k] = std::pow(c.f.squaredNorm(), 2) - n4;
      const Eigen::MatrixXd e = Eigen::MatrixXd::Identity(d, d) - 0.5 * c.gamma;
      lhs[k] = e.squaredNorm();
      det[k] = std::abs(c.gamma.determinant() - r.det_reference);
    }
  });
  r.fourth_gap_mc = mean_estimate(gap);
  r.lhs_mc = mean_estimate(lhs);
  const Estimate dw = mean_estimate(det);
  r.det_distance.value = dw.value;
  r.det_distance.se = dw.se;
  r.det_distance.method = "mean-abs-vs-constant";

  if (d == 1) {
    const Eigen::MatrixXd a2 = chaos.component(0) * chaos.component(0);
    const double tr4 = (a2 * a2).trace();
    r.fourth_gap = {48.0 * tr4, 0.0, true};
    r.lhs = {8.0 * tr4, 0.0, true};
  } else {
    r.fourth_gap = r.fourth_gap_mc;
    r.lhs = r.lhs_mc;
  }
  return r;
}

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw ArgumentError("normal_quantile: p must lie in (0,1)");
  // Rational starting point, then Newton steps on the cdf.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                             1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                             6.680131188771972e+01,  -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                             -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static const double e[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                             3.754408661907416e+00};
  double x;
  if (p < 0.02425) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((e[0] * q + e[1]) * q + e[2]) * q + e[3]) * q + 1.0);
  } else if (p > 1.0 - 0.02425) {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((e[0] * q + e[1]) * q + e[2]) * q + e[3]) * q + 1.0);
  } else {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  }
  for (int i = 0; i < 2; ++i) x -= (normal_cdf(x) - p) / normal_pdf(x);
  return x;
}

}  // namespace regtv
