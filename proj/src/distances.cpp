#include "regtv/distances.hpp"

#include "regtv/errors.hpp"
#include "regtv/jet.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

namespace regtv {

// ---------------------------------------------------------------------------
// Empirical laws

EmpiricalLaw::EmpiricalLaw(Eigen::MatrixXd samples, std::uint64_t seed, std::string lineage)
    : samples_(std::move(samples)), seed_(seed), lineage_(std::move(lineage)) {
  if (samples_.rows() < 2) throw ArgumentError("empirical law needs at least two samples");
  if (samples_.cols() < 1) throw ArgumentError("empirical law needs dimension >= 1");
  const Eigen::Index bad = (!samples_.array().isFinite()).count();
  if (bad > 0) throw DataError("empirical law: " + std::to_string(bad) + " non-finite entries");
}

EmpiricalLaw EmpiricalLaw::generate(std::uint64_t seed, std::size_t n, int dim,
                                    const std::function<void(NormalSampler&, std::span<double>)>& row,
                                    std::string lineage) {
  if (dim < 1) throw ArgumentError("empirical law needs dimension >= 1");
  // Row-major scratch so each row is a contiguous span.
  std::vector<double> buf(n * static_cast<std::size_t>(dim));
  for_each_block(n, [&](std::size_t b, std::size_t begin, std::size_t end) {
    NormalSampler s(substream_seed(seed, b));
    for (std::size_t i = begin; i < end; ++i) row(s, std::span<double>(buf.data() + i * dim, static_cast<std::size_t>(dim)));
  });
  Eigen::MatrixXd m(static_cast<Eigen::Index>(n), dim);
  for (std::size_t i = 0; i < n; ++i) {
    for (int j = 0; j < dim; ++j) m(static_cast<Eigen::Index>(i), j) = buf[i * dim + j];
  }
  return EmpiricalLaw(std::move(m), seed, std::move(lineage));
}

void EmpiricalLaw::attach_density(DensityGrid grid) {
  if (grid.dim() != dim()) throw ArgumentError("density grid dimension differs from the law");
  std::size_t cells = 1;
  for (int s : grid.shape) cells *= static_cast<std::size_t>(s);
  if (static_cast<std::size_t>(grid.values.size()) != cells) throw ArgumentError("density grid size mismatch");
  density_ = std::move(grid);
}

void write_csv(const EmpiricalLaw& law, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "dim,n,seed\n" << law.dim() << ',' << law.size() << ',' << law.seed() << '\n';
  char buf[40];
  for (Eigen::Index i = 0; i < law.samples().rows(); ++i) {
    for (int j = 0; j < law.dim(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", law.samples()(i, j));
      if (j > 0) out << ',';
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw IoError("failed while writing " + path);
}

EmpiricalLaw read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  std::string line;
  if (!std::getline(in, line) || line != "dim,n,seed") throw DataError(path + ": missing 'dim,n,seed' header");
  if (!std::getline(in, line)) throw DataError(path + ": missing header values");
  int dim = 0;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  {
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream hs(line);
    if (!(hs >> dim >> n >> seed) || dim < 1) throw DataError(path + ": malformed header values");
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(n), dim);
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::getline(in, line)) throw DataError(path + ": expected " + std::to_string(n) + " rows");
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream rs(line);
    for (int j = 0; j < dim; ++j) {
      std::string tok;
      if (!(rs >> tok)) throw DataError(path + ": short row " + std::to_string(i + 1));
      try {
        m(static_cast<Eigen::Index>(i), j) = std::stod(tok);
      } catch (...) {
        throw DataError(path + ": unparsable value '" + tok + "'");
      }
    }
  }
  return EmpiricalLaw(std::move(m), seed, "csv:" + path);
}

// ---------------------------------------------------------------------------
// Total variation by kernel density estimation

namespace {

double quantile_of(std::vector<double> x, double q) {
  const std::size_t k = static_cast<std::size_t>(q * static_cast<double>(x.size() - 1));
  std::nth_element(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(k), x.end());
  return x[k];
}

double std_dev(std::span<const double> x) {
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double s = 0.0;
  for (double v : x) s += (v - mean) * (v - mean);
  return std::sqrt(s / static_cast<double>(x.size() - 1));
}

std::vector<double> column(const EmpiricalLaw& law, int j) {
  std::vector<double> c(law.size());
  for (std::size_t i = 0; i < law.size(); ++i) c[i] = law.samples()(static_cast<Eigen::Index>(i), j);
  return c;
}

// Regular tensor grid with per-axis origin/step and size.
struct Axis {
  double lo = 0.0;
  double dx = 1.0;
  int n = 0;
};

std::vector<double> gaussian_stencil(double h, double dx) {
  const int half = std::max(1, static_cast<int>(std::ceil(6.0 * h / dx)));
  std::vector<double> k(static_cast<std::size_t>(2 * half + 1));
  double s = 0.0;
  for (int j = -half; j <= half; ++j) {
    const double u = j * dx / h;
    k[j + half] = std::exp(-0.5 * u * u);
    s += k[j + half];
  }
  for (double& v : k) v /= s * dx;
  return k;
}

// Convolve along one axis of a (n0 x n1) row-major-in-axis-0 array in place.
void convolve_axis(std::vector<double>& a, const std::vector<Axis>& axes, int axis, const std::vector<double>& k) {
  const int half = static_cast<int>(k.size() / 2);
  const int n0 = axes[0].n;
  const int n1 = axes.size() > 1 ? axes[1].n : 1;
  const int len = axes[axis].n;
  const int lines = axis == 0 ? n1 : n0;
  std::vector<double> in(static_cast<std::size_t>(len));
  for (int l = 0; l < lines; ++l) {
    auto at = [&](int t) -> double& {
      return axis == 0 ? a[static_cast<std::size_t>(t) + static_cast<std::size_t>(n0) * l]
                       : a[static_cast<std::size_t>(l) + static_cast<std::size_t>(n0) * t];
    };
    for (int t = 0; t < len; ++t) in[t] = at(t);
    for (int t = 0; t < len; ++t) {
      double s = 0.0;
      const int lo = std::max(0, t - half);
      const int hi = std::min(len - 1, t + half);
      for (int u = lo; u <= hi; ++u) s += in[u] * k[u - t + half];
      at(t) = s;
    }
  }
}

std::size_t grid_cells(const std::vector<Axis>& axes) {
  std::size_t c = 1;
  for (const Axis& a : axes) c *= static_cast<std::size_t>(a.n);
  return c;
}

// Linear binning of rows [begin, end) into `counts` (unnormalized weights).
void bin_rows(const Eigen::MatrixXd& x, std::size_t begin, std::size_t end, const std::vector<Axis>& axes,
              std::vector<double>& counts) {
  const int d = static_cast<int>(axes.size());
  for (std::size_t r = begin; r < end; ++r) {
    const Eigen::Index i = static_cast<Eigen::Index>(r);
    if (d == 1) {
      const double t = (x(i, 0) - axes[0].lo) / axes[0].dx;
      if (t < 0.0 || t > axes[0].n - 1) continue;
      const int k = std::min(static_cast<int>(t), axes[0].n - 2);
      const double w = t - k;
      counts[k] += 1.0 - w;
      counts[k + 1] += w;
    } else {
      const double t0 = (x(i, 0) - axes[0].lo) / axes[0].dx;
      const double t1 = (x(i, 1) - axes[1].lo) / axes[1].dx;
      if (t0 < 0.0 || t0 > axes[0].n - 1 || t1 < 0.0 || t1 > axes[1].n - 1) continue;
      const int k0 = std::min(static_cast<int>(t0), axes[0].n - 2);
      const int k1 = std::min(static_cast<int>(t1), axes[1].n - 2);
      const double w0 = t0 - k0;
      const double w1 = t1 - k1;
      const std::size_t n0 = static_cast<std::size_t>(axes[0].n);
      counts[k0 + n0 * k1] += (1 - w0) * (1 - w1);
      counts[k0 + 1 + n0 * k1] += w0 * (1 - w1);
      counts[k0 + n0 * (k1 + 1)] += (1 - w0) * w1;
      counts[k0 + 1 + n0 * (k1 + 1)] += w0 * w1;
    }
  }
}

std::vector<double> smooth(std::vector<double> counts, const std::vector<Axis>& axes, const Eigen::VectorXd& h,
                           double total) {
  for (int a = 0; a < static_cast<int>(axes.size()); ++a) convolve_axis(counts, axes, a, gaussian_stencil(h[a], axes[a].dx));
  for (double& v : counts) v /= total;
  return counts;
}

double cell_volume(const std::vector<Axis>& axes) {
  double v = 1.0;
  for (const Axis& a : axes) v *= a.dx;
  return v;
}

double l1(const std::vector<double>& p, const std::vector<double>& q, double cell) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return s * cell;
}

double mass(const std::vector<double>& p, double cell) {
  double s = 0.0;
  for (double v : p) s += v;
  return s * cell;
}

Eigen::VectorXd bandwidths(const EmpiricalLaw& law, double scale) {
  const int d = law.dim();
  Eigen::VectorXd h(d);
  for (int j = 0; j < d; ++j) {
    const std::vector<double> c = column(law, j);
    if (d == 1) {
      h[j] = silverman_bandwidth(c);
    } else {
      h[j] = std_dev(c) * std::pow(4.0 / (d + 2.0), 1.0 / (d + 4.0)) *
             std::pow(static_cast<double>(law.size()), -1.0 / (d + 4.0));
    }
    if (!(h[j] > 0.0)) throw DataError("estimate_tv: degenerate sample (zero spread)");
  }
  return h * scale;
}

std::vector<Axis> make_axes(const std::vector<const EmpiricalLaw*>& laws, const Eigen::VectorXd& h, int points) {
  const int d = laws[0]->dim();
  std::vector<Axis> axes(static_cast<std::size_t>(d));
  for (int j = 0; j < d; ++j) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const EmpiricalLaw* law : laws) {
      const std::vector<double> c = column(*law, j);
      lo = std::min(lo, quantile_of(c, 1e-4));
      hi = std::max(hi, quantile_of(c, 1.0 - 1e-4));
    }
    lo -= 5.0 * h[j];
    hi += 5.0 * h[j];
    axes[j] = {lo, (hi - lo) / (points - 1), points};
  }
  return axes;
}

int default_points(int d, int requested) {
  if (requested > 0) return requested;
  return d == 1 ? 2048 : 256;
}

void check_coverage(double m, double tol, const char* which) {
  if (1.0 - m > tol) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "estimate_tv: %s density has grid mass %.4f (deficit above %.3g)", which, m, tol);
    throw CoverageError(buf);
  }
}

struct GroupedCounts {
  std::vector<double> total;
  std::vector<std::vector<double>> groups;
};

GroupedCounts grouped_counts(const EmpiricalLaw& law, const std::vector<Axis>& axes, int groups) {
  GroupedCounts g;
  const std::size_t cells = grid_cells(axes);
  g.total.assign(cells, 0.0);
  g.groups.assign(static_cast<std::size_t>(groups), std::vector<double>(cells, 0.0));
  const std::size_t n = law.size();
  for (int k = 0; k < groups; ++k) {
    bin_rows(law.samples(), k * n / groups, (k + 1) * n / groups, axes, g.groups[k]);
    for (std::size_t c = 0; c < cells; ++c) g.total[c] += g.groups[k][c];
  }
  return g;
}

std::vector<double> minus(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

double jackknife_se(const std::vector<double>& theta) {
  const double g = static_cast<double>(theta.size());
  double mean = 0.0;
  for (double t : theta) mean += t / g;
  double ss = 0.0;
  for (double t : theta) ss += (t - mean) * (t - mean);
  return std::sqrt(ss * (g - 1.0) / g);
}

DistanceEstimate tv_from_attached(const EmpiricalLaw& f, const EmpiricalLaw& g) {
  if (!f.density() || !g.density()) throw ArgumentError("estimate_tv: ibp-density method needs attached densities");
  const DensityGrid& a = *f.density();
  const DensityGrid& b = *g.density();
  if (a.shape != b.shape || !a.origin.isApprox(b.origin) || !a.spacing.isApprox(b.spacing)) {
    throw ArgumentError("estimate_tv: attached density grids differ");
  }
  DistanceEstimate e;
  e.method = "ibp-density";
  e.value = (a.values - b.values).cwiseAbs().sum() * a.cell_volume();
  e.warnings.push_back("no sampling error propagated from the attached densities");
  return e;
}

}  // namespace

double silverman_bandwidth(std::span<const double> x) {
  if (x.size() < 2) throw ArgumentError("bandwidth: need at least two samples");
  std::vector<double> c(x.begin(), x.end());
  const double iqr = quantile_of(c, 0.75) - quantile_of(c, 0.25);
  const double sd = std_dev(x);
  double spread = std::min(sd, iqr / 1.34);
  if (!(spread > 0.0)) spread = sd;
  return 0.9 * spread * std::pow(static_cast<double>(x.size()), -0.2);
}

DistanceEstimate estimate_tv(const EmpiricalLaw& f, const EmpiricalLaw& g, const TvOptions& options) {
  if (f.dim() != g.dim()) throw ArgumentError("estimate_tv: laws have different dimensions");
  if (options.method == TvMethod::ibp_density) return tv_from_attached(f, g);
  const int d = f.dim();
  if (d > 2) throw ArgumentError("estimate_tv: density-grid method supports dimension 1 or 2");
  const Eigen::VectorXd h = bandwidths(f, options.bandwidth_scale);
  const Eigen::VectorXd h_alt = h * options.alternate_bandwidth;
  const std::vector<Axis> axes = make_axes({&f, &g}, h_alt, default_points(d, options.grid_points));
  const double cell = cell_volume(axes);
  const int groups = std::max(2, options.jackknife_groups);

  const GroupedCounts cf = grouped_counts(f, axes, groups);
  const GroupedCounts cg = grouped_counts(g, axes, groups);
  const double nf = static_cast<double>(f.size());
  const double ng = static_cast<double>(g.size());

  const std::vector<double> pf = smooth(cf.total, axes, h, nf);
  const std::vector<double> pg = smooth(cg.total, axes, h, ng);
  check_coverage(mass(pf, cell), options.coverage_tolerance, "first");
  check_coverage(mass(pg, cell), options.coverage_tolerance, "second");

  DistanceEstimate e;
  e.method = "density-grid";
  e.value = l1(pf, pg, cell);

  std::vector<double> theta;
  for (int k = 0; k < groups; ++k) {
    const double mf = nf - static_cast<double>(f.size() * (k + 1) / groups - f.size() * k / groups);
    const double mg = ng - static_cast<double>(g.size() * (k + 1) / groups - g.size() * k / groups);
    theta.push_back(l1(smooth(minus(cf.total, cf.groups[k]), axes, h, mf),
                       smooth(minus(cg.total, cg.groups[k]), axes, h, mg), cell));
  }
  const double jk = jackknife_se(theta);
  const double alt = l1(smooth(cf.total, axes, h_alt, nf), smooth(cg.total, axes, h_alt, ng), cell);
  e.se = std::sqrt(jk * jk + (alt - e.value) * (alt - e.value));
  return e;
}

DistanceEstimate estimate_tv(const EmpiricalLaw& f, const std::function<double(const Eigen::VectorXd&)>& pdf,
                             const TvOptions& options) {
  const int d = f.dim();
  if (d > 2) throw ArgumentError("estimate_tv: density-grid method supports dimension 1 or 2");
  const Eigen::VectorXd h = bandwidths(f, options.bandwidth_scale);
  const Eigen::VectorXd h_alt = h * options.alternate_bandwidth;
  std::vector<Axis> axes = make_axes({&f}, h_alt, default_points(d, options.grid_points));
  // Widen to the bulk of the reference density as well.
  for (int j = 0; j < d; ++j) {
    const double lo = std::min(axes[j].lo, -8.0);
    const double hi = std::max(axes[j].lo + axes[j].dx * (axes[j].n - 1), 8.0);
    axes[j].lo = lo;
    axes[j].dx = (hi - lo) / (axes[j].n - 1);
  }
  const double cell = cell_volume(axes);
  const std::size_t cells = grid_cells(axes);

  std::vector<double> ref(cells);
  Eigen::VectorXd x(d);
  for (std::size_t c = 0; c < cells; ++c) {
    x[0] = axes[0].lo + axes[0].dx * static_cast<double>(c % axes[0].n);
    if (d == 2) x[1] = axes[1].lo + axes[1].dx * static_cast<double>(c / axes[0].n);
    ref[c] = pdf(x) * cell;
  }
  check_coverage(mass(ref, 1.0), options.coverage_tolerance, "reference");

  const int groups = std::max(2, options.jackknife_groups);
  const GroupedCounts cf = grouped_counts(f, axes, groups);
  const double nf = static_cast<double>(f.size());
  const std::vector<double> pf = smooth(cf.total, axes, h, nf);
  const std::vector<double> pr = smooth(ref, axes, h, 1.0);
  check_coverage(mass(pf, cell), options.coverage_tolerance, "sample");

  DistanceEstimate e;
  e.method = "density-grid-vs-smoothed-pdf";
  e.value = l1(pf, pr, cell);
  std::vector<double> theta;
  for (int k = 0; k < groups; ++k) {
    const double mf = nf - static_cast<double>(f.size() * (k + 1) / groups - f.size() * k / groups);
    theta.push_back(l1(smooth(minus(cf.total, cf.groups[k]), axes, h, mf), pr, cell));
  }
  const double jk = jackknife_se(theta);
  const double alt = l1(smooth(cf.total, axes, h_alt, nf), smooth(ref, axes, h_alt, 1.0), cell);
  e.se = std::sqrt(jk * jk + (alt - e.value) * (alt - e.value));
  return e;
}

// ---------------------------------------------------------------------------
// Wasserstein

double w1_sorted(std::vector<double> x, std::vector<double> y) {
  if (x.empty() || y.empty()) throw ArgumentError("w1: empty sample");
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  if (x.size() == y.size()) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += std::abs(x[i] - y[i]);
    return s / static_cast<double>(x.size());
  }
  // Integrate |F_x - F_y| over the merged support.
  const double nx = static_cast<double>(x.size());
  const double ny = static_cast<double>(y.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double prev = std::min(x[0], y[0]);
  double s = 0.0;
  while (i < x.size() || j < y.size()) {
    const double next = (j >= y.size() || (i < x.size() && x[i] <= y[j])) ? x[i] : y[j];
    s += std::abs(static_cast<double>(i) / nx - static_cast<double>(j) / ny) * (next - prev);
    prev = next;
    if (i < x.size() && x[i] == next) ++i;
    else ++j;
  }
  return s;
}

namespace {

DistanceEstimate w1_one_dim(const std::vector<double>& x, const std::vector<double>& y) {
  DistanceEstimate e;
  e.method = "exact-empirical";
  e.value = w1_sorted(x, y);
  constexpr int kBatches = 10;
  if (x.size() >= 20 * kBatches && y.size() >= 20 * kBatches) {
    std::vector<double> b;
    for (int k = 0; k < kBatches; ++k) {
      const std::size_t xb = k * x.size() / kBatches;
      const std::size_t xe = (k + 1) * x.size() / kBatches;
      const std::size_t yb = k * y.size() / kBatches;
      const std::size_t ye = (k + 1) * y.size() / kBatches;
      b.push_back(w1_sorted({x.begin() + static_cast<std::ptrdiff_t>(xb), x.begin() + static_cast<std::ptrdiff_t>(xe)},
                            {y.begin() + static_cast<std::ptrdiff_t>(yb), y.begin() + static_cast<std::ptrdiff_t>(ye)}));
    }
    e.se = std_dev(b) / std::sqrt(static_cast<double>(kBatches));
  }
  return e;
}

}  // namespace

DistanceEstimate estimate_w1(const EmpiricalLaw& f, const EmpiricalLaw& g, int directions, std::uint64_t seed) {
  if (f.dim() != g.dim()) throw ArgumentError("estimate_w1: laws have different dimensions");
  const int d = f.dim();
  if (d == 1) return w1_one_dim(column(f, 0), column(g, 0));
  if (directions < 1) throw ArgumentError("estimate_w1: need at least one direction");
  NormalSampler s(substream_seed(seed, 0x5111ced));
  std::vector<double> vals;
  for (int k = 0; k < directions; ++k) {
    Eigen::VectorXd u(d);
    for (int j = 0; j < d; ++j) u[j] = s();
    u.normalize();
    const Eigen::VectorXd pf = f.samples() * u;
    const Eigen::VectorXd pg = g.samples() * u;
    vals.push_back(w1_sorted({pf.data(), pf.data() + pf.size()}, {pg.data(), pg.data() + pg.size()}));
  }
  DistanceEstimate e;
  e.method = "sliced";
  e.lower_bound = true;
  double mean = 0.0;
  for (double v : vals) mean += v;
  e.value = mean / directions;
  e.se = directions > 1 ? std_dev(vals) / std::sqrt(static_cast<double>(directions)) : 0.0;
  return e;
}

DistanceEstimate estimate_w1(const EmpiricalLaw& f, const std::function<double(double)>& quantile) {
  if (f.dim() != 1) throw ArgumentError("estimate_w1: quantile form needs a one-dimensional law");
  std::vector<double> x = column(f, 0);
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  std::vector<double> terms(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) terms[i] = std::abs(x[i] - quantile((static_cast<double>(i) + 0.5) / n));
  DistanceEstimate e;
  e.method = "empirical-vs-quantile";
  e.value = pairwise_sum(terms) / n;
  // Batch-means error from interleaved subsamples (each still spans all quantiles).
  constexpr int kBatches = 10;
  std::vector<double> b;
  for (int k = 0; k < kBatches; ++k) {
    std::vector<double> sub;
    for (std::size_t i = static_cast<std::size_t>(k); i < x.size(); i += kBatches) sub.push_back(x[i]);
    const double m = static_cast<double>(sub.size());
    double s = 0.0;
    for (std::size_t i = 0; i < sub.size(); ++i) s += std::abs(sub[i] - quantile((static_cast<double>(i) + 0.5) / m));
    b.push_back(s / m);
  }
  e.se = std_dev(b) / std::sqrt(static_cast<double>(kBatches));
  return e;
}

// ---------------------------------------------------------------------------
// Characteristic functions

namespace {

std::vector<Eigen::VectorXd> frequency_grid(int d, double radius, int points) {
  std::vector<Eigen::VectorXd> grid;
  if (d == 1) {
    for (int k = 0; k <= points; ++k) grid.push_back(Eigen::VectorXd::Constant(1, radius * k / points));
    return grid;
  }
  const int per_axis = std::max(3, static_cast<int>(std::lround(std::pow(points, 1.0 / d))));
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  while (true) {
    Eigen::VectorXd t(d);
    for (int j = 0; j < d; ++j) t[j] = -radius + 2.0 * radius * idx[j] / (per_axis - 1);
    if (t.norm() <= radius * (1.0 + 1e-12)) grid.push_back(t);
    int j = 0;
    while (j < d && ++idx[j] == per_axis) idx[j++] = 0;
    if (j == d) break;
  }
  return grid;
}

double cf_sup(const EmpiricalLaw& f, const EmpiricalLaw& g, const std::vector<Eigen::VectorXd>& grid) {
  std::vector<double> diffs(grid.size());
  for_each_block(grid.size(), [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      const Eigen::VectorXd pf = f.samples() * grid[k];
      const Eigen::VectorXd pg = g.samples() * grid[k];
      std::complex<double> cf(0.0, 0.0);
      std::complex<double> cg(0.0, 0.0);
      for (Eigen::Index i = 0; i < pf.size(); ++i) cf += std::complex<double>(std::cos(pf[i]), std::sin(pf[i]));
      for (Eigen::Index i = 0; i < pg.size(); ++i) cg += std::complex<double>(std::cos(pg[i]), std::sin(pg[i]));
      diffs[k] = std::abs(cf / static_cast<double>(pf.size()) - cg / static_cast<double>(pg.size()));
    }
  });
  return *std::max_element(diffs.begin(), diffs.end());
}

}  // namespace

DistanceEstimate estimate_cf(const EmpiricalLaw& f, const EmpiricalLaw& g, double radius, int grid_points) {
  if (f.dim() != g.dim()) throw ArgumentError("estimate_cf: laws have different dimensions");
  if (!(radius > 0.0)) throw ArgumentError("estimate_cf: radius must be positive");
  if (grid_points < 2) throw ArgumentError("estimate_cf: need at least two grid points");
  const int d = f.dim();
  const double coarse = cf_sup(f, g, frequency_grid(d, radius, grid_points));
  const double fine = cf_sup(f, g, frequency_grid(d, radius, d == 1 ? 2 * grid_points : (1 << d) * grid_points));
  DistanceEstimate e;
  e.method = "empirical-cf-grid";
  e.value = fine;
  e.se = std::sqrt(1.0 / static_cast<double>(f.size()) + 1.0 / static_cast<double>(g.size()));
  if (fine > 0.0 && std::abs(fine - coarse) > 0.05 * fine) {
    e.warnings.push_back("resolution: refining the frequency grid changed the estimate by more than 5%");
  }
  return e;
}

// ---------------------------------------------------------------------------
// d_k dictionary

namespace {

enum class ElementKind { sinusoid, bump, ramp };

struct Element {
  ElementKind kind;
  Eigen::VectorXd dir;     // unit direction (sinusoid, ramp)
  Eigen::VectorXd center;  // bump center
  double freq = 1.0;
  double phase = 0.0;
  double scale = 1.0;
  double offset = 0.0;
  double norm = 1.0;
};

double eval(const Element& e, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  switch (e.kind) {
    case ElementKind::sinusoid: return std::sin(e.freq * x.dot(e.dir.transpose()) + e.phase);
    case ElementKind::bump: return std::exp(-0.5 * (x - e.center.transpose()).squaredNorm() / (e.scale * e.scale));
    case ElementKind::ramp: return std::tanh((x.dot(e.dir.transpose()) - e.offset) / e.scale);
  }
  return 0.0;
}

Jet tanh_jet(const Jet& t) { return 1.0 - 2.0 / (exp(2.0 * t) + 1.0); }

// sum_{|a|=k} |u^a| for a unit direction u.
double direction_weight(const Eigen::VectorXd& u, int k) {
  const JetLayout& layout = *JetLayout::get(static_cast<int>(u.size()), k);
  double s = 0.0;
  for (int i = layout.degree_offset(k); i < layout.degree_offset(k + 1); ++i) {
    double p = 1.0;
    auto ex = layout.exponents(i);
    for (int j = 0; j < static_cast<int>(u.size()); ++j) p *= std::pow(std::abs(u[j]), ex[j]);
    s += p;
  }
  return s;
}

double element_norm(const Element& e, int k, int d) {
  if (e.kind == ElementKind::sinusoid) return std::pow(e.freq, k) * direction_weight(e.dir, k);
  if (e.kind == ElementKind::ramp) {
    // Profile derivative sup on a fine grid of the scaled variable.
    double sup = 0.0;
    for (int i = 0; i <= 4000; ++i) {
      const Jet t = lift(Eigen::VectorXd::Constant(1, -10.0 + 20.0 * i / 4000.0), k)[0];
      const std::vector<int> a{k};
      sup = std::max(sup, std::abs(tanh_jet(t).derivative(a)));
    }
    return sup * std::pow(e.scale, -k) * direction_weight(e.dir, k);
  }
  // Bump: per-multi-index sup over a grid of +-6 scales around the center.
  const int per_axis = d == 1 ? 801 : 61;
  const JetLayout& layout = *JetLayout::get(d, k);
  const int first = layout.degree_offset(k);
  std::vector<double> sup(static_cast<std::size_t>(layout.degree_offset(k + 1) - first), 0.0);
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  while (true) {
    Eigen::VectorXd p(d);
    for (int j = 0; j < d; ++j) p[j] = e.center[j] + e.scale * (-6.0 + 12.0 * idx[j] / (per_axis - 1));
    const std::vector<Jet> x = lift(p, k);
    Jet r2 = (x[0] - e.center[0]) * (x[0] - e.center[0]);
    for (int j = 1; j < d; ++j) r2 += (x[j] - e.center[j]) * (x[j] - e.center[j]);
    const Jet v = exp(r2 * (-0.5 / (e.scale * e.scale)));
    for (std::size_t a = 0; a < sup.size(); ++a) sup[a] = std::max(sup[a], std::abs(v.values()[first + static_cast<int>(a)]));
    int j = 0;
    while (j < d && ++idx[j] == per_axis) idx[j++] = 0;
    if (j == d) break;
  }
  double s = 0.0;
  for (double v : sup) s += v;
  return s;
}

}  // namespace

DistanceEstimate estimate_dk(const EmpiricalLaw& f, const EmpiricalLaw& g, int k, int dictionary_size,
                             std::uint64_t seed) {
  if (f.dim() != g.dim()) throw ArgumentError("estimate_dk: laws have different dimensions");
  if (k < 1) throw ArgumentError("estimate_dk: k must be >= 1");
  if (dictionary_size < 1) throw ArgumentError("estimate_dk: empty dictionary");
  const int d = f.dim();
  Eigen::VectorXd mean = 0.5 * (f.samples().colwise().mean() + g.samples().colwise().mean()).transpose();
  double sd = 0.0;
  for (int j = 0; j < d; ++j) sd += std_dev(column(f, j)) / d;
  if (!(sd > 0.0)) sd = 1.0;

  NormalSampler s(substream_seed(seed, 0xd1c7));
  std::vector<Element> dict;
  for (int i = 0; i < dictionary_size; ++i) {
    Element e;
    e.kind = static_cast<ElementKind>(i % 3);
    e.dir.resize(d);
    for (int j = 0; j < d; ++j) e.dir[j] = s();
    e.dir.normalize();
    e.center = mean + sd * Eigen::VectorXd::NullaryExpr(d, [&] { return s(); });
    e.freq = std::exp(std::log(0.05) + s.uniform() * (std::log(5.0) - std::log(0.05))) / sd;
    e.phase = 2.0 * std::numbers::pi * s.uniform();
    e.scale = std::exp(std::log(0.2) + s.uniform() * (std::log(20.0) - std::log(0.2))) * sd;
    e.offset = e.dir.dot(e.center);
    dict.push_back(std::move(e));
  }

  std::vector<double> gap(dict.size());
  std::vector<double> gap_se(dict.size());
  for_each_block(dict.size(), [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      Element& e = dict[i];
      e.norm = element_norm(e, k, d);
      auto moments = [&](const EmpiricalLaw& law, double& m, double& v) {
        const Eigen::Index n = static_cast<Eigen::Index>(law.size());
        double s1 = 0.0;
        double s2 = 0.0;
        for (Eigen::Index r = 0; r < n; ++r) {
          const double val = eval(e, law.samples().row(r));
          s1 += val;
          s2 += val * val;
        }
        m = s1 / n;
        v = std::max(0.0, s2 / n - m * m) / n;
      };
      double mf = 0.0, vf = 0.0, mg = 0.0, vg = 0.0;
      moments(f, mf, vf);
      moments(g, mg, vg);
      gap[i] = std::abs(mf - mg) / e.norm;
      gap_se[i] = std::sqrt(vf + vg) / e.norm;
    }
  });
  const auto best = std::max_element(gap.begin(), gap.end()) - gap.begin();
  DistanceEstimate out;
  out.method = "dictionary";
  out.lower_bound = true;
  out.value = gap[best];
  out.se = gap_se[best];
  return out;
}

// ---------------------------------------------------------------------------
// Bounds and fits

int q_of_epsilon(int p, int p_prime, double epsilon) {
  if (p < 1 || p_prime < 1) throw ArgumentError("q_of_epsilon: p and p' must be >= 1");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ArgumentError("q_of_epsilon: epsilon must lie in (0,1)");
  constexpr double guard = 1e-9;
  const double a = 4.0 * p / epsilon;
  const double b = p_prime / (2.0 * epsilon);
  const int qa = static_cast<int>(std::floor(a * (1.0 + guard))) + 1;
  const int qb = static_cast<int>(std::floor(b * (1.0 + guard))) + 1;
  return std::max(qa, qb);
}

BoundValue bound_rhs(const BoundProfile& pr) {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ArgumentError(std::string("bound_rhs: ") + what);
  };
  require(pr.q >= 1, "q must be >= 1");
  require(pr.m >= 0 && pr.k >= 0, "m and k must be >= 0");
  require(pr.eta > 0.0, "eta must be positive");
  require(pr.delta > 0.0 && pr.delta <= 1.0, "delta must lie in (0,1]");
  require(pr.epsilon > 0.0 && pr.epsilon < 1.0, "epsilon must lie in (0,1)");
  require(pr.kappa > 0.0, "kappa must be positive");
  const double q = pr.q;
  BoundValue r;
  switch (pr.kind) {
    case BoundKind::e7:
      r.value = pr.f_sup * (pr.prob_small_det + std::pow(pr.delta, q) * std::pow(pr.eta, -2.0 * q) * pr.c_norm);
      r.exponent = q;
      break;
    case BoundKind::e6:
      r.value = pr.df_sup * pr.prob_small_det +
                std::pow(pr.delta, q) * std::pow(pr.eta, -2.0 * (q + pr.m)) * pr.f_sup * pr.c_norm;
      r.exponent = q;
      break;
    case BoundKind::e8b: {
      const double a = pr.kappa * q / (pr.kappa + 2.0 * q);
      r.value = pr.f_sup * std::pow(pr.c_norm, pr.kappa / (pr.kappa + 2.0 * q)) *
                std::pow(pr.theta, 2.0 * q / (pr.kappa + 2.0 * q)) * std::pow(pr.delta, a);
      r.exponent = a;
      break;
    }
    case BoundKind::e8c: {
      const double a = pr.kappa * q / (pr.kappa + 2.0 * q);
      auto ckq = [&](double theta, double c2) {
        return std::pow(theta, 2.0 * q / (pr.kappa + 2.0 * q)) * std::pow(c2, pr.kappa / (pr.kappa + 2.0 * q));
      };
      const double kk = pr.k;
      r.exponent = a / (kk + a);
      r.value = std::pow(ckq(pr.theta, pr.c_norm_f2) + ckq(pr.theta_g, pr.c_norm_g), kk / (kk + a)) *
                std::pow(pr.dist, r.exponent);
      break;
    }
    case BoundKind::e7c:
      r.value = std::pow(pr.delta, q) * pr.f_sup * pr.q_f;
      r.exponent = q;
      break;
    case BoundKind::e12a: {
      const double kk = pr.k;
      r.exponent = q / (q + kk);
      r.value = std::pow(pr.q_f + pr.q_g, kk / (q + kk)) * std::pow(pr.dist, r.exponent);
      break;
    }
    case BoundKind::e12c:
      r.exponent = 1.0 - pr.epsilon;
      r.value = (1.0 + pr.q_f + pr.c_norm + pr.h_inverse_norm) * std::pow(pr.dist + pr.dist_det, r.exponent);
      break;
    case BoundKind::chaos_phi:
      require(pr.x > 0.0, "Phi needs a positive argument");
      r.value = std::abs(std::log(pr.x)) * std::sqrt(pr.x);
      r.exponent = 0.5;
      break;
  }
  return r;
}

namespace {

double t_quantile_975(int df) {
  static const double table[] = {12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228,
                                 2.201,  2.179, 2.160, 2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086,
                                 2.080,  2.074, 2.069, 2.064, 2.060, 2.056, 2.052, 2.048, 2.045, 2.042};
  if (df < 1) return std::numeric_limits<double>::infinity();
  if (df <= 30) return table[df - 1];
  return 1.96;
}

}  // namespace

RateFit fit_rate(std::span<const double> scales, std::span<const double> values) {
  if (scales.size() != values.size()) throw ArgumentError("fit_rate: series lengths differ");
  if (scales.size() < 3) throw ArgumentError("fit_rate: need at least three points");
  const std::size_t n = scales.size();
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(scales[i] > 0.0) || !(values[i] > 0.0)) throw ArgumentError("fit_rate: scales and values must be positive");
    x[i] = std::log(scales[i]);
    y[i] = std::log(values[i]);
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i] / n;
    my += y[i] / n;
  }
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw ArgumentError("fit_rate: scales must not all coincide");
  RateFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - fit.intercept - fit.slope * x[i];
    rss += r * r;
  }
  fit.slope_se = std::sqrt(rss / static_cast<double>(n - 2) / sxx);
  const double t = t_quantile_975(static_cast<int>(n) - 2);
  fit.slope_lo = fit.slope - t * fit.slope_se;
  fit.slope_hi = fit.slope + t * fit.slope_se;
  return fit;
}

double calibrate_constant(std::span<const double> lhs, std::span<const double> rhs, std::size_t index) {
  if (lhs.size() != rhs.size() || index >= lhs.size()) throw ArgumentError("calibrate_constant: bad series");
  if (!(rhs[index] > 0.0)) throw ArgumentError("calibrate_constant: right-hand side must be positive");
  return lhs[index] / rhs[index];
}

bool bound_holds(std::span<const double> lhs, std::span<const double> lhs_se, std::span<const double> rhs, double c,
                 double z) {
  if (lhs.size() != rhs.size() || lhs.size() != lhs_se.size()) throw ArgumentError("bound_holds: series lengths differ");
  for (std::size_t i = 0; i < lhs.size(); ++i) {
    if (lhs[i] > c * rhs[i] + z * lhs_se[i]) return false;
  }
  return true;
}

}  // namespace regtv
