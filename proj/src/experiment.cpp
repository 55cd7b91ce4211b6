#include "regtv/experiment.hpp"

#include "regtv/chaos.hpp"
#include "regtv/dirichlet.hpp"
#include "regtv/distances.hpp"
#include "regtv/errors.hpp"
#include "regtv/functional.hpp"
#include "regtv/ibp.hpp"
#include "regtv/quadrature.hpp"
#include "regtv/random.hpp"
#include "regtv/sde.hpp"

#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace regtv {

using nlohmann::json;

namespace {

const char* const kVersion = "regtv 1.0.0";
const std::vector<std::string> kExperiments = {"E1", "E2", "E3", "E4", "E5"};

template <class T>
void require_positive(const std::vector<T>& grid, const char* name) {
  if (grid.empty()) throw ArgumentError(std::string("config: grid '") + name + "' is empty");
  for (T v : grid) {
    if (!(v > 0)) throw ArgumentError(std::string("config: grid '") + name + "' has a nonpositive entry");
  }
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

void ExperimentConfig::validate() const {
  if (std::find(kExperiments.begin(), kExperiments.end(), experiment) == kExperiments.end()) {
    throw ArgumentError("config: unknown experiment '" + experiment + "' (expected E1..E5)");
  }
  if (!seed) throw ArgumentError("config: a seed is required");
  require_positive(delta, "delta");
  require_positive(eta, "eta");
  require_positive(s, "s");
  require_positive(q, "q");
  require_positive(n, "n");
  require_positive(m, "m");
  if (models.empty()) throw ArgumentError("config: no model selected");
  for (const std::string& name : models) make_model(name);
  if (n_ref < 1) throw ArgumentError("config: n_ref must be positive");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ArgumentError("config: epsilon must lie in (0,1)");
  if (det_paths < 2) throw ArgumentError("config: det_paths must be >= 2");
  for (double d : delta) {
    if (d > 1.0) throw ArgumentError("config: delta must lie in (0,1]");
  }
}

std::string ExperimentConfig::canonical_json() const {
  json j;
  j["experiment"] = experiment;
  j["seed"] = seed ? json(*seed) : json(nullptr);
  j["samples"] = samples;
  j["models"] = models;
  j["delta"] = delta;
  j["eta"] = eta;
  j["s"] = s;
  j["q"] = q;
  j["n"] = n;
  j["m"] = m;
  j["n_ref"] = n_ref;
  j["epsilon"] = epsilon;
  j["band"] = band;
  j["det_paths"] = det_paths;
  j["kernel_a"] = kernel.a;
  j["kernel_b"] = kernel.b;
  j["kernel_half_width"] = kernel.half_width;
  j["kernel_grid"] = kernel.grid_size;
  return j.dump();
}

ExperimentConfig default_config(const std::string& experiment) {
  ExperimentConfig c;
  c.experiment = experiment;
  c.delta = {0.2, 0.1, 0.05, 0.025, 0.0125};
  c.eta = {1e-4, 3e-4, 1e-3, 3e-3, 1e-2};
  c.s = {0.4, 0.2, 0.1};
  c.q = {4};
  c.n = {4, 8, 16, 32, 64};
  c.m = {8, 16, 32, 64};
  c.models = {"linear-ou", "elliptic-2d"};
  if (experiment == "E2") {
    c.delta = {0.4, 0.2, 0.1, 0.05};
    c.eta = {0.05, 0.2, 0.8};
    c.q = {1, 2};
  } else if (experiment == "E4") {
    c.models = {"hormander-grushin"};
  }
  return c;
}

namespace {

template <class T>
std::vector<T> as_list(const json& v, const std::string& key) {
  try {
    if (v.is_array()) return v.get<std::vector<T>>();
    return {v.get<T>()};
  } catch (const json::exception&) {
    throw ArgumentError("config: bad value for '" + key + "'");
  }
}

template <class T>
T as_scalar(const json& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw ArgumentError("config: bad value for '" + key + "'");
  }
}

void apply_json(ExperimentConfig& c, const std::string& key, const json& v) {
  if (key == "experiment") c.experiment = as_scalar<std::string>(v, key);
  else if (key == "seed") c.seed = as_scalar<std::uint64_t>(v, key);
  else if (key == "samples") c.samples = as_scalar<std::size_t>(v, key);
  else if (key == "out") c.out_dir = as_scalar<std::string>(v, key);
  else if (key == "model" || key == "models") c.models = as_list<std::string>(v, key);
  else if (key == "delta") c.delta = as_list<double>(v, key);
  else if (key == "eta") c.eta = as_list<double>(v, key);
  else if (key == "s") c.s = as_list<double>(v, key);
  else if (key == "q") c.q = as_list<int>(v, key);
  else if (key == "n") c.n = as_list<int>(v, key);
  else if (key == "m") c.m = as_list<int>(v, key);
  else if (key == "n_ref") c.n_ref = as_scalar<int>(v, key);
  else if (key == "epsilon") c.epsilon = as_scalar<double>(v, key);
  else if (key == "band") c.band = as_scalar<double>(v, key);
  else if (key == "det_paths") c.det_paths = as_scalar<std::size_t>(v, key);
  else if (key == "kernel_a") c.kernel.a = as_scalar<double>(v, key);
  else if (key == "kernel_b") c.kernel.b = as_scalar<double>(v, key);
  else if (key == "kernel_half_width") c.kernel.half_width = as_scalar<double>(v, key);
  else if (key == "kernel_grid") c.kernel.grid_size = as_scalar<int>(v, key);
  else throw ArgumentError("config: unknown key '" + key + "'");
}

}  // namespace

void apply_setting(ExperimentConfig& config, const std::string& key, const std::string& value_json) {
  json v = json::parse(value_json, nullptr, false);
  if (v.is_discarded()) v = value_json;  // bare strings such as model names
  apply_json(config, key, v);
}

void apply_config_text(ExperimentConfig& config, const std::string& json_text) {
  const json j = json::parse(json_text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ArgumentError("config: expected a flat JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.value().is_object()) throw ArgumentError("config: nested value for '" + it.key() + "'");
    apply_json(config, it.key(), it.value());
  }
}

bool Report::passed() const {
  return failures.empty() && std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------
// Experiments

namespace {

struct Params {
  std::vector<std::pair<std::string, std::string>> items;
  Params& add(const std::string& k, const std::string& v) {
    items.emplace_back(k, v);
    return *this;
  }
  Params& add(const std::string& k, double v) { return add(k, fmt(v)); }
  std::string str() const {
    std::string s;
    for (const auto& [k, v] : items) s += (s.empty() ? "" : ";") + k + "=" + v;
    return s;
  }
};

template <class F>
void guarded(Report& r, const std::string& point, F&& body) {
  try {
    body();
  } catch (const std::exception& e) {
    r.failures.push_back({point, e.what()});
  }
}

void add_check(Report& r, const std::string& name, bool pass, const std::string& detail) {
  r.checks.push_back({name, pass, detail});
}

ReportRow slope_row(const std::string& params, const RateFit& f, std::optional<double> fit_c = std::nullopt) {
  ReportRow row;
  row.params = params;
  row.slope = f.slope;
  row.slope_lo = f.slope_lo;
  row.slope_hi = f.slope_hi;
  row.fit_c = fit_c;
  return row;
}

std::string range_detail(double v, double lo, double hi) {
  return "measured " + fmt(v) + ", accepted [" + fmt(lo) + ", " + fmt(hi) + "]";
}

std::size_t samples_or(const ExperimentConfig& c, std::size_t fallback) { return c.samples > 0 ? c.samples : fallback; }

double max_ratio(const std::vector<double>& lhs, const std::vector<double>& rhs) {
  double c = 0.0;
  for (std::size_t i = 0; i < lhs.size(); ++i) c = std::max(c, lhs[i] / rhs[i]);
  return c;
}

// E1: F = Delta^2, small-ball exponent and mollification gap of the sign function.
void run_e1(const ExperimentConfig& c, Report& r) {
  const std::size_t n = samples_or(c, 1000000);
  const std::uint64_t seed = *c.seed;
  const Eigen::MatrixXd x = standard_normals(seed, n, 1);
  Eigen::VectorXd f(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < f.size(); ++i) f[i] = x(i, 0) * x(i, 0);

  std::vector<double> etas, probs, exact;
  for (double eta : c.eta) {
    guarded(r, "eta=" + fmt(eta), [&] {
      Eigen::VectorXd ind(f.size());
      for (Eigen::Index i = 0; i < f.size(); ++i) ind[i] = 4.0 * f[i] <= eta ? 1.0 : 0.0;
      const Estimate p = mean_estimate(ind);
      if (!(p.value > 0.0)) throw DataError("no samples with det sigma_F <= eta; increase samples");
      ReportRow row;
      row.params = Params().add("quantity", "P(det<=eta)").add("eta", eta).str();
      row.lhs = p.value;
      row.lhs_se = p.se;
      row.rhs = 2.0 * normal_cdf(0.5 * std::sqrt(eta)) - 1.0;
      row.rhs_exact = true;
      r.rows.push_back(row);
      etas.push_back(eta);
      probs.push_back(p.value);
      exact.push_back(*row.rhs);
    });
  }
  double theta = 0.0;
  for (std::size_t i = 0; i < etas.size(); ++i) theta = std::max(theta, exact[i] / std::sqrt(etas[i]));
  if (etas.size() >= 3) {
    const RateFit fit = fit_rate(etas, probs);
    r.rows.push_back(slope_row(Params().add("quantity", "kappa").str(), fit));
    add_check(r, "E1 small-ball exponent kappa = 0.5 +- 0.05", std::abs(fit.slope - 0.5) <= 0.05,
              range_detail(fit.slope, 0.45, 0.55));
  }

  const SuperKernel kernel = SuperKernel::build(c.kernel);
  std::vector<double> deltas, gaps, gap_rhs;
  for (double delta : c.delta) {
    for (int q : c.q) {
      guarded(r, "delta=" + fmt(delta) + ";q=" + std::to_string(q), [&] {
        Eigen::VectorXd v(f.size());
        for (Eigen::Index i = 0; i < f.size(); ++i) v[i] = 1.0 - mollified_sign(kernel, delta, f[i]);
        const Estimate gap = mean_estimate(v);
        BoundProfile p;
        p.kind = BoundKind::e8b;
        p.q = q;
        p.kappa = 0.5;
        p.theta = theta;
        p.delta = delta;
        p.c_norm = 1.0;
        ReportRow row;
        row.params = Params().add("quantity", "sign_gap").add("delta", delta).add("q", q).str();
        row.lhs = std::abs(gap.value);
        row.lhs_se = gap.se;
        row.rhs = bound_rhs(p).value;
        row.rhs_exact = true;
        r.rows.push_back(row);
        if (q == c.q.front()) {
          deltas.push_back(delta);
          gaps.push_back(std::abs(gap.value));
          gap_rhs.push_back(*row.rhs);
        }
      });
    }
  }
  if (deltas.size() >= 3) {
    const RateFit fit = fit_rate(deltas, gaps);
    r.rows.push_back(slope_row(Params().add("quantity", "sign_gap_rate").str(), fit, max_ratio(gaps, gap_rhs)));
    add_check(r, "E1 mollification gap slope in [0.25, 0.6]", fit.slope >= 0.25 && fit.slope <= 0.6,
              range_detail(fit.slope, 0.25, 0.6));
  }
}

// |E 1{F <= 0} - E f_delta(F)| for F = Delta_1^2 + Delta_2^2 ~ Exp(1/2), by quadrature.
double chi2_gap(const SuperKernel& kernel, double delta) {
  const GaussianRule gl = gauss_legendre(24);
  const double support = kernel.grid()[kernel.grid().size() - 1] * delta;
  const std::vector<double> edges = {0.0, support, 100.0};
  double total = 0.0;
  for (std::size_t k = 1; k < edges.size(); ++k) {
    const int panels = k == 1 ? 256 : 64;
    const double w = (edges[k] - edges[k - 1]) / panels;
    for (int p = 0; p < panels; ++p) {
      const double mid = edges[k - 1] + (p + 0.5) * w;
      for (Eigen::Index i = 0; i < gl.nodes.size(); ++i) {
        const double x = mid + 0.5 * w * gl.nodes[i];
        total += 0.5 * w * gl.weights[i] * (1.0 - kernel.cdf(x / delta)) * 0.5 * std::exp(-0.5 * x);
      }
    }
  }
  return std::abs(total);
}

// E2: mollification error surface for a nondegenerate-away-from-zero F and the
// density bound on Gaussian pairs.
void run_e2(const ExperimentConfig& c, Report& r) {
  const SuperKernel kernel = SuperKernel::build(c.kernel);
  const Functional chi2 = scalar_functional(2, [](const std::vector<Jet>& x) { return x[0] * x[0] + x[1] * x[1]; });
  const GaussianSpace space(2, 40);
  std::map<int, double> c_norm;
  for (int q : c.q) {
    guarded(r, "C_q q=" + std::to_string(q), [&] {
      c_norm[q] = space.expectation([&](const Eigen::VectorXd& x) { return nondegeneracy_stats(chi2, q, 0, x).c_n; }).value;
    });
  }

  std::vector<double> slice;
  std::vector<double> lhs_all, rhs_all;
  for (double delta : c.delta) {
    double gap = 0.0;
    guarded(r, "delta=" + fmt(delta), [&] { gap = chi2_gap(kernel, delta); });
    slice.push_back(gap);
    for (double eta : c.eta) {
      for (int q : c.q) {
        if (!c_norm.count(q)) continue;
        guarded(r, "delta=" + fmt(delta) + ";eta=" + fmt(eta) + ";q=" + std::to_string(q), [&] {
          BoundProfile p;
          p.kind = BoundKind::e7;
          p.q = q;
          p.delta = delta;
          p.eta = eta;
          p.prob_small_det = 1.0 - std::exp(-eta / 8.0);
          p.c_norm = c_norm[q];
          ReportRow row;
          row.params = Params().add("quantity", "mollification_error").add("delta", delta).add("eta", eta).add("q", q).str();
          row.lhs = gap;
          row.lhs_exact = true;
          row.rhs = bound_rhs(p).value;
          row.rhs_exact = true;
          r.rows.push_back(row);
          lhs_all.push_back(gap);
          rhs_all.push_back(*row.rhs);
        });
      }
    }
  }
  if (!lhs_all.empty()) {
    ReportRow row;
    row.params = Params().add("quantity", "mollification_error_constant").str();
    row.fit_c = max_ratio(lhs_all, rhs_all);
    r.rows.push_back(row);
  }
  std::vector<std::size_t> order(c.delta.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return c.delta[a] > c.delta[b]; });
  bool monotone = true;
  for (std::size_t i = 1; i < order.size(); ++i) monotone = monotone && slice[order[i]] < slice[order[i - 1]];
  add_check(r, "E2 mollification error decreases monotonically as delta -> 0", monotone,
            "gaps on the delta grid (descending delta): " + [&] {
              std::string s;
              for (std::size_t i : order) s += (s.empty() ? "" : ", ") + fmt(slice[i]);
              return s;
            }());

  // Density distance versus W1 for F = Delta, G_s = sqrt(1 + s) Delta (coupled).
  const std::size_t n = samples_or(c, 1000000);
  const std::uint64_t seed = *c.seed;
  const Eigen::MatrixXd x = standard_normals(seed, n, 1);
  auto weights = [&](double scale, Eigen::VectorXd& value, Eigen::VectorXd& w) {
    const Functional f = affine_functional(Eigen::MatrixXd::Constant(1, 1, scale), Eigen::VectorXd::Zero(1));
    value.resize(static_cast<Eigen::Index>(n));
    w.resize(static_cast<Eigen::Index>(n));
    const MultiIndex alpha{0};
    for_each_block(n, [&](std::size_t, std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        const Eigen::Index k = static_cast<Eigen::Index>(i);
        const std::vector<Jet> fj = f.evaluate(x.row(k).transpose(), 2);
        w[k] = weight(fj, fj[0].zero_like() + 1.0, alpha, std::nullopt).value();
        value[k] = fj[0].value();
      }
    });
  };
  Eigen::VectorXd fv, fw;
  weights(1.0, fv, fw);
  const EmpiricalLaw law_f(fv, seed, "E2:F");
  std::vector<double> grid;
  for (int i = 0; i <= 80; ++i) grid.push_back(-4.0 + 0.1 * i);

  std::vector<double> lhs, lhs_se, rhs, d1s, tv, tv_rhs;
  for (double s : c.s) {
    guarded(r, "s=" + fmt(s), [&] {
      const double b = std::sqrt(1.0 + s);
      Eigen::VectorXd gv, gw;
      weights(b, gv, gw);
      double best = -1.0, best_se = 0.0;
      Eigen::VectorXd diff(static_cast<Eigen::Index>(n));
      for (double g : grid) {
        for (Eigen::Index i = 0; i < diff.size(); ++i) diff[i] = (fv[i] > g ? fw[i] : 0.0) - (gv[i] > g ? gw[i] : 0.0);
        const Estimate e = mean_estimate(diff);
        if (std::abs(e.value) > best) {
          best = std::abs(e.value);
          best_se = e.se;
        }
      }
      const EmpiricalLaw law_g(gv, seed, "E2:G");
      const DistanceEstimate d1 = estimate_w1(law_f, law_g);
      ReportRow row;
      row.params = Params().add("quantity", "density_sup_vs_w1").add("s", s).str();
      row.lhs = best;
      row.lhs_se = best_se;
      row.rhs = std::pow(d1.value, 0.9);
      row.rhs_se = 0.9 * std::pow(d1.value, -0.1) * d1.se;
      r.rows.push_back(row);
      lhs.push_back(best);
      lhs_se.push_back(best_se);
      rhs.push_back(*row.rhs);
      d1s.push_back(d1.value);

      const DistanceEstimate t = estimate_tv(law_f, law_g);
      ReportRow trow;
      trow.params = Params().add("quantity", "tv_vs_w1").add("s", s).add("exponent", 0.8).str();
      trow.lhs = t.value;
      trow.lhs_se = t.se;
      trow.rhs = std::pow(d1.value, 0.8);
      trow.rhs_se = 0.8 * std::pow(d1.value, -0.2) * d1.se;
      r.rows.push_back(trow);
      tv.push_back(t.value);
      tv_rhs.push_back(*trow.rhs);
    });
  }
  if (lhs.size() == c.s.size() && lhs.size() >= 2) {
    const double cfit = max_ratio(lhs, rhs);
    const bool holds = bound_holds(lhs, lhs_se, rhs, cfit);
    std::optional<RateFit> fit;
    if (lhs.size() >= 3) fit = fit_rate(d1s, lhs);
    ReportRow row;
    row.params = Params().add("quantity", "density_sup_vs_w1_fit").add("exponent", 0.9).str();
    row.fit_c = cfit;
    if (fit) {
      row.slope = fit->slope;
      row.slope_lo = fit->slope_lo;
      row.slope_hi = fit->slope_hi;
    }
    r.rows.push_back(row);
    const bool exponent_ok = !fit || fit->slope_hi >= 0.9;
    add_check(r, "E2 density sup <= c (d1)^0.9 with one fitted c", holds && exponent_ok,
              "c = " + fmt(cfit) + ", log-log slope of density gap on d1 = " + (fit ? fmt(fit->slope) : "NA") +
                  " (upper CI " + (fit ? fmt(fit->slope_hi) : "NA") + ", needs >= 0.9)");
    ReportRow trow;
    trow.params = Params().add("quantity", "tv_vs_w1_fit").str();
    trow.fit_c = max_ratio(tv, tv_rhs);
    r.rows.push_back(trow);
  }
}

void tv_rate(const ExperimentConfig& c, Report& r, const std::string& model_name, double lo, double hi,
             const std::string& check_name) {
  const SdeModel model = make_model(model_name);
  const std::size_t paths = samples_or(c, 200000);
  const CoupledPaths cp = simulate_coupled(model, c.n, c.n_ref, paths, *c.seed);
  std::vector<double> ns, tvs;
  for (std::size_t l = 0; l < c.n.size(); ++l) {
    const int n = c.n[l];
    guarded(r, model_name + ";n=" + std::to_string(n), [&] {
      const DistanceEstimate tv = estimate_tv(cp.reference, cp.coarse[l]);
      ReportRow row;
      row.params = Params().add("model", model_name).add("quantity", "tv").add("n", n).add("n_ref", c.n_ref).str();
      row.lhs = tv.value;
      row.lhs_se = tv.se;
      row.rhs = 1.0 / n;
      row.rhs_exact = true;
      r.rows.push_back(row);
      ns.push_back(n);
      tvs.push_back(tv.value);

      const Eigen::MatrixXd diff = cp.reference.samples() - cp.coarse[l].samples();
      Eigen::VectorXd sq = diff.rowwise().squaredNorm();
      const Estimate ms = mean_estimate(sq);
      ReportRow srow;
      srow.params = Params().add("model", model_name).add("quantity", "strong_l2").add("n", n).str();
      srow.lhs = std::sqrt(ms.value);
      srow.lhs_se = ms.value > 0.0 ? 0.5 * ms.se / std::sqrt(ms.value) : 0.0;
      srow.rhs = 1.0 / std::sqrt(static_cast<double>(n));
      srow.rhs_exact = true;
      r.rows.push_back(srow);
    });
  }
  if (ns.size() >= 3) {
    const RateFit fit = fit_rate(ns, tvs);
    std::vector<double> inv(ns.size());
    for (std::size_t i = 0; i < ns.size(); ++i) inv[i] = 1.0 / ns[i];
    r.rows.push_back(slope_row(Params().add("model", model_name).add("quantity", "tv_rate").str(), fit,
                               max_ratio(tvs, inv)));
    add_check(r, check_name, fit.slope >= lo && fit.slope <= hi, range_detail(fit.slope, lo, hi));
  }
}

void run_e3(const ExperimentConfig& c, Report& r) {
  for (const std::string& model : c.models) {
    guarded(r, "model=" + model, [&] {
      tv_rate(c, r, model, -1.25, -0.70, "E3 " + model + " TV slope in [-1.25, -0.70]");
    });
  }
  r.notes.push_back("reference law: Euler scheme on the fine grid n_ref with coupled Brownian increments");
}

void run_e4(const ExperimentConfig& c, Report& r) {
  for (const std::string& name : c.models) {
    guarded(r, "model=" + name + ";hormander", [&] {
      const SdeModel model = make_model(name);
      const BracketReport br = hormander(model, model.x0, 1);
      for (int k = 0; k <= 1; ++k) {
        ReportRow row;
        row.params = Params().add("model", name).add("quantity", "lambda").add("depth", k).str();
        row.lhs = br.lambda[k];
        row.lhs_exact = true;
        r.rows.push_back(row);
      }
      add_check(r, "E4 " + name + " Lambda(x0) = 0 at depth 0 and > 0 at depth 1",
                br.lambda[0] <= 1e-12 && br.lambda[1] > 1e-12,
                "Lambda depth 0 = " + fmt(br.lambda[0]) + ", depth 1 = " + fmt(br.lambda[1]));
    });
    guarded(r, "model=" + name + ";tv", [&] {
      tv_rate(c, r, name, -0.85, -0.35, "E4 " + name + " TV slope in [-0.85, -0.35]");
    });
    guarded(r, "model=" + name + ";det", [&] {
      const SdeModel model = make_model(name);
      const CoupledPaths cp = simulate_coupled(model, c.n, c.n_ref, c.det_paths, substream_seed(*c.seed, 4), true);
      std::vector<double> ns, strong, weak;
      if ((cp.reference_det.array() - cp.reference_det[0]).abs().maxCoeff() == 0.0) {
        r.notes.push_back(name + ": det sigma is the same on every path, so det rows have zero spread");
      }
      for (std::size_t l = 0; l < c.n.size(); ++l) {
        const int n = c.n[l];
        const Eigen::VectorXd diff = (cp.reference_det - cp.coarse_det[l]).cwiseAbs();
        const Estimate l1 = mean_estimate(diff);
        ReportRow row;
        row.params = Params().add("model", name).add("quantity", "det_l1_strong").add("n", n).str();
        row.lhs = l1.value;
        row.lhs_se = l1.se;
        r.rows.push_back(row);
        const EmpiricalLaw ref(cp.reference_det, cp.reference.seed(), "det:ref");
        const EmpiricalLaw coarse(cp.coarse_det[l], cp.reference.seed(), "det:coarse");
        const DistanceEstimate d1 = estimate_w1(ref, coarse);
        const DistanceEstimate dx = estimate_w1(cp.reference, cp.coarse[l], 64, *c.seed);
        BoundProfile p;
        p.kind = BoundKind::e12c;
        p.epsilon = c.epsilon;
        p.dist = dx.value;
        p.dist_det = d1.value;
        p.q_f = 0.0;
        p.c_norm = 0.0;
        p.h_inverse_norm = 0.0;
        ReportRow wrow;
        wrow.params = Params().add("model", name).add("quantity", "det_d1").add("n", n).str();
        wrow.lhs = d1.value;
        wrow.lhs_se = d1.se;
        wrow.rhs = bound_rhs(p).value;
        wrow.rhs_se = (1.0 - c.epsilon) * std::pow(dx.value + d1.value, -c.epsilon) * std::hypot(dx.se, d1.se);
        r.rows.push_back(wrow);
        ns.push_back(n);
        strong.push_back(l1.value);
        weak.push_back(d1.value);
      }
      auto positive = [](const std::vector<double>& v) {
        return std::all_of(v.begin(), v.end(), [](double x) { return x > 0.0; });
      };
      if (ns.size() >= 3 && positive(strong)) {
        r.rows.push_back(slope_row(Params().add("model", name).add("quantity", "det_l1_strong_rate").str(),
                                   fit_rate(ns, strong)));
      }
      if (ns.size() >= 3 && positive(weak)) {
        r.rows.push_back(
            slope_row(Params().add("model", name).add("quantity", "det_d1_rate").str(), fit_rate(ns, weak)));
      }
      r.notes.push_back("det_d1 rows carry no target slope");
    });
  }
}

void run_e5(const ExperimentConfig& c, Report& r) {
  const std::size_t n = samples_or(c, 1000000);
  std::vector<double> cumulants, tvs, lhs_vals, w1s;
  for (int m : c.m) {
    guarded(r, "m=" + std::to_string(m), [&] {
      const QuadraticChaos chaos = chaos_family(m, c.band);
      const std::uint64_t seed = substream_seed(*c.seed, static_cast<std::uint64_t>(m));
      const EmpiricalLaw law = sample_chaos(chaos, n, seed);
      const FourthMomentReport fm = fourth_moment_stats(chaos, n, substream_seed(seed, 1));
      const DistanceEstimate tv =
          estimate_tv(law, std::function<double(const Eigen::VectorXd&)>([](const Eigen::VectorXd& x) {
                        return normal_pdf(x[0]);
                      }));
      ReportRow row;
      row.params = Params().add("quantity", "tv_vs_normal").add("m", m).add("band", c.band).str();
      row.lhs = tv.value;
      row.lhs_se = tv.se;
      row.rhs = fm.fourth_gap.value;
      row.rhs_exact = fm.fourth_gap.exact;
      if (!fm.fourth_gap.exact) row.rhs_se = fm.fourth_gap.se;
      r.rows.push_back(row);

      ReportRow brow;
      brow.params = Params().add("quantity", "fourth_moment_bound").add("m", m).str();
      brow.lhs = fm.lhs.value;
      brow.lhs_exact = fm.lhs.exact;
      if (!fm.lhs.exact) brow.lhs_se = fm.lhs.se;
      brow.rhs = fm.fourth_gap.value;
      brow.rhs_exact = fm.fourth_gap.exact;
      if (!fm.fourth_gap.exact) brow.rhs_se = fm.fourth_gap.se;
      r.rows.push_back(brow);

      ReportRow mrow;
      mrow.params = Params().add("quantity", "fourth_moment_bound_mc").add("m", m).str();
      mrow.lhs = fm.lhs_mc.value;
      mrow.lhs_se = fm.lhs_mc.se;
      mrow.rhs = fm.fourth_gap_mc.value;
      mrow.rhs_se = fm.fourth_gap_mc.se;
      r.rows.push_back(mrow);

      const double combined = std::hypot(fm.lhs_mc.se, fm.fourth_gap_mc.se);
      add_check(r, "E5 m=" + std::to_string(m) + " bound LHS <= RHS + 3 sigma",
                fm.lhs_mc.value <= fm.fourth_gap_mc.value + 3.0 * combined && fm.lhs.value <= fm.fourth_gap.value,
                "MC " + fmt(fm.lhs_mc.value) + " vs " + fmt(fm.fourth_gap_mc.value) + ", exact " + fmt(fm.lhs.value) +
                    " vs " + fmt(fm.fourth_gap.value));
      if (fm.lhs.exact) {
        const bool ok = std::abs(fm.lhs_mc.value - fm.lhs.value) <= 3.0 * fm.lhs_mc.se &&
                        std::abs(fm.fourth_gap_mc.value - fm.fourth_gap.value) <= 3.0 * fm.fourth_gap_mc.se;
        add_check(r, "E5 m=" + std::to_string(m) + " Monte Carlo agrees with trace formulas to 3 sigma", ok,
                  "LHS " + fmt(fm.lhs_mc.value) + " +- " + fmt(fm.lhs_mc.se) + " vs " + fmt(fm.lhs.value) +
                      "; fourth cumulant " + fmt(fm.fourth_gap_mc.value) + " +- " + fmt(fm.fourth_gap_mc.se) +
                      " vs " + fmt(fm.fourth_gap.value));
      }

      const DistanceEstimate w1 = estimate_w1(law, std::function<double(double)>(normal_quantile));
      ReportRow wrow;
      wrow.params = Params().add("quantity", "w1_vs_normal").add("m", m).str();
      wrow.lhs = w1.value;
      wrow.lhs_se = w1.se;
      wrow.rhs = std::sqrt(fm.lhs.value);
      wrow.rhs_exact = fm.lhs.exact;
      if (!fm.lhs.exact) wrow.rhs_se = 0.5 * fm.lhs.se / std::sqrt(fm.lhs.value);
      r.rows.push_back(wrow);

      BoundProfile phi;
      phi.kind = BoundKind::chaos_phi;
      phi.x = fm.lhs.value;
      ReportRow prow;
      prow.params = Params().add("quantity", "det_distance").add("m", m).str();
      prow.lhs = fm.det_distance.value;
      prow.lhs_se = fm.det_distance.se;
      prow.rhs = bound_rhs(phi).value;
      prow.rhs_exact = fm.lhs.exact;
      r.rows.push_back(prow);

      cumulants.push_back(fm.fourth_gap.value);
      tvs.push_back(tv.value);
      lhs_vals.push_back(std::sqrt(fm.lhs.value));
      w1s.push_back(w1.value);
    });
  }
  if (tvs.size() >= 3) {
    const RateFit fit = fit_rate(cumulants, tvs);
    r.rows.push_back(slope_row(Params().add("quantity", "tv_rate_in_fourth_cumulant").str(), fit));
    add_check(r, "E5 slope of log d_TV on log(E F^4 - 3) in [0.4, 0.6]", fit.slope >= 0.4 && fit.slope <= 0.6,
              range_detail(fit.slope, 0.4, 0.6));
    ReportRow wrow;
    wrow.params = Params().add("quantity", "w1_vs_sqrt_lhs_fit").str();
    wrow.fit_c = max_ratio(w1s, lhs_vals);
    r.rows.push_back(wrow);
  }
}

}  // namespace

Report run(const ExperimentConfig& config) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  Report r;
  r.experiment = config.experiment;
  r.config_json = config.canonical_json();
  r.config_hash = fnv1a_hex(r.config_json);
  if (config.experiment == "E1") run_e1(config, r);
  else if (config.experiment == "E2") run_e2(config, r);
  else if (config.experiment == "E3") run_e3(config, r);
  else if (config.experiment == "E4") run_e4(config, r);
  else run_e5(config, r);
  r.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

// ---------------------------------------------------------------------------
// Emission

namespace {

std::string cell(const std::optional<double>& v) { return v ? fmt(*v) : "NA"; }

std::string se_cell(const std::optional<double>& value, const std::optional<double>& se, bool exact) {
  if (!value) return "NA";
  if (exact) return "exact";
  return cell(se);
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) out += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return out + "\"";
}

json json_value(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json json_se(const std::optional<double>& value, const std::optional<double>& se, bool exact) {
  if (!value) return nullptr;
  if (exact) return "exact";
  return json_value(se);
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed while writing " + path.string());
}

}  // namespace

std::string to_csv(const Report& report) {
  std::string s = "experiment,params,lhs,lhs_se,rhs,rhs_se,fit_c,slope,slope_lo,slope_hi\n";
  for (const ReportRow& row : report.rows) {
    s += report.experiment + "," + csv_quote(row.params) + "," + cell(row.lhs) + "," +
         se_cell(row.lhs, row.lhs_se, row.lhs_exact) + "," + cell(row.rhs) + "," +
         se_cell(row.rhs, row.rhs_se, row.rhs_exact) + "," + cell(row.fit_c) + "," + cell(row.slope) + "," +
         cell(row.slope_lo) + "," + cell(row.slope_hi) + "\n";
  }
  return s;
}

std::string to_json(const Report& report) {
  json j;
  j["experiment"] = report.experiment;
  j["version"] = kVersion;
  j["config"] = json::parse(report.config_json);
  j["config_hash"] = report.config_hash;
  json rows = json::array();
  for (const ReportRow& row : report.rows) {
    rows.push_back({{"params", row.params},
                    {"lhs", json_value(row.lhs)},
                    {"lhs_se", json_se(row.lhs, row.lhs_se, row.lhs_exact)},
                    {"rhs", json_value(row.rhs)},
                    {"rhs_se", json_se(row.rhs, row.rhs_se, row.rhs_exact)},
                    {"fit_c", json_value(row.fit_c)},
                    {"slope", json_value(row.slope)},
                    {"slope_lo", json_value(row.slope_lo)},
                    {"slope_hi", json_value(row.slope_hi)}});
  }
  j["rows"] = rows;
  json checks = json::array();
  for (const Check& c : report.checks) checks.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  j["checks"] = checks;
  json failures = json::array();
  for (const Failure& f : report.failures) failures.push_back({{"grid_point", f.grid_point}, {"error", f.error}});
  j["failures"] = failures;
  j["notes"] = report.notes;
  j["passed"] = report.passed();
  return j.dump(2) + "\n";
}

void write_report(const Report& report, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());
  const std::filesystem::path base(dir);
  write_file(base / (report.experiment + ".csv"), to_csv(report));
  write_file(base / (report.experiment + ".json"), to_json(report));
  json timing = {{"experiment", report.experiment},
                 {"config_hash", report.config_hash},
                 {"runtime_seconds", report.runtime_seconds},
                 {"workers", worker_count()}};
  write_file(base / (report.experiment + ".timing.json"), timing.dump(2) + "\n");
  const std::filesystem::path manifest = base / (report.experiment + ".failures.json");
  if (!report.failures.empty()) {
    json f = json::array();
    for (const Failure& x : report.failures) f.push_back({{"grid_point", x.grid_point}, {"error", x.error}});
    write_file(manifest, f.dump(2) + "\n");
  } else {
    std::filesystem::remove(manifest, ec);
  }
}

}  // namespace regtv
