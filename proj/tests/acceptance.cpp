// Acceptance run: one PASS/FAIL line per criterion.
// Exit status is 0 when every failure is listed in kKnownDeviations (see
// README), 1 otherwise; --strict makes every failure fatal.

#include "regtv/dirichlet.hpp"
#include "regtv/distances.hpp"
#include "regtv/errors.hpp"
#include "regtv/experiment.hpp"
#include "regtv/ibp.hpp"
#include "regtv/quadrature.hpp"
#include "regtv/superkernel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace regtv;

namespace {

const std::set<int> kKnownDeviations{6};

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// ---------------------------------------------------------------- criterion 1

struct IbpCase {
  std::string label;
  int m;
  Functional f;
  std::optional<Functional> g;
  std::vector<int> alpha;
  double eta;
  Functional phi;  // test function on the range of F
};

std::vector<int> exponent_of(const std::vector<int>& alpha, int d) {
  std::vector<int> e(d, 0);
  for (int a : alpha) ++e[a];
  return e;
}

double det_at(const Functional& f, double x1, int m) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(m);
  x[0] = x1;
  return malliavin_matrix(f, x, 1).det.value();
}

// Every F in the suite has det sigma_F depending on x_1 alone; the x_1 rule
// gets panel edges at each crossing of the cutoff levels.
GaussianRule first_axis_rule(const IbpCase& c) {
  std::vector<double> bp{-12.0, 12.0};
  const int scan = 4000;
  for (double level : {c.eta / 4, c.eta / 2, c.eta}) {
    double prev_x = -12.0;
    double prev = det_at(c.f, prev_x, c.m) - level;
    for (int i = 1; i <= scan; ++i) {
      const double x = -12.0 + 24.0 * i / scan;
      const double cur = det_at(c.f, x, c.m) - level;
      if ((prev < 0) != (cur < 0)) {
        double lo = prev_x, hi = x, flo = prev;
        for (int it = 0; it < 100; ++it) {
          const double mid = 0.5 * (lo + hi);
          const double fm = det_at(c.f, mid, c.m) - level;
          if ((fm < 0) == (flo < 0)) {
            lo = mid;
            flo = fm;
          } else {
            hi = mid;
          }
        }
        bp.push_back(0.5 * (lo + hi));
      }
      prev_x = x;
      prev = cur;
    }
  }
  std::sort(bp.begin(), bp.end());
  bp.erase(std::unique(bp.begin(), bp.end(), [](double a, double b) { return std::abs(a - b) < 1e-9; }), bp.end());
  return composite_gauss_legendre(bp, 24, 10);
}

double ibp_gap(const IbpCase& c) {
  std::vector<GaussianRule> rules{first_axis_rule(c)};
  for (int i = 1; i < c.m; ++i) rules.push_back(gauss_hermite(c.m == 2 ? 16 : 10));
  const int d = c.f.output_dim();
  const std::vector<int> e = exponent_of(c.alpha, d);
  const double lhs = tensor_expectation(rules, [&](const Eigen::VectorXd& x) {
    const Eigen::VectorXd fx = c.f.value(x);
    const double gx = c.g ? c.g->value(x)[0] : 1.0;
    const double det = malliavin_matrix(c.f, x, 0).det.value();
    return c.phi.derivative(fx, e) * gx * smooth_step(StepKind::psi, c.eta, det);
  });
  const double rhs = tensor_expectation(rules, [&](const Eigen::VectorXd& x) {
    return c.phi.value(c.f.value(x))[0] * weight_value(c.f, c.g, c.alpha, c.eta, x);
  });
  return std::abs(lhs - rhs);
}

std::vector<IbpCase> ibp_suite() {
  auto s1 = [](std::function<Jet(const std::vector<Jet>&)> b, int m) { return scalar_functional(m, std::move(b)); };
  auto vec2 = [](std::function<std::vector<Jet>(const std::vector<Jet>&)> b, int m) {
    return Functional(m, 2, std::move(b));
  };
  const Functional sin1 = s1([](const auto& u) { return sin(u[0]); }, 1);
  const Functional bump1 = s1([](const auto& u) { return exp(-0.25 * u[0] * u[0]); }, 1);
  const Functional phi2a = s1([](const auto& u) { return sin(u[0]) * cos(0.5 * u[1]); }, 2);
  const Functional phi2b = s1([](const auto& u) { return exp(-0.125 * (u[0] * u[0] + u[1] * u[1])); }, 2);

  const Functional sq = s1([](const auto& x) { return x[0] * x[0]; }, 1);
  const Functional half_sq = s1([](const auto& x) { return 0.5 * x[0] * x[0] + 0.1 * sin(x[0]); }, 1);
  const std::optional<Functional> cosx = s1([](const auto& x) { return cos(x[0]); }, 1);
  const Functional sq2 = s1([](const auto& x) { return x[0] * x[0] + 0.2 * x[1]; }, 2);
  const std::optional<Functional> g2 = s1([](const auto& x) { return 1.0 + 0.5 * x[0] * x[1]; }, 2);
  const Functional v2 = vec2([](const auto& x) { return std::vector<Jet>{x[0] * x[0] + 0.4 * x[1], x[1]}; }, 2);
  const std::optional<Functional> g2b = s1([](const auto& x) { return cos(x[1]); }, 2);
  const Functional v3 = vec2(
      [](const auto& x) { return std::vector<Jet>{x[0] * x[0] + 0.3 * x[2], x[1] + 0.5 * x[2]}; }, 3);
  const std::optional<Functional> g3 = s1([](const auto& x) { return exp(-0.1 * x[2] * x[2]) + x[1]; }, 3);
  const Functional sq3 = s1([](const auto& x) { return x[0] * x[0] + 0.2 * cos(x[0]) + 0.3 * x[1] + 0.25 * x[2]; }, 3);

  std::vector<IbpCase> cases;
  auto add = [&](std::string label, int m, const Functional& f, const std::optional<Functional>& g,
                 std::vector<int> alpha, double eta, const Functional& phi) {
    cases.push_back({std::move(label), m, f, g, std::move(alpha), eta, phi});
  };
  for (double eta : {0.5, 1.0}) {
    const std::string e = "eta=" + fmt("%g", eta);
    add("x^2 a=0 " + e, 1, sq, std::nullopt, {0}, eta, sin1);
    add("x^2 a=00 " + e, 1, sq, std::nullopt, {0, 0}, eta, bump1);
    add("x^2 G=cos a=0 " + e, 1, sq, cosx, {0}, eta, bump1);
    add("x^2 G=cos a=00 " + e, 1, sq, cosx, {0, 0}, eta, sin1);
    add("x^2/2+sin a=0 " + e, 1, half_sq, cosx, {0}, eta, sin1);
    add("m=2 scalar a=0 " + e, 2, sq2, g2, {0}, eta, sin1);
    add("m=2 scalar a=00 " + e, 2, sq2, std::nullopt, {0, 0}, eta, bump1);
    add("m=2 vector a=1 " + e, 2, v2, g2b, {1}, eta, phi2a);
    add("m=2 vector a=01 " + e, 2, v2, std::nullopt, {0, 1}, eta, phi2b);
    add("m=3 vector a=0 " + e, 3, v3, g3, {0}, eta, phi2b);
    add("m=3 vector a=10 " + e, 3, v3, std::nullopt, {1, 0}, eta, phi2a);
    add("m=3 scalar a=0 " + e, 3, sq3, std::nullopt, {0}, eta, sin1);
  }
  return cases;
}

Outcome criterion1() {
  double worst = 0.0;
  std::string worst_label;
  const std::vector<IbpCase> suite = ibp_suite();
  for (const IbpCase& c : suite) {
    const double gap = ibp_gap(c);
    if (std::getenv("REGTV_VERBOSE")) std::printf("  %-28s %.3e\n", c.label.c_str(), gap);
    if (std::isnan(gap) || gap > worst) {
      worst = std::isnan(gap) ? INFINITY : gap;
      worst_label = c.label;
    }
  }
  return {worst <= 1e-6, std::to_string(suite.size()) + " cases, max gap " + fmt("%.2e", worst) + " (" + worst_label +
                             "), tol 1e-6"};
}

// ---------------------------------------------------------------- criterion 2

Outcome criterion2() {
  auto s = [](std::function<Jet(const std::vector<Jet>&)> b, int m) { return scalar_functional(m, std::move(b)); };
  struct Pair {
    int m;
    Functional f, g;
  };
  const std::vector<Pair> pairs{
      {1, s([](const auto& x) { return x[0] * x[0] * x[0]; }, 1), s([](const auto& x) { return sin(x[0]); }, 1)},
      {1, s([](const auto& x) { return exp(0.3 * x[0]); }, 1), s([](const auto& x) { return x[0] * x[0]; }, 1)},
      {2, s([](const auto& x) { return x[0] * x[1]; }, 2), s([](const auto& x) { return cos(x[0]) + x[1] * x[1]; }, 2)},
      {3, s([](const auto& x) { return x[0] * x[0] + x[1] * x[2]; }, 3),
       s([](const auto& x) { return sin(x[2]) * x[0]; }, 3)},
  };
  double dual = 0.0, point = 0.0;
  for (const Pair& p : pairs) {
    const GaussianRule r = gauss_hermite(p.m == 3 ? 20 : 30);
    const double eg = tensor_expectation(r, p.m, [&](const Eigen::VectorXd& x) { return gamma(p.f, p.g, x, 0).value(); });
    const double efl = tensor_expectation(r, p.m, [&](const Eigen::VectorXd& x) {
      return p.f.value(x)[0] * ou_generator(p.g, x, 0).value();
    });
    dual = std::max(dual, std::abs(eg + efl));

    for (const Eigen::VectorXd& x : {Eigen::VectorXd(Eigen::VectorXd::Constant(p.m, 0.3)),
                                     Eigen::VectorXd(Eigen::VectorXd::LinSpaced(p.m, -1.1, 0.8))}) {
      const Jet fj = p.f.evaluate(x, 3)[0];
      const Jet gj = p.g.evaluate(x, 3)[0];
      // chain: Gamma(sin F, G) = cos F Gamma(F, G)
      const double chain = gamma(sin(fj), gj).value() - std::cos(fj.value()) * gamma(fj, gj).value();
      // product: Gamma(F G, G) = F Gamma(G, G) + G Gamma(F, G)
      const double product =
          gamma(fj * gj, gj).value() - fj.value() * gamma(gj, gj).value() - gj.value() * gamma(fj, gj).value();
      // L(F G) = F LG + G LF + 2 Gamma(F, G)
      const double gen = ou_generator(fj * gj).value() - fj.value() * ou_generator(gj).value() -
                         gj.value() * ou_generator(fj).value() - 2 * gamma(fj, gj).value();
      point = std::max({point, std::abs(chain), std::abs(product), std::abs(gen)});
    }
  }
  return {dual <= 1e-8 && point <= 1e-10,
          "duality max " + fmt("%.2e", dual) + " (tol 1e-8), chain/product max " + fmt("%.2e", point) + " (tol 1e-10)"};
}

// ---------------------------------------------------------------- criterion 3

Outcome criterion3() {
  const SuperKernel k = SuperKernel::build();
  const MomentTable t = moments(k, 8, 0);
  const double mass = std::abs(t.moments[0] - 1.0);
  double worst_moment = 0.0;
  for (int m = 1; m <= 8; ++m) worst_moment = std::max(worst_moment, std::abs(t.moments[m]));
  double repro = 0.0;
  for (double delta : {0.5, 0.1, 0.02}) {
    for (double x : {-2.0, 0.0, 0.7, 3.0}) {
      repro = std::max(repro, std::abs(mollify([](double y) { return y * y; }, k, delta, 0, x) - x * x));
    }
  }
  auto sign = [](double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); };
  const std::vector<double> deltas{0.2, 0.1, 0.05, 0.025};
  std::vector<double> slopes;
  for (int beta : {1, 2}) {
    std::vector<double> sups;
    for (double delta : deltas) {
      double sup = 0.0;
      for (int i = -800; i <= 800; ++i) sup = std::max(sup, std::abs(mollify(sign, k, delta, beta, i * delta / 100.0)));
      sups.push_back(sup);
    }
    slopes.push_back(fit_rate(deltas, sups).slope);
  }
  const bool ok = mass <= 1e-8 && worst_moment <= 1e-6 && repro <= 1e-6 && std::abs(slopes[0] + 1) <= 0.1 &&
                  std::abs(slopes[1] + 2) <= 0.1;
  return {ok, "|int phi - 1| " + fmt("%.1e", mass) + ", max moment " + fmt("%.1e", worst_moment) + ", x^2 error " +
                  fmt("%.1e", repro) + ", slopes " + fmt("%.3f", slopes[0]) + " " + fmt("%.3f", slopes[1])};
}

// ---------------------------------------------------------- criteria 4 to 8

Report run_default(const std::string& id, std::uint64_t seed) {
  ExperimentConfig c = default_config(id);
  c.seed = seed;
  return run(c);
}

Outcome from_checks(const Report& r, const std::string& filter = {}) {
  Outcome o{true, {}};
  int used = 0;
  for (const Check& c : r.checks) {
    if (!filter.empty() && c.name.find(filter) == std::string::npos) continue;
    ++used;
    o.pass = o.pass && c.pass;
    if (!o.detail.empty()) o.detail += "; ";
    o.detail += (c.pass ? "" : "[fail] ") + c.name + ": " + c.detail;
  }
  if (!r.failures.empty()) {
    o.pass = false;
    o.detail += "; " + std::to_string(r.failures.size()) + " grid failures";
  }
  if (used == 0) {
    o.pass = false;
    o.detail += "no checks recorded";
  }
  return o;
}

// ---------------------------------------------------------------- criterion 9

Outcome criterion9() {
  std::string detail;
  bool ok = true;
  for (const std::string id : {"E1", "E2", "E3", "E4", "E5"}) {
    ExperimentConfig c = default_config(id);
    c.seed = 2024;
    c.samples = 20000;
    if (id == "E3" || id == "E4") {
      c.n = {4, 8, 16};
      c.n_ref = 64;
    }
    if (id == "E2") c.delta = {0.4, 0.2};
    const std::string first = to_csv(run(c));
    setenv("REGTV_WORKERS", "3", 1);
    const std::string second = to_csv(run(c));
    unsetenv("REGTV_WORKERS");
    const bool same = first == second && !first.empty();
    ok = ok && same;
    detail += id + (same ? " identical" : " DIFFERS") + " (" + std::to_string(first.size()) + " bytes) ";
  }
  return {ok, detail};
}

}  // namespace

int main(int argc, char** argv) {
  bool strict = false;
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--strict") == 0) strict = true;
    else only.insert(std::atoi(argv[i]));
  }
  struct Item {
    int id;
    std::string title;
    std::function<Outcome()> body;
  };
  const std::vector<Item> items{
      {1, "localized IBP identity", criterion1},
      {2, "duality, chain and product rules", criterion2},
      {3, "super kernel", criterion3},
      {4, "E1 small-ball exponent and sign gap", [] { return from_checks(run_default("E1", 42)); }},
      {5, "E3 elliptic Euler TV rate", [] { return from_checks(run_default("E3", 42)); }},
      {6, "E4 Hormander Euler", [] { return from_checks(run_default("E4", 42)); }},
      {7, "E5 fourth moment", [] { return from_checks(run_default("E5", 42)); }},
      {8, "density sup vs W1 power", [] { return from_checks(run_default("E2", 42), "density sup"); }},
      {9, "determinism", criterion9},
  };
  int unexpected = 0;
  for (const Item& it : items) {
    if (!only.empty() && !only.count(it.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = it.body();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool known = !o.pass && kKnownDeviations.count(it.id);
    if (!o.pass && (strict || !known)) ++unexpected;
    std::printf("%s criterion %d (%s) [%.1fs]%s: %s\n", o.pass ? "PASS" : "FAIL", it.id, it.title.c_str(), secs,
                known ? " [known deviation]" : "", o.detail.c_str());
    std::fflush(stdout);
  }
  return unexpected == 0 ? 0 : 1;
}
