#pragma once

// Shared fixtures and independent oracles for the test suites. Everything
// here recomputes expected values from first principles (stacked matrices,
// finite differences, quadrature) rather than reusing the library's own
// sampler algebra.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "lmmsel/dataset.hpp"
#include "lmmsel/model.hpp"
#include "lmmsel/rng.hpp"

namespace testutil {

using lmmsel::ChainState;
using lmmsel::Dataset;
using lmmsel::DesignConfig;
using lmmsel::DesignSet;
using lmmsel::HyperParams;
using lmmsel::Observation;
using lmmsel::Rng;
using lmmsel::Subject;

struct TinyInstance {
  Dataset data;
  DesignConfig config;
  DesignSet designs;
  HyperParams hp;
  ChainState state;
};

/// Random small dataset: n_treat treatment groups plus a control, 1..3
/// subjects per group, 3..6 observations per subject, responses around a
/// noisy line so the scales stay moderate.
inline Dataset random_dataset(Rng& rng, int n_treat, int max_subjects = 3) {
  Dataset data;
  for (int g = 0; g < n_treat; ++g) data.groups.push_back("t" + std::to_string(g + 1));
  data.groups.push_back("ctl");
  int sid = 0;
  for (int g = 0; g <= n_treat; ++g) {
    const int n_subj = 1 + static_cast<int>(rng.uniform() * max_subjects);
    for (int s = 0; s < n_subj; ++s) {
      Subject subj;
      subj.id = "s" + std::to_string(++sid);
      subj.group = g;
      const int n_obs = 3 + static_cast<int>(rng.uniform() * 4);
      double t = rng.uniform();
      for (int k = 0; k < n_obs; ++k) {
        Observation o;
        o.time = t;
        o.response = 2.0 + 1.5 * t + rng.normal();
        subj.obs.push_back(o);
        t += 0.2 + rng.uniform();
      }
      data.subjects.push_back(std::move(subj));
    }
  }
  return data;
}

inline HyperParams random_hyperparams(Rng& rng, int p_w, int n_groups) {
  HyperParams hp;
  hp.d1 = 0.5 + rng.uniform();
  hp.d2 = 0.5 + rng.uniform();
  hp.d3 = Eigen::VectorXd::NullaryExpr(p_w, [&](Eigen::Index) { return rng.normal(); });
  hp.d4 = 0.1 + 0.9 * rng.uniform();
  hp.pi = Eigen::VectorXd::NullaryExpr(n_groups, [&](Eigen::Index) { return 0.2 + 0.6 * rng.uniform(); });
  hp.pi(n_groups - 1) = 0.0;
  return hp;
}

inline ChainState random_state(Rng& rng, const DesignSet& designs) {
  ChainState st;
  const int G = designs.n_groups();
  st.gamma.assign(static_cast<std::size_t>(G), std::vector<int>(static_cast<std::size_t>(designs.p_x), 0));
  st.beta.assign(static_cast<std::size_t>(G), Eigen::VectorXd());
  for (int g = 0; g < G - 1; ++g) {
    int active = 0;
    for (int j = 0; j < designs.p_x; ++j) {
      const int v = rng.uniform() < 0.5 ? 1 : 0;
      st.gamma[static_cast<std::size_t>(g)][static_cast<std::size_t>(j)] = v;
      active += v;
    }
    st.beta[static_cast<std::size_t>(g)] =
        Eigen::VectorXd::NullaryExpr(active, [&](Eigen::Index) { return rng.normal(); });
  }
  st.alpha = Eigen::VectorXd::NullaryExpr(designs.p_w, [&](Eigen::Index) { return rng.normal(); });
  st.sigma2 = 0.5 + 1.5 * rng.uniform();
  st.lambda_d = 0.5 + 1.5 * rng.uniform();
  st.b = Eigen::MatrixXd::NullaryExpr(designs.n_subjects(), designs.p_z,
                                      [&](Eigen::Index, Eigen::Index) { return 0.5 * rng.normal(); });
  return st;
}

inline TinyInstance random_instance(Rng& rng, int n_treat = 1, int p_x_max = 2) {
  TinyInstance inst;
  inst.data = random_dataset(rng, n_treat);
  inst.config.w_degrees = {0, 1};
  inst.config.x_degrees = p_x_max >= 2 && rng.uniform() < 0.5 ? std::vector<int>{1, 2}
                                                              : std::vector<int>{1};
  inst.config.z_degrees = rng.uniform() < 0.5 ? std::vector<int>{0, 1} : std::vector<int>{0};
  inst.config.rescale = {0.0, 1.0};
  inst.designs = lmmsel::build_designs(inst.data, inst.config);
  inst.hp = random_hyperparams(rng, inst.designs.p_w, inst.designs.n_groups());
  inst.state = random_state(rng, inst.designs);
  return inst;
}

// ---------------------------------------------------------------------------
// independent density evaluators
// ---------------------------------------------------------------------------

inline double log_mvn(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                      const Eigen::MatrixXd& precision) {
  const Eigen::Index p = x.size();
  const Eigen::VectorXd d = x - mean;
  const double logdet = std::log(Eigen::FullPivLU<Eigen::MatrixXd>(precision).determinant());
  return 0.5 * logdet - 0.5 * p * std::log(2.0 * M_PI) - 0.5 * d.dot(precision * d);
}

inline double log_inv_gamma(double x, double shape, double rate) {
  return shape * std::log(rate) - std::lgamma(shape) - (shape + 1.0) * std::log(x) - rate / x;
}

inline double log_gamma_pdf(double x, double shape, double rate) {
  return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

/// Relative agreement of two log-density differences.
inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(1.0, std::abs(want));
}

// ---------------------------------------------------------------------------
// Gaussian-integral oracle
// ---------------------------------------------------------------------------

/// f must be an exact quadratic. Recovers f(beta) = c + v'beta - beta'Q beta/2
/// by finite differences with unit steps (exact for quadratics up to
/// rounding) and returns log of the integral of exp(f) over R^p.
inline double integrate_quadratic(const std::function<double(const Eigen::VectorXd&)>& f, int p) {
  if (p == 0) return f(Eigen::VectorXd());
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(p);
  const double c = f(zero);
  Eigen::VectorXd v(p);
  Eigen::MatrixXd Q(p, p);
  std::vector<double> fplus(static_cast<std::size_t>(p));
  for (int i = 0; i < p; ++i) {
    Eigen::VectorXd e = zero;
    e(i) = 1.0;
    const double fp = f(e);
    e(i) = -1.0;
    const double fm = f(e);
    fplus[static_cast<std::size_t>(i)] = fp;
    v(i) = 0.5 * (fp - fm);
    Q(i, i) = 2.0 * c - fp - fm;
  }
  for (int i = 0; i < p; ++i) {
    for (int j = i + 1; j < p; ++j) {
      Eigen::VectorXd e = zero;
      e(i) = 1.0;
      e(j) = 1.0;
      const double fij = f(e);
      const double qij = fplus[static_cast<std::size_t>(i)] + fplus[static_cast<std::size_t>(j)] - c - fij;
      Q(i, j) = qij;
      Q(j, i) = qij;
    }
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(Q);
  const Eigen::VectorXd m = lu.solve(v);
  return c + 0.5 * v.dot(m) + 0.5 * p * std::log(2.0 * M_PI) - 0.5 * std::log(lu.determinant());
}

/// Plain trapezoid quadrature of exp(f) over [lo, hi]; returns the log.
inline double integrate_trapezoid(const std::function<double(double)>& f, double lo, double hi,
                                  int n_points) {
  std::vector<double> vals(static_cast<std::size_t>(n_points));
  const double h = (hi - lo) / (n_points - 1);
  double fmax = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < n_points; ++k) {
    vals[static_cast<std::size_t>(k)] = f(lo + k * h);
    fmax = std::max(fmax, vals[static_cast<std::size_t>(k)]);
  }
  double acc = 0.0;
  for (int k = 0; k < n_points; ++k) {
    const double w = (k == 0 || k == n_points - 1) ? 0.5 : 1.0;
    acc += w * std::exp(vals[static_cast<std::size_t>(k)] - fmax);
  }
  return fmax + std::log(acc * h);
}

/// AR(1) series with unit stationary variance.
inline std::vector<double> ar1_series(Rng& rng, double rho, std::size_t n) {
  std::vector<double> x(n);
  double prev = rng.normal();
  x[0] = prev;
  const double innov = std::sqrt(1.0 - rho * rho);
  for (std::size_t t = 1; t < n; ++t) {
    prev = rho * prev + innov * rng.normal();
    x[t] = prev;
  }
  return x;
}

}  // namespace testutil
