#include "lmmsel/sampler.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "lmmsel/mathutil.hpp"

namespace lmmsel {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string active_set_string(const std::vector<int>& act) {
  std::string s = "{";
  for (std::size_t k = 0; k < act.size(); ++k) {
    if (k) s += ",";
    s += std::to_string(act[k]);
  }
  return s + "}";
}

Eigen::LLT<Eigen::MatrixXd> chol_or_throw_identifiability(const Eigen::MatrixXd& m, int g,
                                                          const std::vector<int>& act,
                                                          const DesignSet& designs) {
  Eigen::LLT<Eigen::MatrixXd> llt;
  if (!cholesky_spd(m, llt)) {
    throw IdentifiabilityError("group '" + designs.group_labels[static_cast<std::size_t>(g)] +
                               "', active columns " + active_set_string(act) +
                               ": weighted Gram matrix is singular");
  }
  return llt;
}

Eigen::LLT<Eigen::MatrixXd> chol_or_throw_numerical(const Eigen::MatrixXd& m, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt;
  if (!cholesky_spd(m, llt)) {
    throw NumericalError(std::string(what) + ": precision matrix is not positive definite");
  }
  return llt;
}

// log weight of one candidate indicator value with the coefficients
// integrated out; the sum of phi_i'phi_i is shared by both candidates and
// is omitted because only the difference matters.
double gamma_candidate_log_weight(int g, int value, std::vector<int> gamma_row, int j,
                                  const ChainState& state, const DesignSet& designs,
                                  const HyperParams& hp) {
  gamma_row[static_cast<std::size_t>(j)] = value;
  const double pg = hp.pi(g);
  double lw = value == 1 ? std::log(pg) : std::log1p(-pg);
  const auto act = active_columns(gamma_row);
  if (act.empty()) return lw;

  const auto fs = fractional_stats(g, act, state, designs);
  const auto llt_a = chol_or_throw_identifiability(fs.A, g, act, designs);
  const auto llt_b = chol_or_throw_identifiability(fs.B, g, act, designs);
  const double quad_a = fs.u_a.dot(llt_a.solve(fs.u_a));
  const double quad_b = fs.u_b.dot(llt_b.solve(fs.u_b));
  lw += 0.5 * (log_det_from_llt(llt_a) - log_det_from_llt(llt_b));
  lw += (quad_b - quad_a) / (2.0 * state.sigma2);
  return lw;
}

}  // namespace

void GibbsConfig::validate() const {
  if (max_iters < 1) throw ValidationError("gibbs: max_iters must be positive");
  if (check_interval < 1) throw ValidationError("gibbs: check_interval must be positive");
  if (min_iters < check_interval) {
    throw ValidationError("gibbs: min_iters must be at least check_interval");
  }
  if (effective_burn_in() >= max_iters) {
    throw ValidationError("gibbs: burn_in must be smaller than max_iters");
  }
  fwsr.validate();
}

double gamma_site_log_odds(int g, int j, const ChainState& state, const DesignSet& designs,
                           const HyperParams& hp) {
  if (g < 0 || g >= designs.control_group()) {
    throw ValidationError("gamma_site_log_odds: g must index a treatment group");
  }
  if (j < 0 || j >= designs.p_x) throw ValidationError("gamma_site_log_odds: bad column");
  const double pg = hp.pi(g);
  if (pg == 0.0) return -kInf;
  if (pg == 1.0) return kInf;
  const auto& row = state.gamma[static_cast<std::size_t>(g)];
  const double w1 = gamma_candidate_log_weight(g, 1, row, j, state, designs, hp);
  const double w0 = gamma_candidate_log_weight(g, 0, row, j, state, designs, hp);
  return w1 - w0;
}

double gamma_site_prob_one(int g, int j, const ChainState& state, const DesignSet& designs,
                           const HyperParams& hp) {
  const double d = gamma_site_log_odds(g, j, state, designs, hp);
  if (d == kInf) return 1.0;
  if (d == -kInf) return 0.0;
  // stable logistic
  return d >= 0.0 ? 1.0 / (1.0 + std::exp(-d)) : std::exp(d) / (1.0 + std::exp(d));
}

int sample_gamma_site(int g, int j, ChainState& state, const DesignSet& designs,
                      const HyperParams& hp, Rng& rng) {
  const double pg = hp.pi(g);
  int value;
  if (pg == 0.0) {
    value = 0;
  } else if (pg == 1.0) {
    value = 1;
  } else {
    const double p1 = gamma_site_prob_one(g, j, state, designs, hp);
    value = rng.uniform() < p1 ? 1 : 0;
  }

  auto& row = state.gamma[static_cast<std::size_t>(g)];
  const int old = row[static_cast<std::size_t>(j)];
  if (value != old) {
    // keep beta aligned with the indicators; a new column enters at 0.0
    // and is overwritten by the next coefficient draw
    auto& beta = state.beta[static_cast<std::size_t>(g)];
    int pos = 0;
    for (int k = 0; k < j; ++k) pos += row[static_cast<std::size_t>(k)];
    Eigen::VectorXd updated(beta.size() + (value == 1 ? 1 : -1));
    if (value == 1) {
      updated.head(pos) = beta.head(pos);
      updated(pos) = 0.0;
      updated.tail(beta.size() - pos) = beta.tail(beta.size() - pos);
    } else {
      updated.head(pos) = beta.head(pos);
      updated.tail(updated.size() - pos) = beta.tail(beta.size() - pos - 1);
    }
    beta = std::move(updated);
    row[static_cast<std::size_t>(j)] = value;
  }
  return value;
}

NormalParams beta_conditional(int g, const ChainState& state, const DesignSet& designs) {
  const auto act = active_columns(state.gamma[static_cast<std::size_t>(g)]);
  if (act.empty()) return {};
  const auto fs = fractional_stats(g, act, state, designs);
  const auto llt = chol_or_throw_identifiability(fs.B, g, act, designs);
  NormalParams np;
  np.mean = llt.solve(fs.u_b);
  np.precision = fs.B / state.sigma2;
  return np;
}

void sample_beta_group(int g, ChainState& state, const DesignSet& designs, Rng& rng) {
  const auto np = beta_conditional(g, state, designs);
  if (np.mean.size() == 0) {
    state.beta[static_cast<std::size_t>(g)] = Eigen::VectorXd();
    return;
  }
  state.beta[static_cast<std::size_t>(g)] = draw_mvn_precision(np, rng);
}

NormalParams alpha_conditional(const ChainState& state, const DesignSet& designs,
                               const HyperParams& hp) {
  const int p_w = designs.p_w;
  const double s2 = state.sigma2;
  Eigen::MatrixXd quad = Eigen::MatrixXd::Zero(p_w, p_w);
  Eigen::VectorXd lin = Eigen::VectorXd::Zero(p_w);

  for (int i = 0; i < designs.n_subjects(); ++i) {
    const auto& s = designs.subjects[static_cast<std::size_t>(i)];
    quad += s.WtW;
    lin += s.Wty - s.WtZ * state.b.row(i).transpose();
  }

  for (int g = 0; g < designs.n_groups(); ++g) {
    const auto act = active_columns(state.gamma[static_cast<std::size_t>(g)]);
    if (act.empty()) continue;
    const auto& beta = state.beta[static_cast<std::size_t>(g)];

    // likelihood part of the coefficient deviations
    for (int i : designs.group_members[static_cast<std::size_t>(g)]) {
      const auto& s = designs.subjects[static_cast<std::size_t>(i)];
      lin -= s.XtW(act, Eigen::all).transpose() * beta;
    }

    // fractional-prior coupling: the prior center moves with alpha
    const auto fs = fractional_stats(g, act, state, designs);
    const auto llt = chol_or_throw_identifiability(fs.A, g, act, designs);
    const Eigen::MatrixXd S = designs.S_full[static_cast<std::size_t>(g)](act, Eigen::all);
    quad += S.transpose() * llt.solve(S);

    // u_psi = sum (1/n_i) X'(y - Z b_i) over the active columns
    Eigen::VectorXd u_psi = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(act.size()));
    for (int i : designs.group_members[static_cast<std::size_t>(g)]) {
      const auto& s = designs.subjects[static_cast<std::size_t>(i)];
      const double wi = 1.0 / static_cast<double>(s.n_obs());
      const Eigen::VectorXd v = s.Xty - s.XtZ * state.b.row(i).transpose();
      u_psi += wi * v(act);
    }
    lin -= S.transpose() * (beta - llt.solve(u_psi));
  }

  NormalParams np;
  np.precision = quad / s2;
  np.precision.diagonal().array() += hp.d4;
  Eigen::VectorXd eta = lin / s2 + hp.d4 * hp.d3;
  const auto llt = chol_or_throw_numerical(np.precision, "alpha update");
  np.mean = llt.solve(eta);
  return np;
}

void sample_alpha(ChainState& state, const DesignSet& designs, const HyperParams& hp,
                  Rng& rng) {
  state.alpha = draw_mvn_precision(alpha_conditional(state, designs, hp), rng);
}

GammaParams sigma2_conditional(const ChainState& state, const DesignSet& designs) {
  double rss = 0.0;
  long total_active = 0;
  for (int i = 0; i < designs.n_subjects(); ++i) {
    const auto& s = designs.subjects[static_cast<std::size_t>(i)];
    const auto act = active_columns(state.gamma[static_cast<std::size_t>(s.group)]);
    Eigen::VectorXd r = s.y - s.W * state.alpha - s.Z * state.b.row(i).transpose();
    if (!act.empty()) r -= s.X(Eigen::all, act) * state.beta[static_cast<std::size_t>(s.group)];
    rss += r.squaredNorm();
  }
  double prior_quad = 0.0;
  for (int g = 0; g < designs.n_groups(); ++g) {
    const auto act = active_columns(state.gamma[static_cast<std::size_t>(g)]);
    total_active += static_cast<long>(act.size());
    if (act.empty()) continue;
    const auto fs = fractional_stats(g, act, state, designs);
    const auto llt = chol_or_throw_identifiability(fs.A, g, act, designs);
    const Eigen::VectorXd d = state.beta[static_cast<std::size_t>(g)] - llt.solve(fs.u_a);
    prior_quad += d.dot(fs.A * d);
  }

  GammaParams gp;
  gp.shape = 0.5 * (static_cast<double>(designs.n_obs) + static_cast<double>(total_active));
  gp.rate = 0.5 * (rss + prior_quad);
  if (!(gp.rate > 0.0)) {
    std::ostringstream oss;
    oss << "sigma2 update: non-positive rate (rss=" << rss << ", prior quad=" << prior_quad
        << ", active=" << total_active << ", N=" << designs.n_obs << ")";
    throw NumericalError(oss.str());
  }
  return gp;
}

void sample_sigma2(ChainState& state, const DesignSet& designs, Rng& rng) {
  const auto gp = sigma2_conditional(state, designs);
  const double drawn = rng.inv_gamma(gp.shape, gp.rate);
  if (!std::isfinite(drawn) || !(drawn > 0.0)) {
    std::ostringstream oss;
    oss << "sigma2 update: drew " << drawn << " from Inv-Gamma(" << gp.shape << ", " << gp.rate
        << ")";
    throw NumericalError(oss.str());
  }
  state.sigma2 = drawn;
}

NormalParams b_conditional(int subject, const ChainState& state, const DesignSet& designs) {
  const auto& s = designs.subjects[static_cast<std::size_t>(subject)];
  const int g = s.group;
  const double s2 = state.sigma2;
  const auto act = active_columns(state.gamma[static_cast<std::size_t>(g)]);

  NormalParams np;
  if (act.empty()) {
    np.precision = s.ZtZ / s2;
    np.precision.diagonal().array() += state.lambda_d;
    const Eigen::VectorXd eta = (s.Zty - s.WtZ.transpose() * state.alpha) / s2;
    const auto llt = chol_or_throw_numerical(np.precision, "random-effects update");
    np.mean = llt.solve(eta);
    return np;
  }

  const double wi = 1.0 / static_cast<double>(s.n_obs());
  const auto fs = fractional_stats(g, act, state, designs);
  const auto llt_a = chol_or_throw_identifiability(fs.A, g, act, designs);
  const Eigen::MatrixXd XtZ_a = s.XtZ(act, Eigen::all);  // p_a x p_z
  const Eigen::MatrixXd T = wi * XtZ_a;
  const Eigen::MatrixXd AinvT = llt_a.solve(T);

  np.precision = (s.ZtZ + T.transpose() * AinvT) / s2;
  np.precision.diagonal().array() += state.lambda_d;

  // u0 removes this subject's own random-effect contribution from u_a
  const Eigen::VectorXd u0 = fs.u_a + wi * (XtZ_a * state.b.row(subject).transpose());
  const auto& beta = state.beta[static_cast<std::size_t>(g)];
  Eigen::VectorXd eta = s.Zty - s.WtZ.transpose() * state.alpha -
                        (1.0 + wi) * (XtZ_a.transpose() * beta) + AinvT.transpose() * u0;
  eta /= s2;

  const auto llt = chol_or_throw_numerical(np.precision, "random-effects update");
  np.mean = llt.solve(eta);
  return np;
}

void sample_b_subject(int subject, ChainState& state, const DesignSet& designs, Rng& rng) {
  const auto np = b_conditional(subject, state, designs);
  state.b.row(subject) = draw_mvn_precision(np, rng).transpose();
}

GammaParams lambda_conditional(const ChainState& state, const DesignSet& designs,
                               const HyperParams& hp) {
  GammaParams gp;
  gp.shape = 0.5 * static_cast<double>(designs.n_subjects()) * designs.p_z + hp.d1;
  gp.rate = 0.5 * state.b.squaredNorm() + hp.d2;
  return gp;
}

void sample_lambda(ChainState& state, const DesignSet& designs, const HyperParams& hp,
                   Rng& rng) {
  const auto gp = lambda_conditional(state, designs, hp);
  const double drawn = rng.gamma(gp.shape, gp.rate);
  if (!std::isfinite(drawn) || !(drawn > 0.0)) {
    std::ostringstream oss;
    oss << "lambda update: drew " << drawn << " from Gamma(" << gp.shape << ", " << gp.rate
        << ")";
    throw NumericalError(oss.str());
  }
  state.lambda_d = drawn;
}

void gibbs_step(ChainState& state, const DesignSet& designs, const HyperParams& hp,
                Rng& rng) {
  const int G = designs.n_groups();
  for (int g = 0; g < G - 1; ++g) {
    for (int j = 0; j < designs.p_x; ++j) sample_gamma_site(g, j, state, designs, hp, rng);
  }
  for (int g = 0; g < G; ++g) sample_beta_group(g, state, designs, rng);
  sample_alpha(state, designs, hp, rng);
  sample_sigma2(state, designs, rng);
  for (int i = 0; i < designs.n_subjects(); ++i) sample_b_subject(i, state, designs, rng);
  sample_lambda(state, designs, hp, rng);
}

Eigen::VectorXd draw_mvn_precision(const NormalParams& params, Rng& rng) {
  if (!params.mean.allFinite() || !params.precision.allFinite()) {
    throw NumericalError("multivariate normal draw: non-finite conditional parameters");
  }
  const auto llt = chol_or_throw_numerical(params.precision, "multivariate normal draw");
  Eigen::VectorXd z(params.mean.size());
  for (Eigen::Index k = 0; k < z.size(); ++k) z(k) = rng.normal();
  // U x = z with U = L' gives x ~ N(0, precision^{-1})
  return params.mean + llt.matrixU().solve(z);
}

namespace {

struct MonitorResult {
  bool all_pass = true;
  double min_ess = kInf;
  std::string worst;
};

void check_column(std::span<const double> col, const std::string& name, const FwsrConfig& fwsr,
                  MonitorResult& res) {
  if (!fwsr_pass(col, fwsr)) res.all_pass = false;
  if (col.size() >= 10) {
    const double e = ess(col);
    if (e < res.min_ess) {
      res.min_ess = e;
      res.worst = name;
    }
  } else {
    res.all_pass = false;
  }
}

MonitorResult check_monitored(const ChainTrace& trace, const GibbsConfig& gcfg) {
  MonitorResult res;
  const int G = trace.n_groups();
  for (int k = 0; k < trace.p_w; ++k) {
    const auto c = trace.alpha_col(k);
    check_column(trace.columns[static_cast<std::size_t>(c)],
                 trace.column_names[static_cast<std::size_t>(c)], gcfg.fwsr, res);
  }
  check_column(trace.columns[static_cast<std::size_t>(trace.sigma2_col())], "sigma2", gcfg.fwsr,
               res);
  check_column(trace.columns[static_cast<std::size_t>(trace.lambda_col())], "lambda_D",
               gcfg.fwsr, res);
  for (int g = 0; g < G - 1; ++g) {
    for (int j = 0; j < trace.p_x; ++j) {
      const auto c = trace.gamma_col(g, j);
      check_column(trace.columns[static_cast<std::size_t>(c)],
                   trace.column_names[static_cast<std::size_t>(c)], gcfg.fwsr, res);
      if (gcfg.monitor_beta) {
        // coefficient monitored over its active subsequence; not binding
        // until it has accumulated a full window of active draws
        const auto& gcol = trace.columns[static_cast<std::size_t>(c)];
        const auto& bcol = trace.columns[static_cast<std::size_t>(trace.beta_col(g, j))];
        std::vector<double> active;
        active.reserve(gcol.size());
        for (std::size_t t = 0; t < gcol.size(); ++t) {
          if (gcol[t] != 0.0) active.push_back(bcol[t]);
        }
        if (active.size() >= 100) {
          check_column(active, trace.column_names[static_cast<std::size_t>(trace.beta_col(g, j))],
                       gcfg.fwsr, res);
        }
      }
    }
  }
  return res;
}

}  // namespace

ChainTrace run_chain(const Dataset& data, const DesignConfig& config, const HyperParams& hp,
                     const GibbsConfig& gcfg, const ProgressFn& progress) {
  gcfg.validate();
  const DesignSet designs = build_designs(data, config);
  hp.validate(designs.p_w, designs.n_groups());

  ChainTrace trace;
  trace.group_labels = designs.group_labels;
  trace.p_w = designs.p_w;
  trace.p_x = designs.p_x;
  trace.p_z = designs.p_z;
  trace.w_degrees = config.w_degrees;
  trace.x_degrees = config.x_degrees;
  trace.z_degrees = config.z_degrees;
  trace.rescale = config.rescale;
  trace.seed = gcfg.seed;
  trace.burn_in = gcfg.effective_burn_in();

  const int G = designs.n_groups();
  for (int g = 0; g < G; ++g) {
    for (int j = 0; j < designs.p_x; ++j) {
      trace.column_names.push_back("gamma_" + std::to_string(g + 1) + "_" + std::to_string(j));
    }
  }
  for (int g = 0; g < G; ++g) {
    for (int j = 0; j < designs.p_x; ++j) {
      trace.column_names.push_back("beta_" + std::to_string(g + 1) + "_" + std::to_string(j));
    }
  }
  for (int k = 0; k < designs.p_w; ++k) {
    trace.column_names.push_back("alpha_" + std::to_string(k));
  }
  trace.column_names.push_back("sigma2");
  trace.column_names.push_back("lambda_D");
  if (gcfg.record_b) {
    for (int i = 0; i < designs.n_subjects(); ++i) {
      for (int m = 0; m < designs.p_z; ++m) {
        trace.column_names.push_back("b_" + std::to_string(i + 1) + "_" + std::to_string(m));
      }
    }
  }
  trace.columns.assign(trace.column_names.size(), {});

  ChainState state = initial_state(designs, hp);
  Rng rng(gcfg.seed);
  const long burn = trace.burn_in;
  const double target = ess_target(gcfg.fwsr);

  auto append_row = [&](const ChainState& st) {
    std::size_t c = 0;
    for (int g = 0; g < G; ++g) {
      for (int j = 0; j < designs.p_x; ++j) {
        trace.columns[c++].push_back(
            static_cast<double>(st.gamma[static_cast<std::size_t>(g)][static_cast<std::size_t>(j)]));
      }
    }
    for (int g = 0; g < G; ++g) {
      const auto& row = st.gamma[static_cast<std::size_t>(g)];
      const auto& beta = st.beta[static_cast<std::size_t>(g)];
      int pos = 0;
      for (int j = 0; j < designs.p_x; ++j) {
        trace.columns[c++].push_back(row[static_cast<std::size_t>(j)] ? beta(pos++) : 0.0);
      }
    }
    for (int k = 0; k < designs.p_w; ++k) trace.columns[c++].push_back(st.alpha(k));
    trace.columns[c++].push_back(st.sigma2);
    trace.columns[c++].push_back(st.lambda_d);
    if (gcfg.record_b) {
      for (int i = 0; i < designs.n_subjects(); ++i) {
        for (int m = 0; m < designs.p_z; ++m) trace.columns[c++].push_back(st.b(i, m));
      }
    }
  };

  long t = 0;
  for (t = 1; t <= gcfg.max_iters; ++t) {
    gibbs_step(state, designs, hp, rng);
    if (t > burn) append_row(state);
    if (t >= gcfg.min_iters && t % gcfg.check_interval == 0) {
      const auto res = check_monitored(trace, gcfg);
      if (progress) {
        ChainProgress p;
        p.iter = t;
        p.retained = trace.n_retained();
        p.min_ess = res.min_ess;
        p.target = target;
        p.worst = res.worst;
        progress(p);
      }
      if (res.all_pass) {
        trace.converged = true;
        break;
      }
    }
  }
  trace.iterations = std::min(t, gcfg.max_iters);
  trace.termination = trace.converged ? "fwsr-converged" : "max-iters";
  return trace;
}

}  // namespace lmmsel
