#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "lmmsel/io.hpp"
#include "lmmsel/sampler.hpp"
#include "lmmsel/simulate.hpp"

using namespace lmmsel;
using testutil::Rng;

namespace {

// integrated log density over group g's coefficients at a candidate
// indicator value, via the finite-difference Gaussian-integral oracle
double integrated_log_joint(int g, int j, int value, const ChainState& base,
                            const DesignSet& designs, const HyperParams& hp) {
  ChainState st = base;
  st.gamma[g][j] = value;
  const auto act = active_columns(st.gamma[g]);
  auto f = [&](const Eigen::VectorXd& beta) {
    ChainState s = st;
    s.beta[g] = beta;
    return joint_log_density(s, designs, hp);
  };
  return testutil::integrate_quadratic(f, static_cast<int>(act.size()));
}

}  // namespace

TEST_CASE("ratio oracle: coefficient block conditional matches the joint") {
  Rng rng(101);
  int done = 0;
  while (done < 40) {
    auto inst = testutil::random_instance(rng, 1, 2);
    const auto act = active_columns(inst.state.gamma[0]);
    if (act.empty()) continue;
    const auto np = beta_conditional(0, inst.state, inst.designs);

    Eigen::VectorXd t1 = Eigen::VectorXd::NullaryExpr(np.mean.size(), [&](Eigen::Index) { return rng.normal(); });
    Eigen::VectorXd t2 = Eigen::VectorXd::NullaryExpr(np.mean.size(), [&](Eigen::Index) { return rng.normal(); });
    const double d_cond = testutil::log_mvn(t2, np.mean, np.precision) -
                          testutil::log_mvn(t1, np.mean, np.precision);
    ChainState s1 = inst.state, s2 = inst.state;
    s1.beta[0] = t1;
    s2.beta[0] = t2;
    const double d_joint = joint_log_density(s2, inst.designs, inst.hp) -
                           joint_log_density(s1, inst.designs, inst.hp);
    CHECK(testutil::rel_err(d_cond, d_joint) < 1e-8);
    ++done;
  }
}

TEST_CASE("ratio oracle: alpha conditional matches the joint") {
  Rng rng(103);
  for (int trial = 0; trial < 40; ++trial) {
    auto inst = testutil::random_instance(rng, 1, 2);
    const auto np = alpha_conditional(inst.state, inst.designs, inst.hp);
    Eigen::VectorXd t1 = Eigen::VectorXd::NullaryExpr(np.mean.size(), [&](Eigen::Index) { return rng.normal(); });
    Eigen::VectorXd t2 = Eigen::VectorXd::NullaryExpr(np.mean.size(), [&](Eigen::Index) { return rng.normal(); });
    const double d_cond = testutil::log_mvn(t2, np.mean, np.precision) -
                          testutil::log_mvn(t1, np.mean, np.precision);
    ChainState s1 = inst.state, s2 = inst.state;
    s1.alpha = t1;
    s2.alpha = t2;
    const double d_joint = joint_log_density(s2, inst.designs, inst.hp) -
                           joint_log_density(s1, inst.designs, inst.hp);
    CHECK(testutil::rel_err(d_cond, d_joint) < 1e-8);
  }
}

TEST_CASE("ratio oracle: sigma2 conditional matches the joint") {
  Rng rng(107);
  for (int trial = 0; trial < 40; ++trial) {
    auto inst = testutil::random_instance(rng, 1, 2);
    const auto gp = sigma2_conditional(inst.state, inst.designs);
    const double x1 = 0.4 + 2.0 * rng.uniform();
    const double x2 = 0.4 + 2.0 * rng.uniform();
    const double d_cond = testutil::log_inv_gamma(x2, gp.shape, gp.rate) -
                          testutil::log_inv_gamma(x1, gp.shape, gp.rate);
    ChainState s1 = inst.state, s2 = inst.state;
    s1.sigma2 = x1;
    s2.sigma2 = x2;
    const double d_joint = joint_log_density(s2, inst.designs, inst.hp) -
                           joint_log_density(s1, inst.designs, inst.hp);
    CHECK(testutil::rel_err(d_cond, d_joint) < 1e-8);
  }
}

TEST_CASE("ratio oracle: random-effects conditional matches the joint") {
  Rng rng(109);
  for (int trial = 0; trial < 40; ++trial) {
    auto inst = testutil::random_instance(rng, 1, 2);
    const int i = static_cast<int>(rng.uniform() * inst.designs.n_subjects());
    const auto np = b_conditional(i, inst.state, inst.designs);
    Eigen::VectorXd t1 = Eigen::VectorXd::NullaryExpr(np.mean.size(), [&](Eigen::Index) { return rng.normal(); });
    Eigen::VectorXd t2 = Eigen::VectorXd::NullaryExpr(np.mean.size(), [&](Eigen::Index) { return rng.normal(); });
    const double d_cond = testutil::log_mvn(t2, np.mean, np.precision) -
                          testutil::log_mvn(t1, np.mean, np.precision);
    ChainState s1 = inst.state, s2 = inst.state;
    s1.b.row(i) = t1.transpose();
    s2.b.row(i) = t2.transpose();
    const double d_joint = joint_log_density(s2, inst.designs, inst.hp) -
                           joint_log_density(s1, inst.designs, inst.hp);
    CHECK(testutil::rel_err(d_cond, d_joint) < 1e-8);
  }
}

TEST_CASE("ratio oracle: lambda conditional matches the joint") {
  Rng rng(113);
  for (int trial = 0; trial < 40; ++trial) {
    auto inst = testutil::random_instance(rng, 1, 2);
    const auto gp = lambda_conditional(inst.state, inst.designs, inst.hp);
    const double x1 = 0.3 + 2.0 * rng.uniform();
    const double x2 = 0.3 + 2.0 * rng.uniform();
    const double d_cond = testutil::log_gamma_pdf(x2, gp.shape, gp.rate) -
                          testutil::log_gamma_pdf(x1, gp.shape, gp.rate);
    ChainState s1 = inst.state, s2 = inst.state;
    s1.lambda_d = x1;
    s2.lambda_d = x2;
    const double d_joint = joint_log_density(s2, inst.designs, inst.hp) -
                           joint_log_density(s1, inst.designs, inst.hp);
    CHECK(testutil::rel_err(d_cond, d_joint) < 1e-8);
  }
}

TEST_CASE("ratio oracle: indicator site log odds match the coefficient-integrated joint") {
  Rng rng(127);
  for (int trial = 0; trial < 40; ++trial) {
    auto inst = testutil::random_instance(rng, 1, 2);
    const int j = static_cast<int>(rng.uniform() * inst.designs.p_x);
    const double got = gamma_site_log_odds(0, j, inst.state, inst.designs, inst.hp);
    const double want = integrated_log_joint(0, j, 1, inst.state, inst.designs, inst.hp) -
                        integrated_log_joint(0, j, 0, inst.state, inst.designs, inst.hp);
    CHECK(testutil::rel_err(got, want) < 1e-8);
  }
}

TEST_CASE("indicator site: brute-force one-column evaluation and quadrature agree") {
  Rng rng(131);
  for (int trial = 0; trial < 5; ++trial) {
    auto inst = testutil::random_instance(rng, 1, 1);
    REQUIRE(inst.designs.p_x == 1);
    const double p1 = gamma_site_prob_one(0, 0, inst.state, inst.designs, inst.hp);

    // independent dense evaluation: determinants and quadratic forms from
    // scratch over the stacked per-subject matrices
    double quad_a = 0.0, quad_b = 0.0, A = 0.0, B = 0.0;
    for (int i : inst.designs.group_members[0]) {
      const auto& s = inst.designs.subjects[i];
      const Eigen::VectorXd phi =
          s.y - s.W * inst.state.alpha - s.Z * inst.state.b.row(i).transpose();
      const double xx = (s.X.transpose() * s.X)(0, 0);
      const double xphi = (s.X.transpose() * phi)(0);
      const double wi = 1.0 / s.n_obs();
      A += wi * xx;
      B += (1.0 + wi) * xx;
      quad_a += wi * xphi;
      quad_b += (1.0 + wi) * xphi;
    }
    const double pg = inst.hp.pi(0);
    const double lw1 = std::log(pg) + 0.5 * (std::log(A) - std::log(B)) +
                       (quad_b * quad_b / B - quad_a * quad_a / A) / (2.0 * inst.state.sigma2);
    const double lw0 = std::log1p(-pg);
    const double dense_p1 = 1.0 / (1.0 + std::exp(lw0 - lw1));
    CHECK(std::abs(p1 - dense_p1) < 1e-10);

    // numerical integration of the coefficient out of the joint
    auto level = [&](int v) {
      ChainState st = inst.state;
      st.gamma[0][0] = v;
      if (v == 0) {
        st.beta[0] = Eigen::VectorXd();
        return joint_log_density(st, inst.designs, inst.hp);
      }
      auto f = [&](double beta) {
        ChainState s = st;
        s.beta[0] = Eigen::VectorXd::Constant(1, beta);
        return joint_log_density(s, inst.designs, inst.hp);
      };
      const double center = quad_b / B;
      const double sd = std::sqrt(inst.state.sigma2 / B);
      return testutil::integrate_trapezoid(f, center - 12.0 * sd, center + 12.0 * sd, 20001);
    };
    const double l1 = level(1);
    const double l0 = level(0);
    const double quad_p1 = 1.0 / (1.0 + std::exp(l0 - l1));
    CHECK(std::abs(p1 - quad_p1) < 1e-6);
  }
}

TEST_CASE("indicator draws honor degenerate priors without consuming randomness") {
  Rng rng(137);
  auto inst = testutil::random_instance(rng, 2, 1);
  inst.hp.pi(0) = 0.0;
  inst.hp.pi(1) = 1.0;

  Rng draw_rng(999);
  Rng reference(999);
  CHECK(sample_gamma_site(0, 0, inst.state, inst.designs, inst.hp, draw_rng) == 0);
  CHECK(sample_gamma_site(1, 0, inst.state, inst.designs, inst.hp, draw_rng) == 1);
  CHECK(draw_rng.next_u64() == reference.next_u64());  // nothing consumed
  CHECK(inst.state.gamma[0][0] == 0);
  CHECK(inst.state.gamma[1][0] == 1);
  CHECK_NOTHROW(inst.state.validate(inst.designs));
}

TEST_CASE("indicator draw frequency tracks the conditional probability") {
  Rng rng(139);
  auto inst = testutil::random_instance(rng, 1, 1);
  const double p1 = gamma_site_prob_one(0, 0, inst.state, inst.designs, inst.hp);
  Rng draw_rng(777);
  const int n = 20000;
  int ones = 0;
  for (int k = 0; k < n; ++k) {
    ChainState st = inst.state;
    ones += sample_gamma_site(0, 0, st, inst.designs, inst.hp, draw_rng);
  }
  const double freq = static_cast<double>(ones) / n;
  const double sd = std::sqrt(p1 * (1.0 - p1) / n);
  CHECK(std::abs(freq - p1) < 4.0 * sd + 1e-9);
}

TEST_CASE("empty coefficient block draws nothing") {
  Rng rng(149);
  auto inst = testutil::random_instance(rng, 1, 1);
  inst.state.gamma[0][0] = 0;
  inst.state.beta[0] = Eigen::VectorXd();
  Rng draw_rng(555);
  Rng reference(555);
  sample_beta_group(0, inst.state, inst.designs, draw_rng);
  CHECK(inst.state.beta[0].size() == 0);
  CHECK(draw_rng.next_u64() == reference.next_u64());
}

TEST_CASE("coefficient draws collapse to weighted least squares as noise vanishes") {
  Dataset d;
  d.groups = {"t1", "ctl"};
  Subject s1{"s1", 0, {}};
  Subject s2{"s2", 1, {}};
  Rng rng(151);
  for (int k = 0; k < 5; ++k) {
    const double t = 0.3 * (k + 1);
    s1.obs.push_back({t, 1.0 + 2.5 * t + 0.05 * rng.normal()});
    s2.obs.push_back({t, 1.0 + 0.2 * rng.normal()});
  }
  d.subjects = {s1, s2};
  DesignConfig cfg;  // W {0,1}, X {1}, Z {0,1}
  const auto designs = build_designs(d, cfg);
  auto hp = default_hyperparams(designs);
  auto st = initial_state(designs, hp);
  st.gamma[0][0] = 1;
  st.beta[0] = Eigen::VectorXd::Zero(1);
  st.alpha = Eigen::Vector2d::Zero();
  st.b.setZero();
  st.sigma2 = 1e-12;

  // single active subject: the conditional mean is this subject's ordinary
  // least squares slope of phi on X
  const auto& sd = designs.subjects[0];
  const Eigen::VectorXd phi = sd.y;
  const double wls = (sd.X.transpose() * sd.X).inverse()(0, 0) * (sd.X.transpose() * phi)(0);

  Rng draw_rng(1234);
  for (int k = 0; k < 20; ++k) {
    ChainState scratch = st;
    sample_beta_group(0, scratch, designs, draw_rng);
    CHECK(std::abs(scratch.beta[0](0) - wls) < 1e-4);
  }
}

TEST_CASE("alpha draws collapse to the prior mean under a dominant prior") {
  Rng rng(157);
  auto inst = testutil::random_instance(rng, 1, 1);
  inst.hp.d4 = 1e12;
  Rng draw_rng(31);
  for (int k = 0; k < 10; ++k) {
    ChainState scratch = inst.state;
    sample_alpha(scratch, inst.designs, inst.hp, draw_rng);
    CHECK((scratch.alpha - inst.hp.d3).cwiseAbs().maxCoeff() < 1e-4);
  }
}

TEST_CASE("alpha conditional reduces to pooled Bayesian regression when nothing is active") {
  Rng rng(163);
  auto inst = testutil::random_instance(rng, 1, 2);
  for (auto& row : inst.state.gamma) std::fill(row.begin(), row.end(), 0);
  for (auto& beta : inst.state.beta) beta = Eigen::VectorXd();
  inst.state.b.setZero();

  long rows = 0;
  for (const auto& s : inst.designs.subjects) rows += s.n_obs();
  Eigen::MatrixXd W(rows, inst.designs.p_w);
  Eigen::VectorXd y(rows);
  long at = 0;
  for (const auto& s : inst.designs.subjects) {
    W.middleRows(at, s.n_obs()) = s.W;
    y.segment(at, s.n_obs()) = s.y;
    at += s.n_obs();
  }
  const Eigen::MatrixXd prec = W.transpose() * W / inst.state.sigma2 +
                               inst.hp.d4 * Eigen::MatrixXd::Identity(inst.designs.p_w, inst.designs.p_w);
  const Eigen::VectorXd mean =
      prec.ldlt().solve(W.transpose() * y / inst.state.sigma2 + inst.hp.d4 * inst.hp.d3);

  const auto np = alpha_conditional(inst.state, inst.designs, inst.hp);
  CHECK((np.mean - mean).cwiseAbs().maxCoeff() < 1e-8 * (1.0 + mean.cwiseAbs().maxCoeff()));
  CHECK((np.precision - prec).cwiseAbs().maxCoeff() < 1e-8 * prec.cwiseAbs().maxCoeff());
}

TEST_CASE("sigma2 conditional: exact shape and the empty-model reduction") {
  Rng rng(167);
  auto inst = testutil::random_instance(rng, 2, 2);
  long active = 0;
  for (const auto& row : inst.state.gamma) {
    for (int v : row) active += v;
  }
  const auto gp = sigma2_conditional(inst.state, inst.designs);
  CHECK(gp.shape == 0.5 * (inst.designs.n_obs + active));  // exact

  for (auto& row : inst.state.gamma) std::fill(row.begin(), row.end(), 0);
  for (auto& beta : inst.state.beta) beta = Eigen::VectorXd();
  inst.state.b.setZero();
  double rss = 0.0;
  for (const auto& s : inst.designs.subjects) {
    rss += (s.y - s.W * inst.state.alpha).squaredNorm();
  }
  const auto gp0 = sigma2_conditional(inst.state, inst.designs);
  CHECK(gp0.shape == 0.5 * inst.designs.n_obs);
  CHECK(gp0.rate == doctest::Approx(0.5 * rss).epsilon(1e-12));

  // empirical mean of the draws against the analytic inverse-gamma mean
  Rng draw_rng(71);
  const int n = 100000;
  double sum = 0.0;
  ChainState scratch = inst.state;
  for (int k = 0; k < n; ++k) {
    sample_sigma2(scratch, inst.designs, draw_rng);
    CHECK(scratch.sigma2 > 0.0);
    sum += scratch.sigma2;
  }
  CHECK(sum / n == doctest::Approx(gp0.rate / (gp0.shape - 1.0)).epsilon(0.01));
}

TEST_CASE("random effects: dominant prior pins the draw at zero") {
  Rng rng(173);
  auto inst = testutil::random_instance(rng, 1, 1);
  inst.state.lambda_d = 1e12;
  Rng draw_rng(37);
  for (int i = 0; i < inst.designs.n_subjects(); ++i) {
    ChainState scratch = inst.state;
    sample_b_subject(i, scratch, inst.designs, draw_rng);
    CHECK(scratch.b.row(i).cwiseAbs().maxCoeff() < 1e-4);
  }
}

TEST_CASE("random effects conditional reduces to the conjugate update when the group is empty") {
  Rng rng(179);
  auto inst = testutil::random_instance(rng, 1, 1);
  for (auto& row : inst.state.gamma) std::fill(row.begin(), row.end(), 0);
  for (auto& beta : inst.state.beta) beta = Eigen::VectorXd();
  for (int i = 0; i < inst.designs.n_subjects(); ++i) {
    const auto& s = inst.designs.subjects[i];
    const Eigen::MatrixXd prec =
        s.Z.transpose() * s.Z / inst.state.sigma2 +
        inst.state.lambda_d * Eigen::MatrixXd::Identity(inst.designs.p_z, inst.designs.p_z);
    const Eigen::VectorXd mean =
        prec.ldlt().solve(s.Z.transpose() * (s.y - s.W * inst.state.alpha) / inst.state.sigma2);
    const auto np = b_conditional(i, inst.state, inst.designs);
    CHECK((np.mean - mean).cwiseAbs().maxCoeff() < 1e-8 * (1.0 + mean.cwiseAbs().maxCoeff()));
    CHECK((np.precision - prec).cwiseAbs().maxCoeff() < 1e-8 * prec.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("lambda conditional: exact shape, zero-b rate, and draw moments") {
  Rng rng(181);
  auto inst = testutil::random_instance(rng, 1, 1);
  inst.state.b.setZero();
  const auto gp = lambda_conditional(inst.state, inst.designs, inst.hp);
  CHECK(gp.shape == 0.5 * inst.designs.n_subjects() * inst.designs.p_z + inst.hp.d1);  // exact
  CHECK(gp.rate == inst.hp.d2);

  Rng draw_rng(73);
  const int n = 100000;
  double sum = 0.0;
  ChainState scratch = inst.state;
  for (int k = 0; k < n; ++k) {
    sample_lambda(scratch, inst.designs, inst.hp, draw_rng);
    CHECK(scratch.lambda_d > 0.0);
    sum += scratch.lambda_d;
  }
  CHECK(sum / n == doctest::Approx(gp.shape / gp.rate).epsilon(0.01));
}

TEST_CASE("reparameterization leaves the integrated-odds building blocks unchanged") {
  Rng rng(191);
  for (int trial = 0; trial < 10; ++trial) {
    auto inst = testutil::random_instance(rng, 1, 2);
    if (inst.designs.p_x < 2) continue;
    std::vector<int> full(inst.designs.p_x, 1);
    const auto fs1 = fractional_stats(0, active_columns(full), inst.state, inst.designs);

    Eigen::MatrixXd C(2, 2);
    C << 1.0 + rng.uniform(), rng.normal(), 0.3 * rng.normal(), 1.0 + rng.uniform();
    DesignSet transformed = inst.designs;
    for (auto& s : transformed.subjects) s.X = s.X * C;
    compute_design_products(transformed);
    const auto fs2 = fractional_stats(0, active_columns(full), inst.state, transformed);

    const double r1 = std::log(fs1.A.determinant()) - std::log(fs1.B.determinant());
    const double r2 = std::log(fs2.A.determinant()) - std::log(fs2.B.determinant());
    CHECK(std::abs(r1 - r2) < 1e-10 * (1.0 + std::abs(r1)));

    const double qa1 = fs1.u_a.dot(fs1.A.ldlt().solve(fs1.u_a));
    const double qa2 = fs2.u_a.dot(fs2.A.ldlt().solve(fs2.u_a));
    CHECK(std::abs(qa1 - qa2) < 1e-10 * (1.0 + std::abs(qa1)));

    const double qb1 = fs1.u_b.dot(fs1.B.ldlt().solve(fs1.u_b));
    const double qb2 = fs2.u_b.dot(fs2.B.ldlt().solve(fs2.u_b));
    CHECK(std::abs(qb1 - qb2) < 1e-10 * (1.0 + std::abs(qb1)));
  }
}

TEST_CASE("gibbs step: zero priors keep the indicators at the baseline forever") {
  Rng rng(193);
  auto inst = testutil::random_instance(rng, 2, 1);
  inst.hp.pi.head(inst.hp.pi.size() - 1).setZero();
  auto st = initial_state(inst.designs, inst.hp);
  Rng draw_rng(91);
  for (int t = 0; t < 50; ++t) {
    gibbs_step(st, inst.designs, inst.hp, draw_rng);
    for (const auto& row : st.gamma) {
      for (int v : row) CHECK(v == 0);
    }
  }
}

TEST_CASE("gibbs step keeps every state invariant over a fuzz run") {
  Rng rng(197);
  auto inst = testutil::random_instance(rng, 2, 2);
  auto st = initial_state(inst.designs, inst.hp);
  Rng draw_rng(93);
  for (int t = 0; t < 1000; ++t) {
    gibbs_step(st, inst.designs, inst.hp, draw_rng);
    CHECK_NOTHROW(st.validate(inst.designs));
  }
}

TEST_CASE("run_chain is deterministic for a fixed seed") {
  auto spec = paper_sim_spec(5);
  for (auto& g : spec.groups) g.n_subjects = 4;
  spec.times.resize(6);
  const auto data = simulate_dataset(spec);

  GibbsConfig gcfg;
  gcfg.seed = 17;
  gcfg.max_iters = 300;
  gcfg.min_iters = 100;
  gcfg.check_interval = 100;

  const auto designs = build_designs(data, spec.design);
  const auto hp = default_hyperparams(designs);
  const auto t1 = run_chain(data, spec.design, hp, gcfg);
  const auto t2 = run_chain(data, spec.design, hp, gcfg);
  REQUIRE(t1.n_retained() == t2.n_retained());
  for (std::size_t c = 0; c < t1.columns.size(); ++c) {
    for (std::size_t r = 0; r < t1.columns[c].size(); ++r) {
      CHECK(t1.columns[c][r] == t2.columns[c][r]);  // bit-identical
    }
  }
}

TEST_CASE("run_chain honors the iteration cap and flags non-convergence") {
  auto spec = paper_sim_spec(6);
  for (auto& g : spec.groups) g.n_subjects = 3;
  spec.times.resize(5);
  const auto data = simulate_dataset(spec);

  GibbsConfig gcfg;
  gcfg.seed = 23;
  gcfg.max_iters = 10;
  gcfg.min_iters = 10;
  gcfg.check_interval = 10;

  const auto designs = build_designs(data, spec.design);
  const auto trace = run_chain(data, spec.design, default_hyperparams(designs), gcfg);
  CHECK(trace.iterations == 10);
  CHECK_FALSE(trace.converged);
  CHECK(trace.termination == "max-iters");
  CHECK(trace.n_retained() == 10 - gcfg.effective_burn_in());
}

TEST_CASE("control indicators stay exactly zero through a whole run") {
  auto spec = paper_sim_spec(7);
  for (auto& g : spec.groups) g.n_subjects = 4;
  spec.times.resize(5);
  const auto data = simulate_dataset(spec);
  GibbsConfig gcfg;
  gcfg.seed = 29;
  gcfg.max_iters = 200;
  gcfg.min_iters = 200;
  gcfg.check_interval = 200;
  const auto designs = build_designs(data, spec.design);
  const auto trace = run_chain(data, spec.design, default_hyperparams(designs), gcfg);
  const int ctl = trace.n_groups() - 1;
  for (int j = 0; j < trace.p_x; ++j) {
    for (double v : trace.columns[trace.gamma_col(ctl, j)]) CHECK(v == 0.0);
    for (double v : trace.columns[trace.beta_col(ctl, j)]) CHECK(v == 0.0);
  }
}

TEST_CASE("two seeds agree on inclusion probabilities within Monte Carlo error") {
  auto spec = paper_sim_spec(8);
  spec.groups = {spec.groups[0], spec.groups[4], spec.groups[5]};  // -2, +2, control
  spec.groups[0].n_subjects = 12;
  spec.groups[1].n_subjects = 12;
  spec.groups[2].n_subjects = 40;
  const auto data = simulate_dataset(spec);
  const auto designs = build_designs(data, spec.design);
  const auto hp = default_hyperparams(designs);

  GibbsConfig gcfg;
  gcfg.max_iters = 4000;
  gcfg.min_iters = 2000;
  gcfg.check_interval = 2000;
  gcfg.fwsr = {0.2, 0.05};

  gcfg.seed = 41;
  const auto ta = run_chain(data, spec.design, hp, gcfg);
  gcfg.seed = 42;
  const auto tb = run_chain(data, spec.design, hp, gcfg);

  for (int g = 0; g < ta.n_groups() - 1; ++g) {
    const auto& ca = ta.columns[ta.gamma_col(g, 0)];
    const auto& cb = tb.columns[tb.gamma_col(g, 0)];
    const double ma = std::accumulate(ca.begin(), ca.end(), 0.0) / ca.size();
    const double mb = std::accumulate(cb.begin(), cb.end(), 0.0) / cb.size();
    const double se = std::hypot(mcse_mean(ca), mcse_mean(cb));
    CHECK(std::abs(ma - mb) <= 3.0 * se + 1e-9);
  }
}
