#include "lmmsel/model.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "kv.hpp"
#include "lmmsel/mathutil.hpp"

namespace lmmsel {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
}

void HyperParams::validate(int p_w, int n_groups) const {
  if (!(d1 > 0.0) || !(d2 > 0.0)) throw ValidationError("d1 and d2 must be positive");
  if (!(d4 > 0.0)) throw ValidationError("d4 must be positive");
  if (d3.size() != p_w) {
    throw ValidationError("d3 must have one entry per W column (expected " +
                          std::to_string(p_w) + ", got " + std::to_string(d3.size()) + ")");
  }
  if (pi.size() != n_groups) {
    throw ValidationError("pi must have one entry per group (expected " +
                          std::to_string(n_groups) + ", got " + std::to_string(pi.size()) + ")");
  }
  for (Eigen::Index g = 0; g < pi.size(); ++g) {
    if (!(pi(g) >= 0.0 && pi(g) <= 1.0)) {
      throw ValidationError("prior inclusion probabilities must lie in [0, 1]");
    }
  }
  if (pi(pi.size() - 1) != 0.0) {
    throw ValidationError("the control group's prior inclusion probability must be exactly 0");
  }
}

HyperParams default_hyperparams(const DesignSet& designs) {
  HyperParams hp;
  const int G = designs.n_groups();
  hp.pi = Eigen::VectorXd::Constant(G, 0.5);
  hp.pi(G - 1) = 0.0;

  // pooled OLS of the control group's responses on W
  const auto& members = designs.group_members[static_cast<std::size_t>(designs.control_group())];
  long rows = 0;
  for (int i : members) rows += designs.subjects[static_cast<std::size_t>(i)].n_obs();
  Eigen::MatrixXd W(rows, designs.p_w);
  Eigen::VectorXd y(rows);
  long at = 0;
  for (int i : members) {
    const auto& s = designs.subjects[static_cast<std::size_t>(i)];
    W.middleRows(at, s.n_obs()) = s.W;
    y.segment(at, s.n_obs()) = s.y;
    at += s.n_obs();
  }
  hp.d3 = W.colPivHouseholderQr().solve(y);
  hp.d4 = 0.01;
  return hp;
}

void ChainState::validate(const DesignSet& designs) const {
  const int G = designs.n_groups();
  if (static_cast<int>(gamma.size()) != G || static_cast<int>(beta.size()) != G) {
    throw ValidationError("state: gamma/beta must have one row per group");
  }
  for (int g = 0; g < G; ++g) {
    if (static_cast<int>(gamma[static_cast<std::size_t>(g)].size()) != designs.p_x) {
      throw ValidationError("state: gamma row has wrong width");
    }
    long active = 0;
    for (int v : gamma[static_cast<std::size_t>(g)]) {
      if (v != 0 && v != 1) throw ValidationError("state: gamma entries must be 0/1");
      active += v;
    }
    if (beta[static_cast<std::size_t>(g)].size() != active) {
      throw ValidationError("state: beta length must equal the number of active indicators");
    }
  }
  for (int v : gamma[static_cast<std::size_t>(G - 1)]) {
    if (v != 0) throw ValidationError("state: the control group's indicators must all be zero");
  }
  if (alpha.size() != designs.p_w) throw ValidationError("state: alpha has wrong length");
  if (b.rows() != designs.n_subjects() || b.cols() != designs.p_z) {
    throw ValidationError("state: b has wrong shape");
  }
  if (!(sigma2 > 0.0)) throw ValidationError("state: sigma2 must be positive");
  if (!(lambda_d > 0.0)) throw ValidationError("state: lambda_d must be positive");
}

ChainState initial_state(const DesignSet& designs, const HyperParams& hp) {
  ChainState st;
  const int G = designs.n_groups();
  st.gamma.assign(static_cast<std::size_t>(G), std::vector<int>(static_cast<std::size_t>(designs.p_x), 0));
  st.beta.assign(static_cast<std::size_t>(G), Eigen::VectorXd());
  st.alpha = hp.d3;
  st.b = Eigen::MatrixXd::Zero(designs.n_subjects(), designs.p_z);
  st.lambda_d = hp.d1 / hp.d2;

  double sum = 0.0, sumsq = 0.0;
  for (const auto& s : designs.subjects) {
    sum += s.y.sum();
    sumsq += s.y.squaredNorm();
  }
  const double n = static_cast<double>(designs.n_obs);
  const double var = n > 1.5 ? (sumsq - sum * sum / n) / (n - 1.0) : 1.0;
  st.sigma2 = var > 0.0 ? var : 1.0;
  return st;
}

std::vector<int> active_columns(const std::vector<int>& gamma_g) {
  std::vector<int> act;
  for (std::size_t j = 0; j < gamma_g.size(); ++j) {
    if (gamma_g[j] != 0) act.push_back(static_cast<int>(j));
  }
  return act;
}

FractionalPriorStats fractional_stats(int g, const std::vector<int>& active,
                                      const ChainState& state, const DesignSet& designs) {
  FractionalPriorStats st;
  const auto p_a = static_cast<Eigen::Index>(active.size());
  st.A = designs.A_full[static_cast<std::size_t>(g)](active, active);
  st.B = designs.B_full[static_cast<std::size_t>(g)](active, active);
  st.u_a = Eigen::VectorXd::Zero(p_a);
  st.u_b = Eigen::VectorXd::Zero(p_a);
  for (int i : designs.group_members[static_cast<std::size_t>(g)]) {
    const auto& s = designs.subjects[static_cast<std::size_t>(i)];
    // v = X' phi with phi = y - W alpha - Z b_i
    const Eigen::VectorXd v =
        s.Xty - s.XtW * state.alpha - s.XtZ * state.b.row(i).transpose();
    const double wi = 1.0 / static_cast<double>(s.n_obs());
    const Eigen::VectorXd va = v(active);
    st.u_a += wi * va;
    st.u_b += (1.0 + wi) * va;
  }
  return st;
}

NormalParams fractional_prior_moments(int g, const std::vector<int>& gamma_g,
                                      const ChainState& state, const DesignSet& designs) {
  const auto act = active_columns(gamma_g);
  if (act.empty()) {
    throw ValidationError("fractional_prior_moments: the active set is empty");
  }
  const auto st = fractional_stats(g, act, state, designs);
  Eigen::LLT<Eigen::MatrixXd> llt;
  if (!cholesky_spd(st.A, llt)) {
    throw IdentifiabilityError("group '" + designs.group_labels[static_cast<std::size_t>(g)] +
                               "': singular weighted Gram matrix for the active columns");
  }
  NormalParams np;
  np.mean = llt.solve(st.u_a);
  np.precision = st.A / state.sigma2;
  return np;
}

double joint_log_density(const ChainState& state, const DesignSet& designs,
                         const HyperParams& hp) {
  if (!(state.sigma2 > 0.0) || !(state.lambda_d > 0.0)) {
    throw std::domain_error("joint_log_density: sigma2 and lambda_d must be positive");
  }
  state.validate(designs);
  hp.validate(designs.p_w, designs.n_groups());

  const double s2 = state.sigma2;
  const int G = designs.n_groups();
  double lp = 0.0;

  // Gaussian likelihood, one term per subject
  for (int i = 0; i < designs.n_subjects(); ++i) {
    const auto& s = designs.subjects[static_cast<std::size_t>(i)];
    const auto act = active_columns(state.gamma[static_cast<std::size_t>(s.group)]);
    Eigen::VectorXd r = s.y - s.W * state.alpha - s.Z * state.b.row(i).transpose();
    if (!act.empty()) r -= s.X(Eigen::all, act) * state.beta[static_cast<std::size_t>(s.group)];
    lp += -0.5 * s.n_obs() * (kLog2Pi + std::log(s2)) - r.squaredNorm() / (2.0 * s2);
  }

  // fractional prior on each group's active coefficients
  for (int g = 0; g < G; ++g) {
    const auto act = active_columns(state.gamma[static_cast<std::size_t>(g)]);
    if (act.empty()) continue;  // empty product convention: contributes 0
    const auto fs = fractional_stats(g, act, state, designs);
    Eigen::LLT<Eigen::MatrixXd> llt;
    if (!cholesky_spd(fs.A, llt)) {
      throw IdentifiabilityError("group '" + designs.group_labels[static_cast<std::size_t>(g)] +
                                 "': singular weighted Gram matrix for the active columns");
    }
    const Eigen::VectorXd bhat = llt.solve(fs.u_a);
    const Eigen::VectorXd d = state.beta[static_cast<std::size_t>(g)] - bhat;
    const double p_a = static_cast<double>(act.size());
    lp += -0.5 * p_a * (kLog2Pi + std::log(s2)) + 0.5 * log_det_from_llt(llt) -
          d.dot(fs.A * d) / (2.0 * s2);
  }

  // Bernoulli indicator priors (treatment groups; the control row is pinned)
  for (int g = 0; g < G - 1; ++g) {
    const double pg = hp.pi(g);
    for (int v : state.gamma[static_cast<std::size_t>(g)]) {
      if (v == 1) {
        if (pg == 0.0) return -std::numeric_limits<double>::infinity();
        lp += std::log(pg);
      } else {
        if (pg == 1.0) return -std::numeric_limits<double>::infinity();
        lp += std::log1p(-pg);
      }
    }
  }

  // random effects
  const double n = static_cast<double>(designs.n_subjects());
  const double p_z = static_cast<double>(designs.p_z);
  lp += 0.5 * n * p_z * (std::log(state.lambda_d) - kLog2Pi) -
        0.5 * state.lambda_d * state.b.squaredNorm();

  // alpha prior, N(d3, (d4 I)^{-1})
  lp += 0.5 * designs.p_w * (std::log(hp.d4) - kLog2Pi) -
        0.5 * hp.d4 * (state.alpha - hp.d3).squaredNorm();

  // lambda prior, Gamma(d1, d2)
  lp += hp.d1 * std::log(hp.d2) - std::lgamma(hp.d1) +
        (hp.d1 - 1.0) * std::log(state.lambda_d) - hp.d2 * state.lambda_d;

  // improper scale prior on sigma2
  lp += -std::log(s2);

  return lp;
}

HyperParams load_hyperparams(const std::string& path, HyperParams base) {
  const auto kv = detail::parse_kv_file(path);
  HyperParams hp = std::move(base);
  if (kv.has("d1")) hp.d1 = detail::parse_real(kv.get("d1"), "d1");
  if (kv.has("d2")) hp.d2 = detail::parse_real(kv.get("d2"), "d2");
  if (kv.has("d4")) hp.d4 = detail::parse_real(kv.get("d4"), "d4");
  if (kv.has("d3")) {
    const auto v = detail::parse_real_list(kv.get("d3"), "d3");
    hp.d3 = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  }
  if (kv.has("pi")) {
    const auto v = detail::parse_real_list(kv.get("pi"), "pi");
    hp.pi = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  }
  return hp;
}

void save_hyperparams(const HyperParams& hp, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write file: " + path);
  out << "d1 = " << detail::format_real(hp.d1) << "\n";
  out << "d2 = " << detail::format_real(hp.d2) << "\n";
  out << "d3 = " << detail::join_reals(hp.d3) << "\n";
  out << "d4 = " << detail::format_real(hp.d4) << "\n";
  out << "pi = " << detail::join_reals(hp.pi) << "\n";
}

}  // namespace lmmsel
