// lmmsel: Bayesian variable selection on linear mixed-effects models for
// comparing treatment groups against a control. Subcommands:
//   simulate  generate a synthetic longitudinal dataset
//   fit       run the Gibbs sampler on a CSV dataset and write trace/report
//   report    re-summarize an existing trace
//
// Exit codes: 0 success/converged, 2 usage, 3 data validation, 4
// identifiability, 5 iteration cap reached before the stopping rule passed.

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "lmmsel/io.hpp"
#include "lmmsel/mathutil.hpp"
#include "lmmsel/sampler.hpp"
#include "lmmsel/simulate.hpp"
#include "lmmsel/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace lmmsel;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitIdentifiability = 4;
constexpr int kExitNotConverged = 5;

std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return fnv1a64_hex(ss.str());
}

void write_json(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write file: " + path);
  out << j.dump(2) << "\n";
}

json design_to_json(const DesignConfig& cfg) {
  return json{{"w_degrees", cfg.w_degrees},
              {"x_degrees", cfg.x_degrees},
              {"z_degrees", cfg.z_degrees},
              {"time_offset", cfg.rescale.offset},
              {"time_scale", cfg.rescale.scale}};
}

json hyper_to_json(const HyperParams& hp) {
  return json{{"d1", hp.d1},
              {"d2", hp.d2},
              {"d3", std::vector<double>(hp.d3.begin(), hp.d3.end())},
              {"d4", hp.d4},
              {"pi", std::vector<double>(hp.pi.begin(), hp.pi.end())}};
}

std::string replace_extension(const std::string& path, const std::string& ext) {
  fs::path p(path);
  p.replace_extension(ext);
  return p.string();
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateOptions {
  std::string out;
  std::uint64_t seed = 1;
  bool paper_defaults = false;
  int groups = 5;
  int subjects = 36;
  int control_subjects = 297;
  std::vector<double> offsets;
  std::vector<double> alpha;
  double sigma2 = -1.0;
  double lambda_inv = -1.0;
  std::vector<double> times;
  std::vector<int> w_degrees, x_degrees, z_degrees;
  double time_offset = std::numeric_limits<double>::quiet_NaN();
  double time_scale = std::numeric_limits<double>::quiet_NaN();
  std::string control_label = "99";
  std::vector<double> retention;
};

int run_simulate(const SimulateOptions& opt) {
  if (opt.groups < 1) throw UsageError("--groups must be at least 1");
  if (opt.subjects < 1) throw UsageError("--subjects must be at least 1");
  if (opt.control_subjects < 1) throw UsageError("--control-subjects must be at least 1");

  SimSpec spec = paper_sim_spec(opt.seed);
  if (!opt.paper_defaults) {
    // start from the built-in design, then apply overrides
    if (opt.groups != 5 && opt.offsets.empty()) {
      throw UsageError("--groups differs from 5; supply one --offsets entry per group");
    }
  }
  std::vector<double> offsets = opt.offsets;
  if (offsets.empty()) {
    offsets = {-2.0, -0.5, 0.0, 0.5, 2.0};
  }
  if (static_cast<int>(offsets.size()) != opt.groups) {
    throw UsageError("--offsets must list one value per treatment group");
  }

  if (!opt.w_degrees.empty()) spec.design.w_degrees = opt.w_degrees;
  if (!opt.x_degrees.empty()) spec.design.x_degrees = opt.x_degrees;
  if (!opt.z_degrees.empty()) spec.design.z_degrees = opt.z_degrees;
  if (!std::isnan(opt.time_offset)) spec.design.rescale.offset = opt.time_offset;
  if (!std::isnan(opt.time_scale)) spec.design.rescale.scale = opt.time_scale;
  if (!opt.times.empty()) spec.times = opt.times;
  if (opt.sigma2 >= 0.0) spec.sigma2 = opt.sigma2;
  if (opt.lambda_inv >= 0.0) spec.lambda_inv = opt.lambda_inv;
  if (!opt.retention.empty()) spec.retention = opt.retention;

  const int p_x = static_cast<int>(spec.design.x_degrees.size());
  if (!opt.alpha.empty()) {
    spec.alpha = Eigen::Map<const Eigen::VectorXd>(opt.alpha.data(),
                                                   static_cast<Eigen::Index>(opt.alpha.size()));
  }

  spec.groups.clear();
  for (int g = 0; g < opt.groups; ++g) {
    SimGroup grp;
    grp.label = std::to_string(g + 1);
    grp.n_subjects = opt.subjects;
    grp.beta = Eigen::VectorXd::Zero(p_x);
    grp.beta(0) = offsets[static_cast<std::size_t>(g)];
    spec.groups.push_back(std::move(grp));
  }
  SimGroup control;
  control.label = opt.control_label;
  control.n_subjects = opt.control_subjects;
  control.beta = Eigen::VectorXd::Zero(p_x);
  spec.groups.push_back(std::move(control));
  spec.seed = opt.seed;

  Dataset data;
  try {
    data = simulate_dataset(spec);
  } catch (const ValidationError& e) {
    throw UsageError(e.what());  // bad flag combination
  }
  save_csv(data, opt.out);

  json truth;
  truth["alpha"] = std::vector<double>(spec.alpha.begin(), spec.alpha.end());
  truth["sigma2"] = spec.sigma2;
  truth["lambda_inv"] = spec.lambda_inv;
  truth["seed"] = spec.seed;
  truth["times"] = spec.times;
  truth["design"] = design_to_json(spec.design);
  truth["retention"] = spec.retention;
  json jgroups = json::array();
  for (const auto& g : spec.groups) {
    jgroups.push_back({{"label", g.label},
                       {"subjects", g.n_subjects},
                       {"beta", std::vector<double>(g.beta.begin(), g.beta.end())}});
  }
  truth["groups"] = jgroups;
  write_json(truth, replace_extension(opt.out, ".truth.json"));

  json manifest;
  manifest["tool"] = {{"name", "lmmsel"}, {"version", kVersion}};
  manifest["command"] = "simulate";
  manifest["seed"] = opt.seed;
  manifest["spec"] = truth;
  manifest["outputs"] = {{"csv", opt.out},
                         {"truth", replace_extension(opt.out, ".truth.json")}};
  manifest["digests"] = {{"csv", file_digest(opt.out)}};
  write_json(manifest, replace_extension(opt.out, ".manifest.json"));

  std::cerr << "wrote " << data.n_subjects() << " subjects (" << data.n_obs_total()
            << " rows) to " << opt.out << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

struct FitOptions {
  std::string data_path;
  std::string control;
  double epsilon = 0.124;
  double delta = 0.05;
  std::uint64_t seed = 1;
  long max_iters = 200000;
  long min_iters = 1024;
  long check_interval = 512;
  long burn_in = -1;
  double threshold = 0.8772;
  int chains = 1;
  std::string config_path;
  std::string out_dir = "lmmsel_fit";
  std::vector<int> w_degrees{0, 1};
  std::vector<int> x_degrees{1};
  std::vector<int> z_degrees{0, 1};
  double time_offset = std::numeric_limits<double>::quiet_NaN();
  double time_scale = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> pi;
  double d1 = std::numeric_limits<double>::quiet_NaN();
  double d2 = std::numeric_limits<double>::quiet_NaN();
  double d4 = std::numeric_limits<double>::quiet_NaN();
  bool paper_defaults = false;
  bool no_monitor_beta = false;
  bool record_b = false;
  std::string col_subject = "subject";
  std::string col_group = "group";
  std::string col_time = "time";
  std::string col_response = "response";
};

int run_fit(const FitOptions& opt) {
  if (opt.chains < 1) throw UsageError("--chains must be at least 1");
  if (!(opt.threshold >= 0.0 && opt.threshold <= 1.0)) {
    throw UsageError("--threshold must lie in [0, 1]");
  }

  CsvSchema schema;
  schema.subject_col = opt.col_subject;
  schema.group_col = opt.col_group;
  schema.time_col = opt.col_time;
  schema.response_col = opt.col_response;
  schema.control_group = opt.control;
  const Dataset data = load_csv(opt.data_path, schema);

  DesignConfig design;
  design.w_degrees = opt.w_degrees;
  design.x_degrees = opt.x_degrees;
  design.z_degrees = opt.z_degrees;
  if (opt.paper_defaults) {
    design.rescale = {365.0, 365.0};
  } else {
    design.rescale = default_rescale(data);
  }
  if (!std::isnan(opt.time_offset)) design.rescale.offset = opt.time_offset;
  if (!std::isnan(opt.time_scale)) design.rescale.scale = opt.time_scale;

  const DesignSet designs = build_designs(data, design);

  HyperParams hp = default_hyperparams(designs);
  if (!opt.config_path.empty()) hp = load_hyperparams(opt.config_path, hp);
  if (!std::isnan(opt.d1)) hp.d1 = opt.d1;
  if (!std::isnan(opt.d2)) hp.d2 = opt.d2;
  if (!std::isnan(opt.d4)) hp.d4 = opt.d4;
  if (!opt.pi.empty()) {
    const int G = designs.n_groups();
    if (opt.pi.size() == 1) {
      hp.pi = Eigen::VectorXd::Constant(G, opt.pi[0]);
      hp.pi(G - 1) = 0.0;
    } else if (static_cast<int>(opt.pi.size()) == G - 1) {
      hp.pi.resize(G);
      for (int g = 0; g < G - 1; ++g) hp.pi(g) = opt.pi[static_cast<std::size_t>(g)];
      hp.pi(G - 1) = 0.0;
    } else if (static_cast<int>(opt.pi.size()) == G) {
      hp.pi = Eigen::Map<const Eigen::VectorXd>(opt.pi.data(), G);
    } else {
      throw UsageError("--pi must have 1, G-1, or G entries");
    }
  }
  hp.validate(designs.p_w, designs.n_groups());

  GibbsConfig gcfg;
  gcfg.seed = opt.seed;
  gcfg.max_iters = opt.max_iters;
  gcfg.min_iters = opt.min_iters;
  gcfg.check_interval = opt.check_interval;
  gcfg.burn_in = opt.burn_in;
  gcfg.monitor_beta = !opt.no_monitor_beta;
  gcfg.record_b = opt.record_b;
  gcfg.fwsr = {opt.epsilon, opt.delta};
  gcfg.validate();

  fs::create_directories(opt.out_dir);

  // independent chains; per-chain seeds are base seed + chain index
  std::vector<ChainTrace> traces(static_cast<std::size_t>(opt.chains));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(opt.chains));
  auto run_one = [&](int c) {
    try {
      GibbsConfig cfg = gcfg;
      cfg.seed = gcfg.seed + static_cast<std::uint64_t>(c);
      const auto progress = [&, c](const ChainProgress& p) {
        std::ostringstream line;
        line << "[chain " << (c + 1) << "] iter " << p.iter << " retained " << p.retained
             << " min ESS " << std::llround(p.min_ess) << "/" << std::llround(p.target);
        if (!p.worst.empty()) line << " (" << p.worst << ")";
        line << "\n";
        std::cerr << line.str();
      };
      traces[static_cast<std::size_t>(c)] = run_chain(data, design, hp, cfg, progress);
    } catch (...) {
      errors[static_cast<std::size_t>(c)] = std::current_exception();
    }
  };
  if (opt.chains == 1) {
    run_one(0);
  } else {
    std::vector<std::thread> pool;
    for (int c = 0; c < opt.chains; ++c) pool.emplace_back(run_one, c);
    for (auto& th : pool) th.join();
  }
  for (const auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }

  // persist traces
  std::vector<std::string> trace_paths;
  if (opt.chains == 1) {
    trace_paths.push_back((fs::path(opt.out_dir) / "trace.csv").string());
    save_trace(traces[0], trace_paths[0]);
  } else {
    for (int c = 0; c < opt.chains; ++c) {
      trace_paths.push_back(
          (fs::path(opt.out_dir) / ("trace_" + std::to_string(c + 1) + ".csv")).string());
      save_trace(traces[static_cast<std::size_t>(c)], trace_paths[static_cast<std::size_t>(c)]);
    }
  }

  // pooled summary across chains
  ChainTrace pooled = traces[0];
  for (int c = 1; c < opt.chains; ++c) {
    const auto& t = traces[static_cast<std::size_t>(c)];
    for (std::size_t col = 0; col < pooled.columns.size(); ++col) {
      pooled.columns[col].insert(pooled.columns[col].end(), t.columns[col].begin(),
                                 t.columns[col].end());
    }
    pooled.iterations += t.iterations;
  }

  PosteriorReport report = summarize(pooled);
  classify(report, opt.threshold);
  const std::string report_path = (fs::path(opt.out_dir) / "report.csv").string();
  save_report_csv(report, report_path);
  std::cout << format_report_table(report);

  if (opt.chains > 1) {
    std::cout << "\nper-chain inclusion probabilities\n";
    for (int g = 0; g < pooled.n_groups() - 1; ++g) {
      for (int j = 0; j < pooled.p_x; ++j) {
        std::cout << "  beta_" << (g + 1) << "_" << j << " [" << pooled.group_labels[g] << "]:";
        for (int c = 0; c < opt.chains; ++c) {
          const auto& col = traces[static_cast<std::size_t>(c)]
                                .columns[static_cast<std::size_t>(pooled.gamma_col(g, j))];
          double m = 0.0;
          for (double v : col) m += v;
          m /= static_cast<double>(col.size());
          std::printf(" %.4f", m);
        }
        std::cout << "\n";
      }
    }
  }

  // fitted trajectories over the observed time range
  double t_lo = std::numeric_limits<double>::infinity();
  double t_hi = -std::numeric_limits<double>::infinity();
  for (const auto& s : data.subjects) {
    for (const auto& o : s.obs) {
      t_lo = std::min(t_lo, o.time);
      t_hi = std::max(t_hi, o.time);
    }
  }
  std::vector<double> grid;
  for (int k = 0; k <= 100; ++k) grid.push_back(t_lo + (t_hi - t_lo) * k / 100.0);
  const auto curves = fitted_trajectories(report, design, grid);
  const std::string traj_path = (fs::path(opt.out_dir) / "trajectories.csv").string();
  save_trajectories(curves, traj_path);

  bool all_converged = true;
  for (const auto& t : traces) all_converged = all_converged && t.converged;

  json manifest;
  manifest["tool"] = {{"name", "lmmsel"}, {"version", kVersion}};
  manifest["command"] = "fit";
  manifest["input"] = {{"path", opt.data_path}, {"digest", file_digest(opt.data_path)}};
  manifest["schema"] = {{"subject", opt.col_subject},
                        {"group", opt.col_group},
                        {"time", opt.col_time},
                        {"response", opt.col_response},
                        {"control", data.groups.back()}};
  manifest["design"] = design_to_json(design);
  manifest["hyperparams"] = hyper_to_json(hp);
  manifest["gibbs"] = {{"seed", gcfg.seed},
                       {"chains", opt.chains},
                       {"max_iters", gcfg.max_iters},
                       {"min_iters", gcfg.min_iters},
                       {"check_interval", gcfg.check_interval},
                       {"burn_in", gcfg.effective_burn_in()},
                       {"monitor_beta", gcfg.monitor_beta},
                       {"record_b", gcfg.record_b}};
  manifest["fwsr"] = {{"epsilon", opt.epsilon},
                      {"delta", opt.delta},
                      {"ess_target", ess_target(gcfg.fwsr)}};
  manifest["threshold"] = opt.threshold;
  json jchains = json::array();
  for (int c = 0; c < opt.chains; ++c) {
    const auto& t = traces[static_cast<std::size_t>(c)];
    // paths relative to the manifest's own directory, so identical runs
    // into different directories produce identical manifests
    jchains.push_back({{"seed", t.seed},
                       {"iterations", t.iterations},
                       {"retained", t.n_retained()},
                       {"converged", t.converged},
                       {"termination", t.termination},
                       {"config_hash", trace_config_hash(t)},
                       {"trace", fs::path(trace_paths[static_cast<std::size_t>(c)]).filename().string()}});
  }
  manifest["chains_detail"] = jchains;
  manifest["outputs"] = {{"report", fs::path(report_path).filename().string()},
                         {"trajectories", fs::path(traj_path).filename().string()}};
  write_json(manifest, (fs::path(opt.out_dir) / "manifest.json").string());

  return all_converged ? kExitOk : kExitNotConverged;
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

struct ReportOptions {
  std::string trace_path;
  double threshold = 0.8772;
};

int run_report(const ReportOptions& opt) {
  std::string path = opt.trace_path;
  if (fs::is_directory(path)) path = (fs::path(path) / "trace.csv").string();
  const ChainTrace trace = load_trace(path);
  PosteriorReport report = summarize(trace);
  classify(report, opt.threshold);
  std::cout << format_report_table(report);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian variable selection on linear mixed-effects models"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("lmmsel ") + kVersion);

  SimulateOptions sim;
  auto* cmd_sim = app.add_subcommand("simulate", "generate a synthetic dataset");
  cmd_sim->add_option("--out", sim.out, "output CSV path")->required();
  cmd_sim->add_option("--seed", sim.seed, "generator seed");
  cmd_sim->add_flag("--paper-defaults", sim.paper_defaults,
                    "297 control + 5x36 treatment subjects, 15 bimonthly days");
  cmd_sim->add_option("--groups", sim.groups, "number of treatment groups");
  cmd_sim->add_option("--subjects", sim.subjects, "subjects per treatment group");
  cmd_sim->add_option("--control-subjects", sim.control_subjects, "control group size");
  cmd_sim->add_option("--offsets", sim.offsets, "slope offset per treatment group")
      ->delimiter(',');
  cmd_sim->add_option("--alpha", sim.alpha, "shared fixed effects")->delimiter(',');
  cmd_sim->add_option("--sigma2", sim.sigma2, "noise variance");
  cmd_sim->add_option("--lambda-inv", sim.lambda_inv, "random-effect variance");
  cmd_sim->add_option("--times", sim.times, "raw measurement times")->delimiter(',');
  cmd_sim->add_option("--w-degrees", sim.w_degrees, "shared-effect polynomial degrees")
      ->delimiter(',');
  cmd_sim->add_option("--x-degrees", sim.x_degrees, "deviation polynomial degrees")
      ->delimiter(',');
  cmd_sim->add_option("--z-degrees", sim.z_degrees, "random-effect polynomial degrees")
      ->delimiter(',');
  cmd_sim->add_option("--time-offset", sim.time_offset, "time rescale offset");
  cmd_sim->add_option("--time-scale", sim.time_scale, "time rescale divisor");
  cmd_sim->add_option("--control-label", sim.control_label, "control group label");
  cmd_sim->add_option("--retention", sim.retention, "per-time retention probabilities")
      ->delimiter(',');

  FitOptions fit;
  auto* cmd_fit = app.add_subcommand("fit", "run the Gibbs sampler on a dataset");
  cmd_fit->add_option("data", fit.data_path, "input CSV")->required();
  cmd_fit->add_option("--control", fit.control, "control group label");
  cmd_fit->add_option("--epsilon", fit.epsilon, "stopping-rule relative precision");
  cmd_fit->add_option("--delta", fit.delta, "stopping-rule significance level");
  cmd_fit->add_option("--seed", fit.seed, "chain seed");
  cmd_fit->add_option("--max-iters", fit.max_iters, "iteration cap");
  cmd_fit->add_option("--min-iters", fit.min_iters, "iterations before the first check");
  cmd_fit->add_option("--check-interval", fit.check_interval, "stopping-rule cadence");
  cmd_fit->add_option("--burn-in", fit.burn_in, "dropped initial iterations");
  cmd_fit->add_option("--threshold", fit.threshold, "significance threshold");
  cmd_fit->add_option("--chains", fit.chains, "independent chains");
  cmd_fit->add_option("--config", fit.config_path, "hyperparameter key=value file");
  cmd_fit->add_option("--out", fit.out_dir, "output directory");
  cmd_fit->add_option("--w-degrees", fit.w_degrees, "shared-effect polynomial degrees")
      ->delimiter(',');
  cmd_fit->add_option("--x-degrees", fit.x_degrees, "deviation polynomial degrees")
      ->delimiter(',');
  cmd_fit->add_option("--z-degrees", fit.z_degrees, "random-effect polynomial degrees")
      ->delimiter(',');
  cmd_fit->add_option("--time-offset", fit.time_offset, "time rescale offset");
  cmd_fit->add_option("--time-scale", fit.time_scale, "time rescale divisor");
  cmd_fit->add_option("--pi", fit.pi, "prior inclusion probabilities")->delimiter(',');
  cmd_fit->add_option("--d1", fit.d1, "lambda prior shape");
  cmd_fit->add_option("--d2", fit.d2, "lambda prior rate");
  cmd_fit->add_option("--d4", fit.d4, "alpha prior precision");
  cmd_fit->add_flag("--paper-defaults", fit.paper_defaults, "use the (365, 365) time rescale");
  cmd_fit->add_flag("--no-monitor-beta", fit.no_monitor_beta,
                    "do not apply the stopping rule to active-coefficient subsequences");
  cmd_fit->add_flag("--record-b", fit.record_b, "include random effects in the trace");
  cmd_fit->add_option("--col-subject", fit.col_subject, "subject column name");
  cmd_fit->add_option("--col-group", fit.col_group, "group column name");
  cmd_fit->add_option("--col-time", fit.col_time, "time column name");
  cmd_fit->add_option("--col-response", fit.col_response, "response column name");

  ReportOptions rep;
  auto* cmd_rep = app.add_subcommand("report", "re-summarize an existing trace");
  cmd_rep->add_option("trace", rep.trace_path, "trace.csv or its directory")->required();
  cmd_rep->add_option("--threshold", rep.threshold, "significance threshold");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (cmd_sim->parsed()) return run_simulate(sim);
    if (cmd_fit->parsed()) return run_fit(fit);
    if (cmd_rep->parsed()) return run_report(rep);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IdentifiabilityError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIdentifiability;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitUsage;
}
