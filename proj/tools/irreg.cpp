// irreg: command-line runner for the regression / point-process toolkit.
//
// Every subcommand writes its artifacts into the output directory together
// with manifest.json (effective configuration, seed, content hashes).
// Exit codes: 0 success, 2 validation or usage error, 3 numerical failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "irreg/equivalence.hpp"
#include "irreg/estimators.hpp"
#include "irreg/io.hpp"
#include "irreg/metrics.hpp"
#include "irreg/model.hpp"
#include "irreg/samplers.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace irreg;

namespace {

struct SpecArgs {
  std::size_t n = 100;
  double c_theta = 1.0;
  double alpha = 1.0;
  std::string design = "uniform";
  double design_slope = 0.0;
  std::string error = "uniform";
  double error_beta = 0.0;
};

struct ThetaArgs {
  std::string family = "wave";
  double amp = 0.3;
  double omega = 10.0;
  std::vector<double> coeffs{0.0};
  std::vector<double> values{0.0};
};

struct Common {
  std::uint64_t seed = 1;
  unsigned workers = 1;
  std::string out;
  std::string format = "csv";
};

void add_spec_options(CLI::App* sub, SpecArgs& s, bool with_n = true) {
  if (with_n) sub->add_option("--n", s.n, "sample size")->capture_default_str();
  sub->add_option("--C", s.c_theta, "class constant C_Theta")->capture_default_str();
  sub->add_option("--alpha", s.alpha, "Hoelder exponent of theta'' in (0, 1]")->capture_default_str();
  sub->add_option("--design", s.design, "design density")
      ->check(CLI::IsMember({"uniform", "linear"}))
      ->capture_default_str();
  sub->add_option("--design-slope", s.design_slope, "slope of the linear design density")->capture_default_str();
  sub->add_option("--error", s.error, "error density")
      ->check(CLI::IsMember({"uniform", "linear", "u-shaped"}))
      ->capture_default_str();
  sub->add_option("--error-beta", s.error_beta, "tilt of the linear error density")->capture_default_str();
}

void add_theta_options(CLI::App* sub, ThetaArgs& t, const std::string& prefix = "theta") {
  sub->add_option("--" + prefix, t.family, "parameter family")
      ->check(CLI::IsMember({"wave", "cosine", "polynomial", "step", "zero"}))
      ->capture_default_str();
  sub->add_option("--" + prefix + "-amp", t.amp, "amplitude c of c x cos(omega x)")->capture_default_str();
  sub->add_option("--" + prefix + "-omega", t.omega, "frequency omega of c x cos(omega x)")->capture_default_str();
  sub->add_option("--" + prefix + "-coeffs", t.coeffs, "polynomial coefficients, constant first")
      ->delimiter(',')
      ->capture_default_str();
  sub->add_option("--" + prefix + "-values", t.values, "block values of a step function")
      ->delimiter(',')
      ->capture_default_str();
}

ExperimentSpec make_spec(const SpecArgs& a) {
  ExperimentSpec s;
  s.n = a.n;
  s.c_theta = a.c_theta;
  s.alpha = a.alpha;
  s.design = a.design == "linear" ? DesignSpec::linear(a.design_slope) : DesignSpec::uniform();
  if (a.error == "linear") {
    s.error = ErrorDensity::linear(a.error_beta);
  } else if (a.error == "u-shaped") {
    s.error = ErrorDensity::u_shaped();
  } else {
    s.error = ErrorDensity::uniform();
  }
  s.validate();
  return s;
}

ParameterFunction make_theta(const ThetaArgs& t, const ExperimentSpec& s) {
  if (t.family == "wave") return ParameterFunction::scaled_cosine(0.3, 10.0, s.c_theta, s.alpha);
  if (t.family == "cosine") return ParameterFunction::scaled_cosine(t.amp, t.omega, s.c_theta, s.alpha);
  if (t.family == "polynomial") return ParameterFunction::polynomial(t.coeffs, s.c_theta, s.alpha);
  if (t.family == "step") return ParameterFunction::step(t.values, s.c_theta, s.alpha);
  return ParameterFunction::zero(s.c_theta, s.alpha);
}

json spec_json(const ExperimentSpec& s) {
  return {{"n", s.n},
          {"c_theta", s.c_theta},
          {"alpha", s.alpha},
          {"design", s.design.name},
          {"design_params", s.design.params},
          {"error", s.error.name},
          {"error_params", s.error.params},
          {"jump_left", s.error.jump_left},
          {"jump_right", s.error.jump_right},
          {"spec_hash", io::format_hex(s.hash())}};
}

json report_json(const DistanceReport& r) {
  return {{"kind", to_string(r.kind)},
          {"value", r.value},
          {"method", to_string(r.method)},
          {"error_estimate", r.error_estimate},
          {"inputs_hash", io::format_hex(r.inputs_hash)}};
}

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json rate_json(const RateStudyResult& r) {
  return {{"ns", r.ns},
          {"risks", r.risks},
          {"risk_se", r.risk_se},
          {"slope", r.slope},
          {"slope_se", number_or_null(r.slope_se)},
          {"theory_slope", r.theory_slope},
          {"degenerate", r.degenerate},
          {"warnings", r.warnings}};
}

/// Collects artifacts, writes them and the manifest.
class Output {
 public:
  Output(fs::path dir, std::string format) : dir_(std::move(dir)), format_(std::move(format)) {
    fs::create_directories(dir_);
  }

  void text(const std::string& name, const std::string& content) {
    std::ofstream os(dir_ / name, std::ios::binary);
    if (!os) throw ValidationError("cannot write " + (dir_ / name).string());
    os << content;
    hashes_[name] = io::format_hex(fnv1a64(content));
  }

  void write_json(const std::string& name, const json& j) { text(name, j.dump(2) + "\n"); }

  /// A table in the configured format: CSV, or JSON with meta/columns/rows.
  void table(const std::string& stem, const io::Table& t) {
    if (format_ == "json") {
      json j{{"meta", t.meta}, {"columns", t.columns}, {"rows", t.rows}};
      write_json(stem + ".json", j);
    } else {
      text(stem + ".csv", io::to_string(t));
    }
  }

  void manifest(const std::string& subcommand, const json& config, std::uint64_t seed) {
    std::string joined;
    for (const auto& [k, v] : hashes_) joined += k + ":" + v + "\n";
    json m{{"tool", "irreg"},
           {"subcommand", subcommand},
           {"seed", seed},
           {"config", config},
           {"outputs", hashes_},
           {"content_hash", io::format_hex(fnv1a64(joined))}};
    std::ofstream os(dir_ / "manifest.json", std::ios::binary);
    os << m.dump(2) << "\n";
  }

 private:
  fs::path dir_;
  std::string format_;
  std::map<std::string, std::string> hashes_;
};

/// Effective option values of a subcommand (parsed or default), for the
/// manifest; --out and --config are excluded so a replay can relocate.
json config_echo(const CLI::App* app, const CLI::App* sub) {
  json cfg = json::object();
  for (const CLI::App* a : {app, sub}) {
    for (const CLI::Option* opt : a->get_options()) {
      const std::string name = opt->get_single_name();
      if (name.empty() || name == "help" || name == "out" || name == "config") continue;
      std::vector<std::string> vals = opt->count() > 0 ? opt->results() : std::vector<std::string>{};
      if (vals.empty()) {
        const std::string d = opt->get_default_str();
        if (d.empty()) continue;
        if (d.front() == '[' && d.back() == ']') {
          std::string inner = d.substr(1, d.size() - 2);
          for (auto part : io::split(inner, ',')) vals.emplace_back(part);
        } else {
          vals.push_back(d);
        }
      }
      cfg[name] = vals.size() == 1 ? json(vals.front()) : json(vals);
    }
  }
  return cfg;
}

std::vector<double> simple_grid(std::size_t count) {
  std::vector<double> g(count);
  for (std::size_t i = 0; i < count; ++i) g[i] = (static_cast<double>(i) + 0.5) / static_cast<double>(count);
  return g;
}

io::Table read_table_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ValidationError("cannot read " + path);
  return io::read_table(is);
}

std::string default_out_dir() {
  if (const char* env = std::getenv("IRREG_OUT"); env && *env) return env;
  return "irreg-out";
}

int run(int argc, const char* const* argv);

/// Re-runs the subcommand recorded in a manifest.
int replay(const std::string& manifest_path, const std::string& out) {
  std::ifstream is(manifest_path);
  if (!is) throw ValidationError("cannot read " + manifest_path);
  const json m = json::parse(is);
  std::vector<std::string> args{"irreg", m.at("subcommand").get<std::string>()};
  for (const auto& [k, v] : m.at("config").items()) {
    args.push_back("--" + k);
    if (v.is_string()) {
      args.push_back(v.get<std::string>());
      continue;
    }
    std::string joined;
    for (const auto& s : v) joined += (joined.empty() ? "" : ",") + s.get<std::string>();
    args.push_back(joined);
  }
  args.push_back("--out");
  args.push_back(out);
  std::vector<const char*> cargv;
  for (const auto& a : args) cargv.push_back(a.c_str());
  return run(static_cast<int>(cargv.size()), cargv.data());
}

int run(int argc, const char* const* argv) {
  CLI::App app{"Simulation and verification toolkit for non-regular regression and point-process experiments"};
  app.require_subcommand(1);
  app.set_config("--config", "", "INI configuration file; command-line flags take precedence");
  Common common;
  common.out = default_out_dir();

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", common.seed, "master seed")->capture_default_str();
    sub->add_option("--workers", common.workers, "worker threads for replicate loops")->capture_default_str();
    sub->add_option("--out", common.out, "output directory (default $IRREG_OUT or ./irreg-out)");
    sub->add_option("--format", common.format, "table format")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();
  };

  SpecArgs spec_args;
  ThetaArgs theta_args, theta2_args;
  theta2_args.family = "zero";

  auto* sample_reg = app.add_subcommand("sample-regression", "draw a regression sample (x_j, Y_j)");
  add_common(sample_reg);
  add_spec_options(sample_reg, spec_args);
  add_theta_options(sample_reg, theta_args);

  auto* sample_ppp_cmd = app.add_subcommand("sample-ppp", "draw the point-process pair (X1, X2)");
  add_common(sample_ppp_cmd);
  add_spec_options(sample_ppp_cmd, spec_args);
  add_theta_options(sample_ppp_cmd, theta_args);

  std::string input;
  std::optional<std::size_t> m_override;
  double h_const = 1.0;
  auto* transform = app.add_subcommand("transform", "map a regression sample to a point-process pair");
  add_common(transform);
  add_spec_options(transform, spec_args, false);
  transform->add_option("--input", input, "regression sample CSV")->required();
  transform->add_option("--m", m_override, "number of blocks (default from n and alpha)");
  transform->add_option("--h-const", h_const, "pilot bandwidth constant")->capture_default_str();

  std::string x1_path, x2_path;
  std::size_t grid_size = 50;
  auto* estimate = app.add_subcommand("estimate", "pilot estimate of theta and theta' on a grid");
  add_common(estimate);
  add_spec_options(estimate, spec_args, false);
  estimate->add_option("--input", input, "regression sample CSV");
  estimate->add_option("--x1", x1_path, "X1 realization CSV (point-process input)");
  estimate->add_option("--x2", x2_path, "X2 realization CSV (point-process input)");
  estimate->add_option("--grid-size", grid_size, "number of grid points (block centres)")->capture_default_str();
  estimate->add_option("--h-const", h_const, "pilot bandwidth constant")->capture_default_str();

  std::size_t blocks = 0;
  auto* hellinger = app.add_subcommand("hellinger", "Hellinger distance between two point-process experiments");
  add_common(hellinger);
  add_spec_options(hellinger, spec_args);
  add_theta_options(hellinger, theta_args);
  add_theta_options(hellinger, theta2_args, "theta2");
  hellinger->add_option("--m", blocks, "also compare with the block-constant profile on m blocks")
      ->capture_default_str();

  std::size_t reps = 100;
  std::vector<std::string> inputs;
  auto* extreme = app.add_subcommand("extreme-check", "KS check of block extremes against their exponential law");
  add_common(extreme);
  add_spec_options(extreme, spec_args);
  add_theta_options(extreme, theta_args);
  extreme->add_option("--m", blocks, "number of blocks")->capture_default_str();
  extreme->add_option("--reps", reps, "simulated realizations when no --input is given")->capture_default_str();
  extreme->add_option("--input", inputs, "realization CSVs")->delimiter(',');

  std::vector<std::size_t> ls{50, 200, 800};
  std::vector<std::size_t> counts{10, 100, 1000, 10000};
  double delta0 = 0.0;
  auto* block_h = app.add_subcommand("block-hellinger", "exact block extremes vs exponential surrogate");
  add_common(block_h);
  add_spec_options(block_h, spec_args, false);
  block_h->add_option("--l", ls, "block sizes")->delimiter(',')->capture_default_str();
  block_h->add_option("--univariate", counts, "sample sizes I for the minimum-of-uniforms check")
      ->delimiter(',')
      ->capture_default_str();
  block_h->add_option("--delta0", delta0, "location of the block")->capture_default_str();

  std::vector<std::size_t> ns{500, 2000, 8000};
  double x0 = 0.5;
  std::string experiment = "regression";
  auto* rate = app.add_subcommand("rate-study", "Monte Carlo pointwise risk of the pilot estimator");
  add_common(rate);
  add_spec_options(rate, spec_args, false);
  add_theta_options(rate, theta_args);
  rate->add_option("--ns", ns, "sample sizes")->delimiter(',')->capture_default_str();
  rate->add_option("--reps", reps, "replicates per sample size")->capture_default_str();
  rate->add_option("--x0", x0, "evaluation point")->capture_default_str();
  rate->add_option("--experiment", experiment, "experiment")
      ->check(CLI::IsMember({"regression", "ppp"}))
      ->capture_default_str();
  rate->add_option("--h-const", h_const, "pilot bandwidth constant")->capture_default_str();

  double s_smooth = 2.0, lip = 1.0, jump = 0.0, n_real = 1000.0;
  int k_order = 0;
  auto* lower = app.add_subcommand("lower-bound", "two-point lower-bound construction");
  add_common(lower);
  add_spec_options(lower, spec_args, false);
  lower->add_option("--s", s_smooth, "smoothness s")->capture_default_str();
  lower->add_option("--L", lip, "Hoelder constant L")->capture_default_str();
  lower->add_option("--k", k_order, "derivative order")->capture_default_str();
  lower->add_option("--n", n_real, "sample size")->capture_default_str();
  lower->add_option("--J", jump, "total jump f(-1) + f(1) (default from --error)")->capture_default_str();
  lower->add_option("--x0", x0, "evaluation point")->capture_default_str();

  double c_counter = 1.0;
  std::size_t n_counter = 1000;
  auto* counter = app.add_subcommand("counterexample", "power of the sign test under the oscillating alternative");
  add_common(counter);
  counter->add_option("--C", c_counter, "amplitude constant")->capture_default_str();
  counter->add_option("--n", n_counter, "sample size")->capture_default_str();
  counter->add_option("--reps", reps, "replicates")->capture_default_str();

  double p_thin = 0.5;
  auto* thin = app.add_subcommand("thin", "split a realization by independent thinning");
  add_common(thin);
  thin->add_option("--input", input, "realization CSV")->required();
  thin->add_option("--p", p_thin, "probability of the first half")->capture_default_str();

  std::string manifest_path;
  auto* replay_cmd = app.add_subcommand("replay", "re-run the command recorded in a manifest");
  replay_cmd->add_option("--manifest", manifest_path, "manifest.json of a previous run")->required();
  replay_cmd->add_option("--out", common.out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  if (sub == replay_cmd) return replay(manifest_path, common.out);

  Output out(common.out, common.format);
  json summary;
  std::vector<std::pair<std::string, std::string>> lines;
  auto show = [&](const std::string& k, double v) { lines.emplace_back(k, io::format_double(v)); };

  if (sub == sample_reg) {
    const auto spec = make_spec(spec_args);
    const auto theta = make_theta(theta_args, spec);
    const auto s = sample_regression(theta, spec, common.seed);
    out.table("sample", io::to_table(s));
    show("n", static_cast<double>(s.n));
  } else if (sub == sample_ppp_cmd) {
    const auto spec = make_spec(spec_args);
    const auto theta = make_theta(theta_args, spec);
    const auto x1 = sample_ppp_sequential(theta, spec, Side::lower, derive_seed(common.seed, "X1", 0));
    const auto x2 = sample_ppp_sequential(theta, spec, Side::upper, derive_seed(common.seed, "X2", 0));
    io::Metadata meta{{"spec_hash", io::format_hex(spec.hash())}};
    out.table("x1", io::to_table(x1, meta));
    out.table("x2", io::to_table(x2, meta));
    show("points_x1", static_cast<double>(x1.size()));
    show("points_x2", static_cast<double>(x2.size()));
  } else if (sub == transform) {
    const auto sample = io::regression_from_table(read_table_file(input));
    spec_args.n = sample.n;
    const auto spec = make_spec(spec_args);
    TransformOptions opt;
    opt.m = m_override;
    opt.bandwidth_const = h_const;
    opt.seed = common.seed;
    opt.workers = common.workers;
    const auto res = forward_transform(sample, spec, opt);
    io::Metadata meta{{"spec_hash", io::format_hex(spec.hash())}};
    out.table("x1", io::to_table(res.x1, meta));
    out.table("x2", io::to_table(res.x2, meta));
    auto pilot = [](const PilotSummary& p) {
      return json{{"bandwidth", p.bandwidth},
                  {"truncated", p.truncated},
                  {"oracle", p.oracle},
                  {"mean_value", p.mean_value},
                  {"mean_abs_deriv", p.mean_abs_deriv}};
    };
    summary = {{"spec", spec_json(spec)},
               {"m", res.m},
               {"points_x1", res.x1.size()},
               {"points_x2", res.x2.size()},
               {"seed_pass1", res.seed_pass1},
               {"seed_pass2", res.seed_pass2},
               {"pilot_pass1", pilot(res.pilot1)},
               {"pilot_pass2", pilot(res.pilot2)}};
    out.write_json("transform.json", summary);
    show("m", static_cast<double>(res.m));
    show("points_x1", static_cast<double>(res.x1.size()));
    show("points_x2", static_cast<double>(res.x2.size()));
  } else if (sub == estimate) {
    PilotOptions popt;
    popt.bandwidth_const = h_const;
    popt.workers = common.workers;
    PilotEstimate p;
    if (!input.empty()) {
      const auto sample = io::regression_from_table(read_table_file(input));
      spec_args.n = sample.n;
      const auto spec = make_spec(spec_args);
      p = pilot_estimate(sample, spec, simple_grid(grid_size), popt);
    } else if (!x2_path.empty()) {
      const auto x2 = io::realization_from_table(read_table_file(x2_path));
      std::optional<PointProcessRealization> x1;
      if (!x1_path.empty()) x1 = io::realization_from_table(read_table_file(x1_path));
      spec_args.n = static_cast<std::size_t>(x2.n);
      const auto spec = make_spec(spec_args);
      p = pilot_estimate(x1 ? &*x1 : nullptr, &x2, spec, simple_grid(grid_size), popt);
    } else {
      throw ValidationError("estimate needs --input or --x2");
    }
    out.table("pilot", io::to_table(p));
    show("bandwidth", p.bandwidth);
    lines.emplace_back("truncated", p.truncated ? "true" : "false");
  } else if (sub == hellinger) {
    const auto spec = make_spec(spec_args);
    const auto t1 = make_theta(theta_args, spec);
    const auto t2 = make_theta(theta2_args, spec);
    const double n = static_cast<double>(spec.n);
    const auto [a1, a2] = boundary_intensities(t1, spec, n);
    const auto [b1, b2] = boundary_intensities(t2, spec, n);
    const auto quad = hellinger_ppp_pair(a1, a2, b1, b2);
    const auto closed = hellinger_boundary_closed_form(t1, t2, n, spec.error.total_jump(), spec.design);
    summary = {{"spec", spec_json(spec)}, {"quadrature", report_json(quad)}, {"closed_form", report_json(closed)}};
    show("hellinger_sq_quadrature", quad.value);
    show("hellinger_sq_closed_form", closed.value);
    if (blocks > 0) {
      const auto bp = hellinger_block_profile(t1, spec, n, blocks);
      summary["block_profile"] = report_json(bp);
      show("hellinger_sq_block_profile", bp.value);
    }
    out.write_json("hellinger.json", summary);
  } else if (sub == extreme) {
    const auto spec = make_spec(spec_args);
    const auto theta = make_theta(theta_args, spec);
    if (blocks == 0) blocks = theta_args.family == "step" ? theta_args.values.size() : 10;
    std::vector<PointProcessRealization> xs;
    if (!inputs.empty()) {
      for (const auto& f : inputs) xs.push_back(io::realization_from_table(read_table_file(f)));
    } else {
      const double n = static_cast<double>(spec.n);
      const auto [l1, l2] = boundary_intensities(theta, spec, n);
      xs.resize(2 * reps);
      parallel_for(
          reps,
          [&](std::size_t r) {
            xs[2 * r] = sample_ppp(l1, derive_seed(common.seed, "X1", r), ProcessTag::X1_lower_region, n);
            xs[2 * r + 1] = sample_ppp(l2, derive_seed(common.seed, "X2", r), ProcessTag::X2_upper_region, n);
          },
          common.workers);
    }
    const auto rep = extreme_law_check(xs, theta, blocks, spec);
    io::Table pit;
    pit.columns = {"pit"};
    for (double u : rep.pit) pit.rows.push_back({u});
    out.table("pit", pit);
    summary = {{"spec", spec_json(spec)},
               {"m", blocks},
               {"ks", report_json(rep.ks)},
               {"ks_critical_1pct", ks_critical_value_1pct(rep.samples)},
               {"samples", rep.samples},
               {"atoms", rep.atoms},
               {"atom_fraction", rep.atom_fraction},
               {"expected_atom_mass", rep.expected_atom_mass}};
    out.write_json("extreme_check.json", summary);
    show("ks", rep.ks.value);
    show("samples", static_cast<double>(rep.samples));
  } else if (sub == block_h) {
    const auto spec = make_spec(spec_args);
    io::Table t;
    t.columns = {"l", "hellinger_sq", "error_estimate"};
    std::vector<double> lv, hv;
    json rows = json::array();
    for (std::size_t l : ls) {
      const auto r = block_extreme_hellinger(l, spec.error, delta0);
      t.rows.push_back({static_cast<double>(l), r.value, r.error_estimate});
      lv.push_back(static_cast<double>(l));
      hv.push_back(r.value);
      rows.push_back({{"l", l}, {"report", report_json(r)}});
    }
    out.table("block_hellinger", t);
    io::Table u;
    u.columns = {"count", "hellinger_sq"};
    std::vector<double> iv, uv;
    for (std::size_t c : counts) {
      const auto r = univariate_extreme_hellinger(c);
      u.rows.push_back({static_cast<double>(c), r.value});
      iv.push_back(static_cast<double>(c));
      uv.push_back(r.value);
    }
    out.table("univariate_hellinger", u);
    summary = {{"error", spec.error.name}, {"delta0", delta0}, {"blocks", rows}};
    if (lv.size() >= 3) {
      const auto f = fit_rate(lv, hv, std::vector<double>(lv.size(), 0.0), -2.0);
      summary["block_slope"] = f.slope;
      show("block_slope", f.slope);
    }
    if (iv.size() >= 3) {
      const auto f = fit_rate(iv, uv, std::vector<double>(iv.size(), 0.0), -2.0);
      summary["univariate_slope"] = f.slope;
      show("univariate_slope", f.slope);
    }
    out.write_json("block_hellinger.json", summary);
  } else if (sub == rate) {
    const auto spec = make_spec(spec_args);
    const auto theta = make_theta(theta_args, spec);
    RateStudyConfig cfg;
    cfg.ns = ns;
    cfg.reps = reps;
    cfg.seed = common.seed;
    cfg.x0 = x0;
    cfg.experiment = experiment == "ppp" ? Experiment::point_process : Experiment::regression;
    cfg.bandwidth_const = h_const;
    cfg.workers = common.workers;
    const auto r = rate_study(theta, spec, cfg);
    io::Table t;
    t.columns = {"target", "n", "risk", "se"};
    for (std::size_t i = 0; i < r.value.ns.size(); ++i) t.rows.push_back({0, r.value.ns[i], r.value.risks[i], r.value.risk_se[i]});
    for (std::size_t i = 0; i < r.derivative.ns.size(); ++i) {
      t.rows.push_back({1, r.derivative.ns[i], r.derivative.risks[i], r.derivative.risk_se[i]});
    }
    t.meta["target"] = "0=value,1=derivative";
    out.table("rate", t);
    summary = {{"spec", spec_json(spec)}, {"value", rate_json(r.value)}, {"derivative", rate_json(r.derivative)}};
    out.write_json("rate_study.json", summary);
    show("value_slope", r.value.slope);
    show("value_theory", r.value.theory_slope);
    show("derivative_slope", r.derivative.slope);
    show("derivative_theory", r.derivative.theory_slope);
  } else if (sub == lower) {
    const auto spec = make_spec(spec_args);
    const double J = jump > 0.0 ? jump : spec.error.total_jump();
    const auto K = lower_bound_kernel(k_order, s_smooth);
    const auto p = lower_bound_pair(s_smooth, lip, k_order, n_real, J, spec.design, x0, K);
    const double n0 = lower_bound_n0(s_smooth, lip, k_order, J, spec.design, x0, K);
    summary = {{"s", s_smooth},
               {"L", lip},
               {"k", k_order},
               {"n", n_real},
               {"J", J},
               {"x0", x0},
               {"kernel", K.name},
               {"kernel_derivative_at_0", K.derivative(k_order, 0.0)},
               {"h", p.h},
               {"separation", p.separation},
               {"separation_formula", p.separation_formula},
               {"hellinger", p.hellinger},
               {"n0", n0},
               {"loss_exponent", lower_bound_exponent(s_smooth, k_order)}};
    out.write_json("lower_bound.json", summary);
    show("h", p.h);
    show("separation", p.separation);
    show("hellinger", p.hellinger);
    show("n0", n0);
  } else if (sub == counter) {
    const auto r = counterexample_power(c_counter, n_counter, reps, common.seed, common.workers);
    summary = {{"C", c_counter},
               {"n", n_counter},
               {"reps", r.reps},
               {"empirical_power", r.empirical_power},
               {"theory_power", r.theory_power},
               {"limit_power", r.limit_power},
               {"null_power", r.null_power},
               {"null_region_mass", r.null_region_mass}};
    out.write_json("counterexample.json", summary);
    show("empirical_power", r.empirical_power);
    show("theory_power", r.theory_power);
    show("null_power", r.null_power);
  } else if (sub == thin) {
    const auto x = io::realization_from_table(read_table_file(input));
    const auto [a, b] = thin_ppp(x, p_thin, common.seed);
    if (a.size() + b.size() != x.size()) throw NumericalError("thinning lost points");
    out.table("thin_a", io::to_table(a));
    out.table("thin_b", io::to_table(b));
    summary = {{"p", p_thin}, {"points", x.size()}, {"points_a", a.size()}, {"points_b", b.size()}};
    out.write_json("thin.json", summary);
    show("points_a", static_cast<double>(a.size()));
    show("points_b", static_cast<double>(b.size()));
  }

  out.manifest(name, config_echo(&app, sub), common.seed);
  std::cout << io::aligned(lines);
  return 0;
}

int error_exit(const std::string& kind, const std::string& message, int code) {
  json j{{"error", {{"kind", kind}, {"message", message}}}};
  std::cerr << j.dump() << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ValidationError& e) {
    return error_exit("validation", e.what(), 2);
  } catch (const NumericalError& e) {
    return error_exit("numerical", e.what(), 3);
  } catch (const json::exception& e) {
    return error_exit("validation", e.what(), 2);
  } catch (const std::exception& e) {
    return error_exit("internal", e.what(), 1);
  }
}
