#include "shearq/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "shearq/io.hpp"
#include "shearq/parallel.hpp"
#include "shearq/pde.hpp"
#include "shearq/stochastic.hpp"

namespace shearq {

using nlohmann::json;

ConfigError::ConfigError(std::string field, const std::string& message)
    : std::invalid_argument(field + ": " + message), field_(std::move(field)) {}

namespace {

const std::vector<std::pair<Experiment, std::string>> kExperiments = {
    {Experiment::Simulate, "simulate"},         {Experiment::CriticalAmplitude, "critical-amplitude"},
    {Experiment::MaxL, "max-L"},                {Experiment::CriticalLength, "critical-length"},
    {Experiment::McVerify, "mc-verify"},        {Experiment::AlphaSweep, "alpha-sweep"},
    {Experiment::Dichotomy, "dichotomy"}};

std::string join_path(const std::string& parent, const std::string& key) {
  return parent.empty() ? key : parent + "." + key;
}

// Reads one JSON object, remembering which keys were consumed so that
// leftovers can be reported by name.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  template <typename T>
  void opt(const std::string& key, T& out) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    convert(j_.at(key), join_path(path_, key), out);
  }

  template <typename T>
  void req(const std::string& key, T& out) {
    if (!j_.contains(key)) throw ConfigError(join_path(path_, key), "missing required field");
    opt(key, out);
  }

  Reader sub(const std::string& key) {
    seen_.insert(key);
    return Reader(j_.at(key), join_path(path_, key));
  }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  std::string path(const std::string& key) const { return join_path(path_, key); }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError(join_path(path_, key), "unknown field");
    }
  }

 private:
  static void convert(const json& v, const std::string& p, double& out) {
    if (!v.is_number()) throw ConfigError(p, "expected a number");
    out = v.get<double>();
  }
  static void convert(const json& v, const std::string& p, int& out) {
    if (!v.is_number_integer()) throw ConfigError(p, "expected an integer");
    out = v.get<int>();
  }
  static void convert(const json& v, const std::string& p, long& out) {
    if (!v.is_number_integer()) throw ConfigError(p, "expected an integer");
    out = v.get<long>();
  }
  static void convert(const json& v, const std::string& p, std::uint64_t& out) {
    if (!v.is_number_unsigned()) throw ConfigError(p, "expected a non-negative integer");
    out = v.get<std::uint64_t>();
  }
  static void convert(const json& v, const std::string& p, bool& out) {
    if (!v.is_boolean()) throw ConfigError(p, "expected true or false");
    out = v.get<bool>();
  }
  static void convert(const json& v, const std::string& p, std::string& out) {
    if (!v.is_string()) throw ConfigError(p, "expected a string");
    out = v.get<std::string>();
  }
  static void convert(const json& v, const std::string& p, std::vector<double>& out) {
    if (!v.is_array()) throw ConfigError(p, "expected an array of numbers");
    out.clear();
    for (std::size_t k = 0; k < v.size(); ++k) {
      if (!v[k].is_number()) throw ConfigError(p + "[" + std::to_string(k) + "]", "expected a number");
      out.push_back(v[k].get<double>());
    }
  }
  static void convert(const json& v, const std::string& p, std::map<std::string, double>& out) {
    if (!v.is_object()) throw ConfigError(p, "expected an object of numbers");
    out.clear();
    for (const auto& [key, value] : v.items()) {
      if (!value.is_number()) throw ConfigError(join_path(p, key), "expected a number");
      out[key] = value.get<double>();
    }
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& field, const std::string& message) {
  if (!ok) throw ConfigError(field, message);
}

bool positive(double v) { return v > 0.0 && std::isfinite(v); }

}  // namespace

std::string experiment_name(Experiment e) {
  for (const auto& [k, name] : kExperiments) {
    if (k == e) return name;
  }
  return "unknown";
}

Experiment parse_experiment(const std::string& name) {
  for (const auto& [k, n] : kExperiments) {
    if (n == name) return k;
  }
  throw ConfigError("experiment", "unknown experiment '" + name + "'");
}

std::string sweep_mode_name(SweepMode m) {
  return m == SweepMode::A0AtFixedL ? "A0-at-fixed-L" : "LA-at-fixed-A";
}

SweepMode parse_sweep_mode(const std::string& name) {
  if (name == "A0-at-fixed-L") return SweepMode::A0AtFixedL;
  if (name == "LA-at-fixed-A") return SweepMode::LAAtFixedA;
  throw ConfigError("sweep.mode", "expected A0-at-fixed-L or LA-at-fixed-A");
}

void RunConfig::validate() const {
  require(positive(params.kappa), "params.kappa", "must be > 0");
  require(positive(params.bigM), "params.M", "must be > 0");
  require(params.theta0 > 0.0 && params.theta0 < 1.0, "params.theta0", "must lie in (0,1)");
  require(positive(params.h), "params.h", "must be > 0");
  require(positive(alpha), "profile.alpha", "must be > 0");
  require(positive(horizon), "numerics.horizon", "must be > 0");
  require(positive(rel_tol), "numerics.rel_tol", "must be > 0");
  require(positive(cap), "numerics.cap", "must be > 0");
  require(eta > 0.0 && eta <= 1.0, "numerics.eta", "must lie in (0,1]");
  require(threads >= 1, "threads", "must be >= 1");
  require(!output.empty(), "output", "must not be empty");
  require(positive(grid.x_period_factor) && grid.x_period_factor >= 2.0, "numerics.grid.x_period_factor",
          "must be >= 2");
  require(grid.X_override >= 0.0, "numerics.grid.X_override", "must be >= 0");
  require(positive(grid.X_max), "numerics.grid.X_max", "must be > 0");
  require(positive(grid.cells_per_L), "numerics.grid.cells_per_L", "must be > 0");
  require(positive(grid.dx_max), "numerics.grid.dx_max", "must be > 0");
  require(grid.ny_per_period >= 1, "numerics.grid.ny_per_period", "must be >= 1");
  require(positive(grid.dy_max), "numerics.grid.dy_max", "must be > 0");
  require(positive(grid.dt_factor), "numerics.grid.dt_factor", "must be > 0");
  require(grid.dt_max >= 0.0, "numerics.grid.dt_max", "must be >= 0");
  try {
    build_config_reaction(*this);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("reaction", e.what());
  }
  try {
    build_config_profile(*this);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("profile", e.what());
  }

  switch (experiment) {
    case Experiment::Simulate:
      require(simulate.equation == "T" || simulate.equation == "Phi" || simulate.equation == "Psi",
              "simulate.equation", "expected T, Phi or Psi");
      require(positive(simulate.L), "simulate.L", "must be > 0");
      require(simulate.eta > 0.0 && simulate.eta <= 1.0, "simulate.eta", "must lie in (0,1]");
      require(positive(simulate.t_end), "simulate.t_end", "must be > 0");
      require(simulate.nx >= 0 && simulate.ny >= 0, "simulate.nx", "grid counts must be >= 0");
      require(simulate.X >= 0.0, "simulate.X", "must be >= 0");
      for (double t : simulate.record) {
        require(t >= 0.0 && t <= simulate.t_end, "simulate.record", "times must lie in [0, t_end]");
      }
      break;
    case Experiment::CriticalAmplitude:
      require(!amplitude.Ls.empty(), "critical_amplitude.Ls", "must not be empty");
      for (double L : amplitude.Ls) require(positive(L), "critical_amplitude.Ls", "entries must be > 0");
      require(amplitude.A_guess >= 0.0, "critical_amplitude.A_guess", "must be >= 0");
      require(horizon >= 20.0 / params.bigM, "numerics.horizon", "amplitude searches need horizon >= 20/M");
      break;
    case Experiment::MaxL:
      require(!max_l.As.empty(), "max_L.As", "must not be empty");
      for (double A : max_l.As) require(A >= 0.0, "max_L.As", "entries must be >= 0");
      require(positive(max_l.L_guess), "max_L.L_guess", "must be > 0");
      require(max_l.L_cap > max_l.L_guess, "max_L.L_cap", "must exceed L_guess");
      break;
    case Experiment::CriticalLength:
      require(critical_length.L_probe >= 0.0, "critical_length.L_probe", "must be >= 0");
      require(critical_length.t_max >= 50.0 / params.bigM, "critical_length.t_max", "must be >= 50/M");
      require(positive(critical_length.rel_tol), "critical_length.rel_tol", "must be > 0");
      break;
    case Experiment::McVerify:
      require(positive(mc.t), "mc.t", "must be > 0");
      require(positive(mc.L), "mc.L", "must be > 0");
      require(mc.n_paths >= 100, "mc.n_paths", "must be >= 100");
      require(positive(mc.dt), "mc.dt", "must be > 0");
      require(mc.fd_nx >= 16 && mc.fd_ny >= 8, "mc.fd_nx", "FD grid needs nx >= 16 and ny >= 8");
      require(positive(mc.fd_X), "mc.fd_X", "must be > 0");
      require(mc.clt_alpha == 0.0 || mc.clt_alpha >= 8.0, "mc.clt_alpha", "must be 0 or >= 8");
      require(positive(mc.clt_dt), "mc.clt_dt", "must be > 0");
      break;
    case Experiment::AlphaSweep:
      require(!sweep.alphas.empty(), "sweep.alphas", "must not be empty");
      for (double a : sweep.alphas) require(positive(a), "sweep.alphas", "entries must be > 0");
      require(positive(sweep.L), "sweep.L", "must be > 0");
      require(sweep.A >= 0.0, "sweep.A", "must be >= 0");
      require(positive(sweep.L_guess), "sweep.L_guess", "must be > 0");
      for (const auto& r : sweep.regimes) {
        require(positive(r.lo) && r.hi >= r.lo, "sweep.regimes", "each regime needs 0 < lo <= hi");
      }
      require(horizon >= 20.0 / params.bigM, "numerics.horizon", "amplitude searches need horizon >= 20/M");
      break;
    case Experiment::Dichotomy:
      require(!dichotomy.plateau_factors.empty(), "dichotomy.plateau_factors", "must not be empty");
      for (double p : dichotomy.plateau_factors) {
        require(p >= 0.0, "dichotomy.plateau_factors", "entries must be >= 0");
      }
      require(positive(dichotomy.L_factor), "dichotomy.L_factor", "must be > 0");
      require(horizon >= 20.0 / params.bigM, "numerics.horizon", "amplitude searches need horizon >= 20/M");
      break;
  }
}

RunConfig config_from_json(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<root>", std::string("malformed JSON: ") + e.what());
  }
  RunConfig c;
  Reader r(root, "");
  if (r.has("experiment")) {
    std::string name;
    r.opt("experiment", name);
    c.experiment = parse_experiment(name);
  }
  if (!r.has("params")) throw ConfigError("params", "missing required field (needs at least kappa and M)");
  {
    Reader p = r.sub("params");
    p.req("kappa", c.params.kappa);
    p.req("M", c.params.bigM);
    p.opt("theta0", c.params.theta0);
    p.opt("h", c.params.h);
    p.finish();
  }
  if (r.has("reaction")) {
    Reader p = r.sub("reaction");
    p.opt("family", c.reaction);
    p.opt("params", c.reaction_params);
    p.finish();
  }
  if (r.has("profile")) {
    Reader p = r.sub("profile");
    p.opt("kind", c.profile);
    p.opt("params", c.profile_params);
    p.opt("csv", c.profile_csv);
    p.opt("alpha", c.alpha);
    p.opt("normalize", c.normalize);
    p.finish();
  }
  if (r.has("numerics")) {
    Reader n = r.sub("numerics");
    n.opt("horizon", c.horizon);
    n.opt("rel_tol", c.rel_tol);
    n.opt("cap", c.cap);
    n.opt("eta", c.eta);
    if (n.has("grid")) {
      Reader g = n.sub("grid");
      if (g.has("bc_x")) {
        std::string bc;
        g.opt("bc_x", bc);
        if (bc == "periodic") c.grid.bc_x = BoundaryX::Periodic;
        else if (bc == "absorbing") c.grid.bc_x = BoundaryX::Absorbing;
        else throw ConfigError(g.path("bc_x"), "expected periodic or absorbing");
      }
      g.opt("x_period_factor", c.grid.x_period_factor);
      g.opt("X_override", c.grid.X_override);
      g.opt("X_max", c.grid.X_max);
      g.opt("cells_per_L", c.grid.cells_per_L);
      g.opt("dx_max", c.grid.dx_max);
      g.opt("ny_per_period", c.grid.ny_per_period);
      g.opt("dy_max", c.grid.dy_max);
      g.opt("dt_factor", c.grid.dt_factor);
      g.opt("dt_max", c.grid.dt_max);
      g.opt("u_frame", c.grid.u_frame);
      g.finish();
    }
    n.finish();
  }
  r.opt("seed", c.seed);
  r.opt("threads", c.threads);
  r.opt("output", c.output);
  if (r.has("simulate")) {
    Reader s = r.sub("simulate");
    s.opt("equation", c.simulate.equation);
    s.opt("A", c.simulate.A);
    s.opt("L", c.simulate.L);
    s.opt("eta", c.simulate.eta);
    s.opt("t_end", c.simulate.t_end);
    s.opt("record", c.simulate.record);
    s.opt("nx", c.simulate.nx);
    s.opt("ny", c.simulate.ny);
    s.opt("X", c.simulate.X);
    s.finish();
  }
  if (r.has("critical_amplitude")) {
    Reader s = r.sub("critical_amplitude");
    s.opt("Ls", c.amplitude.Ls);
    s.opt("A_guess", c.amplitude.A_guess);
    s.finish();
  }
  if (r.has("max_L")) {
    Reader s = r.sub("max_L");
    s.opt("As", c.max_l.As);
    s.opt("L_guess", c.max_l.L_guess);
    s.opt("L_cap", c.max_l.L_cap);
    s.finish();
  }
  if (r.has("critical_length")) {
    Reader s = r.sub("critical_length");
    s.opt("bracket", c.critical_length.bracket);
    s.opt("L_probe", c.critical_length.L_probe);
    s.opt("t_max", c.critical_length.t_max);
    s.opt("rel_tol", c.critical_length.rel_tol);
    s.finish();
  }
  if (r.has("mc")) {
    Reader s = r.sub("mc");
    s.opt("t", c.mc.t);
    s.opt("A", c.mc.A);
    s.opt("L", c.mc.L);
    s.opt("xs", c.mc.xs);
    s.opt("ys", c.mc.ys);
    s.opt("n_paths", c.mc.n_paths);
    s.opt("dt", c.mc.dt);
    s.opt("fd_nx", c.mc.fd_nx);
    s.opt("fd_ny", c.mc.fd_ny);
    s.opt("fd_X", c.mc.fd_X);
    s.opt("clt_alpha", c.mc.clt_alpha);
    s.opt("clt_y", c.mc.clt_y);
    s.opt("clt_dt", c.mc.clt_dt);
    s.finish();
  }
  if (r.has("sweep")) {
    Reader s = r.sub("sweep");
    s.opt("alphas", c.sweep.alphas);
    if (s.has("mode")) {
      std::string mode;
      s.opt("mode", mode);
      c.sweep.mode = parse_sweep_mode(mode);
    }
    s.opt("L", c.sweep.L);
    s.opt("A", c.sweep.A);
    s.opt("L_guess", c.sweep.L_guess);
    if (s.has("regimes")) {
      const json& arr = s.raw("regimes");
      if (!arr.is_array()) throw ConfigError("sweep.regimes", "expected an array");
      c.sweep.regimes.clear();
      for (std::size_t k = 0; k < arr.size(); ++k) {
        Reader g(arr[k], "sweep.regimes[" + std::to_string(k) + "]");
        SweepRegime reg;
        g.req("name", reg.name);
        g.req("lo", reg.lo);
        g.req("hi", reg.hi);
        g.finish();
        c.sweep.regimes.push_back(reg);
      }
    }
    s.finish();
  }
  if (r.has("dichotomy")) {
    Reader s = r.sub("dichotomy");
    s.opt("plateau_factors", c.dichotomy.plateau_factors);
    s.opt("L_factor", c.dichotomy.L_factor);
    s.finish();
  }
  r.finish();
  c.validate();
  return c;
}

std::string config_to_json(const RunConfig& c) {
  json regimes = json::array();
  for (const auto& reg : c.sweep.regimes) regimes.push_back({{"name", reg.name}, {"lo", reg.lo}, {"hi", reg.hi}});
  json profile_params = json::object();
  for (const auto& [k, v] : c.profile_params) profile_params[k] = v;
  json j = {
      {"experiment", experiment_name(c.experiment)},
      {"params", {{"kappa", c.params.kappa}, {"M", c.params.bigM}, {"theta0", c.params.theta0}, {"h", c.params.h}}},
      {"reaction", {{"family", c.reaction}, {"params", c.reaction_params}}},
      {"profile",
       {{"kind", c.profile},
        {"params", profile_params},
        {"csv", c.profile_csv},
        {"alpha", c.alpha},
        {"normalize", c.normalize}}},
      {"numerics",
       {{"horizon", c.horizon},
        {"rel_tol", c.rel_tol},
        {"cap", c.cap},
        {"eta", c.eta},
        {"grid",
         {{"bc_x", c.grid.bc_x == BoundaryX::Periodic ? "periodic" : "absorbing"},
          {"x_period_factor", c.grid.x_period_factor},
          {"X_override", c.grid.X_override},
          {"X_max", c.grid.X_max},
          {"cells_per_L", c.grid.cells_per_L},
          {"dx_max", c.grid.dx_max},
          {"ny_per_period", c.grid.ny_per_period},
          {"dy_max", c.grid.dy_max},
          {"dt_factor", c.grid.dt_factor},
          {"dt_max", c.grid.dt_max},
          {"u_frame", c.grid.u_frame}}}}},
      {"seed", c.seed},
      {"threads", c.threads},
      {"output", c.output},
      {"simulate",
       {{"equation", c.simulate.equation},
        {"A", c.simulate.A},
        {"L", c.simulate.L},
        {"eta", c.simulate.eta},
        {"t_end", c.simulate.t_end},
        {"record", c.simulate.record},
        {"nx", c.simulate.nx},
        {"ny", c.simulate.ny},
        {"X", c.simulate.X}}},
      {"critical_amplitude", {{"Ls", c.amplitude.Ls}, {"A_guess", c.amplitude.A_guess}}},
      {"max_L", {{"As", c.max_l.As}, {"L_guess", c.max_l.L_guess}, {"L_cap", c.max_l.L_cap}}},
      {"critical_length",
       {{"bracket", c.critical_length.bracket},
        {"L_probe", c.critical_length.L_probe},
        {"t_max", c.critical_length.t_max},
        {"rel_tol", c.critical_length.rel_tol}}},
      {"mc",
       {{"t", c.mc.t},
        {"A", c.mc.A},
        {"L", c.mc.L},
        {"xs", c.mc.xs},
        {"ys", c.mc.ys},
        {"n_paths", c.mc.n_paths},
        {"dt", c.mc.dt},
        {"fd_nx", c.mc.fd_nx},
        {"fd_ny", c.mc.fd_ny},
        {"fd_X", c.mc.fd_X},
        {"clt_alpha", c.mc.clt_alpha},
        {"clt_y", c.mc.clt_y},
        {"clt_dt", c.mc.clt_dt}}},
      {"sweep",
       {{"alphas", c.sweep.alphas},
        {"mode", sweep_mode_name(c.sweep.mode)},
        {"L", c.sweep.L},
        {"A", c.sweep.A},
        {"L_guess", c.sweep.L_guess},
        {"regimes", regimes}}},
      {"dichotomy", {{"plateau_factors", c.dichotomy.plateau_factors}, {"L_factor", c.dichotomy.L_factor}}},
  };
  return j.dump(2) + "\n";
}

IgnitionReaction build_config_reaction(const RunConfig& cfg) {
  return build_reaction(cfg.reaction, cfg.params.theta0, cfg.reaction_params);
}

ShearProfile build_config_profile(const RunConfig& cfg) {
  ShearProfile u = cfg.profile_csv.empty() ? make_profile(cfg.profile, cfg.profile_params, cfg.params.h)
                                           : load_profile_csv(cfg.profile_csv);
  if (cfg.normalize) u = normalize_mean_zero(u);
  if (cfg.alpha != 1.0) u = scale_profile(u, cfg.alpha);
  return u;
}

QuenchProblem build_problem(const RunConfig& cfg) {
  QuenchProblem q;
  q.params = cfg.params;
  q.params.h = build_config_profile(cfg).period();
  q.f = build_config_reaction(cfg);
  q.u = build_config_profile(cfg);
  q.grid = cfg.grid;
  q.horizon = cfg.horizon;
  q.eta = cfg.eta;
  return q;
}

SweepResult alpha_sweep(const RunConfig& cfg, const std::vector<double>& alphas, SweepMode mode) {
  SweepResult res;
  res.mode = mode;
  std::vector<double> sorted = alphas;
  std::sort(sorted.begin(), sorted.end());
  res.rows.resize(sorted.size());
  const QuenchProblem base = build_problem(cfg);
  parallel_for(sorted.size(), cfg.threads, [&](std::size_t k) {
    QuenchProblem q = base;
    q.u = scale_profile(base.u, sorted[k]);
    q.params.h = q.u.period();
    SweepRow& row = res.rows[k];
    row.alpha = sorted[k];
    row.horizon = q.horizon;
    row.cap = cfg.cap;
    if (mode == SweepMode::A0AtFixedL) {
      const CriticalAmplitude a = critical_amplitude(cfg.sweep.L, q, cfg.rel_tol, 0.0, cfg.cap);
      row.L = cfg.sweep.L;
      row.low = a.A_low;
      row.high = a.A_high;
      row.A = a.found ? (a.A_low > 0.0 ? std::sqrt(a.A_low * a.A_high) : a.A_high) : a.A_high;
      row.found = a.found;
      row.domain_clipped = a.domain_clipped;
      row.iterations = a.iterations;
    } else {
      const MaxQuenchable m = max_quenchable_L(cfg.sweep.A, q, cfg.rel_tol, cfg.sweep.L_guess);
      row.A = cfg.sweep.A;
      row.low = m.L_low;
      row.high = m.L_high;
      row.L = m.L_A;
      row.found = m.found;
      row.iterations = m.iterations;
    }
  });
  for (const auto& reg : cfg.sweep.regimes) {
    SweepFit fit;
    fit.regime = reg;
    std::vector<double> xs, ys;
    for (const auto& row : res.rows) {
      if (row.alpha < reg.lo * (1 - 1e-12) || row.alpha > reg.hi * (1 + 1e-12)) continue;
      const double v = mode == SweepMode::A0AtFixedL ? row.A : row.L;
      if (!row.found || !(v > 0.0) || !std::isfinite(v)) {
        fit.note = "no bracket at alpha=" + std::to_string(row.alpha);
        continue;
      }
      xs.push_back(row.alpha);
      ys.push_back(v);
    }
    fit.points = static_cast<int>(xs.size());
    if (fit.points >= 4 && fit.note.empty()) {
      fit.fit = loglog_fit(xs, ys);
      fit.ok = true;
    } else if (fit.note.empty()) {
      fit.note = "fewer than 4 alphas in range";
    }
    res.fits.push_back(fit);
  }
  return res;
}

DichotomyReport dichotomy_demo(const RunConfig& cfg) {
  DichotomyReport rep;
  const IgnitionReaction f = build_config_reaction(cfg);
  rep.ell_tilde = critical_plateau_length(f, cfg.params).ell_tilde;
  const double L = cfg.dichotomy.L_factor * rep.ell_tilde;
  rep.rows.resize(cfg.dichotomy.plateau_factors.size());
  parallel_for(rep.rows.size(), cfg.threads, [&](std::size_t k) {
    const double factor = cfg.dichotomy.plateau_factors[k];
    const double lp = factor * rep.ell_tilde;
    const double h = cfg.params.h;
    ShearProfile u = lp > 0.0 ? make_profile("sine-with-plateau", {{"plateau_length", lp}}, h + lp)
                              : make_profile("sine", {}, h);
    u = normalize_mean_zero(u);
    QuenchProblem q;
    q.params = cfg.params;
    q.params.h = u.period();
    q.f = f;
    q.u = u;
    q.horizon = cfg.horizon;
    q.eta = cfg.eta;
    q.grid = cfg.grid;

    DichotomyRow& row = rep.rows[k];
    row.plateau = lp;
    row.plateau_factor = factor;
    row.L = L;
    row.horizon = cfg.horizon;
    row.cap = cfg.cap;

    // Ladder on the absorbing box riding with the plateau.
    QuenchProblem sub = q;
    sub.grid.bc_x = BoundaryX::Absorbing;
    sub.grid.X_override = L + 8.0 * std::sqrt(cfg.params.kappa * cfg.horizon);
    const auto plats = u.plateaus();
    if (!plats.empty()) sub.grid.u_frame = u(plats.front().start + 0.5 * plats.front().length);
    const CriticalAmplitude ladder = critical_amplitude(L, sub, 1e9, 0.0, cfg.cap);
    row.runs += ladder.iterations;
    if (!ladder.found) {
      row.quenched = false;
      row.A_low = ladder.A_low;
      row.A_high = std::numeric_limits<double>::infinity();
      row.outcome = "no quench up to cap";
      return;
    }
    q.grid.bc_x = BoundaryX::Periodic;
    const double guess = ladder.A_low > 0.0 ? ladder.A_low : ladder.A_high;
    const CriticalAmplitude a = critical_amplitude(L, q, cfg.rel_tol, guess, cfg.cap);
    row.runs += a.iterations;
    row.domain_clipped = a.domain_clipped;
    row.quenched = a.found;
    row.A_low = a.A_low;
    row.A_high = a.A_high;
    if (a.found) {
      row.A0_over_L = a.A_high / L;
      row.outcome = "quench bracket";
    } else {
      row.outcome = "quench on absorbing box only";
    }
  });
  return rep;
}

namespace {

std::string num(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

}  // namespace

std::string sweep_csv(const SweepResult& s) {
  std::ostringstream out;
  out << "alpha,L,A,low,high,found,domain_clipped,iterations,horizon,cap\n";
  for (const auto& r : s.rows) {
    out << num(r.alpha) << ',' << num(r.L) << ',' << num(r.A) << ',' << num(r.low) << ',' << num(r.high)
        << ',' << r.found << ',' << r.domain_clipped << ',' << r.iterations << ',' << num(r.horizon) << ','
        << num(r.cap) << '\n';
  }
  return out.str();
}

std::string sweep_alpha_csv(const SweepResult& s) {
  std::ostringstream out;
  out << "alpha,A_low,A_high\n";
  if (s.mode != SweepMode::A0AtFixedL) return out.str();
  for (const auto& r : s.rows) out << num(r.alpha) << ',' << num(r.low) << ',' << num(r.high) << '\n';
  return out.str();
}

std::string dichotomy_csv(const DichotomyReport& d) {
  std::ostringstream out;
  out << "plateau,plateau_over_ell_tilde,L,quenched,A_low,A_high,A0_over_L,runs,horizon,cap,outcome\n";
  for (const auto& r : d.rows) {
    out << num(r.plateau) << ',' << num(r.plateau_factor) << ',' << num(r.L) << ',' << r.quenched << ','
        << num(r.A_low) << ',' << num(r.A_high) << ',' << num(r.A0_over_L) << ',' << r.runs << ','
        << num(r.horizon) << ',' << num(r.cap) << ',' << r.outcome << '\n';
  }
  return out.str();
}

std::string amplitudes_csv(const std::vector<CriticalAmplitude>& rows) {
  std::ostringstream out;
  out << "L,A_low,A_high,horizon,cap,quenched_at_cap\n";
  for (const auto& r : rows) {
    out << num(r.L) << ',' << num(r.A_low) << ',' << num(r.A_high) << ',' << num(r.horizon) << ','
        << num(r.A_cap) << ',' << r.found << '\n';
  }
  return out.str();
}

std::string histories_csv(const std::vector<std::pair<std::string, Trajectory>>& runs) {
  std::ostringstream out;
  out << "run,t,sup\n";
  for (const auto& [name, tr] : runs) {
    for (std::size_t k = 0; k < tr.times.size(); ++k) {
      out << name << ',' << num(tr.times[k]) << ',' << num(tr.sup[k]) << '\n';
    }
  }
  return out.str();
}

std::string ell_scan_csv(const std::optional<CriticalLength>& c) {
  std::ostringstream out;
  out << "p,l\n";
  if (c) {
    for (std::size_t k = 0; k < c->scan_p.size(); ++k) out << num(c->scan_p[k]) << ',' << num(c->scan_l[k]) << '\n';
  }
  return out.str();
}

std::vector<std::string> emit_plotdata(const std::string& dir, const ResultSet& results) {
  const std::filesystem::path base(dir);
  const std::vector<std::pair<std::string, std::string>> files = {
      {"sup_history.csv", histories_csv(results.histories)},
      {"A0_vs_L.csv", amplitudes_csv(results.amplitudes)},
      {"A0_vs_alpha.csv", results.sweep ? sweep_alpha_csv(*results.sweep) : sweep_alpha_csv(SweepResult{})},
      {"ell_scan.csv", ell_scan_csv(results.critical)},
      {"dichotomy.csv", results.dichotomy ? dichotomy_csv(*results.dichotomy) : dichotomy_csv(DichotomyReport{})},
  };
  std::vector<std::string> names;
  for (const auto& [name, content] : files) {
    atomic_write((base / name).string(), content);
    names.push_back(name);
  }
  return names;
}

namespace {

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

json fit_json(const LineFit& f) {
  return {{"slope", f.slope}, {"intercept", f.intercept}, {"slope_half_width_95", f.slope_half_width},
          {"r2", f.r2}, {"n", f.n}};
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

struct RunOutput {
  int code = kExitOk;
  std::vector<std::string> files;
  json summary = json::object();
};

void put(RunOutput& out, const std::filesystem::path& dir, const std::string& name, const std::string& content) {
  atomic_write((dir / name).string(), content);
  out.files.push_back(name);
}

RunOutput run_simulate(const RunConfig& cfg, const std::filesystem::path& dir, std::ostream& log) {
  RunOutput out;
  const QuenchProblem q = build_problem(cfg);
  const SimulateSpec& s = cfg.simulate;
  Grid2D g = make_grid(q.grid, s.L, s.A, q.u, q.params, s.t_end);
  if (s.nx > 0) g.nx = s.nx;
  if (s.ny > 0) g.ny = s.ny;
  if (s.X > 0.0) g.X = s.X;
  InitialData init;
  init.L = s.L;
  init.eta = s.eta;
  SolverOptions opt = make_solver_options(q.grid);
  log << "simulate " << s.equation << ": nx=" << g.nx << " ny=" << g.ny << " X=" << g.X << '\n';
  Trajectory tr;
  if (s.equation == "T") {
    tr = evolve_T(q.params, q.f, q.u, s.A, init, g, s.t_end, s.record, opt);
  } else if (s.equation == "Phi") {
    tr = evolve_Phi(q.params, q.u, s.A, init, g, s.t_end, s.record, opt);
  } else {
    tr = evolve_Psi(q.params, q.u, s.A, init, g, s.t_end, s.record, opt);
  }
  put(out, dir, "history.csv", [&] {
    std::ostringstream h;
    h << std::setprecision(17) << "t,sup,l1\n";
    for (std::size_t k = 0; k < tr.times.size(); ++k) h << tr.times[k] << ',' << tr.sup[k] << ',' << tr.l1[k] << '\n';
    return h.str();
  }());
  for (std::size_t k = 0; k < tr.snapshots.size(); ++k) {
    std::ostringstream name;
    name << "snapshot_" << std::setw(3) << std::setfill('0') << k << ".csv";
    write_snapshot_csv((dir / name.str()).string(), g, tr.snapshots[k]);
    out.files.push_back(name.str());
  }
  const QuenchOutcome qo = detect_quench(tr, q.f.theta0());
  out.summary = {{"nx", g.nx},
                 {"ny", g.ny},
                 {"X", g.X},
                 {"dt", tr.dt},
                 {"steps", tr.steps},
                 {"t_final", tr.t_final},
                 {"quenched", qo.quenched},
                 {"tau_detect", finite_or_null(qo.tau_detect)},
                 {"domain_clipped", tr.domain_clipped},
                 {"boundary_max", tr.boundary_max},
                 {"max_overshoot", tr.max_overshoot},
                 {"advection_clip", tr.advection_clip}};
  ResultSet rs;
  rs.histories.emplace_back("simulate", tr);
  for (const auto& f : emit_plotdata(dir.string(), rs)) out.files.push_back(f);
  if (tr.domain_clipped && g.bc_x == BoundaryX::Absorbing) out.code = kExitClipped;
  return out;
}

RunOutput run_critical_amplitude(const RunConfig& cfg, const std::filesystem::path& dir, std::ostream& log) {
  RunOutput out;
  const QuenchProblem q = build_problem(cfg);
  std::vector<CriticalAmplitude> rows(cfg.amplitude.Ls.size());
  parallel_for(rows.size(), cfg.threads, [&](std::size_t k) {
    rows[k] = critical_amplitude(cfg.amplitude.Ls[k], q, cfg.rel_tol, cfg.amplitude.A_guess, cfg.cap);
  });
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.L < b.L; });
  json arr = json::array();
  std::vector<std::pair<double, double>> samples;
  bool all_found = true, clipped = false;
  for (const auto& r : rows) {
    log << "L=" << r.L << " A0 in [" << r.A_low << ", " << r.A_high << "]" << (r.found ? "" : " (no bracket)") << '\n';
    arr.push_back({{"L", r.L},
                   {"A_low", r.A_low},
                   {"A_high", finite_or_null(r.A_high)},
                   {"found", r.found},
                   {"iterations", r.iterations},
                   {"bracket_verified", r.bracket_verified},
                   {"monotone_verified", r.monotone_verified},
                   {"domain_clipped", r.domain_clipped},
                   {"horizon", r.horizon},
                   {"cap", r.A_cap}});
    all_found = all_found && r.found;
    clipped = clipped || r.domain_clipped;
    samples.emplace_back(r.L, r.found ? r.A_high : std::numeric_limits<double>::infinity());
  }
  out.summary["brackets"] = arr;
  try {
    const LinearityReport lin = strong_quench_fit(samples);
    out.summary["linearity"] = {{"accepted", lin.accepted},     {"reason", lin.reason},
                                {"C", lin.C},                   {"max_ratio", lin.max_ratio},
                                {"adjacent_ratios", lin.adjacent_ratios}, {"loglog", fit_json(lin.loglog)}};
  } catch (const std::invalid_argument& e) {
    out.summary["linearity"] = {{"accepted", false}, {"reason", e.what()}};
  }
  ResultSet rs;
  rs.amplitudes = rows;
  for (const auto& f : emit_plotdata(dir.string(), rs)) out.files.push_back(f);
  if (clipped && cfg.grid.bc_x == BoundaryX::Absorbing) out.code = kExitClipped;
  else if (!all_found) out.code = kExitNoBracket;
  return out;
}

RunOutput run_max_L(const RunConfig& cfg, const std::filesystem::path& dir, std::ostream& log) {
  RunOutput out;
  const QuenchProblem q = build_problem(cfg);
  std::vector<MaxQuenchable> rows(cfg.max_l.As.size());
  parallel_for(rows.size(), cfg.threads, [&](std::size_t k) {
    rows[k] = max_quenchable_L(cfg.max_l.As[k], q, cfg.rel_tol, cfg.max_l.L_guess, cfg.max_l.L_cap);
  });
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.A < b.A; });
  std::ostringstream csv;
  csv << "A,L_low,L_high,L_A,found,iterations,horizon\n";
  bool all_found = true;
  for (const auto& r : rows) {
    log << "A=" << r.A << " L_A in [" << r.L_low << ", " << r.L_high << "]\n";
    csv << num(r.A) << ',' << num(r.L_low) << ',' << num(r.L_high) << ',' << num(r.L_A) << ',' << r.found << ','
        << r.iterations << ',' << num(cfg.horizon) << '\n';
    all_found = all_found && r.found;
  }
  put(out, dir, "LA_vs_A.csv", csv.str());
  for (const auto& name : emit_plotdata(dir.string(), ResultSet{})) out.files.push_back(name);
  if (!all_found) out.code = kExitNoBracket;
  return out;
}

RunOutput run_critical_length(const RunConfig& cfg, const std::filesystem::path& dir, std::ostream& log) {
  RunOutput out;
  const IgnitionReaction f = build_config_reaction(cfg);
  const CriticalLength c = critical_plateau_length(f, cfg.params);
  log << "ell_tilde=" << std::setprecision(12) << c.ell_tilde << " p*=" << c.p_star << '\n';
  out.summary = json::parse(critical_report_json(c, cfg.params, f));
  if (cfg.critical_length.bracket) {
    const double L_probe = cfg.critical_length.L_probe > 0.0 ? cfg.critical_length.L_probe : 4.0 * c.ell_tilde;
    const EllBracket b = bracket_ell(f, cfg.params, L_probe, cfg.critical_length.t_max,
                                     cfg.critical_length.rel_tol, {}, c.ell_tilde);
    log << "ell in [" << b.l_low << ", " << b.l_high << "]\n";
    out.summary["ell_bracket"] = {{"l_low", b.l_low},
                                  {"l_high", finite_or_null(b.l_high)},
                                  {"horizon", b.horizon},
                                  {"L_probe", b.L_probe},
                                  {"runs", b.runs},
                                  {"refinement_consistent", b.refinement_consistent}};
    if (!std::isfinite(b.l_high)) out.code = kExitNoBracket;
  }
  ResultSet rs;
  rs.critical = c;
  for (const auto& name : emit_plotdata(dir.string(), rs)) out.files.push_back(name);
  return out;
}

RunOutput run_mc_verify(const RunConfig& cfg, const std::filesystem::path& dir, std::ostream& log) {
  RunOutput out;
  const QuenchProblem q = build_problem(cfg);
  const McSpec& m = cfg.mc;
  InitialData init;
  init.L = m.L;
  Field2D fd[2];
  Grid2D grids[2];
  for (int level = 0; level < 2; ++level) {
    Grid2D g;
    g.bc_x = BoundaryX::Absorbing;
    g.X = m.fd_X;
    g.nx = m.fd_nx << level;
    g.ny = m.fd_ny << level;
    g.ly = q.u.period();
    SolverOptions opt = make_solver_options(q.grid);
    opt.u_frame = 0.0;
    fd[level] = evolve_Psi(q.params, q.u, m.A, init, g, m.t, {}, opt).final_field;
    grids[level] = g;
  }
  PathEnsembleConfig pc;
  pc.n_paths = m.n_paths;
  pc.dt = m.dt;
  pc.seed = cfg.seed;
  pc.threads = cfg.threads;
  std::ostringstream csv;
  csv << "x,y,mc,stderr,fd,fd_tol,ratio\n";
  std::ostringstream jsonl;
  double worst = 0.0;
  for (double y : m.ys) {
    const auto est = estimate_psi_mc_batch(m.t, m.xs, y, m.A, m.L, q.u, q.params, pc);
    for (std::size_t i = 0; i < m.xs.size(); ++i) {
      const double fine = sample_field(grids[1], fd[1].values, m.xs[i], y);
      const double coarse = sample_field(grids[0], fd[0].values, m.xs[i], y);
      const double tol = std::abs(fine - coarse);
      const double denom = 3.0 * (est[i].stderr_ + tol);
      const double diff = std::abs(est[i].mean - fine);
      const double ratio = denom > 0.0 ? diff / denom : (diff > 0.0 ? INFINITY : 0.0);
      worst = std::max(worst, ratio);
      csv << num(m.xs[i]) << ',' << num(y) << ',' << num(est[i].mean) << ',' << num(est[i].stderr_) << ','
          << num(fine) << ',' << num(tol) << ',' << num(ratio) << '\n';
      const json inputs = {{"t", m.t}, {"x", m.xs[i]}, {"y", y}, {"A", m.A}, {"L", m.L}};
      jsonl << estimate_json("psi", inputs.dump(), est[i]) << '\n';
    }
  }
  log << "worst |MC - FD| / (3 (stderr + FD tol)) = " << worst << '\n';
  put(out, dir, "psi_probe.csv", csv.str());
  put(out, dir, "estimates.jsonl", jsonl.str());
  out.summary["psi_worst_ratio"] = worst;
  out.summary["psi_agree"] = worst <= 1.0;
  if (m.clt_alpha > 0.0) {
    PathEnsembleConfig cc = pc;
    cc.dt = m.clt_dt;
    const ShearProfile u = build_config_profile(cfg);
    const CltReport rep = martingale_clt_sample(m.clt_y, m.clt_alpha, u, cc);
    put(out, dir, "clt_samples.csv", samples_csv("M", rep.samples));
    out.summary["clt"] = {{"alpha", m.clt_alpha}, {"sigma2", rep.sigma2},       {"ks", rep.ks},
                          {"sample_var", rep.sample_var}, {"degenerate", rep.degenerate}, {"note", rep.note}};
    log << "CLT: sigma2=" << rep.sigma2 << " KS=" << rep.ks << '\n';
  }
  for (const auto& name : emit_plotdata(dir.string(), ResultSet{})) out.files.push_back(name);
  return out;
}

RunOutput run_alpha_sweep(const RunConfig& cfg, const std::filesystem::path& dir, std::ostream& log) {
  RunOutput out;
  const SweepResult s = alpha_sweep(cfg, cfg.sweep.alphas, cfg.sweep.mode);
  put(out, dir, "sweep.csv", sweep_csv(s));
  json fits = json::array();
  bool all_found = true;
  for (const auto& r : s.rows) {
    log << "alpha=" << r.alpha << " [" << r.low << ", " << r.high << "]" << (r.found ? "" : " (no bracket)") << '\n';
    all_found = all_found && r.found;
  }
  for (const auto& f : s.fits) {
    json jf = {{"regime", f.regime.name}, {"lo", f.regime.lo}, {"hi", f.regime.hi},
               {"points", f.points}, {"ok", f.ok}, {"note", f.note}};
    if (f.ok) jf["fit"] = fit_json(f.fit);
    fits.push_back(jf);
    if (f.ok) log << f.regime.name << " slope " << f.fit.slope << " +- " << f.fit.slope_half_width << '\n';
  }
  out.summary = {{"mode", sweep_mode_name(s.mode)}, {"fits", fits}, {"horizon", cfg.horizon}, {"cap", cfg.cap}};
  ResultSet rs;
  rs.sweep = s;
  for (const auto& name : emit_plotdata(dir.string(), rs)) out.files.push_back(name);
  if (!all_found) out.code = kExitNoBracket;
  return out;
}

RunOutput run_dichotomy(const RunConfig& cfg, const std::filesystem::path& dir, std::ostream& log) {
  RunOutput out;
  const DichotomyReport d = dichotomy_demo(cfg);
  json rows = json::array();
  for (const auto& r : d.rows) {
    log << "plateau " << r.plateau_factor << " ell_tilde: " << r.outcome << '\n';
    rows.push_back({{"plateau", r.plateau},
                    {"plateau_over_ell_tilde", r.plateau_factor},
                    {"L", r.L},
                    {"quenched", r.quenched},
                    {"A_low", r.A_low},
                    {"A_high", finite_or_null(r.A_high)},
                    {"outcome", r.outcome}});
  }
  out.summary = {{"ell_tilde", d.ell_tilde}, {"rows", rows}, {"horizon", cfg.horizon}, {"cap", cfg.cap}};
  ResultSet rs;
  rs.dichotomy = d;
  for (const auto& name : emit_plotdata(dir.string(), rs)) out.files.push_back(name);
  return out;
}

}  // namespace

int run(const RunConfig& cfg, std::ostream& log) {
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  const std::filesystem::path dir(cfg.output);
  std::filesystem::create_directories(dir);
  RunOutput out;
  switch (cfg.experiment) {
    case Experiment::Simulate: out = run_simulate(cfg, dir, log); break;
    case Experiment::CriticalAmplitude: out = run_critical_amplitude(cfg, dir, log); break;
    case Experiment::MaxL: out = run_max_L(cfg, dir, log); break;
    case Experiment::CriticalLength: out = run_critical_length(cfg, dir, log); break;
    case Experiment::McVerify: out = run_mc_verify(cfg, dir, log); break;
    case Experiment::AlphaSweep: out = run_alpha_sweep(cfg, dir, log); break;
    case Experiment::Dichotomy: out = run_dichotomy(cfg, dir, log); break;
  }
  put(out, dir, "summary.json", out.summary.dump(2) + "\n");
  const json manifest = {{"experiment", experiment_name(cfg.experiment)},
                         {"timestamp", utc_timestamp()},
                         {"exit_code", out.code},
                         {"files", out.files},
                         {"config", json::parse(config_to_json(cfg))}};
  atomic_write((dir / "manifest.json").string(), manifest.dump(2) + "\n");
  return out.code;
}

}  // namespace shearq
