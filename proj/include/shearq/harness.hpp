#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "shearq/critical.hpp"
#include "shearq/model.hpp"
#include "shearq/profiles.hpp"
#include "shearq/quench.hpp"

namespace shearq {

enum class Experiment { Simulate, CriticalAmplitude, MaxL, CriticalLength, McVerify, AlphaSweep, Dichotomy };

std::string experiment_name(Experiment e);
Experiment parse_experiment(const std::string& name);

/// Exit statuses of run() and the CLI.
enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitClipped = 3, kExitNoBracket = 4 };

/// Invalid configuration. field() is the dotted JSON path of the offending key.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& message);
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct SimulateSpec {
  std::string equation = "T";  ///< T, Phi or Psi
  double A = 0.0;
  double L = 1.0;
  double eta = 1.0;
  double t_end = 10.0;
  std::vector<double> record;  ///< snapshot times
  int nx = 0;                  ///< 0: grid policy
  int ny = 0;
  double X = 0.0;
};

struct AmplitudeSpec {
  std::vector<double> Ls = {1.0};
  double A_guess = 0.0;
};

struct MaxLSpec {
  std::vector<double> As = {10.0};
  double L_guess = 1.0;
  double L_cap = 1e3;
};

struct CriticalLengthSpec {
  bool bracket = false;  ///< also bisect the Dirichlet strip threshold
  double L_probe = 0.0;  ///< 0: 4 ell_tilde
  double t_max = 200.0;
  double rel_tol = 0.02;
};

struct McSpec {
  double t = 1.0;
  double A = 2.0;
  double L = 1.0;
  std::vector<double> xs = {-2.0, -1.0, 0.0, 1.0, 2.0};
  std::vector<double> ys = {0.0, 1.2, 2.5, 3.7, 5.0};
  long n_paths = 10000;
  double dt = 1e-3;
  int fd_nx = 512;  ///< coarse FD grid on [-fd_X, fd_X]; the check grid doubles both counts
  int fd_ny = 64;
  double fd_X = 8.0;
  double clt_alpha = 0.0;  ///< > 0 adds a martingale CLT sample
  double clt_y = 0.3;
  double clt_dt = 1e-2;
};

enum class SweepMode { A0AtFixedL, LAAtFixedA };

std::string sweep_mode_name(SweepMode m);
SweepMode parse_sweep_mode(const std::string& name);

/// Declared alpha range for one slope fit.
struct SweepRegime {
  std::string name;
  double lo = 0.0;
  double hi = 0.0;
};

struct SweepSpec {
  std::vector<double> alphas = {8.0, 16.0, 32.0, 64.0};
  SweepMode mode = SweepMode::A0AtFixedL;
  double L = 2.0;    ///< A0 mode
  double A = 10.0;   ///< LA mode
  double L_guess = 1.0;
  std::vector<SweepRegime> regimes = {{"large", 8.0, 64.0}, {"small", 1.0 / 16.0, 0.5}};
};

struct DichotomySpec {
  std::vector<double> plateau_factors = {0.0, 0.5, 2.0};  ///< plateau lengths in units of ell_tilde
  double L_factor = 10.0;                                   ///< slab half-width in units of ell_tilde
};

/// Fully resolved experiment description. Lengths and times are in the units
/// of params (the core takes kappa and M explicitly).
struct RunConfig {
  PhysParams params;  ///< params.h is the profile period
  std::string reaction = "quadratic-ignition";
  std::vector<double> reaction_params;
  std::string profile = "sine";
  std::map<std::string, double> profile_params;
  std::string profile_csv;  ///< when set, overrides profile and params.h
  double alpha = 1.0;
  bool normalize = true;
  Experiment experiment = Experiment::Simulate;
  GridPolicy grid;
  double horizon = 50.0;
  double rel_tol = 0.05;
  double cap = 1e6;
  double eta = 1.0;
  std::uint64_t seed = 1;
  int threads = 1;
  std::string output = "out";

  SimulateSpec simulate;
  AmplitudeSpec amplitude;
  MaxLSpec max_l;
  CriticalLengthSpec critical_length;
  McSpec mc;
  SweepSpec sweep;
  DichotomySpec dichotomy;

  void validate() const;
};

/// Parses a JSON config. params.kappa and params.M are required; every other
/// key has a default. Unknown keys and wrong types raise ConfigError.
RunConfig config_from_json(const std::string& text);

/// Serializes every field, defaults included.
std::string config_to_json(const RunConfig& cfg);

IgnitionReaction build_config_reaction(const RunConfig& cfg);
ShearProfile build_config_profile(const RunConfig& cfg);
QuenchProblem build_problem(const RunConfig& cfg);

struct SweepRow {
  double alpha = 0.0;
  double L = 0.0;        ///< fixed L (A0 mode) or L_A (LA mode)
  double A = 0.0;        ///< A0 estimate (A0 mode) or fixed A (LA mode)
  double low = 0.0;      ///< bracket of the swept quantity
  double high = 0.0;
  bool found = false;
  bool domain_clipped = false;
  int iterations = 0;
  double horizon = 0.0;
  double cap = 0.0;
};

struct SweepFit {
  SweepRegime regime;
  int points = 0;
  bool ok = false;
  std::string note;
  LineFit fit;  ///< log(value) against log(alpha)
};

struct SweepResult {
  SweepMode mode = SweepMode::A0AtFixedL;
  std::vector<SweepRow> rows;  ///< sorted by alpha
  std::vector<SweepFit> fits;
};

/// Critical amplitude (or largest quenchable L) for u(alpha y) at each alpha;
/// the rows run on up to cfg.threads workers.
SweepResult alpha_sweep(const RunConfig& cfg, const std::vector<double>& alphas, SweepMode mode);

struct DichotomyRow {
  double plateau = 0.0;
  double plateau_factor = 0.0;  ///< plateau / ell_tilde
  double L = 0.0;
  bool quenched = false;
  double A_low = 0.0;
  double A_high = 0.0;
  double A0_over_L = 0.0;
  int runs = 0;
  bool domain_clipped = false;  ///< clipping on the periodic bracket runs
  double horizon = 0.0;
  double cap = 0.0;
  std::string outcome;
};

struct DichotomyReport {
  double ell_tilde = 0.0;
  std::vector<DichotomyRow> rows;
};

/// For each plateau length: a doubling ladder on an absorbing box moving with
/// the plateau velocity (a subsolution, so "no quench up to cap" there is
/// conservative), then a periodic-x bracket (a supersolution) when the ladder
/// found a quench.
DichotomyReport dichotomy_demo(const RunConfig& cfg);

/// Results that emit_plotdata can turn into CSVs. Absent parts give
/// header-only files.
struct ResultSet {
  std::vector<std::pair<std::string, Trajectory>> histories;
  std::vector<CriticalAmplitude> amplitudes;
  std::optional<SweepResult> sweep;
  std::optional<CriticalLength> critical;
  std::optional<DichotomyReport> dichotomy;
};

/// Writes sup_history.csv (run,t,sup), A0_vs_L.csv (L,A_low,A_high,horizon,cap,quenched_at_cap),
/// A0_vs_alpha.csv (alpha,A_low,A_high), ell_scan.csv (p,l) and
/// dichotomy.csv into dir. Returns the file names written.
std::vector<std::string> emit_plotdata(const std::string& dir, const ResultSet& results);

std::string sweep_csv(const SweepResult& s);
std::string sweep_alpha_csv(const SweepResult& s);
std::string dichotomy_csv(const DichotomyReport& d);
std::string amplitudes_csv(const std::vector<CriticalAmplitude>& rows);
std::string histories_csv(const std::vector<std::pair<std::string, Trajectory>>& runs);
std::string ell_scan_csv(const std::optional<CriticalLength>& c);

/// Runs the configured experiment, writes its outputs and manifest.json under
/// cfg.output, and returns an ExitCode. Progress goes to log.
int run(const RunConfig& cfg, std::ostream& log);

}  // namespace shearq
