#include "shearq/stochastic.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "shearq/parallel.hpp"
#include "shearq/stats.hpp"

namespace shearq {

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> c, std::array<std::uint32_t, 2> k) {
  constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
  constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(M0) * c[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(M1) * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    k[0] += W0;
    k[1] += W1;
  }
  return c;
}

double PathNormals::operator()(std::uint64_t k) {
  const std::uint64_t block = k >> 1;
  if (block != cached_block_) {
    const auto r = philox4x32({static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32),
                               static_cast<std::uint32_t>(path_), static_cast<std::uint32_t>(path_ >> 32)},
                              {static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)});
    constexpr double kScale = 1.0 / 9007199254740992.0;  // 2^-53
    const std::uint64_t a = (static_cast<std::uint64_t>(r[1]) << 32) | r[0];
    const std::uint64_t b = (static_cast<std::uint64_t>(r[3]) << 32) | r[2];
    const double u1 = (static_cast<double>(a >> 11) + 0.5) * kScale;
    const double u2 = (static_cast<double>(b >> 11) + 0.5) * kScale;
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double ang = 2.0 * std::numbers::pi * u2;
    cache_[0] = rad * std::cos(ang);
    cache_[1] = rad * std::sin(ang);
    cached_block_ = block;
  }
  return cache_[k & 1];
}

void PathEnsembleConfig::validate() const {
  if (n_paths < 100) throw std::invalid_argument("n_paths must be >= 100");
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
}

namespace {

double pairwise_sum(const double* v, std::size_t n) {
  if (n <= 16) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += v[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(v, half) + pairwise_sum(v + half, n - half);
}

long steps_for(double horizon, double dt) {
  return std::max(1L, static_cast<long>(std::ceil(horizon / dt - 1e-9)));
}

// Calls fn(p) for every path index, in blocks spread over the workers.
template <typename Fn>
void for_paths(long n, int threads, Fn&& fn) {
  constexpr long kBlock = 64;
  const long blocks = (n + kBlock - 1) / kBlock;
  parallel_for(static_cast<std::size_t>(blocks), threads, [&](std::size_t b) {
    const long begin = static_cast<long>(b) * kBlock;
    const long end = std::min(n, begin + kBlock);
    for (long p = begin; p < end; ++p) fn(p);
  });
}

bool is_constant(const ShearProfile& u) { return u.kind() == ProfileKind::Constant; }

}  // namespace

MCEstimate summarize(const std::vector<double>& values, std::uint64_t seed, double dt) {
  MCEstimate e;
  e.n = static_cast<long>(values.size());
  e.seed = seed;
  e.dt = dt;
  if (values.empty()) return e;
  e.mean = pairwise_sum(values.data(), values.size()) / static_cast<double>(values.size());
  if (values.size() > 1) {
    std::vector<double> sq(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) sq[i] = (values[i] - e.mean) * (values[i] - e.mean);
    const double var = pairwise_sum(sq.data(), sq.size()) / static_cast<double>(values.size() - 1);
    e.stderr_ = std::sqrt(var / static_cast<double>(values.size()));
  }
  return e;
}

std::vector<double> path_integrals(const ShearProfile& u, double y, double S, const PathEnsembleConfig& cfg) {
  cfg.validate();
  std::vector<double> out(static_cast<std::size_t>(cfg.n_paths));
  if (is_constant(u)) {
    std::fill(out.begin(), out.end(), u(y) * S);
    return out;
  }
  const long N = steps_for(S, cfg.dt);
  const double h = S / static_cast<double>(N);
  const double sq = std::sqrt(h);
  for_paths(cfg.n_paths, cfg.threads, [&](long p) {
    PathNormals z(cfg.seed, static_cast<std::uint64_t>(p));
    double w = y, g0 = u(w), acc = 0.0;
    for (long k = 0; k < N; ++k) {
      w += sq * z(static_cast<std::uint64_t>(k));
      const double g1 = u(w);
      acc += 0.5 * (g0 + g1);
      g0 = g1;
    }
    out[static_cast<std::size_t>(p)] = acc * h;
  });
  return out;
}

std::vector<MCEstimate> estimate_psi_mc_batch(double t, const std::vector<double>& xs, double y, double A,
                                              double L, const ShearProfile& u, const PhysParams& params,
                                              const PathEnsembleConfig& cfg) {
  if (!(t > 0.0)) throw std::invalid_argument("estimate_psi_mc needs t > 0");
  cfg.validate();
  const double S = 2.0 * params.kappa * t;
  std::vector<double> integrals;
  if (A != 0.0) integrals = path_integrals(u, y, S, cfg);
  std::vector<MCEstimate> out;
  std::vector<double> hits(static_cast<std::size_t>(cfg.n_paths));
  for (double x : xs) {
    for (std::size_t p = 0; p < hits.size(); ++p) {
      const double X = A == 0.0 ? x : x - A / (2.0 * params.kappa) * integrals[p];
      hits[p] = std::abs(X) <= L ? 1.0 : 0.0;
    }
    out.push_back(summarize(hits, cfg.seed, cfg.dt));
  }
  return out;
}

MCEstimate estimate_psi_mc(double t, double x, double y, double A, double L, const ShearProfile& u,
                           const PhysParams& params, const PathEnsembleConfig& cfg) {
  return estimate_psi_mc_batch(t, {x}, y, A, L, u, params, cfg).front();
}

MCEstimate estimate_plateau_occupancy(double y0, double lo, double hi, double t,
                                      const PathEnsembleConfig& cfg) {
  if (!(t > 0.0)) throw std::invalid_argument("estimate_plateau_occupancy needs t > 0");
  if (!(hi > lo)) throw std::invalid_argument("plateau interval must have hi > lo");
  cfg.validate();
  std::vector<double> weight(static_cast<std::size_t>(cfg.n_paths), 0.0);
  if (y0 > lo && y0 < hi) {
    const long N = steps_for(t, std::min(cfg.dt, t));
    const double h = t / static_cast<double>(N);
    const double sq = std::sqrt(h);
    for_paths(cfg.n_paths, cfg.threads, [&](long p) {
      PathNormals z(cfg.seed, static_cast<std::uint64_t>(p));
      double w0 = y0, s = 1.0;
      for (long k = 0; k < N; ++k) {
        const double w1 = w0 + sq * z(static_cast<std::uint64_t>(k));
        if (w1 <= lo || w1 >= hi) {
          s = 0.0;
          break;
        }
        // Bridge crossing probabilities of each endpoint within the step.
        s *= (1.0 - std::exp(-2.0 * (w0 - lo) * (w1 - lo) / h)) *
             (1.0 - std::exp(-2.0 * (hi - w0) * (hi - w1) / h));
        w0 = w1;
      }
      weight[static_cast<std::size_t>(p)] = s;
    });
  }
  return summarize(weight, cfg.seed, cfg.dt);
}

Eigen::ArrayXXd anticoncentration_grid(double t, double y, const std::vector<double>& as,
                                       const std::vector<double>& epss, const ShearProfile& u,
                                       const PathEnsembleConfig& cfg) {
  if (!(t > 0.0)) throw std::invalid_argument("anti-concentration needs t > 0");
  for (double e : epss) {
    if (!(e >= 0.0)) throw std::invalid_argument("anti-concentration needs eps >= 0");
  }
  const std::vector<double> I = path_integrals(u, y, t, cfg);
  Eigen::ArrayXXd out(static_cast<Eigen::Index>(as.size()), static_cast<Eigen::Index>(epss.size()));
  for (std::size_t i = 0; i < as.size(); ++i) {
    for (std::size_t k = 0; k < epss.size(); ++k) {
      const double a = as[i], b = as[i] + epss[k];
      const auto hits = std::count_if(I.begin(), I.end(), [&](double v) { return v >= a && v <= b; });
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          static_cast<double>(hits) / static_cast<double>(I.size());
    }
  }
  return out;
}

MCEstimate estimate_anticoncentration(double t, double y, double a, double eps, const ShearProfile& u,
                                      const PathEnsembleConfig& cfg) {
  const double p = anticoncentration_grid(t, y, {a}, {eps}, u, cfg)(0, 0);
  MCEstimate e;
  e.mean = p;
  e.n = cfg.n_paths;
  e.seed = cfg.seed;
  e.dt = cfg.dt;
  e.stderr_ = std::sqrt(p * (1.0 - p) / static_cast<double>(std::max(1L, cfg.n_paths - 1)));
  return e;
}

namespace {

// 4-point Gauss-Legendre on [0, 1].
constexpr double kGx[4] = {0.0694318442029737, 0.3300094782075719, 0.6699905217924281, 0.9305681557970263};
constexpr double kGw[4] = {0.1739274225687269, 0.3260725774312731, 0.3260725774312731, 0.1739274225687269};

double hermite_eval(const Eigen::ArrayXd& f, const Eigen::ArrayXd& df, double h, double y) {
  const int n = static_cast<int>(f.size());
  const double dy = h / n;
  double s = std::fmod(y, h);
  if (s < 0.0) s += h;
  const double pos = s / dy;
  int i = static_cast<int>(pos);
  if (i >= n) i = n - 1;
  const double t = pos - i;
  const int j = i + 1 == n ? 0 : i + 1;
  const double t2 = t * t, t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * f(i) + (t3 - 2 * t2 + t) * dy * df(i) + (-2 * t3 + 3 * t2) * f(j) +
         (t3 - t2) * dy * df(j);
}

}  // namespace

double Antiderivatives::v(double y) const { return hermite_eval(v_nodes, u_nodes, h, y); }
double Antiderivatives::z(double y) const { return hermite_eval(z_nodes, v_nodes, h, y); }
double Antiderivatives::sigma2() const { return v_nodes.square().mean(); }

Antiderivatives build_antiderivatives(const ShearProfile& u, int n) {
  if (n < 16) throw std::invalid_argument("build_antiderivatives needs n >= 16");
  const double umax = u.max_abs();
  if (std::abs(u.mean()) > 1e-10 * std::max(umax, 1e-300) && umax > 0.0) {
    throw std::invalid_argument("build_antiderivatives needs a mean-zero profile");
  }
  Antiderivatives ad;
  ad.h = u.period();
  ad.n = n;
  const double dy = ad.h / n;
  ad.u_nodes.resize(n);
  Eigen::ArrayXd cell(n), moment(n);  // integral of u and of (y_{k+1} - r) u(r) over cell k
  for (int k = 0; k < n; ++k) {
    ad.u_nodes(k) = u(k * dy);
    double c = 0.0, m = 0.0;
    for (int q = 0; q < 4; ++q) {
      const double uq = u((k + kGx[q]) * dy);
      c += kGw[q] * uq;
      m += kGw[q] * (1.0 - kGx[q]) * uq;
    }
    cell(k) = c * dy;
    moment(k) = m * dy * dy;
  }
  // V(y) = integral_0^y u; its period mean uses the cell moments exactly.
  Eigen::ArrayXd V(n + 1);
  V(0) = 0.0;
  for (int k = 0; k < n; ++k) V(k + 1) = V(k) + cell(k);
  double meanV = 0.0;
  for (int k = 0; k < n; ++k) meanV += dy * V(k) + moment(k);
  meanV /= ad.h;
  ad.v_nodes = V.head(n) - meanV;
  Eigen::ArrayXd Z(n + 1);
  Z(0) = 0.0;
  for (int k = 0; k < n; ++k) Z(k + 1) = Z(k) + dy * ad.v_nodes(k) + moment(k);
  ad.z_nodes = Z.head(n);
  const double vmax = ad.v_nodes.abs().maxCoeff();
  ad.c = ad.z_nodes.abs().maxCoeff();
  ad.v_defect = vmax > 0.0 ? std::abs(V(n) - V(0)) / vmax : 0.0;
  ad.z_defect = ad.c > 0.0 ? std::abs(Z(n) - Z(0)) / ad.c : 0.0;
  if (ad.v_defect > 1e-10 || ad.z_defect > 1e-10) {
    throw std::runtime_error("antiderivative periodicity defect above 1e-10");
  }
  return ad;
}

BrownianPath BrownianPath::coarsen(int factor) const {
  if (factor < 1 || (w.size() - 1) % static_cast<std::size_t>(factor) != 0) {
    throw std::invalid_argument("coarsening factor must divide the step count");
  }
  BrownianPath out;
  out.dt = dt * factor;
  for (std::size_t k = 0; k < w.size(); k += static_cast<std::size_t>(factor)) out.w.push_back(w[k]);
  return out;
}

BrownianPath sample_path(double y, double horizon, double dt, std::uint64_t seed, std::uint64_t path) {
  if (!(horizon > 0.0) || !(dt > 0.0)) throw std::invalid_argument("sample_path needs horizon, dt > 0");
  const long N = steps_for(horizon, dt);
  BrownianPath bp;
  bp.dt = horizon / static_cast<double>(N);
  const double sq = std::sqrt(bp.dt);
  bp.w.resize(static_cast<std::size_t>(N + 1));
  bp.w[0] = y;
  PathNormals z(seed, path);
  for (long k = 0; k < N; ++k) {
    bp.w[static_cast<std::size_t>(k + 1)] = bp.w[static_cast<std::size_t>(k)] + sq * z(static_cast<std::uint64_t>(k));
  }
  return bp;
}

ItoResidual ito_residual(double alpha, const BrownianPath& path, const ShearProfile& u,
                         const Antiderivatives& ad) {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be > 0");
  ItoResidual r;
  double riemann = 0.0, ito = 0.0;
  const std::size_t N = path.w.size() - 1;
  for (std::size_t k = 0; k < N; ++k) {
    const double vk = ad.v(path.w[k]);
    riemann += u(path.w[k]);
    ito += vk * (path.w[k + 1] - path.w[k]);
    r.max_abs_v = std::max(r.max_abs_v, std::abs(vk));
  }
  r.max_abs_v = std::max(r.max_abs_v, std::abs(ad.v(path.w[N])));
  r.lhs = riemann * path.dt / alpha;
  r.rhs = 2.0 / alpha * (ad.z(path.w[N]) - ad.z(path.w[0])) - 2.0 / alpha * ito;
  r.residual = r.lhs - r.rhs;
  return r;
}

CltReport martingale_clt_sample(double y, double alpha, const ShearProfile& u, const PathEnsembleConfig& cfg,
                                double alpha_min) {
  if (alpha < alpha_min) throw std::invalid_argument("martingale_clt_sample needs alpha >= alpha_min");
  cfg.validate();
  CltReport rep;
  const Antiderivatives ad = build_antiderivatives(u);
  rep.sigma2 = ad.sigma2();
  rep.samples.assign(static_cast<std::size_t>(cfg.n_paths), 0.0);
  if (rep.sigma2 == 0.0) {
    rep.degenerate = true;
    rep.note = "v is identically zero; all samples vanish and the normality test is skipped";
    return rep;
  }
  const double S = alpha * alpha;
  const long N = steps_for(S, cfg.dt);
  const double h = S / static_cast<double>(N);
  const double sq = std::sqrt(h);
  for_paths(cfg.n_paths, cfg.threads, [&](long p) {
    PathNormals z(cfg.seed, static_cast<std::uint64_t>(p));
    double w = y, acc = 0.0;
    for (long k = 0; k < N; ++k) {
      const double dw = sq * z(static_cast<std::uint64_t>(k));
      acc += ad.v(w) * dw;
      w += dw;
    }
    rep.samples[static_cast<std::size_t>(p)] = acc / alpha;
  });
  rep.ks = ks_distance_normal(rep.samples, 0.0, std::sqrt(rep.sigma2));
  const Moments m = moments(rep.samples);
  rep.sample_var = m.sd * m.sd;
  return rep;
}

std::string estimate_json(const std::string& op, const std::string& inputs_json, const MCEstimate& e) {
  nlohmann::json j = {{"op", op},
                      {"inputs", nlohmann::json::parse(inputs_json)},
                      {"mean", e.mean},
                      {"stderr", e.stderr_},
                      {"n", e.n},
                      {"seed", e.seed},
                      {"dt", e.dt}};
  return j.dump();
}

std::string samples_csv(const std::string& column, const std::vector<double>& samples) {
  std::ostringstream out;
  out << std::setprecision(17) << column << '\n';
  for (double s : samples) out << s << '\n';
  return out.str();
}

}  // namespace shearq
