#include "shearq/profiles.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace shearq {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double param_or(const std::map<std::string, double>& p, const std::string& key, double fallback) {
  auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}

double hermite(double s, double a, double b, double ya, double ma, double yb, double mb) {
  const double w = b - a;
  const double t = (s - a) / w;
  const double t2 = t * t;
  const double t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * ya + (t3 - 2 * t2 + t) * w * ma + (-2 * t3 + 3 * t2) * yb +
         (t3 - t2) * w * mb;
}

double wrap(double s, double period) {
  double r = std::fmod(s, period);
  if (r < 0.0) r += period;
  return r;
}

// Composite 8-point Gauss-Legendre on [a, b].
template <typename F>
double integrate(F&& g, double a, double b, int pieces) {
  static constexpr double x[4] = {0.1834346424956498, 0.5255324099163290, 0.7966664774136267,
                                  0.9602898564975363};
  static constexpr double w[4] = {0.3626837833783620, 0.3137066458778873, 0.2223810344533745,
                                  0.1012285362903763};
  if (b <= a) return 0.0;
  const double width = (b - a) / pieces;
  double total = 0.0;
  for (int k = 0; k < pieces; ++k) {
    const double mid = a + (k + 0.5) * width;
    const double half = 0.5 * width;
    double s = 0.0;
    for (int i = 0; i < 4; ++i) s += w[i] * (g(mid - half * x[i]) + g(mid + half * x[i]));
    total += s * half;
  }
  return total;
}

}  // namespace

std::string ShearProfile::kind_name() const {
  switch (kind_) {
    case ProfileKind::Sine: return "sine";
    case ProfileKind::Constant: return "constant";
    case ProfileKind::SineWithPlateau: return "sine-with-plateau";
    case ProfileKind::Sawtooth: return "sawtooth";
    case ProfileKind::Sampled: return "sampled";
  }
  return "unknown";
}

double ShearProfile::base(double s) const {
  s = wrap(s, base_period_);
  switch (kind_) {
    case ProfileKind::Sine:
      return param_or(params_, "amplitude", 1.0) * std::sin(kTwoPi * s / base_period_);
    case ProfileKind::Constant:
      return param_or(params_, "c", 0.0);
    case ProfileKind::SineWithPlateau: {
      const double k = kTwoPi / inner_period_;
      auto sn = [&](double t) { return std::sin(k * t); };
      auto ds = [&](double t) { return k * std::cos(k * t); };
      const double a = plat_start_;
      const double b = plat_start_ + plat_len_;
      if (s < a - blend_) return sn(s);
      if (s < a) return hermite(s, a - blend_, a, sn(a - blend_), ds(a - blend_), sn(a), 0.0);
      if (s <= b) return sn(a);
      if (s < b + blend_) {
        return hermite(s - plat_len_, a, a + blend_, sn(a), 0.0, sn(a + blend_), ds(a + blend_));
      }
      return sn(s - plat_len_);
    }
    case ProfileKind::Sawtooth: {
      const double rise = base_period_ - blend_;
      const double m = 2.0 / rise;
      if (s <= rise) return -1.0 + m * s;
      return hermite(s, rise, base_period_, 1.0, m, -1.0, m);
    }
    case ProfileKind::Sampled: {
      const int n = static_cast<int>(samples_.size());
      const double ds = base_period_ / n;
      const double pos = s / ds;
      int i = static_cast<int>(std::floor(pos));
      const double t = pos - i;
      i %= n;
      auto at = [&](int j) { return samples_[static_cast<std::size_t>(((j % n) + n) % n)]; };
      const double p0 = at(i - 1), p1 = at(i), p2 = at(i + 1), p3 = at(i + 2);
      // Periodic Catmull-Rom: C1, and its period integral equals the trapezoid sum.
      return p1 + 0.5 * t *
                      (p2 - p0 +
                       t * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + t * (3.0 * (p1 - p2) + p3 - p0)));
    }
  }
  return 0.0;
}

double ShearProfile::operator()(double y) const { return base(alpha_ * y) - offset_; }

void ShearProfile::finish() {
  max_abs_ = 0.0;
  if (kind_ == ProfileKind::Sampled) {
    for (double v : samples_) max_abs_ = std::max(max_abs_, std::abs(v - offset_));
  }
  const int n = 8192;
  for (int j = 0; j < n; ++j) {
    max_abs_ = std::max(max_abs_, std::abs(base(base_period_ * j / n) - offset_));
  }
}

std::vector<Plateau> ShearProfile::plateaus() const {
  std::vector<Plateau> out;
  out.reserve(base_plateaus_.size());
  for (const auto& p : base_plateaus_) out.push_back({p.start / alpha_, p.length / alpha_});
  return out;
}

std::vector<double> ShearProfile::sample(int n) const {
  std::vector<double> out(static_cast<std::size_t>(n));
  const double dy = period() / n;
  for (int j = 0; j < n; ++j) out[static_cast<std::size_t>(j)] = (*this)(j * dy);
  return out;
}

double ShearProfile::mean() const {
  double base_mean = 0.0;
  switch (kind_) {
    case ProfileKind::Sine:
      base_mean = 0.0;
      break;
    case ProfileKind::Constant:
      base_mean = param_or(params_, "c", 0.0);
      break;
    case ProfileKind::Sampled: {
      double s = 0.0;
      for (double v : samples_) s += v;
      base_mean = s / static_cast<double>(samples_.size());
      break;
    }
    case ProfileKind::SineWithPlateau:
    case ProfileKind::Sawtooth: {
      std::vector<double> cuts = {0.0, base_period_};
      if (kind_ == ProfileKind::SineWithPlateau) {
        const double a = plat_start_, b = plat_start_ + plat_len_;
        cuts.insert(cuts.end(), {a - blend_, a, b, b + blend_});
      } else {
        cuts.push_back(base_period_ - blend_);
      }
      std::sort(cuts.begin(), cuts.end());
      double total = 0.0;
      auto g = [&](double s) { return base(s); };
      for (std::size_t i = 0; i + 1 < cuts.size(); ++i) total += integrate(g, cuts[i], cuts[i + 1], 64);
      base_mean = total / base_period_;
      break;
    }
  }
  return base_mean - offset_;
}

ShearProfile make_profile(const std::string& kind, const std::map<std::string, double>& params,
                          double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw std::invalid_argument("profile period h must be > 0");
  ShearProfile p;
  p.params_ = params;
  p.base_period_ = h;
  if (kind == "sine") {
    p.kind_ = ProfileKind::Sine;
    p.smoothness_ = Smoothness::Cn;
  } else if (kind == "constant") {
    p.kind_ = ProfileKind::Constant;
    p.smoothness_ = Smoothness::Cn;
    p.base_plateaus_.push_back({0.0, h});
  } else if (kind == "sine-with-plateau") {
    p.kind_ = ProfileKind::SineWithPlateau;
    p.smoothness_ = Smoothness::C1;
    const double len = param_or(params, "plateau_length", -1.0);
    if (!(len > 0.0) || len >= h) {
      throw std::invalid_argument("sine-with-plateau needs 0 < plateau_length < h");
    }
    p.plat_len_ = len;
    p.inner_period_ = h - len;
    p.blend_ = param_or(params, "blend", h / 50.0);
    p.plat_start_ = param_or(params, "plateau_position", 0.25 * p.inner_period_);
    if (!(p.blend_ > 0.0) || p.plat_start_ - p.blend_ < 0.0 ||
        p.plat_start_ + p.blend_ > p.inner_period_) {
      throw std::invalid_argument("sine-with-plateau: plateau_position +- blend must stay inside the sine period");
    }
    p.base_plateaus_.push_back({p.plat_start_, len});
  } else if (kind == "sawtooth") {
    p.kind_ = ProfileKind::Sawtooth;
    p.smoothness_ = Smoothness::C1;
    p.blend_ = param_or(params, "smoothing", h / 10.0);
    if (!(p.blend_ > 0.0 && p.blend_ < h)) throw std::invalid_argument("sawtooth smoothing must lie in (0, h)");
  } else {
    throw std::invalid_argument("unknown profile kind '" + kind + "'");
  }
  p.finish();
  return p;
}

ShearProfile make_sampled_profile(std::vector<double> samples, double h, Smoothness claimed,
                                  double plateau_tol) {
  if (samples.size() < 4) throw std::invalid_argument("sampled profile needs at least 4 samples");
  if (!(h > 0.0)) throw std::invalid_argument("profile period h must be > 0");
  ShearProfile p;
  p.kind_ = ProfileKind::Sampled;
  p.smoothness_ = claimed;
  p.base_period_ = h;
  p.samples_ = std::move(samples);
  p.finish();
  const double tol = plateau_tol > 0.0 ? plateau_tol : 1e-9 * p.max_abs_;
  p.base_plateaus_ =
      detect_plateaus(p.samples_, h / static_cast<double>(p.samples_.size()), tol);
  return p;
}

ShearProfile load_profile_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open profile CSV '" + path + "'");
  std::vector<double> ys, us;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    double y, u;
    if (!(ss >> y >> u)) continue;  // header or comment
    ys.push_back(y);
    us.push_back(u);
  }
  if (ys.size() < 4) throw std::runtime_error("profile CSV '" + path + "' has fewer than 4 rows");
  const double dy = ys[1] - ys[0];
  for (std::size_t i = 1; i < ys.size(); ++i) {
    if (std::abs((ys[i] - ys[i - 1]) - dy) > 1e-9 * std::max(1.0, std::abs(dy) * ys.size())) {
      throw std::runtime_error("profile CSV '" + path + "' must use a uniform y grid");
    }
  }
  return make_sampled_profile(std::move(us), dy * static_cast<double>(ys.size()));
}

ShearProfile normalize_mean_zero(const ShearProfile& p) {
  ShearProfile q = p;
  q.offset_ += q.mean();
  q.finish();
  return q;
}

ShearProfile scale_profile(const ShearProfile& p, double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw std::invalid_argument("scale factor alpha must be > 0");
  ShearProfile q = p;
  q.alpha_ *= alpha;
  return q;
}

std::vector<Plateau> detect_plateaus(const std::vector<double>& s, double dy, double tol) {
  const int n = static_cast<int>(s.size());
  std::vector<Plateau> out;
  if (n == 0) return out;
  const auto [lo, hi] = std::minmax_element(s.begin(), s.end());
  if (*hi - *lo <= tol) {
    out.push_back({0.0, n * dy});
    return out;
  }
  // Start the circular scan right after the steepest jump so no run straddles it.
  int start = 0;
  double biggest = -1.0;
  for (int i = 0; i < n; ++i) {
    const double d = std::abs(s[static_cast<std::size_t>(i)] - s[static_cast<std::size_t>((i + n - 1) % n)]);
    if (d > biggest) {
      biggest = d;
      start = i;
    }
  }
  auto at = [&](int k) { return s[static_cast<std::size_t>((start + k) % n)]; };
  int run_begin = 0;
  double mn = at(0), mx = at(0);
  auto close = [&](int run_end) {  // samples [run_begin, run_end)
    const int count = run_end - run_begin;
    if (count >= 2) out.push_back({((start + run_begin) % n) * dy, (count - 1) * dy});
  };
  for (int k = 1; k < n; ++k) {
    const double v = at(k);
    const double nmn = std::min(mn, v), nmx = std::max(mx, v);
    if (nmx - nmn <= tol) {
      mn = nmn;
      mx = nmx;
      continue;
    }
    close(k);
    run_begin = k;
    mn = mx = v;
  }
  close(n);
  std::sort(out.begin(), out.end(), [](const Plateau& a, const Plateau& b) { return a.start < b.start; });
  return out;
}

double longest_plateau(const ShearProfile& p, double tol) {
  std::vector<Plateau> plats;
  if (p.kind_ == ProfileKind::Sampled && tol > 0.0) {
    plats = detect_plateaus(p.samples_, p.base_period_ / static_cast<double>(p.samples_.size()), tol);
    for (auto& q : plats) q.length /= p.alpha_;
  } else {
    plats = p.plateaus();
  }
  double best = 0.0;
  for (const auto& q : plats) best = std::max(best, q.length);
  return best;
}

}  // namespace shearq
