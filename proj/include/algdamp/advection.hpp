#pragma once
// Exact evolution of observable expectations under free advection:
// <A>(t) = P * int w(J) A(mu(J) t) dJ evaluated by the midpoint rule.
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <list>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

#include "action_fields.hpp"
#include "errors.hpp"
#include "numeric.hpp"
#include "parallel.hpp"

namespace algdamp {

enum class EvalMethod { Auto, Direct, Separable, Binned };

inline std::string_view to_string(EvalMethod m) {
  switch (m) {
    case EvalMethod::Auto: return "auto";
    case EvalMethod::Direct: return "direct";
    case EvalMethod::Separable: return "separable";
    case EvalMethod::Binned: return "binned";
  }
  return "?";
}

inline EvalMethod parse_eval_method(std::string_view s) {
  if (s == "auto") return EvalMethod::Auto;
  if (s == "direct") return EvalMethod::Direct;
  if (s == "separable") return EvalMethod::Separable;
  if (s == "binned") return EvalMethod::Binned;
  throw ConfigError("unknown quadrature method '" + std::string(s) + "'");
}

inline constexpr int kMinBins = 1 << 8;
inline constexpr int kMaxBins = 1 << 14;
// one-dimensional sums make much finer grids affordable for product phases
inline constexpr int kMaxSeparableBins = 1 << 18;

struct QuadratureConfig {
  ActionDomain domain = ActionDomain::quadrant(10.0, 4096);
  bool pairwise = true;
  unsigned threads = 0;  // 0: default_threads()
  EvalMethod method = EvalMethod::Auto;
  int histogram_bins = 0;  // binned method; 0 picks from the time span

  static QuadratureConfig defaults(const FrequencyModel& m, int bins = 4096) {
    QuadratureConfig q;
    q.domain = m.default_domain(bins);
    return q;
  }

  unsigned workers() const { return threads == 0 ? default_threads() : threads; }

  EvalMethod resolved(const FrequencyModel& m) const {
    if (method != EvalMethod::Auto) return method;
    if (m.separable()) return EvalMethod::Separable;
    return EvalMethod::Binned;
  }

  void validate(const FrequencyModel& m) const {
    const int n = domain.bins_per_dim();
    const EvalMethod em = resolved(m);
    if (em == EvalMethod::Separable && !m.separable())
      throw ConfigError("separable quadrature requested for a non-separable model");
    const int hi = em == EvalMethod::Separable ? kMaxSeparableBins : kMaxBins;
    if (n < kMinBins || n > hi)
      throw ConfigError("bins_per_dim " + std::to_string(n) + " outside [" + std::to_string(kMinBins) + ", " +
                        std::to_string(hi) + "]");
    if (histogram_bins < 0) throw ConfigError("histogram_bins must be non-negative");
  }
};

struct TimeSeries {
  double t0 = 0.0;
  double dt = 1.0;
  std::vector<double> values;
  std::string model;
  std::string observable;
  std::vector<bool> under_resolved;  // per sample, empty when unknown
  double t_max = std::numeric_limits<double>::infinity();
  int bins_per_dim = 0;
  std::string method;

  std::size_t size() const { return values.size(); }
  double t(std::size_t i) const { return t0 + dt * static_cast<double>(i); }
  double t_end() const { return values.empty() ? t0 : t(values.size() - 1); }

  void validate() const {
    if (!(dt > 0) || !std::isfinite(dt)) throw DomainError("TimeSeries: dt must be positive");
    if (values.size() < 2) throw InsufficientData("TimeSeries: need at least two samples");
    if (!std::isfinite(t0)) throw DomainError("TimeSeries: t0 must be finite");
  }

  std::size_t under_resolved_count() const {
    return static_cast<std::size_t>(std::count(under_resolved.begin(), under_resolved.end(), true));
  }
};

inline std::string observable_name(const Observable& o) {
  return std::string(to_string(o.parity)) + "(" + std::to_string(o.n.m1) + "," + std::to_string(o.n.m2) + ")";
}

// Largest phase gradient component over a sampling of the grid (node points).
inline double max_phase_gradient(const FrequencyModel& model, Mode m, const ActionDomain& dom) {
  const int n = dom.bins_per_dim();
  const int step = std::max(1, n / 512);
  double g = 0.0;
  auto probe = [&](int i, int j) {
    const Vec2 d = grad_mu(model, m, {dom.node1(i), dom.node2(j)});
    g = std::max({g, std::abs(d.x), std::abs(d.y)});
  };
  for (int i = 0; i < n; i += step)
    for (int j = 0; j < n; j += step) probe(i, j);
  for (int i = 0; i < n; i += step) {
    probe(i, 0);
    probe(i, n - 1);
    probe(0, i);
    probe(n - 1, i);
  }
  probe(n - 1, n - 1);
  return g;
}

// Times beyond bins / (cutoff * max|grad mu|) put more than a radian of phase
// into a single cell.
inline double aliasing_time_limit(const FrequencyModel& model, Mode m, const ActionDomain& dom) {
  const double g = max_phase_gradient(model, m, dom);
  if (g == 0.0) return std::numeric_limits<double>::infinity();
  return dom.bins_per_dim() / (dom.cutoff_extent() * g);
}

// Grid data for one (model, perturbation, observable mode, quadrature).
class PhaseField {
 public:
  PhaseField(const FrequencyModel& model, const PerturbationSpec& spec, Mode mode, const QuadratureConfig& quad,
             double t_span = 0.0)
      : method_(quad.resolved(model)), prefactor_(expectation_prefactor(spec)) {
    validate(spec);
    quad.validate(model);
    if (!supports(spec, mode)) throw ConfigError("observable mode not supported by the perturbation");
    if (std::holds_alternative<IsochroneCosCos>(spec) && model.kind() != ModelKind::Isochrone)
      throw ConfigError("isochrone perturbation requires the isochrone model");
    if (std::holds_alternative<ToyFactorized>(spec) && model.kind() == ModelKind::Isochrone)
      throw ConfigError("toy perturbation requires a toy model");
    const ActionDomain& dom = quad.domain;
    const int n = dom.bins_per_dim();
    t_max_ = aliasing_time_limit(model, mode, dom);
    const unsigned workers = quad.workers();
    switch (method_) {
      case EvalMethod::Separable: {
        const auto& toy = std::get<ToyFactorized>(spec);
        for (int axis = 1; axis <= 2; ++axis) {
          auto& p = axis == 1 ? p1_ : p2_;
          auto& w = axis == 1 ? w1_ : w2_;
          p.resize(n);
          w.resize(n);
          const double h = axis == 1 ? dom.h1() : dom.h2();
          for (int i = 0; i < n; ++i) {
            const double u = axis == 1 ? dom.node1(i) : dom.node2(i);
            p[i] = model.phase_part(mode, axis, u);
            w[i] = toy_weight_factor(toy, axis, u) * h;
          }
        }
        break;
      }
      case EvalMethod::Direct: {
        n_ = n;
        mu_.resize(std::size_t(n) * n);
        w_.resize(std::size_t(n) * n);
        const double area = dom.cell_area();
        parallel_for(std::size_t(n), workers, [&](std::size_t i) {
          for (int j = 0; j < n; ++j) {
            const Action a{dom.node1(int(i)), dom.node2(j)};
            mu_[i * n + j] = mu(model, mode, a);
            w_[i * n + j] = expectation_weight(spec, model, a) * area;
          }
        });
        break;
      }
      case EvalMethod::Binned: build_histogram(model, spec, mode, quad, t_span);
      case EvalMethod::Auto: break;
    }
  }

  EvalMethod method() const { return method_; }
  double t_max() const { return t_max_; }
  int histogram_size() const { return static_cast<int>(rho_.size()); }

  // int w(J) exp(i mu(J) t) dJ without the prefactor.
  cplx transform(double t, unsigned workers = 1) const {
    switch (method_) {
      case EvalMethod::Separable: return axis_sum(p1_, w1_, t) * axis_sum(p2_, w2_, t);
      case EvalMethod::Direct: return direct_sum(t, workers);
      case EvalMethod::Binned: return histogram_sum(t);
      case EvalMethod::Auto: break;
    }
    return {};
  }

  double evaluate(Parity parity, double t, unsigned workers = 1) const {
    if (t == 0.0 && parity == Parity::Sin) return 0.0;
    const cplx s = transform(t, workers);
    return prefactor_ * (parity == Parity::Cos ? s.real() : s.imag());
  }

 private:
  static cplx axis_sum(const std::vector<double>& p, const std::vector<double>& w, double t) {
    CompensatedComplexSum s;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (w[i] == 0.0) continue;
      const double ph = p[i] * t;
      s.add(w[i] * cplx(std::cos(ph), std::sin(ph)));
    }
    return s.value();
  }

  cplx direct_sum(double t, unsigned workers) const {
    std::vector<cplx> rows(n_);
    parallel_for(std::size_t(n_), workers, [&](std::size_t i) {
      CompensatedComplexSum s;
      const double* m = &mu_[i * n_];
      const double* w = &w_[i * n_];
      for (int j = 0; j < n_; ++j) {
        if (w[j] == 0.0) continue;
        const double ph = m[j] * t;
        s.add(w[j] * cplx(std::cos(ph), std::sin(ph)));
      }
      rows[i] = s.value();
    });
    return pairwise_sum(std::span<const cplx>(rows));
  }

  // CIC deposit of (mu, w * area) onto a uniform frequency grid. Rows are
  // evaluated concurrently in chunks and deposited in row order.
  void build_histogram(const FrequencyModel& model, const PerturbationSpec& spec, Mode mode,
                       const QuadratureConfig& quad, double t_span) {
    const ActionDomain& dom = quad.domain;
    const int n = dom.bins_per_dim();
    const unsigned workers = quad.workers();
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    {
      std::vector<double> rlo(n), rhi(n);
      parallel_for(std::size_t(n), workers, [&](std::size_t i) {
        double a = std::numeric_limits<double>::infinity(), b = -a;
        for (int j = 0; j < n; ++j) {
          const double v = mu(model, mode, {dom.node1(int(i)), dom.node2(j)});
          a = std::min(a, v);
          b = std::max(b, v);
        }
        rlo[i] = a;
        rhi[i] = b;
      });
      lo = *std::min_element(rlo.begin(), rlo.end());
      hi = *std::max_element(rhi.begin(), rhi.end());
    }
    int k = quad.histogram_bins;
    if (k == 0) {
      // keep the interpolation phase error dx * t below 2e-3 rad
      const double want = (hi - lo) * std::max(t_span, 1.0) / 2e-3;
      k = 1 << 10;
      while (k < want && k < (1 << 23)) k <<= 1;
    }
    const double span = std::max(hi - lo, 1e-300);
    dx_ = span / k;
    x0_ = lo - dx_;
    rho_.assign(std::size_t(k) + 3, 0.0);
    const double area = dom.cell_area();
    constexpr int chunk = 64;
    std::vector<double> mus(std::size_t(chunk) * n), ws(std::size_t(chunk) * n);
    for (int r0 = 0; r0 < n; r0 += chunk) {
      const int rows = std::min(chunk, n - r0);
      parallel_for(std::size_t(rows), workers, [&](std::size_t r) {
        const int i = r0 + int(r);
        for (int j = 0; j < n; ++j) {
          const Action a{dom.node1(i), dom.node2(j)};
          mus[r * n + j] = mu(model, mode, a);
          ws[r * n + j] = expectation_weight(spec, model, a) * area;
        }
      });
      for (std::size_t q = 0; q < std::size_t(rows) * n; ++q) {
        const double pos = (mus[q] - x0_) / dx_;
        const auto j = static_cast<std::size_t>(pos);
        const double f = pos - double(j);
        rho_[j] += ws[q] * (1.0 - f);
        rho_[j + 1] += ws[q] * f;
      }
    }
  }

  cplx histogram_sum(double t) const {
    constexpr std::size_t block = 256;
    const std::size_t k = rho_.size();
    std::vector<cplx> parts((k + block - 1) / block);
    const cplx step(std::cos(dx_ * t), std::sin(dx_ * t));
    for (std::size_t b = 0; b < parts.size(); ++b) {
      const std::size_t j0 = b * block, j1 = std::min(k, j0 + block);
      const double ph = (x0_ + dx_ * double(j0)) * t;
      cplx e(std::cos(ph), std::sin(ph));
      double re = 0.0, im = 0.0;
      for (std::size_t j = j0; j < j1; ++j) {
        re += rho_[j] * e.real();
        im += rho_[j] * e.imag();
        e *= step;
      }
      parts[b] = {re, im};
    }
    return pairwise_sum(std::span<const cplx>(parts));
  }

  EvalMethod method_;
  double prefactor_ = 1.0;
  double t_max_ = std::numeric_limits<double>::infinity();
  std::vector<double> p1_, w1_, p2_, w2_;
  int n_ = 0;
  std::vector<double> mu_, w_;
  double x0_ = 0.0, dx_ = 1.0;
  std::vector<double> rho_;
};

namespace detail {

inline std::string phase_key(const FrequencyModel& model, const PerturbationSpec& spec, Mode mode,
                             const QuadratureConfig& q, double t_span) {
  std::ostringstream os;
  os.precision(17);
  os << model.name();
  if (auto* iso = model.isochrone()) os << ':' << iso->G << ',' << iso->M << ',' << iso->b;
  if (auto* t = std::get_if<ToyFactorized>(&spec))
    os << "|toy:" << t->h1 << ',' << t->h2 << ',' << t->a1 << ',' << t->a2 << ',' << t->j1_star << ','
       << t->j2_star;
  else {
    const auto& c = std::get<IsochroneCosCos>(spec);
    os << "|iso:" << c.amplitude << ',' << c.n2 << ',' << c.n3;
  }
  const auto& d = q.domain;
  os << "|m:" << mode.m1 << ',' << mode.m2 << "|d:" << d.j1_min() << ',' << d.j1_max() << ',' << d.j2_min() << ','
     << d.j2_max() << ',' << d.bins_per_dim() << "|q:" << int(q.resolved(model)) << ',' << q.histogram_bins;
  if (q.resolved(model) == EvalMethod::Binned && q.histogram_bins == 0) os << ",span=" << t_span;
  return os.str();
}

}  // namespace detail

// Small LRU of read-only phase fields keyed by (model, perturbation, mode,
// quadrature). Entries are immutable after construction.
class PhaseCache {
 public:
  explicit PhaseCache(std::size_t capacity = 4) : capacity_(capacity) {}

  static PhaseCache& global() {
    static PhaseCache cache;
    return cache;
  }

  std::shared_ptr<const PhaseField> get(const FrequencyModel& model, const PerturbationSpec& spec, Mode mode,
                                        const QuadratureConfig& q, double t_span = 0.0) {
    const std::string key = detail::phase_key(model, spec, mode, q, t_span);
    {
      std::lock_guard lock(mu_);
      for (auto it = entries_.begin(); it != entries_.end(); ++it) {
        if (it->first == key) {
          entries_.splice(entries_.begin(), entries_, it);
          return entries_.front().second;
        }
      }
    }
    auto field = std::make_shared<const PhaseField>(model, spec, mode, q, t_span);
    std::lock_guard lock(mu_);
    entries_.emplace_front(key, field);
    while (entries_.size() > capacity_) entries_.pop_back();
    return field;
  }

  void clear() {
    std::lock_guard lock(mu_);
    entries_.clear();
  }

 private:
  std::size_t capacity_;
  std::mutex mu_;
  std::list<std::pair<std::string, std::shared_ptr<const PhaseField>>> entries_;
};

struct ExpectedValue {
  double value = 0.0;
  bool under_resolved = false;
  double t_max = 0.0;
};

inline ExpectedValue expected_value_checked(const FrequencyModel& model, const PerturbationSpec& spec,
                                            const Observable& obs, double t, const QuadratureConfig& quad) {
  if (!(t >= 0) || !std::isfinite(t)) throw DomainError("expected_value: t must be finite and non-negative");
  const auto field = PhaseCache::global().get(model, spec, obs.n, quad, t);
  return {field->evaluate(obs.parity, t, quad.workers()), t > field->t_max(), field->t_max()};
}

inline double expected_value(const FrequencyModel& model, const PerturbationSpec& spec, const Observable& obs,
                             double t, const QuadratureConfig& quad) {
  return expected_value_checked(model, spec, obs, t, quad).value;
}

inline TimeSeries evolve_series(const FrequencyModel& model, const PerturbationSpec& spec, const Observable& obs,
                                double t0, double dt, std::size_t n_samples, const QuadratureConfig& quad) {
  if (!(t0 >= 0) || !std::isfinite(t0)) throw DomainError("evolve_series: t0 must be finite and non-negative");
  if (!(dt > 0) || !std::isfinite(dt)) throw DomainError("evolve_series: dt must be positive");
  if (n_samples < 2) throw InsufficientData("evolve_series: need at least two samples");
  const double t_end = t0 + dt * double(n_samples - 1);
  const auto field = PhaseCache::global().get(model, spec, obs.n, quad, t_end);
  TimeSeries s;
  s.t0 = t0;
  s.dt = dt;
  s.model = model.name();
  s.observable = observable_name(obs);
  s.values.resize(n_samples);
  s.t_max = field->t_max();
  s.bins_per_dim = quad.domain.bins_per_dim();
  s.method = std::string(to_string(field->method()));
  const unsigned workers = quad.workers();
  if (field->method() == EvalMethod::Direct) {
    // parallelism lives inside each sample
    for (std::size_t i = 0; i < n_samples; ++i) s.values[i] = field->evaluate(obs.parity, s.t(i), workers);
  } else {
    parallel_for(n_samples, workers, [&](std::size_t i) { s.values[i] = field->evaluate(obs.parity, s.t(i)); });
  }
  s.under_resolved.resize(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) s.under_resolved[i] = s.t(i) > s.t_max;
  return s;
}

// --- CSV ---------------------------------------------------------------------

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_series_csv(std::ostream& os, const TimeSeries& s) {
  os << "t,value\n";
  for (std::size_t i = 0; i < s.size(); ++i) os << format_double(s.t(i)) << ',' << format_double(s.values[i]) << '\n';
}

inline void write_series_csv(const std::string& path, const TimeSeries& s) {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot open '" + path + "' for writing");
  write_series_csv(f, s);
}

// Reads `t,value` rows; sampling must be uniform (relative jitter < 1e-9).
inline TimeSeries read_series_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ConfigError("series CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "t,value") throw ConfigError("series CSV header must be 't,value'");
  std::vector<double> ts, vs;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ConfigError("malformed CSV row: " + line);
    try {
      std::size_t used = 0;
      const std::string a = line.substr(0, comma), b = line.substr(comma + 1);
      ts.push_back(std::stod(a, &used));
      if (used != a.size()) throw ConfigError("malformed CSV row: " + line);
      vs.push_back(std::stod(b, &used));
      if (used != b.size()) throw ConfigError("malformed CSV row: " + line);
    } catch (const std::logic_error&) {
      throw ConfigError("malformed CSV row: " + line);
    }
  }
  if (ts.size() < 2) throw InsufficientData("series CSV needs at least two rows");
  TimeSeries s;
  s.t0 = ts[0];
  s.dt = (ts.back() - ts[0]) / double(ts.size() - 1);
  for (std::size_t i = 0; i < ts.size(); ++i)
    if (std::abs(ts[i] - (s.t0 + s.dt * double(i))) > 1e-9 * std::max(1.0, std::abs(ts[i])))
      throw ConfigError("series CSV is not uniformly sampled");
  // keep the exact stored step when the first interval is representative
  const double d1 = ts[1] - ts[0];
  if (std::abs(d1 - s.dt) <= 1e-12 * std::abs(s.dt)) s.dt = d1;
  s.values = std::move(vs);
  s.validate();
  return s;
}

inline TimeSeries read_series_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open '" + path + "'");
  return read_series_csv(f);
}

}  // namespace algdamp
