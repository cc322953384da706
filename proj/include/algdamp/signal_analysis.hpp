#pragma once
// Envelope extraction, power-law exponent fits, spectra and verdicts.
#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <fftw3.h>

#include "advection.hpp"
#include "errors.hpp"
#include "numeric.hpp"

namespace algdamp {

struct EnvelopePoint {
  double t = 0.0;
  double value = 0.0;
};

namespace detail {

// Vertex of the parabola through three equally spaced samples, as an offset in
// (-1/2, 1/2) and the interpolated height.
inline std::pair<double, double> parabolic_peak(double ym, double y0, double yp) {
  const double den = ym - 2.0 * y0 + yp;
  if (den >= 0.0) return {0.0, y0};
  double d = 0.5 * (ym - yp) / den;
  d = std::clamp(d, -0.5, 0.5);
  return {d, y0 - 0.25 * (ym - yp) * d};
}

inline int sgn(double v) { return v > 0 ? 1 : (v < 0 ? -1 : 0); }

}  // namespace detail

inline std::vector<std::size_t> sign_changes(std::span<const double> v) {
  std::vector<std::size_t> idx;  // index of the first sample after each change
  int last = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const int s = detail::sgn(v[i]);
    if (s == 0) continue;
    if (last != 0 && s != last) idx.push_back(i);
    last = s;
  }
  return idx;
}

inline constexpr std::size_t kMinSignChanges = 4;

// Peak heights of |value|. Oscillating series use one maximum per sign-change
// segment; a long final stretch without sign changes contributes all of its
// samples. Series with fewer than four sign changes use maxima over blocks of
// n/32 samples, and series that never change sign return |value| directly.
inline std::vector<EnvelopePoint> envelope(const TimeSeries& s) {
  if (s.size() < 8) throw InsufficientData("envelope: need at least 8 samples");
  const auto& v = s.values;
  if (std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; }))
    throw EmptyEnvelope("envelope: series is identically zero");
  const auto changes = sign_changes(v);
  std::vector<EnvelopePoint> out;
  auto abs_at = [&](std::size_t i) { return std::abs(v[i]); };
  auto refined = [&](std::size_t i) {
    if (i == 0 || i + 1 >= v.size()) return EnvelopePoint{s.t(i), abs_at(i)};
    const auto [d, h] = detail::parabolic_peak(abs_at(i - 1), abs_at(i), abs_at(i + 1));
    return EnvelopePoint{s.t(i) + d * s.dt, h};
  };
  auto argmax = [&](std::size_t a, std::size_t b) {
    std::size_t best = a;
    for (std::size_t i = a; i < b; ++i)
      if (abs_at(i) > abs_at(best)) best = i;
    return best;
  };
  if (changes.empty()) {
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back({s.t(i), abs_at(i)});
  } else if (changes.size() < kMinSignChanges) {
    const std::size_t block = std::max<std::size_t>(2, v.size() / 32);
    for (std::size_t a = 0; a < v.size(); a += block) {
      const std::size_t b = std::min(v.size(), a + block);
      const std::size_t i = argmax(a, b);
      if (abs_at(i) > 0) out.push_back(refined(i));
    }
  } else {
    std::vector<std::size_t> bounds{0};
    bounds.insert(bounds.end(), changes.begin(), changes.end());
    bounds.push_back(v.size());
    std::vector<std::size_t> lengths;
    for (std::size_t k = 1; k + 2 < bounds.size(); ++k) lengths.push_back(bounds[k + 1] - bounds[k]);
    std::nth_element(lengths.begin(), lengths.begin() + lengths.size() / 2, lengths.end());
    const std::size_t median = lengths.empty() ? 1 : lengths[lengths.size() / 2];
    for (std::size_t k = 0; k + 1 < bounds.size(); ++k) {
      const std::size_t a = bounds[k], b = bounds[k + 1];
      const bool last = k + 2 == bounds.size();
      const std::size_t i = argmax(a, b);
      if (last && b - a > 3 * median) {
        for (std::size_t j = i; j < b; ++j) out.push_back({s.t(j), abs_at(j)});
        continue;
      }
      // partial segments at either end only count when the peak is interior
      if ((k == 0 && i == a) || (last && i + 1 == b)) continue;
      if (abs_at(i) > 0) out.push_back(refined(i));
    }
  }
  if (out.empty()) throw EmptyEnvelope("envelope: no peaks found");
  return out;
}

struct ExponentFit {
  double exponent = 0.0;
  double stderr_ = 0.0;
  double t_min = 0.0, t_max = 0.0;
  int n_peaks_used = 0;
  double r_squared = 0.0;
  double amplitude = 0.0;  // exp(intercept)
};

inline constexpr int kMinPeaks = 4;

// Slope of log envelope against log t within [t_min, t_max]. Each point is
// weighted by its share of the log-t axis so dense stretches do not dominate.
inline ExponentFit fit_decay_exponent(const TimeSeries& s, double t_min, double t_max) {
  if (!(t_min < t_max)) throw DomainError("fit window must satisfy t_min < t_max");
  if (!(t_min > 0)) throw DomainError("fit window must start at positive time");
  const double eps = 1e-9 * s.dt;
  if (t_min < s.t0 - eps || t_max > s.t_end() + eps) throw DomainError("fit window outside series span");
  const auto env = envelope(s);
  std::vector<double> lt, lv;
  for (const auto& p : env) {
    if (p.t < t_min - eps || p.t > t_max + eps || !(p.value > 0) || !(p.t > 0)) continue;
    lt.push_back(std::log(p.t));
    lv.push_back(std::log(p.value));
  }
  if (lt.size() < std::size_t(kMinPeaks))
    throw InsufficientData("fit window holds " + std::to_string(lt.size()) + " envelope points; need 4");
  std::vector<double> w(lt.size());
  for (std::size_t i = 0; i < lt.size(); ++i) {
    const double a = i == 0 ? lt[0] : 0.5 * (lt[i - 1] + lt[i]);
    const double b = i + 1 == lt.size() ? lt.back() : 0.5 * (lt[i] + lt[i + 1]);
    w[i] = std::max(b - a, 1e-12);
  }
  const LineFit lf = fit_line(lt, lv, w);
  ExponentFit f;
  f.exponent = lf.slope;
  f.stderr_ = lf.slope_stderr;
  f.t_min = t_min;
  f.t_max = t_max;
  f.n_peaks_used = static_cast<int>(lt.size());
  f.r_squared = lf.r_squared;
  f.amplitude = std::exp(lf.intercept);
  return f;
}

// --- spectra -------------------------------------------------------------------

struct SpectrumPeak {
  double frequency = 0.0;  // rad per unit time
  double power = 0.0;
  double resolution = 0.0;
  int bin = 0;
  double prominence = 0.0;  // peak power over the higher of its two valleys
};

struct Spectrum {
  double resolution = 0.0;
  double nyquist = 0.0;
  double t_start = 0.0, t_end = 0.0;
  int n = 0;
  std::vector<double> frequency;  // k * resolution, k = 0..n/2
  std::vector<double> power;      // |X_k|^2
  std::vector<SpectrumPeak> peaks;  // local maxima with k >= 1, by power
};

namespace detail {

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace detail

// Half spectrum X_k = sum_j x_j exp(-2 pi i jk/n), k = 0..n/2.
inline std::vector<cplx> real_dft(std::span<const double> x) {
  const int n = static_cast<int>(x.size());
  if (n < 1) throw InsufficientData("real_dft: empty input");
  double* in = fftw_alloc_real(n);
  fftw_complex* out = fftw_alloc_complex(n / 2 + 1);
  fftw_plan plan;
  {
    std::lock_guard lock(detail::fftw_planner_mutex());
    plan = fftw_plan_dft_r2c_1d(n, in, out, FFTW_ESTIMATE);
  }
  std::copy(x.begin(), x.end(), in);
  fftw_execute(plan);
  std::vector<cplx> X(n / 2 + 1);
  for (int k = 0; k <= n / 2; ++k) X[k] = {out[k][0], out[k][1]};
  {
    std::lock_guard lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(in);
  fftw_free(out);
  return X;
}

// sum |x|^2 against (1/n) sum over the full spectrum |X_k|^2.
inline std::pair<double, double> parseval_sides(std::span<const double> x) {
  const auto X = real_dft(x);
  const std::size_t n = x.size();
  CompensatedSum a, b;
  for (double v : x) a.add(v * v);
  for (std::size_t k = 0; k < X.size(); ++k) {
    const bool paired = k != 0 && !(n % 2 == 0 && k == n / 2);
    b.add((paired ? 2.0 : 1.0) * std::norm(X[k]));
  }
  return {a.value(), b.value() / double(n)};
}

inline constexpr std::size_t kMinSpectrumSamples = 64;

inline Spectrum power_spectrum(const TimeSeries& s, double t_start, double t_end) {
  if (!(t_start < t_end)) throw DomainError("spectrum window must satisfy t_start < t_end");
  const double eps = 1e-9 * s.dt;
  std::vector<double> x;
  double first = 0.0, last = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double t = s.t(i);
    if (t < t_start - eps || t > t_end + eps) continue;
    if (x.empty()) first = t;
    last = t;
    x.push_back(s.values[i]);
  }
  if (x.size() < kMinSpectrumSamples)
    throw InsufficientData("spectrum window holds " + std::to_string(x.size()) + " samples; need 64");
  const auto X = real_dft(x);
  Spectrum sp;
  sp.n = static_cast<int>(x.size());
  sp.resolution = 2.0 * std::numbers::pi / (sp.n * s.dt);
  sp.nyquist = std::numbers::pi / s.dt;
  sp.t_start = first;
  sp.t_end = last;
  const int K = static_cast<int>(X.size());
  sp.frequency.resize(K);
  sp.power.resize(K);
  std::vector<double> mag(K);
  for (int k = 0; k < K; ++k) {
    sp.frequency[k] = k * sp.resolution;
    sp.power[k] = std::norm(X[k]);
    mag[k] = std::abs(X[k]);
  }
  std::vector<int> maxima;
  for (int k = 1; k + 1 < K; ++k)
    if (sp.power[k] > sp.power[k - 1] && sp.power[k] >= sp.power[k + 1]) maxima.push_back(k);
  for (int k : maxima) {
    const auto [d, h] = detail::parabolic_peak(mag[k - 1], mag[k], mag[k + 1]);
    (void)h;
    SpectrumPeak p;
    p.bin = k;
    p.frequency = std::clamp((k + d) * sp.resolution, 0.0, sp.nyquist);
    p.power = sp.power[k];
    p.resolution = sp.resolution;
    // topographic prominence against the spectrum on both sides
    double left = sp.power[k], right = sp.power[k];
    for (int j = k - 1; j >= 0 && sp.power[j] <= sp.power[k]; --j) left = std::min(left, sp.power[j]);
    for (int j = k + 1; j < K && sp.power[j] <= sp.power[k]; ++j) right = std::min(right, sp.power[j]);
    const double col = std::max(left, right);
    p.prominence = col > 0 ? sp.power[k] / col : std::numeric_limits<double>::infinity();
    sp.peaks.push_back(p);
  }
  std::stable_sort(sp.peaks.begin(), sp.peaks.end(),
                   [](const SpectrumPeak& a, const SpectrumPeak& b) { return a.power > b.power; });
  return sp;
}

inline constexpr double kDominantProminence = 10.0;
inline constexpr double kDominantOverMedian = 10.0;

// Highest peak away from the DC neighbourhood that clears both the prominence
// and the median-power floor.
inline std::optional<SpectrumPeak> dominant_nonzero_peak(const Spectrum& sp) {
  if (sp.power.empty()) return std::nullopt;
  std::vector<double> pw(sp.power.begin() + 1, sp.power.end());
  std::nth_element(pw.begin(), pw.begin() + pw.size() / 2, pw.end());
  const double median = pw.empty() ? 0.0 : pw[pw.size() / 2];
  for (const auto& p : sp.peaks) {
    if (p.bin < 2) continue;
    if (p.prominence >= kDominantProminence && p.power >= kDominantOverMedian * median) return p;
  }
  return std::nullopt;
}

inline void write_spectrum_csv(std::ostream& os, const Spectrum& sp) {
  os << "frequency,power\n";
  for (std::size_t k = 0; k < sp.power.size(); ++k)
    os << format_double(sp.frequency[k]) << ',' << format_double(sp.power[k]) << '\n';
}

// --- verdicts ------------------------------------------------------------------

struct Tolerances {
  double exponent = 0.1;
  double frequency = 0.006;
  double cancelled_floor = 1e-10;
};

struct LawPrediction {
  double power = 0.0;   // decay t^-power
  double omega0 = 0.0;  // oscillation frequency
  bool all_cancelled = false;
};

struct Verdict {
  bool pass = false;
  bool exponent_ok = false;
  bool frequency_ok = false;
  LawPrediction predicted;
  std::optional<ExponentFit> fit;
  std::optional<SpectrumPeak> top_peak;
  std::optional<SpectrumPeak> dominant_peak;
  double frequency_tolerance = 0.0;
  double series_max_abs = 0.0;
  std::string message;
};

inline Verdict compare(const LawPrediction& pred, const std::optional<ExponentFit>& fit, const Spectrum* spectrum,
                       const Tolerances& tol = {}, double series_max_abs = 0.0) {
  Verdict v;
  v.predicted = pred;
  v.fit = fit;
  v.series_max_abs = series_max_abs;
  if (pred.all_cancelled) {
    v.exponent_ok = v.frequency_ok = series_max_abs < tol.cancelled_floor;
    v.pass = v.exponent_ok;
    v.message = v.pass ? "cancelled: series below floor" : "cancelled prediction but series is not negligible";
    return v;
  }
  if (!fit) {
    v.message = "no exponent fit";
    return v;
  }
  v.exponent_ok = std::abs(fit->exponent + pred.power) <= tol.exponent;
  if (spectrum) {
    if (!spectrum->peaks.empty()) v.top_peak = spectrum->peaks.front();
    v.dominant_peak = dominant_nonzero_peak(*spectrum);
    v.frequency_tolerance = std::max(spectrum->resolution, tol.frequency);
    if (pred.omega0 == 0.0)
      v.frequency_ok = !v.dominant_peak.has_value();
    else
      v.frequency_ok = v.top_peak && std::abs(v.top_peak->frequency - pred.omega0) <= v.frequency_tolerance;
  } else {
    v.frequency_ok = true;
  }
  v.pass = v.exponent_ok && v.frequency_ok;
  if (v.pass)
    v.message = "ok";
  else if (!v.exponent_ok)
    v.message = "exponent mismatch";
  else
    v.message = pred.omega0 == 0.0 ? "unexpected dominant oscillation" : "frequency mismatch";
  return v;
}

inline double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace algdamp
