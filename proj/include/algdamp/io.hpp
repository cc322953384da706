#pragma once
// JSON views of the library's result records.
#include <cmath>
#include <optional>
#include <string>

#include <json.hpp>

#include "advection.hpp"
#include "kernel_oracles.hpp"
#include "signal_analysis.hpp"
#include "singularity_atlas.hpp"

namespace algdamp {

using json = nlohmann::ordered_json;

namespace detail {

// NaN and infinities have no JSON literal; they become null.
inline json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

template <class T, class F>
json opt(const std::optional<T>& v, F&& f) {
  return v ? f(*v) : json(nullptr);
}

}  // namespace detail

inline json to_json(Action a) { return json::array({a.j1, a.j2}); }

inline json to_json(const SingularityPoint& p) {
  json j;
  j["kind"] = std::string(to_string(p.kind));
  j["location"] = detail::opt(p.location, [](Action a) { return to_json(a); });
  j["edge"] = detail::opt(p.edge, [](Edge e) { return json(std::string(to_string(e))); });
  j["x0"] = detail::num(p.x0);
  j["a1"] = p.a1;
  j["a2"] = p.a2;
  if (p.kind == SingularityKind::Infinity) {
    j["mu_decay"] = p.mu_decay;
    j["nu_decay"] = p.nu_decay;
  }
  j["special_vertex"] = p.special_vertex;
  return j;
}

inline json to_json(const DampingLaw& l) {
  json j;
  j["kind"] = std::string(to_string(l.kind));
  j["power"] = detail::num(l.power);
  j["omega0"] = detail::num(l.omega0);
  j["alpha"] = detail::num(l.alpha);
  j["form"] = std::string(to_string(l.form));
  j["relative_sign"] = detail::opt(l.relative_sign, [](int s) { return json(s); });
  j["survives_cos"] = l.survives_cos;
  j["survives_sin"] = l.survives_sin;
  j["promoted"] = l.promoted;
  j["vanishes"] = l.vanishes;
  return j;
}

inline json to_json(const EffectiveLaw& e) {
  json j;
  j["status"] = std::string(to_string(e.status));
  j["cancelled_orders"] = e.cancelled_orders;
  if (e.status != CancellationStatus::AllOrdersCancelled) {
    j["power"] = detail::num(e.law.power);
    j["omega0"] = detail::num(e.law.omega0);
  }
  return j;
}

inline json to_json(const Observable& o) {
  json j;
  j["mode"] = json::array({o.n.m1, o.n.m2});
  j["parity"] = std::string(to_string(o.parity));
  return j;
}

inline json to_json(const ObservablePrediction& p) {
  json j;
  j["observable"] = to_json(p.observable);
  json entries = json::array();
  for (const auto& e : p.entries) {
    json x;
    x["singularity"] = to_json(e.point);
    x["law"] = detail::opt(e.law, [](const DampingLaw& l) { return to_json(l); });
    x["effective"] = detail::opt(e.effective, [](const EffectiveLaw& l) { return to_json(l); });
    entries.push_back(x);
  }
  j["entries"] = entries;
  j["all_cancelled"] = p.all_cancelled;
  j["exchange_odd"] = p.exchange_odd;
  if (p.dominant) {
    const auto& d = p.entries[*p.dominant];
    j["dominant"] = {{"kind", std::string(to_string(d.point.kind))},
                     {"power", detail::num(d.effective->law.power)},
                     {"omega0", detail::num(d.effective->law.omega0)}};
  } else {
    j["dominant"] = nullptr;
  }
  if (p.visible_oscillation) {
    const auto& d = p.entries[*p.visible_oscillation];
    j["visible_oscillation"] = {{"kind", std::string(to_string(d.point.kind))},
                                {"power", detail::num(d.effective->law.power)},
                                {"omega0", detail::num(d.effective->law.omega0)}};
  } else {
    j["visible_oscillation"] = nullptr;
  }
  if (std::isfinite(p.vertex_frequency_tabulated)) j["vertex_frequency_tabulated"] = p.vertex_frequency_tabulated;
  return j;
}

inline json to_json(const ExponentFit& f) {
  return {{"exponent", detail::num(f.exponent)}, {"stderr", detail::num(f.stderr_)},
          {"window", json::array({f.t_min, f.t_max})}, {"n_peaks_used", f.n_peaks_used},
          {"r_squared", detail::num(f.r_squared)}};
}

inline json to_json(const SpectrumPeak& p) {
  return {{"frequency", detail::num(p.frequency)}, {"power", detail::num(p.power)},
          {"resolution", detail::num(p.resolution)}, {"prominence", detail::num(p.prominence)}};
}

inline json peaks_json(const Spectrum& sp, std::size_t limit = 10) {
  json j;
  j["resolution"] = sp.resolution;
  j["nyquist"] = sp.nyquist;
  j["window"] = json::array({sp.t_start, sp.t_end});
  j["samples"] = sp.n;
  json arr = json::array();
  for (std::size_t i = 0; i < std::min(limit, sp.peaks.size()); ++i) arr.push_back(to_json(sp.peaks[i]));
  j["peaks"] = arr;
  const auto dom = dominant_nonzero_peak(sp);
  j["dominant_nonzero_peak"] = detail::opt(dom, [](const SpectrumPeak& p) { return to_json(p); });
  return j;
}

inline json to_json(const Verdict& v) {
  json j;
  j["pass"] = v.pass;
  j["message"] = v.message;
  j["predicted"] = {{"power", detail::num(v.predicted.power)},
                    {"omega0", detail::num(v.predicted.omega0)},
                    {"all_cancelled", v.predicted.all_cancelled}};
  j["exponent_ok"] = v.exponent_ok;
  j["frequency_ok"] = v.frequency_ok;
  j["fit"] = detail::opt(v.fit, [](const ExponentFit& f) { return to_json(f); });
  j["top_peak"] = detail::opt(v.top_peak, [](const SpectrumPeak& p) { return to_json(p); });
  j["dominant_peak"] = detail::opt(v.dominant_peak, [](const SpectrumPeak& p) { return to_json(p); });
  j["frequency_tolerance"] = detail::num(v.frequency_tolerance);
  j["series_max_abs"] = detail::num(v.series_max_abs);
  return j;
}

inline json to_json(const KernelCheck& c) {
  json j;
  j["family"] = std::string(to_string(c.kind.family));
  j["alpha"] = c.kind.alpha;
  j["form"] = std::string(to_string(c.form));
  j["fitted"] = {{"re_s1", c.fitted.re_s1}, {"re_s2", c.fitted.re_s2}, {"im_s1", c.fitted.im_s1},
                 {"im_s2", c.fitted.im_s2}};
  j["constants"] = {{"C", c.constants.c}, {"C1", c.constants.c1}, {"C2", c.constants.c2}};
  j["residual_mismatch"] = c.residual_mismatch;
  j["relative_sign"] = detail::opt(c.sign, [](int s) { return json(s); });
  j["sign_mismatch"] = c.sign_mismatch;
  j["plemelj_gap"] = c.plemelj_gap;
  j["pass"] = c.pass;
  return j;
}

inline json to_json(const KernelSuiteReport& r) {
  json arr = json::array();
  for (const auto& c : r.checks) arr.push_back(to_json(c));
  return {{"checks", arr}, {"tolerance", kCoefficientTolerance}, {"pass", r.pass}};
}

inline json to_json(const TangentPoint& t) {
  return {{"j_star", t.j_star}, {"omega0", t.omega0}, {"residual", t.residual}, {"special_vertex", t.special_vertex}};
}

inline json series_summary(const TimeSeries& s) {
  return {{"model", s.model},
          {"observable", s.observable},
          {"t0", s.t0},
          {"dt", s.dt},
          {"samples", s.size()},
          {"bins_per_dim", s.bins_per_dim},
          {"method", s.method},
          {"t_max", detail::num(s.t_max)},
          {"under_resolved_samples", s.under_resolved_count()}};
}

}  // namespace algdamp
