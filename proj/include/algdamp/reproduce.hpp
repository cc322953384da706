#pragma once
// Named reproduction cases: each runs classification, prediction, evolution
// and analysis for every cell of a table or figure and records a verdict.
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "advection.hpp"
#include "errors.hpp"
#include "io.hpp"
#include "signal_analysis.hpp"
#include "singularity_atlas.hpp"

namespace algdamp {

struct ReproduceOptions {
  int toy_bins = 1 << 16;
  int isochrone_bins = 1 << 12;
  unsigned threads = 0;
  double toy_exponent_tolerance = 0.15;   // tables
  double figure_exponent_tolerance = 0.1;  // figures
  double cancelled_power = 4.5;            // cancelled cells must decay faster than this
};

// Time sampling and windows of the presets.
struct Sampling {
  double t0, dt;
  std::size_t n;
  double fit_lo, fit_hi, spec_lo, spec_hi;
};
inline constexpr Sampling kToySampling{1.0, 1.0, 1000, 100.0, 1000.0, 100.0, 1000.0};
inline constexpr Sampling kIsochroneSampling{0.0, 1.0, 1101, 100.0, 1100.0, 77.0, 1100.0};

struct CaseReport {
  std::string name;
  json cells = json::array();
  json notes = json::array();
  bool pass = true;

  void add(json cell) {
    pass = pass && cell.value("pass", false);
    cells.push_back(std::move(cell));
  }
  json to_json() const { return {{"case", name}, {"pass", pass}, {"cells", cells}, {"notes", notes}}; }
};

// Tabulated expectation for one observable cell: a decay power, or a
// cancellation at all orders.
struct Expected {
  double power = 0.0;
  bool cancelled = false;
  double omega0 = 0.0;
};

inline Expected exp_power(double p, double w = 0.0) { return {p, false, w}; }
inline Expected exp_cancelled() { return {0.0, true, 0.0}; }

inline std::vector<std::string> case_names() {
  return {"table3", "table4", "table5", "table6", "isochrone-table7", "fig4", "fig6", "fig7", "fig8"};
}

namespace detail {

inline QuadratureConfig preset_quadrature(const FrequencyModel& m, const ReproduceOptions& o) {
  QuadratureConfig q = QuadratureConfig::defaults(m, m.isochrone() ? o.isochrone_bins : o.toy_bins);
  q.threads = o.threads;
  return q;
}

inline std::string toy_label(int index) { return "A" + std::to_string(index); }

inline json perturbation_json(const ToyFactorized& t) {
  return {{"h", json::array({t.h1, t.h2})}, {"a", json::array({t.a1, t.a2})},
          {"J*", json::array({t.j1_star, t.j2_star})}};
}

// Full pipeline for one toy observable against a tabulated expectation.
inline json run_toy_cell(const FrequencyModel& model, const ToyFactorized& g, int index, const Expected& want,
                         const ReproduceOptions& o, double exp_tol, const Sampling& smp = kToySampling) {
  const Observable obs = toy_observable(index);
  const QuadratureConfig q = preset_quadrature(model, o);
  const auto pred = predict_observable(model, g, obs, q.domain);
  const TimeSeries s = evolve_series(model, g, obs, smp.t0, smp.dt, smp.n, q);
  json cell;
  cell["observable"] = toy_label(index);
  cell["perturbation"] = perturbation_json(g);
  cell["bins_per_dim"] = q.domain.bins_per_dim();
  cell["expected"] = want.cancelled ? json("cancelled") : json({{"power", want.power}, {"omega0", want.omega0}});
  const bool pred_cancelled = pred.all_cancelled;
  const double pred_power = pred.dominant ? pred.entries[*pred.dominant].effective->law.power : std::nan("");
  const double pred_omega = pred.dominant ? pred.entries[*pred.dominant].effective->law.omega0 : 0.0;
  cell["predicted"] = pred_cancelled ? json("cancelled") : json({{"power", pred_power}, {"omega0", pred_omega}});
  const bool prediction_ok =
      want.cancelled ? pred_cancelled
                     : (!pred_cancelled && std::abs(pred_power - want.power) < 1e-9 &&
                        std::abs(pred_omega - want.omega0) < 1e-9);
  cell["prediction_matches_table"] = prediction_ok;

  // window restricted maximum
  double mx = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (s.t(i) >= smp.fit_lo - 1e-9) mx = std::max(mx, std::abs(s.values[i]));
  cell["max_abs_in_window"] = mx;
  cell["under_resolved_samples"] = s.under_resolved_count();

  std::optional<ExponentFit> fit;
  try {
    fit = fit_decay_exponent(s, smp.fit_lo, smp.fit_hi);
  } catch (const DomainError& e) {
    cell["fit_error"] = e.what();
  }
  cell["fit"] = detail::opt(fit, [](const ExponentFit& f) { return algdamp::to_json(f); });

  bool measured_ok = false;
  if (want.cancelled) {
    measured_ok = mx < 1e-10 || (fit && fit->exponent < -o.cancelled_power);
    cell["measured_ok"] = measured_ok;
  } else {
    const Spectrum sp = power_spectrum(s, smp.spec_lo, smp.spec_hi);
    Tolerances tol;
    tol.exponent = exp_tol;
    const Verdict v = compare({want.power, want.omega0, false}, fit, &sp, tol, mx);
    cell["verdict"] = algdamp::to_json(v);
    measured_ok = v.pass;
    cell["measured_ok"] = measured_ok;
  }
  cell["pass"] = prediction_ok && measured_ok;
  return cell;
}

inline std::string entry_status(const ObservablePrediction& p, SingularityKind kind) {
  for (std::size_t i = 0; i < p.entries.size(); ++i) {
    const auto& e = p.entries[i];
    if (e.point.kind != kind || !e.effective) continue;
    if (e.effective->status == CancellationStatus::AllOrdersCancelled) return "C";
    const std::string d = (p.dominant && *p.dominant == i) ? "D" : "E";
    if (e.effective->status == CancellationStatus::PromotedAfterCancellation) return "C/" + d;
    return d;
  }
  return "N/A";
}

}  // namespace detail

inline CaseReport reproduce_table3(const ReproduceOptions& o = {}) {
  CaseReport r{"table3"};
  const FrequencyModel model(VertexToy{});
  const Expected rows[4][3] = {{exp_power(2), exp_cancelled(), exp_power(4)},
                               {exp_cancelled(), exp_power(3), exp_cancelled()},
                               {exp_power(2), exp_cancelled(), exp_power(4)},
                               {exp_cancelled(), exp_power(3), exp_cancelled()}};
  for (int a1 = 0; a1 <= 2; ++a1)
    for (int A = 1; A <= 4; ++A)
      r.add(detail::run_toy_cell(model, ToyFactorized{0, 0, a1, 0, 0.0, 0.0}, A, rows[A - 1][a1], o,
                                 o.toy_exponent_tolerance));
  return r;
}

inline CaseReport reproduce_table4(const ReproduceOptions& o = {}) {
  CaseReport r{"table4"};
  const FrequencyModel model(TangentToy{});
  const std::pair<int, int> as[5] = {{0, 0}, {0, 1}, {0, 2}, {1, 0}, {2, 0}};
  const double powers[5] = {1.5, 2.5, 3.5, 2.5, 2.5};
  for (int k = 0; k < 5; ++k)
    for (int A = 1; A <= 4; ++A)
      r.add(detail::run_toy_cell(model, ToyFactorized{2, 0, as[k].first, as[k].second, 1.0, 0.0}, A,
                                 exp_power(powers[k]), o, o.toy_exponent_tolerance));
  return r;
}

inline CaseReport reproduce_table5(const ReproduceOptions& o = {}) {
  CaseReport r{"table5"};
  const FrequencyModel model(CriticalToy{});
  const Expected rows[4][3] = {{exp_power(2), exp_power(2), exp_power(2)},
                               {exp_power(1), exp_power(3), exp_power(3)},
                               {exp_power(1), exp_power(3), exp_power(3)},
                               {exp_cancelled(), exp_power(2), exp_power(2)}};
  for (int a1 = 0; a1 <= 2; ++a1)
    for (int A = 1; A <= 4; ++A)
      r.add(detail::run_toy_cell(model, ToyFactorized{2, 2, a1, 0, 1.0, 1.0}, A, rows[A - 1][a1], o,
                                 o.toy_exponent_tolerance));
  return r;
}

// Singularity roles per observable for the composite toy.
inline CaseReport reproduce_table6(const ReproduceOptions& o = {}) {
  CaseReport r{"table6"};
  const FrequencyModel model(CompositeToy{});
  const ToyFactorized g{};
  const QuadratureConfig q = detail::preset_quadrature(model, o);
  struct Row {
    int index;
    const char* vertex;
    const char* tangent;
    const char* line;
    double power;
    double omega0;
  };
  // line: "C/D" is a cancelled leading order whose next order dominates
  const Row rows[4] = {{1, "N/A", "N/A", "C/D", 2.0, 0.0},
                       {2, "N/A", "N/A", "D", 1.0, 0.0},
                       {3, "E", "D", "N/A", 1.5, 0.5},
                       {4, "C", "D", "N/A", 1.5, 0.5}};
  for (const Row& row : rows) {
    const Observable obs = toy_observable(row.index);
    const auto pred = predict_observable(model, g, obs, q.domain);
    json cell;
    cell["observable"] = detail::toy_label(row.index);
    const std::string v = detail::entry_status(pred, SingularityKind::Vertex);
    const std::string t = detail::entry_status(pred, SingularityKind::Tangent);
    const std::string l = detail::entry_status(pred, SingularityKind::Line);
    cell["expected"] = {{"vertex", row.vertex}, {"tangent", row.tangent}, {"line", row.line}};
    cell["predicted"] = {{"vertex", v}, {"tangent", t}, {"line", l}};
    const double pp = pred.dominant ? pred.entries[*pred.dominant].effective->law.power : std::nan("");
    const double pw = pred.dominant ? pred.entries[*pred.dominant].effective->law.omega0 : std::nan("");
    cell["dominant"] = {{"power", detail::num(pp)}, {"omega0", detail::num(pw)}};
    cell["pass"] = v == row.vertex && t == row.tangent && l == row.line && std::abs(pp - row.power) < 1e-9 &&
                   std::abs(pw - row.omega0) < 1e-9;
    r.add(cell);
  }
  r.notes.push_back("A4 vertex: the tabulated 'C' marks the leading-order cancellation; mu is nonlinear at the "
                    "corner, so the next order survives as a subdominant t^-3 term and is reported as 'C/E'");
  return r;
}

// Isochrone singularity table: damping and frequency per type for the three modes.
inline CaseReport reproduce_isochrone_table7(const ReproduceOptions& o = {}) {
  CaseReport r{"isochrone-table7"};
  const Isochrone p{};
  const FrequencyModel model(p);
  const QuadratureConfig q = detail::preset_quadrature(model, o);
  for (Mode m : {Mode(1, 1), Mode(2, -1), Mode(3, -2)}) {
    const IsochroneCosCos g{1.0, m.m1, m.m2};
    const auto pred = predict_observable(model, g, {m, Parity::Sin}, q.domain);
    for (const auto& e : pred.entries) {
      if (!e.law) continue;
      json cell;
      cell["mode"] = json::array({m.m1, m.m2});
      cell["kind"] = std::string(to_string(e.point.kind));
      double want_power = 0.0, want_omega = 0.0;
      switch (e.point.kind) {
        case SingularityKind::Vertex: {
          want_power = 3.0;
          // m.Omega at the origin; the tabulated closed form is 2^-4 times this
          want_omega = (m.m1 / 2.0 + m.m2) * std::sqrt(p.G * p.M) / std::pow(p.b, 1.5);
          const double tabulated = want_omega / 16.0;
          cell["tabulated_omega0"] = tabulated;
          cell["differs_from_tabulated"] = std::abs(std::abs(e.law->omega0) - std::abs(tabulated)) > 1e-6;
          break;
        }
        case SingularityKind::Tangent:
          want_power = 1.5;
          want_omega = tangent_point_isochrone(m, p.G, p.M, p.b).omega0;
          break;
        case SingularityKind::Line: want_power = 2.0; break;
        case SingularityKind::Infinity: want_power = 2.0 / 3.0; break;
        default: want_power = std::nan(""); break;
      }
      cell["expected"] = {{"power", detail::num(want_power)}, {"omega0", detail::num(want_omega)}};
      cell["predicted"] = {{"power", e.law->power}, {"omega0", e.law->omega0}};
      const bool power_ok = std::abs(e.law->power - want_power) < 1e-9;
      const bool omega_ok = std::abs(std::abs(e.law->omega0) - std::abs(want_omega)) < 1e-6;
      cell["power_ok"] = power_ok;
      cell["omega_ok"] = omega_ok;
      cell["pass"] = power_ok && omega_ok;
      r.add(cell);
    }
  }
  r.notes.push_back("vertex frequency is checked against m.Omega evaluated at the origin; the tabulated closed "
                    "form carries an extra 2^-4 factor and is reported as tabulated_omega0");
  return r;
}

inline CaseReport reproduce_fig4(const ReproduceOptions& o = {}) {
  CaseReport r{"fig4"};
  const FrequencyModel model(CompositeToy{});
  const Expected want[4] = {exp_power(2), exp_power(1), exp_power(1.5, 0.5), exp_power(1.5, 0.5)};
  for (int A = 1; A <= 4; ++A) {
    ReproduceOptions oo = o;
    json cell = detail::run_toy_cell(model, ToyFactorized{}, A, want[A - 1], oo, o.figure_exponent_tolerance);
    r.add(cell);
  }
  return r;
}

// Pointwise comparison of A3 with the drawn guide 4 t^-1.5 cos(0.5 (t - 4.8)),
// relative to the guide's envelope, plus a least-squares refit of amplitude
// and phase.
struct GuideComparison {
  double max_rel_dev = 0.0;
  double amplitude = 0.0;
  double phase_shift = 0.0;  // t_shift in cos(0.5 (t - t_shift))
};

inline GuideComparison compare_with_guide(const TimeSeries& s, double t_lo, double amp = 4.0, double shift = 4.8,
                                          double w = 0.5, double p = 1.5) {
  GuideComparison g;
  Eigen::MatrixXd A;
  std::vector<double> rows_c, rows_s, rhs;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double t = s.t(i);
    if (t <= t_lo) continue;
    const double env = std::pow(t, -p);
    const double guide = amp * env * std::cos(w * (t - shift));
    g.max_rel_dev = std::max(g.max_rel_dev, std::abs(s.values[i] - guide) / (amp * env));
    rows_c.push_back(env * std::cos(w * t));
    rows_s.push_back(env * std::sin(w * t));
    rhs.push_back(s.values[i]);
  }
  if (rhs.size() < 4) throw InsufficientData("guide comparison needs samples after t_lo");
  A.resize(Eigen::Index(rhs.size()), 2);
  Eigen::VectorXd b(Eigen::Index(rhs.size()));
  for (std::size_t i = 0; i < rhs.size(); ++i) {
    A(Eigen::Index(i), 0) = rows_c[i];
    A(Eigen::Index(i), 1) = rows_s[i];
    b(Eigen::Index(i)) = rhs[i];
  }
  const Eigen::VectorXd c = least_squares(A, b);
  // C cos(wt) + S sin(wt) = R cos(w(t - t_s))
  g.amplitude = std::hypot(c(0), c(1));
  g.phase_shift = std::atan2(c(1), c(0)) / w;
  return g;
}

inline constexpr double kGuideTolerance = 0.05;

inline CaseReport reproduce_fig6(const ReproduceOptions& o = {}) {
  CaseReport r{"fig6"};
  const FrequencyModel model(CompositeToy{});
  const QuadratureConfig q = detail::preset_quadrature(model, o);
  const TimeSeries s = evolve_series(model, ToyFactorized{}, toy_observable(3), kToySampling.t0, kToySampling.dt,
                                     kToySampling.n, q);
  const GuideComparison g = compare_with_guide(s, 100.0);
  json cell;
  cell["observable"] = "A3";
  cell["guide"] = "4 t^-1.5 cos(0.5 (t - 4.8))";
  cell["max_relative_deviation"] = g.max_rel_dev;
  cell["tolerance"] = kGuideTolerance;
  cell["refit"] = {{"amplitude", g.amplitude}, {"phase_shift", g.phase_shift}};
  cell["pass"] = g.max_rel_dev <= kGuideTolerance;
  r.add(cell);
  return r;
}

namespace detail {

inline TimeSeries isochrone_series(Mode m, const ReproduceOptions& o) {
  const FrequencyModel model(Isochrone{});
  const QuadratureConfig q = preset_quadrature(model, o);
  const Sampling& smp = kIsochroneSampling;
  return evolve_series(model, IsochroneCosCos{1.0, m.m1, m.m2}, {m, Parity::Sin}, smp.t0, smp.dt, smp.n, q);
}

}  // namespace detail

inline CaseReport reproduce_fig7(const ReproduceOptions& o = {}) {
  CaseReport r{"fig7"};
  const FrequencyModel model(Isochrone{});
  const Sampling& smp = kIsochroneSampling;
  for (Mode m : {Mode(1, 1), Mode(2, -1), Mode(3, -2)}) {
    const TimeSeries s = detail::isochrone_series(m, o);
    json cell;
    cell["mode"] = json::array({m.m1, m.m2});
    cell["bins_per_dim"] = s.bins_per_dim;
    cell["under_resolved_samples"] = s.under_resolved_count();
    cell["t_max"] = detail::num(s.t_max);
    const auto pred = predict_observable(model, IsochroneCosCos{1.0, m.m1, m.m2}, {m, Parity::Sin},
                                         detail::preset_quadrature(model, o).domain);
    const double pp = pred.dominant ? pred.entries[*pred.dominant].effective->law.power : std::nan("");
    cell["predicted_power"] = detail::num(pp);
    std::optional<ExponentFit> fit;
    try {
      fit = fit_decay_exponent(s, smp.fit_lo, smp.fit_hi);
    } catch (const DomainError& e) {
      cell["fit_error"] = e.what();
    }
    cell["fit"] = detail::opt(fit, [](const ExponentFit& f) { return algdamp::to_json(f); });
    const bool exp_ok = fit && std::abs(fit->exponent + 2.0 / 3.0) <= o.figure_exponent_tolerance &&
                        std::abs(pp - 2.0 / 3.0) < 1e-9;
    cell["exponent_ok"] = exp_ok;
    bool spec_ok = true;
    if (m == Mode(1, 1)) {
      const Spectrum sp = power_spectrum(s, smp.spec_lo, smp.spec_hi);
      const auto dom = dominant_nonzero_peak(sp);
      cell["dominant_nonzero_peak"] = detail::opt(dom, [](const SpectrumPeak& p) { return algdamp::to_json(p); });
      spec_ok = !dom.has_value();
    }
    cell["spectrum_ok"] = spec_ok;
    cell["pass"] = exp_ok && spec_ok;
    r.add(cell);
  }
  return r;
}

inline constexpr double kFig8Tolerance = 0.006;
inline constexpr double kTangentSolverTolerance = 0.0005;

inline CaseReport reproduce_fig8(const ReproduceOptions& o = {}) {
  CaseReport r{"fig8"};
  const Sampling& smp = kIsochroneSampling;
  const std::pair<Mode, double> cases[2] = {{Mode(2, -1), 0.1185}, {Mode(3, -2), 0.0509}};
  for (const auto& [m, want] : cases) {
    const TimeSeries s = detail::isochrone_series(m, o);
    const Spectrum sp = power_spectrum(s, smp.spec_lo, smp.spec_hi);
    const TangentPoint tp = tangent_point_isochrone(m, 1.0, 1.0, 1.0);
    json cell;
    cell["mode"] = json::array({m.m1, m.m2});
    cell["expected_frequency"] = want;
    cell["resolution"] = sp.resolution;
    const double top = sp.peaks.empty() ? std::nan("") : sp.peaks.front().frequency;
    cell["top_peak"] = detail::num(top);
    cell["tangent_solver"] = algdamp::to_json(tp);
    const bool peak_ok = std::abs(top - want) <= kFig8Tolerance;
    const bool solver_ok = std::abs(tp.omega0 - want) <= kTangentSolverTolerance;
    cell["peak_ok"] = peak_ok;
    cell["solver_ok"] = solver_ok;
    cell["pass"] = peak_ok && solver_ok;
    r.add(cell);
  }
  return r;
}

inline CaseReport reproduce(const std::string& name, const ReproduceOptions& o = {}) {
  if (name == "table3") return reproduce_table3(o);
  if (name == "table4") return reproduce_table4(o);
  if (name == "table5") return reproduce_table5(o);
  if (name == "table6") return reproduce_table6(o);
  if (name == "isochrone-table7") return reproduce_isochrone_table7(o);
  if (name == "fig4") return reproduce_fig4(o);
  if (name == "fig6") return reproduce_fig6(o);
  if (name == "fig7") return reproduce_fig7(o);
  if (name == "fig8") return reproduce_fig8(o);
  throw ConfigError("unknown reproduction case '" + name + "'");
}

}  // namespace algdamp
