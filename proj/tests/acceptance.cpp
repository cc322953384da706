// Acceptance run: one PASS/FAIL line per criterion, followed by indented
// diagnostics. A machine-readable report goes to acceptance_report.json in
// the working directory. Exit status is nonzero when any criterion fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include <algdamp/algdamp.hpp>

using namespace algdamp;

namespace {

struct Criterion {
  Criterion(int i, std::string t) : id(i), title(std::move(t)) {}
  int id;
  std::string title;
  bool pass = true;
  std::vector<std::string> lines;
  json detail = json::object();
  double seconds = 0.0;

  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    lines.push_back(std::string(ok ? "ok    " : "FAIL  ") + what);
  }
  void note(const std::string& what) { lines.push_back("note  " + what); }
};

std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

std::string mode_str(Mode m) { return "(" + std::to_string(m.m1) + "," + std::to_string(m.m2) + ")"; }

std::string cell_str(const json& c) {
  std::ostringstream os;
  os << c.value("observable", std::string("?")) << " a=" << c.value("perturbation", json::object()).value("a", json()).dump()
     << " expected=" << c.at("expected").dump();
  if (c.contains("fit") && !c.at("fit").is_null()) os << " fit=" << fmt(c.at("fit").at("exponent").get<double>());
  os << " max|v|=" << fmt(c.at("max_abs_in_window").get<double>(), 3);
  return os.str();
}

ReproduceOptions opts(int toy_bins, int iso_bins) {
  ReproduceOptions o;
  o.toy_bins = toy_bins;
  o.isochrone_bins = iso_bins;
  return o;
}

template <class F>
double timed(Criterion& c, F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return c.seconds;
}

// --- criteria ----------------------------------------------------------------

void kernel_suite(Criterion& c) {
  const KernelSuiteReport r = run_kernel_suite();
  for (const auto& k : r.checks)
    c.check(k.residual_mismatch < kCoefficientTolerance && k.sign_mismatch < kCoefficientTolerance,
            std::string(to_string(k.kind.family)) + " alpha=" + fmt(k.kind.alpha) +
                " residual mismatch=" + fmt(k.residual_mismatch, 3) + " sign mismatch=" + fmt(k.sign_mismatch, 3));
  c.check(r.pass, "suite verdict");
  c.check(r.seconds < 60.0, "suite runtime " + fmt(r.seconds, 3) + " s < 60 s");
  c.detail = to_json(r);
}

void vertex_table(Criterion& c) {
  const FrequencyModel model(VertexToy{});
  const Expected want[2][3] = {{exp_power(2), exp_cancelled(), exp_power(4)},
                               {exp_cancelled(), exp_power(3), exp_cancelled()}};
  json cells = json::array();
  for (int bins : {1 << 11, 1 << 12}) {
    const ReproduceOptions o = opts(bins, 1 << 12);
    for (int A = 1; A <= 2; ++A)
      for (int a1 = 0; a1 <= 2; ++a1) {
        const json cell = detail::run_toy_cell(model, ToyFactorized{0, 0, a1, 0, 0.0, 0.0}, A, want[A - 1][a1], o,
                                               o.toy_exponent_tolerance);
        c.check(cell.at("pass").get<bool>(), "grid 2^" + std::to_string(int(std::log2(bins))) + " " + cell_str(cell));
        cells.push_back(cell);
      }
  }
  PhaseCache::global().clear();
  // finer grid, reported only
  const ReproduceOptions fine = opts(1 << 16, 1 << 12);
  for (int A = 1; A <= 2; ++A)
    for (int a1 = 0; a1 <= 2; ++a1) {
      const json cell = detail::run_toy_cell(model, ToyFactorized{0, 0, a1, 0, 0.0, 0.0}, A, want[A - 1][a1], fine,
                                             fine.toy_exponent_tolerance);
      c.note("diagnostic grid 2^16 " + cell_str(cell) + (cell.at("pass").get<bool>() ? " pass" : " fail"));
    }
  PhaseCache::global().clear();
  c.detail["cells"] = cells;
}

void report_case(Criterion& c, const CaseReport& r) {
  for (const auto& cell : r.cells) c.check(cell.at("pass").get<bool>(), cell_str(cell));
  c.detail[r.name] = r.to_json();
}

void critical_table(Criterion& c) {
  report_case(c, reproduce_table5(opts(1 << 16, 1 << 12)));
  const FrequencyModel model(CriticalToy{});
  const QuadratureConfig q = QuadratureConfig::defaults(model, 1 << 16);
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> U(0.0, 1000.0);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const double t = U(rng);
    worst = std::max(worst, std::abs(expected_value(model, ToyFactorized{2, 2, 0, 0, 1.0, 1.0}, toy_observable(4), t, q)));
  }
  c.check(worst < 1e-10, "A4 a=(0,0) at 20 random times: max|v|=" + fmt(worst, 3) + " < 1e-10");
  PhaseCache::global().clear();
}

void composite_figure(Criterion& c) {
  const FrequencyModel model(CompositeToy{});
  const QuadratureConfig q = QuadratureConfig::defaults(model, 1 << 16);
  const Sampling& smp = kToySampling;
  const double want_p[4] = {2, 1, 1.5, 1.5};
  for (int A = 1; A <= 4; ++A) {
    const TimeSeries s = evolve_series(model, ToyFactorized{}, toy_observable(A), smp.t0, smp.dt, smp.n, q);
    const ExponentFit f = fit_decay_exponent(s, smp.fit_lo, smp.fit_hi);
    c.check(std::abs(f.exponent + want_p[A - 1]) <= 0.1,
            "A" + std::to_string(A) + " fit " + fmt(f.exponent) + " vs " + fmt(-want_p[A - 1]) + " +-0.1");
    const Spectrum sp = power_spectrum(s, smp.spec_lo, smp.spec_hi);
    const auto dom = dominant_nonzero_peak(sp);
    if (A <= 2) {
      c.check(!dom, "A" + std::to_string(A) + " no dominant nonzero peak" +
                        (dom ? " (found " + fmt(dom->frequency) + ")" : ""));
    } else {
      c.check(dom && std::abs(dom->frequency - 0.5) <= 0.01,
              "A" + std::to_string(A) + " dominant frequency " + (dom ? fmt(dom->frequency) : "none") +
                  " vs 0.5 +-0.01");
    }
  }
  const CaseReport g = reproduce_fig6(opts(1 << 16, 1 << 12));
  const json& gc = g.cells[0];
  c.check(gc.at("pass").get<bool>(), "A3 vs 4 t^-1.5 cos(0.5(t-4.8)) for t>100: max relative deviation " +
                                         fmt(gc.at("max_relative_deviation").get<double>()) + " <= 0.05");
  c.note("least-squares refit: amplitude " + fmt(gc.at("refit").at("amplitude").get<double>()) + ", phase shift " +
         fmt(gc.at("refit").at("phase_shift").get<double>()));
  c.detail["fig6"] = g.to_json();
  const CaseReport t6 = reproduce_table6(opts(1 << 16, 1 << 12));
  // singularity roles are reported, not part of the pass condition
  for (const auto& cell : t6.cells)
    c.note("roles " + cell.at("observable").get<std::string>() + " predicted " + cell.at("predicted").dump() +
           (cell.at("pass").get<bool>() ? "" : ", tabulated " + cell.at("expected").dump()));
  c.detail["table6"] = t6.to_json();
  PhaseCache::global().clear();
}

void isochrone_figure(Criterion& c) {
  const CaseReport r = reproduce_fig7(opts(1 << 16, 1 << 12));
  for (const auto& cell : r.cells) {
    std::string s = "mode " + cell.at("mode").dump() + " grid 2^12";
    s += cell.at("fit").is_null() ? " no fit" : " fit " + fmt(cell.at("fit").at("exponent").get<double>());
    s += " vs -2/3 +-0.1; under-resolved samples " + std::to_string(cell.at("under_resolved_samples").get<int>());
    if (cell.contains("dominant_nonzero_peak"))
      s += cell.at("dominant_nonzero_peak").is_null() ? "; no dominant nonzero peak" : "; dominant peak present";
    c.check(cell.at("pass").get<bool>(), s);
  }
  c.detail["grid_4096"] = r.to_json();
  PhaseCache::global().clear();
  const CaseReport d = reproduce_fig7(opts(1 << 16, 1 << 13));
  for (const auto& cell : d.cells)
    c.note("diagnostic grid 2^13 mode " + cell.at("mode").dump() +
           (cell.at("fit").is_null() ? " no fit" : " fit " + fmt(cell.at("fit").at("exponent").get<double>())) +
           " under-resolved " + std::to_string(cell.at("under_resolved_samples").get<int>()));
  c.detail["grid_8192"] = d.to_json();
  PhaseCache::global().clear();
}

void isochrone_spectra(Criterion& c) {
  const CaseReport r = reproduce_fig8(opts(1 << 16, 1 << 12));
  for (const auto& cell : r.cells) {
    const double want = cell.at("expected_frequency").get<double>();
    c.check(cell.at("peak_ok").get<bool>(), "mode " + cell.at("mode").dump() + " top peak " +
                                                fmt(cell.at("top_peak").get<double>(), 5) + " vs " + fmt(want) +
                                                " +-0.006 (resolution " + fmt(cell.at("resolution").get<double>()) + ")");
    c.check(cell.at("solver_ok").get<bool>(),
            "mode " + cell.at("mode").dump() + " tangent solver " +
                fmt(cell.at("tangent_solver").at("omega0").get<double>(), 7) + " vs " + fmt(want) + " +-0.0005");
  }
  c.detail = r.to_json();
  PhaseCache::global().clear();
}

void classifier_regression(Criterion& c) {
  std::ifstream f(std::string(ALGDAMP_GOLDEN_DIR) + "/inventories.json");
  if (!f) {
    c.check(false, "golden inventory file missing");
    return;
  }
  const json golden = json::parse(f);
  for (const auto& gc : golden.at("cases")) {
    const std::string name = gc.at("model").get<std::string>();
    const Mode mode(gc.at("mode")[0].get<int>(), gc.at("mode")[1].get<int>());
    const FrequencyModel m = model_from_name(name);
    const auto pts = classify(m, mode, m.default_domain(4096));
    bool ok = pts.size() == gc.at("singularities").size();
    std::string kinds;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const json got = to_json(pts[i]);
      kinds += (i ? "+" : "") + got.at("kind").get<std::string>();
      if (!ok) continue;
      const json& want = gc.at("singularities")[i];
      ok = ok && got.at("kind") == want.at("kind") && got.at("edge") == want.at("edge") &&
           std::abs(got.at("x0").get<double>() - want.at("x0").get<double>()) < 1e-6;
      if (want.at("location").is_null())
        ok = ok && got.at("location").is_null();
      else
        ok = ok && !got.at("location").is_null() &&
             std::abs(got.at("location")[0].get<double>() - want.at("location")[0].get<double>()) < 1e-6 &&
             std::abs(got.at("location")[1].get<double>() - want.at("location")[1].get<double>()) < 1e-6;
      if (want.contains("mu_decay"))
        ok = ok && got.value("mu_decay", json()) == want.at("mu_decay") && got.value("nu_decay", json()) == want.at("nu_decay");
    }
    c.check(ok, name + " " + mode_str(mode) + ": " + kinds);
  }
}

double relative_gap(const TimeSeries& a, const TimeSeries& b, double t_hi) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size() && a.t(i) <= t_hi + 1e-9; ++i) {
    num = std::max(num, std::abs(a.values[i] - b.values[i]));
    den = std::max(den, std::abs(b.values[i]));
  }
  return den > 0 ? num / den : num;
}

void hygiene(Criterion& c) {
  // grid doubling at t <= 100
  for (const char* name : {"vertex-toy", "tangent-toy", "critical-toy", "composite-toy"}) {
    const FrequencyModel m = model_from_name(name);
    const ToyFactorized g = m.kind() == ModelKind::VertexToy     ? ToyFactorized{0, 0, 0, 0, 0.0, 0.0}
                            : m.kind() == ModelKind::TangentToy  ? ToyFactorized{2, 0, 0, 0, 1.0, 0.0}
                            : m.kind() == ModelKind::CriticalToy ? ToyFactorized{2, 2, 0, 0, 1.0, 1.0}
                                                                 : ToyFactorized{};
    const auto a = evolve_series(m, g, toy_observable(1), 1.0, 1.0, 100, QuadratureConfig::defaults(m, 1 << 16));
    const auto b = evolve_series(m, g, toy_observable(1), 1.0, 1.0, 100, QuadratureConfig::defaults(m, 1 << 17));
    const double gap = relative_gap(a, b, 100.0);
    c.check(gap < 1e-4, std::string(name) + " A1 grid 2^16 vs 2^17, t<=100: relative gap " + fmt(gap, 3));
    PhaseCache::global().clear();
  }
  const FrequencyModel iso(Isochrone{});
  for (Mode md : {Mode(1, 1), Mode(2, -1), Mode(3, -2)}) {
    const IsochroneCosCos g{1.0, md.m1, md.m2};
    const auto a = evolve_series(iso, g, {md, Parity::Sin}, 0.0, 1.0, 101, QuadratureConfig::defaults(iso, 1 << 12));
    PhaseCache::global().clear();
    const auto b = evolve_series(iso, g, {md, Parity::Sin}, 0.0, 1.0, 101, QuadratureConfig::defaults(iso, 1 << 13));
    PhaseCache::global().clear();
    const double gap = relative_gap(a, b, 100.0);
    c.check(gap < 1e-4, "isochrone " + mode_str(md) + " grid 2^12 vs 2^13, t<=100: relative gap " + fmt(gap, 3));
  }

  // worker-count invariance
  auto invariant = [&](const FrequencyModel& m, const PerturbationSpec& g, const Observable& o, int bins, double t0,
                       std::size_t n, const std::string& label) {
    std::vector<TimeSeries> runs;
    for (unsigned th : {1u, 4u}) {
      QuadratureConfig q = QuadratureConfig::defaults(m, bins);
      q.threads = th;
      PhaseCache::global().clear();
      runs.push_back(evolve_series(m, g, o, t0, 1.0, n, q));
    }
    PhaseCache::global().clear();
    c.check(runs[0].values == runs[1].values, label + ": threads 1 vs 4 bit-identical");
  };
  invariant(iso, IsochroneCosCos{1.0, 2, -1}, {Mode(2, -1), Parity::Sin}, 1 << 12, 0.0, 1101,
            "isochrone (2,-1) binned 2^12");
  {
    QuadratureConfig q = QuadratureConfig::defaults(iso, 512);
    q.method = EvalMethod::Direct;
    std::vector<TimeSeries> runs;
    for (unsigned th : {1u, 4u}) {
      q.threads = th;
      PhaseCache::global().clear();
      runs.push_back(evolve_series(iso, IsochroneCosCos{1.0, 1, 1}, {Mode(1, 1), Parity::Sin}, 0.0, 1.0, 200, q));
    }
    PhaseCache::global().clear();
    c.check(runs[0].values == runs[1].values, "isochrone (1,1) direct 2^9: threads 1 vs 4 bit-identical");
  }
  invariant(FrequencyModel(CompositeToy{}), ToyFactorized{}, toy_observable(3), 1 << 16, 1.0, 1000,
            "composite A3 separable 2^16");

  // Parseval
  std::mt19937_64 rng(7);
  std::normal_distribution<double> N(0.0, 1.0);
  std::vector<double> x(1024);
  for (auto& v : x) v = N(rng);
  auto [lhs, rhs] = parseval_sides(x);
  c.check(std::abs(lhs - rhs) <= 1e-10 * lhs, "Parseval random n=1024: relative gap " + fmt(std::abs(lhs - rhs) / lhs, 3));
  const auto s = evolve_series(iso, IsochroneCosCos{1.0, 2, -1}, {Mode(2, -1), Parity::Sin}, 0.0, 1.0, 1101,
                               QuadratureConfig::defaults(iso, 1 << 12));
  PhaseCache::global().clear();
  const std::span<const double> w(s.values.data() + 77, 1024);
  std::tie(lhs, rhs) = parseval_sides(w);
  c.check(std::abs(lhs - rhs) <= 1e-10 * lhs,
          "Parseval isochrone (2,-1) window [77,1100]: relative gap " + fmt(std::abs(lhs - rhs) / lhs, 3));
}

}  // namespace

int main() {
  std::vector<Criterion> cs = {
      {1, "kernel property suite"},
      {2, "vertex toy exponents, grid 2^11-2^12"},
      {3, "tangent toy exponents"},
      {4, "critical toy exponents and exact cancellation"},
      {5, "composite toy exponents, frequencies and guide line"},
      {6, "isochrone exponents, grid 2^12"},
      {7, "isochrone spectral peaks and tangent solver"},
      {8, "classifier regression against golden inventories"},
      {9, "numerical hygiene"},
  };
  auto run = [&](Criterion& c, auto&& f) {
    try {
      timed(c, [&] { f(c); });
    } catch (const std::exception& e) {
      c.check(false, std::string("exception: ") + e.what());
    }
    std::cout << "CRITERION " << c.id << ": " << (c.pass ? "PASS" : "FAIL") << "  " << c.title << "  ["
              << fmt(c.seconds, 3) << " s]\n";
    for (const auto& l : c.lines) std::cout << "    " << l << "\n";
    std::cout.flush();
  };
  run(cs[0], kernel_suite);
  run(cs[1], vertex_table);
  run(cs[2], [](Criterion& c) {
    report_case(c, reproduce_table4(opts(1 << 16, 1 << 12)));
    PhaseCache::global().clear();
  });
  run(cs[3], critical_table);
  run(cs[4], composite_figure);
  run(cs[5], isochrone_figure);
  run(cs[6], isochrone_spectra);
  run(cs[7], classifier_regression);
  run(cs[8], hygiene);

  json report = json::array();
  int failed = 0;
  std::cout << "\nSUMMARY\n";
  for (const auto& c : cs) {
    std::cout << "  " << c.id << " " << (c.pass ? "PASS" : "FAIL") << "  " << c.title << "\n";
    failed += c.pass ? 0 : 1;
    report.push_back({{"criterion", c.id}, {"title", c.title}, {"pass", c.pass}, {"seconds", c.seconds},
                      {"checks", c.lines}, {"detail", c.detail}});
  }
  std::ofstream("acceptance_report.json") << report.dump(2) << "\n";
  std::cout << failed << " of " << cs.size() << " criteria failed\n";
  return failed == 0 ? 0 : 1;
}
