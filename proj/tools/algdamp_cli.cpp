// algdamp command-line front end.
#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <algdamp/algdamp.hpp>

using namespace algdamp;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailedVerification = 1;
constexpr int kExitConfig = 2;
constexpr int kExitDomain = 3;

unsigned threads_from_env() {
  const char* e = std::getenv("ALGDAMP_THREADS");
  if (!e || !*e) return 0;
  char* end = nullptr;
  const long v = std::strtol(e, &end, 10);
  if (*end != '\0' || v < 1) throw ConfigError("ALGDAMP_THREADS must be a positive integer");
  return unsigned(v);
}

void emit(const std::string& text, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(out, std::ios::binary);
  if (!f) throw ConfigError("cannot write '" + out + "'");
  f << text;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

// Config from --config, or built from --model/--mode shortcuts.
RunConfig build_config(const std::string& path, const std::string& model, const std::string& mode,
                       const std::string& parity, int bins) {
  if (!path.empty()) {
    if (!model.empty() || !mode.empty()) throw ConfigError("--config excludes --model/--mode");
    return load_run_config(path);
  }
  if (model.empty()) throw ConfigError("need --config or --model");
  json doc = {{"model", {{"kind", model}}}};
  const bool iso = model == "isochrone";
  if (!mode.empty()) {
    const Mode m = parse_mode(mode);
    if (iso) doc["perturbation"] = {{"kind", "isochrone-coscos"}, {"n2", std::abs(m.m1)}, {"n3", std::abs(m.m2)}};
    json o = {{"mode", json::array({m.m1, m.m2})}};
    o["parity"] = parity.empty() ? (iso ? "sin" : "cos") : parity;
    doc["observables"] = json::array({o});
  } else if (!parity.empty()) {
    throw ConfigError("--parity needs --mode");
  }
  if (bins > 0) doc["quadrature"] = {{"bins_per_dim", bins}};
  return parse_run_config(doc);
}

json analyze_report(const RunConfig& rc) {
  json j;
  j["model"] = rc.model.name();
  const auto& d = rc.quadrature.domain;
  j["domain"] = {{"j1", json::array({d.j1_min(), d.j1_max()})},
                 {"j2", json::array({d.j2_min(), d.j2_max()})},
                 {"bins_per_dim", d.bins_per_dim()}};
  json obs = json::array();
  for (const auto& o : rc.observables) {
    json x;
    x["observable"] = observable_name(o);
    json inv = json::array();
    for (const auto& p : classify(rc.model, o.n, d, rc.perturbation)) inv.push_back(to_json(p));
    x["singularities"] = inv;
    x["prediction"] = to_json(predict_observable(rc.model, rc.perturbation, o, d));
    if (const auto* iso = rc.model.isochrone()) {
      try {
        x["tangent_point"] = to_json(tangent_point_isochrone(o.n, iso->G, iso->M, iso->b));
      } catch (const NoTangentPoint&) {
        x["tangent_point"] = nullptr;
      }
    }
    obs.push_back(x);
  }
  j["observables"] = obs;
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Algebraic damping analysis: singularity classification, damping prediction and verification"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "worker threads (default: ALGDAMP_THREADS or hardware concurrency)")
      ->check(CLI::PositiveNumber);

  std::string config, model, mode, parity, out, series, window, peaks_out, case_name;
  int bins = 0, observable_index = 0;

  auto* analyze = app.add_subcommand("analyze", "classify singularities and predict damping laws");
  analyze->add_option("--config", config, "run configuration JSON");
  analyze->add_option("--model", model, "vertex-toy|tangent-toy|critical-toy|composite-toy|isochrone");
  analyze->add_option("--mode", mode, "m1,m2");
  analyze->add_option("--parity", parity, "cos|sin");
  analyze->add_option("--bins", bins, "bins per dimension");
  analyze->add_option("--out", out, "output file (default stdout)");

  auto* evolve = app.add_subcommand("evolve", "compute the expectation-value time series as CSV");
  evolve->add_option("--config", config, "run configuration JSON");
  evolve->add_option("--model", model, "model name");
  evolve->add_option("--mode", mode, "m1,m2");
  evolve->add_option("--parity", parity, "cos|sin");
  evolve->add_option("--bins", bins, "bins per dimension");
  evolve->add_option("--observable", observable_index, "index into the configured observables")
      ->check(CLI::NonNegativeNumber);
  evolve->add_option("--out", out, "output CSV (default stdout)");

  auto* fit = app.add_subcommand("fit", "fit the envelope decay exponent of a series CSV");
  fit->add_option("--series", series, "series CSV (t,value)")->required();
  fit->add_option("--window", window, "t_min,t_max")->required();
  fit->add_option("--out", out, "output JSON (default stdout)");

  auto* spectrum = app.add_subcommand("spectrum", "power spectrum of a series CSV");
  spectrum->add_option("--series", series, "series CSV (t,value)")->required();
  spectrum->add_option("--window", window, "t_min,t_max")->required();
  spectrum->add_option("--out", out, "spectrum CSV (default stdout)");
  spectrum->add_option("--peaks", peaks_out, "peaks JSON file (default: stdout when --out is a file)");

  auto* verify = app.add_subcommand("verify-kernels", "run the boundary-kernel property suite");
  verify->add_option("--out", out, "output JSON (default stdout)");

  ReproduceOptions ropt;
  auto* reproduce_cmd = app.add_subcommand("reproduce", "run a named reproduction case");
  reproduce_cmd->add_option("case", case_name, "table3|table4|table5|table6|isochrone-table7|fig4|fig6|fig7|fig8|all")
      ->required();
  reproduce_cmd->add_option("--toy-bins", ropt.toy_bins, "bins per dimension for toy models");
  reproduce_cmd->add_option("--isochrone-bins", ropt.isochrone_bins, "bins per dimension for the isochrone");
  reproduce_cmd->add_option("--out", out, "output JSON (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    const unsigned workers = threads > 0 ? unsigned(threads) : threads_from_env();

    if (*analyze) {
      RunConfig rc = build_config(config, model, mode, parity, bins);
      emit(dump(analyze_report(rc)), out);
      return kExitOk;
    }

    if (*evolve) {
      RunConfig rc = build_config(config, model, mode, parity, bins);
      if (workers) rc.quadrature.threads = workers;
      if (std::size_t(observable_index) >= rc.observables.size())
        throw ConfigError("--observable index out of range");
      const Observable& o = rc.observables[std::size_t(observable_index)];
      const TimeSeries s = evolve_series(rc.model, rc.perturbation, o, rc.time.t0, rc.time.dt, rc.time.samples,
                                         rc.quadrature);
      if (s.under_resolved_count() > 0)
        std::cerr << "warning: " << s.under_resolved_count() << " samples beyond the aliasing limit t_max="
                  << s.t_max << "\n";
      std::ostringstream os;
      write_series_csv(os, s);
      emit(os.str(), out);
      return kExitOk;
    }

    if (*fit) {
      const auto [lo, hi] = parse_window(window);
      const TimeSeries s = read_series_csv(series);
      emit(dump(to_json(fit_decay_exponent(s, lo, hi))), out);
      return kExitOk;
    }

    if (*spectrum) {
      const auto [lo, hi] = parse_window(window);
      const TimeSeries s = read_series_csv(series);
      const Spectrum sp = power_spectrum(s, lo, hi);
      std::ostringstream os;
      write_spectrum_csv(os, sp);
      emit(os.str(), out);
      if (!peaks_out.empty())
        emit(dump(peaks_json(sp)), peaks_out);
      else if (!out.empty() && out != "-")
        std::cout << dump(peaks_json(sp));
      return kExitOk;
    }

    if (*verify) {
      const KernelSuiteReport r = run_kernel_suite();
      emit(dump(to_json(r)), out);
      return r.pass ? kExitOk : kExitFailedVerification;
    }

    if (*reproduce_cmd) {
      ropt.threads = workers;
      std::vector<std::string> names;
      if (case_name == "all")
        names = case_names();
      else
        names = {case_name};
      json arr = json::array();
      bool all_pass = true;
      for (const auto& n : names) {
        const CaseReport r = reproduce(n, ropt);
        all_pass = all_pass && r.pass;
        arr.push_back(r.to_json());
      }
      const json j = names.size() == 1 ? arr[0] : json{{"cases", arr}, {"pass", all_pass}};
      emit(dump(j), out);
      return all_pass ? kExitOk : kExitFailedVerification;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DomainError& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    return kExitDomain;
  } catch (const json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitOk;
}
