#pragma once
// Run configuration: one JSON document with per-module defaults. Unknown keys
// and ill-typed values are ConfigErrors. schemas/run_config.schema.json
// publishes the same structure.
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "advection.hpp"
#include "io.hpp"
#include "signal_analysis.hpp"

namespace algdamp {

struct TimeSampling {
  double t0 = 1.0;
  double dt = 1.0;
  std::size_t samples = 1000;
};

struct AnalysisConfig {
  double fit_t_min = 100.0, fit_t_max = 1000.0;
  double spectrum_t_min = 100.0, spectrum_t_max = 1000.0;
  Tolerances tolerances;
};

struct RunConfig {
  FrequencyModel model;
  PerturbationSpec perturbation = ToyFactorized{};
  std::vector<Observable> observables;
  QuadratureConfig quadrature;
  TimeSampling time;
  AnalysisConfig analysis;
};

inline FrequencyModel model_from_name(const std::string& name, double G = 1.0, double M = 1.0, double b = 1.0) {
  if (name == "vertex-toy") return FrequencyModel(VertexToy{});
  if (name == "tangent-toy") return FrequencyModel(TangentToy{});
  if (name == "critical-toy") return FrequencyModel(CriticalToy{});
  if (name == "composite-toy") return FrequencyModel(CompositeToy{});
  if (name == "isochrone") {
    if (!(G > 0) || !(M > 0) || !(b > 0)) throw ConfigError("isochrone G, M, b must be positive");
    return FrequencyModel(Isochrone{G, M, b});
  }
  throw ConfigError("unknown model '" + name + "'");
}

inline Parity parse_parity(const std::string& s) {
  if (s == "cos") return Parity::Cos;
  if (s == "sin") return Parity::Sin;
  throw ConfigError("parity must be 'cos' or 'sin'");
}

// "m1,m2"
inline Mode parse_mode(const std::string& s) {
  const auto comma = s.find(',');
  if (comma == std::string::npos) throw ConfigError("mode must be given as m1,m2");
  try {
    std::size_t u1 = 0, u2 = 0;
    const std::string a = s.substr(0, comma), b = s.substr(comma + 1);
    const int m1 = std::stoi(a, &u1), m2 = std::stoi(b, &u2);
    if (u1 != a.size() || u2 != b.size()) throw ConfigError("mode must be given as m1,m2");
    return Mode(m1, m2);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::logic_error&) {
    throw ConfigError("mode must be given as two integers m1,m2");
  }
}

// "a,b" with a < b
inline std::pair<double, double> parse_window(const std::string& s) {
  const auto comma = s.find(',');
  if (comma == std::string::npos) throw ConfigError("window must be given as t_min,t_max");
  try {
    std::size_t u1 = 0, u2 = 0;
    const std::string a = s.substr(0, comma), b = s.substr(comma + 1);
    const double lo = std::stod(a, &u1), hi = std::stod(b, &u2);
    if (u1 != a.size() || u2 != b.size()) throw ConfigError("window must be given as t_min,t_max");
    if (!(lo < hi)) throw ConfigError("window must satisfy t_min < t_max");
    return {lo, hi};
  } catch (const ConfigError&) {
    throw;
  } catch (const std::logic_error&) {
    throw ConfigError("window must be given as two numbers t_min,t_max");
  }
}

namespace detail {

inline void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key())) throw ConfigError("unknown key '" + it.key() + "' in " + where);
}

inline double get_number(const json& obj, const char* key, double def, const std::string& where) {
  if (!obj.contains(key)) return def;
  const auto& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(where + "." + key + " must be a number");
  return v.get<double>();
}

inline long long get_integer(const json& obj, const char* key, long long def, const std::string& where) {
  if (!obj.contains(key)) return def;
  const auto& v = obj.at(key);
  if (!v.is_number_integer()) throw ConfigError(where + "." + key + " must be an integer");
  return v.get<long long>();
}

inline std::string get_string(const json& obj, const char* key, const std::string& def, const std::string& where) {
  if (!obj.contains(key)) return def;
  const auto& v = obj.at(key);
  if (!v.is_string()) throw ConfigError(where + "." + key + " must be a string");
  return v.get<std::string>();
}

inline std::pair<double, double> get_window(const json& obj, const char* key, std::pair<double, double> def,
                                            const std::string& where) {
  if (!obj.contains(key)) return def;
  const auto& v = obj.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    throw ConfigError(where + "." + key + " must be a two-number array");
  const double a = v[0].get<double>(), b = v[1].get<double>();
  if (!(a < b)) throw ConfigError(where + "." + key + " must be increasing");
  return {a, b};
}

}  // namespace detail

inline const std::set<std::string>& config_top_keys() {
  static const std::set<std::string> k = {"model", "perturbation", "observables", "quadrature", "time", "analysis"};
  return k;
}

inline RunConfig parse_run_config(const json& doc) {
  using namespace detail;
  check_keys(doc, config_top_keys(), "config");
  RunConfig rc;

  if (!doc.contains("model")) throw ConfigError("config.model is required");
  const json& jm = doc.at("model");
  check_keys(jm, {"kind", "G", "M", "b"}, "model");
  const std::string kind = get_string(jm, "kind", "", "model");
  if (kind.empty()) throw ConfigError("model.kind is required");
  if (kind != "isochrone" && (jm.contains("G") || jm.contains("M") || jm.contains("b")))
    throw ConfigError("model.G/M/b apply to the isochrone only");
  rc.model = model_from_name(kind, get_number(jm, "G", 1.0, "model"), get_number(jm, "M", 1.0, "model"),
                             get_number(jm, "b", 1.0, "model"));
  const bool iso = rc.model.kind() == ModelKind::Isochrone;

  // perturbation: defaults follow the model family
  if (doc.contains("perturbation")) {
    const json& jp = doc.at("perturbation");
    if (!jp.is_object()) throw ConfigError("perturbation must be an object");
    const std::string pk = get_string(jp, "kind", iso ? "isochrone-coscos" : "toy", "perturbation");
    if (pk == "toy") {
      check_keys(jp, {"kind", "h1", "h2", "a1", "a2", "j1_star", "j2_star"}, "perturbation");
      ToyFactorized t;
      t.h1 = int(get_integer(jp, "h1", 0, "perturbation"));
      t.h2 = int(get_integer(jp, "h2", 0, "perturbation"));
      t.a1 = int(get_integer(jp, "a1", 0, "perturbation"));
      t.a2 = int(get_integer(jp, "a2", 0, "perturbation"));
      t.j1_star = get_number(jp, "j1_star", 0.0, "perturbation");
      t.j2_star = get_number(jp, "j2_star", 0.0, "perturbation");
      rc.perturbation = t;
    } else if (pk == "isochrone-coscos") {
      check_keys(jp, {"kind", "amplitude", "n2", "n3"}, "perturbation");
      IsochroneCosCos c;
      c.amplitude = get_number(jp, "amplitude", 1.0, "perturbation");
      c.n2 = int(get_integer(jp, "n2", 1, "perturbation"));
      c.n3 = int(get_integer(jp, "n3", 1, "perturbation"));
      if (c.n2 == 0 && c.n3 == 0) throw ConfigError("perturbation mode (0,0) carries no dynamics");
      rc.perturbation = c;
    } else {
      throw ConfigError("unknown perturbation kind '" + pk + "'");
    }
  } else {
    rc.perturbation = iso ? PerturbationSpec(IsochroneCosCos{}) : PerturbationSpec(ToyFactorized{});
  }
  validate(rc.perturbation);
  if (iso != std::holds_alternative<IsochroneCosCos>(rc.perturbation))
    throw ConfigError("perturbation kind does not match the model");

  if (doc.contains("observables")) {
    const json& jo = doc.at("observables");
    if (!jo.is_array() || jo.empty()) throw ConfigError("observables must be a non-empty array");
    for (const auto& e : jo) {
      check_keys(e, {"mode", "parity", "toy"}, "observables[]");
      if (e.contains("toy")) {
        if (e.contains("mode") || e.contains("parity"))
          throw ConfigError("observables[]: 'toy' excludes 'mode' and 'parity'");
        rc.observables.push_back(toy_observable(int(get_integer(e, "toy", 1, "observables[]"))));
        continue;
      }
      if (!e.contains("mode")) throw ConfigError("observables[] needs 'mode' or 'toy'");
      const auto& m = e.at("mode");
      if (!m.is_array() || m.size() != 2 || !m[0].is_number_integer() || !m[1].is_number_integer())
        throw ConfigError("observables[].mode must be two integers");
      rc.observables.push_back(
          {Mode(m[0].get<int>(), m[1].get<int>()), parse_parity(get_string(e, "parity", "cos", "observables[]"))});
    }
  } else if (iso) {
    const auto& c = std::get<IsochroneCosCos>(rc.perturbation);
    rc.observables.push_back({Mode(c.n2, c.n3), Parity::Sin});
  } else {
    rc.observables.push_back(toy_observable(1));
  }
  for (const auto& o : rc.observables)
    if (!supports(rc.perturbation, o.n)) throw ConfigError("observable mode is not carried by the perturbation");

  {
    const json jq = doc.contains("quadrature") ? doc.at("quadrature") : json::object();
    check_keys(jq, {"bins_per_dim", "cutoff", "method", "histogram_bins", "threads", "pairwise"}, "quadrature");
    const int bins = int(get_integer(jq, "bins_per_dim", 4096, "quadrature"));
    const double cutoff = get_number(jq, "cutoff", iso ? 20.0 : 10.0, "quadrature");
    if (!(cutoff > 0)) throw ConfigError("quadrature.cutoff must be positive");
    if (bins < 1) throw ConfigError("quadrature.bins_per_dim must be positive");
    rc.quadrature.domain = ActionDomain::quadrant(cutoff, bins);
    rc.quadrature.method = parse_eval_method(get_string(jq, "method", "auto", "quadrature"));
    rc.quadrature.histogram_bins = int(get_integer(jq, "histogram_bins", 0, "quadrature"));
    const long long th = get_integer(jq, "threads", 0, "quadrature");
    if (th < 0) throw ConfigError("quadrature.threads must be non-negative");
    rc.quadrature.threads = unsigned(th);
    if (jq.contains("pairwise")) {
      if (!jq.at("pairwise").is_boolean()) throw ConfigError("quadrature.pairwise must be a boolean");
      if (!jq.at("pairwise").get<bool>())
        throw ConfigError("quadrature.pairwise=false is not supported: reductions are always pairwise");
    }
    rc.quadrature.validate(rc.model);
  }

  {
    const json jt = doc.contains("time") ? doc.at("time") : json::object();
    check_keys(jt, {"t0", "dt", "samples"}, "time");
    rc.time.t0 = get_number(jt, "t0", iso ? 0.0 : 1.0, "time");
    rc.time.dt = get_number(jt, "dt", 1.0, "time");
    const long long n = get_integer(jt, "samples", iso ? 1101 : 1000, "time");
    if (!(rc.time.t0 >= 0)) throw ConfigError("time.t0 must be non-negative");
    if (!(rc.time.dt > 0)) throw ConfigError("time.dt must be positive");
    if (n < 2) throw ConfigError("time.samples must be at least 2");
    rc.time.samples = std::size_t(n);
  }

  {
    const json ja = doc.contains("analysis") ? doc.at("analysis") : json::object();
    check_keys(ja, {"fit_window", "spectrum_window", "tolerances"}, "analysis");
    const double end = iso ? 1100.0 : 1000.0;
    const auto fw = get_window(ja, "fit_window", {100.0, end}, "analysis");
    const auto sw = get_window(ja, "spectrum_window", {iso ? 77.0 : 100.0, end}, "analysis");
    rc.analysis.fit_t_min = fw.first;
    rc.analysis.fit_t_max = fw.second;
    rc.analysis.spectrum_t_min = sw.first;
    rc.analysis.spectrum_t_max = sw.second;
    if (ja.contains("tolerances")) {
      const json& jt = ja.at("tolerances");
      check_keys(jt, {"exponent", "frequency", "cancelled_floor"}, "analysis.tolerances");
      auto& t = rc.analysis.tolerances;
      t.exponent = get_number(jt, "exponent", t.exponent, "analysis.tolerances");
      t.frequency = get_number(jt, "frequency", t.frequency, "analysis.tolerances");
      t.cancelled_floor = get_number(jt, "cancelled_floor", t.cancelled_floor, "analysis.tolerances");
      if (!(t.exponent > 0) || !(t.frequency > 0) || !(t.cancelled_floor > 0))
        throw ConfigError("analysis.tolerances must be positive");
    }
  }
  return rc;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config '" + path + "'");
  json doc;
  try {
    doc = json::parse(f);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_run_config(doc);
}

}  // namespace algdamp
