#pragma once
// Action domains, frequency models, stationary state and initial perturbations.
//
// Isochrone coordinates: the library's (J1, J2) are the isochrone's angular and
// radial actions (J_theta, J_r), i.e. the second and third actions of the
// spherical reduction. Mode (m1, m2) multiplies (Omega_theta, Omega_r).
#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <string_view>
#include <variant>

#include "errors.hpp"

namespace algdamp {

struct Action {
  double j1 = 0.0;
  double j2 = 0.0;
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

// Symmetric 2x2 matrix.
struct Sym2 {
  double xx = 0.0;
  double xy = 0.0;
  double yy = 0.0;
  double det() const { return xx * yy - xy * xy; }
};

enum class Edge { J1Min, J1Max, J2Min, J2Max };

inline constexpr std::array<Edge, 4> kEdges = {Edge::J1Min, Edge::J1Max, Edge::J2Min, Edge::J2Max};

inline std::string_view to_string(Edge e) {
  switch (e) {
    case Edge::J1Min: return "J1_min";
    case Edge::J1Max: return "J1_max";
    case Edge::J2Min: return "J2_min";
    case Edge::J2Max: return "J2_max";
  }
  return "?";
}

class ActionDomain {
 public:
  ActionDomain(double j1_min, double j1_max, double j2_min, double j2_max, int bins_per_dim,
               std::array<bool, 4> cutoff = {false, false, false, false})
      : j1_min_(j1_min), j1_max_(j1_max), j2_min_(j2_min), j2_max_(j2_max),
        bins_(bins_per_dim), cutoff_(cutoff) {
    if (!(j1_min < j1_max) || !(j2_min < j2_max))
      throw DomainError("ActionDomain: empty action box");
    if (bins_per_dim < 2) throw DomainError("ActionDomain: bins_per_dim must be >= 2");
  }

  // Positive quadrant truncated at `cutoff` on the two outer edges.
  static ActionDomain quadrant(double cutoff, int bins) {
    return {0.0, cutoff, 0.0, cutoff, bins, {false, true, false, true}};
  }

  double j1_min() const { return j1_min_; }
  double j1_max() const { return j1_max_; }
  double j2_min() const { return j2_min_; }
  double j2_max() const { return j2_max_; }
  int bins_per_dim() const { return bins_; }
  double h1() const { return (j1_max_ - j1_min_) / bins_; }
  double h2() const { return (j2_max_ - j2_min_) / bins_; }
  double node1(int i) const { return j1_min_ + (i + 0.5) * h1(); }
  double node2(int j) const { return j2_min_ + (j + 0.5) * h2(); }
  double cell_area() const { return h1() * h2(); }

  bool is_cutoff(Edge e) const { return cutoff_[static_cast<int>(e)]; }
  const std::array<bool, 4>& cutoff_flags() const { return cutoff_; }
  bool truncated() const { return cutoff_[0] || cutoff_[1] || cutoff_[2] || cutoff_[3]; }

  // Largest extent along a truncated direction; used by the aliasing guard.
  double cutoff_extent() const {
    double c = 0.0;
    if (is_cutoff(Edge::J1Min) || is_cutoff(Edge::J1Max)) c = std::max(c, j1_max_ - j1_min_);
    if (is_cutoff(Edge::J2Min) || is_cutoff(Edge::J2Max)) c = std::max(c, j2_max_ - j2_min_);
    if (c == 0.0) c = std::max(j1_max_ - j1_min_, j2_max_ - j2_min_);
    return c;
  }

  ActionDomain with_bins(int bins) const {
    return {j1_min_, j1_max_, j2_min_, j2_max_, bins, cutoff_};
  }

  bool contains(Action a) const {
    return a.j1 >= j1_min_ && a.j1 <= j1_max_ && a.j2 >= j2_min_ && a.j2 <= j2_max_;
  }

  // Fixed coordinate of an edge and whether it is a J1=const edge.
  double edge_value(Edge e) const {
    switch (e) {
      case Edge::J1Min: return j1_min_;
      case Edge::J1Max: return j1_max_;
      case Edge::J2Min: return j2_min_;
      case Edge::J2Max: return j2_max_;
    }
    return 0.0;
  }
  static bool fixes_j1(Edge e) { return e == Edge::J1Min || e == Edge::J1Max; }

  // Point on edge e at tangential coordinate s.
  Action on_edge(Edge e, double s) const {
    return fixes_j1(e) ? Action{edge_value(e), s} : Action{s, edge_value(e)};
  }
  std::pair<double, double> edge_range(Edge e) const {
    return fixes_j1(e) ? std::pair{j2_min_, j2_max_} : std::pair{j1_min_, j1_max_};
  }

  bool operator==(const ActionDomain&) const = default;

 private:
  double j1_min_, j1_max_, j2_min_, j2_max_;
  int bins_;
  std::array<bool, 4> cutoff_;
};

struct Mode {
  int m1 = 1;
  int m2 = 1;
  Mode() = default;
  Mode(int a, int b) : m1(a), m2(b) {
    if (a == 0 && b == 0) throw ConfigError("mode (0,0) carries no dynamics");
  }
  Mode operator-() const { return {-m1, -m2}; }
  bool operator==(const Mode&) const = default;
};

// --- frequency models -------------------------------------------------------

struct VertexToy {};
struct TangentToy {};
struct CriticalToy {};
struct CompositeToy {};
struct Isochrone {
  double G = 1.0;
  double M = 1.0;
  double b = 1.0;
};

enum class ModelKind { VertexToy, TangentToy, CriticalToy, CompositeToy, Isochrone };

namespace detail {

// Radial quantities of the isochrone Hamiltonian at actions (x, y):
// q = sqrt(x^2 + 4GMb), s = (x + q)/2, L = y + s, kappa = ds/dx.
struct IsoLocal {
  double A, gmb, q, s, L, kappa, dkappa, d2kappa;
  IsoLocal(const Isochrone& p, double x, double y) {
    const double gm = p.G * p.M;
    A = gm * gm;
    gmb = gm * p.b;
    q = std::sqrt(x * x + 4.0 * gmb);
    s = 0.5 * (x + q);
    L = y + s;
    kappa = 0.5 * (1.0 + x / q);
    dkappa = 2.0 * gmb / (q * q * q);
    d2kappa = -6.0 * gmb * x / (q * q * q * q * q);
  }
};

}  // namespace detail

class FrequencyModel {
 public:
  using Variant = std::variant<VertexToy, TangentToy, CriticalToy, CompositeToy, Isochrone>;

  FrequencyModel(Variant v = VertexToy{}) : v_(v) {
    if (auto* iso = std::get_if<Isochrone>(&v_)) {
      if (!(iso->G > 0) || !(iso->M > 0) || !(iso->b > 0))
        throw DomainError("Isochrone: G, M, b must be positive");
    }
  }

  ModelKind kind() const { return static_cast<ModelKind>(v_.index()); }
  const Variant& variant() const { return v_; }
  const Isochrone* isochrone() const { return std::get_if<Isochrone>(&v_); }

  std::string name() const {
    static constexpr std::array<const char*, 5> names = {"vertex-toy", "tangent-toy", "critical-toy",
                                                         "composite-toy", "isochrone"};
    return names[v_.index()];
  }

  // Quadrant truncation used by default for each family.
  ActionDomain default_domain(int bins = 4096) const {
    return ActionDomain::quadrant(kind() == ModelKind::Isochrone ? 20.0 : 10.0, bins);
  }

  void check(Action a) const {
    if (!std::isfinite(a.j1) || !std::isfinite(a.j2)) throw DomainError("non-finite action");
    if (kind() == ModelKind::Isochrone && (a.j1 < 0.0 || a.j2 < 0.0))
      throw DomainError("isochrone actions must be non-negative");
  }

  Vec2 omega(Action a) const {
    check(a);
    const double x = a.j1, y = a.j2;
    switch (kind()) {
      case ModelKind::VertexToy: return {x, y};
      case ModelKind::TangentToy: return {(x - 1) * (x - 1), y};
      case ModelKind::CriticalToy: return {(x - 1) * (x - 1), (y - 1) * (y - 1)};
      case ModelKind::CompositeToy: return {-x - 0.5 * x * x - 2 * y, -2 * x + 2 * y};
      case ModelKind::Isochrone: {
        const detail::IsoLocal l(*isochrone(), x, y);
        const double wr = l.A / (l.L * l.L * l.L);
        return {l.kappa * wr, wr};
      }
    }
    return {};
  }

  // Rows are the gradients of Omega_1 and Omega_2.
  std::array<Vec2, 2> jacobian(Action a) const {
    check(a);
    const double x = a.j1, y = a.j2;
    switch (kind()) {
      case ModelKind::VertexToy: return {Vec2{1, 0}, Vec2{0, 1}};
      case ModelKind::TangentToy: return {Vec2{2 * (x - 1), 0}, Vec2{0, 1}};
      case ModelKind::CriticalToy: return {Vec2{2 * (x - 1), 0}, Vec2{0, 2 * (y - 1)}};
      case ModelKind::CompositeToy: return {Vec2{-1 - x, -2}, Vec2{-2, 2}};
      case ModelKind::Isochrone: {
        const detail::IsoLocal l(*isochrone(), x, y);
        const double L3 = l.L * l.L * l.L, L4 = L3 * l.L;
        const double wr = l.A / L3;
        const Vec2 gr{-3 * l.A * l.kappa / L4, -3 * l.A / L4};
        const Vec2 gt{l.dkappa * wr + l.kappa * gr.x, l.kappa * gr.y};
        return {gt, gr};
      }
    }
    return {};
  }

  std::array<Sym2, 2> hessians(Action a) const {
    check(a);
    const double x = a.j1, y = a.j2;
    switch (kind()) {
      case ModelKind::VertexToy: return {Sym2{}, Sym2{}};
      case ModelKind::TangentToy: return {Sym2{2, 0, 0}, Sym2{}};
      case ModelKind::CriticalToy: return {Sym2{2, 0, 0}, Sym2{0, 0, 2}};
      case ModelKind::CompositeToy: return {Sym2{-1, 0, 0}, Sym2{}};
      case ModelKind::Isochrone: {
        const detail::IsoLocal l(*isochrone(), x, y);
        const double L3 = l.L * l.L * l.L, L4 = L3 * l.L, L5 = L4 * l.L;
        const double wr = l.A / L3;
        const Vec2 gr{-3 * l.A * l.kappa / L4, -3 * l.A / L4};
        const Sym2 hr{-3 * l.A * (l.dkappa / L4 - 4 * l.kappa * l.kappa / L5),
                      12 * l.A * l.kappa / L5, 12 * l.A / L5};
        const Sym2 ht{l.d2kappa * wr + 2 * l.dkappa * gr.x + l.kappa * hr.xx,
                      l.dkappa * gr.y + l.kappa * hr.xy, l.kappa * hr.yy};
        return {ht, hr};
      }
    }
    return {};
  }

  // Toy phases split as mu = part(1, J1) + part(2, J2).
  bool separable() const { return kind() != ModelKind::Isochrone; }

  double phase_part(Mode m, int axis, double u) const {
    switch (kind()) {
      case ModelKind::VertexToy: return axis == 1 ? m.m1 * u : m.m2 * u;
      case ModelKind::TangentToy: return axis == 1 ? m.m1 * (u - 1) * (u - 1) : m.m2 * u;
      case ModelKind::CriticalToy:
        return axis == 1 ? m.m1 * (u - 1) * (u - 1) : m.m2 * (u - 1) * (u - 1);
      case ModelKind::CompositeToy:
        return axis == 1 ? (-m.m1 - 2.0 * m.m2) * u - 0.5 * m.m1 * u * u
                         : (-2.0 * m.m1 + 2.0 * m.m2) * u;
      case ModelKind::Isochrone: break;
    }
    throw DomainError("phase_part: model is not separable");
  }

  double phase_part_derivative(Mode m, int axis, double u) const {
    switch (kind()) {
      case ModelKind::VertexToy: return axis == 1 ? m.m1 : m.m2;
      case ModelKind::TangentToy: return axis == 1 ? 2.0 * m.m1 * (u - 1) : m.m2;
      case ModelKind::CriticalToy: return axis == 1 ? 2.0 * m.m1 * (u - 1) : 2.0 * m.m2 * (u - 1);
      case ModelKind::CompositeToy:
        return axis == 1 ? (-m.m1 - 2.0 * m.m2) - m.m1 * u : (-2.0 * m.m1 + 2.0 * m.m2);
      case ModelKind::Isochrone: break;
    }
    throw DomainError("phase_part_derivative: model is not separable");
  }

 private:
  Variant v_;
};

inline double mu(const FrequencyModel& f, Mode m, Action a) {
  const Vec2 w = f.omega(a);
  return m.m1 * w.x + m.m2 * w.y;
}

inline Vec2 grad_mu(const FrequencyModel& f, Mode m, Action a) {
  const auto j = f.jacobian(a);
  return {m.m1 * j[0].x + m.m2 * j[1].x, m.m1 * j[0].y + m.m2 * j[1].y};
}

inline Sym2 hess_mu(const FrequencyModel& f, Mode m, Action a) {
  const auto h = f.hessians(a);
  return {m.m1 * h[0].xx + m.m2 * h[1].xx, m.m1 * h[0].xy + m.m2 * h[1].xy,
          m.m1 * h[0].yy + m.m2 * h[1].yy};
}

// --- isochrone stationary state ----------------------------------------------

inline double isochrone_hamiltonian(const Isochrone& p, Action a) {
  const detail::IsoLocal l(p, a.j1, a.j2);
  return -l.A / (2.0 * l.L * l.L);
}

// Dimensionless binding energy -H b / (G M).
inline double isochrone_e_tilde(const Isochrone& p, Action a) {
  const detail::IsoLocal l(p, a.j1, a.j2);
  return l.gmb / (2.0 * l.L * l.L);
}

namespace detail {

// Bracket of the isochrone distribution. The closed form cancels to O(E^2),
// so small energies use the power series of asin(sqrt E)/sqrt(E(1-E)).
inline double isochrone_bracket(double e) {
  const double poly = 27 + e * (-66 + e * (320 + e * (-240 + e * 64)));
  if (e > 0.1) {
    const double g = std::asin(std::sqrt(e)) / std::sqrt(e * (1 - e));
    return poly + 3 * (16 * e * e + 28 * e - 9) * g;
  }
  constexpr int terms = 40;
  std::array<double, terms + 3> a{};
  a[0] = 1.0;
  for (int k = 1; k < terms + 3; ++k) a[k] = a[k - 1] * (2.0 * k) / (2.0 * k + 1.0);
  constexpr std::array<double, 5> pc = {27, -66, 320, -240, 64};
  // coefficients of E^0 and E^1 vanish identically
  double sum = 0.0, epow = e * e;
  for (int n = 2; n < terms; ++n) {
    double c = (n < 5 ? pc[n] : 0.0) + 48 * a[n - 2] + 84 * a[n - 1] - 27 * a[n];
    sum += c * epow;
    epow *= e;
  }
  return sum;
}

}  // namespace detail

inline double eval_isochrone_f0(double e_tilde, double G, double M, double b) {
  if (!(e_tilde > 0.0) || !(e_tilde < 1.0))
    throw DomainError("isochrone f0 requires 0 < E~ < 1");
  if (!(G > 0) || !(M > 0) || !(b > 0)) throw DomainError("isochrone f0 requires G, M, b > 0");
  const double gmb = G * M * b;
  const double pref = 1.0 / (std::numbers::sqrt2 * std::pow(2 * std::numbers::pi, 3) * gmb * std::sqrt(gmb));
  const double den = std::pow(2.0 * (1.0 - e_tilde), 4);
  return pref * std::sqrt(e_tilde) / den * detail::isochrone_bracket(e_tilde);
}

inline double isochrone_f0(const Isochrone& p, Action a) {
  return eval_isochrone_f0(isochrone_e_tilde(p, a), p.G, p.M, p.b);
}

// --- perturbations -----------------------------------------------------------

// i g(m,J) = 1/4 J1^h1 J2^h2 (J1-J1*)^a1 (J2-J2*)^a2 exp(-(J1^2+J2^2)/2), m = (+-1,+-1).
struct ToyFactorized {
  int h1 = 0, h2 = 0, a1 = 0, a2 = 0;
  double j1_star = 0.0, j2_star = 0.0;
};

// i g(m,J) = a f0(J)/4 for (m1,m2) = (+-n2,+-n3); n2, n3 label the angular and
// radial harmonics.
struct IsochroneCosCos {
  double amplitude = 1.0;
  int n2 = 1, n3 = 1;
};

using PerturbationSpec = std::variant<ToyFactorized, IsochroneCosCos>;

inline void validate(const PerturbationSpec& spec) {
  if (auto* t = std::get_if<ToyFactorized>(&spec)) {
    if (t->h1 < 0 || t->h2 < 0 || t->a1 < 0 || t->a2 < 0)
      throw ConfigError("ToyFactorized orders must be non-negative");
  }
}

inline double ipow(double x, int n) {
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= x;
  return r;
}

// One-dimensional factor of the toy weight along axis 1 or 2.
inline double toy_weight_factor(const ToyFactorized& t, int axis, double u) {
  const int h = axis == 1 ? t.h1 : t.h2;
  const int a = axis == 1 ? t.a1 : t.a2;
  const double us = axis == 1 ? t.j1_star : t.j2_star;
  return ipow(u, h) * ipow(u - us, a) * std::exp(-0.5 * u * u);
}

inline bool supports(const PerturbationSpec& spec, Mode m) {
  if (std::holds_alternative<ToyFactorized>(spec))
    return std::abs(m.m1) == 1 && std::abs(m.m2) == 1;
  const auto& p = std::get<IsochroneCosCos>(spec);
  return std::abs(m.m1) == std::abs(p.n2) && std::abs(m.m2) == std::abs(p.n3) &&
         !(m.m1 == 0 && m.m2 == 0);
}

// Value of i g(m, J). The isochrone family needs the model for f0.
inline double eval_perturbation_g(const PerturbationSpec& spec, int m1, int m2, Action a,
                                  const FrequencyModel& model = {}) {
  if (m1 == 0 && m2 == 0) return 0.0;
  const Mode m(m1, m2);
  if (!supports(spec, m)) return 0.0;
  if (auto* t = std::get_if<ToyFactorized>(&spec))
    return 0.25 * toy_weight_factor(*t, 1, a.j1) * toy_weight_factor(*t, 2, a.j2);
  const auto* iso = model.isochrone();
  if (!iso) throw DomainError("isochrone perturbation requires the isochrone model");
  return std::get<IsochroneCosCos>(spec).amplitude * isochrone_f0(*iso, a) / 4.0;
}

inline double eval_perturbation_g(const PerturbationSpec& spec, Mode m, Action a,
                                  const FrequencyModel& model = {}) {
  return eval_perturbation_g(spec, m.m1, m.m2, a, model);
}

// --- observables -------------------------------------------------------------

enum class Parity { Cos, Sin };

inline std::string_view to_string(Parity p) { return p == Parity::Cos ? "cos" : "sin"; }

struct Observable {
  Mode n;
  Parity parity = Parity::Cos;
};

// The four toy observables A1..A4.
inline Observable toy_observable(int index) {
  switch (index) {
    case 1: return {Mode(1, 1), Parity::Cos};
    case 2: return {Mode(1, 1), Parity::Sin};
    case 3: return {Mode(1, -1), Parity::Cos};
    case 4: return {Mode(1, -1), Parity::Sin};
  }
  throw ConfigError("toy observable index must be 1..4");
}

// Weight w(J) and prefactor such that <A>(t) = prefactor * int w(J) A(mu(J) t) dJ.
// Toy: w = 4 i g, prefactor pi^2. Isochrone: w = J1 f0(J), prefactor 1.
inline double expectation_weight(const PerturbationSpec& spec, const FrequencyModel& model, Action a) {
  if (auto* t = std::get_if<ToyFactorized>(&spec))
    return toy_weight_factor(*t, 1, a.j1) * toy_weight_factor(*t, 2, a.j2);
  const auto* iso = model.isochrone();
  if (!iso) throw DomainError("isochrone perturbation requires the isochrone model");
  return a.j1 * isochrone_f0(*iso, a);
}

inline double expectation_prefactor(const PerturbationSpec& spec) {
  return std::holds_alternative<ToyFactorized>(spec) ? std::numbers::pi * std::numbers::pi : 1.0;
}

}  // namespace algdamp
