#pragma once
// Classification of the singular points of mu(J) = m.Omega(J) on an action box
// and the damping law attached to each of them.
#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string_view>
#include <vector>

#include "action_fields.hpp"
#include "numeric.hpp"

namespace algdamp {

enum class SingularityKind { Vertex, Tangent, CriticalExtremum, CriticalSaddle, Line, Infinity };

inline std::string_view to_string(SingularityKind k) {
  switch (k) {
    case SingularityKind::Vertex: return "Vertex";
    case SingularityKind::Tangent: return "Tangent";
    case SingularityKind::CriticalExtremum: return "CriticalExtremum";
    case SingularityKind::CriticalSaddle: return "CriticalSaddle";
    case SingularityKind::Line: return "Line";
    case SingularityKind::Infinity: return "Infinity";
  }
  return "?";
}

inline bool is_critical(SingularityKind k) {
  return k == SingularityKind::CriticalExtremum || k == SingularityKind::CriticalSaddle;
}

struct SingularityPoint {
  SingularityKind kind = SingularityKind::Vertex;
  std::optional<Action> location;  // absent for Line and Infinity
  std::optional<Edge> edge;        // Tangent: supporting edge; Line: the constant edge
  double x0 = 0.0;                 // mu at the singular point
  int a1 = 0, a2 = 0;              // numerator orders (Line: a1 is the normal order)
  int mu_decay = 0, nu_decay = 0;  // Infinity only
  double mu_fit_residual = 0.0, nu_fit_residual = 0.0;
  bool special_vertex = false;  // corner with exactly one vanishing gradient component
  Vec2 grad;
  Sym2 hess;
};

struct LocalNumerator {
  int a1 = 0, a2 = 0;
  // true when the smooth envelope around J* carries odd powers in that variable
  bool mixed1 = false, mixed2 = false;
  // mu odd and nu even under J1 <-> J2 on a symmetric box
  bool exchange_odd = false;
};

enum class SingularForm { Log, Power, SaddleLog };

inline std::string_view to_string(SingularForm f) {
  switch (f) {
    case SingularForm::Log: return "log";
    case SingularForm::Power: return "power";
    case SingularForm::SaddleLog: return "saddle-log";
  }
  return "?";
}

struct DampingLaw {
  SingularityKind kind = SingularityKind::Vertex;
  double power = 0.0;  // amplitude ~ t^-power
  double omega0 = 0.0;
  std::optional<int> relative_sign;
  bool survives_cos = true;
  bool survives_sin = true;
  double alpha = 0.0;
  SingularForm form = SingularForm::Log;
  int promotion_step = 1;     // increase of alpha at the next surviving order
  bool promoted = false;      // odd leading order replaced by the next one
  bool vanishes = false;      // no singular contribution at any order
};

// --- geometry helpers ---------------------------------------------------------

namespace detail {

inline double zero_scale(Vec2 g) { return 1e-10 * std::max(1.0, std::hypot(g.x, g.y)); }

inline bool exact_integer(double v) { return std::abs(v - std::round(v)) < 1e-12; }

inline int parity_sign(double alpha) {
  return (static_cast<long long>(std::llround(alpha)) % 2 == 0) ? 1 : -1;
}

// Third-derivative probe: finite difference of the Hessian along direction d.
inline bool hessian_varies(const FrequencyModel& f, Mode m, const ActionDomain& dom, Action p,
                           Vec2 d) {
  const double h = 1e-4 * std::max(dom.j1_max() - dom.j1_min(), dom.j2_max() - dom.j2_min());
  Action lo{p.j1 - h * d.x, p.j2 - h * d.y}, hi{p.j1 + h * d.x, p.j2 + h * d.y};
  auto clampa = [&](Action a) {
    a.j1 = std::clamp(a.j1, dom.j1_min(), dom.j1_max());
    a.j2 = std::clamp(a.j2, dom.j2_min(), dom.j2_max());
    return a;
  };
  lo = clampa(lo);
  hi = clampa(hi);
  const Sym2 a = hess_mu(f, m, lo), b = hess_mu(f, m, hi);
  const double tol = 1e-9 * (1.0 + std::abs(a.xx) + std::abs(a.xy) + std::abs(a.yy));
  return std::abs(a.xx - b.xx) > tol || std::abs(a.xy - b.xy) > tol || std::abs(a.yy - b.yy) > tol;
}

inline bool hessian_nonzero(const Sym2& h) {
  return std::abs(h.xx) > 1e-12 || std::abs(h.xy) > 1e-12 || std::abs(h.yy) > 1e-12;
}

}  // namespace detail

// Actions along the diagonal ray J1 = J2 = s used to measure decay exponents.
struct DecayFit {
  int exponent = 0;
  double slope = 0.0;
  double residual = 0.0;
};

template <class G>
DecayFit fit_decay_along_ray(G&& g, double s_lo = 1e3, double s_hi = 1e5, int n = 33) {
  std::vector<double> x, y;
  for (int i = 0; i < n; ++i) {
    const double s = s_lo * std::pow(s_hi / s_lo, double(i) / (n - 1));
    const double v = std::abs(g(s));
    if (!(v > 0.0) || !std::isfinite(v)) continue;
    x.push_back(std::log(s));
    y.push_back(std::log(v));
  }
  if (x.size() < 4) return {0, 0.0, 0.0};
  const LineFit lf = fit_line(x, y);
  return {static_cast<int>(std::lround(-lf.slope)), lf.slope, std::abs(lf.slope - std::round(lf.slope))};
}

struct InfinityExponents {
  int a = 0, b = 0;
  double mu_residual = 0.0, nu_residual = 0.0;
};

inline PerturbationSpec default_perturbation(const FrequencyModel& model, Mode m) {
  if (model.isochrone()) return IsochroneCosCos{1.0, m.m1, m.m2};
  return ToyFactorized{};
}

// Decay exponents of mu ~ s^-a and nu ~ s^-b along the diagonal ray.
inline InfinityExponents infinity_exponents(const FrequencyModel& model, const PerturbationSpec& spec,
                                            Mode m) {
  const DecayFit fm = fit_decay_along_ray([&](double s) { return mu(model, m, {s, s}); });
  if (!(fm.slope < -0.5))
    throw NoInfinitySingularity("mu does not decay at large actions for model " + model.name());
  const DecayFit fn =
      fit_decay_along_ray([&](double s) { return expectation_weight(spec, model, {s, s}); });
  return {fm.exponent, fn.exponent, fm.residual, fn.residual};
}

// --- classification -----------------------------------------------------------

namespace detail {

inline bool edge_is_line(const FrequencyModel& f, Mode m, const ActionDomain& dom, Edge e,
                         double* value) {
  const auto [lo, hi] = dom.edge_range(e);
  double vmin = 1e300, vmax = -1e300, vsum = 0.0;
  constexpr int samples = 64;
  for (int k = 0; k < samples; ++k) {
    const double s = lo + (hi - lo) * k / (samples - 1);
    const double v = mu(f, m, dom.on_edge(e, s));
    vmin = std::min(vmin, v);
    vmax = std::max(vmax, v);
    vsum += v;
  }
  const double scale = std::max({1.0, std::abs(vmin), std::abs(vmax)});
  if (value) *value = vsum / samples;
  return vmax - vmin < 1e-12 * scale;
}

inline double tangential_derivative(const FrequencyModel& f, Mode m, const ActionDomain& dom, Edge e,
                                    double s) {
  const Vec2 g = grad_mu(f, m, dom.on_edge(e, s));
  return ActionDomain::fixes_j1(e) ? g.y : g.x;
}

inline std::vector<Action> corners(const ActionDomain& d) {
  return {{d.j1_min(), d.j2_min()}, {d.j1_max(), d.j2_min()}, {d.j1_min(), d.j2_max()},
          {d.j1_max(), d.j2_max()}};
}

inline std::vector<Edge> corner_edges(const ActionDomain& d, Action c) {
  std::vector<Edge> es;
  es.push_back(c.j1 == d.j1_min() ? Edge::J1Min : Edge::J1Max);
  es.push_back(c.j2 == d.j2_min() ? Edge::J2Min : Edge::J2Max);
  return es;
}

inline bool less_point(const SingularityPoint& a, const SingularityPoint& b) {
  if (a.kind != b.kind) return a.kind < b.kind;
  const Action pa = a.location.value_or(Action{}), pb = b.location.value_or(Action{});
  if (pa.j1 != pb.j1) return pa.j1 < pb.j1;
  if (pa.j2 != pb.j2) return pa.j2 < pb.j2;
  return static_cast<int>(a.edge.value_or(Edge::J1Min)) < static_cast<int>(b.edge.value_or(Edge::J1Min));
}

}  // namespace detail

// Numerator orders of the expectation weight at point p, read off the factored
// form of the perturbation.
inline LocalNumerator local_numerator(const PerturbationSpec& spec, const FrequencyModel& model,
                                      Action p) {
  LocalNumerator ln;
  if (auto* t = std::get_if<ToyFactorized>(&spec)) {
    auto axis = [](double x, int h, int a, double xs, int& order, bool& mixed) {
      constexpr double eps = 1e-12;
      if (std::abs(x) < eps) {
        const bool star_here = std::abs(xs) < eps;
        order = h + (star_here ? a : 0);
        mixed = !(a == 0 || star_here);
      } else if (std::abs(x - xs) < eps) {
        order = a;
        mixed = true;
      } else {
        order = 0;
        mixed = true;
      }
    };
    axis(p.j1, t->h1, t->a1, t->j1_star, ln.a1, ln.mixed1);
    axis(p.j2, t->h2, t->a2, t->j2_star, ln.a2, ln.mixed2);
    return ln;
  }
  if (!model.isochrone()) throw DomainError("isochrone perturbation requires the isochrone model");
  // weight J1 f0(J): f0 is smooth with odd terms in both actions
  ln.a1 = std::abs(p.j1) < 1e-12 ? 1 : 0;
  ln.a2 = 0;
  ln.mixed1 = ln.mixed2 = true;
  return ln;
}

// mu odd and the weight even under J1 <-> J2 on a symmetric box.
inline bool exchange_odd(const FrequencyModel& model, const PerturbationSpec& spec, Mode m,
                         const ActionDomain& dom) {
  if (dom.j1_min() != dom.j2_min() || dom.j1_max() != dom.j2_max()) return false;
  if (dom.is_cutoff(Edge::J1Min) != dom.is_cutoff(Edge::J2Min) ||
      dom.is_cutoff(Edge::J1Max) != dom.is_cutoff(Edge::J2Max))
    return false;
  const double lo = dom.j1_min(), w = dom.j1_max() - dom.j1_min();
  for (int k = 0; k < 64; ++k) {
    // golden-ratio lattice points
    const double u = std::fmod(0.5 + k * 0.6180339887498949, 1.0);
    const double v = std::fmod(0.5 + k * 0.7548776662466927, 1.0);
    const Action a{lo + u * w, lo + v * w}, b{a.j2, a.j1};
    const double ma = mu(model, m, a), mb = mu(model, m, b);
    if (std::abs(ma + mb) > 1e-12 * (1.0 + std::abs(ma))) return false;
    const double wa = expectation_weight(spec, model, a), wb = expectation_weight(spec, model, b);
    if (std::abs(wa - wb) > 1e-12 * (1.0 + std::abs(wa))) return false;
  }
  return true;
}

inline std::vector<SingularityPoint> classify(const FrequencyModel& model, Mode m,
                                              const ActionDomain& dom, const PerturbationSpec& spec) {
  std::vector<SingularityPoint> out;

  // lines first: corners lying on a line edge are absorbed into it
  std::array<bool, 4> line{};
  for (Edge e : kEdges) {
    if (dom.is_cutoff(e)) continue;
    double value = 0.0;
    if (detail::edge_is_line(model, m, dom, e, &value)) {
      line[static_cast<int>(e)] = true;
      SingularityPoint sp;
      sp.kind = SingularityKind::Line;
      sp.edge = e;
      sp.x0 = value;
      const auto [lo, hi] = dom.edge_range(e);
      const Action mid = dom.on_edge(e, 0.5 * (lo + hi));
      sp.grad = grad_mu(model, m, mid);
      sp.hess = hess_mu(model, m, mid);
      out.push_back(sp);
    }
  }

  for (Action c : detail::corners(dom)) {
    const auto es = detail::corner_edges(dom, c);
    if (dom.is_cutoff(es[0]) || dom.is_cutoff(es[1])) continue;
    const Vec2 g = grad_mu(model, m, c);
    const double tol = detail::zero_scale(g);
    const bool z1 = std::abs(g.x) <= tol, z2 = std::abs(g.y) <= tol;
    if (z1 && z2)
      throw NonGenericCriticalPoint("stationary point of mu at a domain corner");
    const bool on_line = line[static_cast<int>(es[0])] || line[static_cast<int>(es[1])];
    if ((z1 || z2) && on_line) continue;
    SingularityPoint sp;
    sp.kind = SingularityKind::Vertex;
    sp.location = c;
    sp.x0 = mu(model, m, c);
    sp.grad = g;
    sp.hess = hess_mu(model, m, c);
    sp.special_vertex = z1 || z2;
    out.push_back(sp);
  }

  for (Edge e : kEdges) {
    if (dom.is_cutoff(e) || line[static_cast<int>(e)]) continue;
    const auto [lo, hi] = dom.edge_range(e);
    const int n = dom.bins_per_dim();
    auto d = [&](double s) { return detail::tangential_derivative(model, m, dom, e, s); };
    const double corner_tol = 1e-9 * (hi - lo);
    std::vector<double> roots;
    double s_prev = lo, d_prev = d(lo);
    for (int k = 1; k <= n; ++k) {
      const double s = lo + (hi - lo) * k / n;
      const double dv = d(s);
      double root = std::nan("");
      if (dv == 0.0 && k < n) {
        root = s;
      } else if (d_prev != 0.0 && dv != 0.0 && (d_prev > 0) != (dv > 0)) {
        root = bisect(d, s_prev, s, 1e-14);
      }
      if (std::isfinite(root) && root - lo > corner_tol && hi - root > corner_tol) {
        if (roots.empty() || std::abs(root - roots.back()) > 2.0 * (hi - lo) / n) roots.push_back(root);
      }
      s_prev = s;
      d_prev = dv;
    }
    for (double r : roots) {
      const Action p = dom.on_edge(e, r);
      const Vec2 g = grad_mu(model, m, p);
      const double normal = ActionDomain::fixes_j1(e) ? g.x : g.y;
      const double tangential = ActionDomain::fixes_j1(e) ? g.y : g.x;
      if (std::abs(tangential) >= 1e-10)
        throw DomainError("tangent point refinement failed to reach 1e-10");
      if (std::abs(normal) <= detail::zero_scale(g))
        throw NonGenericCriticalPoint("stationary point of mu on a domain edge");
      SingularityPoint sp;
      sp.kind = SingularityKind::Tangent;
      sp.location = p;
      sp.edge = e;
      sp.x0 = mu(model, m, p);
      sp.grad = g;
      sp.hess = hess_mu(model, m, p);
      out.push_back(sp);
    }
  }

  {
    const int n = std::clamp(dom.bins_per_dim() / 8, 2, 512);
    const double h1 = (dom.j1_max() - dom.j1_min()) / n, h2 = (dom.j2_max() - dom.j2_min()) / n;
    std::vector<Vec2> grid(static_cast<std::size_t>(n + 1) * (n + 1));
    auto node = [&](int i, int j) { return Action{dom.j1_min() + i * h1, dom.j2_min() + j * h2}; };
    for (int i = 0; i <= n; ++i)
      for (int j = 0; j <= n; ++j) grid[i * (n + 1) + j] = grad_mu(model, m, node(i, j));
    std::vector<Action> found;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const Vec2 c[4] = {grid[i * (n + 1) + j], grid[(i + 1) * (n + 1) + j], grid[i * (n + 1) + j + 1],
                           grid[(i + 1) * (n + 1) + j + 1]};
        auto straddles = [&](auto comp) {
          double lo = 1e300, hi = -1e300;
          for (const Vec2& v : c) {
            lo = std::min(lo, comp(v));
            hi = std::max(hi, comp(v));
          }
          return lo <= 0.0 && hi >= 0.0;
        };
        if (!straddles([](Vec2 v) { return v.x; }) || !straddles([](Vec2 v) { return v.y; })) continue;
        Action p{dom.j1_min() + (i + 0.5) * h1, dom.j2_min() + (j + 0.5) * h2};
        bool ok = false;
        for (int it = 0; it < 60; ++it) {
          const Vec2 g = grad_mu(model, m, p);
          if (std::hypot(g.x, g.y) < 1e-13) {
            ok = true;
            break;
          }
          const Sym2 hm = hess_mu(model, m, p);
          const double det = hm.det();
          if (std::abs(det) < 1e-14) break;
          const double dx = (hm.yy * g.x - hm.xy * g.y) / det;
          const double dy = (hm.xx * g.y - hm.xy * g.x) / det;
          p.j1 -= dx;
          p.j2 -= dy;
          if (!dom.contains(p)) break;
        }
        const bool interior = p.j1 > dom.j1_min() && p.j1 < dom.j1_max() && p.j2 > dom.j2_min() &&
                              p.j2 < dom.j2_max();
        if (!interior) continue;
        const Vec2 g = grad_mu(model, m, p);
        if (!ok && std::hypot(g.x, g.y) >= 1e-10) {
          const Sym2 hm = hess_mu(model, m, p);
          if (std::abs(hm.det()) < 1e-12 && std::hypot(g.x, g.y) < 1e-6)
            throw NonGenericCriticalPoint("degenerate Hessian at a stationary point of mu");
          continue;
        }
        bool dup = false;
        for (Action q : found)
          if (std::abs(q.j1 - p.j1) < h1 && std::abs(q.j2 - p.j2) < h2) dup = true;
        if (dup) continue;
        found.push_back(p);
        const Sym2 hm = hess_mu(model, m, p);
        const double det = hm.det();
        const double scale = hm.xx * hm.xx + 2 * hm.xy * hm.xy + hm.yy * hm.yy;
        if (std::abs(det) <= 1e-12 * std::max(scale, 1e-300))
          throw NonGenericCriticalPoint("degenerate Hessian at a stationary point of mu");
        SingularityPoint sp;
        sp.kind = det > 0 ? SingularityKind::CriticalExtremum : SingularityKind::CriticalSaddle;
        sp.location = p;
        sp.x0 = mu(model, m, p);
        sp.grad = g;
        sp.hess = hm;
        out.push_back(sp);
      }
    }
  }

  if (dom.truncated()) {
    try {
      const InfinityExponents ie = infinity_exponents(model, spec, m);
      SingularityPoint sp;
      sp.kind = SingularityKind::Infinity;
      sp.x0 = 0.0;
      sp.mu_decay = ie.a;
      sp.nu_decay = ie.b;
      sp.mu_fit_residual = ie.mu_residual;
      sp.nu_fit_residual = ie.nu_residual;
      out.push_back(sp);
    } catch (const NoInfinitySingularity&) {
    }
  }

  for (auto& sp : out) {
    if (sp.kind == SingularityKind::Infinity) continue;
    Action p;
    if (sp.location) {
      p = *sp.location;
    } else {
      const auto [lo, hi] = dom.edge_range(*sp.edge);
      p = dom.on_edge(*sp.edge, lo);
    }
    const LocalNumerator ln = local_numerator(spec, model, p);
    if (sp.kind == SingularityKind::Line) {
      sp.a1 = ActionDomain::fixes_j1(*sp.edge) ? ln.a1 : ln.a2;
      sp.a2 = 0;
    } else {
      sp.a1 = ln.a1;
      sp.a2 = ln.a2;
    }
  }

  std::sort(out.begin(), out.end(), detail::less_point);
  return out;
}

inline std::vector<SingularityPoint> classify(const FrequencyModel& model, Mode m, const ActionDomain& dom) {
  return classify(model, m, dom, default_perturbation(model, m));
}

// --- damping laws -------------------------------------------------------------

namespace detail {

inline void set_alpha(DampingLaw& law, double alpha) {
  law.alpha = alpha;
  law.power = 1.0 + alpha;
  law.relative_sign.reset();
  switch (law.kind) {
    case SingularityKind::Vertex:
    case SingularityKind::Line:
    case SingularityKind::CriticalExtremum:
      law.relative_sign = -parity_sign(alpha);
      break;
    case SingularityKind::CriticalSaddle:
      law.relative_sign = parity_sign(alpha);
      break;
    case SingularityKind::Infinity:
      if (exact_integer(alpha)) law.relative_sign = -parity_sign(alpha);
      break;
    case SingularityKind::Tangent:
      break;
  }
  const bool zero_freq = std::abs(law.omega0) < 1e-12;
  law.survives_cos = law.survives_sin = true;
  if (zero_freq && law.relative_sign) {
    if (*law.relative_sign == 1) law.survives_sin = false;
    if (*law.relative_sign == -1) law.survives_cos = false;
  }
}

}  // namespace detail

// Local data of mu needed for the promotion parity: whether mu has non-linear
// (vertex, line) or odd (tangent, critical) terms at the singular point.
struct MuStructure {
  bool nonlinear = false;
  bool odd_terms = false;
};

inline MuStructure mu_structure(const FrequencyModel& model, Mode m, const ActionDomain& dom,
                                const SingularityPoint& sp) {
  MuStructure s;
  if (sp.kind == SingularityKind::Infinity) return s;
  Action p;
  if (sp.location) {
    p = *sp.location;
  } else {
    const auto [lo, hi] = dom.edge_range(*sp.edge);
    p = dom.on_edge(*sp.edge, 0.5 * (lo + hi));
  }
  const Vec2 dirs[2] = {{1, 0}, {0, 1}};
  if (sp.kind == SingularityKind::Line) {
    // normal curvature anywhere along the edge
    const auto [lo, hi] = dom.edge_range(*sp.edge);
    for (int k = 0; k < 16; ++k) {
      const Action q = dom.on_edge(*sp.edge, lo + (hi - lo) * (k + 0.5) / 16);
      const Sym2 h = hess_mu(model, m, q);
      const double hn = ActionDomain::fixes_j1(*sp.edge) ? h.xx : h.yy;
      if (std::abs(hn) > 1e-12) s.nonlinear = true;
    }
    const Vec2 nd = ActionDomain::fixes_j1(*sp.edge) ? dirs[0] : dirs[1];
    s.odd_terms = detail::hessian_varies(model, m, dom, p, nd);
    return s;
  }
  s.nonlinear = detail::hessian_nonzero(hess_mu(model, m, p));
  s.odd_terms = detail::hessian_varies(model, m, dom, p, dirs[0]) ||
                detail::hessian_varies(model, m, dom, p, dirs[1]);
  if (sp.kind == SingularityKind::Tangent) {
    const Vec2 td = ActionDomain::fixes_j1(*sp.edge) ? dirs[1] : dirs[0];
    s.odd_terms = detail::hessian_varies(model, m, dom, p, td);
  }
  return s;
}

// Damping law for a singular point given the numerator structure at it.
inline DampingLaw predict_damping(const SingularityPoint& sp, const LocalNumerator& nu,
                                  const MuStructure& ms = {}) {
  if (sp.special_vertex) throw DomainError("special vertex singularity carries no damping law");
  DampingLaw law;
  law.kind = sp.kind;
  law.omega0 = sp.x0;
  switch (sp.kind) {
    case SingularityKind::Vertex: {
      law.form = SingularForm::Log;
      law.promotion_step = (nu.mixed1 || nu.mixed2 || ms.nonlinear || ms.odd_terms) ? 1 : 2;
      detail::set_alpha(law, 1.0 + nu.a1 + nu.a2);
      break;
    }
    case SingularityKind::Line: {
      const int an = nu.a1;  // normal order
      const bool mixed = nu.mixed1;
      law.form = SingularForm::Log;
      law.promotion_step = (mixed || ms.nonlinear || ms.odd_terms) ? 1 : 2;
      detail::set_alpha(law, double(an));
      break;
    }
    case SingularityKind::Tangent: {
      const bool tan_is_1 = !ActionDomain::fixes_j1(sp.edge.value_or(Edge::J2Min));
      int at = tan_is_1 ? nu.a1 : nu.a2;
      const int an = tan_is_1 ? nu.a2 : nu.a1;
      const bool mixed_t = tan_is_1 ? nu.mixed1 : nu.mixed2;
      law.form = SingularForm::Power;
      if (at % 2 == 1) {
        if (mixed_t || ms.odd_terms) {
          ++at;
          law.promoted = true;
        } else {
          law.vanishes = true;
        }
      }
      law.promotion_step = 1;
      detail::set_alpha(law, 0.5 + at / 2.0 + an);
      break;
    }
    case SingularityKind::CriticalExtremum:
    case SingularityKind::CriticalSaddle: {
      int a1 = nu.a1, a2 = nu.a2;
      for (int* a : {&a1, &a2}) {
        if (*a % 2 == 1) {
          const bool mixed = (a == &a1) ? nu.mixed1 : nu.mixed2;
          if (mixed || ms.odd_terms) {
            ++*a;
            law.promoted = true;
          } else {
            law.vanishes = true;
          }
        }
      }
      law.form = sp.kind == SingularityKind::CriticalSaddle ? SingularForm::SaddleLog : SingularForm::Log;
      // an exchange-odd pair keeps only even alpha for the saddle
      law.promotion_step = (sp.kind == SingularityKind::CriticalSaddle && nu.exchange_odd) ? 2 : 1;
      detail::set_alpha(law, (a1 + a2) / 2.0);
      break;
    }
    case SingularityKind::Infinity: {
      const int a = sp.mu_decay, b = sp.nu_decay;
      if (b <= 2) throw DomainError("infinity singularity needs nu decay b > 2 for convergence");
      if (a <= 0) throw DomainError("infinity singularity needs a positive mu decay exponent");
      law.form = (b - 2) % a == 0 ? SingularForm::Log : SingularForm::Power;
      law.promotion_step = 1;
      detail::set_alpha(law, double(b - 2) / a - 1.0);
      break;
    }
  }
  return law;
}

enum class CancellationStatus { Survives, PromotedAfterCancellation, AllOrdersCancelled };

inline std::string_view to_string(CancellationStatus s) {
  switch (s) {
    case CancellationStatus::Survives: return "survives";
    case CancellationStatus::PromotedAfterCancellation: return "cancelled-leading";
    case CancellationStatus::AllOrdersCancelled: return "all-orders-cancelled";
  }
  return "?";
}

struct EffectiveLaw {
  CancellationStatus status = CancellationStatus::Survives;
  DampingLaw law;  // meaningful unless all orders cancel
  int cancelled_orders = 0;
};

inline bool cancels(const DampingLaw& law, Parity parity) {
  return parity == Parity::Cos ? !law.survives_cos : !law.survives_sin;
}

inline EffectiveLaw resolve_cancellation(const DampingLaw& law_plus, const Observable& obs) {
  EffectiveLaw eff;
  eff.law = law_plus;
  if (law_plus.vanishes) {
    eff.status = CancellationStatus::AllOrdersCancelled;
    return eff;
  }
  int guard = 0;
  while (cancels(eff.law, obs.parity)) {
    ++eff.cancelled_orders;
    if (eff.law.promotion_step % 2 == 0 || ++guard > 8) {
      eff.status = CancellationStatus::AllOrdersCancelled;
      return eff;
    }
    detail::set_alpha(eff.law, eff.law.alpha + eff.law.promotion_step);
  }
  eff.status = eff.cancelled_orders > 0 ? CancellationStatus::PromotedAfterCancellation
                                        : CancellationStatus::Survives;
  return eff;
}

// --- observable-level prediction ----------------------------------------------

struct PredictionEntry {
  SingularityPoint point;
  std::optional<DampingLaw> law;  // absent for the special vertex
  std::optional<EffectiveLaw> effective;
};

struct ObservablePrediction {
  Observable observable;
  std::vector<PredictionEntry> entries;
  std::optional<std::size_t> dominant;            // slowest surviving decay
  std::optional<std::size_t> visible_oscillation;  // slowest oscillating law within reach
  bool all_cancelled = false;
  bool exchange_odd = false;
  double vertex_frequency_tabulated = std::nan("");  // closed form with the 2^-4 factor
};

// Oscillating components decaying at most this many powers faster than the
// dominant one are expected to show in a spectrum.
inline constexpr double kVisibleOscillationSpan = 1.0;

inline ObservablePrediction predict_observable(const FrequencyModel& model, const PerturbationSpec& spec,
                                               const Observable& obs, const ActionDomain& dom) {
  ObservablePrediction pred;
  pred.observable = obs;
  const Mode m = obs.n;
  if (!supports(spec, m)) throw ConfigError("observable mode is not carried by the perturbation");
  pred.exchange_odd = exchange_odd(model, spec, m, dom);
  const auto points = classify(model, m, dom, spec);
  for (const auto& sp : points) {
    PredictionEntry e;
    e.point = sp;
    if (!sp.special_vertex) {
      LocalNumerator ln;
      if (sp.kind == SingularityKind::Infinity) {
        ln = {};
      } else if (sp.kind == SingularityKind::Line) {
        const auto [lo, hi] = dom.edge_range(*sp.edge);
        const LocalNumerator raw = local_numerator(spec, model, dom.on_edge(*sp.edge, lo));
        const bool fj1 = ActionDomain::fixes_j1(*sp.edge);
        ln.a1 = fj1 ? raw.a1 : raw.a2;
        ln.mixed1 = fj1 ? raw.mixed1 : raw.mixed2;
      } else {
        ln = local_numerator(spec, model, *sp.location);
      }
      ln.exchange_odd = pred.exchange_odd;
      DampingLaw law = predict_damping(sp, ln, mu_structure(model, m, dom, sp));
      EffectiveLaw eff = resolve_cancellation(law, obs);
      if (pred.exchange_odd && obs.parity == Parity::Sin) {
        // the sine integrand is odd under the exchange: zero at every order
        eff.status = CancellationStatus::AllOrdersCancelled;
      }
      e.law = law;
      e.effective = eff;
    }
    if (sp.kind == SingularityKind::Vertex && model.isochrone() && !sp.special_vertex) {
      const auto& p = *model.isochrone();
      pred.vertex_frequency_tabulated =
          (m.m1 / 2.0 + m.m2) * std::sqrt(p.G * p.M) / (16.0 * std::pow(p.b, 1.5));
    }
    pred.entries.push_back(e);
  }
  double best = 1e300;
  for (std::size_t i = 0; i < pred.entries.size(); ++i) {
    const auto& e = pred.entries[i];
    if (!e.effective || e.effective->status == CancellationStatus::AllOrdersCancelled) continue;
    if (e.effective->law.power < best - 1e-12) {
      best = e.effective->law.power;
      pred.dominant = i;
    }
  }
  pred.all_cancelled = !pred.dominant.has_value();
  if (pred.dominant) {
    double best_osc = 1e300;
    for (std::size_t i = 0; i < pred.entries.size(); ++i) {
      const auto& e = pred.entries[i];
      if (!e.effective || e.effective->status == CancellationStatus::AllOrdersCancelled) continue;
      if (std::abs(e.effective->law.omega0) < 1e-12) continue;
      const double p = e.effective->law.power;
      if (p <= best + kVisibleOscillationSpan + 1e-12 && p < best_osc) {
        best_osc = p;
        pred.visible_oscillation = i;
      }
    }
  }
  return pred;
}

// --- isochrone tangent point --------------------------------------------------

struct TangentPoint {
  double j_star = 0.0;  // angular action of the tangent point on the J2 = 0 edge
  double omega0 = 0.0;
  double residual = 0.0;
  bool special_vertex = false;
};

// Left side of the tangency condition on the J2 = 0 edge; decreasing from -1/3 to -1.
inline double isochrone_tangency_lhs(double x, double G, double M, double b) {
  const double gmb = G * M * b;
  const double q2 = x * x + 4.0 * gmb;
  return -0.5 * (1.0 + x / std::sqrt(q2)) + (2.0 / 3.0) * gmb / q2;
}

inline TangentPoint tangent_point_isochrone(Mode m, double G, double M, double b) {
  if (!(G > 0) || !(M > 0) || !(b > 0)) throw DomainError("tangent_point_isochrone: G, M, b must be positive");
  const FrequencyModel model(Isochrone{G, M, b});
  // window -1 < m2/m1 < -1/3 in integer arithmetic
  const long long a = m.m1, c = m.m2;
  if (a == 0) throw NoTangentPoint("mode has no angular component");
  const long long sgn = a > 0 ? 1 : -1;
  if (a + 3 * c == 0) {
    return {0.0, std::abs(mu(model, m, {0.0, 0.0})), 0.0, true};
  }
  const bool above_minus_one = sgn * c > -sgn * a;      // m2/m1 > -1
  const bool below_third = sgn * 3 * c < -sgn * a;      // m2/m1 < -1/3
  if (!(above_minus_one && below_third)) throw NoTangentPoint("mode ratio outside (-1, -1/3)");
  const double ratio = double(c) / double(a);
  auto f = [&](double x) { return isochrone_tangency_lhs(x, G, M, b) - ratio; };
  double hi = std::sqrt(G * M * b);
  while (f(hi) > 0.0) hi *= 2.0;
  const double x = bisect(f, 0.0, hi, 1e-15);
  const double res = std::abs(f(x));
  if (res >= 1e-12) throw DomainError("tangent point bisection did not reach 1e-12");
  return {x, std::abs(mu(model, m, {x, 0.0})), res, false};
}

}  // namespace algdamp
