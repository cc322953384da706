#pragma once
// Resolvent phi(z) = int nu/(mu - z): upper half-plane quadrature, boundary
// values on the real axis, closed-form singular parts and the +-m sign rules.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "action_fields.hpp"
#include "numeric.hpp"
#include "parallel.hpp"
#include "singularity_atlas.hpp"

namespace algdamp {

enum class KernelFamily { PowerFull, PowerHalf, PowerLog };

inline std::string_view to_string(KernelFamily f) {
  switch (f) {
    case KernelFamily::PowerFull: return "PowerFull";
    case KernelFamily::PowerHalf: return "PowerHalf";
    case KernelFamily::PowerLog: return "PowerLog";
  }
  return "?";
}

// h(u) = u^alpha on [-c,c] (PowerFull), on [0,c] (PowerHalf), or
// u^alpha ln|u| on [-c,c] (PowerLog).
struct KernelKind {
  KernelFamily family = KernelFamily::PowerHalf;
  double alpha = 0.0;
  double c = 1.0;

  KernelKind() = default;
  KernelKind(KernelFamily f, double a, double cc = 1.0) : family(f), alpha(a), c(cc) {
    if (!(c > 0)) throw DomainError("kernel half-width c must be positive");
    const bool integer = std::abs(a - std::round(a)) < 1e-14;
    if (family != KernelFamily::PowerHalf && !(integer && a >= 0))
      throw DomainError("PowerFull/PowerLog need a non-negative integer alpha");
    if (family == KernelFamily::PowerHalf && integer && a < 0)
      throw DomainError("PowerHalf alpha must not be a negative integer");
  }

  bool integer_alpha() const { return std::abs(alpha - std::round(alpha)) < 1e-14; }
  double lo() const { return family == KernelFamily::PowerHalf ? 0.0 : -c; }
  double hi() const { return c; }

  double h(double u) const {
    const double p = integer_alpha() ? ipow(u, static_cast<int>(std::lround(alpha))) : std::pow(u, alpha);
    return family == KernelFamily::PowerLog ? p * std::log(std::abs(u)) : p;
  }
};

// Generic one-dimensional numerator h on [lo, hi] with optional kinks.
struct LineKernel {
  std::function<double(double)> h;
  double lo = 0.0, hi = 1.0;
  std::vector<double> breaks;
};

inline LineKernel line_kernel(const KernelKind& k) {
  return {[k](double u) { return k.h(u); }, k.lo(), k.hi(), {0.0}};
}

namespace detail {

inline constexpr double kQuadAbsTol = 1e-13;
inline constexpr double kQuadRelTol = 1e-12;

}  // namespace detail

// int_lo^hi h(u)/(u - w) du for Im w > 0, with the pole contribution of h(Re w)
// integrated in closed form.
inline cplx phi_at(const LineKernel& k, cplx w) {
  if (!(w.imag() > 0)) throw DomainError("phi_at requires Im z > 0");
  const double x = w.real(), y = w.imag();
  std::vector<double> br = k.breaks;
  for (double s : {0.0, 1.0, -1.0, 10.0, -10.0, 100.0, -100.0}) br.push_back(x + s * y);
  const bool inside = x > k.lo && x < k.hi;
  double hx = 0.0;
  bool subtract = false;
  if (inside) {
    hx = k.h(x);
    subtract = std::isfinite(hx);
  }
  auto f = [&](double u) -> cplx {
    const double num = subtract ? k.h(u) - hx : k.h(u);
    return num / (cplx(u, 0.0) - w);
  };
  const auto r = integrate_adaptive<cplx>(f, k.lo, k.hi, detail::kQuadAbsTol, detail::kQuadRelTol, br, 200000);
  cplx v = r.value;
  if (subtract) v += hx * (std::log(cplx(k.hi, 0.0) - w) - std::log(cplx(k.lo, 0.0) - w));
  return v;
}

inline cplx phi_at(const KernelKind& k, cplx w) { return phi_at(line_kernel(k), w); }

struct BoundaryEstimate {
  cplx value;
  cplx previous;      // extrapolation with one sample fewer
  double change = 0;  // |value - previous|
  bool stable = false;
  std::vector<double> ys;  // samples used
  std::vector<cplx> samples;
};

inline const std::vector<double>& default_y_sequence() {
  static const std::vector<double> ys = {1e-2, 1e-3, 1e-4, 1e-5};
  return ys;
}

// Limit y -> 0+ of phi(x + iy) by polynomial extrapolation in y. Samples farther
// than |x|/4 from the axis lie outside the expansion's convergence disc and are
// replaced by a geometric continuation of the sequence.
inline BoundaryEstimate phi_boundary_numeric(const LineKernel& k, double x,
                                             std::span<const double> ys = default_y_sequence(),
                                             double stable_tol = 1e-6) {
  if (ys.empty()) throw DomainError("phi_boundary_numeric: empty y sequence");
  std::vector<double> use;
  double reach = std::abs(x) / 4.0;
  for (double kink : k.breaks)
    if (std::abs(x - kink) > 0) reach = std::min(reach, std::abs(x - kink) / 4.0);
  for (double end : {k.lo, k.hi})
    if (std::abs(x - end) > 0) reach = std::min(reach, std::abs(x - end) / 4.0);
  for (double y : ys) {
    if (!(y > 0)) throw DomainError("phi_boundary_numeric: y values must be positive");
    if (y < reach || reach == 0.0) use.push_back(y);
  }
  double next = use.empty() ? std::min(ys.back(), reach) : use.back() / 10.0;
  while (use.size() < 3) {
    use.push_back(next);
    next /= 10.0;
  }
  BoundaryEstimate est;
  est.ys = use;
  for (double y : use) est.samples.push_back(phi_at(k, cplx(x, y)));
  // Neville table evaluated at y = 0
  const std::size_t n = use.size();
  std::vector<cplx> p(est.samples);
  std::vector<cplx> diag{p[0]};
  for (std::size_t m = 1; m < n; ++m) {
    for (std::size_t i = 0; i + m < n; ++i) {
      const double yi = use[i], yj = use[i + m];
      p[i] = (yi * p[i + 1] - yj * p[i]) / (yi - yj);
    }
    diag.push_back(p[0]);
  }
  est.value = diag.back();
  est.previous = diag.size() > 1 ? diag[diag.size() - 2] : diag.back();
  est.change = std::abs(est.value - est.previous);
  est.stable = est.change <= stable_tol * (1.0 + std::abs(est.value));
  return est;
}

inline BoundaryEstimate phi_boundary_numeric(const KernelKind& k, double x,
                                             std::span<const double> ys = default_y_sequence()) {
  if (!std::isfinite(x)) throw DomainError("phi_boundary_numeric: x must be finite");
  return phi_boundary_numeric(line_kernel(k), x, ys);
}

// Boundary value from the Plemelj decomposition: principal value with a
// symmetric excision of half-width eps (the excised part is taken from the
// local slope of h) plus i pi h(x) on the support.
inline cplx phi_boundary_plemelj(const LineKernel& k, double x, double eps = 1e-6) {
  const bool inside = x > k.lo && x < k.hi;
  std::vector<double> br = k.breaks;
  if (!inside) {
    auto f = [&](double u) { return k.h(u) / (u - x); };
    return integrate_adaptive<double>(f, k.lo, k.hi, detail::kQuadAbsTol, detail::kQuadRelTol, br, 200000).value;
  }
  const double hx = k.h(x);
  auto g = [&](double u) { return (k.h(u) - hx) / (u - x); };
  double pv = 0.0;
  if (x - eps > k.lo)
    pv += integrate_adaptive<double>(g, k.lo, x - eps, detail::kQuadAbsTol, detail::kQuadRelTol, br, 200000).value;
  if (x + eps < k.hi)
    pv += integrate_adaptive<double>(g, x + eps, k.hi, detail::kQuadAbsTol, detail::kQuadRelTol, br, 200000).value;
  // excised core: int_{-eps}^{eps} (h(x+v) - h(x))/v dv ~ 2 eps h'(x)
  const double d = 0.5 * eps;
  pv += 2.0 * eps * (k.h(x + d) - k.h(x - d)) / (2.0 * d);
  pv += hx * std::log((k.hi - x) / (x - k.lo));
  return {pv, std::numbers::pi * hx};
}

inline cplx phi_boundary_plemelj(const KernelKind& k, double x, double eps = 1e-6) {
  return phi_boundary_plemelj(line_kernel(k), x, eps);
}

// Boundary value of the mirrored kernel -int h(u)/(u + x + iy) du, which is
// -conj(phi+(-x)) for real h.
inline cplx phi_boundary_mirrored(const LineKernel& k, double x) {
  return -std::conj(phi_boundary_numeric(k, -x).value);
}

// --- closed-form singular parts ---------------------------------------------

struct FormConstants {
  double c = 0.0;   // form 2 real-part step coefficient
  double c1 = 0.0;  // form 1b, x > 0
  double c2 = 0.0;  // form 1b, x < 0
};

inline SingularForm singular_form_of(const KernelKind& k) {
  if (k.family == KernelFamily::PowerLog) return SingularForm::SaddleLog;
  if (k.family == KernelFamily::PowerHalf && !k.integer_alpha()) return SingularForm::Power;
  return SingularForm::Log;
}

inline cplx phi_singular_form(const KernelKind& k, double x, const FormConstants& fc = {}) {
  const double a = k.alpha;
  const double H = x > 0 ? 1.0 : 0.0;
  switch (k.family) {
    case KernelFamily::PowerFull: return {0.0, 0.0};
    case KernelFamily::PowerHalf: {
      if (k.integer_alpha()) {
        const double xa = ipow(x, static_cast<int>(std::lround(a)));
        return {-xa * std::log(std::abs(x)), std::numbers::pi * xa * H};
      }
      const double p = std::pow(std::abs(x), a);
      return {x > 0 ? fc.c1 * p : fc.c2 * p, std::numbers::pi * p * H};
    }
    case KernelFamily::PowerLog: {
      const double xa = ipow(x, static_cast<int>(std::lround(a)));
      return {fc.c * xa * H, std::numbers::pi * xa * std::log(std::abs(x))};
    }
  }
  return {};
}

// Relative sign between the singular parts of modes -m and m at x0 = 0.
inline int relative_sign(SingularForm form, int alpha) {
  if (alpha < 0) throw DomainError("relative_sign: alpha must be a non-negative integer");
  switch (form) {
    case SingularForm::Log: return (alpha % 2 == 0) ? -1 : 1;
    case SingularForm::SaddleLog: return (alpha % 2 == 0) ? 1 : -1;
    case SingularForm::Power: break;
  }
  throw DomainError("no simple relative-sign relation for the power-type singularity");
}

// --- singular-component regression -------------------------------------------

// Coefficients of the leading singular functions in a sampled boundary value.
// Integer alpha: s1 = x^a ln|x|, s2 = x^a H(x). Otherwise s1 = |x|^a H(x),
// s2 = |x|^a H(-x). Regular polynomials and the next two singular orders are
// fitted alongside and discarded.
struct SingularComponents {
  double re_s1 = 0, re_s2 = 0, im_s1 = 0, im_s2 = 0;
  double re_rms = 0, im_rms = 0;
};

inline std::vector<double> residual_fit_abscissae(double x_min = 1e-3, double x_max = 1e-1, int per_side = 24) {
  std::vector<double> xs;
  for (int i = 0; i < per_side; ++i) {
    const double v = x_min * std::pow(x_max / x_min, double(i) / (per_side - 1));
    xs.push_back(-v);
    xs.push_back(v);
  }
  return xs;
}

inline SingularComponents fit_singular_components(std::span<const double> xs, std::span<const cplx> vals,
                                                  double alpha) {
  const bool integer = std::abs(alpha - std::round(alpha)) < 1e-14;
  std::vector<std::function<double(double)>> basis;
  auto H = [](double x) { return x > 0 ? 1.0 : 0.0; };
  for (int j = 0; j < 3; ++j) {
    const double e = alpha + j;
    if (integer) {
      const int n = static_cast<int>(std::lround(e));
      basis.push_back([n](double x) { return ipow(x, n) * std::log(std::abs(x)); });
      basis.push_back([n, H](double x) { return ipow(x, n) * H(x); });
    } else {
      basis.push_back([e, H](double x) { return std::pow(std::abs(x), e) * H(x); });
      basis.push_back([e, H](double x) { return std::pow(std::abs(x), e) * H(-x); });
    }
  }
  const int degree = static_cast<int>(std::ceil(alpha)) + 4;
  for (int d = 0; d <= degree; ++d) basis.push_back([d](double x) { return ipow(x, d); });
  const auto n = static_cast<Eigen::Index>(xs.size());
  const auto p = static_cast<Eigen::Index>(basis.size());
  Eigen::MatrixXd A(n, p);
  Eigen::VectorXd re(n), im(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) A(i, j) = basis[j](xs[i]);
    re(i) = vals[i].real();
    im(i) = vals[i].imag();
  }
  Eigen::VectorXd scale = A.colwise().norm().transpose();
  for (Eigen::Index j = 0; j < p; ++j)
    if (scale(j) > 0) A.col(j) /= scale(j);
  Eigen::VectorXd cr = least_squares(A, re), ci = least_squares(A, im);
  for (Eigen::Index j = 0; j < p; ++j) {
    if (scale(j) > 0) {
      cr(j) /= scale(j);
      ci(j) /= scale(j);
    }
  }
  SingularComponents sc;
  sc.re_s1 = cr(0);
  sc.re_s2 = cr(1);
  sc.im_s1 = ci(0);
  sc.im_s2 = ci(1);
  for (Eigen::Index j = 0; j < p; ++j) A.col(j) *= scale(j);
  sc.re_rms = std::sqrt((A * cr - re).squaredNorm() / double(n));
  sc.im_rms = std::sqrt((A * ci - im).squaredNorm() / double(n));
  return sc;
}

// --- upper half-plane quadrature ---------------------------------------------

// Tensor-product composite Gauss-Legendre (8 nodes per panel, bins/8 panels per
// dimension) of nu/(mu - z) over the domain box.
template <class Nu, class Mu>
cplx phi_upper(Nu&& nu, Mu&& muf, cplx z, const ActionDomain& dom, unsigned threads = 1) {
  if (!(z.imag() > 0)) throw DomainError("phi_upper requires Im z > 0; use the boundary evaluators");
  constexpr int order = 8;
  const GaussRule g = gauss_legendre(order);
  const int panels = std::max(1, dom.bins_per_dim() / order);
  const double p1 = (dom.j1_max() - dom.j1_min()) / panels, p2 = (dom.j2_max() - dom.j2_min()) / panels;
  const int n = panels * order;
  std::vector<double> x1(n), w1(n), x2(n), w2(n);
  for (int p = 0; p < panels; ++p) {
    for (int q = 0; q < order; ++q) {
      x1[p * order + q] = dom.j1_min() + p1 * (p + 0.5 * (g.nodes[q] + 1.0));
      w1[p * order + q] = 0.5 * p1 * g.weights[q];
      x2[p * order + q] = dom.j2_min() + p2 * (p + 0.5 * (g.nodes[q] + 1.0));
      w2[p * order + q] = 0.5 * p2 * g.weights[q];
    }
  }
  std::vector<cplx> rows(n);
  parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t i) {
    CompensatedComplexSum s;
    for (int j = 0; j < n; ++j) {
      const Action a{x1[i], x2[j]};
      const double v = nu(a);
      if (v == 0.0) continue;
      s.add(w2[j] * v / (muf(a) - z));
    }
    rows[i] = w1[i] * s.value();
  });
  return pairwise_sum(std::span<const cplx>(rows));
}

// --- reductions used by the property suite ------------------------------------

// Two-dimensional tangent kernel J1^a1 J2^a2 / (J1^2 + J2 - z) over the region
// J2 >= 0, J1^2 + J2 <= u0, by nested adaptive quadrature.
inline cplx tangent_kernel_2d(int a1, int a2, cplx z, double u0 = 1.0) {
  const double r = std::sqrt(u0);
  auto outer = [&](double j1) -> cplx {
    const double top = u0 - j1 * j1;
    if (top <= 0) return 0.0;
    auto inner = [&](double j2) -> cplx { return ipow(j1, a1) * ipow(j2, a2) / (cplx(j1 * j1 + j2, 0.0) - z); };
    const double xs = z.real() - j1 * j1;
    std::vector<double> br;
    for (double s : {0.0, 1.0, -1.0, 10.0, -10.0}) br.push_back(xs + s * z.imag());
    return integrate_adaptive<cplx>(inner, 0.0, top, 1e-15, 1e-13, br, 100000).value;
  };
  std::vector<double> br;
  if (z.real() > 0) {
    const double s = std::sqrt(z.real());
    br = {-s, s};
  }
  br.push_back(0.0);
  return integrate_adaptive<cplx>(outer, -r, r, 1e-14, 1e-12, br, 100000).value;
}

// int_{-1}^{1} s^a1 (1 - s^2)^a2 ds
inline double tangent_reduction_constant(int a1, int a2) {
  if (a1 % 2 == 1) return 0.0;
  return std::exp(std::lgamma((a1 + 1) / 2.0) + std::lgamma(a2 + 1.0) - std::lgamma((a1 + 3) / 2.0 + a2));
}

// One-dimensional reduced form int_0^u0 u^(1/2 + a1/2 + a2)/(u - z) du.
inline cplx tangent_kernel_reduced(int a1, int a2, cplx z, double u0 = 1.0) {
  const double e = 0.5 + a1 / 2.0 + a2;
  const LineKernel k{[e](double u) { return std::pow(u, e); }, 0.0, u0, {0.0}};
  return tangent_reduction_constant(a1, a2) * phi_at(k, z);
}

// Vertex neighbourhoods of the (u, v) plane. Rays v = ra*u and v = rb*u, box
// half-widths eps (in u) and delta (in v); the v-integral of v^l is done
// exactly, leaving a one-dimensional numerator in u.
enum class VertexDomain { U1, U2, U3, U4 };

inline LineKernel vertex_domain_kernel(VertexDomain d, int k, int l, double ra = 2.0, double rb = 0.5,
                                       double eps = 0.5, double delta = 4.0) {
  auto vint = [l](double a, double b) { return (std::pow(b, l + 1) - std::pow(a, l + 1)) / (l + 1); };
  std::function<double(double)> h;
  switch (d) {
    case VertexDomain::U1:  // wedge rb*u < v < ra*u, u > 0
      h = [=](double u) { return u > 0 ? ipow(u, k) * vint(rb * u, ra * u) : 0.0; };
      break;
    case VertexDomain::U2:  // box minus the wedge
      h = [=](double u) {
        if (u > 0) return ipow(u, k) * (vint(-delta, rb * u) + vint(ra * u, delta));
        return ipow(u, k) * vint(-delta, delta);
      };
      break;
    case VertexDomain::U3:  // above the broken line v = ra*u (u > 0), v = rb*u (u < 0)
      h = [=](double u) { return ipow(u, k) * (u > 0 ? vint(ra * u, delta) : vint(rb * u, delta)); };
      break;
    case VertexDomain::U4:  // below the broken line
      h = [=](double u) { return ipow(u, k) * (u > 0 ? vint(-delta, ra * u) : vint(-delta, rb * u)); };
      break;
  }
  return {h, -eps, eps, {0.0}};
}

// Expected coefficient kappa of the form -kappa u^n ln|u| + i pi kappa u^n H(u)
// with n = k + l + 1.
inline double vertex_domain_coefficient(VertexDomain d, int l, double ra = 2.0, double rb = 0.5) {
  const double K = (std::pow(ra, l + 1) - std::pow(rb, l + 1)) / (l + 1);
  switch (d) {
    case VertexDomain::U1: return K;
    case VertexDomain::U2: return -K;
    case VertexDomain::U3: return -K;
    case VertexDomain::U4: return K;
  }
  return 0.0;
}

// --- property suite -------------------------------------------------------------

struct KernelCheck {
  KernelKind kind;
  SingularForm form = SingularForm::Log;
  SingularComponents fitted;    // components of the numeric boundary value
  SingularComponents residual;  // components left after removing the closed form
  FormConstants constants;      // fitted constants of the closed form
  double residual_mismatch = 0.0;  // largest leftover leading coefficient
  std::optional<int> sign;         // relative sign under m -> -m
  double sign_mismatch = 0.0;
  double plemelj_gap = 0.0;  // max |extrapolated - Plemelj| on probe points
  bool pass = false;
};

struct KernelSuiteReport {
  std::vector<KernelCheck> checks;
  double seconds = 0.0;
  bool pass = false;
};

inline constexpr double kCoefficientTolerance = 0.01;
inline constexpr double kPlemeljTolerance = 1e-6;

namespace detail {

inline double leading_norm(const SingularComponents& c) {
  return std::max({std::abs(c.re_s1), std::abs(c.re_s2), std::abs(c.im_s1), std::abs(c.im_s2)});
}

}  // namespace detail

inline KernelCheck check_kernel(const KernelKind& k) {
  KernelCheck out;
  out.kind = k;
  out.form = singular_form_of(k);
  const auto xs = residual_fit_abscissae();
  const LineKernel lk = line_kernel(k);
  std::vector<cplx> vals;
  vals.reserve(xs.size());
  for (double x : xs) vals.push_back(phi_boundary_numeric(lk, x).value);
  out.fitted = fit_singular_components(xs, vals, k.alpha);
  // constants that the closed form leaves free
  if (k.family == KernelFamily::PowerLog) out.constants.c = out.fitted.re_s2;
  if (k.family == KernelFamily::PowerHalf && !k.integer_alpha()) {
    out.constants.c1 = out.fitted.re_s1;
    out.constants.c2 = out.fitted.re_s2;
  }
  std::vector<cplx> res(vals.size());
  for (std::size_t i = 0; i < xs.size(); ++i) res[i] = vals[i] - phi_singular_form(k, xs[i], out.constants);
  out.residual = fit_singular_components(xs, res, k.alpha);
  // the scale is the size of the singular part itself (pi for the step/log terms)
  out.residual_mismatch = detail::leading_norm(out.residual) / std::numbers::pi;

  if (k.integer_alpha() && k.family != KernelFamily::PowerFull) {
    const int a = static_cast<int>(std::lround(k.alpha));
    out.sign = relative_sign(out.form, a);
    std::vector<cplx> diff(xs.size());
    // xs holds +-v pairs, so -x of entry i is entry i^1
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const cplx mirrored = -std::conj(vals[i ^ 1u]);
      diff[i] = mirrored - double(*out.sign) * vals[i];
    }
    const auto c = fit_singular_components(xs, diff, k.alpha);
    out.sign_mismatch = detail::leading_norm(c) / std::numbers::pi;
  }

  for (double x : {-0.3, 0.05, 0.4}) {
    const cplx a = phi_boundary_numeric(lk, x).value, b = phi_boundary_plemelj(lk, x);
    out.plemelj_gap = std::max(out.plemelj_gap, std::abs(a - b));
  }
  out.pass = out.residual_mismatch < kCoefficientTolerance && out.sign_mismatch < kCoefficientTolerance &&
             out.plemelj_gap < kPlemeljTolerance;
  return out;
}

// All families at alpha = 0, 1, 2, plus the non-integer power case at 1/2.
inline KernelSuiteReport run_kernel_suite() {
  const auto start = std::chrono::steady_clock::now();
  KernelSuiteReport r;
  for (auto f : {KernelFamily::PowerFull, KernelFamily::PowerHalf, KernelFamily::PowerLog})
    for (int a = 0; a <= 2; ++a) r.checks.push_back(check_kernel(KernelKind(f, a)));
  r.checks.push_back(check_kernel(KernelKind(KernelFamily::PowerHalf, 0.5)));
  r.pass = std::all_of(r.checks.begin(), r.checks.end(), [](const KernelCheck& c) { return c.pass; });
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

}  // namespace algdamp
