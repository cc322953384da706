#pragma once
// Small numerical kernels: compensated and pairwise summation, Gauss rules,
// adaptive Gauss-Kronrod, bracketing root finder, least squares.
#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <numbers>
#include <queue>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"

namespace algdamp {

using cplx = std::complex<double>;

// Neumaier variant of Kahan summation.
struct CompensatedSum {
  double sum = 0.0;
  double comp = 0.0;

  void add(double x) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x))
      comp += (sum - t) + x;
    else
      comp += (x - t) + sum;
    sum = t;
  }
  double value() const { return sum + comp; }
};

struct CompensatedComplexSum {
  CompensatedSum re, im;
  void add(cplx z) {
    re.add(z.real());
    im.add(z.imag());
  }
  cplx value() const { return {re.value(), im.value()}; }
};

// Pairwise reduction with compensated leaves. The split points depend only on
// the length, so the result is reproducible for a given input ordering.
inline double pairwise_sum(std::span<const double> x) {
  constexpr std::size_t leaf = 256;
  if (x.size() <= leaf) {
    CompensatedSum s;
    for (double v : x) s.add(v);
    return s.value();
  }
  const std::size_t half = x.size() / 2;
  return pairwise_sum(x.first(half)) + pairwise_sum(x.subspan(half));
}

inline cplx pairwise_sum(std::span<const cplx> x) {
  constexpr std::size_t leaf = 256;
  if (x.size() <= leaf) {
    CompensatedComplexSum s;
    for (cplx v : x) s.add(v);
    return s.value();
  }
  const std::size_t half = x.size() / 2;
  return pairwise_sum(x.first(half)) + pairwise_sum(x.subspan(half));
}

struct GaussRule {
  std::vector<double> nodes;    // on [-1,1]
  std::vector<double> weights;
};

// Gauss-Legendre nodes by Newton iteration on P_n.
inline GaussRule gauss_legendre(int n) {
  if (n < 1) throw DomainError("gauss_legendre: n must be positive");
  GaussRule r;
  if (n == 1) return {{0.0}, {2.0}};
  r.nodes.resize(n);
  r.weights.resize(n);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    r.nodes[i] = -x;
    r.nodes[n - 1 - i] = x;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    r.weights[i] = r.weights[n - 1 - i] = w;
  }
  return r;
}

template <class T>
struct QuadResult {
  T value{};
  double abserr = 0.0;
  int evaluations = 0;
  bool converged = false;
};

namespace detail {

template <class T>
double magnitude(const T& v) {
  return std::abs(v);
}

// 7-point Gauss / 15-point Kronrod pair.
template <class T, class F>
std::pair<T, double> gk15(F& f, double a, double b) {
  static constexpr std::array<double, 8> xk = {
      0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
      0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
      0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
      0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
  static constexpr std::array<double, 8> wk = {
      0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
      0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
      0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
      0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
  static constexpr std::array<double, 4> wg = {
      0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
      0.381830050505118944950369775488975, 0.417959183673469387755102040816327};
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const T fc = f(c);
  T rk = fc * wk[7];
  T rg = fc * wg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = h * xk[j];
    const T s = f(c - dx) + f(c + dx);
    rk += s * wk[j];
    if (j % 2 == 1) rg += s * wg[j / 2];
  }
  return {rk * h, magnitude(T((rk - rg) * h))};
}

}  // namespace detail

// Globally adaptive Gauss-Kronrod quadrature on [a,b]; `breaks` are interior
// points that always start as panel edges.
template <class T, class F>
QuadResult<T> integrate_adaptive(F&& f, double a, double b, double abs_tol, double rel_tol,
                                 std::span<const double> breaks = {}, int max_panels = 20000) {
  struct Panel {
    double a, b;
    T val;
    double err;
    bool operator<(const Panel& o) const { return err < o.err; }
  };
  std::vector<double> edges{a};
  for (double x : breaks)
    if (x > a && x < b) edges.push_back(x);
  edges.push_back(b);
  std::sort(edges.begin(), edges.end());
  std::priority_queue<Panel> queue;
  QuadResult<T> res;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    if (edges[i + 1] <= edges[i]) continue;
    auto [v, e] = detail::gk15<T>(f, edges[i], edges[i + 1]);
    res.evaluations += 15;
    queue.push({edges[i], edges[i + 1], v, e});
  }
  auto totals = [&]() {
    T v{};
    double e = 0.0;
    auto copy = queue;
    while (!copy.empty()) {
      v += copy.top().val;
      e += copy.top().err;
      copy.pop();
    }
    return std::pair<T, double>{v, e};
  };
  T total{};
  double err_sum = 0.0;
  {
    auto [v, e] = totals();
    total = v;
    err_sum = e;
  }
  int panels = static_cast<int>(queue.size());
  while (!queue.empty() && err_sum > std::max(abs_tol, rel_tol * detail::magnitude(total))) {
    if (panels >= max_panels) break;
    Panel p = queue.top();
    queue.pop();
    const double m = 0.5 * (p.a + p.b);
    if (!(m > p.a && m < p.b)) {
      queue.push(p);
      break;
    }
    auto [v1, e1] = detail::gk15<T>(f, p.a, m);
    auto [v2, e2] = detail::gk15<T>(f, m, p.b);
    res.evaluations += 30;
    total += (v1 + v2) - p.val;
    err_sum += (e1 + e2) - p.err;
    queue.push({p.a, m, v1, e1});
    queue.push({m, p.b, v2, e2});
    ++panels;
  }
  // recompute from panels to shed drift in the running totals
  auto [v, e] = totals();
  res.value = v;
  res.abserr = e;
  res.converged = e <= std::max(abs_tol, rel_tol * detail::magnitude(v));
  return res;
}

// Bisection on a sign-changing bracket; stops when the bracket collapses to
// adjacent doubles or |f| <= ftol.
template <class F>
double bisect(F&& f, double lo, double hi, double ftol = 0.0, int max_iter = 400) {
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0) == (fhi > 0)) throw DomainError("bisect: root not bracketed");
  for (int it = 0; it < max_iter; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double fm = f(mid);
    if (fm == 0.0 || std::abs(fm) <= ftol) return mid;
    if ((fm > 0) == (flo > 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
      fhi = fm;
    }
  }
  return std::abs(flo) < std::abs(fhi) ? lo : hi;
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double r_squared = 0.0;
  double residual_rms = 0.0;
};

// Weighted least-squares line y = intercept + slope*x.
inline LineFit fit_line(std::span<const double> x, std::span<const double> y,
                        std::span<const double> w = {}) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n || (!w.empty() && w.size() != n))
    throw InsufficientData("fit_line: need at least two matching points");
  double sw = 0, sx = 0, sy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double wi = w.empty() ? 1.0 : w[i];
    sw += wi;
    sx += wi * x[i];
    sy += wi * y[i];
  }
  const double mx = sx / sw, my = sy / sw;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double wi = w.empty() ? 1.0 : w[i];
    sxx += wi * (x[i] - mx) * (x[i] - mx);
    sxy += wi * (x[i] - mx) * (y[i] - my);
    syy += wi * (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0) throw InsufficientData("fit_line: degenerate abscissae");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ssr = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double wi = w.empty() ? 1.0 : w[i];
    const double r = y[i] - f.intercept - f.slope * x[i];
    ssr += wi * r * r;
  }
  // Kish effective sample size keeps the error estimate meaningful for
  // non-uniform weights.
  double sw2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double wi = w.empty() ? 1.0 : w[i];
    sw2 += wi * wi;
  }
  const double neff = sw * sw / sw2;
  f.residual_rms = std::sqrt(ssr / sw);
  f.slope_stderr = neff > 2 ? std::sqrt(ssr / sw * neff / (neff - 2.0) / (sxx / sw) / neff) : 0.0;
  f.r_squared = syy > 0 ? 1.0 - ssr / syy : 1.0;
  return f;
}

// Dense least squares via column-pivoted QR.
inline Eigen::VectorXd least_squares(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  return a.colPivHouseholderQr().solve(b);
}

}  // namespace algdamp
