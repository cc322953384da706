#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include <algdamp/kernel_oracles.hpp>

using namespace algdamp;
using std::numbers::pi;

TEST(KernelKind, Validation) {
  EXPECT_THROW(KernelKind(KernelFamily::PowerFull, 0.5), DomainError);
  EXPECT_THROW(KernelKind(KernelFamily::PowerLog, -1), DomainError);
  EXPECT_THROW(KernelKind(KernelFamily::PowerHalf, -2), DomainError);
  EXPECT_THROW(KernelKind(KernelFamily::PowerHalf, 0, 0.0), DomainError);
  EXPECT_NO_THROW(KernelKind(KernelFamily::PowerHalf, -0.5));
  EXPECT_NO_THROW(KernelKind(KernelFamily::PowerHalf, 1.5));
}

TEST(PhiUpper, OneDimensionalReduction) {
  // int_0^1 du/(u - i) = ln(1 - i) - ln(-i) = ln2/2 + i pi/4
  const LineKernel k{[](double) { return 1.0; }, 0.0, 1.0, {}};
  const cplx v = phi_at(k, cplx(0, 1));
  EXPECT_NEAR(v.real(), 0.5 * std::log(2.0), 1e-12);
  EXPECT_NEAR(v.imag(), pi / 4, 1e-12);
  // independent closed form at a general point: ln(1 - w) - ln(-w)
  const cplx w(0.3, 0.02);
  const cplx want = std::log(1.0 - w) - std::log(-w);
  EXPECT_LT(std::abs(phi_at(k, w) - want), 1e-11);
}

TEST(PhiUpper, TwoDimensionalBasics) {
  const ActionDomain dom(0, 1, 0, 1, 64);
  auto zero = [](Action) { return 0.0; };
  auto lin = [](Action a) { return a.j1; };
  EXPECT_EQ(phi_upper(zero, lin, cplx(0.5, 1), dom), cplx(0.0, 0.0));
  EXPECT_THROW(phi_upper(zero, lin, cplx(0.5, 0.0), dom), DomainError);
  // nu = 1 and mu = J1 reduce to the one-dimensional integral above
  const cplx v = phi_upper([](Action) { return 1.0; }, lin, cplx(0, 1), dom);
  EXPECT_NEAR(v.real(), 0.5 * std::log(2.0), 1e-12);
  EXPECT_NEAR(v.imag(), pi / 4, 1e-12);
}

TEST(PhiUpper, VertexToyGridRefinement) {
  const ActionDomain coarse = ActionDomain::quadrant(10.0, 256);
  const ActionDomain fine = ActionDomain::quadrant(10.0, 2560);
  auto nu = [](Action a) { return std::exp(-0.5 * (a.j1 * a.j1 + a.j2 * a.j2)); };
  auto mu = [](Action a) { return a.j1 + a.j2; };
  const cplx a = phi_upper(nu, mu, cplx(0, 1), coarse);
  const cplx b = phi_upper(nu, mu, cplx(0, 1), fine, 0);
  EXPECT_LT(std::abs(a - b), 1e-6 * std::abs(b));
}

TEST(BoundaryNumeric, PowerHalfExamples) {
  const KernelKind k(KernelFamily::PowerHalf, 0);
  const cplx in = phi_boundary_numeric(k, 0.5).value;
  EXPECT_NEAR(in.real(), 0.0, 1e-8);
  EXPECT_NEAR(in.imag(), pi, 1e-8);
  const cplx out = phi_boundary_numeric(k, -0.5).value;
  EXPECT_NEAR(out.real(), std::log(3.0), 1e-8);
  EXPECT_NEAR(out.imag(), 0.0, 1e-8);
}

TEST(BoundaryNumeric, PowerFullAtOrigin) {
  // h(0) = 0 for alpha = 1: int_{-1}^{1} u/u du = 2
  const cplx v = phi_boundary_numeric(KernelKind(KernelFamily::PowerFull, 1), 0.0).value;
  EXPECT_NEAR(v.real(), 2.0, 1e-8);
  EXPECT_NEAR(v.imag(), 0.0, 1e-8);
}

TEST(BoundaryNumeric, ImaginaryPartLaw) {
  for (double a : {0.0, 0.5, 1.0, 2.0})
    for (double x : {0.05, 0.2, 0.6}) {
      const KernelKind k(KernelFamily::PowerHalf, a);
      const double ys[] = {1e-5, 1e-6, 1e-7};
      const cplx v = phi_boundary_numeric(k, x, ys).value;
      EXPECT_NEAR(v.imag(), pi * std::pow(x, a), 1e-4) << a << " " << x;
    }
}

TEST(BoundaryNumeric, AgreesWithPlemelj) {
  for (auto f : {KernelFamily::PowerFull, KernelFamily::PowerHalf, KernelFamily::PowerLog})
    for (int a = 0; a <= 2; ++a)
      for (double x : {-0.35, 0.02, 0.45}) {
        const KernelKind k(f, a);
        EXPECT_LT(std::abs(phi_boundary_numeric(k, x).value - phi_boundary_plemelj(k, x)), 1e-6);
      }
}

TEST(BoundaryNumeric, RejectsBadInputs) {
  const KernelKind k(KernelFamily::PowerHalf, 0);
  EXPECT_THROW(phi_boundary_numeric(k, std::nan("")), DomainError);
  const double bad[] = {-1e-3};
  EXPECT_THROW(phi_boundary_numeric(k, 0.5, bad), DomainError);
  EXPECT_THROW(phi_at(k, cplx(0.5, 0.0)), DomainError);
}

TEST(SingularForm, ClosedFormExamples) {
  const KernelKind h0(KernelFamily::PowerHalf, 0);
  cplx v = phi_singular_form(h0, 0.1);
  EXPECT_NEAR(v.real(), -std::log(0.1), 1e-15);
  EXPECT_NEAR(v.imag(), pi, 1e-15);
  v = phi_singular_form(h0, -0.1);
  EXPECT_NEAR(v.real(), -std::log(0.1), 1e-15);
  EXPECT_EQ(v.imag(), 0.0);
  const KernelKind l0(KernelFamily::PowerLog, 0);
  v = phi_singular_form(l0, 0.1, {2.5, 0, 0});
  EXPECT_NEAR(v.real(), 2.5, 1e-15);
  EXPECT_NEAR(v.imag(), pi * std::log(0.1), 1e-15);
  EXPECT_EQ(phi_singular_form(l0, -0.1, {2.5, 0, 0}).real(), 0.0);
}

TEST(RelativeSign, Rules) {
  EXPECT_EQ(relative_sign(SingularForm::Log, 1), 1);
  EXPECT_EQ(relative_sign(SingularForm::Log, 0), -1);
  EXPECT_EQ(relative_sign(SingularForm::Log, 2), -1);
  EXPECT_EQ(relative_sign(SingularForm::SaddleLog, 0), 1);
  EXPECT_EQ(relative_sign(SingularForm::SaddleLog, 1), -1);
  EXPECT_THROW(relative_sign(SingularForm::Power, 0), DomainError);
}

TEST(RelativeSign, MirroredKernelNearOrigin) {
  // singular part of the mirrored boundary value equals sign x original;
  // compare the jump across 0 where regular parts cancel
  for (auto f : {KernelFamily::PowerHalf, KernelFamily::PowerLog})
    for (int a = 0; a <= 2; ++a) {
      const KernelKind k(f, a);
      const LineKernel lk = line_kernel(k);
      const int s = relative_sign(singular_form_of(k), a);
      const auto xs = residual_fit_abscissae();
      std::vector<cplx> diff;
      for (double x : xs)
        diff.push_back(phi_boundary_mirrored(lk, x) - double(s) * phi_boundary_numeric(lk, x).value);
      const auto c = fit_singular_components(xs, diff, a);
      const double leak = std::max({std::abs(c.re_s1), std::abs(c.re_s2), std::abs(c.im_s1), std::abs(c.im_s2)});
      EXPECT_LT(leak, 1e-4) << to_string(f) << " " << a;
    }
}

TEST(SingularFit, RecoversSyntheticCoefficients) {
  const auto xs = residual_fit_abscissae();
  std::vector<cplx> v;
  for (double x : xs) {
    const double H = x > 0 ? 1.0 : 0.0;
    v.push_back({-1.7 * x * std::log(std::abs(x)) + 0.4 * x * H + 3 - 2 * x + x * x,
                 2.2 * x * H + 0.1 + 5 * x * x});
  }
  const auto c = fit_singular_components(xs, v, 1.0);
  EXPECT_NEAR(c.re_s1, -1.7, 1e-8);
  EXPECT_NEAR(c.re_s2, 0.4, 1e-8);
  EXPECT_NEAR(c.im_s1, 0.0, 1e-8);
  EXPECT_NEAR(c.im_s2, 2.2, 1e-8);
}

TEST(KernelSuite, ResidualSmoothnessAndSigns) {
  const KernelSuiteReport r = run_kernel_suite();
  EXPECT_EQ(r.checks.size(), 10u);
  for (const auto& c : r.checks) {
    EXPECT_LT(c.residual_mismatch, kCoefficientTolerance) << to_string(c.kind.family) << " " << c.kind.alpha;
    EXPECT_LT(c.sign_mismatch, kCoefficientTolerance) << to_string(c.kind.family) << " " << c.kind.alpha;
    EXPECT_LT(c.plemelj_gap, kPlemeljTolerance);
  }
  EXPECT_TRUE(r.pass);
  EXPECT_LT(r.seconds, 60.0);
}

TEST(TangentReduction, TwoDimensionalMatchesReduced) {
  const cplx z(0.4, 1e-2);
  for (auto [a1, a2] : {std::pair{0, 0}, {0, 1}, {2, 0}, {2, 1}}) {
    const cplx two = tangent_kernel_2d(a1, a2, z);
    const cplx one = tangent_kernel_reduced(a1, a2, z);
    EXPECT_LT(std::abs(two - one), 1e-6 * std::abs(one)) << a1 << "," << a2;
  }
}

TEST(TangentReduction, OddFirstOrderVanishes) {
  for (double y : {1e-1, 1e-2, 1e-3}) {
    EXPECT_LT(std::abs(tangent_kernel_2d(1, 0, cplx(0.4, y))), 1e-10) << y;
    EXPECT_EQ(tangent_reduction_constant(1, 0), 0.0);
  }
}

TEST(VertexDomains, OnlyRegularDifferences) {
  // every domain shape carries the same singular function, with coefficient
  // +-K fixed by the ray slopes; anything else is regular at 0
  for (int k = 0; k <= 1; ++k)
    for (int l = 0; l <= 1; ++l) {
      const double K = vertex_domain_coefficient(VertexDomain::U1, l);
      for (auto d : {VertexDomain::U1, VertexDomain::U2, VertexDomain::U3, VertexDomain::U4}) {
        const LineKernel lk = vertex_domain_kernel(d, k, l);
        const auto xs = residual_fit_abscissae();
        std::vector<cplx> v;
        for (double x : xs) v.push_back(phi_boundary_numeric(lk, x).value);
        const int n = k + l + 1;
        const auto c = fit_singular_components(xs, v, n);
        const double kappa = vertex_domain_coefficient(d, l);
        EXPECT_NEAR(std::abs(kappa), std::abs(K), 1e-15);
        EXPECT_NEAR(c.re_s1, -kappa, 0.01 * std::abs(K)) << int(d) << " k=" << k << " l=" << l;
        EXPECT_NEAR(c.im_s2, pi * kappa, 0.01 * pi * std::abs(K)) << int(d) << " k=" << k << " l=" << l;
      }
    }
}
