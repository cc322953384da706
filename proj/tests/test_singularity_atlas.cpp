#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include <algdamp/config.hpp>
#include <algdamp/io.hpp>
#include <algdamp/singularity_atlas.hpp>

using namespace algdamp;

namespace {

ObservablePrediction predict_toy(const FrequencyModel& m, const ToyFactorized& g, int index) {
  return predict_observable(m, g, toy_observable(index), m.default_domain(4096));
}

// Tabulated cell: exponent of the dominant surviving law, or C for all orders cancelled.
void expect_cell(const ObservablePrediction& p, double power, const std::string& label) {
  if (power < 0) {
    EXPECT_TRUE(p.all_cancelled) << label;
    return;
  }
  ASSERT_FALSE(p.all_cancelled) << label;
  EXPECT_DOUBLE_EQ(p.entries[*p.dominant].effective->law.power, power) << label;
}

constexpr double C = -1.0;

}  // namespace

TEST(Classify, GoldenInventories) {
  std::ifstream f(std::string(ALGDAMP_GOLDEN_DIR) + "/inventories.json");
  ASSERT_TRUE(f) << "golden file missing";
  const json golden = json::parse(f);
  ASSERT_GE(golden.at("cases").size(), 6u);
  for (const auto& c : golden.at("cases")) {
    const FrequencyModel m = model_from_name(c.at("model").get<std::string>());
    const Mode mode(c.at("mode")[0].get<int>(), c.at("mode")[1].get<int>());
    const auto pts = classify(m, mode, m.default_domain(4096));
    const std::string label = c.at("model").get<std::string>() + " " + c.at("mode").dump();
    ASSERT_EQ(pts.size(), c.at("singularities").size()) << label;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const json want = c.at("singularities")[i];
      const json got = to_json(pts[i]);
      EXPECT_EQ(got.at("kind"), want.at("kind")) << label << " #" << i;
      EXPECT_EQ(got.at("edge"), want.at("edge")) << label << " #" << i;
      EXPECT_NEAR(got.at("x0").get<double>(), want.at("x0").get<double>(), 1e-6) << label << " #" << i;
      if (want.at("location").is_null()) {
        EXPECT_TRUE(got.at("location").is_null()) << label;
      } else {
        EXPECT_NEAR(got.at("location")[0].get<double>(), want.at("location")[0].get<double>(), 1e-6) << label;
        EXPECT_NEAR(got.at("location")[1].get<double>(), want.at("location")[1].get<double>(), 1e-6) << label;
      }
      if (want.contains("mu_decay")) {
        EXPECT_EQ(got.at("mu_decay"), want.at("mu_decay")) << label;
        EXPECT_EQ(got.at("nu_decay"), want.at("nu_decay")) << label;
      }
    }
  }
}

TEST(Classify, CompositeToyInventoryHasNoCriticalOrInfinity) {
  const FrequencyModel m(CompositeToy{});
  for (Mode md : {Mode(1, 1), Mode(1, -1), Mode(-1, 1), Mode(-1, -1)}) {
    for (const auto& p : classify(m, md, m.default_domain(4096))) {
      EXPECT_FALSE(is_critical(p.kind));
      EXPECT_NE(p.kind, SingularityKind::Infinity);
    }
  }
}

TEST(Classify, RefinedLocationsSatisfyDefiningConditions) {
  for (const char* name : {"tangent-toy", "critical-toy", "composite-toy", "isochrone"}) {
    const FrequencyModel m = model_from_name(name);
    for (Mode md : {Mode(1, 1), Mode(1, -1), Mode(2, -1), Mode(3, -2)}) {
      std::vector<SingularityPoint> pts;
      try {
        pts = classify(m, md, m.default_domain(4096));
      } catch (const NonGenericCriticalPoint&) {
        continue;
      }
      for (const auto& p : pts) {
        if (p.kind == SingularityKind::Tangent) {
          const Vec2 g = grad_mu(m, md, *p.location);
          const double tangential = ActionDomain::fixes_j1(*p.edge) ? g.y : g.x;
          EXPECT_LT(std::abs(tangential), 1e-10) << name;
        } else if (is_critical(p.kind)) {
          const Vec2 g = grad_mu(m, md, *p.location);
          EXPECT_LT(std::hypot(g.x, g.y), 1e-10) << name;
        }
      }
    }
  }
}

TEST(Classify, DegenerateCriticalSetIsReported) {
  // mu = (J1-1)^2 is stationary along the whole line J1 = 1
  const FrequencyModel m(CriticalToy{});
  EXPECT_THROW(classify(m, Mode(1, 0), m.default_domain(4096)), NonGenericCriticalPoint);
}

TEST(Classify, SpecialVertexCarriesNoLaw) {
  const FrequencyModel m(Isochrone{});
  const auto p = predict_observable(m, IsochroneCosCos{1, 3, -1}, {Mode(3, -1), Parity::Sin}, m.default_domain(4096));
  bool seen = false;
  for (const auto& e : p.entries)
    if (e.point.special_vertex) {
      seen = true;
      EXPECT_FALSE(e.law.has_value());
    }
  EXPECT_TRUE(seen);
}

TEST(PredictDamping, DictionaryExamples) {
  SingularityPoint v;
  v.kind = SingularityKind::Vertex;
  const DampingLaw lv = predict_damping(v, {});
  EXPECT_DOUBLE_EQ(lv.power, 2.0);
  EXPECT_EQ(lv.omega0, 0.0);
  EXPECT_EQ(lv.relative_sign, 1);

  SingularityPoint inf;
  inf.kind = SingularityKind::Infinity;
  inf.mu_decay = 3;
  inf.nu_decay = 4;
  const DampingLaw li = predict_damping(inf, {});
  EXPECT_NEAR(li.power, 2.0 / 3.0, 1e-15);
  EXPECT_EQ(li.omega0, 0.0);

  inf.nu_decay = 2;
  EXPECT_THROW(predict_damping(inf, {}), DomainError);
}

TEST(PredictDamping, TangentOddOrderIsPromoted) {
  const FrequencyModel m(TangentToy{});
  const auto p = predict_toy(m, ToyFactorized{2, 0, 1, 0, 1.0, 0.0}, 1);
  const auto& e = p.entries[*p.dominant];
  EXPECT_EQ(e.point.kind, SingularityKind::Tangent);
  EXPECT_TRUE(e.law->promoted);
  EXPECT_DOUBLE_EQ(e.law->power, 2.5);
  EXPECT_FALSE(e.law->relative_sign.has_value());
}

TEST(PredictDamping, CriticalSaddleSignAndCancellation) {
  // A3/A4 of the critical toy use mode (1,-1): a saddle of mu
  const FrequencyModel m(CriticalToy{});
  const ToyFactorized g{2, 2, 0, 0, 1.0, 1.0};
  const auto p3 = predict_toy(m, g, 3);
  const auto& e = p3.entries[*p3.dominant];
  EXPECT_EQ(e.point.kind, SingularityKind::CriticalSaddle);
  EXPECT_DOUBLE_EQ(e.law->power, 1.0);
  EXPECT_EQ(e.law->relative_sign, 1);
  EXPECT_TRUE(predict_toy(m, g, 4).all_cancelled);
}

TEST(ResolveCancellation, VertexSinCancelsAtAllOrders) {
  const FrequencyModel m(VertexToy{});
  const auto p = predict_toy(m, ToyFactorized{}, 2);
  EXPECT_TRUE(p.all_cancelled);
  EXPECT_EQ(p.entries[0].effective->status, CancellationStatus::AllOrdersCancelled);
}

TEST(ResolveCancellation, LineCosKeepsSecondOrder) {
  const FrequencyModel m(CompositeToy{});
  const auto p = predict_toy(m, ToyFactorized{}, 1);
  const auto& e = p.entries[*p.dominant];
  EXPECT_EQ(e.point.kind, SingularityKind::Line);
  EXPECT_DOUBLE_EQ(e.law->power, 1.0);
  EXPECT_EQ(e.effective->status, CancellationStatus::PromotedAfterCancellation);
  EXPECT_DOUBLE_EQ(e.effective->law.power, 2.0);
  const auto p2 = predict_toy(m, ToyFactorized{}, 2);
  EXPECT_DOUBLE_EQ(p2.entries[*p2.dominant].effective->law.power, 1.0);
}

TEST(ResolveCancellation, TangentNeverCancels) {
  SingularityPoint t;
  t.kind = SingularityKind::Tangent;
  DampingLaw law = predict_damping(t, {});
  for (Parity par : {Parity::Cos, Parity::Sin}) {
    const auto eff = resolve_cancellation(law, {Mode(1, 1), par});
    EXPECT_EQ(eff.status, CancellationStatus::Survives);
  }
}

TEST(ResolveCancellation, NonzeroFrequencyNeverCancels) {
  const FrequencyModel m(TangentToy{});
  // the vertex of the tangent toy sits at mu = 1
  const auto p = predict_toy(m, ToyFactorized{0, 0, 0, 0, 0.0, 0.0}, 2);
  for (const auto& e : p.entries)
    if (e.point.kind == SingularityKind::Vertex) {
      EXPECT_TRUE(e.law->survives_cos);
      EXPECT_TRUE(e.law->survives_sin);
    }
}

TEST(TablePredictions, VertexTable) {
  const FrequencyModel m(VertexToy{});
  const double t[4][3] = {{2, C, 4}, {C, 3, C}, {2, C, 4}, {C, 3, C}};
  for (int a1 = 0; a1 <= 2; ++a1)
    for (int A = 1; A <= 4; ++A)
      expect_cell(predict_toy(m, ToyFactorized{0, 0, a1, 0, 0, 0}, A), t[A - 1][a1],
                  "A" + std::to_string(A) + " a1=" + std::to_string(a1));
}

TEST(TablePredictions, TangentTable) {
  const FrequencyModel m(TangentToy{});
  const std::pair<int, int> as[5] = {{0, 0}, {0, 1}, {0, 2}, {1, 0}, {2, 0}};
  const double powers[5] = {1.5, 2.5, 3.5, 2.5, 2.5};
  for (int k = 0; k < 5; ++k)
    for (int A = 1; A <= 4; ++A)
      expect_cell(predict_toy(m, ToyFactorized{2, 0, as[k].first, as[k].second, 1.0, 0.0}, A), powers[k],
                  "A" + std::to_string(A) + " case " + std::to_string(k));
}

TEST(TablePredictions, CriticalTable) {
  const FrequencyModel m(CriticalToy{});
  const double t[4][3] = {{2, 2, 2}, {1, 3, 3}, {1, 3, 3}, {C, 2, 2}};
  for (int a1 = 0; a1 <= 2; ++a1)
    for (int A = 1; A <= 4; ++A)
      expect_cell(predict_toy(m, ToyFactorized{2, 2, a1, 0, 1.0, 1.0}, A), t[A - 1][a1],
                  "A" + std::to_string(A) + " a1=" + std::to_string(a1));
}

TEST(TablePredictions, VertexSignAlternation) {
  const FrequencyModel m(VertexToy{});
  for (int a1 = 0; a1 <= 3; ++a1)
    for (int a2 = 0; a2 + a1 <= 3; ++a2) {
      const auto p = predict_toy(m, ToyFactorized{0, 0, a1, a2, 0, 0}, 1);
      const auto& law = *p.entries[0].law;
      const int want = (a1 + a2) % 2 == 0 ? 1 : -1;
      EXPECT_EQ(law.relative_sign, want);
      EXPECT_EQ(law.survives_cos, want == 1);
      EXPECT_EQ(law.survives_sin, want == -1);
    }
}

TEST(TablePredictions, CompositeToyRoles) {
  const FrequencyModel m(CompositeToy{});
  const auto a3 = predict_toy(m, ToyFactorized{}, 3);
  const auto a4 = predict_toy(m, ToyFactorized{}, 4);
  for (const auto* p : {&a3, &a4}) {
    const auto& d = p->entries[*p->dominant];
    EXPECT_EQ(d.point.kind, SingularityKind::Tangent);
    EXPECT_DOUBLE_EQ(d.effective->law.power, 1.5);
    EXPECT_DOUBLE_EQ(d.effective->law.omega0, 0.5);
  }
  for (const auto& e : a4.entries)
    if (e.point.kind == SingularityKind::Vertex) {
      // leading order cancels; mu is nonlinear at the corner so the next
      // order survives, subdominant to the tangent
      EXPECT_GE(e.effective->cancelled_orders, 1);
      EXPECT_NE(e.effective->status, CancellationStatus::Survives);
      EXPECT_GT(e.effective->law.power, 1.5);
    }
  for (const auto& e : a3.entries)
    if (e.point.kind == SingularityKind::Vertex) {
      EXPECT_EQ(e.effective->status, CancellationStatus::Survives);
    }
}

TEST(TablePredictions, IsochroneTable) {
  const FrequencyModel m(Isochrone{});
  const auto dom = m.default_domain(4096);
  for (Mode md : {Mode(1, 1), Mode(2, -1), Mode(3, -2)}) {
    const auto p = predict_observable(m, IsochroneCosCos{1, md.m1, md.m2}, {md, Parity::Sin}, dom);
    ASSERT_TRUE(p.dominant);
    EXPECT_EQ(p.entries[*p.dominant].point.kind, SingularityKind::Infinity);
    EXPECT_NEAR(p.entries[*p.dominant].effective->law.power, 2.0 / 3.0, 1e-12);
    for (const auto& e : p.entries) {
      if (e.point.kind == SingularityKind::Vertex) {
        EXPECT_DOUBLE_EQ(e.law->power, 3.0);
      }
      if (e.point.kind == SingularityKind::Tangent) {
        EXPECT_DOUBLE_EQ(e.law->power, 1.5);
      }
      if (e.point.kind == SingularityKind::Line) {
        EXPECT_DOUBLE_EQ(e.law->power, 2.0);
        EXPECT_DOUBLE_EQ(e.effective->law.power, 3.0);
      }
    }
  }
}

TEST(TablePredictions, IsochroneVertexFrequencyDiscrepancyIsFlagged) {
  const FrequencyModel m(Isochrone{});
  const auto p = predict_observable(m, IsochroneCosCos{1, 1, 1}, {Mode(1, 1), Parity::Sin}, m.default_domain(4096));
  // direct m.Omega(0) = 1/2 + 1; the tabulated closed form is 16x smaller
  EXPECT_DOUBLE_EQ(p.entries[0].law->omega0, 1.5);
  EXPECT_DOUBLE_EQ(p.vertex_frequency_tabulated, 1.5 / 16.0);
}

TEST(TangentPoint, FrequenciesOfTheTwoModes) {
  const auto a = tangent_point_isochrone(Mode(2, -1), 1, 1, 1);
  EXPECT_NEAR(a.omega0, 0.1185, 0.0005);
  EXPECT_LT(a.residual, 1e-12);
  const auto b = tangent_point_isochrone(Mode(3, -2), 1, 1, 1);
  EXPECT_NEAR(b.omega0, 0.0509, 0.0005);
  EXPECT_LT(b.residual, 1e-12);
  // the analytic tangency condition holds at the root
  const FrequencyModel m(Isochrone{});
  EXPECT_LT(std::abs(grad_mu(m, Mode(2, -1), {a.j_star, 0.0}).x), 1e-10);
}

TEST(TangentPoint, OutsideWindow) {
  EXPECT_THROW(tangent_point_isochrone(Mode(1, 1), 1, 1, 1), NoTangentPoint);
  EXPECT_THROW(tangent_point_isochrone(Mode(1, -1), 1, 1, 1), NoTangentPoint);
  EXPECT_THROW(tangent_point_isochrone(Mode(0, 1), 1, 1, 1), NoTangentPoint);
  const auto sv = tangent_point_isochrone(Mode(3, -1), 1, 1, 1);
  EXPECT_TRUE(sv.special_vertex);
  EXPECT_EQ(sv.j_star, 0.0);
}

TEST(TangentPoint, LeftSideIsStrictlyDecreasing) {
  double prev = isochrone_tangency_lhs(0.0, 1, 1, 1);
  for (int i = 1; i <= 10000; ++i) {
    const double v = isochrone_tangency_lhs(1000.0 * i / 10000.0, 1, 1, 1);
    ASSERT_LT(v, prev);
    prev = v;
  }
  EXPECT_NEAR(isochrone_tangency_lhs(0.0, 1, 1, 1), -1.0 / 3.0, 1e-15);
}

TEST(InfinityExponents, IsochroneAndToys) {
  const FrequencyModel iso(Isochrone{});
  for (Mode md : {Mode(1, 1), Mode(2, -1), Mode(3, -2)}) {
    const auto e = infinity_exponents(iso, IsochroneCosCos{1, md.m1, md.m2}, md);
    EXPECT_EQ(e.a, 3);
    EXPECT_EQ(e.b, 4);
  }
  EXPECT_THROW(infinity_exponents(FrequencyModel(VertexToy{}), ToyFactorized{}, Mode(1, 1)), NoInfinitySingularity);
}

TEST(InfinityExponents, SyntheticSlopes) {
  const auto fm = fit_decay_along_ray([](double s) { return 1.0 / (2 * s); });
  const auto fn = fit_decay_along_ray([](double s) { return std::pow(2 * s, -4.0); });
  EXPECT_EQ(fm.exponent, 1);
  EXPECT_EQ(fn.exponent, 4);
  SingularityPoint inf;
  inf.kind = SingularityKind::Infinity;
  inf.mu_decay = fm.exponent;
  inf.nu_decay = fn.exponent;
  EXPECT_DOUBLE_EQ(predict_damping(inf, {}).power, 2.0);
}

TEST(PredictionJson, FieldsPresent) {
  const FrequencyModel m(CompositeToy{});
  const json j = to_json(predict_toy(m, ToyFactorized{}, 3));
  ASSERT_TRUE(j.contains("entries"));
  const json& e = j["entries"][0];
  for (const char* k : {"singularity", "law", "effective"}) EXPECT_TRUE(e.contains(k)) << k;
  for (const char* k : {"power", "omega0", "relative_sign", "survives_cos", "survives_sin"})
    EXPECT_TRUE(e["law"].contains(k)) << k;
}
