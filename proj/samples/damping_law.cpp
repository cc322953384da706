// Classify the singularities of a mode, predict the damping law, then
// measure it on a computed expectation-value series.
//
//   sample_damping_law [model] [m1 m2]
#include <cstdlib>
#include <iostream>

#include <algdamp/algdamp.hpp>

using namespace algdamp;

int main(int argc, char** argv) try {
  const std::string name = argc > 1 ? argv[1] : "composite-toy";
  const FrequencyModel model = model_from_name(name);
  const bool iso = model.kind() == ModelKind::Isochrone;
  const Mode mode = argc > 3 ? Mode(std::atoi(argv[2]), std::atoi(argv[3])) : Mode(1, 1);

  const QuadratureConfig q = QuadratureConfig::defaults(model, iso ? 1 << 12 : 1 << 14);
  const PerturbationSpec g = iso ? PerturbationSpec(IsochroneCosCos{1.0, mode.m1, mode.m2}) : ToyFactorized{};
  const Observable obs{mode, iso ? Parity::Sin : Parity::Cos};

  const auto pred = predict_observable(model, g, obs, q.domain);
  std::cout << "singularities of " << name << " mode (" << mode.m1 << "," << mode.m2 << "):\n";
  for (const auto& e : pred.entries) std::cout << "  " << to_json(e.point).dump() << "\n";
  if (pred.all_cancelled) {
    std::cout << "prediction: cancelled at all orders\n";
  } else if (pred.dominant) {
    const auto& law = pred.entries[*pred.dominant].effective->law;
    std::cout << "prediction: t^-" << law.power << ", frequency " << law.omega0 << "\n";
  }

  const double t0 = iso ? 0.0 : 1.0, t1 = iso ? 1100.0 : 1000.0;
  const TimeSeries s = evolve_series(model, g, obs, t0, 1.0, std::size_t(t1 - t0) + 1, q);
  const ExponentFit f = fit_decay_exponent(s, 100.0, t1);
  std::cout << "measured:   exponent " << f.exponent << " +- " << f.stderr_ << " from " << f.n_peaks_used
            << " envelope points\n";
  const auto peak = dominant_nonzero_peak(power_spectrum(s, 100.0, t1));
  if (peak) std::cout << "            dominant frequency " << peak->frequency << "\n";
  return 0;
} catch (const std::exception& e) {
  std::cerr << e.what() << "\n";
  return 2;
}
