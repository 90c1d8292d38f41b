// Draws a few systems from each zoo family and compares the classical
// detectors with the analytic label, on clean and noisy rasters.
#include <cstdio>
#include <cstdlib>

#include "twa/baselines.hpp"
#include "twa/datagen.hpp"

int main(int argc, char** argv) {
  using namespace twa;
  const int per_system = argc > 1 ? std::atoi(argv[1]) : 4;
  const double sigma = argc > 2 ? std::atof(argv[2]) : 0.1;
  const SystemName zoo[] = {SystemName::SO,        SystemName::SupercriticalHopf, SystemName::LienardPoly,
                            SystemName::LienardSigmoid, SystemName::VanDerPol,    SystemName::BZReaction,
                            SystemName::Selkov};
  auto name = [](DynClass c) { return c == DynClass::PeriodicAttractor ? "cycle" : "point"; };
  std::printf("%-16s %-6s %-10s %-10s %s\n", "system", "truth", "cp clean", "cp noisy", "lyapunov");
  for (SystemName s : zoo) {
    for (int k = 0; k < per_system; ++k) {
      const std::uint64_t seed = derive_seed(2024, static_cast<std::uint64_t>(k));
      const SystemSpec spec = draw_system(s, seed);
      const VectorField clean = rasterize(spec, GridSpec::for_system(spec));
      const VectorField noisy = noisy_copy(clean, sigma, derive_seed(seed, kNoiseStream));
      std::printf("%-16s %-6s %-10s %-10s ", std::string(system_id(s)).c_str(), name(true_label(spec)),
                  name(classify_critical(clean)), name(classify_critical(noisy)));
      try {
        std::printf("%+.4f\n", lyapunov_of_field(clean, seed));
      } catch (const Error& e) {
        std::printf("n/a (%s)\n", e.what());
      }
    }
  }
}
