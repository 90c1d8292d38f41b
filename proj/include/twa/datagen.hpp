#pragma once

// Labeled dataset construction: plain zoo rasters and the augmented
// simple-oscillator training set.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>

#include "twa/dataset.hpp"
#include "twa/parallel.hpp"
#include "twa/raster.hpp"
#include "twa/rng.hpp"
#include "twa/systemzoo.hpp"
#include "twa/warp.hpp"

namespace twa {

inline constexpr std::uint64_t kTestStream = 1ULL << 40;
inline constexpr std::uint64_t kNoiseStream = 0x6e6f697365ULL;
inline constexpr int kMaxWarpAttempts = 1000;

struct SampleOptions {
  std::optional<AugmentConfig> augment;  // nullopt: plain raster
  double noise_sigma = 0.0;
  int grid_size = kDefaultGridSize;
  bool store_raw = true;  // raw section holds the clean field
};

// The diffeo drawn for a sample, resampled until the fixed point stays in frame.
inline Diffeo draw_in_frame_diffeo(const SystemSpec& s, std::uint64_t sample_seed,
                                   const AugmentConfig& cfg) {
  for (int attempt = 1; attempt <= kMaxWarpAttempts; ++attempt) {
    Diffeo d = sample_diffeo_seeded(derive_seed(sample_seed, static_cast<std::uint64_t>(attempt)), cfg);
    if (fixed_point_in_frame(s, d, cfg.frame_margin)) return d;
  }
  throw Error(ErrorCode::Config, "no in-frame diffeo after repeated resampling");
}

inline VectorField clean_field(const SystemSpec& s, std::uint64_t sample_seed, const SampleOptions& o) {
  const GridSpec grid = GridSpec::for_system(s, o.grid_size, o.grid_size);
  if (!o.augment) return rasterize(s, grid);
  return warp_field(s, draw_in_frame_diffeo(s, sample_seed, *o.augment), grid);
}

inline VectorField noisy_copy(const VectorField& clean, double sigma, std::uint64_t noise_seed) {
  Rng rng(noise_seed);
  return add_noise(clean, sigma, rng);
}

inline LabeledSample make_sample(const SystemSpec& s, std::uint64_t sample_seed, const SampleOptions& o) {
  const VectorField clean = clean_field(s, sample_seed, o);
  const VectorField noisy = noisy_copy(clean, o.noise_sigma, derive_seed(sample_seed, kNoiseStream));
  LabeledSample out;
  out.angles = to_angles(noisy).phi;
  out.label = true_label(s);
  out.params = s.params;
  out.boundary_distance = boundary_distance(s);
  if (o.store_raw) out.raw = pack_raw(clean);
  return out;
}

// The system behind sample seed `sseed`: parameters drawn from the sampling ranges.
inline SystemSpec draw_system(SystemName name, std::uint64_t sseed) {
  Rng rng(sseed);
  return make_system(name, sample_params(name, 1, rng).front());
}

inline Dataset make_system_dataset(SystemName name, std::size_t count, std::uint64_t seed,
                                   const SampleOptions& o, const std::string& split,
                                   int threads = 1, std::uint64_t stream = 0) {
  Dataset ds;
  ds.height = ds.width = o.grid_size;
  const auto extent = phase_extent(name);
  ds.manifest.seed = seed;
  ds.manifest.system = std::string(system_id(name));
  ds.manifest.param_names = param_names(name);
  ds.manifest.augmentation = o.augment ? to_json(*o.augment) : nlohmann::json(nullptr);
  ds.manifest.noise_sigma = o.noise_sigma;
  ds.manifest.split = split;
  ds.manifest.x_extent = extent[0];
  ds.manifest.y_extent = extent[1];
  ds.manifest.extra = {{"raw_section", o.store_raw ? "clean" : "absent"}, {"stream", stream}};
  ds.samples.resize(count);
  parallel_for(count, threads, [&](std::size_t i) {
    const std::uint64_t sseed = derive_seed(seed, stream + i);
    ds.samples[i] = make_sample(draw_system(name, sseed), sseed, o);
  });
  return ds;
}

struct AugmentedSetConfig {
  std::size_t n_train = 10000;
  std::size_t n_test = 1000;
  std::uint64_t seed = 0;
  double noise_sigma = 0.0;
  AugmentConfig augment{};
  int grid_size = kDefaultGridSize;
  bool store_raw = true;
  int threads = 1;
};

// Augmented simple-oscillator train/test pair.
inline std::pair<Dataset, Dataset> make_augmented_dataset(const AugmentedSetConfig& c) {
  if (c.n_train < 1 || c.n_test < 1) throw Error(ErrorCode::Config, "dataset counts must be >= 1");
  SampleOptions o{c.augment, c.noise_sigma, c.grid_size, c.store_raw};
  return {make_system_dataset(SystemName::SO, c.n_train, c.seed, o, "train", c.threads, 0),
          make_system_dataset(SystemName::SO, c.n_test, c.seed, o, "test", c.threads, kTestStream)};
}

}  // namespace twa
