#pragma once

// Convolutional self-attention point/cycle classifier: four stride-2 conv
// blocks (spectral norm + LeakyReLU, attention after blocks 3 and 4), then
// flatten -> hidden (ReLU, dropout) -> latent -> two logits (point, cycle).

#include <algorithm>
#include <array>
#include <cstring>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "twa/bytes.hpp"
#include "twa/dataset.hpp"
#include "twa/error.hpp"
#include "twa/nn.hpp"
#include "twa/raster.hpp"
#include "twa/rng.hpp"

namespace twa {

enum class InputMode { Angles, Vectors };

inline const char* to_string(InputMode m) { return m == InputMode::Angles ? "angles" : "vectors"; }
inline InputMode parse_input_mode(const std::string& s) {
  if (s == "angles") return InputMode::Angles;
  if (s == "vectors") return InputMode::Vectors;
  throw Error(ErrorCode::Config, "input mode must be angles|vectors, got " + s);
}

struct ArchConfig {
  std::vector<int> channels{16, 32, 64, 128};
  bool attention = true;  // on blocks 3 and 4
  InputMode input = InputMode::Angles;
  int latent = 10;
  int hidden = 64;
  double dropout = 0.9;
  double leaky_slope = 0.01;
  int attention_reduction = 8;
  int grid = kDefaultGridSize;

  static ArchConfig paper() {
    ArchConfig a;
    a.channels = {64, 128, 256, 512};
    return a;
  }
  static ArchConfig desk() { return ArchConfig{}; }

  int input_channels() const { return input == InputMode::Angles ? 1 : 2; }
  // Spatial side after four stride-2, pad-1, 3x3 convolutions.
  int final_spatial() const {
    int n = grid;
    for (int b = 0; b < 4; ++b) n = (n - 1) / 2 + 1;
    return n;
  }

  void validate() const {
    if (channels.size() != 4) throw Error(ErrorCode::Config, "exactly 4 conv blocks are required");
    if (grid < 2) throw Error(ErrorCode::Config, "grid must be at least 2");
    for (int c : channels) {
      if (c < 1) throw Error(ErrorCode::Config, "channel counts must be positive");
    }
    if (latent < 1 || hidden < 1) throw Error(ErrorCode::Config, "latent/hidden must be positive");
    if (!(dropout >= 0 && dropout < 1)) throw Error(ErrorCode::Config, "dropout must be in [0, 1)");
  }

  bool operator==(const ArchConfig&) const = default;
};

inline nlohmann::json to_json(const ArchConfig& a) {
  return {{"channels", a.channels},       {"attention", a.attention},
          {"input", to_string(a.input)},  {"latent", a.latent},
          {"hidden", a.hidden},           {"dropout", a.dropout},
          {"leaky_slope", a.leaky_slope}, {"attention_reduction", a.attention_reduction},
          {"grid", a.grid},               {"kernel", 3},
          {"stride", 2}};
}

inline ArchConfig arch_from_json(const nlohmann::json& j) {
  ArchConfig a;
  a.channels = j.at("channels").get<std::vector<int>>();
  a.attention = j.at("attention").get<bool>();
  a.input = parse_input_mode(j.at("input").get<std::string>());
  a.latent = j.at("latent").get<int>();
  a.hidden = j.at("hidden").get<int>();
  a.dropout = j.at("dropout").get<double>();
  a.leaky_slope = j.value("leaky_slope", 0.01);
  a.attention_reduction = j.value("attention_reduction", 8);
  a.grid = j.value("grid", kDefaultGridSize);
  a.validate();
  return a;
}

template <typename T>
class Model {
 public:
  explicit Model(const ArchConfig& arch) : arch_(arch), dropout_(arch.dropout) {
    arch_.validate();
    int in = arch_.input_channels();
    for (int b = 0; b < 4; ++b) {
      conv_[b] = nn::Conv2d<T>("conv" + std::to_string(b + 1), in, arch_.channels[b]);
      act_[b] = nn::LeakyReLU<T>(arch_.leaky_slope);
      in = arch_.channels[b];
    }
    if (arch_.attention) {
      attn_[0] = nn::SelfAttention<T>("attn3", arch_.channels[2], arch_.attention_reduction);
      attn_[1] = nn::SelfAttention<T>("attn4", arch_.channels[3], arch_.attention_reduction);
    }
    const int s = arch_.final_spatial();
    fc1_ = nn::Linear<T>("fc1", arch_.channels[3] * s * s, arch_.hidden);
    fc2_ = nn::Linear<T>("fc2", arch_.hidden, arch_.latent);
    fc3_ = nn::Linear<T>("fc3", arch_.latent, 2);
  }

  void init(std::uint64_t seed) {
    Rng rng = make_rng(seed, 0x1417);
    for (auto& c : conv_) c.init(rng);
    if (arch_.attention) {
      for (auto& a : attn_) a.init(rng);
    }
    fc1_.init(rng);
    fc2_.init(rng);
    fc3_.init(rng);
  }

  const ArchConfig& arch() const { return arch_; }

  // Conv/attention stack + fc1 + ReLU: everything upstream of dropout.
  nn::Tensor<T> features(const nn::Tensor<T>& x, const nn::Mode& mode) {
    const std::vector<int> want{x.shape.empty() ? 0 : x.dim(0), arch_.input_channels(), arch_.grid, arch_.grid};
    nn::require_shape(x.shape, want, "model input");
    nn::Tensor<T> h = x;
    for (int b = 0; b < 4; ++b) {
      h = act_[b].forward(conv_[b].forward(h, mode));
      if (arch_.attention && b >= 2) h = attn_[b - 2].forward(h);
    }
    return relu_.forward(fc1_.forward(h));
  }

  nn::Tensor<T> head(const nn::Tensor<T>& hidden, bool dropout, Rng& rng) {
    return fc3_.forward(fc2_.forward(dropout_.forward(hidden, dropout, rng)));
  }

  nn::Tensor<T> forward(const nn::Tensor<T>& x, const nn::Mode& mode, Rng& rng) {
    return head(features(x, mode), mode.dropout, rng);
  }

  // Backpropagates d loss / d logits through the most recent forward.
  nn::Tensor<T> backward(const nn::Tensor<T>& dlogits, bool need_dx = false) {
    nn::Tensor<T> g = fc3_.backward(dlogits);
    g = fc2_.backward(g);
    g = dropout_.backward(g);
    g = relu_.backward(g);
    g = fc1_.backward(g);
    const int s = arch_.final_spatial();
    g.shape = {g.dim(0), arch_.channels[3], s, s};
    for (int b = 3; b >= 0; --b) {
      if (arch_.attention && b >= 2) g = attn_[b - 2].backward(g);
      g = conv_[b].backward(act_[b].backward(g), b > 0 || need_dx);
    }
    return g;
  }

  std::vector<nn::Param<T>*> params() {
    std::vector<nn::Param<T>*> out;
    for (int b = 0; b < 4; ++b) {
      for (auto* p : conv_[b].params()) out.push_back(p);
      if (arch_.attention && b >= 2) {
        for (auto* p : attn_[b - 2].params()) out.push_back(p);
      }
    }
    for (auto* l : {&fc1_, &fc2_, &fc3_}) {
      for (auto* p : l->params()) out.push_back(p);
    }
    return out;
  }

  std::vector<nn::Buffer<T>> buffers() {
    std::vector<nn::Buffer<T>> out;
    for (auto& c : conv_) {
      for (auto& b : c.buffers()) out.push_back(b);
    }
    return out;
  }

  std::size_t parameter_count() {
    std::size_t n = 0;
    for (auto* p : params()) n += p->size();
    return n;
  }

  void zero_grad() {
    for (auto* p : params()) p->zero_grad();
  }

  nn::Conv2d<T>& conv(int b) { return conv_.at(b); }
  nn::SelfAttention<T>& attention(int i) { return attn_.at(i); }

 private:
  ArchConfig arch_;
  std::array<nn::Conv2d<T>, 4> conv_;
  std::array<nn::LeakyReLU<T>, 4> act_;
  std::array<nn::SelfAttention<T>, 2> attn_;
  nn::Linear<T> fc1_, fc2_, fc3_;
  nn::ReLU<T> relu_;
  nn::Dropout<T> dropout_;
};

using Classifier = Model<float>;

inline Classifier build_model(const ArchConfig& arch, std::uint64_t seed) {
  Classifier m(arch);
  m.init(seed);
  return m;
}

// ---- inputs ------------------------------------------------------------------

// One model input (1 x H x W angles or 2 x H x W raw vectors).
struct ModelInput {
  std::vector<float> data;
};

inline ModelInput input_from_angles(const AngleField& a) { return {a.phi}; }

inline ModelInput input_from_field(const VectorField& f, InputMode mode) {
  if (mode == InputMode::Angles) return {to_angles(f).phi};
  return {pack_raw(f)};
}

inline ModelInput input_from_sample(const LabeledSample& s, InputMode mode) {
  if (mode == InputMode::Angles) return {s.angles};
  if (s.raw.empty()) throw Error(ErrorCode::ShapeMismatch, "vector-input model needs the raw section");
  return {s.raw};
}

template <typename T>
nn::Tensor<T> batch_tensor(const std::vector<const ModelInput*>& items, const ArchConfig& arch) {
  const int c = arch.input_channels();
  const std::size_t per = static_cast<std::size_t>(c) * arch.grid * arch.grid;
  nn::Tensor<T> t({static_cast<int>(items.size()), c, arch.grid, arch.grid});
  for (std::size_t b = 0; b < items.size(); ++b) {
    if (items[b]->data.size() != per) {
      throw Error(ErrorCode::ShapeMismatch, "input has " + std::to_string(items[b]->data.size()) +
                                                " values, model expects " + std::to_string(per));
    }
    std::copy(items[b]->data.begin(), items[b]->data.end(), t.ptr() + b * per);
  }
  return t;
}

// ---- inference ---------------------------------------------------------------

struct ClassProbs {
  double point_logit = 0.0;
  double cycle_logit = 0.0;
  double point_prob = 0.5;
  double cycle_prob = 0.5;
  DynClass label = DynClass::PointAttractor;

  static ClassProbs from_logits(double point, double cycle) {
    ClassProbs p;
    p.point_logit = point;
    p.cycle_logit = cycle;
    p.point_prob = nn::sigmoid(point);
    p.cycle_prob = nn::sigmoid(cycle);
    p.label = cycle > point ? DynClass::PeriodicAttractor : DynClass::PointAttractor;
    return p;
  }
};

inline constexpr int kDefaultMcEvals = 10;

// Logits of each stochastic dropout pass; pass e uses stream derive_seed(seed, e).
inline std::vector<std::array<double, 2>> mc_pass_logits(Classifier& m, const nn::Tensor<float>& hidden_row,
                                                         int mc_evals, std::uint64_t seed) {
  std::vector<std::array<double, 2>> out;
  for (int e = 0; e < mc_evals; ++e) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(e)));
    const auto z = m.head(hidden_row, true, rng);
    out.push_back({z[0], z[1]});
  }
  return out;
}

inline std::vector<ClassProbs> predict_batch(Classifier& m, const std::vector<ModelInput>& inputs,
                                             int mc_evals, std::uint64_t seed,
                                             std::uint64_t first_index = 0, int batch = 64) {
  if (mc_evals < 1) throw Error(ErrorCode::Config, "mc_evals must be >= 1");
  std::vector<ClassProbs> out;
  out.reserve(inputs.size());
  const int hidden = m.arch().hidden;
  for (std::size_t start = 0; start < inputs.size(); start += batch) {
    const std::size_t end = std::min(inputs.size(), start + static_cast<std::size_t>(batch));
    std::vector<const ModelInput*> items;
    for (std::size_t i = start; i < end; ++i) items.push_back(&inputs[i]);
    const auto h = m.features(batch_tensor<float>(items, m.arch()), nn::kEvalMode);
    for (std::size_t i = start; i < end; ++i) {
      nn::Tensor<float> row({1, hidden});
      std::copy_n(h.ptr() + (i - start) * hidden, hidden, row.ptr());
      const auto passes = mc_pass_logits(m, row, mc_evals, derive_seed(seed, first_index + i));
      double p = 0.0, c = 0.0;
      for (const auto& z : passes) {
        p += z[0];
        c += z[1];
      }
      out.push_back(ClassProbs::from_logits(p / mc_evals, c / mc_evals));
    }
  }
  return out;
}

// Averages the logits of mc_evals dropout passes (score averaging in logit space).
inline ClassProbs predict(Classifier& m, const ModelInput& input, int mc_evals, std::uint64_t seed) {
  return predict_batch(m, {input}, mc_evals, seed, 0, 1).front();
}

inline ClassProbs predict(Classifier& m, const AngleField& a, int mc_evals = kDefaultMcEvals,
                          std::uint64_t seed = 0) {
  if (a.grid.width != m.arch().grid || a.grid.height != m.arch().grid) {
    throw Error(ErrorCode::ShapeMismatch, "angle field shape does not match the model grid");
  }
  return predict(m, input_from_angles(a), mc_evals, seed);
}

// ---- training ----------------------------------------------------------------

struct TrainOpts {
  double lr = 1e-4;
  int epochs = 20;
  int batch_size = 64;
  std::uint64_t seed = 0;
  int runs = 1;
  double val_fraction = 0.1;
  int mc_evals = kDefaultMcEvals;
  bool verbose = false;
  // Noise augmentation: each epoch, every training sample is rebuilt from its
  // clean raw field with relative noise sigma ~ U[0, noise_max]; a
  // noise_clean_fraction share of draws stays noiseless. Validation stays clean.
  double noise_max = 0.0;
  double noise_clean_fraction = 0.0;
};

inline nlohmann::json to_json(const TrainOpts& o) {
  nlohmann::json j{{"lr", o.lr},     {"epochs", o.epochs}, {"batch_size", o.batch_size}, {"seed", o.seed},
                   {"runs", o.runs}, {"val_fraction", o.val_fraction}, {"mc_evals", o.mc_evals}};
  if (o.noise_max > 0) {
    j["noise_max"] = o.noise_max;
    j["noise_clean_fraction"] = o.noise_clean_fraction;
  }
  return j;
}

struct TrainReport {
  std::vector<double> loss_curve;  // mean per-sample loss (sum over both heads) per epoch
  double first_batch_loss = 0.0;
  double train_accuracy = 0.0;
  double val_accuracy = 0.0;
  int steps = 0;
  std::size_t train_size = 0;
  std::size_t val_size = 0;
};

// Per-head BCE targets: point head 1 for point attractors, cycle head 1 for cycles.
inline std::array<float, 2> targets_for(DynClass c) {
  return c == DynClass::PointAttractor ? std::array<float, 2>{1.f, 0.f} : std::array<float, 2>{0.f, 1.f};
}

inline double accuracy_of(const std::vector<ClassProbs>& preds, const std::vector<DynClass>& labels) {
  if (preds.empty()) return 0.0;
  std::size_t ok = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) ok += preds[i].label == labels[i];
  return static_cast<double>(ok) / static_cast<double>(preds.size());
}

inline void check_trainable(const Dataset& ds) {
  if (ds.samples.empty()) throw Error(ErrorCode::EmptyDataset, "training set is empty");
  std::size_t cycles = 0;
  for (const auto& s : ds.samples) {
    if (!s.label) throw Error(ErrorCode::DegenerateLabels, "training set has unlabeled samples");
    cycles += *s.label == DynClass::PeriodicAttractor;
  }
  const double frac = static_cast<double>(cycles) / static_cast<double>(ds.size());
  if (cycles == 0 || cycles == ds.size()) throw Error(ErrorCode::DegenerateLabels, "training set has a single class");
  if (frac < 0.4 || frac > 0.6) {
    throw Error(ErrorCode::DegenerateLabels, "training labels outside the 60/40 balance window");
  }
}

template <typename Progress>
TrainReport train(Classifier& m, const Dataset& ds, const TrainOpts& o, Progress&& progress) {
  check_trainable(ds);
  const InputMode mode = m.arch().input;
  std::vector<ModelInput> inputs;
  std::vector<DynClass> labels;
  inputs.reserve(ds.size());
  for (const auto& s : ds.samples) {
    inputs.push_back(input_from_sample(s, mode));
    labels.push_back(*s.label);
  }

  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), 0);
  Rng split_rng = make_rng(o.seed, 0x5b117);
  std::shuffle(order.begin(), order.end(), split_rng);
  const auto n_val = static_cast<std::size_t>(std::floor(o.val_fraction * static_cast<double>(ds.size())));
  std::vector<std::size_t> val(order.end() - static_cast<std::ptrdiff_t>(n_val), order.end());
  std::vector<std::size_t> tr(order.begin(), order.end() - static_cast<std::ptrdiff_t>(n_val));

  if (o.noise_max < 0 || o.noise_clean_fraction < 0 || o.noise_clean_fraction > 1) {
    throw Error(ErrorCode::Config, "noise_max must be >= 0 and noise_clean_fraction in [0, 1]");
  }
  const auto cells = static_cast<std::size_t>(m.arch().grid) * m.arch().grid;
  if (o.noise_max > 0) {
    for (auto i : tr) {
      if (ds.samples[i].raw.size() != 2 * cells) throw Error(ErrorCode::Config, "noise augmentation needs clean raw fields");
    }
  }
  const std::vector<ModelInput> clean_inputs = o.noise_max > 0 ? inputs : std::vector<ModelInput>{};
  Rng noise_rng = make_rng(o.seed, 0x9015e);
  auto renoise = [&](std::size_t i) {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const bool clean = u01(noise_rng) < o.noise_clean_fraction;
    const double sigma = clean ? 0.0 : o.noise_max * u01(noise_rng);
    const std::uint64_t seed = noise_rng();
    if (sigma == 0.0) {
      inputs[i] = clean_inputs[i];
      return;
    }
    const auto& raw = ds.samples[i].raw;
    VectorField f(GridSpec{m.arch().grid, m.arch().grid, {-1, 1}, {-1, 1}});
    for (std::size_t k = 0; k < cells; ++k) {
      f.u[k] = raw[k];
      f.v[k] = raw[cells + k];
    }
    Rng r(seed);
    inputs[i] = input_from_field(add_noise(f, sigma, r), mode);
  };

  TrainReport rep;
  rep.train_size = tr.size();
  rep.val_size = val.size();
  nn::Adam<float> opt(m.params(), nn::AdamOptions{o.lr});
  Rng shuffle_rng = make_rng(o.seed, 0x5fff1e);
  Rng dropout_rng = make_rng(o.seed, 0xd209);
  const int bs = std::max(1, o.batch_size);
  for (int epoch = 0; epoch < o.epochs; ++epoch) {
    std::shuffle(tr.begin(), tr.end(), shuffle_rng);
    if (o.noise_max > 0) {
      for (auto i : tr) renoise(i);
    }
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < tr.size(); start += bs) {
      const std::size_t end = std::min(tr.size(), start + static_cast<std::size_t>(bs));
      std::vector<const ModelInput*> items;
      std::vector<float> targets;
      for (std::size_t i = start; i < end; ++i) {
        items.push_back(&inputs[tr[i]]);
        const auto t = targets_for(labels[tr[i]]);
        targets.insert(targets.end(), t.begin(), t.end());
      }
      opt.zero_grad();
      const auto logits = m.forward(batch_tensor<float>(items, m.arch()), nn::kTrainMode, dropout_rng);
      const auto bce = nn::bce_with_logits<float>(logits.data, targets);
      nn::Tensor<float> g(logits.shape);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] = static_cast<float>(bce.grad[i]);
      m.backward(g);
      opt.step();
      const double per_sample = 2.0 * bce.loss;
      if (rep.steps == 0) rep.first_batch_loss = per_sample;
      ++rep.steps;
      epoch_loss += per_sample * static_cast<double>(end - start);
    }
    rep.loss_curve.push_back(epoch_loss / static_cast<double>(tr.size()));
    progress(epoch, rep.loss_curve.back());
  }

  auto eval = [&](const std::vector<std::size_t>& idx) {
    if (idx.empty()) return 0.0;
    std::vector<ModelInput> in;
    std::vector<DynClass> lab;
    for (auto i : idx) {
      in.push_back(inputs[i]);
      lab.push_back(labels[i]);
    }
    return accuracy_of(predict_batch(m, in, o.mc_evals, derive_seed(o.seed, 0xe7a1)), lab);
  };
  if (o.noise_max > 0) inputs = clean_inputs;
  rep.train_accuracy = eval(tr);
  rep.val_accuracy = eval(val);
  return rep;
}

inline TrainReport train(Classifier& m, const Dataset& ds, const TrainOpts& o) {
  return train(m, ds, o, [](int, double) {});
}

// ---- checkpoints -------------------------------------------------------------
//
// "TWAC" | u32 version | u32 manifest length | manifest JSON |
// f32 payload of every tensor in manifest order | u32 CRC32 of all bytes
// between the magic and the CRC.

inline constexpr std::uint32_t kCheckpointVersion = 1;

inline std::vector<std::uint8_t> encode_checkpoint(Classifier& m, const nlohmann::json& meta = nlohmann::json::object()) {
  nlohmann::json tensors = nlohmann::json::array();
  std::vector<const std::vector<float>*> payload;
  for (auto* p : m.params()) {
    tensors.push_back({{"name", p->name}, {"shape", p->shape}, {"dtype", "f32"}, {"kind", "param"}});
    payload.push_back(&p->value);
  }
  for (auto& b : m.buffers()) {
    tensors.push_back({{"name", b.name}, {"shape", {static_cast<int>(b.data->size())}}, {"dtype", "f32"}, {"kind", "buffer"}});
    payload.push_back(b.data);
  }
  const nlohmann::json manifest{{"format", "twa-checkpoint"}, {"arch", to_json(m.arch())}, {"meta", meta}, {"tensors", tensors}};
  ByteWriter w;
  w.raw("TWAC", 4);
  w.u32(kCheckpointVersion);
  w.str(manifest.dump());
  for (const auto* v : payload) {
    for (float x : *v) w.f32(x);
  }
  const std::uint32_t crc = crc32_of(w.bytes().data() + 4, w.bytes().size() - 4);
  w.u32(crc);
  return w.bytes();
}

inline std::size_t expected_buffer_size(Classifier& m, const std::string& name) {
  for (int b = 0; b < 4; ++b) {
    const std::string base = "conv" + std::to_string(b + 1);
    const auto& p = m.conv(b).weight();
    if (name == base + ".sn_u") return static_cast<std::size_t>(p.shape[0]);
    if (name == base + ".sn_v") return p.size() / static_cast<std::size_t>(p.shape[0]);
  }
  return 0;
}

struct LoadedModel {
  Classifier model;
  nlohmann::json meta;
};

inline LoadedModel decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "TWAC", 4) != 0) throw Error(ErrorCode::BadMagic, "not a TWAC checkpoint");
  if (bytes.size() < 12) throw Error(ErrorCode::CorruptPayload, "truncated checkpoint");
  const std::size_t body = bytes.size() - 4;
  if (crc32_of(bytes.data() + 4, body - 4) != ByteReader(bytes.data() + body, 4).u32()) {
    throw Error(ErrorCode::CorruptPayload, "checkpoint checksum mismatch");
  }
  ByteReader r(bytes.data() + 4, body - 4);
  if (const auto v = r.u32(); v != kCheckpointVersion) throw Error(ErrorCode::VersionMismatch, "checkpoint version " + std::to_string(v));
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(r.str());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::CorruptPayload, std::string("checkpoint manifest: ") + e.what());
  }
  LoadedModel out{Classifier(arch_from_json(manifest.at("arch"))), manifest.value("meta", nlohmann::json::object())};
  std::vector<std::pair<std::string, std::vector<float>*>> slots;
  std::vector<std::vector<int>> shapes;
  for (auto* p : out.model.params()) {
    slots.emplace_back(p->name, &p->value);
    shapes.push_back(p->shape);
  }
  for (auto& b : out.model.buffers()) {
    // Buffers are sized by init(); derive their size from the architecture.
    slots.emplace_back(b.name, b.data);
    shapes.push_back({-1});
  }
  const auto& tensors = manifest.at("tensors");
  if (tensors.size() != slots.size()) throw Error(ErrorCode::ShapeManifestMismatch, "tensor count differs from architecture");
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const auto& t = tensors[i];
    const auto shape = t.at("shape").get<std::vector<int>>();
    if (t.at("name").get<std::string>() != slots[i].first) {
      throw Error(ErrorCode::ShapeManifestMismatch, "expected tensor " + slots[i].first);
    }
    if (shapes[i] != std::vector<int>{-1} && shape != shapes[i]) {
      throw Error(ErrorCode::ShapeManifestMismatch, slots[i].first + " shape " + nn::shape_str(shape));
    }
    const std::size_t n = nn::Tensor<float>::numel(shape);
    if (shapes[i] == std::vector<int>{-1} && n != expected_buffer_size(out.model, slots[i].first)) {
      throw Error(ErrorCode::ShapeManifestMismatch, slots[i].first + " size");
    }
    slots[i].second->resize(n);
    for (auto& x : *slots[i].second) x = r.f32();
  }
  if (r.remaining() != 0) throw Error(ErrorCode::CorruptPayload, "trailing checkpoint bytes");
  return out;
}

inline void save(Classifier& m, const std::string& path, const nlohmann::json& meta = nlohmann::json::object()) {
  write_file(path, encode_checkpoint(m, meta));
}

inline LoadedModel load(const std::string& path) { return decode_checkpoint(read_file(path)); }

}  // namespace twa
