#pragma once

// Experiment orchestration: configs and profiles, per-system evaluation sets,
// cached training ensembles, and the studies built on them (accuracy tables,
// noise sweeps, boundary maps, confidence curves, repressilator, ablations,
// subcritical probe).

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "twa/baselines.hpp"
#include "twa/classifier.hpp"
#include "twa/datagen.hpp"
#include "twa/odeint.hpp"
#include "twa/parallel.hpp"
#include "twa/report.hpp"
#include "twa/stats.hpp"
#include "twa/systemzoo.hpp"
#include "twa/warp.hpp"

namespace twa {

// ---- config ------------------------------------------------------------------

struct ExperimentConfig {
  std::string profile = "desk";
  std::uint64_t seed = 0;
  std::string out_dir = "results";
  std::string model_cache;  // empty: <out_dir>/models
  int threads = 1;

  ArchConfig arch = ArchConfig::desk();
  TrainOpts train{};
  std::size_t n_train = 2000;
  int runs = 5;
  int ablation_runs = 3;
  AugmentConfig augment{};

  std::size_t test_size = 200;
  std::size_t calib_size = 200;
  double table_sigma = 0.1;
  std::vector<double> sweep_sigmas{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  std::vector<std::string> columns{"simple_oscillator", "augmented_so", "suphopf",    "lienard_poly",
                                   "lienard_sigmoid",   "vanderpol",    "bzreaction", "selkov"};
  int mc_evals = kDefaultMcEvals;

  int boundary_resolution = 21;
  int repressilator_grid = 10;
  RepressilatorSampling repressilator{};
  LyapunovProtocol lyapunov{};
  LinearFitOpts linear{};
  std::vector<double> subcritical_mus{-0.4, -0.1, 0.3};
  std::size_t subcritical_samples = 20;

  static ExperimentConfig desk() {
    ExperimentConfig c;
    c.train.batch_size = 8;
    c.train.lr = 3e-4;
    c.train.epochs = 40;
    c.train.noise_max = 0.5;
    c.train.noise_clean_fraction = 0.5;
    return c;
  }

  static ExperimentConfig paper() {
    ExperimentConfig c;
    c.profile = "paper";
    c.arch = ArchConfig::paper();
    c.train.batch_size = 64;
    c.n_train = 10000;
    c.runs = 50;
    c.ablation_runs = 50;
    c.test_size = 1000;
    c.calib_size = 1000;
    return c;
  }

  static ExperimentConfig preset(const std::string& name) {
    if (name == "desk") return desk();
    if (name == "paper") return paper();
    throw Error(ErrorCode::Config, "profile must be paper|desk, got " + name);
  }

  std::string cache_dir() const { return model_cache.empty() ? out_dir + "/models" : model_cache; }
};

inline nlohmann::json to_json(const ExperimentConfig& c) {
  return {{"profile", c.profile},
          {"seed", c.seed},
          {"arch", to_json(c.arch)},
          {"train", to_json(c.train)},
          {"n_train", c.n_train},
          {"runs", c.runs},
          {"ablation_runs", c.ablation_runs},
          {"augment", to_json(c.augment)},
          {"test_size", c.test_size},
          {"calib_size", c.calib_size},
          {"table_sigma", c.table_sigma},
          {"sweep_sigmas", c.sweep_sigmas},
          {"columns", c.columns},
          {"mc_evals", c.mc_evals},
          {"boundary_resolution", c.boundary_resolution},
          {"repressilator",
           {{"grid", c.repressilator_grid},
            {"n_cells", c.repressilator.n_cells},
            {"noise_sigma", c.repressilator.noise_sigma},
            {"dt", c.repressilator.dt},
            {"horizon", c.repressilator.horizon}}},
          {"lyapunov",
           {{"dt", c.lyapunov.dt},
            {"horizon", c.lyapunov.horizon},
            {"coordinate", c.lyapunov.coordinate},
            {"start_fraction", c.lyapunov.start_fraction},
            {"estimator", to_json(c.lyapunov.estimator)}}},
          {"linear", {{"lr", c.linear.lr}, {"epochs", c.linear.epochs}, {"batch_size", c.linear.batch_size}}},
          {"subcritical", {{"mus", c.subcritical_mus}, {"samples", c.subcritical_samples}}}};
}

// Starts from the named profile preset and overrides every key present in `j`.
inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  try {
    ExperimentConfig c = ExperimentConfig::preset(j.value("profile", std::string("desk")));
    c.seed = j.value("seed", c.seed);
    if (j.contains("arch")) {
      nlohmann::json a = to_json(c.arch);
      a.update(j.at("arch"));
      c.arch = arch_from_json(a);
    }
    if (j.contains("train")) {
      const auto& t = j.at("train");
      c.train.lr = t.value("lr", c.train.lr);
      c.train.epochs = t.value("epochs", c.train.epochs);
      c.train.batch_size = t.value("batch_size", c.train.batch_size);
      c.train.val_fraction = t.value("val_fraction", c.train.val_fraction);
      c.train.mc_evals = t.value("mc_evals", c.train.mc_evals);
      c.train.noise_max = t.value("noise_max", c.train.noise_max);
      c.train.noise_clean_fraction = t.value("noise_clean_fraction", c.train.noise_clean_fraction);
    }
    c.n_train = j.value("n_train", c.n_train);
    c.runs = j.value("runs", c.runs);
    c.ablation_runs = j.value("ablation_runs", c.ablation_runs);
    if (j.contains("augment")) {
      nlohmann::json a = to_json(c.augment);
      a.update(j.at("augment"));
      c.augment = augment_config_from_json(a);
    }
    c.test_size = j.value("test_size", c.test_size);
    c.calib_size = j.value("calib_size", c.calib_size);
    c.table_sigma = j.value("table_sigma", c.table_sigma);
    c.sweep_sigmas = j.value("sweep_sigmas", c.sweep_sigmas);
    c.columns = j.value("columns", c.columns);
    c.mc_evals = j.value("mc_evals", c.mc_evals);
    c.boundary_resolution = j.value("boundary_resolution", c.boundary_resolution);
    if (j.contains("repressilator")) {
      const auto& r = j.at("repressilator");
      c.repressilator_grid = r.value("grid", c.repressilator_grid);
      c.repressilator.n_cells = r.value("n_cells", c.repressilator.n_cells);
      c.repressilator.noise_sigma = r.value("noise_sigma", c.repressilator.noise_sigma);
      c.repressilator.dt = r.value("dt", c.repressilator.dt);
      c.repressilator.horizon = r.value("horizon", c.repressilator.horizon);
    }
    if (j.contains("lyapunov")) {
      const auto& l = j.at("lyapunov");
      c.lyapunov.dt = l.value("dt", c.lyapunov.dt);
      c.lyapunov.horizon = l.value("horizon", c.lyapunov.horizon);
      c.lyapunov.coordinate = l.value("coordinate", c.lyapunov.coordinate);
      c.lyapunov.start_fraction = l.value("start_fraction", c.lyapunov.start_fraction);
    }
    if (j.contains("linear")) {
      const auto& l = j.at("linear");
      c.linear.lr = l.value("lr", c.linear.lr);
      c.linear.epochs = l.value("epochs", c.linear.epochs);
      c.linear.batch_size = l.value("batch_size", c.linear.batch_size);
    }
    if (j.contains("subcritical")) {
      c.subcritical_mus = j.at("subcritical").value("mus", c.subcritical_mus);
      c.subcritical_samples = j.at("subcritical").value("samples", c.subcritical_samples);
    }
    if (c.runs < 1 || c.ablation_runs < 1 || c.n_train < 1 || c.test_size < 1) {
      throw Error(ErrorCode::Config, "runs, n_train and test_size must be positive");
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Config, std::string("experiment config: ") + e.what());
  }
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  try {
    return config_from_json(nlohmann::json::parse(read_text(path)));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::Config, path + ": " + e.what());
  }
}

// ---- evaluation columns ------------------------------------------------------

struct Column {
  std::string id;
  SystemName system;
  bool augmented;
};

inline const std::vector<Column>& zoo_columns() {
  static const std::vector<Column> cols{
      {"simple_oscillator", SystemName::SO, false},         {"augmented_so", SystemName::SO, true},
      {"suphopf", SystemName::SupercriticalHopf, false},     {"lienard_poly", SystemName::LienardPoly, false},
      {"lienard_sigmoid", SystemName::LienardSigmoid, false}, {"vanderpol", SystemName::VanDerPol, false},
      {"bzreaction", SystemName::BZReaction, false},         {"selkov", SystemName::Selkov, false}};
  return cols;
}

inline std::size_t column_index(const std::string& id) {
  const auto& cols = zoo_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (cols[i].id == id) return i;
  }
  throw Error(ErrorCode::UnknownSystem, "unknown evaluation column " + id);
}

inline const Column& find_column(const std::string& id) { return zoo_columns()[column_index(id)]; }

// Clean fields plus everything needed to score them.
struct EvalSet {
  Column column;
  std::vector<std::uint64_t> seeds;
  std::vector<SystemSpec> systems;
  std::vector<VectorField> clean;
  std::vector<DynClass> labels;
  std::vector<double> distances;

  std::size_t size() const { return clean.size(); }
};

inline EvalSet make_eval_set(const Column& col, std::size_t n, std::uint64_t set_seed, const AugmentConfig& aug,
                             int grid = kDefaultGridSize, int threads = 1) {
  EvalSet s;
  s.column = col;
  s.seeds.resize(n);
  s.clean.resize(n);
  s.labels.resize(n);
  s.distances.resize(n);
  s.systems.resize(n);
  SampleOptions o;
  if (col.augmented) o.augment = aug;
  o.grid_size = grid;
  parallel_for(n, threads, [&](std::size_t i) {
    const std::uint64_t sseed = derive_seed(set_seed, kTestStream + i);
    s.seeds[i] = sseed;
    s.systems[i] = draw_system(col.system, sseed);
    s.clean[i] = clean_field(s.systems[i], sseed, o);
    s.labels[i] = true_label(s.systems[i]);
    s.distances[i] = boundary_distance(s.systems[i]);
  });
  return s;
}

inline std::uint64_t sigma_key(double sigma) { return static_cast<std::uint64_t>(std::llround(sigma * 1e6)); }

// Fresh, seeded noise per (sample, sigma); the clean fields are shared across sigmas.
inline std::vector<VectorField> noisy_fields(const EvalSet& s, double sigma) {
  std::vector<VectorField> out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    out[i] = noisy_copy(s.clean[i], sigma, derive_seed(derive_seed(s.seeds[i], kNoiseStream), sigma_key(sigma)));
  }
  return out;
}

// ---- model variants ----------------------------------------------------------

enum class Variant { Full, NoAttention, FromVectors, NoAugmentation, CnnBaseline };

inline const std::vector<Variant>& all_variants() {
  static const std::vector<Variant> v{Variant::Full, Variant::NoAttention, Variant::FromVectors,
                                      Variant::NoAugmentation, Variant::CnnBaseline};
  return v;
}

inline const char* to_string(Variant v) {
  switch (v) {
    case Variant::Full: return "full";
    case Variant::NoAttention: return "no_attention";
    case Variant::FromVectors: return "from_vectors";
    case Variant::NoAugmentation: return "no_augmentation";
    case Variant::CnnBaseline: return "cnn_baseline";
  }
  return "?";
}

inline Variant parse_variant(const std::string& s) {
  for (auto v : all_variants()) {
    if (s == to_string(v)) return v;
  }
  throw Error(ErrorCode::Config, "unknown model variant " + s);
}

inline ArchConfig variant_arch(ArchConfig a, Variant v) {
  if (v == Variant::NoAttention || v == Variant::CnnBaseline) a.attention = false;
  if (v == Variant::FromVectors || v == Variant::CnnBaseline) a.input = InputMode::Vectors;
  return a;
}

inline bool variant_augmented(Variant v) { return v != Variant::NoAugmentation && v != Variant::CnnBaseline; }

inline ModelInput model_input(const VectorField& f, InputMode mode) { return input_from_field(f, mode); }

inline std::vector<ModelInput> model_inputs(const std::vector<VectorField>& fields, InputMode mode) {
  std::vector<ModelInput> out;
  out.reserve(fields.size());
  for (const auto& f : fields) out.push_back(model_input(f, mode));
  return out;
}

inline std::vector<DynClass> labels_of(const std::vector<ClassProbs>& p) {
  std::vector<DynClass> out;
  for (const auto& x : p) out.push_back(x.label);
  return out;
}

// ---- experiment context ------------------------------------------------------

using Logger = std::function<void(const std::string&)>;

class Experiment {
 public:
  explicit Experiment(ExperimentConfig cfg, Logger log = {}) : cfg_(std::move(cfg)), log_(std::move(log)) {}

  const ExperimentConfig& config() const { return cfg_; }
  std::string hash() const { return config_hash(to_json(cfg_)); }
  std::uint64_t predict_seed() const { return derive_seed(cfg_.seed, 0x3c0de); }

  void log(const std::string& s) const {
    if (log_) log_(s);
  }

  // Training set shared by every run of a variant family.
  const Dataset& training_set(bool augmented) {
    auto& slot = train_sets_[augmented];
    if (!slot) {
      SampleOptions o;
      if (augmented) o.augment = cfg_.augment;
      o.grid_size = cfg_.arch.grid;
      o.store_raw = true;
      slot = std::make_unique<Dataset>(
          make_system_dataset(SystemName::SO, cfg_.n_train, cfg_.seed, o, "train", cfg_.threads, 0));
    }
    return *slot;
  }

  std::string model_key(Variant v, int run) const {
    nlohmann::json k{{"arch", to_json(variant_arch(cfg_.arch, v))},
                     {"train", to_json(run_opts(run))},
                     {"n_train", cfg_.n_train},
                     {"seed", cfg_.seed},
                     {"augmented", variant_augmented(v)},
                     {"run", run}};
    if (variant_augmented(v)) k["augment"] = to_json(cfg_.augment);
    return config_hash(k);
  }

  std::string model_path(Variant v, int run) const {
    return cfg_.cache_dir() + "/" + to_string(v) + "-r" + std::to_string(run) + "-" + model_key(v, run) + ".twac";
  }

  TrainOpts run_opts(int run) const {
    TrainOpts o = cfg_.train;
    o.seed = derive_seed(cfg_.seed, 0x700000 + static_cast<std::uint64_t>(run));
    o.runs = 1;
    return o;
  }

  // The first `runs` members of the variant's ensemble, trained or loaded from cache.
  std::vector<Classifier*> models(Variant v, int runs) {
    auto& ens = ensembles_[v];
    while (static_cast<int>(ens.size()) < runs) {
      const int r = static_cast<int>(ens.size());
      const std::string path = model_path(v, r);
      const std::string key = model_key(v, r);
      std::unique_ptr<Classifier> m;
      nlohmann::json meta;
      if (std::filesystem::exists(path)) {
        try {
          auto loaded = load(path);
          if (loaded.meta.value("key", std::string()) == key) {
            m = std::make_unique<Classifier>(std::move(loaded.model));
            meta = std::move(loaded.meta);
          }
        } catch (const Error&) {
        }
      }
      if (!m) {
        const TrainOpts o = run_opts(r);
        m = std::make_unique<Classifier>(build_model(variant_arch(cfg_.arch, v), o.seed));
        log(std::string("training ") + to_string(v) + " run " + std::to_string(r));
        const Dataset& ds = training_set(variant_augmented(v));
        const auto t0 = std::chrono::steady_clock::now();
        const auto rep = train(*m, ds, o);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        log("  val accuracy " + fmt_num(rep.val_accuracy) + ", final loss " +
            fmt_num(rep.loss_curve.empty() ? 0.0 : rep.loss_curve.back()) + ", " + fmt_num(std::round(secs)) + " s");
        meta = {{"key", key},
                {"variant", to_string(v)},
                {"run", r},
                {"val_accuracy", rep.val_accuracy},
                {"train_accuracy", rep.train_accuracy},
                {"loss_curve", rep.loss_curve},
                {"train_seconds", secs}};
        std::filesystem::create_directories(cfg_.cache_dir());
        save(*m, path, meta);
      }
      ens.push_back(std::move(m));
      metas_[v].push_back(std::move(meta));
    }
    std::vector<Classifier*> out;
    for (int r = 0; r < runs; ++r) out.push_back(ens[r].get());
    return out;
  }

  // Checkpoint metadata of a member returned by models(): key, accuracies, loss curve, train_seconds.
  const nlohmann::json& model_meta(Variant v, int run) const { return metas_.at(v).at(static_cast<std::size_t>(run)); }

  const EvalSet& eval_set(const std::string& column_id) {
    auto& slot = eval_sets_[column_id];
    if (!slot) {
      const std::size_t ci = column_index(column_id);
      slot = std::make_unique<EvalSet>(make_eval_set(zoo_columns()[ci], cfg_.test_size, derive_seed(cfg_.seed, 0x7e57 + ci),
                                                     cfg_.augment, cfg_.arch.grid, cfg_.threads));
    }
    return *slot;
  }

  // Lyapunov threshold fit once on a clean Augmented SO calibration split.
  double lyapunov_threshold() {
    if (!lyap_threshold_) {
      const EvalSet cal = make_eval_set(find_column("augmented_so"), cfg_.calib_size, derive_seed(cfg_.seed, 0xca1b),
                                        cfg_.augment, cfg_.arch.grid, cfg_.threads);
      const auto scores = lyapunov_scores(cal.clean, cal.seeds);
      lyap_threshold_ = fit_threshold_roc(scores, cal.labels).threshold;
      log("lyapunov threshold " + fmt_num(*lyap_threshold_));
    }
    return *lyap_threshold_;
  }

  std::vector<double> lyapunov_scores(const std::vector<VectorField>& fields, const std::vector<std::uint64_t>& seeds) const {
    std::vector<double> out(fields.size());
    parallel_for(fields.size(), cfg_.threads, [&](std::size_t i) {
      try {
        out[i] = lyapunov_of_field(fields[i], derive_seed(seeds[i], 0x1aa), cfg_.lyapunov);
      } catch (const Error&) {
        out[i] = -std::numeric_limits<double>::infinity();  // no estimate: treated as a point attractor
      }
    });
    return out;
  }

  // Parameters baseline: logistic regression on clean Augmented SO training coefficients.
  const LinearClassifier& parameters_classifier() {
    if (!linear_) {
      const Dataset& ds = training_set(true);
      std::vector<std::vector<double>> X(ds.size());
      std::vector<DynClass> y(ds.size());
      const SampleOptions o{cfg_.augment, 0.0, cfg_.arch.grid, false};
      parallel_for(ds.size(), cfg_.threads, [&](std::size_t i) {
        const std::uint64_t sseed = derive_seed(cfg_.seed, i);
        X[i] = polyfit_coeffs(clean_field(draw_system(SystemName::SO, sseed), sseed, o));
        y[i] = *ds.samples[i].label;
      });
      LinearFitOpts lo = cfg_.linear;
      lo.seed = derive_seed(cfg_.seed, 0x9a7a);
      linear_ = linear_fit(X, y, lo);
    }
    return *linear_;
  }

 private:
  ExperimentConfig cfg_;
  Logger log_;
  std::map<bool, std::unique_ptr<Dataset>> train_sets_;
  std::map<Variant, std::vector<std::unique_ptr<Classifier>>> ensembles_;
  std::map<Variant, std::vector<nlohmann::json>> metas_;
  std::map<std::string, std::unique_ptr<EvalSet>> eval_sets_;
  std::optional<double> lyap_threshold_;
  std::optional<LinearClassifier> linear_;
};

// ---- scoring -----------------------------------------------------------------

inline const std::vector<std::string>& all_methods() {
  static const std::vector<std::string> m{"our_model", "critical_points", "lyapunov", "parameters"};
  return m;
}

inline std::vector<double> ensemble_accuracies(Experiment& ex, const std::vector<Classifier*>& models,
                                               const std::vector<VectorField>& fields,
                                               const std::vector<DynClass>& labels) {
  std::vector<double> acc;
  for (auto* m : models) {
    const auto preds = predict_batch(*m, model_inputs(fields, m->arch().input), ex.config().mc_evals, ex.predict_seed());
    acc.push_back(accuracy(labels_of(preds), labels));
  }
  return acc;
}

// Per-run accuracies of `method` on the given (already noised) fields.
inline std::vector<double> method_accuracies(Experiment& ex, const std::string& method, const EvalSet& set,
                                             const std::vector<VectorField>& fields, Variant v = Variant::Full,
                                             int runs = 0) {
  if (method == "our_model") return ensemble_accuracies(ex, ex.models(v, runs > 0 ? runs : ex.config().runs), fields, set.labels);
  std::vector<DynClass> pred(fields.size());
  if (method == "critical_points") {
    parallel_for(fields.size(), ex.config().threads, [&](std::size_t i) { pred[i] = classify_critical(fields[i]); });
  } else if (method == "lyapunov") {
    const double thr = ex.lyapunov_threshold();
    const auto scores = ex.lyapunov_scores(fields, set.seeds);
    for (std::size_t i = 0; i < fields.size(); ++i) pred[i] = classify_lyapunov_score(scores[i], thr);
  } else if (method == "parameters") {
    const auto& clf = ex.parameters_classifier();
    parallel_for(fields.size(), ex.config().threads,
                 [&](std::size_t i) { pred[i] = linear_predict(clf, polyfit_coeffs(fields[i])); });
  } else {
    throw Error(ErrorCode::Config, "unknown method " + method);
  }
  return {accuracy(pred, set.labels)};
}

struct AccuracyRow {
  std::string column;
  std::string method;
  double sigma = 0.0;
  MeanStd acc;
  std::vector<double> runs;
};

inline CsvTable accuracy_csv(const std::vector<AccuracyRow>& rows, const std::string& hash, std::uint64_t seed) {
  CsvTable t;
  t.header = {"system", "method", "sigma", "accuracy", "accuracy_std", "runs", "seed", "config_hash"};
  for (const auto& r : rows) {
    t.add({r.column, r.method, fmt_num(r.sigma), fmt_num(r.acc.mean), fmt_num(r.acc.std), std::to_string(r.acc.n),
           std::to_string(seed), hash});
  }
  return t;
}

inline double method_average(const std::vector<AccuracyRow>& rows, const std::string& method) {
  std::vector<double> xs;
  for (const auto& r : rows) {
    if (r.method == method) xs.push_back(r.acc.mean);
  }
  return mean_std(xs).mean;
}

inline const AccuracyRow& find_row(const std::vector<AccuracyRow>& rows, const std::string& column,
                                   const std::string& method, std::optional<double> sigma = std::nullopt) {
  for (const auto& r : rows) {
    if (r.column == column && r.method == method && (!sigma || std::abs(r.sigma - *sigma) < 1e-12)) return r;
  }
  throw Error(ErrorCode::Config, "no result row for " + column + "/" + method);
}

inline std::vector<AccuracyRow> run_accuracy_table(Experiment& ex, double sigma,
                                                   const std::vector<std::string>& methods = all_methods()) {
  std::vector<AccuracyRow> rows;
  for (const auto& col : ex.config().columns) {
    const EvalSet& set = ex.eval_set(col);
    const auto fields = noisy_fields(set, sigma);
    for (const auto& m : methods) {
      AccuracyRow r{col, m, sigma, {}, method_accuracies(ex, m, set, fields)};
      r.acc = mean_std(r.runs);
      ex.log("table " + col + " " + m + " sigma=" + fmt_num(sigma) + " acc=" + fmt_num(r.acc.mean));
      rows.push_back(std::move(r));
    }
  }
  return rows;
}

// ---- noise sweep -------------------------------------------------------------

struct NoiseSweep {
  std::vector<double> sigmas;
  std::vector<AccuracyRow> rows;
  std::vector<double> ours;          // mean accuracy of our model per sigma
  std::vector<double> ours_smoothed; // antitonic fit of `ours`
  double tolerance = 0.0;            // sampling error allowance
  bool non_increasing = false;       // raw curve within tolerance of its antitonic fit
};

inline NoiseSweep run_noise_sweep(Experiment& ex, const std::vector<std::string>& methods = all_methods(),
                                  const std::string& column = "augmented_so") {
  NoiseSweep s;
  s.sigmas = ex.config().sweep_sigmas;
  const EvalSet& set = ex.eval_set(column);
  for (double sigma : s.sigmas) {
    const auto fields = noisy_fields(set, sigma);
    for (const auto& m : methods) {
      AccuracyRow r{column, m, sigma, {}, method_accuracies(ex, m, set, fields)};
      r.acc = mean_std(r.runs);
      ex.log("sweep " + m + " sigma=" + fmt_num(sigma) + " acc=" + fmt_num(r.acc.mean));
      if (m == "our_model") s.ours.push_back(r.acc.mean);
      s.rows.push_back(std::move(r));
    }
  }
  if (!s.ours.empty()) {
    s.ours_smoothed = antitonic_fit(s.ours);
    // Two binomial standard errors at p = 1/2 for the test-set size.
    s.tolerance = 1.0 / std::sqrt(static_cast<double>(set.size()));
    s.non_increasing = max_abs_deviation(s.ours, s.ours_smoothed) <= s.tolerance;
  }
  return s;
}

// ---- boundary maps -----------------------------------------------------------

struct BoundaryGrid {
  SystemName system = SystemName::SO;
  Interval x{-0.5, 0.5}, y{-1, 1};
  int nx = 21, ny = 21;
  std::vector<double> fixed;  // values for parameters beyond the two axes
};

// Endpoint-inclusive lattice over the first two parameters' sampling ranges.
inline BoundaryGrid default_boundary_grid(SystemName n, int resolution) {
  const auto r = param_ranges(n);
  BoundaryGrid g;
  g.system = n;
  g.x = {r[0].lo, r[0].hi};
  g.nx = resolution;
  if (r.size() >= 2) {
    g.y = {r[1].lo, r[1].hi};
    g.ny = resolution;
  } else {
    g.y = {0, 0};
    g.ny = 1;
  }
  for (std::size_t k = 2; k < r.size(); ++k) g.fixed.push_back(0.5 * (r[k].lo + r[k].hi));
  return g;
}

struct BoundaryMap {
  std::string system;
  std::vector<std::string> axis_names;
  std::vector<double> x_values, y_values;
  HeatmapAxes axes;
  std::vector<std::vector<double>> cells;  // cells[iy][ix], mean cycle prediction
  std::vector<Polyline> overlay;
  int runs = 0;
};

inline std::vector<double> lattice(Interval r, int n) {
  if (n == 1) return {0.5 * (r.lo + r.hi)};
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = r.lo + r.width() * i / (n - 1);
  return v;
}

inline Interval cell_extent(const std::vector<double>& v) {
  if (v.size() < 2) return {v[0] - 0.5, v[0] + 0.5};
  const double h = v[1] - v[0];
  return {v.front() - 0.5 * h, v.back() + 0.5 * h};
}

// Mean over runs of the binary per-run cycle decision for each input.
inline std::vector<double> ensemble_cycle_votes(Experiment& ex, const std::vector<Classifier*>& models,
                                                const std::vector<VectorField>& fields) {
  std::vector<double> votes(fields.size(), 0.0);
  for (auto* m : models) {
    const auto preds = predict_batch(*m, model_inputs(fields, m->arch().input), ex.config().mc_evals, ex.predict_seed());
    for (std::size_t i = 0; i < preds.size(); ++i) votes[i] += preds[i].label == DynClass::PeriodicAttractor;
  }
  for (auto& v : votes) v /= static_cast<double>(models.size());
  return votes;
}

inline BoundaryMap run_boundary_map(Experiment& ex, const BoundaryGrid& g, Variant v = Variant::Full, int runs = 0) {
  BoundaryMap bm;
  bm.system = std::string(system_id(g.system));
  bm.axis_names = param_names(g.system);
  if (bm.axis_names.size() < 2) bm.axis_names.push_back("");
  bm.x_values = lattice(g.x, g.nx);
  bm.y_values = lattice(g.y, g.ny);
  bm.axes = {bm.axis_names[0], bm.axis_names[1], cell_extent(bm.x_values), cell_extent(bm.y_values)};
  std::vector<VectorField> fields;
  const bool planar_params = param_ranges(g.system).size() >= 2;
  for (double yv : bm.y_values) {
    for (double xv : bm.x_values) {
      std::vector<double> p{xv};
      if (planar_params) p.push_back(yv);
      p.insert(p.end(), g.fixed.begin(), g.fixed.end());
      const SystemSpec s = make_system(g.system, p);
      fields.push_back(rasterize(s, GridSpec::for_system(s, ex.config().arch.grid, ex.config().arch.grid)));
    }
  }
  const auto models = ex.models(v, runs > 0 ? runs : ex.config().runs);
  bm.runs = static_cast<int>(models.size());
  const auto votes = ensemble_cycle_votes(ex, models, fields);
  bm.cells.assign(g.ny, std::vector<double>(g.nx));
  for (int i = 0; i < g.ny; ++i) {
    for (int j = 0; j < g.nx; ++j) bm.cells[i][j] = votes[static_cast<std::size_t>(i) * g.nx + j];
  }
  auto curves = boundary_curve(g.system, 512);
  for (auto& c : curves) {
    if (c.size() == 1) c = {{c[0][0], bm.axes.y_range.lo}, {c[0][0], bm.axes.y_range.hi}};
  }
  bm.overlay = curves;
  return bm;
}

inline CsvTable boundary_csv(const BoundaryMap& bm, const std::string& hash, std::uint64_t seed) {
  CsvTable t;
  t.header = {"system", bm.axis_names[0], bm.axis_names[1], "mean_cycle_prediction", "runs", "seed", "config_hash"};
  for (std::size_t i = 0; i < bm.y_values.size(); ++i) {
    for (std::size_t j = 0; j < bm.x_values.size(); ++j) {
      t.add({bm.system, fmt_num(bm.x_values[j]), fmt_num(bm.y_values[i]), fmt_num(bm.cells[i][j]),
             std::to_string(bm.runs), std::to_string(seed), hash});
    }
  }
  return t;
}

inline std::string boundary_svg(const BoundaryMap& bm, const std::string& hash, std::uint64_t seed) {
  return render_heatmap(bm.cells, bm.axes, bm.overlay, bm.system + " mean cycle prediction",
                        "config_hash=" + hash + " seed=" + std::to_string(seed));
}

struct FlipAnalysis {
  std::size_t rows_considered = 0;
  std::size_t rows_ok = 0;
  std::vector<std::vector<double>> crossings;  // per row, x positions where the mean crosses 0.5
  double fraction() const { return rows_considered ? static_cast<double>(rows_ok) / rows_considered : 0.0; }
};

// A row passes when the mean crosses 0.5 at least once and every crossing lies
// within `tol` of `true_x`. Rows whose y is within `skip_y` of zero are skipped.
inline FlipAnalysis flip_analysis(const BoundaryMap& bm, double true_x, double tol, std::optional<double> skip_y = 0.0) {
  FlipAnalysis fa;
  for (std::size_t i = 0; i < bm.y_values.size(); ++i) {
    const auto& row = bm.cells[i];
    std::vector<double> xs;
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (row[j] == 0.5) xs.push_back(bm.x_values[j]);
      if (j + 1 < row.size() && (row[j] - 0.5) * (row[j + 1] - 0.5) < 0) {
        const double t = (0.5 - row[j]) / (row[j + 1] - row[j]);
        xs.push_back(bm.x_values[j] + t * (bm.x_values[j + 1] - bm.x_values[j]));
      }
    }
    fa.crossings.push_back(xs);
    if (skip_y && std::abs(bm.y_values[i]) <= 1e-12 + *skip_y) continue;
    ++fa.rows_considered;
    const bool ok = !xs.empty() && std::all_of(xs.begin(), xs.end(), [&](double x) { return std::abs(x - true_x) <= tol; });
    fa.rows_ok += ok;
  }
  return fa;
}

// ---- confidence vs distance --------------------------------------------------

struct ConfidenceCurve {
  std::optional<double> rho;  // Spearman(cycle probability, signed distance); nullopt when undefined
  std::vector<double> probs, distances;
  std::vector<DynClass> labels;
  std::vector<double> bin_lo, bin_hi;
  // per bin and class (0 point, 1 cycle): mean, std, count of cycle probability
  std::vector<std::array<MeanStd, 2>> bins;
};

inline ConfidenceCurve confidence_curve(std::vector<double> probs, std::vector<double> distances,
                                        std::vector<DynClass> labels, int nbins = 10) {
  ConfidenceCurve c;
  c.rho = spearman(probs, distances);
  if (!distances.empty()) {
    const auto [lo_it, hi_it] = std::minmax_element(distances.begin(), distances.end());
    const double lo = *lo_it, hi = *hi_it, w = (hi - lo) / nbins;
    for (int b = 0; b < nbins; ++b) {
      c.bin_lo.push_back(lo + b * w);
      c.bin_hi.push_back(b + 1 == nbins ? hi : lo + (b + 1) * w);
      std::array<std::vector<double>, 2> vals;
      for (std::size_t i = 0; i < probs.size(); ++i) {
        const bool in = distances[i] >= c.bin_lo.back() && (distances[i] < c.bin_hi.back() || (b + 1 == nbins && distances[i] <= hi));
        if (in) vals[labels[i] == DynClass::PeriodicAttractor].push_back(probs[i]);
      }
      c.bins.push_back({mean_std(vals[0]), mean_std(vals[1])});
    }
  }
  c.probs = std::move(probs);
  c.distances = std::move(distances);
  c.labels = std::move(labels);
  return c;
}

inline ConfidenceCurve confidence_vs_distance(Experiment& ex, const std::string& column, double sigma = 0.0,
                                              int nbins = 10) {
  const EvalSet& set = ex.eval_set(column);
  const auto fields = noisy_fields(set, sigma);
  std::vector<double> probs(set.size(), 0.0);
  const auto models = ex.models(Variant::Full, ex.config().runs);
  for (auto* m : models) {
    const auto preds = predict_batch(*m, model_inputs(fields, m->arch().input), ex.config().mc_evals, ex.predict_seed());
    for (std::size_t i = 0; i < preds.size(); ++i) probs[i] += preds[i].cycle_prob / static_cast<double>(models.size());
  }
  return confidence_curve(probs, set.distances, set.labels, nbins);
}

inline CsvTable confidence_csv(const ConfidenceCurve& c, const std::string& column, const std::string& hash,
                               std::uint64_t seed) {
  CsvTable t;
  t.header = {"system", "signed_distance", "label", "cycle_prob", "spearman_rho", "seed", "config_hash"};
  const std::string rho = c.rho ? fmt_num(*c.rho) : "NotApplicable";
  for (std::size_t i = 0; i < c.probs.size(); ++i) {
    t.add({column, fmt_num(c.distances[i]), c.labels[i] == DynClass::PeriodicAttractor ? "cycle" : "point",
           fmt_num(c.probs[i]), rho, std::to_string(seed), hash});
  }
  return t;
}

// ---- repressilator -----------------------------------------------------------

struct RepressilatorReport {
  BoundaryMap map;
  std::vector<std::vector<DynClass>> truth;  // [iy][ix]
  std::vector<double> run_accuracy;
  MeanStd accuracy;
  double deep_alpha = 10.0, deep_beta = 0.0;
  int deep_cycle_votes = 0;
  double max_residual = 0.0;  // self-consistency of the analytic boundary over the grid's alphas
};

// Largest residual of the fixed point, gain and boundary equations at `alpha`.
inline double repressilator_window_residual(double alpha) {
  const auto w = repressilator_boundary(alpha);
  constexpr double n = zoo::kRepressilatorHill;
  const double fp = std::abs(w.p_hat - alpha / (1.0 + std::pow(w.p_hat, n)) - zoo::kRepressilatorLeak);
  const double q = 1.0 + std::pow(w.p_hat, n);
  const double a = std::abs(w.A + alpha * n * std::pow(w.p_hat, n - 1) / (q * q));
  // beta_1,2 solve (beta+1)^2 / beta = 3 A^2 / (4 + 2 A).
  auto root = [&](double b) { return (b + 1) * (b + 1) / b - 3.0 * w.A * w.A / (4.0 + 2.0 * w.A); };
  return std::max({fp, a, std::abs(root(w.beta1)) * w.beta1, std::abs(root(w.beta2)) * w.beta2});
}

inline VectorField scattered_to_field(const ScatteredVelocities& s, int grid) {
  return interpolate_scattered(s, grid_for_scattered(s, grid));
}

// beta_1 and beta_2 curves over alpha in (0, 30].
inline std::vector<Polyline> repressilator_overlay(int points = 300) {
  Polyline lower, upper;
  for (int k = 1; k <= points; ++k) {
    const double a = 30.0 * k / points;
    try {
      const auto win = repressilator_boundary(a);
      lower.push_back({a, win.beta1});
      upper.push_back({a, win.beta2});
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoOscillationWindow) throw;
    }
  }
  return {lower, upper};
}

inline RepressilatorReport run_repressilator_study(Experiment& ex, Variant v = Variant::Full, int runs = 0) {
  const auto& cfg = ex.config();
  const int n = cfg.repressilator_grid;
  RepressilatorReport rep;
  auto& bm = rep.map;
  bm.system = "repressilator";
  bm.axis_names = {"alpha", "beta"};
  for (int k = 0; k < n; ++k) {
    bm.x_values.push_back(30.0 * (k + 0.5) / n);
    bm.y_values.push_back(10.0 * (k + 0.5) / n);
  }
  bm.axes = {"alpha", "beta", {0, 30}, {0, 10}};
  std::vector<VectorField> fields;
  std::vector<DynClass> truth;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double a = bm.x_values[j], b = bm.y_values[i];
      const auto s = simulate_repressilator_sample(a, b, derive_seed(cfg.seed, 0x4e9000 + static_cast<std::uint64_t>(i * n + j)),
                                                   cfg.repressilator);
      fields.push_back(scattered_to_field(s, cfg.arch.grid));
      truth.push_back(repressilator_label(a, b));
    }
  }
  for (int i = 0; i < n; ++i) rep.truth.emplace_back(truth.begin() + i * n, truth.begin() + (i + 1) * n);
  for (double a : bm.x_values) {
    try {
      rep.max_residual = std::max(rep.max_residual, repressilator_window_residual(a));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoOscillationWindow) throw;
    }
  }
  const auto w = repressilator_boundary(rep.deep_alpha);
  rep.deep_beta = 0.5 * (w.beta1 + w.beta2);
  const auto deep = scattered_to_field(
      simulate_repressilator_sample(rep.deep_alpha, rep.deep_beta, derive_seed(cfg.seed, 0xdee9), cfg.repressilator),
      cfg.arch.grid);

  const auto models = ex.models(v, runs > 0 ? runs : cfg.runs);
  bm.runs = static_cast<int>(models.size());
  std::vector<double> votes(fields.size(), 0.0);
  for (auto* m : models) {
    const auto preds = labels_of(predict_batch(*m, model_inputs(fields, m->arch().input), cfg.mc_evals, ex.predict_seed()));
    rep.run_accuracy.push_back(accuracy(preds, truth));
    for (std::size_t k = 0; k < preds.size(); ++k) votes[k] += preds[k] == DynClass::PeriodicAttractor;
    rep.deep_cycle_votes += predict(*m, model_input(deep, m->arch().input), cfg.mc_evals, ex.predict_seed()).label ==
                            DynClass::PeriodicAttractor;
  }
  rep.accuracy = mean_std(rep.run_accuracy);
  bm.cells.assign(n, std::vector<double>(n));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) bm.cells[i][j] = votes[static_cast<std::size_t>(i * n + j)] / bm.runs;
  }
  bm.overlay = repressilator_overlay();
  return rep;
}

// ---- ablations ---------------------------------------------------------------

struct AblationRow {
  Variant variant;
  std::string column;
  MeanStd acc;
  std::vector<double> runs;
};

inline std::vector<AblationRow> run_ablations(Experiment& ex, double sigma = 0.0, int runs = 0,
                                              const std::vector<Variant>& variants = all_variants()) {
  std::vector<AblationRow> rows;
  const int r = runs > 0 ? runs : ex.config().ablation_runs;
  for (auto v : variants) {
    for (const auto& col : ex.config().columns) {
      const EvalSet& set = ex.eval_set(col);
      AblationRow row{v, col, {}, method_accuracies(ex, "our_model", set, noisy_fields(set, sigma), v, r)};
      row.acc = mean_std(row.runs);
      ex.log(std::string("ablation ") + to_string(v) + " " + col + " acc=" + fmt_num(row.acc.mean));
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

inline double variant_average(const std::vector<AblationRow>& rows, Variant v) {
  std::vector<double> xs;
  for (const auto& r : rows) {
    if (r.variant == v) xs.push_back(r.acc.mean);
  }
  return mean_std(xs).mean;
}

inline const AblationRow& find_ablation(const std::vector<AblationRow>& rows, Variant v, const std::string& column) {
  for (const auto& r : rows) {
    if (r.variant == v && r.column == column) return r;
  }
  throw Error(ErrorCode::Config, std::string("no ablation row for ") + to_string(v) + "/" + column);
}

inline CsvTable ablation_csv(const std::vector<AblationRow>& rows, double sigma, const std::string& hash,
                             std::uint64_t seed) {
  CsvTable t;
  t.header = {"variant", "system", "sigma", "accuracy", "accuracy_std", "runs", "seed", "config_hash"};
  for (const auto& r : rows) {
    t.add({to_string(r.variant), r.column, fmt_num(sigma), fmt_num(r.acc.mean), fmt_num(r.acc.std),
           std::to_string(r.acc.n), std::to_string(seed), hash});
  }
  return t;
}

// ---- subcritical probe -------------------------------------------------------

struct SubcriticalRow {
  double mu = 0.0;
  SubcriticalRegime regime = SubcriticalRegime::Point;
  double point_logit = 0.0;  // mean over samples and runs
  double cycle_logit = 0.0;
  std::vector<double> run_point_logit;
};

inline const char* to_string(SubcriticalRegime r) {
  switch (r) {
    case SubcriticalRegime::Point: return "point";
    case SubcriticalRegime::Bistable: return "bistable";
    case SubcriticalRegime::Periodic: return "periodic";
  }
  return "?";
}

// Logits on subcritical-Hopf rasters at fixed mu; omega and b drawn uniformly per sample.
inline std::vector<SubcriticalRow> run_subcritical_probe(Experiment& ex, int runs = 0) {
  const auto& cfg = ex.config();
  const auto models = ex.models(Variant::Full, runs > 0 ? runs : cfg.runs);
  const auto ranges = param_ranges(SystemName::SubcriticalHopf);
  std::vector<SubcriticalRow> rows;
  for (std::size_t k = 0; k < cfg.subcritical_mus.size(); ++k) {
    SubcriticalRow row;
    row.mu = cfg.subcritical_mus[k];
    row.regime = subcritical_regime(row.mu);
    Rng rng = make_rng(cfg.seed, 0x5ab + k);
    std::vector<VectorField> fields;
    for (std::size_t s = 0; s < cfg.subcritical_samples; ++s) {
      const double w = std::uniform_real_distribution<double>(ranges[1].lo, ranges[1].hi)(rng);
      const double b = std::uniform_real_distribution<double>(ranges[2].lo, ranges[2].hi)(rng);
      const SystemSpec spec = make_system(SystemName::SubcriticalHopf, {row.mu, w, b});
      fields.push_back(rasterize(spec, GridSpec::for_system(spec, cfg.arch.grid, cfg.arch.grid)));
    }
    double cyc = 0.0;
    for (auto* m : models) {
      const auto preds = predict_batch(*m, model_inputs(fields, m->arch().input), cfg.mc_evals, ex.predict_seed());
      double p = 0.0;
      for (const auto& x : preds) {
        p += x.point_logit;
        cyc += x.cycle_logit;
      }
      row.run_point_logit.push_back(p / static_cast<double>(preds.size()));
    }
    row.point_logit = mean_std(row.run_point_logit).mean;
    row.cycle_logit = cyc / static_cast<double>(fields.size() * models.size());
    rows.push_back(std::move(row));
  }
  return rows;
}

inline bool strictly_decreasing_point_logit(const std::vector<SubcriticalRow>& rows) {
  for (std::size_t k = 1; k < rows.size(); ++k) {
    if (!(rows[k].point_logit < rows[k - 1].point_logit)) return false;
  }
  return !rows.empty();
}

}  // namespace twa
