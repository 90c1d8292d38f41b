// twa: dataset generation, training, prediction, baselines and experiment reports.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "twa/baselines.hpp"
#include "twa/classifier.hpp"
#include "twa/datagen.hpp"
#include "twa/dataset.hpp"
#include "twa/experiments.hpp"
#include "twa/odeint.hpp"
#include "twa/report.hpp"

namespace fs = std::filesystem;
using namespace twa;

namespace {

int exit_code(ErrorCode c) {
  switch (c) {
    case ErrorCode::Config:
    case ErrorCode::ParamOutOfRange:
    case ErrorCode::UnknownSystem:
    case ErrorCode::UnsupportedSystem:
      return 2;
    case ErrorCode::NonFiniteInput:
    case ErrorCode::NonFiniteState:
    case ErrorCode::NoOscillationWindow:
      return 4;
    default:
      return 3;
  }
}

struct Globals {
  std::string profile = "desk";
  std::uint64_t seed = 0;
  std::string out = "results";
  int threads = 1;
  std::string config;
  std::string cache;
  int runs = 0;
  bool quiet = false;
};

ExperimentConfig experiment_config(const Globals& g, CLI::App& app) {
  ExperimentConfig c = g.config.empty() ? ExperimentConfig::preset(g.profile) : load_experiment_config(g.config);
  if (!g.config.empty() && app.count("--profile")) {
    throw Error(ErrorCode::Config, "--profile and --config are mutually exclusive");
  }
  if (app.count("--seed") || g.config.empty()) c.seed = g.seed;
  c.out_dir = g.out;
  c.threads = g.threads;
  if (!g.cache.empty()) c.model_cache = g.cache;
  if (g.runs > 0) c.runs = c.ablation_runs = g.runs;
  return c;
}

Logger logger(const Globals& g) {
  if (g.quiet) return {};
  return [](const std::string& s) { std::cerr << s << "\n"; };
}

std::string out_path(const Globals& g, const std::string& name) {
  fs::create_directories(g.out);
  return (fs::path(g.out) / name).string();
}

void write_config_stamp(const Globals& g, const ExperimentConfig& c) {
  nlohmann::json j = to_json(c);
  j["config_hash"] = config_hash(to_json(c));
  write_text(out_path(g, "config.json"), j.dump(2) + "\n");
}

std::vector<ModelInput> dataset_inputs(const Dataset& ds, InputMode mode) {
  std::vector<ModelInput> in;
  for (const auto& s : ds.samples) in.push_back(input_from_sample(s, mode));
  return in;
}

// Vector fields exactly as the dataset's angles saw them: clean raw section plus the recorded noise.
std::vector<VectorField> dataset_fields(const Dataset& ds) {
  if (!ds.has_raw()) throw Error(ErrorCode::CorruptPayload, "dataset has no raw vector section");
  const std::uint64_t stream = ds.manifest.extra.value("stream", std::uint64_t{0});
  std::vector<VectorField> out;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const std::uint64_t sseed = derive_seed(ds.manifest.seed, stream + i);
    out.push_back(noisy_copy(ds.vector_field(i), ds.manifest.noise_sigma, derive_seed(sseed, kNoiseStream)));
  }
  return out;
}

std::vector<DynClass> dataset_labels(const Dataset& ds) {
  std::vector<DynClass> y;
  for (const auto& s : ds.samples) {
    if (!s.label) throw Error(ErrorCode::DegenerateLabels, "dataset is unlabeled");
    y.push_back(*s.label);
  }
  return y;
}

Dataset single_sample_dataset(const VectorField& f, const std::string& source) {
  Dataset ds;
  ds.width = f.grid.width;
  ds.height = f.grid.height;
  ds.manifest.system = "external";
  ds.manifest.split = "predict";
  ds.manifest.x_extent = f.grid.x_extent;
  ds.manifest.y_extent = f.grid.y_extent;
  ds.manifest.extra = {{"source", source}, {"interpolation", "knn_idw_k8_p2"}};
  LabeledSample s;
  s.angles = to_angles(f).phi;
  s.raw = pack_raw(f);
  ds.samples.push_back(std::move(s));
  return ds;
}

void print_rows(const CsvTable& t) { std::cout << to_csv(t); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Topological vector-field augmentation and Hopf attractor classification"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--profile", g.profile, "Experiment preset")->check(CLI::IsMember({"paper", "desk"}));
  app.add_option("--seed", g.seed, "Master seed");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--config", g.config, "Experiment config JSON (overrides the preset)");
  app.add_option("--model-cache", g.cache, "Directory for cached trained models");
  app.add_option("--runs", g.runs, "Override the number of training re-runs");
  app.add_flag("--quiet", g.quiet, "Suppress progress on stderr");

  // generate
  auto* gen = app.add_subcommand("generate", "Zoo dataset for one system");
  std::string gen_system = "simple_oscillator", gen_split = "test";
  std::size_t gen_count = 200;
  double gen_sigma = 0.0;
  int gen_grid = kDefaultGridSize;
  bool gen_no_raw = false;
  gen->add_option("--system", gen_system, "System id")->required();
  gen->add_option("--count", gen_count, "Number of samples");
  gen->add_option("--sigma", gen_sigma, "Gaussian noise on the vector raster");
  gen->add_option("--split", gen_split, "Split name (train uses the training seed stream)");
  gen->add_option("--grid", gen_grid, "Grid size");
  gen->add_flag("--no-raw", gen_no_raw, "Omit the raw vector section");

  // augment
  auto* aug = app.add_subcommand("augment", "Augmented simple-oscillator train/test datasets");
  AugmentedSetConfig aug_cfg;
  aug_cfg.n_train = 2000;
  aug_cfg.n_test = 200;
  aug->add_option("--n-train", aug_cfg.n_train);
  aug->add_option("--n-test", aug_cfg.n_test);
  aug->add_option("--sigma", aug_cfg.noise_sigma);
  aug->add_option("--grid", aug_cfg.grid_size);

  // interp
  auto* interp = app.add_subcommand("interp", "Scattered x,y,vx,vy CSV to a one-sample dataset");
  std::string interp_in, interp_out;
  int interp_grid = kDefaultGridSize;
  interp->add_option("--input", interp_in)->required()->check(CLI::ExistingFile);
  interp->add_option("--output", interp_out, "Output TWAF (default <out>/interp.twaf)");
  interp->add_option("--grid", interp_grid);

  // train
  auto* tr = app.add_subcommand("train", "Train a classifier on a TWAF dataset");
  std::string tr_data, tr_model, tr_input = "angles";
  bool tr_no_attention = false;
  tr->add_option("--data", tr_data, "Training dataset")->required()->check(CLI::ExistingFile);
  tr->add_option("--model", tr_model, "Output checkpoint (default <out>/model.twac)");
  std::optional<int> tr_epochs, tr_batch;
  std::optional<double> tr_lr, tr_noise_max, tr_noise_clean;
  tr->add_option("--epochs", tr_epochs, "Default: profile epochs");
  tr->add_option("--lr", tr_lr, "Default: profile learning rate");
  tr->add_option("--batch-size", tr_batch, "Default: profile batch size");
  tr->add_option("--noise-max", tr_noise_max, "Per-epoch training noise sigma ~ U[0, max]; default: profile");
  tr->add_option("--noise-clean-fraction", tr_noise_clean, "Share of noiseless draws; default: profile");
  tr->add_option("--input", tr_input)->check(CLI::IsMember({"angles", "vectors"}));
  tr->add_flag("--no-attention", tr_no_attention);

  // predict
  auto* pr = app.add_subcommand("predict", "Predict from a TWAF dataset or scattered CSV");
  std::string pr_model, pr_input;
  int pr_mc = kDefaultMcEvals;
  pr->add_option("--model", pr_model)->required()->check(CLI::ExistingFile);
  pr->add_option("--input", pr_input)->required()->check(CLI::ExistingFile);
  pr->add_option("--mc", pr_mc, "MC dropout passes");

  // baseline
  auto* bl = app.add_subcommand("baseline", "Classical detector on a dataset or zoo column");
  std::string bl_method, bl_data, bl_column = "simple_oscillator";
  double bl_sigma = 0.0;
  bl->add_option("--method", bl_method)->required()->check(CLI::IsMember({"critical_points", "lyapunov", "parameters"}));
  bl->add_option("--data", bl_data, "Labeled TWAF with raw section")->check(CLI::ExistingFile);
  bl->add_option("--column", bl_column, "Zoo evaluation column (when --data is absent)");
  bl->add_option("--sigma", bl_sigma);

  // table / sweep
  auto* tb = app.add_subcommand("table", "Accuracy table over the zoo columns");
  double tb_sigma = -1;
  tb->add_option("--sigma", tb_sigma, "Noise level (default: profile table sigma)");
  auto* sw = app.add_subcommand("sweep", "Noise sweep on Augmented SO");

  // boundary / confidence
  auto* bd = app.add_subcommand("boundary", "Boundary map over a parameter plane");
  std::string bd_system = "simple_oscillator";
  int bd_res = 0;
  std::vector<double> bd_x, bd_y;
  bd->add_option("--system", bd_system);
  bd->add_option("--resolution", bd_res, "Cells per axis");
  bd->add_option("--x-range", bd_x, "lo hi")->expected(2);
  bd->add_option("--y-range", bd_y, "lo hi")->expected(2);
  auto* cf = app.add_subcommand("confidence", "Confidence vs signed boundary distance");
  std::string cf_column = "simple_oscillator";
  cf->add_option("--column", cf_column);

  auto* rp = app.add_subcommand("repressilator", "Repressilator (alpha, beta) study");
  auto* ab = app.add_subcommand("ablate", "Ablation table");
  auto* sc = app.add_subcommand("subcritical", "Subcritical Hopf logit probe");

  auto* rep = app.add_subcommand("report", "Summary and heatmaps from a results directory");
  std::string rep_dir;
  rep->add_option("--results", rep_dir, "Results directory (default --out)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    const ExperimentConfig cfg = experiment_config(g, app);
    const std::string hash = config_hash(to_json(cfg));

    if (*gen) {
      const SystemName n = parse_system(gen_system);
      const SampleOptions o{std::nullopt, gen_sigma, gen_grid, !gen_no_raw};
      const bool train_split = gen_split == "train";
      const Dataset ds = make_system_dataset(n, gen_count, g.seed, o, gen_split, g.threads, train_split ? 0 : kTestStream);
      const std::string path = out_path(g, gen_system + "_" + gen_split + ".twaf");
      write_dataset(ds, path);
      std::cout << path << "\n";
    } else if (*aug) {
      aug_cfg.seed = g.seed;
      aug_cfg.augment = cfg.augment;
      aug_cfg.threads = g.threads;
      const auto [train_ds, test_ds] = make_augmented_dataset(aug_cfg);
      write_dataset(train_ds, out_path(g, "augmented_so_train.twaf"));
      write_dataset(test_ds, out_path(g, "augmented_so_test.twaf"));
      std::cout << out_path(g, "augmented_so_train.twaf") << "\n" << out_path(g, "augmented_so_test.twaf") << "\n";
    } else if (*interp) {
      const auto s = read_scattered_csv(interp_in);
      const auto ds = single_sample_dataset(scattered_to_field(s, interp_grid), fs::path(interp_in).filename().string());
      const std::string path = interp_out.empty() ? out_path(g, "interp.twaf") : interp_out;
      write_dataset(ds, path);
      std::cout << path << "\n";
    } else if (*tr) {
      const Dataset ds = read_dataset(tr_data);
      ArchConfig arch = cfg.arch;
      arch.grid = ds.width;
      arch.input = parse_input_mode(tr_input);
      if (tr_no_attention) arch.attention = false;
      TrainOpts tr_opts = cfg.train;
      if (tr_epochs) tr_opts.epochs = *tr_epochs;
      if (tr_lr) tr_opts.lr = *tr_lr;
      if (tr_batch) tr_opts.batch_size = *tr_batch;
      if (tr_noise_max) tr_opts.noise_max = *tr_noise_max;
      if (tr_noise_clean) tr_opts.noise_clean_fraction = *tr_noise_clean;
      tr_opts.seed = g.seed;
      Classifier m = build_model(arch, g.seed);
      const auto r = train(m, ds, tr_opts, [&](int epoch, double loss) {
        if (!g.quiet) std::cerr << "epoch " << epoch + 1 << " loss " << fmt_num(loss) << "\n";
      });
      const std::string path = tr_model.empty() ? out_path(g, "model.twac") : tr_model;
      save(m, path, {{"train", to_json(tr_opts)}, {"data", tr_data}, {"val_accuracy", r.val_accuracy},
                     {"train_accuracy", r.train_accuracy}, {"loss_curve", r.loss_curve}, {"config_hash", hash}});
      std::cout << "train_accuracy " << fmt_num(r.train_accuracy) << "\nval_accuracy " << fmt_num(r.val_accuracy)
                << "\n" << path << "\n";
    } else if (*pr) {
      auto loaded = load(pr_model);
      Dataset ds = pr_input.ends_with(".csv")
                       ? single_sample_dataset(scattered_to_field(read_scattered_csv(pr_input), loaded.model.arch().grid), pr_input)
                       : read_dataset(pr_input);
      if (ds.width != loaded.model.arch().grid || ds.height != loaded.model.arch().grid) {
        throw Error(ErrorCode::ShapeMismatch, "input grid differs from the model's grid");
      }
      const auto preds = predict_batch(loaded.model, dataset_inputs(ds, loaded.model.arch().input), pr_mc, g.seed);
      CsvTable t;
      t.header = {"index", "label", "point_logit", "cycle_logit", "point_prob", "cycle_prob", "truth"};
      for (std::size_t i = 0; i < preds.size(); ++i) {
        const auto& p = preds[i];
        const auto& truth = ds.samples[i].label;
        t.add({std::to_string(i), p.label == DynClass::PeriodicAttractor ? "cycle" : "point", fmt_num(p.point_logit),
               fmt_num(p.cycle_logit), fmt_num(p.point_prob), fmt_num(p.cycle_prob),
               truth ? (*truth == DynClass::PeriodicAttractor ? "cycle" : "point") : ""});
      }
      print_rows(t);
    } else if (*bl) {
      Experiment ex(cfg, logger(g));
      if (!bl_data.empty()) {
        const Dataset ds = read_dataset(bl_data);
        EvalSet set;
        set.labels = dataset_labels(ds);
        const auto fields = dataset_fields(ds);
        for (std::size_t i = 0; i < ds.size(); ++i) set.seeds.push_back(derive_seed(ds.manifest.seed, kTestStream + i));
        const double acc = method_accuracies(ex, bl_method, set, fields).front();
        std::cout << bl_method << " accuracy " << fmt_num(acc) << "\n";
      } else {
        const EvalSet& set = ex.eval_set(bl_column);
        const double acc = method_accuracies(ex, bl_method, set, noisy_fields(set, bl_sigma)).front();
        std::cout << bl_method << " " << bl_column << " sigma=" << fmt_num(bl_sigma) << " accuracy " << fmt_num(acc)
                  << "\n";
      }
    } else if (*tb) {
      Experiment ex(cfg, logger(g));
      const double sigma = tb_sigma >= 0 ? tb_sigma : cfg.table_sigma;
      const auto rows = run_accuracy_table(ex, sigma);
      const auto t = accuracy_csv(rows, hash, cfg.seed);
      emit_csv(t, out_path(g, "accuracy_sigma" + fmt_num(sigma) + ".csv"));
      write_config_stamp(g, cfg);
      print_rows(t);
    } else if (*sw) {
      Experiment ex(cfg, logger(g));
      const auto s = run_noise_sweep(ex);
      const auto t = accuracy_csv(s.rows, hash, cfg.seed);
      emit_csv(t, out_path(g, "noise_sweep.csv"));
      write_config_stamp(g, cfg);
      print_rows(t);
      std::cout << "non_increasing_after_isotonic " << (s.non_increasing ? "true" : "false") << "\n";
    } else if (*bd) {
      Experiment ex(cfg, logger(g));
      const SystemName n = parse_system(bd_system);
      detail::require_labeled(n, "boundary");
      BoundaryGrid grid = default_boundary_grid(n, bd_res > 0 ? bd_res : cfg.boundary_resolution);
      if (bd_x.size() == 2) grid.x = {bd_x[0], bd_x[1]};
      if (bd_y.size() == 2) grid.y = {bd_y[0], bd_y[1]};
      const auto bm = run_boundary_map(ex, grid);
      emit_csv(boundary_csv(bm, hash, cfg.seed), out_path(g, "boundary_" + bd_system + ".csv"));
      write_text(out_path(g, "boundary_" + bd_system + ".svg"), boundary_svg(bm, hash, cfg.seed));
      write_config_stamp(g, cfg);
      if (n == SystemName::SO || n == SystemName::SupercriticalHopf) {
        const auto fa = flip_analysis(bm, 0.0, 0.1);
        std::cout << "flip_rows_within_0.1 " << fa.rows_ok << "/" << fa.rows_considered << "\n";
      }
      std::cout << out_path(g, "boundary_" + bd_system + ".svg") << "\n";
    } else if (*cf) {
      Experiment ex(cfg, logger(g));
      const auto c = confidence_vs_distance(ex, cf_column);
      emit_csv(confidence_csv(c, cf_column, hash, cfg.seed), out_path(g, "confidence_" + cf_column + ".csv"));
      write_config_stamp(g, cfg);
      std::cout << "spearman_rho " << (c.rho ? fmt_num(*c.rho) : "NotApplicable") << "\n";
    } else if (*rp) {
      Experiment ex(cfg, logger(g));
      const auto r = run_repressilator_study(ex);
      emit_csv(boundary_csv(r.map, hash, cfg.seed), out_path(g, "repressilator.csv"));
      write_text(out_path(g, "repressilator.svg"), boundary_svg(r.map, hash, cfg.seed));
      write_config_stamp(g, cfg);
      std::cout << "accuracy " << fmt_num(r.accuracy.mean) << " +- " << fmt_num(r.accuracy.std) << "\n"
                << "deep_cell_cycle_votes " << r.deep_cycle_votes << "/" << r.map.runs << "\n"
                << "boundary_residual " << fmt_num(r.max_residual) << "\n";
    } else if (*ab) {
      Experiment ex(cfg, logger(g));
      const auto rows = run_ablations(ex);
      const auto t = ablation_csv(rows, 0.0, hash, cfg.seed);
      emit_csv(t, out_path(g, "ablations.csv"));
      write_config_stamp(g, cfg);
      print_rows(t);
    } else if (*sc) {
      Experiment ex(cfg, logger(g));
      const auto rows = run_subcritical_probe(ex);
      CsvTable t;
      t.header = {"mu", "regime", "point_logit", "cycle_logit", "runs", "seed", "config_hash"};
      for (const auto& r : rows) {
        t.add({fmt_num(r.mu), to_string(r.regime), fmt_num(r.point_logit), fmt_num(r.cycle_logit),
               std::to_string(r.run_point_logit.size()), std::to_string(cfg.seed), hash});
      }
      emit_csv(t, out_path(g, "subcritical.csv"));
      write_config_stamp(g, cfg);
      print_rows(t);
    } else if (*rep) {
      const fs::path dir = rep_dir.empty() ? fs::path(g.out) : fs::path(rep_dir);
      if (!fs::is_directory(dir)) throw Error(ErrorCode::Io, "no results directory " + dir.string());
      std::vector<fs::path> csvs;
      for (const auto& e : fs::directory_iterator(dir)) {
        if (e.path().extension() == ".csv") csvs.push_back(e.path());
      }
      std::sort(csvs.begin(), csvs.end());
      std::string md = "# Results\n";
      for (const auto& p : csvs) {
        const CsvTable t = parse_csv(read_text(p.string()));
        md += "\n## " + p.stem().string() + "\n\n|";
        for (const auto& h : t.header) md += " " + h + " |";
        md += "\n|";
        for (std::size_t k = 0; k < t.header.size(); ++k) md += "---|";
        md += "\n";
        for (const auto& row : t.rows) {
          md += "|";
          for (const auto& c : row) md += " " + c + " |";
          md += "\n";
        }
        // Boundary CSVs are re-rendered as heatmaps.
        if (t.header.size() == 7 && t.header[3] == "mean_cycle_prediction" && !t.rows.empty()) {
          std::map<double, std::map<double, double>> grid;
          for (const auto& row : t.rows) grid[std::stod(row[2])][std::stod(row[1])] = std::stod(row[3]);
          std::vector<std::vector<double>> cells;
          std::vector<double> xs, ys;
          for (const auto& [y, row] : grid) {
            ys.push_back(y);
            cells.emplace_back();
            for (const auto& [x, v] : row) cells.back().push_back(v);
          }
          for (const auto& [x, v] : grid.begin()->second) xs.push_back(x);
          const HeatmapAxes axes{t.header[1], t.header[2], cell_extent(xs), cell_extent(ys)};
          std::vector<Polyline> overlay;
          const std::string sys = t.rows[0][0];
          if (sys == "repressilator") {
            overlay = repressilator_overlay();
          } else {
            const SystemName n = parse_system(sys);
            if (n != SystemName::SubcriticalHopf) overlay = boundary_curve(n, 512);
            for (auto& c : overlay) {
              if (c.size() == 1) c = {{c[0][0], axes.y_range.lo}, {c[0][0], axes.y_range.hi}};
            }
          }
          const std::string stamp = "config_hash=" + t.rows[0][6] + " seed=" + t.rows[0][5];
          write_text((dir / (p.stem().string() + "_report.svg")).string(),
                     render_heatmap(cells, axes, overlay, sys + " mean cycle prediction", stamp));
        }
      }
      write_text((dir / "report.md").string(), md);
      std::cout << (dir / "report.md").string() << "\n";
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
