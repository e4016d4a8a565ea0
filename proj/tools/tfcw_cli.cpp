/*
 * Copyright (c) 2026, The tfcw Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Command-line front end: classify, segment, ablate, robustness, scale,
// bank export/import, convert and synth.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tfcw/error.hpp"
#include "tfcw/experiment.hpp"
#include "tfcw/io.hpp"
#include "tfcw/memory_bank.hpp"
#include "tfcw/robustness.hpp"
#include "tfcw/synthetic.hpp"

namespace fs = std::filesystem;
using namespace tfcw;

namespace {

enum Exit { kOk = 0, kUsage = 2, kData = 3, kInternal = 4 };

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format = "json";
  std::vector<std::size_t> k;
  std::optional<double> alpha;
  std::optional<double> gamma;
  std::string descriptor;
  std::optional<std::size_t> stages;
  std::string train;
  std::string test;
  std::string val;
  std::vector<double> gamma_grid;
  bool no_timings = false;
};

void add_common(CLI::App* app, Common& c, bool data = true) {
  app->add_option("--config", c.config, "JSON experiment config");
  app->add_option("--seed", c.seed, "Seed for every random choice");
  app->add_option("--out", c.out, "Output path (default: stdout)");
  app->add_option("--format", c.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  app->add_option("--k", c.k, "Neighbours per stage (one value or one per stage)")->delimiter(',');
  app->add_option("--alpha", c.alpha, "t-FCW sub-block scale");
  app->add_option("--gamma", c.gamma, "Memory-bank activation sharpness");
  app->add_option("--descriptor", c.descriptor, "xyz, geo or risp")->check(CLI::IsMember({"xyz", "geo", "risp"}));
  app->add_option("--stages", c.stages, "Encoder stages");
  if (data) {
    app->add_option("--train", c.train, "Train split (TFCWPTS)");
    app->add_option("--test", c.test, "Test split (TFCWPTS)");
    app->add_option("--val", c.val, "Validation split for gamma sweeps (TFCWPTS)");
    app->add_option("--gamma-grid", c.gamma_grid, "Sweep gamma over these values")->delimiter(',');
  }
  app->add_flag("--no-timings", c.no_timings, "Leave timings out of the output");
}

ExperimentConfig resolve(const Common& c) {
  ExperimentConfig cfg = c.config.empty() ? ExperimentConfig{} : load_config(c.config);
  PipelineConfig& p = cfg.pipeline;
  if (c.seed) p.seed = *c.seed;
  if (c.stages) {
    p.stages = *c.stages;
    if (c.k.empty()) p.k_per_stage.assign(p.stages, p.k_per_stage.front());
  }
  if (c.k.size() == 1) {
    p.k_per_stage.assign(p.stages, c.k.front());
  } else if (!c.k.empty()) {
    p.k_per_stage = c.k;
  }
  if (c.alpha) p.alpha = *c.alpha;
  if (c.gamma) {
    cfg.gamma = *c.gamma;
    cfg.gamma_grid.clear();
  }
  if (!c.descriptor.empty()) p.descriptor = descriptor_kind_from_string(c.descriptor);
  if (!c.train.empty()) cfg.train_path = c.train;
  if (!c.test.empty()) cfg.test_path = c.test;
  if (!c.val.empty()) cfg.val_path = c.val;
  if (!c.gamma_grid.empty()) cfg.gamma_grid = c.gamma_grid;
  p.validate();
  return cfg;
}

Dataset load_split(const std::string& path, Split split, bool normalize, const char* what) {
  if (path.empty()) throw InvalidArgument(std::string("no ") + what + " split given (--" + what + " or config)");
  return load_dataset(path, split, normalize);
}

void write_output(const std::string& out, const std::string& text) {
  if (out.empty()) {
    std::cout << text;
  } else {
    write_text(out, text);
  }
}

std::string csv_row(const std::string& hash, const std::string& dataset, const std::string& metric, double value,
                    std::uint64_t seed) {
  std::ostringstream os;
  os << hash << ',' << dataset << ',' << metric << ',' << format_double(value) << ',' << seed << '\n';
  return os.str();
}

double accuracy_on(const std::vector<PointCloud>& train, const std::vector<PointCloud>& test, const Dataset& proto,
                   const ExperimentConfig& cfg) {
  Dataset tr = proto, te = proto;
  tr.clouds = train;
  te.clouds = test;
  tr.update_label_counts();
  te.update_label_counts();
  return run_classify(tr, te, cfg).metrics.overall_accuracy;
}

// ModelNet layout: <root>/<class>/<split>/*.off; classes numbered in
// sorted name order.
Dataset convert_tree(const fs::path& root, const std::string& split, const SurfaceSampling& sampling) {
  std::vector<fs::path> classes;
  for (const auto& e : fs::directory_iterator(root)) {
    if (e.is_directory()) classes.push_back(e.path());
  }
  std::sort(classes.begin(), classes.end());
  Dataset ds;
  ds.name = root.filename().string() + "_" + split;
  for (std::size_t label = 0; label < classes.size(); ++label) {
    const fs::path dir = classes[label] / split;
    if (!fs::is_directory(dir)) continue;
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
      if (e.path().extension() == ".off") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (std::size_t i = 0; i < files.size(); ++i) {
      SurfaceSampling s = sampling;
      s.seed = mix_seed(sampling.seed, ds.clouds.size());
      PointCloud c = load_off(files[i], s);
      c.normals.reset();
      c.class_label = static_cast<int>(label);
      ds.clouds.push_back(std::move(c));
    }
  }
  ds.update_label_counts();
  return ds;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tfcw: training-free point cloud recognition with transposed distance graphs"};
  app.require_subcommand(1);

  Common classify_opts, segment_opts, ablate_opts, robust_opts, scale_opts, export_opts, import_opts;

  auto* classify = app.add_subcommand("classify", "Memory-bank shape classification");
  add_common(classify, classify_opts);

  auto* segment = app.add_subcommand("segment", "Memory-bank part segmentation");
  add_common(segment, segment_opts);

  std::string which = "diagonal";
  std::vector<std::size_t> k_grid{8, 12, 16, 20, 24};
  std::vector<double> alpha_grid;
  auto* ablate = app.add_subcommand("ablate", "Ablation reports (diagonal, normalization, ksweep)");
  add_common(ablate, ablate_opts);
  ablate->add_option("--which", which, "Ablation to run")->check(CLI::IsMember({"diagonal", "normalization", "ksweep"}));
  ablate->add_option("--k-grid", k_grid, "Comma-separated k values for ksweep")->delimiter(',');
  ablate->add_option("--alpha-grid", alpha_grid, "Comma-separated alpha values for ksweep")->delimiter(',');

  std::string mode = "corruption";
  auto* robust = app.add_subcommand("robustness", "Corruption, rotation and batch-stability reports (CSV)");
  add_common(robust, robust_opts);
  robust->add_option("--mode", mode, "Report to produce")->check(CLI::IsMember({"corruption", "rotation", "stability"}));

  std::size_t scale_start = 1024, scale_step = 1024, scale_limit = 65536, scale_repeats = 1;
  auto* scale = app.add_subcommand("scale", "Wall time and peak memory against point count");
  add_common(scale, scale_opts, false);
  scale->add_option("--start", scale_start, "Smallest point count");
  scale->add_option("--step", scale_step, "Point count increment");
  scale->add_option("--limit", scale_limit, "Largest point count");
  scale->add_option("--repeats", scale_repeats, "Timed runs per size (fastest kept)");

  auto* bank = app.add_subcommand("bank", "Memory-bank persistence");
  bank->require_subcommand(1);
  auto* bank_export = bank->add_subcommand("export", "Encode the train split into a TFCWBANK file");
  add_common(bank_export, export_opts);
  std::string bank_path;
  auto* bank_import = bank->add_subcommand("import", "Classify the test split against a TFCWBANK file");
  add_common(bank_import, import_opts);
  bank_import->add_option("--bank", bank_path, "TFCWBANK file")->required();

  std::string convert_in, convert_out, convert_split = "train";
  std::size_t convert_points = 1024;
  std::uint64_t convert_seed = 0;
  std::optional<int> convert_label;
  bool convert_vertices = false;
  auto* convert = app.add_subcommand("convert", "OFF mesh or ModelNet-style tree to TFCWPTS");
  convert->add_option("--input", convert_in, "OFF file or directory <class>/<split>/*.off")->required();
  convert->add_option("--out", convert_out, "Output TFCWPTS file")->required();
  convert->add_option("--split", convert_split, "Split directory name for trees");
  convert->add_option("--points", convert_points, "Surface samples per mesh");
  convert->add_option("--seed", convert_seed, "Surface sampling seed");
  convert->add_option("--label", convert_label, "Class label for a single OFF file");
  convert->add_flag("--vertices", convert_vertices, "Use mesh vertices instead of surface samples");

  std::string synth_kind = "spheres-cubes", synth_out;
  std::size_t synth_count = 100, synth_points = 1024;
  std::uint64_t synth_seed = 0;
  auto* synth = app.add_subcommand("synth", "Write a synthetic TFCWPTS dataset");
  synth->add_option("--kind", synth_kind, "Dataset kind")->check(CLI::IsMember({"spheres-cubes", "cylinders"}));
  synth->add_option("--count", synth_count, "Number of clouds");
  synth->add_option("--points", synth_points, "Points per cloud");
  synth->add_option("--seed", synth_seed, "Generator seed");
  synth->add_option("--out", synth_out, "Output TFCWPTS file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*classify || *segment) {
      const Common& c = *classify ? classify_opts : segment_opts;
      const ExperimentConfig cfg = resolve(c);
      const Dataset train = load_split(cfg.train_path, Split::Train, cfg.normalize, "train");
      const Dataset test = load_split(cfg.test_path, Split::Test, cfg.normalize, "test");
      std::optional<Dataset> val;
      if (!cfg.val_path.empty()) val = load_dataset(cfg.val_path, Split::Val, cfg.normalize);
      const Dataset* vp = val ? &*val : nullptr;
      const RunResult r = *classify ? run_classify(train, test, cfg, vp) : run_segment(train, test, cfg, vp);
      const EmitOptions opts{!c.no_timings};
      write_output(c.out, c.format == "json" ? to_json(r, opts) : to_csv(r, opts));
    } else if (*ablate) {
      const ExperimentConfig cfg = resolve(ablate_opts);
      const Dataset train = load_split(cfg.train_path, Split::Train, cfg.normalize, "train");
      const Dataset test = load_split(cfg.test_path, Split::Test, cfg.normalize, "test");
      AblationOptions opts;
      opts.k_grid = k_grid;
      opts.alpha_grid = alpha_grid;
      const AblationReport rep = run_ablation(train, test, cfg, ablation_kind_from_string(which), opts);
      write_output(ablate_opts.out, ablate_opts.format == "json" ? to_json(rep) : to_csv(rep));
    } else if (*robust) {
      const ExperimentConfig cfg = resolve(robust_opts);
      const Dataset train = load_split(cfg.train_path, Split::Train, cfg.normalize, "train");
      const Dataset test = load_split(cfg.test_path, Split::Test, cfg.normalize, "test");
      const std::string hash = config_hash(cfg);
      const std::uint64_t seed = cfg.pipeline.seed;
      std::string text(kResultCsvHeader);
      text += '\n';
      if (mode == "corruption") {
        text += csv_row(hash, train.name, "clean_accuracy", accuracy_on(train.clouds, test.clouds, train, cfg), seed);
        for (CorruptionKind kind : {CorruptionKind::Jitter, CorruptionKind::GlobalNoise}) {
          for (int level = 1; level <= 5; ++level) {
            std::vector<PointCloud> corrupted;
            for (std::size_t i = 0; i < test.clouds.size(); ++i) {
              CorruptionSpec spec;
              spec.kind = kind;
              spec.severity = level;
              spec.seed = mix_seed(seed, i);
              corrupted.push_back(apply_corruption(test.clouds[i], spec));
            }
            const std::string name = std::string(kind == CorruptionKind::Jitter ? "jitter" : "global_noise") +
                                     "_s" + std::to_string(level) + "_accuracy";
            text += csv_row(hash, train.name, name, accuracy_on(train.clouds, corrupted, train, cfg), seed);
          }
        }
      } else if (mode == "rotation") {
        for (RotationScenario s : {RotationScenario::ZZ, RotationScenario::ZSO3, RotationScenario::SO3SO3}) {
          const RotatedSets sets = rotation_scenario(train.clouds, test.clouds, s, seed);
          text += csv_row(hash, train.name, std::string(to_string(s)) + "_accuracy",
                          accuracy_on(sets.train, sets.test, train, cfg), seed);
        }
      } else {
        const bool modes[] = {false, true};
        const StabilityReport rep =
            stability_accuracy_check(train.clouds, test.clouds, std::max(train.num_classes, test.num_classes),
                                     kStabilityBatchSizes, modes, cfg.pipeline, cfg.gamma, seed);
        for (const auto& row : rep.rows) {
          const std::string tag =
              "bs" + std::to_string(row.batch_size) + (row.shuffled ? "_shuffled" : "_ordered");
          text += csv_row(hash, train.name, tag + "_max_deviation", row.max_deviation, seed);
          if (row.accuracy) text += csv_row(hash, train.name, tag + "_accuracy", *row.accuracy, seed);
        }
      }
      write_output(robust_opts.out, text);
    } else if (*scale) {
      const ExperimentConfig cfg = resolve(scale_opts);
      const ScalingReport rep =
          volume_scaling_run(scale_start, scale_step, scale_limit, cfg.pipeline, cfg.pipeline.seed, scale_repeats);
      std::ostringstream os;
      os << "points,seconds,peak_bytes\n";
      std::vector<double> xs, ys;
      for (std::size_t i = 0; i < rep.point_counts.size(); ++i) {
        os << rep.point_counts[i] << ',' << format_double(rep.wall_times[i]) << ',' << rep.peak_memory[i] << '\n';
        xs.push_back(static_cast<double>(rep.point_counts[i]));
        ys.push_back(rep.wall_times[i]);
      }
      if (xs.size() >= 2) os << "# loglog_slope," << format_double(loglog_slope(xs, ys)) << '\n';
      if (rep.failed_at) os << "# allocation_failure_at," << *rep.failed_at << '\n';
      write_output(scale_opts.out, os.str());
    } else if (*bank_export) {
      const ExperimentConfig cfg = resolve(export_opts);
      if (export_opts.out.empty()) throw InvalidArgument("bank export needs --out");
      const Dataset train = load_split(cfg.train_path, Split::Train, cfg.normalize, "train");
      std::vector<int> labels;
      Matrix feats(train.clouds.size(), 0);
      for (std::size_t i = 0; i < train.clouds.size(); ++i) {
        const auto& c = train.clouds[i];
        if (!c.class_label) throw InvalidInput("train cloud " + std::to_string(i) + " has no class label");
        const auto enc = encode_classification(c, cfg.pipeline);
        if (i == 0) feats = Matrix(train.clouds.size(), enc.feature.size());
        std::copy(enc.feature.begin(), enc.feature.end(), feats.row(i).begin());
        labels.push_back(*c.class_label);
      }
      if (labels.empty()) throw InvalidArgument("train split is empty");
      write_bank(MemoryBank(std::move(feats), labels, train.num_classes, cfg.gamma), export_opts.out);
    } else if (*bank_import) {
      const ExperimentConfig cfg = resolve(import_opts);
      const MemoryBank stored = read_bank(bank_path);
      const MemoryBank b = import_opts.gamma
                               ? MemoryBank(stored.features(), stored.labels(), stored.num_classes(), cfg.gamma)
                               : stored;
      const Dataset test = load_split(cfg.test_path, Split::Test, cfg.normalize, "test");
      if (test.clouds.empty()) throw InvalidArgument("test split is empty");
      Matrix feats(test.clouds.size(), b.width());
      std::vector<int> truth;
      for (std::size_t i = 0; i < test.clouds.size(); ++i) {
        const auto enc = encode_classification(test.clouds[i], cfg.pipeline);
        if (enc.feature.size() != b.width()) throw InvalidInput("bank width does not match the pipeline config");
        std::copy(enc.feature.begin(), enc.feature.end(), feats.row(i).begin());
        truth.push_back(test.clouds[i].class_label.value_or(-1));
      }
      const Prediction pred = predict(b, feats);
      RunResult r;
      r.command = "classify";
      r.config_hash = config_hash(cfg);
      r.dataset = test.name;
      r.test_size = test.clouds.size();
      r.seed = cfg.pipeline.seed;
      r.gamma = b.gamma();
      r.predictions = pred.labels;
      if (std::all_of(truth.begin(), truth.end(), [&](int l) { return l >= 0; })) {
        r.metrics = compute_metrics(pred.labels, truth, Task::Classification,
                                    std::max(b.num_classes(), test.num_classes));
      }
      const EmitOptions opts{false};
      write_output(import_opts.out, import_opts.format == "json" ? to_json(r, opts) : to_csv(r, opts));
    } else if (*convert) {
      SurfaceSampling sampling{convert_points, convert_seed};
      Dataset ds;
      if (fs::is_directory(convert_in)) {
        ds = convert_tree(convert_in, convert_split, sampling);
      } else {
        PointCloud c = convert_vertices ? load_off(convert_in) : load_off(convert_in, sampling);
        c.normals.reset();
        if (convert_label) c.class_label = *convert_label;
        ds.clouds.push_back(std::move(c));
      }
      write_points_bin(ds, convert_out);
      std::cerr << "wrote " << ds.clouds.size() << " clouds to " << convert_out << '\n';
    } else if (*synth) {
      Dataset ds;
      ds.clouds = synth_kind == "spheres-cubes" ? synthetic::spheres_and_cubes(synth_count, synth_points, synth_seed)
                                                : synthetic::capped_cylinders(synth_count, synth_points, synth_seed);
      for (auto& c : ds.clouds) c.normals.reset();
      write_points_bin(ds, synth_out);
    }
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInternal;
  }
  return kOk;
}
