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

#include "tfcw/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <iomanip>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "tfcw/error.hpp"
#include "tfcw/parallel.hpp"
#include "tfcw/robustness.hpp"

namespace tfcw {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

template <typename T>
T get_as(const json& j, const char* key, const std::string& source) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw ParseError(source, 1, std::string("wrong type for key '") + key + "'");
  }
}

json config_to_json(const ExperimentConfig& cfg) {
  const PipelineConfig& p = cfg.pipeline;
  json j;
  j["stages"] = p.stages;
  j["k"] = p.k_per_stage;
  j["alpha"] = p.alpha;
  j["pooling"] = std::string(to_string(p.pooling));
  j["descriptor"] = std::string(to_string(p.descriptor));
  j["interp_k"] = p.interp_k;
  j["seed"] = p.seed;
  j["variant"] = std::string(to_string(p.variant));
  j["local_normalization"] = p.local_normalization;
  j["k_normal"] = p.k_normal;
  if (p.start.kind == StartKind::FixedIndex) {
    j["start"] = p.start.index;
  } else {
    j["start"] = "canonical";
  }
  j["gamma"] = cfg.gamma;
  j["gamma_grid"] = cfg.gamma_grid;
  j["train"] = cfg.train_path;
  j["test"] = cfg.test_path;
  j["val"] = cfg.val_path;
  j["normalize"] = cfg.normalize;
  return j;
}

std::size_t num_classes_of(const Dataset& a, const Dataset& b) {
  return std::max(a.num_classes, b.num_classes);
}

std::vector<int> class_labels(const Dataset& ds, const char* which) {
  std::vector<int> labels;
  labels.reserve(ds.clouds.size());
  for (std::size_t i = 0; i < ds.clouds.size(); ++i) {
    const auto& c = ds.clouds[i];
    if (!c.class_label || *c.class_label < 0) {
      throw InvalidInput(std::string(which) + " cloud " + std::to_string(i) + " has no class label");
    }
    labels.push_back(*c.class_label);
  }
  return labels;
}

struct EncodedSet {
  Matrix features;
  DegeneracyReport report;
};

EncodedSet encode_all(const std::vector<PointCloud>& clouds, const PipelineConfig& cfg) {
  std::vector<ClassificationEncoding> enc(clouds.size());
  parallel_for(clouds.size(), [&](std::size_t i) { enc[i] = encode_classification(clouds[i], cfg); });
  EncodedSet out;
  out.features = Matrix(clouds.size(), enc.empty() ? 0 : enc[0].feature.size());
  for (std::size_t i = 0; i < enc.size(); ++i) {
    std::copy(enc[i].feature.begin(), enc[i].feature.end(), out.features.row(i).begin());
    out.report += enc[i].report;
  }
  return out;
}

void require_nonempty(const Dataset& train, const Dataset& test) {
  if (train.clouds.empty()) throw InvalidArgument("train split is empty");
  if (test.clouds.empty()) throw InvalidArgument("test split is empty");
}

double classify_accuracy(const Dataset& train, const Dataset& test, const PipelineConfig& pcfg, double gamma) {
  const auto train_labels = class_labels(train, "train");
  const auto test_labels = class_labels(test, "test");
  const std::size_t nc = num_classes_of(train, test);
  const MemoryBank bank(encode_all(train.clouds, pcfg).features, train_labels, nc, gamma);
  const Prediction pred = predict(bank, encode_all(test.clouds, pcfg).features);
  return compute_metrics(pred.labels, test_labels, Task::Classification, nc).overall_accuracy;
}

void put_report(json& j, const DegeneracyReport& r) {
  j["zero_length_angles"] = r.zero_length_angles;
  j["collinear_triangles"] = r.collinear_triangles;
  j["missing_neighbors"] = r.missing_neighbors;
  j["flat_normals"] = r.flat_normals;
}

}  // namespace

ExperimentConfig parse_config(std::string_view json_text, const std::string& source) {
  json j;
  try {
    j = json::parse(json_text.begin(), json_text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(source, e.byte, "invalid JSON");
  }
  if (!j.is_object()) throw ParseError(source, 1, "config must be a JSON object");

  ExperimentConfig cfg;
  PipelineConfig& p = cfg.pipeline;
  bool k_given = false;
  for (const auto& [key, value] : j.items()) {
    const char* k = key.c_str();
    if (key == "stages") {
      p.stages = get_as<std::size_t>(value, k, source);
    } else if (key == "k") {
      k_given = true;
      if (value.is_array()) {
        p.k_per_stage = get_as<std::vector<std::size_t>>(value, k, source);
      } else {
        p.k_per_stage = {get_as<std::size_t>(value, k, source)};
      }
    } else if (key == "alpha") {
      p.alpha = get_as<double>(value, k, source);
    } else if (key == "pooling") {
      p.pooling = pooling_from_string(get_as<std::string>(value, k, source));
    } else if (key == "descriptor") {
      p.descriptor = descriptor_kind_from_string(get_as<std::string>(value, k, source));
    } else if (key == "interp_k") {
      p.interp_k = get_as<std::size_t>(value, k, source);
    } else if (key == "seed") {
      p.seed = get_as<std::uint64_t>(value, k, source);
    } else if (key == "variant") {
      p.variant = gram_variant_from_string(get_as<std::string>(value, k, source));
    } else if (key == "local_normalization") {
      p.local_normalization = get_as<bool>(value, k, source);
    } else if (key == "k_normal") {
      p.k_normal = get_as<std::size_t>(value, k, source);
    } else if (key == "start") {
      if (value.is_string() && value.get<std::string>() == "canonical") {
        p.start = StartRule::canonical();
      } else {
        p.start = StartRule::fixed(get_as<std::size_t>(value, k, source));
      }
    } else if (key == "gamma") {
      cfg.gamma = get_as<double>(value, k, source);
    } else if (key == "gamma_grid") {
      cfg.gamma_grid = get_as<std::vector<double>>(value, k, source);
    } else if (key == "train") {
      cfg.train_path = get_as<std::string>(value, k, source);
    } else if (key == "test") {
      cfg.test_path = get_as<std::string>(value, k, source);
    } else if (key == "val") {
      cfg.val_path = get_as<std::string>(value, k, source);
    } else if (key == "normalize") {
      cfg.normalize = get_as<bool>(value, k, source);
    } else {
      throw ParseError(source, 1, "unknown key '" + key + "'");
    }
  }
  // A single k (or the default list) stretches to the stage count.
  if (p.k_per_stage.size() == 1 || (!k_given && p.k_per_stage.size() != p.stages)) {
    p.k_per_stage.assign(p.stages, p.k_per_stage.front());
  }
  p.validate();
  if (!(cfg.gamma > 0.0)) throw InvalidArgument("gamma must be positive");
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return parse_config(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()), path.string());
}

std::string canonical_config_json(const ExperimentConfig& cfg) { return config_to_json(cfg).dump(); }

std::string config_hash(const ExperimentConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical_config_json(cfg)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

RunResult run_classify(const Dataset& train, const Dataset& test, const ExperimentConfig& cfg, const Dataset* val) {
  require_nonempty(train, test);
  const PipelineConfig& pcfg = cfg.pipeline;
  pcfg.validate();
  const auto train_labels = class_labels(train, "train");
  const auto test_labels = class_labels(test, "test");
  const std::size_t nc = num_classes_of(train, test);

  RunResult r;
  r.command = "classify";
  r.config_hash = config_hash(cfg);
  r.dataset = train.name;
  r.train_size = train.clouds.size();
  r.test_size = test.clouds.size();
  r.seed = pcfg.seed;

  auto t0 = Clock::now();
  EncodedSet tr = encode_all(train.clouds, pcfg);
  r.timings["encode_train"] = seconds_since(t0);
  t0 = Clock::now();
  EncodedSet te = encode_all(test.clouds, pcfg);
  r.timings["encode_test"] = seconds_since(t0);
  r.degeneracies = tr.report;
  r.degeneracies += te.report;

  r.gamma = cfg.gamma;
  if (!cfg.gamma_grid.empty()) {
    if (val) {
      const auto val_labels = class_labels(*val, "val");
      r.gamma = sweep_gamma(tr.features, train_labels, encode_all(val->clouds, pcfg).features, val_labels,
                            std::max(nc, val->num_classes), cfg.gamma_grid);
    } else {
      r.gamma = sweep_gamma(tr.features, train_labels, te.features, test_labels, nc, cfg.gamma_grid);
    }
  }
  t0 = Clock::now();
  const MemoryBank bank(std::move(tr.features), train_labels, nc, r.gamma);
  Prediction pred = predict(bank, te.features);
  r.timings["predict"] = seconds_since(t0);

  r.metrics = compute_metrics(pred.labels, test_labels, Task::Classification, nc);
  r.predictions = std::move(pred.labels);
  const double online = r.timings["encode_test"] + r.timings["predict"];
  r.throughput = online > 0.0 ? static_cast<double>(r.test_size) / online : 0.0;
  return r;
}

Matrix segmentation_features(const PointCloud& cloud, const PipelineConfig& cfg, DegeneracyReport* report) {
  const SegmentationEncoding enc = encode_segmentation(cloud, cfg);
  if (report) *report += enc.report;
  return decode_segmentation(enc, cfg);
}

RunResult run_segment(const Dataset& train, const Dataset& test, const ExperimentConfig& cfg, const Dataset* val) {
  require_nonempty(train, test);
  const PipelineConfig& pcfg = cfg.pipeline;
  pcfg.validate();
  std::size_t num_parts = std::max(train.num_parts, test.num_parts);
  if (val) num_parts = std::max(num_parts, val->num_parts);
  if (num_parts == 0) throw InvalidInput("segmentation needs per-point labels");
  for (const Dataset* ds : {&train, &test, val}) {
    if (!ds) continue;
    for (const auto& c : ds->clouds) {
      if (!c.point_labels) throw InvalidInput(ds->name + ": cloud without per-point labels");
    }
  }

  RunResult r;
  r.command = "segment";
  r.config_hash = config_hash(cfg);
  r.dataset = train.name;
  r.train_size = train.clouds.size();
  r.test_size = test.clouds.size();
  r.seed = pcfg.seed;

  auto encode = [&](const std::vector<PointCloud>& clouds, DegeneracyReport& rep) {
    std::vector<Matrix> feats(clouds.size());
    std::vector<DegeneracyReport> reports(clouds.size());
    parallel_for(clouds.size(), [&](std::size_t i) { feats[i] = segmentation_features(clouds[i], pcfg, &reports[i]); });
    for (const auto& x : reports) rep += x;
    return feats;
  };
  // Stacks the rows of labelled points.
  auto stack = [](const Dataset& ds, const std::vector<Matrix>& feats, std::vector<int>& labels_out) {
    std::size_t rows = 0;
    for (const auto& c : ds.clouds) {
      rows += static_cast<std::size_t>(
          std::count_if(c.point_labels->begin(), c.point_labels->end(), [](int l) { return l >= 0; }));
    }
    Matrix out(rows, feats.front().cols());
    labels_out.clear();
    labels_out.reserve(rows);
    for (std::size_t i = 0; i < ds.clouds.size(); ++i) {
      const auto& labels = *ds.clouds[i].point_labels;
      for (std::size_t p = 0; p < labels.size(); ++p) {
        if (labels[p] < 0) continue;
        const auto src = feats[i].row(p);
        std::copy(src.begin(), src.end(), out.row(labels_out.size()).begin());
        labels_out.push_back(labels[p]);
      }
    }
    return out;
  };

  auto t0 = Clock::now();
  std::vector<int> bank_labels;
  Matrix bank_features = stack(train, encode(train.clouds, r.degeneracies), bank_labels);
  if (bank_labels.empty()) throw InvalidInput("train split has no labelled points");
  r.timings["encode_train"] = seconds_since(t0);

  t0 = Clock::now();
  const auto test_feats = encode(test.clouds, r.degeneracies);
  r.timings["encode_test"] = seconds_since(t0);

  r.gamma = cfg.gamma;
  if (!cfg.gamma_grid.empty()) {
    std::vector<int> val_labels;
    DegeneracyReport scratch;
    const Matrix val_features =
        val ? stack(*val, encode(val->clouds, scratch), val_labels) : stack(test, test_feats, val_labels);
    r.gamma = sweep_gamma(bank_features, bank_labels, val_features, val_labels, num_parts, cfg.gamma_grid);
  }

  t0 = Clock::now();
  const MemoryBank bank(std::move(bank_features), bank_labels, num_parts, r.gamma);
  std::vector<std::vector<int>> per_cloud(test.clouds.size());
  for (std::size_t i = 0; i < test.clouds.size(); ++i) per_cloud[i] = predict_pointwise(bank, test_feats[i]);
  r.timings["predict"] = seconds_since(t0);

  std::vector<int> pred, truth;
  std::vector<std::size_t> shape_sizes;
  for (std::size_t i = 0; i < test.clouds.size(); ++i) {
    const auto& labels = *test.clouds[i].point_labels;
    std::size_t kept = 0;
    for (std::size_t p = 0; p < labels.size(); ++p) {
      if (labels[p] < 0) continue;
      pred.push_back(per_cloud[i][p]);
      truth.push_back(labels[p]);
      ++kept;
    }
    if (kept > 0) shape_sizes.push_back(kept);
    r.predictions.insert(r.predictions.end(), per_cloud[i].begin(), per_cloud[i].end());
  }
  r.metrics = compute_metrics(pred, truth, Task::PartSegmentation, num_parts, shape_sizes);
  const double online = r.timings["encode_test"] + r.timings["predict"];
  r.throughput = online > 0.0 ? static_cast<double>(r.test_size) / online : 0.0;
  return r;
}

std::string_view to_string(AblationKind kind) noexcept {
  switch (kind) {
    case AblationKind::DiagonalVariants: return "diagonal";
    case AblationKind::Normalization: return "normalization";
    case AblationKind::KSweep: return "ksweep";
  }
  return "diagonal";
}

AblationKind ablation_kind_from_string(std::string_view name) {
  for (AblationKind k : {AblationKind::DiagonalVariants, AblationKind::Normalization, AblationKind::KSweep}) {
    if (to_string(k) == name) return k;
  }
  throw InvalidArgument("unknown ablation '" + std::string(name) + "' (expected diagonal, normalization or ksweep)");
}

AblationReport run_ablation(const Dataset& train, const Dataset& test, const ExperimentConfig& cfg, AblationKind kind,
                            const AblationOptions& options) {
  require_nonempty(train, test);
  AblationReport rep;
  rep.kind = kind;
  rep.config_hash = config_hash(cfg);
  rep.dataset = train.name;
  rep.seed = cfg.pipeline.seed;

  auto add = [&](std::string setting, const PipelineConfig& p) {
    AblationRow row;
    row.setting = std::move(setting);
    row.k = p.k_per_stage.front();
    row.alpha = p.alpha;
    row.accuracy = classify_accuracy(train, test, p, cfg.gamma);
    rep.rows.push_back(std::move(row));
  };

  switch (kind) {
    case AblationKind::DiagonalVariants:
      for (GramVariant v : kAllGramVariants) {
        PipelineConfig p = cfg.pipeline;
        p.variant = v;
        add(std::string(to_string(v)), p);
      }
      break;
    case AblationKind::Normalization:
      for (bool on : {true, false}) {
        PipelineConfig p = cfg.pipeline;
        p.local_normalization = on;
        add(on ? "on" : "off", p);
      }
      break;
    case AblationKind::KSweep: {
      if (options.k_grid.empty()) throw InvalidArgument("ksweep needs a non-empty k grid");
      std::vector<double> alphas = options.alpha_grid;
      if (alphas.empty()) alphas.push_back(cfg.pipeline.alpha);
      for (double a : alphas) {
        for (std::size_t k : options.k_grid) {
          PipelineConfig p = cfg.pipeline;
          p.k_per_stage.assign(p.stages, k);
          p.alpha = a;
          add("k=" + std::to_string(k) + ",alpha=" + format_double(a), p);
        }
      }
      break;
    }
  }
  double best = 0.0;
  for (const auto& row : rep.rows) best = std::max(best, row.accuracy);
  for (auto& row : rep.rows) row.normalized = best > 0.0 ? row.accuracy / best : 0.0;
  return rep;
}

OutputFormat output_format_from_string(std::string_view name) {
  if (name == "json") return OutputFormat::Json;
  if (name == "csv") return OutputFormat::Csv;
  throw InvalidArgument("unknown format '" + std::string(name) + "' (expected json or csv)");
}

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
  return os.str();
}

std::string to_json(const RunResult& result, const EmitOptions& options) {
  json j;
  j["command"] = result.command;
  j["config_hash"] = result.config_hash;
  j["dataset"] = result.dataset;
  j["train_size"] = result.train_size;
  j["test_size"] = result.test_size;
  j["seed"] = result.seed;
  j["gamma"] = result.gamma;
  json m;
  m["overall_accuracy"] = result.metrics.overall_accuracy;
  m["per_class_accuracy"] = result.metrics.per_class_accuracy;
  m["class_support"] = result.metrics.class_support;
  if (result.command == "segment") m["miou"] = result.metrics.miou;
  j["metrics"] = m;
  json d;
  put_report(d, result.degeneracies);
  j["degeneracies"] = d;
  if (options.include_timings) {
    j["timings"] = result.timings;
    j["throughput"] = result.throughput;
  }
  return j.dump(2) + "\n";
}

std::string to_csv(const RunResult& result, const EmitOptions& options) {
  std::ostringstream os;
  os << kResultCsvHeader << '\n';
  auto row = [&](const std::string& metric, double value) {
    os << result.config_hash << ',' << result.dataset << ',' << metric << ',' << format_double(value) << ','
       << result.seed << '\n';
  };
  row("overall_accuracy", result.metrics.overall_accuracy);
  if (result.command == "segment") row("miou", result.metrics.miou);
  for (std::size_t c = 0; c < result.metrics.per_class_accuracy.size(); ++c) {
    row("class_accuracy_" + std::to_string(c), result.metrics.per_class_accuracy[c]);
  }
  row("gamma", result.gamma);
  if (options.include_timings) {
    for (const auto& [phase, secs] : result.timings) row("time_" + phase, secs);
    row("throughput", result.throughput);
  }
  return os.str();
}

std::string to_json(const AblationReport& report) {
  json j;
  j["ablation"] = std::string(to_string(report.kind));
  j["config_hash"] = report.config_hash;
  j["dataset"] = report.dataset;
  j["seed"] = report.seed;
  json rows = json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"setting", r.setting},
                    {"k", r.k},
                    {"alpha", r.alpha},
                    {"accuracy", r.accuracy},
                    {"normalized_accuracy", r.normalized}});
  }
  j["rows"] = rows;
  return j.dump(2) + "\n";
}

std::string to_csv(const AblationReport& report) {
  std::ostringstream os;
  os << kAblationCsvHeader << '\n';
  for (const auto& r : report.rows) {
    // Settings may hold commas (ksweep), so they are quoted.
    os << report.config_hash << ',' << report.dataset << ',' << to_string(report.kind) << ",\"" << r.setting << "\","
       << r.k << ',' << format_double(r.alpha) << ',' << format_double(r.accuracy) << ','
       << format_double(r.normalized) << ',' << report.seed << '\n';
  }
  return os.str();
}

void emit_results(const RunResult& result, const std::filesystem::path& path, OutputFormat format,
                  const EmitOptions& options) {
  write_text(path, format == OutputFormat::Json ? to_json(result, options) : to_csv(result, options));
}

void emit_results(const AblationReport& report, const std::filesystem::path& path, OutputFormat format) {
  write_text(path, format == OutputFormat::Json ? to_json(report) : to_csv(report));
}

}  // namespace tfcw
