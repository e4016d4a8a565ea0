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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tfcw/descriptors.hpp"
#include "tfcw/io.hpp"
#include "tfcw/memory_bank.hpp"
#include "tfcw/pipeline.hpp"

namespace tfcw {

/// Everything a command needs besides the data itself.
struct ExperimentConfig {
  PipelineConfig pipeline;
  double gamma = kDefaultGamma;
  std::vector<double> gamma_grid;  ///< non-empty: sweep gamma on the validation split
  std::string train_path;
  std::string test_path;
  std::string val_path;  ///< optional; the test split stands in when empty
  bool normalize = true;  ///< unit-sphere normalisation at load
};

/// Parses a JSON config. Unknown keys are rejected; missing keys keep their
/// defaults. Keys: stages, k (int or list), alpha, pooling, descriptor,
/// interp_k, seed, variant, local_normalization, k_normal, gamma,
/// gamma_grid, train, test, val, normalize.
ExperimentConfig parse_config(std::string_view json_text, const std::string& source = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

/// Sorted-key compact JSON of every field above; the hash input.
std::string canonical_config_json(const ExperimentConfig& cfg);

/// FNV-1a 64 of canonical_config_json, as 16 lowercase hex digits.
std::string config_hash(const ExperimentConfig& cfg);

struct RunResult {
  std::string command;  ///< "classify" or "segment"
  std::string config_hash;
  std::string dataset;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  std::uint64_t seed = 0;
  double gamma = kDefaultGamma;
  Metrics metrics;
  std::vector<int> predictions;  ///< per test cloud, or per test point for segment
  DegeneracyReport degeneracies;
  std::map<std::string, double> timings;  ///< seconds per phase
  double throughput = 0.0;                ///< test samples per second
};

/// Encodes the train split into a bank, classifies the test split. With a
/// non-empty cfg.gamma_grid the grid value with the best accuracy on `val`
/// (the test split when null) is used. Throws InvalidArgument on an empty
/// split.
RunResult run_classify(const Dataset& train, const Dataset& test, const ExperimentConfig& cfg,
                       const Dataset* val = nullptr);

/// Per-point features of one cloud through encoder and decoder.
Matrix segmentation_features(const PointCloud& cloud, const PipelineConfig& cfg, DegeneracyReport* report = nullptr);

/// Part segmentation with a bank of per-point training features. Points
/// labelled kOutlierLabel are left out of the bank and the metrics. Gamma
/// sweeping follows run_classify, scored by point accuracy.
RunResult run_segment(const Dataset& train, const Dataset& test, const ExperimentConfig& cfg,
                      const Dataset* val = nullptr);

enum class AblationKind { DiagonalVariants, Normalization, KSweep };

std::string_view to_string(AblationKind kind) noexcept;
AblationKind ablation_kind_from_string(std::string_view name);

struct AblationOptions {
  std::vector<std::size_t> k_grid{8, 12, 16, 20, 24};
  std::vector<double> alpha_grid;  ///< KSweep only; empty means cfg alpha
};

struct AblationRow {
  std::string setting;
  std::size_t k = 0;
  double alpha = 1.0;
  double accuracy = 0.0;
  double normalized = 0.0;  ///< accuracy / best accuracy of the report
};

struct AblationReport {
  AblationKind kind = AblationKind::DiagonalVariants;
  std::string config_hash;
  std::string dataset;
  std::uint64_t seed = 0;
  std::vector<AblationRow> rows;
};

/// DiagonalVariants: one row per GramVariant. Normalization: local std
/// division on, then off. KSweep: every k (applied to all stages) times
/// every alpha.
AblationReport run_ablation(const Dataset& train, const Dataset& test, const ExperimentConfig& cfg, AblationKind kind,
                            const AblationOptions& options = {});

enum class OutputFormat { Json, Csv };

OutputFormat output_format_from_string(std::string_view name);

struct EmitOptions {
  bool include_timings = true;  ///< off: output depends only on inputs and config
};

inline constexpr std::string_view kResultCsvHeader = "config_hash,dataset,metric,value,seed";
inline constexpr std::string_view kAblationCsvHeader =
    "config_hash,dataset,ablation,setting,k,alpha,accuracy,normalized_accuracy,seed";

std::string to_json(const RunResult& result, const EmitOptions& options = {});
std::string to_csv(const RunResult& result, const EmitOptions& options = {});
std::string to_json(const AblationReport& report);
std::string to_csv(const AblationReport& report);

/// Writes the result; IoError when the path is not writable.
void emit_results(const RunResult& result, const std::filesystem::path& path, OutputFormat format,
                  const EmitOptions& options = {});
void emit_results(const AblationReport& report, const std::filesystem::path& path, OutputFormat format);

/// Renders a double with enough digits to round-trip.
std::string format_double(double v);

}  // namespace tfcw
