// Copyright (c) 2026 the snapq authors
//
// This code is released under the
// Apache License Version 2.0 http://www.apache.org/licenses/.
#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "snapq/codebook.hpp"
#include "snapq/dataset.hpp"
#include "snapq/gsl.hpp"
#include "snapq/net.hpp"
#include "snapq/retrieval.hpp"
#include "snapq/triplet.hpp"

namespace snapq {

inline constexpr const char* kCodeVersion = "snapq 0.1.0";

enum class TrainMode : std::uint8_t { gsl = 0, plain = 1, biased_baseline = 2 };
enum class DataSource : std::uint8_t { synthetic = 0, fvecs = 1, csv = 2 };
enum class EvalCodebookSource : std::uint8_t { retrain = 0, from_train = 1 };

struct DatasetConfig {
  DataSource source = DataSource::synthetic;
  SyntheticSpec synthetic{10, 600, 32, 0.9, 11};
  std::string vectors_path;
  std::string labels_path;
  std::size_t queries_per_class = 100;
  std::size_t train_per_class = 500;
  std::uint64_t split_seed = 5;
  bool database_includes_train = true;
};

struct NetArch {
  std::vector<std::size_t> hidden_dims{64, 64};
  std::size_t embed_dim = 16;
};

struct TrainParams {
  TrainMode mode = TrainMode::gsl;
  double lr = 2.2e-4;  // the batch loss is a sum over triplets; scale lr accordingly
  double momentum = 0.9;
  double weight_decay = 0.0;
  std::size_t epochs = 8;
  std::size_t batch_size = 120;
  std::uint64_t seed = 1;
  double margin = 1.0;
  std::size_t per_anchor = 2;
  TripletStrategy strategy = TripletStrategy::semi_hard;
  bool deterministic = true;
};

struct CodebookParams {
  std::size_t subspaces = 4;    // M
  std::size_t codewords = 16;   // K
  std::size_t kmeans_iters = 20;
};

struct EvalParams {
  std::size_t cutoff = 0;  // 0 = full database
  std::vector<std::size_t> precision_ks{1, 5, 10, 20, 50, 100};
  bool multi_label = false;
  EvalCodebookSource codebook_source = EvalCodebookSource::retrain;
};

struct ExperimentConfig {
  DatasetConfig data;
  NetArch net;
  TrainParams train;
  CodebookParams codebook;
  GslConfig gsl;
  EvalParams eval;
  std::string out_dir = "runs/default";

  void validate() const;
};

// Desk-scale benchmark this project's experiments and acceptance runs use.
ExperimentConfig default_desk_config();

std::string config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);
void save_config(const ExperimentConfig& cfg, const std::string& path);

// Loads vectors + labels per the dataset config and applies the split
// protocol.
LabeledDataset prepare_dataset(const DatasetConfig& cfg);

struct IterationLog {
  std::size_t iteration = 0;
  std::size_t epoch = 0;
  double loss = 0.0;
  std::size_t active_triplets = 0;
  std::size_t rejected = 0;
  double mean_alignment = 0.0;  // over samples with a nonzero raw gradient
  double batch_quant_error = 0.0;
};

struct EpochLog {
  std::size_t epoch = 0;
  double mean_loss = 0.0;
  double train_quant_error = 0.0;
  double mean_alignment = 0.0;
  std::uint64_t codebook_version = 0;
};

struct SnapRow {
  std::size_t iteration = 0;
  std::size_t sample = 0;  // dataset row id
  SnapReport report;
};

struct TrainOutput {
  EmbeddingNet net;
  Codebook codebook;  // final training-time codebook
  std::vector<IterationLog> iterations;
  std::vector<EpochLog> epochs;
  std::vector<SnapRow> snap_rows;
  std::vector<std::uint64_t> codebook_versions;
  double mean_alignment = 0.0;  // run-wide, nonzero-gradient samples only
};

TrainOutput run_train(const ExperimentConfig& cfg, const LabeledDataset& ds);

struct EvalOutput {
  EvalReport adc;
  EvalReport l2;
  QuantStats db_quant;
  Codebook codebook;        // the codebook the ADC metrics used
  bool l2_below_adc = false;  // logged anomaly, not fatal
};

// `train_codebook` must be non-null when the config selects from_train.
EvalOutput run_eval(const ExperimentConfig& cfg, const LabeledDataset& ds, const EmbeddingNet& net,
                    const Codebook* train_time_codebook);

enum class SweepParam : std::uint8_t { update_interval = 0, neighbors = 1 };

struct AblatePoint {
  std::size_t value = 0;
  double adc_map = 0.0;
  double l2_map = 0.0;
  double mean_alignment = 0.0;
  std::vector<double> alignments;  // per-sample values for the histogram
};

std::vector<AblatePoint> run_ablate(const ExperimentConfig& cfg, const LabeledDataset& ds,
                                    SweepParam param, const std::vector<std::size_t>& values);

// Artifact writers used by the command layer; all tabular output is CSV
// with a header row.
void write_train_artifacts(const ExperimentConfig& cfg, const TrainOutput& out,
                           const std::string& dir);
void write_eval_artifacts(const EvalOutput& out, const std::string& dir);
void write_ablate_artifacts(const std::vector<AblatePoint>& points, SweepParam param,
                            const std::string& dir);

// Run manifest: resolved config, code version, codebook version history,
// wall-clock timings and headline metrics; written on success and failure.
class ManifestWriter {
 public:
  ManifestWriter(const ExperimentConfig& cfg, const std::string& command);
  void add_metric(const std::string& key, double value);
  void add_note(const std::string& key, const std::string& value);
  void set_codebook_versions(const std::vector<std::uint64_t>& versions);
  void finish_ok(const std::string& dir);
  void finish_error(const std::string& dir, const std::string& message);

 private:
  void write(const std::string& dir, const std::string& status, const std::string& error);
  std::string config_json_;
  std::string command_;
  std::vector<std::pair<std::string, double>> metrics_;
  std::vector<std::pair<std::string, std::string>> notes_;
  std::vector<std::uint64_t> codebook_versions_;
  std::chrono::steady_clock::time_point started_;
};

const char* to_string(TrainMode mode);
const char* to_string(SweepParam param);

}  // namespace snapq
