// Copyright (c) 2026 the snapq authors
//
// This code is released under the
// Apache License Version 2.0 http://www.apache.org/licenses/.
#include "snapq/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "snapq/common.hpp"
#include "snapq/csv.hpp"
#include "snapq/rng.hpp"

namespace snapq {

namespace {

using nlohmann::json;

template <typename E>
E enum_from(const std::string& s, const std::map<std::string, E>& table, const char* what) {
  auto it = table.find(s);
  if (it == table.end()) throw InvalidArgument(std::string("unknown ") + what + ": " + s);
  return it->second;
}

const std::map<std::string, TrainMode> kModeTable = {
    {"gsl", TrainMode::gsl},
    {"plain", TrainMode::plain},
    {"biased_baseline", TrainMode::biased_baseline}};
const std::map<std::string, DataSource> kSourceTable = {
    {"synthetic", DataSource::synthetic}, {"fvecs", DataSource::fvecs}, {"csv", DataSource::csv}};
const std::map<std::string, TripletStrategy> kStrategyTable = {
    {"semi_hard", TripletStrategy::semi_hard}, {"random", TripletStrategy::random}};
const std::map<std::string, SnapWeighting> kWeightingTable = {
    {"gaussian_sqdist", SnapWeighting::gaussian_sqdist}, {"literal", SnapWeighting::literal}};
const std::map<std::string, SelectionSign> kSignTable = {
    {"paper_literal", SelectionSign::paper_literal},
    {"descent_aligned", SelectionSign::descent_aligned}};
const std::map<std::string, LambdaDenominator> kDenomTable = {
    {"literal", LambdaDenominator::literal}, {"cosine_squared", LambdaDenominator::cosine_squared}};
const std::map<std::string, RefreshMode> kRefreshTable = {
    {"sequential_kmeans", RefreshMode::sequential_kmeans},
    {"full_retrain", RefreshMode::full_retrain}};
const std::map<std::string, EvalCodebookSource> kEvalCbTable = {
    {"retrain", EvalCodebookSource::retrain}, {"from_train", EvalCodebookSource::from_train}};

template <typename E>
std::string enum_to(E value, const std::map<std::string, E>& table) {
  for (const auto& [name, v] : table) {
    if (v == value) return name;
  }
  return "?";
}

template <typename T>
void get_if_present(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

template <typename E>
void get_enum_if_present(const json& j, const char* key, const std::map<std::string, E>& table,
                         E& out, const char* what) {
  if (j.contains(key)) out = enum_from(j.at(key).get<std::string>(), table, what);
}

double vec_norm(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

std::vector<float> to_float(std::span<const double> v) {
  std::vector<float> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i]);
  return out;
}

// Embeds dataset rows in fixed-size chunks; returns f32 vectors for the
// quantization side.
std::vector<float> embed_rows(const EmbeddingNet& net, const LabeledDataset& ds,
                              const std::vector<std::size_t>& rows) {
  constexpr std::size_t kChunk = 512;
  std::vector<float> out(rows.size() * net.out_dim());
  std::vector<double> input;
  for (std::size_t start = 0; start < rows.size(); start += kChunk) {
    const std::size_t n = std::min(kChunk, rows.size() - start);
    input.assign(n * ds.dim, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const float* r = ds.row(rows[start + i]);
      for (std::size_t j = 0; j < ds.dim; ++j) input[i * ds.dim + j] = r[j];
    }
    const std::vector<double> reps = net.forward(input, n);
    for (std::size_t i = 0; i < n * net.out_dim(); ++i) {
      out[start * net.out_dim() + i] = static_cast<float>(reps[i]);
    }
  }
  return out;
}

// Stratified batch sampler: every class contributes the same quota per
// iteration so each batch carries valid triplets.
class BatchSampler {
 public:
  BatchSampler(const LabeledDataset& ds, const std::vector<std::size_t>& train_rows,
               std::size_t batch_size, std::uint64_t seed)
      : rng_(mix_seed(seed, 0xba7c4)) {
    for (std::size_t row : train_rows) by_class_[ds.labels[row]].push_back(row);
    if (by_class_.size() < 2) {
      throw InvalidArgument("training split needs at least two classes");
    }
    quota_ = std::max<std::size_t>(2, batch_size / by_class_.size());
    for (const auto& [label, rows] : by_class_) {
      if (rows.size() < quota_) {
        throw InvalidArgument("class " + std::to_string(label) +
                              " has fewer training rows than the per-class batch quota");
      }
    }
  }

  std::size_t batch_rows() const { return quota_ * by_class_.size(); }

  std::vector<std::size_t> next() {
    std::vector<std::size_t> batch;
    batch.reserve(batch_rows());
    for (auto& [label, rows] : by_class_) {
      const auto picks = rng_.sample_without_replacement(rows.size(), quota_);
      for (std::size_t p : picks) batch.push_back(rows[p]);
    }
    return batch;
  }

 private:
  std::map<int, std::vector<std::size_t>> by_class_;
  std::size_t quota_ = 0;
  Rng rng_;
};

std::string iso_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&t, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

std::string code_to_string(const PqCode& code) {
  std::string s;
  for (std::size_t i = 0; i < code.size(); ++i) {
    if (i) s.push_back('|');
    s += std::to_string(code[i]);
  }
  return s;
}

}  // namespace

const char* to_string(TrainMode mode) {
  switch (mode) {
    case TrainMode::gsl: return "gsl";
    case TrainMode::plain: return "plain";
    case TrainMode::biased_baseline: return "biased_baseline";
  }
  return "?";
}

const char* to_string(SweepParam param) {
  return param == SweepParam::update_interval ? "update_interval" : "neighbors";
}

void ExperimentConfig::validate() const {
  if (data.source != DataSource::synthetic) {
    for (const std::string* path : {&data.vectors_path, &data.labels_path}) {
      if (path->empty() || !std::filesystem::exists(*path)) {
        throw InvalidArgument("config: dataset file does not exist: " + *path);
      }
    }
  }
  if (net.embed_dim == 0) throw InvalidArgument("config: embed_dim must be positive");
  if (codebook.subspaces == 0 || net.embed_dim % codebook.subspaces != 0) {
    throw InvalidArgument("config: embed_dim must be divisible by codebook subspaces");
  }
  if (codebook.codewords == 0) throw InvalidArgument("config: codewords must be positive");
  if (train.lr <= 0.0) throw InvalidArgument("config: lr must be positive");
  if (train.momentum < 0.0 || train.momentum >= 1.0) {
    throw InvalidArgument("config: momentum must be in [0, 1)");
  }
  if (train.epochs == 0 || train.batch_size == 0) {
    throw InvalidArgument("config: epochs and batch_size must be positive");
  }
  if (train.margin < 0.0) throw InvalidArgument("config: margin must be nonnegative");
  if (train.per_anchor == 0) throw InvalidArgument("config: per_anchor must be positive");
  if (train.mode == TrainMode::gsl && gsl.neighbors > 0) gsl.validate();
  if (!(gsl.lambda > 0.0)) throw InvalidArgument("config: lambda must be positive");
  if (gsl.update_interval < 1) throw InvalidArgument("config: update_interval must be >= 1");
}

ExperimentConfig default_desk_config() {
  ExperimentConfig cfg;
  cfg.data.source = DataSource::synthetic;
  // cluster_std 1.5 against unit-variance centers leaves the classes
  // overlapping: retrieval stays imperfect and quantization quality shows
  // up in the ADC metrics instead of saturating at MAP ~1.
  cfg.data.synthetic = {10, 600, 32, 1.5, 11};
  cfg.data.queries_per_class = 100;
  cfg.data.train_per_class = 500;
  cfg.data.split_seed = 5;
  cfg.net.hidden_dims = {64, 64};
  cfg.net.embed_dim = 16;
  cfg.codebook = {4, 16, 20};
  cfg.train.mode = TrainMode::gsl;
  cfg.train.lr = 2.2e-4;  // batch loss sums over ~240 triplets per iteration
  cfg.train.momentum = 0.9;
  cfg.train.epochs = 8;
  cfg.train.batch_size = 120;
  cfg.train.seed = 1;
  cfg.train.margin = 1.0;
  cfg.train.per_anchor = 2;
  cfg.gsl.lambda = 1.0;
  cfg.gsl.neighbors = 32;
  cfg.gsl.f_variant = SnapWeighting::gaussian_sqdist;
  cfg.gsl.selection_sign = SelectionSign::paper_literal;
  cfg.gsl.lambda1_denominator = LambdaDenominator::cosine_squared;
  cfg.gsl.update_interval = 1;
  cfg.gsl.refresh_mode = RefreshMode::sequential_kmeans;
  cfg.eval.cutoff = 0;
  cfg.eval.precision_ks = {1, 5, 10, 20, 50, 100};
  cfg.out_dir = "runs/default";
  return cfg;
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["dataset"] = {{"source", enum_to(cfg.data.source, kSourceTable)},
                  {"synthetic",
                   {{"num_classes", cfg.data.synthetic.num_classes},
                    {"per_class", cfg.data.synthetic.per_class},
                    {"dim", cfg.data.synthetic.dim},
                    {"cluster_std", cfg.data.synthetic.cluster_std},
                    {"seed", cfg.data.synthetic.seed}}},
                  {"vectors_path", cfg.data.vectors_path},
                  {"labels_path", cfg.data.labels_path},
                  {"queries_per_class", cfg.data.queries_per_class},
                  {"train_per_class", cfg.data.train_per_class},
                  {"split_seed", cfg.data.split_seed},
                  {"database_includes_train", cfg.data.database_includes_train}};
  j["net"] = {{"hidden_dims", cfg.net.hidden_dims}, {"embed_dim", cfg.net.embed_dim}};
  j["train"] = {{"mode", enum_to(cfg.train.mode, kModeTable)},
                {"lr", cfg.train.lr},
                {"momentum", cfg.train.momentum},
                {"weight_decay", cfg.train.weight_decay},
                {"epochs", cfg.train.epochs},
                {"batch_size", cfg.train.batch_size},
                {"seed", cfg.train.seed},
                {"margin", cfg.train.margin},
                {"per_anchor", cfg.train.per_anchor},
                {"strategy", enum_to(cfg.train.strategy, kStrategyTable)},
                {"deterministic", cfg.train.deterministic}};
  j["codebook"] = {{"subspaces", cfg.codebook.subspaces},
                   {"codewords", cfg.codebook.codewords},
                   {"kmeans_iters", cfg.codebook.kmeans_iters}};
  j["gsl"] = {{"lambda", cfg.gsl.lambda},
              {"neighbors", cfg.gsl.neighbors},
              {"f_variant", enum_to(cfg.gsl.f_variant, kWeightingTable)},
              {"selection_sign", enum_to(cfg.gsl.selection_sign, kSignTable)},
              {"lambda1_denominator", enum_to(cfg.gsl.lambda1_denominator, kDenomTable)},
              {"update_interval", cfg.gsl.update_interval},
              {"refresh_mode", enum_to(cfg.gsl.refresh_mode, kRefreshTable)}};
  j["eval"] = {{"cutoff", cfg.eval.cutoff},
               {"precision_ks", cfg.eval.precision_ks},
               {"multi_label", cfg.eval.multi_label},
               {"codebook_source", enum_to(cfg.eval.codebook_source, kEvalCbTable)}};
  j["out_dir"] = cfg.out_dir;
  return j.dump(2);
}

ExperimentConfig config_from_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  ExperimentConfig cfg = default_desk_config();
  if (j.contains("dataset")) {
    const json& d = j["dataset"];
    get_enum_if_present(d, "source", kSourceTable, cfg.data.source, "dataset source");
    if (d.contains("synthetic")) {
      const json& s = d["synthetic"];
      get_if_present(s, "num_classes", cfg.data.synthetic.num_classes);
      get_if_present(s, "per_class", cfg.data.synthetic.per_class);
      get_if_present(s, "dim", cfg.data.synthetic.dim);
      get_if_present(s, "cluster_std", cfg.data.synthetic.cluster_std);
      get_if_present(s, "seed", cfg.data.synthetic.seed);
    }
    get_if_present(d, "vectors_path", cfg.data.vectors_path);
    get_if_present(d, "labels_path", cfg.data.labels_path);
    get_if_present(d, "queries_per_class", cfg.data.queries_per_class);
    get_if_present(d, "train_per_class", cfg.data.train_per_class);
    get_if_present(d, "split_seed", cfg.data.split_seed);
    get_if_present(d, "database_includes_train", cfg.data.database_includes_train);
  }
  if (j.contains("net")) {
    get_if_present(j["net"], "hidden_dims", cfg.net.hidden_dims);
    get_if_present(j["net"], "embed_dim", cfg.net.embed_dim);
  }
  if (j.contains("train")) {
    const json& t = j["train"];
    get_enum_if_present(t, "mode", kModeTable, cfg.train.mode, "train mode");
    get_if_present(t, "lr", cfg.train.lr);
    get_if_present(t, "momentum", cfg.train.momentum);
    get_if_present(t, "weight_decay", cfg.train.weight_decay);
    get_if_present(t, "epochs", cfg.train.epochs);
    get_if_present(t, "batch_size", cfg.train.batch_size);
    get_if_present(t, "seed", cfg.train.seed);
    get_if_present(t, "margin", cfg.train.margin);
    get_if_present(t, "per_anchor", cfg.train.per_anchor);
    get_enum_if_present(t, "strategy", kStrategyTable, cfg.train.strategy, "triplet strategy");
    get_if_present(t, "deterministic", cfg.train.deterministic);
  }
  if (j.contains("codebook")) {
    const json& c = j["codebook"];
    get_if_present(c, "subspaces", cfg.codebook.subspaces);
    get_if_present(c, "codewords", cfg.codebook.codewords);
    get_if_present(c, "kmeans_iters", cfg.codebook.kmeans_iters);
  }
  if (j.contains("gsl")) {
    const json& g = j["gsl"];
    get_if_present(g, "lambda", cfg.gsl.lambda);
    get_if_present(g, "neighbors", cfg.gsl.neighbors);
    get_enum_if_present(g, "f_variant", kWeightingTable, cfg.gsl.f_variant, "f variant");
    get_enum_if_present(g, "selection_sign", kSignTable, cfg.gsl.selection_sign, "selection sign");
    get_enum_if_present(g, "lambda1_denominator", kDenomTable, cfg.gsl.lambda1_denominator,
                        "lambda1 denominator");
    get_if_present(g, "update_interval", cfg.gsl.update_interval);
    get_enum_if_present(g, "refresh_mode", kRefreshTable, cfg.gsl.refresh_mode, "refresh mode");
  }
  if (j.contains("eval")) {
    const json& e = j["eval"];
    get_if_present(e, "cutoff", cfg.eval.cutoff);
    get_if_present(e, "precision_ks", cfg.eval.precision_ks);
    get_if_present(e, "multi_label", cfg.eval.multi_label);
    get_enum_if_present(e, "codebook_source", kEvalCbTable, cfg.eval.codebook_source,
                        "eval codebook source");
  }
  get_if_present(j, "out_dir", cfg.out_dir);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ParseError("cannot open config: " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return config_from_json(ss.str());
}

void save_config(const ExperimentConfig& cfg, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw ParseError("cannot open for writing: " + path);
  os << config_to_json(cfg) << "\n";
}

LabeledDataset prepare_dataset(const DatasetConfig& cfg) {
  LabeledDataset ds;
  switch (cfg.source) {
    case DataSource::synthetic:
      ds = make_synthetic(cfg.synthetic);
      break;
    case DataSource::fvecs: {
      FloatMatrix m = load_fvecs(cfg.vectors_path);
      ds.dim = m.dim;
      ds.vectors = std::move(m.values);
      ds.labels = load_labels(cfg.labels_path);
      break;
    }
    case DataSource::csv: {
      FloatMatrix m = load_csv_matrix(cfg.vectors_path);
      ds.dim = m.dim;
      ds.vectors = std::move(m.values);
      ds.labels = load_labels(cfg.labels_path);
      break;
    }
  }
  if (ds.labels.size() != ds.size()) {
    throw InvalidArgument("dataset: label count " + std::to_string(ds.labels.size()) +
                          " does not match vector count " + std::to_string(ds.size()));
  }
  ds.tags.assign(ds.size(), SplitTag::database);
  split_protocol(ds, cfg.queries_per_class, cfg.train_per_class, cfg.split_seed);
  return ds;
}

TrainOutput run_train(const ExperimentConfig& cfg, const LabeledDataset& ds) {
  cfg.validate();
  if (ds.dim == 0 || ds.size() == 0) throw InvalidArgument("run_train: empty dataset");

  const std::vector<std::size_t> train_rows = ds.rows_with_tag(SplitTag::train);
  if (train_rows.empty()) throw InvalidArgument("run_train: no rows tagged train");

  const std::size_t d = cfg.net.embed_dim;
  const bool snapping_enabled = cfg.train.mode == TrainMode::gsl && cfg.gsl.neighbors > 0;

  TrainOutput out;
  out.net = EmbeddingNet::make(ds.dim, cfg.net.hidden_dims, d, cfg.train.seed);

  // Initial codebook fitted to the untrained embeddings.
  std::vector<float> train_embs = embed_rows(out.net, ds, train_rows);
  Codebook cb = train_codebook(train_embs, d, cfg.codebook.subspaces, cfg.codebook.codewords,
                               cfg.codebook.kmeans_iters, cfg.train.seed);
  CodebookRefresher refresher(cb, cfg.gsl.refresh_mode, cfg.codebook.kmeans_iters,
                              cfg.train.seed);
  out.codebook_versions.push_back(refresher.current().version());

  SgdMomentum opt(cfg.train.lr, cfg.train.momentum, cfg.train.weight_decay);
  BatchSampler sampler(ds, train_rows, cfg.train.batch_size, cfg.train.seed);
  const std::size_t batch_n = sampler.batch_rows();
  const std::size_t iters_per_epoch =
      (train_rows.size() + cfg.train.batch_size - 1) / cfg.train.batch_size;

  std::vector<float> refresh_buffer;
  std::vector<double> inputs(batch_n * ds.dim);
  std::vector<int> batch_labels(batch_n);
  std::vector<double> raw_grads(batch_n * d);

  double align_sum_total = 0.0;
  std::size_t align_count_total = 0;
  std::size_t iteration = 0;

  for (std::size_t epoch = 0; epoch < cfg.train.epochs; ++epoch) {
    double epoch_loss = 0.0;
    double epoch_align_sum = 0.0;
    std::size_t epoch_align_count = 0;

    for (std::size_t step = 0; step < iters_per_epoch; ++step, ++iteration) {
      const std::vector<std::size_t> batch = sampler.next();
      for (std::size_t i = 0; i < batch_n; ++i) {
        const float* r = ds.row(batch[i]);
        for (std::size_t j = 0; j < ds.dim; ++j) inputs[i * ds.dim + j] = r[j];
        batch_labels[i] = ds.labels[batch[i]];
      }

      ForwardTrace trace;
      const std::vector<double> reps = out.net.forward(inputs, batch_n, &trace);

      const TripletBatch triplets =
          select_triplets(reps, batch_n, d, batch_labels, cfg.train.per_anchor,
                          cfg.train.strategy, cfg.train.margin, mix_seed(cfg.train.seed, iteration));
      std::size_t active = 0;
      const double loss_sum =
          accumulate_triplet_gradients(reps, batch_n, d, triplets, raw_grads, &active);
      const double loss =
          triplets.triples.empty() ? 0.0 : loss_sum / static_cast<double>(triplets.triples.size());

      IterationLog log;
      log.iteration = iteration;
      log.epoch = epoch;
      log.loss = loss;  // mean per triplet, comparable across batch sizes
      log.active_triplets = active;

      std::vector<double> update_grads;
      double batch_align_sum = 0.0;
      std::size_t batch_align_count = 0;
      const Codebook& current_cb = refresher.current();
      if (snapping_enabled) {
        GslBackwardResult res = gsl_backward(reps, raw_grads, batch_n, current_cb, cfg.gsl);
        update_grads = std::move(res.snapped);
        for (std::size_t i = 0; i < batch_n; ++i) {
          const SnapReport& rep = res.reports[i];
          const bool has_grad = vec_norm({raw_grads.data() + i * d, d}) > 0.0;
          if (has_grad) {
            batch_align_sum += rep.alignment;
            ++batch_align_count;
            if (rep.rejected) ++log.rejected;
            out.snap_rows.push_back({iteration, batch[i], rep});
          }
        }
      } else if (cfg.train.mode == TrainMode::biased_baseline) {
        update_grads.assign(batch_n * d, 0.0);
        const double sign =
            cfg.gsl.selection_sign == SelectionSign::paper_literal ? 1.0 : -1.0;
        for (std::size_t i = 0; i < batch_n; ++i) {
          std::span<const double> y(reps.data() + i * d, d);
          std::span<const double> g(raw_grads.data() + i * d, d);
          std::vector<double> dy = baseline_biased_gradient(y, g, current_cb, cfg.gsl.lambda);
          std::copy(dy.begin(), dy.end(), update_grads.begin() + i * d);

          const double gn = vec_norm(g);
          if (gn == 0.0) continue;
          // Pull direction toward the nearest codeword, measured against the
          // gradient in the same orientation the snapping variant uses.
          const std::vector<float> yf = to_float(y);
          const std::vector<float> rec = decode(current_cb, encode(current_cb, yf));
          std::vector<double> pull(d);
          for (std::size_t j = 0; j < d; ++j) pull[j] = static_cast<double>(rec[j]) - y[j];
          const double pn = vec_norm(pull);
          SnapReport rep;
          rep.chosen_code = encode(current_cb, yf);
          rep.lambda1 = 1.0;
          rep.lambda2 = 2.0 * cfg.gsl.lambda * pn;
          rep.rejected = false;
          double dot = 0.0;
          for (std::size_t j = 0; j < d; ++j) dot += g[j] * pull[j];
          rep.alignment = pn > 0.0 ? sign * dot / (gn * pn) : 0.0;
          batch_align_sum += rep.alignment;
          ++batch_align_count;
          out.snap_rows.push_back({iteration, batch[i], rep});
        }
      } else {
        update_grads.assign(raw_grads.begin(), raw_grads.end());
      }

      if (batch_align_count > 0) {
        log.mean_alignment = batch_align_sum / static_cast<double>(batch_align_count);
      }
      epoch_align_sum += batch_align_sum;
      epoch_align_count += batch_align_count;

      for (double v : update_grads) {
        if (!std::isfinite(v)) throw NumericError("training diverged: non-finite gradient");
      }

      ParamGrads grads = out.net.backward(trace, update_grads);
      opt.apply(out.net, grads);

      const std::vector<float> reps_f = to_float(reps);
      log.batch_quant_error = quantization_error(current_cb, reps_f).mean_error;
      refresh_buffer.insert(refresh_buffer.end(), reps_f.begin(), reps_f.end());
      if ((iteration + 1) % cfg.gsl.update_interval == 0 && !refresh_buffer.empty()) {
        refresher.refresh(refresh_buffer);
        refresh_buffer.clear();
        out.codebook_versions.push_back(refresher.current().version());
      }

      epoch_loss += loss;
      out.iterations.push_back(log);
    }

    EpochLog elog;
    elog.epoch = epoch;
    elog.mean_loss = epoch_loss / static_cast<double>(iters_per_epoch);
    elog.mean_alignment =
        epoch_align_count > 0 ? epoch_align_sum / static_cast<double>(epoch_align_count) : 0.0;
    train_embs = embed_rows(out.net, ds, train_rows);
    elog.train_quant_error = quantization_error(refresher.current(), train_embs).mean_error;
    elog.codebook_version = refresher.current().version();
    out.epochs.push_back(elog);

    align_sum_total += epoch_align_sum;
    align_count_total += epoch_align_count;
  }

  out.codebook = refresher.current();
  out.mean_alignment =
      align_count_total > 0 ? align_sum_total / static_cast<double>(align_count_total) : 0.0;
  return out;
}

EvalOutput run_eval(const ExperimentConfig& cfg, const LabeledDataset& ds, const EmbeddingNet& net,
                    const Codebook* train_time_codebook) {
  cfg.validate();
  const std::vector<std::size_t> db_rows = ds.database_rows(cfg.data.database_includes_train);
  const std::vector<std::size_t> query_rows = ds.rows_with_tag(SplitTag::query);
  if (db_rows.empty()) throw InvalidArgument("run_eval: empty database split");
  if (query_rows.empty()) throw InvalidArgument("run_eval: empty query split");

  const std::size_t d = net.out_dim();
  const std::vector<float> db_embs = embed_rows(net, ds, db_rows);
  const std::vector<float> q_embs = embed_rows(net, ds, query_rows);

  std::vector<int> db_labels(db_rows.size()), q_labels(query_rows.size());
  for (std::size_t i = 0; i < db_rows.size(); ++i) db_labels[i] = ds.labels[db_rows[i]];
  for (std::size_t i = 0; i < query_rows.size(); ++i) q_labels[i] = ds.labels[query_rows[i]];

  EvalOutput out;
  if (cfg.eval.codebook_source == EvalCodebookSource::from_train) {
    if (!train_time_codebook) {
      throw InvalidArgument("run_eval: codebook_source=from_train but no codebook given");
    }
    out.codebook = *train_time_codebook;
  } else {
    out.codebook = train_codebook(db_embs, d, cfg.codebook.subspaces, cfg.codebook.codewords,
                                  cfg.codebook.kmeans_iters, cfg.train.seed);
  }
  out.db_quant = quantization_error(out.codebook, db_embs);

  const SearchIndex index = build_index(out.codebook, db_embs, db_labels);
  const std::size_t cutoff = cfg.eval.cutoff == 0 ? db_rows.size() : cfg.eval.cutoff;

  std::vector<std::vector<std::size_t>> adc_rankings(query_rows.size());
  std::vector<std::vector<std::size_t>> l2_rankings(query_rows.size());
  for (std::size_t q = 0; q < query_rows.size(); ++q) {
    std::span<const float> query(q_embs.data() + q * d, d);
    for (const SearchHit& hit : search(index, query, cutoff)) {
      adc_rankings[q].push_back(hit.id);
    }
    for (const SearchHit& hit : exhaustive_l2_search(db_embs, d, query, cutoff)) {
      l2_rankings[q].push_back(hit.id);
    }
  }

  out.adc = mean_average_precision(adc_rankings, q_labels, db_labels, cutoff,
                                   cfg.eval.precision_ks, cfg.eval.multi_label);
  out.l2 = mean_average_precision(l2_rankings, q_labels, db_labels, cutoff, cfg.eval.precision_ks,
                                  cfg.eval.multi_label);
  out.l2_below_adc = out.l2.map < out.adc.map;
  return out;
}

std::vector<AblatePoint> run_ablate(const ExperimentConfig& cfg, const LabeledDataset& ds,
                                    SweepParam param, const std::vector<std::size_t>& values) {
  if (values.empty()) throw InvalidArgument("run_ablate: empty sweep value list");
  std::vector<AblatePoint> points;
  for (std::size_t value : values) {
    ExperimentConfig point_cfg = cfg;
    point_cfg.train.mode = TrainMode::gsl;
    if (param == SweepParam::update_interval) {
      point_cfg.gsl.update_interval = value;
    } else {
      point_cfg.gsl.neighbors = value;
    }
    const TrainOutput train_out = run_train(point_cfg, ds);
    const EvalOutput eval_out = run_eval(point_cfg, ds, train_out.net, &train_out.codebook);

    AblatePoint p;
    p.value = value;
    p.adc_map = eval_out.adc.map;
    p.l2_map = eval_out.l2.map;
    p.mean_alignment = train_out.mean_alignment;
    p.alignments.reserve(train_out.snap_rows.size());
    for (const SnapRow& row : train_out.snap_rows) p.alignments.push_back(row.report.alignment);
    points.push_back(std::move(p));
  }
  return points;
}

void write_train_artifacts(const ExperimentConfig& cfg, const TrainOutput& out,
                           const std::string& dir) {
  std::filesystem::create_directories(dir);

  json meta;
  meta["seed"] = cfg.train.seed;
  meta["mode"] = to_string(cfg.train.mode);
  meta["lr"] = cfg.train.lr;
  meta["momentum"] = cfg.train.momentum;
  meta["margin"] = cfg.train.margin;
  meta["epochs"] = cfg.train.epochs;
  meta["lambda"] = cfg.gsl.lambda;
  meta["neighbors"] = cfg.gsl.neighbors;
  save_checkpoint(out.net, dir + "/checkpoint.sqnn", meta.dump());
  save_codebook(out.codebook, dir + "/codebook.sqcb");
  save_config(cfg, dir + "/resolved_config.json");

  CsvWriter iter_csv(dir + "/train_log.csv");
  iter_csv.header({"iteration", "epoch", "loss", "active_triplets", "rejected", "mean_alignment",
                   "batch_quant_error"});
  for (const IterationLog& log : out.iterations) {
    iter_csv.field(log.iteration)
        .field(log.epoch)
        .field(log.loss)
        .field(log.active_triplets)
        .field(log.rejected)
        .field(log.mean_alignment)
        .field(log.batch_quant_error);
    iter_csv.end_row();
  }

  CsvWriter epoch_csv(dir + "/epoch_log.csv");
  epoch_csv.header({"epoch", "mean_loss", "train_quant_error", "mean_alignment",
                    "codebook_version"});
  for (const EpochLog& log : out.epochs) {
    epoch_csv.field(log.epoch)
        .field(log.mean_loss)
        .field(log.train_quant_error)
        .field(log.mean_alignment)
        .field(static_cast<std::size_t>(log.codebook_version));
    epoch_csv.end_row();
  }

  CsvWriter snap_csv(dir + "/snap_reports.csv");
  snap_csv.header({"iteration", "sample", "chosen_code", "lambda1", "lambda2", "alignment",
                   "rejected"});
  for (const SnapRow& row : out.snap_rows) {
    snap_csv.field(row.iteration)
        .field(row.sample)
        .field(code_to_string(row.report.chosen_code))
        .field(row.report.lambda1)
        .field(row.report.lambda2)
        .field(row.report.alignment)
        .field(row.report.rejected);
    snap_csv.end_row();
  }
}

void write_eval_artifacts(const EvalOutput& out, const std::string& dir) {
  std::filesystem::create_directories(dir);

  CsvWriter map_csv(dir + "/eval_map.csv");
  map_csv.header({"metric", "value"});
  map_csv.field(std::string("adc_map")).field(out.adc.map);
  map_csv.end_row();
  map_csv.field(std::string("l2_map")).field(out.l2.map);
  map_csv.end_row();
  map_csv.field(std::string("db_quant_error")).field(out.db_quant.mean_error);
  map_csv.end_row();
  map_csv.field(std::string("num_queries")).field(out.adc.num_queries);
  map_csv.end_row();
  map_csv.field(std::string("retrieval_cutoff")).field(out.adc.retrieval_cutoff);
  map_csv.end_row();

  CsvWriter prec_csv(dir + "/precision_at_k.csv");
  prec_csv.header({"k", "adc_precision", "l2_precision"});
  for (std::size_t i = 0; i < out.adc.precision_at_k.size(); ++i) {
    prec_csv.field(out.adc.precision_at_k[i].first)
        .field(out.adc.precision_at_k[i].second)
        .field(out.l2.precision_at_k[i].second);
    prec_csv.end_row();
  }
}

void write_ablate_artifacts(const std::vector<AblatePoint>& points, SweepParam param,
                            const std::string& dir) {
  std::filesystem::create_directories(dir);

  CsvWriter sweep_csv(dir + "/sweep.csv");
  sweep_csv.header({to_string(param), "adc_map", "l2_map", "mean_alignment"});
  for (const AblatePoint& p : points) {
    sweep_csv.field(p.value).field(p.adc_map).field(p.l2_map).field(p.mean_alignment);
    sweep_csv.end_row();
  }

  constexpr std::size_t kBins = 40;
  for (const AblatePoint& p : points) {
    CsvWriter hist(dir + "/alignment_hist_" + std::string(to_string(param)) + "_" +
                   std::to_string(p.value) + ".csv");
    hist.header({"bin_lo", "bin_hi", "count"});
    std::vector<std::size_t> counts(kBins, 0);
    for (double a : p.alignments) {
      double clamped = std::clamp(a, -1.0, 1.0);
      std::size_t bin = std::min(
          kBins - 1, static_cast<std::size_t>((clamped + 1.0) / 2.0 * static_cast<double>(kBins)));
      counts[bin]++;
    }
    for (std::size_t b = 0; b < kBins; ++b) {
      hist.field(-1.0 + 2.0 * static_cast<double>(b) / kBins)
          .field(-1.0 + 2.0 * static_cast<double>(b + 1) / kBins)
          .field(counts[b]);
      hist.end_row();
    }
  }
}

ManifestWriter::ManifestWriter(const ExperimentConfig& cfg, const std::string& command)
    : config_json_(config_to_json(cfg)),
      command_(command),
      started_(std::chrono::steady_clock::now()) {}

void ManifestWriter::add_metric(const std::string& key, double value) {
  metrics_.emplace_back(key, value);
}

void ManifestWriter::add_note(const std::string& key, const std::string& value) {
  notes_.emplace_back(key, value);
}

void ManifestWriter::set_codebook_versions(const std::vector<std::uint64_t>& versions) {
  codebook_versions_ = versions;
}

void ManifestWriter::finish_ok(const std::string& dir) { write(dir, "ok", ""); }

void ManifestWriter::finish_error(const std::string& dir, const std::string& message) {
  write(dir, "error", message);
}

void ManifestWriter::write(const std::string& dir, const std::string& status,
                           const std::string& error) {
  std::filesystem::create_directories(dir);
  json j;
  j["command"] = command_;
  j["status"] = status;
  if (!error.empty()) j["error"] = error;
  j["code_version"] = kCodeVersion;
  j["config"] = json::parse(config_json_);
  j["finished_at"] = iso_timestamp();
  j["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - started_)
                          .count();
  if (!codebook_versions_.empty()) j["codebook_versions"] = codebook_versions_;
  json metrics = json::object();
  for (const auto& [k, v] : metrics_) metrics[k] = v;
  j["metrics"] = metrics;
  for (const auto& [k, v] : notes_) j[k] = v;
  std::ofstream os(dir + "/manifest.json");
  os << j.dump(2) << "\n";
}

}  // namespace snapq
