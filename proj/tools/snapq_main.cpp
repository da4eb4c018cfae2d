// Copyright (c) 2026 the snapq authors
//
// This code is released under the
// Apache License Version 2.0 http://www.apache.org/licenses/.
//
// Batch experiment driver: codebook training, embedding training with or
// without gradient snapping, encoding, search, evaluation and ablation
// sweeps. All tabular output is CSV with a header row.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "snapq/codebook.hpp"
#include "snapq/common.hpp"
#include "snapq/csv.hpp"
#include "snapq/dataset.hpp"
#include "snapq/experiment.hpp"

namespace {

using namespace snapq;

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> mode;
  bool deterministic = false;
};

ExperimentConfig resolve_config(const CommonOpts& opts) {
  ExperimentConfig cfg = opts.config_path.empty() ? default_desk_config()
                                                  : load_config(opts.config_path);
  if (opts.seed) cfg.train.seed = *opts.seed;
  if (opts.mode) {
    if (*opts.mode == "gsl") cfg.train.mode = TrainMode::gsl;
    else if (*opts.mode == "plain") cfg.train.mode = TrainMode::plain;
    else if (*opts.mode == "biased_baseline") cfg.train.mode = TrainMode::biased_baseline;
    else throw InvalidArgument("unknown mode: " + *opts.mode);
  }
  if (opts.deterministic) cfg.train.deterministic = true;
  if (!opts.out_dir.empty()) cfg.out_dir = opts.out_dir;
  return cfg;
}

std::vector<float> maybe_embed(const std::string& checkpoint_path, FloatMatrix& m,
                               std::size_t* dim) {
  if (checkpoint_path.empty()) {
    *dim = m.dim;
    return std::move(m.values);
  }
  EmbeddingNet net = load_checkpoint(checkpoint_path);
  if (net.in_dim() != m.dim) {
    throw InvalidArgument("checkpoint expects dim " + std::to_string(net.in_dim()) +
                          ", vectors have dim " + std::to_string(m.dim));
  }
  std::vector<double> input(m.values.begin(), m.values.end());
  const std::vector<double> reps = net.forward(input, m.rows());
  std::vector<float> out(reps.size());
  for (std::size_t i = 0; i < reps.size(); ++i) out[i] = static_cast<float>(reps[i]);
  *dim = net.out_dim();
  return out;
}

int cmd_synth(const SyntheticSpec& spec, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  const LabeledDataset ds = make_synthetic(spec);
  save_fvecs(out_dir + "/vectors.fvecs", ds.vectors, ds.dim);
  std::vector<std::int32_t> labels(ds.labels.begin(), ds.labels.end());
  save_ivecs(out_dir + "/labels.ivecs", labels, 1);
  std::cout << "wrote " << ds.size() << " vectors of dim " << ds.dim << " to " << out_dir
            << std::endl;
  return 0;
}

int cmd_train_codebook(const std::string& vectors_path, std::size_t subspaces,
                       std::size_t codewords, std::size_t iters, std::uint64_t seed,
                       const std::string& out_path, const std::string& curve_path,
                       const std::string& json_path) {
  FloatMatrix m = load_fvecs(vectors_path);
  if (m.rows() == 0) throw InvalidArgument("no vectors in " + vectors_path);
  std::vector<double> curve;
  const Codebook cb =
      train_codebook(m.values, m.dim, subspaces, codewords, iters, seed, &curve);
  save_codebook(cb, out_path);
  if (!curve_path.empty()) {
    CsvWriter csv(curve_path);
    csv.header({"iteration", "mean_quant_error"});
    for (std::size_t i = 0; i < curve.size(); ++i) {
      csv.field(i).field(curve[i]);
      csv.end_row();
    }
  }
  if (!json_path.empty()) {
    std::ofstream os(json_path);
    os << codebook_to_json(cb) << "\n";
  }
  const QuantStats stats = quantization_error(cb, m.values);
  std::cout << "codebook " << subspaces << "x" << codewords << " trained on " << m.rows()
            << " vectors, mean quantization error " << stats.mean_error << std::endl;
  return 0;
}

int cmd_train(const CommonOpts& opts) {
  const ExperimentConfig cfg = resolve_config(opts);
  ManifestWriter manifest(cfg, "train");
  try {
    const LabeledDataset ds = prepare_dataset(cfg.data);
    const TrainOutput out = run_train(cfg, ds);
    write_train_artifacts(cfg, out, cfg.out_dir);
    manifest.set_codebook_versions(out.codebook_versions);
    manifest.add_metric("final_loss",
                        out.epochs.empty() ? 0.0 : out.epochs.back().mean_loss);
    manifest.add_metric("final_train_quant_error",
                        out.epochs.empty() ? 0.0 : out.epochs.back().train_quant_error);
    manifest.add_metric("mean_alignment", out.mean_alignment);
    manifest.finish_ok(cfg.out_dir);
    std::cout << "mode=" << to_string(cfg.train.mode)
              << " final_loss=" << (out.epochs.empty() ? 0.0 : out.epochs.back().mean_loss)
              << " mean_alignment=" << out.mean_alignment << "\nartifacts in " << cfg.out_dir
              << std::endl;
    return 0;
  } catch (const std::exception& e) {
    manifest.finish_error(cfg.out_dir, e.what());
    std::cerr << "train failed: " << e.what() << std::endl;
    return 1;
  }
}

int cmd_eval(const CommonOpts& opts, const std::string& checkpoint_path,
             const std::string& codebook_path) {
  const ExperimentConfig cfg = resolve_config(opts);
  ManifestWriter manifest(cfg, "eval");
  try {
    const LabeledDataset ds = prepare_dataset(cfg.data);
    const std::string ckpt =
        checkpoint_path.empty() ? cfg.out_dir + "/checkpoint.sqnn" : checkpoint_path;
    const EmbeddingNet net = load_checkpoint(ckpt);

    std::optional<Codebook> train_cb;
    std::string cb_path = codebook_path.empty() ? cfg.out_dir + "/codebook.sqcb" : codebook_path;
    if (std::filesystem::exists(cb_path)) train_cb = load_codebook(cb_path);

    const EvalOutput out = run_eval(cfg, ds, net, train_cb ? &*train_cb : nullptr);
    write_eval_artifacts(out, cfg.out_dir);
    manifest.add_metric("adc_map", out.adc.map);
    manifest.add_metric("l2_map", out.l2.map);
    manifest.add_metric("db_quant_error", out.db_quant.mean_error);
    if (out.l2_below_adc) {
      manifest.add_note("anomaly", "exhaustive l2 MAP below ADC MAP");
      std::cerr << "note: exhaustive l2 MAP " << out.l2.map << " below ADC MAP " << out.adc.map
                << std::endl;
    }
    manifest.finish_ok(cfg.out_dir);
    std::cout << "adc_map=" << out.adc.map << " l2_map=" << out.l2.map << "\nreports in "
              << cfg.out_dir << std::endl;
    return 0;
  } catch (const std::exception& e) {
    manifest.finish_error(cfg.out_dir, e.what());
    std::cerr << "eval failed: " << e.what() << std::endl;
    return 1;
  }
}

int cmd_encode(const std::string& codebook_path, const std::string& vectors_path,
               const std::string& checkpoint_path, const std::string& out_path) {
  const Codebook cb = load_codebook(codebook_path);
  FloatMatrix m = load_fvecs(vectors_path);
  std::size_t dim = 0;
  const std::vector<float> vecs = maybe_embed(checkpoint_path, m, &dim);
  if (dim != cb.dim()) {
    throw InvalidArgument("vector dim " + std::to_string(dim) + " does not match codebook dim " +
                          std::to_string(cb.dim()));
  }
  const std::size_t n = vecs.size() / dim;
  std::vector<std::int32_t> codes;
  codes.reserve(n * cb.subspace_count());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::uint32_t c : encode(cb, {vecs.data() + i * dim, dim})) {
      codes.push_back(static_cast<std::int32_t>(c));
    }
  }
  save_ivecs(out_path, codes, cb.subspace_count());
  std::cout << "encoded " << n << " vectors -> " << out_path << std::endl;
  return 0;
}

int cmd_search(const std::string& codebook_path, const std::string& codes_path,
               const std::string& queries_path, const std::string& checkpoint_path,
               std::size_t limit, const std::string& out_path) {
  const Codebook cb = load_codebook(codebook_path);
  const IntMatrix codes_m = load_ivecs(codes_path);
  if (codes_m.rows() > 0 && codes_m.dim != cb.subspace_count()) {
    throw InvalidArgument("codes have " + std::to_string(codes_m.dim) +
                          " entries per record, codebook expects " +
                          std::to_string(cb.subspace_count()));
  }
  SearchIndex index;
  index.cb = cb;
  index.codes.reserve(codes_m.rows());
  for (std::size_t i = 0; i < codes_m.rows(); ++i) {
    PqCode code(cb.subspace_count());
    for (std::size_t j = 0; j < cb.subspace_count(); ++j) {
      code[j] = static_cast<std::uint32_t>(codes_m.values[i * codes_m.dim + j]);
    }
    index.codes.push_back(std::move(code));
  }

  FloatMatrix qm = load_fvecs(queries_path);
  std::size_t dim = 0;
  const std::vector<float> queries = maybe_embed(checkpoint_path, qm, &dim);
  if (dim != cb.dim()) {
    throw InvalidArgument("query dim does not match codebook dim");
  }

  CsvWriter csv(out_path);
  csv.header({"query", "rank", "id", "distance_sq"});
  const std::size_t nq = queries.size() / dim;
  for (std::size_t q = 0; q < nq; ++q) {
    const auto hits = search(index, {queries.data() + q * dim, dim}, limit);
    for (std::size_t r = 0; r < hits.size(); ++r) {
      csv.field(q).field(r).field(hits[r].id).field(hits[r].distance_sq);
      csv.end_row();
    }
  }
  std::cout << "searched " << nq << " queries -> " << out_path << std::endl;
  return 0;
}

int cmd_ablate(const CommonOpts& opts, const std::string& sweep_name,
               std::vector<std::size_t> values) {
  const ExperimentConfig cfg = resolve_config(opts);
  SweepParam param;
  if (sweep_name == "update-interval" || sweep_name == "update_interval") {
    param = SweepParam::update_interval;
  } else if (sweep_name == "neighbors") {
    param = SweepParam::neighbors;
  } else {
    throw InvalidArgument("unknown sweep parameter: " + sweep_name);
  }
  ManifestWriter manifest(cfg, "ablate");
  try {
    const LabeledDataset ds = prepare_dataset(cfg.data);
    const auto points = run_ablate(cfg, ds, param, values);
    write_ablate_artifacts(points, param, cfg.out_dir);
    for (const AblatePoint& p : points) {
      manifest.add_metric(std::string(to_string(param)) + "_" + std::to_string(p.value) +
                              "_adc_map",
                          p.adc_map);
      std::cout << to_string(param) << "=" << p.value << " adc_map=" << p.adc_map
                << " l2_map=" << p.l2_map << " mean_alignment=" << p.mean_alignment << std::endl;
    }
    manifest.finish_ok(cfg.out_dir);
    std::cout << "sweep results in " << cfg.out_dir << std::endl;
    return 0;
  } catch (const std::exception& e) {
    manifest.finish_error(cfg.out_dir, e.what());
    std::cerr << "ablate failed: " << e.what() << std::endl;
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"snapq: joint embedding and product-quantization training with "
               "gradient snapping, plus ADC retrieval and evaluation"};
  app.require_subcommand(1);

  CommonOpts opts;

  // synth
  SyntheticSpec synth_spec{10, 600, 32, 0.9, 11};
  std::string synth_out = "data";
  auto* synth = app.add_subcommand("synth", "generate a synthetic labeled dataset");
  synth->add_option("--classes", synth_spec.num_classes, "number of classes");
  synth->add_option("--per-class", synth_spec.per_class, "points per class");
  synth->add_option("--dim", synth_spec.dim, "input dimension");
  synth->add_option("--std", synth_spec.cluster_std, "cluster standard deviation");
  synth->add_option("--seed", synth_spec.seed, "generator seed");
  synth->add_option("--out-dir", synth_out, "output directory");

  // train-codebook
  std::string tc_vectors, tc_out = "codebook.sqcb", tc_curve, tc_json;
  std::size_t tc_m = 4, tc_k = 256, tc_iters = 25;
  std::uint64_t tc_seed = 1;
  auto* tcb = app.add_subcommand("train-codebook", "train a product-quantization codebook");
  tcb->add_option("--vectors", tc_vectors, "input fvecs file")->required();
  tcb->add_option("--subspaces", tc_m, "number of subspaces (M)");
  tcb->add_option("--codewords", tc_k, "codewords per subspace (K)");
  tcb->add_option("--iters", tc_iters, "k-means iterations");
  tcb->add_option("--seed", tc_seed, "k-means seed");
  tcb->add_option("--out", tc_out, "output codebook path");
  tcb->add_option("--curve", tc_curve, "per-iteration error curve CSV");
  tcb->add_option("--json", tc_json, "human-readable JSON dump");

  // train
  auto* train = app.add_subcommand("train", "train the embedding network");
  train->add_option("--config", opts.config_path, "experiment config JSON");
  train->add_option("--mode", opts.mode, "gsl | plain | biased_baseline");
  train->add_option("--seed", opts.seed, "override training seed");
  train->add_option("--out-dir", opts.out_dir, "override output directory");
  train->add_flag("--deterministic", opts.deterministic, "single-threaded fixed-order run");

  // eval
  std::string eval_checkpoint, eval_codebook;
  auto* eval = app.add_subcommand("eval", "evaluate retrieval quality");
  eval->add_option("--config", opts.config_path, "experiment config JSON");
  eval->add_option("--checkpoint", eval_checkpoint, "network checkpoint (.sqnn)");
  eval->add_option("--codebook", eval_codebook, "codebook (.sqcb)");
  eval->add_option("--seed", opts.seed, "override seed");
  eval->add_option("--out-dir", opts.out_dir, "override output directory");
  eval->add_flag("--deterministic", opts.deterministic, "single-threaded fixed-order run");

  // encode
  std::string enc_codebook, enc_vectors, enc_checkpoint, enc_out = "codes.ivecs";
  auto* enc = app.add_subcommand("encode", "encode vectors into PQ codes");
  enc->add_option("--codebook", enc_codebook, "codebook (.sqcb)")->required();
  enc->add_option("--vectors", enc_vectors, "input fvecs file")->required();
  enc->add_option("--checkpoint", enc_checkpoint, "embed inputs through this network first");
  enc->add_option("--out", enc_out, "output ivecs file");

  // search
  std::string s_codebook, s_codes, s_queries, s_checkpoint, s_out = "hits.csv";
  std::size_t s_limit = 10;
  auto* srch = app.add_subcommand("search", "ADC search over encoded vectors");
  srch->add_option("--codebook", s_codebook, "codebook (.sqcb)")->required();
  srch->add_option("--codes", s_codes, "database codes (.ivecs)")->required();
  srch->add_option("--queries", s_queries, "query fvecs file")->required();
  srch->add_option("--checkpoint", s_checkpoint, "embed queries through this network first");
  srch->add_option("--limit", s_limit, "results per query");
  srch->add_option("--out", s_out, "output CSV");

  // ablate
  std::string ab_sweep = "neighbors";
  std::vector<std::size_t> ab_values;
  auto* ablate = app.add_subcommand("ablate", "sweep a hyperparameter, one train+eval per value");
  ablate->add_option("--config", opts.config_path, "experiment config JSON");
  ablate->add_option("--sweep", ab_sweep, "update-interval | neighbors");
  ablate->add_option("--values", ab_values, "sweep values")->required();
  ablate->add_option("--seed", opts.seed, "override seed");
  ablate->add_option("--out-dir", opts.out_dir, "override output directory");
  ablate->add_flag("--deterministic", opts.deterministic, "single-threaded fixed-order run");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return cmd_synth(synth_spec, synth_out);
    if (tcb->parsed()) {
      return cmd_train_codebook(tc_vectors, tc_m, tc_k, tc_iters, tc_seed, tc_out, tc_curve,
                                tc_json);
    }
    if (train->parsed()) return cmd_train(opts);
    if (eval->parsed()) return cmd_eval(opts, eval_checkpoint, eval_codebook);
    if (enc->parsed()) return cmd_encode(enc_codebook, enc_vectors, enc_checkpoint, enc_out);
    if (srch->parsed()) {
      return cmd_search(s_codebook, s_codes, s_queries, s_checkpoint, s_limit, s_out);
    }
    if (ablate->parsed()) return cmd_ablate(opts, ab_sweep, ab_values);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
  return 0;
}
