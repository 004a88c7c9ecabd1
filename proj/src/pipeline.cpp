#include "vsgraph/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>

#include <json.hpp>

namespace vsgraph {

void RunConfig::validate() const {
  if (manifest.empty()) throw ConfigError("run config has no manifest path");
  if (output_dir.empty()) throw ConfigError("run config has no output directory");
  if (k < 1) throw ConfigError("k must be >= 1");
  if (self_weight < 0.0) throw ConfigError("self weight must be nonnegative");
  if (anchors_per_class < 1) throw ConfigError("anchors per class must be >= 1");
  if (layers < 1) throw ConfigError("layer count must be >= 1");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("lambda must lie in [0, 1]");
  if (!(confidence_threshold > 0.0 && confidence_threshold < 1.0))
    throw ConfigError("confidence threshold must lie in (0, 1)");
  if (progressive_rounds < 1) throw ConfigError("progressive rounds must be >= 1");
  try {
    train.validate();
  } catch (const ArgumentError& e) {
    throw ConfigError(e.what());
  }
}

RunConfig run_config_from_json(const std::filesystem::path& source) {
  std::ifstream in(source);
  if (!in) throw IoError("cannot open: " + source.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("run config is not valid JSON: " + source.string() + " (" + e.what() +
                      ")");
  }
  const auto base =
      source.has_parent_path() ? source.parent_path() : std::filesystem::path(".");
  auto resolve = [&](std::filesystem::path p) {
    return p.is_absolute() ? p : base / p;
  };

  RunConfig config;
  if (j.contains("manifest")) config.manifest = resolve(j.at("manifest").get<std::string>());
  if (j.contains("output_dir"))
    config.output_dir = resolve(j.at("output_dir").get<std::string>());
  config.k = j.value("k", config.k);
  config.self_weight = j.value("self_weight", config.self_weight);
  config.anchors_per_class = j.value("anchors_per_class", config.anchors_per_class);
  config.layers = j.value("layers", config.layers);
  config.lambda = j.value("lambda", config.lambda);
  config.confidence_threshold = j.value("confidence_threshold", config.confidence_threshold);
  config.progressive_rounds = j.value("progressive_rounds", config.progressive_rounds);
  if (j.contains("train")) {
    const auto& t = j.at("train");
    config.train.learning_rate = t.value("learning_rate", config.train.learning_rate);
    config.train.epochs = t.value("epochs", config.train.epochs);
    config.train.weight_decay = t.value("weight_decay", config.train.weight_decay);
    config.train.beta1 = t.value("beta1", config.train.beta1);
    config.train.beta2 = t.value("beta2", config.train.beta2);
    config.train.epsilon = t.value("epsilon", config.train.epsilon);
    config.train.seed = t.value("seed", config.train.seed);
  }
  return config;
}

namespace stages {

void build_graph(const std::filesystem::path& features, std::size_t k,
                 const std::filesystem::path& out_graph) {
  save_graph(knn_graph(load_matrix(features), k), out_graph);
}

void enhance_text(const std::filesystem::path& graph, const std::filesystem::path& metadata,
                  double self_weight, const std::filesystem::path& out_matrix) {
  const PropagationOperator op = normalize(load_graph(graph), self_weight);
  save_matrix(enhance_metadata(op, load_matrix(metadata)), out_matrix);
}

void select_anchors(const std::filesystem::path& enhanced,
                    const std::filesystem::path& descriptions,
                    const std::filesystem::path& labels, std::size_t m,
                    const std::filesystem::path& out_csv) {
  const DenseMatrix enhanced_m = load_matrix(enhanced);
  const DenseMatrix descriptions_m = load_matrix(descriptions);
  const auto class_count = static_cast<std::int32_t>(descriptions_m.rows());
  const Labels web = load_labels(labels, class_count);

  AnchorSet anchors;
  if (const auto* single = std::get_if<LabelVector>(&web)) {
    anchors = vsgraph::select_anchors(score_anchors(enhanced_m, descriptions_m, *single),
                                      *single, m);
  } else {
    anchors = multi_label_anchor_sets(score_anchor_matrix(enhanced_m, descriptions_m),
                                      std::get<MultiLabelMatrix>(web), m);
  }
  save_anchors(anchors, out_csv);
}

namespace {

DenseMatrix smoothed_from_files(const std::filesystem::path& graph,
                                const std::filesystem::path& features, double self_weight,
                                std::size_t layers) {
  const PropagationOperator op = normalize(load_graph(graph), self_weight);
  return smooth_features(op, load_matrix(features), layers);
}

}  // namespace

void train_gnn(const std::filesystem::path& graph, const std::filesystem::path& features,
               const std::filesystem::path& anchors_csv, std::size_t class_count,
               double self_weight, std::size_t layers, const TrainConfig& config,
               const std::filesystem::path& out_model_json,
               std::vector<double>* loss_history) {
  const DenseMatrix smoothed = smoothed_from_files(graph, features, self_weight, layers);
  SgcModel model = train(smoothed, load_anchors(anchors_csv), class_count, config,
                         loss_history);
  model.layers = layers;
  save_model(model, config, self_weight, out_model_json);
}

void label(const std::filesystem::path& model_json, const std::filesystem::path& graph,
           const std::filesystem::path& features, const std::filesystem::path& out_labels) {
  double self_weight = 0.0;
  const SgcModel model = load_model(model_json, nullptr, &self_weight);
  const DenseMatrix smoothed =
      smoothed_from_files(graph, features, self_weight, model.layers);
  save_matrix(infer(model, smoothed), out_labels);
}

namespace {

void write_top5_csv(const DenseMatrix& labels, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << "sample_id,class_id,prob\n";
  out.precision(9);
  const std::size_t take = std::min<std::size_t>(5, labels.cols());
  for (std::size_t i = 0; i < labels.rows(); ++i) {
    std::vector<std::size_t> order(labels.cols());
    for (std::size_t c = 0; c < order.size(); ++c) order[c] = c;
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take),
                      order.end(), [&](std::size_t a, std::size_t b) {
                        if (labels(i, a) != labels(i, b)) return labels(i, a) > labels(i, b);
                        return a < b;
                      });
    for (std::size_t r = 0; r < take; ++r)
      out << i << ',' << order[r] << ',' << labels(i, order[r]) << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

void combine(const std::filesystem::path& gnn_labels, const std::filesystem::path& cnn_labels,
             double lambda, double confidence_threshold,
             const std::filesystem::path& out_labels,
             const std::optional<std::filesystem::path>& top5_csv) {
  const DenseMatrix combined = vsgraph::combine(load_matrix(gnn_labels),
                                                load_matrix(cnn_labels),
                                                BlendConfig(lambda, confidence_threshold));
  save_matrix(combined, out_labels);
  if (top5_csv) write_top5_csv(combined, *top5_csv);
}

std::vector<RoundRecord> progressive(
    const std::filesystem::path& graph, const std::filesystem::path& features,
    const std::filesystem::path& anchors_csv, std::size_t class_count, double self_weight,
    std::size_t layers, const TrainConfig& config, std::size_t rounds, double tau,
    const std::filesystem::path& out_dir,
    const std::optional<std::filesystem::path>& ground_truth) {
  std::filesystem::create_directories(out_dir);
  const DenseMatrix smoothed = smoothed_from_files(graph, features, self_weight, layers);

  std::optional<LabelVector> truth;
  if (ground_truth) {
    // sentinel id == class_count marks open-set samples in synthetic truth
    Labels loaded = load_labels(*ground_truth, static_cast<std::int32_t>(class_count) + 1);
    if (auto* single = std::get_if<LabelVector>(&loaded)) truth = std::move(*single);
  }

  ProgressiveResult result =
      progressive_train(smoothed, load_anchors(anchors_csv), rounds, class_count, config,
                        tau, truth ? &*truth : nullptr);
  result.model.layers = layers;
  save_model(result.model, config, self_weight, out_dir / "model.json");
  save_matrix(result.labels, out_dir / "gnn_labels.vsgm");

  std::ofstream hist(out_dir / "history.jsonl", std::ios::trunc);
  if (!hist) throw IoError("cannot open for writing: " + (out_dir / "history.jsonl").string());
  for (const auto& r : result.history) {
    nlohmann::json j{{"round", r.round},
                     {"anchor_count", r.anchor_count},
                     {"final_loss", r.final_loss}};
    if (r.anchor_accuracy) j["anchor_accuracy"] = *r.anchor_accuracy;
    hist << j.dump() << '\n';
  }
  return result.history;
}

}  // namespace stages

PipelineOutcome run_pipeline(const RunConfig& config) {
  config.validate();
  const DatasetManifest manifest = load_manifest(config.manifest);
  if (!manifest.cnn_labels)
    throw ConfigError("manifest has no cnn_labels entry; the pipeline needs the pretrained "
                      "model's soft predictions as input");

  // cheap header checks before any compute
  const auto [n_features, d_visual] = matrix_dims(manifest.features);
  const auto [n_metadata, d_text] = matrix_dims(manifest.metadata_embeddings);
  const auto [n_descriptions, d_desc] = matrix_dims(manifest.label_descriptions);
  const auto [n_cnn, c_cnn] = matrix_dims(*manifest.cnn_labels);
  if (n_features != manifest.sample_count || n_metadata != manifest.sample_count ||
      n_cnn != manifest.sample_count)
    throw ConfigError("manifest sample_count disagrees with referenced matrices");
  if (n_descriptions != manifest.class_count || c_cnn != manifest.class_count)
    throw ConfigError("manifest class_count disagrees with referenced matrices");
  if (d_text != d_desc)
    throw ConfigError("metadata and label descriptions have different embedding dims");

  std::filesystem::create_directories(config.output_dir);
  const auto& out = config.output_dir;

  PipelineOutcome outcome;
  outcome.graph = out / "graph.vsgg";
  outcome.enhanced_metadata = out / "enhanced_metadata.vsgm";
  outcome.anchors = out / "anchors.csv";
  outcome.model = out / "model.json";
  outcome.gnn_labels = out / "gnn_labels.vsgm";
  outcome.final_labels = out / "final_labels.vsgm";
  outcome.report = out / "report.json";

  nlohmann::json report;
  report["schema_version"] = 1;
  report["manifest"] = config.manifest.string();
  auto& timings = report["stage_millis"] = nlohmann::json::object();
  auto timed = [&](const char* name, auto&& fn) {
    const auto start = std::chrono::steady_clock::now();
    fn();
    const auto end = std::chrono::steady_clock::now();
    timings[name] =
        std::chrono::duration_cast<std::chrono::milliseconds>(end - start).count();
  };

  timed("build_graph",
        [&] { stages::build_graph(manifest.features, config.k, outcome.graph); });
  timed("enhance_text", [&] {
    stages::enhance_text(outcome.graph, manifest.metadata_embeddings, config.self_weight,
                         outcome.enhanced_metadata);
  });
  timed("select_anchors", [&] {
    stages::select_anchors(outcome.enhanced_metadata, manifest.label_descriptions,
                           manifest.labels, config.anchors_per_class, outcome.anchors);
  });

  std::vector<double> loss_curve;
  if (config.progressive_rounds == 1) {
    timed("train_gnn", [&] {
      stages::train_gnn(outcome.graph, manifest.features, outcome.anchors,
                        manifest.class_count, config.self_weight, config.layers,
                        config.train, outcome.model, &loss_curve);
    });
    timed("label", [&] {
      stages::label(outcome.model, outcome.graph, manifest.features, outcome.gnn_labels);
    });
  } else {
    timed("progressive", [&] {
      const auto history = stages::progressive(
          outcome.graph, manifest.features, outcome.anchors, manifest.class_count,
          config.self_weight, config.layers, config.train, config.progressive_rounds,
          config.confidence_threshold, out, manifest.ground_truth);
      auto& rounds = report["rounds"] = nlohmann::json::array();
      for (const auto& r : history) {
        nlohmann::json j{{"round", r.round},
                         {"anchor_count", r.anchor_count},
                         {"final_loss", r.final_loss}};
        if (r.anchor_accuracy) j["anchor_accuracy"] = *r.anchor_accuracy;
        rounds.push_back(j);
      }
    });
  }
  timed("combine", [&] {
    stages::combine(outcome.gnn_labels, *manifest.cnn_labels, config.lambda,
                    config.confidence_threshold, outcome.final_labels,
                    out / "final_labels_top5.csv");
  });

  const AnchorSet anchors = load_anchors(outcome.anchors);
  outcome.anchor_count = anchors.members.size();
  const SgcModel model = load_model(outcome.model);
  outcome.final_loss = model.final_loss;

  report["anchors"] = {{"count", anchors.members.size()},
                       {"per_class", config.anchors_per_class},
                       {"warnings", anchors.warnings}};
  report["final_loss"] = model.final_loss;
  if (!loss_curve.empty()) {
    // subsample the curve: every 50th epoch plus the last
    auto& curve = report["loss_curve"] = nlohmann::json::array();
    for (std::size_t e = 0; e < loss_curve.size(); e += 50)
      curve.push_back({{"epoch", e + 1}, {"loss", loss_curve[e]}});
    curve.push_back({{"epoch", loss_curve.size()}, {"loss", loss_curve.back()}});
  }
  report["config"] = {{"k", config.k},
                      {"self_weight", config.self_weight},
                      {"anchors_per_class", config.anchors_per_class},
                      {"layers", config.layers},
                      {"lambda", config.lambda},
                      {"confidence_threshold", config.confidence_threshold},
                      {"progressive_rounds", config.progressive_rounds},
                      {"train",
                       {{"learning_rate", config.train.learning_rate},
                        {"epochs", config.train.epochs},
                        {"weight_decay", config.train.weight_decay},
                        {"seed", config.train.seed}}}};
  report["artifacts"] = {{"graph", outcome.graph.string()},
                         {"enhanced_metadata", outcome.enhanced_metadata.string()},
                         {"anchors", outcome.anchors.string()},
                         {"model", outcome.model.string()},
                         {"gnn_labels", outcome.gnn_labels.string()},
                         {"final_labels", outcome.final_labels.string()}};

  std::ofstream rep(outcome.report, std::ios::trunc);
  if (!rep) throw IoError("cannot open for writing: " + outcome.report.string());
  rep << report.dump(2) << '\n';
  return outcome;
}

EvalReport evaluate_predictions(const std::filesystem::path& predictions,
                                const std::filesystem::path& truth, std::size_t top_k,
                                double open_threshold) {
  const DenseMatrix pred = load_matrix(predictions);
  const auto classes = static_cast<std::int32_t>(pred.cols());

  EvalReport report;
  report.sample_count = pred.rows();
  report.class_count = pred.cols();

  // sentinel id == classes is legal in single-label truth (open-set rows)
  const Labels loaded = load_labels(truth, classes + 1);
  if (const auto* single = std::get_if<LabelVector>(&loaded)) {
    if (single->entries.size() != pred.rows())
      throw ShapeError("truth has " + std::to_string(single->entries.size()) +
                       " entries for " + std::to_string(pred.rows()) + " prediction rows");
    bool has_open = false;
    for (auto t : single->entries)
      if (t == classes) has_open = true;

    // top-k over closed-truth rows only
    LabelVector closed;
    closed.class_count = classes;
    std::vector<std::size_t> closed_rows;
    for (std::size_t i = 0; i < single->entries.size(); ++i)
      if (single->entries[i] < classes) {
        closed.entries.push_back(single->entries[i]);
        closed_rows.push_back(i);
      }
    if (!closed_rows.empty()) {
      DenseMatrix closed_pred(closed_rows.size(), pred.cols());
      for (std::size_t r = 0; r < closed_rows.size(); ++r)
        for (std::size_t c = 0; c < pred.cols(); ++c)
          closed_pred(r, c) = pred(closed_rows[r], c);
      report.top1 = topk_accuracy(closed_pred, closed, 1);
      if (pred.cols() >= 5) report.top5 = topk_accuracy(closed_pred, closed, 5);
    }
    if (has_open) {
      const OpensetResult os = openset_prf(pred, *single, open_threshold);
      report.openset_precision = os.precision;
      report.openset_recall = os.recall;
      report.openset_f1 = os.f1;
    }
  } else {
    const auto& multi = std::get<MultiLabelMatrix>(loaded);
    // the multi-label loader validated against classes + 1; enforce the
    // exact class count here
    for (std::size_t i = 0; i < multi.rows; ++i)
      if (multi.cols > pred.cols() && multi(i, pred.cols()))
        throw ValidationError("multi-label truth uses class id " +
                              std::to_string(pred.cols()) + " beyond prediction columns");
    MultiLabelMatrix trimmed;
    trimmed.rows = multi.rows;
    trimmed.cols = pred.cols();
    trimmed.data.assign(trimmed.rows * trimmed.cols, 0);
    for (std::size_t i = 0; i < multi.rows; ++i)
      for (std::size_t c = 0; c < trimmed.cols; ++c)
        trimmed.data[i * trimmed.cols + c] = multi(i, c);
    const auto [c_f1, o_f1] = multilabel_f1(pred, trimmed, top_k);
    report.c_f1 = c_f1;
    report.o_f1 = o_f1;
    report.map = mean_average_precision(pred, trimmed, &report.warnings);
  }
  return report;
}

}  // namespace vsgraph
