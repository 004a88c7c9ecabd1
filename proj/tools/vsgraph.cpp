// Command-line front end: one subcommand per pipeline stage plus the
// end-to-end `pipeline` command and the synthetic benchmark generator.
// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "vsgraph/pipeline.hpp"

namespace {

constexpr int kExitSuccess = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct TrainFlags {
  vsgraph::TrainConfig config;

  void attach(CLI::App* cmd) {
    cmd->add_option("--lr", config.learning_rate, "learning rate")
        ->capture_default_str();
    cmd->add_option("--epochs", config.epochs, "training epochs")->capture_default_str();
    cmd->add_option("--weight-decay", config.weight_decay, "L2 penalty added to gradients")
        ->capture_default_str();
    cmd->add_option("--seed", config.seed, "run seed")->capture_default_str();
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Label correction for webly supervised datasets: anchor selection on a "
               "visual-semantic graph followed by graph label propagation"};
  app.require_subcommand(1);

  // ---- synth ----------------------------------------------------------
  auto* synth = app.add_subcommand("synth", "generate a synthetic noisy dataset");
  vsgraph::SynthConfig synth_config;
  std::string synth_out;
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--samples", synth_config.samples)->capture_default_str();
  synth->add_option("--classes", synth_config.classes)->capture_default_str();
  synth->add_option("--ood-concepts", synth_config.ood_concepts)->capture_default_str();
  synth->add_option("--visual-dim", synth_config.visual_dim)->capture_default_str();
  synth->add_option("--text-dim", synth_config.text_dim)->capture_default_str();
  synth->add_option("--noise-rate", synth_config.noise_rate,
                    "semantic-noise rate of majority-noise classes")
      ->capture_default_str();
  synth->add_option("--base-noise-rate", synth_config.base_noise_rate,
                    "semantic-noise rate of the remaining classes")
      ->capture_default_str();
  synth->add_option("--noisy-fraction", synth_config.noisy_class_fraction,
                    "fraction of classes with majority noise")
      ->capture_default_str();
  synth->add_option("--visual-spread", synth_config.visual_spread)->capture_default_str();
  synth->add_option("--text-spread", synth_config.text_spread)->capture_default_str();
  synth->add_option("--corruption", synth_config.metadata_corruption,
                    "fraction of samples whose metadata follows the web label")
      ->capture_default_str();
  synth->add_option("--cnn-sharpness", synth_config.cnn_sharpness)->capture_default_str();
  synth->add_option("--seed", synth_config.seed)->capture_default_str();

  // ---- build-graph ----------------------------------------------------
  auto* build = app.add_subcommand("build-graph", "exact cosine kNN graph from features");
  std::string build_features, build_out;
  std::size_t build_k = 5;
  build->add_option("--features", build_features)->required();
  build->add_option("--k", build_k, "neighbors per node")->capture_default_str();
  build->add_option("--out", build_out)->required();

  // ---- enhance-text ---------------------------------------------------
  auto* enhance = app.add_subcommand("enhance-text", "graph-smooth metadata embeddings");
  std::string enh_graph, enh_metadata, enh_out;
  double enh_w = 0.0;
  enhance->add_option("--graph", enh_graph)->required();
  enhance->add_option("--metadata", enh_metadata)->required();
  enhance->add_option("--self-weight", enh_w, "w in D^-1/2 (A + wI) D^-1/2")
      ->capture_default_str();
  enhance->add_option("--out", enh_out)->required();

  // ---- select-anchors -------------------------------------------------
  auto* select = app.add_subcommand("select-anchors",
                                    "per-class anchors by description similarity");
  std::string sel_enhanced, sel_descriptions, sel_labels, sel_out;
  std::size_t sel_m = 10;
  select->add_option("--enhanced", sel_enhanced)->required();
  select->add_option("--descriptions", sel_descriptions)->required();
  select->add_option("--labels", sel_labels)->required();
  select->add_option("--m", sel_m, "anchors per class")->capture_default_str();
  select->add_option("--out", sel_out)->required();

  // ---- train-gnn ------------------------------------------------------
  auto* train_cmd = app.add_subcommand("train-gnn", "train the graph classifier on anchors");
  std::string tr_graph, tr_features, tr_anchors, tr_out;
  std::size_t tr_classes = 0, tr_layers = 1;
  double tr_w = 0.0;
  TrainFlags tr_flags;
  train_cmd->add_option("--graph", tr_graph)->required();
  train_cmd->add_option("--features", tr_features)->required();
  train_cmd->add_option("--anchors", tr_anchors)->required();
  train_cmd->add_option("--classes", tr_classes)->required();
  train_cmd->add_option("--self-weight", tr_w)->capture_default_str();
  train_cmd->add_option("--layers", tr_layers)->capture_default_str();
  tr_flags.attach(train_cmd);
  train_cmd->add_option("--out", tr_out, "model sidecar path (.json)")->required();

  // ---- label ----------------------------------------------------------
  auto* label_cmd = app.add_subcommand("label", "infer soft labels for every sample");
  std::string lb_model, lb_graph, lb_features, lb_out;
  label_cmd->add_option("--model", lb_model)->required();
  label_cmd->add_option("--graph", lb_graph)->required();
  label_cmd->add_option("--features", lb_features)->required();
  label_cmd->add_option("--out", lb_out)->required();

  // ---- combine --------------------------------------------------------
  auto* combine_cmd = app.add_subcommand("combine", "blend graph and CNN labels");
  std::string cb_gnn, cb_cnn, cb_out, cb_top5;
  double cb_lambda = 0.5, cb_tau = 0.7;
  combine_cmd->add_option("--gnn", cb_gnn)->required();
  combine_cmd->add_option("--cnn", cb_cnn)->required();
  combine_cmd->add_option("--lambda", cb_lambda, "GNN weight in the blended branch")
      ->capture_default_str();
  combine_cmd->add_option("--tau", cb_tau, "confidence pass-through threshold")
      ->capture_default_str();
  combine_cmd->add_option("--out", cb_out)->required();
  combine_cmd->add_option("--top5", cb_top5, "optional sparse CSV of top-5 entries");

  // ---- progressive ----------------------------------------------------
  auto* prog = app.add_subcommand("progressive",
                                  "repeated training with threshold-selected anchors");
  std::string pg_graph, pg_features, pg_anchors, pg_out, pg_truth;
  std::size_t pg_classes = 0, pg_layers = 1, pg_rounds = 2;
  double pg_w = 0.0, pg_tau = 0.7;
  TrainFlags pg_flags;
  prog->add_option("--graph", pg_graph)->required();
  prog->add_option("--features", pg_features)->required();
  prog->add_option("--anchors", pg_anchors)->required();
  prog->add_option("--classes", pg_classes)->required();
  prog->add_option("--self-weight", pg_w)->capture_default_str();
  prog->add_option("--layers", pg_layers)->capture_default_str();
  prog->add_option("--rounds", pg_rounds)->capture_default_str();
  prog->add_option("--tau", pg_tau, "confidence threshold for new anchors")
      ->capture_default_str();
  prog->add_option("--ground-truth", pg_truth, "optional truth CSV for anchor accuracy");
  pg_flags.attach(prog);
  prog->add_option("--out-dir", pg_out)->required();

  // ---- evaluate -------------------------------------------------------
  auto* eval = app.add_subcommand("evaluate", "score a prediction matrix against truth");
  std::string ev_pred, ev_truth, ev_out;
  std::size_t ev_k = 3;
  double ev_open = 0.2;
  eval->add_option("--pred", ev_pred)->required();
  eval->add_option("--truth", ev_truth)->required();
  eval->add_option("--K", ev_k, "top-K binarization for multi-label truth")
      ->capture_default_str();
  eval->add_option("--open-threshold", ev_open, "acceptance threshold for open-set truth")
      ->capture_default_str();
  eval->add_option("--out", ev_out, "optional JSON report path");

  // ---- pipeline -------------------------------------------------------
  auto* pipe = app.add_subcommand("pipeline", "run every stage end to end");
  std::string pp_config, pp_manifest, pp_out;
  vsgraph::RunConfig run;
  TrainFlags pp_flags;
  pipe->add_option("--config", pp_config, "JSON run configuration");
  pipe->add_option("--manifest", pp_manifest, "dataset manifest (overrides config)");
  pipe->add_option("--out", pp_out, "output directory (overrides config)");
  pipe->add_option("--k", run.k)->capture_default_str();
  pipe->add_option("--self-weight", run.self_weight)->capture_default_str();
  pipe->add_option("--m", run.anchors_per_class)->capture_default_str();
  pipe->add_option("--layers", run.layers)->capture_default_str();
  pipe->add_option("--lambda", run.lambda)->capture_default_str();
  pipe->add_option("--tau", run.confidence_threshold)->capture_default_str();
  pipe->add_option("--rounds", run.progressive_rounds)->capture_default_str();
  pp_flags.attach(pipe);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // prints help, exit 0
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*synth) {
      vsgraph::write_bundle(vsgraph::generate(synth_config), synth_out);
      std::cout << "wrote " << synth_out << "/manifest.json\n";
    } else if (*build) {
      vsgraph::stages::build_graph(build_features, build_k, build_out);
    } else if (*enhance) {
      vsgraph::stages::enhance_text(enh_graph, enh_metadata, enh_w, enh_out);
    } else if (*select) {
      vsgraph::stages::select_anchors(sel_enhanced, sel_descriptions, sel_labels, sel_m,
                                      sel_out);
      const auto anchors = vsgraph::load_anchors(sel_out);
      for (const auto& w : anchors.warnings) std::cerr << "warning: " << w << '\n';
      std::cout << anchors.members.size() << " anchors\n";
    } else if (*train_cmd) {
      vsgraph::stages::train_gnn(tr_graph, tr_features, tr_anchors, tr_classes, tr_w,
                                 tr_layers, tr_flags.config, tr_out);
      std::cout << "final loss " << vsgraph::load_model(tr_out).final_loss << '\n';
    } else if (*label_cmd) {
      vsgraph::stages::label(lb_model, lb_graph, lb_features, lb_out);
    } else if (*combine_cmd) {
      vsgraph::stages::combine(cb_gnn, cb_cnn, cb_lambda, cb_tau, cb_out,
                               cb_top5.empty()
                                   ? std::nullopt
                                   : std::optional<std::filesystem::path>(cb_top5));
    } else if (*prog) {
      const auto history = vsgraph::stages::progressive(
          pg_graph, pg_features, pg_anchors, pg_classes, pg_w, pg_layers, pg_flags.config,
          pg_rounds, pg_tau, pg_out,
          pg_truth.empty() ? std::nullopt
                           : std::optional<std::filesystem::path>(pg_truth));
      for (const auto& r : history)
        std::cout << "round " << r.round << ": " << r.anchor_count << " anchors, loss "
                  << r.final_loss << '\n';
    } else if (*eval) {
      const vsgraph::EvalReport report =
          vsgraph::evaluate_predictions(ev_pred, ev_truth, ev_k, ev_open);
      std::cout << report.to_table();
      if (!ev_out.empty()) {
        std::ofstream out(ev_out, std::ios::trunc);
        if (!out) throw vsgraph::IoError("cannot open for writing: " + ev_out);
        out << report.to_json() << '\n';
      } else {
        std::cout << report.to_json() << '\n';
      }
    } else if (*pipe) {
      run.train = pp_flags.config;
      if (!pp_config.empty()) {
        // command-line hyperparameters override file values only when set
        vsgraph::RunConfig loaded = vsgraph::run_config_from_json(pp_config);
        if (pipe->count("--k") == 0) run.k = loaded.k;
        if (pipe->count("--self-weight") == 0) run.self_weight = loaded.self_weight;
        if (pipe->count("--m") == 0) run.anchors_per_class = loaded.anchors_per_class;
        if (pipe->count("--layers") == 0) run.layers = loaded.layers;
        if (pipe->count("--lambda") == 0) run.lambda = loaded.lambda;
        if (pipe->count("--tau") == 0) run.confidence_threshold = loaded.confidence_threshold;
        if (pipe->count("--rounds") == 0)
          run.progressive_rounds = loaded.progressive_rounds;
        if (pipe->count("--lr") == 0) run.train.learning_rate = loaded.train.learning_rate;
        if (pipe->count("--epochs") == 0) run.train.epochs = loaded.train.epochs;
        if (pipe->count("--weight-decay") == 0)
          run.train.weight_decay = loaded.train.weight_decay;
        if (pipe->count("--seed") == 0) run.train.seed = loaded.train.seed;
        run.manifest = loaded.manifest;
        run.output_dir = loaded.output_dir;
      }
      if (!pp_manifest.empty()) run.manifest = pp_manifest;
      if (!pp_out.empty()) run.output_dir = pp_out;

      const vsgraph::PipelineOutcome outcome = vsgraph::run_pipeline(run);
      std::cout << "anchors: " << outcome.anchor_count << "\nfinal loss: "
                << outcome.final_loss << "\nfinal labels: " << outcome.final_labels.string()
                << "\nreport: " << outcome.report.string() << '\n';
    }
  } catch (const vsgraph::ArgumentError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const vsgraph::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const vsgraph::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitSuccess;
}
