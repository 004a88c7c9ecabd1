#include <doctest.h>

#include <cstdlib>
#include <fstream>

#include "oracles.hpp"
#include "vsgraph/pipeline.hpp"

using vsgraph::RunConfig;
using vsgraph::SynthConfig;

namespace {

SynthConfig small_clean_config() {
  SynthConfig config;
  config.samples = 300;
  config.classes = 5;
  config.ood_concepts = 0;
  config.visual_dim = 16;
  config.text_dim = 8;
  config.visual_spread = 0.2;
  config.text_spread = 0.2;
  config.seed = 101;
  return config;
}

RunConfig fast_run(const std::filesystem::path& manifest,
                   const std::filesystem::path& out) {
  RunConfig run;
  run.manifest = manifest;
  run.output_dir = out;
  run.train.epochs = 500;
  return run;
}

std::string q(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

int run_cli(const std::string& args) {
  const char* cli = std::getenv("VSGRAPH_CLI");
  REQUIRE(cli != nullptr);
  const std::string command = std::string(cli) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(command.c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST_SUITE("cli-pipeline") {

TEST_CASE("pipeline completes on a clean bundle without degrading labels") {
  oracle::TempDir tmp("pipe");
  const auto bundle = vsgraph::generate(small_clean_config());
  vsgraph::write_bundle(bundle, tmp / "data");

  const auto outcome = vsgraph::run_pipeline(fast_run(tmp / "data" / "manifest.json",
                                                      tmp / "run"));
  CHECK(std::filesystem::exists(outcome.final_labels));
  CHECK(std::filesystem::exists(outcome.report));
  CHECK(outcome.anchor_count == 50);  // m=10 for 5 populated classes

  const auto corrected = vsgraph::load_matrix(outcome.final_labels);
  const auto anchors = vsgraph::load_anchors(outcome.anchors);
  const auto report = vsgraph::oracle_report(bundle, corrected, 0.7, &anchors);
  // clean bundle: web labels are already right, correction must not hurt
  CHECK(report.web_accuracy == doctest::Approx(1.0));
  CHECK(report.corrected_top1_in_dist >= 0.99);
  REQUIRE(report.anchor_precision.has_value());
  CHECK(*report.anchor_precision == doctest::Approx(1.0));
}

TEST_CASE("stage-by-stage execution is byte-identical to one pipeline run") {
  oracle::TempDir tmp("stages");
  const auto bundle = vsgraph::generate(small_clean_config());
  vsgraph::write_bundle(bundle, tmp / "data");
  const auto manifest_path = tmp / "data" / "manifest.json";
  const auto manifest = vsgraph::load_manifest(manifest_path);

  const RunConfig run = fast_run(manifest_path, tmp / "whole");
  const auto outcome = vsgraph::run_pipeline(run);

  const auto staged = tmp / "staged";
  std::filesystem::create_directories(staged);
  vsgraph::stages::build_graph(manifest.features, run.k, staged / "graph.vsgg");
  vsgraph::stages::enhance_text(staged / "graph.vsgg", manifest.metadata_embeddings,
                                run.self_weight, staged / "enhanced.vsgm");
  vsgraph::stages::select_anchors(staged / "enhanced.vsgm", manifest.label_descriptions,
                                  manifest.labels, run.anchors_per_class,
                                  staged / "anchors.csv");
  vsgraph::stages::train_gnn(staged / "graph.vsgg", manifest.features,
                             staged / "anchors.csv", manifest.class_count, run.self_weight,
                             run.layers, run.train, staged / "model.json");
  vsgraph::stages::label(staged / "model.json", staged / "graph.vsgg", manifest.features,
                         staged / "gnn.vsgm");
  vsgraph::stages::combine(staged / "gnn.vsgm", *manifest.cnn_labels, run.lambda,
                           run.confidence_threshold, staged / "final.vsgm");

  CHECK(oracle::file_bytes(staged / "graph.vsgg") == oracle::file_bytes(outcome.graph));
  CHECK(oracle::file_bytes(staged / "enhanced.vsgm") ==
        oracle::file_bytes(outcome.enhanced_metadata));
  CHECK(oracle::file_bytes(staged / "anchors.csv") == oracle::file_bytes(outcome.anchors));
  CHECK(oracle::file_bytes(staged / "gnn.vsgm") == oracle::file_bytes(outcome.gnn_labels));
  CHECK(oracle::file_bytes(staged / "final.vsgm") ==
        oracle::file_bytes(outcome.final_labels));
}

TEST_CASE("manifest without cnn labels fails before any compute") {
  oracle::TempDir tmp("nopc");
  const auto bundle = vsgraph::generate(small_clean_config());
  vsgraph::write_bundle(bundle, tmp / "data");
  // rewrite the manifest without the cnn_labels key
  auto manifest = vsgraph::load_manifest(tmp / "data" / "manifest.json");
  manifest.cnn_labels.reset();
  vsgraph::save_manifest(manifest, tmp / "data" / "manifest.json");

  CHECK_THROWS_AS(vsgraph::run_pipeline(fast_run(tmp / "data" / "manifest.json",
                                                 tmp / "run")),
                  vsgraph::ConfigError);
  CHECK_FALSE(std::filesystem::exists(tmp / "run" / "graph.vsgg"));
}

TEST_CASE("identical config and seed give byte-identical final labels") {
  oracle::TempDir tmp("determinism");
  const auto bundle = vsgraph::generate(small_clean_config());
  vsgraph::write_bundle(bundle, tmp / "data");
  const auto manifest_path = tmp / "data" / "manifest.json";

  const auto first = vsgraph::run_pipeline(fast_run(manifest_path, tmp / "a"));
  const auto second = vsgraph::run_pipeline(fast_run(manifest_path, tmp / "b"));
  CHECK(oracle::file_bytes(first.final_labels) == oracle::file_bytes(second.final_labels));
  CHECK(oracle::file_bytes(first.gnn_labels) == oracle::file_bytes(second.gnn_labels));
}

TEST_CASE("progressive pipeline writes history") {
  oracle::TempDir tmp("prog");
  const auto bundle = vsgraph::generate(small_clean_config());
  vsgraph::write_bundle(bundle, tmp / "data");
  RunConfig run = fast_run(tmp / "data" / "manifest.json", tmp / "run");
  run.progressive_rounds = 2;
  const auto outcome = vsgraph::run_pipeline(run);
  CHECK(std::filesystem::exists(tmp / "run" / "history.jsonl"));
  std::ifstream hist(tmp / "run" / "history.jsonl");
  std::string line;
  std::size_t rounds = 0;
  while (std::getline(hist, line))
    if (!line.empty()) ++rounds;
  CHECK(rounds == 2);
  CHECK(std::filesystem::exists(outcome.final_labels));
}

TEST_CASE("run config JSON round trip with defaults") {
  oracle::TempDir tmp("config");
  {
    std::ofstream out(tmp / "run.json");
    out << R"({"manifest": "data/manifest.json", "output_dir": "out",
               "k": 7, "lambda": 0.25, "train": {"epochs": 123, "seed": 5}})";
  }
  const RunConfig config = vsgraph::run_config_from_json(tmp / "run.json");
  CHECK(config.k == 7);
  CHECK(config.lambda == doctest::Approx(0.25));
  CHECK(config.train.epochs == 123);
  CHECK(config.train.seed == 5);
  // untouched fields keep the reference defaults
  CHECK(config.self_weight == 0.0);
  CHECK(config.anchors_per_class == 10);
  CHECK(config.layers == 1);
  CHECK(config.confidence_threshold == doctest::Approx(0.7));
  CHECK(config.train.learning_rate == doctest::Approx(0.1));
  CHECK(config.train.epochs == 123);
  CHECK(config.train.weight_decay == doctest::Approx(1e-6));
  CHECK(config.manifest == tmp / "data/manifest.json");
}

TEST_CASE("evaluate_predictions covers the three truth flavors") {
  oracle::TempDir tmp("eval");
  vsgraph::Rng rng(61);

  SUBCASE("single-label") {
    const auto pred = oracle::random_stochastic(rng, 40, 6);
    vsgraph::save_matrix(pred, tmp / "p.vsgm");
    vsgraph::LabelVector truth;
    truth.class_count = 6;
    for (std::size_t i = 0; i < 40; ++i)
      truth.entries.push_back(static_cast<std::int32_t>(rng.below(6)));
    vsgraph::save_labels(truth, tmp / "t.csv");
    const auto report = vsgraph::evaluate_predictions(tmp / "p.vsgm", tmp / "t.csv", 3, 0.2);
    REQUIRE(report.top1.has_value());
    REQUIRE(report.top5.has_value());
    CHECK(*report.top1 == doctest::Approx(vsgraph::topk_accuracy(pred, truth, 1)));
    CHECK_FALSE(report.openset_f1.has_value());
  }
  SUBCASE("single-label with open-set sentinel") {
    const auto pred = oracle::random_stochastic(rng, 30, 4);
    vsgraph::save_matrix(pred, tmp / "p.vsgm");
    vsgraph::LabelVector truth;
    truth.class_count = 5;
    for (std::size_t i = 0; i < 30; ++i)
      truth.entries.push_back(static_cast<std::int32_t>(i % 5));  // id 4 = sentinel
    vsgraph::save_labels(truth, tmp / "t.csv");
    const auto report = vsgraph::evaluate_predictions(tmp / "p.vsgm", tmp / "t.csv", 3, 0.2);
    REQUIRE(report.openset_f1.has_value());
    REQUIRE(report.top1.has_value());  // over the 24 closed rows
  }
  SUBCASE("multi-label") {
    const auto pred = oracle::random_stochastic(rng, 25, 5);
    vsgraph::save_matrix(pred, tmp / "p.vsgm");
    vsgraph::MultiLabelMatrix truth;
    truth.rows = 25;
    truth.cols = 5;
    truth.data.assign(125, 0);
    for (std::size_t i = 0; i < 25; ++i) truth.data[i * 5 + rng.below(5)] = 1;
    vsgraph::save_labels(truth, tmp / "t.csv");
    const auto report = vsgraph::evaluate_predictions(tmp / "p.vsgm", tmp / "t.csv", 3, 0.2);
    REQUIRE(report.c_f1.has_value());
    REQUIRE(report.o_f1.has_value());
    REQUIRE(report.map.has_value());
  }
}

TEST_CASE("CLI exit codes and stage composition") {
  oracle::TempDir tmp("cli");

  SUBCASE("synth then pipeline succeeds") {
    CHECK(run_cli("synth --seed 42 --samples 120 --classes 4 --visual-dim 12 "
                  "--text-dim 8 --out " +
                  q(tmp / "data")) == 0);
    CHECK(run_cli("pipeline --manifest " + q(tmp / "data" / "manifest.json") +
                  " --epochs 200 --out " + q(tmp / "run")) == 0);
    CHECK(std::filesystem::exists(tmp / "run" / "final_labels.vsgm"));
    CHECK(run_cli("evaluate --pred " + q(tmp / "run" / "final_labels.vsgm") + " --truth " +
                  q(tmp / "data" / "ground_truth.csv") + " --open-threshold 0.2") == 0);
  }
  SUBCASE("bad k is a usage error") {
    CHECK(run_cli("synth --seed 1 --samples 40 --classes 4 --visual-dim 12 --text-dim 8 "
                  "--out " +
                  q(tmp / "d")) == 0);
    CHECK(run_cli("build-graph --features " + q(tmp / "d" / "features.vsgm") +
                  " --k 0 --out " + q(tmp / "g.vsgg")) == 2);
  }
  SUBCASE("unknown stage is a usage error") {
    CHECK(run_cli("frobnicate") == 2);
  }
  SUBCASE("missing input file is a runtime failure") {
    CHECK(run_cli("build-graph --features " + q(tmp / "absent.vsgm") + " --k 2 --out " +
                  q(tmp / "g.vsgg")) == 1);
  }
  SUBCASE("manifest without cnn labels is a config error") {
    CHECK(run_cli("synth --seed 2 --samples 40 --classes 4 --visual-dim 12 --text-dim 8 "
                  "--out " +
                  q(tmp / "d2")) == 0);
    auto manifest = vsgraph::load_manifest(tmp / "d2" / "manifest.json");
    manifest.cnn_labels.reset();
    vsgraph::save_manifest(manifest, tmp / "d2" / "manifest.json");
    CHECK(run_cli("pipeline --manifest " + q(tmp / "d2" / "manifest.json") + " --out " +
                  q(tmp / "r2")) == 2);
  }
  SUBCASE("final labels are identical across thread counts") {
    const char* cli = std::getenv("VSGRAPH_CLI");
    REQUIRE(cli != nullptr);
    CHECK(run_cli("synth --seed 7 --samples 100 --classes 4 --visual-dim 12 --text-dim 8 "
                  "--out " +
                  q(tmp / "dt")) == 0);
    const std::string base = std::string(cli) + " pipeline --manifest " +
                             q(tmp / "dt" / "manifest.json") + " --epochs 150";
    CHECK(WEXITSTATUS(std::system(
              ("VSGRAPH_THREADS=1 " + base + " --out " + q(tmp / "r1") + " >/dev/null 2>&1")
                  .c_str())) == 0);
    CHECK(WEXITSTATUS(std::system(
              ("VSGRAPH_THREADS=4 " + base + " --out " + q(tmp / "r4") + " >/dev/null 2>&1")
                  .c_str())) == 0);
    CHECK(oracle::file_bytes(tmp / "r1" / "final_labels.vsgm") ==
          oracle::file_bytes(tmp / "r4" / "final_labels.vsgm"));
  }
}

}  // TEST_SUITE
