#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "oracles.hpp"
#include "vsgraph/metrics.hpp"

using vsgraph::DenseMatrix;
using vsgraph::LabelVector;
using vsgraph::MacroF1Mode;
using vsgraph::MultiLabelMatrix;

namespace {

LabelVector labels_of(std::vector<std::int32_t> entries, std::int32_t classes) {
  LabelVector lv;
  lv.entries = std::move(entries);
  lv.class_count = classes;
  return lv;
}

// The 4 samples x 3 classes fixture used by the F1 and mAP checks.
//   truth:  s0 {0,1}; s1 {1}; s2 {2}; s3 {0,2}
//   scores: s0 (.9,.8,.1); s1 (.2,.7,.6); s2 (.3,.1,.8); s3 (.5,.4,.45)
// At K=2 the confusion counts are: class0 TP2 FP1 FN0, class1 TP2 FP0 FN0,
// class2 TP2 FP1 FN0.
DenseMatrix fixture_scores() {
  return DenseMatrix(4, 3, {0.9, 0.8, 0.1, 0.2, 0.7, 0.6, 0.3, 0.1, 0.8, 0.5, 0.4, 0.45});
}

MultiLabelMatrix fixture_truth() {
  MultiLabelMatrix truth;
  truth.rows = 4;
  truth.cols = 3;
  truth.data = {1, 1, 0, 0, 1, 0, 0, 0, 1, 1, 0, 1};
  return truth;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("topk accuracy basics") {
  DenseMatrix p(1, 3, {0.1, 0.7, 0.2});
  CHECK(vsgraph::topk_accuracy(p, labels_of({1}, 3), 1) == 1.0);
  CHECK(vsgraph::topk_accuracy(p, labels_of({2}, 3), 1) == 0.0);
  CHECK(vsgraph::topk_accuracy(p, labels_of({2}, 3), 2) == 1.0);
  CHECK_THROWS_AS(vsgraph::topk_accuracy(p, labels_of({1}, 3), 4), vsgraph::ArgumentError);
  CHECK_THROWS_AS(vsgraph::topk_accuracy(p, labels_of({1, 0}, 3), 1), vsgraph::ShapeError);
}

TEST_CASE("topk matches a sort-based oracle and is monotone in k") {
  vsgraph::Rng rng(91);
  const std::size_t n = 50, classes = 8;
  const DenseMatrix p = oracle::random_stochastic(rng, n, classes);
  LabelVector truth;
  truth.class_count = classes;
  for (std::size_t i = 0; i < n; ++i)
    truth.entries.push_back(static_cast<std::int32_t>(rng.below(classes)));

  double previous = 0.0;
  for (std::size_t k = 1; k <= classes; ++k) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<std::size_t> order(classes);
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return p(i, a) > p(i, b); });
      for (std::size_t r = 0; r < k; ++r)
        if (order[r] == static_cast<std::size_t>(truth.entries[i])) {
          ++hits;
          break;
        }
    }
    const double acc = vsgraph::topk_accuracy(p, truth, k);
    CHECK(acc == doctest::Approx(static_cast<double>(hits) / n).epsilon(1e-12));
    CHECK(acc >= previous);
    previous = acc;
  }
  CHECK(previous == 1.0);  // k = class_count finds every label
}

TEST_CASE("multilabel F1 on the hand-enumerated fixture") {
  const auto [c_f1, o_f1] = vsgraph::multilabel_f1(fixture_scores(), fixture_truth(), 2);
  // mean of per-class F1: (0.8 + 1.0 + 0.8) / 3
  CHECK(c_f1 == doctest::Approx(13.0 / 15.0).epsilon(1e-9));
  // micro: TP 6, FP 2, FN 0 -> P = 3/4, R = 1
  CHECK(o_f1 == doctest::Approx(6.0 / 7.0).epsilon(1e-9));

  const auto [harmonic, same_o] = vsgraph::multilabel_f1(
      fixture_scores(), fixture_truth(), 2, MacroF1Mode::HarmonicOfMacros);
  // macro P = 7/9, macro R = 1 -> harmonic mean 7/8
  CHECK(harmonic == doctest::Approx(0.875).epsilon(1e-9));
  CHECK(same_o == doctest::Approx(6.0 / 7.0).epsilon(1e-9));
}

TEST_CASE("multilabel F1 extremes") {
  SUBCASE("perfect top-K prediction with exactly K true labels per sample") {
    DenseMatrix p(2, 4, {0.9, 0.8, 0.1, 0.0, 0.0, 0.1, 0.8, 0.9});
    MultiLabelMatrix truth;
    truth.rows = 2;
    truth.cols = 4;
    truth.data = {1, 1, 0, 0, 0, 0, 1, 1};
    const auto [c_f1, o_f1] = vsgraph::multilabel_f1(p, truth, 2);
    CHECK(c_f1 == doctest::Approx(1.0));
    CHECK(o_f1 == doctest::Approx(1.0));
  }
  SUBCASE("disjoint predictions score zero") {
    DenseMatrix p(2, 4, {0.9, 0.8, 0.1, 0.0, 0.9, 0.8, 0.1, 0.0});
    MultiLabelMatrix truth;
    truth.rows = 2;
    truth.cols = 4;
    truth.data = {0, 0, 1, 1, 0, 0, 1, 1};
    const auto [c_f1, o_f1] = vsgraph::multilabel_f1(p, truth, 2);
    CHECK(c_f1 == 0.0);
    CHECK(o_f1 == 0.0);
  }
}

TEST_CASE("mean average precision") {
  SUBCASE("single class with positives at ranks 1 and 3") {
    DenseMatrix p(3, 1, {0.9, 0.8, 0.1});
    MultiLabelMatrix truth;
    truth.rows = 3;
    truth.cols = 1;
    truth.data = {1, 0, 1};
    CHECK(vsgraph::mean_average_precision(p, truth) ==
          doctest::Approx((1.0 + 2.0 / 3.0) / 2.0).epsilon(1e-9));
  }
  SUBCASE("all samples positive") {
    DenseMatrix p(4, 1, {0.4, 0.3, 0.2, 0.1});
    MultiLabelMatrix truth;
    truth.rows = 4;
    truth.cols = 1;
    truth.data = {1, 1, 1, 1};
    CHECK(vsgraph::mean_average_precision(p, truth) == doctest::Approx(1.0));
  }
  SUBCASE("single positive ranked last of four") {
    DenseMatrix p(4, 1, {0.9, 0.8, 0.7, 0.1});
    MultiLabelMatrix truth;
    truth.rows = 4;
    truth.cols = 1;
    truth.data = {0, 0, 0, 1};
    CHECK(vsgraph::mean_average_precision(p, truth) == doctest::Approx(0.25).epsilon(1e-9));
  }
  SUBCASE("fixture value") {
    // class APs: 1, 1, (1 + 2/3)/2 -> mAP = 17/18
    CHECK(vsgraph::mean_average_precision(fixture_scores(), fixture_truth()) ==
          doctest::Approx(17.0 / 18.0).epsilon(1e-9));
  }
  SUBCASE("class without positives is skipped with a warning") {
    DenseMatrix p(2, 2, {0.9, 0.1, 0.2, 0.8});
    MultiLabelMatrix truth;
    truth.rows = 2;
    truth.cols = 2;
    truth.data = {1, 0, 1, 0};
    std::vector<std::string> warnings;
    CHECK(vsgraph::mean_average_precision(p, truth, &warnings) == doctest::Approx(1.0));
    CHECK(warnings.size() == 1);
  }
  SUBCASE("reversed and perfect rankings bracket everything else") {
    vsgraph::Rng rng(92);
    MultiLabelMatrix truth;
    truth.rows = 20;
    truth.cols = 1;
    truth.data.assign(20, 0);
    for (std::size_t i = 0; i < 20; ++i) truth.data[i] = rng.uniform() < 0.3 ? 1 : 0;
    truth.data[3] = 1;  // at least one positive
    DenseMatrix perfect(20, 1), reversed(20, 1), shuffled(20, 1);
    for (std::size_t i = 0; i < 20; ++i) {
      perfect(i, 0) = truth.data[i] ? 1.0 : 0.0;
      reversed(i, 0) = truth.data[i] ? 0.0 : 1.0;
      shuffled(i, 0) = rng.uniform();
    }
    const double hi = vsgraph::mean_average_precision(perfect, truth);
    const double lo = vsgraph::mean_average_precision(reversed, truth);
    const double mid = vsgraph::mean_average_precision(shuffled, truth);
    CHECK(hi == doctest::Approx(1.0));
    CHECK(lo <= mid);
    CHECK(mid <= hi);
  }
}

TEST_CASE("open-set precision, recall, F1") {
  SUBCASE("single closed class, clean separation") {
    DenseMatrix p(2, 1, {0.9, 0.1});
    // sample 0 is class 0, sample 1 is open (sentinel 1)
    const auto r = vsgraph::openset_prf(p, labels_of({0, 1}, 2), 0.2);
    CHECK(r.precision == doctest::Approx(1.0));
    CHECK(r.recall == doctest::Approx(1.0));
    CHECK(r.f1 == doctest::Approx(1.0));
  }
  SUBCASE("accepted open sample counts as a false positive") {
    DenseMatrix p(2, 1, {0.9, 0.9});
    const auto r = vsgraph::openset_prf(p, labels_of({0, 1}, 2), 0.2);
    CHECK(r.precision == doctest::Approx(0.5));
    CHECK(r.recall == doctest::Approx(1.0));
  }
  SUBCASE("six-sample two-class fixture with hand-enumerated counts") {
    // s0 (t0): accept -> TP0;          s1 (t0): max .15 < .2 -> reject (FN0)
    // s2 (t1): accept -> TP1;          s3 (t1): accepted as 0 -> FP0
    // s4 (open): accepted as 0 -> FP0; s5 (open): rejected
    DenseMatrix p(6, 2,
                  {0.9, 0.05, 0.15, 0.1, 0.1, 0.85, 0.6, 0.3, 0.7, 0.2, 0.12, 0.18});
    const auto r = vsgraph::openset_prf(p, labels_of({0, 0, 1, 1, 2, 2}, 3), 0.2);
    // class0: P = 1/3, R = 1/2; class1: P = 1, R = 1/2
    CHECK(r.precision == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
    CHECK(r.recall == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(r.f1 == doctest::Approx(4.0 / 7.0).epsilon(1e-9));

    const auto per_class = vsgraph::openset_prf(p, labels_of({0, 0, 1, 1, 2, 2}, 3), 0.2,
                                                MacroF1Mode::MeanOfClassF1);
    // class0 F1 = 2*(1/3)*(1/2)/(5/6) = 2/5; class1 F1 = 2/3
    CHECK(per_class.f1 == doctest::Approx((0.4 + 2.0 / 3.0) / 2.0).epsilon(1e-9));
  }
  SUBCASE("acceptance is strictly beyond the threshold") {
    DenseMatrix p(2, 1, {0.2, 0.21});
    const auto r = vsgraph::openset_prf(p, labels_of({0, 0}, 1), 0.2);
    CHECK(r.recall == doctest::Approx(0.5));  // only the .21 row is accepted
  }
  SUBCASE("no closed truth is an error") {
    DenseMatrix p(1, 2, {0.9, 0.1});
    CHECK_THROWS_AS(vsgraph::openset_prf(p, labels_of({2}, 3), 0.2),
                    vsgraph::ValidationError);
  }
}

TEST_CASE("O-F1 and C-F1 coincide when per-class confusion counts match") {
  // every class has TP 1, FP 1, FN 1 at K=1
  DenseMatrix p(4, 2, {0.9, 0.1, 0.1, 0.9, 0.1, 0.9, 0.9, 0.1});
  MultiLabelMatrix truth;
  truth.rows = 4;
  truth.cols = 2;
  truth.data = {1, 0, 0, 1, 1, 0, 0, 1};  // s2 and s3 are predicted wrong
  const auto [c_f1, o_f1] = vsgraph::multilabel_f1(p, truth, 1);
  CHECK(c_f1 == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(c_f1 == doctest::Approx(o_f1).epsilon(1e-12));
}

TEST_CASE("rank metrics are invariant under monotone score transforms") {
  vsgraph::Rng rng(93);
  const std::size_t n = 40, classes = 5;
  const DenseMatrix p = oracle::random_stochastic(rng, n, classes);
  DenseMatrix cubed(n, classes);
  for (std::size_t i = 0; i < p.size(); ++i)
    cubed.data()[i] = p.data()[i] * p.data()[i] * p.data()[i];

  LabelVector truth;
  truth.class_count = classes;
  MultiLabelMatrix multi;
  multi.rows = n;
  multi.cols = classes;
  multi.data.assign(n * classes, 0);
  for (std::size_t i = 0; i < n; ++i) {
    truth.entries.push_back(static_cast<std::int32_t>(rng.below(classes)));
    multi.data[i * classes + static_cast<std::size_t>(truth.entries[i])] = 1;
    if (rng.uniform() < 0.4) multi.data[i * classes + rng.below(classes)] = 1;
  }

  for (std::size_t k : {1, 2, 3})
    CHECK(vsgraph::topk_accuracy(p, truth, k) == vsgraph::topk_accuracy(cubed, truth, k));
  const auto [c1, o1] = vsgraph::multilabel_f1(p, multi, 3);
  const auto [c2, o2] = vsgraph::multilabel_f1(cubed, multi, 3);
  CHECK(c1 == c2);
  CHECK(o1 == o2);
  CHECK(vsgraph::mean_average_precision(p, multi) ==
        vsgraph::mean_average_precision(cubed, multi));
}

TEST_CASE("report serialization carries the computed sections") {
  vsgraph::EvalReport report;
  report.top1 = 0.5;
  report.sample_count = 10;
  report.class_count = 2;
  const std::string json = report.to_json();
  CHECK(json.find("top1") != std::string::npos);
  CHECK(json.find("map") == std::string::npos);
  const std::string table = report.to_table();
  CHECK(table.find("Top-1") != std::string::npos);
}

}  // TEST_SUITE
