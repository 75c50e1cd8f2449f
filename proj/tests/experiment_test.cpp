#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "test_support.hpp"
#include "tsnmf/artifacts.hpp"
#include "tsnmf/experiment.hpp"
#include "tsnmf/synthetic.hpp"

namespace tsnmf {
namespace {

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("tsnmf_experiment_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

SyntheticSpec small_spec() {
  SyntheticSpec s;
  s.docs = 60;
  s.terms = 80;
  s.topics = 4;
  s.seed = 7;
  return s;
}

TEST(Synthetic, ShapesLabelsAndNoiseLevel) {
  const auto c = generate_synthetic(small_spec());
  EXPECT_EQ(c.V.rows(), 60u);
  EXPECT_EQ(c.V.cols(), 80u);
  EXPECT_EQ(c.labels.num_labels(), 4u);
  EXPECT_TRUE(is_nonnegative(c.V));
  const auto signal = matmul(c.W_true, c.H_true);
  const double rel = std::sqrt(frobenius_sq(subtract(c.V, signal)) / frobenius_sq(signal));
  EXPECT_NEAR(rel, 0.1, 1e-9);
  for (std::size_t i = 0; i < 60; ++i) {
    EXPECT_GE(c.labels.doc_labels[i].size(), 1u);
    EXPECT_LE(c.labels.doc_labels[i].size(), 3u);
    for (std::size_t r = 0; r < 4; ++r) {
      const bool labelled = std::count(c.labels.doc_labels[i].begin(),
                                       c.labels.doc_labels[i].end(), r) > 0;
      EXPECT_EQ(labelled, c.W_true(i, r) > 0.0);
    }
  }
  EXPECT_EQ(generate_synthetic(small_spec()).V, c.V);
}

TEST(Artifacts, DatasetRoundTrip) {
  const auto dir = scratch_dir("dataset");
  const auto ds = dataset_from_synthetic(generate_synthetic(small_spec()));
  save_dataset(dir, ds);
  const auto back = load_dataset_dir(dir);
  EXPECT_EQ(back.V, ds.V);
  EXPECT_EQ(back.doc_ids, ds.doc_ids);
  EXPECT_EQ(back.vocabulary, ds.vocabulary);
  EXPECT_EQ(back.labels.labels, ds.labels.labels);
  EXPECT_EQ(back.labels.doc_labels, ds.labels.doc_labels);
}

TEST(Artifacts, DatasetShapeMismatchIsRejected) {
  const auto dir = scratch_dir("dataset_bad");
  auto ds = dataset_from_synthetic(generate_synthetic(small_spec()));
  ds.vocabulary.pop_back();
  save_dataset(dir, ds);
  EXPECT_THROW(load_dataset_dir(dir), DimensionError);
}

TEST(Artifacts, ModelRoundTripIsExact) {
  const auto dir = scratch_dir("model");
  const auto ds = dataset_from_synthetic(generate_synthetic(small_spec()));
  FitConfig cfg;
  cfg.topics = 4;
  cfg.seed = 3;
  cfg.max_iter = 20;
  const SupervisedSet sup{1, 5, 9};
  const auto result = fit(ds.V, build_mask(ds.labels, sup, 60, 4), cfg);
  save_model(dir, result, cfg, sup);
  const auto back = load_model(dir);
  EXPECT_EQ(back.model, result.model);
  EXPECT_EQ(back.supervised, sup);
  EXPECT_EQ(back.iterations, result.trace.iterations);
  EXPECT_EQ(back.final_loss, result.trace.final_loss());
  EXPECT_EQ(back.config.seed, 3u);
  EXPECT_EQ(back.config.max_iter, 20u);
  const auto trace = slurp(dir / "trace.csv");
  EXPECT_EQ(trace.rfind("iteration,loss\n", 0), 0u);
}

TEST(Artifacts, ReportFiles) {
  const auto dir = scratch_dir("report");
  const DenseMatrix truth{{1, 0}, {0, 1}};
  const auto r = score_report(DenseMatrix{{1, 0}, {0, 1}}, truth, 0.1, 0.5);
  const std::vector<std::string> names{"a,b", "c"};
  save_report(dir, r, names);
  EXPECT_EQ(slurp(dir / "report.csv"),
            "topic,label,label_name,similarity,resolved\n0,0,\"a,b\",1,1\n1,1,c,1,1\n");
  const auto j = load_json(dir / "report.json");
  EXPECT_EQ(j.at("resolved_count").get<int>(), 2);
  EXPECT_EQ(j.at("topic_coverage").get<double>(), 0.5);
}

TEST(SupervisionSpec, RateAndIds) {
  const std::vector<std::string> ids{"a", "b", "c", "d"};
  const auto by_ids = supervision_spec_from_json(json{{"supervised_ids", {"c", "a", "c"}}});
  EXPECT_EQ(resolve_supervision(by_ids, ids), (SupervisedSet{0, 2}));
  const auto by_rate = supervision_spec_from_json(json{{"rate", 0.5}, {"seed", 4}});
  const auto s = resolve_supervision(by_rate, ids);
  EXPECT_EQ(s.size(), 2u);
  EXPECT_EQ(s, resolve_supervision(by_rate, ids));
  EXPECT_THROW(resolve_supervision(supervision_spec_from_json(json{{"supervised_ids", {"zz"}}}), ids),
               InvalidSupervision);
  EXPECT_THROW(supervision_spec_from_json(json{{"rate", 0.5}, {"supervised_ids", {"a"}}}),
               ParseError);
}

TEST(ExperimentConfig, ParsingAndValidation) {
  const json j = {{"synthetic", {{"docs", 40}, {"terms", 50}, {"topics", 3}}},
                  {"rates", {0.0, 0.5}},
                  {"seeds", {1, 2}},
                  {"output", "out"}};
  const auto c = experiment_config_from_json(j, "/base");
  EXPECT_EQ(c.synthetic->docs, 40u);
  EXPECT_EQ(c.output, fs::path("/base/out"));
  EXPECT_EQ(c.max_iter, 200u);
  json bad = j;
  bad["rates"] = {1.5};
  EXPECT_THROW(experiment_config_from_json(bad), ParseError);
  bad = j;
  bad["corpus"] = "x.jsonl";
  EXPECT_THROW(experiment_config_from_json(bad), ParseError);
  bad = j;
  bad.erase("seeds");
  EXPECT_THROW(experiment_config_from_json(bad), ParseError);
}

ExperimentConfig small_sweep(const fs::path& out) {
  ExperimentConfig c;
  c.synthetic = small_spec();
  c.rates = {0.0, 1.0};
  c.seeds = {1, 2};
  c.max_iter = 50;
  c.output = out;
  return c;
}

TEST(Sweep, RowsCoverageAndArtifacts) {
  const auto dir = scratch_dir("sweep");
  const auto c = small_sweep(dir);
  const auto ds = load_experiment_dataset(c);
  const auto result = run_sweep(c, ds);
  ASSERT_EQ(result.rows.size(), 4u);
  EXPECT_EQ(result.failures(), 0u);
  EXPECT_EQ(result.rows[0].rate, 0.0);
  EXPECT_EQ(result.rows[1].seed, 2u);
  EXPECT_EQ(result.rows[0].coverage, 0.0);
  EXPECT_EQ(result.rows[3].coverage, 1.0);
  EXPECT_TRUE(fs::exists(dir / "cells" / cell_name(1.0, 2) / "model.json"));
  save_sweep(dir, result);
  const auto summary = summarize(result);
  ASSERT_EQ(summary.size(), 2u);
  EXPECT_EQ(summary[1].ok, 2u);
  EXPECT_EQ(summary[1].mean_coverage, 1.0);
  EXPECT_TRUE(fs::exists(dir / "timing.csv"));
}

TEST(Sweep, DeterministicAcrossRunsAndThreadCounts) {
  const auto a = scratch_dir("det_a"), b = scratch_dir("det_b");
  auto ca = small_sweep(a), cb = small_sweep(b);
  cb.jobs = 3;
  const auto ds = load_experiment_dataset(ca);
  save_sweep(a, run_sweep(ca, ds));
  save_sweep(b, run_sweep(cb, ds));
  EXPECT_EQ(slurp(a / "sweep.csv"), slurp(b / "sweep.csv"));
  EXPECT_EQ(slurp(a / "summary.csv"), slurp(b / "summary.csv"));
  const auto cell = cell_name(1.0, 1);
  for (const char* f : {"W.csv", "H.csv", "trace.csv", "model.json"})
    EXPECT_EQ(slurp(a / "cells" / cell / f), slurp(b / "cells" / cell / f)) << f;
}

TEST(Sweep, FailingCellIsRecordedAndSweepContinues) {
  const auto dir = scratch_dir("fail");
  auto c = small_sweep(dir);
  c.topics = 2;  // supervised documents carry labels >= 2
  c.write_cells = false;
  const auto result = run_sweep(c, load_experiment_dataset(c));
  EXPECT_EQ(result.rows[0].status, "ok");
  EXPECT_NE(result.rows[2].status, "ok");
  EXPECT_EQ(result.failures(), 2u);
}

}  // namespace
}  // namespace tsnmf
