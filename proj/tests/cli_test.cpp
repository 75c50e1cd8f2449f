#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "tsnmf/artifacts.hpp"

namespace tsnmf {
namespace {

const fs::path kData = TSNMF_TEST_DATA;

struct Run {
  int code;
  std::string out;
};

Run run(const std::string& args) {
  const auto log = fs::temp_directory_path() / "tsnmf_cli_test.log";
  const std::string cmd = std::string("\"") + TSNMF_CLI_PATH + "\" " + args + " > \"" +
                          log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  std::ifstream is(log);
  std::ostringstream ss;
  ss << is.rdbuf();
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("tsnmf_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

void write_text(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

class CliPipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = scratch("pipeline");
    const auto r = run("ingest --corpus " + q(kData / "corpus.jsonl") + " --out " + q(dir_ / "ds"));
    ASSERT_EQ(r.code, 0) << r.out;
  }
  static fs::path dir_;
};
fs::path CliPipeline::dir_;

TEST_F(CliPipeline, IngestWritesDataset) {
  const auto ds = load_dataset_dir(dir_ / "ds");
  EXPECT_EQ(ds.V.rows(), 41u);
  EXPECT_EQ(ds.stats.dropped_short, 2u);
  EXPECT_EQ(ds.labels.labels, (std::vector<std::string>{"grain", "money", "oil", "ship"}));
  for (std::size_t i = 0; i < ds.V.rows(); ++i) {
    double s = 0;
    for (double x : ds.V.row(i)) s += x * x;
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST_F(CliPipeline, FitIsDeterministicAndTraceMonotone) {
  const std::string base = "fit --data " + q(dir_ / "ds") + " --rate 0.3 --seed 5 --out ";
  ASSERT_EQ(run(base + q(dir_ / "m1")).code, 0);
  ASSERT_EQ(run(base + q(dir_ / "m2")).code, 0);
  for (const char* f : {"W.csv", "H.csv", "trace.csv", "model.json"})
    EXPECT_EQ(slurp(dir_ / "m1" / f), slurp(dir_ / "m2" / f)) << f;
  std::istringstream trace(slurp(dir_ / "m1" / "trace.csv"));
  std::string line;
  std::getline(trace, line);
  EXPECT_EQ(line, "iteration,loss");
  double prev = std::numeric_limits<double>::infinity();
  std::size_t count = 0;
  while (std::getline(trace, line)) {
    const double loss = std::stod(line.substr(line.find(',') + 1));
    EXPECT_LE(loss, prev * (1 + 1e-10));
    prev = loss;
    ++count;
  }
  const auto saved = load_model(dir_ / "m1");
  EXPECT_EQ(count, saved.iterations + 1);
  EXPECT_EQ(saved.supervised.size(), 12u);
}

TEST_F(CliPipeline, FitFromSupervisionFileAndMaskExport) {
  write_text(dir_ / "sup.json", R"({"supervised_ids": ["d00", "d03"]})");
  const auto r = run("fit --data " + q(dir_ / "ds") + " --supervision " + q(dir_ / "sup.json") +
                     " --weighted --out " + q(dir_ / "ms") + " --export-mask " +
                     q(dir_ / "mask.csv"));
  ASSERT_EQ(r.code, 0) << r.out;
  const auto saved = load_model(dir_ / "ms");
  EXPECT_EQ(saved.supervised, (SupervisedSet{0, 3}));
  EXPECT_TRUE(saved.config.weighted);
  const auto mask = load_csv((dir_ / "mask.csv").string());
  for (std::size_t i = 0; i < mask.rows(); ++i)
    for (std::size_t r2 = 0; r2 < mask.cols(); ++r2)
      if (mask(i, r2) == 0.0) {
        EXPECT_EQ(saved.model.W(i, r2), 0.0);
      }
}

TEST_F(CliPipeline, FitRejectsBadSupervision) {
  write_text(dir_ / "bad.json", R"({"supervised_ids": ["nope"]})");
  EXPECT_EQ(run("fit --data " + q(dir_ / "ds") + " --supervision " + q(dir_ / "bad.json") +
                " --out " + q(dir_ / "mb")).code,
            2);
  EXPECT_EQ(run("fit --data " + q(dir_ / "ds") + " --rate 1.0 --topics 2 --out " +
                q(dir_ / "mb")).code,
            2);
  EXPECT_EQ(run("fit --data " + q(dir_ / "ds") + " --rate 1.5 --out " + q(dir_ / "mb")).code, 2);
}

TEST_F(CliPipeline, EvaluateThresholdMonotone) {
  ASSERT_EQ(run("fit --data " + q(dir_ / "ds") + " --rate 0.5 --seed 1 --out " + q(dir_ / "me"))
                .code,
            0);
  std::size_t prev = 100;
  for (const char* tau : {"0", "0.1", "0.3", "0.6", "1"}) {
    const auto out = dir_ / (std::string("report_") + tau);
    const auto r = run("evaluate --data " + q(dir_ / "ds") + " --model " + q(dir_ / "me") +
                       " --threshold " + tau + " --out " + q(out));
    ASSERT_EQ(r.code, 0) << r.out;
    const auto j = load_json(out / "report.json");
    const auto resolved = j.at("resolved_count").get<std::size_t>();
    EXPECT_LE(resolved, prev);
    prev = resolved;
    EXPECT_EQ(j.at("pairs").size(), 4u);
  }
  EXPECT_EQ(prev, 0u);
}

TEST_F(CliPipeline, EvaluateShapeMismatch) {
  const auto other = dir_ / "other";
  ASSERT_EQ(run("synth --docs 30 --terms 40 --topics 4 --out " + q(other)).code, 0);
  ASSERT_EQ(run("fit --data " + q(other) + " --out " + q(dir_ / "mo")).code, 0);
  EXPECT_EQ(run("evaluate --data " + q(dir_ / "ds") + " --model " + q(dir_ / "mo") + " --out " +
                q(dir_ / "ro")).code,
            2);
}

TEST_F(CliPipeline, TopTerms) {
  ASSERT_EQ(run("fit --data " + q(dir_ / "ds") + " --rate 0.5 --out " + q(dir_ / "mt")).code, 0);
  const auto csv = dir_ / "top.csv";
  const auto r = run("top-terms --data " + q(dir_ / "ds") + " --model " + q(dir_ / "mt") +
                     " --out " + q(csv));
  ASSERT_EQ(r.code, 0) << r.out;
  std::istringstream is(slurp(csv));
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "topic,term_1,term_2,term_3");
  std::size_t rows = 0;
  while (std::getline(is, line)) {
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 3);
    ++rows;
  }
  EXPECT_EQ(rows, 4u);
}

TEST(Cli, IngestMissingTextNamesLine) {
  const auto dir = scratch("missing");
  write_text(dir / "c.jsonl", "{\"id\":\"a\",\"text\":\"x\",\"labels\":[]}\n{\"id\":\"b\",\"labels\":[]}\n");
  const auto r = run("ingest --corpus " + q(dir / "c.jsonl") + " --out " + q(dir / "ds"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("line 2"), std::string::npos) << r.out;
}

TEST(Cli, IngestEverythingFilteredIsEmptyData) {
  const auto dir = scratch("empty");
  write_text(dir / "c.jsonl", "{\"id\":\"a\",\"text\":\"short\",\"labels\":[\"x\"]}\n");
  EXPECT_EQ(run("ingest --corpus " + q(dir / "c.jsonl") + " --out " + q(dir / "ds")).code, 3);
}

TEST(Cli, IngestCustomStopwords) {
  const auto dir = scratch("stop");
  write_text(dir / "stop.txt", "# custom\nwheat\ncorn\n");
  ASSERT_EQ(run("ingest --corpus " + q(kData / "corpus.jsonl") + " --stopwords " +
                q(dir / "stop.txt") + " --out " + q(dir / "ds")).code,
            0);
  const auto ds = load_dataset_dir(dir / "ds");
  EXPECT_EQ(std::count(ds.vocabulary.begin(), ds.vocabulary.end(), "wheat"), 0);
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("fit --rate 0.2").code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
}

TEST(Cli, SweepWritesDeterministicCsvs) {
  const auto dir = scratch("sweep");
  write_text(dir / "config.json", R"({
  "synthetic": {"docs": 40, "terms": 60, "topics": 3, "seed": 2},
  "rates": [0, 0.5],
  "seeds": [1, 2],
  "max_iter": 40,
  "output": "out"
})");
  ASSERT_EQ(run("sweep --config " + q(dir / "config.json")).code, 0);
  ASSERT_EQ(run("sweep --config " + q(dir / "config.json") + " --out " + q(dir / "again") +
                " --jobs 2").code,
            0);
  EXPECT_EQ(slurp(dir / "out" / "sweep.csv"), slurp(dir / "again" / "sweep.csv"));
  EXPECT_EQ(slurp(dir / "out" / "summary.csv"), slurp(dir / "again" / "summary.csv"));
  EXPECT_TRUE(fs::exists(dir / "out" / "timing.csv"));
}

}  // namespace
}  // namespace tsnmf
