#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>

#include "fast/config.hpp"
#include "fast/errors.hpp"
#include "fast/io.hpp"
#include "fast/rng.hpp"
#include "support/synth.hpp"

using namespace fast;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("fast_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("csv ingest without labels") {
  TempDir tmp;
  write_file(tmp.path / "plain.csv", "1.0,2.0\n3.5,4.5\n-1,0\n");
  const auto ds = load_csv((tmp.path / "plain.csv").string());
  CHECK(ds.rows() == 3);
  CHECK(ds.dims() == 2);
  CHECK_FALSE(ds.has_labels());
  CHECK(ds.values(1, 1) == doctest::Approx(4.5));
}

TEST_CASE("csv ingest with a header and label column") {
  TempDir tmp;
  write_file(tmp.path / "labeled.csv", "x,y,label\n1,2,5\n3,4,5\n5,6,9\n");
  const auto ds = load_csv((tmp.path / "labeled.csv").string());
  CHECK(ds.rows() == 3);
  CHECK(ds.dims() == 2);
  REQUIRE(ds.has_labels());
  // labels 5,5,9 remapped to contiguous 0,0,1
  CHECK(ds.labels == std::vector<std::int32_t>{0, 0, 1});
  CHECK(ds.label_count() == 2);
}

TEST_CASE("csv ingest rejects non-finite values with coordinates") {
  TempDir tmp;
  write_file(tmp.path / "bad.csv", "1,2\n3,nan\n");
  try {
    load_csv((tmp.path / "bad.csv").string());
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("row 2") != std::string::npos);
    CHECK(msg.find("column 2") != std::string::npos);
  }
  write_file(tmp.path / "ragged.csv", "1,2\n3\n");
  CHECK_THROWS_AS(load_csv((tmp.path / "ragged.csv").string()), FormatError);
  CHECK_THROWS_AS(load_csv((tmp.path / "missing.csv").string()), IoError);
}

TEST_CASE("rawf32 round-trip is bit-exact") {
  TempDir tmp;
  // values drawn as float so the double -> float narrowing is lossless
  Eigen::MatrixXd values(5, 3);
  Rng rng(1);
  for (int r = 0; r < 5; ++r)
    for (int c = 0; c < 3; ++c) values(r, c) = static_cast<float>(rng.normal());
  std::vector<std::int32_t> labels{0, 1, 1, 0, 2};

  const auto path_a = (tmp.path / "a.rawf32").string();
  const auto path_b = (tmp.path / "b.rawf32").string();
  save_rawf32(DatasetMatrix::create(values, labels), path_a);
  const auto loaded = load_rawf32(path_a);
  CHECK(loaded.values == values);
  CHECK(loaded.labels == labels);
  save_rawf32(loaded, path_b);
  CHECK(read_file(path_a) == read_file(path_b));
  CHECK(checksum_file(path_a) == checksum_file(path_b));
}

TEST_CASE("rawf32 rejects empty and malformed files") {
  TempDir tmp;
  const auto path = (tmp.path / "empty.rawf32").string();
  {
    std::ofstream out(path, std::ios::binary);
    const char magic[4] = {'F', 'C', 'R', 'S'};
    std::uint32_t n = 0, d = 2, reserved = 0;
    out.write(magic, 4);
    out.write(reinterpret_cast<char*>(&n), 4);
    out.write(reinterpret_cast<char*>(&d), 4);
    out.write(reinterpret_cast<char*>(&reserved), 4);
  }
  CHECK_THROWS_AS(load_rawf32(path), InvalidParameterError);

  const auto junk = (tmp.path / "junk.rawf32").string();
  write_file(junk, "not a rawf32 file at all");
  CHECK_THROWS_AS(load_rawf32(junk), FormatError);

  const auto trunc = (tmp.path / "trunc.rawf32").string();
  {
    std::ofstream out(trunc, std::ios::binary);
    const char magic[4] = {'F', 'C', 'R', 'S'};
    std::uint32_t n = 4, d = 2, reserved = 0;
    out.write(magic, 4);
    out.write(reinterpret_cast<char*>(&n), 4);
    out.write(reinterpret_cast<char*>(&d), 4);
    out.write(reinterpret_cast<char*>(&reserved), 4);
    const float one = 1.0f;
    out.write(reinterpret_cast<const char*>(&one), 4);  // 1 of 8 expected
  }
  CHECK_THROWS_AS(load_rawf32(trunc), FormatError);
}

TEST_CASE("load_dataset dispatches by extension and magic") {
  TempDir tmp;
  write_file(tmp.path / "data.csv", "1,2\n3,4\n");
  const auto via_csv = load_dataset((tmp.path / "data.csv").string(), "auto");
  CHECK(via_csv.rows() == 2);

  const Eigen::MatrixXd values = synth::random_matrix(4, 2, 9);
  save_rawf32(DatasetMatrix::create(values), (tmp.path / "data.noext").string());
  const auto via_magic = load_dataset((tmp.path / "data.noext").string(), "auto");
  CHECK(via_magic.rows() == 4);
  CHECK_THROWS_AS(load_dataset((tmp.path / "data.csv").string(), "parquet"),
                  InvalidParameterError);
}

TEST_CASE("config set/snapshot round trip") {
  Config cfg;
  CHECK(cfg.pipeline.penalty.lambda_p == doctest::Approx(0.3));
  CHECK(cfg.pipeline.penalty.alpha == doctest::Approx(1.2));
  CHECK(cfg.pipeline.opt.lambda_match == doctest::Approx(1.0));

  cfg.set("ratio", "0.25");
  cfg.set("metric", "mse");
  cfg.set("graph.knn_scales", "5,9");
  cfg.set("opt.strategy", "uniform");
  cfg.set("stratified", "off");
  CHECK(cfg.pipeline.ratio == doctest::Approx(0.25));
  CHECK(cfg.pipeline.opt.metric == MainMetric::mse);
  CHECK(cfg.pipeline.graph.knn_scales == std::vector<int>{5, 9});
  CHECK(cfg.pipeline.opt.strategy == FreqStrategy::uniform);
  CHECK(cfg.pipeline.stratified == 0);

  const std::string snap = cfg.snapshot();
  CHECK(snap.find("ratio=0.25") != std::string::npos);
  CHECK(snap.find("metric=mse") != std::string::npos);
  CHECK(snap.find("graph.knn_scales=5,9") != std::string::npos);

  // snapshot -> set round trip preserves the snapshot
  Config other;
  std::istringstream lines(snap);
  std::string line;
  while (std::getline(lines, line)) {
    const auto eq = line.find('=');
    other.set(line.substr(0, eq), line.substr(eq + 1));
  }
  CHECK(other.snapshot() == snap);
}

TEST_CASE("config rejects unknown keys and bad values") {
  Config cfg;
  CHECK_THROWS_AS(cfg.set("not.a.key", "1"), InvalidParameterError);
  CHECK_THROWS_AS(cfg.set("ratio", "2.0"), InvalidParameterError);
  CHECK_THROWS_AS(cfg.set("ratio", "abc"), InvalidParameterError);
  CHECK_THROWS_AS(cfg.set("opt.batch_k", "0"), InvalidParameterError);
  CHECK_THROWS_AS(cfg.set("metric", "kl"), InvalidParameterError);
  CHECK_THROWS_AS(cfg.set("eval.strategies", "maybe"), InvalidParameterError);
}

TEST_CASE("config file loading with comments") {
  TempDir tmp;
  write_file(tmp.path / "run.cfg",
             "# benchmark settings\n"
             "ratio = 0.05\n"
             "seed=9\n"
             "\n"
             "opt.total_iters=250  # short run\n");
  Config cfg;
  cfg.load_file((tmp.path / "run.cfg").string());
  CHECK(cfg.pipeline.ratio == doctest::Approx(0.05));
  CHECK(cfg.pipeline.seed == 9);
  CHECK(cfg.pipeline.opt.total_iters == 250);

  write_file(tmp.path / "bad.cfg", "this line has no equals\n");
  Config bad;
  CHECK_THROWS_AS(bad.load_file((tmp.path / "bad.cfg").string()), FormatError);
  CHECK_THROWS_AS(bad.load_file((tmp.path / "nope.cfg").string()), IoError);
}
