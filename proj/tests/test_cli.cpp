// End-to-end tests of the command-line tool: artifact layout, determinism,
// stage reuse and the evaluation report. The binary path comes from the
// FAST_CLI_BIN environment variable (set by ctest).

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "fast/io.hpp"
#include "support/synth.hpp"

namespace fs = std::filesystem;

namespace {

std::string cli_bin() {
  const char* env = std::getenv("FAST_CLI_BIN");
  REQUIRE_MESSAGE(env != nullptr, "FAST_CLI_BIN must point at the fast binary");
  return env;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("fast_cli_" + std::to_string(::getpid()) + "_" +
            std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

int run(const std::string& args) {
  const std::string cmd = cli_bin() + " " + args + " >/dev/null 2>&1";
  return std::system(cmd.c_str());
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

std::map<std::string, std::string> read_kv(const fs::path& p) {
  std::map<std::string, std::string> out;
  std::ifstream in(p);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) out[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return out;
}

fs::path write_gmm_csv(const fs::path& dir, Eigen::Index n, bool labeled) {
  std::vector<std::int32_t> labels;
  const Eigen::MatrixXd points = synth::gmm3(n, 42, &labels);
  const fs::path path = dir / (labeled ? "data_labeled.csv" : "data.csv");
  std::ofstream out(path);
  if (labeled) out << "x,y,label\n";
  out.precision(17);
  for (Eigen::Index i = 0; i < n; ++i) {
    out << points(i, 0) << "," << points(i, 1);
    if (labeled) out << "," << labels[static_cast<std::size_t>(i)];
    out << "\n";
  }
  return path;
}

const std::string kFastOpts =
    " --set embed_dim=4 --set afl.n_mc=64 --set afl.n_opt=5 --set afl.n_lib=60"
    " --set afl.pilot_samples=256 --set opt.total_iters=40 --set align.rff_dim=64";

}  // namespace

TEST_CASE("select writes the full artifact set with valid contents") {
  TempDir tmp;
  const auto input = write_gmm_csv(tmp.path, 120, false);
  const auto out_dir = tmp.path / "run";
  REQUIRE(run("select --input " + input.string() + " --ratio 0.1 --seed 5 --out-dir " +
              out_dir.string() + kFastOpts) == 0);

  REQUIRE(fs::exists(out_dir / "indices.txt"));
  REQUIRE(fs::exists(out_dir / "manifest.txt"));
  REQUIRE(fs::exists(out_dir / "loss_trace.csv"));
  REQUIRE(fs::exists(out_dir / "frequency_library.txt"));

  // indices: sorted, distinct, in range, count = round(0.1 * 120)
  std::ifstream in(out_dir / "indices.txt");
  std::vector<long> indices;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) indices.push_back(std::stol(line));
  REQUIRE(indices.size() == 12);
  for (std::size_t i = 1; i < indices.size(); ++i) CHECK(indices[i] > indices[i - 1]);
  CHECK(indices.front() >= 0);
  CHECK(indices.back() < 120);

  const auto manifest = read_kv(out_dir / "manifest.txt");
  CHECK(manifest.count("run_id") == 1);
  CHECK(manifest.at("n_selected") == "12");
  CHECK(manifest.at("config.ratio").substr(0, 3) == "0.1");
  CHECK(manifest.at("config.seed") == "5");
  CHECK(manifest.count("input_checksum") == 1);
  CHECK(manifest.at("artifact.indices") == "indices.txt");

  // timing fields are positive and account for the wall-clock total
  const double total = std::stod(manifest.at("timing.total_s"));
  double sum = 0.0;
  for (const char* key : {"timing.graph_s", "timing.embed_s", "timing.afl_s",
                          "timing.optimize_s", "timing.extract_s", "timing.io_s"}) {
    const double v = std::stod(manifest.at(key));
    CHECK(v > 0.0);
    sum += v;
  }
  CHECK(std::abs(sum - total) <= 0.1 * total);

  // loss trace has the documented header and one row per iteration
  std::ifstream trace(out_dir / "loss_trace.csv");
  std::getline(trace, line);
  CHECK(line == "iteration,main,div,match,graph,total,tau");
  int rows = 0;
  while (std::getline(trace, line))
    if (!line.empty()) ++rows;
  CHECK(rows > 0);
  CHECK(rows <= 40);
}

TEST_CASE("select is byte-identical across runs with the same seed") {
  TempDir tmp;
  const auto input = write_gmm_csv(tmp.path, 100, false);
  const auto dir_a = tmp.path / "a";
  const auto dir_b = tmp.path / "b";
  const std::string common = "select --input " + input.string() + " --ratio 0.1 --seed 11" +
                             kFastOpts + " --out-dir ";
  REQUIRE(run(common + dir_a.string()) == 0);
  REQUIRE(run(common + dir_b.string()) == 0);
  CHECK(read_file(dir_a / "indices.txt") == read_file(dir_b / "indices.txt"));
  CHECK(read_file(dir_a / "loss_trace.csv") == read_file(dir_b / "loss_trace.csv"));
  CHECK(read_file(dir_a / "frequency_library.txt") ==
        read_file(dir_b / "frequency_library.txt"));
  CHECK(read_kv(dir_a / "manifest.txt").at("run_id") ==
        read_kv(dir_b / "manifest.txt").at("run_id"));

  // a different seed changes the selection
  const auto dir_c = tmp.path / "c";
  REQUIRE(run("select --input " + input.string() + " --ratio 0.1 --seed 12" + kFastOpts +
              " --out-dir " + dir_c.string()) == 0);
  CHECK(read_file(dir_a / "indices.txt") != read_file(dir_c / "indices.txt"));
}

TEST_CASE("ratio 1.0 lists every row") {
  TempDir tmp;
  const auto input = write_gmm_csv(tmp.path, 50, false);
  const auto out_dir = tmp.path / "all";
  REQUIRE(run("select --input " + input.string() + " --ratio 1.0 --seed 1 --out-dir " +
              out_dir.string() + kFastOpts) == 0);
  std::istringstream in(read_file(out_dir / "indices.txt"));
  std::string line;
  long expect = 0;
  while (std::getline(in, line))
    if (!line.empty()) CHECK(std::stol(line) == expect++);
  CHECK(expect == 50);
}

TEST_CASE("graph command emits reusable stage artifacts") {
  TempDir tmp;
  const auto input = write_gmm_csv(tmp.path, 90, false);
  const auto stage = tmp.path / "stage";
  REQUIRE(run("graph --input " + input.string() + " --out-dir " + stage.string() + kFastOpts) ==
          0);
  REQUIRE(fs::exists(stage / "edges.txt"));
  REQUIRE(fs::exists(stage / "eigenvalues.txt"));
  REQUIRE(fs::exists(stage / "embedding.rawf32"));

  // edge list is emitted once per pair with i < j
  std::ifstream edges(stage / "edges.txt");
  long i, j;
  double w;
  int count = 0;
  while (edges >> i >> j >> w) {
    CHECK(i < j);
    CHECK(w > 0.0);
    CHECK(w <= 1.0);
    ++count;
  }
  CHECK(count > 0);

  // full spectrum: ascending, exactly one zero for the connected graph
  std::ifstream evals(stage / "eigenvalues.txt");
  double prev = -1.0, v;
  int zeros = 0, n_evals = 0;
  while (evals >> v) {
    CHECK(v >= prev);
    CHECK(v >= -1e-8);
    if (v <= 1e-8) ++zeros;
    prev = v;
    ++n_evals;
  }
  CHECK(n_evals == 90);
  CHECK(zeros == 1);

  // select with the reused embedding reproduces the plain run bit-exactly
  const auto dir_plain = tmp.path / "plain";
  const auto dir_reuse = tmp.path / "reuse";
  const std::string common =
      "select --input " + input.string() + " --ratio 0.1 --seed 3" + kFastOpts;
  REQUIRE(run(common + " --out-dir " + dir_plain.string()) == 0);
  REQUIRE(run(common + " --embedding " + (stage / "embedding.rawf32").string() + " --out-dir " +
              dir_reuse.string()) == 0);
  CHECK(read_file(dir_plain / "indices.txt") == read_file(dir_reuse / "indices.txt"));
}

TEST_CASE("graph command on a 2-node dataset emits the closed-form spectrum") {
  TempDir tmp;
  // N=2 cannot host a kNN scale >= 2: the graph is the single MST edge with
  // Laplacian eigenvalues {0, 2}
  std::ofstream out(tmp.path / "two.csv");
  out << "0.0\n1.0\n";
  out.close();
  const auto stage = tmp.path / "stage2";
  REQUIRE(run("graph --input " + (tmp.path / "two.csv").string() + " --out-dir " +
              stage.string() + " --set embed_dim=1") == 0);
  std::ifstream evals(stage / "eigenvalues.txt");
  double first, second;
  REQUIRE((evals >> first >> second));
  CHECK(std::abs(first) <= 1e-10);
  CHECK(std::abs(second - 2.0) <= 1e-10);
}

TEST_CASE("stratified select balances classes and eval reports statistics") {
  TempDir tmp;
  const auto input = write_gmm_csv(tmp.path, 150, true);
  const auto out_dir = tmp.path / "strat";
  REQUIRE(run("select --input " + input.string() + " --ratio 0.2 --seed 7 --out-dir " +
              out_dir.string() + kFastOpts + " --set eval.n_random=6 --set eval.strategies=off" +
              " --set opt.total_iters=30") == 0);

  const auto manifest = read_kv(out_dir / "manifest.txt");
  CHECK(manifest.at("stratified") == "on");
  CHECK(manifest.count("class.0.selected") == 1);
  CHECK(manifest.count("class.1.selected") == 1);
  CHECK(manifest.count("class.2.selected") == 1);
  REQUIRE(fs::exists(out_dir / "loss_trace_class0.csv"));
  REQUIRE(fs::exists(out_dir / "frequency_library_class2.txt"));

  REQUIRE(run("eval --run-dir " + out_dir.string()) == 0);
  REQUIRE(fs::exists(out_dir / "eval_report.txt"));
  REQUIRE(fs::exists(out_dir / "eval_report.csv"));
  const auto report = read_kv(out_dir / "eval_report.txt");
  CHECK(report.count("ecfd_fast") == 1);
  CHECK(report.count("ecfd_random_median") == 1);
  CHECK(report.at("n_random") == "6");
  CHECK(report.count("moment_err_fast.3") == 1);

  // per-seed baseline values are recorded
  std::istringstream csv(read_file(out_dir / "eval_report.csv"));
  std::string line;
  std::getline(csv, line);
  CHECK(line == "baseline_seed,ecfd_random");
  int rows = 0;
  while (std::getline(csv, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 6);
}

TEST_CASE("eval on a full-ratio run reports zero discrepancy") {
  TempDir tmp;
  const auto input = write_gmm_csv(tmp.path, 60, false);
  const auto out_dir = tmp.path / "full";
  REQUIRE(run("select --input " + input.string() + " --ratio 1.0 --seed 2 --out-dir " +
              out_dir.string() + kFastOpts + " --set eval.n_random=4") == 0);
  REQUIRE(run("eval --run-dir " + out_dir.string() + " --set eval.strategies=off") == 0);
  const auto report = read_kv(out_dir / "eval_report.txt");
  CHECK(std::stod(report.at("ecfd_fast")) <= 1e-12);
}

TEST_CASE("CLI surfaces module errors as non-zero exits") {
  TempDir tmp;
  const auto out_dir = (tmp.path / "none").string();
  CHECK(run("select --input /no/such/file.csv --ratio 0.1 --out-dir " + out_dir) != 0);
  CHECK(run("select --input /etc/hostname --ratio 0.1 --out-dir " + out_dir +
            " --format parquet") != 0);
  const auto input = write_gmm_csv(tmp.path, 30, false);
  CHECK(run("select --input " + input.string() + " --ratio 0.1 --out-dir " + out_dir +
            " --set bogus=1") != 0);
  CHECK(run("eval --run-dir " + (tmp.path / "missing_run").string()) != 0);
}

TEST_CASE("metric flag switches the main loss") {
  TempDir tmp;
  const auto input = write_gmm_csv(tmp.path, 80, false);
  for (const std::string metric : {"pdcfd", "cfd", "mse"}) {
    const auto out_dir = tmp.path / ("m_" + metric);
    REQUIRE(run("select --input " + input.string() + " --ratio 0.1 --seed 4 --metric " + metric +
                " --out-dir " + out_dir.string() + kFastOpts) == 0);
    CHECK(read_kv(out_dir / "manifest.txt").at("config.metric") == metric);
  }
  // different metrics drive different optimizations on the same seed
  CHECK(read_file(tmp.path / "m_pdcfd" / "loss_trace.csv") !=
        read_file(tmp.path / "m_mse" / "loss_trace.csv"));
  CHECK(read_file(tmp.path / "m_pdcfd" / "loss_trace.csv") !=
        read_file(tmp.path / "m_cfd" / "loss_trace.csv"));
}
