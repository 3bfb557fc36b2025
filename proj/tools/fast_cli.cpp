// Command-line front end for the fast coreset-selection library. Talks to
// the core exclusively through the C API (fast_c.h); all artifact files are
// composed here.

#include <CLI11.hpp>
#include <chrono>
#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "fast_c.h"

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

[[noreturn]] void die(const std::string& context) {
  std::cerr << "fast: " << context << ": " << fast_last_error() << "\n";
  std::exit(1);
}

void check(fast_status st, const std::string& context) {
  if (st != FAST_OK) die(context);
}

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

std::string config_snapshot(const fast_config* cfg) {
  const int64_t need = fast_config_snapshot(cfg, nullptr, 0);
  std::string text(static_cast<std::size_t>(need), '\0');
  fast_config_snapshot(cfg, text.data(), need);
  text.resize(static_cast<std::size_t>(need) - 1);
  return text;
}

struct DatasetHandle {
  fast_dataset* ptr = nullptr;
  ~DatasetHandle() { fast_dataset_free(ptr); }
};
struct ConfigHandle {
  fast_config* ptr = nullptr;
  ~ConfigHandle() { fast_config_free(ptr); }
};
struct GraphHandle {
  fast_graph* ptr = nullptr;
  ~GraphHandle() { fast_graph_free(ptr); }
};
struct SelectionHandle {
  fast_selection* ptr = nullptr;
  ~SelectionHandle() { fast_selection_free(ptr); }
};
struct EvalHandle {
  fast_eval* ptr = nullptr;
  ~EvalHandle() { fast_eval_free(ptr); }
};

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    std::cerr << "fast: cannot write " << path << "\n";
    std::exit(1);
  }
  return out;
}

void write_trace_csv(const fast_selection* sel, int unit, const fs::path& path) {
  const int64_t rows = fast_selection_trace_rows(sel, unit);
  std::vector<double> data(static_cast<std::size_t>(rows) * 7);
  if (rows > 0) check(fast_selection_trace(sel, unit, data.data()), "reading loss trace");
  auto out = open_out(path);
  out << "iteration,main,div,match,graph,total,tau\n";
  char line[256];
  for (int64_t r = 0; r < rows; ++r) {
    const double* v = data.data() + 7 * r;
    std::snprintf(line, sizeof line, "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  static_cast<int>(v[0]), v[1], v[2], v[3], v[4], v[5], v[6]);
    out << line;
  }
}

void write_library_audit(const fast_selection* sel, int unit, const fs::path& path) {
  const int64_t need = fast_selection_library_text(sel, unit, nullptr, 0);
  std::string text(static_cast<std::size_t>(need), '\0');
  if (need > 0) {
    fast_selection_library_text(sel, unit, text.data(), need);
    text.resize(static_cast<std::size_t>(need) - 1);
  }
  open_out(path) << text;
}

struct CommonArgs {
  std::string input;
  std::string format = "auto";
  std::string config_path;
  std::string out_dir;
  std::vector<std::string> overrides;  // key=value from --set
};

void apply_config(ConfigHandle& cfg, const CommonArgs& args) {
  check(fast_config_create(&cfg.ptr), "creating config");
  if (!args.config_path.empty())
    check(fast_config_load_file(cfg.ptr, args.config_path.c_str()), "loading config file");
  for (const auto& kv : args.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::cerr << "fast: --set expects key=value, got '" << kv << "'\n";
      std::exit(1);
    }
    check(fast_config_set(cfg.ptr, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str()),
          "applying --set " + kv);
  }
}

int run_select(const CommonArgs& args, double ratio, long seed, const std::string& stratified,
               const std::string& metric, const std::string& embedding_path) {
  const auto wall_start = Clock::now();

  ConfigHandle cfg;
  apply_config(cfg, const_cast<CommonArgs&>(args));
  if (ratio > 0)
    check(fast_config_set(cfg.ptr, "ratio", std::to_string(ratio).c_str()), "setting ratio");
  if (seed >= 0)
    check(fast_config_set(cfg.ptr, "seed", std::to_string(seed).c_str()), "setting seed");
  if (!stratified.empty())
    check(fast_config_set(cfg.ptr, "stratified", stratified.c_str()), "setting stratified");
  if (!metric.empty()) check(fast_config_set(cfg.ptr, "metric", metric.c_str()), "setting metric");

  auto io_start = Clock::now();
  DatasetHandle ds;
  check(fast_dataset_load(args.input.c_str(), args.format.c_str(), &ds.ptr), "loading dataset");
  double io_s = seconds_since(io_start);

  SelectionHandle sel;
  if (!embedding_path.empty()) {
    DatasetHandle emb;
    check(fast_dataset_load(embedding_path.c_str(), "rawf32", &emb.ptr), "loading embedding");
    std::vector<double> values(
        static_cast<std::size_t>(fast_dataset_rows(emb.ptr) * fast_dataset_dims(emb.ptr)));
    check(fast_dataset_values(emb.ptr, values.data()), "reading embedding values");
    check(fast_select_with_embedding(ds.ptr, cfg.ptr, values.data(),
                                     fast_dataset_dims(emb.ptr), &sel.ptr),
          "selection");
  } else {
    check(fast_select(ds.ptr, cfg.ptr, &sel.ptr), "selection");
  }

  io_start = Clock::now();
  fs::create_directories(args.out_dir);
  const fs::path out_dir(args.out_dir);

  // indices.txt: one sorted global row index per line
  const int64_t count = fast_selection_count(sel.ptr);
  std::vector<int64_t> indices(static_cast<std::size_t>(count));
  check(fast_selection_indices(sel.ptr, indices.data()), "reading indices");
  {
    // self-checks before anything is written
    const int64_t n = fast_dataset_rows(ds.ptr);
    for (std::size_t i = 0; i < indices.size(); ++i) {
      const bool ordered = i == 0 || indices[i] > indices[i - 1];
      if (!ordered || indices[i] < 0 || indices[i] >= n) {
        std::cerr << "fast: internal self-check failed on the selected indices\n";
        return 1;
      }
    }
    auto out = open_out(out_dir / "indices.txt");
    for (int64_t id : indices) out << id << "\n";
  }

  const int32_t units = fast_selection_unit_count(sel.ptr);
  const bool stratified_run = fast_selection_stratified(sel.ptr) != 0;
  std::vector<std::pair<std::string, std::string>> artifact_entries;
  artifact_entries.emplace_back("artifact.indices", "indices.txt");
  for (int32_t u = 0; u < units; ++u) {
    const std::string suffix =
        stratified_run ? "_class" + std::to_string(fast_selection_unit_class(sel.ptr, u)) : "";
    const std::string trace_name = "loss_trace" + suffix + ".csv";
    const std::string lib_name = "frequency_library" + suffix + ".txt";
    write_trace_csv(sel.ptr, u, out_dir / trace_name);
    write_library_audit(sel.ptr, u, out_dir / lib_name);
    artifact_entries.emplace_back("artifact.loss_trace." + std::to_string(u), trace_name);
    artifact_entries.emplace_back("artifact.frequency_library." + std::to_string(u), lib_name);
  }

  // manifest
  std::uint64_t checksum = 0;
  check(fast_checksum_file(args.input.c_str(), &checksum), "checksumming input");
  const std::string snapshot = config_snapshot(cfg.ptr);
  const std::string run_id = hex64(fnv1a64(snapshot + hex64(checksum)));

  double timings[6];
  check(fast_selection_timings(sel.ptr, timings), "reading timings");
  double losses[5];
  check(fast_selection_final_losses(sel.ptr, losses), "reading final losses");

  io_s += seconds_since(io_start);
  const double wall_s = seconds_since(wall_start);
  const auto pos = [](double v) { return v > 1e-9 ? v : 1e-9; };  // clock-resolution floor

  {
    auto out = open_out(out_dir / "manifest.txt");
    char line[512];
    out << "run_id=" << run_id << "\n";
    out << "version=" << fast_version() << "\n";
    out << "input_path=" << fs::absolute(args.input).string() << "\n";
    out << "input_format=" << args.format << "\n";
    out << "input_checksum=fnv1a64:" << hex64(checksum) << "\n";
    out << "n_rows=" << fast_dataset_rows(ds.ptr) << "\n";
    out << "n_dims=" << fast_dataset_dims(ds.ptr) << "\n";
    out << "n_selected=" << count << "\n";
    out << "stratified=" << (stratified_run ? "on" : "off") << "\n";
    for (int32_t u = 0; u < units && stratified_run; ++u) {
      out << "class." << fast_selection_unit_class(sel.ptr, u)
          << ".selected=" << fast_selection_unit_selected(sel.ptr, u) << "\n";
    }
    std::snprintf(line, sizeof line, "ecfd_report=%.17g\n", fast_selection_ecfd(sel.ptr));
    out << line;
    std::snprintf(line, sizeof line,
                  "final_loss.main=%.17g\nfinal_loss.div=%.17g\nfinal_loss.match=%.17g\n"
                  "final_loss.graph=%.17g\nfinal_loss.total=%.17g\n",
                  losses[0], losses[1], losses[2], losses[3], losses[4]);
    out << line;
    std::snprintf(line, sizeof line,
                  "timing.graph_s=%.9f\ntiming.embed_s=%.9f\ntiming.afl_s=%.9f\n"
                  "timing.optimize_s=%.9f\ntiming.extract_s=%.9f\ntiming.io_s=%.9f\n"
                  "timing.total_s=%.9f\n",
                  pos(timings[0]), pos(timings[1]), pos(timings[2]), pos(timings[3]),
                  pos(timings[4]), pos(io_s), pos(wall_s));
    out << line;
    for (const auto& [k, v] : artifact_entries) out << k << "=" << v << "\n";
    out << "artifact.manifest=manifest.txt\n";
    std::istringstream snap(snapshot);
    std::string snap_line;
    while (std::getline(snap, snap_line)) out << "config." << snap_line << "\n";
  }

  std::cout << "selected " << count << " of " << fast_dataset_rows(ds.ptr) << " rows -> "
            << (out_dir / "indices.txt").string() << " (run " << run_id << ")\n";
  return 0;
}

int run_graph(const CommonArgs& args) {
  ConfigHandle cfg;
  apply_config(cfg, const_cast<CommonArgs&>(args));

  DatasetHandle ds;
  check(fast_dataset_load(args.input.c_str(), args.format.c_str(), &ds.ptr), "loading dataset");

  GraphHandle graph;
  check(fast_graph_build(ds.ptr, cfg.ptr, &graph.ptr), "building graph");

  fs::create_directories(args.out_dir);
  const fs::path out_dir(args.out_dir);

  const int64_t edges = fast_graph_edge_count(graph.ptr);
  std::vector<int64_t> rows(static_cast<std::size_t>(edges)), cols(static_cast<std::size_t>(edges));
  std::vector<double> weights(static_cast<std::size_t>(edges));
  check(fast_graph_edges(graph.ptr, rows.data(), cols.data(), weights.data()), "reading edges");
  {
    auto out = open_out(out_dir / "edges.txt");
    char line[128];
    for (int64_t e = 0; e < edges; ++e) {
      std::snprintf(line, sizeof line, "%lld %lld %.17g\n",
                    static_cast<long long>(rows[static_cast<std::size_t>(e)]),
                    static_cast<long long>(cols[static_cast<std::size_t>(e)]),
                    weights[static_cast<std::size_t>(e)]);
      out << line;
    }
  }

  const int64_t n = fast_graph_nodes(graph.ptr);
  const int64_t dim = fast_graph_embed_dim(graph.ptr);
  std::vector<double> evals(static_cast<std::size_t>(n));  // full spectrum
  check(fast_graph_eigenvalues(graph.ptr, evals.data()), "reading eigenvalues");
  {
    auto out = open_out(out_dir / "eigenvalues.txt");
    char line[64];
    for (double v : evals) {
      std::snprintf(line, sizeof line, "%.17g\n", v);
      out << line;
    }
  }

  std::vector<double> emb(static_cast<std::size_t>(n * dim));
  check(fast_graph_embedding(graph.ptr, emb.data()), "reading embedding");
  {
    // embedding.rawf32 reuses the dataset container (values only)
    fast_dataset* tmp = nullptr;
    check(fast_dataset_create(emb.data(), n, dim, nullptr, &tmp), "packing embedding");
    DatasetHandle holder{tmp};
    check(fast_dataset_save_rawf32(tmp, (out_dir / "embedding.rawf32").string().c_str()),
          "writing embedding");
  }

  std::cout << "graph: " << n << " nodes, " << edges << " edges, embedding dim " << dim << "\n";
  return 0;
}

std::vector<std::pair<std::string, std::string>> read_kv_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    std::cerr << "fast: missing run artifact " << path << "\n";
    std::exit(1);
  }
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    out.emplace_back(line.substr(0, eq), line.substr(eq + 1));
  }
  return out;
}

int run_eval(const std::string& run_dir, const std::string& input_override,
             const std::string& config_path, const std::vector<std::string>& overrides) {
  const fs::path dir(run_dir);
  const auto manifest = read_kv_file(dir / "manifest.txt");

  std::string input_path, input_format = "auto", run_id;
  ConfigHandle cfg;
  check(fast_config_create(&cfg.ptr), "creating config");
  for (const auto& [k, v] : manifest) {
    if (k == "input_path") input_path = v;
    else if (k == "input_format") input_format = v;
    else if (k == "run_id") run_id = v;
    else if (k.rfind("config.", 0) == 0)
      check(fast_config_set(cfg.ptr, k.substr(7).c_str(), v.c_str()),
            "applying manifest config " + k);
  }
  if (!config_path.empty())
    check(fast_config_load_file(cfg.ptr, config_path.c_str()), "loading config file");
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::cerr << "fast: --set expects key=value, got '" << kv << "'\n";
      return 1;
    }
    check(fast_config_set(cfg.ptr, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str()),
          "applying --set " + kv);
  }
  if (!input_override.empty()) input_path = input_override;

  std::vector<int64_t> indices;
  {
    std::ifstream in(dir / "indices.txt");
    if (!in) {
      std::cerr << "fast: missing run artifact " << (dir / "indices.txt") << "\n";
      return 1;
    }
    std::string line;
    while (std::getline(in, line))
      if (!line.empty()) indices.push_back(std::stoll(line));
  }

  DatasetHandle ds;
  check(fast_dataset_load(input_path.c_str(), input_format.c_str(), &ds.ptr), "loading dataset");

  EvalHandle ev;
  check(fast_evaluate(ds.ptr, cfg.ptr, indices.data(),
                      static_cast<int64_t>(indices.size()), &ev.ptr),
        "evaluation");

  const int32_t n_random = fast_eval_random_count(ev.ptr);
  std::vector<double> random_vals(static_cast<std::size_t>(n_random));
  check(fast_eval_ecfd_random(ev.ptr, random_vals.data()), "reading random baselines");
  double sel4[4], rand4[4];
  check(fast_eval_moment_errors(ev.ptr, sel4, rand4), "reading moment errors");

  char line[256];
  {
    auto out = open_out(dir / "eval_report.txt");
    out << "run_id=" << run_id << "\n";
    std::snprintf(line, sizeof line, "ecfd_fast=%.17g\n", fast_eval_ecfd_fast(ev.ptr));
    out << line;
    std::snprintf(line, sizeof line, "ecfd_random_median=%.17g\n",
                  fast_eval_ecfd_random_median(ev.ptr));
    out << line;
    out << "n_random=" << n_random << "\n";
    for (int p = 0; p < 4; ++p) {
      std::snprintf(line, sizeof line, "moment_err_fast.%d=%.17g\nmoment_err_random.%d=%.17g\n",
                    p + 1, sel4[p], p + 1, rand4[p]);
      out << line;
    }
    const int32_t n_strat = fast_eval_strategy_count(ev.ptr);
    for (int32_t s = 0; s < n_strat; ++s) {
      char name[32];
      int32_t iters = -1;
      double final_ecfd = 0.0, threshold = 0.0;
      check(fast_eval_strategy(ev.ptr, s, name, sizeof name, &iters, &final_ecfd, &threshold),
            "reading strategy outcome");
      out << "strategy." << name << ".iterations_to_threshold="
          << (iters < 0 ? std::string("not_reached") : std::to_string(iters)) << "\n";
      std::snprintf(line, sizeof line, "strategy.%s.final_ecfd=%.17g\nstrategy.%s.threshold=%.17g\n",
                    name, final_ecfd, name, threshold);
      out << line;
    }
  }
  {
    auto out = open_out(dir / "eval_report.csv");
    out << "baseline_seed,ecfd_random\n";
    for (int32_t s = 0; s < n_random; ++s) {
      std::snprintf(line, sizeof line, "%d,%.17g\n", s, random_vals[static_cast<std::size_t>(s)]);
      out << line;
    }
  }

  std::snprintf(line, sizeof line, "ecfd_fast=%.6g random_median=%.6g",
                fast_eval_ecfd_fast(ev.ptr), fast_eval_ecfd_random_median(ev.ptr));
  std::cout << "eval: " << line << " -> " << (dir / "eval_report.txt").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DNN-free coreset selection via frequency-domain distribution matching"};
  app.require_subcommand(1);

  CommonArgs select_args, graph_args;
  double ratio = -1.0;
  long seed = -1;
  std::string stratified, metric, embedding_path;

  auto* select = app.add_subcommand("select", "Select a coreset and write run artifacts");
  select->add_option("--input", select_args.input, "Input dataset (csv or rawf32)")->required();
  select->add_option("--format", select_args.format, "Input format: auto|csv|rawf32");
  select->add_option("--ratio", ratio, "Keep ratio in (0,1]");
  select->add_option("--out-dir", select_args.out_dir, "Output directory")->required();
  select->add_option("--seed", seed, "Master seed");
  select->add_option("--config", select_args.config_path, "key=value config file");
  select->add_option("--stratified", stratified, "auto|on|off (auto: on when labels present)");
  select->add_option("--metric", metric, "pdcfd|cfd|mse");
  select->add_option("--embedding", embedding_path,
                     "Reuse an embedding.rawf32 from the graph command (global runs)");
  select->add_option("--set", select_args.overrides, "Extra key=value config overrides");

  auto* graph = app.add_subcommand("graph", "Build the manifold graph and embedding artifacts");
  graph->add_option("--input", graph_args.input, "Input dataset")->required();
  graph->add_option("--format", graph_args.format, "Input format: auto|csv|rawf32");
  graph->add_option("--out-dir", graph_args.out_dir, "Output directory")->required();
  graph->add_option("--config", graph_args.config_path, "key=value config file");
  graph->add_option("--set", graph_args.overrides, "Extra key=value config overrides");

  std::string run_dir, eval_input, eval_config;
  std::vector<std::string> eval_overrides;
  auto* eval = app.add_subcommand("eval", "Evaluate a finished run directory");
  eval->add_option("--run-dir", run_dir, "Directory produced by select")->required();
  eval->add_option("--input", eval_input, "Override the dataset path from the manifest");
  eval->add_option("--config", eval_config, "key=value config file with eval overrides");
  eval->add_option("--set", eval_overrides, "Extra key=value config overrides");

  CLI11_PARSE(app, argc, argv);

  if (select->parsed())
    return run_select(select_args, ratio, seed, stratified, metric, embedding_path);
  if (graph->parsed()) return run_graph(graph_args);
  return run_eval(run_dir, eval_input, eval_config, eval_overrides);
}
