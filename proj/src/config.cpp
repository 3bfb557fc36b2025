#include "fast/config.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "fast/errors.hpp"

namespace fast {

namespace {

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw InvalidParameterError("config: bad numeric value for " + key + ": '" + value + "'");
  }
}

long parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const long v = std::stol(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw InvalidParameterError("config: bad integer value for " + key + ": '" + value + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "on" || value == "true" || value == "1") return true;
  if (value == "off" || value == "false" || value == "0") return false;
  throw InvalidParameterError("config: bad boolean value for " + key + ": '" + value + "'");
}

std::vector<int> parse_int_list(const std::string& key, const std::string& value) {
  std::vector<int> out;
  std::stringstream ss(value);
  std::string tok;
  while (std::getline(ss, tok, ','))
    if (!tok.empty()) out.push_back(static_cast<int>(parse_int(key, tok)));
  if (out.empty()) throw InvalidParameterError("config: empty list for " + key);
  return out;
}

std::string join(const std::vector<int>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(xs[i]);
  }
  return out;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

const char* metric_name(MainMetric m) {
  switch (m) {
    case MainMetric::pdcfd: return "pdcfd";
    case MainMetric::cfd: return "cfd";
    default: return "mse";
  }
}

MainMetric metric_from_name(const std::string& name) {
  if (name == "pdcfd") return MainMetric::pdcfd;
  if (name == "cfd") return MainMetric::cfd;
  if (name == "mse") return MainMetric::mse;
  throw InvalidParameterError("config: unknown metric '" + name + "'");
}

}  // namespace

void Config::set(const std::string& key, const std::string& value) {
  auto& p = pipeline;
  if (key == "seed") p.seed = static_cast<std::uint64_t>(parse_int(key, value));
  else if (key == "ratio") {
    p.ratio = parse_double(key, value);
    if (p.ratio <= 0.0 || p.ratio > 1.0)
      throw InvalidParameterError("config: ratio must lie in (0,1]");
  } else if (key == "stratified") {
    if (value == "auto") p.stratified = -1;
    else p.stratified = parse_bool(key, value) ? 1 : 0;
  } else if (key == "metric") p.opt.metric = metric_from_name(value);
  else if (key == "embed_dim") {
    p.embed_dim = static_cast<int>(parse_int(key, value));
    if (p.embed_dim < 1) throw InvalidParameterError("config: embed_dim must be >= 1");
  } else if (key == "graph.knn_scales") p.graph.knn_scales = parse_int_list(key, value);
  else if (key == "graph.sigma_min_factor") p.graph.sigma_min_factor = parse_double(key, value);
  else if (key == "cf.lambda_p") p.penalty.lambda_p = parse_double(key, value);
  else if (key == "cf.alpha") p.penalty.alpha = parse_double(key, value);
  else if (key == "cf.amp_floor") p.penalty.amp_floor = parse_double(key, value);
  else if (key == "afl.n_lib") p.afl.n_lib = static_cast<int>(parse_int(key, value));
  else if (key == "afl.split_low") p.afl.split_low = parse_double(key, value);
  else if (key == "afl.split_mid") p.afl.split_mid = parse_double(key, value);
  else if (key == "afl.n_mc") p.afl.n_mc = static_cast<int>(parse_int(key, value));
  else if (key == "afl.n_opt") p.afl.n_opt = static_cast<int>(parse_int(key, value));
  else if (key == "afl.pilot_samples") p.afl.pilot_samples = static_cast<int>(parse_int(key, value));
  else if (key == "afl.ref_cap") p.afl.ref_cap = parse_int(key, value);
  else if (key == "afl.ascent_step") p.afl.ascent_step = parse_double(key, value);
  else if (key == "pdas.ramp_fraction") {
    p.opt.ramp_fraction = parse_double(key, value);
    if (p.opt.ramp_fraction <= 0.0 || p.opt.ramp_fraction > 1.0)
      throw InvalidParameterError("config: pdas.ramp_fraction must lie in (0,1]");
  } else if (key == "opt.total_iters") p.opt.total_iters = static_cast<int>(parse_int(key, value));
  else if (key == "opt.step_size") p.opt.step_size = parse_double(key, value);
  else if (key == "opt.batch_k") {
    p.opt.batch_k = static_cast<int>(parse_int(key, value));
    if (p.opt.batch_k < 1) throw InvalidParameterError("config: opt.batch_k must be >= 1");
  } else if (key == "opt.assign_cadence") p.opt.assign_cadence = static_cast<int>(parse_int(key, value));
  else if (key == "opt.lambda_div") p.opt.lambda_div = parse_double(key, value);
  else if (key == "opt.lambda_match") p.opt.lambda_match = parse_double(key, value);
  else if (key == "opt.lambda_graph") p.opt.lambda_graph = parse_double(key, value);
  else if (key == "opt.early_stop_rel") p.opt.early_stop_rel = parse_double(key, value);
  else if (key == "opt.strategy") p.opt.strategy = strategy_from_name(value);
  else if (key == "align.rff_dim") p.opt.rff_dim = static_cast<int>(parse_int(key, value));
  else if (key == "align.dpp_delta") p.opt.dpp_delta = parse_double(key, value);
  else if (key == "align.cost_eps") p.opt.cost_eps = parse_double(key, value);
  else if (key == "extract.heldout_freqs") p.heldout_freqs = static_cast<int>(parse_int(key, value));
  else if (key == "eval.n_random") eval.n_random = static_cast<int>(parse_int(key, value));
  else if (key == "eval.heldout_freqs") eval.heldout_freqs = static_cast<int>(parse_int(key, value));
  else if (key == "eval.strategies") eval.run_strategies = parse_bool(key, value);
  else if (key == "eval.seed") eval.seed = static_cast<std::uint64_t>(parse_int(key, value));
  else throw InvalidParameterError("config: unknown key '" + key + "'");
}

void Config::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("config: cannot open " + path);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    // trim
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    line = line.substr(first, last - first + 1);
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw FormatError("config: line " + std::to_string(line_no) + " is not key=value");
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    const auto kend = key.find_last_not_of(" \t");
    key = key.substr(0, kend == std::string::npos ? 0 : kend + 1);
    const auto vstart = value.find_first_not_of(" \t");
    value = vstart == std::string::npos ? "" : value.substr(vstart);
    set(key, value);
  }
}

std::string Config::snapshot() const {
  const auto& p = pipeline;
  std::map<std::string, std::string> kv;
  kv["seed"] = std::to_string(p.seed);
  kv["ratio"] = fmt(p.ratio);
  kv["stratified"] = p.stratified < 0 ? "auto" : (p.stratified ? "on" : "off");
  kv["metric"] = metric_name(p.opt.metric);
  kv["embed_dim"] = std::to_string(p.embed_dim);
  kv["graph.knn_scales"] = join(p.graph.knn_scales);
  kv["graph.sigma_min_factor"] = fmt(p.graph.sigma_min_factor);
  kv["cf.lambda_p"] = fmt(p.penalty.lambda_p);
  kv["cf.alpha"] = fmt(p.penalty.alpha);
  kv["cf.amp_floor"] = fmt(p.penalty.amp_floor);
  kv["afl.n_lib"] = std::to_string(p.afl.n_lib);
  kv["afl.split_low"] = fmt(p.afl.split_low);
  kv["afl.split_mid"] = fmt(p.afl.split_mid);
  kv["afl.n_mc"] = std::to_string(p.afl.n_mc);
  kv["afl.n_opt"] = std::to_string(p.afl.n_opt);
  kv["afl.pilot_samples"] = std::to_string(p.afl.pilot_samples);
  kv["afl.ref_cap"] = std::to_string(p.afl.ref_cap);
  kv["afl.ascent_step"] = fmt(p.afl.ascent_step);
  kv["pdas.ramp_fraction"] = fmt(p.opt.ramp_fraction);
  kv["opt.total_iters"] = std::to_string(p.opt.total_iters);
  kv["opt.step_size"] = fmt(p.opt.step_size);
  kv["opt.batch_k"] = std::to_string(p.opt.batch_k);
  kv["opt.assign_cadence"] = std::to_string(p.opt.assign_cadence);
  kv["opt.lambda_div"] = fmt(p.opt.lambda_div);
  kv["opt.lambda_match"] = fmt(p.opt.lambda_match);
  kv["opt.lambda_graph"] = fmt(p.opt.lambda_graph);
  kv["opt.early_stop_rel"] = fmt(p.opt.early_stop_rel);
  kv["opt.strategy"] = strategy_name(p.opt.strategy);
  kv["align.rff_dim"] = std::to_string(p.opt.rff_dim);
  kv["align.dpp_delta"] = fmt(p.opt.dpp_delta);
  kv["align.cost_eps"] = fmt(p.opt.cost_eps);
  kv["extract.heldout_freqs"] = std::to_string(p.heldout_freqs);
  kv["eval.n_random"] = std::to_string(eval.n_random);
  kv["eval.heldout_freqs"] = std::to_string(eval.heldout_freqs);
  kv["eval.strategies"] = eval.run_strategies ? "on" : "off";
  kv["eval.seed"] = std::to_string(eval.seed);

  std::string out;
  for (const auto& [k, v] : kv) {
    out += k;
    out += '=';
    out += v;
    out += '\n';
  }
  return out;
}

}  // namespace fast
