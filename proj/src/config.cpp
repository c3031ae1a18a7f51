#include "assocmem/config.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "assocmem/csv.hpp"
#include "assocmem/errors.hpp"

namespace assocmem {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string section_of(const std::string& key) {
  const auto dot = key.find('.');
  return dot == std::string::npos ? std::string() : key.substr(0, dot);
}

std::vector<std::string_view> split_commas(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = text.find(',', start);
    const auto item = trim(text.substr(start, comma == std::string_view::npos ? text.npos : comma - start));
    if (!item.empty()) out.push_back(item);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <class T>
bool parse_number(std::string_view text, T& out) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end && !text.empty();
}

}  // namespace

const std::vector<ConfigKey>& config_schema() {
  static const std::vector<ConfigKey> schema = {
      {"master_seed", "0", "master seed from which every instance and init seed is derived"},
      {"threads", "0", "worker threads; 0 uses all available cores"},
      {"precision", "f64", "training arithmetic: f32 or f64"},

      {"train.lr", "0.01", "Adam peak learning rate"},
      {"train.max_steps", "512", "maximum number of full-batch steps"},
      {"train.warmup", "0.05", "fraction of max_steps used for linear warmup"},
      {"train.stop_accuracy", "0.999", "stop once training accuracy reaches this value"},
      {"train.beta1", "0.9", "Adam first-moment decay"},
      {"train.beta2", "0.999", "Adam second-moment decay"},
      {"train.eps", "1e-8", "Adam epsilon"},
      {"train.dp_cache_mb", "2048", "DP output tensor is cached when it fits in this many MiB"},

      {"problem.d", "50", "embedding dimension"},
      {"problem.alpha", "0.5", "load alpha = p log p / d^2 (p is rounded to the nearest integer)"},
      {"problem.mode", "OP", "output mode: OP (shared outputs) or DP (per-input outputs)"},
      {"problem.kappa", "1", "rank ratio m/d; 1 trains a full-rank W"},
      {"problem.seed_index", "0", "replicate index used to derive the instance seed"},

      {"sweep.alphas", "0.4:1.0:25", "load grid: lo:hi:n or comma list, strictly increasing"},
      {"sweep.dims", "50", "embedding dimensions"},
      {"sweep.kappas", "1", "rank ratios m/d"},
      {"sweep.modes", "OP", "output modes (OP, DP)"},
      {"sweep.methods", "trained", "methods (trained, hebbian); hebbian runs only for OP and kappa=1"},
      {"sweep.seeds", "5", "independent replicates per cell"},
      {"sweep.scan", "grid", "grid visits every cell; first_violation ends a group at its first imperfect cell"},

      {"theory.kappas", "0.25, 0.5, 1", "rank ratios for the alpha_c table"},
      {"theory.alphas", "0, 0.1, 0.2, 0.3, 0.4, 0.45", "loads for the q* minimisation"},
      {"theory.p", "10000", "surrogate p for the Monte-Carlo energetic term"},
      {"theory.n_mc", "16", "Monte-Carlo rows of eta"},
      {"theory.prescan_points", "41", "prescan grid size for bracketing q*"},
      {"theory.tolerance", "1e-5", "golden-section tolerance on the q* bracket"},
      {"theory.bounds_t", "0.1, 0.3, 0.5, 0.7, 0.9", "t values for the G bounds table"},
      {"theory.bounds_k", "1", "k in the upper bound -(k/(k+1)) beta_t^2"},
      {"theory.extrapolate", "true", "run the capacity extrapolation"},

      {"spectrum.d", "150", "embedding dimension of the trained model"},
      {"spectrum.alpha", "0.7", "load at which the model is trained"},
      {"spectrum.kappa", "1", "rank ratio of the trained model"},
      {"spectrum.mode", "OP", "output mode"},
      {"spectrum.weights", "", "weights file to analyse instead of training"},
      {"spectrum.normalization", "top2", "top2 scales the largest singular value to 2; raw keeps it"},
      {"spectrum.grid_points", "512", "points of the theory curves"},

      {"hebbian.d", "200", "embedding dimension for the score statistics"},
      {"hebbian.p", "2000", "number of associations for the score statistics"},
      {"hebbian.heuristic_alphas", "0.05, 0.1, 0.15, 0.2, 0.25, 0.3", "loads for the success heuristic"},
      {"hebbian.heuristic_p", "10000", "p of the success heuristic"},
      {"hebbian.n_mc", "200000", "Monte-Carlo draws of the success heuristic"},

      {"hist.d", "150", "embedding dimension"},
      {"hist.alpha", "0.3", "load"},
      {"hist.kappa", "1", "rank ratio (trained method)"},
      {"hist.mode", "OP", "output mode"},
      {"hist.method", "trained", "trained or hebbian"},

      {"fss.input", "", "sweep CSV whose thresholds are fitted; empty uses the synthetic law"},
      {"fss.synthetic_c", "1", "c in the synthetic thresholds 1/2 + c / log p"},
      {"fss.synthetic_power", "1", "power a in the synthetic thresholds 1/2 + c / (log p)^a"},
      {"fss.synthetic_p", "500, 1000, 2000, 4000, 8000", "p values of the synthetic thresholds"},
  };
  return schema;
}

std::vector<std::string> sections_for_command(std::string_view command) {
  if (command == "sweep") return {"", "train", "sweep"};
  if (command == "train") return {"", "train", "problem"};
  if (command == "theory") return {"", "theory"};
  if (command == "spectrum") return {"", "train", "spectrum"};
  if (command == "hebbian") return {"", "hebbian"};
  if (command == "hist") return {"", "train", "hist"};
  if (command == "fss") return {"", "fss"};
  throw ConfigError("unknown command '" + std::string(command) + "'");
}

Config::Config() {
  for (const auto& k : config_schema()) values_[k.key] = k.default_value;
}

void Config::set(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  it->second = std::string(trim(value));
}

void Config::set_assignment(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError("expected key=value, got '" + std::string(assignment) + "'");
  }
  set(std::string(trim(assignment.substr(0, eq))), std::string(assignment.substr(eq + 1)));
}

void Config::merge_text(std::string_view text, std::string_view origin) {
  std::string section;
  int line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = std::string(origin) + ":" + std::to_string(line_no);
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": malformed section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + ": expected key = value");
    const std::string name(trim(line.substr(0, eq)));
    const std::string key = section.empty() ? name : section + "." + name;
    if (!values_.count(key)) throw ConfigError(where + ": unknown config key '" + key + "'");
    values_[key] = std::string(trim(line.substr(eq + 1)));
  }
}

void Config::merge_json(const nlohmann::json& object) {
  const nlohmann::json& source = object.contains("config") ? object.at("config") : object;
  if (!source.is_object()) throw ConfigError("JSON config must be an object of key/value pairs");
  for (const auto& [key, value] : source.items()) {
    if (value.is_string()) {
      set(key, value.get<std::string>());
    } else if (value.is_array()) {
      std::string joined;
      for (const auto& item : value) {
        if (!joined.empty()) joined += ", ";
        joined += item.is_string() ? item.get<std::string>() : item.dump();
      }
      set(key, joined);
    } else {
      set(key, value.dump());
    }
  }
}

void Config::merge_file(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    nlohmann::json parsed;
    try {
      parsed = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(path.string() + ": invalid JSON: " + e.what());
    }
    merge_json(parsed);
  } else {
    merge_text(text, path.string());
  }
}

const std::string& Config::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second;
}

double Config::get_double(const std::string& key) const {
  double v = 0.0;
  if (!parse_number(get(key), v)) throw ConfigError(key + ": expected a number, got '" + get(key) + "'");
  return v;
}

int Config::get_int(const std::string& key) const {
  int v = 0;
  if (!parse_number(get(key), v)) throw ConfigError(key + ": expected an integer, got '" + get(key) + "'");
  return v;
}

std::uint64_t Config::get_u64(const std::string& key) const {
  std::uint64_t v = 0;
  if (!parse_number(get(key), v)) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + get(key) + "'");
  }
  return v;
}

bool Config::get_bool(const std::string& key) const {
  const std::string& v = get(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::vector<double> parse_double_list(std::string_view text) {
  text = trim(text);
  if (text.find(':') != std::string_view::npos) {
    const auto c1 = text.find(':');
    const auto c2 = text.find(':', c1 + 1);
    double lo = 0.0, hi = 0.0;
    int n = 0;
    if (c2 == std::string_view::npos || !parse_number(text.substr(0, c1), lo) ||
        !parse_number(text.substr(c1 + 1, c2 - c1 - 1), hi) || !parse_number(text.substr(c2 + 1), n) ||
        n < 1) {
      throw ConfigError("malformed range '" + std::string(text) + "' (expected lo:hi:n)");
    }
    if (n == 1) return {lo};
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
    out.back() = hi;
    return out;
  }
  std::vector<double> out;
  for (auto item : split_commas(text)) {
    double v = 0.0;
    if (!parse_number(item, v)) throw ConfigError("'" + std::string(item) + "' is not a number");
    out.push_back(v);
  }
  return out;
}

std::vector<double> Config::get_double_list(const std::string& key) const {
  try {
    return parse_double_list(get(key));
  } catch (const ConfigError& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

std::vector<int> Config::get_int_list(const std::string& key) const {
  std::vector<int> out;
  for (auto item : split_commas(get(key))) {
    int v = 0;
    if (!parse_number(item, v)) throw ConfigError(key + ": '" + std::string(item) + "' is not an integer");
    out.push_back(v);
  }
  return out;
}

std::vector<std::string> Config::get_string_list(const std::string& key) const {
  std::vector<std::string> out;
  for (auto item : split_commas(get(key))) out.emplace_back(item);
  return out;
}

std::string Config::to_text(const std::vector<std::string>& sections) const {
  auto wanted = [&](const std::string& section) {
    return sections.empty() || std::find(sections.begin(), sections.end(), section) != sections.end();
  };
  std::string out;
  std::string current;
  for (const auto& k : config_schema()) {
    const std::string section = section_of(k.key);
    if (!wanted(section)) continue;
    if (section != current) {
      out += "\n[" + section + "]\n";
      current = section;
    }
    const std::string name = section.empty() ? k.key : k.key.substr(section.size() + 1);
    out += name + " = " + values_.at(k.key) + "\n";
  }
  return out;
}

nlohmann::json Config::to_json(const std::vector<std::string>& sections) const {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& k : config_schema()) {
    const std::string section = section_of(k.key);
    if (!sections.empty() && std::find(sections.begin(), sections.end(), section) == sections.end()) continue;
    out[k.key] = values_.at(k.key);
  }
  return out;
}

TrainConfig train_config_from(const Config& config) {
  TrainConfig t;
  t.learning_rate = config.get_double("train.lr");
  t.max_steps = config.get_int("train.max_steps");
  t.warmup_fraction = config.get_double("train.warmup");
  t.stop_accuracy = config.get_double("train.stop_accuracy");
  t.adam_beta1 = config.get_double("train.beta1");
  t.adam_beta2 = config.get_double("train.beta2");
  t.adam_eps = config.get_double("train.eps");
  t.dp_cache_mb = config.get_double("train.dp_cache_mb");
  try {
    t.precision = parse_precision(config.get("precision"));
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("precision: ") + e.what());
  }
  t.validate();
  return t;
}

SweepSpec sweep_spec_from(const Config& config) {
  SweepSpec s;
  s.alphas = config.get_double_list("sweep.alphas");
  s.dims = config.get_int_list("sweep.dims");
  s.kappas = config.get_double_list("sweep.kappas");
  s.modes.clear();
  for (const auto& m : config.get_string_list("sweep.modes")) {
    try {
      s.modes.push_back(parse_mode(m));
    } catch (const std::exception& e) {
      throw ConfigError(std::string("sweep.modes: ") + e.what());
    }
  }
  s.methods.clear();
  for (const auto& m : config.get_string_list("sweep.methods")) {
    try {
      s.methods.push_back(parse_method(m));
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("sweep.methods: ") + e.what());
    }
  }
  s.n_seeds = config.get_int("sweep.seeds");
  try {
    s.scan = parse_scan_policy(config.get("sweep.scan"));
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("sweep.scan: ") + e.what());
  }
  s.master_seed = config.get_u64("master_seed");
  s.train = train_config_from(config);
  s.validate();
  return s;
}

}  // namespace assocmem
