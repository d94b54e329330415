#include "mrlab/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace mrlab {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) throw ConfigError(key + ": cannot parse '" + v + "' as a number");
  return out;
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) {
    throw ConfigError(key + ": cannot parse '" + v + "' as a nonnegative integer");
  }
  return out;
}

std::vector<std::size_t> to_widths(const std::string& key, const std::string& v) {
  std::vector<std::size_t> out;
  std::stringstream ss(v);
  for (std::string item; std::getline(ss, item, ',');) out.push_back(to_uint(key, trim(item)));
  if (out.empty()) throw ConfigError(key + ": needs at least one width");
  return out;
}

struct Key {
  std::string name;
  bool numeric;
  std::function<void(TrainConfig&, const std::string&)> set;
  std::function<std::string(const TrainConfig&)> get;
};

Key real_key(std::string name, double TrainConfig::*field) {
  return {name, true, [name, field](TrainConfig& c, const std::string& v) { c.*field = to_double(name, v); },
          [field](const TrainConfig& c) { return format_double(c.*field); }};
}

Key size_key(std::string name, std::size_t TrainConfig::*field) {
  return {name, true, [name, field](TrainConfig& c, const std::string& v) { c.*field = to_uint(name, v); },
          [field](const TrainConfig& c) { return std::to_string(c.*field); }};
}

Key data_real_key(std::string name, double DatasetSpec::*field) {
  return {name, true, [name, field](TrainConfig& c, const std::string& v) { c.dataset.*field = to_double(name, v); },
          [field](const TrainConfig& c) { return format_double(c.dataset.*field); }};
}

Key data_size_key(std::string name, std::size_t DatasetSpec::*field) {
  return {name, true, [name, field](TrainConfig& c, const std::string& v) { c.dataset.*field = to_uint(name, v); },
          [field](const TrainConfig& c) { return std::to_string(c.dataset.*field); }};
}

const std::vector<Key>& keys() {
  static const std::vector<Key> table = [] {
    std::vector<Key> k;
    k.push_back({"variant", false, [](TrainConfig& c, const std::string& v) { c.variant = parse_variant(v); },
                 [](const TrainConfig& c) { return to_string(c.variant); }});
    k.push_back({"dataset", false,
                 [](TrainConfig& c, const std::string& v) { c.dataset.kind = parse_dataset_kind(v); },
                 [](const TrainConfig& c) { return to_string(c.dataset.kind); }});
    k.push_back(data_real_key("radius", &DatasetSpec::radius));
    k.push_back(data_real_key("mode_std", &DatasetSpec::mode_std));
    k.push_back(data_real_key("gap", &DatasetSpec::gap));
    k.push_back(data_real_key("comp_std", &DatasetSpec::comp_std));
    k.push_back(data_size_key("n_train", &DatasetSpec::n_train));
    k.push_back(data_size_key("n_val", &DatasetSpec::n_val));
    k.push_back(data_size_key("n_test", &DatasetSpec::n_test));
    k.push_back(real_key("lr", &TrainConfig::lr));
    k.push_back(real_key("beta1", &TrainConfig::beta1));
    k.push_back(real_key("beta2", &TrainConfig::beta2));
    k.push_back(real_key("weight_decay", &TrainConfig::weight_decay));
    k.push_back(real_key("clip_value", &TrainConfig::clip_value));
    k.push_back(size_key("K", &TrainConfig::k));
    k.push_back(real_key("lambda_aux", &TrainConfig::lambda_aux));
    k.push_back(real_key("lambda_rec", &TrainConfig::lambda_rec));
    k.push_back(size_key("batch_d", &TrainConfig::batch_d));
    k.push_back(size_key("batch_g", &TrainConfig::batch_g));
    k.push_back(size_key("d_steps_per_g", &TrainConfig::d_steps_per_g));
    k.push_back(size_key("g_steps_per_d", &TrainConfig::g_steps_per_d));
    k.push_back(size_key("g_steps", &TrainConfig::g_steps));
    k.push_back(size_key("eval_interval", &TrainConfig::eval_interval));
    k.push_back(size_key("noise_dim", &TrainConfig::noise_dim));
    k.push_back({"hidden_widths", false,
                 [](TrainConfig& c, const std::string& v) { c.hidden_widths = to_widths("hidden_widths", v); },
                 [](const TrainConfig& c) {
                   std::string s;
                   for (std::size_t i = 0; i < c.hidden_widths.size(); ++i) {
                     s += (i ? "," : "") + std::to_string(c.hidden_widths[i]);
                   }
                   return s;
                 }});
    k.push_back({"hidden_activation", false,
                 [](TrainConfig& c, const std::string& v) { c.hidden_activation = parse_activation(v); },
                 [](const TrainConfig& c) { return to_string(c.hidden_activation); }});
    k.push_back(real_key("leaky_slope", &TrainConfig::leaky_slope));
    k.push_back(size_key("batch_p", &TrainConfig::batch_p));
    k.push_back(real_key("predictor_lr", &TrainConfig::predictor_lr));
    k.push_back(size_key("predictor_epochs", &TrainConfig::predictor_epochs));
    k.push_back(size_key("patience", &TrainConfig::patience));
    k.push_back({"family", false, [](TrainConfig& c, const std::string& v) { c.family = parse_family(v); },
                 [](const TrainConfig& c) { return to_string(c.family); }});
    k.push_back(size_key("k_eval", &TrainConfig::k_eval));
    k.push_back(size_key("eval_samples", &TrainConfig::eval_samples));
    k.push_back({"seed", true, [](TrainConfig& c, const std::string& v) { c.seed = to_uint("seed", v); },
                 [](const TrainConfig& c) { return std::to_string(c.seed); }});
    return k;
  }();
  return table;
}

const Key& find_key(const std::string& name) {
  for (const Key& k : keys()) {
    if (k.name == name) return k;
  }
  throw ConfigError("unknown key '" + name + "'");
}

}  // namespace

TrainConfig parse_config_text(std::string_view text, const std::string& source) {
  TrainConfig cfg;
  std::map<std::string, std::size_t> line_of;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    std::string line = trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (line_of.count(key)) throw ConfigError(where + ": duplicate key '" + key + "'");
    try {
      find_key(key).set(cfg, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + ": " + e.what());
    }
    line_of[key] = line_no;
  }
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    // Point at the line of the offending key when it was set explicitly.
    const std::string msg = e.what();
    const std::string key = msg.substr(0, msg.find(':'));
    auto it = line_of.find(key);
    throw ConfigError(it == line_of.end() ? source + ": " + msg : source + ":" + std::to_string(it->second) + ": " + msg);
  }
  return cfg;
}

TrainConfig parse_config(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config_text(ss.str(), path.string());
}

std::string serialize_config(const TrainConfig& cfg) {
  std::string out;
  for (const Key& k : keys()) out += k.name + " = " + k.get(cfg) + "\n";
  return out;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const Key& k : keys()) out.push_back(k.name);
  return out;
}

bool is_numeric_key(const std::string& key) { return find_key(key).numeric; }

void set_config_value(TrainConfig& cfg, const std::string& key, const std::string& value) {
  find_key(key).set(cfg, value);
}

std::string get_config_value(const TrainConfig& cfg, const std::string& key) { return find_key(key).get(cfg); }

std::string run_id(const TrainConfig& cfg) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : serialize_config(cfg)) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return "s" + std::to_string(cfg.seed) + "-" + buf;
}

}  // namespace mrlab
