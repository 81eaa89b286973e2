#include "sevpr/cli/config.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "sevpr/errors.hpp"

namespace sevpr::cli {

namespace {

struct KeyHandler {
  std::function<void(Options&, const std::string&)> set;
  std::function<std::string(const Options&)> get;
};

long long parse_int(const std::string& key, const std::string& v) {
  long long out;
  auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size())
    throw config_error("config key " + key + ": not an integer: '" + v + "'");
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  double out;
  auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size())
    throw config_error("config key " + key + ": not a number: '" + v + "'");
  return out;
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

template <typename T>
std::string fmt_list(const std::vector<T>& xs) {
  std::ostringstream os;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) os << ',';
    if constexpr (std::is_same_v<T, double>)
      os << fmt_double(xs[i]);
    else
      os << xs[i];
  }
  return os.str();
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : v) {
    if (c == ',') {
      parts.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) parts.push_back(cur);
  return parts;
}

using Table = std::map<std::string, KeyHandler>;

#define INT_KEY(name, field)                                                   \
  {                                                                            \
    name, {                                                                    \
      [](Options& o, const std::string& v) {                                   \
        o.field = static_cast<decltype(o.field)>(parse_int(name, v));          \
      },                                                                       \
          [](const Options& o) { return std::to_string(o.field); }             \
    }                                                                          \
  }

#define DBL_KEY(name, field)                                                   \
  {                                                                            \
    name, {                                                                    \
      [](Options& o, const std::string& v) { o.field = parse_double(name, v); },\
          [](const Options& o) { return fmt_double(o.field); }                 \
    }                                                                          \
  }

#define STR_KEY(name, field)                                                   \
  {                                                                            \
    name, {                                                                    \
      [](Options& o, const std::string& v) { o.field = v; },                   \
          [](const Options& o) { return o.field; }                             \
    }                                                                          \
  }

const Table& table() {
  static const Table t = {
      {"seed",
       {[](Options& o, const std::string& v) {
          o.seed = static_cast<std::uint64_t>(parse_int("seed", v));
        },
        [](const Options& o) { return std::to_string(o.seed); }}},
      INT_KEY("threads", threads),
      INT_KEY("repr.time_steps", repr.time_steps),
      INT_KEY("repr.smlp_hidden", repr.smlp_hidden),
      DBL_KEY("repr.eta_ms", repr.eta_ms),
      DBL_KEY("net.scale", net.scale),
      DBL_KEY("train.margin", train.margin),
      INT_KEY("train.negatives", train.negatives),
      DBL_KEY("train.lr", train.lr),
      INT_KEY("train.batch", train.batch),
      INT_KEY("train.cache_batch", train.cache_batch),
      DBL_KEY("train.r_pos_m", train.r_pos_m),
      DBL_KEY("train.r_neg_m", train.r_neg_m),
      INT_KEY("train.epochs", train.epochs),
      INT_KEY("train.max_steps", train.max_steps),
      STR_KEY("train.optimizer", train.optimizer),
      DBL_KEY("train.momentum", train.momentum),
      INT_KEY("train.checkpoint_every", train.checkpoint_every),
      INT_KEY("train.hard_negative_pool", train.hard_negative_pool),
      DBL_KEY("eval.phi_m", eval.phi_m),
      {"eval.phi_sweep",
       {[](Options& o, const std::string& v) {
          o.eval.phi_sweep.clear();
          for (const auto& p : split_list(v))
            o.eval.phi_sweep.push_back(parse_double("eval.phi_sweep", p));
        },
        [](const Options& o) { return fmt_list(o.eval.phi_sweep); }}},
      {"eval.recall_ns",
       {[](Options& o, const std::string& v) {
          o.eval.recall_ns.clear();
          for (const auto& p : split_list(v))
            o.eval.recall_ns.push_back(int(parse_int("eval.recall_ns", p)));
        },
        [](const Options& o) { return fmt_list(o.eval.recall_ns); }}},
      STR_KEY("energy.mode", energy.mode),
      DBL_KEY("energy.static_rate", energy.static_rate),
      INT_KEY("energy.batch_volumes", energy.batch_volumes),
      INT_KEY("synth.places", synth.places),
      INT_KEY("synth.traverses", synth.traverses),
      INT_KEY("synth.width", synth.width),
      INT_KEY("synth.height", synth.height),
      INT_KEY("synth.events_per_place", synth.events_per_place),
      DBL_KEY("synth.noise_rate", synth.noise_rate),
      DBL_KEY("synth.interval_s", synth.interval_s),
      DBL_KEY("synth.spacing_m", synth.spacing_m),
      STR_KEY("synth.format", synth.format),
  };
  return t;
}

#undef INT_KEY
#undef DBL_KEY
#undef STR_KEY

} // namespace

std::vector<std::string> option_keys() {
  std::vector<std::string> out;
  for (const auto& [k, _] : table()) out.push_back(k);
  return out;
}

void set_option(Options& o, const std::string& key, const std::string& value) {
  auto it = table().find(key);
  if (it == table().end()) throw config_error("unknown config key: " + key);
  it->second.set(o, value);
}

std::string get_option(const Options& o, const std::string& key) {
  auto it = table().find(key);
  if (it == table().end()) throw config_error("unknown config key: " + key);
  return it->second.get(o);
}

Options load_options(const std::string& config_path) {
  Options o;
  if (config_path.empty()) return o;
  std::ifstream in(config_path);
  if (!in) throw io_error("cannot open config file: " + config_path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' '))
      line.pop_back();
    std::size_t start = line.find_first_not_of(" \t");
    if (start == std::string::npos) continue;
    if (line[start] == '#') continue;
    const std::size_t eq = line.find('=', start);
    if (eq == std::string::npos)
      throw config_error(config_path + ":" + std::to_string(lineno) +
                         ": expected key=value");
    std::string key = line.substr(start, eq - start);
    while (!key.empty() && key.back() == ' ') key.pop_back();
    std::string val = line.substr(eq + 1);
    std::size_t vs = val.find_first_not_of(" \t");
    val = vs == std::string::npos ? std::string() : val.substr(vs);
    set_option(o, key, val);
  }
  return o;
}

std::string render_options(const Options& o) {
  std::ostringstream os;
  for (const auto& [k, h] : table()) os << k << '=' << h.get(o) << '\n';
  return os.str();
}

void echo_options(const Options& o, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const std::string path = (fs::path(dir) / "config_effective.txt").string();
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw io_error("cannot write config echo: " + path);
  out << render_options(o);
}

} // namespace sevpr::cli
