#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dcgd/csv.hpp"

namespace dcgd {

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Flat key-value experiment description with one section per module. The
// grammar is documented in the README; parse(serialize(c)) == c.
struct ExperimentConfig {
  struct ProblemSection {
    std::string kind = "synthetic-ls";  // synthetic-ls | synthetic-huber |
                                        // synthetic-logistic | tomo
    int dim = 10;
    int rows_per_node = 5;
    double data_noise_std = 1e-3;
    double huber_delta = 0.05;
    double mu = 0.0;
    std::string regularizer = "none";  // none | identity | gradient
    std::string grid = "8x8";
    std::string phantom = "blobs";  // blobs | layered
    int blob_count = 4;
    double tomo_noise_std = 0.0;

    bool operator==(const ProblemSection&) const = default;
  };

  struct TopologySection {
    std::string kind = "lattice2d";  // lattice2d | ring | kregular | complete
    int rows = 5;
    int cols = 5;
    int m = 25;
    int k = 3;

    bool operator==(const TopologySection&) const = default;
  };

  struct MixingSection {
    std::string rule = "metropolis";  // metropolis | uniform-complete
    std::string lazy = "on";          // on | off | auto

    bool operator==(const MixingSection&) const = default;
  };

  struct DelaySection {
    std::string kind = "none";  // none | fixed | uniform | truncated-geometric
    int bound = 0;
    int tau = 0;
    double p = 0.5;

    bool operator==(const DelaySection&) const = default;
  };

  struct RunSection {
    double sigma = 0.0;
    double eta = 0.01;
    bool eta_auto = false;
    double radius = 1.0;
    long iterations = 1000;
    std::uint64_t seed = 1;
    int seed_count = 1;
    bool parallel = false;
    bool record_bounds = false;
    bool record_delays = false;
    std::string output_dir = "out";
    std::string tag = "experiment";

    bool operator==(const RunSection&) const = default;
  };

  struct SweepSection {
    std::vector<int> delay_bounds;
    std::vector<double> sigmas;
    std::vector<int> sizes;

    bool operator==(const SweepSection&) const = default;
  };

  struct TimingSection {
    double compute_lo = 1e-3;
    double compute_hi = 0.5;
    int straggler_node = -1;  // -1: no straggler
    double straggler_factor = 10.0;
    double comm_interval = 0.01;
    double budget = 10.0;

    bool operator==(const TimingSection&) const = default;
  };

  ProblemSection problem;
  TopologySection topology;
  MixingSection mixing;
  DelaySection delay;
  RunSection run;
  SweepSection sweep;
  TimingSection timing;

  bool operator==(const ExperimentConfig&) const = default;
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

template <class T>
T parse_number(const std::string& value, const std::string& field) {
  std::istringstream ss(value);
  T out;
  ss >> out;
  if (!ss || !(ss >> std::ws).eof())
    throw ConfigError("config: field '" + field + "' has invalid value '" + value + "'");
  return out;
}

inline bool parse_flag(const std::string& value, const std::string& field) {
  if (value == "on" || value == "true" || value == "1") return true;
  if (value == "off" || value == "false" || value == "0") return false;
  throw ConfigError("config: field '" + field + "' must be on/off, got '" + value + "'");
}

template <class T>
std::vector<T> parse_list(const std::string& value, const std::string& field) {
  std::vector<T> out;
  std::string item;
  std::istringstream ss(value);
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_number<T>(item, field));
  }
  return out;
}

}  // namespace detail

inline ExperimentConfig parse_config(std::istream& is) {
  ExperimentConfig c;
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("config: malformed section header at line " + std::to_string(lineno));
      section = line.substr(1, line.size() - 2);
      if (section != "problem" && section != "topology" && section != "mixing" &&
          section != "delay" && section != "run" && section != "sweep" && section != "timing")
        throw ConfigError("config: unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: expected 'key = value' at line " + std::to_string(lineno));
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    const std::string field = section + "." + key;

    using detail::parse_flag;
    using detail::parse_list;
    using detail::parse_number;

    if (section == "problem") {
      if (key == "kind") c.problem.kind = value;
      else if (key == "dim") c.problem.dim = parse_number<int>(value, field);
      else if (key == "rows_per_node") c.problem.rows_per_node = parse_number<int>(value, field);
      else if (key == "data_noise_std") c.problem.data_noise_std = parse_number<double>(value, field);
      else if (key == "huber_delta") c.problem.huber_delta = parse_number<double>(value, field);
      else if (key == "mu") c.problem.mu = parse_number<double>(value, field);
      else if (key == "regularizer") c.problem.regularizer = value;
      else if (key == "grid") c.problem.grid = value;
      else if (key == "phantom") c.problem.phantom = value;
      else if (key == "blob_count") c.problem.blob_count = parse_number<int>(value, field);
      else if (key == "tomo_noise_std") c.problem.tomo_noise_std = parse_number<double>(value, field);
      else throw ConfigError("config: unknown field '" + field + "'");
    } else if (section == "topology") {
      if (key == "kind") c.topology.kind = value;
      else if (key == "rows") c.topology.rows = parse_number<int>(value, field);
      else if (key == "cols") c.topology.cols = parse_number<int>(value, field);
      else if (key == "m") c.topology.m = parse_number<int>(value, field);
      else if (key == "k") c.topology.k = parse_number<int>(value, field);
      else throw ConfigError("config: unknown field '" + field + "'");
    } else if (section == "mixing") {
      if (key == "rule") c.mixing.rule = value;
      else if (key == "lazy") c.mixing.lazy = value;
      else throw ConfigError("config: unknown field '" + field + "'");
    } else if (section == "delay") {
      if (key == "kind") c.delay.kind = value;
      else if (key == "bound") c.delay.bound = parse_number<int>(value, field);
      else if (key == "tau") c.delay.tau = parse_number<int>(value, field);
      else if (key == "p") c.delay.p = parse_number<double>(value, field);
      else throw ConfigError("config: unknown field '" + field + "'");
    } else if (section == "run") {
      if (key == "sigma") c.run.sigma = parse_number<double>(value, field);
      else if (key == "eta") {
        if (value == "auto") {
          c.run.eta_auto = true;
        } else {
          c.run.eta = parse_number<double>(value, field);
          c.run.eta_auto = false;
        }
      }
      else if (key == "radius") c.run.radius = parse_number<double>(value, field);
      else if (key == "iterations") c.run.iterations = parse_number<long>(value, field);
      else if (key == "seed") c.run.seed = parse_number<std::uint64_t>(value, field);
      else if (key == "seed_count") c.run.seed_count = parse_number<int>(value, field);
      else if (key == "parallel") c.run.parallel = parse_flag(value, field);
      else if (key == "record_bounds") c.run.record_bounds = parse_flag(value, field);
      else if (key == "record_delays") c.run.record_delays = parse_flag(value, field);
      else if (key == "output_dir") c.run.output_dir = value;
      else if (key == "tag") c.run.tag = value;
      else throw ConfigError("config: unknown field '" + field + "'");
    } else if (section == "sweep") {
      if (key == "delay_bounds") c.sweep.delay_bounds = parse_list<int>(value, field);
      else if (key == "sigmas") c.sweep.sigmas = parse_list<double>(value, field);
      else if (key == "sizes") c.sweep.sizes = parse_list<int>(value, field);
      else throw ConfigError("config: unknown field '" + field + "'");
    } else if (section == "timing") {
      if (key == "compute_lo") c.timing.compute_lo = parse_number<double>(value, field);
      else if (key == "compute_hi") c.timing.compute_hi = parse_number<double>(value, field);
      else if (key == "straggler_node") c.timing.straggler_node = parse_number<int>(value, field);
      else if (key == "straggler_factor") c.timing.straggler_factor = parse_number<double>(value, field);
      else if (key == "comm_interval") c.timing.comm_interval = parse_number<double>(value, field);
      else if (key == "budget") c.timing.budget = parse_number<double>(value, field);
      else throw ConfigError("config: unknown field '" + field + "'");
    } else {
      throw ConfigError("config: key '" + key + "' outside any section");
    }
  }
  return c;
}

inline ExperimentConfig parse_config(const std::string& text) {
  std::istringstream is(text);
  return parse_config(is);
}

inline void serialize_config(std::ostream& os, const ExperimentConfig& c) {
  auto emit = [&os](const char* key, const auto& value) { os << key << " = " << value << "\n"; };
  auto emitd = [&os](const char* key, double value) {
    os << key << " = " << format_double(value) << "\n";
  };
  auto flag = [](bool v) { return v ? "on" : "off"; };

  os << "[problem]\n";
  emit("kind", c.problem.kind);
  emit("dim", c.problem.dim);
  emit("rows_per_node", c.problem.rows_per_node);
  emitd("data_noise_std", c.problem.data_noise_std);
  emitd("huber_delta", c.problem.huber_delta);
  emitd("mu", c.problem.mu);
  emit("regularizer", c.problem.regularizer);
  emit("grid", c.problem.grid);
  emit("phantom", c.problem.phantom);
  emit("blob_count", c.problem.blob_count);
  emitd("tomo_noise_std", c.problem.tomo_noise_std);

  os << "\n[topology]\n";
  emit("kind", c.topology.kind);
  emit("rows", c.topology.rows);
  emit("cols", c.topology.cols);
  emit("m", c.topology.m);
  emit("k", c.topology.k);

  os << "\n[mixing]\n";
  emit("rule", c.mixing.rule);
  emit("lazy", c.mixing.lazy);

  os << "\n[delay]\n";
  emit("kind", c.delay.kind);
  emit("bound", c.delay.bound);
  emit("tau", c.delay.tau);
  emitd("p", c.delay.p);

  os << "\n[run]\n";
  emitd("sigma", c.run.sigma);
  if (c.run.eta_auto)
    os << "eta = auto\n";
  else
    emitd("eta", c.run.eta);
  emitd("radius", c.run.radius);
  emit("iterations", c.run.iterations);
  emit("seed", c.run.seed);
  emit("seed_count", c.run.seed_count);
  emit("parallel", flag(c.run.parallel));
  emit("record_bounds", flag(c.run.record_bounds));
  emit("record_delays", flag(c.run.record_delays));
  emit("output_dir", c.run.output_dir);
  emit("tag", c.run.tag);

  auto emit_list = [&os](const char* key, const auto& values, auto fmt) {
    if (values.empty()) return;
    os << key << " = ";
    for (std::size_t i = 0; i < values.size(); ++i) os << (i ? "," : "") << fmt(values[i]);
    os << "\n";
  };
  if (!c.sweep.delay_bounds.empty() || !c.sweep.sigmas.empty() || !c.sweep.sizes.empty()) {
    os << "\n[sweep]\n";
    emit_list("delay_bounds", c.sweep.delay_bounds, [](int v) { return std::to_string(v); });
    emit_list("sigmas", c.sweep.sigmas, [](double v) { return format_double(v); });
    emit_list("sizes", c.sweep.sizes, [](int v) { return std::to_string(v); });
  }

  os << "\n[timing]\n";
  emitd("compute_lo", c.timing.compute_lo);
  emitd("compute_hi", c.timing.compute_hi);
  emit("straggler_node", c.timing.straggler_node);
  emitd("straggler_factor", c.timing.straggler_factor);
  emitd("comm_interval", c.timing.comm_interval);
  emitd("budget", c.timing.budget);
}

inline std::string serialize_config(const ExperimentConfig& c) {
  std::ostringstream os;
  serialize_config(os, c);
  return os.str();
}

}  // namespace dcgd
