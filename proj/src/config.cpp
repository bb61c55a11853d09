#include "lgap/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace lgap {

std::string to_string(RunMode mode) {
  switch (mode) {
    case RunMode::Rbm: return "rbm";
    case RunMode::Ed: return "ed";
    case RunMode::Bethe: return "bethe";
    case RunMode::MeanField: return "meanfield";
    case RunMode::Compare: return "compare";
  }
  return "?";
}

RunMode mode_from_string(const std::string& s) {
  if (s == "rbm") return RunMode::Rbm;
  if (s == "ed") return RunMode::Ed;
  if (s == "bethe") return RunMode::Bethe;
  if (s == "meanfield") return RunMode::MeanField;
  if (s == "compare") return RunMode::Compare;
  throw ConfigError("unknown mode '" + s + "'");
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(int line, const std::string& what) {
  throw ConfigError("config line " + std::to_string(line) + ": " + what);
}

double parse_double(const std::string& v, const std::string& key, int line) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    fail(line, "key '" + key + "' expects a number, got '" + v + "'");
  }
}

long parse_long(const std::string& v, const std::string& key, int line) {
  long x = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size()) {
    fail(line, "key '" + key + "' expects an integer, got '" + v + "'");
  }
  return x;
}

std::uint64_t parse_u64(const std::string& v, const std::string& key,
                        int line) {
  std::uint64_t x = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size()) {
    fail(line, "key '" + key + "' expects an unsigned integer, got '" + v +
                   "'");
  }
  return x;
}

bool parse_bool(const std::string& v, const std::string& key, int line) {
  if (v == "true" || v == "on" || v == "1") return true;
  if (v == "false" || v == "off" || v == "0") return false;
  fail(line, "key '" + key + "' expects true/false, got '" + v + "'");
}

void set_key(ExperimentConfig& cfg, const std::string& section,
             const std::string& key, const std::string& value, int line) {
  if (section == "experiment") {
    if (key == "mode") {
      try {
        cfg.mode = mode_from_string(value);
      } catch (const ConfigError&) {
        fail(line, "key 'mode' expects one of rbm/ed/bethe/meanfield/compare");
      }
      return;
    }
  } else if (section == "model") {
    if (key == "geometry") {
      if (value == "chain") {
        cfg.model.geometry = Geometry::Chain;
      } else if (value == "square") {
        cfg.model.geometry = Geometry::Square;
      } else {
        fail(line, "key 'geometry' expects chain or square");
      }
      return;
    }
    if (key == "n") { cfg.model.n = static_cast<int>(parse_long(value, key, line)); return; }
    if (key == "lx") { cfg.model.lx = static_cast<int>(parse_long(value, key, line)); return; }
    if (key == "ly") { cfg.model.ly = static_cast<int>(parse_long(value, key, line)); return; }
    if (key == "boundary") {
      if (value == "periodic") {
        cfg.model.boundary = Boundary::Periodic;
      } else if (value == "open") {
        cfg.model.boundary = Boundary::Open;
      } else {
        fail(line, "key 'boundary' expects periodic or open");
      }
      return;
    }
    if (key == "jx") { cfg.model.jx = parse_double(value, key, line); return; }
    if (key == "jy") { cfg.model.jy = parse_double(value, key, line); return; }
    if (key == "jz") { cfg.model.jz = parse_double(value, key, line); return; }
    if (key == "gamma") {
      cfg.model.gamma = parse_double(value, key, line);
      if (cfg.model.gamma < 0.0) {
        fail(line, "key 'gamma' must be >= 0");
      }
      return;
    }
  } else if (section == "rbm") {
    if (key == "hidden") { cfg.rbm.hidden = static_cast<int>(parse_long(value, key, line)); return; }
    if (key == "hidden_ratio") { cfg.rbm.hidden_ratio = parse_double(value, key, line); return; }
    if (key == "init_scale") {
      cfg.rbm.init_scale = parse_double(value, key, line);
      if (cfg.rbm.init_scale <= 0.0) fail(line, "key 'init_scale' must be > 0");
      return;
    }
    if (key == "ancillary") {
      if (value == "identity") {
        cfg.rbm.ancillary = AncillaryKind::Identity;
      } else if (value == "all-down") {
        cfg.rbm.ancillary = AncillaryKind::AllDown;
      } else {
        fail(line, "key 'ancillary' expects identity or all-down");
      }
      return;
    }
    if (key == "ok_variant") {
      if (value == "chain-rule") {
        cfg.rbm.ok_variant = OkVariant::ChainRule;
      } else if (value == "plain") {
        cfg.rbm.ok_variant = OkVariant::Plain;
      } else {
        fail(line, "key 'ok_variant' expects chain-rule or plain");
      }
      return;
    }
  } else if (section == "sampler") {
    if (key == "samples") { cfg.sampler.samples = parse_long(value, key, line); return; }
    if (key == "chains") { cfg.sampler.chains = static_cast<int>(parse_long(value, key, line)); return; }
    if (key == "seed") { cfg.sampler.seed = parse_u64(value, key, line); return; }
    if (key == "exact_summation") { cfg.sampler.exact_summation = parse_bool(value, key, line); return; }
    if (key == "burn_in") {
      cfg.sampler.burn_in = parse_double(value, key, line);
      if (cfg.sampler.burn_in < 0.0 || cfg.sampler.burn_in >= 1.0) {
        fail(line, "key 'burn_in' must lie in [0, 1)");
      }
      return;
    }
    if (key == "trace_samples") { cfg.sampler.trace_samples = parse_long(value, key, line); return; }
    if (key == "exhaustive_trace") { cfg.sampler.exhaustive_trace = parse_bool(value, key, line); return; }
  } else if (section == "optimizer") {
    if (key == "max_iters") { cfg.optimizer.max_iters = static_cast<int>(parse_long(value, key, line)); return; }
    if (key == "beta") {
      cfg.optimizer.beta = parse_double(value, key, line);
      if (cfg.optimizer.beta < 0.0) fail(line, "key 'beta' must be >= 0");
      return;
    }
    if (key == "two_phase") { cfg.optimizer.two_phase = parse_bool(value, key, line); return; }
    if (key == "window") { cfg.optimizer.window = static_cast<int>(parse_long(value, key, line)); return; }
    if (key == "tolerance") { cfg.optimizer.tolerance = parse_double(value, key, line); return; }
  } else if (section == "output") {
    if (key == "dir") { cfg.output.dir = value; return; }
  } else {
    fail(line, "unknown section [" + section + "]");
  }
  fail(line, "unknown key '" + key + "' in section [" + section + "]");
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(line_no, "malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section != "experiment" && section != "model" && section != "rbm" &&
          section != "sampler" && section != "optimizer" &&
          section != "output") {
        fail(line_no, "unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(line_no, "expected 'key = value', got '" + line + "'");
    }
    if (section.empty()) {
      fail(line_no, "key outside of any [section]");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      fail(line_no, "empty key or value");
    }
    set_key(cfg, section, key, value, line_no);
  }
  return cfg;
}

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string serialize_config(const ExperimentConfig& cfg) {
  std::ostringstream out;
  if (cfg.mode) {
    out << "[experiment]\n";
    out << "mode = " << to_string(*cfg.mode) << "\n\n";
  }
  out << "[model]\n";
  out << "geometry = "
      << (cfg.model.geometry == Geometry::Chain ? "chain" : "square") << "\n";
  if (cfg.model.geometry == Geometry::Chain) {
    out << "n = " << cfg.model.n << "\n";
  } else {
    out << "lx = " << cfg.model.lx << "\n";
    out << "ly = " << cfg.model.ly << "\n";
  }
  if (cfg.model.boundary) {
    out << "boundary = "
        << (*cfg.model.boundary == Boundary::Periodic ? "periodic" : "open")
        << "\n";
  }
  out << "jx = " << fmt_double(cfg.model.jx) << "\n";
  out << "jy = " << fmt_double(cfg.model.jy) << "\n";
  out << "jz = " << fmt_double(cfg.model.jz) << "\n";
  out << "gamma = " << fmt_double(cfg.model.gamma) << "\n";

  out << "\n[rbm]\n";
  if (cfg.rbm.hidden) out << "hidden = " << *cfg.rbm.hidden << "\n";
  out << "hidden_ratio = " << fmt_double(cfg.rbm.hidden_ratio) << "\n";
  out << "init_scale = " << fmt_double(cfg.rbm.init_scale) << "\n";
  out << "ancillary = "
      << (cfg.rbm.ancillary == AncillaryKind::Identity ? "identity"
                                                       : "all-down")
      << "\n";
  out << "ok_variant = "
      << (cfg.rbm.ok_variant == OkVariant::ChainRule ? "chain-rule" : "plain")
      << "\n";

  out << "\n[sampler]\n";
  out << "samples = " << cfg.sampler.samples << "\n";
  out << "chains = " << cfg.sampler.chains << "\n";
  if (cfg.sampler.seed) out << "seed = " << *cfg.sampler.seed << "\n";
  out << "exact_summation = "
      << (cfg.sampler.exact_summation ? "true" : "false") << "\n";
  out << "burn_in = " << fmt_double(cfg.sampler.burn_in) << "\n";
  out << "trace_samples = " << cfg.sampler.trace_samples << "\n";
  if (cfg.sampler.exhaustive_trace) {
    out << "exhaustive_trace = "
        << (*cfg.sampler.exhaustive_trace ? "true" : "false") << "\n";
  }

  out << "\n[optimizer]\n";
  out << "max_iters = " << cfg.optimizer.max_iters << "\n";
  out << "beta = " << fmt_double(cfg.optimizer.beta) << "\n";
  out << "two_phase = " << (cfg.optimizer.two_phase ? "true" : "false")
      << "\n";
  out << "window = " << cfg.optimizer.window << "\n";
  out << "tolerance = " << fmt_double(cfg.optimizer.tolerance) << "\n";

  out << "\n[output]\n";
  out << "dir = " << cfg.output.dir << "\n";
  return out.str();
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
  const std::string text = serialize_config(cfg);
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::vector<std::string> validate_config(const ExperimentConfig& cfg,
                                         RunMode mode) {
  std::vector<std::string> warnings;
  const ModelBlock& m = cfg.model;
  if (m.geometry == Geometry::Chain) {
    if (m.n < 2) throw ConfigError("model.n must be >= 2");
  } else {
    if (m.lx < 2 || m.ly < 2) {
      throw ConfigError("model.lx and model.ly must be >= 2");
    }
    if (!m.boundary) {
      throw ConfigError(
          "model.boundary is required for the square geometry (no default)");
    }
  }
  if (m.gamma < 0.0) throw ConfigError("model.gamma must be >= 0");

  const bool samples_needed = mode == RunMode::Rbm || mode == RunMode::Compare;
  if (samples_needed) {
    if (!cfg.sampler.seed) {
      throw ConfigError("sampler.seed is mandatory (no entropy default)");
    }
    if (!cfg.sampler.exact_summation && cfg.sampler.samples <= 0) {
      throw ConfigError("sampler.samples must be > 0 for Markov sampling");
    }
    if (cfg.sampler.chains < 1) {
      throw ConfigError("sampler.chains must be >= 1");
    }
    const int sites = m.sites();
    const int hidden = cfg.rbm.hidden_count(sites);
    if (hidden < 1) throw ConfigError("rbm hidden count must be >= 1");
    const double ratio = static_cast<double>(hidden) / (2.0 * sites);
    if (ratio < 3.0 || ratio > 6.0) {
      std::ostringstream w;
      w << "hidden-unit ratio " << ratio
        << " lies outside the recommended 3..6 band";
      warnings.push_back(w.str());
    }
    if (cfg.optimizer.max_iters < 1) {
      throw ConfigError("optimizer.max_iters must be >= 1");
    }
    if (cfg.optimizer.window < 1) {
      throw ConfigError("optimizer.window must be >= 1");
    }
  }
  return warnings;
}

void apply_override(ExperimentConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
    throw ConfigError("override must look like section.key=value, got '" +
                      assignment + "'");
  }
  const std::string section = trim(assignment.substr(0, dot));
  const std::string key = trim(assignment.substr(dot + 1, eq - dot - 1));
  const std::string value = trim(assignment.substr(eq + 1));
  set_key(cfg, section, key, value, 0);
}

}  // namespace lgap
