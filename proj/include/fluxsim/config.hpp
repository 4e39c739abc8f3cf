#pragma once

// Run configuration: INI-style sections of `key = value` lines.
//
//   [system]                      fluxonium_basis, fluxonium_levels, coupler_levels
//   [system.fluxonium.K]          K = 0..4: e_c_GHz, e_l_GHz, e_j_GHz, phi_ext_over_2pi
//   [system.coupler.J]            J = 1..4: e_c_GHz, e_j_GHz, phi_ext_over_2pi (idle bias)
//   [system.coupling.J]           j_c0_GHz, j_cj_GHz, j_0j_GHz
//   [gate]                        n_neighbors, target, t_g_ns, shape, t_r_ns, drag, drag_alpha,
//                                 drive_fluxoniums, coupler_bias_over_2pi, amplitude_GHz, frequency_GHz
//   [simulation]                  dt_ns, order, frame, projection_cutoff_GHz, dressed_cutoff_GHz,
//                                 ramp, ramp_time_ns
//   [optimizer]                   max_evaluations, phase_weight, search_dt_ns, search_cutoff_GHz
//   [trace]                       initial, observables, stride
//   [sweep]                       parameter, values
//   [output]                      directory, formats
//
// Lists are comma separated. `#` and `;` start comments. Every violation is
// collected before reporting.

#include "fluxsim/calibrate.hpp"
#include "fluxsim/circuit.hpp"
#include "fluxsim/dynamics.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fluxsim {

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> violations)
      : std::runtime_error(join(violations)), violations_(std::move(violations)) {}

  [[nodiscard]] const std::vector<std::string>& violations() const { return violations_; }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string out = "invalid configuration (" + std::to_string(v.size()) + " problem" + (v.size() == 1 ? "" : "s") + ")";
    for (const auto& s : v) out += "\n  " + s;
    return out;
  }
  std::vector<std::string> violations_;
};

enum class GateTarget { multi_cz, identity };

inline const char* to_string(GateTarget t) { return t == GateTarget::multi_cz ? "multi_cz" : "identity"; }

struct CouplingSpec {
  double j_c0 = 0.0;  // GHz
  double j_cj = 0.0;  // GHz
  double j_0j = 0.0;  // GHz
};

struct SystemSection {
  std::vector<FluxoniumSpec> fluxoniums;       // Q0, Q1, ...
  std::vector<TransmonCouplerSpec> couplers;   // C1, C2, ... at the idle bias
  std::vector<CouplingSpec> couplings;         // one per coupler
  int fluxonium_basis = default_fluxonium_basis;
};

struct GateSection {
  int n_neighbors = 1;
  GateTarget target = GateTarget::multi_cz;
  GateSettings settings;
  std::vector<double> coupler_bias;  // phi_ext / 2 pi during the gate, one per active coupler
  std::optional<double> amplitude;   // GHz
  std::optional<double> frequency;   // GHz
};

struct SimulationSection {
  PropagationConfig propagation;
  bool ramp = false;
  double ramp_time = 3.0;  // ns
};

struct TraceSection {
  std::vector<int> initial;                    // fluxonium occupations
  std::vector<std::vector<int>> observables;   // fluxonium occupations
  std::size_t stride = 50;
};

struct SweepSection {
  std::string parameter;  // j_ck_GHz or t_g_ns
  std::vector<double> values;
};

struct OutputSection {
  std::string directory = "out";
  std::vector<std::string> formats{"csv", "json"};

  [[nodiscard]] bool wants(const std::string& f) const {
    return std::find(formats.begin(), formats.end(), f) != formats.end();
  }
};

struct RunConfig {
  std::string path;
  std::string text;  // raw file contents
  SystemSection system;
  GateSection gate;
  SimulationSection simulation;
  TuneUpOptions optimizer;
  TraceSection trace;
  SweepSection sweep;
  OutputSection output;

  /// Star system of the first `gate.n_neighbors` neighbours with couplers at the gate bias.
  [[nodiscard]] StarSystem star_system() const {
    StarSystem s;
    s.fluxonium_basis = system.fluxonium_basis;
    s.central = system.fluxoniums.at(0);
    for (int j = 1; j <= gate.n_neighbors; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      s.neighbors.push_back(system.fluxoniums.at(ju));
      TransmonCouplerSpec c = system.couplers.at(ju - 1);
      if (!gate.coupler_bias.empty()) c.phi_ext = two_pi * gate.coupler_bias.at(ju - 1);
      s.couplers.push_back(c);
      s.j_c0.push_back(system.couplings.at(ju - 1).j_c0);
      s.j_cj.push_back(system.couplings.at(ju - 1).j_cj);
      s.j_0j.push_back(system.couplings.at(ju - 1).j_0j);
    }
    return s;
  }

  /// Idle -> gate bias ramps of the active couplers (empty when ramps are off).
  [[nodiscard]] std::vector<FluxRamp> flux_ramps() const {
    std::vector<FluxRamp> out;
    if (!simulation.ramp) return out;
    const StarSystem s = star_system();
    for (int j = 0; j < gate.n_neighbors; ++j) {
      FluxRamp r;
      r.idle_bias = system.couplers.at(static_cast<std::size_t>(j)).phi_ext / two_pi;
      r.interaction_bias = s.couplers[static_cast<std::size_t>(j)].phi_ext / two_pi;
      r.ramp_time = simulation.ramp_time;
      r.hold_time = gate.settings.duration;
      out.push_back(r);
    }
    return out;
  }
};

namespace detail {

struct ConfigEntry {
  std::string value;
  int line = 0;
  std::string raw;
  bool used = false;
};

struct ConfigSection {
  std::string name;
  int line = 0;
  std::map<std::string, ConfigEntry> entries;
};

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  if (!s.empty() && s.back() == ',') out.emplace_back();
  return out;
}

/// Typed access to one section that records every problem instead of throwing.
class SectionReader {
 public:
  SectionReader(ConfigSection* section, std::vector<std::string>& errors, std::string file)
      : s_(section), errors_(errors), file_(std::move(file)) {}

  [[nodiscard]] bool present() const { return s_ != nullptr; }

  void error(const ConfigEntry& e, const std::string& msg) {
    errors_.push_back(file_ + ":" + std::to_string(e.line) + ": [" + s_->name + "] " + msg + "  | " + e.raw);
  }
  void error(const std::string& msg) {
    errors_.push_back(file_ + ":" + std::to_string(s_ ? s_->line : 0) + ": [" + (s_ ? s_->name : "?") + "] " + msg);
  }

  ConfigEntry* find(const std::string& key) {
    if (!s_) return nullptr;
    const auto it = s_->entries.find(key);
    if (it == s_->entries.end()) return nullptr;
    it->second.used = true;
    return &it->second;
  }

  ConfigEntry* require(const std::string& key) {
    ConfigEntry* e = find(key);
    if (!e && s_) error("missing required key '" + key + "'");
    return e;
  }

  static std::optional<double> to_double(const std::string& v) {
    double x = 0.0;
    const auto* end = v.data() + v.size();
    const auto r = std::from_chars(v.data(), end, x);
    if (r.ec != std::errc() || r.ptr != end || !std::isfinite(x)) return std::nullopt;
    return x;
  }

  static std::optional<int> to_int(const std::string& v) {
    int x = 0;
    const auto* end = v.data() + v.size();
    const auto r = std::from_chars(v.data(), end, x);
    if (r.ec != std::errc() || r.ptr != end) return std::nullopt;
    return x;
  }

  std::optional<double> number(ConfigEntry* e) {
    if (!e) return std::nullopt;
    auto x = to_double(e->value);
    if (!x) error(*e, "'" + e->value + "' is not a number");
    return x;
  }

  std::optional<int> integer(ConfigEntry* e) {
    if (!e) return std::nullopt;
    auto x = to_int(e->value);
    if (!x) error(*e, "'" + e->value + "' is not an integer");
    return x;
  }

  std::optional<bool> boolean(ConfigEntry* e) {
    if (!e) return std::nullopt;
    const std::string& v = e->value;
    if (v == "on" || v == "true" || v == "yes" || v == "1") return true;
    if (v == "off" || v == "false" || v == "no" || v == "0") return false;
    error(*e, "'" + v + "' is not a boolean (on/off)");
    return std::nullopt;
  }

  std::optional<std::string> choice(ConfigEntry* e, const std::vector<std::string>& allowed) {
    if (!e) return std::nullopt;
    if (std::find(allowed.begin(), allowed.end(), e->value) != allowed.end()) return e->value;
    std::string list;
    for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
    error(*e, "'" + e->value + "' is not one of {" + list + "}");
    return std::nullopt;
  }

  std::optional<std::vector<double>> numbers(ConfigEntry* e) {
    if (!e) return std::nullopt;
    std::vector<double> out;
    for (const auto& item : split_list(e->value)) {
      auto x = to_double(item);
      if (!x) {
        error(*e, "list item '" + item + "' is not a number");
        return std::nullopt;
      }
      out.push_back(*x);
    }
    if (out.empty()) error(*e, "empty list");
    return out;
  }

  std::optional<std::vector<int>> integers(ConfigEntry* e) {
    if (!e) return std::nullopt;
    std::vector<int> out;
    for (const auto& item : split_list(e->value)) {
      auto x = to_int(item);
      if (!x) {
        error(*e, "list item '" + item + "' is not an integer");
        return std::nullopt;
      }
      out.push_back(*x);
    }
    if (out.empty()) error(*e, "empty list");
    return out;
  }

  /// Occupation strings such as "110", one digit per fluxonium.
  std::optional<std::vector<std::vector<int>>> occupations(ConfigEntry* e) {
    if (!e) return std::nullopt;
    std::vector<std::vector<int>> out;
    for (const auto& item : split_list(e->value)) {
      std::vector<int> occ;
      for (char c : item) {
        if (c < '0' || c > '9') {
          error(*e, "'" + item + "' is not an occupation string such as 110");
          return std::nullopt;
        }
        occ.push_back(c - '0');
      }
      if (occ.empty()) {
        error(*e, "empty occupation string");
        return std::nullopt;
      }
      out.push_back(std::move(occ));
    }
    return out;
  }

  void positive(ConfigEntry* e, const std::optional<double>& x) {
    if (e && x && !(*x > 0.0)) error(*e, "value must be positive");
  }
  void non_negative(ConfigEntry* e, const std::optional<double>& x) {
    if (e && x && !(*x >= 0.0)) error(*e, "value must be non-negative");
  }

  void reject_unused() {
    if (!s_) return;
    for (auto& [key, e] : s_->entries) {
      if (!e.used) error(e, "unknown key '" + key + "'");
    }
  }

 private:
  ConfigSection* s_;
  std::vector<std::string>& errors_;
  std::string file_;
};

/// Split `name` into a family ("system.fluxonium") and an index, if it has one.
inline std::optional<std::pair<std::string, int>> indexed_section(const std::string& name) {
  const auto dot = name.rfind('.');
  if (dot == std::string::npos) return std::nullopt;
  const auto idx = SectionReader::to_int(name.substr(dot + 1));
  if (!idx) return std::nullopt;
  return std::pair{name.substr(0, dot), *idx};
}

}  // namespace detail

/// Parse and validate configuration text; `origin` names it in messages.
inline RunConfig parse_config_text(const std::string& text, const std::string& origin = "<config>") {
  using detail::ConfigEntry;
  using detail::ConfigSection;
  using detail::SectionReader;
  std::vector<std::string> errors;
  std::map<std::string, ConfigSection> sections;
  std::vector<std::string> order;
  ConfigSection* current = nullptr;

  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string body = line;
    const auto hash = body.find_first_of("#;");
    if (hash != std::string::npos) body.erase(hash);
    body = detail::trim(body);
    if (body.empty()) continue;
    const std::string where = origin + ":" + std::to_string(lineno) + ": ";
    if (body.front() == '[') {
      if (body.back() != ']' || body.size() < 3) {
        errors.push_back(where + "malformed section header  | " + line);
        current = nullptr;
        continue;
      }
      const std::string name = detail::trim(body.substr(1, body.size() - 2));
      if (sections.contains(name)) {
        errors.push_back(where + "duplicate section [" + name + "]  | " + line);
        current = nullptr;
        continue;
      }
      current = &sections[name];
      current->name = name;
      current->line = lineno;
      order.push_back(name);
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      errors.push_back(where + "expected 'key = value'  | " + line);
      continue;
    }
    const std::string key = detail::trim(body.substr(0, eq));
    const std::string value = detail::trim(body.substr(eq + 1));
    if (!current) {
      errors.push_back(where + "key '" + key + "' outside any section  | " + line);
      continue;
    }
    if (key.empty()) {
      errors.push_back(where + "empty key  | " + line);
      continue;
    }
    if (current->entries.contains(key)) {
      errors.push_back(where + "duplicate key '" + key + "'  | " + line);
      continue;
    }
    current->entries[key] = ConfigEntry{value, lineno, line, false};
  }

  RunConfig cfg;
  cfg.path = origin;
  cfg.text = text;

  auto reader = [&](const std::string& name) {
    const auto it = sections.find(name);
    return SectionReader(it == sections.end() ? nullptr : &it->second, errors, origin);
  };
  auto missing = [&](const std::string& name) { errors.push_back(origin + ": missing required section [" + name + "]"); };

  // Section names must be known.
  const std::vector<std::string> plain{"system", "gate", "simulation", "optimizer", "trace", "sweep", "output"};
  std::map<std::string, std::map<int, std::string>> families;
  for (const auto& name : order) {
    if (std::find(plain.begin(), plain.end(), name) != plain.end()) continue;
    const auto idx = detail::indexed_section(name);
    const int line_no = sections[name].line;
    if (idx && idx->first == "system.fluxonium") {
      if (idx->second < 0 || idx->second > 4) {
        errors.push_back(origin + ":" + std::to_string(line_no) + ": fluxonium index must be 0..4 in [" + name + "]");
      } else {
        families[idx->first][idx->second] = name;
      }
      continue;
    }
    if (idx && (idx->first == "system.coupler" || idx->first == "system.coupling")) {
      if (idx->second < 1 || idx->second > 4) {
        errors.push_back(origin + ":" + std::to_string(line_no) + ": coupler index must be 1..4 in [" + name + "]");
      } else {
        families[idx->first][idx->second] = name;
      }
      continue;
    }
    errors.push_back(origin + ":" + std::to_string(line_no) + ": unknown section [" + name + "]");
  }

  // [system]
  {
    auto r = reader("system");
    if (!r.present()) missing("system");
    int flux_levels = 4;
    int coupler_levels = 3;
    if (auto* e = r.find("fluxonium_basis")) {
      if (auto v = r.integer(e)) {
        if (*v < 40) r.error(*e, "fluxonium_basis must be at least 40");
        cfg.system.fluxonium_basis = *v;
      }
    }
    if (auto* e = r.find("fluxonium_levels")) {
      if (auto v = r.integer(e)) {
        if (*v < 3) r.error(*e, "fluxonium_levels must be at least 3");
        flux_levels = *v;
      }
    }
    if (auto* e = r.find("coupler_levels")) {
      if (auto v = r.integer(e)) {
        if (*v < 2) r.error(*e, "coupler_levels must be at least 2");
        coupler_levels = *v;
      }
    }
    r.reject_unused();

    const auto& fl = families["system.fluxonium"];
    int n_flux = 0;
    while (fl.contains(n_flux)) ++n_flux;
    if (n_flux == 0) missing("system.fluxonium.0");
    for (const auto& [k, name] : fl) {
      if (k >= n_flux) errors.push_back(origin + ": [" + name + "] is not contiguous with the lower fluxonium indices");
    }
    for (int k = 0; k < n_flux; ++k) {
      auto s = reader(fl.at(k));
      FluxoniumSpec f;
      f.n_levels = flux_levels;
      auto* ec = s.require("e_c_GHz");
      auto* el = s.require("e_l_GHz");
      auto* ej = s.require("e_j_GHz");
      auto* ph = s.require("phi_ext_over_2pi");
      const auto vc = s.number(ec);
      const auto vl = s.number(el);
      const auto vj = s.number(ej);
      if (vc) f.e_c = *vc;
      if (vl) f.e_l = *vl;
      if (vj) f.e_j = *vj;
      if (auto v = s.number(ph)) f.phi_ext = two_pi * *v;
      s.positive(ec, vc);
      s.positive(el, vl);
      s.non_negative(ej, vj);
      s.reject_unused();
      cfg.system.fluxoniums.push_back(f);
    }

    const auto& cl = families["system.coupler"];
    const auto& cp = families["system.coupling"];
    int n_coup = 0;
    while (cl.contains(n_coup + 1)) ++n_coup;
    for (const auto& [j, name] : cl) {
      if (j > n_coup) errors.push_back(origin + ": [" + name + "] is not contiguous with the lower coupler indices");
    }
    for (int j = 1; j <= n_coup; ++j) {
      auto s = reader(cl.at(j));
      TransmonCouplerSpec c;
      c.n_levels = coupler_levels;
      auto* ec = s.require("e_c_GHz");
      auto* ej = s.require("e_j_GHz");
      const auto vc = s.number(ec);
      const auto vj = s.number(ej);
      if (vc) c.e_c = *vc;
      if (vj) c.e_j = *vj;
      s.positive(ec, vc);
      s.positive(ej, vj);
      if (auto* ph = s.find("phi_ext_over_2pi")) {
        if (auto v = s.number(ph)) {
          c.phi_ext = two_pi * *v;
          if (!(std::abs(*v) < 0.5)) s.error(*ph, "coupler bias must satisfy |phi_ext / 2 pi| < 0.5");
        }
      }
      s.reject_unused();
      cfg.system.couplers.push_back(c);

      CouplingSpec g;
      if (!cp.contains(j)) {
        missing("system.coupling." + std::to_string(j));
      } else {
        auto t = reader(cp.at(j));
        if (auto v = t.number(t.require("j_c0_GHz"))) g.j_c0 = *v;
        if (auto v = t.number(t.require("j_cj_GHz"))) g.j_cj = *v;
        if (auto v = t.number(t.require("j_0j_GHz"))) g.j_0j = *v;
        t.reject_unused();
      }
      cfg.system.couplings.push_back(g);
    }
    for (const auto& [j, name] : cp) {
      if (j > n_coup) errors.push_back(origin + ": [" + name + "] has no matching [system.coupler." + std::to_string(j) + "]");
    }
    if (n_flux > 0 && n_coup + 1 < n_flux) {
      errors.push_back(origin + ": every neighbour fluxonium needs a coupler section (found " +
                       std::to_string(n_flux - 1) + " neighbours and " + std::to_string(n_coup) + " couplers)");
    }
  }

  // [gate]
  {
    auto r = reader("gate");
    if (!r.present()) missing("gate");
    GateSection& g = cfg.gate;
    auto* n_entry = r.require("n_neighbors");
    if (auto v = r.integer(n_entry)) {
      g.n_neighbors = *v;
      const auto defined = static_cast<int>(cfg.system.fluxoniums.size()) - 1;
      if (*v < 1 || *v > 4) {
        r.error(*n_entry, "n_neighbors must be 1..4");
      } else if (defined >= 0 && (*v > defined || *v > static_cast<int>(cfg.system.couplers.size()))) {
        r.error(*n_entry, "n_neighbors exceeds the fluxoniums/couplers defined in [system.*]");
      }
    }
    if (auto v = r.choice(r.find("target"), {"multi_cz", "identity"})) {
      g.target = *v == "multi_cz" ? GateTarget::multi_cz : GateTarget::identity;
    }
    if (auto* e = r.find("t_g_ns")) {
      const auto v = r.number(e);
      if (v) g.settings.duration = *v;
      r.positive(e, v);
    }
    if (auto v = r.choice(r.find("shape"), {"cosine", "gaussian", "flat_top"})) g.settings.shape = parse_pulse_shape(*v);
    if (auto* e = r.find("t_r_ns")) {
      const auto v = r.number(e);
      if (v) g.settings.ramp = *v;
      r.positive(e, v);
    }
    if (auto v = r.boolean(r.find("drag"))) g.settings.drag = *v;
    if (auto v = r.number(r.find("drag_alpha"))) g.settings.drag_alpha = *v;
    if (auto* e = r.find("drive_fluxoniums")) {
      if (auto v = r.integers(e)) {
        for (int k : *v) {
          if (k < 0 || k > g.n_neighbors) r.error(*e, "fluxonium " + std::to_string(k) + " is not part of the gate");
        }
        g.settings.drive_fluxoniums = *v;
      }
    }
    if (auto* e = r.find("coupler_bias_over_2pi")) {
      if (auto v = r.numbers(e)) {
        g.coupler_bias = *v;
        if (static_cast<int>(v->size()) != g.n_neighbors) {
          r.error(*e, "expected " + std::to_string(g.n_neighbors) + " biases (one per active coupler)");
        }
        for (double b : *v) {
          if (!(std::abs(b) < 0.5)) r.error(*e, "coupler bias must satisfy |phi_ext / 2 pi| < 0.5");
        }
      }
    }
    if (auto* e = r.find("amplitude_GHz")) {
      g.amplitude = r.number(e);
      r.non_negative(e, g.amplitude);
    }
    if (auto* e = r.find("frequency_GHz")) {
      g.frequency = r.number(e);
      r.positive(e, g.frequency);
    }
    if (g.settings.shape == PulseShape::flat_top) {
      const double tr = g.settings.ramp_for(g.n_neighbors);
      if (2.0 * tr > g.settings.duration) r.error("flat_top needs 2 t_r_ns <= t_g_ns");
    }
    r.reject_unused();
  }

  // [simulation]
  {
    auto r = reader("simulation");
    PropagationConfig& p = cfg.simulation.propagation;
    if (auto* e = r.find("dt_ns")) {
      const auto v = r.number(e);
      if (v) p.dt = *v;
      r.positive(e, v);
    }
    if (auto* e = r.find("order")) {
      if (auto v = r.integer(e)) {
        if (*v != 2 && *v != 4) r.error(*e, "order must be 2 or 4");
        p.order = *v;
      }
    }
    if (auto v = r.choice(r.find("frame"), {"interaction", "lab"})) p.frame = *v == "lab" ? Frame::lab : Frame::interaction;
    if (auto* e = r.find("projection_cutoff_GHz")) {
      const auto v = r.number(e);
      if (v) p.project_cutoff = *v;
      r.positive(e, v);
    }
    if (auto* e = r.find("dressed_cutoff_GHz")) {
      const auto v = r.number(e);
      if (v) p.dressed_cutoff = *v;
      r.positive(e, v);
    }
    if (auto v = r.boolean(r.find("ramp"))) cfg.simulation.ramp = *v;
    if (auto* e = r.find("ramp_time_ns")) {
      const auto v = r.number(e);
      if (v) cfg.simulation.ramp_time = *v;
      r.non_negative(e, v);
    }
    r.reject_unused();
  }

  // [optimizer]
  {
    auto r = reader("optimizer");
    TuneUpOptions& o = cfg.optimizer;
    if (auto* e = r.find("max_evaluations")) {
      if (auto v = r.integer(e)) {
        if (*v < 1) r.error(*e, "max_evaluations must be at least 1");
        o.max_evaluations = *v;
      }
    }
    if (auto* e = r.find("phase_weight")) {
      const auto v = r.number(e);
      if (v) o.phase_weight = *v;
      r.non_negative(e, v);
    }
    if (auto v = r.number(r.find("search_dt_ns"))) o.search_dt = *v;
    if (auto v = r.number(r.find("search_cutoff_GHz"))) o.search_cutoff = *v;
    r.reject_unused();
  }

  // [trace]
  {
    auto r = reader("trace");
    const int nf = cfg.gate.n_neighbors + 1;
    auto check = [&](detail::ConfigEntry* e, const std::vector<int>& occ) {
      if (static_cast<int>(occ.size()) != nf) {
        r.error(*e, "occupation strings need " + std::to_string(nf) + " digits (one per fluxonium)");
      }
      for (int o : occ) {
        if (o > 2) r.error(*e, "traced fluxonium levels must be 0, 1 or 2");
      }
    };
    if (auto* e = r.find("initial")) {
      if (auto v = r.occupations(e)) {
        if (v->size() != 1) r.error(*e, "exactly one initial state expected");
        cfg.trace.initial = v->front();
        check(e, v->front());
      }
    }
    if (auto* e = r.find("observables")) {
      if (auto v = r.occupations(e)) {
        for (const auto& occ : *v) check(e, occ);
        cfg.trace.observables = *v;
      }
    }
    if (auto* e = r.find("stride")) {
      if (auto v = r.integer(e)) {
        if (*v < 1) r.error(*e, "stride must be at least 1");
        cfg.trace.stride = static_cast<std::size_t>(std::max(1, *v));
      }
    }
    r.reject_unused();
  }

  // [sweep]
  {
    auto r = reader("sweep");
    if (r.present()) {
      if (auto v = r.choice(r.require("parameter"), {"j_ck_GHz", "t_g_ns"})) cfg.sweep.parameter = *v;
      if (auto* e = r.require("values")) {
        if (auto v = r.numbers(e)) {
          cfg.sweep.values = *v;
          if (!std::is_sorted(v->begin(), v->end())) r.error(*e, "values must be ascending");
          if (cfg.sweep.parameter == "t_g_ns") {
            for (double x : *v) {
              if (!(x > 0.0)) r.error(*e, "gate lengths must be positive");
            }
          }
        }
      }
    }
    r.reject_unused();
  }

  // [output]
  {
    auto r = reader("output");
    if (auto* e = r.find("directory")) {
      if (e->value.empty()) r.error(*e, "directory must not be empty");
      cfg.output.directory = e->value;
    }
    if (auto* e = r.find("formats")) {
      cfg.output.formats.clear();
      for (const auto& f : detail::split_list(e->value)) {
        if (f != "csv" && f != "json") r.error(*e, "unknown format '" + f + "' (csv, json)");
        cfg.output.formats.push_back(f);
      }
    }
    r.reject_unused();
  }

  if (!errors.empty()) throw ConfigError(std::move(errors));
  return cfg;
}

inline RunConfig parse_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError({path + ": cannot open configuration file"});
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

}  // namespace fluxsim
