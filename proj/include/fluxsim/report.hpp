#pragma once

// CSV tables (RFC 4180) and JSON views of results.

#include "fluxsim/calibrate.hpp"
#include "fluxsim/metrics.hpp"
#include "fluxsim/spectrum.hpp"

#include "json.hpp"

#include <charconv>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fluxsim {

using Json = nlohmann::ordered_json;

/// Shortest round-trip decimal form of a double.
inline std::string format_number(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  class Row {
   public:
    explicit Row(CsvTable& t) : t_(t) {}
    Row& operator<<(const std::string& s) {
      cells_.push_back(s);
      return *this;
    }
    Row& operator<<(const char* s) { return *this << std::string(s); }
    Row& operator<<(double x) { return *this << format_number(x); }
    Row& operator<<(int x) { return *this << std::to_string(x); }
    Row& operator<<(std::size_t x) { return *this << std::to_string(x); }
    Row& operator<<(bool b) { return *this << std::string(b ? "true" : "false"); }
    ~Row() { t_.add(std::move(cells_)); }
    Row(const Row&) = delete;
    Row& operator=(const Row&) = delete;

   private:
    CsvTable& t_;
    std::vector<std::string> cells_;
  };

  Row row() { return Row(*this); }

  void add(std::vector<std::string> cells) {
    if (cells.size() != header_.size()) throw std::logic_error("csv: row width differs from header");
    rows_.push_back(std::move(cells));
  }

  [[nodiscard]] const std::vector<std::string>& header() const { return header_; }
  [[nodiscard]] std::size_t size() const { return rows_.size(); }

  static std::string quote(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
      if (c == '"') out += '"';
      out += c;
    }
    return out + "\"";
  }

  [[nodiscard]] std::string str() const {
    std::string out;
    auto line = [&out](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += ',';
        out += quote(cells[i]);
      }
      out += "\r\n";
    };
    line(header_);
    for (const auto& r : rows_) line(r);
    return out;
  }

  void write(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << str();
    if (!f) throw std::runtime_error("failed writing " + path);
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

inline std::string occupation_string(const std::vector<int>& occ) {
  std::string s;
  for (int o : occ) s += static_cast<char>('0' + o);
  return s;
}

inline Json to_json(const PhaseTerms& t) {
  Json out = Json::object();
  for (unsigned mask = 0; mask < t.coefficients.size(); ++mask) out[PhaseTerms::name(mask, t.n_qubits)] = t[mask];
  return out;
}

inline Json to_json(const GateReport& r) {
  return Json{{"fidelity", r.fidelity},
              {"error", r.error},
              {"leakage", r.leakage},
              {"z_corrections", r.z_corrections},
              {"phase_terms", to_json(r.phase_terms)},
              {"conditional_phase", r.conditional_phase},
              {"target_phase_error", r.target_phase_error},
              {"diagonal_dominant", r.diagonal_dominant}};
}

inline Json to_json(const TransitionTable& t) {
  return Json{{"gate_frequency_GHz", t.gate_frequency},
              {"min_detuning_MHz", 1e3 * t.min_detuning},
              {"nearest_fluxonium", t.rows.at(t.nearest_row).fluxonium},
              {"nearest_others", t.rows.at(t.nearest_row).others.str()},
              {"ambiguous_rows", t.ambiguous_rows()}};
}

inline Json to_json(const TuneUpResult& r) {
  Json trace = Json::array();
  for (const auto& [k, c] : r.cost_trace) trace.push_back({k, c});
  return Json{{"amplitude_GHz", r.amplitude},
              {"frequency_GHz", r.frequency},
              {"converged", r.converged},
              {"addressable", r.addressable},
              {"evaluations", r.evaluations},
              {"initial_cost", r.initial_cost},
              {"final_cost", r.final_cost},
              {"message", r.message},
              {"initial_amplitude_GHz", r.guess.amplitude},
              {"initial_frequency_GHz", r.guess.frequency},
              {"drive_phases", r.guess.phases},
              {"min_detuning_MHz", 1e3 * r.guess.min_detuning},
              {"report", to_json(r.report)},
              {"cost_trace", trace}};
}

}  // namespace fluxsim
