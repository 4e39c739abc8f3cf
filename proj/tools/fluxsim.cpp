// fluxsim: command-line front end.
//
//   fluxsim <spectrum|shifts|transitions|gate|calibrate|sweep|trace> --config <path>
//           [--out <dir>] [--jobs <k>] [--gnuplot]

#include "fluxsim/calibrate.hpp"
#include "fluxsim/config.hpp"
#include "fluxsim/report.hpp"

#include "CLI11.hpp"

#include <openssl/evp.h>

#include <Eigen/Core>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace fluxsim;

namespace {

constexpr const char* fluxsim_version = FLUXSIM_VERSION;

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  std::ostringstream out;
  for (unsigned i = 0; i < len; ++i) out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  return out.str();
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct Run {
  RunConfig cfg;
  fs::path out;
  int jobs = 1;
  bool gnuplot = false;
  std::vector<std::string> written;

  void csv(const std::string& name, const CsvTable& t, const std::string& title = {}) {
    if (!cfg.output.wants("csv")) return;
    const fs::path p = out / name;
    t.write(p.string());
    written.push_back(name);
    if (gnuplot) script(name, t, title.empty() ? name : title);
  }

  void json(const std::string& name, const Json& j) {
    if (!cfg.output.wants("json")) return;
    std::ofstream f(out / name, std::ios::binary);
    f << j.dump(2) << '\n';
    if (!f) throw std::runtime_error("failed writing " + (out / name).string());
    written.push_back(name);
  }

  // Companion gnuplot script: first column against every other numeric column.
  void script(const std::string& csv_name, const CsvTable& t, const std::string& title) {
    const std::string name = fs::path(csv_name).replace_extension(".gp").string();
    std::ofstream f(out / name);
    f << "set datafile separator ','\n"
      << "set key outside autotitle columnhead\n"
      << "set title '" << title << "'\n"
      << "set xlabel '" << t.header().front() << "'\n"
      << "set terminal pngcairo size 900,600\n"
      << "set output '" << fs::path(csv_name).replace_extension(".png").string() << "'\n"
      << "plot";
    for (std::size_t c = 2; c <= t.header().size(); ++c) {
      f << (c == 2 ? " " : ", ") << "'" << csv_name << "' using 1:" << c << " with linespoints";
    }
    f << '\n';
    written.push_back(name);
  }

  [[nodiscard]] std::optional<double> cutoff() const { return cfg.simulation.propagation.project_cutoff; }
  [[nodiscard]] double reach() const { return cfg.simulation.propagation.dressed_cutoff + 0.5; }

  [[nodiscard]] DressedSystem solve() const { return solve_system(cfg.star_system(), cutoff(), reach()); }

  [[nodiscard]] GateSettings settings() const {
    GateSettings s = cfg.gate.settings;
    s.propagation = cfg.simulation.propagation;
    return s;
  }
};

std::string label_string(const std::vector<int>& digits, const StarSystem& system) {
  std::ostringstream out;
  const auto names = system.site_names();
  for (std::size_t i = 0; i < digits.size(); ++i) out << (i ? " " : "") << names[i] << "=" << digits[i];
  return out.str();
}

void cmd_spectrum(Run& run) {
  const auto& sys = run.cfg.system;
  CsvTable flux({"fluxonium", "omega01_GHz", "omega12_GHz", "omega03_GHz"});
  std::printf("%-6s %12s %12s %12s\n", "", "w01 (GHz)", "w12 (GHz)", "w03 (GHz)");
  for (std::size_t k = 0; k < sys.fluxoniums.size(); ++k) {
    FluxoniumSpec f = sys.fluxoniums[k];
    f.n_levels = std::max(f.n_levels, 4);
    const CircuitLevels lv = diagonalize_fluxonium(f, sys.fluxonium_basis);
    const double w01 = lv.energies(1);
    const double w12 = lv.energies(2) - lv.energies(1);
    const double w03 = lv.energies(3);
    flux.row() << ("Q" + std::to_string(k)) << w01 << w12 << w03;
    std::printf("Q%-5zu %12.4f %12.4f %12.4f\n", k, w01, w12, w03);
  }
  run.csv("fluxonium_transitions.csv", flux, "bare fluxonium transitions");

  const StarSystem star = run.cfg.star_system();
  CsvTable coup({"coupler", "bias", "phi_ext_over_2pi", "omega_c_GHz", "alpha_c_GHz"});
  for (std::size_t j = 0; j < sys.couplers.size(); ++j) {
    auto emit = [&](const char* which, const TransmonCouplerSpec& c) {
      const CouplerDerived d = coupler_parameters(c);
      coup.row() << ("C" + std::to_string(j + 1)) << which << c.phi_ext / two_pi << d.omega_c << d.alpha_c;
      std::printf("C%-5zu %-5s phi/2pi=%6.3f  omega_c=%9.4f GHz  alpha_c=%8.4f GHz\n", j + 1, which,
                  c.phi_ext / two_pi, d.omega_c, d.alpha_c);
    };
    emit("idle", sys.couplers[j]);
    if (j < star.couplers.size()) emit("gate", star.couplers[j]);
  }
  run.csv("couplers.csv", coup);

  const DressedSystem dressed = run.solve();
  const auto& spec = dressed.spectrum;
  const double e0 = spec.eigenvalues(0);
  CsvTable levels({"index", "energy_GHz", "dominant_state", "dominant_weight", "label_overlap"});
  for (Eigen::Index e = 0; e < spec.eigenvalues.size(); ++e) {
    const double en = spec.eigenvalues(e) - e0;
    if (en > run.cfg.simulation.propagation.dressed_cutoff) break;
    Eigen::Index row = 0;
    const double w = spec.eigenvectors.col(e).cwiseAbs2().maxCoeff(&row);
    const auto digits = spec.basis.digits(spec.basis.full_index(static_cast<std::size_t>(row)));
    const auto lab = spec.eig_to_label[static_cast<std::size_t>(e)];
    const std::string ov = lab >= 0 ? format_number(spec.overlap.at(static_cast<std::size_t>(lab))) : "";
    levels.row() << static_cast<int>(e) << en << label_string(digits, star) << w << ov;
  }
  run.csv("dressed_levels.csv", levels, "dressed levels");
  std::printf("dressed levels below %.1f GHz: %zu (basis dim %zu)\n", run.cfg.simulation.propagation.dressed_cutoff,
              levels.size(), spec.basis.dim());
}

void cmd_transitions(Run& run) {
  const DressedSystem dressed = run.solve();
  const TransitionTable t = transition_table(dressed);
  CsvTable tab({"fluxonium", "others", "frequency_GHz", "detuning_from_gate_MHz", "gate_row", "ambiguous"});
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& r = t.rows[i];
    tab.row() << ("Q" + std::to_string(r.fluxonium)) << r.others.str() << r.frequency
              << 1e3 * (r.frequency - t.gate_frequency) << (i == t.gate_row) << r.ambiguous;
  }
  run.csv("transitions.csv", tab);
  const auto& near = t.rows[t.nearest_row];
  CsvTable sum({"n_neighbors", "gate_frequency_GHz", "min_detuning_MHz", "nearest_fluxonium", "nearest_others",
                "ambiguous_rows"});
  sum.row() << run.cfg.gate.n_neighbors << t.gate_frequency << 1e3 * t.min_detuning
            << ("Q" + std::to_string(near.fluxonium)) << near.others.str() << t.ambiguous_rows();
  run.csv("transitions_summary.csv", sum);
  run.json("transitions.json", to_json(t));
  std::printf("gate frequency %.6f GHz, (delta')_Min = %.2f MHz (Q%d, others %s), ambiguous rows %zu\n",
              t.gate_frequency, 1e3 * t.min_detuning, near.fluxonium, near.others.str().c_str(), t.ambiguous_rows());
}

void cmd_shifts(Run& run) {
  if (run.cfg.sweep.parameter != "j_ck_GHz") throw std::invalid_argument("shifts needs [sweep] parameter = j_ck_GHz");
  const StarSystem system = run.cfg.star_system();
  const int n = system.n_neighbors();
  const auto points = shift_sweep(system, run.cfg.sweep.values, {}, run.jobs);
  std::vector<std::string> header{"j_ck_GHz"};
  for (int j = 0; j < n; ++j) header.push_back("delta_" + NeighborConfig::unit(j, n).str() + "_MHz");
  for (const char* h : {"delta_all_ones_MHz", "sum_of_singles_MHz", "additivity_residual", "ambiguous",
                        "additivity_broken", "jump", "breakdown", "error"}) {
    header.emplace_back(h);
  }
  CsvTable tab(header);
  for (const auto& p : points) {
    std::vector<std::string> cells{format_number(p.j_ck)};
    for (int j = 0; j < n; ++j) {
      cells.push_back(p.error.empty() ? format_number(1e3 * p.single_shifts[static_cast<std::size_t>(j)]) : "");
    }
    const bool ok = p.error.empty();
    cells.push_back(ok ? format_number(1e3 * p.all_ones_shift) : "");
    cells.push_back(ok ? format_number(1e3 * p.sum_of_singles) : "");
    cells.push_back(ok ? format_number(p.additivity_residual) : "");
    for (bool b : {p.ambiguous, p.additivity_broken, p.jump, p.breakdown()}) cells.emplace_back(b ? "true" : "false");
    cells.push_back(p.error);
    tab.add(cells);
    std::printf("J=%.3f GHz  delta_1=%9.3f MHz  sum=%9.3f MHz  residual=%.3f%s%s\n", p.j_ck, 1e3 * p.all_ones_shift,
                1e3 * p.sum_of_singles, p.additivity_residual, p.breakdown() ? "  BREAKDOWN" : "",
                p.ambiguous ? "  (ambiguous)" : "");
  }
  run.csv("shifts.csv", tab, "state-dependent shifts");
}

Json gate_json(const RunConfig& cfg, const DressedSystem& dressed, const GateSettings& s, const InitialGuess& g,
               double amp, double freq) {
  return Json{{"n_neighbors", cfg.gate.n_neighbors},
              {"target", to_string(cfg.gate.target)},
              {"shape", to_string(s.shape)},
              {"t_g_ns", s.duration},
              {"t_r_ns", s.shape == PulseShape::flat_top ? s.ramp_for(dressed.system.n_neighbors()) : 0.0},
              {"drag", s.drag},
              {"drag_alpha", s.drag_alpha},
              {"drive_fluxoniums", s.drive_fluxoniums},
              {"drive_phases", g.phases},
              {"amplitude_GHz", amp},
              {"frequency_GHz", freq},
              {"min_detuning_MHz", 1e3 * g.min_detuning},
              {"flux_ramps", cfg.simulation.ramp},
              {"ramp_time_ns", cfg.simulation.ramp ? cfg.simulation.ramp_time : 0.0},
              {"dt_ns", s.propagation.dt},
              {"frame", to_string(s.propagation.frame)}};
}

void cmd_gate(Run& run) {
  const DressedSystem dressed = run.solve();
  const GateSettings s = run.settings();
  const InitialGuess g = initial_guess(dressed, s);
  const double amp = run.cfg.gate.amplitude.value_or(g.amplitude);
  const double freq = run.cfg.gate.frequency.value_or(g.frequency);
  const auto tones = gate_tones(s, g, dressed.system.n_neighbors(), amp, freq);
  const EvolutionResult ev =
      computational_evolution_operator(dressed, tones, s.propagation, run.cfg.flux_ramps());
  const int nq = qubit_count(ev.u_comp.rows());
  const bool cz = run.cfg.gate.target == GateTarget::multi_cz;
  const ComplexMatrix target = cz ? multi_controlled_z(nq) : ComplexMatrix::Identity(ev.u_comp.rows(), ev.u_comp.cols());
  const GateReport rep = gate_report(ev.u_comp, target, cz ? std::numbers::pi : 0.0);

  CsvTable u({"row_state", "column_state", "re", "im", "probability"});
  for (Eigen::Index i = 0; i < ev.u_comp.rows(); ++i) {
    for (Eigen::Index j = 0; j < ev.u_comp.cols(); ++j) {
      const cplx z = ev.u_comp(i, j);
      u.row() << occupation_string(NeighborConfig::from_index(static_cast<unsigned>(i), nq).s)
              << occupation_string(NeighborConfig::from_index(static_cast<unsigned>(j), nq).s) << z.real()
              << z.imag() << std::norm(z);
    }
  }
  run.csv("gate_unitary.csv", u);
  Json j = to_json(rep);
  j["gate"] = gate_json(run.cfg, dressed, s, g, amp, freq);
  j["duration_ns"] = ev.duration;
  j["subspace_dim"] = ev.subspace_dim;
  j["column_norms"] = ev.column_norms;
  run.json("gate_report.json", j);
  std::printf("fidelity %.8f  error %.3e  leakage %.3e  phi_cond %.5f rad\n", rep.fidelity, rep.error, rep.leakage,
              rep.conditional_phase);
}

void cmd_calibrate(Run& run) {
  const DressedSystem dressed = run.solve();
  const GateSettings s = run.settings();
  const TuneUpResult r = tune_up(dressed, s, run.cfg.optimizer);
  CsvTable trace({"evaluation", "best_cost"});
  for (const auto& [k, c] : r.cost_trace) trace.row() << k << c;
  run.csv("cost_trace.csv", trace, "tune-up cost");
  Json j = to_json(r);
  j["gate"] = gate_json(run.cfg, dressed, s, r.guess, r.amplitude, r.frequency);
  run.json("calibration.json", j);
  std::printf("amplitude %.6f GHz  frequency %.6f GHz  error %.3e  leakage %.3e  evaluations %d  %s\n", r.amplitude,
              r.frequency, r.report.error, r.report.leakage, r.evaluations, r.message.c_str());
}

void cmd_sweep(Run& run) {
  if (run.cfg.sweep.parameter != "t_g_ns") throw std::invalid_argument("sweep needs [sweep] parameter = t_g_ns");
  const DressedSystem dressed = run.solve();
  const auto rows = error_vs_length_sweep(dressed, run.settings(), run.cfg.sweep.values, run.cfg.optimizer, run.jobs);
  CsvTable tab({"t_g_ns", "error", "leakage", "omega_d_amp_GHz", "omega_drive_GHz", "converged", "failure"});
  bool failed = false;
  for (const auto& r : rows) {
    if (r.failure.empty()) {
      tab.row() << r.duration << r.error << r.leakage << r.amplitude << r.frequency << r.converged << "";
    } else {
      failed = true;
      tab.row() << r.duration << "" << "" << "" << "" << false << r.failure;
    }
    std::printf("t_g=%6.1f ns  error %.3e  leakage %.3e %s\n", r.duration, r.error, r.leakage, r.failure.c_str());
  }
  run.csv("sweep.csv", tab, "gate error vs length");
  if (failed) throw std::runtime_error("sweep: some points failed (see the failure column)");
}

void cmd_trace(Run& run) {
  const DressedSystem dressed = run.solve();
  const GateSettings s = run.settings();
  const InitialGuess g = initial_guess(dressed, s);
  const double amp = run.cfg.gate.amplitude.value_or(g.amplitude);
  const double freq = run.cfg.gate.frequency.value_or(g.frequency);
  const auto tones = gate_tones(s, g, dressed.system.n_neighbors(), amp, freq);
  const int nf = dressed.system.n_fluxoniums();
  std::vector<int> initial = run.cfg.trace.initial;
  if (initial.empty()) initial.assign(static_cast<std::size_t>(nf), 1);
  auto observables = run.cfg.trace.observables;
  if (observables.empty()) {
    observables.push_back(initial);
    auto up = initial;
    up[0] = 2;
    observables.push_back(up);
  }
  std::vector<std::vector<int>> labels;
  for (const auto& o : observables) labels.push_back(star_label(o));
  PropagationConfig p = s.propagation;
  p.trace_stride = run.cfg.trace.stride;
  const PopulationTrace tr = population_trace(dressed, tones, star_label(initial), labels, p, run.cfg.flux_ramps());
  std::vector<std::string> header{"t_ns"};
  for (const auto& o : observables) header.push_back("P_" + occupation_string(o));
  CsvTable tab(header);
  for (std::size_t i = 0; i < tr.times.size(); ++i) {
    std::vector<std::string> cells{format_number(tr.times[i])};
    for (double v : tr.populations[i]) cells.push_back(format_number(v));
    tab.add(cells);
  }
  run.csv("trace.csv", tab, "populations");
  std::printf("%zu samples of %zu populations\n", tr.times.size(), observables.size());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fluxsim: fluxonium star-system spectra and multi-qubit gate simulation"};
  std::string command;
  std::string config_path;
  std::string out_dir;
  int jobs = 1;
  bool gnuplot = false;
  app.add_option("command", command, "spectrum | shifts | transitions | gate | calibrate | sweep | trace")
      ->required()
      ->check(CLI::IsMember({"spectrum", "shifts", "transitions", "gate", "calibrate", "sweep", "trace"}));
  app.add_option("--config", config_path, "run configuration file")->required();
  app.add_option("--out", out_dir, "output directory (overrides [output] directory)");
  app.add_option("--jobs", jobs, "worker threads for sweeps")->check(CLI::PositiveNumber);
  app.add_flag("--gnuplot", gnuplot, "write companion gnuplot scripts");
  CLI11_PARSE(app, argc, argv);

  Run run;
  try {
    run.cfg = parse_config(config_path);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << '\n';
    return 2;
  }
  run.out = out_dir.empty() ? fs::path(run.cfg.output.directory) : fs::path(out_dir);
  run.jobs = jobs;
  run.gnuplot = gnuplot;
  std::error_code ec;
  fs::create_directories(run.out, ec);
  if (ec) {
    std::cerr << "cannot create output directory " << run.out << ": " << ec.message() << '\n';
    return 1;
  }

  const std::string started = utc_now();
  const auto t0 = std::chrono::steady_clock::now();
  int status = 0;
  std::string error;
  try {
    if (command == "spectrum") cmd_spectrum(run);
    if (command == "transitions") cmd_transitions(run);
    if (command == "shifts") cmd_shifts(run);
    if (command == "gate") cmd_gate(run);
    if (command == "calibrate") cmd_calibrate(run);
    if (command == "sweep") cmd_sweep(run);
    if (command == "trace") cmd_trace(run);
  } catch (const std::exception& e) {
    status = 1;
    error = e.what();
    std::cerr << "fluxsim " << command << ": " << error << '\n';
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  Json manifest{{"command", command},
                {"config_path", config_path},
                {"config_sha256", sha256_hex(run.cfg.text)},
                {"versions",
                 {{"fluxsim", fluxsim_version},
                  {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                std::to_string(EIGEN_MINOR_VERSION)},
                  {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                        std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                        std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                  {"cli11", CLI11_VERSION},
                  {"compiler", __VERSION__}}},
                {"started_utc", started},
                {"wall_time_s", wall},
                {"jobs", jobs},
                {"outputs", run.written},
                {"status", status == 0 ? "ok" : "error"},
                {"error", error}};
  std::ofstream mf(run.out / "manifest.json", std::ios::binary);
  mf << manifest.dump(2) << '\n';
  if (!mf) {
    std::cerr << "failed writing manifest\n";
    return 1;
  }
  return status;
}
