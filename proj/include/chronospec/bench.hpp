#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "chronospec/oracle.hpp"

namespace chronospec {

// ---------------------------------------------------------------------------
// Problems
// ---------------------------------------------------------------------------

struct ProblemDefaults {
  int degree = 4;
  SegmentationMode segmentation = SegmentationMode::Uniform;
  /// 0 = minimal count satisfying the per-segment bound.
  int n_tau = 0;
  double epsilon = 1e-6;
};

struct Problem {
  std::string name;
  LcuHamiltonian hamiltonian;
  std::uint64_t reference = 0;
  int K = 1;
  /// Computational basis states summed by the observable.
  std::vector<std::uint64_t> observable_indices;
  std::string observable_label;
  ProblemDefaults defaults;
  /// Canonical description the problem was built from.
  nlohmann::json source;

  /// FNV-1a 64 of the canonical description, hex.
  std::string hash() const;
  ObservableSpec observable() const;
};

/// Schema:
///   {"name": str, "n_qubits": int, "horizon": num, "terms": [{"pauli": str, "coeff": ..}],
///    "reference": int | bitstring, "K": int,
///    "observable": {"label": str, "basis_states": [int | bitstring, ..]},
///    "defaults": {"degree": int, "segmentation": "uniform"|"adaptive", "n_tau": int, "epsilon": num}}
/// Only the Hamiltonian fields are required. Errors name the offending field.
Problem problem_from_json(const nlohmann::json& j);

/// Built-in name ("rabi", "landau_zener", "synthetic13") or path to a JSON file.
Problem load_problem(const std::string& name_or_path);

std::vector<std::string> builtin_problem_names();
/// Canonical JSON of a built-in problem.
nlohmann::json builtin_problem_json(const std::string& name);

/// Everything derived from a problem before any discretization.
struct PreparedProblem {
  VariationalBasis basis;
  ReducedDynamics reduced;
  VectorXc alpha0;
  MatrixFn A;
  /// Observable expressed on the variational parameters.
  ObservableSpec reduced_observable;
  /// Indices i of alpha entering the observable.
  std::vector<int> observable_components;
};

PreparedProblem prepare_problem(const Problem& p);

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

enum class Experiment { Simulate, Converge, Compare, Resources, QspPhases };

std::string to_string(Experiment e);
Experiment parse_experiment(const std::string& s);

struct ExperimentOptions {
  PipelineMode mode = PipelineMode::Global;
  SolverKind solver = SolverKind::Direct;
  std::optional<int> degree;
  std::optional<int> n_tau;
  std::optional<SegmentationMode> segmentation;
  std::optional<double> epsilon;
  /// converge: degrees to sweep.
  std::vector<int> degrees{1, 2, 3, 4, 5, 6, 7, 8};
  /// resources: (N_tau, N_alpha, n) cells; the problem's own cell is appended.
  std::vector<std::array<long long, 3>> resource_cells{{128, 4, 4}, {61, 4, 4}};
  /// qsp_phases: condition bound.
  double kappa = 4.0;
  /// Trajectory sample count on [0, T].
  int samples = 201;
  /// Worker threads; 0 = CHRONOSPEC_THREADS or hardware concurrency.
  int threads = 0;
  bool renormalize = false;
};

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct Plot {
  std::string name;
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = false;
  std::vector<Series> series;
};

struct Report {
  Experiment experiment = Experiment::Simulate;
  /// Summary document; emit_report adds the timestamp and file list.
  nlohmann::json summary;
  std::vector<Table> tables;
  std::vector<Plot> plots;
};

inline constexpr const char* kToolVersion = "0.1.0";

/// All computation happens here; failures leave nothing on disk.
Report run_experiment(const Problem& problem, Experiment experiment, const ExperimentOptions& options);

enum class ReportFormat { Csv, Json, Svg };

std::vector<ReportFormat> parse_formats(const std::string& comma_list);

/// Writes `<experiment>_<table>.csv`, `<experiment>_summary.json` and
/// `<experiment>_<plot>.svg` into `out_dir`; returns the written paths.
/// `timestamp` is the only field allowed to differ between identical runs.
std::vector<std::filesystem::path> emit_report(const Report& report, const std::filesystem::path& out_dir,
                                               const std::vector<ReportFormat>& formats,
                                               const std::string& timestamp);

void write_csv(std::ostream& os, const Table& table);
void write_svg(std::ostream& os, const Plot& plot);

// ---------------------------------------------------------------------------
// Worker pool
// ---------------------------------------------------------------------------

/// min(CHRONOSPEC_THREADS if set, hardware concurrency), at least 1.
int worker_count();

/// Runs task(i) for i in [0, count) on up to `threads` workers (0 = worker_count()).
/// The first exception thrown by any task is rethrown after all workers stop.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& task, int threads = 0);

}  // namespace chronospec
