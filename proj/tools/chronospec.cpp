// Command-line driver: one subcommand per experiment.

#include <chrono>
#include <ctime>
#include <iostream>
#include <array>
#include <cstdio>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "chronospec/bench.hpp"

namespace {

using namespace chronospec;

std::vector<int> parse_degrees(const std::string& text) {
  // "4", "1-8" or "2,4,6"
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto dash = item.find('-');
    if (dash != std::string::npos && dash > 0) {
      const int lo = std::stoi(item.substr(0, dash)), hi = std::stoi(item.substr(dash + 1));
      if (hi < lo) throw DomainError("degree range '" + item + "' is empty");
      for (int n = lo; n <= hi; ++n) out.push_back(n);
    } else if (!item.empty()) {
      out.push_back(std::stoi(item));
    }
  }
  if (out.empty()) throw DomainError("no degrees given");
  return out;
}

std::vector<std::array<long long, 3>> parse_cells(const std::string& text) {
  // "128x4x4,61x4x4"
  std::vector<std::array<long long, 3>> cells;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::array<long long, 3> c{};
    if (std::sscanf(item.c_str(), "%lldx%lldx%lld", &c[0], &c[1], &c[2]) != 3 || c[0] < 1 || c[1] < 1 || c[2] < 1)
      throw DomainError("resource cell '" + item + "' must look like NTAUxNALPHAxN with positive entries");
    cells.push_back(c);
  }
  return cells;
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral time-dependent Hamiltonian simulation with emulated QSVT linear solves"};
  app.require_subcommand(1);

  std::string problem = "rabi", mode = "global", solver = "direct", degree, segmentation, out = "out",
              format = "csv,json,svg", cells, timestamp;
  int ntau = -1, samples = 201, threads = 0;
  double epsilon = -1.0, kappa = 4.0;
  bool renormalize = false;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--problem", problem, "Built-in name (rabi, landau_zener, synthetic13) or JSON file");
    sub->add_option("--out", out, "Output directory");
    sub->add_option("--format", format, "Comma list of csv, json, svg");
    sub->add_option("--epsilon", epsilon, "QSVT polynomial accuracy");
    sub->add_option("--threads", threads, "Worker threads (capped by CHRONOSPEC_THREADS)");
    sub->add_option("--timestamp", timestamp, "Override the report timestamp");
  };
  const auto add_pipeline = [&](CLI::App* sub) {
    sub->add_option("--mode", mode, "global or sequential");
    sub->add_option("--solver", solver, "direct, qsvt_ideal or qsvt_circuit");
    sub->add_option("--degree,-n", degree, "Chebyshev degree (converge: list or range, e.g. 1-8)");
    sub->add_option("--ntau", ntau, "Number of segments (0 = minimal)");
    sub->add_option("--segmentation", segmentation, "uniform or adaptive");
    sub->add_option("--samples", samples, "Trajectory samples on [0, T]");
    sub->add_flag("--renormalize", renormalize, "Renormalize reconstructed global states");
  };

  CLI::App* sim = app.add_subcommand("simulate", "One pipeline run with oracle metrics");
  CLI::App* conv = app.add_subcommand("converge", "Sweep the Chebyshev degree");
  CLI::App* cmp = app.add_subcommand("compare", "Global vs sequential on one segmentation");
  CLI::App* res = app.add_subcommand("resources", "Register and invocation counts");
  CLI::App* qsp = app.add_subcommand("qsp-phases", "Synthesize and verify phases for 1/x");
  for (CLI::App* sub : {sim, conv, cmp, res, qsp}) add_common(sub);
  for (CLI::App* sub : {sim, conv, cmp, res}) add_pipeline(sub);
  res->add_option("--cells", cells, "Comma list of NTAUxNALPHAxN (default 128x4x4,61x4x4)");
  qsp->add_option("--kappa", kappa, "Condition number bound");

  CLI11_PARSE(app, argc, argv);

  try {
    CLI::App* chosen = app.get_subcommands().front();
    const Experiment experiment = parse_experiment(chosen->get_name());
    const Problem p = load_problem(problem);

    ExperimentOptions o;
    o.mode = parse_pipeline_mode(mode);
    o.solver = parse_solver_kind(solver);
    if (!degree.empty()) {
      const auto list = parse_degrees(degree);
      if (experiment == Experiment::Converge) o.degrees = list;
      else if (list.size() == 1) o.degree = list.front();
      else throw DomainError("--degree takes a single value for " + chosen->get_name());
    }
    if (ntau >= 0) o.n_tau = ntau;
    if (!segmentation.empty()) o.segmentation = parse_segmentation_mode(segmentation);
    if (epsilon > 0.0) o.epsilon = epsilon;
    if (!cells.empty()) o.resource_cells = parse_cells(cells);
    o.kappa = kappa;
    o.samples = samples;
    o.threads = threads;
    o.renormalize = renormalize;
    const auto formats = parse_formats(format);

    const Report report = run_experiment(p, experiment, o);
    const auto written = emit_report(report, out, formats, timestamp.empty() ? utc_now() : timestamp);
    for (const auto& f : written) std::cout << f.string() << '\n';
    return 0;
  } catch (const InfeasibleSegmentation& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
