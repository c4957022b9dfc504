#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "chronospec/bench.hpp"

using namespace chronospec;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("chronospec_test_" + name);
  fs::remove_all(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count_ext(const std::vector<fs::path>& files, const std::string& ext) {
  std::size_t n = 0;
  for (const auto& f : files) n += f.extension() == ext;
  return n;
}

// Tag balance and a single root; enough to catch truncated or interleaved output.
bool svg_well_formed(const std::string& s) {
  if (s.find("<svg") == std::string::npos || s.find("</svg>") == std::string::npos) return false;
  std::vector<std::string> stack;
  std::size_t i = 0;
  while ((i = s.find('<', i)) != std::string::npos) {
    const std::size_t j = s.find('>', i);
    if (j == std::string::npos) return false;
    std::string tag = s.substr(i + 1, j - i - 1);
    i = j + 1;
    if (tag.empty() || tag[0] == '?' || tag[0] == '!') continue;
    if (tag.back() == '/') continue;
    const bool closing = tag[0] == '/';
    const std::string name = tag.substr(closing, tag.find_first_of(" \t\n", closing) - closing);
    if (closing) {
      if (stack.empty() || stack.back() != name) return false;
      stack.pop_back();
    } else {
      stack.push_back(name);
    }
  }
  return stack.empty();
}

}  // namespace

TEST(Problems, RabiBasisHasTwoStates) {
  const Problem p = load_problem("rabi");
  EXPECT_EQ(p.hamiltonian.n_qubits(), 1);
  const auto pp = prepare_problem(p);
  EXPECT_EQ(pp.basis.size(), 2u);
  EXPECT_EQ(pp.observable_components, (std::vector<int>{1}));
}

TEST(Problems, Synthetic13Strings) {
  const Problem p = load_problem("synthetic13");
  const std::vector<std::string> expected{"IIII", "IIIX", "IIIY", "IIIZ", "IXII", "IYII", "IZII",
                                          "IIZX", "IIZY", "IIZZ", "ZXZI", "ZYZI", "ZZZI"};
  ASSERT_EQ(p.hamiltonian.size(), 13u);
  for (std::size_t g = 0; g < 13; ++g) EXPECT_EQ(p.hamiltonian.term(g).op.to_text(), expected[g]);
  const auto pp = prepare_problem(p);
  EXPECT_EQ(pp.basis.size(), 4u);
}

TEST(Problems, AllBuiltinsRoundTripThroughJson) {
  for (const auto& name : builtin_problem_names()) {
    const Problem a = load_problem(name);
    const Problem b = problem_from_json(builtin_problem_json(name));
    EXPECT_EQ(a.hash(), b.hash());
    EXPECT_EQ(a.hash().size(), 16u);
  }
  EXPECT_THROW(load_problem("no_such_problem"), std::exception);
}

TEST(Problems, MalformedFieldsAreNamed) {
  json j = builtin_problem_json("rabi");
  j["terms"][1]["coeff"] = {{"type", "trig"}, {"amplitude", "big"}};
  try {
    problem_from_json(j);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("terms[1]"), std::string::npos) << e.what();
  }
  j = builtin_problem_json("rabi");
  j["observable"]["basis_states"] = {7};
  try {
    problem_from_json(j);
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("observable"), std::string::npos) << e.what();
  }
  j = builtin_problem_json("rabi");
  j["K"] = "one";
  EXPECT_THROW(problem_from_json(j), ParseError);
}

TEST(Problems, LoadFromFile) {
  const fs::path d = fresh_dir("load");
  fs::create_directories(d);
  json j = builtin_problem_json("landau_zener");
  j["name"] = "lz_copy";
  std::ofstream(d / "lz.json") << j.dump(2);
  EXPECT_EQ(load_problem((d / "lz.json").string()).name, "lz_copy");
  std::ofstream(d / "broken.json") << "{\"n_qubits\": 1,";
  EXPECT_THROW(load_problem((d / "broken.json").string()), ParseError);
}

TEST(Experiments, ConvergeHasOneRowPerDegree) {
  ExperimentOptions o;
  o.degrees = {2, 3, 4, 5};
  o.samples = 41;
  const Report r = run_experiment(load_problem("rabi"), Experiment::Converge, o);
  ASSERT_EQ(r.tables.front().name, "convergence");
  EXPECT_EQ(r.tables.front().rows.size(), 4u);
  double prev = 1.0;
  for (const auto& row : r.tables.front().rows) {
    EXPECT_LT(row[1], prev);
    prev = row[1];
  }
}

TEST(Experiments, CompareRabiEndpointsAgree) {
  ExperimentOptions o;
  o.samples = 21;
  const Report r = run_experiment(load_problem("rabi"), Experiment::Compare, o);
  EXPECT_LE(r.summary["metrics"]["max_endpoint_discrepancy"].get<double>(), 1e-10);
  EXPECT_LE(r.summary["metrics"]["max_sequential_norm_deviation"].get<double>(), 1e-12);
}

TEST(Experiments, ResourcesRows) {
  const Report r = run_experiment(load_problem("rabi"), Experiment::Resources, {});
  const auto& rows = r.summary["rows"];
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows[0]["dimension"], 2560);
  EXPECT_EQ(rows[0]["qubits"], 13);
  EXPECT_EQ(rows[3]["dimension"], 40);
  EXPECT_EQ(rows[3]["qubits"], 7);
  EXPECT_EQ(rows[3]["invocations"], 61);
}

TEST(Experiments, QspPhasesHeldOut) {
  ExperimentOptions o;
  o.kappa = 3.0;
  o.epsilon = 1e-4;
  const Report r = run_experiment(load_problem("rabi"), Experiment::QspPhases, o);
  EXPECT_LE(r.summary["held_out_max_error"].get<double>(), 1e-8);
  const int d = r.summary["phases"]["phases"].size();
  EXPECT_EQ(r.summary["circuit_depth_layers"], 4 * d + 2);
}

TEST(Experiments, InfeasibleOptionsWriteNothing) {
  const fs::path d = fresh_dir("infeasible");
  ExperimentOptions o;
  o.segmentation = SegmentationMode::Adaptive;
  o.n_tau = 1;
  EXPECT_THROW(
      {
        const Report r = run_experiment(load_problem("rabi"), Experiment::Simulate, o);
        emit_report(r, d, {ReportFormat::Csv}, "x");
      },
      InfeasibleSegmentation);
  EXPECT_FALSE(fs::exists(d));
}

TEST(Reports, SimulateFilesAndDeterminism) {
  ExperimentOptions o;
  o.samples = 31;
  const Problem p = load_problem("rabi");
  const fs::path a = fresh_dir("det_a"), b = fresh_dir("det_b");
  const auto fa = emit_report(run_experiment(p, Experiment::Simulate, o), a,
                              {ReportFormat::Csv, ReportFormat::Json, ReportFormat::Svg}, "2026-01-01T00:00:00Z");
  const auto fb = emit_report(run_experiment(p, Experiment::Simulate, o), b,
                              {ReportFormat::Csv, ReportFormat::Json, ReportFormat::Svg}, "2026-06-30T12:00:00Z");
  // trajectory, oracle_reduced, oracle_full
  EXPECT_EQ(count_ext(fa, ".csv"), 3u);
  EXPECT_EQ(count_ext(fa, ".json"), 1u);
  EXPECT_EQ(count_ext(fa, ".svg"), 2u);
  ASSERT_EQ(fa.size(), fb.size());
  for (std::size_t i = 0; i < fa.size(); ++i) {
    ASSERT_EQ(fa[i].filename(), fb[i].filename());
    if (fa[i].extension() == ".json") {
      json ja = json::parse(slurp(fa[i])), jb = json::parse(slurp(fb[i]));
      EXPECT_NE(ja["generated_at"], jb["generated_at"]);
      ja.erase("generated_at");
      jb.erase("generated_at");
      EXPECT_EQ(ja.dump(), jb.dump());
    } else {
      EXPECT_EQ(slurp(fa[i]), slurp(fb[i])) << fa[i];
    }
    if (fa[i].extension() == ".svg") {
      EXPECT_TRUE(svg_well_formed(slurp(fa[i]))) << fa[i];
    }
  }
}

TEST(Reports, CsvIsRfc4180) {
  Table t{"x", {"a", "b,c"}, {{1.0, 0.5}, {-2.0, 1e-20}}};
  std::ostringstream os;
  write_csv(os, t);
  EXPECT_EQ(os.str(), "a,\"b,c\"\r\n1,0.5\r\n-2,1e-20\r\n");
}

TEST(Reports, FormatParsing) {
  EXPECT_EQ(parse_formats("csv,svg").size(), 2u);
  EXPECT_THROW(parse_formats("csv,png"), DomainError);
}

TEST(WorkerPool, EnvironmentCapsWorkers) {
  ::setenv("CHRONOSPEC_THREADS", "1", 1);
  EXPECT_EQ(worker_count(), 1);
  ::setenv("CHRONOSPEC_THREADS", "3", 1);
  EXPECT_LE(worker_count(), 3);
  ::unsetenv("CHRONOSPEC_THREADS");
  EXPECT_GE(worker_count(), 1);
}

TEST(WorkerPool, RunsEveryTaskAndRethrows) {
  std::vector<int> hits(100, 0);
  parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; }, 4);
  for (int h : hits) EXPECT_EQ(h, 1);
  std::atomic<int> done{0};
  EXPECT_THROW(parallel_for(10, [&](std::size_t i) {
    ++done;
    if (i == 3) throw NumericalError("boom");
  }, 2), NumericalError);
}

TEST(LandauZener, WindowSettlesWithinTailOscillation) {
  // The diabatic probability approaches its limit with a decaying 1/t
  // oscillation; wider windows must stay inside that envelope.
  const auto final_p = [](double T) {
    json j = builtin_problem_json("landau_zener");
    j["horizon"] = T;
    j["terms"][0]["coeff"]["coeffs"] = {-T / 2.0, 1.0};
    const Problem p = problem_from_json(j);
    const auto pp = prepare_problem(p);
    const auto tr = integrate_reduced_ode(pp.A, pp.alpha0, T, {0.0, T});
    return projection_probability(tr.final_state() / tr.final_state().norm(), pp.reduced_observable);
  };
  const double T0 = load_problem("landau_zener").hamiltonian.horizon();
  const double p0 = final_p(T0);
  for (double k : {1.5, 2.0, 3.0}) EXPECT_NEAR(p0, final_p(k * T0), 0.05) << "window x" << k;
}
