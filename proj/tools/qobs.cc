// Command-line front end: plant realizability, estimator synthesis, coherent
// observers and the joint-moment oracle, driven by JSON scenario files.

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qobs/errors.h"
#include "qobs/estimator_pr.h"
#include "qobs/filter.h"
#include "qobs/moments.h"
#include "qobs/realizability.h"
#include "qobs/report_io.h"
#include "qobs/scenario.h"

namespace {

namespace fs = std::filesystem;
using qobs::Json;

enum ExitCode : int {
  kOk = 0,
  kNotRealizable = 1,
  kParse = 2,
  kNumeric = 3,
  kNoSteadyState = 4,
  kInfeasible = 5,
};

constexpr const char* kExitCodeHelp =
    "Exit codes:\n"
    "  0  success (check-pr: the plant is physically realizable)\n"
    "  1  plant is not physically realizable\n"
    "  2  scenario could not be read or parsed\n"
    "  3  numerical failure (divergence, inaccurate integration, failed "
    "certificate)\n"
    "  4  Riccati flow non-convergent or its steady state depends on P0\n"
    "  5  vacuum noise cannot make the estimator realizable\n"
    "With several scenarios the first non-zero code in input order is "
    "returned.\n"
    "Set QOBS_LOG=trace|debug|info|warn|error|off for diagnostics on stderr.";

enum class Format { kJson, kCsv };

struct Options {
  std::vector<std::string> scenarios;
  std::string out;
  std::string trajectory;
  std::optional<double> dt;
  std::optional<double> horizon;
  std::optional<double> tol;
  std::optional<int> stride;
  int jobs = 1;
  std::optional<Format> format;
};

struct JobResult {
  std::string name;
  int code = kOk;
  Json report;
  std::string csv;         // primary CSV output (simulate) or summary row
  std::string trajectory;  // Riccati CSV for solve-filter --trajectory
  std::string error;
};

// Raised inside a job to finish it with a specific exit code and report.
struct JobExit {
  int code;
  std::string message;
};

using Command = std::function<void(const qobs::Scenario&, const Options&,
                                   JobResult&)>;

std::shared_ptr<spdlog::logger> Log() {
  static std::shared_ptr<spdlog::logger> logger = [] {
    auto l = spdlog::stderr_logger_mt("qobs");
    l->set_pattern("[%l] %v");
    const char* level = std::getenv("QOBS_LOG");
    l->set_level(level ? spdlog::level::from_str(level) : spdlog::level::warn);
    return l;
  }();
  return logger;
}

qobs::SolverConfig Config(const qobs::Scenario& s, const Options& o) {
  qobs::SolverConfig config = s.Solver();
  if (o.dt) config.dt = *o.dt;
  if (o.horizon) config.horizon = *o.horizon;
  if (o.tol) config.tol = *o.tol;
  return config;
}

int StatusExitCode(qobs::SynthesisStatus status) {
  switch (status) {
    case qobs::SynthesisStatus::kConverged:
      return kOk;
    case qobs::SynthesisStatus::kNonConvergent:
    case qobs::SynthesisStatus::kNonUnique:
      return kNoSteadyState;
    case qobs::SynthesisStatus::kDiverged:
    case qobs::SynthesisStatus::kInaccurate:
      return kNumeric;
  }
  return kNumeric;
}

void RequireRealizablePlant(const qobs::QuantumLinearSystem& sys) {
  const qobs::RealizabilityReport pr = qobs::CheckPlantRealizability(sys);
  if (!pr.is_realizable) {
    throw JobExit{kNotRealizable,
                  "plant is not physically realizable (max residual " +
                      qobs::FormatNumber(std::max(pr.max_residual_dyn,
                                                  pr.max_residual_out)) +
                      ")"};
  }
}

qobs::EstimatorSynthesis Synthesize(const qobs::Scenario& s, const Options& o,
                                    const qobs::QuantumLinearSystem& sys) {
  qobs::SolverConfig config = Config(s, o);
  if (o.trajectory.empty()) config.record_stride = 1 << 30;
  return qobs::SolveSteadyRiccati(sys, s.InitialCovariance(), config);
}

std::string CsvLine(std::initializer_list<std::string> fields) {
  std::string line;
  for (const std::string& f : fields) {
    if (!line.empty()) line += ',';
    line += f;
  }
  return line + "\n";
}

void CheckPr(const qobs::Scenario& s, const Options&, JobResult& r) {
  const qobs::QuantumLinearSystem sys = s.System();
  const qobs::RealizabilityReport pr = qobs::CheckPlantRealizability(sys);
  r.report = qobs::PlantReportToJson(pr);
  r.code = pr.is_realizable ? kOk : kNotRealizable;
  r.csv = CsvLine({s.name, pr.is_realizable ? "true" : "false",
                   qobs::FormatNumber(pr.max_residual_dyn),
                   qobs::FormatNumber(pr.max_residual_out),
                   qobs::FormatNumber(pr.max_residual_nondemolition)});
}

void SolveFilter(const qobs::Scenario& s, const Options& o, JobResult& r) {
  const qobs::QuantumLinearSystem sys = s.System();
  RequireRealizablePlant(sys);
  const qobs::EstimatorSynthesis syn = Synthesize(s, o, sys);
  Log()->info("{}: Riccati status {} at t = {}", s.name,
              qobs::ToString(syn.status), syn.t_final);
  std::optional<qobs::EstimatorPRReport> pr;
  if (syn.has_steady_state()) {
    pr = qobs::CheckEstimatorRealizability(sys, syn);
  }
  r.report = qobs::SteadyReportToJson(syn, pr);
  r.code = StatusExitCode(syn.status);
  if (!o.trajectory.empty()) {
    std::ostringstream csv;
    qobs::WriteRiccatiCsv(csv, syn.trajectory);
    r.trajectory = csv.str();
  }
  r.csv = CsvLine({s.name, std::string(qobs::ToString(syn.status)),
                   qobs::FormatNumber(syn.J), syn.hurwitz ? "true" : "false",
                   pr ? (pr->is_realizable ? "true" : "false") : ""});
}

struct CoherentRun {
  qobs::EstimatorSynthesis synthesis;
  std::optional<qobs::CoherentObserver> observer;  // unset when already PR
};

CoherentRun BuildCoherent(const qobs::Scenario& s, const Options& o,
                          const qobs::QuantumLinearSystem& sys) {
  CoherentRun run;
  qobs::SolverConfig config = Config(s, o);
  config.record_stride = 1 << 30;
  run.synthesis = qobs::SolveSteadyRiccati(sys, s.InitialCovariance(), config);
  if (!run.synthesis.has_steady_state()) {
    throw JobExit{StatusExitCode(run.synthesis.status),
                  "no steady estimator (status " +
                      std::string(qobs::ToString(run.synthesis.status)) + ")"};
  }
  const qobs::EstimatorPRReport pr =
      qobs::CheckEstimatorRealizability(sys, run.synthesis);
  if (pr.is_realizable) return run;
  if (!run.synthesis.hurwitz) {
    throw JobExit{kNumeric, "A - KC is not Hurwitz; no tracking observer"};
  }
  const std::optional<int> n_v =
      s.coherent ? s.coherent->n_v : std::optional<int>();
  run.observer = qobs::MakeCoherentObserver(sys, run.synthesis, n_v, config);
  if (!(run.observer->residual_norm <= 1e-8)) {
    throw JobExit{kNumeric, "augmented realizability certificate failed"};
  }
  return run;
}

void MakeCoherent(const qobs::Scenario& s, const Options& o, JobResult& r) {
  const qobs::QuantumLinearSystem sys = s.System();
  RequireRealizablePlant(sys);
  const CoherentRun run = BuildCoherent(s, o, sys);
  if (!run.observer) {
    r.report = {{"estimator_realizable", true},
                {"K", qobs::MatrixToJson(run.synthesis.K)},
                {"J", run.synthesis.J}};
    r.csv = CsvLine({s.name, "true", "", qobs::FormatNumber(run.synthesis.J),
                     ""});
    return;
  }
  const qobs::CoherentObserver& obs = *run.observer;
  Log()->info("{}: n_v = {}, J~ = {}", s.name, obs.n_v, obs.J_tilde);
  r.report = qobs::CoherentReportToJson(obs);
  r.code = StatusExitCode(obs.p_tilde_status);
  r.csv = CsvLine({s.name, "false", std::to_string(obs.n_v),
                   qobs::FormatNumber(obs.J),
                   qobs::FormatNumber(obs.J_tilde)});
}

void Simulate(const qobs::Scenario& s, const Options& o, JobResult& r) {
  const qobs::QuantumLinearSystem sys = s.System();
  const qobs::SolverConfig config = Config(s, o);
  qobs::OracleOptions oracle;
  oracle.dt = config.dt;
  oracle.horizon = config.horizon;
  if (s.initial_mean) oracle.initial_mean = *s.initial_mean;
  if (s.coherent_enabled()) {
    RequireRealizablePlant(sys);
    const CoherentRun run = BuildCoherent(s, o, sys);
    if (run.observer) oracle.vacuum_coupling = run.observer->b;
  }
  const long steps =
      static_cast<long>(std::ceil(oracle.horizon / oracle.dt - 1e-9));
  oracle.record_stride =
      o.stride.value_or(static_cast<int>(std::max(1L, steps / 1000)));
  const qobs::OracleReport rep =
      qobs::RunMomentOracle(sys, s.InitialCovariance(), oracle);
  Log()->info("{}: oracle max deviation {}", s.name, rep.max_deviation);
  std::ostringstream csv;
  qobs::WriteMomentCsv(csv, rep);
  r.csv = csv.str();
  r.report = {{"max_deviation", rep.max_deviation},
              {"final_error_covariance",
               qobs::MatrixToJson(rep.final_error_covariance)},
              {"final_riccati_P", qobs::MatrixToJson(rep.final_riccati_P)},
              {"final_error_trace", rep.final_error_covariance.trace()},
              {"vacuum_channels",
               static_cast<int>(oracle.vacuum_coupling.cols())}};
}

void FormatScenario(const qobs::Scenario& s, const Options&, JobResult& r) {
  r.csv = qobs::SerializeScenario(s);
}

JobResult RunJob(const std::string& path, const Command& command,
                 const Options& options) {
  JobResult r;
  r.name = path;
  try {
    const qobs::Scenario scenario = qobs::LoadScenario(path);
    r.name = scenario.name;
    command(scenario, options, r);
  } catch (const JobExit& e) {
    r.code = e.code;
    r.error = e.message;
  } catch (const qobs::ParseError& e) {
    r.code = kParse;
    r.error = e.what();
    Log()->error("{}", r.error);
  } catch (const qobs::InfeasibleAugmentation& e) {
    r.code = kInfeasible;
    r.error = e.what();
  } catch (const std::exception& e) {
    r.code = kNumeric;
    r.error = e.what();
  }
  if (!r.error.empty()) {
    if (r.code != kParse) Log()->error("{}: {}", path, r.error);
    Json report;
    report["error"] = r.error;
    r.report = std::move(report);
  }
  return r;
}

std::vector<JobResult> RunAll(const Command& command, const Options& options) {
  const std::size_t count = options.scenarios.size();
  std::vector<JobResult> results(count);
  const std::size_t workers =
      std::clamp<std::size_t>(static_cast<std::size_t>(options.jobs), 1, count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      results[i] = RunJob(options.scenarios[i], command, options);
    }
  };
  std::vector<std::future<void>> pool;
  for (std::size_t w = 1; w < workers; ++w) {
    pool.push_back(std::async(std::launch::async, worker));
  }
  worker();
  for (auto& f : pool) f.get();
  return results;
}

void WriteText(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

std::string SafeName(const std::string& name) {
  std::string out = name;
  for (char& c : out) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_')) {
      c = '_';
    }
  }
  return out.empty() ? "scenario" : out;
}

int Emit(const std::vector<JobResult>& results, const Options& o,
         Format format, const std::string& csv_header) {
  int code = kOk;
  for (const JobResult& r : results) {
    if (code == kOk) code = r.code;
  }
  const bool many = results.size() > 1;

  if (!o.trajectory.empty()) {
    for (const JobResult& r : results) {
      if (r.trajectory.empty()) continue;
      WriteText(many ? (fs::path(o.trajectory) / (SafeName(r.name) + ".csv"))
                           .string()
                     : o.trajectory,
                r.trajectory);
    }
  }

  if (format == Format::kCsv) {
    if (csv_header.empty()) {
      // Full per-scenario documents (trajectories, formatted scenarios).
      if (!many) {
        if (results[0].error.empty()) WriteText(o.out, results[0].csv);
        return code;
      }
      if (o.out.empty()) {
        throw std::runtime_error(
            "--out must name a directory when several scenarios write CSV");
      }
      for (const JobResult& r : results) {
        if (r.error.empty()) {
          WriteText((fs::path(o.out) / (SafeName(r.name) + ".csv")).string(),
                    r.csv);
        }
      }
      return code;
    }
    std::string table = csv_header;
    for (const JobResult& r : results) {
      table += r.error.empty() ? r.csv : CsvLine({r.name, "error"});
    }
    WriteText(o.out, table);
    return code;
  }

  auto wrap = [](const JobResult& r) {
    Json doc;
    doc["scenario"] = r.name;
    doc["exit_code"] = r.code;
    for (auto& [key, value] : r.report.items()) doc[key] = value;
    return doc;
  };
  if (!many) {
    WriteText(o.out, qobs::DumpJson(wrap(results[0])));
  } else {
    Json merged;
    merged["exit_code"] = code;
    merged["results"] = Json::array();
    for (const JobResult& r : results) merged["results"].push_back(wrap(r));
    WriteText(o.out, qobs::DumpJson(merged));
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Linear quantum stochastic systems: realizability checks, "
               "least-mean-squares estimators and coherent observers"};
  app.footer(kExitCodeHelp);
  app.require_subcommand(1);

  Options options;
  std::string format_name;
  auto add_common = [&](CLI::App* sub, bool solver_flags) {
    sub->add_option("scenarios", options.scenarios, "Scenario JSON files")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--out", options.out,
                    "Output file (directory for several CSV outputs); "
                    "stdout when omitted");
    sub->add_option("--jobs", options.jobs, "Scenarios run concurrently")
        ->check(CLI::PositiveNumber);
    sub->add_option("--format", format_name, "Output format")
        ->check(CLI::IsMember({"json", "csv"}));
    if (solver_flags) {
      sub->add_option("--dt", options.dt, "RK4 step size")
          ->check(CLI::PositiveNumber);
      sub->add_option("--horizon", options.horizon, "Integration horizon")
          ->check(CLI::NonNegativeNumber);
      sub->add_option("--tol", options.tol, "Steady-state tolerance on |dP/dt|")
          ->check(CLI::PositiveNumber);
    }
  };

  CLI::App* check = app.add_subcommand(
      "check-pr", "Physical realizability of the plant (exit 0 iff realizable)");
  add_common(check, false);

  CLI::App* solve = app.add_subcommand(
      "solve-filter", "Steady least-mean-squares estimator and its realizability");
  add_common(solve, true);
  solve->add_option("--trajectory", options.trajectory,
                    "Riccati trajectory CSV (directory for several scenarios)");

  CLI::App* coherent = app.add_subcommand(
      "make-coherent", "Coherent observer by vacuum-noise augmentation");
  add_common(coherent, true);

  CLI::App* simulate = app.add_subcommand(
      "simulate", "Joint plant/estimator moments checked against the Riccati P(t)");
  add_common(simulate, true);
  simulate->add_option("--stride", options.stride,
                       "Record every n-th step (default: about 1000 rows)")
      ->check(CLI::PositiveNumber);

  CLI::App* format = app.add_subcommand(
      "format", "Print scenarios in canonical form");
  format->add_option("scenarios", options.scenarios, "Scenario JSON files")
      ->required()
      ->check(CLI::ExistingFile);
  format->add_option("--out", options.out, "Output file or directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kParse;
  }
  if (!format_name.empty()) {
    options.format = format_name == "csv" ? Format::kCsv : Format::kJson;
  }

  try {
    if (check->parsed()) {
      const auto results = RunAll(CheckPr, options);
      return Emit(results, options, options.format.value_or(Format::kJson),
                  "scenario,realizable,max_residual_dyn,max_residual_out,"
                  "max_residual_nondemolition\n");
    }
    if (solve->parsed()) {
      const auto results = RunAll(SolveFilter, options);
      return Emit(results, options, options.format.value_or(Format::kJson),
                  "scenario,status,J,hurwitz,estimator_realizable\n");
    }
    if (coherent->parsed()) {
      const auto results = RunAll(MakeCoherent, options);
      return Emit(results, options, options.format.value_or(Format::kJson),
                  "scenario,estimator_realizable,n_v,J,J_tilde\n");
    }
    if (simulate->parsed()) {
      const auto results = RunAll(Simulate, options);
      return Emit(results, options, options.format.value_or(Format::kCsv), "");
    }
    if (format->parsed()) {
      const auto results = RunAll(FormatScenario, options);
      return Emit(results, options, Format::kCsv, "");
    }
  } catch (const std::exception& e) {
    Log()->error("{}", e.what());
    std::cerr << "error: " << e.what() << "\n";
    return kNumeric;
  }
  return kOk;
}
