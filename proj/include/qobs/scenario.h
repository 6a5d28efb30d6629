#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "qobs/filter.h"
#include "qobs/model.h"

namespace qobs {

enum class NoiseKind { kCanonical, kDegenerate, kClassical };

struct SolverOverrides {
  std::optional<double> dt;
  std::optional<double> horizon;
  std::optional<double> tol;
};

struct CoherentSettings {
  bool enabled = false;
  std::optional<int> n_v;
};

/// A plant plus the run settings for one pipeline invocation. Optional
/// sections stay unset when absent from the input so that serialization
/// reproduces the source.
struct Scenario {
  std::string name;
  int n = 0;
  int n_w = 0;
  int n_y = 0;
  CommutationKind theta_kind = CommutationKind::kCanonical;
  int theta_n_prime = 0;
  std::optional<NoiseKind> noise_kind;  // canonical when unset
  int noise_n_prime = 0;                // classical channels for kDegenerate
  Matrix A, B, C, D;
  std::optional<Matrix> P0;
  std::optional<SolverOverrides> solver;
  std::optional<CoherentSettings> coherent;
  std::optional<Vector> initial_mean;

  /// Throws DimensionError when the matrices do not form a valid system.
  QuantumLinearSystem System() const;
  /// P0, or the identity.
  Matrix InitialCovariance() const;
  /// Defaults overlaid with the scenario's solver section.
  SolverConfig Solver() const;
  bool coherent_enabled() const { return coherent && coherent->enabled; }
};

/// Parses a JSON scenario. Errors are ParseError carrying `source` plus the
/// line and column for syntax errors or the JSON pointer of the offending
/// field otherwise.
Scenario ParseScenario(std::string_view text,
                       std::string_view source = "<scenario>");

Scenario LoadScenario(const std::filesystem::path& path);

/// Canonical JSON text: fixed key order, one matrix row per line, shortest
/// round-trip number formatting, trailing newline.
std::string SerializeScenario(const Scenario& scenario);

}  // namespace qobs
