#include "qobs/scenario.h"

#include <cmath>
#include <fstream>
#include <sstream>
#include <utility>

#include "json.hpp"
#include "qobs/errors.h"

namespace qobs {

namespace {

using nlohmann::json;

constexpr const char* kKnownKeys[] = {
    "name", "n",  "n_w", "n_y",    "theta",    "noise",       "A",
    "B",    "C",  "D",   "P0",     "solver",   "coherent",    "initial_mean"};

class FieldReader {
 public:
  explicit FieldReader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void Fail(const json::json_pointer& where,
                         const std::string& what) const {
    const std::string path = where.empty() ? "/" : where.to_string();
    throw ParseError(source_ + ": " + path + ": " + what);
  }

  const json& Require(const json& obj, const json::json_pointer& where,
                      const char* key) const {
    const auto it = obj.find(key);
    if (it == obj.end()) Fail(where / key, "missing required field");
    return *it;
  }

  void RequireObject(const json& v, const json::json_pointer& where) const {
    if (!v.is_object()) Fail(where, "expected an object");
  }

  double Number(const json& v, const json::json_pointer& where) const {
    if (!v.is_number()) Fail(where, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) Fail(where, "number is not finite");
    return x;
  }

  int Integer(const json& v, const json::json_pointer& where) const {
    if (!v.is_number_integer()) Fail(where, "expected an integer");
    const auto x = v.get<long long>();
    if (x < 0 || x > 1'000'000) Fail(where, "integer out of range");
    return static_cast<int>(x);
  }

  std::string String(const json& v, const json::json_pointer& where) const {
    if (!v.is_string()) Fail(where, "expected a string");
    return v.get<std::string>();
  }

  bool Boolean(const json& v, const json::json_pointer& where) const {
    if (!v.is_boolean()) Fail(where, "expected true or false");
    return v.get<bool>();
  }

  Matrix MatrixOf(const json& v, const json::json_pointer& where, int rows,
                  int cols) const {
    const std::string shape =
        std::to_string(rows) + "x" + std::to_string(cols) + " matrix";
    if (!v.is_array()) Fail(where, "expected a " + shape);
    if (static_cast<int>(v.size()) != rows) {
      Fail(where, "expected " + std::to_string(rows) + " rows for a " + shape +
                      ", got " + std::to_string(v.size()));
    }
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i) {
      const json& row = v[i];
      const auto row_ptr = where / i;
      if (!row.is_array()) Fail(row_ptr, "expected an array row");
      if (static_cast<int>(row.size()) != cols) {
        Fail(row_ptr, "expected " + std::to_string(cols) + " entries, got " +
                          std::to_string(row.size()));
      }
      for (int j = 0; j < cols; ++j) m(i, j) = Number(row[j], row_ptr / j);
    }
    return m;
  }

  Vector VectorOf(const json& v, const json::json_pointer& where,
                  int size) const {
    if (!v.is_array() || static_cast<int>(v.size()) != size) {
      Fail(where, "expected an array of " + std::to_string(size) + " numbers");
    }
    Vector out(size);
    for (int i = 0; i < size; ++i) out(i) = Number(v[i], where / i);
    return out;
  }

  void RejectUnknown(const json& obj, const json::json_pointer& where,
                     std::initializer_list<const char*> known) const {
    for (const auto& item : obj.items()) {
      bool found = false;
      for (const char* k : known) found = found || item.key() == k;
      if (!found) Fail(where / item.key(), "unknown field");
    }
  }

 private:
  std::string source_;
};

std::pair<long, long> LineColumn(std::string_view text, std::size_t byte) {
  long line = 1, column = 1;
  const std::size_t end = std::min(byte > 0 ? byte - 1 : 0, text.size());
  for (std::size_t i = 0; i < end; ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

std::string_view ToString(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::kCanonical:
      return "canonical";
    case NoiseKind::kDegenerate:
      return "degenerate";
    case NoiseKind::kClassical:
      return "classical";
  }
  return "canonical";
}

std::string Num(double x) { return json(x).dump(); }

std::string Row(const Matrix& m, Eigen::Index i) {
  std::string out = "[";
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    if (j > 0) out += ", ";
    out += Num(m(i, j));
  }
  return out + "]";
}

std::string MatrixText(const Matrix& m) {
  if (m.rows() == 0) return "[]";
  std::string out = "[\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out += "    " + Row(m, i);
    out += i + 1 < m.rows() ? ",\n" : "\n";
  }
  return out + "  ]";
}

}  // namespace

QuantumLinearSystem Scenario::System() const {
  const CommutationSpec comm =
      theta_kind == CommutationKind::kCanonical
          ? CommutationSpec::Canonical(n)
          : CommutationSpec::DegenerateCanonical(n, theta_n_prime);
  const NoiseSpec noise = [this] {
    switch (noise_kind.value_or(NoiseKind::kCanonical)) {
      case NoiseKind::kDegenerate:
        return NoiseSpec::Degenerate(n_w, noise_n_prime);
      case NoiseKind::kClassical:
        return NoiseSpec::Classical(n_w);
      case NoiseKind::kCanonical:
        break;
    }
    return NoiseSpec::Canonical(n_w);
  }();
  return QuantumLinearSystem(A, B, C, D, comm, noise);
}

Matrix Scenario::InitialCovariance() const {
  return P0 ? *P0 : Matrix::Identity(n, n);
}

SolverConfig Scenario::Solver() const {
  SolverConfig config;
  if (solver) {
    if (solver->dt) config.dt = *solver->dt;
    if (solver->horizon) config.horizon = *solver->horizon;
    if (solver->tol) config.tol = *solver->tol;
  }
  return config;
}

Scenario ParseScenario(std::string_view text, std::string_view source) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const auto [line, column] = LineColumn(text, e.byte);
    std::string what = e.what();
    const auto colon = what.find("syntax error");
    if (colon != std::string::npos) what = what.substr(colon);
    throw ParseError(std::string(source) + ":" + std::to_string(line) + ":" +
                     std::to_string(column) + ": " + what);
  }

  const FieldReader r{std::string(source)};
  const json::json_pointer root;
  r.RequireObject(doc, root);
  for (const auto& item : doc.items()) {
    bool known = false;
    for (const char* k : kKnownKeys) known = known || item.key() == k;
    if (!known) r.Fail(root / item.key(), "unknown field");
  }

  Scenario s;
  s.name = r.String(r.Require(doc, root, "name"), root / "name");
  s.n = r.Integer(r.Require(doc, root, "n"), root / "n");
  s.n_w = r.Integer(r.Require(doc, root, "n_w"), root / "n_w");
  s.n_y = r.Integer(r.Require(doc, root, "n_y"), root / "n_y");
  if (s.n < 1) r.Fail(root / "n", "must be positive");
  if (s.n_w < 1) r.Fail(root / "n_w", "must be positive");
  if (s.n_y < 1) r.Fail(root / "n_y", "must be positive");

  {
    const auto where = root / "theta";
    const json& theta = r.Require(doc, root, "theta");
    r.RequireObject(theta, where);
    r.RejectUnknown(theta, where, {"kind", "n_prime"});
    const std::string kind =
        r.String(r.Require(theta, where, "kind"), where / "kind");
    if (kind == "canonical") {
      s.theta_kind = CommutationKind::kCanonical;
      if (theta.contains("n_prime")) {
        r.Fail(where / "n_prime", "only valid for degenerate theta");
      }
    } else if (kind == "degenerate") {
      s.theta_kind = CommutationKind::kDegenerateCanonical;
      s.theta_n_prime =
          r.Integer(r.Require(theta, where, "n_prime"), where / "n_prime");
    } else {
      r.Fail(where / "kind", "expected \"canonical\" or \"degenerate\"");
    }
  }

  if (doc.contains("noise")) {
    const auto where = root / "noise";
    const json& noise = doc["noise"];
    r.RequireObject(noise, where);
    r.RejectUnknown(noise, where, {"kind", "n_prime"});
    const std::string kind =
        r.String(r.Require(noise, where, "kind"), where / "kind");
    if (kind == "canonical") {
      s.noise_kind = NoiseKind::kCanonical;
    } else if (kind == "classical") {
      s.noise_kind = NoiseKind::kClassical;
    } else if (kind == "degenerate") {
      s.noise_kind = NoiseKind::kDegenerate;
      s.noise_n_prime =
          r.Integer(r.Require(noise, where, "n_prime"), where / "n_prime");
    } else {
      r.Fail(where / "kind",
             "expected \"canonical\", \"degenerate\" or \"classical\"");
    }
    if (kind != "degenerate" && noise.contains("n_prime")) {
      r.Fail(where / "n_prime", "only valid for degenerate noise");
    }
  }

  s.A = r.MatrixOf(r.Require(doc, root, "A"), root / "A", s.n, s.n);
  s.B = r.MatrixOf(r.Require(doc, root, "B"), root / "B", s.n, s.n_w);
  s.C = r.MatrixOf(r.Require(doc, root, "C"), root / "C", s.n_y, s.n);
  s.D = r.MatrixOf(r.Require(doc, root, "D"), root / "D", s.n_y, s.n_w);
  if (doc.contains("P0")) {
    const Matrix p0 = r.MatrixOf(doc["P0"], root / "P0", s.n, s.n);
    if (MaxAbs(p0 - p0.transpose()) > 1e-12) {
      r.Fail(root / "P0", "initial covariance must be symmetric");
    }
    s.P0 = p0;
  }

  if (doc.contains("solver")) {
    const auto where = root / "solver";
    const json& solver = doc["solver"];
    r.RequireObject(solver, where);
    r.RejectUnknown(solver, where, {"dt", "horizon", "tol"});
    SolverOverrides o;
    if (solver.contains("dt")) {
      o.dt = r.Number(solver["dt"], where / "dt");
      if (!(*o.dt > 0.0)) r.Fail(where / "dt", "must be positive");
    }
    if (solver.contains("horizon")) {
      o.horizon = r.Number(solver["horizon"], where / "horizon");
      if (!(*o.horizon >= 0.0)) r.Fail(where / "horizon", "must be nonnegative");
    }
    if (solver.contains("tol")) {
      o.tol = r.Number(solver["tol"], where / "tol");
      if (!(*o.tol > 0.0)) r.Fail(where / "tol", "must be positive");
    }
    s.solver = o;
  }

  if (doc.contains("coherent")) {
    const auto where = root / "coherent";
    const json& coherent = doc["coherent"];
    r.RequireObject(coherent, where);
    r.RejectUnknown(coherent, where, {"enabled", "n_v"});
    CoherentSettings c;
    c.enabled =
        r.Boolean(r.Require(coherent, where, "enabled"), where / "enabled");
    if (coherent.contains("n_v")) {
      c.n_v = r.Integer(coherent["n_v"], where / "n_v");
      if (*c.n_v % 2 != 0) r.Fail(where / "n_v", "must be even");
    }
    s.coherent = c;
  }

  if (doc.contains("initial_mean")) {
    s.initial_mean =
        r.VectorOf(doc["initial_mean"], root / "initial_mean", s.n);
  }

  try {
    s.System();
  } catch (const DimensionError& e) {
    r.Fail(root, std::string("not a valid system: ") + e.what());
  }
  return s;
}

Scenario LoadScenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string() + ": cannot open file");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return ParseScenario(buffer.str(), path.string());
}

std::string SerializeScenario(const Scenario& s) {
  std::ostringstream out;
  out << "{\n";
  out << "  \"name\": " << json(s.name).dump() << ",\n";
  out << "  \"n\": " << s.n << ",\n";
  out << "  \"n_w\": " << s.n_w << ",\n";
  out << "  \"n_y\": " << s.n_y << ",\n";
  if (s.theta_kind == CommutationKind::kCanonical) {
    out << "  \"theta\": {\"kind\": \"canonical\"},\n";
  } else {
    out << "  \"theta\": {\"kind\": \"degenerate\", \"n_prime\": "
        << s.theta_n_prime << "},\n";
  }
  if (s.noise_kind) {
    out << "  \"noise\": {\"kind\": \"" << ToString(*s.noise_kind) << "\"";
    if (*s.noise_kind == NoiseKind::kDegenerate) {
      out << ", \"n_prime\": " << s.noise_n_prime;
    }
    out << "},\n";
  }
  out << "  \"A\": " << MatrixText(s.A) << ",\n";
  out << "  \"B\": " << MatrixText(s.B) << ",\n";
  out << "  \"C\": " << MatrixText(s.C) << ",\n";
  out << "  \"D\": " << MatrixText(s.D);
  if (s.P0) out << ",\n  \"P0\": " << MatrixText(*s.P0);
  if (s.solver) {
    std::string fields;
    auto add = [&fields](const char* key, const std::optional<double>& v) {
      if (!v) return;
      if (!fields.empty()) fields += ", ";
      fields += std::string("\"") + key + "\": " + Num(*v);
    };
    add("dt", s.solver->dt);
    add("horizon", s.solver->horizon);
    add("tol", s.solver->tol);
    out << ",\n  \"solver\": {" << fields << "}";
  }
  if (s.coherent) {
    out << ",\n  \"coherent\": {\"enabled\": "
        << (s.coherent->enabled ? "true" : "false");
    if (s.coherent->n_v) out << ", \"n_v\": " << *s.coherent->n_v;
    out << "}";
  }
  if (s.initial_mean) {
    out << ",\n  \"initial_mean\": [";
    for (Eigen::Index i = 0; i < s.initial_mean->size(); ++i) {
      if (i > 0) out << ", ";
      out << Num((*s.initial_mean)(i));
    }
    out << "]";
  }
  out << "\n}\n";
  return out.str();
}

}  // namespace qobs
