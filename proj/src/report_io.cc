#include "qobs/report_io.h"

#include <charconv>
#include <cmath>

namespace qobs {

namespace {

std::string Index(Eigen::Index i, Eigen::Index j) {
  return std::to_string(i + 1) + "_" + std::to_string(j + 1);
}

Json NumberOrNull(double x) {
  if (!std::isfinite(x)) return Json();
  return x;
}

}  // namespace

std::string FormatNumber(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (x == 0.0) x = 0.0;  // drop the sign of negative zero
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

Json MatrixToJson(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      row.push_back(NumberOrNull(m(i, j) == 0.0 ? 0.0 : m(i, j)));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

Json PlantReportToJson(const RealizabilityReport& report) {
  Json doc;
  doc["realizable"] = report.is_realizable;
  doc["tolerance"] = report.tolerance;
  doc["max_residual_dyn"] = NumberOrNull(report.max_residual_dyn);
  doc["max_residual_out"] = NumberOrNull(report.max_residual_out);
  doc["max_residual_nondemolition"] =
      NumberOrNull(report.max_residual_nondemolition);
  doc["pr_residual_dyn"] = MatrixToJson(report.pr_residual_dyn);
  doc["pr_residual_out"] = MatrixToJson(report.pr_residual_out);
  doc["nondemolition_residual"] = MatrixToJson(report.nondemolition_residual);
  if (report.hamiltonian_coupling) {
    const HamiltonianCoupling& hc = *report.hamiltonian_coupling;
    doc["R"] = MatrixToJson(hc.R);
    doc["Lambda"] = {{"real", MatrixToJson(hc.Lambda.real)},
                     {"imag", MatrixToJson(hc.Lambda.imag)}};
  }
  return doc;
}

Json EstimatorPRToJson(const EstimatorPRReport& report) {
  Json doc;
  doc["realizable"] = report.is_realizable;
  doc["tolerance"] = report.tolerance;
  doc["general_max"] = NumberOrNull(report.general_max);
  doc["intermediate_max"] = NumberOrNull(report.intermediate_max);
  doc["verdicts_agree"] = report.verdicts_agree;
  doc["general_residual"] = MatrixToJson(report.general_residual);
  const SpecialCaseClassification& sc = report.special_case;
  Json special;
  special["case"] = std::string(ToString(sc.tag));
  special["branch"] = sc.branch;
  special["hypothesis_holds"] = sc.hypothesis_holds;
  if (sc.residual) {
    special["residual"] = MatrixToJson(*sc.residual);
    special["sign_to_general"] = sc.sign_to_general;
  }
  if (sc.prescribed_gain) {
    special["prescribed_gain"] = MatrixToJson(*sc.prescribed_gain);
  }
  for (const NamedResidual& extra : sc.extra) {
    special[extra.name] = MatrixToJson(extra.value);
  }
  doc["special_case"] = std::move(special);
  return doc;
}

Json SteadyReportToJson(const EstimatorSynthesis& synthesis,
                        const std::optional<EstimatorPRReport>& pr) {
  Json doc;
  doc["status"] = std::string(ToString(synthesis.status));
  doc["P"] = MatrixToJson(synthesis.P);
  doc["K"] = MatrixToJson(synthesis.K);
  doc["J"] = NumberOrNull(synthesis.J);
  doc["hurwitz"] = synthesis.hurwitz;
  doc["residual"] = NumberOrNull(synthesis.residual);
  doc["t_final"] = synthesis.t_final;
  doc["step_halving_deviation"] =
      NumberOrNull(synthesis.step_halving_deviation);
  doc["uniqueness_spread"] = NumberOrNull(synthesis.uniqueness_spread);
  if (pr) doc["estimator_pr"] = EstimatorPRToJson(*pr);
  return doc;
}

Json CoherentReportToJson(const CoherentObserver& observer) {
  Json doc;
  doc["K"] = MatrixToJson(observer.K);
  doc["b"] = MatrixToJson(observer.b);
  doc["n_v"] = observer.n_v;
  doc["P_tilde"] = MatrixToJson(observer.P_tilde);
  doc["J_tilde"] = NumberOrNull(observer.J_tilde);
  doc["P_tilde_status"] = std::string(ToString(observer.p_tilde_status));
  doc["residual_norm"] = NumberOrNull(observer.residual_norm);
  doc["hurwitz"] = observer.hurwitz;
  doc["J"] = NumberOrNull(observer.J);
  doc["K_tilde"] = MatrixToJson(observer.K_tilde);
  doc["P_fixed_gain"] = MatrixToJson(observer.P_fixed_gain);
  return doc;
}

void WriteRiccatiCsv(std::ostream& out,
                     const std::vector<TrajectorySample>& trajectory) {
  if (trajectory.empty()) return;
  const Eigen::Index n = trajectory.front().P.rows();
  const Eigen::Index ny = trajectory.front().K.cols();
  out << "t";
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) out << ",P_" << Index(i, j);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < ny; ++j) out << ",K_" << Index(i, j);
  }
  out << ",trace_P\n";
  for (const TrajectorySample& s : trajectory) {
    out << FormatNumber(s.t);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i; j < n; ++j) out << ',' << FormatNumber(s.P(i, j));
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < ny; ++j) {
        out << ',' << FormatNumber(s.K(i, j));
      }
    }
    out << ',' << FormatNumber(s.P.trace()) << '\n';
  }
}

void WriteMomentCsv(std::ostream& out, const OracleReport& report) {
  const auto& samples = report.trajectory.samples;
  if (samples.empty()) return;
  const Eigen::Index dim = samples.front().Sigma.rows();
  out << "t";
  for (Eigen::Index i = 0; i < dim; ++i) out << ",mean_" << i + 1;
  for (Eigen::Index i = 0; i < dim; ++i) {
    for (Eigen::Index j = i; j < dim; ++j) out << ",Sigma_" << Index(i, j);
  }
  out << ",err_trace,riccati_trace,max_dev\n";
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const MomentSample& s = samples[k];
    out << FormatNumber(s.t);
    for (Eigen::Index i = 0; i < dim; ++i) out << ',' << FormatNumber(s.mean(i));
    for (Eigen::Index i = 0; i < dim; ++i) {
      for (Eigen::Index j = i; j < dim; ++j) {
        out << ',' << FormatNumber(s.Sigma(i, j));
      }
    }
    out << ',' << FormatNumber(ErrorCovariance(s.Sigma).trace());
    out << ',' << FormatNumber(report.riccati_P[k].trace());
    out << ',' << FormatNumber(report.running_max_deviation[k]) << '\n';
  }
}

std::string DumpJson(const Json& doc) { return doc.dump(2) + "\n"; }

}  // namespace qobs
