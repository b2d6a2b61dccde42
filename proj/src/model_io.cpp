#include "mttm/model_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace mttm {

namespace {

std::string number(double v) {
  if (!std::isfinite(v)) throw std::invalid_argument("model document cannot hold non-finite numbers");
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string quoted(const std::string& s) { return nlohmann::json(s).dump(); }

template <class Range, class Fn>
std::string array(const Range& items, Fn fn) {
  std::string out = "[";
  bool first = true;
  for (const auto& v : items) {
    if (!first) out += ", ";
    out += fn(v);
    first = false;
  }
  return out + "]";
}

std::string row_major(const Eigen::MatrixXd& mat) {
  std::vector<double> flat;
  for (Eigen::Index r = 0; r < mat.rows(); ++r)
    for (Eigen::Index c = 0; c < mat.cols(); ++c) flat.push_back(mat(r, c));
  return array(flat, number);
}

Eigen::MatrixXd from_row_major(const nlohmann::json& j, Eigen::Index rows, Eigen::Index cols,
                               const char* name) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows * cols) {
    throw ParseError(std::string("model field '") + name + "' has the wrong length");
  }
  Eigen::MatrixXd out(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c)
      out(r, c) = j.at(static_cast<std::size_t>(r * cols + c)).get<double>();
  return out;
}

}  // namespace

std::string model_to_json(const ModelDocument& doc) {
  const ModelParams& p = doc.params;
  const FitReport& rep = doc.report;
  std::ostringstream os;
  os << "{\n";
  os << "  \"m\": " << p.m() << ",\n";
  os << "  \"d\": " << p.d() << ",\n";
  os << "  \"target_names\": " << array(doc.target_names, quoted) << ",\n";
  os << "  \"feature_names\": " << array(doc.feature_names, quoted) << ",\n";
  os << "  \"a\": " << row_major(p.a) << ",\n";
  os << "  \"w\": " << row_major(p.w) << ",\n";
  os << "  \"beta\": " << number(p.beta) << ",\n";
  os << "  \"lambda_reg\": " << number(doc.lambda_reg) << ",\n";
  os << "  \"fit_report\": {\n";
  os << "    \"objective_trace\": " << array(rep.objective_trace, number) << ",\n";
  os << "    \"sweeps_run\": " << rep.sweeps_run << ",\n";
  os << "    \"converged\": " << (rep.converged ? "true" : "false") << ",\n";
  os << "    \"elapsed_seconds\": " << number(rep.elapsed_seconds) << ",\n";
  os << "    \"beta_clamped\": " << (rep.beta_clamped ? "true" : "false") << ",\n";
  os << "    \"final_objective\": " << number(rep.final_objective) << "\n";
  os << "  }\n";
  os << "}\n";
  return os.str();
}

ModelDocument model_from_json(const std::string& text) {
  try {
    const nlohmann::json j = nlohmann::json::parse(text);
    ModelDocument doc;
    const auto m = j.at("m").get<Eigen::Index>();
    const auto d = j.at("d").get<Eigen::Index>();
    if (m < 1 || d < 0) throw ParseError("model has invalid dimensions");
    doc.target_names = j.at("target_names").get<std::vector<std::string>>();
    doc.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    if (static_cast<Eigen::Index>(doc.target_names.size()) != m ||
        static_cast<Eigen::Index>(doc.feature_names.size()) != d) {
      throw ParseError("model name lists do not match m and d");
    }
    doc.params.a = from_row_major(j.at("a"), m, m - 1, "a");
    doc.params.w = from_row_major(j.at("w"), m, d, "w");
    doc.params.beta = j.at("beta").get<double>();
    if (!(doc.params.beta > 0.0)) throw ParseError("model beta must be positive");
    doc.lambda_reg = j.at("lambda_reg").get<double>();
    if (j.contains("fit_report")) {
      const auto& r = j.at("fit_report");
      doc.report.objective_trace = r.value("objective_trace", std::vector<double>{});
      doc.report.sweeps_run = r.value("sweeps_run", 0);
      doc.report.converged = r.value("converged", false);
      doc.report.elapsed_seconds = r.value("elapsed_seconds", 0.0);
      doc.report.beta_clamped = r.value("beta_clamped", false);
      doc.report.final_objective = r.value("final_objective", 0.0);
    }
    return doc;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed model document: ") + e.what());
  }
}

void save_model(const ModelDocument& doc, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << model_to_json(doc);
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

ModelDocument load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open model file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return model_from_json(buf.str());
}

}  // namespace mttm
