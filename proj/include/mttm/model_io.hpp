#pragma once

// Text persistence of a fitted model. The document is JSON:
//
//   { "m": 2, "d": 3,
//     "target_names": [...], "feature_names": [...],
//     "a": [m*(m-1) numbers, row-major], "w": [m*d numbers, row-major],
//     "beta": ..., "lambda_reg": ...,
//     "fit_report": { "objective_trace": [...], "sweeps_run": ..., "converged": ...,
//                     "elapsed_seconds": ..., "beta_clamped": ..., "final_objective": ... } }
//
// Numbers are written with 17 significant digits, so finite doubles read back
// bit-exactly.

#include <string>

#include "mttm/core.hpp"

namespace mttm {

struct ModelDocument {
  ModelParams params;
  std::vector<std::string> target_names;
  std::vector<std::string> feature_names;
  double lambda_reg = 0.0;
  FitReport report;
};

std::string model_to_json(const ModelDocument& doc);

/// Throws ParseError on malformed input or inconsistent dimensions.
ModelDocument model_from_json(const std::string& text);

void save_model(const ModelDocument& doc, const std::string& path);
ModelDocument load_model(const std::string& path);

}  // namespace mttm
