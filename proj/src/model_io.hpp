#pragma once

#include "analysis.hpp"
#include "model.hpp"
#include "oracle.hpp"

#include <string>

namespace ndsa {

// Model file schema: {version:1, mode:"numeric"|"lft", subsystems:[...],
// scm:{entries:[[row,col,value],...]}}. Matrices are row-major nested arrays,
// indices 0-based. Throws ParseError naming the JSON path of the offending
// field; dimension inconsistencies surface through validate().
NdsModel model_from_json(const std::string& text);
NdsModel model_from_file(const std::string& path);
std::string model_to_json(const NdsModel& model, int indent = -1);

// RandomModelSpec as JSON: {seed, n_subsystems:[lo,hi], m_x:[lo,hi], ...,
// scm_density, singular_e_prob, mode}; every field optional except seed.
RandomModelSpec random_spec_from_json(const std::string& text);

std::string report_to_json(const AnalysisReport& rep, double timings_ms);

}  // namespace ndsa
