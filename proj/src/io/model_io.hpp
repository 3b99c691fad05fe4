#pragma once

#include <string>

#include "core/types.hpp"

namespace phaseseg {

// JSON model files carry a format version, all dimensions, the feature
// declarations and every parameter matrix in row-major nested arrays. Doubles
// round-trip bitwise.
void save_model(const HmmModel& model, const std::string& path);
HmmModel load_model(const std::string& path);

std::string model_to_json(const HmmModel& model);
HmmModel model_from_json(const std::string& text);

}  // namespace phaseseg
