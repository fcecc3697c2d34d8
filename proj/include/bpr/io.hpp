#pragma once

#include "bpr/types.hpp"

#include <string>
#include <vector>

namespace bpr::io {

// Array container: one JSON header line (dtype, shape, byte order, layout)
// followed by raw little-endian row-major values.
void write_c128(const std::string& path, const CVec& data, const std::vector<int>& shape);
void write_f64(const std::string& path, const RVec& data, const std::vector<int>& shape);
CVec read_c128(const std::string& path, std::vector<int>& shape);
RVec read_f64(const std::string& path, std::vector<int>& shape);

void save_measurements(const std::string& path, const MeasurementStack& f);
MeasurementStack load_measurements(const std::string& path);

std::string model_to_json_text(const Model& model);
Model model_from_json_text(const std::string& text);

/// Strict parse: unknown keys are errors.
SolverConfig solver_config_from_json_text(const std::string& text);
SolverConfig solver_config_from_file(const std::string& path);

void write_report(const std::string& path, const SolverReport& report);
SolverReport read_report(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

// Diagnostic dumps: modulus mapped linearly to gray, phase through a cyclic
// colormap. Never parsed back.
void write_png_modulus(const std::string& path, const CVec& data, int side);
void write_png_phase(const std::string& path, const CVec& data, int side);

} // namespace bpr::io
