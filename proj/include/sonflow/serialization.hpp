#pragma once

// Text encodings of trajectories and reports, plus the plain matrix file format.
// Doubles are written in shortest round-trip form.

#include <optional>
#include <string>
#include <vector>

#include "sonflow/experiments.hpp"
#include "sonflow/flow.hpp"
#include "sonflow/linearization.hpp"

namespace sonflow {

enum class Format { Csv, Json };

std::optional<Format> parse_format(const std::string& name);

std::string format_double(double v);

/// CSV: t,f,grad_norm,theta_i_j... ; JSON: JSON-lines with a header object first.
std::string serialize(const Trajectory& tr, const FlowConfig& cfg, Format fmt);

/// Columns recovered from a serialized trajectory.
struct TrajectoryTable {
  int n = 0;
  std::vector<double> times;
  std::vector<double> costs;
  std::vector<double> grad_norms;
  std::vector<Matrix> states;
};

/// Throws Error(IoError) on malformed input.
TrajectoryTable parse_trajectory(const std::string& text, Format fmt);

std::string serialize(const BasinReport& rep, Format fmt);
std::string serialize(const SaddleEscapeReport& rep, Format fmt);
std::string serialize(const LinearizationReport& rep, Format fmt);
std::string serialize(const CriticalReport& rep, Format fmt);
std::string serialize(const VerifyReport& rep, Format fmt);

/// Writes to a temporary sibling and renames it over path. Throws Error(IoError).
void write_atomic(const std::string& path, const std::string& content);

/// First line n, then n lines of n whitespace-separated numbers.
Matrix parse_matrix(const std::string& text);
Matrix read_matrix_file(const std::string& path);

}  // namespace sonflow
