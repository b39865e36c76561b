#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vortexlab/solvers.hpp"

namespace vortexlab::io {

// Writes `bytes` to `path` through a sibling temporary and a rename.
void write_atomic(const std::filesystem::path& path, const std::string& bytes);
std::string read_file(const std::filesystem::path& path);

// Container layout: one JSON header line, then raw little-endian complex128
// arrays in header order (a1 per real axis, a2 per real axis, phi), each
// entry-major over the matrix and row-major over the grid.
std::string encode_state(const FieldState& s, const TorusGeometry& geom, std::uint64_t seed);
void save_state(const std::filesystem::path& path, const FieldState& s, const TorusGeometry& geom,
                std::uint64_t seed);

struct LoadedState {
  FieldState state;
  GeometryPtr geometry;
  std::uint64_t seed = 0;
};

// ArtifactMissing if the file is absent, ArtifactCorrupt on a bad header,
// geometry hash mismatch or truncated payload.
LoadedState decode_state(const std::string& bytes);
LoadedState load_state(const std::filesystem::path& path);

std::string certificate_json(const VortexSolution& sol, const TorusGeometry& geom,
                             std::uint64_t seed, double residual_tol = 1e-10);

struct SweepRow {
  double tau = 0.0;
  std::string threshold;  // Solvable / Boundary / Obstructed
  std::string status;     // converged or the solver error code
  bool has_energy = false;
  EnergyReport energy;
};

std::string sweep_csv(const std::vector<SweepRow>& rows);

// shortest round-trip decimal form
std::string format_double(double v);

}  // namespace vortexlab::io
