#pragma once

// Plain-text interchange: varifold frames, measures and meshes.
//
// Varifold frame: CSV with header x1..xn,m,p11..pnn (row-major projection),
// values printed with %.17g so a write/read cycle is exact, plus a JSON
// sidecar <file>.json holding {"n", "d", "count"}.

#include <filesystem>
#include <string>
#include <vector>

#include "varflow/mesh.hpp"
#include "varflow/metrics.hpp"
#include "varflow/varifold.hpp"

namespace varflow {

/// Shortest round-trip decimal form ("%.17g").
std::string format_double(double value);

void write_varifold_csv(const std::filesystem::path& path, const DiscreteVarifold& varifold);
/// Reads the sidecar when present; otherwise d is the rounded trace of the
/// first projection. Throws IoError or InvalidArgument.
DiscreteVarifold read_varifold_csv(const std::filesystem::path& path);

/// Rows x1..xn,w; an optional non-numeric header line is skipped.
void write_measure_csv(const std::filesystem::path& path, const DiscreteMeasure& measure);
DiscreteMeasure read_measure_csv(const std::filesystem::path& path);

/// Rows x1..xn.
void write_points_csv(const std::filesystem::path& path, const std::vector<Vector>& points);
std::vector<Vector> read_points_csv(const std::filesystem::path& path);

/// Connectivity and region labels as JSON {"n", "simplices", "regions"}.
void write_mesh_topology(const std::filesystem::path& path, const SurfaceMesh& mesh);
SurfaceMesh read_mesh_topology(const std::filesystem::path& path);

/// OFF or OBJ triangle surfaces, or a segment-loop CSV (rows "loop,x,y" or
/// "x,y"; consecutive rows of one loop are joined and the loop is closed).
/// Dispatches on the file extension.
SurfaceMesh read_mesh(const std::filesystem::path& path);
SurfaceMesh read_off(std::istream& in);
SurfaceMesh read_obj(std::istream& in);
SurfaceMesh read_segment_csv(std::istream& in);

}  // namespace varflow
