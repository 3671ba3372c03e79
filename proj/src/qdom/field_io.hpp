#pragma once

#include "qdom/grid.hpp"

#include <string>
#include <vector>

namespace qdom {

/// CSV with header "x0,x1[,x2],value", one row per node in storage order.
void write_csv(const ScalarField& f, const std::string& path);
ScalarField read_csv(const std::string& path);

/// Raw raster: a 64-byte ASCII header
///   "QDOM <n> <c0> <c1> [<c2>] <o0> <o1> [<o2>] <h>\n" padded with spaces,
/// then little-endian float64 values with x0 varying fastest.
void write_raster(const ScalarField& f, const std::string& path);
ScalarField read_raster(const std::string& path);

/// Reads either format, chosen by content.
ScalarField read_field(const std::string& path);

ScalarField mask_to_field(const Mask& m);
/// -1 / 0 / +1 according to the sign of f beyond tol.
ScalarField sign_field(const ScalarField& f, double tol);

/// 8-bit grayscale P5 image with a linear ramp over [min, max]; row 0 is the top (largest x1).
/// Returns the bytes written per pixel row-major.
std::vector<unsigned char> pgm_pixels(const ScalarField& f2d);
void write_pgm(const ScalarField& f2d, const std::string& path);

/// Slice of a 3D field perpendicular to `axis` at the central index.
ScalarField axis_slice(const ScalarField& f3d, int axis);

/// Writes one PGM (n = 2) or three axis-slice PGMs (n = 3, suffixed _x0/_x1/_x2).
std::vector<std::string> render_heatmap(const std::string& field_path, const std::string& out_path);

} // namespace qdom
