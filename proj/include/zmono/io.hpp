#pragma once

#include <optional>
#include <stdexcept>
#include <string>

#include "zmono/geom.hpp"

namespace zmono {

enum class PlyFormat { Ascii, BinaryLittleEndian };

// Distinct error kinds so callers can tell a bad header from a short file.
struct PlyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct PlyHeaderError : PlyError {
  using PlyError::PlyError;
};
struct PlyFormatError : PlyError {
  using PlyError::PlyError;
};
struct PlyTruncatedError : PlyError {
  using PlyError::PlyError;
  std::size_t expected = 0;
  std::size_t actual = 0;
};

// Reads x/y/z (float or double) from the vertex element; other properties
// and elements are skipped.
PointCloud read_ply(const std::string& path);
void write_ply(const PointCloud& cloud, const std::string& path,
               PlyFormat format = PlyFormat::BinaryLittleEndian);

struct ObjMaterial {
  std::string name = "atlas";
  std::string texture_file;  // relative to the OBJ's directory
};

// v/vt/f records. vt is written with OBJ's bottom-up v (1 - v).
void write_obj(const TriMesh& mesh, const std::string& path,
               const std::optional<ObjMaterial>& material = std::nullopt);
TriMesh read_obj(const std::string& path);

// Mesh as binary PLY with a face element (for viewers).
void write_mesh_ply(const TriMesh& mesh, const std::string& path);

}  // namespace zmono
