#include "zmono/io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

namespace zmono {
namespace {

static_assert(std::endian::native == std::endian::little, "binary PLY I/O assumes a little-endian host");

enum class ScalarType { I8, U8, I16, U16, I32, U32, F32, F64 };

ScalarType parse_scalar(const std::string& s) {
  if (s == "char" || s == "int8") return ScalarType::I8;
  if (s == "uchar" || s == "uint8") return ScalarType::U8;
  if (s == "short" || s == "int16") return ScalarType::I16;
  if (s == "ushort" || s == "uint16") return ScalarType::U16;
  if (s == "int" || s == "int32") return ScalarType::I32;
  if (s == "uint" || s == "uint32") return ScalarType::U32;
  if (s == "float" || s == "float32") return ScalarType::F32;
  if (s == "double" || s == "float64") return ScalarType::F64;
  throw PlyHeaderError("unknown PLY property type '" + s + "'");
}

std::size_t scalar_size(ScalarType t) {
  switch (t) {
    case ScalarType::I8:
    case ScalarType::U8: return 1;
    case ScalarType::I16:
    case ScalarType::U16: return 2;
    case ScalarType::I32:
    case ScalarType::U32:
    case ScalarType::F32: return 4;
    case ScalarType::F64: return 8;
  }
  return 0;
}

double decode_scalar(ScalarType t, const unsigned char* p) {
  switch (t) {
    case ScalarType::I8: { std::int8_t v; std::memcpy(&v, p, 1); return v; }
    case ScalarType::U8: { std::uint8_t v; std::memcpy(&v, p, 1); return v; }
    case ScalarType::I16: { std::int16_t v; std::memcpy(&v, p, 2); return v; }
    case ScalarType::U16: { std::uint16_t v; std::memcpy(&v, p, 2); return v; }
    case ScalarType::I32: { std::int32_t v; std::memcpy(&v, p, 4); return v; }
    case ScalarType::U32: { std::uint32_t v; std::memcpy(&v, p, 4); return v; }
    case ScalarType::F32: { float v; std::memcpy(&v, p, 4); return v; }
    case ScalarType::F64: { double v; std::memcpy(&v, p, 8); return v; }
  }
  return 0.0;
}

struct Property {
  std::string name;
  ScalarType type = ScalarType::F32;
  bool is_list = false;
  ScalarType count_type = ScalarType::U8;
};

struct Element {
  std::string name;
  std::size_t count = 0;
  std::vector<Property> props;
};

struct Header {
  bool ascii = false;
  std::vector<Element> elements;
};

Header parse_header(std::istream& in, const std::string& path) {
  std::string line;
  if (!std::getline(in, line)) throw PlyFormatError(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "ply") throw PlyFormatError(path + ": missing 'ply' magic");

  Header h;
  bool have_format = false;
  bool ended = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ss(line);
    std::string kw;
    ss >> kw;
    if (kw.empty() || kw == "comment" || kw == "obj_info") continue;
    if (kw == "format") {
      std::string fmt, ver;
      ss >> fmt >> ver;
      if (fmt == "ascii") {
        h.ascii = true;
      } else if (fmt == "binary_little_endian") {
        h.ascii = false;
      } else {
        throw PlyFormatError(path + ": unsupported PLY format '" + fmt + "'");
      }
      have_format = true;
    } else if (kw == "element") {
      Element e;
      long long count = -1;
      ss >> e.name >> count;
      if (e.name.empty() || count < 0) throw PlyHeaderError(path + ": malformed element line '" + line + "'");
      e.count = static_cast<std::size_t>(count);
      h.elements.push_back(std::move(e));
    } else if (kw == "property") {
      if (h.elements.empty()) throw PlyHeaderError(path + ": property before any element");
      Property p;
      std::string t;
      ss >> t;
      if (t == "list") {
        std::string ct, it;
        ss >> ct >> it >> p.name;
        p.is_list = true;
        p.count_type = parse_scalar(ct);
        p.type = parse_scalar(it);
      } else {
        p.type = parse_scalar(t);
        ss >> p.name;
      }
      if (p.name.empty()) throw PlyHeaderError(path + ": malformed property line '" + line + "'");
      h.elements.back().props.push_back(std::move(p));
    } else if (kw == "end_header") {
      ended = true;
      break;
    } else {
      throw PlyHeaderError(path + ": unexpected header keyword '" + kw + "'");
    }
  }
  if (!ended) throw PlyHeaderError(path + ": header has no end_header");
  if (!have_format) throw PlyHeaderError(path + ": header has no format line");
  return h;
}

[[noreturn]] void throw_truncated(const std::string& path, std::size_t expected, std::size_t actual) {
  PlyTruncatedError e(path + ": truncated body, expected " + std::to_string(expected) +
                      " vertices but found " + std::to_string(actual));
  e.expected = expected;
  e.actual = actual;
  throw e;
}

}  // namespace

PointCloud read_ply(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  const Header h = parse_header(in, path);

  auto vit = std::find_if(h.elements.begin(), h.elements.end(),
                          [](const Element& e) { return e.name == "vertex"; });
  if (vit == h.elements.end()) throw PlyHeaderError(path + ": no vertex element");
  int ix = -1, iy = -1, iz = -1;
  for (std::size_t i = 0; i < vit->props.size(); ++i) {
    const auto& p = vit->props[i];
    if (p.is_list) continue;
    if (p.name == "x") ix = static_cast<int>(i);
    if (p.name == "y") iy = static_cast<int>(i);
    if (p.name == "z") iz = static_cast<int>(i);
  }
  if (ix < 0 || iy < 0 || iz < 0) throw PlyHeaderError(path + ": vertex element lacks x/y/z");

  PointCloud cloud;
  cloud.frame = Frame::World;
  cloud.points.reserve(vit->count);

  if (h.ascii) {
    std::string line;
    for (const auto& e : h.elements) {
      const bool is_vertex = &e == &*vit;
      for (std::size_t r = 0; r < e.count; ++r) {
        if (!std::getline(in, line)) {
          if (is_vertex) throw_truncated(path, e.count, r);
          throw PlyTruncatedError(path + ": truncated element '" + e.name + "'");
        }
        if (!is_vertex) continue;
        std::istringstream ss(line);
        std::vector<double> vals(e.props.size(), 0.0);
        for (std::size_t i = 0; i < e.props.size(); ++i) {
          if (e.props[i].is_list) {
            double n = 0, skip = 0;
            ss >> n;
            for (int k = 0; k < static_cast<int>(n); ++k) ss >> skip;
          } else if (!(ss >> vals[i])) {
            throw_truncated(path, e.count, r);
          } else if (e.props[i].type == ScalarType::F32) {
            vals[i] = static_cast<float>(vals[i]);
          }
        }
        cloud.points.push_back({vals[ix], vals[iy], vals[iz]});
      }
      if (is_vertex) break;
    }
    return cloud;
  }

  std::vector<unsigned char> buf(16);
  auto read_bytes = [&](std::size_t n) {
    if (buf.size() < n) buf.resize(n);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n));
    return static_cast<std::size_t>(in.gcount()) == n;
  };
  // Reads one record; returns false on a short read.
  auto read_record = [&](const Element& e, bool is_vertex) {
    double xyz[3] = {0, 0, 0};
    for (std::size_t i = 0; i < e.props.size(); ++i) {
      const auto& p = e.props[i];
      if (p.is_list) {
        if (!read_bytes(scalar_size(p.count_type))) return false;
        const auto n = static_cast<std::size_t>(decode_scalar(p.count_type, buf.data()));
        if (!read_bytes(n * scalar_size(p.type))) return false;
        continue;
      }
      if (!read_bytes(scalar_size(p.type))) return false;
      if (is_vertex) {
        const double v = decode_scalar(p.type, buf.data());
        if (static_cast<int>(i) == ix) xyz[0] = v;
        if (static_cast<int>(i) == iy) xyz[1] = v;
        if (static_cast<int>(i) == iz) xyz[2] = v;
      }
    }
    if (is_vertex) cloud.points.push_back({xyz[0], xyz[1], xyz[2]});
    return true;
  };
  for (const auto& e : h.elements) {
    const bool is_vertex = &e == &*vit;
    for (std::size_t r = 0; r < e.count; ++r) {
      if (read_record(e, is_vertex)) continue;
      if (is_vertex) throw_truncated(path, e.count, r);
      throw PlyTruncatedError(path + ": truncated element '" + e.name + "'");
    }
    if (is_vertex) break;
  }
  return cloud;
}

void write_ply(const PointCloud& cloud, const std::string& path, PlyFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  const bool ascii = format == PlyFormat::Ascii;
  out << "ply\n"
      << "format " << (ascii ? "ascii" : "binary_little_endian") << " 1.0\n"
      << "element vertex " << cloud.points.size() << "\n"
      << "property float x\nproperty float y\nproperty float z\n"
      << "end_header\n";
  if (ascii) {
    out << std::setprecision(9);
    for (const auto& p : cloud.points) {
      out << static_cast<float>(p.x) << ' ' << static_cast<float>(p.y) << ' ' << static_cast<float>(p.z) << '\n';
    }
  } else {
    std::vector<float> row(cloud.points.size() * 3);
    for (std::size_t i = 0; i < cloud.points.size(); ++i) {
      row[3 * i] = static_cast<float>(cloud.points[i].x);
      row[3 * i + 1] = static_cast<float>(cloud.points[i].y);
      row[3 * i + 2] = static_cast<float>(cloud.points[i].z);
    }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(float)));
  }
  if (!out) throw std::runtime_error("write failed for " + path);
}

void write_obj(const TriMesh& mesh, const std::string& path, const std::optional<ObjMaterial>& material) {
  mesh.validate();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << std::setprecision(17);
  const bool uv = mesh.has_uvs();
  if (material) {
    const auto mtl_path = std::filesystem::path(path).replace_extension(".mtl");
    out << "mtllib " << mtl_path.filename().string() << "\n";
    std::ofstream mtl(mtl_path);
    if (!mtl) throw std::runtime_error("cannot write " + mtl_path.string());
    mtl << "newmtl " << material->name << "\n"
        << "Ka 1 1 1\nKd 1 1 1\nKs 0 0 0\nillum 1\n"
        << "map_Kd " << material->texture_file << "\n";
  }
  for (const auto& v : mesh.vertices) out << "v " << v.x << ' ' << v.y << ' ' << v.z << '\n';
  if (uv) {
    for (const auto& t : mesh.uvs) out << "vt " << t.x << ' ' << 1.0 - t.y << '\n';
  }
  if (material) out << "usemtl " << material->name << "\n";
  for (const auto& f : mesh.triangles) {
    out << 'f';
    for (auto i : f) {
      if (uv) {
        out << ' ' << i + 1 << '/' << i + 1;
      } else {
        out << ' ' << i + 1;
      }
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed for " + path);
}

TriMesh read_obj(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  TriMesh mesh;
  std::vector<Vec2> vts;
  std::vector<std::array<std::uint32_t, 3>> ftex;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::string kw;
    ss >> kw;
    if (kw == "v") {
      Vec3 v;
      ss >> v.x >> v.y >> v.z;
      mesh.vertices.push_back(v);
    } else if (kw == "vt") {
      Vec2 t;
      ss >> t.x >> t.y;
      t.y = 1.0 - t.y;
      vts.push_back(t);
    } else if (kw == "f") {
      std::vector<std::uint32_t> vi, ti;
      std::string tok;
      while (ss >> tok) {
        const auto slash = tok.find('/');
        vi.push_back(static_cast<std::uint32_t>(std::stoul(tok.substr(0, slash)) - 1));
        if (slash != std::string::npos && slash + 1 < tok.size() && tok[slash + 1] != '/') {
          ti.push_back(static_cast<std::uint32_t>(std::stoul(tok.substr(slash + 1)) - 1));
        }
      }
      if (vi.size() < 3) throw std::runtime_error(path + ":" + std::to_string(line_no) + ": face with < 3 vertices");
      for (std::size_t k = 1; k + 1 < vi.size(); ++k) {
        mesh.triangles.push_back({vi[0], vi[k], vi[k + 1]});
        if (ti.size() == vi.size()) ftex.push_back({ti[0], ti[k], ti[k + 1]});
      }
    }
  }
  // Per-vertex UVs only when vt indices coincide with v indices (as write_obj emits).
  if (!vts.empty() && vts.size() == mesh.vertices.size() && ftex.size() == mesh.triangles.size()) {
    bool same = true;
    for (std::size_t t = 0; t < ftex.size() && same; ++t) same = ftex[t] == mesh.triangles[t];
    if (same) mesh.uvs = std::move(vts);
  }
  mesh.validate();
  return mesh;
}

void write_mesh_ply(const TriMesh& mesh, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "ply\nformat binary_little_endian 1.0\n"
      << "element vertex " << mesh.vertices.size() << "\n"
      << "property float x\nproperty float y\nproperty float z\n"
      << "element face " << mesh.triangles.size() << "\n"
      << "property list uchar int vertex_indices\nend_header\n";
  for (const auto& v : mesh.vertices) {
    const float f[3] = {static_cast<float>(v.x), static_cast<float>(v.y), static_cast<float>(v.z)};
    out.write(reinterpret_cast<const char*>(f), sizeof f);
  }
  for (const auto& t : mesh.triangles) {
    const unsigned char n = 3;
    const std::int32_t idx[3] = {static_cast<std::int32_t>(t[0]), static_cast<std::int32_t>(t[1]),
                                 static_cast<std::int32_t>(t[2])};
    out.write(reinterpret_cast<const char*>(&n), 1);
    out.write(reinterpret_cast<const char*>(idx), sizeof idx);
  }
  if (!out) throw std::runtime_error("write failed for " + path);
}

}  // namespace zmono
