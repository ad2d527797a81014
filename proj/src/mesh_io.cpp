#include "besa/mesh_io.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

static_assert(std::endian::native == std::endian::little,
              "mesh IO assumes a little-endian host");

namespace besa {
namespace {

[[noreturn]] void parse_fail(const std::filesystem::path& path,
                             const std::string& what) {
  throw_error(ErrorKind::parse, path.string() + ": " + what);
}

// --- OBJ ---------------------------------------------------------------

TriMesh load_obj(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw_error(ErrorKind::io, "cannot open " + path.string());
  std::vector<Vec3> vertices;
  std::vector<Eigen::RowVector3i> faces;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      double x, y, z;
      if (!(ls >> x >> y >> z))
        parse_fail(path, "line " + std::to_string(lineno) +
                             ": vertex needs three coordinates");
      vertices.emplace_back(x, y, z);
    } else if (tag == "f") {
      std::vector<long> idx;
      std::string tok;
      while (ls >> tok) {
        // "f 1/2/3" style references: the vertex index is before the slash.
        const std::string head = tok.substr(0, tok.find('/'));
        char* end = nullptr;
        const long i = std::strtol(head.c_str(), &end, 10);
        if (end == head.c_str() || *end != '\0')
          parse_fail(path, "line " + std::to_string(lineno) +
                               ": bad face index '" + tok + "'");
        idx.push_back(i);
      }
      if (idx.size() != 3)
        parse_fail(path, "line " + std::to_string(lineno) +
                             ": face has " + std::to_string(idx.size()) +
                             " vertices, only triangles are supported");
      Eigen::RowVector3i f;
      for (int c = 0; c < 3; ++c) {
        if (idx[c] < 1 ||
            idx[c] > static_cast<long>(vertices.size()))
          parse_fail(path, "line " + std::to_string(lineno) +
                               ": face index " + std::to_string(idx[c]) +
                               " out of range (mesh has " +
                               std::to_string(vertices.size()) + " vertices)");
        f(c) = static_cast<int>(idx[c] - 1);
      }
      faces.push_back(f);
    }
    // vn / vt / usemtl / o / g / s are ignored.
  }
  if (faces.empty()) parse_fail(path, "no faces found");
  TriMesh mesh;
  mesh.vertices.resize(vertices.size(), 3);
  for (size_t i = 0; i < vertices.size(); ++i)
    mesh.vertices.row(i) = vertices[i].transpose();
  mesh.faces.resize(faces.size(), 3);
  for (size_t i = 0; i < faces.size(); ++i) mesh.faces.row(i) = faces[i];
  validate_mesh(mesh);
  return mesh;
}

void save_obj(const TriMesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw_error(ErrorKind::io, "cannot write " + path.string());
  char buf[128];
  for (int v = 0; v < mesh.vertex_count(); ++v) {
    std::snprintf(buf, sizeof(buf), "v %.17g %.17g %.17g\n",
                  mesh.vertices(v, 0), mesh.vertices(v, 1),
                  mesh.vertices(v, 2));
    out << buf;
  }
  for (int f = 0; f < mesh.face_count(); ++f)
    out << "f " << mesh.faces(f, 0) + 1 << ' ' << mesh.faces(f, 1) + 1 << ' '
        << mesh.faces(f, 2) + 1 << '\n';
  if (!out) throw_error(ErrorKind::io, "write failed for " + path.string());
}

// --- PLY ---------------------------------------------------------------

int scalar_size(const std::string& type) {
  if (type == "char" || type == "uchar" || type == "int8" || type == "uint8")
    return 1;
  if (type == "short" || type == "ushort" || type == "int16" ||
      type == "uint16")
    return 2;
  if (type == "int" || type == "uint" || type == "int32" || type == "uint32" ||
      type == "float" || type == "float32")
    return 4;
  if (type == "double" || type == "float64") return 8;
  return 0;
}

struct PlyProperty {
  std::string name;
  std::string type;        // scalar type, or index type for lists
  std::string count_type;  // non-empty for list properties
};

struct PlyElement {
  std::string name;
  long count = 0;
  std::vector<PlyProperty> properties;
};

double read_scalar(std::ifstream& in, const std::string& type,
                   const std::filesystem::path& path) {
  unsigned char raw[8];
  const int size = scalar_size(type);
  if (!in.read(reinterpret_cast<char*>(raw), size))
    parse_fail(path, "unexpected end of file at offset " +
                         std::to_string(static_cast<long>(in.tellg())));
  if (type == "char" || type == "int8") return static_cast<int8_t>(raw[0]);
  if (type == "uchar" || type == "uint8") return raw[0];
  if (type == "short" || type == "int16") {
    int16_t v;
    std::memcpy(&v, raw, 2);
    return v;
  }
  if (type == "ushort" || type == "uint16") {
    uint16_t v;
    std::memcpy(&v, raw, 2);
    return v;
  }
  if (type == "int" || type == "int32") {
    int32_t v;
    std::memcpy(&v, raw, 4);
    return v;
  }
  if (type == "uint" || type == "uint32") {
    uint32_t v;
    std::memcpy(&v, raw, 4);
    return v;
  }
  if (type == "float" || type == "float32") {
    float v;
    std::memcpy(&v, raw, 4);
    return v;
  }
  double v;
  std::memcpy(&v, raw, 8);
  return v;
}

TriMesh load_ply(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_error(ErrorKind::io, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "ply")
    parse_fail(path, "missing 'ply' magic on line 1");
  std::vector<PlyElement> elements;
  bool format_seen = false;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "comment" || tag == "obj_info") continue;
    if (tag == "format") {
      std::string kind;
      ls >> kind;
      if (kind != "binary_little_endian")
        parse_fail(path, "line " + std::to_string(lineno) +
                             ": unsupported format '" + kind +
                             "' (binary_little_endian required)");
      format_seen = true;
    } else if (tag == "element") {
      PlyElement el;
      if (!(ls >> el.name >> el.count))
        parse_fail(path, "line " + std::to_string(lineno) + ": bad element");
      elements.push_back(el);
    } else if (tag == "property") {
      if (elements.empty())
        parse_fail(path, "line " + std::to_string(lineno) +
                             ": property before element");
      PlyProperty prop;
      std::string first;
      ls >> first;
      if (first == "list") {
        if (!(ls >> prop.count_type >> prop.type >> prop.name))
          parse_fail(path, "line " + std::to_string(lineno) + ": bad list");
      } else {
        prop.type = first;
        if (!(ls >> prop.name))
          parse_fail(path, "line " + std::to_string(lineno) + ": bad property");
      }
      if (scalar_size(prop.type) == 0 ||
          (!prop.count_type.empty() && scalar_size(prop.count_type) == 0))
        parse_fail(path, "line " + std::to_string(lineno) +
                             ": unknown property type");
      elements.back().properties.push_back(prop);
    } else if (tag == "end_header") {
      break;
    } else {
      parse_fail(path,
                 "line " + std::to_string(lineno) + ": unexpected '" + tag + "'");
    }
  }
  if (!format_seen) parse_fail(path, "missing format line");

  TriMesh mesh;
  bool have_vertices = false, have_faces = false;
  for (const PlyElement& el : elements) {
    if (el.name == "vertex") {
      int ix = -1, iy = -1, iz = -1;
      for (size_t p = 0; p < el.properties.size(); ++p) {
        if (!el.properties[p].count_type.empty())
          parse_fail(path, "list property in vertex element");
        if (el.properties[p].name == "x") ix = static_cast<int>(p);
        if (el.properties[p].name == "y") iy = static_cast<int>(p);
        if (el.properties[p].name == "z") iz = static_cast<int>(p);
      }
      if (ix < 0 || iy < 0 || iz < 0)
        parse_fail(path, "vertex element lacks x/y/z properties");
      mesh.vertices.resize(el.count, 3);
      for (long v = 0; v < el.count; ++v) {
        for (size_t p = 0; p < el.properties.size(); ++p) {
          const double val = read_scalar(in, el.properties[p].type, path);
          if (static_cast<int>(p) == ix) mesh.vertices(v, 0) = val;
          if (static_cast<int>(p) == iy) mesh.vertices(v, 1) = val;
          if (static_cast<int>(p) == iz) mesh.vertices(v, 2) = val;
        }
      }
      have_vertices = true;
    } else if (el.name == "face") {
      if (el.properties.size() != 1 || el.properties[0].count_type.empty())
        parse_fail(path, "face element must have a single list property");
      mesh.faces.resize(el.count, 3);
      for (long f = 0; f < el.count; ++f) {
        const long n = static_cast<long>(
            read_scalar(in, el.properties[0].count_type, path));
        if (n != 3)
          parse_fail(path, "face " + std::to_string(f) + " has " +
                               std::to_string(n) + " vertices");
        for (int c = 0; c < 3; ++c)
          mesh.faces(f, c) =
              static_cast<int>(read_scalar(in, el.properties[0].type, path));
      }
      have_faces = true;
    } else {
      // Skip unknown fixed-size elements.
      long stride = 0;
      for (const PlyProperty& prop : el.properties) {
        if (!prop.count_type.empty())
          parse_fail(path, "cannot skip list property in element '" +
                               el.name + "'");
        stride += scalar_size(prop.type);
      }
      in.seekg(el.count * stride, std::ios::cur);
    }
  }
  if (!have_vertices || !have_faces)
    parse_fail(path, "missing vertex or face element");
  validate_mesh(mesh);
  return mesh;
}

void save_ply(const TriMesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw_error(ErrorKind::io, "cannot write " + path.string());
  out << "ply\nformat binary_little_endian 1.0\n"
      << "element vertex " << mesh.vertex_count() << "\n"
      << "property double x\nproperty double y\nproperty double z\n"
      << "element face " << mesh.face_count() << "\n"
      << "property list uchar int vertex_indices\nend_header\n";
  for (int v = 0; v < mesh.vertex_count(); ++v) {
    double xyz[3] = {mesh.vertices(v, 0), mesh.vertices(v, 1),
                     mesh.vertices(v, 2)};
    out.write(reinterpret_cast<const char*>(xyz), sizeof(xyz));
  }
  for (int f = 0; f < mesh.face_count(); ++f) {
    const unsigned char count = 3;
    out.write(reinterpret_cast<const char*>(&count), 1);
    int32_t idx[3] = {mesh.faces(f, 0), mesh.faces(f, 1), mesh.faces(f, 2)};
    out.write(reinterpret_cast<const char*>(idx), sizeof(idx));
  }
  if (!out) throw_error(ErrorKind::io, "write failed for " + path.string());
}

}  // namespace

MeshFormat format_from_path(const std::filesystem::path& path) {
  const std::string ext = path.extension().string();
  if (ext == ".obj") return MeshFormat::obj;
  if (ext == ".ply") return MeshFormat::ply;
  throw_error(ErrorKind::invalid,
              "unrecognized mesh extension '" + ext + "' for " + path.string());
}

TriMesh load_mesh(const std::filesystem::path& path, MeshFormat format) {
  return format == MeshFormat::obj ? load_obj(path) : load_ply(path);
}

TriMesh load_mesh(const std::filesystem::path& path) {
  return load_mesh(path, format_from_path(path));
}

void save_mesh(const TriMesh& mesh, const std::filesystem::path& path,
               MeshFormat format) {
  if (format == MeshFormat::obj)
    save_obj(mesh, path);
  else
    save_ply(mesh, path);
}

void save_mesh(const TriMesh& mesh, const std::filesystem::path& path) {
  save_mesh(mesh, path, format_from_path(path));
}

}  // namespace besa
