#include "besa/container.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <zlib.h>

namespace besa {
namespace {

static_assert(std::endian::native == std::endian::little,
              "container payloads are little-endian");
static_assert(sizeof(int) == 4, "face indices are stored as int32");

std::uint32_t checksum(const std::string& blob) {
  uLong crc = crc32(0L, Z_NULL, 0);
  std::size_t off = 0;
  while (off < blob.size()) {
    const std::size_t chunk = std::min<std::size_t>(blob.size() - off, 1u << 30);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(blob.data() + off),
                static_cast<uInt>(chunk));
    off += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

std::string hex32(std::uint32_t value) {
  std::ostringstream out;
  out << std::hex << std::setw(8) << std::setfill('0') << value;
  return out.str();
}

// Row-major (vertex-major) byte dump of an Eigen V x 3 block.
template <class Matrix>
void append_rows(std::string& blob, const Matrix& rows) {
  using Scalar = typename Matrix::Scalar;
  for (int v = 0; v < rows.rows(); ++v)
    for (int c = 0; c < 3; ++c) {
      const Scalar value = rows(v, c);
      const char* bytes = reinterpret_cast<const char*>(&value);
      blob.append(bytes, sizeof(Scalar));
    }
}

template <class Matrix>
void read_rows(const std::string& blob, std::size_t& offset, Matrix& rows) {
  using Scalar = typename Matrix::Scalar;
  for (int v = 0; v < rows.rows(); ++v)
    for (int c = 0; c < 3; ++c) {
      Scalar value;
      std::memcpy(&value, blob.data() + offset, sizeof(Scalar));
      offset += sizeof(Scalar);
      rows(v, c) = value;
    }
}

struct BlobSpec {
  const char* name;
  std::string bytes;
};

[[noreturn]] void bad_container(const std::filesystem::path& path,
                                const std::string& what) {
  throw_error(ErrorKind::parse, path.string() + ": " + what);
}

}  // namespace

void save_basis(const Basis& basis, const std::filesystem::path& path) {
  validate_basis(basis);

  BlobSpec blobs[4] = {{"template_vertices", {}},
                       {"template_faces", {}},
                       {"pose_basis", {}},
                       {"shape_basis", {}}};
  append_rows(blobs[0].bytes, basis.template_mesh.vertices);
  append_rows(blobs[1].bytes, basis.template_mesh.faces);
  for (const Field& f : basis.pose_fields) append_rows(blobs[2].bytes, f);
  for (const Field& f : basis.shape_fields) append_rows(blobs[3].bytes, f);

  std::ostringstream manifest;
  manifest << kContainerVersion << "\n"
           << "vertices " << basis.template_mesh.vertex_count() << "\n"
           << "faces " << basis.template_mesh.face_count() << "\n"
           << "pose " << basis.pose_count() << "\n"
           << "shape " << basis.shape_count() << "\n";
  for (const BlobSpec& blob : blobs)
    manifest << "checksum " << blob.name << " " << hex32(checksum(blob.bytes))
             << "\n";
  manifest << "payload\n";

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw_error(ErrorKind::io, "cannot open " + path.string() + " for writing");
  out << manifest.str();
  for (const BlobSpec& blob : blobs)
    out.write(blob.bytes.data(),
              static_cast<std::streamsize>(blob.bytes.size()));
  out.flush();
  if (!out) throw_error(ErrorKind::io, "failed to write " + path.string());
}

Basis load_basis(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_error(ErrorKind::io, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (!in) throw_error(ErrorKind::io, "failed to read " + path.string());
  const std::string file = buffer.str();

  // Walk the manifest line by line until the payload marker.
  std::size_t pos = 0;
  int line_no = 0;
  long long vertices = -1, faces = -1, pose = -1, shape = -1;
  std::map<std::string, std::string> checksums;
  bool saw_payload = false;
  while (pos < file.size()) {
    const std::size_t eol = file.find('\n', pos);
    if (eol == std::string::npos)
      bad_container(path, "manifest has no payload marker");
    const std::string line = file.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (line_no == 1) {
      if (line != kContainerVersion)
        bad_container(path, "unsupported format version \"" + line + "\"");
      continue;
    }
    if (line == "payload") {
      saw_payload = true;
      break;
    }
    std::istringstream fields(line);
    std::string key;
    fields >> key;
    if (key == "vertices" || key == "faces" || key == "pose" ||
        key == "shape") {
      long long value = -1;
      fields >> value;
      if (fields.fail() || value < 0)
        bad_container(path, "bad manifest line \"" + line + "\"");
      if (key == "vertices")
        vertices = value;
      else if (key == "faces")
        faces = value;
      else if (key == "pose")
        pose = value;
      else
        shape = value;
    } else if (key == "checksum") {
      std::string name, hex;
      fields >> name >> hex;
      if (fields.fail() || hex.size() != 8)
        bad_container(path, "bad manifest line \"" + line + "\"");
      checksums[name] = hex;
    } else {
      bad_container(path, "unknown manifest key \"" + key + "\"");
    }
    if (line_no > 64) bad_container(path, "manifest too long");
  }
  if (!saw_payload) bad_container(path, "manifest has no payload marker");
  if (vertices < 1 || faces < 1 || pose < 0 || shape < 0 || pose + shape < 1)
    bad_container(path, "manifest dimensions are missing or inconsistent");

  const std::size_t v = static_cast<std::size_t>(vertices);
  const std::size_t sizes[4] = {
      v * 3 * sizeof(double), static_cast<std::size_t>(faces) * 3 * 4,
      static_cast<std::size_t>(pose) * v * 3 * sizeof(double),
      static_cast<std::size_t>(shape) * v * 3 * sizeof(double)};
  const char* names[4] = {"template_vertices", "template_faces", "pose_basis",
                          "shape_basis"};
  const std::size_t total = sizes[0] + sizes[1] + sizes[2] + sizes[3];
  if (file.size() - pos != total)
    bad_container(path, "payload has " + std::to_string(file.size() - pos) +
                            " bytes, expected " + std::to_string(total));
  for (int b = 0; b < 4; ++b) {
    auto it = checksums.find(names[b]);
    if (it == checksums.end())
      bad_container(path,
                    "manifest lacks a checksum for " + std::string(names[b]));
    const std::string blob = file.substr(pos, sizes[b]);
    if (hex32(checksum(blob)) != it->second)
      bad_container(path, "checksum mismatch in " + std::string(names[b]));
    pos += sizes[b];
  }
  pos -= total;  // rewind to the payload start for the actual reads

  Basis basis;
  basis.template_mesh.vertices.resize(vertices, 3);
  basis.template_mesh.faces.resize(faces, 3);
  read_rows(file, pos, basis.template_mesh.vertices);
  read_rows(file, pos, basis.template_mesh.faces);
  for (long long j = 0; j < pose; ++j) {
    Field f(vertices, 3);
    read_rows(file, pos, f);
    basis.pose_fields.push_back(std::move(f));
  }
  for (long long j = 0; j < shape; ++j) {
    Field f(vertices, 3);
    read_rows(file, pos, f);
    basis.shape_fields.push_back(std::move(f));
  }
  try {
    validate_basis(basis);
  } catch (const Error& e) {
    bad_container(path, e.what());
  }
  return basis;
}

}  // namespace besa
