#include "oedkit/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "oedkit/errors.hpp"
#include "oedkit/json_writer.hpp"

static_assert(std::endian::native == std::endian::little,
              "container payloads are little-endian; big-endian hosts are unsupported");

namespace oedkit {

namespace {

constexpr const char* kFormat = "oedkit-blocks";
constexpr int kVersion = 1;

std::string header_path(const std::string& base) { return base + ".json"; }
std::string payload_path(const std::string& base) { return base + ".bin"; }

}  // namespace

bool Container::has_meta(const std::string& k) const {
  for (const auto& [key, _] : meta)
    if (key == k) return true;
  return false;
}

static const MetaValue& find_meta(const Container& c, const std::string& k) {
  for (const auto& [key, v] : c.meta)
    if (key == k) return v;
  throw IoError("container header missing field '" + k + "'");
}

bool Container::meta_bool(const std::string& k) const {
  const MetaValue& v = find_meta(*this, k);
  if (const auto* p = std::get_if<bool>(&v)) return *p;
  if (const auto* p = std::get_if<std::int64_t>(&v)) return *p != 0;
  if (const auto* p = std::get_if<std::uint64_t>(&v)) return *p != 0;
  throw IoError("container header field '" + k + "' is not a boolean");
}

std::int64_t Container::meta_int(const std::string& k) const {
  const MetaValue& v = find_meta(*this, k);
  if (const auto* p = std::get_if<std::int64_t>(&v)) return *p;
  if (const auto* p = std::get_if<std::uint64_t>(&v)) return static_cast<std::int64_t>(*p);
  throw IoError("container header field '" + k + "' is not an integer");
}

std::uint64_t Container::meta_uint(const std::string& k) const {
  const MetaValue& v = find_meta(*this, k);
  if (const auto* p = std::get_if<std::uint64_t>(&v)) return *p;
  if (const auto* p = std::get_if<std::int64_t>(&v)) {
    if (*p < 0) throw IoError("container header field '" + k + "' is negative");
    return static_cast<std::uint64_t>(*p);
  }
  throw IoError("container header field '" + k + "' is not an integer");
}

double Container::meta_double(const std::string& k) const {
  const MetaValue& v = find_meta(*this, k);
  if (const auto* p = std::get_if<double>(&v)) return *p;
  if (const auto* p = std::get_if<std::int64_t>(&v)) return static_cast<double>(*p);
  if (const auto* p = std::get_if<std::uint64_t>(&v)) return static_cast<double>(*p);
  throw IoError("container header field '" + k + "' is not a number");
}

std::string Container::meta_string(const std::string& k) const {
  const MetaValue& v = find_meta(*this, k);
  if (const auto* p = std::get_if<std::string>(&v)) return *p;
  throw IoError("container header field '" + k + "' is not a string");
}

const Eigen::MatrixXd& Container::block(const std::string& name) const {
  for (const auto& b : blocks)
    if (b.name == name) return b.data;
  throw IoError("container payload missing block '" + name + "'");
}

bool Container::has_block(const std::string& name) const {
  for (const auto& b : blocks)
    if (b.name == name) return true;
  return false;
}

void save_container(const std::string& base_path, const Container& c) {
  JsonWriter w;
  w.begin_object();
  w.kv("format", kFormat);
  w.kv("version", kVersion);
  for (const auto& [k, v] : c.meta) {
    w.key(k);
    std::visit([&](const auto& x) { w.value(x); }, v);
  }
  w.key("blocks").begin_array();
  for (const auto& b : c.blocks) {
    w.begin_object();
    w.kv("name", b.name);
    w.kv("rows", static_cast<std::int64_t>(b.data.rows()));
    w.kv("cols", static_cast<std::int64_t>(b.data.cols()));
    w.end_object();
  }
  w.end_array();
  w.end_object();
  write_text_file(header_path(base_path), w.str() + "\n");

  std::ofstream bin(payload_path(base_path), std::ios::binary | std::ios::trunc);
  if (!bin) throw IoError("cannot open for writing: " + payload_path(base_path));
  for (const auto& b : c.blocks) {
    // Row-major on disk regardless of Eigen's in-memory layout.
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    RowMajor rm = b.data;
    bin.write(reinterpret_cast<const char*>(rm.data()),
              static_cast<std::streamsize>(sizeof(double) * rm.size()));
  }
  if (!bin) throw IoError("write failed: " + payload_path(base_path));
}

Container load_container(const std::string& base_path) {
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(read_text_file(header_path(base_path)));
  } catch (const nlohmann::json::exception& e) {
    throw IoError("corrupt container header " + header_path(base_path) + ": " + e.what());
  }
  if (!header.is_object() || header.value("format", "") != kFormat) {
    throw IoError("corrupt container header " + header_path(base_path) +
                  ": missing format tag");
  }
  if (!header.contains("blocks") || !header["blocks"].is_array()) {
    throw IoError("corrupt container header " + header_path(base_path) +
                  ": missing block table");
  }

  Container c;
  for (auto it = header.begin(); it != header.end(); ++it) {
    const std::string& k = it.key();
    if (k == "format" || k == "version" || k == "blocks") continue;
    const auto& v = it.value();
    if (v.is_boolean()) {
      c.add_meta(k, v.get<bool>());
    } else if (v.is_number_unsigned()) {
      c.add_meta(k, v.get<std::uint64_t>());
    } else if (v.is_number_integer()) {
      c.add_meta(k, v.get<std::int64_t>());
    } else if (v.is_number_float()) {
      c.add_meta(k, v.get<double>());
    } else if (v.is_string()) {
      c.add_meta(k, v.get<std::string>());
    } else {
      throw IoError("container header field '" + k + "' has unsupported type");
    }
  }

  std::ifstream bin(payload_path(base_path), std::ios::binary);
  if (!bin) throw IoError("cannot open for reading: " + payload_path(base_path));
  bin.seekg(0, std::ios::end);
  const std::uint64_t payload_bytes = static_cast<std::uint64_t>(bin.tellg());
  bin.seekg(0, std::ios::beg);

  std::uint64_t offset = 0;
  for (const auto& jb : header["blocks"]) {
    if (!jb.contains("name") || !jb.contains("rows") || !jb.contains("cols")) {
      throw IoError("corrupt block table entry in " + header_path(base_path));
    }
    const std::string name = jb["name"].get<std::string>();
    const std::int64_t rows = jb["rows"].get<std::int64_t>();
    const std::int64_t cols = jb["cols"].get<std::int64_t>();
    if (rows < 0 || cols < 0) {
      throw IoError("header/payload shape conflict: block '" + name +
                    "' declares negative shape");
    }
    const std::uint64_t bytes = static_cast<std::uint64_t>(rows) *
                                static_cast<std::uint64_t>(cols) * sizeof(double);
    if (offset + bytes > payload_bytes) {
      throw IoError("truncated payload: block '" + name + "' incomplete in " +
                    payload_path(base_path));
    }
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    RowMajor rm(rows, cols);
    bin.read(reinterpret_cast<char*>(rm.data()), static_cast<std::streamsize>(bytes));
    if (!bin) throw IoError("read failed: " + payload_path(base_path));
    c.blocks.push_back({name, Eigen::MatrixXd(rm)});
    offset += bytes;
  }
  if (offset != payload_bytes) {
    throw IoError("header/payload shape conflict: " + payload_path(base_path) +
                  " has trailing bytes beyond the declared blocks");
  }
  return c;
}

}  // namespace oedkit
