#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace oedkit {

// Minimal JSON emitter with a fixed, reproducible number format. All CLI
// artifacts go through this writer so that reruns with the same config and
// seed are byte-identical: doubles are always printed with %.17g, keys keep
// insertion order, and there is no locale or timestamp dependence.
class JsonWriter {
 public:
  JsonWriter& begin_object();
  JsonWriter& end_object();
  JsonWriter& begin_array();
  JsonWriter& end_array();

  JsonWriter& key(const std::string& k);

  JsonWriter& value(double v);
  JsonWriter& value(bool v);
  JsonWriter& value(std::int64_t v);
  JsonWriter& value(std::uint64_t v);
  JsonWriter& value(int v) { return value(static_cast<std::int64_t>(v)); }
  JsonWriter& value(const std::string& v);
  JsonWriter& value(const char* v) { return value(std::string(v)); }
  JsonWriter& null_value();

  template <typename T>
  JsonWriter& kv(const std::string& k, const T& v) {
    key(k);
    return value(v);
  }

  const std::string& str() const { return out_; }

  // %.17g; throws IoError on non-finite input.
  static std::string format_double(double v);
  static std::string escape(const std::string& s);

 private:
  void element_prefix();

  std::string out_;
  std::vector<bool> has_items_;
  bool pending_key_ = false;
};

// Writes content to path atomically enough for our purposes (truncate+write).
void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace oedkit
