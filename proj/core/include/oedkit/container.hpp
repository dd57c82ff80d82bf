#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace oedkit {

// Shared persistence container used by the prior, the reduced bases, the
// surrogate network, and datasets: a JSON header `<base>.json` carrying
// scalar metadata plus a block table, and a sidecar `<base>.bin` holding the
// blocks' float64 data (row-major, little-endian) concatenated in table order.

using MetaValue = std::variant<std::int64_t, std::uint64_t, double, bool, std::string>;

struct NamedBlock {
  std::string name;
  Eigen::MatrixXd data;
};

struct Container {
  std::vector<std::pair<std::string, MetaValue>> meta;
  std::vector<NamedBlock> blocks;

  void add_meta(const std::string& k, MetaValue v) { meta.emplace_back(k, std::move(v)); }
  void add_block(const std::string& name, Eigen::MatrixXd m) {
    blocks.push_back({name, std::move(m)});
  }
  void add_block(const std::string& name, const Eigen::VectorXd& v) {
    blocks.push_back({name, v});
  }

  bool has_meta(const std::string& k) const;
  bool meta_bool(const std::string& k) const;
  std::int64_t meta_int(const std::string& k) const;
  std::uint64_t meta_uint(const std::string& k) const;
  double meta_double(const std::string& k) const;
  std::string meta_string(const std::string& k) const;

  const Eigen::MatrixXd& block(const std::string& name) const;
  bool has_block(const std::string& name) const;
};

void save_container(const std::string& base_path, const Container& c);
Container load_container(const std::string& base_path);

}  // namespace oedkit
