#include "oedkit/design.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <set>
#include <string>

#include "oedkit/errors.hpp"
#include "oedkit/parallel.hpp"

namespace oedkit {

Design::Design(int d_, std::vector<int> idx) : d(d_), indices(std::move(idx)) {
  if (d < 0) throw ConfigError("candidate count must be nonnegative");
  std::set<int> seen;
  for (int i : indices) {
    if (i < 0 || i >= d) {
      throw ConfigError("design index " + std::to_string(i) + " out of range [0, " +
                        std::to_string(d) + ")");
    }
    if (!seen.insert(i).second) {
      throw ConfigError("duplicate design index " + std::to_string(i));
    }
  }
}

Eigen::MatrixXd Design::matrix() const {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(r(), d);
  for (int row = 0; row < r(); ++row) w(row, indices[static_cast<std::size_t>(row)]) = 1.0;
  return w;
}

std::vector<int> Design::sorted_indices() const {
  std::vector<int> s = indices;
  std::sort(s.begin(), s.end());
  return s;
}

Design Design::with(int candidate) const {
  std::vector<int> idx = indices;
  idx.push_back(candidate);
  return Design(d, std::move(idx));
}

GreedyResult greedy_select(const DesignObjective& eig_eval, int d, int r, int n_threads) {
  if (r < 1 || r > d) throw ConfigError("greedy budget must satisfy 1 <= r <= d");

  GreedyResult result;
  result.design = Design(d, {});
  for (int step = 0; step < r; ++step) {
    std::vector<int> remaining;
    remaining.reserve(static_cast<std::size_t>(d));
    for (int v = 0; v < d; ++v) {
      if (std::find(result.design.indices.begin(), result.design.indices.end(), v) ==
          result.design.indices.end()) {
        remaining.push_back(v);
      }
    }

    std::vector<double> values(remaining.size());
    parallel_for(static_cast<int>(remaining.size()), n_threads, [&](int c) {
      try {
        values[static_cast<std::size_t>(c)] =
            eig_eval(result.design.with(remaining[static_cast<std::size_t>(c)]));
      } catch (const std::exception& e) {
        throw NumericalError("greedy step " + std::to_string(step + 1) + " candidate " +
                             std::to_string(remaining[static_cast<std::size_t>(c)]) +
                             ": " + e.what());
      }
    });

    // Ascending scan with strict improvement keeps ties on the smallest index.
    int best = 0;
    for (std::size_t c = 1; c < values.size(); ++c) {
      if (values[c] > values[static_cast<std::size_t>(best)]) best = static_cast<int>(c);
    }
    result.design = result.design.with(remaining[static_cast<std::size_t>(best)]);
    result.step_values.push_back(values[static_cast<std::size_t>(best)]);
  }
  return result;
}

std::pair<Design, double> exhaustive_select(const DesignObjective& eig_eval, int d, int r) {
  if (r < 1 || r > d) throw ConfigError("exhaustive budget must satisfy 1 <= r <= d");

  double combos = 1.0;
  for (int i = 0; i < r; ++i) combos *= static_cast<double>(d - i) / (i + 1);
  if (combos > 1e5) {
    throw ConfigError("exhaustive search budget exceeded: C(" + std::to_string(d) + ", " +
                      std::to_string(r) + ") > 1e5");
  }

  std::vector<int> subset(static_cast<std::size_t>(r));
  std::iota(subset.begin(), subset.end(), 0);

  Design best_design(d, subset);
  double best_value = -std::numeric_limits<double>::infinity();
  for (;;) {
    const Design candidate(d, subset);
    const double value = eig_eval(candidate);
    if (value > best_value) {
      best_value = value;
      best_design = candidate;
    }
    // Next lexicographic r-combination of [0, d).
    int i = r - 1;
    while (i >= 0 && subset[static_cast<std::size_t>(i)] == d - r + i) --i;
    if (i < 0) break;
    ++subset[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < r; ++j)
      subset[static_cast<std::size_t>(j)] = subset[static_cast<std::size_t>(j - 1)] + 1;
  }
  return {best_design, best_value};
}

Design random_design(RngStream& rng, int d, int r) {
  if (r > d) throw ConfigError("random design needs r <= d");
  std::vector<int> pool(static_cast<std::size_t>(d));
  std::iota(pool.begin(), pool.end(), 0);
  for (int i = 0; i < r; ++i) {
    const int j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(d - i)));
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
  }
  pool.resize(static_cast<std::size_t>(r));
  return Design(d, std::move(pool));
}

}  // namespace oedkit
