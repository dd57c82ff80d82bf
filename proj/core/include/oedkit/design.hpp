#pragma once

#include <Eigen/Dense>
#include <functional>
#include <utility>
#include <vector>

#include "oedkit/rng.hpp"

namespace oedkit {

// An ordered selection of r distinct candidate sensors out of d. The induced
// design matrix W is r x d binary with one 1 per row and at most one per
// column.
struct Design {
  int d = 0;
  std::vector<int> indices;

  Design() = default;
  Design(int d_, std::vector<int> idx);

  int r() const { return static_cast<int>(indices.size()); }
  bool empty() const { return indices.empty(); }

  Eigen::MatrixXd matrix() const;
  std::vector<int> sorted_indices() const;
  Design with(int candidate) const;  // copy with one appended index
};

struct GreedyResult {
  Design design;
  std::vector<double> step_values;  // EIG after each greedy step
};

using DesignObjective = std::function<double(const Design&)>;

// Greedy forward selection: at each step evaluates the objective on the
// current set plus every remaining candidate (concurrently when n_threads
// > 1) and appends the argmax. Ties go to the smallest candidate index.
GreedyResult greedy_select(const DesignObjective& eig_eval, int d, int r,
                           int n_threads = 1);

// Enumerates all r-subsets (lexicographic order); requires C(d, r) <= 1e5.
// Ties go to the lexicographically smallest index set.
std::pair<Design, double> exhaustive_select(const DesignObjective& eig_eval, int d, int r);

// Uniform sample of r distinct indices (partial Fisher-Yates).
Design random_design(RngStream& rng, int d, int r);

}  // namespace oedkit
