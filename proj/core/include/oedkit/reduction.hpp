#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>

#include "oedkit/forward_models.hpp"
#include "oedkit/prior.hpp"

namespace oedkit {

// Input and output reduced bases.
//  - input_basis V (n x r_m): generalized eigenvectors of the sampled
//    Jacobian Gram operator against the prior precision, so V' Gamma^-1 V = I.
//  - output_basis Phi (d x r_f): orthonormal eigenvectors of the sampled
//    observable outer-product operator.
struct ReducedBases {
  Eigen::MatrixXd input_basis;
  Eigen::VectorXd input_eigs;   // decreasing
  Eigen::MatrixXd output_basis;
  Eigen::VectorXd output_eigs;  // decreasing
  int n_samples_as = 0;
  int n_samples_pod = 0;
  std::uint64_t seed = 0;

  void save(const std::string& base_path) const;
  static ReducedBases load(const std::string& base_path);
};

// H = (1/N) sum_i J(m_i)' J(m_i) over i.i.d. prior samples.
Eigen::MatrixXd estimate_as_operator(const ObservableMap& map, const GaussianSampler& prior,
                                     int n_samples, std::uint64_t seed, int n_threads = 1);

// Solves H v = lambda Gamma^-1 v by prior whitening: a standard symmetric
// eigensolve of L' H L with v = L w. Returns the top r_m pairs.
std::pair<Eigen::MatrixXd, Eigen::VectorXd> as_basis(const Eigen::MatrixXd& h,
                                                     const GaussianSampler& prior, int r_m);

// Top r_f orthonormal eigenpairs of (1/N) sum_i F(m_i) F(m_i)'.
std::pair<Eigen::MatrixXd, Eigen::VectorXd> pod_basis(const ObservableMap& map,
                                                      const GaussianSampler& prior,
                                                      int n_samples, int r_f,
                                                      std::uint64_t seed,
                                                      int n_threads = 1);

// Smallest r with sum_{i<=r} eigs_i >= threshold * sum eigs.
int energy_rank(const Eigen::VectorXd& eigs, double threshold);

}  // namespace oedkit
