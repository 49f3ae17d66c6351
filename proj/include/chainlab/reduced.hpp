#pragma once

#include "chainlab/global_operator.hpp"

// Reduced density matrices over arbitrary site windows (low index bit =
// lowest window site) and entropy helpers.

namespace chainlab {

struct ReducedState {
  std::vector<int> window;
  Mat matrix;
  Eigen::VectorXd spectrum;  // descending
};

inline ReducedState reduced_density(const Vec& psi, std::vector<int> window, int L) {
  std::sort(window.begin(), window.end());
  for (std::size_t i = 0; i + 1 < window.size(); ++i)
    if (window[i] == window[i + 1]) throw ValidationError("reduced_density: repeated site");
  if (!window.empty() && (window.front() < 0 || window.back() >= L))
    throw ValidationError("reduced_density: window outside the chain");
  const long dim = 1L << L;
  if (psi.size() != dim) throw ValidationError("reduced_density: dimension mismatch");
  const int k = static_cast<int>(window.size());
  const long dW = 1L << k;
  std::vector<int> env;
  {
    std::size_t s = 0;
    for (int j = 0; j < L; ++j) {
      if (s < window.size() && window[s] == j)
        ++s;
      else
        env.push_back(j);
    }
  }
  const long dE = 1L << env.size();
  std::vector<long> scatter(dW);
  for (long a = 0; a < dW; ++a) {
    long bits = 0;
    for (int i = 0; i < k; ++i) bits |= ((a >> i) & 1L) << window[i];
    scatter[a] = bits;
  }
  Mat rho = Mat::Zero(dW, dW);
  Vec sub(dW);
  for (long e = 0; e < dE; ++e) {
    long base = 0;
    for (std::size_t i = 0; i < env.size(); ++i) base |= ((e >> i) & 1L) << env[i];
    for (long a = 0; a < dW; ++a) sub(a) = psi(base | scatter[a]);
    rho.noalias() += sub * sub.adjoint();
  }
  ReducedState out;
  out.window = std::move(window);
  Eigen::SelfAdjointEigenSolver<Mat> es(rho);
  out.spectrum = es.eigenvalues().reverse();
  out.matrix = std::move(rho);
  const double tr = out.matrix.trace().real();
  if (std::abs(tr - 1.0) > 1e-10)
    throw ValidationError("reduced_density: input state is not normalized");
  if (out.spectrum.minCoeff() < -1e-10)
    throw ValidationError("reduced_density: negative spectrum");
  return out;
}

// eigenvalues below 1e-14 count as exact zeros
inline double entropy_of_spectrum(const Eigen::VectorXd& p) {
  double s = 0.0;
  for (long i = 0; i < p.size(); ++i)
    if (p(i) > 1e-14) s -= p(i) * std::log2(p(i));
  return s;
}

inline double entropy_of_density(const Mat& rho) {
  Eigen::SelfAdjointEigenSolver<Mat> es(rho);
  return entropy_of_spectrum(es.eigenvalues());
}

// Schmidt coefficients (squared: reduced spectrum) across cut | left = [0, cut)
inline Eigen::VectorXd schmidt_spectrum(const Vec& psi, int cut, int L) {
  if (cut <= 0 || cut >= L) throw ValidationError("schmidt_spectrum: cut must be inside the chain");
  const long dLeft = 1L << cut;
  const long dRight = 1L << (L - cut);
  // psi(index) with index = left + dLeft*right: column-major map has left
  // contiguous, i.e. psi = matrix(left, right)
  Eigen::Map<const Mat> M(psi.data(), dLeft, dRight);
  Eigen::JacobiSVD<Mat> svd(M);
  Eigen::VectorXd p = svd.singularValues().array().square();
  return p;
}

}  // namespace chainlab
