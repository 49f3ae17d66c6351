#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <bit>
#include <string>
#include <vector>

#include "chainlab/fermion.hpp"
#include "chainlab/local_operator.hpp"

// Sparse operators on the full chain Hilbert space (or a charge sector of it).

namespace chainlab {

using SpMat = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;

struct GlobalOperator {
  long dim = 0;
  SpMat mat;
  bool hermitian = false;
  std::string basis_tag;

  GlobalOperator() = default;
  GlobalOperator(SpMat m, bool herm, std::string tag)
      : dim(m.rows()), mat(std::move(m)), hermitian(herm), basis_tag(std::move(tag)) {
    if (mat.rows() != mat.cols()) throw ValidationError("GlobalOperator: matrix must be square");
  }

  Vec apply(const Vec& x) const { return mat * x; }

  bool check_hermitian(double tol = kHermiticityTol) const {
    SpMat d = SpMat(mat - SpMat(mat.adjoint()));
    double m = 0;
    for (int k = 0; k < d.outerSize(); ++k)
      for (SpMat::InnerIterator it(d, k); it; ++it) m = std::max(m, std::abs(it.value()));
    return m <= tol;
  }

  Mat dense() const { return Mat(mat); }
};

inline std::string full_basis_tag(int L) { return "full:L=" + std::to_string(L); }

namespace detail {
inline void check_same_space(const GlobalOperator& a, const GlobalOperator& b, const char* who) {
  if (a.dim != b.dim || a.basis_tag != b.basis_tag)
    throw ValidationError(std::string(who) + ": operands live on different bases (" + a.basis_tag +
                          " vs " + b.basis_tag + ")");
}
}  // namespace detail

// Q tensor identity on the remaining sites, exploiting the identity factors.
inline GlobalOperator embed(const LocalOperator& op, int L,
                            const std::string& tag = std::string()) {
  if (op.max_site() >= L) throw ValidationError("embed: support out of range");
  const long dim = 1L << L;
  const int k = op.num_sites();
  const long dLoc = op.dim();
  // environment sites, lowest first
  std::vector<int> env;
  {
    std::size_t s = 0;
    for (int j = 0; j < L; ++j) {
      if (s < op.support().size() && op.support()[s] == j)
        ++s;
      else
        env.push_back(j);
    }
  }
  std::vector<Eigen::Triplet<cplx>> trip;
  long nnzLoc = 0;
  for (long a = 0; a < dLoc; ++a)
    for (long b = 0; b < dLoc; ++b)
      if (op.matrix()(a, b) != cplx(0, 0)) ++nnzLoc;
  trip.reserve(static_cast<std::size_t>(nnzLoc) << (L - k));
  const long dEnv = 1L << env.size();
  for (long a = 0; a < dLoc; ++a) {
    long ra = 0;
    for (int i = 0; i < k; ++i) ra |= ((a >> i) & 1L) << op.support()[i];
    for (long b = 0; b < dLoc; ++b) {
      const cplx v = op.matrix()(a, b);
      if (v == cplx(0, 0)) continue;
      long cb = 0;
      for (int i = 0; i < k; ++i) cb |= ((b >> i) & 1L) << op.support()[i];
      for (long e = 0; e < dEnv; ++e) {
        long bits = 0;
        for (std::size_t i = 0; i < env.size(); ++i) bits |= ((e >> i) & 1L) << env[i];
        trip.emplace_back(static_cast<int>(ra | bits), static_cast<int>(cb | bits), v);
      }
    }
  }
  SpMat m(dim, dim);
  m.setFromTriplets(trip.begin(), trip.end());
  return GlobalOperator(std::move(m), op.is_hermitian(), tag.empty() ? full_basis_tag(L) : tag);
}

// Site-factored products (Jordan-Wigner monomials, strings included) embed in
// O(2^L) regardless of how many sites the string touches.
inline GlobalOperator embed(const PauliProduct& p, int L,
                            const std::string& tag = std::string()) {
  const long dim = 1L << L;
  for (const auto& [s, m] : p.factors)
    if (s < 0 || s >= L) throw ValidationError("embed: support out of range");
  std::vector<Eigen::Triplet<cplx>> trip;
  trip.reserve(dim);
  for (long col = 0; col < dim; ++col) {
    // each factor maps the column bit to at most two output bits; walk them
    std::vector<std::pair<long, cplx>> partial{{0L, p.coeff}};
    bool dead = false;
    long fixedMask = 0;
    for (const auto& [s, m] : p.factors) {
      const int b = static_cast<int>((col >> s) & 1L);
      std::vector<std::pair<long, cplx>> next;
      for (int a = 0; a < 2; ++a) {
        const cplx v = m(a, b);
        if (v == cplx(0, 0)) continue;
        for (const auto& [bits, amp] : partial)
          next.emplace_back(bits | (static_cast<long>(a) << s), amp * v);
      }
      fixedMask |= 1L << s;
      partial.swap(next);
      if (partial.empty()) {
        dead = true;
        break;
      }
    }
    if (dead) continue;
    const long rest = col & ~fixedMask;
    for (const auto& [bits, amp] : partial)
      trip.emplace_back(static_cast<int>(bits | rest), static_cast<int>(col), amp);
  }
  SpMat m(dim, dim);
  m.setFromTriplets(trip.begin(), trip.end());
  GlobalOperator g(std::move(m), false, tag.empty() ? full_basis_tag(L) : tag);
  g.hermitian = g.check_hermitian();
  return g;
}

inline GlobalOperator operator+(const GlobalOperator& a, const GlobalOperator& b) {
  detail::check_same_space(a, b, "operator+");
  return GlobalOperator(SpMat(a.mat + b.mat), a.hermitian && b.hermitian, a.basis_tag);
}
inline GlobalOperator operator-(const GlobalOperator& a, const GlobalOperator& b) {
  detail::check_same_space(a, b, "operator-");
  return GlobalOperator(SpMat(a.mat - b.mat), a.hermitian && b.hermitian, a.basis_tag);
}
inline GlobalOperator operator*(const cplx& s, const GlobalOperator& a) {
  return GlobalOperator(SpMat(s * a.mat), a.hermitian && s.imag() == 0, a.basis_tag);
}
inline GlobalOperator product(const GlobalOperator& a, const GlobalOperator& b) {
  detail::check_same_space(a, b, "product");
  return GlobalOperator(SpMat(a.mat * b.mat), false, a.basis_tag);
}

inline GlobalOperator commutator(const GlobalOperator& a, const GlobalOperator& b) {
  detail::check_same_space(a, b, "commutator");
  return GlobalOperator(SpMat(a.mat * b.mat - b.mat * a.mat), false, a.basis_tag);
}
inline GlobalOperator anticommutator(const GlobalOperator& a, const GlobalOperator& b) {
  detail::check_same_space(a, b, "anticommutator");
  SpMat m = SpMat(a.mat * b.mat + b.mat * a.mat);
  GlobalOperator g(std::move(m), false, a.basis_tag);
  g.hermitian = a.hermitian && b.hermitian ? g.check_hermitian() : false;
  return g;
}

// Apply a local operator to a full-chain vector without embedding it.
inline void apply_local_inplace(const LocalOperator& op, const Vec& x, Vec& y, int L) {
  if (op.max_site() >= L) throw ValidationError("apply_local: support out of range");
  const long dim = 1L << L;
  if (x.size() != dim) throw ValidationError("apply_local: vector dimension mismatch");
  y.setZero(dim);
  const int k = op.num_sites();
  const long dLoc = op.dim();
  std::vector<int> env;
  {
    std::size_t s = 0;
    for (int j = 0; j < L; ++j) {
      if (s < op.support().size() && op.support()[s] == j)
        ++s;
      else
        env.push_back(j);
    }
  }
  const long dEnv = 1L << env.size();
  std::vector<long> scatter(dLoc);
  for (long a = 0; a < dLoc; ++a) {
    long bits = 0;
    for (int i = 0; i < k; ++i) bits |= ((a >> i) & 1L) << op.support()[i];
    scatter[a] = bits;
  }
  Vec sub(dLoc), res(dLoc);
  for (long e = 0; e < dEnv; ++e) {
    long base = 0;
    for (std::size_t i = 0; i < env.size(); ++i) base |= ((e >> i) & 1L) << env[i];
    for (long a = 0; a < dLoc; ++a) sub(a) = x(base | scatter[a]);
    res.noalias() = op.matrix() * sub;
    for (long a = 0; a < dLoc; ++a) y(base | scatter[a]) += res(a);
  }
}

inline Vec apply_local(const LocalOperator& op, const Vec& x, int L) {
  Vec y;
  apply_local_inplace(op, x, y, L);
  return y;
}

inline cplx expectation(const LocalOperator& op, const Vec& psi, int L) {
  return psi.dot(apply_local(op, psi, L));
}

// ---- diagonal symmetry data ---------------------------------------------

// Sum_j sigma_z^(j) = 2 N - L, the U(1) charge in half-units of spin.
inline Eigen::VectorXd charge_diag(int L) {
  const long dim = 1L << L;
  Eigen::VectorXd d(dim);
  for (long s = 0; s < dim; ++s)
    d(s) = 2.0 * std::popcount(static_cast<unsigned long>(s)) - L;
  return d;
}

inline GlobalOperator charge_operator(int L) {
  const long dim = 1L << L;
  std::vector<Eigen::Triplet<cplx>> trip;
  trip.reserve(dim);
  Eigen::VectorXd d = charge_diag(L);
  for (long s = 0; s < dim; ++s)
    trip.emplace_back(static_cast<int>(s), static_cast<int>(s), cplx(d(s), 0));
  SpMat m(dim, dim);
  m.setFromTriplets(trip.begin(), trip.end());
  return GlobalOperator(std::move(m), true, full_basis_tag(L));
}

// global parity string prod_j sigma_z^(j): diagonal signs
inline Eigen::VectorXd parity_diag(int L) {
  const long dim = 1L << L;
  Eigen::VectorXd d(dim);
  for (long s = 0; s < dim; ++s)
    d(s) = (std::popcount(static_cast<unsigned long>(s)) + L) % 2 == 0 ? 1.0 : -1.0;
  return d;
}

inline GlobalOperator conjugate_by_signs(const GlobalOperator& a, const Eigen::VectorXd& signs) {
  SpMat m = a.mat;
  for (int k = 0; k < m.outerSize(); ++k)
    for (SpMat::InnerIterator it(m, k); it; ++it)
      it.valueRef() *= signs(it.row()) * signs(it.col());
  return GlobalOperator(std::move(m), a.hermitian, a.basis_tag);
}

// one-site cyclic shift of the chain, as a basis permutation
inline GlobalOperator translation_conjugate(const GlobalOperator& a, int L) {
  const long dim = 1L << L;
  if (a.dim != dim) throw ValidationError("translation_conjugate: dimension mismatch");
  auto rot = [&](long s) {
    const long top = (s >> (L - 1)) & 1L;
    return ((s << 1) | top) & (dim - 1);
  };
  std::vector<Eigen::Triplet<cplx>> trip;
  trip.reserve(a.mat.nonZeros());
  for (int k = 0; k < a.mat.outerSize(); ++k)
    for (SpMat::InnerIterator it(a.mat, k); it; ++it)
      trip.emplace_back(static_cast<int>(rot(it.row())), static_cast<int>(rot(it.col())),
                        it.value());
  SpMat m(dim, dim);
  m.setFromTriplets(trip.begin(), trip.end());
  return GlobalOperator(std::move(m), a.hermitian, a.basis_tag);
}

// ---- spectral norm -------------------------------------------------------

namespace detail {

inline Vec deterministic_start(long dim, std::uint64_t seed) {
  Rng rng(seed);
  Vec v(dim);
  for (long i = 0; i < dim; ++i) v(i) = rng.next_cgauss();
  v.normalize();
  return v;
}

// largest |eigenvalue| of a Hermitian operator given by `apply`
template <typename ApplyFn>
double lanczos_extreme_abs(const ApplyFn& apply, long dim, double tol, int maxIter,
                           std::uint64_t seed = 0x5eed0001ull) {
  if (dim == 1) {
    Vec e(1);
    e(0) = 1.0;
    return std::abs(apply(e)(0));
  }
  const int mMax = static_cast<int>(std::min<long>(dim, maxIter));
  std::vector<Vec> basis;
  basis.reserve(mMax);
  std::vector<double> alpha, beta;
  Vec v = deterministic_start(dim, seed);
  basis.push_back(v);
  double extreme = 0.0;
  for (int j = 0; j < mMax; ++j) {
    Vec w = apply(basis[j]);
    double a = std::real(basis[j].dot(w));
    alpha.push_back(a);
    w -= a * basis[j];
    if (j > 0) w -= beta[j - 1] * basis[j - 1];
    // full reorthogonalization, twice
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& q : basis) w -= q.dot(w) * q;
    const double b = w.norm();
    const int m = j + 1;
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) T(i, i) = alpha[i];
    for (int i = 0; i + 1 < m; ++i) T(i, i + 1) = T(i + 1, i) = beta[i];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
    int idx = 0;
    double best = -1;
    for (int i = 0; i < m; ++i)
      if (std::abs(es.eigenvalues()(i)) > best) {
        best = std::abs(es.eigenvalues()(i));
        idx = i;
      }
    extreme = best;
    const double resid = b * std::abs(es.eigenvectors()(m - 1, idx));
    if (resid <= tol * std::max(extreme, 1e-300) || resid < 1e-14) return extreme;
    if (b < 1e-300) return extreme;  // invariant subspace exhausted
    beta.push_back(b);
    basis.push_back(w / b);
  }
  throw ConvergenceError("lanczos_extreme_abs: no convergence after iteration cap");
}

}  // namespace detail

// Largest singular value. Dense (exact) below kExactNormDim, iterative above.
inline double operator_norm(const GlobalOperator& op, double tol = 1e-10) {
  if (tol <= 0) throw ValidationError("operator_norm: tol must be positive");
  if (op.dim <= kExactNormDim) {
    Eigen::JacobiSVD<Mat> svd(op.dense());
    return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
  }
  if (op.hermitian) {
    auto apply = [&](const Vec& x) { return Vec(op.mat * x); };
    return detail::lanczos_extreme_abs(apply, op.dim, tol, 400);
  }
  const SpMat adj = op.mat.adjoint();
  auto applyAAd = [&](const Vec& x) { return Vec(adj * (op.mat * x)); };
  const double l = detail::lanczos_extreme_abs(applyAAd, op.dim, tol, 400);
  return std::sqrt(std::max(0.0, l));
}

}  // namespace chainlab
