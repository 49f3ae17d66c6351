#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <cstdint>
#include <vector>

#include "chainlab/core.hpp"

// Operators supported on a few named sites of a chain of length L.
//
// Conventions, fixed once for the whole library:
//   * basis states of the chain are bitstrings; bit j of the index is the
//     occupation of site j (1 = occupied = spin-up), site 0 is the least
//     significant bit, so the fermionic vacuum is index 0;
//   * single-site matrices act on (|0> = empty/down, |1> = occupied/up), so
//     sigma_z = diag(-1,+1) and sigma_z = 2 n - 1 holds as a matrix identity;
//   * sigma^+ = (sigma_x + i sigma_y)/2 creates, matching c^dagger through
//     the Jordan-Wigner map in fermion.hpp.

namespace chainlab {

using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using Mat2 = Eigen::Matrix2cd;

inline Mat2 pauli_id() { return Mat2::Identity(); }
inline Mat2 pauli_x() {
  Mat2 m;
  m << 0, 1, 1, 0;
  return m;
}
inline Mat2 pauli_y() {
  Mat2 m;
  m << 0, cplx(0, 1), cplx(0, -1), 0;
  return m;
}
inline Mat2 pauli_z() {
  Mat2 m;
  m << -1, 0, 0, 1;
  return m;
}
inline Mat2 spin_raise() {
  Mat2 m;
  m << 0, 0, 1, 0;
  return m;
}
inline Mat2 spin_lower() { return spin_raise().adjoint(); }
// occupation number, n = (sigma_z + 1)/2
inline Mat2 number_op() {
  Mat2 m;
  m << 0, 0, 0, 1;
  return m;
}

// two-site matrix with a0 on the lower bit (first support site)
inline Mat two_site(const Mat2& a0, const Mat2& a1) {
  Mat m = Mat::Zero(4, 4);
  for (int r1 = 0; r1 < 2; ++r1)
    for (int r0 = 0; r0 < 2; ++r0)
      for (int c1 = 0; c1 < 2; ++c1)
        for (int c0 = 0; c0 < 2; ++c0)
          m(r0 + 2 * r1, c0 + 2 * c1) = a0(r0, c0) * a1(r1, c1);
  return m;
}

// An angle of the global U(1) rotation, reduced to [0, 2*pi).
struct GaugeAngle {
  double theta = 0.0;
  GaugeAngle() = default;
  explicit GaugeAngle(double t) {
    theta = std::fmod(t, 2.0 * kPi);
    if (theta < 0) theta += 2.0 * kPi;
  }
};

enum class Boundary { open, periodic };
enum class ModelKind { spin, fermion };

class LocalOperator {
 public:
  LocalOperator(std::vector<int> support, Mat matrix)
      : support_(std::move(support)), matrix_(std::move(matrix)) {
    for (std::size_t i = 0; i + 1 < support_.size(); ++i) {
      if (support_[i] >= support_[i + 1])
        throw ValidationError("LocalOperator: support must be sorted and distinct");
    }
    if (!support_.empty() && support_.front() < 0)
      throw ValidationError("LocalOperator: negative site index");
    const long d = 1L << support_.size();
    if (matrix_.rows() != d || matrix_.cols() != d)
      throw ValidationError("LocalOperator: matrix dimension must be 2^|support|");
  }

  static LocalOperator identity(std::vector<int> support) {
    const long d = 1L << support.size();
    return LocalOperator(std::move(support), Mat::Identity(d, d));
  }

  static LocalOperator site(int s, const Mat2& m) { return LocalOperator({s}, m); }

  const std::vector<int>& support() const { return support_; }
  const Mat& matrix() const { return matrix_; }
  int num_sites() const { return static_cast<int>(support_.size()); }
  long dim() const { return matrix_.rows(); }
  int max_site() const { return support_.empty() ? -1 : support_.back(); }

  bool is_hermitian(double tol = kHermiticityTol) const {
    return (matrix_ - matrix_.adjoint()).cwiseAbs().maxCoeff() <= tol;
  }

  // largest singular value (dense; local operators are small by construction)
  double norm() const {
    if (matrix_.rows() == 0) return 0.0;
    Eigen::JacobiSVD<Mat> svd(matrix_);
    return svd.singularValues()(0);
  }

  LocalOperator adjoint() const { return LocalOperator(support_, matrix_.adjoint()); }

  // Same operator on a larger support (extra sites act as identity).
  LocalOperator extended_to(const std::vector<int>& target) const {
    if (target == support_) return *this;
    std::vector<int> pos(support_.size());  // position of each old site in target
    std::vector<int> extra;
    {
      std::size_t k = 0;
      for (std::size_t t = 0; t < target.size(); ++t) {
        if (t + 1 < target.size() && target[t] >= target[t + 1])
          throw ValidationError("extended_to: target support must be sorted and distinct");
        if (k < support_.size() && target[t] == support_[k]) {
          pos[k++] = static_cast<int>(t);
        } else {
          extra.push_back(static_cast<int>(t));
        }
      }
      if (k != support_.size())
        throw ValidationError("extended_to: target must contain the current support");
    }
    const long dOld = dim();
    const long dNew = 1L << target.size();
    Mat out = Mat::Zero(dNew, dNew);
    const long dEnv = 1L << extra.size();
    for (long a = 0; a < dOld; ++a) {
      for (long b = 0; b < dOld; ++b) {
        const cplx v = matrix_(a, b);
        if (v == cplx(0, 0)) continue;
        long ra = 0, cb = 0;
        for (std::size_t i = 0; i < pos.size(); ++i) {
          ra |= ((a >> i) & 1L) << pos[i];
          cb |= ((b >> i) & 1L) << pos[i];
        }
        for (long e = 0; e < dEnv; ++e) {
          long env = 0;
          for (std::size_t i = 0; i < extra.size(); ++i) env |= ((e >> i) & 1L) << extra[i];
          out(ra | env, cb | env) = v;
        }
      }
    }
    return LocalOperator(target, std::move(out));
  }

  friend LocalOperator operator*(const cplx& s, const LocalOperator& op) {
    return LocalOperator(op.support_, s * op.matrix_);
  }
  friend LocalOperator operator*(const LocalOperator& a, const LocalOperator& b) {
    std::vector<int> sup;
    std::set_union(a.support_.begin(), a.support_.end(), b.support_.begin(), b.support_.end(),
                   std::back_inserter(sup));
    LocalOperator ea = a.extended_to(sup), eb = b.extended_to(sup);
    return LocalOperator(sup, ea.matrix_ * eb.matrix_);
  }
  friend LocalOperator operator+(const LocalOperator& a, const LocalOperator& b) {
    std::vector<int> sup;
    std::set_union(a.support_.begin(), a.support_.end(), b.support_.begin(), b.support_.end(),
                   std::back_inserter(sup));
    LocalOperator ea = a.extended_to(sup), eb = b.extended_to(sup);
    return LocalOperator(sup, ea.matrix_ + eb.matrix_);
  }
  friend LocalOperator operator-(const LocalOperator& a, const LocalOperator& b) {
    return a + (cplx(-1, 0) * b);
  }

  double distance_to(const LocalOperator& other) const {
    std::vector<int> sup;
    std::set_union(support_.begin(), support_.end(), other.support_.begin(), other.support_.end(),
                   std::back_inserter(sup));
    return (extended_to(sup).matrix() - other.extended_to(sup).matrix()).cwiseAbs().maxCoeff();
  }

 private:
  std::vector<int> support_;
  Mat matrix_;
};

// tau_shift: move the support; open chains reject shifts that leave [0, L-1],
// periodic chains wrap (support is re-sorted, matrix indices permuted along).
inline LocalOperator translate(const LocalOperator& op, int shift, int L, Boundary boundary) {
  std::vector<int> mapped(op.support().size());
  for (std::size_t i = 0; i < mapped.size(); ++i) {
    if (boundary == Boundary::open) {
      const int s = op.support()[i] + shift;
      if (s < 0 || s >= L) throw ValidationError("translate: shifted support leaves the open chain");
      mapped[i] = s;
    } else {
      mapped[i] = ((op.support()[i] + shift) % L + L) % L;
    }
  }
  // sort the mapped sites, permuting the qubit slots of the matrix identically
  std::vector<int> order(mapped.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return mapped[a] < mapped[b]; });
  std::vector<int> newSupport(mapped.size());
  std::vector<int> slotOf(mapped.size());  // old slot i -> new slot
  for (std::size_t p = 0; p < order.size(); ++p) {
    newSupport[p] = mapped[order[p]];
    slotOf[order[p]] = static_cast<int>(p);
  }
  for (std::size_t i = 0; i + 1 < newSupport.size(); ++i)
    if (newSupport[i] == newSupport[i + 1])
      throw ValidationError("translate: support wraps onto itself");
  const long d = op.dim();
  auto permute = [&](long x) {
    long y = 0;
    for (std::size_t i = 0; i < slotOf.size(); ++i) y |= ((x >> i) & 1L) << slotOf[i];
    return y;
  };
  Mat out = Mat::Zero(d, d);
  for (long r = 0; r < d; ++r)
    for (long c = 0; c < d; ++c) out(permute(r), permute(c)) = op.matrix()(r, c);
  return LocalOperator(std::move(newSupport), std::move(out));
}

namespace detail {
// conjugate by a diagonal-sign operator: entries pick up s_r * s_c
inline LocalOperator sign_conjugate(const LocalOperator& op, const std::vector<bool>& flip) {
  const long d = op.dim();
  auto sgn = [&](long x) {
    int p = 0;
    for (std::size_t i = 0; i < flip.size(); ++i)
      if (flip[i] && ((x >> i) & 1L)) p ^= 1;
    return p ? -1.0 : 1.0;
  };
  Mat out = op.matrix();
  for (long r = 0; r < d; ++r)
    for (long c = 0; c < d; ++c) out(r, c) *= sgn(r) * sgn(c);
  return LocalOperator(op.support(), std::move(out));
}
}  // namespace detail

// Theta: conjugation by the sigma_z string over the support. On Jordan-Wigner
// images this flips the sign of every fermion generator.
inline LocalOperator parity_transform(const LocalOperator& op) {
  return detail::sign_conjugate(op, std::vector<bool>(op.support().size(), true));
}

// Theta_-: generators on sites <= cut flip sign, others are untouched.
inline LocalOperator partial_parity(const LocalOperator& op, int cut) {
  std::vector<bool> flip(op.support().size());
  for (std::size_t i = 0; i < flip.size(); ++i) flip[i] = op.support()[i] <= cut;
  return detail::sign_conjugate(op, flip);
}

// gamma_theta: conjugation by exp(i theta S_z) restricted to the support.
// Through Jordan-Wigner this is exactly c_j -> e^{-i theta} c_j, so the same
// transformation serves the spin and the fermion picture.
inline LocalOperator gauge_rotate(const LocalOperator& op, GaugeAngle angle,
                                  ModelKind /*kind*/ = ModelKind::spin) {
  const long d = op.dim();
  Mat out = op.matrix();
  const double th = angle.theta;
  for (long r = 0; r < d; ++r) {
    for (long c = 0; c < d; ++c) {
      const int dn = std::popcount(static_cast<unsigned long>(r)) -
                     std::popcount(static_cast<unsigned long>(c));
      if (dn != 0) out(r, c) *= std::exp(cplx(0, th * dn));
    }
  }
  return LocalOperator(op.support(), std::move(out));
}

}  // namespace chainlab
