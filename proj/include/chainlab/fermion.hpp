#pragma once

#include <map>
#include <vector>

#include "chainlab/local_operator.hpp"

// Fermionic monomials and the Jordan-Wigner map onto spin operators.
//
// c_j      = (prod_{k<j} sigma_z^(k)) sigma^-_j
// c*_j     = (prod_{k<j} sigma_z^(k)) sigma^+_j
// sigma_z^(j) = 2 c*_j c_j - 1
//
// Monomial products are kept symbolic as site-factored Pauli products, so a
// boundary-wrapped hopping term with its full string stays O(L) to build.

namespace chainlab {

struct FermionMode {
  int site = 0;
  bool dagger = false;  // false: annihilation, true: creation
};

// coeff * prod_s factors[s] with one 2x2 factor per listed site
struct PauliProduct {
  cplx coeff{1.0, 0.0};
  std::map<int, Mat2> factors;

  PauliProduct& multiply_site(int site, const Mat2& m) {
    auto it = factors.find(site);
    if (it == factors.end())
      factors[site] = m;
    else
      it->second = it->second * m;  // left-to-right product order
    return *this;
  }

  friend PauliProduct operator*(const PauliProduct& a, const PauliProduct& b) {
    PauliProduct out = a;
    out.coeff *= b.coeff;
    for (const auto& [s, m] : b.factors) out.multiply_site(s, m);
    return out;
  }

  PauliProduct adjoint() const {
    PauliProduct out;
    out.coeff = std::conj(coeff);
    for (const auto& [s, m] : factors) out.factors[s] = m.adjoint();
    return out;
  }

  // sites whose factor is not (numerically) the identity
  std::vector<int> support() const {
    std::vector<int> sup;
    for (const auto& [s, m] : factors)
      if ((m - Mat2::Identity()).cwiseAbs().maxCoeff() > 1e-15) sup.push_back(s);
    return sup;
  }

  LocalOperator to_local() const {
    std::vector<int> sup = support();
    Mat out = Mat::Constant(1, 1, coeff);
    // accumulate lowest site first; each further factor lands on the next
    // higher index bit, so bit i of the result is sup[i]
    for (int s : sup) {
      const Mat2& f = factors.at(s);
      Mat next = Mat::Zero(out.rows() * 2, out.cols() * 2);
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
          if (f(a, b) != cplx(0, 0))
            next.block(a * out.rows(), b * out.cols(), out.rows(), out.cols()) = f(a, b) * out;
      out.swap(next);
    }
    return LocalOperator(std::move(sup), std::move(out));
  }
};

// Jordan-Wigner image of a single mode; supported on [0, site].
inline PauliProduct jw_product(const FermionMode& mode) {
  PauliProduct p;
  for (int k = 0; k < mode.site; ++k) p.factors[k] = pauli_z();
  p.factors[mode.site] = mode.dagger ? spin_raise() : spin_lower();
  return p;
}

inline LocalOperator jordan_wigner(const FermionMode& mode, int L) {
  if (mode.site < 0 || mode.site >= L) throw ValidationError("jordan_wigner: site out of range");
  PauliProduct p = jw_product(mode);
  // keep the full string in the support even if a factor happens to be trivial
  std::vector<int> sup;
  for (int k = 0; k <= mode.site; ++k) sup.push_back(k);
  return p.to_local().extended_to(sup);
}

struct FermionTerm {
  cplx coeff{1.0, 0.0};
  std::vector<FermionMode> modes;  // product, left to right
};

class FermionOperator {
 public:
  FermionOperator() = default;
  explicit FermionOperator(FermionTerm t) : terms_{std::move(t)} {}

  static FermionOperator annihilate(int site) {
    return FermionOperator(FermionTerm{cplx(1, 0), {FermionMode{site, false}}});
  }
  static FermionOperator create(int site) {
    return FermionOperator(FermionTerm{cplx(1, 0), {FermionMode{site, true}}});
  }
  static FermionOperator number(int site) {
    return FermionOperator(FermionTerm{cplx(1, 0), {FermionMode{site, true}, FermionMode{site, false}}});
  }

  const std::vector<FermionTerm>& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }

  friend FermionOperator operator+(const FermionOperator& a, const FermionOperator& b) {
    FermionOperator out = a;
    out.terms_.insert(out.terms_.end(), b.terms_.begin(), b.terms_.end());
    return out;
  }
  friend FermionOperator operator*(const cplx& s, const FermionOperator& a) {
    FermionOperator out = a;
    for (auto& t : out.terms_) t.coeff *= s;
    return out;
  }
  friend FermionOperator operator*(const FermionOperator& a, const FermionOperator& b) {
    FermionOperator out;
    for (const auto& ta : a.terms_)
      for (const auto& tb : b.terms_) {
        FermionTerm t;
        t.coeff = ta.coeff * tb.coeff;
        t.modes = ta.modes;
        t.modes.insert(t.modes.end(), tb.modes.begin(), tb.modes.end());
        out.terms_.push_back(std::move(t));
      }
    return out;
  }

  FermionOperator adjoint() const {
    FermionOperator out;
    for (const auto& t : terms_) {
      FermionTerm a;
      a.coeff = std::conj(t.coeff);
      a.modes.assign(t.modes.rbegin(), t.modes.rend());
      for (auto& m : a.modes) m.dagger = !m.dagger;
      out.terms_.push_back(std::move(a));
    }
    return out;
  }

  // Theta: c_j -> -c_j on every generator
  FermionOperator parity_transformed() const {
    FermionOperator out = *this;
    for (auto& t : out.terms_)
      if (t.modes.size() % 2 == 1) t.coeff = -t.coeff;
    return out;
  }

  // Theta_-: generators on sites <= cut flip sign
  FermionOperator partial_parity_transformed(int cut) const {
    FermionOperator out = *this;
    for (auto& t : out.terms_) {
      int flips = 0;
      for (const auto& m : t.modes)
        if (m.site <= cut) ++flips;
      if (flips % 2 == 1) t.coeff = -t.coeff;
    }
    return out;
  }

  // gamma_theta: c_j -> e^{-i theta} c_j, c*_j -> e^{+i theta} c*_j
  FermionOperator gauge_rotated(GaugeAngle angle) const {
    FermionOperator out = *this;
    for (auto& t : out.terms_) {
      int q = 0;
      for (const auto& m : t.modes) q += m.dagger ? 1 : -1;
      if (q != 0) t.coeff *= std::exp(cplx(0, angle.theta * q));
    }
    return out;
  }

  FermionOperator translated(int shift, int L, Boundary boundary) const {
    FermionOperator out = *this;
    for (auto& t : out.terms_)
      for (auto& m : t.modes) {
        if (boundary == Boundary::open) {
          m.site += shift;
          if (m.site < 0 || m.site >= L)
            throw ValidationError("FermionOperator::translated: site leaves the open chain");
        } else {
          m.site = ((m.site + shift) % L + L) % L;
        }
      }
    return out;
  }

  // every monomial has an even number of generators <=> Theta-invariant
  bool is_even() const {
    for (const auto& t : terms_)
      if (t.modes.size() % 2 == 1) return false;
    return true;
  }

  int max_site() const {
    int ms = -1;
    for (const auto& t : terms_)
      for (const auto& m : t.modes) ms = std::max(ms, m.site);
    return ms;
  }
  int min_site() const {
    int ms = 1 << 28;
    for (const auto& t : terms_)
      for (const auto& m : t.modes) ms = std::min(ms, m.site);
    return terms_.empty() ? 0 : ms;
  }

  std::vector<PauliProduct> jw_products() const {
    std::vector<PauliProduct> out;
    out.reserve(terms_.size());
    for (const auto& t : terms_) {
      PauliProduct p;
      p.coeff = t.coeff;
      for (const auto& m : t.modes) p = p * jw_product(m);
      out.push_back(std::move(p));
    }
    return out;
  }

  // dense spin image (sum of the monomial images); for small supports
  LocalOperator jw_local() const {
    auto prods = jw_products();
    if (prods.empty()) return LocalOperator({}, Mat::Zero(1, 1));
    LocalOperator acc = prods[0].to_local();
    for (std::size_t i = 1; i < prods.size(); ++i) acc = acc + prods[i].to_local();
    return acc;
  }

 private:
  std::vector<FermionTerm> terms_;
};

}  // namespace chainlab
