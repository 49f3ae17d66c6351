#pragma once

#include <atomic>
#include <functional>
#include <map>
#include <thread>

#include "chainlab/spectral.hpp"

// Heisenberg-picture dynamics: Krylov time evolution and light-cone
// (commutator-growth) measurements, including the twisted (anticommutator)
// variant for odd fermionic observables.

namespace chainlab {

struct EvolveResult {
  Vec state;
  double error_bound = 0.0;  // accumulated per-step estimates
  int matvecs = 0;
};

namespace detail {

struct SpectralBounds {
  double lo = 0.0, hi = 0.0;
  double center() const { return 0.5 * (lo + hi); }
  double halfwidth() const { return 0.5 * (hi - lo); }
};

// rough spectral interval from a short un-reorthogonalized Lanczos run
inline SpectralBounds estimate_bounds(const GlobalOperator& H) {
  const long dim = H.dim;
  if (dim <= 64) {
    Eigen::SelfAdjointEigenSolver<Mat> es(H.dense());
    return {es.eigenvalues().minCoeff(), es.eigenvalues().maxCoeff()};
  }
  const int m = 24;
  Vec v = deterministic_start(dim, 0x5eedb0a7ull), vPrev = Vec::Zero(dim);
  std::vector<double> alpha, beta;
  double b = 0.0;
  for (int j = 0; j < m; ++j) {
    Vec w = H.mat * v;
    const double a = std::real(v.dot(w));
    alpha.push_back(a);
    w -= a * v;
    if (j > 0) w -= b * vPrev;
    b = w.norm();
    if (b < 1e-300) break;
    beta.push_back(b);
    vPrev = v;
    v = w / b;
  }
  const int n = static_cast<int>(alpha.size());
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) T(i, i) = alpha[i];
  for (int i = 0; i + 1 < n; ++i) T(i, i + 1) = T(i + 1, i) = beta[i];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
  const double margin = beta.empty() ? 1.0 : beta.back();
  return {es.eigenvalues().minCoeff() - margin, es.eigenvalues().maxCoeff() + margin};
}

inline Vec expm_tridiag_e1(const std::vector<double>& alpha, const std::vector<double>& beta,
                           cplx z) {
  const int m = static_cast<int>(alpha.size());
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i) T(i, i) = alpha[i];
  for (int i = 0; i + 1 < m; ++i) T(i, i + 1) = T(i + 1, i) = beta[i];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
  Vec w = Vec::Zero(m);
  for (int i = 0; i < m; ++i) {
    const cplx phase = std::exp(z * es.eigenvalues()(i));
    const double overlap = es.eigenvectors()(0, i);
    for (int q = 0; q < m; ++q) w(q) += es.eigenvectors()(q, i) * phase * overlap;
  }
  return w;
}

}  // namespace detail

// e^{-i t H} psi by adaptive Lanczos stepping; each step's leakage estimate is
// kept below tol and the sum is reported.
inline EvolveResult evolve_state(const GlobalOperator& H, const Vec& psi, double t, double tol,
                                 const detail::SpectralBounds* boundsHint = nullptr) {
  if (tol <= 0) throw ValidationError("evolve_state: tol must be positive");
  if (!H.hermitian) throw ValidationError("evolve_state: Hermitian generator required");
  if (psi.size() != H.dim) throw ValidationError("evolve_state: dimension mismatch");
  EvolveResult out;
  out.state = psi;
  if (t == 0.0) return out;
  detail::SpectralBounds bounds = boundsHint ? *boundsHint : detail::estimate_bounds(H);
  const double rho = std::max(bounds.halfwidth(), 1e-12);
  const double c = bounds.center();
  const int mCap = static_cast<int>(std::min<long>(H.dim, 42));
  double remaining = t;
  double step = (t > 0 ? 1.0 : -1.0) * std::min(std::abs(t), 18.0 / rho);
  std::vector<Vec> basis;
  std::vector<double> alpha, beta;
  while (remaining != 0.0) {
    if (std::abs(step) > std::abs(remaining)) step = remaining;
    const double nrm = out.state.norm();
    if (nrm < 1e-300) return out;
    basis.clear();
    alpha.clear();
    beta.clear();
    basis.push_back(out.state / nrm);
    bool stepped = false;
    for (int j = 0; j < mCap && !stepped; ++j) {
      Vec w = H.mat * basis[j];
      ++out.matvecs;
      const double a = std::real(basis[j].dot(w)) - c;  // work with H - c
      w -= (a + c) * basis[j];
      alpha.push_back(a);
      if (j > 0) w -= beta[j - 1] * basis[j - 1];
      const double b = w.norm();
      const int m = j + 1;
      const bool happy = b < 1e-12;
      if (m >= 3 || happy || m == mCap) {
        Vec small = detail::expm_tridiag_e1(alpha, beta, cplx(0, -step));
        const double err = happy ? 0.0 : std::abs(step) * b * std::abs(small(m - 1));
        if (err <= tol || happy) {
          Vec next = Vec::Zero(H.dim);
          for (int q = 0; q < m; ++q) next += small(q) * basis[q];
          const cplx phase = std::exp(cplx(0, -step * c));
          out.state = (nrm * phase) * next;
          out.error_bound += err;
          remaining -= step;
          stepped = true;
          break;
        }
        if (m == mCap || happy) break;
      }
      if (m == mCap) break;
      beta.push_back(b);
      basis.push_back(w / b);
    }
    if (!stepped) {
      step *= 0.5;
      if (std::abs(step) < 1e-13 * std::max(1.0, std::abs(t)))
        throw ConvergenceError("evolve_state: step-size underflow");
    }
  }
  return out;
}

// Dense Heisenberg operator e^{i t H} Q e^{-i t H}; only below the dense cap.
inline GlobalOperator heisenberg_operator(const GlobalOperator& H, const GlobalOperator& Q,
                                          double t) {
  detail::check_same_space(H, Q, "heisenberg_operator");
  if (H.dim > kDenseDimCap)
    throw ResourceError("heisenberg_operator: dimension exceeds the dense cap");
  if (!H.hermitian) throw ValidationError("heisenberg_operator: Hermitian generator required");
  Eigen::SelfAdjointEigenSolver<Mat> es(H.dense());
  const long d = H.dim;
  Vec phases(d);
  for (long i = 0; i < d; ++i) phases(i) = std::exp(cplx(0, t * es.eigenvalues()(i)));
  Mat U = es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
  Mat Qt = U * Q.dense() * U.adjoint();
  SpMat m = Qt.sparseView(1.0, 1e-300);
  GlobalOperator out(std::move(m), false, H.basis_tag);
  out.hermitian = Q.hermitian;
  return out;
}

struct LightConeSample {
  int distance = 0;
  double time = 0.0;
  double norm_value = 0.0;
  double method_error = 0.0;
};

struct LightConeFit {
  double a = 0.0;            // spatial decay rate outside the cone
  double v = 0.0;            // front velocity
  double C = 0.0;            // prefactor from the decay fit
  double fit_quality = 0.0;  // R^2 of the front fit
};

// || [Q(t), R] ||  (or || {Q(t), R} || for the twisted variant), estimated by
// Lanczos on the Hermitian image of the (anti)commutator; Q(t) is never
// materialized, each application costs four Krylov evolutions.
inline LightConeSample lr_norm(const GlobalOperator& H, const LocalOperator& Q,
                               const LocalOperator& R, int distance, double t, bool twisted,
                               double tol, const detail::SpectralBounds* boundsHint = nullptr) {
  const int L = static_cast<int>(std::countr_zero(static_cast<unsigned long>(H.dim)));
  if ((1L << L) != H.dim) throw ValidationError("lr_norm: full-chain operator required");
  if (twisted) {
    // only odd fermionic observables admit the twisted bound
    auto isOdd = [](const LocalOperator& op) {
      return parity_transform(op).distance_to(cplx(-1, 0) * op) < 1e-10;
    };
    if (!isOdd(Q) || !isOdd(R))
      throw ValidationError("lr_norm: twisted norm requested for an even operator");
  }
  const bool herm = Q.is_hermitian() && R.is_hermitian();
  detail::SpectralBounds bounds = boundsHint ? *boundsHint : detail::estimate_bounds(H);
  const double evTol = std::min(tol * 1e-2, 1e-9);
  double evErr = 0.0;
  const double qNorm = Q.norm(), rNorm = R.norm();

  auto applyQt = [&](const Vec& x) {
    EvolveResult fwd = evolve_state(H, x, t, evTol, &bounds);
    Vec y = apply_local(Q, fwd.state, L);
    EvolveResult back = evolve_state(H, y, -t, evTol, &bounds);
    evErr += qNorm * (fwd.error_bound + back.error_bound);
    return back.state;
  };
  auto applyQtAdj = [&](const Vec& x) {
    EvolveResult fwd = evolve_state(H, x, t, evTol, &bounds);
    Vec y = apply_local(Q.adjoint(), fwd.state, L);
    EvolveResult back = evolve_state(H, y, -t, evTol, &bounds);
    evErr += qNorm * (fwd.error_bound + back.error_bound);
    return back.state;
  };
  const double sgn = twisted ? 1.0 : -1.0;
  // C x = Q(t) R x + sgn R Q(t) x
  auto applyC = [&](const Vec& x) {
    Vec a = applyQt(apply_local(R, x, L));
    Vec b = apply_local(R, applyQt(x), L);
    return Vec(a + sgn * b);
  };
  auto applyCAdj = [&](const Vec& x) {
    Vec a = apply_local(R.adjoint(), applyQtAdj(x), L);
    Vec b = applyQtAdj(apply_local(R.adjoint(), x, L));
    return Vec(a + sgn * b);
  };

  // Lanczos with absolute stopping on the extreme Ritz value
  auto extremeAbs = [&](const std::function<Vec(const Vec&)>& apply, double tolAbs) {
    const long dim = H.dim;
    const int mCap = static_cast<int>(std::min<long>(dim, 90));
    std::vector<Vec> basis;
    std::vector<double> al, be;
    basis.push_back(detail::deterministic_start(dim, 0x11c0fa11ull));
    double extreme = 0.0;
    for (int j = 0; j < mCap; ++j) {
      Vec w = apply(basis[j]);
      const double a = std::real(basis[j].dot(w));
      al.push_back(a);
      w -= a * basis[j];
      if (j > 0) w -= be[j - 1] * basis[j - 1];
      for (int pass = 0; pass < 2; ++pass)
        for (const auto& q : basis) w -= q.dot(w) * q;
      const double b = w.norm();
      const int m = j + 1;
      Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
      for (int i = 0; i < m; ++i) T(i, i) = al[i];
      for (int i = 0; i + 1 < m; ++i) T(i, i + 1) = T(i + 1, i) = be[i];
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
      if (resid <= tolAbs || b < 1e-300) return extreme;
      be.push_back(b);
      basis.push_back(w / b);
    }
    throw ConvergenceError("lr_norm: norm iteration did not converge");
  };

  LightConeSample sample;
  sample.distance = distance;
  sample.time = t;
  if (herm) {
    // commutator of Hermitian operators is anti-Hermitian: i C is Hermitian;
    // the anticommutator is Hermitian already
    const cplx mul = twisted ? cplx(1, 0) : cplx(0, 1);
    auto applyHerm = [&](const Vec& x) { return Vec(mul * applyC(x)); };
    sample.norm_value = extremeAbs(applyHerm, tol);
  } else {
    auto applyCC = [&](const Vec& x) { return applyCAdj(applyC(x)); };
    sample.norm_value = std::sqrt(std::max(0.0, extremeAbs(applyCC, tol * tol)));
  }
  // evolution leakage enters the commutator twice, bounded by ||R||
  sample.method_error = 2.0 * rNorm * evErr + tol;
  return sample;
}

// front velocity from threshold arrival times, decay rate from the last time
// slice with enough out-of-cone samples
inline LightConeFit light_cone_fit(const std::vector<LightConeSample>& samples,
                                   double threshold) {
  if (threshold <= 0) throw ValidationError("light_cone_fit: threshold must be positive");
  std::map<int, std::vector<std::pair<double, double>>> byDistance;  // j -> (t, norm)
  for (const auto& s : samples) byDistance[s.distance].push_back({s.time, s.norm_value});
  std::vector<std::pair<double, double>> arrivals;  // (t_arrival, j)
  for (auto& [j, series] : byDistance) {
    std::sort(series.begin(), series.end());
    for (std::size_t i = 0; i < series.size(); ++i) {
      if (series[i].second >= threshold) {
        double tA = series[i].first;
        if (i > 0) {
          // linear interpolation of the crossing
          const auto& [t0, n0] = series[i - 1];
          const auto& [t1, n1] = series[i];
          if (n1 > n0) tA = t0 + (threshold - n0) / (n1 - n0) * (t1 - t0);
        }
        arrivals.push_back({tA, static_cast<double>(j)});
        break;
      }
    }
  }
  if (arrivals.size() < 2) throw ValidationError("light_cone_fit: no front (all samples below threshold)");
  // j = v t + b
  double st = 0, sj = 0, stt = 0, stj = 0;
  for (const auto& [tA, j] : arrivals) {
    st += tA;
    sj += j;
    stt += tA * tA;
    stj += tA * j;
  }
  const double n = static_cast<double>(arrivals.size());
  const double v = (n * stj - st * sj) / std::max(n * stt - st * st, 1e-300);
  double ssr = 0, sst = 0;
  for (const auto& [tA, j] : arrivals) {
    const double jhat = v * (tA - st / n) + sj / n;
    ssr += (j - jhat) * (j - jhat);
    sst += (j - sj / n) * (j - sj / n);
  }
  LightConeFit fit;
  fit.v = std::max(v, 0.0);
  fit.fit_quality = sst > 0 ? 1.0 - ssr / sst : 1.0;
  // spatial decay: fixed t, strictly outside the fitted cone
  double bestT = -1;
  std::map<double, std::vector<std::pair<double, double>>> byTime;  // t -> (j, norm)
  for (const auto& s : samples) byTime[s.time].push_back({(double)s.distance, s.norm_value});
  for (auto& [t, pts] : byTime) {
    int nOut = 0;
    for (auto& [j, val] : pts)
      if (j > fit.v * t && val > 1e-12) ++nOut;
    if (nOut >= 3) bestT = t;
  }
  if (bestT < 0) throw ValidationError("light_cone_fit: insufficient out-of-cone samples");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (auto& [j, val] : byTime[bestT]) {
    if (!(j > fit.v * bestT && val > 1e-12)) continue;
    sx += j;
    sy += std::log(val);
    sxx += j * j;
    sxy += j * std::log(val);
    ++m;
  }
  const double slope = (m * sxy - sx * sy) / std::max(m * sxx - sx * sx, 1e-300);
  fit.a = -slope;
  fit.C = std::exp(sy / m + fit.a * sx / m);
  return fit;
}

// Evaluate a (j, t) grid of lr_norm samples; cells are independent and run on
// `workers` threads (grid order restored afterwards, results deterministic).
inline std::vector<LightConeSample> lr_surface(
    const GlobalOperator& H, const std::function<LocalOperator(int)>& qAt,
    const std::function<LocalOperator(int)>& rAt, int base,
    const std::vector<int>& distances, const std::vector<double>& times, bool twisted, double tol,
    int workers = 0) {
  detail::SpectralBounds bounds = detail::estimate_bounds(H);
  struct Cell {
    int j;
    double t;
  };
  std::vector<Cell> cells;
  for (int j : distances)
    for (double t : times) cells.push_back({j, t});
  std::vector<LightConeSample> out(cells.size());
  if (workers <= 0) workers = 1;
  std::atomic<std::size_t> next{0};
  auto run = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      out[i] = lr_norm(H, qAt(base), rAt(base + cells[i].j), cells[i].j, cells[i].t, twisted, tol,
                       &bounds);
    }
  };
  if (workers == 1) {
    run();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(run);
    for (auto& th : pool) th.join();
  }
  return out;
}

}  // namespace chainlab
