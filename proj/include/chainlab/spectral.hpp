#pragma once

#include <optional>

#include "chainlab/models.hpp"

// Lowest eigenpairs, spectral gaps, degeneracy detection, finite-size trends.

namespace chainlab {

inline constexpr std::uint64_t kLanczosSeed = 0x10b075ca1eull;  // fixed start vector
inline constexpr double kClusterTolDefault = 1e-8;

struct EigenPair {
  double energy = 0.0;
  Vec vector;  // full-chain basis
  std::optional<SectorLabel> sector;
  double residual = 0.0;
};

enum class SolveMethod { dense, lanczos };

struct GroundStateBundle {
  std::vector<EigenPair> pairs;  // ascending energy
  int degeneracy = 1;
  std::optional<double> gap;  // energies[d] - energies[0], unset if the cluster fills k
  SolveMethod method = SolveMethod::dense;

  std::vector<double> energies() const {
    std::vector<double> e;
    e.reserve(pairs.size());
    for (const auto& p : pairs) e.push_back(p.energy);
    return e;
  }
  const Vec& ground() const { return pairs.front().vector; }
};

// maximal d with E[i] - E[0] < tol for all i < d
inline int detect_degeneracy(const GroundStateBundle& bundle, double clusterTol) {
  if (bundle.pairs.size() < 2)
    throw ValidationError("detect_degeneracy: need at least two energies");
  int d = 1;
  while (d < static_cast<int>(bundle.pairs.size()) &&
         bundle.pairs[d].energy - bundle.pairs[0].energy < clusterTol)
    ++d;
  return d;
}

namespace detail {

struct SectorEig {
  std::vector<double> values;
  std::vector<Vec> vectors;
};

inline SectorEig dense_lowest(const GlobalOperator& op, int k) {
  Eigen::SelfAdjointEigenSolver<Mat> es(op.dense());
  SectorEig out;
  const int n = static_cast<int>(std::min<long>(k, op.dim));
  for (int i = 0; i < n; ++i) {
    out.values.push_back(es.eigenvalues()(i));
    out.vectors.push_back(es.eigenvectors().col(i));
  }
  return out;
}

// Lanczos with full reorthogonalization; converges the k lowest Ritz pairs to
// residual tol * max(1, |E|).
inline SectorEig lanczos_lowest(const GlobalOperator& op, int k, double tol, int maxIter = 400,
                                std::uint64_t seed = kLanczosSeed) {
  const long dim = op.dim;
  const int mCap = static_cast<int>(std::min<long>(dim, maxIter));
  std::vector<Vec> basis;
  std::vector<double> alpha, beta;
  basis.push_back(deterministic_start(dim, seed));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  for (int j = 0; j < mCap; ++j) {
    Vec w = op.mat * basis[j];
    const double a = std::real(basis[j].dot(w));
    alpha.push_back(a);
    w -= a * basis[j];
    if (j > 0) w -= beta[j - 1] * basis[j - 1];
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& q : basis) w -= q.dot(w) * q;
    const double b = w.norm();
    const int m = j + 1;
    const bool breakdown = b < 1e-300;
    const bool lastChance = breakdown || m == mCap || m == dim;
    if (m >= k || lastChance) {
      Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
      for (int i = 0; i < m; ++i) T(i, i) = alpha[i];
      for (int i = 0; i + 1 < m; ++i) T(i, i + 1) = T(i + 1, i) = beta[i];
      es.compute(T);
      bool done = true;
      const int want = static_cast<int>(std::min<long>(k, dim));
      for (int i = 0; i < want && done; ++i) {
        const double resid = b * std::abs(es.eigenvectors()(m - 1, i));
        done = resid <= tol * std::max(1.0, std::abs(es.eigenvalues()(i)));
      }
      if (done || (breakdown && m >= want) || m == dim) {
        SectorEig out;
        for (int i = 0; i < want; ++i) {
          out.values.push_back(es.eigenvalues()(i));
          Vec v = Vec::Zero(dim);
          for (int q = 0; q < m; ++q) v += es.eigenvectors()(q, i) * basis[q];
          v.normalize();
          out.vectors.push_back(std::move(v));
        }
        return out;
      }
      if (breakdown)
        throw ConvergenceError("lanczos_lowest: breakdown before convergence");
    }
    if (m == mCap) break;
    beta.push_back(b);
    basis.push_back(w / b);
  }
  throw ConvergenceError("lanczos_lowest: no convergence after iteration cap");
}

}  // namespace detail

// Lowest k eigenpairs of one Hermitian operator (no sector handling).
inline GroundStateBundle lowest_eigenpairs(const GlobalOperator& H, int k, double tol = 1e-10,
                                           double clusterTol = kClusterTolDefault) {
  if (k < 2) throw ValidationError("lowest_eigenpairs: k must be >= 2");
  if (!H.hermitian || !H.check_hermitian(1e-10))
    throw ValidationError("lowest_eigenpairs: operator must be Hermitian");
  GroundStateBundle bundle;
  detail::SectorEig eig;
  if (H.dim <= kDenseDimCap) {
    eig = detail::dense_lowest(H, k);
    bundle.method = SolveMethod::dense;
  } else {
    eig = detail::lanczos_lowest(H, k, tol);
    bundle.method = SolveMethod::lanczos;
  }
  for (std::size_t i = 0; i < eig.values.size(); ++i) {
    EigenPair p;
    p.energy = eig.values[i];
    p.vector = eig.vectors[i];
    p.residual = (H.mat * p.vector - p.energy * p.vector).norm();
    bundle.pairs.push_back(std::move(p));
  }
  if (bundle.pairs.size() >= 2) {
    bundle.degeneracy = detect_degeneracy(bundle, clusterTol);
    if (bundle.degeneracy < static_cast<int>(bundle.pairs.size()))
      bundle.gap = bundle.pairs[bundle.degeneracy].energy - bundle.pairs[0].energy;
  }
  return bundle;
}

// Build H, split into charge sectors when the spec declares U(1), solve each
// block, and merge the k lowest pairs globally (vectors come back embedded in
// the full basis and tagged with their sector).
inline GroundStateBundle ground_bundle(const InteractionSpec& spec, const ChainConfig& cfg,
                                       int k = 4, double tol = 1e-10,
                                       double clusterTol = kClusterTolDefault) {
  if (k < 2) throw ValidationError("ground_bundle: k must be >= 2");
  GlobalOperator H = build_hamiltonian(spec, cfg);
  GroundStateBundle bundle;
  std::vector<EigenPair> all;
  bool anyLanczos = false;
  if (spec.declares(Symmetry::u1_gauge)) {
    auto blocks = sector_decompose(H, cfg, spec.kind());
    for (const auto& blk : blocks) {
      const int kb = static_cast<int>(std::min<long>(k, blk.op.dim));
      detail::SectorEig eig;
      if (blk.op.dim <= kDenseDimCap) {
        eig = detail::dense_lowest(blk.op, kb);
      } else {
        eig = detail::lanczos_lowest(blk.op, kb, tol);
        anyLanczos = true;
      }
      for (std::size_t i = 0; i < eig.values.size(); ++i) {
        EigenPair p;
        p.energy = eig.values[i];
        p.residual = (blk.op.mat * eig.vectors[i] - p.energy * eig.vectors[i]).norm();
        p.vector = embed_sector_vector(blk.basis, eig.vectors[i]);
        p.sector = blk.label;
        all.push_back(std::move(p));
      }
    }
  } else {
    GroundStateBundle single = lowest_eigenpairs(H, k, tol, clusterTol);
    all = std::move(single.pairs);
    anyLanczos = single.method == SolveMethod::lanczos;
  }
  std::sort(all.begin(), all.end(),
            [](const EigenPair& a, const EigenPair& b) { return a.energy < b.energy; });
  if (static_cast<int>(all.size()) > k) all.resize(k);
  bundle.pairs = std::move(all);
  bundle.method = anyLanczos ? SolveMethod::lanczos : SolveMethod::dense;
  if (bundle.pairs.size() >= 2) {
    bundle.degeneracy = detect_degeneracy(bundle, clusterTol);
    if (bundle.degeneracy < static_cast<int>(bundle.pairs.size()))
      bundle.gap = bundle.pairs[bundle.degeneracy].energy - bundle.pairs[0].energy;
  }
  return bundle;
}

// Resolve a (quasi-)degenerate low-energy span into eigenvectors of a
// diagonal observable (e.g. staggered magnetization); returned in ascending
// order of the observable. Standard trick to pick symmetry-broken
// representatives out of a finite-size doublet.
inline std::vector<Vec> resolve_cluster(const std::vector<Vec>& cluster,
                                        const Eigen::VectorXd& diagObservable) {
  const int d = static_cast<int>(cluster.size());
  Mat M(d, d);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      M(a, b) = cluster[a].dot(diagObservable.cast<cplx>().asDiagonal() * cluster[b]);
  Eigen::SelfAdjointEigenSolver<Mat> es(M);
  std::vector<Vec> out;
  for (int i = 0; i < d; ++i) {
    Vec v = Vec::Zero(cluster[0].size());
    for (int a = 0; a < d; ++a) v += es.eigenvectors()(a, i) * cluster[a];
    v.normalize();
    out.push_back(std::move(v));
  }
  return out;
}

inline Eigen::VectorXd staggered_magnetization_diag(int L) {
  const long dim = 1L << L;
  Eigen::VectorXd d = Eigen::VectorXd::Zero(dim);
  for (long s = 0; s < dim; ++s)
    for (int j = 0; j < L; ++j) {
      const double z = (s >> j) & 1L ? 1.0 : -1.0;
      d(s) += (j % 2 == 0 ? 1.0 : -1.0) * z;
    }
  return d;
}

struct GapScanRow {
  int L = 0;
  double gap = 0.0;
  int degeneracy = 1;
  double e0_per_site = 0.0;
};

struct GapScan {
  std::vector<GapScanRow> rows;
};

inline GapScan gap_scan(const InteractionSpec& spec, const std::vector<int>& Lvalues, int k = 4,
                        double clusterTol = kClusterTolDefault,
                        Boundary boundary = Boundary::periodic, double tol = 1e-10) {
  GapScan scan;
  for (int L : Lvalues) {
    if (L > 22) throw ResourceError("gap_scan: L > 22 needs the per-sector path only");
    ChainConfig cfg{L, boundary};
    int kk = k;
    GroundStateBundle b = ground_bundle(spec, cfg, kk, tol, clusterTol);
    // make sure the gap above the ground cluster is actually resolved
    while (!b.gap && kk < 2 * L && kk < (1 << L)) {
      kk += 2;
      b = ground_bundle(spec, cfg, kk, tol, clusterTol);
    }
    if (!b.gap) throw ConvergenceError("gap_scan: ground cluster fills every computed level");
    scan.rows.push_back(GapScanRow{L, *b.gap, b.degeneracy, b.pairs[0].energy / L});
  }
  return scan;
}

}  // namespace chainlab
