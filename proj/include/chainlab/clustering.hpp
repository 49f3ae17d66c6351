#pragma once

#include "chainlab/reduced.hpp"

// Connected correlation functions of computed states, decay-law fits, and the
// bracketed uniform correlation coefficient over finite windows.

namespace chainlab {

struct CorrelationSeries {
  std::vector<std::pair<int, cplx>> points;  // (j, connected value)
  std::string state_tag;
};

// phi(Q tau_j(R)) - phi(Q) phi(tau_j(R)); supports must stay disjoint
inline cplx connected_correlator(const Vec& psi, const LocalOperator& Q, const LocalOperator& R,
                                 int j, const ChainConfig& cfg) {
  LocalOperator Rj = translate(R, j, cfg.L, cfg.boundary);
  for (int s : Q.support())
    for (int r : Rj.support())
      if (s == r) throw ValidationError("connected_correlator: overlapping supports");
  // disjoint supports commute, apply the translated factor first
  const cplx qr = psi.dot(apply_local(Q, apply_local(Rj, psi, cfg.L), cfg.L));
  const cplx q = expectation(Q, psi, cfg.L);
  const cplx r = expectation(Rj, psi, cfg.L);
  return qr - q * r;
}

inline CorrelationSeries correlation_profile(const Vec& psi, const LocalOperator& Q,
                                             const LocalOperator& R, const std::vector<int>& js,
                                             const ChainConfig& cfg,
                                             const std::string& tag = "state") {
  CorrelationSeries series;
  series.state_tag = tag;
  for (int j : js) series.points.push_back({j, connected_correlator(psi, Q, R, j, cfg)});
  return series;
}

struct ModelFit {
  double C = 0.0;
  double rate = 0.0;  // K for exponential, alpha for power law
  double r2 = 0.0;
};

struct DecayFit {
  enum class Model { exponential, powerlaw };
  Model model = Model::exponential;
  ModelFit exponential;
  ModelFit powerlaw;
  std::pair<int, int> window{0, 0};

  const ModelFit& winner() const {
    return model == Model::exponential ? exponential : powerlaw;
  }
};

namespace detail {
inline ModelFit loglinear_fit(const std::vector<double>& x, const std::vector<double>& logy) {
  const int n = static_cast<int>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    sx += x[i];
    sy += logy[i];
    sxx += x[i] * x[i];
    sxy += x[i] * logy[i];
  }
  const double denom = n * sxx - sx * sx;
  ModelFit fit;
  const double slope = (n * sxy - sx * sy) / std::max(denom, 1e-300);
  const double icept = (sy - slope * sx) / n;
  fit.rate = -slope;
  fit.C = std::exp(icept);
  double ssr = 0, sst = 0;
  for (int i = 0; i < n; ++i) {
    const double yhat = icept + slope * x[i];
    ssr += (logy[i] - yhat) * (logy[i] - yhat);
    sst += (logy[i] - sy / n) * (logy[i] - sy / n);
  }
  fit.r2 = sst > 0 ? 1.0 - ssr / sst : 1.0;
  return fit;
}
}  // namespace detail

inline constexpr double kCorrNoiseFloor = 1e-13;

// log-linear least squares of |value| against j (exponential) and log j
// (power law); both are reported, `model` marks the better r2.
inline DecayFit decay_fit(const CorrelationSeries& series, std::pair<int, int> window) {
  std::vector<double> js, logAbs;
  for (const auto& [j, v] : series.points) {
    if (j < window.first || j > window.second) continue;
    if (std::abs(v) <= kCorrNoiseFloor) continue;
    js.push_back(static_cast<double>(j));
    logAbs.push_back(std::log(std::abs(v)));
  }
  if (js.size() < 4)
    throw ValidationError("decay_fit: need at least 4 nonzero points in the window");
  DecayFit fit;
  fit.window = window;
  fit.exponential = detail::loglinear_fit(js, logAbs);
  std::vector<double> logJs(js.size());
  for (std::size_t i = 0; i < js.size(); ++i) logJs[i] = std::log(js[i]);
  fit.powerlaw = detail::loglinear_fit(logJs, logAbs);
  fit.model = fit.exponential.r2 >= fit.powerlaw.r2 ? DecayFit::Model::exponential
                                                    : DecayFit::Model::powerlaw;
  return fit;
}

// Bracket of the window-restricted correlation coefficient across a cut:
// lower bound from a seesaw over Hermitian contraction-norm-1 observables,
// upper bound from the trace norm of rho_AB - rho_A x rho_B.
struct CjBracket {
  int j = 0;
  int window_width = 0;
  double lower = 0.0;
  double upper = 0.0;
  std::vector<double> trace;  // per-iteration seesaw values of the best restart
};

namespace detail {

// optimal Hermitian X with ||X|| <= 1 for tr(X K): sign(K); zero eigenvalues
// are sent to +1
inline Mat sign_of_hermitian(const Mat& K) {
  Eigen::SelfAdjointEigenSolver<Mat> es((K + K.adjoint()) / 2.0);
  Vec signs(es.eigenvalues().size());
  for (long i = 0; i < signs.size(); ++i) signs(i) = es.eigenvalues()(i) < 0 ? -1.0 : 1.0;
  return es.eigenvectors() * signs.asDiagonal() * es.eigenvectors().adjoint();
}

// Tr_B[ Delta (I x R) ] for Delta on A x B (A = low index bits)
inline Mat contract_right(const Mat& Delta, const Mat& R, long dA, long dB) {
  Mat K = Mat::Zero(dA, dA);
  for (long a = 0; a < dA; ++a)
    for (long a2 = 0; a2 < dA; ++a2) {
      cplx acc = 0;
      for (long b = 0; b < dB; ++b)
        for (long b2 = 0; b2 < dB; ++b2) acc += Delta(a + dA * b, a2 + dA * b2) * R(b2, b);
      K(a, a2) = acc;
    }
  return K;
}

inline Mat contract_left(const Mat& Delta, const Mat& Q, long dA, long dB) {
  Mat K = Mat::Zero(dB, dB);
  for (long b = 0; b < dB; ++b)
    for (long b2 = 0; b2 < dB; ++b2) {
      cplx acc = 0;
      for (long a = 0; a < dA; ++a)
        for (long a2 = 0; a2 < dA; ++a2) acc += Delta(a + dA * b, a2 + dA * b2) * Q(a2, a);
      K(b, b2) = acc;
    }
  return K;
}

}  // namespace detail

inline CjBracket cj_bracket(const Vec& psi, int cut, int separation, int windowWidth,
                            const ChainConfig& cfg, int restarts = 5, int maxIters = 200,
                            std::uint64_t seed = 0xc0ffee01ull) {
  if (separation < 1) throw ValidationError("cj_bracket: windows overlap");
  std::vector<int> A, B;
  for (int s = cut - windowWidth + 1; s <= cut; ++s) A.push_back(s);
  for (int s = cut + separation; s < cut + separation + windowWidth; ++s) B.push_back(s);
  if (A.front() < 0 || B.back() >= cfg.L)
    throw ValidationError("cj_bracket: windows leave the chain");
  std::vector<int> AB = A;
  AB.insert(AB.end(), B.begin(), B.end());
  Mat rhoAB = reduced_density(psi, AB, cfg.L).matrix;
  Mat rhoA = reduced_density(psi, A, cfg.L).matrix;
  Mat rhoB = reduced_density(psi, B, cfg.L).matrix;
  const long dA = rhoA.rows(), dB = rhoB.rows();
  Mat Delta = rhoAB;
  for (long a = 0; a < dA; ++a)
    for (long a2 = 0; a2 < dA; ++a2)
      for (long b = 0; b < dB; ++b)
        for (long b2 = 0; b2 < dB; ++b2) Delta(a + dA * b, a2 + dA * b2) -= rhoA(a, a2) * rhoB(b, b2);

  CjBracket out;
  out.j = separation;
  out.window_width = windowWidth;
  {
    Eigen::SelfAdjointEigenSolver<Mat> es(Delta);
    out.upper = es.eigenvalues().cwiseAbs().sum();
  }
  Rng rng(seed);
  auto randomHermitian = [&](long d) {
    Mat m(d, d);
    for (long r = 0; r < d; ++r)
      for (long c = 0; c < d; ++c) m(r, c) = rng.next_cgauss();
    return Mat((m + m.adjoint()) / 2.0);
  };
  for (int rs = 0; rs < restarts; ++rs) {
    Mat R = rs == 0 ? Mat(Mat::Identity(dB, dB)) : detail::sign_of_hermitian(randomHermitian(dB));
    double value = 0.0;
    std::vector<double> trace;
    for (int it = 0; it < maxIters; ++it) {
      Mat KQ = detail::contract_right(Delta, R, dA, dB);
      Mat Q = detail::sign_of_hermitian(KQ);
      Mat KR = detail::contract_left(Delta, Q, dA, dB);
      R = detail::sign_of_hermitian(KR);
      const double v = std::abs((KR * R).trace().real());
      trace.push_back(v);
      if (v - value < 1e-12 && it > 0) {
        value = std::max(value, v);
        break;
      }
      value = std::max(value, v);
    }
    if (value > out.lower) {
      out.lower = value;
      out.trace = std::move(trace);
    }
  }
  return out;
}

}  // namespace chainlab
