#pragma once
// Rank-proximal particle transport: the sliced variant (RPT) and the
// center-outward variant (CO-RPT).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "rankdiv/divergence.hpp"
#include "rankdiv/entropy.hpp"
#include "rankdiv/error.hpp"
#include "rankdiv/rng.hpp"
#include "rankdiv/sample_set.hpp"
#include "rankdiv/sliced.hpp"
#include "rankdiv/univariate.hpp"

namespace rankdiv {

/// value(t) = start + (end - start) t / (T - 1), constant for T <= 1.
struct LinearSchedule {
  double start = 0.0, end = 0.0;

  double at(int t, int total_steps) const {
    if (total_steps <= 1) return start;
    const int tc = std::clamp(t, 0, total_steps - 1);
    return start + (end - start) * static_cast<double>(tc) / static_cast<double>(total_steps - 1);
  }
  int at_int(int t, int total_steps) const { return static_cast<int>(std::lround(at(t, total_steps))); }
};

struct TransportConfig {
  int L = 10;
  LinearSchedule K{80, 128};
  LinearSchedule tau{0.30, 0.10};
  LinearSchedule eps{0.20, 0.15};
  double eta = 0.5;
  int inner_steps = 5;
  double inner_lr = 0.05;
  std::optional<double> clip_cap;
  EntropySpec generator{EntropyKind::KL};
  int total_steps = 400;
  bool monotone_coupling = true;
  bool antithetic = false;
  std::uint64_t seed = 0;
  int energy_slices = 32;  // fixed directions for the energy diagnostic

  void validate() const {
    if (L < 1) throw ConfigError("L must be at least 1");
    if (K.start < 1 || K.end < 1) throw ConfigError("K schedule must stay >= 1");
    if (tau.start < 0 || tau.end < 0) throw ConfigError("tau schedule must be nonnegative");
    if (!(eps.start > 0 && eps.end > 0)) throw ConfigError("step-size schedule must be positive");
    if (!(eta > 0)) throw ConfigError("eta must be positive");
    if (inner_steps < 1 || !(inner_lr > 0)) throw ConfigError("inner solver needs steps >= 1 and lr > 0");
    if (clip_cap && !(*clip_cap > 0)) throw ConfigError("clip cap must be positive");
    if (total_steps < 0) throw ConfigError("total_steps must be nonnegative");
    if (energy_slices < 1) throw ConfigError("energy_slices must be at least 1");
  }
};

struct CoRptConfig {
  LinearSchedule K{96, 224};
  LinearSchedule tau{0.30, 0.07};
  LinearSchedule eps{0.16, 0.10};
  double eta = 0.5;
  int inner_steps = 3;
  double inner_lr = 0.05;
  std::optional<double> clip_cap = 0.30;
  EntropySpec generator{EntropyKind::JS};
  int total_steps = 400;
  double beta = 0.5;
  bool whiten = true;
  double ridge_factor = 1e-3;  // ridge = ridge_factor * mean diagonal of the covariance
  std::uint64_t seed = 0;
  int energy_slices = 32;

  void validate() const {
    if (K.start < 1 || K.end < 1) throw ConfigError("K schedule must stay >= 1");
    if (tau.start < 0 || tau.end < 0) throw ConfigError("tau schedule must be nonnegative");
    if (!(eps.start > 0 && eps.end > 0)) throw ConfigError("step-size schedule must be positive");
    if (!(eta > 0)) throw ConfigError("eta must be positive");
    if (inner_steps < 1 || !(inner_lr > 0)) throw ConfigError("inner solver needs steps >= 1 and lr > 0");
    if (clip_cap && !(*clip_cap > 0)) throw ConfigError("clip cap must be positive");
    if (!(beta >= 0 && beta <= 1)) throw ConfigError("beta must lie in [0, 1]");
    if (ridge_factor < 0) throw ConfigError("ridge factor must be nonnegative");
    if (total_steps < 0) throw ConfigError("total_steps must be nonnegative");
    if (energy_slices < 1) throw ConfigError("energy_slices must be at least 1");
  }
};

struct StepDiagnostics {
  int step = 0;
  int K = 0;
  double tau = 0.0, eps = 0.0;
  double energy = 0.0;             // sliced rank energy of the positions after this step
  double mean_displacement = 0.0;  // mean per-particle move of this step
};

struct ParticleState {
  SampleSet positions;
  int step_index = 0;
  std::vector<StepDiagnostics> diagnostics;
};

// ---------------------------------------------------------------------------
// Rank energy and its proximal map

/// D_f(Q_hat^(K)(U) || uniform) with Q_hat the Bernstein histogram of U.
inline double rank_energy(std::span<const double> U, int K, const EntropySpec& spec) {
  if (U.empty()) throw DomainError("rank_energy needs at least one rank");
  RankHistogram P{K, bernstein_histogram(U, K), Provenance::Smoothed};
  return discrete_f_divergence(P, spec);
}

/// dE/dU_i = (K/N) sum_m b_{m,K-1}(U_i) (f'_{m+1} - f'_m), f'_n = f'((K+1) Q_hat(n)).
inline std::vector<double> rank_energy_gradient(std::span<const double> U, int K, const EntropySpec& spec) {
  if (!differentiable(spec.kind))
    throw DomainError(std::string("generator '") + std::string(to_string(spec.kind)) +
                      "' is not differentiable; use a smooth generator such as kl or js");
  const std::size_t N = U.size();
  std::vector<double> g(N, 0.0);
  if (K < 1 || N == 0) return g;
  const auto Q = bernstein_histogram(U, K);
  std::vector<double> dfp(K);
  for (int m = 0; m < K; ++m) dfp[m] = derivative(spec, (K + 1.0) * Q[m + 1]) - derivative(spec, (K + 1.0) * Q[m]);
  std::vector<double> basis(K);
  const double scale = static_cast<double>(K) / static_cast<double>(N);
  for (std::size_t i = 0; i < N; ++i) {
    bernstein_basis_into(K - 1, U[i], basis.data());
    double acc = 0.0;
    for (int m = 0; m < K; ++m) acc += basis[m] * dfp[m];
    g[i] = scale * acc;
  }
  return g;
}

inline constexpr double kRankClamp = 1e-4;

struct ProxResult {
  std::vector<double> U;
  std::vector<double> objectives;  // objective at the start and after each inner step
  int halvings = 0;
};

/// Approximate argmin_U E(U) + |U - U0|^2 / (2 eta N) by projected gradient
/// descent on [delta, 1 - delta]^N. The tether is the squared W2 distance
/// between the empirical rank measures, and steps are taken in the matching
/// per-particle metric (gradient times N). A step that raises the objective is
/// retried with half the learning rate, so the objective never increases.
inline ProxResult rank_prox(std::span<const double> U0_in, int K, const EntropySpec& spec, double eta, int inner_steps,
                            double inner_lr) {
  if (!(eta > 0.0)) throw DomainError("eta must be positive");
  const std::size_t N = U0_in.size();
  std::vector<double> U0(U0_in.begin(), U0_in.end());
  for (auto& u : U0) u = std::clamp(u, kRankClamp, 1.0 - kRankClamp);
  auto objective = [&](const std::vector<double>& U) {
    double q = 0.0;
    for (std::size_t i = 0; i < N; ++i) q += (U[i] - U0[i]) * (U[i] - U0[i]);
    return rank_energy(U, K, spec) + q / (2.0 * eta * static_cast<double>(N));
  };
  ProxResult res;
  res.U = U0;
  double J = objective(res.U);
  res.objectives.push_back(J);
  double lr = inner_lr;
  std::vector<double> trial(N);
  for (int step = 0; step < inner_steps; ++step) {
    auto g = rank_energy_gradient(res.U, K, spec);
    for (std::size_t i = 0; i < N; ++i) {
      g[i] = static_cast<double>(N) * g[i] + (res.U[i] - U0[i]) / eta;
      if (std::isnan(g[i])) {
        std::ostringstream msg;
        msg << "NaN in rank-prox gradient: step=" << step << " i=" << i << " U_i=" << res.U[i] << " U0_i=" << U0[i]
            << " K=" << K << " eta=" << eta << " lr=" << lr;
        throw EvaluationError(msg.str());
      }
    }
    bool accepted = false;
    for (int h = 0; h < 40 && !accepted; ++h) {
      for (std::size_t i = 0; i < N; ++i) trial[i] = std::clamp(res.U[i] - lr * g[i], kRankClamp, 1.0 - kRankClamp);
      const double Jt = objective(trial);
      if (Jt <= J) {
        res.U.swap(trial);
        J = Jt;
        accepted = true;
      } else {
        lr *= 0.5;
        ++res.halvings;
      }
    }
    res.objectives.push_back(J);
    if (!accepted) break;
  }
  return res;
}

// ---------------------------------------------------------------------------
// Energy diagnostic

/// Sliced rank energy of particles against the reference with hard ranks.
inline double sliced_rank_energy(const SampleSet& particles, const SampleSet& reference, int K, const EntropySpec& spec,
                                 const DirectionSet& dirs) {
  return sliced_rank_divergence(particles, reference, K, spec, dirs, RouteOptions{Route::Smoothed, 0.0, 0}).estimate.value;
}

namespace detail {

inline std::vector<double> soft_ranks(const Samples1D& ref, std::span<const double> x, double tau) {
  if (tau > 0.0) return smoothed_cdf_batch(ref, x, tau);
  std::vector<double> U(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) U[i] = empirical_cdf(ref, x[i]);
  return U;
}

/// Inverse of the rank map used by soft_ranks: the smoothed quantile for
/// tau > 0, the empirical quantile for tau = 0.
inline std::function<double(double)> rank_inverse(const Samples1D& ref, double tau) {
  if (tau > 0.0) return [q = SmoothedQuantile(ref, tau)](double u) { return q(u); };
  return [&ref](double u) { return empirical_quantile(ref, u); };
}

/// Reorders U so that it is nondecreasing along x (stable on ties).
inline void monotone_couple(std::vector<double>& U, std::span<const double> x) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> sorted(U);
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t k = 0; k < idx.size(); ++k) U[idx[k]] = sorted[k];
}

inline double mean_row_distance(const SampleSet& a, const SampleSet& b) {
  double total = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.dim(); ++j) s += (a(i, j) - b(i, j)) * (a(i, j) - b(i, j));
    total += std::sqrt(s);
  }
  return total / static_cast<double>(a.rows());
}

}  // namespace detail

/// One outer step of sliced rank-proximal transport. Directions are drawn
/// from cfg.seed and the step index unless `fixed_dirs` is given.
inline ParticleState rpt_step(const ParticleState& state, const SampleSet& reference, const TransportConfig& cfg,
                              int step_index, const DirectionSet* fixed_dirs = nullptr) {
  const auto& X = state.positions;
  if (X.dim() != reference.dim()) throw DomainError("particle and reference dimensions differ");
  const std::size_t N = X.rows(), d = X.dim();
  const int T = cfg.total_steps;
  const int K = cfg.K.at_int(step_index, T);
  const double tau = cfg.tau.at(step_index, T);
  const double eps = cfg.eps.at(step_index, T);

  DirectionSet drawn;
  if (!fixed_dirs) {
    drawn = sample_directions(d, static_cast<std::size_t>(cfg.L),
                              derive_seed(cfg.seed, {stream::kDirections, static_cast<std::uint64_t>(step_index)}),
                              cfg.antithetic);
  }
  const DirectionSet& dirs = fixed_dirs ? *fixed_dirs : drawn;
  if (dirs.dim != d) throw DomainError("direction dimension differs from particles");

  std::vector<double> delta_x(N * d, 0.0);
  for (std::size_t l = 0; l < dirs.size(); ++l) {
    const auto& s = dirs[l];
    const auto xp = project_values(X, s);
    const Samples1D yp = project(reference, s);
    auto U0 = detail::soft_ranks(yp, xp, tau);
    auto U1 = rank_prox(U0, K, cfg.generator, cfg.eta, cfg.inner_steps, cfg.inner_lr).U;
    if (cfg.monotone_coupling) detail::monotone_couple(U1, xp);
    // map back through the inverse of the same CDF that produced the ranks
    const auto quantile = detail::rank_inverse(yp, tau);
    for (std::size_t i = 0; i < N; ++i) {
      double delta = quantile(U1[i]) - xp[i];
      if (cfg.clip_cap) delta = std::clamp(delta, -*cfg.clip_cap, *cfg.clip_cap);
      for (std::size_t j = 0; j < d; ++j) delta_x[i * d + j] += delta * s[j];
    }
  }
  ParticleState next = state;
  const double gain = eps * static_cast<double>(d) / static_cast<double>(dirs.size());
  for (std::size_t k = 0; k < N * d; ++k) next.positions.data()[k] += gain * delta_x[k];
  if (!next.positions.all_finite()) throw EvaluationError("non-finite particle position after transport step");
  next.step_index = step_index + 1;
  next.diagnostics.push_back({step_index, K, tau, eps, 0.0, detail::mean_row_distance(next.positions, X)});
  return next;
}

namespace detail {

struct Whitening {
  Eigen::MatrixXd W, W_inv;
};

/// ZCA whitening of the centered reference with ridge regularization.
inline Whitening fit_zca(const Eigen::MatrixXd& Yc, double ridge_factor) {
  const Eigen::Index d = Yc.cols();
  const double denom = std::max<Eigen::Index>(1, Yc.rows() - 1);
  Eigen::MatrixXd C = (Yc.transpose() * Yc) / denom;
  const double ridge = ridge_factor * C.diagonal().mean();
  C.diagonal().array() += ridge;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
  if (es.info() != Eigen::Success) throw EvaluationError("eigendecomposition of the reference covariance failed");
  const auto& lam = es.eigenvalues();
  if (lam.minCoeff() <= 0.0) throw DomainError("reference covariance is singular; use a positive ridge");
  const auto& V = es.eigenvectors();
  Whitening w;
  w.W = V * lam.cwiseSqrt().cwiseInverse().asDiagonal() * V.transpose();
  w.W_inv = V * lam.cwiseSqrt().asDiagonal() * V.transpose();
  (void)d;
  return w;
}

inline Eigen::MatrixXd to_matrix(const SampleSet& s) {
  Eigen::MatrixXd m(s.rows(), s.dim());
  for (std::size_t i = 0; i < s.rows(); ++i)
    for (std::size_t j = 0; j < s.dim(); ++j) m(i, j) = s(i, j);
  return m;
}

/// Splits rows into radii and unit directions; rows with radius below 1e-9
/// get a uniformly random direction.
inline void polar_split(const Eigen::MatrixXd& Z, std::vector<double>& r, Eigen::MatrixXd& U, std::uint64_t jitter_seed) {
  const Eigen::Index n = Z.rows(), d = Z.cols();
  r.resize(n);
  U.resize(n, d);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double ri = Z.row(i).norm();
    r[i] = ri;
    if (ri < 1e-9) {
      Rng rng = make_rng(derive_seed(jitter_seed, {static_cast<std::uint64_t>(i)}));
      Eigen::VectorXd v(d);
      do {
        for (Eigen::Index j = 0; j < d; ++j) v(j) = gauss(rng);
      } while (v.norm() == 0.0);
      U.row(i) = v.transpose() / v.norm();
    } else {
      U.row(i) = Z.row(i) / ri;
    }
  }
}

}  // namespace detail

/// One CO-RPT update. `increments` (optional) receives the clipped
/// whitened-space increments Delta_i before scaling by eps.
inline ParticleState co_rpt_step(const ParticleState& state, const SampleSet& reference, const CoRptConfig& cfg,
                                 int step_index, std::vector<double>* increments = nullptr) {
  const auto& X = state.positions;
  if (X.dim() != reference.dim()) throw DomainError("particle and reference dimensions differ");
  const Eigen::Index N = static_cast<Eigen::Index>(X.rows()), d = static_cast<Eigen::Index>(X.dim());
  const int T = cfg.total_steps;
  const int K = cfg.K.at_int(step_index, T);
  const double tau = cfg.tau.at(step_index, T);
  const double eps = cfg.eps.at(step_index, T);

  Eigen::MatrixXd Y = detail::to_matrix(reference);
  const Eigen::RowVectorXd ybar = Y.colwise().mean();
  Y.rowwise() -= ybar;
  Eigen::MatrixXd Xt = detail::to_matrix(X);
  Xt.rowwise() -= ybar;
  detail::Whitening wt;
  if (cfg.whiten) {
    wt = detail::fit_zca(Y, cfg.ridge_factor);
    Y = Y * wt.W.transpose();
    Xt = Xt * wt.W.transpose();
  }

  const auto step_tag = static_cast<std::uint64_t>(step_index);
  std::vector<double> rx, ry;
  Eigen::MatrixXd Ux, Uy;
  detail::polar_split(Xt, rx, Ux, derive_seed(cfg.seed, {stream::kJitter, step_tag, 0}));
  detail::polar_split(Y, ry, Uy, derive_seed(cfg.seed, {stream::kJitter, step_tag, 1}));

  const Samples1D radii_ref(ry);
  const auto U0 = detail::soft_ranks(radii_ref, rx, tau);
  const auto U1 = rank_prox(U0, K, cfg.generator, cfg.eta, cfg.inner_steps, cfg.inner_lr).U;
  const auto radius_at = detail::rank_inverse(radii_ref, tau);

  const Eigen::MatrixXd cos = Ux * Uy.transpose();
  Eigen::MatrixXd Xnew = Xt;
  if (increments) increments->assign(static_cast<std::size_t>(N), 0.0);
  for (Eigen::Index i = 0; i < N; ++i) {
    Eigen::Index jstar = 0;
    double best = cos(i, 0);
    for (Eigen::Index j = 1; j < cos.cols(); ++j) {
      if (cos(i, j) > best) {
        best = cos(i, j);
        jstar = j;
      }
    }
    Eigen::RowVectorXd u = (1.0 - cfg.beta) * Ux.row(i) + cfg.beta * Uy.row(jstar);
    const double un = u.norm();
    u = un > 0.0 ? Eigen::RowVectorXd(u / un) : Eigen::RowVectorXd(Uy.row(jstar));
    const double rstar = std::max(0.0, radius_at(U1[i]));
    Eigen::RowVectorXd delta = rstar * u - Xt.row(i);
    if (cfg.clip_cap) {
      const double nrm = delta.norm();
      if (nrm > *cfg.clip_cap) delta *= *cfg.clip_cap / nrm;
    }
    if (increments) (*increments)[i] = delta.norm();
    Xnew.row(i) += eps * delta;
  }

  if (cfg.whiten) Xnew = Xnew * wt.W_inv.transpose();
  Xnew.rowwise() += ybar;

  ParticleState next = state;
  for (Eigen::Index i = 0; i < N; ++i)
    for (Eigen::Index j = 0; j < d; ++j) next.positions(i, j) = Xnew(i, j);
  if (!next.positions.all_finite()) throw EvaluationError("non-finite particle position after CO-RPT step");
  next.step_index = step_index + 1;
  next.diagnostics.push_back({step_index, K, tau, eps, 0.0, detail::mean_row_distance(next.positions, X)});
  return next;
}

// ---------------------------------------------------------------------------
// Drivers

struct TransportRun {
  std::vector<ParticleState> snapshots;  // in the order of the requested indices
  std::vector<StepDiagnostics> trace;    // row t = state after t steps (t = 0..T)
};

namespace detail {

template <class Config, class Step>
TransportRun run_dynamics(const SampleSet& initial, const SampleSet& reference, const Config& cfg,
                          std::vector<int> snapshots, Step step) {
  cfg.validate();
  const int T = cfg.total_steps;
  std::sort(snapshots.begin(), snapshots.end());
  snapshots.erase(std::unique(snapshots.begin(), snapshots.end()), snapshots.end());
  for (int s : snapshots) {
    if (s < 0 || s > T) throw DomainError("snapshot index outside [0, total_steps]");
  }
  TransportRun run;
  ParticleState state{initial, 0, {}};
  if (T == 0) {
    run.snapshots.push_back(state);
    return run;
  }
  const int K_diag = cfg.K.at_int(T - 1, T);
  const auto diag_dirs = sample_directions(initial.dim(), static_cast<std::size_t>(cfg.energy_slices),
                                           derive_seed(cfg.seed, {stream::kDiagnostics}));
  auto energy = [&](const SampleSet& x) { return sliced_rank_energy(x, reference, K_diag, cfg.generator, diag_dirs); };

  run.trace.push_back({0, cfg.K.at_int(0, T), cfg.tau.at(0, T), cfg.eps.at(0, T), energy(initial), 0.0});
  std::size_t next_snap = 0;
  auto maybe_snap = [&](const ParticleState& s) {
    if (next_snap < snapshots.size() && snapshots[next_snap] == s.step_index) {
      ParticleState copy = s;
      copy.diagnostics.clear();
      run.snapshots.push_back(std::move(copy));
      ++next_snap;
    }
  };
  maybe_snap(state);
  for (int t = 0; t < T; ++t) {
    state = step(state, t);
    auto& diag = state.diagnostics.back();
    diag.energy = energy(state.positions);
    run.trace.push_back({t + 1, diag.K, diag.tau, diag.eps, diag.energy, diag.mean_displacement});
    maybe_snap(state);
  }
  return run;
}

}  // namespace detail

/// Runs sliced RPT for cfg.total_steps steps and keeps the requested snapshots.
inline TransportRun run_transport(const SampleSet& initial, const SampleSet& reference, const TransportConfig& cfg,
                                  const std::vector<int>& snapshots) {
  return detail::run_dynamics(initial, reference, cfg, snapshots, [&](const ParticleState& s, int t) {
    return rpt_step(s, reference, cfg, t);
  });
}

inline TransportRun run_co_rpt(const SampleSet& initial, const SampleSet& reference, const CoRptConfig& cfg,
                               const std::vector<int>& snapshots) {
  return detail::run_dynamics(initial, reference, cfg, snapshots, [&](const ParticleState& s, int t) {
    return co_rpt_step(s, reference, cfg, t);
  });
}

}  // namespace rankdiv
