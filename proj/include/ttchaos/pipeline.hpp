#pragma once

// Pipeline driver behind the ttchaos CLI: coefficient expansion, Galerkin
// assembly, solve, and statistics. Stages communicate only through artifact
// files in the output directory, so each can be re-run independently; the
// sparse reference path mirrors the TT path at guarded (oracle) sizes.
//
// Exit codes: 0 success, 2 non-convergence (artifacts still written),
// 3 guard refusal, 4 configuration error.

#include "ttchaos/block_cross.hpp"
#include "ttchaos/config.hpp"
#include "ttchaos/covariance.hpp"
#include "ttchaos/errors.hpp"
#include "ttchaos/fem.hpp"
#include "ttchaos/galerkin.hpp"
#include "ttchaos/hermite.hpp"
#include "ttchaos/kle.hpp"
#include "ttchaos/mesh.hpp"
#include "ttchaos/multi_index.hpp"
#include "ttchaos/pce.hpp"
#include "ttchaos/solver.hpp"
#include "ttchaos/stats.hpp"
#include "ttchaos/transform.hpp"
#include "ttchaos/tt_io.hpp"
#include "ttchaos/tt_tensor.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <unsupported/Eigen/SparseExtra>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace ttchaos {
namespace pipeline {

// ---------------------------------------------------------------------------
// Deterministic CSV output: fixed %.17g rendering so repeated runs under the
// same seed produce bit-identical files. Timings never go into tables.

inline std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class CsvWriter {
public:
  explicit CsvWriter(const std::filesystem::path& path) : os_(path, std::ios::binary) {
    if (!os_) throw config_error("cannot open " + path.string() + " for writing");
  }

  CsvWriter& cell(const std::string& s) {
    if (!first_) os_ << ',';
    os_ << s;
    first_ = false;
    return *this;
  }
  CsvWriter& cell(const char* s) { return cell(std::string(s)); }
  CsvWriter& cell(double v) { return cell(g17(v)); }
  CsvWriter& cell(int v) { return cell(std::to_string(v)); }
  CsvWriter& cell(long long v) { return cell(std::to_string(v)); }
  void end() {
    os_ << '\n';
    first_ = true;
  }

private:
  std::ofstream os_;
  bool first_ = true;
};

class StageTimer {
public:
  explicit StageTimer(const char* name)
      : name_(name), t0_(std::chrono::steady_clock::now()) {}
  ~StageTimer() {
    const double dt =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    std::fprintf(stderr, "[ttchaos] %s: %.2f s\n", name_, dt);
  }

private:
  const char* name_;
  std::chrono::steady_clock::time_point t0_;
};

inline std::filesystem::path art(const RunConfig& c, const std::string& name) {
  return std::filesystem::path(c.out_dir) / name;
}

// ---------------------------------------------------------------------------
// Field data shared by expand and assemble: mesh, marginal transform, and the
// two weighted eigenexpansions. Entirely deterministic in the config, which
// is what lets later stages rebuild it instead of serializing matrices.

struct FieldData {
  TriMesh mesh;
  TransformPhi phi;
  KleBasis kle;
  double gauss_clip = 0.0;  // clipped negative spectral mass, relative to lambda_max
};

inline FieldData build_field_data(const RunConfig& c) {
  FieldData fd;
  fd.mesh = build_mesh(domain_from_string(c.domain), c.refinement);
  fd.phi = beta_marginal_transform(c.marginal_a, c.marginal_b, 0.0, c.transform_order());

  const Eigen::VectorXd W = lumped_weights(fd.mesh);
  const Eigen::MatrixXd rho = correlation_matrix(
      fd.mesh.nodes, covariance_family_from_string(c.covariance), c.sigma);
  const Eigen::MatrixXd cov_field = fd.phi.series_variance() * rho;
  Eigen::MatrixXd cov_gauss = gamma_covariance(cov_field, fd.phi);

  // The entrywise inversion preserves symmetry but not positive
  // semidefiniteness, so the matched Gaussian covariance can carry small
  // negative eigenvalues. Project onto the PSD cone and record how much
  // spectral mass the projection removed.
  {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov_gauss);
    const Eigen::VectorXd ev = es.eigenvalues();
    const double lmax = ev.maxCoeff();
    double clipped = 0.0;
    for (Eigen::Index i = 0; i < ev.size(); ++i)
      if (ev[i] < 0.0) clipped -= ev[i];
    if (clipped > 0.0) {
      cov_gauss = es.eigenvectors() * ev.cwiseMax(0.0).asDiagonal() *
                  es.eigenvectors().transpose();
      cov_gauss = ((cov_gauss + cov_gauss.transpose()) / 2.0).eval();
    }
    fd.gauss_clip = lmax > 0.0 ? clipped / lmax : 0.0;
  }

  const EigenPairs pf = discrete_kle(cov_field, W, c.L);
  const EigenPairs pg = discrete_kle(cov_gauss, W, c.M);

  fd.kle.weights = W;
  fd.kle.mean = Eigen::VectorXd::Constant(fd.mesh.node_count(), c.shift);
  fd.kle.field_modes = pf.vectors;
  fd.kle.field_values = pf.values;
  fd.kle.gauss_modes = pg.vectors;
  for (int m = 0; m < c.M; ++m)
    fd.kle.gauss_modes.col(m) *= std::sqrt(std::max(pg.values[m], 0.0));
  fd.kle.gauss_values = pg.values;
  fd.kle.validate();
  return fd;
}

namespace detail {

inline void require_artifact(const std::filesystem::path& p, const std::string& stage,
                             const std::string& hint) {
  if (!std::filesystem::exists(p))
    throw config_error(stage + ": missing artifact " + p.string() + " (" + hint + ")");
}

inline double factorial_d(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

inline long long stored_entries(const TTTensor& u) {
  long long s = 0;
  for (int k = 0; k < u.order(); ++k) s += static_cast<long long>(u.block(k).size());
  return s;
}

// chain-contract the parametric blocks of a solution train at one alpha,
// then expand through the spatial block: column u_alpha(x)
inline Eigen::VectorXd solution_column(const TTTensor& u, const std::vector<int>& alpha) {
  Eigen::VectorXd w = Eigen::VectorXd::Ones(1);
  for (int k = u.order() - 1; k >= 1; --k)
    w = Eigen::MatrixXd(u.block(k).slice(alpha[k - 1])) * w;
  const Tensor3& b0 = u.block(0);
  Eigen::Map<const RowMat> U(b0.data(), b0.mode_size(), b0.right_rank());
  return U * w;
}

// Channel matrix for the reference assembly: column 0 the mean indicator
// delta_{alpha,0}, columns 1..L the per-mode coefficients.
inline Eigen::MatrixXd sparse_channels(const KleBasis& kle, const TransformPhi& phi,
                                       const SparseIndexSet& set) {
  const Eigen::MatrixXd pc = pce_coefficients(kle, phi, set.all());
  Eigen::MatrixXd ch(pc.rows(), pc.cols() + 1);
  ch.col(0).setZero();
  ch.rightCols(pc.cols()) = pc;
  for (std::size_t k = 0; k < set.size(); ++k) {
    bool zero = true;
    for (int a : set.at(k)) zero = zero && a == 0;
    if (zero) ch(static_cast<Eigen::Index>(k), 0) = 1.0;
  }
  return ch;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string f;
  std::istringstream is(line);
  while (std::getline(is, f, ',')) out.push_back(f);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline Eigen::MatrixXd load_sparse_channels(const std::filesystem::path& path,
                                            const SparseIndexSet& set, int L) {
  std::ifstream is(path);
  if (!is)
    throw config_error("assemble: missing coefficient artifact " + path.string() +
                       " (run expand with the sparse path first)");
  std::string line;
  if (!std::getline(is, line)) throw config_error("assemble: empty coefficient table");
  const int M = set.dims();
  Eigen::MatrixXd ch(static_cast<Eigen::Index>(set.size()), L + 1);
  std::size_t row = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (row >= set.size()) throw config_error("assemble: coefficient table has extra rows");
    const auto fields = split_csv_line(line);
    if (static_cast<int>(fields.size()) != M + L + 1)
      throw config_error("assemble: coefficient table row has wrong column count");
    const std::vector<int>& alpha = set.at(row);
    for (int m = 0; m < M; ++m)
      if (std::stoi(fields[m]) != alpha[m])
        throw config_error("assemble: coefficient table indices do not match the configured set");
    for (int l = 0; l <= L; ++l)
      ch(static_cast<Eigen::Index>(row), l) = std::stod(fields[M + l]);
    ++row;
  }
  if (row != set.size()) throw config_error("assemble: coefficient table is incomplete");
  return ch;
}

// Rebuilds the solver-side system from the operator and right-hand-side
// artifacts alone: per-channel sparse stiffness matrices recovered from the
// exact nonzeros of the spatial operator block.
inline GalerkinSystemTT system_from_artifacts(TTOperator op, TTTensor rhs) {
  if (op.order() < 2) throw config_error("solve: operator artifact has no parametric blocks");
  const Tensor4& b0 = op.block(0);
  if (b0.left_rank() != 1 || b0.row_size() != b0.col_size())
    throw config_error("solve: malformed spatial operator block");
  if (op.col_sizes() != rhs.mode_sizes() || rhs.boundary_rank() != 1)
    throw config_error("solve: right-hand side does not match the operator");
  for (int m = 1; m < op.order(); ++m)
    if (op.block(m).row_size() != op.block(m).col_size())
      throw config_error("solve: parametric operator blocks must be square");
  const int N = b0.row_size();

  GalerkinSystemTT sys;
  for (int ell = 0; ell < b0.right_rank(); ++ell) {
    const auto kern = b0.kernel(0, ell);
    std::vector<Eigen::Triplet<double>> trips;
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j)
        if (kern(i, j) != 0.0) trips.emplace_back(i, j, kern(i, j));
    SpMat K(N, N);
    K.setFromTriplets(trips.begin(), trips.end());
    if (ell == 0)
      sys.stiff.K0 = std::move(K);
    else
      sys.stiff.K.push_back(std::move(K));
  }

  const Tensor3& fb = rhs.block(0);
  if (fb.right_rank() != 1) throw config_error("solve: right-hand side must have rank one");
  sys.stiff.f0.resize(N);
  for (int i = 0; i < N; ++i) sys.stiff.f0[i] = fb(0, i, 0);

  sys.op = std::move(op);
  sys.rhs = std::move(rhs);
  sys.precond = std::make_shared<Eigen::SimplicialLDLT<SpMat>>();
  sys.precond->compute(sys.stiff.K0);
  if (sys.precond->info() != Eigen::Success)
    throw convergence_error("solve: mean-field stiffness factorization failed");
  return sys;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// expand: random-field eigenexpansion + chaos coefficients of the transformed
// field. TT path interpolates the coefficient tensor by cross sampling;
// sparse path evaluates a total-degree set directly. Artifacts:
//   kle_basis.csv           x, y, weight, mean, v_1..v_L, g_1..g_M
//   coefficient.tt          coefficient train over the full grid (TT path)
//   coefficient_sparse.csv  alpha_1..alpha_M, c_0..c_L (sparse path)
//   expand_discrepancy.csv  per-alpha TT/sparse gap (both)
//   expand_report.csv       key, value

inline int cmd_expand(const RunConfig& c) {
  StageTimer timer("expand");
  std::filesystem::create_directories(c.out_dir);
  const FieldData fd = build_field_data(c);
  const int N = fd.mesh.node_count();
  int exit_code = 0;

  {
    CsvWriter csv(art(c, "kle_basis.csv"));
    csv.cell("x").cell("y").cell("weight").cell("mean");
    for (int l = 1; l <= c.L; ++l) csv.cell("v_" + std::to_string(l));
    for (int m = 1; m <= c.M; ++m) csv.cell("g_" + std::to_string(m));
    csv.end();
    for (int i = 0; i < N; ++i) {
      csv.cell(fd.mesh.nodes(i, 0)).cell(fd.mesh.nodes(i, 1));
      csv.cell(fd.kle.weights[i]).cell(fd.kle.mean[i]);
      for (int l = 0; l < c.L; ++l) csv.cell(fd.kle.field_modes(i, l));
      for (int m = 0; m < c.M; ++m) csv.cell(fd.kle.gauss_modes(i, m));
      csv.end();
    }
  }

  CsvWriter report(art(c, "expand_report.csv"));
  report.cell("key").cell("value");
  report.end();
  auto note = [&report](const std::string& key, const std::string& value) {
    report.cell(key).cell(value);
    report.end();
  };
  note("nodes", std::to_string(N));
  note("field_modes", std::to_string(c.L));
  note("gauss_modes", std::to_string(c.M));
  note("solution_order", std::to_string(c.p));
  note("coefficient_order", std::to_string(c.coefficient_order()));
  note("transform_order", std::to_string(c.transform_order()));
  note("transform_tail", g17(fd.phi.tail_indicator()));
  note("transform_quadrature_converged", fd.phi.quadrature_converged ? "1" : "0");
  note("gauss_spectral_clip", g17(fd.gauss_clip));

  TTTensor coeff;
  bool have_tt = false;
  if (c.path != PathChoice::Sparse) {
    CrossReport rep;
    if (c.coefficient_order() == 0) {
      // single multi-index: the train is the mean-order coefficient, rank one
      const Eigen::MatrixXd vals =
          pce_coefficients(fd.kle, fd.phi, {std::vector<int>(c.M, 0)});
      std::vector<Tensor3> blocks;
      Tensor3 b0(c.L, 1, 1);
      for (int l = 0; l < c.L; ++l) b0(l, 0, 0) = vals(0, l);
      blocks.push_back(std::move(b0));
      for (int m = 1; m < c.M; ++m) {
        Tensor3 e(1, 1, 1);
        e(0, 0, 0) = 1.0;
        blocks.push_back(std::move(e));
      }
      coeff = TTTensor(std::move(blocks));
      rep.converged = true;
      rep.evaluator_calls = 1;
      rep.max_rank = 1;
    } else {
      const TensorEvaluator ev = pce_entry_evaluator(
          fd.kle, fd.phi, std::vector<int>(c.M, c.coefficient_order()));
      CrossOptions copt;
      copt.eps = c.cross_eps;
      copt.seed = c.seed;
      // Rank adaptation is downward-only, so the starting guess bounds the
      // reachable rank; start roomy and let the backward truncation settle.
      copt.initial_rank = 32;
      copt.max_sweeps = 30;
      copt.max_restarts = 3;
      // Holdout is a uniform-sample relative error and runs an order of
      // magnitude above the Frobenius level on decaying coefficient tensors,
      // and truncation on sampled supercores cuts slightly deeper than the
      // same relative threshold on the full unfolding; the internal cut
      // needs this much headroom for the interpolant to settle within ~10x
      // of the requested accuracy.
      copt.svd_safety = 0.03;
      if (c.trace) copt.trace = &std::cerr;
      coeff = block_tt_cross(ev, copt, &rep);
      if (!rep.converged) {
        std::fprintf(stderr, "[ttchaos] expand: cross interpolation unsettled after %d sweeps "
                             "(holdout %.3e); artifact written with flag\n",
                     rep.sweeps, rep.holdout_error);
        exit_code = 2;
      }
    }
    have_tt = true;
    save_tt(art(c, "coefficient.tt").string(), coeff);

    const long long stored = detail::stored_entries(coeff);
    note("evaluator_calls", std::to_string(rep.evaluator_calls));
    note("holdout_calls", std::to_string(rep.holdout_calls));
    note("coefficient_max_rank", std::to_string(coeff.max_rank()));
    note("stored_entries", std::to_string(stored));
    note("overhead_ratio",
         g17(stored > 0 ? static_cast<double>(rep.evaluator_calls) / stored : 0.0));
    note("holdout_error", g17(rep.holdout_error));
    note("cross_converged", rep.converged ? "1" : "0");

    // positivity monitor: the transformed field is positive by construction,
    // so nonpositive samples of the expanded surrogate flag truncation error
    const TTTensor kappa = build_kappa_tt(coeff, fd.kle);
    std::mt19937_64 gen(c.seed ^ 0xfe11ceULL);
    std::normal_distribution<double> nd;
    double min_sample = std::numeric_limits<double>::infinity();
    long long nonpositive = 0;
    const int samples = 1000;
    for (int s = 0; s < samples; ++s) {
      Eigen::VectorXd theta(c.M);
      for (int m = 0; m < c.M; ++m) theta[m] = std::clamp(nd(gen), -6.0, 6.0);
      const double mn = surface_eval(kappa, theta).minCoeff();
      min_sample = std::min(min_sample, mn);
      if (mn <= 0.0) ++nonpositive;
    }
    note("field_samples", std::to_string(samples));
    note("min_field_sample", g17(min_sample));
    note("nonpositive_samples", std::to_string(nonpositive));
  }

  if (c.path != PathChoice::TT) {
    const SparseIndexSet set(c.M, c.coefficient_order());
    const Eigen::MatrixXd ch = detail::sparse_channels(fd.kle, fd.phi, set);
    CsvWriter csv(art(c, "coefficient_sparse.csv"));
    for (int m = 1; m <= c.M; ++m) csv.cell("alpha_" + std::to_string(m));
    for (int l = 0; l <= c.L; ++l) csv.cell("c_" + std::to_string(l));
    csv.end();
    for (std::size_t k = 0; k < set.size(); ++k) {
      for (int a : set.at(k)) csv.cell(a);
      for (int l = 0; l <= c.L; ++l) csv.cell(ch(static_cast<Eigen::Index>(k), l));
      csv.end();
    }
    note("sparse_set_size", std::to_string(set.size()));

    if (have_tt) {
      const Eigen::MatrixXd tt_ch = coefficients_on_set(with_mean_channel(coeff), set);
      const Eigen::MatrixXd diff = tt_ch - ch;
      CsvWriter dcsv(art(c, "expand_discrepancy.csv"));
      for (int m = 1; m <= c.M; ++m) dcsv.cell("alpha_" + std::to_string(m));
      dcsv.cell("max_abs_diff");
      dcsv.end();
      for (std::size_t k = 0; k < set.size(); ++k) {
        for (int a : set.at(k)) dcsv.cell(a);
        dcsv.cell(diff.row(static_cast<Eigen::Index>(k)).cwiseAbs().maxCoeff());
        dcsv.end();
      }
      note("discrepancy_max_abs", g17(diff.cwiseAbs().maxCoeff()));
      note("discrepancy_rel",
           g17(ch.norm() > 0.0 ? diff.norm() / ch.norm() : diff.norm()));
    }
  }
  return exit_code;
}

// ---------------------------------------------------------------------------
// assemble: deterministic stiffness set + Galerkin operator. Artifacts:
//   stiffness_K<l>.mtx    per-channel stiffness, matrix market
//   operator.tto, rhs.tt  TT operator and right-hand side (TT path)
//   operator_sparse.mtx, rhs_sparse.mtx, galerkin_index.csv (sparse path)
//   operator_report.csv   key, value

inline int cmd_assemble(const RunConfig& c) {
  StageTimer timer("assemble");
  std::filesystem::create_directories(c.out_dir);
  const FieldData fd = build_field_data(c);
  const int N = fd.mesh.interior_count();

  Eigen::MatrixXd fields(fd.mesh.node_count(), c.L + 1);
  fields.col(0) = fd.kle.mean;
  fields.rightCols(c.L) = fd.kle.field_modes;
  const StiffnessSet stiff =
      build_stiffness_set(fd.mesh, fields, [](double, double) { return 1.0; });
  const HermiteTools delta(c.p);

  for (int ell = 0; ell <= c.L; ++ell)
    Eigen::saveMarket(stiff.matrix(ell),
                      art(c, "stiffness_K" + std::to_string(ell) + ".mtx").string());

  CsvWriter report(art(c, "operator_report.csv"));
  report.cell("key").cell("value");
  report.end();
  auto note = [&report](const std::string& key, const std::string& value) {
    report.cell(key).cell(value);
    report.end();
  };
  note("dof_count", std::to_string(N));
  note("field_modes", std::to_string(c.L));
  note("gauss_modes", std::to_string(c.M));
  note("solution_order", std::to_string(c.p));

  if (c.path != PathChoice::Sparse) {
    detail::require_artifact(art(c, "coefficient.tt"), "assemble", "run expand first");
    const TTTensor coeff = load_tt(art(c, "coefficient.tt").string());
    if (coeff.order() != c.M)
      throw config_error("assemble: coefficient artifact has " +
                         std::to_string(coeff.order()) + " modes, config expects " +
                         std::to_string(c.M));
    if (coeff.boundary_rank() != c.L)
      throw config_error("assemble: coefficient boundary rank " +
                         std::to_string(coeff.boundary_rank()) + " does not match L = " +
                         std::to_string(c.L));
    for (int m = 0; m < c.M; ++m)
      if (coeff.block(m).mode_size() != c.coefficient_order() + 1)
        throw config_error("assemble: coefficient was expanded at a different order; "
                           "re-run expand with the current p");

    const TTTensor kappa_param = with_mean_channel(coeff);
    const GalerkinSystemTT sys = assemble_operator_tt(stiff, kappa_param, c.p, delta);
    save_tt_operator(art(c, "operator.tto").string(), sys.op);
    save_tt(art(c, "rhs.tt").string(), sys.rhs);

    bool rank_match = true;
    for (int m = 0; m < c.M; ++m) {
      const Tensor4& ob = sys.op.block(m + 1);
      const Tensor3& kb = kappa_param.block(m);
      rank_match = rank_match && ob.left_rank() == kb.left_rank() &&
                   ob.right_rank() == kb.right_rank();
    }
    note("operator_max_rank", std::to_string(sys.op.max_rank()));
    note("coefficient_max_rank", std::to_string(kappa_param.max_rank()));
    note("rank_match", rank_match ? "1" : "0");
  }

  if (c.path != PathChoice::TT) {
    const SparseIndexSet nu_set(c.M, c.coefficient_order());
    const SparseIndexSet galerkin_set(c.M, c.p);
    const std::size_t size = static_cast<std::size_t>(N) * galerkin_set.size();
    if (size > 20000) {
      const std::string msg =
          "assemble: sparse reference size dof_count * set = " + std::to_string(N) + " * " +
          std::to_string(galerkin_set.size()) + " = " + std::to_string(size) +
          " exceeds the oracle guard of 20000";
      std::fprintf(stderr, "[ttchaos] %s\n", msg.c_str());
      throw guard_error(msg);
    }
    const Eigen::MatrixXd ch =
        detail::load_sparse_channels(art(c, "coefficient_sparse.csv"), nu_set, c.L);
    const SpMat A = assemble_operator_dense(stiff, ch, nu_set, galerkin_set, delta);
    const Eigen::VectorXd f = rhs_dense(stiff, galerkin_set);
    Eigen::saveMarket(A, art(c, "operator_sparse.mtx").string());
    Eigen::saveMarketVector(f, art(c, "rhs_sparse.mtx").string());

    CsvWriter icsv(art(c, "galerkin_index.csv"));
    icsv.cell("row");
    for (int m = 1; m <= c.M; ++m) icsv.cell("alpha_" + std::to_string(m));
    icsv.end();
    for (std::size_t k = 0; k < galerkin_set.size(); ++k) {
      icsv.cell(static_cast<long long>(k));
      for (int a : galerkin_set.at(k)) icsv.cell(a);
      icsv.end();
    }
    note("sparse_rows", std::to_string(size));
    note("sparse_nonzeros", std::to_string(A.nonZeros()));
  }
  return 0;
}

// ---------------------------------------------------------------------------
// solve: preconditioned TT iteration against the operator artifact; the
// sparse path factorizes the reference matrix directly. Artifacts:
//   solution.tt, solver_log.csv (iteration, residual, max_rank)
//   solution_sparse.mtx
//   solve_report.csv   key, value (+ TT/sparse comparison when both run)

inline int cmd_solve(const RunConfig& c) {
  StageTimer timer("solve");
  std::filesystem::create_directories(c.out_dir);
  int exit_code = 0;

  CsvWriter report(art(c, "solve_report.csv"));
  report.cell("key").cell("value");
  report.end();
  auto note = [&report](const std::string& key, const std::string& value) {
    report.cell(key).cell(value);
    report.end();
  };

  TTTensor u;
  bool have_tt = false;
  if (c.path != PathChoice::Sparse) {
    detail::require_artifact(art(c, "operator.tto"), "solve", "run assemble first");
    detail::require_artifact(art(c, "rhs.tt"), "solve", "run assemble first");
    TTOperator op = load_tt_operator(art(c, "operator.tto").string());
    TTTensor rhs = load_tt(art(c, "rhs.tt").string());
    if (op.order() != c.M + 1)
      throw config_error("solve: operator artifact has " + std::to_string(op.order() - 1) +
                         " parametric modes, config expects " + std::to_string(c.M));
    for (int m = 1; m < op.order(); ++m)
      if (op.block(m).col_size() != c.p + 1)
        throw config_error("solve: operator was assembled at a different solution order; "
                           "re-run assemble with the current p");
    const GalerkinSystemTT sys = detail::system_from_artifacts(std::move(op), std::move(rhs));

    SolveOptions sopt;
    sopt.eps = c.solver_eps;
    sopt.max_iter = c.solver_max_iter;
    sopt.trace = c.trace;
    SolveReport srep;
    u = solve_tt(sys, sopt, &srep);
    have_tt = true;
    save_tt(art(c, "solution.tt").string(), u);

    CsvWriter log(art(c, "solver_log.csv"));
    log.cell("iteration").cell("residual").cell("max_rank");
    log.end();
    for (std::size_t i = 0; i < srep.residuals.size(); ++i) {
      log.cell(static_cast<long long>(i + 1)).cell(srep.residuals[i]).cell(srep.max_ranks[i]);
      log.end();
    }
    note("iterations", std::to_string(srep.iterations));
    note("converged", srep.converged ? "1" : "0");
    note("final_residual", g17(srep.final_residual));
    note("solution_max_rank", std::to_string(u.max_rank()));
    if (!srep.converged) {
      std::fprintf(stderr, "[ttchaos] solve: residual %.3e above target %.3e after %d "
                           "iterations; artifact written with flag\n",
                   srep.final_residual, c.solver_eps, srep.iterations);
      exit_code = 2;
    }
  }

  Eigen::VectorXd usp;
  bool have_sparse = false;
  if (c.path != PathChoice::TT) {
    SpMat A;
    Eigen::VectorXd f;
    if (!Eigen::loadMarket(A, art(c, "operator_sparse.mtx").string()))
      throw config_error("solve: missing operator artifact " +
                         art(c, "operator_sparse.mtx").string());
    if (!Eigen::loadMarketVector(f, art(c, "rhs_sparse.mtx").string()))
      throw config_error("solve: missing right-hand-side artifact " +
                         art(c, "rhs_sparse.mtx").string());
    Eigen::SimplicialLDLT<SpMat> ldlt(A);
    if (ldlt.info() != Eigen::Success)
      throw convergence_error("solve: sparse reference factorization failed");
    usp = ldlt.solve(f);
    have_sparse = true;
    Eigen::saveMarketVector(usp, art(c, "solution_sparse.mtx").string());
    const double res = (A * usp - f).norm() / f.norm();
    note("sparse_rows", std::to_string(usp.size()));
    note("sparse_residual", g17(res));
  }

  if (have_tt && have_sparse) {
    const SparseIndexSet set(c.M, c.p);
    const std::size_t G = set.size();
    const int N = u.block(0).mode_size();
    if (static_cast<std::size_t>(usp.size()) != static_cast<std::size_t>(N) * G)
      throw config_error("solve: TT and sparse artifacts have mismatched sizes");
    CsvWriter comp(art(c, "solve_compare.csv"));
    for (int m = 1; m <= c.M; ++m) comp.cell("alpha_" + std::to_string(m));
    comp.cell("max_abs_diff");
    comp.end();
    double max_abs = 0.0, diff2 = 0.0, ref2 = 0.0;
    for (std::size_t k = 0; k < G; ++k) {
      const Eigen::VectorXd col = detail::solution_column(u, set.at(k));
      Eigen::VectorXd sp(N);
      for (int i = 0; i < N; ++i) sp[i] = usp[static_cast<Eigen::Index>(i * G + k)];
      const Eigen::VectorXd d = col - sp;
      const double row_max = d.cwiseAbs().maxCoeff();
      max_abs = std::max(max_abs, row_max);
      diff2 += d.squaredNorm();
      ref2 += sp.squaredNorm();
      for (int a : set.at(k)) comp.cell(a);
      comp.cell(row_max);
      comp.end();
    }
    note("compare_max_abs", g17(max_abs));
    note("compare_rel", g17(ref2 > 0.0 ? std::sqrt(diff2 / ref2) : std::sqrt(diff2)));
  }
  return exit_code;
}

// ---------------------------------------------------------------------------
// stats: statistics of the solution artifact. Artifacts (TT path):
//   mean.csv, variance.csv          x, y, value per interior node
//   covariance.csv                  i, j, value (emitted only when dofs <= 512)
//   covariance_error.csv            p, cross_eps, reference, rel_frobenius_error
//   sobol.csv                       subset, D_q, S_q
//   frequency.csv                   lo, hi, functional, node, count, total, ...
// Sparse path: mean_sparse.csv, variance_sparse.csv.

inline int cmd_stats(const RunConfig& c) {
  StageTimer timer("stats");
  std::filesystem::create_directories(c.out_dir);
  const TriMesh mesh = build_mesh(domain_from_string(c.domain), c.refinement);
  const int N = mesh.interior_count();
  int exit_code = 0;

  auto field_csv = [&](const std::string& name, const Eigen::VectorXd& v) {
    CsvWriter csv(art(c, name));
    csv.cell("x").cell("y").cell("value");
    csv.end();
    for (int i = 0; i < N; ++i) {
      const int node = mesh.interior[i];
      csv.cell(mesh.nodes(node, 0)).cell(mesh.nodes(node, 1)).cell(v[i]);
      csv.end();
    }
  };

  CsvWriter report(art(c, "stats_report.csv"));
  report.cell("key").cell("value");
  report.end();
  auto note = [&report](const std::string& key, const std::string& value) {
    report.cell(key).cell(value);
    report.end();
  };
  note("dof_count", std::to_string(N));

  if (c.path != PathChoice::Sparse) {
    detail::require_artifact(art(c, "solution.tt"), "stats", "run solve first");
    const TTTensor u = load_tt(art(c, "solution.tt").string());
    if (u.order() != c.M + 1 || u.block(0).mode_size() != N)
      throw config_error("stats: solution artifact does not match the configured problem");

    field_csv("mean.csv", mean(u));
    field_csv("variance.csv", variance(u));

    const Eigen::MatrixXd cov = covariance(u);
    if (N <= 512) {
      CsvWriter csv(art(c, "covariance.csv"));
      csv.cell("i").cell("j").cell("value");
      csv.end();
      for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
          csv.cell(i).cell(j).cell(cov(i, j));
          csv.end();
        }
      note("covariance_emitted", "1");
    } else {
      std::fprintf(stderr,
                   "[ttchaos] stats: covariance table skipped (%d dofs > 512 guard)\n", N);
      note("covariance_emitted", "0");
    }

    if (!c.reference.empty()) {
      if (std::filesystem::exists(c.reference)) {
        const TTTensor ref = load_tt(c.reference);
        if (ref.block(0).mode_size() != N)
          throw config_error("stats: reference solution lives on a different mesh");
        const Eigen::MatrixXd cov_ref = covariance(ref);
        const double den = cov_ref.norm();
        const double err = den > 0.0 ? (cov - cov_ref).norm() / den : (cov - cov_ref).norm();
        CsvWriter csv(art(c, "covariance_error.csv"));
        csv.cell("p").cell("cross_eps").cell("reference").cell("rel_frobenius_error");
        csv.end();
        csv.cell(c.p).cell(c.cross_eps).cell(c.reference).cell(err);
        csv.end();
        note("covariance_error", g17(err));
      } else {
        std::fprintf(stderr, "[ttchaos] stats: reference %s not found; "
                             "covariance-error table skipped\n", c.reference.c_str());
        note("covariance_error", "skipped");
      }
    }

    {
      CsvWriter csv(art(c, "sobol.csv"));
      csv.cell("subset").cell("D_q").cell("S_q");
      csv.end();
      for (int m = 0; m < c.M; ++m) {
        SobolSpec spec;
        spec.q = {m};
        const SobolResult s = sobol_index(u, spec);
        csv.cell(std::to_string(m + 1)).cell(s.partial_variance.sum()).cell(s.aggregate);
        csv.end();
      }
    }

    if (c.frequency.enabled) {
      SpatialFunctional f;
      if (c.frequency.functional == "point") {
        f.kind = SpatialFunctional::Point;
        f.node = c.frequency.node;
      } else {
        f.kind = SpatialFunctional::DomainMean;
      }
      const TTTensor reduced = reduce_spatial(u, f);
      const ThetaGrid grid = ThetaGrid::uniform(c.M, c.theta_count, c.theta_extent);
      CharacteristicOptions copt;
      copt.seed = c.seed;
      copt.eps = std::min(1e-6, c.cross_eps);
      const CharacteristicResult res =
          characteristic(reduced, Interval{c.frequency.lo, c.frequency.hi}, grid, copt);
      long long total = 1;
      for (int n : grid.mode_sizes()) total *= n;
      const double count = frequency(res.chi);
      CsvWriter csv(art(c, "frequency.csv"));
      csv.cell("lo").cell("hi").cell("functional").cell("node").cell("count").cell("total")
          .cell("fraction").cell("approximate").cell("misclassification").cell("max_rank");
      csv.end();
      csv.cell(c.frequency.lo).cell(c.frequency.hi).cell(c.frequency.functional)
          .cell(c.frequency.node).cell(count).cell(total)
          .cell(total > 0 ? count / static_cast<double>(total) : 0.0)
          .cell(res.approximate ? "1" : "0").cell(res.misclassification)
          .cell(res.chi.max_rank());
      csv.end();
      if (res.approximate)
        std::fprintf(stderr, "[ttchaos] stats: indicator is approximate "
                             "(misclassification %.3e)\n", res.misclassification);
    }
  }

  if (c.path != PathChoice::TT) {
    Eigen::VectorXd usp;
    if (!Eigen::loadMarketVector(usp, art(c, "solution_sparse.mtx").string()))
      throw config_error("stats: missing sparse solution artifact");
    const SparseIndexSet set(c.M, c.p);
    const std::size_t G = set.size();
    if (static_cast<std::size_t>(usp.size()) != static_cast<std::size_t>(N) * G)
      throw config_error("stats: sparse solution does not match the configured problem");
    const std::size_t zero = set.index_of(std::vector<int>(c.M, 0));
    Eigen::VectorXd mu(N), var = Eigen::VectorXd::Zero(N);
    std::vector<double> weight(G);
    for (std::size_t k = 0; k < G; ++k) {
      double w = 1.0;
      for (int a : set.at(k)) w *= detail::factorial_d(a);
      weight[k] = w;
    }
    for (int i = 0; i < N; ++i) {
      mu[i] = usp[static_cast<Eigen::Index>(i * G + zero)];
      for (std::size_t k = 0; k < G; ++k) {
        if (k == zero) continue;
        const double v = usp[static_cast<Eigen::Index>(i * G + k)];
        var[i] += weight[k] * v * v;
      }
    }
    field_csv("mean_sparse.csv", mu);
    field_csv("variance_sparse.csv", var);
  }
  return exit_code;
}

inline int cmd_run(const RunConfig& c) {
  int worst = 0;
  worst = std::max(worst, cmd_expand(c));
  worst = std::max(worst, cmd_assemble(c));
  worst = std::max(worst, cmd_solve(c));
  worst = std::max(worst, cmd_stats(c));
  return worst;
}

// Maps failures onto the documented exit codes; invalid_argument counts as a
// configuration error since it only reaches here through user-facing input.
template <typename F>
inline int guarded(F&& fn) {
  try {
    return fn();
  } catch (const config_error& e) {
    std::fprintf(stderr, "[ttchaos] config error: %s\n", e.what());
    return 4;
  } catch (const guard_error& e) {
    std::fprintf(stderr, "[ttchaos] guard refusal: %s\n", e.what());
    return 3;
  } catch (const convergence_error& e) {
    std::fprintf(stderr, "[ttchaos] non-convergence: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "[ttchaos] config error: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "[ttchaos] error: %s\n", e.what());
    return 1;
  }
}

}  // namespace pipeline
}  // namespace ttchaos
