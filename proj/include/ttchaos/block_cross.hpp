#pragma once

// Block cross interpolation: builds a tensor train for an L-component family
// of tensors from adaptively sampled fibers, sharing one decomposition whose
// left boundary rank enumerates the components.
//
// Sweep structure: a warm-up forward sweep only orthogonalizes the guess and
// selects nested left index sets (no evaluations); every backward sweep and
// every later forward sweep samples fibers at the current crosses, truncates
// by SVD (component index merged into columns on forward sweeps, into rows on
// backward sweeps), and re-selects pivots by maxvol. After each backward
// sweep the first block is rebuilt with the component index on its left
// boundary, giving a complete iterand.
//
// Blocks are kept in cross normal form: each one is normalized so that the
// partial chain evaluated at its own pivot tuples is the identity. The
// sampled supercore then equals the local core directly — no interface
// systems to solve, SVD truncation acts on physical values (a truncation
// threshold applied to an interface-preconditioned core would be amplified
// by the interface condition numbers on reconstruction), and maxvol sees
// orthonormal factors, which keeps pivot selection scale-free.

#include "ttchaos/errors.hpp"
#include "ttchaos/maxvol.hpp"
#include "ttchaos/tt_round.hpp"
#include "ttchaos/tt_tensor.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ttchaos {

// Batch entry oracle for a family of tensors over a shared index domain.
// eval receives a list of multi-indices and returns one row per index with
// `outputs` columns (component values).
struct TensorEvaluator {
  std::vector<int> mode_sizes;
  int outputs = 1;
  std::function<Eigen::MatrixXd(const std::vector<std::vector<int>>&)> eval;
};

struct CrossOptions {
  double eps = 1e-4;          // relative accuracy target
  double svd_safety = 0.1;    // internal truncations run at eps * svd_safety
  int max_sweeps = 10;        // hard cap on directional sweeps
  int initial_rank = 8;       // bond rank of the random starting guess
  std::uint64_t seed = 0x7101;
  int holdout_size = 1000;    // held-out sample count for error monitoring
  double maxvol_tol = 1.01;
  int maxvol_max_swaps = 200;
  int max_restarts = 2;       // rank-doubling restarts on stalls
  int rank_cap = 0;           // 0 = unlimited
  std::ostream* trace = nullptr;
};

struct CrossReport {
  int sweeps = 0;
  int restarts = 0;
  long long evaluator_calls = 0;  // construction samples only
  long long holdout_calls = 0;
  long long call_budget = 0;      // sweeps * sum_k r_{k-1} n_k r_k at peak ranks
  double holdout_error = std::numeric_limits<double>::quiet_NaN();
  double final_change = std::numeric_limits<double>::quiet_NaN();
  bool converged = false;
  bool rank_capped = false;
  int max_rank = 0;
  double max_interface_cond = 0.0;
  double max_abs_sample = 0.0;
  std::vector<int> argmax_index;
  std::vector<double> sweep_change;   // per backward sweep
  std::vector<double> sweep_holdout;  // per backward sweep
};

namespace detail {

class CrossEngine {
public:
  CrossEngine(const TensorEvaluator& ev, const CrossOptions& opt)
      : ev_(ev), opt_(opt), M_(static_cast<int>(ev.mode_sizes.size())), L_(ev.outputs) {
    if (M_ < 1) throw std::invalid_argument("block_tt_cross: evaluator has no modes");
    if (L_ < 1) throw std::invalid_argument("block_tt_cross: evaluator needs >= 1 outputs");
    for (int n : ev_.mode_sizes)
      if (n < 1) throw std::invalid_argument("block_tt_cross: bad mode size");
  }

  TTTensor run(TTTensor guess, CrossReport& rep) {
    if (guess.mode_sizes() != ev_.mode_sizes)
      throw std::invalid_argument("block_tt_cross: guess mode sizes do not match evaluator");
    if (opt_.max_sweeps < 2)
      throw std::invalid_argument("block_tt_cross: need at least 2 sweeps (warm-up + backward)");
    if (M_ == 1) return single_mode(rep);

    blocks_.assign(guess.order(), Tensor3(1, 1, 1));
    for (int k = 0; k < M_; ++k) blocks_[k] = guess.block(k);
    left_sets_.assign(M_, {});
    right_sets_.assign(M_ + 1, {});

    cap_binding_ = false;
    bool have_iterand = false;
    TTTensor prev, best;
    double best_holdout = std::numeric_limits<double>::infinity();
    int consecutive_small = 0;
    double prev_holdout = std::numeric_limits<double>::infinity();
    int stall_strikes = 0;

    forward_sweep(/*warmup=*/true, rep);
    while (rep.sweeps < opt_.max_sweeps) {
      backward_sweep(rep);
      first_pass_ = false;
      TTTensor current = assemble();
      const double nc = norm(current);
      double change = std::numeric_limits<double>::infinity();
      if (have_iterand && nc > 0) change = norm(add(current, scale(prev, -1.0))) / nc;
      if (have_iterand && nc == 0.0 && norm(prev) == 0.0) change = 0.0;  // zero tensor settled
      const double hold = holdout_error(current, rep);
      rep.sweep_change.push_back(change);
      rep.sweep_holdout.push_back(hold);
      rep.final_change = change;
      trace_line(rep, change, hold);
      if (!std::isfinite(best_holdout) || !(hold > best_holdout)) {
        best = current;
        best_holdout = hold;
      }
      prev = std::move(current);
      have_iterand = true;

      // A deeply converged holdout settles it outright; the change metric is
      // computed through inner products of nearly equal trains and cannot
      // resolve below sqrt(machine eps).
      if (hold < 0.1 * opt_.eps) {
        rep.converged = true;
        break;
      }
      // Change-based convergence alone can settle on a wrong fixed point, so
      // it additionally requires the held-out estimate to be in the right
      // ballpark. Holdout measures uniform-sample relative error, which runs
      // an order of magnitude above the Frobenius-level target on decaying
      // tensors; 10x is the accepted slack.
      const bool hold_ok = !std::isfinite(hold) || hold <= 10.0 * opt_.eps;
      if (change < opt_.eps && hold_ok) {
        if (++consecutive_small >= 2) {
          rep.converged = true;
          break;
        }
      } else {
        consecutive_small = 0;
      }

      // Stalled above target: restart from a larger random guess.
      if (std::isfinite(hold) && hold > opt_.eps && prev_holdout > opt_.eps &&
          hold > 0.7 * prev_holdout) {
        ++stall_strikes;
      } else {
        stall_strikes = 0;
      }
      prev_holdout = hold;
      if (stall_strikes >= 2 && rep.restarts < opt_.max_restarts &&
          rep.sweeps + 2 <= opt_.max_sweeps) {
        restart(rep);
        have_iterand = false;
        consecutive_small = 0;
        stall_strikes = 0;
        prev_holdout = std::numeric_limits<double>::infinity();
        continue;
      }

      if (rep.sweeps >= opt_.max_sweeps) break;
      forward_sweep(/*warmup=*/false, rep);
    }

    // A converged run returns its final iterand: it is truncated to the
    // working tolerance, whereas earlier sweeps right after a (re)start can
    // score a better holdout at untruncated guess ranks, and returning those
    // would hand downstream consumers a needlessly bloated train. Only a
    // non-converged exit falls back to the best-by-holdout iterand, where a
    // late restart may have left the loop on a worse intermediate state.
    TTTensor out;
    double out_holdout = std::numeric_limits<double>::quiet_NaN();
    if (rep.converged) {
      out = std::move(prev);
      out_holdout = rep.sweep_holdout.back();
    } else if (have_iterand && std::isfinite(best_holdout)) {
      out = std::move(best);
      out_holdout = best_holdout;
    } else if (have_iterand) {
      out = std::move(prev);
    } else {
      out = assemble();
    }
    if (std::isfinite(out_holdout)) rep.holdout_error = out_holdout;
    if (cap_binding_) rep.rank_capped = true;
    rep.max_rank = std::max(rep.max_rank, out.max_rank());
    rep.call_budget = static_cast<long long>(rep.sweeps) * peak_sweep_cost_;
    return out;
  }

private:
  // ---- evaluation ----------------------------------------------------

  Eigen::MatrixXd sample(const std::vector<std::vector<int>>& idx, CrossReport& rep) {
    Eigen::MatrixXd vals = ev_.eval(idx);
    if (vals.rows() != static_cast<Eigen::Index>(idx.size()) || vals.cols() != L_)
      throw std::runtime_error("block_tt_cross: evaluator returned wrong shape");
    rep.evaluator_calls += static_cast<long long>(idx.size());
    for (Eigen::Index i = 0; i < vals.rows(); ++i)
      for (Eigen::Index l = 0; l < vals.cols(); ++l) {
        const double v = vals(i, l);
        if (!std::isfinite(v)) {
          std::ostringstream os;
          os << "block_tt_cross: evaluator returned non-finite value at index (";
          for (std::size_t k = 0; k < idx[i].size(); ++k)
            os << idx[i][k] << (k + 1 < idx[i].size() ? "," : "");
          os << "), component " << l;
          throw std::runtime_error(os.str());
        }
        if (std::abs(v) > rep.max_abs_sample) {
          rep.max_abs_sample = std::abs(v);
          rep.argmax_index = idx[i];
        }
      }
    return vals;
  }

  // All crosses (I^{(k-1)}_s, a, J^{(k)}_t); row order s slowest, then a, then t.
  std::vector<std::vector<int>> cross_indices(int k) const {
    const int n = ev_.mode_sizes[k];
    const auto& ls = left_sets_[k];
    const auto& rs = right_sets_[k + 1];
    const std::size_t nl = std::max<std::size_t>(1, ls.size());
    const std::size_t nr = std::max<std::size_t>(1, rs.size());
    std::vector<std::vector<int>> out;
    out.reserve(nl * n * nr);
    for (std::size_t s = 0; s < nl; ++s)
      for (int a = 0; a < n; ++a)
        for (std::size_t t = 0; t < nr; ++t) {
          std::vector<int> idx;
          idx.reserve(M_);
          if (!ls.empty()) idx.insert(idx.end(), ls[s].begin(), ls[s].end());
          idx.push_back(a);
          if (!rs.empty()) idx.insert(idx.end(), rs[t].begin(), rs[t].end());
          out.push_back(std::move(idx));
        }
    return out;
  }

  // ---- pivot normalization -------------------------------------------

  struct RestartBlock {};  // thrown to request a fresh random guess

  // Normalizes a factor against its pivot submatrix S (rows or columns of the
  // factor at the maxvol selection) so the chain becomes exact interpolation:
  // identity at the pivots. Throws RestartBlock if S is numerically singular.
  Eigen::PartialPivLU<Eigen::MatrixXd> pivot_lu(const Eigen::MatrixXd& S, CrossReport& rep) {
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(S);
    const Eigen::MatrixXd& U = lu.matrixLU();
    double dmin = std::numeric_limits<double>::infinity(), dmax = 0.0;
    for (Eigen::Index i = 0; i < U.rows(); ++i) {
      const double d = std::abs(U(i, i));
      dmin = std::min(dmin, d);
      dmax = std::max(dmax, d);
    }
    if (!(dmin > dmax * 1e-15) || dmax == 0.0) throw RestartBlock{};
    const double inv_norm = lu.inverse().cwiseAbs().colwise().sum().maxCoeff();
    const double s_norm = S.cwiseAbs().colwise().sum().maxCoeff();
    const double cond = inv_norm * s_norm;
    rep.max_interface_cond = std::max(rep.max_interface_cond, cond);
    if (cond > 1e8 && opt_.trace)
      *opt_.trace << "# warning: pivot submatrix condition estimate " << cond << "\n";
    return lu;
  }

  // ---- sweeps --------------------------------------------------------

  void forward_sweep(bool warmup, CrossReport& rep) {
    for (int attempt = 0;; ++attempt) {
      try {
        forward_sweep_impl(warmup, rep);
        break;
      } catch (RestartBlock&) {
        if (attempt >= 4 || rep.restarts >= opt_.max_restarts + 2)
          throw std::runtime_error(
              "block_tt_cross: interface matrix singular after repeated restarts");
        reseed_guess(current_rank_, rep);
        warmup = true;
      }
    }
    ++rep.sweeps;
    note_sweep_cost();
  }

  void forward_sweep_impl(bool warmup, CrossReport& rep) {
    Eigen::MatrixXd carry;  // R factor carried through the warm-up QR sweep
    for (int k = 0; k < M_ - 1; ++k) {
      const int n = ev_.mode_sizes[k];
      const int rl = k == 0 ? 1 : static_cast<int>(left_sets_[k].size());
      Eigen::MatrixXd basis;  // (rl n) x rnew, orthonormal columns
      if (warmup) {
        RowMat folded;
        if (k == 0) {
          folded = blocks_[k].left_unfold();
        } else {
          RowMat rf = carry * blocks_[k].right_unfold();
          folded = Eigen::Map<const RowMat>(rf.data(), rf.rows() * blocks_[k].mode_size(),
                                            blocks_[k].right_rank());
        }
        auto [Q, R] = thin_qr(folded);
        basis = Q;
        carry = R;
      } else {
        const auto idx = cross_indices(k);
        Eigen::MatrixXd vals = sample(idx, rep);
        // vals rows are (s, a, t), columns l. Both chains are identity at
        // the current pivot tuples, so this is the local core in physical
        // scale; regroup to rows (s, a), columns (t, l), keep the left
        // factor.
        const int rr = static_cast<int>(right_sets_[k + 1].size());
        Eigen::MatrixXd U(rl * n, rr * L_);
        for (int s = 0; s < rl; ++s)
          for (int a = 0; a < n; ++a)
            for (int t = 0; t < rr; ++t)
              for (int l = 0; l < L_; ++l)
                U(s * n + a, t * L_ + l) =
                    vals((static_cast<Eigen::Index>(s) * n + a) * rr + t, l);
        basis = svd_keep_left(U, rr);
      }
      const int rnew = static_cast<int>(basis.cols());
      MaxvolInfo mi;
      std::vector<int> piv;
      try {
        piv = maxvol(basis, opt_.maxvol_tol, opt_.maxvol_max_swaps, &mi);
      } catch (std::runtime_error&) {
        throw RestartBlock{};
      }
      // Normalize so the left chain is the identity at the selected tuples.
      Eigen::MatrixXd S(rnew, rnew);
      for (int j = 0; j < rnew; ++j) S.row(j) = basis.row(piv[j]);
      auto lu = pivot_lu(Eigen::MatrixXd(S.transpose()), rep);
      Eigen::MatrixXd normalized = lu.solve(basis.transpose()).transpose();  // basis * S^{-1}
      if (warmup) carry = S * carry;  // keep the represented guess unchanged
      Tensor3 nb(rl, n, rnew);
      nb.left_unfold() = normalized;
      blocks_[k] = std::move(nb);
      left_sets_[k + 1].clear();
      for (int j = 0; j < rnew; ++j) {
        const int row = piv[j];
        std::vector<int> tup;
        if (k > 0) tup = left_sets_[k][row / n];
        tup.push_back(row % n);
        left_sets_[k + 1].push_back(std::move(tup));
      }
    }
  }

  Eigen::MatrixXd svd_keep_left(const Eigen::MatrixXd& U, int incoming_rank) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(U, Eigen::ComputeThinU | Eigen::ComputeThinV);
    // The forward supercore folds the component index into its columns, so
    // its singular spectrum measures a different unfolding family than the
    // assembled block format (component on the left boundary). Truncating to
    // tolerance in that metric can collapse bonds the backward pass needs;
    // the forward pass therefore only sheds numerically zero directions and
    // leaves all tolerance-driven rank adaptation to the backward pass.
    const int r = truncation_rank(svd.singularValues(), incoming_rank, /*to_tol=*/false);
    return svd.matrixU().leftCols(r);
  }

  int truncation_rank(const Eigen::VectorXd& sv, int incoming_rank, bool to_tol) {
    const double total = sv.squaredNorm();
    // Pivots from the warm-up are uninformed, so the first backward sweep
    // after a (re)start only sheds numerically zero directions; truncation
    // to the target tolerance starts once the crosses have settled.
    const double cut = (first_pass_ || !to_tol) ? 1e-14 : opt_.eps * opt_.svd_safety;
    const double budget = cut * cut * total;
    int rank = static_cast<int>(sv.size());
    double tail = 0.0;
    while (rank > 1) {
      const double cand = tail + sv[rank - 1] * sv[rank - 1];
      if (cand > budget) break;
      tail = cand;
      --rank;
    }
    rank = std::min(rank, std::max(1, incoming_rank));  // never grow mid-run
    if (opt_.rank_cap > 0) {
      rank = std::min(rank, opt_.rank_cap);
      // interfaces are pre-capped, so the spectrum never shows what the cap
      // cut off; running at the cap after settling is the observable signal
      if (!first_pass_ && rank == opt_.rank_cap) cap_binding_ = true;
    }
    return rank;
  }

  void backward_sweep(CrossReport& rep) {
    bool need_forward = false;
    for (int attempt = 0;; ++attempt) {
      try {
        if (need_forward) forward_sweep_impl(true, rep);
        need_forward = false;
        backward_sweep_impl(rep);
        break;
      } catch (RestartBlock&) {
        if (attempt >= 4)
          throw std::runtime_error(
              "block_tt_cross: interface matrix singular after repeated restarts");
        reseed_guess(current_rank_, rep);
        need_forward = true;
      }
    }
    ++rep.sweeps;
    note_sweep_cost();
  }

  void backward_sweep_impl(CrossReport& rep) {
    right_sets_[M_] = {};
    for (int k = M_ - 1; k >= 1; --k) {
      const auto idx = cross_indices(k);
      Eigen::MatrixXd vals = sample(idx, rep);
      const int n = ev_.mode_sizes[k];
      const int rl = static_cast<int>(left_sets_[k].size());
      const int rr = std::max<int>(1, static_cast<int>(right_sets_[k + 1].size()));
      // Rows (s, l), columns (a, t); both chains are identity at the current
      // pivot tuples, so this is the local core in physical scale.
      Eigen::MatrixXd U(static_cast<Eigen::Index>(rl) * L_, static_cast<Eigen::Index>(n) * rr);
      for (int s = 0; s < rl; ++s)
        for (int a = 0; a < n; ++a)
          for (int t = 0; t < rr; ++t)
            for (int l = 0; l < L_; ++l)
              U(static_cast<Eigen::Index>(s) * L_ + l, static_cast<Eigen::Index>(a) * rr + t) =
                  vals((static_cast<Eigen::Index>(s) * n + a) * rr + t, l);
      // SVD keeping the right factor (component index lives in the rows).
      // Rank may exceed the left tuple count: the component axis multiplies
      // the rows, and at the first bond the left set is the whole mode range
      // (the first block is rebuilt from full fibers, never pivoted), so the
      // only ceiling is the active guess rank.
      Eigen::BDCSVD<Eigen::MatrixXd> svd(U, Eigen::ComputeThinU | Eigen::ComputeThinV);
      const int rnew = truncation_rank(svd.singularValues(), current_rank_, /*to_tol=*/true);
      Eigen::MatrixXd W = svd.matrixV().leftCols(rnew).transpose();  // rnew x (n rr)
      MaxvolInfo mi;
      std::vector<int> piv;
      try {
        piv = maxvol(Eigen::MatrixXd(W.transpose()), opt_.maxvol_tol, opt_.maxvol_max_swaps,
                     &mi);
      } catch (std::runtime_error&) {
        throw RestartBlock{};
      }
      // Normalize so the right chain is the identity at the selected tuples.
      Eigen::MatrixXd C(rnew, rnew);
      for (int j = 0; j < rnew; ++j) C.col(j) = W.col(piv[j]);
      auto lu = pivot_lu(C, rep);
      Eigen::MatrixXd normalized = lu.solve(W);  // C^{-1} * W
      Tensor3 nb(rnew, n, rr);
      nb.right_unfold() = normalized;
      blocks_[k] = std::move(nb);
      right_sets_[k].clear();
      for (int j = 0; j < rnew; ++j) {
        const int col = piv[j];
        std::vector<int> tup{col / rr};
        if (!right_sets_[k + 1].empty()) {
          const auto& tail = right_sets_[k + 1][col % rr];
          tup.insert(tup.end(), tail.begin(), tail.end());
        }
        right_sets_[k].push_back(std::move(tup));
      }
    }
    rebuild_first_block(rep);
  }

  // First block carries the component index on its left boundary; built from
  // fibers over mode 1 at the level-1 right index set. The right chain is
  // identity at those tuples, so the samples are the block entries directly.
  void rebuild_first_block(CrossReport& rep) {
    const int n = ev_.mode_sizes[0];
    const int r1 = static_cast<int>(right_sets_[1].size());
    std::vector<std::vector<int>> idx;
    idx.reserve(static_cast<std::size_t>(n) * r1);
    for (int a = 0; a < n; ++a)
      for (int t = 0; t < r1; ++t) {
        std::vector<int> tup{a};
        tup.insert(tup.end(), right_sets_[1][t].begin(), right_sets_[1][t].end());
        idx.push_back(std::move(tup));
      }
    Eigen::MatrixXd vals = sample(idx, rep);  // (n*r1) x L
    Tensor3 nb(L_, n, r1);
    for (int l = 0; l < L_; ++l)
      for (int a = 0; a < n; ++a)
        for (int t = 0; t < r1; ++t) nb(l, a, t) = vals(static_cast<Eigen::Index>(a) * r1 + t, l);
    blocks_[0] = std::move(nb);
  }

  TTTensor assemble() const {
    std::vector<Tensor3> copy = blocks_;
    return TTTensor(std::move(copy));
  }

  // ---- support -------------------------------------------------------

  TTTensor single_mode(CrossReport& rep) {
    const int n = ev_.mode_sizes[0];
    std::vector<std::vector<int>> idx;
    for (int a = 0; a < n; ++a) idx.push_back({a});
    Eigen::MatrixXd vals = sample(idx, rep);
    Tensor3 b(L_, n, 1);
    for (int l = 0; l < L_; ++l)
      for (int a = 0; a < n; ++a) b(l, a, 0) = vals(a, l);
    rep.sweeps = 1;
    rep.converged = true;
    rep.max_rank = 1;
    rep.call_budget = n;
    rep.holdout_error = 0.0;
    return TTTensor({std::move(b)});
  }

  void reseed_guess(int rank, CrossReport& rep) {
    ++rep.restarts;
    current_rank_ = rank;
    first_pass_ = true;
    GaussianSampler rng(opt_.seed + 0x1000 * (rep.restarts + 1));
    TTTensor g = random_tt(ev_.mode_sizes, rank, rng);
    for (int k = 0; k < M_; ++k) blocks_[k] = g.block(k);
    left_sets_.assign(M_, {});
    // right sets survive a restart only if already built; drop them so the
    // next backward sweep re-derives everything from fresh pivots.
    right_sets_.assign(M_ + 1, {});
  }

  void restart(CrossReport& rep) {
    int rank = std::min(current_rank_ * 2, 4 * opt_.initial_rank);
    if (opt_.rank_cap > 0) {
      if (current_rank_ >= opt_.rank_cap) rep.rank_capped = true;
      rank = std::min(rank, opt_.rank_cap);
    }
    reseed_guess(rank, rep);
    forward_sweep(/*warmup=*/true, rep);
  }

  double holdout_error(const TTTensor& current, CrossReport& rep) {
    if (opt_.holdout_size <= 0) return std::numeric_limits<double>::quiet_NaN();
    if (holdout_idx_.empty()) {
      GaussianSampler rng(opt_.seed ^ 0x9E3779B97F4A7C15ull);
      holdout_idx_.resize(opt_.holdout_size);
      for (auto& tup : holdout_idx_) {
        tup.resize(M_);
        for (int k = 0; k < M_; ++k) tup[k] = rng.uniform_int(ev_.mode_sizes[k]);
      }
      holdout_vals_ = ev_.eval(holdout_idx_);
      rep.holdout_calls += static_cast<long long>(holdout_idx_.size());
    }
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < holdout_idx_.size(); ++i) {
      Eigen::VectorXd got = element(current, holdout_idx_[i]);
      for (int l = 0; l < L_; ++l) {
        const double ref = holdout_vals_(static_cast<Eigen::Index>(i), l);
        num += (got[l] - ref) * (got[l] - ref);
        den += ref * ref;
      }
    }
    if (den == 0.0) return std::sqrt(num);
    return std::sqrt(num / den);
  }

  void note_sweep_cost() {
    long long cost = 0;
    for (int k = 0; k < M_; ++k) {
      const long long rl = k == 0 ? 1 : blocks_[k].left_rank();
      cost += rl * ev_.mode_sizes[k] * blocks_[k].right_rank();
    }
    peak_sweep_cost_ = std::max(peak_sweep_cost_, cost);
  }

  void trace_line(const CrossReport& rep, double change, double hold) {
    if (!opt_.trace) return;
    int mr = 1;
    for (const auto& b : blocks_) mr = std::max(mr, b.right_rank());
    *opt_.trace << "cross,sweep=" << rep.sweeps << ",calls=" << rep.evaluator_calls
                << ",max_rank=" << mr << ",change=" << change << ",holdout=" << hold
                << ",cond=" << rep.max_interface_cond << "\n";
  }

  const TensorEvaluator& ev_;
  const CrossOptions& opt_;
  int M_, L_;
  int current_rank_ = 0;
  bool first_pass_ = true;
  bool cap_binding_ = false;  // tolerance asked for more rank than the cap

  std::vector<Tensor3> blocks_;
  std::vector<std::vector<std::vector<int>>> left_sets_;   // I^{(k)}, tuples of length k
  std::vector<std::vector<std::vector<int>>> right_sets_;  // J^{(k)}, tuples of length M-k
  std::vector<std::vector<int>> holdout_idx_;
  Eigen::MatrixXd holdout_vals_;
  long long peak_sweep_cost_ = 0;

public:
  void set_initial_rank(int r) { current_rank_ = r; }
};

}  // namespace detail

inline TTTensor block_tt_cross(const TensorEvaluator& ev, TTTensor guess,
                               const CrossOptions& opt, CrossReport* report = nullptr) {
  CrossReport local;
  CrossReport& rep = report ? *report : local;
  rep = CrossReport{};
  detail::CrossEngine engine(ev, opt);
  engine.set_initial_rank(guess.max_rank());
  return engine.run(std::move(guess), rep);
}

inline TTTensor block_tt_cross(const TensorEvaluator& ev, const CrossOptions& opt,
                               CrossReport* report = nullptr) {
  GaussianSampler rng(opt.seed);
  int rank = opt.initial_rank;
  if (opt.rank_cap > 0) rank = std::min(rank, opt.rank_cap);
  TTTensor guess = random_tt(ev.mode_sizes, rank, rng);
  return block_tt_cross(ev, std::move(guess), opt, report);
}

}  // namespace ttchaos
