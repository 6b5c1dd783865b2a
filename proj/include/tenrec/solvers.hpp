#pragma once

#include <cstddef>
#include <iosfwd>
#include <stdexcept>
#include <vector>

#include "tenrec/spectral.hpp"
#include "tenrec/tensor.hpp"

namespace tenrec {

/// Knobs shared by both ADMM loops. The penalty starts at lambda0 and is
/// multiplied by `decay` after every iteration. The loop stops after
/// max_iter iterations, or earlier once the relative change of X is at most
/// rel_tol and the primal residual (see IterationReport) is at most
/// primal_tol. A converged run therefore fits the data split to within
/// primal_tol * ||X||_inf on Omega.
struct AdmmSchedule {
    double lambda0 = 100.0;
    double decay = 0.99;
    std::size_t max_iter = 500;
    double rel_tol = 1e-7;
    double primal_tol = 1e-6;
    bool record_trace = false;

    void validate() const;
    double lambda_at(std::size_t k) const;
};

/// Weighted tensor Schatten-p minimization inside an l2 ball of radius
/// sigma_n sqrt(|Omega|) around the observations.
struct WtspnSolverConfig {
    WeightSpec weights;
    double sigma_n = 0.0;
    AdmmSchedule schedule;
};

/// Least squares on Omega subject to rank(unfold_m(X)) <= target_ranks[m].
struct RcSolverConfig {
    std::vector<std::size_t> target_ranks;
    AdmmSchedule schedule;
};

/// ADMM iterate. The per-mode split variables are stored folded back into
/// tensor layout (Y1[m] holds fold_m(Y1_m)); unfolding is an entry
/// bijection, so this is only a change of storage. Use y1_matrix / z1_matrix
/// for the matrix view.
struct SolverState {
    DenseTensor X;
    std::vector<DenseTensor> Y1;
    std::vector<DenseTensor> Z1;
    DenseTensor Y2;
    DenseTensor Z2;
    std::size_t k = 0;
    double lambda = 0.0;

    /// Y1_m = unfold_m(y), Y2 = y, duals zero, X zero until the first X-update.
    static SolverState initial(const DenseTensor& y, double lambda0);

    DenseMatrix y1_matrix(std::size_t mode) const { return unfold(Y1.at(mode), mode); }
    DenseMatrix z1_matrix(std::size_t mode) const { return unfold(Z1.at(mode), mode); }
};

struct TraceRow {
    std::size_t k = 0;
    double lambda = 0.0;
    double objective = 0.0;
    double ball_residual = 0.0;
    double rel_change = 0.0;
    double primal_residual = 0.0;
};

/// Change measures of one completed iteration.
struct IterationReport {
    /// ||X^{k+1} - X^k||_2 / max(||X^k||_2, 1e-12); infinite on the first iteration.
    double rel_change = 0.0;
    /// max_Omega |X - Y2| / max(||X||_inf, 1e-12), the residual of the data split.
    /// The per-mode splits are left out: with a decaying lambda their gap
    /// tracks (1 - decay) ||Z1_m|| and does not vanish.
    double primal_residual = 0.0;
};

struct SolverResult {
    DenseTensor X_hat;
    std::size_t iterations = 0;
    bool converged = false;
    /// max(||A_Omega(X_hat) - Y||_2 - radius, 0); radius is 0 for the rank-constrained solver.
    double ball_residual = 0.0;
    IterationReport last;
    std::vector<TraceRow> trace;
    /// Final state, kept for diagnostics.
    SolverState state;
};

class SolverDiverged : public std::runtime_error {
public:
    SolverDiverged(std::size_t iteration, const std::string& what);
    std::size_t iteration() const noexcept { return iteration_; }

private:
    std::size_t iteration_;
};

/// Magnitude beyond which an iterate counts as diverged.
inline constexpr double kDivergenceBound = 1e12;

/// Closed-form minimizer of
///   1/2 sum_m ||Y1_m - unfold_m(X) - Z1_m||^2 + lambda ||Y2 - A_Omega(X) - Z2||^2,
/// which decouples per entry:
///   X = (sum_m fold_m(Y1_m - Z1_m) + 2 lambda 1_Omega (Y2 - Z2)) / (N + 2 lambda 1_Omega).
DenseTensor x_update(const SolverState& state, const ObservationMask& mask);

/// wspn_prox(unfold_m(X) + Z1_m, lambda gamma_m w_m, p)
DenseMatrix y1_update_wtspn(const SolverState& state, std::size_t mode, const WtspnSolverConfig& config);

/// Ball projection of (X + Z2) on Omega around y, pass-through on the complement.
DenseTensor y2_update_wtspn(const SolverState& state, const DenseTensor& y, const ObservationMask& mask,
                            double sigma_n);

/// rank_truncate(unfold_m(X) + Z1_m, rank)
DenseMatrix y1_update_rc(const SolverState& state, std::size_t mode, std::size_t rank);

/// argmin_V lambda ||A_Omega(V) - y||^2 + 1/2 ||X + Z2 - V||^2, entrywise.
DenseTensor y2_update_rc(const SolverState& state, const DenseTensor& y, const ObservationMask& mask, double lambda);

/// One full iteration of the weighted Schatten-p loop: X-update, per-mode
/// prox and dual steps, ball step and dual step, then k += 1. Uses the
/// lambda stored in the state; the caller owns the schedule.
IterationReport wtspn_iteration(SolverState& state, const DenseTensor& y, const ObservationMask& mask,
                                const WtspnSolverConfig& config);

/// Same for the rank-constrained loop.
IterationReport rc_iteration(SolverState& state, const DenseTensor& y, const ObservationMask& mask,
                             const RcSolverConfig& config);

SolverResult wtspn_admm_solve(const DenseTensor& y, const ObservationMask& mask, const WtspnSolverConfig& config);

SolverResult rc_admm_solve(const DenseTensor& y, const ObservationMask& mask, const RcSolverConfig& config);

/// max(||A_Omega(x) - y||_2 - radius, 0), distance measured over Omega.
double ball_residual(const DenseTensor& x, const DenseTensor& y, const ObservationMask& mask, double radius);

/// k,lambda,objective,ball_residual,rel_change,primal_residual
void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& trace);

} // namespace tenrec
