#include "tenrec/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>
#include <utility>

#include <Eigen/Core>

#include "tenrec/mode_spectral.hpp"
#include "tenrec/tensor_io.hpp"

namespace tenrec {

namespace {

void require_consistent(const SolverState& state, const ObservationMask& mask)
{
    const Shape& shape = mask.shape();
    require_same_shape(state.X.shape(), shape, "solver state X");
    require_same_shape(state.Y2.shape(), shape, "solver state Y2");
    require_same_shape(state.Z2.shape(), shape, "solver state Z2");
    if (state.Y1.size() != shape.size() || state.Z1.size() != shape.size())
        throw std::invalid_argument("solver state: one Y1/Z1 entry per mode required");
    for (std::size_t m = 0; m < shape.size(); ++m) {
        require_same_shape(state.Y1[m].shape(), shape, "solver state Y1");
        require_same_shape(state.Z1[m].shape(), shape, "solver state Z1");
    }
}

[[noreturn]] void diverged(std::size_t k, const char* what)
{
    throw SolverDiverged(k, std::string("iterate ") + what + " diverged at iteration " + std::to_string(k));
}

double radius_for(double sigma_n, const ObservationMask& mask)
{
    return sigma_n * std::sqrt(static_cast<double>(mask.count()));
}

std::vector<double> scaled(std::span<const double> w, double factor)
{
    std::vector<double> out(w.begin(), w.end());
    for (double& v : out)
        v *= factor;
    return out;
}

using Vec = Eigen::Map<Eigen::ArrayXd>;
using ConstVec = Eigen::Map<const Eigen::ArrayXd>;

Vec arr(DenseTensor& t) { return Vec(t.data().data(), static_cast<Eigen::Index>(t.size())); }
ConstVec arr(const DenseTensor& t) { return ConstVec(t.data().data(), static_cast<Eigen::Index>(t.size())); }

template <class Expr> bool in_bounds(const Expr& a)
{
    return a.abs().template maxCoeff<Eigen::PropagateNaN>() <= kDivergenceBound;
}

// Buffers reused across iterations of one solve.
struct Workspace {
    Eigen::ArrayXd observed; // 1 on Omega, 0 elsewhere
    DenseTensor input;
    DenseTensor next;

    explicit Workspace(const ObservationMask& mask) : input(mask.shape()), next(mask.shape())
    {
        observed.resize(static_cast<Eigen::Index>(mask.size()));
        for (std::size_t i = 0; i < mask.size(); ++i)
            observed[static_cast<Eigen::Index>(i)] = mask.observed(i) ? 1.0 : 0.0;
    }
};

// X-update in place; returns ||X^{k+1} - X^k||^2 and ||X^k||^2.
std::pair<double, double> x_step(SolverState& s, Workspace& ws)
{
    Vec sum = arr(ws.input);
    sum = arr(s.Y1[0]) - arr(s.Z1[0]);
    for (std::size_t m = 1; m < s.Y1.size(); ++m)
        sum += arr(s.Y1[m]) - arr(s.Z1[m]);
    const double n = static_cast<double>(s.Y1.size());
    const double two_lambda = 2.0 * s.lambda;
    Vec next = arr(ws.next);
    next = (sum + two_lambda * ws.observed * (arr(s.Y2) - arr(s.Z2))) / (n + two_lambda * ws.observed);
    if (!in_bounds(next))
        diverged(s.k + 1, "X");
    const double change = (next - arr(s.X)).square().sum();
    const double before = arr(s.X).square().sum();
    std::swap(s.X, ws.next);
    return {change, before};
}

// Per-mode split and dual steps. `spectral(m, input, out)` writes the
// mode-m map of input into out.
template <class Spectral> void y1_steps(SolverState& s, Workspace& ws, Spectral&& spectral)
{
    for (std::size_t m = 0; m < s.Y1.size(); ++m) {
        arr(ws.input) = arr(s.X) + arr(s.Z1[m]);
        spectral(m, ws.input, s.Y1[m]);
        arr(s.Z1[m]) += arr(s.X) - arr(s.Y1[m]);
        if (!in_bounds(arr(s.Y1[m])) || !in_bounds(arr(s.Z1[m])))
            diverged(s.k + 1, "Y1/Z1");
    }
}

// Dual step of the data split after Y2 is set; returns max_Omega |X - Y2|.
double z2_step(SolverState& s, const Workspace& ws)
{
    Vec gap = arr(s.Z2);
    const double primal = (ws.observed * (arr(s.X) - arr(s.Y2))).abs().maxCoeff();
    gap += ws.observed * arr(s.X) - arr(s.Y2);
    if (!in_bounds(arr(s.Y2)))
        diverged(s.k + 1, "Y2");
    if (!in_bounds(arr(s.Z2)))
        diverged(s.k + 1, "Z2");
    return primal;
}

// Ball projection of X + Z2 on Omega, pass-through elsewhere, in place.
void y2_ball_step(SolverState& s, const DenseTensor& y, const Workspace& ws, double radius)
{
    Vec y2 = arr(s.Y2);
    y2 = arr(s.X) + arr(s.Z2);
    const double dist = std::sqrt((ws.observed * (y2 - arr(y))).square().sum());
    if (dist <= radius)
        return;
    const double scale = radius / dist;
    y2 = (ws.observed != 0.0).select(arr(y) + (y2 - arr(y)) * scale, y2);
}

void y2_rc_step(SolverState& s, const DenseTensor& y, const Workspace& ws)
{
    const double two_lambda = 2.0 * s.lambda;
    Vec y2 = arr(s.Y2);
    y2 = arr(s.X) + arr(s.Z2);
    y2 = (ws.observed != 0.0).select((two_lambda * arr(y) + y2) / (two_lambda + 1.0), y2);
}

template <class Spectral, class Y2Step>
IterationReport iterate(SolverState& s, Workspace& ws, Spectral&& spectral, Y2Step&& y2_step)
{
    const bool first = s.k == 0;
    const auto [change, before] = x_step(s, ws);
    y1_steps(s, ws, spectral);
    y2_step();
    const double primal = z2_step(s, ws);
    ++s.k;

    const double top = arr(s.X).abs().maxCoeff();
    IterationReport report;
    report.primal_residual = primal / std::max(top, 1e-12);
    report.rel_change = first ? std::numeric_limits<double>::infinity()
                              : std::sqrt(change) / std::max(std::sqrt(before), 1e-12);
    return report;
}

IterationReport wtspn_step(SolverState& s, Workspace& ws, const DenseTensor& y, const WtspnSolverConfig& config,
                           double radius, std::vector<double>& scratch)
{
    const WeightSpec& weights = config.weights;
    return iterate(
        s, ws,
        [&](std::size_t m, const DenseTensor& input, DenseTensor& out) {
            const auto& w = weights.per_mode[m];
            scratch.resize(w.size());
            const double factor = s.lambda * weights.gamma[m];
            for (std::size_t i = 0; i < w.size(); ++i)
                scratch[i] = w[i] * factor;
            mode_wspn_prox_into(input, m, scratch, weights.p, out);
        },
        [&] { y2_ball_step(s, y, ws, radius); });
}

IterationReport rc_step(SolverState& s, Workspace& ws, const DenseTensor& y, const RcSolverConfig& config)
{
    return iterate(
        s, ws,
        [&](std::size_t m, const DenseTensor& input, DenseTensor& out) {
            mode_rank_truncate_into(input, m, config.target_ranks[m], out);
        },
        [&] { y2_rc_step(s, y, ws); });
}

template <class Step, class Objective>
SolverResult run_admm(const DenseTensor& y, const ObservationMask& mask, const AdmmSchedule& schedule,
                      double radius, Step&& step, Objective&& objective)
{
    require_same_shape(y.shape(), mask.shape(), "solver input");
    if (mask.count() == 0)
        throw std::invalid_argument("solver needs at least one observed entry");
    schedule.validate();

    SolverResult result;
    SolverState s = SolverState::initial(y, schedule.lambda0);
    Workspace ws(mask);
    while (s.k < schedule.max_iter) {
        s.lambda = schedule.lambda_at(s.k);
        const double lambda = s.lambda;
        result.last = step(s, ws);
        if (schedule.record_trace)
            result.trace.push_back({s.k, lambda, objective(s.X), ball_residual(s.X, y, mask, radius),
                                    result.last.rel_change, result.last.primal_residual});
        if (result.last.rel_change <= schedule.rel_tol && result.last.primal_residual <= schedule.primal_tol) {
            result.converged = true;
            break;
        }
    }
    s.lambda = schedule.lambda_at(s.k);

    result.X_hat = s.X;
    result.iterations = s.k;
    result.ball_residual = ball_residual(s.X, y, mask, radius);
    result.state = std::move(s);
    return result;
}

void validate_ranks(const Shape& shape, const std::vector<std::size_t>& ranks)
{
    if (ranks.size() != shape.size())
        throw std::invalid_argument("rank-constrained solver: need one target rank per mode");
    for (std::size_t m = 0; m < shape.size(); ++m)
        if (ranks[m] < 1 || ranks[m] > unfold_min_dim(shape, m))
            throw std::invalid_argument("rank-constrained solver: target rank " + std::to_string(ranks[m])
                                        + " invalid for mode " + std::to_string(m + 1));
}

} // namespace

void AdmmSchedule::validate() const
{
    if (!(lambda0 > 0.0) || !std::isfinite(lambda0))
        throw std::invalid_argument("lambda0 must be positive");
    if (!(decay > 0.0 && decay <= 1.0))
        throw std::invalid_argument("decay must lie in (0, 1]");
    if (max_iter == 0)
        throw std::invalid_argument("max_iter must be positive");
    if (!(rel_tol >= 0.0))
        throw std::invalid_argument("rel_tol must be nonnegative");
    if (!(primal_tol >= 0.0))
        throw std::invalid_argument("primal_tol must be nonnegative");
}

double AdmmSchedule::lambda_at(std::size_t k) const { return lambda0 * std::pow(decay, static_cast<double>(k)); }

SolverState SolverState::initial(const DenseTensor& y, double lambda0)
{
    SolverState s;
    s.X = DenseTensor(y.shape());
    s.Y1.assign(y.order(), y);
    s.Z1.assign(y.order(), DenseTensor(y.shape()));
    s.Y2 = y;
    s.Z2 = DenseTensor(y.shape());
    s.lambda = lambda0;
    return s;
}

SolverDiverged::SolverDiverged(std::size_t iteration, const std::string& what)
  : std::runtime_error(what), iteration_(iteration)
{
}

DenseTensor x_update(const SolverState& state, const ObservationMask& mask)
{
    require_consistent(state, mask);
    const Shape& shape = mask.shape();
    const double order = static_cast<double>(shape.size());

    DenseTensor numer(shape);
    for (std::size_t m = 0; m < shape.size(); ++m) {
        numer += state.Y1[m];
        numer -= state.Z1[m];
    }
    const double two_lambda = 2.0 * state.lambda;
    for (std::size_t i = 0; i < numer.size(); ++i) {
        if (mask.observed(i))
            numer[i] = (numer[i] + two_lambda * (state.Y2[i] - state.Z2[i])) / (order + two_lambda);
        else
            numer[i] /= order;
    }
    return numer;
}

DenseMatrix y1_update_wtspn(const SolverState& state, std::size_t mode, const WtspnSolverConfig& config)
{
    const auto& w = config.weights.per_mode.at(mode);
    const DenseTensor input = state.X + state.Z1.at(mode);
    const auto weights = scaled(w, state.lambda * config.weights.gamma.at(mode));
    return unfold(mode_wspn_prox(input, mode, weights, config.weights.p), mode);
}

DenseTensor y2_update_wtspn(const SolverState& state, const DenseTensor& y, const ObservationMask& mask,
                            double sigma_n)
{
    require_same_shape(y.shape(), mask.shape(), "y2_update_wtspn");
    const DenseTensor shifted = state.X + state.Z2;
    DenseTensor out = ball_project(mask_apply(shifted, mask), mask_apply(y, mask), radius_for(sigma_n, mask));
    out += mask_complement_apply(shifted, mask);
    return out;
}

DenseMatrix y1_update_rc(const SolverState& state, std::size_t mode, std::size_t rank)
{
    return unfold(mode_rank_truncate(state.X + state.Z1.at(mode), mode, rank), mode);
}

DenseTensor y2_update_rc(const SolverState& state, const DenseTensor& y, const ObservationMask& mask, double lambda)
{
    require_same_shape(y.shape(), mask.shape(), "y2_update_rc");
    if (!(lambda >= 0.0))
        throw std::invalid_argument("y2_update_rc: lambda must be nonnegative");
    DenseTensor out = state.X + state.Z2;
    const double two_lambda = 2.0 * lambda;
    for (std::size_t i = 0; i < out.size(); ++i)
        if (mask.observed(i))
            out[i] = (two_lambda * y[i] + out[i]) / (two_lambda + 1.0);
    return out;
}

IterationReport wtspn_iteration(SolverState& state, const DenseTensor& y, const ObservationMask& mask,
                                const WtspnSolverConfig& config)
{
    require_consistent(state, mask);
    require_same_shape(y.shape(), mask.shape(), "wtspn_iteration");
    Workspace ws(mask);
    std::vector<double> scratch;
    return wtspn_step(state, ws, y, config, radius_for(config.sigma_n, mask), scratch);
}

IterationReport rc_iteration(SolverState& state, const DenseTensor& y, const ObservationMask& mask,
                             const RcSolverConfig& config)
{
    require_consistent(state, mask);
    require_same_shape(y.shape(), mask.shape(), "rc_iteration");
    Workspace ws(mask);
    return rc_step(state, ws, y, config);
}

SolverResult wtspn_admm_solve(const DenseTensor& y, const ObservationMask& mask, const WtspnSolverConfig& config)
{
    config.weights.validate(y.shape());
    if (!(config.sigma_n >= 0.0) || !std::isfinite(config.sigma_n))
        throw std::invalid_argument("sigma_n must be finite and nonnegative");
    const double radius = radius_for(config.sigma_n, mask);
    std::vector<double> scratch;
    return run_admm(
        y, mask, config.schedule, radius,
        [&](SolverState& s, Workspace& ws) { return wtspn_step(s, ws, y, config, radius, scratch); },
        [&](const DenseTensor& x) { return wtspn_value(x, config.weights); });
}

SolverResult rc_admm_solve(const DenseTensor& y, const ObservationMask& mask, const RcSolverConfig& config)
{
    validate_ranks(y.shape(), config.target_ranks);
    return run_admm(
        y, mask, config.schedule, 0.0, [&](SolverState& s, Workspace& ws) { return rc_step(s, ws, y, config); },
        [&](const DenseTensor& x) {
            const double r = l2_norm(mask_apply(x, mask) - mask_apply(y, mask));
            return r * r;
        });
}

double ball_residual(const DenseTensor& x, const DenseTensor& y, const ObservationMask& mask, double radius)
{
    return std::max(l2_norm(mask_apply(x, mask) - mask_apply(y, mask)) - radius, 0.0);
}

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& trace)
{
    out << "k,lambda,objective,ball_residual,rel_change,primal_residual\n";
    for (const auto& row : trace)
        out << row.k << ',' << format_double(row.lambda) << ',' << format_double(row.objective) << ','
            << format_double(row.ball_residual) << ',' << format_double(row.rel_change) << ','
            << format_double(row.primal_residual) << '\n';
}

} // namespace tenrec
