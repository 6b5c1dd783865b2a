// tenrec: generate instances, run single solves, sweep a grid, reshape
// results into per-panel series.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tenrec/harness.hpp"
#include "tenrec/mode_spectral.hpp"
#include "tenrec/solvers.hpp"
#include "tenrec/synthgen.hpp"
#include "tenrec/tensor_io.hpp"
#include "tenrec/weighting.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace tenrec;

namespace {

std::vector<std::size_t> parse_list(const std::string& text, char sep)
{
    std::vector<std::size_t> out;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, sep)) {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(part, &used);
        if (used != part.size())
            throw std::invalid_argument("bad list entry '" + part + "'");
        out.push_back(static_cast<std::size_t>(v));
    }
    if (out.empty())
        throw std::invalid_argument("empty list '" + text + "'");
    return out;
}

struct Instance {
    json meta;
    std::optional<DenseTensor> orig;
    DenseTensor y;
    ObservationMask mask;
};

Instance load_instance(const std::string& prefix)
{
    Instance inst;
    std::ifstream meta(prefix + ".json");
    if (!meta)
        throw std::runtime_error("cannot open " + prefix + ".json");
    inst.meta = json::parse(meta);
    inst.y = load_tensor(prefix + ".obs.tnr");
    inst.mask = load_mask(prefix + ".mask.tnr");
    if (fs::exists(prefix + ".orig.tnr"))
        inst.orig = load_tensor(prefix + ".orig.tnr");
    return inst;
}

WeightSpec make_weights(const std::string& scheme, const Instance& inst, double alpha, double p, double clamp)
{
    WeightSpec w;
    switch (parse_weight_scheme(scheme)) {
    case WeightScheme::Ideal:
        if (!inst.orig)
            throw std::runtime_error("ideal weights need the original tensor (<prefix>.orig.tnr)");
        w = ideal_weights(*inst.orig, alpha, clamp);
        break;
    case WeightScheme::Observation: w = observation_weights(inst.y, inst.mask, alpha, clamp); break;
    case WeightScheme::Uniform: w = uniform_weights(inst.y.shape()); break;
    }
    w.p = p;
    return w;
}

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << text;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Low-rank tensor completion by weighted Schatten-p ADMM"};
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "Write a synthetic Tucker instance");
    std::string gen_shape, gen_ranks, gen_out;
    std::uint64_t gen_seed = 1;
    double gen_missing = 0.4, gen_sigma = 0.0;
    gen->add_option("--shape", gen_shape, "e.g. 16,16,16,16")->required();
    gen->add_option("--ranks", gen_ranks, "Tucker ranks, e.g. 2,2,2,2")->required();
    gen->add_option("--seed", gen_seed)->capture_default_str();
    gen->add_option("--missing-rate", gen_missing)->capture_default_str();
    gen->add_option("--sigma-n", gen_sigma)->capture_default_str();
    gen->add_option("--out", gen_out, "Output prefix")->required();

    // solve
    auto* solve = app.add_subcommand("solve", "Run one solver on an instance");
    std::string solve_in, solve_scheme = "uniform", solve_p = "1", solve_rank, solve_out, solve_trace;
    double solve_alpha = 1.0;
    std::optional<double> solve_sigma;
    AdmmSchedule schedule;
    double solve_clamp = kDefaultWeightClamp;
    solve->add_option("--instance", solve_in, "Instance prefix written by gen")->required();
    solve->add_option("--scheme", solve_scheme, "ideal, observation, uniform or rc")->capture_default_str();
    solve->add_option("--alpha", solve_alpha)->capture_default_str();
    solve->add_option("--p", solve_p, "Schatten exponent, number or a/b")->capture_default_str();
    solve->add_option("--rc-rank", solve_rank, "Per-mode target ranks for rc");
    solve->add_option("--sigma-n", solve_sigma, "Noise level for the ball radius (default: from the instance)");
    solve->add_option("--lambda0", schedule.lambda0)->capture_default_str();
    solve->add_option("--decay", schedule.decay)->capture_default_str();
    solve->add_option("--max-iter", schedule.max_iter)->capture_default_str();
    solve->add_option("--rel-tol", schedule.rel_tol)->capture_default_str();
    solve->add_option("--primal-tol", schedule.primal_tol)->capture_default_str();
    solve->add_option("--weight-clamp", solve_clamp)->capture_default_str();
    solve->add_option("--out", solve_out, "Write the estimate as TNR1");
    solve->add_option("--trace", solve_trace, "Write the per-iteration trace CSV");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "Run an experiment grid");
    std::string sweep_config, sweep_out;
    std::optional<std::size_t> sweep_workers;
    bool sweep_timing = false, sweep_paper = false;
    sweep->add_option("--config", sweep_config, "Grid JSON");
    sweep->add_flag("--paper", sweep_paper, "Use the built-in paper grid");
    sweep->add_option("--out", sweep_out, "Records CSV")->required();
    sweep->add_option("--workers", sweep_workers, "Worker threads (TENREC_WORKERS overrides)");
    sweep->add_flag("--timing", sweep_timing, "Record wall time per run");

    // figdata
    auto* fig = app.add_subcommand("figdata", "Per-panel series from a records CSV");
    std::string fig_records, fig_panel, fig_shape, fig_ranks, fig_dir = ".", fig_prefix = "panel";
    fig->add_option("--records", fig_records)->required();
    fig->add_option("--panel", fig_panel, "missing_rate,sigma_n")->required();
    fig->add_option("--shape", fig_shape, "e.g. 40x40x40");
    fig->add_option("--ranks", fig_ranks, "e.g. 4,4,4");
    fig->add_option("--out-dir", fig_dir)->capture_default_str();
    fig->add_option("--prefix", fig_prefix)->capture_default_str();

    // grid
    auto* grid_cmd = app.add_subcommand("grid", "Print the built-in paper grid as JSON");

    // unfold
    auto* unf = app.add_subcommand("unfold", "Export a mode unfolding as CSV");
    std::string unf_in, unf_out;
    std::size_t unf_mode = 1;
    unf->add_option("--tensor", unf_in)->required();
    unf->add_option("--mode", unf_mode, "One-based mode")->required();
    unf->add_option("--out", unf_out)->required();

    // weights
    auto* wts = app.add_subcommand("weights", "Export per-mode weights as CSV");
    std::string wts_in, wts_scheme = "ideal", wts_out;
    double wts_alpha = 1.0;
    wts->add_option("--instance", wts_in)->required();
    wts->add_option("--scheme", wts_scheme)->capture_default_str();
    wts->add_option("--alpha", wts_alpha)->capture_default_str();
    wts->add_option("--out", wts_out)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            TuckerSpec spec{parse_list(gen_shape, ','), parse_list(gen_ranks, ','), gen_seed};
            const DenseTensor x = generate_tucker(spec);
            const Observation obs = observe(x, {gen_missing, gen_sigma, gen_seed});
            save_tensor(gen_out + ".orig.tnr", x);
            save_tensor(gen_out + ".obs.tnr", obs.y);
            save_mask(gen_out + ".mask.tnr", obs.mask);
            json meta{{"shape", spec.shape},           {"ranks", spec.ranks},
                      {"seed", gen_seed},               {"missing_rate", gen_missing},
                      {"sigma_n", gen_sigma},           {"observed", obs.mask.count()},
                      {"mean_fill_error", recovery_error(mean_fill(obs.y, obs.mask), x)}};
            write_text(gen_out + ".json", meta.dump(2) + "\n");
            std::cout << gen_out << ": " << shape_to_string(spec.shape) << ", " << obs.mask.count() << " observed\n";
        } else if (solve->parsed()) {
            const Instance inst = load_instance(solve_in);
            schedule.record_trace = !solve_trace.empty();
            SolverResult result;
            json summary;
            if (solve_scheme == "rc") {
                if (solve_rank.empty())
                    throw std::invalid_argument("--rc-rank is required with --scheme rc");
                RcSolverConfig config{parse_list(solve_rank, ','), schedule};
                result = rc_admm_solve(inst.y, inst.mask, config);
                summary["rc_rank"] = config.target_ranks;
            } else {
                WtspnSolverConfig config;
                config.weights = make_weights(solve_scheme, inst, solve_alpha, parse_p(solve_p), solve_clamp);
                config.sigma_n = solve_sigma ? *solve_sigma : inst.meta.value("sigma_n", 0.0);
                config.schedule = schedule;
                result = wtspn_admm_solve(inst.y, inst.mask, config);
                summary["p"] = config.weights.p;
                summary["sigma_n"] = config.sigma_n;
                if (solve_scheme != "uniform")
                    summary["alpha"] = solve_alpha;
            }
            summary["scheme"] = solve_scheme;
            summary["iterations"] = result.iterations;
            summary["converged"] = result.converged;
            summary["ball_residual"] = result.ball_residual;
            if (inst.orig)
                summary["error"] = recovery_error(result.X_hat, *inst.orig);
            if (!solve_out.empty())
                save_tensor(solve_out, result.X_hat);
            if (!solve_trace.empty()) {
                std::ofstream out(solve_trace);
                write_trace_csv(out, result.trace);
            }
            std::cout << summary.dump() << "\n";
        } else if (sweep->parsed()) {
            if (sweep_config.empty() == !sweep_paper)
                throw std::invalid_argument("give exactly one of --config and --paper");
            ExperimentGrid grid = sweep_paper ? paper_grid() : load_grid(sweep_config);
            if (sweep_workers)
                grid.workers = *sweep_workers;
            if (sweep_timing)
                grid.record_timing = true;
            const auto records = run_grid(grid);
            emit_csv(records, sweep_out);
            std::cout << records.size() << " records -> " << sweep_out << "\n";
        } else if (fig->parsed()) {
            const auto comma = fig_panel.find(',');
            if (comma == std::string::npos)
                throw std::invalid_argument("--panel expects missing_rate,sigma_n");
            FigurePanel panel;
            panel.panel = {std::stod(fig_panel.substr(0, comma)), std::stod(fig_panel.substr(comma + 1))};
            if (!fig_shape.empty())
                panel.shape = parse_list(fig_shape, 'x');
            if (!fig_ranks.empty())
                panel.ranks = parse_list(fig_ranks, ',');
            for (const auto& path : emit_figure_data(load_records_csv(fig_records), panel, fig_dir, fig_prefix))
                std::cout << path.string() << "\n";
        } else if (grid_cmd->parsed()) {
            std::cout << grid_to_json(paper_grid());
        } else if (unf->parsed()) {
            const DenseTensor x = load_tensor(unf_in);
            if (unf_mode < 1 || unf_mode > x.order())
                throw std::invalid_argument("--mode must lie in 1.." + std::to_string(x.order()));
            std::ofstream out(unf_out);
            write_matrix_csv(out, unfold(x, unf_mode - 1));
        } else if (wts->parsed()) {
            const Instance inst = load_instance(wts_in);
            std::ofstream out(wts_out);
            write_weights_csv(out, make_weights(wts_scheme, inst, wts_alpha, 1.0, kDefaultWeightClamp));
        }
    } catch (const std::exception& e) {
        std::cerr << "tenrec: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
