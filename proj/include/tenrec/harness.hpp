#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tenrec/solvers.hpp"
#include "tenrec/synthgen.hpp"
#include "tenrec/weighting.hpp"

namespace tenrec {

/// Tensor shape and Tucker ranks of one synthetic family. Seeds come from
/// the grid, so TuckerSpec::seed is not used here.
struct GridTensorSpec {
    Shape shape;
    std::vector<std::size_t> ranks;
};

/// One observation setting, the (missing_rate, sigma_n) pair of a figure panel.
struct GridPanel {
    double missing_rate = 0.0;
    double sigma_n = 0.0;

    friend bool operator==(const GridPanel&, const GridPanel&) = default;
};

/// The sweep. For each tensor spec, observation setting and replicate a
/// single instance is drawn (seed base_seed + replicate for both the tensor
/// and the observation), and every cell runs on that same instance.
struct ExperimentGrid {
    std::vector<GridTensorSpec> tensor_specs;
    std::vector<GridPanel> obs_specs;
    std::vector<double> alphas;
    std::vector<double> ps;
    std::vector<WeightScheme> schemes;
    /// Rank-constrained cells. Absolute per-mode rank vectors take precedence;
    /// otherwise each offset d yields ranks (r_m + d) of every spec.
    std::vector<std::vector<std::size_t>> rc_ranks;
    std::vector<int> rc_rank_offsets;
    AdmmSchedule schedule;
    std::size_t replicates = 5;
    std::uint64_t base_seed = 1;
    double weight_clamp = kDefaultWeightClamp;
    /// Overridden by the TENREC_WORKERS environment variable.
    std::size_t workers = 1;
    /// Off by default: wall_ms is then written as 0 and the CSV is a pure
    /// function of the grid.
    bool record_timing = false;

    void validate() const;
    /// RC rank vectors used for one tensor spec.
    std::vector<std::vector<std::size_t>> rc_ranks_for(const GridTensorSpec& spec) const;
    /// Number of records run_grid produces.
    std::size_t record_count() const;
};

/// alpha in [1, 4] step 0.25.
std::vector<double> default_alphas();
/// {1/2, 2/3, 1}
std::vector<double> default_ps();
/// Missing rate {0.4, 0.8} x sigma_n {0, 1}, in figure order (a)-(d).
std::vector<GridPanel> default_panels();

/// The four figure families: 40^3 ranks 4 and 5, 16^4 ranks 2 and 3.
ExperimentGrid paper_grid();
/// paper_grid restricted to one tensor family.
ExperimentGrid paper_grid(const GridTensorSpec& spec);

ExperimentGrid parse_grid_json(const std::string& text);
ExperimentGrid load_grid(const std::filesystem::path& path);
std::string grid_to_json(const ExperimentGrid& grid);

enum class Method { Ideal, Observation, Uniform, RankConstrained };

std::string_view to_string(Method method);
Method parse_method(std::string_view text);

struct ResultRecord {
    Method method = Method::Uniform;
    std::optional<double> alpha;                     // Ideal and Observation only
    std::optional<double> p;                         // weighted methods only
    std::optional<std::vector<std::size_t>> rc_rank; // RankConstrained only
    double missing_rate = 0.0;
    double sigma_n = 0.0;
    Shape shape;
    std::vector<std::size_t> ranks;
    std::uint64_t seed = 0;
    double error = 0.0; // NaN when the solver diverged
    std::size_t iterations = 0;
    double ball_residual = 0.0;
    double wall_ms = 0.0;

    friend bool operator==(const ResultRecord&, const ResultRecord&) = default;
};

/// Runs every cell. Order: tensor spec, panel, replicate, then Ideal
/// (alpha-major, then p), Observation (same), Uniform (per p), RC (per rank
/// vector). Independent of the worker count.
std::vector<ResultRecord> run_grid(const ExperimentGrid& grid);

inline constexpr const char* kRecordsHeader =
    "scheme,alpha,p,rc_rank,missing_rate,sigma_n,shape,ranks,seed,error,iterations,ball_residual,wall_ms";

void write_records_csv(std::ostream& out, const std::vector<ResultRecord>& records);
void emit_csv(const std::vector<ResultRecord>& records, const std::filesystem::path& path);
std::vector<ResultRecord> read_records_csv(std::istream& in);
std::vector<ResultRecord> load_records_csv(const std::filesystem::path& path);

/// Selects one figure panel. Shape and ranks may be left empty when the
/// records hold a single tensor family.
struct FigurePanel {
    GridPanel panel;
    Shape shape;
    std::vector<std::size_t> ranks;
};

/// One legend entry: error against alpha, averaged over replicates.
struct FigureSeries {
    Method method = Method::Uniform;
    std::optional<double> p;
    std::optional<std::vector<std::size_t>> rc_rank;
    std::vector<double> alpha;
    std::vector<double> error;

    /// "Id p=1/2", "Uni p=1", "RC r=2,2,2,2"
    std::string label() const;
    /// File-name friendly label: "id_p1-2", "rc_r2-2-2-2"
    std::string slug() const;
};

/// Series in legend order (Id, Obs, Uni per p, then RC per rank). The alpha
/// axis is the set of alphas in the panel's Ideal/Observation records;
/// Uniform and RC series are constant across it. Throws if a series lacks a
/// replicate at some alpha.
std::vector<FigureSeries> figure_series(const std::vector<ResultRecord>& records, const FigurePanel& panel);

/// Writes <dir>/<prefix>_<slug>.csv per series (alpha,error) and a wide
/// <dir>/<prefix>_panel.csv. Returns the files written.
std::vector<std::filesystem::path> emit_figure_data(const std::vector<ResultRecord>& records,
                                                    const FigurePanel& panel, const std::filesystem::path& dir,
                                                    const std::string& prefix);

/// "1/2", "2/3" and "1" for those values, shortest decimal otherwise.
std::string p_label(double p);
/// Accepts a number or "a/b".
double parse_p(const std::string& text);

} // namespace tenrec
