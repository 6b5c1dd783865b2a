#include "tenrec/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "tenrec/tensor_io.hpp"

namespace tenrec {

namespace {

using json = nlohmann::json;

std::string join(const std::vector<std::size_t>& v, char sep)
{
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i)
            out += sep;
        out += std::to_string(v[i]);
    }
    return out;
}

std::vector<std::string> split(std::string_view text, char sep)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = text.find(sep, start);
        out.emplace_back(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos)
            return out;
        start = pos + 1;
    }
}

double parse_double(std::string_view text, const char* what)
{
    double value = 0.0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || end != text.data() + text.size() || text.empty())
        throw std::invalid_argument(std::string("bad ") + what + " '" + std::string(text) + "'");
    return value;
}

std::uint64_t parse_uint(std::string_view text, const char* what)
{
    std::uint64_t value = 0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || end != text.data() + text.size() || text.empty())
        throw std::invalid_argument(std::string("bad ") + what + " '" + std::string(text) + "'");
    return value;
}

std::vector<std::size_t> parse_index_list(std::string_view text, char sep, const char* what)
{
    std::vector<std::size_t> out;
    for (const auto& part : split(text, sep))
        out.push_back(static_cast<std::size_t>(parse_uint(part, what)));
    return out;
}

void check_rank_vector(const GridTensorSpec& spec, const std::vector<std::size_t>& ranks, const char* what)
{
    if (ranks.size() != spec.shape.size())
        throw std::invalid_argument(std::string(what) + ": " + std::to_string(ranks.size()) + " ranks for order "
                                    + std::to_string(spec.shape.size()) + " tensor " + shape_to_string(spec.shape));
    for (std::size_t m = 0; m < ranks.size(); ++m)
        if (ranks[m] < 1 || ranks[m] > unfold_min_dim(spec.shape, m))
            throw std::invalid_argument(std::string(what) + ": rank " + std::to_string(ranks[m]) + " invalid for mode "
                                        + std::to_string(m + 1) + " of " + shape_to_string(spec.shape));
}

bool has_scheme(const ExperimentGrid& grid, WeightScheme scheme)
{
    return std::find(grid.schemes.begin(), grid.schemes.end(), scheme) != grid.schemes.end();
}

std::size_t env_workers(std::size_t fallback)
{
    const char* env = std::getenv("TENREC_WORKERS");
    if (!env || !*env)
        return fallback;
    const auto n = parse_uint(env, "TENREC_WORKERS");
    if (n == 0)
        throw std::invalid_argument("TENREC_WORKERS must be positive");
    return static_cast<std::size_t>(n);
}

// ---------------------------------------------------------------------------
// cells

struct Cell {
    Method method;
    std::optional<double> alpha;
    std::optional<double> p;
    std::optional<std::vector<std::size_t>> rc_rank;
    const WeightSpec* weights = nullptr; // alpha-dependent weights before p is set
};

struct Instance {
    DenseTensor x_org;
    Observation obs;
    double sigma_n = 0.0;
};

ResultRecord run_cell(const ExperimentGrid& grid, const Instance& inst, const Cell& cell)
{
    ResultRecord rec;
    rec.method = cell.method;
    rec.alpha = cell.alpha;
    rec.p = cell.p;
    rec.rc_rank = cell.rc_rank;

    const auto start = std::chrono::steady_clock::now();
    try {
        SolverResult result;
        if (cell.method == Method::RankConstrained) {
            RcSolverConfig config;
            config.target_ranks = *cell.rc_rank;
            config.schedule = grid.schedule;
            result = rc_admm_solve(inst.obs.y, inst.obs.mask, config);
        } else {
            WtspnSolverConfig config;
            config.weights = *cell.weights;
            config.weights.p = *cell.p;
            config.sigma_n = inst.sigma_n;
            config.schedule = grid.schedule;
            result = wtspn_admm_solve(inst.obs.y, inst.obs.mask, config);
        }
        rec.error = recovery_error(result.X_hat, inst.x_org);
        rec.iterations = result.iterations;
        rec.ball_residual = result.ball_residual;
    } catch (const SolverDiverged& e) {
        rec.error = std::numeric_limits<double>::quiet_NaN();
        rec.iterations = e.iteration();
        rec.ball_residual = std::numeric_limits<double>::quiet_NaN();
    }
    if (grid.record_timing)
        rec.wall_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return rec;
}

// Runs task(i) for i in [0, count) on up to `workers` threads. The first
// exception is rethrown after all threads stop.
template <class Task> void parallel_for(std::size_t count, std::size_t workers, Task&& task)
{
    workers = std::max<std::size_t>(1, std::min(workers, count));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i)
            task(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_lock;
    auto body = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                task(i);
            } catch (...) {
                std::lock_guard lock(failure_lock);
                if (!failure)
                    failure = std::current_exception();
                next = count;
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back(body);
    for (auto& t : pool)
        t.join();
    if (failure)
        std::rethrow_exception(failure);
}

// ---------------------------------------------------------------------------
// CSV

std::string csv_field(const std::string& text)
{
    if (text.find_first_of(",\"\r\n") == std::string::npos)
        return text;
    std::string out = "\"";
    for (char c : text) {
        if (c == '"')
            out += '"';
        out += c;
    }
    return out + '"';
}

// One RFC 4180 record; returns false at end of input.
bool read_csv_row(std::istream& in, std::vector<std::string>& fields)
{
    fields.clear();
    if (in.peek() == std::char_traits<char>::eof())
        return false;
    std::string field;
    bool quoted = false;
    char c;
    while (in.get(c)) {
        if (quoted) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get(c);
                    field += '"';
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else if (c == '\n') {
            break;
        } else if (c != '\r') {
            field += c;
        }
    }
    if (quoted)
        throw std::runtime_error("records CSV: unterminated quoted field");
    fields.push_back(std::move(field));
    return true;
}

std::string optional_double(const std::optional<double>& v) { return v ? format_double(*v) : std::string{}; }

std::string method_short(Method m)
{
    switch (m) {
    case Method::Ideal: return "Id";
    case Method::Observation: return "Obs";
    case Method::Uniform: return "Uni";
    case Method::RankConstrained: return "RC";
    }
    return "?";
}

struct SeriesKey {
    Method method;
    std::optional<double> p;
    std::optional<std::vector<std::size_t>> rc_rank;

    auto tie() const { return std::tie(method, p, rc_rank); }
    friend bool operator<(const SeriesKey& a, const SeriesKey& b) { return a.tie() < b.tie(); }
};

} // namespace

// ---------------------------------------------------------------------------
// grid

std::vector<double> default_alphas()
{
    std::vector<double> out;
    for (int i = 0; i <= 12; ++i)
        out.push_back(1.0 + 0.25 * i);
    return out;
}

std::vector<double> default_ps() { return {0.5, 2.0 / 3.0, 1.0}; }

std::vector<GridPanel> default_panels() { return {{0.4, 0.0}, {0.4, 1.0}, {0.8, 0.0}, {0.8, 1.0}}; }

ExperimentGrid paper_grid()
{
    ExperimentGrid grid;
    grid.tensor_specs = {{{40, 40, 40}, {4, 4, 4}},
                         {{40, 40, 40}, {5, 5, 5}},
                         {{16, 16, 16, 16}, {2, 2, 2, 2}},
                         {{16, 16, 16, 16}, {3, 3, 3, 3}}};
    grid.obs_specs = default_panels();
    grid.alphas = default_alphas();
    grid.ps = default_ps();
    grid.schemes = {WeightScheme::Ideal, WeightScheme::Observation, WeightScheme::Uniform};
    grid.rc_rank_offsets = {-1, 0, 1, 2};
    return grid;
}

ExperimentGrid paper_grid(const GridTensorSpec& spec)
{
    ExperimentGrid grid = paper_grid();
    grid.tensor_specs = {spec};
    return grid;
}

void ExperimentGrid::validate() const
{
    if (tensor_specs.empty())
        throw std::invalid_argument("grid: tensor_specs is empty");
    if (obs_specs.empty())
        throw std::invalid_argument("grid: obs_specs is empty");
    if (schemes.empty() && rc_ranks.empty() && rc_rank_offsets.empty())
        throw std::invalid_argument("grid: no weight schemes and no rank-constrained cells");
    if (!schemes.empty() && ps.empty())
        throw std::invalid_argument("grid: ps is empty");
    if ((has_scheme(*this, WeightScheme::Ideal) || has_scheme(*this, WeightScheme::Observation)) && alphas.empty())
        throw std::invalid_argument("grid: alphas is empty");
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        if (!(alphas[i] >= 0.0) || !std::isfinite(alphas[i]))
            throw std::invalid_argument("grid: alpha must be finite and nonnegative");
        if (i && !(alphas[i] > alphas[i - 1]))
            throw std::invalid_argument("grid: alphas must be strictly ascending");
    }
    for (double p : ps)
        if (!(p > 0.0 && p <= 1.0))
            throw std::invalid_argument("grid: p must lie in (0, 1]");
    for (std::size_t i = 0; i < schemes.size(); ++i)
        for (std::size_t j = 0; j < i; ++j)
            if (schemes[i] == schemes[j])
                throw std::invalid_argument("grid: duplicate scheme " + std::string(to_string(schemes[i])));
    if (replicates < 1)
        throw std::invalid_argument("grid: replicates must be at least 1");
    if (workers < 1)
        throw std::invalid_argument("grid: workers must be at least 1");
    if (!(weight_clamp > 0.0 && weight_clamp < 1.0))
        throw std::invalid_argument("grid: weight_clamp must lie in (0, 1)");
    schedule.validate();
    for (const auto& panel : obs_specs)
        ObservationSpec{panel.missing_rate, panel.sigma_n, 0}.validate();
    for (const auto& spec : tensor_specs) {
        TuckerSpec{spec.shape, spec.ranks, 0}.validate();
        for (const auto& r : rc_ranks_for(spec))
            check_rank_vector(spec, r, "grid rc rank");
    }
}

std::vector<std::vector<std::size_t>> ExperimentGrid::rc_ranks_for(const GridTensorSpec& spec) const
{
    if (!rc_ranks.empty())
        return rc_ranks;
    std::vector<std::vector<std::size_t>> out;
    for (int d : rc_rank_offsets) {
        std::vector<std::size_t> r(spec.ranks.size());
        for (std::size_t m = 0; m < r.size(); ++m) {
            const long long v = static_cast<long long>(spec.ranks[m]) + d;
            if (v < 1)
                throw std::invalid_argument("grid: rc rank offset " + std::to_string(d) + " gives rank " + std::to_string(v)
                                            + " for " + shape_to_string(spec.shape));
            r[m] = static_cast<std::size_t>(v);
        }
        out.push_back(std::move(r));
    }
    return out;
}

std::size_t ExperimentGrid::record_count() const
{
    std::size_t total = 0;
    for (const auto& spec : tensor_specs) {
        std::size_t per = 0;
        for (auto scheme : schemes)
            per += scheme == WeightScheme::Uniform ? ps.size() : alphas.size() * ps.size();
        per += rc_ranks_for(spec).size();
        total += per * obs_specs.size() * replicates;
    }
    return total;
}

// ---------------------------------------------------------------------------
// JSON

ExperimentGrid parse_grid_json(const std::string& text)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("grid config: ") + e.what());
    }
    if (!doc.is_object())
        throw std::invalid_argument("grid config: top level must be an object");

    static const std::set<std::string> known{
        "tensor_specs", "obs_specs",  "alphas",    "ps",         "schemes",      "rc_ranks",
        "rc_rank_offsets", "lambda0", "decay",     "max_iter",   "rel_tol",      "primal_tol",
        "replicates",   "base_seed",  "weight_clamp", "workers", "record_timing"};
    for (const auto& [key, value] : doc.items())
        if (!known.count(key))
            throw std::invalid_argument("grid config: unknown key '" + key + "'");

    ExperimentGrid grid = paper_grid();
    grid.tensor_specs.clear();
    grid.obs_specs.clear();
    try {
        for (const auto& t : doc.at("tensor_specs"))
            grid.tensor_specs.push_back({t.at("shape").get<Shape>(), t.at("ranks").get<std::vector<std::size_t>>()});
        for (const auto& o : doc.at("obs_specs"))
            grid.obs_specs.push_back({o.at("missing_rate").get<double>(), o.at("sigma_n").get<double>()});
        if (doc.contains("alphas")) {
            const auto& a = doc["alphas"];
            if (a.is_object()) {
                const double start = a.at("start").get<double>();
                const double stop = a.at("stop").get<double>();
                const double step = a.at("step").get<double>();
                if (!(step > 0.0) || !(stop >= start))
                    throw std::invalid_argument("grid config: alphas range needs step > 0 and stop >= start");
                const auto n = static_cast<long long>(std::floor((stop - start) / step + 1e-9));
                grid.alphas.clear();
                for (long long i = 0; i <= n; ++i)
                    grid.alphas.push_back(start + step * static_cast<double>(i));
            } else {
                grid.alphas = a.get<std::vector<double>>();
            }
        }
        if (doc.contains("ps")) {
            grid.ps.clear();
            for (const auto& p : doc["ps"])
                grid.ps.push_back(p.is_string() ? parse_p(p.get<std::string>()) : p.get<double>());
        }
        if (doc.contains("schemes")) {
            grid.schemes.clear();
            for (const auto& s : doc["schemes"])
                grid.schemes.push_back(parse_weight_scheme(s.get<std::string>()));
        }
        if (doc.contains("rc_ranks"))
            grid.rc_ranks = doc["rc_ranks"].get<std::vector<std::vector<std::size_t>>>();
        if (doc.contains("rc_rank_offsets"))
            grid.rc_rank_offsets = doc["rc_rank_offsets"].get<std::vector<int>>();
        else if (doc.contains("rc_ranks"))
            grid.rc_rank_offsets.clear();
        grid.schedule.lambda0 = doc.value("lambda0", grid.schedule.lambda0);
        grid.schedule.decay = doc.value("decay", grid.schedule.decay);
        grid.schedule.max_iter = doc.value("max_iter", grid.schedule.max_iter);
        grid.schedule.rel_tol = doc.value("rel_tol", grid.schedule.rel_tol);
        grid.schedule.primal_tol = doc.value("primal_tol", grid.schedule.primal_tol);
        grid.replicates = doc.value("replicates", grid.replicates);
        grid.base_seed = doc.value("base_seed", grid.base_seed);
        grid.weight_clamp = doc.value("weight_clamp", grid.weight_clamp);
        grid.workers = doc.value("workers", grid.workers);
        grid.record_timing = doc.value("record_timing", grid.record_timing);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("grid config: ") + e.what());
    }
    grid.validate();
    return grid;
}

ExperimentGrid load_grid(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_grid_json(buffer.str());
}

std::string grid_to_json(const ExperimentGrid& grid)
{
    json doc;
    doc["tensor_specs"] = json::array();
    for (const auto& t : grid.tensor_specs)
        doc["tensor_specs"].push_back({{"shape", t.shape}, {"ranks", t.ranks}});
    doc["obs_specs"] = json::array();
    for (const auto& o : grid.obs_specs)
        doc["obs_specs"].push_back({{"missing_rate", o.missing_rate}, {"sigma_n", o.sigma_n}});
    doc["alphas"] = grid.alphas;
    doc["ps"] = grid.ps;
    doc["schemes"] = json::array();
    for (auto s : grid.schemes)
        doc["schemes"].push_back(std::string(to_string(s)));
    if (!grid.rc_ranks.empty())
        doc["rc_ranks"] = grid.rc_ranks;
    doc["rc_rank_offsets"] = grid.rc_rank_offsets;
    doc["lambda0"] = grid.schedule.lambda0;
    doc["decay"] = grid.schedule.decay;
    doc["max_iter"] = grid.schedule.max_iter;
    doc["rel_tol"] = grid.schedule.rel_tol;
    doc["primal_tol"] = grid.schedule.primal_tol;
    doc["replicates"] = grid.replicates;
    doc["base_seed"] = grid.base_seed;
    doc["weight_clamp"] = grid.weight_clamp;
    doc["workers"] = grid.workers;
    doc["record_timing"] = grid.record_timing;
    return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// methods

std::string_view to_string(Method method)
{
    switch (method) {
    case Method::Ideal: return "ideal";
    case Method::Observation: return "observation";
    case Method::Uniform: return "uniform";
    case Method::RankConstrained: return "rc";
    }
    return "unknown";
}

Method parse_method(std::string_view text)
{
    if (text == "rc" || text == "RC" || text == "rank-constrained")
        return Method::RankConstrained;
    switch (parse_weight_scheme(text)) {
    case WeightScheme::Ideal: return Method::Ideal;
    case WeightScheme::Observation: return Method::Observation;
    case WeightScheme::Uniform: return Method::Uniform;
    }
    throw std::invalid_argument("unknown method '" + std::string(text) + "'");
}

std::string p_label(double p)
{
    if (p == 0.5)
        return "1/2";
    if (p == 2.0 / 3.0)
        return "2/3";
    if (p == 1.0)
        return "1";
    return format_double(p);
}

double parse_p(const std::string& text)
{
    const auto slash = text.find('/');
    double value = slash == std::string::npos
                       ? parse_double(text, "p")
                       : parse_double(std::string_view(text).substr(0, slash), "p")
                             / parse_double(std::string_view(text).substr(slash + 1), "p");
    if (!(value > 0.0 && value <= 1.0))
        throw std::invalid_argument("p must lie in (0, 1], got '" + text + "'");
    return value;
}

// ---------------------------------------------------------------------------
// sweep

std::vector<ResultRecord> run_grid(const ExperimentGrid& grid)
{
    grid.validate();
    const std::size_t workers = env_workers(grid.workers);
    std::vector<ResultRecord> records;
    records.reserve(grid.record_count());

    for (const auto& spec : grid.tensor_specs) {
        const auto rc = grid.rc_ranks_for(spec);
        for (const auto& panel : grid.obs_specs) {
            for (std::size_t rep = 0; rep < grid.replicates; ++rep) {
                const std::uint64_t seed = grid.base_seed + rep;
                Instance inst;
                inst.x_org = generate_tucker({spec.shape, spec.ranks, seed});
                inst.obs = observe(inst.x_org, {panel.missing_rate, panel.sigma_n, seed});
                inst.sigma_n = panel.sigma_n;

                // Weights per alpha, shared by the p cells.
                std::vector<WeightSpec> ideal, observed;
                if (has_scheme(grid, WeightScheme::Ideal))
                    for (double a : grid.alphas)
                        ideal.push_back(ideal_weights(inst.x_org, a, grid.weight_clamp));
                if (has_scheme(grid, WeightScheme::Observation))
                    for (double a : grid.alphas)
                        observed.push_back(observation_weights(inst.obs.y, inst.obs.mask, a, grid.weight_clamp));
                const WeightSpec uniform = uniform_weights(spec.shape);

                std::vector<Cell> cells;
                auto add_alpha_cells = [&](Method method, const std::vector<WeightSpec>& weights) {
                    for (std::size_t i = 0; i < grid.alphas.size(); ++i)
                        for (double p : grid.ps)
                            cells.push_back({method, grid.alphas[i], p, std::nullopt, &weights[i]});
                };
                if (has_scheme(grid, WeightScheme::Ideal))
                    add_alpha_cells(Method::Ideal, ideal);
                if (has_scheme(grid, WeightScheme::Observation))
                    add_alpha_cells(Method::Observation, observed);
                if (has_scheme(grid, WeightScheme::Uniform))
                    for (double p : grid.ps)
                        cells.push_back({Method::Uniform, std::nullopt, p, std::nullopt, &uniform});
                for (const auto& r : rc)
                    cells.push_back({Method::RankConstrained, std::nullopt, std::nullopt, r, nullptr});

                std::vector<ResultRecord> slot(cells.size());
                parallel_for(cells.size(), workers, [&](std::size_t i) { slot[i] = run_cell(grid, inst, cells[i]); });
                for (auto& rec : slot) {
                    rec.missing_rate = panel.missing_rate;
                    rec.sigma_n = panel.sigma_n;
                    rec.shape = spec.shape;
                    rec.ranks = spec.ranks;
                    rec.seed = seed;
                    records.push_back(std::move(rec));
                }
            }
        }
    }
    return records;
}

// ---------------------------------------------------------------------------
// records CSV

void write_records_csv(std::ostream& out, const std::vector<ResultRecord>& records)
{
    out << kRecordsHeader << '\n';
    for (const auto& r : records) {
        out << to_string(r.method) << ',' << optional_double(r.alpha) << ',' << optional_double(r.p) << ','
            << (r.rc_rank ? csv_field(join(*r.rc_rank, ',')) : std::string{}) << ',' << format_double(r.missing_rate)
            << ',' << format_double(r.sigma_n) << ',' << csv_field(shape_to_string(r.shape)) << ','
            << csv_field(join(r.ranks, ',')) << ',' << r.seed << ',' << format_double(r.error) << ',' << r.iterations
            << ',' << format_double(r.ball_residual) << ',' << format_double(r.wall_ms) << '\n';
    }
}

void emit_csv(const std::vector<ResultRecord>& records, const std::filesystem::path& path)
{
    if (records.empty())
        throw std::invalid_argument("emit_csv: no records");
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    write_records_csv(out, records);
    if (!out)
        throw std::runtime_error("failed writing " + path.string());
}

std::vector<ResultRecord> read_records_csv(std::istream& in)
{
    std::vector<std::string> f;
    if (!read_csv_row(in, f))
        throw std::runtime_error("records CSV: empty input");
    std::string header;
    for (std::size_t i = 0; i < f.size(); ++i)
        header += (i ? "," : "") + f[i];
    if (header != kRecordsHeader)
        throw std::runtime_error("records CSV: unexpected header '" + header + "'");

    std::vector<ResultRecord> records;
    std::size_t line = 1;
    while (read_csv_row(in, f)) {
        ++line;
        if (f.size() == 1 && f[0].empty())
            continue;
        if (f.size() != 13)
            throw std::runtime_error("records CSV line " + std::to_string(line) + ": expected 13 fields, got "
                                     + std::to_string(f.size()));
        try {
            ResultRecord r;
            r.method = parse_method(f[0]);
            if (!f[1].empty())
                r.alpha = parse_double(f[1], "alpha");
            if (!f[2].empty())
                r.p = parse_double(f[2], "p");
            if (!f[3].empty())
                r.rc_rank = parse_index_list(f[3], ',', "rc_rank");
            r.missing_rate = parse_double(f[4], "missing_rate");
            r.sigma_n = parse_double(f[5], "sigma_n");
            r.shape = parse_index_list(f[6], 'x', "shape");
            r.ranks = parse_index_list(f[7], ',', "ranks");
            r.seed = parse_uint(f[8], "seed");
            r.error = parse_double(f[9], "error");
            r.iterations = static_cast<std::size_t>(parse_uint(f[10], "iterations"));
            r.ball_residual = parse_double(f[11], "ball_residual");
            r.wall_ms = parse_double(f[12], "wall_ms");
            records.push_back(std::move(r));
        } catch (const std::invalid_argument& e) {
            throw std::runtime_error("records CSV line " + std::to_string(line) + ": " + e.what());
        }
    }
    return records;
}

std::vector<ResultRecord> load_records_csv(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open " + path.string());
    return read_records_csv(in);
}

// ---------------------------------------------------------------------------
// figure data

std::string FigureSeries::label() const
{
    if (method == Method::RankConstrained)
        return "RC r=" + join(rc_rank.value_or(std::vector<std::size_t>{}), ',');
    return method_short(method) + " p=" + (p ? p_label(*p) : std::string("?"));
}

std::string FigureSeries::slug() const
{
    std::string out = method_short(method);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    if (method == Method::RankConstrained)
        return out + "_r" + join(rc_rank.value_or(std::vector<std::size_t>{}), '-');
    std::string p_text = p ? p_label(*p) : std::string("x");
    std::replace(p_text.begin(), p_text.end(), '/', '-');
    return out + "_p" + p_text;
}

std::vector<FigureSeries> figure_series(const std::vector<ResultRecord>& records, const FigurePanel& panel)
{
    std::vector<const ResultRecord*> rows;
    std::set<std::pair<Shape, std::vector<std::size_t>>> families;
    for (const auto& r : records) {
        if (r.missing_rate != panel.panel.missing_rate || r.sigma_n != panel.panel.sigma_n)
            continue;
        if (!panel.shape.empty() && r.shape != panel.shape)
            continue;
        if (!panel.ranks.empty() && r.ranks != panel.ranks)
            continue;
        rows.push_back(&r);
        families.insert({r.shape, r.ranks});
    }
    const std::string where = "panel missing_rate=" + format_double(panel.panel.missing_rate)
                              + " sigma_n=" + format_double(panel.panel.sigma_n);
    if (rows.empty())
        throw std::runtime_error("figure data: no records for " + where);
    if (families.size() > 1)
        throw std::runtime_error("figure data: " + where + " holds " + std::to_string(families.size())
                                 + " tensor families; select one by shape and ranks");

    std::set<std::uint64_t> seeds;
    std::set<double> alphas;
    // key -> alpha (NaN for alpha-free series) -> seed -> error
    std::map<SeriesKey, std::map<double, std::map<std::uint64_t, double>>> table;
    std::vector<std::string> problems;
    for (const auto* r : rows) {
        seeds.insert(r->seed);
        const bool alpha_based = r->method == Method::Ideal || r->method == Method::Observation;
        if (alpha_based != r->alpha.has_value()) {
            problems.push_back(std::string(to_string(r->method)) + " record with"
                               + (alpha_based ? "out" : " an") + " alpha");
            continue;
        }
        if (alpha_based)
            alphas.insert(*r->alpha);
        SeriesKey key{r->method, r->p, r->rc_rank};
        auto& cell = table[key][alpha_based ? *r->alpha : -1.0];
        if (!cell.emplace(r->seed, r->error).second)
            problems.push_back("duplicate record for seed " + std::to_string(r->seed));
    }
    if (alphas.empty())
        throw std::runtime_error("figure data: " + where + " has no ideal/observation records to define the alpha axis");

    std::vector<FigureSeries> out;
    auto mean_over = [&](const SeriesKey& key, double alpha, const std::map<std::uint64_t, double>& by_seed) {
        if (by_seed.size() != seeds.size()) {
            FigureSeries tmp{key.method, key.p, key.rc_rank, {}, {}};
            problems.push_back(tmp.label() + (alpha >= 0.0 ? " alpha=" + format_double(alpha) : std::string{}) + ": "
                               + std::to_string(by_seed.size()) + " of " + std::to_string(seeds.size())
                               + " replicates");
        }
        double sum = 0.0;
        for (const auto& [seed, err] : by_seed)
            sum += err;
        return by_seed.empty() ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(by_seed.size());
    };
    // std::map orders keys by method (legend order), then p, then rank vector.
    for (const auto& [key, by_alpha] : table) {
        FigureSeries s{key.method, key.p, key.rc_rank, {}, {}};
        const bool alpha_based = key.method == Method::Ideal || key.method == Method::Observation;
        if (alpha_based) {
            for (double a : alphas) {
                const auto it = by_alpha.find(a);
                s.alpha.push_back(a);
                s.error.push_back(mean_over(key, a, it == by_alpha.end() ? std::map<std::uint64_t, double>{}
                                                                         : it->second));
            }
        } else {
            const double value = mean_over(key, -1.0, by_alpha.begin()->second);
            for (double a : alphas) {
                s.alpha.push_back(a);
                s.error.push_back(value);
            }
        }
        out.push_back(std::move(s));
    }
    if (!problems.empty()) {
        std::string msg = "figure data: " + where + " is incomplete:";
        for (std::size_t i = 0; i < problems.size() && i < 10; ++i)
            msg += "\n  " + problems[i];
        if (problems.size() > 10)
            msg += "\n  ... " + std::to_string(problems.size() - 10) + " more";
        throw std::runtime_error(msg);
    }
    return out;
}

std::vector<std::filesystem::path> emit_figure_data(const std::vector<ResultRecord>& records,
                                                    const FigurePanel& panel, const std::filesystem::path& dir,
                                                    const std::string& prefix)
{
    const auto series = figure_series(records, panel);
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> written;
    auto open = [&](const std::string& name) {
        auto path = dir / (prefix + "_" + name + ".csv");
        std::ofstream out(path, std::ios::binary);
        if (!out)
            throw std::runtime_error("cannot open " + path.string() + " for writing");
        written.push_back(path);
        return out;
    };
    for (const auto& s : series) {
        auto out = open(s.slug());
        out << "alpha,error\n";
        for (std::size_t i = 0; i < s.alpha.size(); ++i)
            out << format_double(s.alpha[i]) << ',' << format_double(s.error[i]) << '\n';
    }
    auto wide = open("panel");
    wide << "alpha";
    for (const auto& s : series)
        wide << ',' << csv_field(s.label());
    wide << '\n';
    for (std::size_t i = 0; i < series.front().alpha.size(); ++i) {
        wide << format_double(series.front().alpha[i]);
        for (const auto& s : series)
            wide << ',' << format_double(s.error[i]);
        wide << '\n';
    }
    return written;
}

} // namespace tenrec
