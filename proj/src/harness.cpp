#include "gp_pathwise/harness.hpp"

#include "gp_pathwise/dynamics.hpp"
#include "gp_pathwise/metrics.hpp"
#include "gp_pathwise/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

namespace gp {

std::string to_string(Experiment experiment) {
    switch (experiment) {
        case Experiment::wasserstein: return "wasserstein";
        case Experiment::thompson: return "thompson";
        case Experiment::dynamics: return "dynamics";
    }
    return "unknown";
}

Experiment parse_experiment(const std::string& name) {
    if (name == "wasserstein") return Experiment::wasserstein;
    if (name == "thompson") return Experiment::thompson;
    if (name == "dynamics") return Experiment::dynamics;
    throw ConfigError("unknown experiment '" + name + "'");
}

// ---------------------------------------------------------------------------
// Configuration.

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return "";
    return s.substr(first, s.find_last_not_of(" \t\r") - first + 1);
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::stringstream in(value);
    std::string item;
    while (std::getline(in, item, ',')) out.push_back(trim(item));
    return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
    T value{};
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end || text.empty())
        throw ConfigError("key '" + key + "': cannot parse '" + text + "'");
    return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
    if (text == "true") return true;
    if (text == "false") return false;
    throw ConfigError("key '" + key + "': expected true or false, got '" + text + "'");
}

std::vector<Eigen::Index> parse_counts(const std::string& key, const std::string& text) {
    std::vector<Eigen::Index> out;
    for (const auto& item : split_list(text)) out.push_back(parse_number<Eigen::Index>(key, item));
    return out;
}

template <class T, class F>
std::string join(const std::vector<T>& items, F&& show) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) out += (i ? "," : "") + show(items[i]);
    return out;
}

struct Field {
    const char* key;
    std::function<void(ExperimentConfig&, const std::string&)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

template <class Member>
Field count_field(const char* key, Member member) {
    return {key,
            [=](ExperimentConfig& c, const std::string& v) { c.*member = parse_number<Eigen::Index>(key, v); },
            [=](const ExperimentConfig& c) { return format_number(c.*member); }};
}

template <class Member>
Field real_field(const char* key, Member member) {
    return {key, [=](ExperimentConfig& c, const std::string& v) { c.*member = parse_number<double>(key, v); },
            [=](const ExperimentConfig& c) { return format_number(c.*member); }};
}

template <class Member>
Field bool_field(const char* key, Member member) {
    return {key, [=](ExperimentConfig& c, const std::string& v) { c.*member = parse_bool(key, v); },
            [=](const ExperimentConfig& c) { return std::string(c.*member ? "true" : "false"); }};
}

template <class Member>
Field list_field(const char* key, Member member) {
    return {key, [=](ExperimentConfig& c, const std::string& v) { c.*member = parse_counts(key, v); },
            [=](const ExperimentConfig& c) {
                return join(c.*member, [](Eigen::Index x) { return format_number(x); });
            }};
}

const std::vector<Field>& fields() {
    static const std::vector<Field> all{
        {"experiment", [](ExperimentConfig& c, const std::string& v) { c.experiment = parse_experiment(v); },
         [](const ExperimentConfig& c) { return to_string(c.experiment); }},
        {"seed", [](ExperimentConfig& c, const std::string& v) { c.seed = parse_number<std::uint64_t>("seed", v); },
         [](const ExperimentConfig& c) { return std::to_string(c.seed); }},
        count_field("replicates", &ExperimentConfig::replicates),
        {"output_path", [](ExperimentConfig& c, const std::string& v) { c.output_path = v; },
         [](const ExperimentConfig& c) { return c.output_path; }},
        bool_field("record_timing", &ExperimentConfig::record_timing),
        bool_field("paper_scale", &ExperimentConfig::paper_scale),
        list_field("n", &ExperimentConfig::n),
        list_field("d", &ExperimentConfig::d),
        count_field("m", &ExperimentConfig::m),
        count_field("basis", &ExperimentConfig::basis),
        count_field("test_points", &ExperimentConfig::test_points),
        count_field("draws", &ExperimentConfig::draws),
        count_field("bases", &ExperimentConfig::bases),
        real_field("noise_variance", &ExperimentConfig::noise_variance),
        {"samplers",
         [](ExperimentConfig& c, const std::string& v) {
             c.samplers.clear();
             for (const auto& item : split_list(v)) {
                 try {
                     c.samplers.push_back(parse_sampler(item));
                 } catch (const std::invalid_argument&) {
                     throw ConfigError("key 'samplers': unknown sampler '" + item + "'");
                 }
             }
         },
         [](const ExperimentConfig& c) {
             return join(c.samplers, [](TSSampler s) { return to_string(s); });
         }},
        count_field("budget", &ExperimentConfig::budget),
        count_field("batch", &ExperimentConfig::batch),
        count_field("horizon", &ExperimentConfig::horizon),
        count_field("trajectories", &ExperimentConfig::trajectories),
        count_field("train_n", &ExperimentConfig::train_n),
        list_field("timing_horizons", &ExperimentConfig::timing_horizons),
        count_field("timing_trajectories", &ExperimentConfig::timing_trajectories),
        count_field("stride", &ExperimentConfig::stride),
        real_field("epsilon", &ExperimentConfig::epsilon),
    };
    return all;
}

}  // namespace

ExperimentConfig ExperimentConfig::defaults(Experiment experiment) {
    ExperimentConfig c;
    c.experiment = experiment;
    switch (experiment) {
        case Experiment::wasserstein:
            break;
        case Experiment::thompson:
            c.d = {2};
            c.basis = 64;
            break;
        case Experiment::dynamics:
            c.replicates = 1;
            c.m = 32;
            c.basis = 256;
            break;
    }
    return c;
}

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
    std::map<std::string, std::string> entries;
    std::vector<std::string> order;
    std::stringstream in(text);
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        const std::string body = trim(line.substr(0, line.find('#')));
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(number) + ": expected key = value");
        const std::string key = trim(body.substr(0, eq));
        if (entries.count(key)) throw ConfigError("line " + std::to_string(number) + ": repeated key '" + key + "'");
        entries[key] = trim(body.substr(eq + 1));
        order.push_back(key);
    }
    ExperimentConfig c = defaults(entries.count("experiment") ? parse_experiment(entries["experiment"])
                                                               : Experiment::wasserstein);
    for (const auto& key : order) c.set(key, entries[key]);
    return c;
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
    for (const auto& f : fields())
        if (key == f.key) {
            f.set(*this, value);
            return;
        }
    throw ConfigError("unknown key '" + key + "'");
}

void ExperimentConfig::apply_paper_scale() {
    paper_scale = true;
    switch (experiment) {
        case Experiment::wasserstein:
            replicates = 64;
            test_points = 1024;
            draws = 100000;
            break;
        case Experiment::thompson:
            replicates = 32;
            break;
        case Experiment::dynamics:
            train_n = 10000;
            break;
    }
}

void ExperimentConfig::validate() const {
    auto positive = [](const char* key, Eigen::Index v) {
        if (v < 1) throw ConfigError(std::string("key '") + key + "': must be at least 1");
    };
    auto positive_list = [&](const char* key, const std::vector<Eigen::Index>& v) {
        if (v.empty()) throw ConfigError(std::string("key '") + key + "': empty list");
        for (const auto x : v) positive(key, x);
    };
    positive("replicates", replicates);
    positive_list("n", n);
    positive_list("d", d);
    positive("m", m);
    positive("basis", basis);
    positive("test_points", test_points);
    positive("draws", draws);
    positive("bases", bases);
    positive("budget", budget);
    positive("batch", batch);
    positive("horizon", horizon);
    positive("trajectories", trajectories);
    positive("train_n", train_n);
    positive_list("timing_horizons", timing_horizons);
    positive("timing_trajectories", timing_trajectories);
    positive("stride", stride);
    if (draws < 2) throw ConfigError("key 'draws': need at least 2 draws for moments");
    if (bases > draws) throw ConfigError("key 'bases': exceeds draws");
    if (samplers.empty()) throw ConfigError("key 'samplers': empty list");
    if (!(noise_variance > 0.0)) throw ConfigError("key 'noise_variance': must be positive");
    if (!(epsilon > 0.0)) throw ConfigError("key 'epsilon': must be positive");
    if (output_path.empty()) throw ConfigError("key 'output_path': empty");
    if (experiment == Experiment::dynamics && m > train_n) throw ConfigError("key 'm': exceeds train_n");
}

std::string ExperimentConfig::serialize() const {
    std::string out;
    for (const auto& f : fields()) out += std::string(f.key) + " = " + f.get(*this) + "\n";
    return out;
}

std::uint64_t ExperimentConfig::hash() const {
    // The output location does not affect results.
    ExperimentConfig copy = *this;
    copy.output_path.clear();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char ch : copy.serialize()) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// ---------------------------------------------------------------------------
// Tables.

void Table::add_row(std::vector<std::string> row) {
    if (row.size() != columns.size()) throw DimensionError("table '" + name + "': row width differs from header");
    rows.push_back(std::move(row));
}

std::string format_number(double value) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

std::string format_number(Eigen::Index value) { return std::to_string(value); }

namespace {

std::string hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string csv_cell(const std::string& cell) {
    if (cell.find_first_of(",\"\n") == std::string::npos) return cell;
    std::string out = "\"";
    for (const char ch : cell) out += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return out + "\"";
}

}  // namespace

std::string to_csv(const Table& table, std::uint64_t config_hash) {
    std::string out = "# config_hash=" + hex(config_hash) + " table=" + table.name + "\n";
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + csv_cell(cells[i]);
        out += "\n";
    };
    line(table.columns);
    for (const auto& row : table.rows) line(row);
    return out;
}

std::string to_json(const Table& table, std::uint64_t config_hash) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : table.rows) {
        nlohmann::json obj = nlohmann::json::object();
        for (std::size_t i = 0; i < row.size(); ++i) obj[table.columns[i]] = row[i];
        rows.push_back(std::move(obj));
    }
    nlohmann::json doc{{"config_hash", hex(config_hash)}, {"table", table.name}, {"rows", std::move(rows)}};
    return doc.dump(1) + "\n";
}

std::vector<std::filesystem::path> write_tables(const std::vector<Table>& tables, const ExperimentConfig& cfg,
                                                const std::filesystem::path& dir, bool json) {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> written;
    const std::uint64_t h = cfg.hash();
    auto write = [&](const std::filesystem::path& path, const std::string& text) {
        std::ofstream out(path, std::ios::binary);
        out << text;
        if (!out) throw std::runtime_error("cannot write " + path.string());
        written.push_back(path);
    };
    for (const auto& t : tables) {
        const std::string stem = to_string(cfg.experiment) + "_" + t.name;
        write(dir / (stem + ".csv"), to_csv(t, h));
        if (json) write(dir / (stem + ".json"), to_json(t, h));
    }
    return written;
}

// ---------------------------------------------------------------------------
// Experiments.

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

Dataset prior_dataset(const Kernel& k, Eigen::Index n, double noise, Rng& rng) {
    Dataset data{uniform_points(n, k.dim(), rng), Vector(), noise};
    Matrix K = gram(k, data.X);
    K.diagonal().array() += noise;
    data.y = cholesky_jittered(K).matrix * standard_normal(n, rng);
    return data;
}

/// Moments of `draws` samples in `blocks` groups, each drawn in chunks by a
/// fresh sampler from make(). Averaging over independent Fourier bases shrinks the
/// fixed covariance error of any single basis.
GaussianMoments blocked_moments(Eigen::Index dim, Eigen::Index draws, Eigen::Index blocks,
                                const std::function<std::function<Matrix(Eigen::Index)>()>& make) {
    constexpr Eigen::Index chunk = 2048;
    MomentAccumulator acc(dim);
    for (Eigen::Index b = 0; b < blocks; ++b) {
        const auto sample = make();
        const Eigen::Index size = draws / blocks + (b < draws % blocks ? 1 : 0);
        for (Eigen::Index done = 0; done < size; done += chunk) acc.add(sample(std::min(chunk, size - done)));
    }
    return acc.moments();
}

GaussianMoments chunked_moments(Eigen::Index dim, Eigen::Index draws,
                                const std::function<Matrix(Eigen::Index)>& sample) {
    return blocked_moments(dim, draws, 1, [&] { return sample; });
}

/// Linear-interpolation quantile of an unsorted sample.
double quantile(std::vector<double> v, double p) {
    std::sort(v.begin(), v.end());
    const double pos = p * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

std::vector<Table> run_wasserstein_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    struct Task {
        Eigen::Index d, n, replicate;
    };
    std::vector<Task> tasks;
    for (const auto d : cfg.d)
        for (const auto n : cfg.n)
            for (Eigen::Index r = 0; r < cfg.replicates; ++r) tasks.push_back({d, n, r});

    const std::vector<std::string> names{"exact", "sparse", "weight_space", "decoupled_sparse", "decoupled_exact"};
    std::vector<std::vector<std::pair<double, double>>> results(tasks.size());  // (w2, seconds) per sampler
    std::vector<std::vector<Eigen::Index>> sizes(tasks.size());
    parallel_for(tasks.size(), [&](std::size_t j) {
        const Task& task = tasks[j];
        Rng rng = make_stream(cfg.seed, j);
        const Kernel k = Kernel::isotropic(1.0, std::sqrt(static_cast<double>(task.d) / 100.0), task.d);
        const Dataset data = prior_dataset(k, task.n, cfg.noise_variance, rng);
        const PointSet Xs = uniform_points(cfg.test_points, task.d, rng);
        const GaussianMoments target = ExactPosterior(k, data).moments(Xs);
        const Eigen::Index m = std::min(task.n, cfg.m);
        const InducingModel q = optimal_inducing(k, data, data.X.topRows(m));
        const Eigen::Index star = cfg.test_points;

        auto timed = [&](const std::function<GaussianMoments()>& run) {
            const auto start = Clock::now();
            const double w2 = w2_gaussian(run(), target);
            return std::make_pair(w2, seconds_since(start));
        };
        auto& out = results[j];
        // Basis sizes: canonical functions plus Fourier features, b = m + l.
        sizes[j] = {task.n, m, task.n + cfg.basis, m + cfg.basis, task.n + cfg.basis};
        out.push_back(timed([&] {
            return chunked_moments(star, cfg.draws, [&](Eigen::Index c) { return location_scale_sample(target, c, rng); });
        }));
        out.push_back(timed([&] {
            const GaussianMoments g = sparse_posterior(q, Xs);
            const Matrix L = cholesky_jittered(g.cov).matrix;
            return chunked_moments(star, cfg.draws, [&](Eigen::Index c) {
                Matrix f = (L * standard_normal(star, c, rng)).transpose();
                f.rowwise() += g.mean.transpose();
                return f;
            });
        }));
        out.push_back(timed([&] {
            return blocked_moments(star, cfg.draws, cfg.bases, [&]() -> std::function<Matrix(Eigen::Index)> {
                const FourierBasis basis = build_basis(k, task.n + cfg.basis, rng);
                const GaussianMoments w = weight_posterior(basis, data);
                const Matrix Phi = features(basis, Xs);
                Vector mean = Phi * w.mean;
                Matrix PL = Phi * cholesky_jittered(w.cov).matrix;
                return [&rng, mean = std::move(mean), PL = std::move(PL)](Eigen::Index c) {
                    Matrix f = (PL * standard_normal(PL.cols(), c, rng)).transpose();
                    f.rowwise() += mean.transpose();
                    return f;
                };
            });
        }));
        out.push_back(timed([&] {
            const DecoupledSparseSampler sampler(q);
            return blocked_moments(star, cfg.draws, cfg.bases, [&]() -> std::function<Matrix(Eigen::Index)> {
                return [&, basis = build_basis(k, cfg.basis, rng)](Eigen::Index c) {
                    return sampler.draw_values(basis, Xs, c, rng);
                };
            });
        }));
        out.push_back(timed([&] {
            const DecoupledExactSampler sampler(k, data);
            return blocked_moments(star, cfg.draws, cfg.bases, [&]() -> std::function<Matrix(Eigen::Index)> {
                return [&, basis = build_basis(k, cfg.basis, rng)](Eigen::Index c) {
                    return sampler.draw_values(basis, Xs, c, rng);
                };
            });
        }));
    });

    Table t{"w2", {"d", "n", "replicate", "sampler", "basis_total", "w2"}, {}};
    if (cfg.record_timing) t.columns.push_back("seconds");
    for (std::size_t j = 0; j < tasks.size(); ++j)
        for (std::size_t s = 0; s < names.size(); ++s) {
            std::vector<std::string> row{format_number(tasks[j].d), format_number(tasks[j].n),
                                         format_number(tasks[j].replicate), names[s], format_number(sizes[j][s]),
                                         format_number(results[j][s].first)};
            if (cfg.record_timing) row.push_back(format_number(results[j][s].second));
            t.add_row(std::move(row));
        }
    return {t};
}

std::vector<Table> run_thompson_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    struct Task {
        Eigen::Index d, replicate;
    };
    std::vector<Task> tasks;
    for (const auto d : cfg.d)
        for (Eigen::Index r = 0; r < cfg.replicates; ++r) tasks.push_back({d, r});

    struct Outcome {
        std::vector<TSTrace> traces;
        double minimum = 0.0;
    };
    std::vector<Outcome> outcomes(tasks.size());
    parallel_for(tasks.size(), [&](std::size_t j) {
        const Task& task = tasks[j];
        const std::uint64_t task_seed = stream_seed(cfg.seed, j);
        Rng objective_rng = make_stream(task_seed, 0);
        TSConfig base = cfg.paper_scale ? TSConfig::paper(TSSampler::decoupled, task.d)
                                        : TSConfig::desk(TSSampler::decoupled, task.d);
        const TestObjective objective = sample_test_objective(base.kernel(), task.d, objective_rng);
        Outcome& out = outcomes[j];
        // Every sampler faces the same objective; the reference minimum is the
        // better of the estimate and anything a sampler evaluated.
        out.minimum = objective.minimum;
        for (std::size_t s = 0; s < cfg.samplers.size(); ++s) {
            TSConfig ts = cfg.paper_scale ? TSConfig::paper(cfg.samplers[s], task.d)
                                          : TSConfig::desk(cfg.samplers[s], task.d);
            ts.budget = cfg.budget;
            ts.batch = cfg.batch;
            ts.basis_size = cfg.basis;
            ts.noise_variance = cfg.noise_variance;
            Rng rng = make_stream(task_seed, s + 1);
            out.traces.push_back(run_ts([&](const Vector& x) { return objective(x); }, ts, rng));
            for (const auto& it : out.traces.back().iterations) out.minimum = std::min(out.minimum, it.values.minCoeff());
        }
    });

    Table t{"regret", {"d", "replicate", "sampler", "iteration", "evaluations", "incumbent", "minimum", "regret"}, {}};
    if (cfg.record_timing) t.columns.push_back("seconds");
    for (std::size_t j = 0; j < tasks.size(); ++j)
        for (std::size_t s = 0; s < cfg.samplers.size(); ++s) {
            Eigen::Index evaluations = 0;
            const auto& iterations = outcomes[j].traces[s].iterations;
            for (std::size_t i = 0; i < iterations.size(); ++i) {
                evaluations += iterations[i].points.rows();
                std::vector<std::string> row{format_number(tasks[j].d),
                                             format_number(tasks[j].replicate),
                                             to_string(cfg.samplers[s]),
                                             format_number(static_cast<Eigen::Index>(i)),
                                             format_number(evaluations),
                                             format_number(iterations[i].incumbent),
                                             format_number(outcomes[j].minimum),
                                             format_number(iterations[i].incumbent - outcomes[j].minimum)};
                if (cfg.record_timing) row.push_back(format_number(iterations[i].seconds));
                t.add_row(std::move(row));
            }
        }
    return {t};
}

std::vector<Table> run_dynamics_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    Table model_table{"model",
                      {"replicate", "coordinate", "amplitude", "lengthscale_v", "lengthscale_w", "lengthscale_c",
                       "noise_variance", "bound", "refactorizations"},
                      {}};
    Table voltage{"voltage", {"replicate", "step", "method", "median", "q25", "q75"}, {}};
    Table distance{"distance",
                   {"replicate", "step", "noise_floor", "decoupled", "iterative", "decoupled_vs_iterative"},
                   {}};
    Table timing{"timing", {"replicate", "method", "horizon", "trajectories", "seconds"}, {}};
    TransportPlanConfig plan;
    plan.epsilon = cfg.epsilon;
    plan.tolerance = 1e-4;

    for (Eigen::Index r = 0; r < cfg.replicates; ++r) {
        Rng rng = make_stream(cfg.seed, static_cast<std::uint64_t>(r));
        const SdeConfig sde = SdeConfig::standard(cfg.horizon);
        const Vector s0 = fhn_equilibrium(0.0);
        const StateBox box = StateBox::from_ensemble(simulate_truth(s0, sde, 64, rng));
        const auto data = generate_training_data(box, sde, cfg.train_n, rng);
        const DynamicsModel model = train_dynamics_model(data, box, sde, cfg.m, rng);

        const Trajectories truth = simulate_truth(s0, sde, cfg.trajectories, rng);
        const Trajectories truth2 = simulate_truth(s0, sde, cfg.trajectories, rng);
        const Trajectories dec = rollout_decoupled(model, s0, sde, cfg.trajectories, cfg.basis, rng);
        IterativeStats stats;
        const Trajectories it = rollout_iterative(model, s0, sde, cfg.trajectories, rng, &stats);

        const std::string rep = format_number(r);
        for (int c = 0; c < 2; ++c) {
            const Hyperparameters& h = model.hyper[c];
            model_table.add_row({rep, c == 0 ? "v" : "w", format_number(h.amplitude),
                                 format_number(h.lengthscales(0)), format_number(h.lengthscales(1)),
                                 format_number(h.lengthscales(2)), format_number(h.noise_variance),
                                 format_number(h.log_marginal_likelihood), format_number(stats.refactorizations)});
        }
        const std::vector<std::pair<std::string, const Trajectories*>> methods{
            {"truth", &truth}, {"decoupled", &dec}, {"iterative", &it}};
        for (Eigen::Index t = 0; t <= cfg.horizon; ++t)
            for (const auto& [name, traj] : methods) {
                std::vector<double> v(static_cast<std::size_t>(traj->count()));
                for (Eigen::Index i = 0; i < traj->count(); ++i) v[static_cast<std::size_t>(i)] = traj->state(i, t)(0);
                voltage.add_row({rep, format_number(t), name, format_number(quantile(v, 0.5)),
                                 format_number(quantile(v, 0.25)), format_number(quantile(v, 0.75))});
            }

        const DistanceSeries d_dec = compare_rollouts(truth, dec, plan, &truth2, cfg.stride);
        const DistanceSeries d_it = compare_rollouts(truth, it, plan, nullptr, cfg.stride);
        const DistanceSeries d_x = compare_rollouts(dec, it, plan, nullptr, cfg.stride);
        for (std::size_t j = 0; j < d_dec.steps.size(); ++j) {
            const auto k = static_cast<Eigen::Index>(j);
            distance.add_row({rep, format_number(d_dec.steps[j]), format_number(d_dec.noise_floor(k)),
                              format_number(d_dec.distance(k)), format_number(d_it.distance(k)),
                              format_number(d_x.distance(k))});
        }

        if (cfg.record_timing) {
            const SerialScope serial;
            for (const auto h : cfg.timing_horizons) {
                const SdeConfig long_run = SdeConfig::standard(h);
                auto start = Clock::now();
                rollout_decoupled(model, s0, long_run, cfg.timing_trajectories, cfg.basis, rng);
                const double dec_seconds = seconds_since(start);
                start = Clock::now();
                rollout_iterative(model, s0, long_run, cfg.timing_trajectories, rng);
                const double it_seconds = seconds_since(start);
                timing.add_row({rep, "decoupled", format_number(h), format_number(cfg.timing_trajectories),
                                format_number(dec_seconds)});
                timing.add_row({rep, "iterative", format_number(h), format_number(cfg.timing_trajectories),
                                format_number(it_seconds)});
            }
        }
    }
    std::vector<Table> out{model_table, voltage, distance};
    if (cfg.record_timing) out.push_back(timing);
    return out;
}

std::vector<Table> run_experiment(const ExperimentConfig& cfg) {
    switch (cfg.experiment) {
        case Experiment::wasserstein: return run_wasserstein_experiment(cfg);
        case Experiment::thompson: return run_thompson_experiment(cfg);
        case Experiment::dynamics: return run_dynamics_experiment(cfg);
    }
    throw ConfigError("unknown experiment");
}

}  // namespace gp
