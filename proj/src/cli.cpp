#include "said/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "said/diagnostics.hpp"
#include "said/errors.hpp"
#include "said/io.hpp"
#include "said/preprocess.hpp"
#include "said/selection.hpp"

namespace said {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Type-7 quantile of an unsorted sample; O(n) via partial selection.
double quantile(std::vector<double>& v, double prob) {
    const auto n = static_cast<std::ptrdiff_t>(v.size());
    if (n == 0) throw ConfigError("quantile of an empty sample");
    const double h = prob * static_cast<double>(n - 1);
    const auto lo = static_cast<std::ptrdiff_t>(std::floor(h));
    std::nth_element(v.begin(), v.begin() + lo, v.end());
    const double a = v[static_cast<std::size_t>(lo)];
    if (lo + 1 >= n) return a;
    const double b = *std::min_element(v.begin() + lo + 1, v.end());
    return a + (h - static_cast<double>(lo)) * (b - a);
}

struct ScalarSummary {
    double mean = 0.0, lower = 0.0, upper = 0.0;
};

// Posterior mean and central 95% interval of scaled draws.
ScalarSummary summarize(const Eigen::VectorXd& draws, double scale) {
    ScalarSummary s;
    std::vector<double> v(draws.data(), draws.data() + draws.size());
    for (double& x : v) x *= scale;
    s.mean = draws.mean() * scale;
    s.lower = quantile(v, 0.025);
    s.upper = quantile(v, 0.975);
    return s;
}

json to_json(const ScalarSummary& s) {
    return json{{"mean", s.mean}, {"lower", s.lower}, {"upper", s.upper}};
}

template <typename T>
void read_key(const json& j, const char* key, T& into) {
    if (!j.contains(key)) return;
    try {
        into = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("config key '") + key + "' has the wrong type");
    }
}

BasisConstraint constraint_from(const std::string& name) {
    if (name == "origin") return BasisConstraint::Origin;
    if (name == "integral") return BasisConstraint::Integral;
    throw ConfigError("constraint must be 'origin' or 'integral', got '" + name + "'");
}

// ---------------------------------------------------------------------------
// report writers, shared by cmd_fit and the regeneration commands so reruns
// are byte-identical
// ---------------------------------------------------------------------------

void write_selection_files(const fs::path& dir, const SelectionReport& report,
                           const std::vector<std::string>& exposure_names) {
    const auto name_of = [&](int j) {
        return j < static_cast<int>(exposure_names.size()) ? exposure_names[static_cast<std::size_t>(j)]
                                                           : "x" + std::to_string(j + 1);
    };
    json out;
    out["cutoff"] = report.cutoff;
    out["grid_size"] = report.grid_size;
    out["pairs"] = json::array();
    std::vector<std::vector<std::string>> rows;
    for (const PairSelection& p : report.pairs) {
        out["pairs"].push_back(json{{"u", p.u + 1},
                                    {"v", p.v + 1},
                                    {"u_name", name_of(p.u)},
                                    {"v_name", name_of(p.v)},
                                    {"pip", p.pip},
                                    {"psp", p.psp},
                                    {"pap", p.pap},
                                    {"mean_pos", p.mean_pos},
                                    {"mean_neg", p.mean_neg},
                                    {"label", to_string(p.label)}});
        rows.push_back({std::to_string(p.u + 1), std::to_string(p.v + 1), name_of(p.u),
                        name_of(p.v), format_double(p.pip), format_double(p.psp),
                        format_double(p.pap), format_double(p.mean_pos),
                        format_double(p.mean_neg), to_string(p.label)});
    }
    write_file((dir / "selection.json").string(), out.dump(2) + "\n");
    write_csv_rows((dir / "selection.csv").string(),
                   {"u", "v", "u_name", "v_name", "pip", "psp", "pap", "mean_pos", "mean_neg",
                    "label"},
                   rows);
}

void write_diagnostic_files(const fs::path& dir, const DiagnosticsReport& report,
                            const PredictiveSummary& pred, const Dataset& data) {
    json out;
    out["monitored"] = report.monitored;
    out["ess"] = std::vector<double>(report.ess.data(), report.ess.data() + report.ess.size());
    out["ess_fraction"] = std::vector<double>(
        report.ess_fraction.data(), report.ess_fraction.data() + report.ess_fraction.size());
    out["coverage95"] = report.coverage95;
    out["residual_mean"] = report.residual_mean;
    out["residual_variance"] = report.residual_variance;
    out["residual_q01"] = report.residual_q01;
    out["residual_q99"] = report.residual_q99;
    write_file((dir / "diagnostics.json").string(), out.dump(2) + "\n");

    write_csv((dir / "residuals.csv").string(), {"standardized_residual"},
              pred.standardized_residuals);

    Eigen::MatrixXd table(data.y.size(), 5);
    table.col(0) = data.y * data.y_scale;
    table.col(1) = pred.mean * data.y_scale;
    table.col(2) = pred.sd * data.y_scale;
    table.col(3) = pred.lower * data.y_scale;
    table.col(4) = pred.upper * data.y_scale;
    write_csv((dir / "predictive.csv").string(), {"y", "mean", "sd", "lower", "upper"}, table);
}

// Back-scaled posterior summaries: scalars, main-effect curves on a 100-point
// grid, and interaction surfaces on a 30x30 grid.
void write_summary_files(const fs::path& dir, const PosteriorSamples& samples,
                         const ModelBases& bases, double y_scale,
                         const std::vector<std::string>& exposure_names,
                         const std::vector<std::string>& covariate_names) {
    const int kept = samples.kept();
    json out;
    out["alpha"] = to_json(summarize(samples.alpha, y_scale));
    out["error_sd"] = to_json(summarize(samples.sigma2.array().sqrt().matrix(), y_scale));
    out["covariates"] = json::object();
    for (int j = 0; j < samples.q; ++j) {
        const std::string name = j < static_cast<int>(covariate_names.size())
                                     ? covariate_names[static_cast<std::size_t>(j)]
                                     : "z" + std::to_string(j + 1);
        out["covariates"][name] = to_json(summarize(samples.eta.col(j), y_scale));
    }
    write_file((dir / "summary.json").string(), out.dump(2) + "\n");

    // main-effect curves
    const int G = 100;
    Eigen::VectorXd grid(G);
    for (int i = 0; i < G; ++i) grid[i] = static_cast<double>(i) / (G - 1);
    const Eigen::MatrixXd b = eval_design(bases.main_basis, grid);  // G x d
    Eigen::MatrixXd curves(G, 1 + 3 * samples.p);
    curves.col(0) = grid;
    std::vector<std::string> header{"x"};
    for (int j = 0; j < samples.p; ++j) {
        const std::string name = j < static_cast<int>(exposure_names.size())
                                     ? exposure_names[static_cast<std::size_t>(j)]
                                     : "x" + std::to_string(j + 1);
        header.push_back(name + "_mean");
        header.push_back(name + "_lower");
        header.push_back(name + "_upper");
        const Eigen::MatrixXd draws =
            samples.gamma.middleCols(static_cast<Eigen::Index>(j) * samples.d, samples.d) *
            b.transpose();  // kept x G
        for (int i = 0; i < G; ++i) {
            std::vector<double> v(draws.col(i).data(), draws.col(i).data() + kept);
            curves(i, 1 + 3 * j) = draws.col(i).mean() * y_scale;
            curves(i, 2 + 3 * j) = quantile(v, 0.025) * y_scale;
            curves(i, 3 + 3 * j) = quantile(v, 0.975) * y_scale;
        }
    }
    write_csv((dir / "main_effects.csv").string(), header, curves);

    // interaction surfaces; each factorizes, so per-draw evaluation is two
    // squared spline profiles and a rank-2 combination
    const int Gs = 30;
    Eigen::VectorXd sgrid(Gs);
    for (int i = 0; i < Gs; ++i) sgrid[i] = static_cast<double>(i) / (Gs - 1);
    const Eigen::MatrixXd s = eval_design(bases.interaction_basis, sgrid);  // Gs x m
    const auto name_of = [&](int j) {
        return j < static_cast<int>(exposure_names.size()) ? exposure_names[static_cast<std::size_t>(j)]
                                                           : "x" + std::to_string(j + 1);
    };
    std::vector<std::vector<std::string>> rows;
    rows.reserve(static_cast<std::size_t>(samples.num_pairs()) * Gs * Gs);
    Eigen::MatrixXd values(kept, Gs * Gs);
    for (int k = 0; k < samples.num_pairs(); ++k) {
        const auto [u, v] = samples.pairs[static_cast<std::size_t>(k)];
        for (int t = 0; t < kept; ++t) {
            const InteractionState st = samples.interaction_at(t, k);
            const Eigen::ArrayXd a1 = (s * st.theta1).array().square();
            const Eigen::ArrayXd b1 = (s * st.phi1).array().square();
            const Eigen::ArrayXd a2 = (s * st.theta2).array().square();
            const Eigen::ArrayXd b2 = (s * st.phi2).array().square();
            for (int iu = 0; iu < Gs; ++iu) {
                for (int iv = 0; iv < Gs; ++iv) {
                    values(t, iu * Gs + iv) = a1[iu] * b1[iv] - a2[iu] * b2[iv];
                }
            }
        }
        for (int iu = 0; iu < Gs; ++iu) {
            for (int iv = 0; iv < Gs; ++iv) {
                const int cell = iu * Gs + iv;
                std::vector<double> draws(values.col(cell).data(), values.col(cell).data() + kept);
                const double mean = values.col(cell).mean() * y_scale;
                const double lower = quantile(draws, 0.025) * y_scale;
                const double upper = quantile(draws, 0.975) * y_scale;
                rows.push_back({std::to_string(u + 1), std::to_string(v + 1), name_of(u),
                                name_of(v), format_double(sgrid[iu]), format_double(sgrid[iv]),
                                format_double(mean), format_double(lower), format_double(upper)});
            }
        }
    }
    write_csv_rows((dir / "interactions.csv").string(),
                   {"u", "v", "u_name", "v_name", "x_u", "x_v", "mean", "lower", "upper"}, rows);
}

// ---------------------------------------------------------------------------
// chain metadata: everything select/diagnose need to rebuild reports
// ---------------------------------------------------------------------------

struct ChainMeta {
    int chain = 1;
    std::uint64_t chain_seed = 0;
    std::uint64_t diagnose_seed = 0;
    int degree = 3;
    int main_basis_size = 6;
    int interaction_basis_size = 6;
    std::string constraint = "origin";
    double cutoff = 0.01;
    int selection_grid = 50;
    double y_scale = 1.0;
    std::string dataset = "../dataset.csv";
    std::vector<std::string> exposure_names;
    std::vector<std::string> covariate_names;
};

void write_meta(const fs::path& dir, const ChainMeta& m) {
    json j;
    j["chain"] = m.chain;
    j["chain_seed"] = m.chain_seed;
    j["diagnose_seed"] = m.diagnose_seed;
    j["degree"] = m.degree;
    j["main_basis_size"] = m.main_basis_size;
    j["interaction_basis_size"] = m.interaction_basis_size;
    j["constraint"] = m.constraint;
    j["cutoff"] = m.cutoff;
    j["selection_grid"] = m.selection_grid;
    j["y_scale"] = m.y_scale;
    j["dataset"] = m.dataset;
    j["exposure_names"] = m.exposure_names;
    j["covariate_names"] = m.covariate_names;
    write_file((dir / "meta.json").string(), j.dump(2) + "\n");
}

ChainMeta load_meta(const fs::path& dir) {
    const fs::path path = dir / "meta.json";
    json j;
    try {
        j = json::parse(read_file(path.string()));
    } catch (const json::parse_error& e) {
        throw ConfigError("corrupt meta.json in " + dir.string() + ": " + e.what());
    }
    ChainMeta m;
    read_key(j, "chain", m.chain);
    read_key(j, "chain_seed", m.chain_seed);
    read_key(j, "diagnose_seed", m.diagnose_seed);
    read_key(j, "degree", m.degree);
    read_key(j, "main_basis_size", m.main_basis_size);
    read_key(j, "interaction_basis_size", m.interaction_basis_size);
    read_key(j, "constraint", m.constraint);
    read_key(j, "cutoff", m.cutoff);
    read_key(j, "selection_grid", m.selection_grid);
    read_key(j, "y_scale", m.y_scale);
    read_key(j, "dataset", m.dataset);
    read_key(j, "exposure_names", m.exposure_names);
    read_key(j, "covariate_names", m.covariate_names);
    return m;
}

std::vector<fs::path> resolve_chain_dirs(const std::string& dir) {
    const fs::path root(dir);
    if (fs::exists(root / "samples.bin")) return {root};
    std::vector<fs::path> out;
    if (fs::is_directory(root)) {
        for (const auto& entry : fs::directory_iterator(root)) {
            if (entry.is_directory() && fs::exists(entry.path() / "samples.bin")) {
                out.push_back(entry.path());
            }
        }
    }
    std::sort(out.begin(), out.end());
    if (out.empty()) throw ConfigError("no samples.bin found under " + dir);
    return out;
}

// Rebuild the Dataset a chain was fit on from the preprocessed CSV next to it.
Dataset load_chain_dataset(const fs::path& chain_dir, const ChainMeta& meta) {
    const fs::path path = chain_dir / meta.dataset;
    const CsvTable t = read_csv(path.string());
    Dataset data;
    data.y = t.numeric_column(t.require_column("y"));
    data.x.resize(data.y.size(), static_cast<Eigen::Index>(meta.exposure_names.size()));
    for (std::size_t j = 0; j < meta.exposure_names.size(); ++j) {
        data.x.col(static_cast<Eigen::Index>(j)) =
            t.numeric_column(t.require_column(meta.exposure_names[j]));
    }
    data.z.resize(data.y.size(), static_cast<Eigen::Index>(meta.covariate_names.size()));
    for (std::size_t j = 0; j < meta.covariate_names.size(); ++j) {
        data.z.col(static_cast<Eigen::Index>(j)) =
            t.numeric_column(t.require_column(meta.covariate_names[j]));
    }
    data.y_scale = meta.y_scale;
    return data;
}

void run_one_chain(const fs::path& chain_dir, const Dataset& data, const RunConfig& config,
                   const ModelBases& bases, const ChainMeta& meta) {
    SamplerConfig sc;
    sc.iterations = config.iterations;
    sc.burnin = config.burnin;
    sc.hmc_step_size = config.hmc_step_size;
    sc.hmc_leapfrog_steps = config.hmc_leapfrog_steps;
    sc.perturb_interval = config.perturb_interval;
    sc.perturb_low = config.perturb_low;
    sc.perturb_high = config.perturb_high;
    sc.rejection_cap = config.rejection_cap;
    sc.a = config.lambda_a;
    sc.seed = meta.chain_seed;

    const PosteriorSamples samples = run_chain(data, sc, bases);

    fs::create_directories(chain_dir);
    save_samples((chain_dir / "samples.bin").string(), samples);
    write_meta(chain_dir, meta);

    const SelectionReport selection =
        classify(samples, bases.interaction_basis, config.cutoff, config.selection_grid);
    write_selection_files(chain_dir, selection, meta.exposure_names);

    Rng diag_rng(meta.diagnose_seed);
    const DiagnosticsReport report = diagnose(samples, data, bases, diag_rng);
    Rng pred_rng(meta.diagnose_seed);
    const PredictiveSummary pred = posterior_predictive(samples, data, bases, pred_rng);
    write_diagnostic_files(chain_dir, report, pred, data);

    write_summary_files(chain_dir, samples, bases, data.y_scale, meta.exposure_names,
                        meta.covariate_names);
}

}  // namespace

// ---------------------------------------------------------------------------
// config
// ---------------------------------------------------------------------------

RunConfig config_from_json(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    static const std::set<std::string> known = {
        "response",          "exposures",         "numeric_covariates",
        "categorical_covariates", "flow_rate_column", "acr_column",
        "lod_column",        "baselines",         "acr_threshold",
        "drop_lod_responses", "log_transform",    "cdf_transform",
        "degree",            "main_basis_size",   "interaction_basis_size",
        "constraint",        "iterations",        "burnin",
        "hmc_step_size",     "hmc_leapfrog_steps", "perturb_interval",
        "perturb_low",       "perturb_high",      "rejection_cap",
        "lambda_a",          "cutoff",            "selection_grid",
        "seed",              "chains"};
    for (const auto& item : j.items()) {
        if (known.find(item.key()) == known.end()) {
            throw ConfigError("unknown config key: " + item.key());
        }
    }
    RunConfig c;
    read_key(j, "response", c.response);
    read_key(j, "exposures", c.exposures);
    read_key(j, "numeric_covariates", c.numeric_covariates);
    read_key(j, "categorical_covariates", c.categorical_covariates);
    read_key(j, "flow_rate_column", c.flow_rate_column);
    read_key(j, "acr_column", c.acr_column);
    read_key(j, "lod_column", c.lod_column);
    read_key(j, "baselines", c.baselines);
    read_key(j, "acr_threshold", c.acr_threshold);
    read_key(j, "drop_lod_responses", c.drop_lod_responses);
    read_key(j, "log_transform", c.log_transform);
    read_key(j, "cdf_transform", c.cdf_transform);
    read_key(j, "degree", c.degree);
    read_key(j, "main_basis_size", c.main_basis_size);
    read_key(j, "interaction_basis_size", c.interaction_basis_size);
    read_key(j, "constraint", c.constraint);
    read_key(j, "iterations", c.iterations);
    read_key(j, "burnin", c.burnin);
    read_key(j, "hmc_step_size", c.hmc_step_size);
    read_key(j, "hmc_leapfrog_steps", c.hmc_leapfrog_steps);
    read_key(j, "perturb_interval", c.perturb_interval);
    read_key(j, "perturb_low", c.perturb_low);
    read_key(j, "perturb_high", c.perturb_high);
    read_key(j, "rejection_cap", c.rejection_cap);
    read_key(j, "lambda_a", c.lambda_a);
    read_key(j, "cutoff", c.cutoff);
    read_key(j, "selection_grid", c.selection_grid);
    read_key(j, "seed", c.seed);
    read_key(j, "chains", c.chains);
    validate_config(c);
    return c;
}

std::string config_to_json(const RunConfig& c) {
    json j;
    j["response"] = c.response;
    j["exposures"] = c.exposures;
    j["numeric_covariates"] = c.numeric_covariates;
    j["categorical_covariates"] = c.categorical_covariates;
    j["flow_rate_column"] = c.flow_rate_column;
    j["acr_column"] = c.acr_column;
    j["lod_column"] = c.lod_column;
    j["baselines"] = c.baselines;
    j["acr_threshold"] = c.acr_threshold;
    j["drop_lod_responses"] = c.drop_lod_responses;
    j["log_transform"] = c.log_transform;
    j["cdf_transform"] = c.cdf_transform;
    j["degree"] = c.degree;
    j["main_basis_size"] = c.main_basis_size;
    j["interaction_basis_size"] = c.interaction_basis_size;
    j["constraint"] = c.constraint;
    j["iterations"] = c.iterations;
    j["burnin"] = c.burnin;
    j["hmc_step_size"] = c.hmc_step_size;
    j["hmc_leapfrog_steps"] = c.hmc_leapfrog_steps;
    j["perturb_interval"] = c.perturb_interval;
    j["perturb_low"] = c.perturb_low;
    j["perturb_high"] = c.perturb_high;
    j["rejection_cap"] = c.rejection_cap;
    j["lambda_a"] = c.lambda_a;
    j["cutoff"] = c.cutoff;
    j["selection_grid"] = c.selection_grid;
    j["seed"] = c.seed;
    j["chains"] = c.chains;
    return j.dump(2) + "\n";
}

void validate_config(const RunConfig& c) {
    if (c.response.empty()) throw ConfigError("config: response column name is empty");
    if (c.exposures.size() < 2) throw ConfigError("config: need at least two exposure columns");
    std::vector<std::string> roles;
    roles.push_back(c.response);
    roles.insert(roles.end(), c.exposures.begin(), c.exposures.end());
    roles.insert(roles.end(), c.numeric_covariates.begin(), c.numeric_covariates.end());
    roles.insert(roles.end(), c.categorical_covariates.begin(), c.categorical_covariates.end());
    for (const std::string* extra : {&c.flow_rate_column, &c.acr_column, &c.lod_column}) {
        if (!extra->empty()) roles.push_back(*extra);
    }
    std::set<std::string> seen;
    for (const std::string& name : roles) {
        if (name.empty()) throw ConfigError("config: empty column name in a role list");
        if (!seen.insert(name).second) {
            throw ConfigError("config: column '" + name + "' is assigned to more than one role");
        }
    }
    for (const std::string& b : c.baselines) {
        const auto eq = b.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config: baseline '" + b + "' is not of the form column=level");
        }
        const std::string col = b.substr(0, eq);
        if (std::find(c.categorical_covariates.begin(), c.categorical_covariates.end(), col) ==
            c.categorical_covariates.end()) {
            throw ConfigError("config: baseline names unknown categorical column '" + col + "'");
        }
    }
    constraint_from(c.constraint);
    if (c.degree < 1) throw ConfigError("config: degree must be >= 1");
    if (c.main_basis_size < c.degree || c.interaction_basis_size < c.degree) {
        throw ConfigError("config: basis sizes must be at least the spline degree");
    }
    if (c.iterations <= 0 || c.burnin < 0 || c.burnin >= c.iterations) {
        throw ConfigError("config: need 0 <= burnin < iterations");
    }
    if (c.iterations - c.burnin < 10) {
        throw ConfigError("config: need at least 10 post-burnin draws");
    }
    if (c.hmc_step_size <= 0 || c.hmc_leapfrog_steps < 1) {
        throw ConfigError("config: HMC step size must be > 0 and leapfrog steps >= 1");
    }
    if (c.perturb_interval < 1 || c.perturb_low <= 0 || c.perturb_low > c.perturb_high) {
        throw ConfigError("config: step-size perturbation settings are inconsistent");
    }
    if (c.rejection_cap < 1) throw ConfigError("config: rejection_cap must be >= 1");
    if (c.lambda_a <= 0) throw ConfigError("config: lambda_a must be > 0");
    if (c.cutoff <= 0) throw ConfigError("config: cutoff must be > 0");
    if (c.selection_grid < 1) throw ConfigError("config: selection_grid must be >= 1");
    if (c.chains < 1) throw ConfigError("config: chains must be >= 1");
}

ScenarioKind scenario_kind_from_string(const std::string& name) {
    if (name == "sn") return ScenarioKind::SN;
    if (name == "qr") return ScenarioKind::QR;
    if (name == "mis") return ScenarioKind::MIS;
    if (name == "p10") return ScenarioKind::P10;
    throw ConfigError("unknown scenario '" + name + "' (expected sn, qr, mis, or p10)");
}

std::string to_string(ScenarioKind kind) {
    switch (kind) {
        case ScenarioKind::SN: return "sn";
        case ScenarioKind::QR: return "qr";
        case ScenarioKind::MIS: return "mis";
        case ScenarioKind::P10: return "p10";
    }
    throw ConfigError("unknown scenario kind");
}

// ---------------------------------------------------------------------------
// subcommands
// ---------------------------------------------------------------------------

void cmd_fit(const std::string& data_path, const RunConfig& config, const std::string& out_dir) {
    validate_config(config);
    const CsvTable table = read_csv(data_path);

    const Eigen::VectorXd y = table.numeric_column(table.require_column(config.response));
    const auto n_raw = static_cast<std::size_t>(y.size());
    std::vector<Eigen::VectorXd> xcols;
    for (const std::string& name : config.exposures) {
        xcols.push_back(table.numeric_column(table.require_column(name)));
    }
    std::vector<Eigen::VectorXd> num_cols;
    for (const std::string& name : config.numeric_covariates) {
        num_cols.push_back(table.numeric_column(table.require_column(name)));
    }
    std::vector<std::vector<std::string>> cat_cols;
    for (const std::string& name : config.categorical_covariates) {
        cat_cols.push_back(table.string_column(table.require_column(name)));
    }
    Eigen::VectorXd flow, acr, lod;
    if (!config.flow_rate_column.empty()) {
        flow = table.numeric_column(table.require_column(config.flow_rate_column));
    }
    if (!config.acr_column.empty()) {
        acr = table.numeric_column(table.require_column(config.acr_column));
    }
    if (!config.lod_column.empty()) {
        lod = table.numeric_column(table.require_column(config.lod_column));
    }

    std::vector<RawRecord> records(n_raw);
    for (std::size_t i = 0; i < n_raw; ++i) {
        RawRecord& r = records[i];
        const auto idx = static_cast<Eigen::Index>(i);
        r.response = y[idx];
        r.exposures.resize(static_cast<Eigen::Index>(xcols.size()));
        for (std::size_t j = 0; j < xcols.size(); ++j) {
            r.exposures[static_cast<Eigen::Index>(j)] = xcols[j][idx];
        }
        r.numeric_covariates.resize(static_cast<Eigen::Index>(num_cols.size()));
        for (std::size_t j = 0; j < num_cols.size(); ++j) {
            r.numeric_covariates[static_cast<Eigen::Index>(j)] = num_cols[j][idx];
        }
        r.categorical_covariates.resize(cat_cols.size());
        for (std::size_t j = 0; j < cat_cols.size(); ++j) {
            r.categorical_covariates[j] = cat_cols[j][i];
        }
        if (flow.size() > 0) r.flow_rate = flow[idx];
        if (acr.size() > 0) r.acr = acr[idx];
        if (lod.size() > 0) r.response_below_lod = !std::isnan(lod[idx]) && lod[idx] != 0.0;
    }

    PipelineOptions opts;
    opts.acr_threshold = config.acr_threshold;
    opts.drop_lod_responses = config.drop_lod_responses;
    opts.dilution_adjust = !config.flow_rate_column.empty();
    opts.log_transform = config.log_transform;
    opts.cdf_transform = config.cdf_transform;
    opts.baselines.assign(config.categorical_covariates.size(), "");
    for (const std::string& b : config.baselines) {
        const auto eq = b.find('=');
        const std::string col = b.substr(0, eq);
        for (std::size_t j = 0; j < config.categorical_covariates.size(); ++j) {
            if (config.categorical_covariates[j] == col) opts.baselines[j] = b.substr(eq + 1);
        }
    }
    const PipelineResult pipe = build_dataset(records, opts);
    const Dataset& data = pipe.data;

    std::vector<std::string> covariate_names = config.numeric_covariates;
    for (std::size_t j = 0; j < config.categorical_covariates.size(); ++j) {
        for (const std::string& level : pipe.dummy_levels[j]) {
            covariate_names.push_back(config.categorical_covariates[j] + ":" + level);
        }
    }

    const ModelBases bases = make_bases(config.degree, config.main_basis_size,
                                        config.interaction_basis_size,
                                        constraint_from(config.constraint));

    const fs::path out(out_dir);
    fs::create_directories(out);
    {
        std::vector<std::string> header{"y"};
        header.insert(header.end(), config.exposures.begin(), config.exposures.end());
        header.insert(header.end(), covariate_names.begin(), covariate_names.end());
        Eigen::MatrixXd mat(data.y.size(), 1 + data.x.cols() + data.z.cols());
        mat.col(0) = data.y;
        mat.middleCols(1, data.x.cols()) = data.x;
        if (data.z.cols() > 0) mat.rightCols(data.z.cols()) = data.z;
        write_csv((out / "dataset.csv").string(), header, mat);
    }

    std::vector<std::uint64_t> chain_seeds(static_cast<std::size_t>(config.chains));
    const Rng seeder(config.seed);
    for (int c = 1; c <= config.chains; ++c) {
        chain_seeds[static_cast<std::size_t>(c - 1)] =
            c == 1 ? config.seed : seeder.split(static_cast<std::uint64_t>(c));
    }

    std::vector<ChainMeta> metas(static_cast<std::size_t>(config.chains));
    for (int c = 1; c <= config.chains; ++c) {
        ChainMeta& m = metas[static_cast<std::size_t>(c - 1)];
        m.chain = c;
        m.chain_seed = chain_seeds[static_cast<std::size_t>(c - 1)];
        m.diagnose_seed = Rng(m.chain_seed).split(101);
        m.degree = config.degree;
        m.main_basis_size = config.main_basis_size;
        m.interaction_basis_size = config.interaction_basis_size;
        m.constraint = config.constraint;
        m.cutoff = config.cutoff;
        m.selection_grid = config.selection_grid;
        m.y_scale = data.y_scale;
        m.dataset = "../dataset.csv";
        m.exposure_names = config.exposures;
        m.covariate_names = covariate_names;
    }

    if (config.chains == 1) {
        run_one_chain(out / "chain_1", data, config, bases, metas[0]);
    } else {
        std::vector<std::thread> workers;
        std::vector<std::exception_ptr> errors(static_cast<std::size_t>(config.chains));
        for (int c = 1; c <= config.chains; ++c) {
            workers.emplace_back([&, c] {
                try {
                    run_one_chain(out / ("chain_" + std::to_string(c)), data, config, bases,
                                  metas[static_cast<std::size_t>(c - 1)]);
                } catch (...) {
                    errors[static_cast<std::size_t>(c - 1)] = std::current_exception();
                }
            });
        }
        for (auto& w : workers) w.join();
        for (const auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }

    json manifest;
    manifest["command"] = "fit";
    manifest["config"] = json::parse(config_to_json(config));
    manifest["data_path"] = data_path;
    manifest["data_sha1"] = sha1_hex(read_file(data_path));
    manifest["dataset_sha1"] = sha1_hex(read_file((out / "dataset.csv").string()));
    manifest["rows_used"] = static_cast<std::int64_t>(data.y.size());
    manifest["y_scale"] = data.y_scale;
    manifest["chain_seeds"] = chain_seeds;
    manifest["covariate_names"] = covariate_names;
    manifest["numeric_covariate_scales"] = std::vector<double>(
        pipe.numeric_covariate_scales.data(),
        pipe.numeric_covariate_scales.data() + pipe.numeric_covariate_scales.size());
    write_file((out / "manifest.json").string(), manifest.dump(2) + "\n");
}

void cmd_simulate(const Scenario& scenario, const std::string& out_dir) {
    const auto [data, truth] = generate(scenario);
    const int p = static_cast<int>(data.x.cols());
    const auto pairs = all_pairs(p);

    const fs::path out(out_dir);
    fs::create_directories(out);

    std::vector<std::string> xnames;
    for (int j = 1; j <= p; ++j) xnames.push_back("x" + std::to_string(j));

    {
        std::vector<std::string> header{"y"};
        header.insert(header.end(), xnames.begin(), xnames.end());
        Eigen::MatrixXd mat(data.y.size(), 1 + p);
        mat.col(0) = data.y;
        mat.rightCols(p) = data.x;
        write_csv((out / "data.csv").string(), header, mat);
    }
    write_csv((out / "x_test.csv").string(), xnames, truth.x_test);

    std::vector<std::string> truth_header{"H"};
    for (const auto& [u, v] : pairs) {
        truth_header.push_back("h_" + std::to_string(u + 1) + "_" + std::to_string(v + 1));
    }
    Eigen::MatrixXd train(truth.surface_train.size(), 1 + truth.interactions_train.cols());
    train.col(0) = truth.surface_train;
    train.rightCols(truth.interactions_train.cols()) = truth.interactions_train;
    write_csv((out / "truth_train.csv").string(), truth_header, train);
    Eigen::MatrixXd test(truth.surface_test.size(), 1 + truth.interactions_test.cols());
    test.col(0) = truth.surface_test;
    test.rightCols(truth.interactions_test.cols()) = truth.interactions_test;
    write_csv((out / "truth_test.csv").string(), truth_header, test);

    json t;
    t["scenario"] = to_string(scenario.kind);
    t["gamma0"] = scenario.gamma0;
    t["sigma0_sq"] = scenario.kind == ScenarioKind::P10 ? 0.2 : scenario.sigma0_sq;
    t["n_train"] = static_cast<std::int64_t>(data.y.size());
    t["n_test"] = static_cast<std::int64_t>(truth.x_test.rows());
    t["seed"] = scenario.seed;
    t["pairs"] = json::array();
    std::map<std::string, int> counts{
        {"null", 0}, {"synergistic", 0}, {"antagonistic", 0}, {"mixed", 0}};
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        const std::string cls = to_string(truth.classes[k]);
        counts[cls] += 1;
        t["pairs"].push_back(json{
            {"u", pairs[k].first + 1}, {"v", pairs[k].second + 1}, {"class", cls}});
    }
    t["counts"] = counts;
    write_file((out / "truth.json").string(), t.dump(2) + "\n");

    RunConfig fit;
    fit.exposures = xnames;
    fit.log_transform = false;   // simulated responses may be negative
    fit.cdf_transform = false;   // exposures are already uniform on [0,1]
    fit.seed = scenario.seed;
    write_file((out / "fit_config.json").string(), config_to_json(fit));
}

void cmd_select(const std::string& dir, std::optional<double> cutoff) {
    if (cutoff && *cutoff <= 0) throw ConfigError("cutoff must be > 0");
    for (const fs::path& chain_dir : resolve_chain_dirs(dir)) {
        const ChainMeta meta = load_meta(chain_dir);
        const ModelBases bases =
            make_bases(meta.degree, meta.main_basis_size, meta.interaction_basis_size,
                       constraint_from(meta.constraint));
        const PosteriorSamples samples = load_samples((chain_dir / "samples.bin").string());
        const SelectionReport report = classify(samples, bases.interaction_basis,
                                                cutoff.value_or(meta.cutoff),
                                                meta.selection_grid);
        write_selection_files(chain_dir, report, meta.exposure_names);
    }
}

void cmd_diagnose(const std::string& dir) {
    for (const fs::path& chain_dir : resolve_chain_dirs(dir)) {
        const ChainMeta meta = load_meta(chain_dir);
        const ModelBases bases =
            make_bases(meta.degree, meta.main_basis_size, meta.interaction_basis_size,
                       constraint_from(meta.constraint));
        const PosteriorSamples samples = load_samples((chain_dir / "samples.bin").string());
        const Dataset data = load_chain_dataset(chain_dir, meta);
        Rng diag_rng(meta.diagnose_seed);
        const DiagnosticsReport report = diagnose(samples, data, bases, diag_rng);
        Rng pred_rng(meta.diagnose_seed);
        const PredictiveSummary pred = posterior_predictive(samples, data, bases, pred_rng);
        write_diagnostic_files(chain_dir, report, pred, data);
    }
}

}  // namespace said
