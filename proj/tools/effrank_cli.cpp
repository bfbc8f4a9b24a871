// Batch front end: run experiments from JSON configs, sweep grids, evaluate
// bounds, estimate truncated moments from CSV data, compute empirical tensor
// norms, and spot-check the entropy/log-MGF duality.  All deterministic
// output goes to stdout; warnings and timings go to stderr.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <effrank/bounds.hpp>
#include <effrank/distributions.hpp>
#include <effrank/errors.hpp>
#include <effrank/estimators.hpp>
#include <effrank/experiments.hpp>
#include <effrank/linalg.hpp>
#include <effrank/rng.hpp>
#include <effrank/tensor_ops.hpp>
#include <effrank/variational.hpp>

namespace {

using effrank::ConfigError;

nlohmann::json load_json(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read config file: " + path);
    try {
        return nlohmann::json::parse(is);
    } catch (const std::exception& e) {
        throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
    }
}

// Direction grammar: e<k> for the k-th basis vector (1-based), or a comma
// list of coordinates.
std::vector<double> parse_direction(const std::string& text, std::size_t d) {
    if (text.size() >= 2 && text.front() == 'e' &&
        text.find_first_not_of("0123456789", 1) == std::string::npos) {
        const std::size_t k = effrank::detail::parse_count(text.substr(1), text);
        if (k < 1 || k > d)
            throw ConfigError("direction \"" + text + "\": index out of range for d = " +
                              std::to_string(d));
        std::vector<double> v(d, 0.0);
        v[k - 1] = 1.0;
        return v;
    }
    std::vector<double> v;
    for (const std::string& cell : effrank::detail::split_on(text, ','))
        v.push_back(effrank::detail::parse_real(cell, text));
    if (v.size() != d)
        throw ConfigError("direction \"" + text + "\" has " + std::to_string(v.size()) +
                          " coordinates; data dimension is " + std::to_string(d));
    return v;
}

std::vector<std::size_t> parse_count_list(const std::string& text) {
    std::vector<std::size_t> out;
    if (text.empty()) return out;
    for (const std::string& cell : effrank::detail::split_on(text, ','))
        out.push_back(effrank::detail::parse_count(cell, text));
    return out;
}

std::vector<double> parse_real_list(const std::string& text) {
    std::vector<double> out;
    if (text.empty()) return out;
    for (const std::string& cell : effrank::detail::split_on(text, ','))
        out.push_back(effrank::detail::parse_real(cell, text));
    return out;
}

std::vector<int> parse_int_list(const std::string& text) {
    std::vector<int> out;
    for (std::size_t v : parse_count_list(text)) out.push_back(static_cast<int>(v));
    return out;
}

effrank::SweepGrid grid_from_json(const nlohmann::json& j) {
    effrank::SweepGrid grid;
    if (j.contains("n")) grid.n = j.at("n").get<std::vector<std::size_t>>();
    if (j.contains("d")) grid.d = j.at("d").get<std::vector<std::size_t>>();
    if (j.contains("t")) grid.t = j.at("t").get<std::vector<double>>();
    if (j.contains("s")) grid.s = j.at("s").get<std::vector<int>>();
    return grid;
}

bool violation_breach(const effrank::ExperimentReport& rep) {
    const double p = std::exp(-rep.config.t);
    const double se =
        std::sqrt(p * (1.0 - p) / static_cast<double>(rep.config.trials));
    return rep.violation_rate > p + 3.0 * se;
}

struct CommonFlags {
    std::uint64_t seed = 0;
    bool seed_set = false;
    unsigned threads = 0; // 0 = hardware concurrency
    std::string out;
    bool assert_mode = false;
    bool strict_regime = false;

    unsigned worker_count() const {
        if (threads > 0) return threads;
        const unsigned hw = std::thread::hardware_concurrency();
        return hw > 0 ? hw : 1;
    }
};

void add_common(CLI::App* sub, CommonFlags* flags) {
    sub->add_option("--seed", flags->seed, "override the master seed")
        ->each([flags](const std::string&) { flags->seed_set = true; });
    sub->add_option("--threads", flags->threads,
                    "worker threads (0 = hardware concurrency)");
    sub->add_option("--out", flags->out, "directory for report/sweep files");
    sub->add_flag("--assert", flags->assert_mode,
                  "exit 2 when the violation rate breaches e^-t plus 3 standard errors");
    sub->add_flag("--strict-regime", flags->strict_regime,
                  "exit 2 when bound preconditions are not met");
}

int finish_report_run(const effrank::ExperimentReport& rep, const CommonFlags& flags) {
    std::cout << effrank::report_to_json(rep, false).dump(2) << '\n';
    std::cerr << "wall time: " << rep.wall_time_seconds << " s\n";
    for (const std::string& note : rep.annotations) std::cerr << note << '\n';
    if (!flags.out.empty()) effrank::write_report_files(rep, flags.out);
    int code = 0;
    if (flags.strict_regime && !rep.valid) {
        std::cerr << "strict-regime: bound preconditions not met (" << rep.condition_text
                  << ")\n";
        code = 2;
    }
    if (flags.assert_mode && violation_breach(rep)) {
        std::cerr << "assert: violation rate " << rep.violation_rate
                  << " breaches the e^-t + 3se budget\n";
        code = 2;
    }
    return code;
}

int finish_sweep_run(const std::vector<effrank::SweepPoint>& points,
                     const CommonFlags& flags) {
    std::cout << effrank::sweep_csv(points);
    int code = 0;
    for (const auto& pt : points) {
        if (!pt.ok) {
            std::cerr << "sweep point failed (n=" << pt.config.n
                      << ", sigma=" << effrank::sigma_to_text(pt.config.family.sigma)
                      << ", t=" << pt.config.t << ", s=" << pt.config.s
                      << "): " << pt.error << '\n';
            continue;
        }
        if (flags.strict_regime && !pt.report.valid) code = 2;
        if (flags.assert_mode && violation_breach(pt.report)) code = 2;
    }
    if (!flags.out.empty()) effrank::write_sweep_files(points, flags.out);
    return code;
}

int cmd_verify(const std::string& config_path, const CommonFlags& flags) {
    const nlohmann::json j = load_json(config_path);
    effrank::ExperimentConfig cfg = effrank::config_from_json(j);
    if (flags.seed_set) cfg.master_seed = flags.seed;
    cfg.validate();
    if (j.contains("grid")) {
        const effrank::SweepGrid grid = grid_from_json(j.at("grid"));
        return finish_sweep_run(effrank::sweep(cfg, grid, flags.worker_count()), flags);
    }
    return finish_report_run(effrank::run_experiment(cfg, flags.worker_count()), flags);
}

int cmd_sweep(const std::string& config_path, const std::string& n_list,
              const std::string& d_list, const std::string& t_list,
              const std::string& s_list, const CommonFlags& flags) {
    const nlohmann::json j = load_json(config_path);
    effrank::ExperimentConfig cfg = effrank::config_from_json(j);
    if (flags.seed_set) cfg.master_seed = flags.seed;
    effrank::SweepGrid grid;
    if (j.contains("grid")) grid = grid_from_json(j.at("grid"));
    if (!n_list.empty()) grid.n = parse_count_list(n_list);
    if (!d_list.empty()) grid.d = parse_count_list(d_list);
    if (!t_list.empty()) grid.t = parse_real_list(t_list);
    if (!s_list.empty()) grid.s = parse_int_list(s_list);
    if (grid.empty())
        throw ConfigError("sweep: provide a grid via --n/--d/--t/--s or a "
                          "\"grid\" object in the config");
    return finish_sweep_run(effrank::sweep(cfg, grid, flags.worker_count()), flags);
}

int cmd_bound(const std::string& key, const std::string& sigma_text, std::size_t n,
              double t, double kappa, double eta, int s, double constant,
              double c_sample, const std::string& regime) {
    effrank::BoundInputs in;
    in.sigma = effrank::materialize_sigma(effrank::parse_sigma(sigma_text));
    in.n = n;
    in.t = t;
    in.kappa = kappa;
    in.eta = eta;
    in.s = s;
    in.constant = constant;
    in.c_sample = c_sample;
    if (regime == "standard") {
        in.regime = effrank::Thm2Regime::standard;
    } else if (regime == "sharp") {
        in.regime = effrank::Thm2Regime::sharp;
    } else {
        throw ConfigError("--regime must be \"standard\" or \"sharp\"");
    }
    const effrank::BoundResult res = effrank::bound_by_key(key, in);
    nlohmann::json out;
    out["key"] = key;
    out["value"] = res.value;
    out["valid"] = res.valid;
    out["condition_text"] = res.condition_text;
    out["constants_used"] = res.constants_used;
    std::cout << out.dump(2) << '\n';
    return 0;
}

int cmd_estimate(const std::string& csv_path, const std::string& v_text, int s,
                 double t, double eta, double lambda) {
    const std::vector<std::vector<double>> rows = effrank::read_csv_file(csv_path);
    if (rows.empty()) throw ConfigError("estimate: data file has no rows");
    const effrank::SampleSet samples = effrank::SampleSet::from_rows(rows);
    const std::vector<double> v = parse_direction(v_text, samples.d());

    nlohmann::json out;
    std::string lambda_source = "flag";
    if (!(lambda > 0.0)) {
        if (!(eta > 0.0))
            throw ConfigError("estimate: provide --lambda, or --eta so the "
                              "truncation level can be computed");
        const effrank::SymMatrix plug_in = effrank::sample_covariance(samples);
        lambda = effrank::truncation_level(eta, s, plug_in, samples.n(), t);
        lambda_source = "computed";
        out["eta"] = eta;
    }
    const effrank::TruncationConfig cfg{lambda, s, t};
    const effrank::TruncatedMomentResult res =
        effrank::truncated_moment_estimate(samples, v, cfg);
    out["v"] = v;
    out["s"] = s;
    out["t"] = t;
    out["n"] = samples.n();
    out["lambda"] = lambda;
    out["lambda_source"] = lambda_source;
    out["estimate"] = res.estimate;
    out["clipped_fraction"] = res.clipped_fraction;
    std::cout << out.dump(2) << '\n';
    return 0;
}

int cmd_tensornorm(const std::string& csv_path, int s, std::size_t restarts,
                   const CommonFlags& flags) {
    const std::vector<std::vector<double>> rows = effrank::read_csv_file(csv_path);
    if (rows.empty()) throw ConfigError("tensornorm: data file has no rows");
    const effrank::SampleSet samples = effrank::SampleSet::from_rows(rows);
    const effrank::EmpiricalTensorForm form(samples, s, effrank::centering_zero());
    effrank::PowerOptions opt;
    opt.restarts = restarts;
    if (flags.seed_set) opt.seed = flags.seed;
    const effrank::SupResult res = effrank::operator_norm_sup(form, opt);
    nlohmann::json out;
    out["s"] = s;
    out["restarts"] = restarts;
    out["value"] = res.value;
    out["argmax"] = res.argmax;
    out["converged"] = res.converged;
    std::cout << out.dump(2) << '\n';
    return 0;
}

int cmd_duality(std::size_t size, std::size_t reps, const CommonFlags& flags) {
    if (size < 1) throw ConfigError("duality: --size must be >= 1");
    if (reps < 1) throw ConfigError("duality: --reps must be >= 1");
    effrank::Rng rng(effrank::SeedSpec{flags.seed_set ? flags.seed : 1, 0});
    double max_gibbs_gap = 0.0;
    double min_random_gap = std::numeric_limits<double>::infinity();
    for (std::size_t rep = 0; rep < reps; ++rep) {
        effrank::DiscreteSpace mu;
        mu.weights.resize(size);
        double sum = 0.0;
        for (double& w : mu.weights) {
            w = rng.uniform_pos() + 1e-3;
            sum += w;
        }
        for (double& w : mu.weights) w /= sum;
        std::vector<double> g(size);
        for (double& x : g) x = 10.0 * (2.0 * rng.uniform() - 1.0);

        const std::vector<double> star = effrank::gibbs_posterior(mu, g);
        max_gibbs_gap =
            std::max(max_gibbs_gap, std::fabs(effrank::duality_gap(mu, g, star)));

        std::vector<double> rho(size);
        double rsum = 0.0;
        for (std::size_t i = 0; i < size; ++i) {
            rho[i] = mu.weights[i] * rng.uniform_pos();
            rsum += rho[i];
        }
        for (double& x : rho) x /= rsum;
        min_random_gap = std::min(min_random_gap, effrank::duality_gap(mu, g, rho));
    }
    nlohmann::json out;
    out["size"] = size;
    out["reps"] = reps;
    out["max_gibbs_gap"] = max_gibbs_gap;
    out["min_random_gap"] = min_random_gap;
    std::cout << out.dump(2) << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"effective-rank covariance deviation toolkit"};
    app.require_subcommand(1);

    CommonFlags flags;

    std::string verify_config;
    CLI::App* verify = app.add_subcommand(
        "verify", "run an experiment config and check its bound");
    verify->add_option("config", verify_config, "JSON experiment config")->required();
    add_common(verify, &flags);

    std::string sweep_config, sweep_n, sweep_d, sweep_t, sweep_s;
    CLI::App* sweep = app.add_subcommand(
        "sweep", "run a config across a grid of n/d/t/s values");
    sweep->add_option("config", sweep_config, "JSON experiment config")->required();
    sweep->add_option("--n", sweep_n, "comma list of sample sizes");
    sweep->add_option("--d", sweep_d, "comma list of dimensions");
    sweep->add_option("--t", sweep_t, "comma list of confidence parameters");
    sweep->add_option("--s", sweep_s, "comma list of moment orders");
    add_common(sweep, &flags);

    std::string bound_key, bound_sigma = "identity:1", bound_regime = "standard";
    std::size_t bound_n = 1;
    double bound_t = 1.0, bound_kappa = 1.0, bound_eta = 1.0;
    double bound_constant = 1.0, bound_c_sample = 1.0;
    int bound_s = 2;
    CLI::App* bound = app.add_subcommand("bound", "evaluate one bound as JSON");
    bound->add_option("key", bound_key, "bound key")->required();
    bound->add_option("--sigma", bound_sigma, "covariance spec");
    bound->add_option("--n", bound_n, "sample size");
    bound->add_option("--t", bound_t, "confidence parameter");
    bound->add_option("--kappa", bound_kappa, "moment-equivalence constant");
    bound->add_option("--eta", bound_eta, "truncation moment constant");
    bound->add_option("--s", bound_s, "moment order");
    bound->add_option("--constant", bound_constant, "leading constant");
    bound->add_option("--c-sample", bound_c_sample, "sample-size condition constant");
    bound->add_option("--regime", bound_regime, "thm2 regime: standard or sharp");

    std::string est_csv, est_v;
    int est_s = 2;
    double est_t = 1.0, est_eta = 0.0, est_lambda = 0.0;
    CLI::App* estimate = app.add_subcommand(
        "estimate", "truncated moment estimate from a CSV of samples");
    estimate->add_option("data", est_csv, "CSV file, one sample per row")->required();
    estimate->add_option("--v", est_v, "direction: e<k> or comma list")->required();
    estimate->add_option("--s", est_s, "moment order");
    estimate->add_option("--t", est_t, "confidence parameter");
    estimate->add_option("--eta", est_eta, "moment constant used to set lambda");
    estimate->add_option("--lambda", est_lambda, "truncation level override");

    std::string tn_csv;
    int tn_s = 3;
    std::size_t tn_restarts = 64;
    CLI::App* tensornorm = app.add_subcommand(
        "tensornorm", "empirical moment-form supremum from a CSV of samples");
    tensornorm->add_option("data", tn_csv, "CSV file, one sample per row")->required();
    tensornorm->add_option("--s", tn_s, "form order (>= 2)");
    tensornorm->add_option("--restarts", tn_restarts, "power method restarts");
    add_common(tensornorm, &flags);

    std::size_t du_size = 10, du_reps = 100;
    CLI::App* duality = app.add_subcommand(
        "duality", "random spot-check of the entropy/log-MGF duality");
    duality->add_option("--size", du_size, "points per probability space");
    duality->add_option("--reps", du_reps, "number of random instances");
    add_common(duality, &flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 3;
    }

    try {
        if (app.got_subcommand(verify)) return cmd_verify(verify_config, flags);
        if (app.got_subcommand(sweep))
            return cmd_sweep(sweep_config, sweep_n, sweep_d, sweep_t, sweep_s, flags);
        if (app.got_subcommand(bound))
            return cmd_bound(bound_key, bound_sigma, bound_n, bound_t, bound_kappa,
                             bound_eta, bound_s, bound_constant, bound_c_sample,
                             bound_regime);
        if (app.got_subcommand(estimate))
            return cmd_estimate(est_csv, est_v, est_s, est_t, est_eta, est_lambda);
        if (app.got_subcommand(tensornorm))
            return cmd_tensornorm(tn_csv, tn_s, tn_restarts, flags);
        if (app.got_subcommand(duality)) return cmd_duality(du_size, du_reps, flags);
        std::cerr << "error: no subcommand\n";
        return 3;
    } catch (const effrank::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}
