#pragma once
// Seeded Monte Carlo harness: repeated trials of a deviation statistic are
// checked against a theoretical bound and aggregated into serializable
// reports; grids of configurations sweep into plot-ready CSV.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include <effrank/bounds.hpp>
#include <effrank/distributions.hpp>
#include <effrank/errors.hpp>
#include <effrank/estimators.hpp>
#include <effrank/linalg.hpp>
#include <effrank/rng.hpp>
#include <effrank/tensor_ops.hpp>

namespace effrank {

// ---------------------------------------------------------------------------
// Covariance grammar shared by config files and the command line:
//   identity:<d> | diag:<v,..> | polydecay:<d>:<alpha> | expdecay:<d>:<gamma>
//   | spiked:<d>:<k>:<strength>

namespace detail {

inline std::vector<std::string> split_on(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

inline double parse_real(const std::string& tok, const std::string& ctx) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(tok, &pos);
        if (pos != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("bad number \"" + tok + "\" in \"" + ctx + "\"");
    }
}

inline std::size_t parse_count(const std::string& tok, const std::string& ctx) {
    try {
        std::size_t pos = 0;
        const unsigned long long v = std::stoull(tok, &pos);
        if (pos != tok.size() || tok.front() == '-') throw std::invalid_argument(tok);
        return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
        throw ConfigError("bad count \"" + tok + "\" in \"" + ctx + "\"");
    }
}

} // namespace detail

inline CovarianceSpec parse_sigma(const std::string& text) {
    const std::vector<std::string> tok = detail::split_on(text, ':');
    const std::string& kind = tok.front();
    const auto want = [&](std::size_t parts) {
        if (tok.size() != parts)
            throw ConfigError("sigma spec \"" + text + "\": expected " +
                              std::to_string(parts - 1) + " parameter(s) after \"" +
                              kind + "\"");
    };
    if (kind == "identity") {
        want(2);
        const std::size_t d = detail::parse_count(tok[1], text);
        if (d < 1) throw ConfigError("sigma spec \"" + text + "\": need d >= 1");
        return CovarianceSpec::identity_d(d);
    }
    if (kind == "diag") {
        want(2);
        std::vector<double> entries;
        for (const std::string& cell : detail::split_on(tok[1], ','))
            entries.push_back(detail::parse_real(cell, text));
        return CovarianceSpec::diag(entries);
    }
    if (kind == "polydecay") {
        want(3);
        const std::size_t d = detail::parse_count(tok[1], text);
        if (d < 1) throw ConfigError("sigma spec \"" + text + "\": need d >= 1");
        return CovarianceSpec::poly(d, detail::parse_real(tok[2], text));
    }
    if (kind == "expdecay") {
        want(3);
        const std::size_t d = detail::parse_count(tok[1], text);
        if (d < 1) throw ConfigError("sigma spec \"" + text + "\": need d >= 1");
        return CovarianceSpec::expdecay(d, detail::parse_real(tok[2], text));
    }
    if (kind == "spiked") {
        want(4);
        const std::size_t d = detail::parse_count(tok[1], text);
        const std::size_t k = detail::parse_count(tok[2], text);
        const double strength = detail::parse_real(tok[3], text);
        if (d < 1 || k < 1 || k > d)
            throw ConfigError("sigma spec \"" + text + "\": need 1 <= k <= d");
        return CovarianceSpec::spiked(d, k, strength);
    }
    throw ConfigError("sigma spec \"" + text +
                      "\": unknown kind; expected identity, diag, polydecay, "
                      "expdecay, or spiked");
}

inline std::size_t sigma_dim(const CovarianceSpec& spec) {
    return spec.kind == CovKind::explicit_matrix ? spec.matrix.dim() : spec.d;
}

inline std::string sigma_to_text(const CovarianceSpec& spec) {
    std::ostringstream os;
    switch (spec.kind) {
        case CovKind::identity:
            os << "identity:" << spec.d;
            return os.str();
        case CovKind::poly_decay:
            os << "polydecay:" << spec.d << ':' << format_double(spec.alpha);
            return os.str();
        case CovKind::exp_decay:
            os << "expdecay:" << spec.d << ':' << format_double(spec.gamma);
            return os.str();
        case CovKind::spiked:
            os << "spiked:" << spec.d << ':' << spec.spike_count << ':'
               << format_double(spec.spike_strength);
            return os.str();
        case CovKind::explicit_matrix:
            if (spec.matrix.is_diagonal()) {
                os << "diag:";
                for (std::size_t j = 0; j < spec.matrix.dim(); ++j) {
                    if (j) os << ',';
                    os << format_double(spec.matrix(j, j));
                }
                return os.str();
            }
            os << "explicit:" << spec.matrix.dim();
            return os.str();
    }
    throw ConfigError("sigma_to_text: unknown covariance kind");
}

// Re-dimension a parametric spec for dimension sweeps.
inline CovarianceSpec with_dimension(CovarianceSpec spec, std::size_t d) {
    if (d < 1) throw ConfigError("with_dimension: need d >= 1");
    switch (spec.kind) {
        case CovKind::identity:
        case CovKind::poly_decay:
        case CovKind::exp_decay:
            spec.d = d;
            return spec;
        case CovKind::spiked:
            if (spec.spike_count > d)
                throw ConfigError("with_dimension: spiked k exceeds d = " +
                                  std::to_string(d));
            spec.d = d;
            return spec;
        case CovKind::explicit_matrix:
            throw ConfigError("with_dimension: cannot sweep dimension for \"" +
                              sigma_to_text(spec) + "\"");
    }
    throw ConfigError("with_dimension: unknown covariance kind");
}

inline FamilyKind family_from_name(const std::string& name) {
    if (name == "gaussian") return FamilyKind::gaussian;
    if (name == "rademacher-mix") return FamilyKind::rademacher_mix;
    if (name == "laplace-product") return FamilyKind::laplace_product;
    if (name == "uniform-ball") return FamilyKind::uniform_ball;
    if (name == "student-t") return FamilyKind::student_t;
    throw ConfigError("unknown family \"" + name +
                      "\"; known families: gaussian, rademacher-mix, "
                      "laplace-product, uniform-ball, student-t");
}

// ---------------------------------------------------------------------------
// Statistic keys and the statistic/bound compatibility table

inline const std::map<std::string, std::vector<std::string>>& statistic_bound_table() {
    static const std::map<std::string, std::vector<std::string>> table = {
        {"cov-deviation", {"thm1", "prop1", "thm3", "cor-logconcave"}},
        {"cov-lower-deviation", {"prop-lowertail", "thm1"}},
        {"trunc-moment-error", {"trunc-lemma"}},
        {"tensor-deviation", {"thm2"}},
        {"norm", {"prop-subexp-norm"}},
        {"subexp-norm", {"prop-subexp-norm"}},
        {"norm-squared", {"lemma-norm-subg", "lemma-norm-gauss-exact"}},
    };
    return table;
}

inline std::vector<std::string> statistic_keys() {
    std::vector<std::string> keys;
    for (const auto& [k, v] : statistic_bound_table()) keys.push_back(k);
    return keys;
}

// Statistics that measure one draw rather than an n-sample estimator.
inline bool single_draw_statistic(const std::string& key) {
    return key == "norm" || key == "norm-squared" || key == "subexp-norm";
}

// ---------------------------------------------------------------------------
// Configuration

struct ExperimentConfig {
    DistributionFamily family;               // kind, covariance spec, nu
    std::size_t n = 100;                     // samples per trial
    int s = 2;                               // moment order where relevant
    double t = 1.0;                          // confidence parameter
    std::size_t trials = 1;
    std::uint64_t master_seed = 1;
    std::string statistic = "cov-deviation";
    std::string bound = "thm1";
    std::map<std::string, double> constants; // kappa / eta / constant / c_sample
    std::size_t tensor_restarts = 64;
    Thm2Regime regime = Thm2Regime::standard;

    void validate() const {
        if (trials < 1) throw ConfigError("config: trials must be >= 1");
        if (n < 1) throw ConfigError("config: n must be >= 1");
        if (!(t > 0.0)) throw ConfigError("config: t must be > 0");
        if (s < 1) throw ConfigError("config: s must be >= 1");
        if (tensor_restarts < 1) throw ConfigError("config: tensor_restarts must be >= 1");
        if (family.kind == FamilyKind::student_t && family.nu < 3)
            throw ConfigError("config: student-t needs nu >= 3");

        const auto& table = statistic_bound_table();
        const auto it = table.find(statistic);
        if (it == table.end()) {
            std::string keys;
            for (const auto& [k, v] : table) {
                if (!keys.empty()) keys += ", ";
                keys += k;
            }
            throw ConfigError("unknown statistic \"" + statistic +
                              "\"; known statistics: " + keys);
        }
        const auto& allowed = it->second;
        if (std::find(allowed.begin(), allowed.end(), bound) == allowed.end()) {
            std::string keys;
            for (const auto& b : allowed) {
                if (!keys.empty()) keys += ", ";
                keys += b;
            }
            throw ConfigError("statistic \"" + statistic + "\" pairs with: " + keys +
                              "; got bound \"" + bound + "\"");
        }
        if (single_draw_statistic(statistic) && n != 1)
            throw ConfigError("statistic \"" + statistic +
                              "\" measures a single draw; set n = 1");
        if (statistic == "tensor-deviation" && s < 2)
            throw ConfigError("tensor-deviation needs s >= 2");
        for (const auto& [name, value] : constants) {
            if (name != "kappa" && name != "eta" && name != "constant" &&
                name != "c_sample")
                throw ConfigError("unknown constant \"" + name +
                                  "\"; allowed: kappa, eta, constant, c_sample");
            if (!(value > 0.0))
                throw ConfigError("constant \"" + name + "\" must be > 0");
        }
    }
};

// ---------------------------------------------------------------------------
// Report

struct ExperimentReport {
    std::string schema_version = "1";
    ExperimentConfig config;
    std::vector<double> per_trial;       // indexed by trial, not completion order
    double bound_value = 0.0;
    bool valid = false;                  // bound preconditions satisfied
    std::string condition_text;          // unmet precondition, empty when valid
    double violation_rate = 0.0;         // fraction of trials with value > bound
    double empirical_quantile = 0.0;     // nearest-rank quantile at 1 - e^{-t}
    double statistic_median = 0.0;
    std::map<std::string, double> constants_used;
    std::vector<std::string> annotations;
    double wall_time_seconds = 0.0;      // excluded from deterministic output
};

// ---------------------------------------------------------------------------
// Constant resolution

namespace detail {

inline bool bound_needs_kappa(const std::string& b) {
    return b == "thm1" || b == "prop1" || b == "lemma-norm-subg" ||
           b == "prop-subexp-norm" || b == "prop-lowertail" || b == "cor-logconcave";
}
inline bool bound_needs_eta(const std::string& b) { return b == "trunc-lemma"; }
inline bool bound_needs_constant(const std::string& b) {
    return b == "thm2" || b == "thm3" || b == "cor-logconcave" || b == "trunc-lemma";
}
inline bool bound_needs_c_sample(const std::string& b) {
    return b == "thm2" || b == "thm3";
}

inline bool constants_lookup(const std::map<std::string, double>& m,
                             const std::string& key, double* out) {
    const auto it = m.find(key);
    if (it == m.end()) return false;
    *out = it->second;
    return true;
}

} // namespace detail

// kappa defaults to the psi_2 constant when the family has one, otherwise to
// the fourth-moment equivalence constant eta(2).
inline double default_kappa(const DistributionFamily& fam) {
    try {
        return has_psi2(fam.kind) ? kappa_psi2(fam) : eta(fam, 2);
    } catch (const MomentDoesNotExist&) {
        throw ConfigError("no default kappa for " + family_name(fam.kind) +
                          " (nu = " + std::to_string(fam.nu) +
                          "); set constants.kappa explicitly");
    }
}

// ---------------------------------------------------------------------------
// Trial statistics

namespace detail {

// The 16 evaluation directions for the truncated-moment statistic: the
// leading eigendirections of Sigma, padded with seeded random unit vectors.
inline std::vector<std::vector<double>> trunc_directions(const SymMatrix& sigma,
                                                         std::uint64_t master_seed) {
    constexpr std::size_t count = 16;
    const std::size_t d = sigma.dim();
    std::vector<std::vector<double>> dirs;
    const EigenDecomposition e = sym_eigen(sigma);
    for (std::size_t k = 0; k < d && dirs.size() < count; ++k)
        dirs.push_back(e.eigenvectors[k]);
    Rng rng(SeedSpec{master_seed, 0xffffffffffffffffULL}); // reserved stream
    while (dirs.size() < count) {
        std::vector<double> v(d);
        double nrm_sq = 0.0;
        for (double& x : v) {
            x = rng.gaussian();
            nrm_sq += x * x;
        }
        if (nrm_sq < 1e-24) continue;
        const double inv = 1.0 / std::sqrt(nrm_sq);
        for (double& x : v) x *= inv;
        dirs.push_back(std::move(v));
    }
    return dirs;
}

struct TrialPlan {
    std::function<double(const SampleSet&)> eval;
    double trunc_lambda = 0.0; // set for trunc-moment-error
};

inline TrialPlan make_trial_plan(const ExperimentConfig& cfg, const SymMatrix& sigma,
                                 double eta_value) {
    const std::string& key = cfg.statistic;
    TrialPlan plan;
    if (key == "cov-deviation") {
        plan.eval = [sigma](const SampleSet& ss) {
            return covariance_deviation(ss, sigma);
        };
    } else if (key == "cov-lower-deviation") {
        plan.eval = [sigma](const SampleSet& ss) {
            const SymMatrix gap = sigma - sample_covariance(ss);
            return sym_eigen(gap).eigenvalues.front(); // largest eigenvalue
        };
    } else if (key == "norm" || key == "subexp-norm" || key == "norm-squared") {
        const bool squared = key == "norm-squared";
        plan.eval = [squared](const SampleSet& ss) {
            const double* x = ss.row(0);
            double nsq = 0.0;
            for (std::size_t j = 0; j < ss.d(); ++j) nsq += x[j] * x[j];
            return squared ? nsq : std::sqrt(nsq);
        };
    } else if (key == "trunc-moment-error") {
        const double lambda = truncation_level(eta_value, cfg.s, sigma, cfg.n, cfg.t);
        plan.trunc_lambda = lambda;
        const TruncationConfig tc{lambda, cfg.s, cfg.t};
        const std::vector<std::vector<double>> dirs =
            trunc_directions(sigma, cfg.master_seed);
        std::vector<double> truths;
        truths.reserve(dirs.size());
        for (const auto& v : dirs) truths.push_back(true_moment(cfg.family, v, cfg.s).value);
        plan.eval = [tc, dirs, truths](const SampleSet& ss) {
            double acc = 0.0;
            for (std::size_t k = 0; k < dirs.size(); ++k) {
                const TruncatedMomentResult r = truncated_moment_estimate(ss, dirs[k], tc);
                acc += std::fabs(r.estimate - truths[k]);
            }
            return acc / static_cast<double>(dirs.size());
        };
    } else if (key == "tensor-deviation") {
        const Centering centering = centering_for_family(cfg.family, cfg.s);
        PowerOptions opt;
        opt.restarts = cfg.tensor_restarts;
        const int s = cfg.s;
        plan.eval = [centering, opt, s](const SampleSet& ss) {
            const EmpiricalTensorForm form(ss, s, centering);
            return operator_norm_sup(form, opt).value;
        };
    } else {
        throw ConfigError("unknown statistic \"" + key + "\"");
    }
    return plan;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Running one experiment

inline ExperimentReport run_experiment(const ExperimentConfig& cfg, unsigned threads = 1) {
    cfg.validate();
    const auto started = std::chrono::steady_clock::now();

    const Sampler sampler(cfg.family);
    const SymMatrix sigma = sampler.sigma();

    // Resolve named constants, preferring explicit overrides.
    double kappa = 1.0;
    const bool kappa_needed = detail::bound_needs_kappa(cfg.bound);
    if (kappa_needed && !detail::constants_lookup(cfg.constants, "kappa", &kappa))
        kappa = default_kappa(cfg.family);
    double eta_value = 1.0;
    const bool eta_needed =
        detail::bound_needs_eta(cfg.bound) || cfg.statistic == "trunc-moment-error";
    if (eta_needed && !detail::constants_lookup(cfg.constants, "eta", &eta_value))
        eta_value = eta(cfg.family, cfg.s);
    double constant = 1.0;
    detail::constants_lookup(cfg.constants, "constant", &constant);
    double c_sample = 1.0;
    detail::constants_lookup(cfg.constants, "c_sample", &c_sample);

    BoundInputs in;
    in.sigma = sigma;
    in.n = cfg.n;
    in.t = cfg.t;
    in.kappa = kappa;
    in.eta = eta_value;
    in.s = cfg.s;
    in.constant = constant;
    in.c_sample = c_sample;
    in.regime = cfg.regime;
    const BoundResult br = bound_by_key(cfg.bound, in);

    ExperimentReport rep;
    rep.config = cfg;
    rep.bound_value = br.value;
    rep.valid = br.valid;
    rep.condition_text = br.condition_text;
    rep.constants_used = br.constants_used;
    if (kappa_needed) rep.constants_used["kappa"] = kappa;
    if (eta_needed) rep.constants_used["eta"] = eta_value;
    if (detail::bound_needs_constant(cfg.bound)) rep.constants_used["constant"] = constant;
    if (detail::bound_needs_c_sample(cfg.bound)) rep.constants_used["c_sample"] = c_sample;
    if (!br.valid)
        rep.annotations.push_back("warning: bound preconditions not met (" +
                                  br.condition_text + "); report marked invalid");
    if (cfg.family.kind == FamilyKind::student_t &&
        cfg.statistic == "cov-lower-deviation")
        rep.annotations.push_back(
            "lower tail only: the deviation below the mean concentrates at the "
            "stated rate even for this heavy-tailed family, while the matching "
            "upper tail is heavier and is not asserted");

    const detail::TrialPlan plan = detail::make_trial_plan(cfg, sigma, eta_value);
    if (plan.trunc_lambda > 0.0) rep.constants_used["lambda"] = plan.trunc_lambda;

    // Trials are independent; trial i always consumes stream i of the master
    // seed, so results do not depend on the worker count.
    rep.per_trial.assign(cfg.trials, 0.0);
    {
        std::atomic<std::size_t> next{0};
        std::exception_ptr first_error;
        std::mutex error_mutex;
        const auto work = [&]() {
            const std::size_t d = sampler.dim();
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= cfg.trials) return;
                try {
                    std::vector<double> rows =
                        sampler.sample(cfg.n, SeedSpec{cfg.master_seed, i});
                    const SampleSet ss(std::move(rows), cfg.n, d);
                    rep.per_trial[i] = plan.eval(ss);
                } catch (...) {
                    const std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        };
        const unsigned workers = std::min<unsigned>(
            std::max(1u, threads), static_cast<unsigned>(std::min<std::size_t>(
                                       cfg.trials, 1024)));
        if (workers <= 1) {
            work();
        } else {
            std::vector<std::thread> pool;
            pool.reserve(workers);
            for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
            for (auto& th : pool) th.join();
        }
        if (first_error) std::rethrow_exception(first_error);
    }

    // Aggregate (order-insensitive: per_trial is already indexed by trial).
    std::vector<double> sorted = rep.per_trial;
    std::sort(sorted.begin(), sorted.end());
    std::size_t violations = 0;
    for (double v : rep.per_trial)
        if (v > rep.bound_value) ++violations;
    rep.violation_rate =
        static_cast<double>(violations) / static_cast<double>(cfg.trials);
    const double level = 1.0 - std::exp(-cfg.t);
    std::size_t rank = static_cast<std::size_t>(
        std::ceil(level * static_cast<double>(cfg.trials)));
    rank = std::min(std::max<std::size_t>(rank, 1), cfg.trials);
    rep.empirical_quantile = sorted[rank - 1];
    const std::size_t mid = cfg.trials / 2;
    rep.statistic_median = (cfg.trials % 2 == 1)
                               ? sorted[mid]
                               : 0.5 * (sorted[mid - 1] + sorted[mid]);

    rep.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
            .count();
    return rep;
}

// ---------------------------------------------------------------------------
// JSON serialization

inline nlohmann::json config_to_json(const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["family"] = family_name(cfg.family.kind);
    if (cfg.family.kind == FamilyKind::student_t) j["nu"] = cfg.family.nu;
    j["sigma"] = sigma_to_text(cfg.family.sigma);
    if (cfg.family.sigma.kind == CovKind::explicit_matrix &&
        !cfg.family.sigma.matrix.is_diagonal()) {
        const SymMatrix& m = cfg.family.sigma.matrix;
        nlohmann::json rows = nlohmann::json::array();
        for (std::size_t i = 0; i < m.dim(); ++i) {
            nlohmann::json row = nlohmann::json::array();
            for (std::size_t k = 0; k < m.dim(); ++k) row.push_back(m(i, k));
            rows.push_back(std::move(row));
        }
        j["sigma_matrix"] = std::move(rows);
    }
    j["n"] = cfg.n;
    j["s"] = cfg.s;
    j["t"] = cfg.t;
    j["trials"] = cfg.trials;
    j["master_seed"] = cfg.master_seed;
    j["statistic"] = cfg.statistic;
    j["bound"] = cfg.bound;
    j["constants"] = cfg.constants;
    j["tensor_restarts"] = cfg.tensor_restarts;
    j["regime"] = cfg.regime == Thm2Regime::sharp ? "sharp" : "standard";
    return j;
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
    try {
        ExperimentConfig cfg;
        cfg.family.kind = family_from_name(j.at("family").get<std::string>());
        cfg.family.nu = j.value("nu", 5);
        const std::string sigma_text = j.at("sigma").get<std::string>();
        if (j.contains("sigma_matrix")) {
            std::vector<std::vector<double>> rows;
            for (const auto& row : j.at("sigma_matrix"))
                rows.push_back(row.get<std::vector<double>>());
            cfg.family.sigma = CovarianceSpec::explicit_m(SymMatrix::from_rows(rows));
        } else {
            cfg.family.sigma = parse_sigma(sigma_text);
        }
        cfg.n = j.at("n").get<std::size_t>();
        cfg.s = j.value("s", 2);
        cfg.t = j.at("t").get<double>();
        cfg.trials = j.at("trials").get<std::size_t>();
        cfg.master_seed = j.value("master_seed", std::uint64_t{1});
        cfg.statistic = j.at("statistic").get<std::string>();
        cfg.bound = j.at("bound").get<std::string>();
        if (j.contains("constants"))
            cfg.constants = j.at("constants").get<std::map<std::string, double>>();
        cfg.tensor_restarts = j.value("tensor_restarts", std::size_t{64});
        const std::string regime = j.value("regime", std::string("standard"));
        if (regime == "standard") {
            cfg.regime = Thm2Regime::standard;
        } else if (regime == "sharp") {
            cfg.regime = Thm2Regime::sharp;
        } else {
            throw ConfigError("regime must be \"standard\" or \"sharp\"");
        }
        return cfg;
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("bad experiment config: ") + e.what());
    }
}

inline nlohmann::json report_to_json(const ExperimentReport& rep,
                                     bool include_wall_time) {
    nlohmann::json j;
    j["schema_version"] = rep.schema_version;
    j["config"] = config_to_json(rep.config);
    j["bound_value"] = rep.bound_value;
    j["valid"] = rep.valid;
    j["condition_text"] = rep.condition_text;
    j["violation_rate"] = rep.violation_rate;
    j["empirical_quantile"] = rep.empirical_quantile;
    j["statistic_median"] = rep.statistic_median;
    j["constants_used"] = rep.constants_used;
    j["annotations"] = rep.annotations;
    j["per_trial"] = rep.per_trial;
    if (include_wall_time) j["wall_time_seconds"] = rep.wall_time_seconds;
    return j;
}

// report.json (with timing) plus a per-trial CSV next to it.
inline void write_report_files(const ExperimentReport& rep, const std::string& dir) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream os(std::filesystem::path(dir) / "report.json");
        if (!os) throw ConfigError("cannot write report.json under " + dir);
        os << report_to_json(rep, true).dump(2) << '\n';
    }
    {
        std::ofstream os(std::filesystem::path(dir) / "trials.csv");
        if (!os) throw ConfigError("cannot write trials.csv under " + dir);
        os << "trial,value\n";
        for (std::size_t i = 0; i < rep.per_trial.size(); ++i)
            os << i << ',' << format_double(rep.per_trial[i]) << '\n';
    }
}

// ---------------------------------------------------------------------------
// Sweeps

struct SweepGrid {
    std::vector<std::size_t> n;
    std::vector<std::size_t> d; // re-dimensions parametric sigma specs
    std::vector<double> t;
    std::vector<int> s;

    bool empty() const { return n.empty() && d.empty() && t.empty() && s.empty(); }
};

struct SweepPoint {
    ExperimentConfig config;
    bool ok = false;
    std::string error; // set when ok is false
    ExperimentReport report;
};

// One report per grid point, iterating n (outer), then d, t, s.  A failing
// point records its error and the sweep continues.
inline std::vector<SweepPoint> sweep(const ExperimentConfig& base,
                                     const SweepGrid& grid, unsigned threads = 1) {
    std::vector<SweepPoint> out;
    if (grid.empty()) return out;
    const std::size_t nn = std::max<std::size_t>(grid.n.size(), 1);
    const std::size_t nd = std::max<std::size_t>(grid.d.size(), 1);
    const std::size_t nt = std::max<std::size_t>(grid.t.size(), 1);
    const std::size_t ns = std::max<std::size_t>(grid.s.size(), 1);
    for (std::size_t in = 0; in < nn; ++in)
        for (std::size_t id = 0; id < nd; ++id)
            for (std::size_t it = 0; it < nt; ++it)
                for (std::size_t is = 0; is < ns; ++is) {
                    SweepPoint pt;
                    pt.config = base;
                    if (!grid.n.empty()) pt.config.n = grid.n[in];
                    if (!grid.t.empty()) pt.config.t = grid.t[it];
                    if (!grid.s.empty()) pt.config.s = grid.s[is];
                    try {
                        if (!grid.d.empty())
                            pt.config.family.sigma =
                                with_dimension(base.family.sigma, grid.d[id]);
                        pt.report = run_experiment(pt.config, threads);
                        pt.ok = true;
                    } catch (const std::exception& e) {
                        pt.ok = false;
                        pt.error = e.what();
                    }
                    out.push_back(std::move(pt));
                }
    return out;
}

// Long-form CSV for rate plots; failed points are skipped.
inline std::string sweep_csv(const std::vector<SweepPoint>& points) {
    std::ostringstream os;
    os << "n,d,t,s,statistic_median,bound_value,violation_rate\n";
    for (const auto& pt : points) {
        if (!pt.ok) continue;
        const ExperimentConfig& cfg = pt.report.config;
        os << cfg.n << ',' << sigma_dim(cfg.family.sigma) << ','
           << format_double(cfg.t) << ',' << cfg.s << ','
           << format_double(pt.report.statistic_median) << ','
           << format_double(pt.report.bound_value) << ','
           << format_double(pt.report.violation_rate) << '\n';
    }
    return os.str();
}

inline nlohmann::json sweep_to_json(const std::vector<SweepPoint>& points,
                                    bool include_wall_time) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& pt : points) {
        nlohmann::json j;
        j["ok"] = pt.ok;
        if (pt.ok) {
            j["report"] = report_to_json(pt.report, include_wall_time);
        } else {
            j["error"] = pt.error;
            j["config"] = config_to_json(pt.config);
        }
        arr.push_back(std::move(j));
    }
    return arr;
}

inline constexpr const char* kSweepPlotScript = R"PY(#!/usr/bin/env python3
"""Plot sweep.csv (written next to this script) as log-log rate curves."""
import collections
import csv
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
with open(os.path.join(here, "sweep.csv"), newline="") as fh:
    rows = list(csv.DictReader(fh))

groups = collections.defaultdict(list)
for row in rows:
    key = (row["d"], row["t"], row["s"])
    groups[key].append((int(row["n"]), float(row["statistic_median"]),
                        float(row["bound_value"])))

fig, ax = plt.subplots(figsize=(6.4, 4.2))
for key, pts in sorted(groups.items()):
    pts.sort()
    ns = [p[0] for p in pts]
    ax.loglog(ns, [p[1] for p in pts], "o-",
              label=f"median (d={key[0]}, t={key[1]}, s={key[2]})")
    ax.loglog(ns, [p[2] for p in pts], "--", alpha=0.5)
ax.set_xlabel("n")
ax.set_ylabel("statistic")
ax.legend(fontsize=8)
fig.tight_layout()
fig.savefig(os.path.join(here, "sweep.png"), dpi=150)
print("wrote", os.path.join(here, "sweep.png"))
)PY";

// sweep.csv, sweep.json, and a small plot script.
inline void write_sweep_files(const std::vector<SweepPoint>& points,
                              const std::string& dir) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream os(std::filesystem::path(dir) / "sweep.csv");
        if (!os) throw ConfigError("cannot write sweep.csv under " + dir);
        os << sweep_csv(points);
    }
    {
        std::ofstream os(std::filesystem::path(dir) / "sweep.json");
        if (!os) throw ConfigError("cannot write sweep.json under " + dir);
        os << sweep_to_json(points, true).dump(2) << '\n';
    }
    {
        std::ofstream os(std::filesystem::path(dir) / "plot_sweep.py");
        if (!os) throw ConfigError("cannot write plot_sweep.py under " + dir);
        os << kSweepPlotScript;
    }
}

} // namespace effrank
