#include "ppde/config.hpp"

#include <cmath>
#include <fstream>

#include "ppde/errors.hpp"
#include "ppde/numerics.hpp"

namespace ppde {

namespace {

using nlohmann::json;

// Every lookup goes through these helpers so diagnostics always carry the
// full dotted path of the offending key.

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw config_error("config: " + path + ": " + what);
}

void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) fail(path, "expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* k : allowed)
            if (it.key() == k) {
                known = true;
                break;
            }
        if (!known) fail(path + "." + it.key(), "unknown key");
    }
}

double get_double(const json& j, const std::string& path, const char* key, double dflt) {
    if (!j.contains(key)) return dflt;
    const json& v = j.at(key);
    if (!v.is_number()) fail(path + "." + key, "expected a number");
    return v.get<double>();
}

long get_integer(const json& j, const std::string& path, const char* key, long dflt) {
    if (!j.contains(key)) return dflt;
    const json& v = j.at(key);
    if (!v.is_number_integer()) fail(path + "." + key, "expected an integer");
    return v.get<long>();
}

int get_int(const json& j, const std::string& path, const char* key, int dflt) {
    return static_cast<int>(get_integer(j, path, key, dflt));
}

bool get_bool(const json& j, const std::string& path, const char* key, bool dflt) {
    if (!j.contains(key)) return dflt;
    const json& v = j.at(key);
    if (!v.is_boolean()) fail(path + "." + key, "expected true or false");
    return v.get<bool>();
}

std::string get_string(const json& j, const std::string& path, const char* key, const std::string& dflt) {
    if (!j.contains(key)) return dflt;
    const json& v = j.at(key);
    if (!v.is_string()) fail(path + "." + key, "expected a string");
    return v.get<std::string>();
}

std::vector<double> get_double_list(const json& v, const std::string& path) {
    if (v.is_number()) return {v.get<double>()};
    if (!v.is_array()) fail(path, "expected a number or an array of numbers");
    std::vector<double> out;
    out.reserve(v.size());
    for (const json& e : v) {
        if (!e.is_number()) fail(path, "expected a number or an array of numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

void require_positive_int(int value, const std::string& path) {
    if (value < 1) fail(path, "must be >= 1, got " + std::to_string(value));
}

InitialLaw parse_x0(const json& m) {
    InitialLaw law;
    law.values = {1.0};
    if (!m.contains("x0")) return law;
    const json& x = m.at("x0");
    const std::string kind = get_string(x, "model.x0", "kind", "fixed");
    if (kind == "fixed") {
        check_keys(x, "model.x0", {"kind", "values"});
        law.kind = InitialLaw::Kind::fixed;
        if (x.contains("values")) law.values = get_double_list(x.at("values"), "model.x0.values");
        if (law.values.empty()) fail("model.x0.values", "must not be empty");
    } else if (kind == "lognormal") {
        check_keys(x, "model.x0", {"kind", "mu", "sigma", "tau"});
        law.kind = InitialLaw::Kind::lognormal;
        law.values.clear();
        law.mu = get_double(x, "model.x0", "mu", 0.08);
        law.sigma_law = get_double(x, "model.x0", "sigma", 0.0);
        law.tau = get_double(x, "model.x0", "tau", 0.1);
        if (!(law.tau > 0.0)) fail("model.x0.tau", "must be positive");
        if (law.sigma_law < 0.0) fail("model.x0.sigma", "must be non-negative");
    } else {
        fail("model.x0.kind", "expected fixed or lognormal, got '" + kind + "'");
    }
    return law;
}

BetaLaw parse_beta_law(const json& m) {
    BetaLaw law;
    if (!m.contains("beta")) return law;
    const json& b = m.at("beta");
    const std::string kind = get_string(b, "model.beta", "kind", "fixed");
    if (kind == "fixed") {
        check_keys(b, "model.beta", {"kind"});
        law.kind = BetaLaw::Kind::fixed;
    } else if (kind == "uniform") {
        check_keys(b, "model.beta", {"kind", "lo", "hi"});
        law.kind = BetaLaw::Kind::uniform;
        law.lo = get_double(b, "model.beta", "lo", 0.0);
        law.hi = get_double(b, "model.beta", "hi", 0.4);
        if (law.lo > law.hi) fail("model.beta", "lo must not exceed hi");
    } else {
        fail("model.beta.kind", "expected fixed or uniform, got '" + kind + "'");
    }
    return law;
}

void parse_model(const json& j, RunConfig& cfg) {
    if (!j.contains("model")) fail("model", "section is required");
    const json& m = j.at("model");
    if (!m.is_object()) fail("model", "expected an object");
    if (!m.contains("type")) fail("model.type", "field is required");
    cfg.model_type = get_string(m, "model", "type", "");
    if (cfg.model_type == "black_scholes") {
        check_keys(m, "model", {"type", "d", "rate", "sigma", "covariance", "x0", "beta"});
        cfg.bs.d = get_int(m, "model", "d", 1);
        require_positive_int(cfg.bs.d, "model.d");
        cfg.bs.rate = get_double(m, "model", "rate", 0.0);
        cfg.bs.sigma = m.contains("sigma") ? get_double_list(m.at("sigma"), "model.sigma")
                                           : std::vector<double>{0.3};
        if (static_cast<int>(cfg.bs.sigma.size()) == 1 && cfg.bs.d > 1)
            cfg.bs.sigma.assign(cfg.bs.d, cfg.bs.sigma[0]);
        if (static_cast<int>(cfg.bs.sigma.size()) != cfg.bs.d)
            fail("model.sigma", "expected 1 or " + std::to_string(cfg.bs.d) + " entries, got " +
                                    std::to_string(cfg.bs.sigma.size()));
        for (double s : cfg.bs.sigma)
            if (s < 0.0) fail("model.sigma", "volatilities must be non-negative");
        cfg.bs.covariance = Mat(cfg.bs.d, cfg.bs.d, 0.0);
        for (int i = 0; i < cfg.bs.d; ++i) cfg.bs.covariance.at(i, i) = 1.0;
        if (m.contains("covariance")) {
            const json& c = m.at("covariance");
            if (!c.is_array() || static_cast<int>(c.size()) != cfg.bs.d)
                fail("model.covariance", "expected " + std::to_string(cfg.bs.d) + " rows");
            for (int i = 0; i < cfg.bs.d; ++i) {
                const std::vector<double> row = get_double_list(c.at(i), "model.covariance");
                if (static_cast<int>(row.size()) != cfg.bs.d)
                    fail("model.covariance", "row " + std::to_string(i) + " has " +
                                                 std::to_string(row.size()) + " entries, expected " +
                                                 std::to_string(cfg.bs.d));
                for (int l = 0; l < cfg.bs.d; ++l) cfg.bs.covariance.at(i, l) = row[l];
            }
        }
        cfg.bs.x0 = parse_x0(m);
        if (cfg.bs.x0.kind == InitialLaw::Kind::fixed &&
            static_cast<int>(cfg.bs.x0.values.size()) == 1 && cfg.bs.d > 1)
            cfg.bs.x0.values.assign(cfg.bs.d, cfg.bs.x0.values[0]);
        if (cfg.bs.x0.kind == InitialLaw::Kind::fixed &&
            static_cast<int>(cfg.bs.x0.values.size()) != cfg.bs.d)
            fail("model.x0.values", "expected 1 or " + std::to_string(cfg.bs.d) + " entries");
        cfg.bs.beta = parse_beta_law(m);
    } else if (cfg.model_type == "heston") {
        check_keys(m, "model", {"type", "rate", "kappa", "mu_bar", "eta", "rho", "v0", "s0"});
        cfg.heston.rate = get_double(m, "model", "rate", 0.0);
        cfg.heston.kappa = get_double(m, "model", "kappa", 3.0);
        cfg.heston.mu_bar = get_double(m, "model", "mu_bar", 0.3);
        cfg.heston.eta = get_double(m, "model", "eta", 1.0);
        cfg.heston.rho = get_double(m, "model", "rho", 0.6);
        cfg.heston.v0 = get_double(m, "model", "v0", 1.0);
        cfg.heston.s0 = get_double(m, "model", "s0", 1.0);
    } else {
        fail("model.type", "expected black_scholes or heston, got '" + cfg.model_type + "'");
    }
}

void parse_grid(const json& j, RunConfig& cfg) {
    if (!j.contains("grid")) return;
    const json& g = j.at("grid");
    check_keys(g, "grid", {"maturity", "n_fine", "n_coarse"});
    cfg.maturity = get_double(g, "grid", "maturity", cfg.maturity);
    cfg.n_fine = get_int(g, "grid", "n_fine", cfg.n_fine);
    cfg.n_coarse = get_int(g, "grid", "n_coarse", cfg.n_coarse);
    if (!(cfg.maturity > 0.0)) fail("grid.maturity", "must be positive");
    require_positive_int(cfg.n_coarse, "grid.n_coarse");
    require_positive_int(cfg.n_fine, "grid.n_fine");
    if (cfg.n_fine % cfg.n_coarse != 0)
        fail("grid.n_fine", "must be a multiple of n_coarse (" + std::to_string(cfg.n_fine) + " vs " +
                                std::to_string(cfg.n_coarse) + ")");
}

void parse_payoff(const json& j, RunConfig& cfg) {
    if (!j.contains("payoff")) return;
    const json& p = j.at("payoff");
    cfg.payoff_type = get_string(p, "payoff", "type", cfg.payoff_type);
    if (cfg.payoff_type == "lookback") {
        check_keys(p, "payoff", {"type"});
        return;
    }
    if (cfg.payoff_type != "autocallable")
        fail("payoff.type", "expected lookback or autocallable, got '" + cfg.payoff_type + "'");
    check_keys(p, "payoff", {"type", "barrier", "observation_times", "payoffs", "redemption_a", "redemption_b"});
    cfg.ac_barrier = get_double(p, "payoff", "barrier", cfg.ac_barrier);
    if (p.contains("observation_times"))
        cfg.ac_obs_times = get_double_list(p.at("observation_times"), "payoff.observation_times");
    if (p.contains("payoffs")) cfg.ac_payoffs = get_double_list(p.at("payoffs"), "payoff.payoffs");
    cfg.ac_redemption_a = get_double(p, "payoff", "redemption_a", cfg.ac_redemption_a);
    cfg.ac_redemption_b = get_double(p, "payoff", "redemption_b", cfg.ac_redemption_b);
    if (cfg.ac_obs_times.empty()) fail("payoff.observation_times", "must not be empty");
    if (cfg.ac_obs_times.size() != cfg.ac_payoffs.size())
        fail("payoff.payoffs", "expected one entry per observation time (" +
                                   std::to_string(cfg.ac_obs_times.size()) + " observation times, " +
                                   std::to_string(cfg.ac_payoffs.size()) + " payoffs)");
    for (std::size_t i = 1; i < cfg.ac_obs_times.size(); ++i)
        if (cfg.ac_obs_times[i] <= cfg.ac_obs_times[i - 1])
            fail("payoff.observation_times", "must be strictly increasing");
}

void parse_encoding_section(const json& j, RunConfig& cfg) {
    if (!j.contains("encoding")) return;
    const json& e = j.at("encoding");
    check_keys(e, "encoding", {"kind", "depth", "transform"});
    if (e.contains("kind")) cfg.encoding.kind = parse_encoding(get_string(e, "encoding", "kind", ""));
    cfg.encoding.depth = get_int(e, "encoding", "depth", cfg.encoding.depth);
    if (e.contains("transform"))
        cfg.encoding.transform = parse_transform(get_string(e, "encoding", "transform", ""));
    cfg.encoding.validate();
}

void parse_network(const json& j, RunConfig& cfg) {
    if (!j.contains("network")) return;
    const json& n = j.at("network");
    check_keys(n, "network", {"type", "ffn_hidden", "lstm_hidden", "lstm_head"});
    const std::string type =
        get_string(n, "network", "type", cfg.network.type == NetworkConfig::Type::ffn ? "ffn" : "lstm");
    if (type == "ffn")
        cfg.network.type = NetworkConfig::Type::ffn;
    else if (type == "lstm")
        cfg.network.type = NetworkConfig::Type::lstm;
    else
        fail("network.type", "expected ffn or lstm, got '" + type + "'");
    if (n.contains("ffn_hidden")) {
        const json& h = n.at("ffn_hidden");
        if (!h.is_array()) fail("network.ffn_hidden", "expected an array of layer widths");
        cfg.network.ffn_hidden.clear();
        for (const json& e : h) {
            if (!e.is_number_integer()) fail("network.ffn_hidden", "expected an array of integers");
            cfg.network.ffn_hidden.push_back(e.get<int>());
            require_positive_int(cfg.network.ffn_hidden.back(), "network.ffn_hidden");
        }
    }
    cfg.network.lstm_hidden = get_int(n, "network", "lstm_hidden", cfg.network.lstm_hidden);
    cfg.network.lstm_head = get_int(n, "network", "lstm_head", cfg.network.lstm_head);
    require_positive_int(cfg.network.lstm_hidden, "network.lstm_hidden");
    require_positive_int(cfg.network.lstm_head, "network.lstm_head");
}

void parse_training(const json& j, RunConfig& cfg) {
    if (!j.contains("training")) return;
    const json& t = j.at("training");
    check_keys(t, "training", {"method", "iterations", "batch_size", "test_batch_size", "eval_every", "optimizer"});
    if (t.contains("method")) cfg.training.method = parse_method(get_string(t, "training", "method", ""));
    cfg.training.iterations = get_int(t, "training", "iterations", cfg.training.iterations);
    cfg.training.batch_size = get_int(t, "training", "batch_size", cfg.training.batch_size);
    cfg.training.test_batch_size = get_int(t, "training", "test_batch_size", cfg.training.test_batch_size);
    cfg.training.eval_every = get_int(t, "training", "eval_every", cfg.training.eval_every);
    require_positive_int(cfg.training.iterations, "training.iterations");
    require_positive_int(cfg.training.batch_size, "training.batch_size");
    if (cfg.training.test_batch_size < 0) fail("training.test_batch_size", "must be >= 0");
    require_positive_int(cfg.training.eval_every, "training.eval_every");
    if (t.contains("optimizer")) {
        const json& o = t.at("optimizer");
        check_keys(o, "training.optimizer", {"method", "learning_rate", "beta1", "beta2", "eps"});
        const std::string method = get_string(o, "training.optimizer", "method",
                                              cfg.training.optimizer.method == OptimizerConfig::Method::sgd
                                                  ? "sgd"
                                                  : "adam");
        if (method == "sgd")
            cfg.training.optimizer.method = OptimizerConfig::Method::sgd;
        else if (method == "adam")
            cfg.training.optimizer.method = OptimizerConfig::Method::adam;
        else
            fail("training.optimizer.method", "expected sgd or adam, got '" + method + "'");
        cfg.training.optimizer.lr = get_double(o, "training.optimizer", "learning_rate", cfg.training.optimizer.lr);
        cfg.training.optimizer.beta1 = get_double(o, "training.optimizer", "beta1", cfg.training.optimizer.beta1);
        cfg.training.optimizer.beta2 = get_double(o, "training.optimizer", "beta2", cfg.training.optimizer.beta2);
        cfg.training.optimizer.eps = get_double(o, "training.optimizer", "eps", cfg.training.optimizer.eps);
        if (!(cfg.training.optimizer.lr > 0.0)) fail("training.optimizer.learning_rate", "must be positive");
    }
}

void parse_pricing(const json& j, RunConfig& cfg) {
    if (!j.contains("pricing")) return;
    const json& p = j.at("pricing");
    check_keys(p, "pricing", {"n_mc", "alpha", "bump_rel"});
    cfg.price_n_mc = get_integer(p, "pricing", "n_mc", cfg.price_n_mc);
    cfg.alpha = get_double(p, "pricing", "alpha", cfg.alpha);
    cfg.bump_rel = get_double(p, "pricing", "bump_rel", cfg.bump_rel);
    if (cfg.price_n_mc < 2) fail("pricing.n_mc", "must be >= 2");
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) fail("pricing.alpha", "must lie in (0, 1)");
    if (!(cfg.bump_rel > 0.0)) fail("pricing.bump_rel", "must be positive");
}

void parse_evaluation(const json& j, RunConfig& cfg) {
    if (!j.contains("evaluation")) return;
    const json& e = j.at("evaluation");
    check_keys(e, "evaluation", {"oracle_n_mc", "test_paths", "hedge_metrics", "metric_betas", "cv_corr_paths"});
    cfg.oracle_n_mc = get_integer(e, "evaluation", "oracle_n_mc", cfg.oracle_n_mc);
    cfg.test_paths = get_int(e, "evaluation", "test_paths", cfg.test_paths);
    cfg.hedge_metrics = get_bool(e, "evaluation", "hedge_metrics", cfg.hedge_metrics);
    if (e.contains("metric_betas"))
        cfg.metric_betas = get_double_list(e.at("metric_betas"), "evaluation.metric_betas");
    cfg.cv_corr_paths = get_int(e, "evaluation", "cv_corr_paths", cfg.cv_corr_paths);
    if (cfg.oracle_n_mc < 2) fail("evaluation.oracle_n_mc", "must be >= 2");
    require_positive_int(cfg.test_paths, "evaluation.test_paths");
    require_positive_int(cfg.cv_corr_paths, "evaluation.cv_corr_paths");
}

} // namespace

RunConfig parse_config(const nlohmann::json& j) {
    check_keys(j, "config",
               {"seed", "model", "grid", "payoff", "encoding", "network", "training", "pricing", "evaluation"});
    RunConfig cfg;
    if (j.contains("seed")) {
        const json& s = j.at("seed");
        if (s.is_number_unsigned())
            cfg.seed = s.get<std::uint64_t>();
        else if (s.is_number_integer() && s.get<long long>() >= 0)
            cfg.seed = static_cast<std::uint64_t>(s.get<long long>());
        else
            fail("seed", "expected a non-negative integer");
    }
    parse_model(j, cfg);
    parse_grid(j, cfg);
    parse_payoff(j, cfg);
    parse_encoding_section(j, cfg);
    parse_network(j, cfg);
    parse_training(j, cfg);
    parse_pricing(j, cfg);
    parse_evaluation(j, cfg);
    return cfg;
}

RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("config: cannot open '" + path + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw config_error("config: '" + path + "': " + e.what());
    }
    return parse_config(j);
}

nlohmann::json effective_config(const RunConfig& cfg) {
    using nlohmann::json;
    json j;
    j["seed"] = cfg.seed;

    json m;
    m["type"] = cfg.model_type;
    if (cfg.model_type == "black_scholes") {
        m["d"] = cfg.bs.d;
        m["rate"] = cfg.bs.rate;
        m["sigma"] = cfg.bs.sigma;
        json cov = json::array();
        for (int i = 0; i < cfg.bs.d; ++i) {
            json row = json::array();
            for (int l = 0; l < cfg.bs.d; ++l) row.push_back(cfg.bs.covariance.at(i, l));
            cov.push_back(row);
        }
        m["covariance"] = cov;
        json x0;
        if (cfg.bs.x0.kind == InitialLaw::Kind::fixed) {
            x0["kind"] = "fixed";
            x0["values"] = cfg.bs.x0.values;
        } else {
            x0["kind"] = "lognormal";
            x0["mu"] = cfg.bs.x0.mu;
            x0["sigma"] = cfg.bs.x0.sigma_law;
            x0["tau"] = cfg.bs.x0.tau;
        }
        m["x0"] = x0;
        json beta;
        if (cfg.bs.beta.kind == BetaLaw::Kind::fixed) {
            beta["kind"] = "fixed";
        } else {
            beta["kind"] = "uniform";
            beta["lo"] = cfg.bs.beta.lo;
            beta["hi"] = cfg.bs.beta.hi;
        }
        m["beta"] = beta;
    } else {
        m["rate"] = cfg.heston.rate;
        m["kappa"] = cfg.heston.kappa;
        m["mu_bar"] = cfg.heston.mu_bar;
        m["eta"] = cfg.heston.eta;
        m["rho"] = cfg.heston.rho;
        m["v0"] = cfg.heston.v0;
        m["s0"] = cfg.heston.s0;
    }
    j["model"] = m;

    j["grid"] = json{{"maturity", cfg.maturity}, {"n_fine", cfg.n_fine}, {"n_coarse", cfg.n_coarse}};

    json p;
    p["type"] = cfg.payoff_type;
    if (cfg.payoff_type == "autocallable") {
        p["barrier"] = cfg.ac_barrier;
        p["observation_times"] = cfg.ac_obs_times;
        p["payoffs"] = cfg.ac_payoffs;
        p["redemption_a"] = cfg.ac_redemption_a;
        p["redemption_b"] = cfg.ac_redemption_b;
    }
    j["payoff"] = p;

    j["encoding"] = json{{"kind", encoding_name(cfg.encoding.kind)},
                         {"depth", cfg.encoding.depth},
                         {"transform", transform_name(cfg.encoding.transform)}};

    json n;
    n["type"] = cfg.network.type == NetworkConfig::Type::ffn ? "ffn" : "lstm";
    n["ffn_hidden"] = cfg.network.ffn_hidden;
    n["lstm_hidden"] = cfg.network.lstm_hidden;
    n["lstm_head"] = cfg.network.lstm_head;
    j["network"] = n;

    json t;
    t["method"] = method_name(cfg.training.method);
    t["iterations"] = cfg.training.iterations;
    t["batch_size"] = cfg.training.batch_size;
    t["test_batch_size"] = cfg.training.test_batch_size;
    t["eval_every"] = cfg.training.eval_every;
    t["optimizer"] = json{{"method", cfg.training.optimizer.method == OptimizerConfig::Method::sgd ? "sgd" : "adam"},
                          {"learning_rate", cfg.training.optimizer.lr},
                          {"beta1", cfg.training.optimizer.beta1},
                          {"beta2", cfg.training.optimizer.beta2},
                          {"eps", cfg.training.optimizer.eps}};
    j["training"] = t;

    j["pricing"] = json{{"n_mc", cfg.price_n_mc}, {"alpha", cfg.alpha}, {"bump_rel", cfg.bump_rel}};

    j["evaluation"] = json{{"oracle_n_mc", cfg.oracle_n_mc},
                           {"test_paths", cfg.test_paths},
                           {"hedge_metrics", cfg.hedge_metrics},
                           {"metric_betas", cfg.metric_betas},
                           {"cv_corr_paths", cfg.cv_corr_paths}};
    return j;
}

std::uint64_t config_hash(const RunConfig& cfg) { return fnv1a64(effective_config(cfg).dump()); }

TimeGrid make_grid(const RunConfig& cfg) { return TimeGrid(cfg.maturity, cfg.n_fine, cfg.n_coarse); }

std::unique_ptr<MarketModel> make_model(const RunConfig& cfg) {
    if (cfg.model_type == "black_scholes") return std::make_unique<BlackScholesModel>(cfg.bs);
    if (cfg.model_type == "heston") return std::make_unique<HestonModel>(cfg.heston);
    throw config_error("config: model.type: expected black_scholes or heston, got '" + cfg.model_type + "'");
}

std::unique_ptr<MarketModel> make_model_with_beta(const RunConfig& cfg, double beta) {
    if (cfg.model_type == "black_scholes") {
        BlackScholesParams p = cfg.bs;
        p.sigma.assign(p.d, beta);
        p.beta = BetaLaw{};
        return std::make_unique<BlackScholesModel>(p);
    }
    HestonParams p = cfg.heston;
    p.v0 = beta;
    return std::make_unique<HestonModel>(p);
}

std::unique_ptr<Payoff> make_payoff(const RunConfig& cfg, const TimeGrid& grid) {
    if (cfg.payoff_type == "lookback") return std::make_unique<LookbackPayoff>();
    AutocallSpec spec;
    spec.barrier = cfg.ac_barrier;
    spec.premature_payoffs = cfg.ac_payoffs;
    spec.redemption_a = cfg.ac_redemption_a;
    spec.redemption_b = cfg.ac_redemption_b;
    // Observation dates snap to the nearest coarse grid point so the learned
    // price can react to each knock-out decision.
    const double dtc = grid.dt_coarse();
    int prev_k = 0;
    for (double tau : cfg.ac_obs_times) {
        const int k = static_cast<int>(std::lround(tau / dtc));
        if (k < 1 || k > grid.n_coarse())
            throw config_error("config: payoff.observation_times: " + std::to_string(tau) +
                               " does not fall inside (0, T]");
        if (k <= prev_k)
            throw config_error("config: payoff.observation_times: " + std::to_string(tau) +
                               " collides with the previous date after grid snapping");
        prev_k = k;
        spec.observation_indices.push_back(grid.coarse_to_fine(k));
    }
    return std::make_unique<AutocallablePayoff>(std::move(spec));
}

} // namespace ppde
