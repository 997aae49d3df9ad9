#include "ppde/cli.hpp"

#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ppde/artifacts.hpp"
#include "ppde/config.hpp"
#include "ppde/encoding.hpp"
#include "ppde/errors.hpp"
#include "ppde/evaluation.hpp"
#include "ppde/nets.hpp"
#include "ppde/numerics.hpp"
#include "ppde/pricing.hpp"
#include "ppde/training.hpp"

namespace ppde {

namespace {

// Flags shared by the subcommands; optionals distinguish "absent" from a
// default so flag overrides can be folded into the config before hashing.
struct CliArgs {
    std::string config_path;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;
    int workers = 1;
    std::vector<std::string> checkpoints;
    std::string history_path;
    std::optional<double> t;
    std::optional<double> alpha;
    std::optional<long> n_mc;
};

RunConfig load_with_overrides(const CliArgs& args) {
    RunConfig cfg = load_config_file(args.config_path);
    if (args.seed) cfg.seed = *args.seed;
    if (args.alpha) {
        if (!(*args.alpha > 0.0 && *args.alpha < 1.0)) throw config_error("--alpha must lie in (0, 1)");
        cfg.alpha = *args.alpha;
    }
    if (args.n_mc) {
        if (*args.n_mc < 2) throw config_error("--n-mc must be >= 2");
        cfg.price_n_mc = *args.n_mc;
    }
    return cfg;
}

std::string ensure_out_dir(const std::string& out) {
    std::error_code ec;
    std::filesystem::create_directories(out, ec);
    if (ec) throw config_error("cannot create output directory '" + out + "': " + ec.message());
    return out;
}

std::string utc_timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// The timestamp is confined to this file; every data artifact stays
// byte-identical across reruns.
void write_metadata(const std::string& out, const std::string& command, const RunConfig& cfg,
                    int workers) {
    nlohmann::json j;
    j["command"] = command;
    j["config"] = effective_config(cfg);
    j["config_hash"] = hex64(config_hash(cfg));
    j["seed"] = cfg.seed;
    j["workers"] = workers;
    j["timestamp"] = utc_timestamp();
    std::ofstream f(out + "/metadata.json", std::ios::binary);
    if (!f) throw config_error("cannot open '" + out + "/metadata.json' for writing");
    f << j.dump(2) << "\n";
}

NetworkParams params_from_checkpoint(const Checkpoint& ck) {
    NetworkParams p;
    p.arch = ArchDescriptor::parse(ck.arch);
    p.init_seed = ck.seed;
    p.values = ck.values;
    p.grad.assign(p.values.size(), 0.0);
    return p;
}

Checkpoint checkpoint_from_params(const NetworkParams& p, const std::string& input_spec) {
    Checkpoint ck;
    ck.arch = p.arch.to_string();
    ck.seed = p.init_seed;
    ck.input_spec = input_spec;
    ck.values = p.values;
    return ck;
}

void check_input_spec(const Checkpoint& ck, const std::string& expected, const std::string& path) {
    if (ck.input_spec != expected)
        throw config_error("checkpoint '" + path + "' was trained for input '" + ck.input_spec +
                           "' but the configuration expects '" + expected + "'");
}

std::string net_input_label(const EncodingSpec& spec) {
    if (spec.kind == EncodingKind::coarse_path) return "coarse_path";
    return "sig_" + transform_name(spec.transform);
}

int cmd_simulate(const CliArgs& args) {
    const RunConfig cfg = load_with_overrides(args);
    const std::uint64_t hash = config_hash(cfg);
    const std::string out = ensure_out_dir(args.out_dir);
    const TimeGrid grid = make_grid(cfg);
    const std::unique_ptr<MarketModel> model = make_model(cfg);

    const PathBatch pb = model->simulate(grid, cfg.training.batch_size, cfg.seed);
    write_paths_csv(out + "/paths.csv", pb, hash);
    std::cout << "wrote " << pb.batch << " paths (n_fine=" << grid.n_fine() << ", d=" << pb.d
              << (pb.n_aux > 0 ? ", aux=" + std::to_string(pb.n_aux) : "") << ") to " << out
              << "/paths.csv\n";

    if (cfg.encoding.kind == EncodingKind::sig_stream) {
        const BatchFeatures feats = encode_batch(pb, cfg.encoding);
        write_sig_csv(out + "/signatures.csv", feats.raw, grid.n_coarse(), feats.block, hash, cfg.seed);
        std::cout << "wrote " << grid.n_coarse() << " windows x " << feats.block
                  << " signature coefficients per path to " << out << "/signatures.csv\n";
    }
    write_metadata(out, "simulate", cfg, args.workers);
    return 0;
}

int cmd_train(const CliArgs& args) {
    const RunConfig cfg = load_with_overrides(args);
    const std::uint64_t hash = config_hash(cfg);
    const std::string out = ensure_out_dir(args.out_dir);
    const TimeGrid grid = make_grid(cfg);
    const std::unique_ptr<MarketModel> model = make_model(cfg);
    const std::unique_ptr<Payoff> payoff = make_payoff(cfg, grid);

    TrainResult res;
    try {
        res = train(*model, grid, *payoff, cfg.encoding, cfg.network, cfg.training, cfg.seed);
    } catch (const numeric_error& e) {
        std::ofstream diag(out + "/diagnostics.txt", std::ios::binary);
        diag << e.what() << "\n";
        throw;
    }

    write_loss_history_csv(out + "/loss_history.csv", res.history, hash, cfg.seed);
    save_checkpoint(out + "/theta.ckpt", checkpoint_from_params(res.theta, res.input_spec));
    if (res.has_phi) save_checkpoint(out + "/phi.ckpt", checkpoint_from_params(res.phi, res.input_spec));
    write_metadata(out, "train", cfg, args.workers);

    const LossRecord& last = res.history.back();
    std::cout << "trained " << method_name(cfg.training.method) << " for " << cfg.training.iterations
              << " iterations: train_loss=" << format_double(last.train_loss)
              << " test_loss=" << format_double(last.test_loss) << "\n";
    std::cout << "wrote " << out << "/theta.ckpt"
              << (res.has_phi ? " and " + out + "/phi.ckpt" : std::string()) << "\n";
    return 0;
}

int cmd_price(const CliArgs& args) {
    const RunConfig cfg = load_with_overrides(args);
    const std::uint64_t hash = config_hash(cfg);
    const std::string out = ensure_out_dir(args.out_dir);
    const TimeGrid grid = make_grid(cfg);
    const std::unique_ptr<MarketModel> model = make_model(cfg);
    const std::unique_ptr<Payoff> payoff = make_payoff(cfg, grid);
    const int d = model->dim();
    const int n_aux = model->aux_dim();

    PathHistory h;
    h.grid = grid;
    h.path = Mat(grid.n_fine() + 1, d, 0.0);
    if (n_aux > 0) h.aux = Mat(grid.n_fine() + 1, n_aux, 0.0);
    h.beta = model->fixed_beta();

    if (!args.history_path.empty()) {
        // Models with latent state (Heston variance) need it in the history
        // as extra columns; asset_index d..d+n_aux-1.
        const Mat vals = read_history_csv(args.history_path, d + n_aux);
        if (vals.rows > grid.n_fine() + 1)
            throw config_error("history covers " + std::to_string(vals.rows - 1) +
                               " fine steps but the grid has n_fine=" + std::to_string(grid.n_fine()));
        h.i_t = vals.rows - 1;
        for (int j = 0; j <= h.i_t; ++j) {
            for (int i = 0; i < d; ++i) h.path.at(j, i) = vals.at(j, i);
            for (int a = 0; a < n_aux; ++a) h.aux.at(j, a) = vals.at(j, d + a);
        }
    } else {
        h.i_t = 0;
        if (cfg.model_type == "black_scholes") {
            if (cfg.bs.x0.kind != InitialLaw::Kind::fixed)
                throw config_error("price: --history is required when the initial-value law is random");
            for (int i = 0; i < d; ++i) h.path.at(0, i) = cfg.bs.x0.values[i];
        } else {
            h.path.at(0, 0) = cfg.heston.s0;
        }
        const std::vector<double> a0 = model->initial_aux();
        for (int a = 0; a < n_aux; ++a) h.aux.at(0, a) = a0[a];
    }

    const double t_hist = grid.fine_time(h.i_t);
    if (args.t && std::abs(*args.t - t_hist) > 1e-9)
        throw config_error("--t is " + format_double(*args.t) + " but the history ends at t=" +
                           format_double(t_hist));

    PriceEstimate est;
    if (!args.checkpoints.empty()) {
        const Checkpoint ck = load_checkpoint(args.checkpoints[0]);
        check_input_spec(ck, input_spec_string(cfg.encoding, d, grid.n_coarse()), args.checkpoints[0]);
        NetworkParams params = params_from_checkpoint(ck);
        std::unique_ptr<SequenceModel> hedge = make_sequence_model(params);
        if (hedge->output_width() != d)
            throw config_error("checkpoint '" + args.checkpoints[0] + "' has output width " +
                               std::to_string(hedge->output_width()) + ", the hedge network needs " +
                               std::to_string(d));
        est = cv_price(h, *model, *payoff, *hedge, cfg.encoding, cfg.price_n_mc, cfg.alpha, cfg.seed);
    } else {
        est = mc_price(h, *model, *payoff, cfg.price_n_mc, cfg.alpha, cfg.seed);
    }

    const std::string json = price_json_string(est, hash);
    std::ofstream f(out + "/price.json", std::ios::binary);
    if (!f) throw config_error("cannot open '" + out + "/price.json' for writing");
    f << json;
    std::cout << json;
    write_metadata(out, "price", cfg, args.workers);
    return 0;
}

int cmd_evaluate(const CliArgs& args) {
    const RunConfig cfg = load_with_overrides(args);
    const std::uint64_t hash = config_hash(cfg);
    const std::string out = ensure_out_dir(args.out_dir);
    const TimeGrid grid = make_grid(cfg);
    const std::unique_ptr<Payoff> payoff = make_payoff(cfg, grid);

    if (args.checkpoints.empty())
        throw config_error("evaluate: --checkpoint is required (price network first, hedge second)");
    if (args.checkpoints.size() > 2)
        throw config_error("evaluate: expected at most two --checkpoint flags, got " +
                           std::to_string(args.checkpoints.size()));

    const std::unique_ptr<MarketModel> base_model = make_model(cfg);
    const int d = base_model->dim();
    const std::string expected_spec = input_spec_string(cfg.encoding, d, grid.n_coarse());

    const Checkpoint ck_theta = load_checkpoint(args.checkpoints[0]);
    check_input_spec(ck_theta, expected_spec, args.checkpoints[0]);
    NetworkParams p_theta = params_from_checkpoint(ck_theta);
    std::unique_ptr<SequenceModel> theta = make_sequence_model(p_theta);
    if (theta->output_width() != 1)
        throw config_error("checkpoint '" + args.checkpoints[0] + "' has output width " +
                           std::to_string(theta->output_width()) + ", the price network needs 1");

    NetworkParams p_phi;
    std::unique_ptr<SequenceModel> phi;
    if (args.checkpoints.size() == 2) {
        const Checkpoint ck_phi = load_checkpoint(args.checkpoints[1]);
        check_input_spec(ck_phi, expected_spec, args.checkpoints[1]);
        p_phi = params_from_checkpoint(ck_phi);
        phi = make_sequence_model(p_phi);
        if (phi->output_width() != d)
            throw config_error("checkpoint '" + args.checkpoints[1] + "' has output width " +
                               std::to_string(phi->output_width()) + ", the hedge network needs " +
                               std::to_string(d));
    }

    EvalOptions opt;
    opt.oracle_n_mc = cfg.oracle_n_mc;
    opt.bump_rel = cfg.bump_rel;
    opt.cache_dir = out + "/oracle_cache";
    opt.config_hash = hash;

    // One table row per requested beta; an empty list evaluates the model as
    // configured (its own beta law, Heston its own v0).
    struct RowSpec {
        std::optional<double> beta;
    };
    std::vector<RowSpec> row_specs;
    if (cfg.metric_betas.empty())
        row_specs.push_back({std::nullopt});
    else
        for (double b : cfg.metric_betas) row_specs.push_back({b});

    const std::string net_type = ck_theta.arch.substr(0, ck_theta.arch.find(' '));
    const std::string net_input = net_input_label(cfg.encoding);
    const std::uint64_t test_seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(StreamTag::test_batch));

    std::vector<MetricsRow> rows;
    for (const RowSpec& rs : row_specs) {
        const std::unique_ptr<MarketModel> model =
            rs.beta ? make_model_with_beta(cfg, *rs.beta) : make_model(cfg);
        const PathBatch test = model->simulate(grid, cfg.test_paths, test_seed);

        MetricsRow row;
        row.method = method_name(cfg.training.method);
        row.net_type = net_type;
        row.net_input = net_input;
        if (rs.beta) {
            row.sigma = *rs.beta;
        } else if (cfg.model_type == "black_scholes" && cfg.bs.beta.kind == BetaLaw::Kind::fixed) {
            bool uniform_sigma = true;
            for (double s : cfg.bs.sigma) uniform_sigma = uniform_sigma && s == cfg.bs.sigma[0];
            if (uniform_sigma) row.sigma = cfg.bs.sigma[0];
        }
        row.e_integral = integral_error_price(*theta, *model, *payoff, test, cfg.encoding, opt);
        if (phi && cfg.hedge_metrics) {
            row.e_hedging = integral_error_hedge(*phi, *model, *payoff, test, cfg.encoding, opt);
            row.rho = cv_correlation(*phi, *model, *payoff, grid, cfg.cv_corr_paths, cfg.encoding,
                                     mix_seed(cfg.seed, 203));
        }
        rows.push_back(row);

        std::cout << row.method << " " << row.net_type << " " << row.net_input;
        if (row.sigma) std::cout << " sigma=" << format_double(*row.sigma);
        std::cout << ": E_integral=" << format_double(row.e_integral);
        if (row.e_hedging) std::cout << " E_hedging=" << format_double(*row.e_hedging);
        if (row.rho) std::cout << " rho=" << format_double(*row.rho);
        std::cout << "\n";
    }

    write_metrics_csv(out + "/metrics.csv", rows, hash, cfg.seed);
    write_metadata(out, "evaluate", cfg, args.workers);
    std::cout << "wrote " << rows.size() << (rows.size() == 1 ? " row" : " rows") << " to " << out
              << "/metrics.csv\n";
    return 0;
}

} // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"Learned price and hedge functionals for path-dependent options"};
    app.require_subcommand(1);

    CliArgs args;
    std::uint64_t seed_val = 0;
    double t_val = 0.0, alpha_val = 0.0;
    long n_mc_val = 0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", args.config_path, "Run configuration (JSON)")->required();
        sub->add_option("--out", args.out_dir, "Output directory, created if missing (default: .)");
        sub->add_option("--seed", seed_val, "Override the config seed");
        sub->add_option("--workers", args.workers, "Worker threads (interface only; execution is serial)")
            ->check(CLI::PositiveNumber);
    };

    CLI::App* sim = app.add_subcommand("simulate", "Sample a path batch and dump it as CSV");
    add_common(sim);
    CLI::App* train = app.add_subcommand("train", "Fit the price (and hedge) networks");
    add_common(train);
    CLI::App* price = app.add_subcommand("price", "Monte Carlo price with optional learned control variate");
    add_common(price);
    price->add_option("--checkpoint", args.checkpoints, "Hedge-network checkpoint enabling the control variate");
    price->add_option("--history", args.history_path, "Price history CSV covering [0, t]");
    price->add_option("--t", t_val, "Conditioning time; must match the history end");
    price->add_option("--alpha", alpha_val, "Confidence level override");
    price->add_option("--n-mc", n_mc_val, "Monte Carlo sample count override");
    CLI::App* eval = app.add_subcommand("evaluate", "Compare trained networks against Monte Carlo oracles");
    add_common(eval);
    eval->add_option("--checkpoint", args.checkpoints, "Checkpoints: price network, then optional hedge network");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    CLI::App* sub = app.get_subcommands().front();
    if (sub->count("--seed")) args.seed = seed_val;
    if (sub == price) {
        if (sub->count("--t")) args.t = t_val;
        if (sub->count("--alpha")) args.alpha = alpha_val;
        if (sub->count("--n-mc")) args.n_mc = n_mc_val;
        if (args.checkpoints.size() > 1) {
            std::cerr << "error: price takes a single --checkpoint (the hedge network)\n";
            return 2;
        }
    }

    try {
        if (sub == sim) return cmd_simulate(args);
        if (sub == train) return cmd_train(args);
        if (sub == price) return cmd_price(args);
        return cmd_evaluate(args);
    } catch (const config_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const numeric_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}

} // namespace ppde
