#include "ppde/evaluation.hpp"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "ppde/errors.hpp"
#include "ppde/numerics.hpp"

namespace ppde {

namespace {

// Cache key covering everything the oracle values depend on: the tag
// distinguishes price from hedge tables, the byte dumps pin the exact test
// paths and betas.
std::uint64_t oracle_key(const char* tag, const PathBatch& test, const EvalOptions& opt) {
    std::uint64_t h = fnv1a64(std::string(tag));
    auto mix = [&h](std::uint64_t v) { h = mix_seed(h, v); };
    mix(opt.config_hash);
    mix(static_cast<std::uint64_t>(opt.oracle_n_mc));
    mix(test.seed);
    mix(static_cast<std::uint64_t>(test.batch));
    mix(static_cast<std::uint64_t>(test.grid.n_fine()));
    mix(static_cast<std::uint64_t>(test.grid.n_coarse()));
    const auto bytes_of = [](const std::vector<double>& v) {
        return std::span<const unsigned char>(reinterpret_cast<const unsigned char*>(v.data()),
                                              v.size() * sizeof(double));
    };
    mix(fnv1a64(bytes_of(test.paths.a)));
    mix(fnv1a64(bytes_of(test.beta)));
    if (std::string(tag) == "hedge") {
        double b = opt.bump_rel;
        std::uint64_t bits;
        static_assert(sizeof b == sizeof bits);
        std::memcpy(&bits, &b, sizeof bits);
        mix(bits);
    }
    return h;
}

bool load_oracle_file(const std::string& path, std::uint64_t key, Mat& out) {
    std::ifstream in(path);
    if (!in) return false;
    std::string magic, key_text;
    int rows = 0, cols = 0;
    if (!std::getline(in, magic) || magic != "ppde-oracle v1") return false;
    if (!std::getline(in, key_text) || key_text != hex64(key)) return false;
    if (!(in >> rows >> cols) || rows < 1 || cols < 1) return false;
    out = Mat(rows, cols);
    for (double& v : out.a)
        if (!(in >> v)) return false;
    return true;
}

void save_oracle_file(const std::string& path, std::uint64_t key, const Mat& m) {
    std::filesystem::create_directories(std::filesystem::path(path).parent_path());
    std::ofstream out(path);
    if (!out) throw config_error("evaluation: cannot write oracle cache '" + path + "'");
    out << "ppde-oracle v1\n" << hex64(key) << "\n" << m.rows << " " << m.cols << "\n";
    for (int i = 0; i < m.rows; ++i) {
        for (int j = 0; j < m.cols; ++j) out << (j ? " " : "") << format_double(m.at(i, j));
        out << "\n";
    }
}

std::string cache_path(const EvalOptions& opt, const char* tag, std::uint64_t key) {
    return opt.cache_dir + "/oracle_" + tag + "_" + hex64(key) + ".txt";
}

} // namespace

Mat oracle_prices(const MarketModel& model, const Payoff& payoff, const PathBatch& test,
                  const EvalOptions& opt) {
    const std::uint64_t key = oracle_key("price", test, opt);
    Mat values;
    if (!opt.cache_dir.empty() && load_oracle_file(cache_path(opt, "price", key), key, values) &&
        values.rows == test.batch && values.cols == test.grid.n_coarse())
        return values;

    const int nc = test.grid.n_coarse();
    values = Mat(test.batch, nc);
    for (int b = 0; b < test.batch; ++b) {
        for (int k = 0; k < nc; ++k) {
            PathHistory h = history_from_batch(test, b, test.grid.coarse_to_fine(k));
            const std::uint64_t seed = mix_seed(mix_seed(test.seed, 201), static_cast<std::uint64_t>(b),
                                                static_cast<std::uint64_t>(k));
            values.at(b, k) =
                mc_price(h, model, payoff, opt.oracle_n_mc, 0.05, seed).estimate;
        }
    }
    if (!opt.cache_dir.empty()) save_oracle_file(cache_path(opt, "price", key), key, values);
    return values;
}

Mat oracle_hedges(const MarketModel& model, const Payoff& payoff, const PathBatch& test,
                  const EvalOptions& opt) {
    const std::uint64_t key = oracle_key("hedge", test, opt);
    const int nc = test.grid.n_coarse(), d = test.d;
    Mat values;
    if (!opt.cache_dir.empty() && load_oracle_file(cache_path(opt, "hedge", key), key, values) &&
        values.rows == test.batch && values.cols == nc * d)
        return values;

    values = Mat(test.batch, nc * d);
    for (int b = 0; b < test.batch; ++b) {
        for (int k = 0; k < nc; ++k) {
            const int fi = test.grid.coarse_to_fine(k);
            PathHistory h = history_from_batch(test, b, fi);
            double scale = 0.0;
            for (int i = 0; i < d; ++i) scale += std::abs(h.path.at(fi, i));
            const double bump = opt.bump_rel * (scale > 0.0 ? scale / d : 1.0);
            const std::uint64_t seed = mix_seed(mix_seed(test.seed, 202), static_cast<std::uint64_t>(b),
                                                static_cast<std::uint64_t>(k));
            const VerticalDerivative vd =
                mc_vertical_derivative(h, model, payoff, opt.oracle_n_mc, bump, seed);
            for (int i = 0; i < d; ++i) values.at(b, k * d + i) = vd.value[i];
        }
    }
    if (!opt.cache_dir.empty()) save_oracle_file(cache_path(opt, "hedge", key), key, values);
    return values;
}

double integral_error_price(SequenceModel& theta, const MarketModel& model, const Payoff& payoff,
                            const PathBatch& test, const EncodingSpec& encoding,
                            const EvalOptions& opt) {
    if (theta.output_width() != 1)
        throw std::invalid_argument("integral_error_price: value net output width must be 1");
    const Mat oracle = oracle_prices(model, payoff, test, opt);
    const BatchFeatures f = encode_batch(test, encoding);
    std::vector<Mat> outs;
    theta.forward(f, outs);

    const int nc = test.grid.n_coarse();
    std::vector<double> per_path(static_cast<std::size_t>(test.batch), 0.0);
    for (int b = 0; b < test.batch; ++b) {
        double s = 0.0;
        for (int k = 0; k < nc; ++k) {
            const double dt = f.coarse_times[k + 1] - f.coarse_times[k];
            s += dt * std::abs(oracle.at(b, k) - outs[k].at(b, 0));
        }
        per_path[static_cast<std::size_t>(b)] = s;
    }
    return pairwise_sum(per_path) / test.batch;
}

double integral_error_hedge(SequenceModel& phi, const MarketModel& model, const Payoff& payoff,
                            const PathBatch& test, const EncodingSpec& encoding,
                            const EvalOptions& opt) {
    const int d = test.d;
    if (phi.output_width() != d)
        throw std::invalid_argument("integral_error_hedge: hedge net output width must equal d");
    const Mat oracle = oracle_hedges(model, payoff, test, opt);
    const BatchFeatures f = encode_batch(test, encoding);
    std::vector<Mat> outs;
    phi.forward(f, outs);

    const int nc = test.grid.n_coarse();
    std::vector<double> per_path(static_cast<std::size_t>(test.batch), 0.0);
    for (int b = 0; b < test.batch; ++b) {
        double s = 0.0;
        for (int k = 0; k < nc; ++k) {
            const double dt = f.coarse_times[k + 1] - f.coarse_times[k];
            double l1 = 0.0;
            for (int i = 0; i < d; ++i)
                l1 += std::abs(oracle.at(b, k * d + i) - outs[k].at(b, i));
            s += dt * l1;
        }
        per_path[static_cast<std::size_t>(b)] = s;
    }
    return pairwise_sum(per_path) / test.batch;
}

double cv_correlation(SequenceModel& phi, const MarketModel& model, const Payoff& payoff,
                      const TimeGrid& grid, int n_paths, const EncodingSpec& encoding,
                      std::uint64_t seed) {
    const int d = model.dim();
    if (phi.output_width() != d)
        throw std::invalid_argument("cv_correlation: hedge net output width must equal d");
    const TrainBatch tb = make_batch(model, grid, n_paths, encoding, payoff, seed);
    std::vector<Mat> Z;
    phi.forward(tb.features, Z);

    const int nc = grid.n_coarse(), d_w = tb.sim.d_w;
    std::vector<double> integral(static_cast<std::size_t>(n_paths), 0.0);
    for (int b = 0; b < n_paths; ++b) {
        double acc = 0.0;
        for (int m = 0; m < nc; ++m) {
            const double* sig = tb.sigma.row(b) + static_cast<std::size_t>(m) * d * d_w;
            const double* dw = tb.dw_coarse.row(b) + static_cast<std::size_t>(m) * d_w;
            double stoch = 0.0;
            for (int i = 0; i < d; ++i) {
                double s = 0.0;
                for (int l = 0; l < d_w; ++l) s += sig[i * d_w + l] * dw[l];
                stoch += Z[m].at(b, i) * s;
            }
            acc += std::exp(-tb.rate * tb.features.coarse_times[m]) * stoch;
        }
        integral[static_cast<std::size_t>(b)] = acc;
    }
    return pearson_correlation(tb.payoff_discounted, integral);
}

} // namespace ppde
