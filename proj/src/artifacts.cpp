#include "ppde/artifacts.hpp"

#include <fstream>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "ppde/errors.hpp"
#include "ppde/numerics.hpp"

namespace ppde {

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw config_error("cannot open '" + path + "' for writing");
    return out;
}

void write_meta_line(std::ofstream& out, std::uint64_t config_hash, std::uint64_t seed) {
    out << "# config_hash=" << hex64(config_hash) << " seed=" << seed << "\n";
}

[[noreturn]] void bad_history(const std::string& path, int line, const std::string& what) {
    throw config_error("history '" + path + "' line " + std::to_string(line) + ": " + what);
}

} // namespace

void write_loss_history_csv(const std::string& path, const std::vector<LossRecord>& records,
                            std::uint64_t config_hash, std::uint64_t seed) {
    std::ofstream out = open_out(path);
    write_meta_line(out, config_hash, seed);
    out << "iteration,train_loss,test_loss,wall_time_s\n";
    for (const LossRecord& r : records)
        out << r.iteration << ',' << format_double(r.train_loss) << ',' << format_double(r.test_loss)
            << ',' << format_double(r.wall_time_s) << "\n";
}

void write_paths_csv(const std::string& path, const PathBatch& pb, std::uint64_t config_hash) {
    std::ofstream out = open_out(path);
    write_meta_line(out, config_hash, pb.seed);
    out << "path_id,time_index,asset_index,value\n";
    const int n_times = pb.grid.n_fine() + 1;
    for (int b = 0; b < pb.batch; ++b) {
        const double* row = pb.paths.row(b);
        const double* aux = pb.n_aux > 0 ? pb.aux.row(b) : nullptr;
        for (int j = 0; j < n_times; ++j) {
            for (int i = 0; i < pb.d; ++i)
                out << b << ',' << j << ',' << i << ',' << format_double(row[j * pb.d + i]) << "\n";
            for (int a = 0; a < pb.n_aux; ++a)
                out << b << ',' << j << ',' << pb.d + a << ','
                    << format_double(aux[j * pb.n_aux + a]) << "\n";
        }
    }
}

void write_sig_csv(const std::string& path, const Mat& sigs, int n_windows, int block,
                   std::uint64_t config_hash, std::uint64_t seed) {
    if (sigs.cols != n_windows * block)
        throw std::invalid_argument("write_sig_csv: expected " + std::to_string(n_windows * block) +
                                    " columns, got " + std::to_string(sigs.cols));
    std::ofstream out = open_out(path);
    write_meta_line(out, config_hash, seed);
    out << "path_id,window_index,coeff_index,value\n";
    for (int b = 0; b < sigs.rows; ++b) {
        const double* row = sigs.row(b);
        for (int w = 0; w < n_windows; ++w)
            for (int c = 0; c < block; ++c)
                out << b << ',' << w << ',' << c << ',' << format_double(row[w * block + c]) << "\n";
    }
}

void write_history_csv(const std::string& path, const Mat& values, std::uint64_t config_hash,
                       std::uint64_t seed) {
    std::ofstream out = open_out(path);
    write_meta_line(out, config_hash, seed);
    out << "time_index,asset_index,value\n";
    for (int j = 0; j < values.rows; ++j)
        for (int i = 0; i < values.cols; ++i)
            out << j << ',' << i << ',' << format_double(values.at(j, i)) << "\n";
}

Mat read_history_csv(const std::string& path, int d) {
    std::ifstream in(path);
    if (!in) throw config_error("history: cannot open '" + path + "'");

    struct Cell {
        int t, a;
        double v;
    };
    std::vector<Cell> cells;
    int max_t = -1;
    bool saw_header = false;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (!saw_header) {
            if (line != "time_index,asset_index,value")
                bad_history(path, line_no, "expected header 'time_index,asset_index,value'");
            saw_header = true;
            continue;
        }
        std::istringstream ss(line);
        std::string f0, f1, f2;
        if (!std::getline(ss, f0, ',') || !std::getline(ss, f1, ',') || !std::getline(ss, f2))
            bad_history(path, line_no, "expected 3 comma-separated fields");
        Cell c;
        try {
            std::size_t pos = 0;
            c.t = std::stoi(f0, &pos);
            if (pos != f0.size()) throw std::invalid_argument(f0);
            c.a = std::stoi(f1, &pos);
            if (pos != f1.size()) throw std::invalid_argument(f1);
            c.v = std::stod(f2, &pos);
            if (pos != f2.size()) throw std::invalid_argument(f2);
        } catch (const std::exception&) {
            bad_history(path, line_no, "malformed field in '" + line + "'");
        }
        if (c.t < 0) bad_history(path, line_no, "negative time index");
        if (c.a < 0 || c.a >= d)
            bad_history(path, line_no,
                        "asset index " + std::to_string(c.a) + " outside [0, " + std::to_string(d) + ")");
        max_t = std::max(max_t, c.t);
        cells.push_back(c);
    }
    if (!saw_header) throw config_error("history '" + path + "': missing header");
    if (max_t < 0) throw config_error("history '" + path + "': no data rows");

    // Every (time, asset) cell up to the last time index must appear exactly
    // once; holes or duplicates mean the file does not cover [0, t] exactly.
    Mat values(max_t + 1, d, 0.0);
    std::vector<int> seen(static_cast<std::size_t>(max_t + 1) * d, 0);
    for (const Cell& c : cells) {
        int& count = seen[static_cast<std::size_t>(c.t) * d + c.a];
        if (++count > 1)
            throw config_error("history '" + path + "': duplicate entry for time " + std::to_string(c.t) +
                               ", asset " + std::to_string(c.a));
        values.at(c.t, c.a) = c.v;
    }
    for (int j = 0; j <= max_t; ++j)
        for (int i = 0; i < d; ++i)
            if (!seen[static_cast<std::size_t>(j) * d + i])
                throw config_error("history '" + path + "': missing entry for time " + std::to_string(j) +
                                   ", asset " + std::to_string(i));
    return values;
}

std::string price_json_string(const PriceEstimate& est, std::uint64_t config_hash) {
    nlohmann::json j;
    j["alpha"] = est.alpha;
    j["config_hash"] = hex64(config_hash);
    j["estimate"] = est.estimate;
    j["hi"] = est.hi;
    j["lo"] = est.lo;
    j["n"] = est.n;
    j["seed"] = est.seed;
    j["std"] = est.std;
    return j.dump(2) + "\n";
}

void write_price_json(const std::string& path, const PriceEstimate& est, std::uint64_t config_hash) {
    std::ofstream out = open_out(path);
    out << price_json_string(est, config_hash);
}

void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows,
                       std::uint64_t config_hash, std::uint64_t seed) {
    std::ofstream out = open_out(path);
    write_meta_line(out, config_hash, seed);
    out << "method,net_type,net_input,sigma,E_integral,E_hedging,rho\n";
    auto cell = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
    for (const MetricsRow& r : rows)
        out << r.method << ',' << r.net_type << ',' << r.net_input << ',' << cell(r.sigma) << ','
            << format_double(r.e_integral) << ',' << cell(r.e_hedging) << ',' << cell(r.rho) << "\n";
}

} // namespace ppde
