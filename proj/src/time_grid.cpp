#include "ppde/time_grid.hpp"

#include <cmath>
#include <string>

#include "ppde/errors.hpp"

namespace ppde {

TimeGrid::TimeGrid(double maturity, int n_fine, int n_coarse)
    : maturity_(maturity), n_fine_(n_fine), n_coarse_(n_coarse) {
    if (!(maturity > 0.0)) throw config_error("grid: maturity must be positive, got " + std::to_string(maturity));
    if (n_coarse < 1) throw config_error("grid: n_coarse must be >= 1, got " + std::to_string(n_coarse));
    if (n_fine < n_coarse || n_fine % n_coarse != 0)
        throw config_error("grid: n_fine (" + std::to_string(n_fine) + ") must be a positive multiple of n_coarse (" +
                           std::to_string(n_coarse) + ") so the coarse grid nests in the fine one");
    fine_times_.resize(static_cast<std::size_t>(n_fine) + 1);
    for (int j = 0; j <= n_fine; ++j)
        fine_times_[j] = maturity * static_cast<double>(j) / static_cast<double>(n_fine);
    fine_times_[n_fine] = maturity; // guard against j/n rounding at the right endpoint
}

int TimeGrid::coarse_index_of(double t, double tol) const {
    for (int k = 0; k <= n_coarse_; ++k)
        if (std::abs(coarse_time(k) - t) <= tol) return k;
    throw config_error("grid: t=" + std::to_string(t) + " is not a coarse grid time (n_coarse=" +
                       std::to_string(n_coarse_) + ", T=" + std::to_string(maturity_) + ")");
}

} // namespace ppde
