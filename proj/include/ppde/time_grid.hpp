#pragma once

#include <vector>

namespace ppde {

// Nested uniform partitions of [0, T]: a fine grid with n_fine steps for SDE
// simulation and a coarse grid with n_coarse steps on which the networks are
// evaluated. Coarse times are read off the fine grid so the nesting is exact
// in floating point, not merely up to rounding.
class TimeGrid {
public:
    TimeGrid() = default;
    TimeGrid(double maturity, int n_fine, int n_coarse);

    double maturity() const { return maturity_; }
    int n_fine() const { return n_fine_; }
    int n_coarse() const { return n_coarse_; }
    int ratio() const { return n_fine_ / n_coarse_; }

    double dt_fine() const { return maturity_ / n_fine_; }
    double dt_coarse() const { return maturity_ / n_coarse_; }

    const std::vector<double>& fine_times() const { return fine_times_; }
    double fine_time(int j) const { return fine_times_[j]; }
    double coarse_time(int k) const { return fine_times_[static_cast<std::size_t>(k) * ratio()]; }
    int coarse_to_fine(int k) const { return k * ratio(); }

    // Index of t on the coarse grid; throws if t is not a coarse time.
    int coarse_index_of(double t, double tol = 1e-9) const;

    bool operator==(const TimeGrid& o) const {
        return maturity_ == o.maturity_ && n_fine_ == o.n_fine_ && n_coarse_ == o.n_coarse_;
    }

private:
    double maturity_ = 0.0;
    int n_fine_ = 0;
    int n_coarse_ = 0;
    std::vector<double> fine_times_;
};

} // namespace ppde
