#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ppde {

// Pairwise (cascade) summation. Deterministic for a given input order and
// far more accurate than a naive left fold on long Monte Carlo vectors.
double pairwise_sum(std::span<const double> x);

struct MeanVar {
    double mean = 0.0;
    double var = 0.0; // unbiased (N-1) sample variance
};

// Two-pass mean/variance with pairwise sums; requires N >= 2 for var.
MeanVar mean_and_variance(std::span<const double> x);

double pearson_correlation(std::span<const double> x, std::span<const double> y);

// Inverse standard normal CDF. Rational approximation (Acklam) polished by
// one Halley step against std::erfc, absolute error well below 1e-8.
double inverse_normal_cdf(double p);

double normal_cdf(double x);

// FNV-1a 64-bit hash; used for config hashes and cache keys.
std::uint64_t fnv1a64(std::span<const unsigned char> bytes);
std::uint64_t fnv1a64(const std::string& s);
std::string hex64(std::uint64_t v);

// Shortest decimal text that round-trips a double; used by all CSV writers
// so artifacts are byte-reproducible.
std::string format_double(double v);

} // namespace ppde
