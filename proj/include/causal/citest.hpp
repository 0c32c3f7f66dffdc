#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "causal/feature_matrix.hpp"

namespace causal {

struct CiResult {
    double statistic = 0.0;
    double p_value = 1.0;
    double dof_or_n_eff = 0.0;  // chi-squared dof for G2, n - |z| - 3 for Fisher z
    bool low_power = false;     // G2 with n < 10 * dof; reported as independent

    bool independent_at(double alpha) const { return low_power || p_value >= alpha; }
};

inline constexpr double kDefaultAlpha = 0.01;
// |rho| is clamped below 1 so the statistic stays finite for exact dependence.
inline constexpr double kMaxAbsPartialCorrelation = 1.0 - 1e-12;

// Partial-correlation test over a precomputed correlation matrix.
class FisherZ {
public:
    explicit FisherZ(const FeatureMatrix& data);
    FisherZ(Eigen::MatrixXd correlation, std::size_t n);

    // Throws RuntimeError naming the variables when the correlation
    // submatrix over {x, y} u z is singular.
    CiResult test(std::size_t x, std::size_t y, std::span<const std::size_t> z) const;
    double partial_correlation(std::size_t x, std::size_t y, std::span<const std::size_t> z) const;

    std::size_t n() const { return n_; }
    const Eigen::MatrixXd& correlation() const { return corr_; }

private:
    Eigen::MatrixXd corr_;
    std::size_t n_ = 0;
    std::vector<std::string> names_;
};

// Likelihood-ratio test on binary columns stratified by z.
class G2Test {
public:
    explicit G2Test(const FeatureMatrix& data);
    CiResult test(std::size_t x, std::size_t y, std::span<const std::size_t> z) const;

private:
    const FeatureMatrix* data_;
};

// Chooses G2 when x, y and all of z are binary, Fisher z otherwise.
class CiTester {
public:
    explicit CiTester(const FeatureMatrix& data);
    CiResult test(std::size_t x, std::size_t y, std::span<const std::size_t> z) const;
    std::size_t tests_run() const { return tests_run_; }
    const FeatureMatrix& data() const { return *data_; }

private:
    const FeatureMatrix* data_;
    FisherZ fisher_;
    G2Test g2_;
    std::vector<bool> binary_;
    mutable std::size_t tests_run_ = 0;
};

CiResult fisher_z(const FeatureMatrix& data, std::size_t x, std::size_t y, std::span<const std::size_t> z);
CiResult g2_test(const FeatureMatrix& data, std::size_t x, std::size_t y, std::span<const std::size_t> z);

// Upper-tail probability of a chi-squared variable.
double chi2_sf(double statistic, double dof);
// Two-sided standard normal tail probability of |z|.
double normal_two_sided_p(double z);

}  // namespace causal
