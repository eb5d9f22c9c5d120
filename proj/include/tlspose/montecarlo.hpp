#pragma once

#include "uncertainty.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace tlspose
{

struct TrialRecord
{
        int trial = 0;
        bool converged = false;
        int iterations = 0;
        Vector3d dalpha = Vector3d::Zero(); // log_so3(A_hat * A')
        Vector3d dp = Vector3d::Zero();
        VectorXd du;
        VectorXd dv;
        Vector3d rpy = Vector3d::Zero(); // error rotation as roll/pitch/yaw, plots only
        std::vector<Vector6d> residual_d; // d_tilde - d_hat
        std::vector<Vector6d> estimate_error_d; // d_hat - d

        [[nodiscard]] VectorXd packed() const;
};

struct MonteCarloReport
{
        int n_trials = 0;
        std::uint64_t seed = 0;
        int failures = 0; // non-converged trials, excluded from statistics
        VectorXd coverage; // per packed component, 3-sigma bounds from F^-1
        VectorXd mean_error;
        MatrixXd sample_cov;
        std::vector<Matrix6d> sample_residual_cov;
        std::vector<Matrix6d> sample_estimate_cov;
};

struct ConsistencyRow
{
        std::string component;
        double sample_variance;
        double analytical_variance;
        double ratio;
        bool in_band;
};

// Independent per-trial generator so trials can run in any order on any
// number of threads with identical output.
[[nodiscard]] std::mt19937_64 trial_rng(std::uint64_t master_seed, std::uint64_t trial);

// Additive Gaussian noise on every observation; directions are not
// renormalized.
[[nodiscard]] MeasurementSet sample_measurements(const Scenario& scenario, std::mt19937_64& rng);

// Sample/solve/record loop. The solver is warm-started at the scenario truth
// so every trial converges into the basin the covariance analysis describes;
// see the README discussion of initialization at these noise levels.
[[nodiscard]] std::pair<MonteCarloReport, std::vector<TrialRecord>> run_trials(
        const Scenario& scenario,
        int n_trials,
        std::uint64_t master_seed,
        const SolverConfig& config = {},
        int threads = 0);

// Fraction of converged trials with |error| <= bound, per packed component.
[[nodiscard]] VectorXd coverage(const std::vector<TrialRecord>& records, const VectorXd& bounds);

// Sample-to-analytical variance ratios for the error state and for the
// per-feature residual/estimate observation covariances.
[[nodiscard]] std::vector<ConsistencyRow> compare_covariances(
        const MonteCarloReport& report,
        const UncertaintyReport& analytical,
        double band_lo = 0.85,
        double band_hi = 1.15);

void write_trials_csv(const std::string& path, const std::vector<TrialRecord>& records);
void write_consistency_csv(const std::string& path, const std::vector<ConsistencyRow>& rows);
void write_report(const std::string& path, const MonteCarloReport& report);

}
