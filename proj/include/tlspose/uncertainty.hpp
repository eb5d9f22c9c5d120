#pragma once

#include "estimator.hpp"

#include <cstdint>

namespace tlspose
{

enum class EvaluationMode
{
        at_truth,
        at_estimate
};

struct UncertaintyReport
{
        MatrixXd f;
        MatrixXd cov_x;
        std::vector<Matrix63d> c; // per-feature observation gain
        std::vector<Matrix6d> cov_residual;
        std::vector<Matrix6d> cov_estimate;
        EvaluationMode mode = EvaluationMode::at_truth;
};

struct ErrorState
{
        Vector3d dalpha;
        Vector3d dp;
        VectorXd du;
        VectorXd dv;

        [[nodiscard]] VectorXd packed() const;
};

[[nodiscard]] MatrixXd fisher_information(const Scenario& scenario);

// Inverse of a positive definite information matrix, symmetrized.
[[nodiscard]] MatrixXd covariance_of_unknowns(const MatrixXd& f);

// C_i = R_i S_i' Q_lambda_i^-1, built at truth.
[[nodiscard]] Matrix63d observation_gain(const Scenario& scenario, int i);
[[nodiscard]] Matrix63d observation_gain(
        const LinearizedSystem& sys,
        const FeatureNoise& noise,
        int i);

// Covariance of d_tilde - d_hat: C (Q - G F^-1 G') C'.
[[nodiscard]] Matrix6d residual_covariance(const Scenario& scenario, int i, const MatrixXd& f);

// Covariance of d_hat - d: R + C (Q + G F^-1 G') C' - (C S R + R S' C').
[[nodiscard]] Matrix6d estimate_covariance(const Scenario& scenario, int i, const MatrixXd& f);

// Samples Delta_a = u*Delta_b - v*A*Delta_r and returns the max relative
// diagonal deviation of the sample covariance from Q_lambda.
[[nodiscard]] double delta_a_covariance_check(
        const Scenario& scenario,
        int i,
        int n_samples,
        std::uint64_t seed);

struct EfficiencyRatios
{
        Vector3d dalpha;
        Vector3d dp;
        VectorXd du;
        VectorXd dv;
        bool within(double lo, double hi) const;
};

// Sample-to-analytical variance ratios per block, from a packed-error sample
// covariance against F^-1.
[[nodiscard]] EfficiencyRatios crlb_equality_check(
        const Scenario& scenario,
        const MatrixXd& sample_cov);

// Full report at truth or at a converged estimate.
[[nodiscard]] UncertaintyReport uncertainty_report(const Scenario& scenario);
[[nodiscard]] UncertaintyReport uncertainty_report(
        const Scenario& scenario,
        const PoseSolution& solution);

}
