#pragma once

#include "uncertainty.hpp"

namespace tlspose
{

struct SweepRow
{
        double eps_uv;
        double rcond_f;
        double logdet_f;
};

// Derivative of the Gauss-Newton correction dx = F^-1 g with respect to
// R_u_i: F^-1 e_i' (e_i dx - du_i) / R_u_i^2, where du_i is the measured
// minus estimated depth residual.
[[nodiscard]] VectorXd d_estimate_d_ru(const LinearizedSystem& sys, int i, double residual_u);
[[nodiscard]] VectorXd d_estimate_d_rv(const LinearizedSystem& sys, int i, double residual_v);

// Derivative of cov{dx} = F^-1: F^-1 (e_i' e_i) F^-1 / R_u_i^2, PSD.
[[nodiscard]] MatrixXd d_cov_d_ru(const LinearizedSystem& sys, int i);
[[nodiscard]] MatrixXd d_cov_d_rv(const LinearizedSystem& sys, int i);

// Derivatives of the feature-j residual and estimate covariances of the
// observations; the two are exact negatives of each other.
[[nodiscard]] Matrix6d d_rescov_d_ru(
        const LinearizedSystem& sys,
        const FeatureNoise& noise_j,
        int i,
        int j);
[[nodiscard]] Matrix6d d_rescov_d_rv(
        const LinearizedSystem& sys,
        const FeatureNoise& noise_j,
        int i,
        int j);
[[nodiscard]] Matrix6d d_estcov_d_ru(
        const LinearizedSystem& sys,
        const FeatureNoise& noise_j,
        int i,
        int j);
[[nodiscard]] Matrix6d d_estcov_d_rv(
        const LinearizedSystem& sys,
        const FeatureNoise& noise_j,
        int i,
        int j);

// d log|F| / d R_u_i = -(F^-1)_kk / R_u_i^2 < 0.
[[nodiscard]] double d_logdetf_d_ru(const LinearizedSystem& sys, int i);
[[nodiscard]] double d_logdetf_d_rv(const LinearizedSystem& sys, int i);

// Rescales every depth variance by (eps/190)^2 from the scenario baseline
// and tabulates the conditioning of the resulting information matrix.
[[nodiscard]] std::vector<SweepRow> conditioning_sweep(
        const Scenario& scenario,
        const std::vector<double>& eps_values);

[[nodiscard]] double rcond(const MatrixXd& f);
[[nodiscard]] double logdet(const MatrixXd& f);

}
