#include <tlspose/sensitivity.hpp>

#include <cmath>

namespace tlspose
{

namespace
{
[[nodiscard]] VectorXd inv_column(const LinearizedSystem& sys, const int k)
{
        VectorXd e = VectorXd::Zero(sys.f.rows());
        e[k] = 1;
        return sys.f.llt().solve(e);
}

[[nodiscard]] VectorXd d_estimate(const LinearizedSystem& sys, const int k, const double var, const double residual)
{
        const VectorXd dx = sys.f.llt().solve(sys.g);
        return inv_column(sys, k) * ((dx[k] - residual) / (var * var));
}

[[nodiscard]] MatrixXd d_cov(const LinearizedSystem& sys, const int k, const double var)
{
        const VectorXd col = inv_column(sys, k);
        return col * col.transpose() / (var * var);
}

[[nodiscard]] Matrix6d d_obs_cov(
        const LinearizedSystem& sys,
        const FeatureNoise& noise_j,
        const int k,
        const double var,
        const int j,
        const double sign)
{
        const Matrix63d c = observation_gain(sys, noise_j, j);
        const Vector6d w = c * (sys.gi[j] * inv_column(sys, k));
        return sign * w * w.transpose() / (var * var);
}
}

VectorXd d_estimate_d_ru(const LinearizedSystem& sys, const int i, const double residual_u)
{
        return d_estimate(sys, LinearizedSystem::du_index(i), sys.r_u[i], residual_u);
}

VectorXd d_estimate_d_rv(const LinearizedSystem& sys, const int i, const double residual_v)
{
        return d_estimate(sys, LinearizedSystem::dv_index(i), sys.r_v[i], residual_v);
}

MatrixXd d_cov_d_ru(const LinearizedSystem& sys, const int i)
{
        return d_cov(sys, LinearizedSystem::du_index(i), sys.r_u[i]);
}

MatrixXd d_cov_d_rv(const LinearizedSystem& sys, const int i)
{
        return d_cov(sys, LinearizedSystem::dv_index(i), sys.r_v[i]);
}

Matrix6d d_rescov_d_ru(const LinearizedSystem& sys, const FeatureNoise& noise_j, const int i, const int j)
{
        return d_obs_cov(sys, noise_j, LinearizedSystem::du_index(i), sys.r_u[i], j, -1);
}

Matrix6d d_rescov_d_rv(const LinearizedSystem& sys, const FeatureNoise& noise_j, const int i, const int j)
{
        return d_obs_cov(sys, noise_j, LinearizedSystem::dv_index(i), sys.r_v[i], j, -1);
}

Matrix6d d_estcov_d_ru(const LinearizedSystem& sys, const FeatureNoise& noise_j, const int i, const int j)
{
        return d_obs_cov(sys, noise_j, LinearizedSystem::du_index(i), sys.r_u[i], j, 1);
}

Matrix6d d_estcov_d_rv(const LinearizedSystem& sys, const FeatureNoise& noise_j, const int i, const int j)
{
        return d_obs_cov(sys, noise_j, LinearizedSystem::dv_index(i), sys.r_v[i], j, 1);
}

double d_logdetf_d_ru(const LinearizedSystem& sys, const int i)
{
        const int k = LinearizedSystem::du_index(i);
        return -inv_column(sys, k)[k] / (sys.r_u[i] * sys.r_u[i]);
}

double d_logdetf_d_rv(const LinearizedSystem& sys, const int i)
{
        const int k = LinearizedSystem::dv_index(i);
        return -inv_column(sys, k)[k] / (sys.r_v[i] * sys.r_v[i]);
}

double rcond(const MatrixXd& f)
{
        const Eigen::SelfAdjointEigenSolver<MatrixXd> es(f, Eigen::EigenvaluesOnly);
        const VectorXd abs_ev = es.eigenvalues().cwiseAbs();
        return abs_ev.minCoeff() / abs_ev.maxCoeff();
}

double logdet(const MatrixXd& f)
{
        const Eigen::LLT<MatrixXd> llt(f);
        if (llt.info() != Eigen::Success)
        {
                throw IllConditionedError("logdet: matrix is not positive definite");
        }
        return 2 * llt.matrixLLT().diagonal().array().log().sum();
}

std::vector<SweepRow> conditioning_sweep(
        const Scenario& scenario,
        const std::vector<double>& eps_values)
{
        constexpr double BASELINE_EPS = 190;

        std::vector<SweepRow> res;
        res.reserve(eps_values.size());
        for (const double eps : eps_values)
        {
                if (eps <= 0)
                {
                        throw std::invalid_argument("conditioning_sweep: eps must be positive");
                }
                const double scale = (eps / BASELINE_EPS) * (eps / BASELINE_EPS);
                Scenario scaled = scenario;
                for (auto& [truth, noise] : scaled.features)
                {
                        noise.r_u *= scale;
                        noise.r_v *= scale;
                }
                const MatrixXd f = fisher_information(scaled);
                res.push_back({eps, rcond(f), logdet(f)});
        }
        return res;
}

}
