#include <tlspose/uncertainty.hpp>

#include <cmath>
#include <random>

namespace tlspose
{

Matrix63d observation_gain(const LinearizedSystem& sys, const FeatureNoise& noise, const int i)
{
        const Matrix3d q_inv = sys.q_lambda[i].llt().solve(Matrix3d::Identity());
        return noise.stacked() * sys.s[i].transpose() * q_inv;
}

namespace
{
[[nodiscard]] Matrix63d gain(const LinearizedSystem& sys, const FeatureNoise& noise, const int i)
{
        return observation_gain(sys, noise, i);
}

[[nodiscard]] Matrix6d symmetrized(const Matrix6d& m)
{
        return (m + m.transpose()) / 2;
}

// G F^-1 G' through the Cholesky half-solve M'M with M = L^-1 G'. This keeps
// the term symmetric PSD by construction and loses only O(eps * sqrt(cond F))
// instead of the full O(eps * cond F) of an explicit inverse.
[[nodiscard]] Matrix3d pose_feedback(
        const Eigen::LLT<MatrixXd>& llt,
        const LinearizedSystem& sys,
        const int i)
{
        const MatrixXd m = llt.matrixL().solve(MatrixXd(sys.gi[i].transpose()));
        return Matrix3d(m.transpose() * m);
}

[[nodiscard]] Matrix6d residual_cov(
        const LinearizedSystem& sys,
        const FeatureNoise& noise,
        const Eigen::LLT<MatrixXd>& llt,
        const int i)
{
        const Matrix63d c = gain(sys, noise, i);
        const Matrix3d mid = sys.q_lambda[i] - pose_feedback(llt, sys, i);
        return symmetrized(c * mid * c.transpose());
}

[[nodiscard]] Matrix6d estimate_cov(
        const LinearizedSystem& sys,
        const FeatureNoise& noise,
        const Eigen::LLT<MatrixXd>& llt,
        const int i)
{
        const Matrix63d c = gain(sys, noise, i);
        const Matrix6d r = noise.stacked();
        const Matrix3d mid = sys.q_lambda[i] + pose_feedback(llt, sys, i);
        const Matrix6d cross = c * sys.s[i] * r;
        return symmetrized(r + c * mid * c.transpose() - cross - cross.transpose());
}

[[nodiscard]] Eigen::LLT<MatrixXd> factorize(const MatrixXd& f)
{
        Eigen::LLT<MatrixXd> llt(f);
        if (llt.info() != Eigen::Success)
        {
                throw IllConditionedError("information matrix is not positive definite");
        }
        return llt;
}

[[nodiscard]] UncertaintyReport report_from_system(
        const LinearizedSystem& sys,
        const std::vector<FeatureNoise>& noise,
        const EvaluationMode mode)
{
        UncertaintyReport res;
        res.f = sys.f;
        res.cov_x = covariance_of_unknowns(sys.f);
        res.mode = mode;
        const Eigen::LLT<MatrixXd> llt = factorize(sys.f);
        const int n = static_cast<int>(noise.size());
        for (int i = 0; i < n; ++i)
        {
                res.c.push_back(gain(sys, noise[i], i));
                res.cov_residual.push_back(residual_cov(sys, noise[i], llt, i));
                res.cov_estimate.push_back(estimate_cov(sys, noise[i], llt, i));
        }
        return res;
}
}

VectorXd ErrorState::packed() const
{
        const int n = static_cast<int>(du.size());
        VectorXd res(6 + 2 * n);
        res.head<3>() = dalpha;
        res.segment<3>(3) = dp;
        for (int i = 0; i < n; ++i)
        {
                res[LinearizedSystem::du_index(i)] = du[i];
                res[LinearizedSystem::dv_index(i)] = dv[i];
        }
        return res;
}

MatrixXd fisher_information(const Scenario& scenario)
{
        return assemble_at_truth(scenario).f;
}

MatrixXd covariance_of_unknowns(const MatrixXd& f)
{
        const Eigen::LLT<MatrixXd> llt(f);
        if (llt.info() != Eigen::Success)
        {
                throw IllConditionedError("covariance_of_unknowns: F is not positive definite");
        }
        // M'M with M = L^-1 is symmetric by construction, unlike the
        // column-wise solve followed by averaging
        const MatrixXd m = llt.matrixL().solve(MatrixXd::Identity(f.rows(), f.cols()));
        return m.transpose() * m;
}

Matrix63d observation_gain(const Scenario& scenario, const int i)
{
        const LinearizedSystem sys = assemble_at_truth(scenario);
        return gain(sys, scenario.features.at(i).second, i);
}

Matrix6d residual_covariance(const Scenario& scenario, const int i, const MatrixXd& f)
{
        const LinearizedSystem sys = assemble_at_truth(scenario);
        return residual_cov(sys, scenario.features.at(i).second, factorize(f), i);
}

Matrix6d estimate_covariance(const Scenario& scenario, const int i, const MatrixXd& f)
{
        const LinearizedSystem sys = assemble_at_truth(scenario);
        return estimate_cov(sys, scenario.features.at(i).second, factorize(f), i);
}

double delta_a_covariance_check(
        const Scenario& scenario,
        const int i,
        const int n_samples,
        const std::uint64_t seed)
{
        const auto& [truth, noise] = scenario.features.at(i);
        const Matrix3d q = build_q_lambda(scenario.a, truth.u, truth.v, noise);
        const Matrix3d l_r = Matrix3d(noise.r_r.llt().matrixL());
        const Matrix3d l_b = Matrix3d(noise.r_b.llt().matrixL());

        std::mt19937_64 rng(seed);
        std::normal_distribution<double> gauss;
        Matrix3d acc = Matrix3d::Zero();
        for (int s = 0; s < n_samples; ++s)
        {
                Vector3d wr;
                Vector3d wb;
                for (int k = 0; k < 3; ++k)
                {
                        wr[k] = gauss(rng);
                }
                for (int k = 0; k < 3; ++k)
                {
                        wb[k] = gauss(rng);
                }
                const Vector3d da =
                        truth.u * (l_b * wb) - truth.v * (scenario.a * Vector3d(l_r * wr));
                acc += da * da.transpose();
        }
        acc /= n_samples;

        double dev = 0;
        for (int k = 0; k < 3; ++k)
        {
                dev = std::max(dev, std::abs(acc(k, k) - q(k, k)) / q(k, k));
        }
        return dev;
}

bool EfficiencyRatios::within(const double lo, const double hi) const
{
        const auto ok = [&](const double x)
        {
                return x >= lo && x <= hi;
        };
        for (int k = 0; k < 3; ++k)
        {
                if (!ok(dalpha[k]) || !ok(dp[k]))
                {
                        return false;
                }
        }
        for (int i = 0; i < du.size(); ++i)
        {
                if (!ok(du[i]) || !ok(dv[i]))
                {
                        return false;
                }
        }
        return true;
}

EfficiencyRatios crlb_equality_check(const Scenario& scenario, const MatrixXd& sample_cov)
{
        const MatrixXd cov = covariance_of_unknowns(fisher_information(scenario));
        const int n = static_cast<int>(scenario.size());

        EfficiencyRatios res;
        res.du.resize(n);
        res.dv.resize(n);
        for (int k = 0; k < 3; ++k)
        {
                res.dalpha[k] = sample_cov(k, k) / cov(k, k);
                res.dp[k] = sample_cov(k + 3, k + 3) / cov(k + 3, k + 3);
        }
        for (int i = 0; i < n; ++i)
        {
                const int ku = LinearizedSystem::du_index(i);
                const int kv = LinearizedSystem::dv_index(i);
                res.du[i] = sample_cov(ku, ku) / cov(ku, ku);
                res.dv[i] = sample_cov(kv, kv) / cov(kv, kv);
        }
        return res;
}

UncertaintyReport uncertainty_report(const Scenario& scenario)
{
        return report_from_system(
                assemble_at_truth(scenario), noise_blocks(scenario), EvaluationMode::at_truth);
}

UncertaintyReport uncertainty_report(const Scenario& scenario, const PoseSolution& solution)
{
        const int n = static_cast<int>(scenario.size());
        MeasurementSet est;
        for (int i = 0; i < n; ++i)
        {
                est.r.push_back(solution.d_hat[i].head<3>());
                est.b.push_back(solution.d_hat[i].tail<3>());
                est.u.push_back(solution.u_hat[i]);
                est.v.push_back(solution.v_hat[i]);
        }
        const LinearizedSystem sys = assemble(est, noise_blocks(scenario), solution.state());
        return report_from_system(sys, noise_blocks(scenario), EvaluationMode::at_estimate);
}

}
