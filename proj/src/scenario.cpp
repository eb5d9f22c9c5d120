#include <tlspose/scenario.hpp>

#include <cmath>

namespace tlspose
{

namespace
{
void check_spd(const Matrix3d& m, const std::string& name, const std::size_t i)
{
        if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-14)
        {
                throw InvalidNoiseModelError(
                        name + " of feature " + std::to_string(i) + " is not symmetric");
        }
        const Eigen::SelfAdjointEigenSolver<Matrix3d> es(m, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() <= 0)
        {
                throw InvalidNoiseModelError(
                        name + " of feature " + std::to_string(i) + " is not positive definite");
        }
}
}

void Scenario::validate() const
{
        if (features.size() < 3)
        {
                throw DegenerateConfigurationError("scenario needs at least 3 features");
        }
        for (std::size_t i = 0; i < features.size(); ++i)
        {
                const auto& [truth, noise] = features[i];
                if (std::abs(truth.r.norm() - 1) > 1e-12 || std::abs(truth.b.norm() - 1) > 1e-12)
                {
                        throw DegenerateGeometryError(
                                "feature " + std::to_string(i) + " has a non-unit direction");
                }
                if (truth.u <= 0 || truth.v <= 0)
                {
                        throw DegenerateGeometryError(
                                "feature " + std::to_string(i) + " has a non-positive depth");
                }
                const Vector3d res = constraint_residual(*this, i);
                if (res.norm() > 1e-9 * std::max(truth.u, truth.v))
                {
                        throw DegenerateGeometryError(
                                "feature " + std::to_string(i) + " violates the pose constraint");
                }
                check_spd(noise.r_r, "R_r", i);
                check_spd(noise.r_b, "R_b", i);
                if (noise.r_u <= 0 || noise.r_v <= 0)
                {
                        throw InvalidNoiseModelError(
                                "depth variances of feature " + std::to_string(i)
                                + " must be positive");
                }
        }
}

std::pair<Vector3d, double> complete_feature(
        const Rotation& a,
        const Vector3d& p,
        const Vector3d& r,
        const double v)
{
        const Vector3d w = v * (a * r) - p;
        const double u = w.norm();
        if (u <= 1e-12)
        {
                throw DegenerateGeometryError("complete_feature: feature at the camera center");
        }
        return {w / u, u};
}

Vector3d constraint_residual(const Scenario& scenario, const std::size_t i)
{
        const auto& t = scenario.features.at(i).first;
        return t.u * t.b - t.v * (scenario.a * t.r) + scenario.p;
}

MeasurementSet truth_measurements(const Scenario& scenario)
{
        MeasurementSet res;
        res.r.reserve(scenario.size());
        for (const auto& [truth, noise] : scenario.features)
        {
                res.r.push_back(truth.r);
                res.b.push_back(truth.b);
                res.u.push_back(truth.u);
                res.v.push_back(truth.v);
        }
        return res;
}

std::vector<FeatureNoise> noise_blocks(const Scenario& scenario)
{
        std::vector<FeatureNoise> res;
        res.reserve(scenario.size());
        for (const auto& [truth, noise] : scenario.features)
        {
                res.push_back(noise);
        }
        return res;
}

}
