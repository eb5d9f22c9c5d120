#include <tlspose/generate.hpp>

#include <cmath>
#include <random>

namespace tlspose
{

namespace
{
[[nodiscard]] Vector3d normal3(std::mt19937_64& rng, std::normal_distribution<double>& gauss)
{
        Vector3d res;
        for (int k = 0; k < 3; ++k)
        {
                res[k] = gauss(rng);
        }
        return res;
}

[[nodiscard]] Matrix3d random_spd(
        std::mt19937_64& rng,
        std::normal_distribution<double>& gauss,
        const double scale)
{
        Matrix3d m;
        for (int i = 0; i < 3; ++i)
        {
                for (int j = 0; j < 3; ++j)
                {
                        m(i, j) = gauss(rng);
                }
        }
        Matrix3d res = m * m.transpose();
        const Eigen::SelfAdjointEigenSolver<Matrix3d> es(res, Eigen::EigenvaluesOnly);
        res *= scale * scale / es.eigenvalues().maxCoeff();
        return (res + res.transpose()) / 2;
}

[[nodiscard]] Rotation random_rotation(std::mt19937_64& rng, std::normal_distribution<double>& gauss)
{
        Eigen::Vector4d q;
        for (int k = 0; k < 4; ++k)
        {
                q[k] = gauss(rng);
        }
        q.normalize();
        return Rotation(
                Eigen::Quaterniond(q[0], q[1], q[2], q[3]).toRotationMatrix(), true);
}
}

Scenario gen_scenario(const GenerationRecipe& recipe)
{
        if (recipe.n_features < 3)
        {
                throw DegenerateConfigurationError("gen_scenario needs at least 3 features");
        }

        std::mt19937_64 rng(recipe.seed);
        std::normal_distribution<double> gauss;
        const double angle_coeff = recipe.angle_coeff_deg * M_PI / 180;

        Scenario res;
        res.a = recipe.fixed_attitude ? *recipe.fixed_attitude : random_rotation(rng, gauss);
        res.p = recipe.fixed_position ? *recipe.fixed_position : normal3(rng, gauss);

        for (int i = 0; i < recipe.n_features; ++i)
        {
                FeatureTruth truth{};
                bool placed = false;
                for (int attempt = 0; attempt < 100 && !placed; ++attempt)
                {
                        const Vector3d raw = recipe.direction_sigma * normal3(rng, gauss);
                        if (raw.norm() < 1e-9)
                        {
                                continue;
                        }
                        truth.r = raw.normalized();
                        truth.v = std::max(
                                recipe.depth_floor,
                                std::abs(recipe.direction_sigma * gauss(rng)));
                        try
                        {
                                std::tie(truth.b, truth.u) =
                                        complete_feature(res.a, res.p, truth.r, truth.v);
                        }
                        catch (const DegenerateGeometryError&)
                        {
                                continue;
                        }
                        placed = truth.u >= recipe.depth_floor;
                }
                if (!placed)
                {
                        throw DegenerateGeometryError("gen_scenario: no valid feature geometry");
                }

                FeatureNoise noise{};
                noise.r_r = random_spd(rng, gauss, angle_coeff);
                noise.r_b = random_spd(rng, gauss, angle_coeff);
                // |N| clamped away from zero so the depth prior stays finite
                const double su = recipe.eps_uv * std::max(0.05, std::abs(gauss(rng)));
                const double sv = recipe.eps_uv * std::max(0.05, std::abs(gauss(rng)));
                noise.r_u = su * su;
                noise.r_v = sv * sv;

                res.features.emplace_back(truth, noise);
        }
        res.validate();
        return res;
}

}
