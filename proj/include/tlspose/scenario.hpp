#pragma once

#include "rotation.hpp"
#include "types.hpp"

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace tlspose
{

struct FeatureTruth
{
        Vector3d r; // reference-frame line of sight, unit
        Vector3d b; // body-frame line of sight, unit
        double u; // body-frame depth, m
        double v; // reference-frame depth, m
};

struct FeatureNoise
{
        Matrix3d r_r;
        Matrix3d r_b;
        double r_u;
        double r_v;

        [[nodiscard]] Matrix6d stacked() const
        {
                Matrix6d res = Matrix6d::Zero();
                res.topLeftCorner<3, 3>() = r_r;
                res.bottomRightCorner<3, 3>() = r_b;
                return res;
        }
};

struct Scenario
{
        Rotation a;
        Vector3d p;
        std::vector<std::pair<FeatureTruth, FeatureNoise>> features;

        [[nodiscard]] std::size_t size() const
        {
                return features.size();
        }

        // Enforces n >= 3, unit directions, SPD noise blocks, positive depth
        // variances and the pose constraint on every feature; throws on
        // violation.
        void validate() const;
};

struct MeasurementSet
{
        std::vector<Vector3d> r;
        std::vector<Vector3d> b;
        std::vector<double> u;
        std::vector<double> v;

        [[nodiscard]] std::size_t size() const
        {
                return r.size();
        }
};

// Closes a feature around the pose constraint: given the reference-frame ray
// and depth, returns the body-frame unit ray and depth so that
// u*b = v*A*r - p holds exactly.
[[nodiscard]] std::pair<Vector3d, double> complete_feature(
        const Rotation& a,
        const Vector3d& p,
        const Vector3d& r,
        double v);

// u*b - v*A*r + p for feature i; zero at a consistent truth.
[[nodiscard]] Vector3d constraint_residual(const Scenario& scenario, std::size_t i);

// Measurements equal to the scenario truth (the zero-noise draw).
[[nodiscard]] MeasurementSet truth_measurements(const Scenario& scenario);

[[nodiscard]] std::vector<FeatureNoise> noise_blocks(const Scenario& scenario);

}
