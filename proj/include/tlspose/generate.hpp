#pragma once

#include "scenario.hpp"

#include <cstdint>
#include <optional>

namespace tlspose
{

struct GenerationRecipe
{
        int n_features = 6;
        double direction_sigma = 100; // per-axis, before normalization
        double angle_coeff_deg = 0.006;
        double eps_uv = 190; // m, depth variance scale
        double depth_floor = 1.0; // m, minimum truth depth
        std::uint64_t seed = 0;
        std::optional<Rotation> fixed_attitude;
        std::optional<Vector3d> fixed_position;
};

// Random scenario following the simulation recipe: normalized Gaussian rays,
// random pose, depths closed through the constraint, random SPD direction
// covariances of magnitude angle_coeff_deg squared, depth variances
// (eps_uv * |N(0,1)|)^2.
[[nodiscard]] Scenario gen_scenario(const GenerationRecipe& recipe);

}
