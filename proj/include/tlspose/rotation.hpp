#pragma once

#include "types.hpp"

namespace tlspose
{

// Proper orthonormal 3x3 matrix. Construction verifies orthonormality to
// 1e-12; matrices within 1e-6 of orthonormal can be repaired by polar
// projection before the check.
class Rotation
{
public:
        Rotation() : m_(Matrix3d::Identity())
        {
        }

        explicit Rotation(const Matrix3d& m, bool reorthonormalize = false);

        [[nodiscard]] const Matrix3d& matrix() const
        {
                return m_;
        }

        [[nodiscard]] Rotation transposed() const
        {
                return Rotation(Matrix3d(m_.transpose()));
        }

        [[nodiscard]] Vector3d operator*(const Vector3d& x) const
        {
                return m_ * x;
        }

        [[nodiscard]] Rotation operator*(const Rotation& other) const
        {
                return Rotation(Matrix3d(m_ * other.m_));
        }

private:
        Matrix3d m_;
};

[[nodiscard]] Matrix3d skew(const Vector3d& w);

// Rodrigues formula.
[[nodiscard]] Rotation exp_so3(const Vector3d& delta_alpha);

// Principal branch, norm <= pi. Near angle pi the rotation axis is recovered
// from the diagonal, seeded by its largest element; the overall axis sign is
// then ambiguous (pi and -pi coincide) and the positive branch is returned.
[[nodiscard]] Vector3d log_so3(const Rotation& r);

}
