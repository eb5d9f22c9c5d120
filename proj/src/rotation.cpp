#include <tlspose/rotation.hpp>

#include <cmath>

namespace tlspose
{

namespace
{
constexpr double ORTHONORMALITY_TOL = 1e-12;
constexpr double REPAIR_TOL = 1e-6;

[[nodiscard]] double orthonormality_defect(const Matrix3d& m)
{
        return (m * m.transpose() - Matrix3d::Identity()).norm();
}

[[nodiscard]] Matrix3d polar_projection(const Matrix3d& m)
{
        const Eigen::JacobiSVD<Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
        Matrix3d res = svd.matrixU() * svd.matrixV().transpose();
        if (res.determinant() < 0)
        {
                Matrix3d flip = Matrix3d::Identity();
                flip(2, 2) = -1;
                res = svd.matrixU() * flip * svd.matrixV().transpose();
        }
        return res;
}
}

Rotation::Rotation(const Matrix3d& m, const bool reorthonormalize) : m_(m)
{
        if (reorthonormalize && orthonormality_defect(m_) <= REPAIR_TOL)
        {
                m_ = polar_projection(m_);
        }
        if (orthonormality_defect(m_) > ORTHONORMALITY_TOL)
        {
                throw std::invalid_argument("Rotation: matrix is not orthonormal");
        }
        if (std::abs(m_.determinant() - 1) > ORTHONORMALITY_TOL)
        {
                throw std::invalid_argument("Rotation: matrix is not proper (det != 1)");
        }
}

Matrix3d skew(const Vector3d& w)
{
        Matrix3d res;
        res << 0, -w[2], w[1], //
                w[2], 0, -w[0], //
                -w[1], w[0], 0;
        return res;
}

Rotation exp_so3(const Vector3d& delta_alpha)
{
        const double theta = delta_alpha.norm();
        const Matrix3d k = skew(delta_alpha);
        Matrix3d res;
        if (theta < 1e-12)
        {
                res = Matrix3d::Identity() + k + 0.5 * k * k;
        }
        else
        {
                res = Matrix3d::Identity() + std::sin(theta) / theta * k
                      + (1 - std::cos(theta)) / (theta * theta) * k * k;
        }
        return Rotation(res, true);
}

Vector3d log_so3(const Rotation& r)
{
        const Matrix3d& m = r.matrix();
        const double cos_theta = std::clamp((m.trace() - 1) / 2, -1.0, 1.0);
        const double theta = std::acos(cos_theta);
        const Vector3d axial(m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1));
        if (theta < 1e-12)
        {
                return axial / 2;
        }
        if (theta > M_PI - 1e-6)
        {
                // Axis from the diagonal of m = I*cos + aa'(1-cos) + skew*sin,
                // seeded by the largest diagonal element for stability.
                int k = 0;
                m.diagonal().maxCoeff(&k);
                Vector3d axis;
                axis[k] = std::sqrt(std::max(0.0, (m(k, k) - cos_theta) / (1 - cos_theta)));
                for (int j = 0; j < 3; ++j)
                {
                        if (j != k)
                        {
                                axis[j] = (m(k, j) + m(j, k)) / (2 * axis[k] * (1 - cos_theta));
                        }
                }
                axis.normalize();
                if (axis.dot(axial) < 0)
                {
                        axis = -axis;
                }
                return theta * axis;
        }
        return theta / (2 * std::sin(theta)) * axial;
}

}
