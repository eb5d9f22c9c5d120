#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace tlspose
{

using Eigen::Matrix3d;
using Eigen::MatrixXd;
using Eigen::Vector3d;
using Eigen::VectorXd;
using Matrix6d = Eigen::Matrix<double, 6, 6>;
using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix63d = Eigen::Matrix<double, 6, 3>;
using Matrix36d = Eigen::Matrix<double, 3, 6>;

struct DegenerateGeometryError : std::runtime_error
{
        using std::runtime_error::runtime_error;
};

struct DegenerateConfigurationError : std::runtime_error
{
        using std::runtime_error::runtime_error;
};

struct IllConditionedError : std::runtime_error
{
        using std::runtime_error::runtime_error;
};

struct InvalidNoiseModelError : std::runtime_error
{
        using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error
{
        using std::runtime_error::runtime_error;
};

}
