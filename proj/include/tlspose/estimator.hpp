#pragma once

#include "scenario.hpp"

#include <optional>
#include <tuple>
#include <vector>

namespace tlspose
{

// Current iterate of the solver: pose plus per-feature virtual depths.
struct State
{
        Rotation a;
        Vector3d p;
        VectorXd u;
        VectorXd v;
};

struct SolverConfig
{
        int max_iterations = 50;
        double step_tolerance = 1e-10; // on the max-norm of the update
        double cost_tolerance = 1e-12; // relative cost decrease
        bool line_search = true; // simple halving
        int max_halvings = 8;
};

struct PoseSolution
{
        Rotation a_hat;
        Vector3d p_hat;
        VectorXd u_hat;
        VectorXd v_hat;
        std::vector<Vector6d> d_hat; // r_hat over b_hat per feature
        std::vector<Vector3d> lambda;
        int iterations = 0;
        double final_cost = 0;
        bool converged = false;

        [[nodiscard]] State state() const
        {
                return {a_hat, p_hat, u_hat, v_hat};
        }
};

// Unknowns are packed as [dalpha(3), dp(3), du_1, dv_1, ..., du_n, dv_n].
struct LinearizedSystem
{
        MatrixXd f; // information matrix, (6+2n)^2
        VectorXd g;
        std::vector<Eigen::Matrix<double, 3, Eigen::Dynamic>> gi; // constraint Jacobians
        std::vector<Matrix3d> q_lambda;
        std::vector<Matrix36d> s; // [v*A, -u*I] per feature
        VectorXd r_u; // depth variances the system was built with
        VectorXd r_v;

        [[nodiscard]] static int du_index(const int i)
        {
                return 6 + 2 * i;
        }

        [[nodiscard]] static int dv_index(const int i)
        {
                return 7 + 2 * i;
        }
};

// Depth-scaled rigid registration of the point pairs (v_i r_i, u_i b_i);
// closed-form attitude by SVD of the centered cross-covariance, translation
// from the centroids, depths passed through.
[[nodiscard]] std::tuple<Rotation, Vector3d, VectorXd, VectorXd> initialize(
        const MeasurementSet& meas);

[[nodiscard]] Matrix3d build_q_lambda(
        const Rotation& a,
        double u,
        double v,
        const FeatureNoise& noise);

[[nodiscard]] double reduced_cost(
        const MeasurementSet& meas,
        const std::vector<FeatureNoise>& noise,
        const State& state);

// Normal system of the reduced cost at the given state, direction vectors
// taken from the measurements.
[[nodiscard]] LinearizedSystem assemble(
        const MeasurementSet& meas,
        const std::vector<FeatureNoise>& noise,
        const State& state);

// Same structure evaluated with every quantity at the scenario truth; this is
// the system behind the Fisher information (its g is zero).
[[nodiscard]] LinearizedSystem assemble_at_truth(const Scenario& scenario);

struct GnStep
{
        State state;
        VectorXd dx;
        double cost_before = 0;
        double cost_after = 0;
        bool accepted = false; // false when no descent direction was usable
};

// One Gauss-Newton step with optional halving line search. The attitude
// update is A <- exp_so3(-dalpha) * A; position and depths add their
// components directly. Depths are kept positive by further halving.
[[nodiscard]] GnStep gn_step(
        const MeasurementSet& meas,
        const std::vector<FeatureNoise>& noise,
        const State& state,
        const SolverConfig& config);

// Full solve: iterates gn_step from `init` (or from initialize()) and then
// recovers the observation estimates through the Lagrange multipliers.
[[nodiscard]] PoseSolution solve(
        const MeasurementSet& meas,
        const std::vector<FeatureNoise>& noise,
        const SolverConfig& config = {},
        const std::optional<State>& init = std::nullopt);

// Weighted ordinary least squares baseline: x = (H'R^-1H)^-1 H'R^-1 y with
// its covariance (H'R^-1H)^-1.
[[nodiscard]] std::pair<VectorXd, MatrixXd> solve_ls_baseline(
        const MatrixXd& design,
        const VectorXd& obs,
        const MatrixXd& r_yy);

}
