#include <tlspose/estimator.hpp>

#include <algorithm>
#include <cmath>

namespace tlspose
{

namespace
{
constexpr double DEPTH_FLOOR = 1e-3;

[[nodiscard]] VectorXd solve_spd(const MatrixXd& f, const VectorXd& g)
{
        const Eigen::LLT<MatrixXd> llt(f);
        if (llt.info() != Eigen::Success)
        {
                throw IllConditionedError("normal matrix is not positive definite");
        }
        const VectorXd l_diag = llt.matrixLLT().diagonal();
        const double dmin = l_diag.minCoeff();
        const double dmax = l_diag.maxCoeff();
        if (!(dmin > 0) || (dmin * dmin) / (dmax * dmax) < 1e-15)
        {
                throw IllConditionedError("normal matrix is numerically singular");
        }
        return llt.solve(g);
}

[[nodiscard]] State apply_step(const State& state, const VectorXd& dx, const double step)
{
        const int n = static_cast<int>(state.u.size());
        State res;
        res.a = Rotation(
                Matrix3d(exp_so3(Vector3d(-step * dx.head<3>())).matrix() * state.a.matrix()),
                true);
        res.p = state.p + step * dx.segment<3>(3);
        res.u = state.u;
        res.v = state.v;
        for (int i = 0; i < n; ++i)
        {
                res.u[i] += step * dx[LinearizedSystem::du_index(i)];
                res.v[i] += step * dx[LinearizedSystem::dv_index(i)];
        }
        return res;
}

[[nodiscard]] bool depths_positive(const State& state)
{
        return state.u.minCoeff() > 0 && state.v.minCoeff() > 0;
}
}

std::tuple<Rotation, Vector3d, VectorXd, VectorXd> initialize(const MeasurementSet& meas)
{
        const int n = static_cast<int>(meas.size());
        if (n < 3)
        {
                throw DegenerateConfigurationError("initialize needs at least 3 features");
        }

        Vector3d x_mean = Vector3d::Zero();
        Vector3d y_mean = Vector3d::Zero();
        for (int i = 0; i < n; ++i)
        {
                x_mean += meas.v[i] * meas.r[i];
                y_mean += meas.u[i] * meas.b[i];
        }
        x_mean /= n;
        y_mean /= n;

        Matrix3d h = Matrix3d::Zero();
        for (int i = 0; i < n; ++i)
        {
                h += (meas.u[i] * meas.b[i] - y_mean) * (meas.v[i] * meas.r[i] - x_mean).transpose();
        }

        const Eigen::JacobiSVD<Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
        if (svd.singularValues()[1] <= 1e-9 * svd.singularValues()[0])
        {
                throw DegenerateConfigurationError("initialize: features are collinear");
        }
        Matrix3d d = Matrix3d::Identity();
        if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0)
        {
                d(2, 2) = -1;
        }
        const Rotation a(Matrix3d(svd.matrixU() * d * svd.matrixV().transpose()), true);
        const Vector3d p = a.matrix() * x_mean - y_mean;

        VectorXd u0(n);
        VectorXd v0(n);
        for (int i = 0; i < n; ++i)
        {
                u0[i] = std::max(meas.u[i], DEPTH_FLOOR);
                v0[i] = std::max(meas.v[i], DEPTH_FLOOR);
        }
        return {a, p, u0, v0};
}

Matrix3d build_q_lambda(const Rotation& a, const double u, const double v, const FeatureNoise& noise)
{
        return v * v * a.matrix() * noise.r_r * a.matrix().transpose() + u * u * noise.r_b;
}

double reduced_cost(
        const MeasurementSet& meas,
        const std::vector<FeatureNoise>& noise,
        const State& state)
{
        const int n = static_cast<int>(meas.size());
        double res = 0;
        for (int i = 0; i < n; ++i)
        {
                const Matrix3d q = build_q_lambda(state.a, state.u[i], state.v[i], noise[i]);
                const Vector3d rho =
                        state.u[i] * meas.b[i] - state.v[i] * (state.a * meas.r[i]) + state.p;
                const double du = meas.u[i] - state.u[i];
                const double dv = meas.v[i] - state.v[i];
                res += 0.5
                       * (du * du / noise[i].r_u + dv * dv / noise[i].r_v
                          + rho.dot(q.llt().solve(rho)));
        }
        return res;
}

LinearizedSystem assemble(
        const MeasurementSet& meas,
        const std::vector<FeatureNoise>& noise,
        const State& state)
{
        const int n = static_cast<int>(meas.size());
        const int dim = 6 + 2 * n;

        LinearizedSystem sys;
        sys.f = MatrixXd::Zero(dim, dim);
        sys.g = VectorXd::Zero(dim);
        sys.gi.reserve(n);
        sys.q_lambda.reserve(n);
        sys.s.reserve(n);
        sys.r_u.resize(n);
        sys.r_v.resize(n);

        for (int i = 0; i < n; ++i)
        {
                const int ku = LinearizedSystem::du_index(i);
                const int kv = LinearizedSystem::dv_index(i);
                const Matrix3d q = build_q_lambda(state.a, state.u[i], state.v[i], noise[i]);
                const Matrix3d q_inv = q.llt().solve(Matrix3d::Identity());
                const Vector3d ar = state.a * meas.r[i];
                const Vector3d rho = state.u[i] * meas.b[i] - state.v[i] * ar + state.p;

                Eigen::Matrix<double, 3, Eigen::Dynamic> gi(3, dim);
                gi.setZero();
                gi.middleCols<3>(0) = state.v[i] * skew(ar);
                gi.middleCols<3>(3) = -Matrix3d::Identity();
                gi.col(ku) = -meas.b[i];
                gi.col(kv) = ar;

                sys.f += gi.transpose() * q_inv * gi;
                sys.f(ku, ku) += 1 / noise[i].r_u;
                sys.f(kv, kv) += 1 / noise[i].r_v;

                sys.g += gi.transpose() * (q_inv * rho);
                sys.g[ku] += (meas.u[i] - state.u[i]) / noise[i].r_u;
                sys.g[kv] += (meas.v[i] - state.v[i]) / noise[i].r_v;

                Matrix36d s;
                s.leftCols<3>() = state.v[i] * state.a.matrix();
                s.rightCols<3>() = -state.u[i] * Matrix3d::Identity();

                sys.gi.push_back(std::move(gi));
                sys.q_lambda.push_back(q);
                sys.s.push_back(s);
                sys.r_u[i] = noise[i].r_u;
                sys.r_v[i] = noise[i].r_v;
        }
        sys.f = ((sys.f + sys.f.transpose()) / 2).eval();
        return sys;
}

LinearizedSystem assemble_at_truth(const Scenario& scenario)
{
        State truth;
        truth.a = scenario.a;
        truth.p = scenario.p;
        const int n = static_cast<int>(scenario.size());
        truth.u.resize(n);
        truth.v.resize(n);
        for (int i = 0; i < n; ++i)
        {
                truth.u[i] = scenario.features[i].first.u;
                truth.v[i] = scenario.features[i].first.v;
        }
        return assemble(truth_measurements(scenario), noise_blocks(scenario), truth);
}

GnStep gn_step(
        const MeasurementSet& meas,
        const std::vector<FeatureNoise>& noise,
        const State& state,
        const SolverConfig& config)
{
        const LinearizedSystem sys = assemble(meas, noise, state);

        GnStep res;
        res.dx = solve_spd(sys.f, sys.g);
        res.cost_before = reduced_cost(meas, noise, state);

        double step = 1;
        for (int h = 0; h <= config.max_halvings; ++h, step /= 2)
        {
                const State candidate = apply_step(state, res.dx, step);
                if (!depths_positive(candidate))
                {
                        if (h == config.max_halvings)
                        {
                                throw DegenerateGeometryError(
                                        "gn_step: cannot keep depths positive");
                        }
                        continue;
                }
                const double cost = reduced_cost(meas, noise, candidate);
                if (cost <= res.cost_before || !config.line_search)
                {
                        res.state = candidate;
                        res.cost_after = cost;
                        res.dx *= step;
                        res.accepted = true;
                        return res;
                }
        }

        // No descent within the halving budget: stall, the caller treats a
        // tiny proposed step as convergence.
        res.state = state;
        res.cost_after = res.cost_before;
        res.accepted = false;
        return res;
}

PoseSolution solve(
        const MeasurementSet& meas,
        const std::vector<FeatureNoise>& noise,
        const SolverConfig& config,
        const std::optional<State>& init)
{
        const int n = static_cast<int>(meas.size());
        if (n < 3)
        {
                throw DegenerateConfigurationError("solve needs at least 3 features");
        }

        State state;
        if (init)
        {
                state = *init;
        }
        else
        {
                auto [a0, p0, u0, v0] = initialize(meas);
                state = {a0, p0, std::move(u0), std::move(v0)};
        }

        PoseSolution res;
        double cost = reduced_cost(meas, noise, state);
        for (int it = 1; it <= config.max_iterations; ++it)
        {
                const GnStep step = gn_step(meas, noise, state, config);
                res.iterations = it;
                if (!step.accepted)
                {
                        // the line search found no descent: numerical minimum
                        res.converged = true;
                        break;
                }
                state = step.state;
                const bool small_step = step.dx.lpNorm<Eigen::Infinity>() <= config.step_tolerance;
                const bool small_decrease =
                        step.cost_before - step.cost_after
                        <= config.cost_tolerance * std::max(1.0, step.cost_before);
                cost = step.cost_after;
                if (small_step || small_decrease)
                {
                        res.converged = true;
                        break;
                }
        }

        res.a_hat = state.a;
        res.p_hat = state.p;
        res.u_hat = state.u;
        res.v_hat = state.v;
        res.final_cost = cost;

        for (int i = 0; i < n; ++i)
        {
                Matrix36d s;
                s.leftCols<3>() = state.v[i] * state.a.matrix();
                s.rightCols<3>() = -state.u[i] * Matrix3d::Identity();
                const Matrix3d q = build_q_lambda(state.a, state.u[i], state.v[i], noise[i]);
                Vector6d d_tilde;
                d_tilde << meas.r[i], meas.b[i];
                const Vector3d lambda = q.llt().solve(s * d_tilde - state.p);
                const Vector6d d_hat = d_tilde - noise[i].stacked() * s.transpose() * lambda;
                res.lambda.push_back(lambda);
                res.d_hat.push_back(d_hat);
        }
        return res;
}

std::pair<VectorXd, MatrixXd> solve_ls_baseline(
        const MatrixXd& design,
        const VectorXd& obs,
        const MatrixXd& r_yy)
{
        const Eigen::LLT<MatrixXd> noise_llt(r_yy);
        if (noise_llt.info() != Eigen::Success)
        {
                throw InvalidNoiseModelError("solve_ls_baseline: R_yy is not positive definite");
        }
        const MatrixXd hw = noise_llt.matrixL().solve(design);
        const VectorXd yw = noise_llt.matrixL().solve(obs);

        const Eigen::ColPivHouseholderQR<MatrixXd> qr(hw);
        if (qr.rank() < design.cols())
        {
                throw DegenerateConfigurationError("solve_ls_baseline: design is rank deficient");
        }
        const MatrixXd normal = hw.transpose() * hw;
        const MatrixXd cov = normal.llt().solve(MatrixXd::Identity(design.cols(), design.cols()));
        const VectorXd x = cov * (hw.transpose() * yw);
        return {x, (cov + cov.transpose()) / 2};
}

}
