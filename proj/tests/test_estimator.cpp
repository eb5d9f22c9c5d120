#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"

#include <tlspose/montecarlo.hpp>

#include <cmath>

using namespace tlspose;
using namespace tlspose::test;

TEST_CASE("initialize recovers the pose from clean data")
{
        const Scenario sc = fixture();
        const auto [a0, p0, u0, v0] = initialize(truth_measurements(sc));
        CHECK((a0.matrix() - sc.a.matrix()).norm() < 1e-9);
        CHECK((p0 - sc.p).norm() < 1e-6);
        CHECK((u0 - truth_state(sc).u).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("initialize trivial pose")
{
        MeasurementSet meas;
        meas.r = {Vector3d(1, 0, 0), Vector3d(0, 1, 0), Vector3d(0.6, 0, 0.8)};
        meas.b = meas.r;
        meas.u = {2, 3, 4};
        meas.v = meas.u;
        const auto [a0, p0, u0, v0] = initialize(meas);
        CHECK((a0.matrix() - Matrix3d::Identity()).norm() < 1e-12);
        CHECK(p0.norm() < 1e-12);
}

TEST_CASE("initialize rejects collinear features")
{
        MeasurementSet meas;
        for (int i = 0; i < 4; ++i)
        {
                meas.r.push_back(Vector3d(0, 0, 1));
                meas.b.push_back(Vector3d(0, 0, 1));
                meas.u.push_back(1.0 + i);
                meas.v.push_back(1.0 + i);
        }
        CHECK_THROWS_AS((void)initialize(meas), DegenerateConfigurationError);
}

TEST_CASE("build_q_lambda")
{
        FeatureNoise iso;
        iso.r_r = 0.25 * Matrix3d::Identity();
        iso.r_b = 0.25 * Matrix3d::Identity();
        iso.r_u = 1;
        iso.r_v = 1;
        const Matrix3d q = build_q_lambda(Rotation(), 2, 3, iso);
        CHECK((q - (4 + 9) * 0.25 * Matrix3d::Identity()).norm() < 1e-14);

        const Scenario sc = fixture();
        const auto& [truth, noise] = sc.features[0];
        const Matrix3d single = build_q_lambda(sc.a, 0, truth.v, noise);
        CHECK((single - truth.v * truth.v * sc.a.matrix() * noise.r_r * sc.a.matrix().transpose())
                      .norm()
              < 1e-20);

        // two-formula cross-check: Q = S R S' with S = [vA, -uI]
        Matrix36d s;
        s.leftCols<3>() = truth.v * sc.a.matrix();
        s.rightCols<3>() = -truth.u * Matrix3d::Identity();
        const Matrix3d via_s = s * noise.stacked() * s.transpose();
        const Matrix3d direct = build_q_lambda(sc.a, truth.u, truth.v, noise);
        CHECK((via_s - direct).norm() < 1e-12 * direct.norm());
}

TEST_CASE("reduced_cost")
{
        const Scenario sc = fixture();
        const auto noise = noise_blocks(sc);
        const State st = truth_state(sc);
        CHECK(reduced_cost(truth_measurements(sc), noise, st) < 1e-18);

        // quadratic in p for a single isotropic feature with exact depths
        MeasurementSet one;
        one.r = {Vector3d(1, 0, 0)};
        one.b = {Vector3d(1, 0, 0)};
        one.u = {1};
        one.v = {1};
        FeatureNoise iso;
        iso.r_r = 0.5 * Matrix3d::Identity();
        iso.r_b = 0.5 * Matrix3d::Identity();
        iso.r_u = 1;
        iso.r_v = 1;
        const double q = 1.0; // v^2*0.5 + u^2*0.5
        const double delta = 0.3;
        State st1{Rotation(), Vector3d(delta, 0, 0), VectorXd::Ones(1), VectorXd::Ones(1)};
        const double j = reduced_cost(one, {iso}, st1);
        CHECK(j == doctest::Approx(delta * delta / (2 * q)).epsilon(1e-12));
}

TEST_CASE("assemble structure")
{
        const Scenario sc = fixture();
        const LinearizedSystem sys = assemble_at_truth(sc);
        const int n = static_cast<int>(sc.size());

        // zero up to the rho cancellation noise amplified by Q^-1
        CHECK(sys.g.cwiseAbs().maxCoeff() < 1e-7);
        CHECK((sys.f - sys.f.transpose()).norm() < 1e-10 * sys.f.norm());
        CHECK(Eigen::LLT<MatrixXd>(sys.f).info() == Eigen::Success);

        for (int i = 0; i < n; ++i)
        {
                const auto& [truth, noise] = sc.features[i];
                const Vector3d ar = sc.a * truth.r;
                const auto& gi = sys.gi[i];
                CHECK((gi.middleCols<3>(0) - truth.v * skew(ar)).norm() < 1e-12);
                CHECK((gi.middleCols<3>(3) + Matrix3d::Identity()).norm() == 0);
                CHECK((gi.col(LinearizedSystem::du_index(i)) + truth.b).norm() < 1e-15);
                CHECK((gi.col(LinearizedSystem::dv_index(i)) - ar).norm() < 1e-15);

                // depth diagonal entry read off the selector structure
                const Matrix3d q_inv = sys.q_lambda[i].llt().solve(Matrix3d::Identity());
                const int ku = LinearizedSystem::du_index(i);
                CHECK(sys.f(ku, ku)
                      == doctest::Approx(1 / noise.r_u + truth.b.dot(q_inv * truth.b))
                                 .epsilon(1e-10));
        }
}

TEST_CASE("assembled g is the negative cost gradient")
{
        const Scenario sc = fixture();
        const auto noise = noise_blocks(sc);
        const MeasurementSet meas = truth_measurements(sc);
        const State st0 = truth_state(sc);
        const int dim = 6 + 2 * static_cast<int>(sc.size());

        VectorXd scale(dim);
        scale.head<6>().setOnes();
        for (int i = 0; i < static_cast<int>(sc.size()); ++i)
        {
                scale[LinearizedSystem::du_index(i)] = st0.u[i];
                scale[LinearizedSystem::dv_index(i)] = st0.v[i];
        }

        // Small perturbations: g drops the Q_lambda derivative terms, whose
        // contribution to the true gradient shrinks quadratically with the
        // residual while g shrinks linearly.
        std::mt19937_64 rng(17);
        std::normal_distribution<double> gauss;
        for (int rep = 0; rep < 10; ++rep)
        {
                VectorXd eta(dim);
                for (int k = 0; k < dim; ++k)
                {
                        eta[k] = 3e-8 * scale[k] * gauss(rng);
                }
                const State st = perturbed(st0, eta);
                const LinearizedSystem sys = assemble(meas, noise, st);
                const VectorXd fd = fd_gradient(meas, noise, st, VectorXd(3e-8 * scale));
                CHECK((fd + sys.g).norm() < 1e-5 * sys.g.norm());
        }
}

TEST_CASE("F equals the FD Hessian at a zero-residual point")
{
        const Scenario sc = fixture();
        const auto noise = noise_blocks(sc);
        const MeasurementSet meas = truth_measurements(sc);
        const State st = truth_state(sc);
        const int dim = 6 + 2 * static_cast<int>(sc.size());

        VectorXd steps(dim);
        steps.head<6>().setConstant(1e-5);
        for (int i = 0; i < static_cast<int>(sc.size()); ++i)
        {
                steps[LinearizedSystem::du_index(i)] = 1e-5 * st.u[i];
                steps[LinearizedSystem::dv_index(i)] = 1e-5 * st.v[i];
        }
        const MatrixXd fd = fd_hessian(meas, noise, st, steps);
        const MatrixXd f = assemble(meas, noise, st).f;
        CHECK((fd - f).norm() < 1e-4 * f.norm());
}

TEST_CASE("gn_step")
{
        const Scenario sc = fixture();
        const auto noise = noise_blocks(sc);
        const MeasurementSet meas = truth_measurements(sc);
        const State st = truth_state(sc);
        const SolverConfig config;

        const GnStep at_truth = gn_step(meas, noise, st, config);
        CHECK(at_truth.dx.cwiseAbs().maxCoeff() < 1e-10);

        State shifted = st;
        shifted.p += Vector3d(0.1, 0, 0);
        const GnStep restore = gn_step(meas, noise, shifted, config);
        CHECK(restore.accepted);
        CHECK((restore.state.p - sc.p).norm() < 1e-8);
}

TEST_CASE("zero-noise solve recovers the fixture")
{
        const Scenario sc = fixture();
        const auto noise = noise_blocks(sc);
        const PoseSolution sol = solve(truth_measurements(sc), noise);

        CHECK(sol.converged);
        CHECK(sol.iterations <= 10);
        CHECK(log_so3(Rotation(Matrix3d(sol.a_hat.matrix() * sc.a.matrix().transpose()), true))
                      .norm()
              < 1e-8);
        CHECK((sol.p_hat - sc.p).norm() < 1e-6);
        const State st = truth_state(sc);
        CHECK((sol.u_hat - st.u).cwiseAbs().maxCoeff() < 1e-6);
        CHECK((sol.v_hat - st.v).cwiseAbs().maxCoeff() < 1e-6);
        for (std::size_t i = 0; i < sc.size(); ++i)
        {
                Vector6d d_truth;
                d_truth << sc.features[i].first.r, sc.features[i].first.b;
                CHECK((sol.d_hat[i] - d_truth).cwiseAbs().maxCoeff() < 1e-7);
        }
}

TEST_CASE("noisy solve: descent, constraint and cost ordering")
{
        const Scenario sc = fixture();
        const auto noise = noise_blocks(sc);
        std::mt19937_64 rng = trial_rng(99, 0);
        const MeasurementSet meas = sample_measurements(sc, rng);
        const SolverConfig config;
        const State warm = truth_state(sc);

        // monotone descent along the trace
        State st = warm;
        double last = reduced_cost(meas, noise, st);
        for (int it = 0; it < 20; ++it)
        {
                const GnStep step = gn_step(meas, noise, st, config);
                if (!step.accepted)
                {
                        break;
                }
                CHECK(step.cost_after <= last * (1 + 1e-12));
                last = step.cost_after;
                st = step.state;
        }

        const PoseSolution sol = solve(meas, noise, config, warm);
        CHECK(sol.converged);
        CHECK(sol.iterations <= 15);
        for (std::size_t i = 0; i < sc.size(); ++i)
        {
                const Vector3d res = sol.u_hat[i] * sol.d_hat[i].tail<3>()
                                     - sol.v_hat[i] * (sol.a_hat * Vector3d(sol.d_hat[i].head<3>()))
                                     + sol.p_hat;
                CHECK(res.norm() < 1e-8);
        }

        const double j_solution = sol.final_cost;
        const double j_truth = reduced_cost(meas, noise, warm);
        auto [a0, p0, u0, v0] = initialize(meas);
        const double j_init = reduced_cost(meas, noise, State{a0, p0, u0, v0});
        CHECK(j_solution <= j_truth);
        CHECK(j_truth <= j_init);
}

TEST_CASE("n=3 zero-noise solve is exact")
{
        const Scenario sc = gen_scenario(random_recipe(5, 3));
        const auto noise = noise_blocks(sc);
        const PoseSolution sol = solve(truth_measurements(sc), noise);
        CHECK(sol.converged);
        CHECK(log_so3(Rotation(Matrix3d(sol.a_hat.matrix() * sc.a.matrix().transpose()), true))
                      .norm()
              < 1e-8);
        CHECK((sol.p_hat - sc.p).norm() < 1e-6);
}

TEST_CASE("solve_ls_baseline")
{
        {
                const auto [x, cov] = solve_ls_baseline(
                        MatrixXd::Identity(2, 2), Vector3d(1, 2, 0).head<2>(), MatrixXd::Identity(2, 2));
                CHECK((x - Eigen::Vector2d(1, 2)).norm() < 1e-14);
                CHECK((cov - MatrixXd::Identity(2, 2)).norm() < 1e-14);
        }
        {
                MatrixXd h(2, 1);
                h << 1, 1;
                VectorXd y(2);
                y << 0, 2;
                const auto [x, cov] = solve_ls_baseline(h, y, MatrixXd::Identity(2, 2));
                CHECK(x[0] == doctest::Approx(1).epsilon(1e-14));
                CHECK(cov(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
        }
        {
                std::mt19937_64 rng(23);
                std::normal_distribution<double> gauss;
                MatrixXd h(20, 4);
                VectorXd y(20);
                VectorXd w(20);
                for (int i = 0; i < 20; ++i)
                {
                        for (int j = 0; j < 4; ++j)
                        {
                                h(i, j) = gauss(rng);
                        }
                        y[i] = gauss(rng);
                        w[i] = 0.5 + std::abs(gauss(rng));
                }
                const MatrixXd r_yy = w.asDiagonal();
                const auto [x, cov] = solve_ls_baseline(h, y, r_yy);
                const MatrixXd normal = h.transpose() * r_yy.inverse() * h;
                const VectorXd brute = normal.inverse() * h.transpose() * r_yy.inverse() * y;
                CHECK((x - brute).norm() < 1e-10);
                CHECK((cov - MatrixXd(normal.inverse())).norm() < 1e-10 * cov.norm());
        }
        {
                MatrixXd h(3, 2);
                h << 1, 2, 2, 4, 3, 6;
                CHECK_THROWS_AS(
                        (void)solve_ls_baseline(h, Vector3d(1, 2, 3), MatrixXd::Identity(3, 3)),
                        DegenerateConfigurationError);
        }
}
