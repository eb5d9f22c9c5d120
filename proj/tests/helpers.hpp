#pragma once

#include <tlspose/estimator.hpp>
#include <tlspose/generate.hpp>
#include <tlspose/io.hpp>

#include <random>

namespace tlspose::test
{

inline Scenario fixture()
{
        return load_scenario(TLSPOSE_FIXTURE_PATH);
}

inline State truth_state(const Scenario& sc)
{
        const int n = static_cast<int>(sc.size());
        State res{sc.a, sc.p, VectorXd(n), VectorXd(n)};
        for (int i = 0; i < n; ++i)
        {
                res.u[i] = sc.features[i].first.u;
                res.v[i] = sc.features[i].first.v;
        }
        return res;
}

// Perturbation parameterization shared with the solver update: attitude
// A <- exp_so3(-dalpha) * A, everything else additive.
inline State perturbed(const State& st, const VectorXd& eta)
{
        const int n = static_cast<int>(st.u.size());
        State res;
        res.a = Rotation(
                Matrix3d(exp_so3(Vector3d(-eta.head<3>())).matrix() * st.a.matrix()), true);
        res.p = st.p + eta.segment<3>(3);
        res.u = st.u;
        res.v = st.v;
        for (int i = 0; i < n; ++i)
        {
                res.u[i] += eta[LinearizedSystem::du_index(i)];
                res.v[i] += eta[LinearizedSystem::dv_index(i)];
        }
        return res;
}

// Central finite difference of the reduced cost along each perturbation axis.
inline VectorXd fd_gradient(
        const MeasurementSet& meas,
        const std::vector<FeatureNoise>& noise,
        const State& st,
        const VectorXd& steps)
{
        const int dim = static_cast<int>(steps.size());
        VectorXd res(dim);
        for (int k = 0; k < dim; ++k)
        {
                VectorXd eta = VectorXd::Zero(dim);
                eta[k] = steps[k];
                const double jp = reduced_cost(meas, noise, perturbed(st, eta));
                eta[k] = -steps[k];
                const double jm = reduced_cost(meas, noise, perturbed(st, eta));
                res[k] = (jp - jm) / (2 * steps[k]);
        }
        return res;
}

inline MatrixXd fd_hessian(
        const MeasurementSet& meas,
        const std::vector<FeatureNoise>& noise,
        const State& st,
        const VectorXd& steps)
{
        const int dim = static_cast<int>(steps.size());
        const auto cost_at = [&](const VectorXd& eta)
        {
                return reduced_cost(meas, noise, perturbed(st, eta));
        };
        const double j0 = cost_at(VectorXd::Zero(dim));

        MatrixXd res(dim, dim);
        for (int k = 0; k < dim; ++k)
        {
                VectorXd eta = VectorXd::Zero(dim);
                eta[k] = steps[k];
                const double jp = cost_at(eta);
                eta[k] = -steps[k];
                const double jm = cost_at(eta);
                res(k, k) = (jp - 2 * j0 + jm) / (steps[k] * steps[k]);
                for (int l = k + 1; l < dim; ++l)
                {
                        VectorXd e = VectorXd::Zero(dim);
                        e[k] = steps[k];
                        e[l] = steps[l];
                        const double jpp = cost_at(e);
                        e[l] = -steps[l];
                        const double jpm = cost_at(e);
                        e[k] = -steps[k];
                        const double jmm = cost_at(e);
                        e[l] = steps[l];
                        const double jmp = cost_at(e);
                        res(k, l) = (jpp - jpm - jmp + jmm) / (4 * steps[k] * steps[l]);
                        res(l, k) = res(k, l);
                }
        }
        return res;
}

inline GenerationRecipe random_recipe(const std::uint64_t seed, const int n_features = 5)
{
        GenerationRecipe recipe;
        recipe.seed = seed;
        recipe.n_features = n_features;
        return recipe;
}

}
