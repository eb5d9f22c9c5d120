// Command line front end: scenario generation, single solves, Monte Carlo
// batches, sensitivity sweeps and Fisher information reports.

#include <tlspose/generate.hpp>
#include <tlspose/io.hpp>
#include <tlspose/montecarlo.hpp>
#include <tlspose/sensitivity.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace
{
using namespace tlspose;
using nlohmann::json;

constexpr int EXIT_ARGS = 2;
constexpr int EXIT_NUMERIC = 3;

json to_json(const Vector3d& v)
{
        return json::array({v[0], v[1], v[2]});
}

json to_json(const MatrixXd& m)
{
        json res = json::array();
        for (int i = 0; i < m.rows(); ++i)
        {
                std::vector<double> row(m.cols());
                for (int j = 0; j < m.cols(); ++j)
                {
                        row[j] = m(i, j);
                }
                res.push_back(row);
        }
        return res;
}

void write_json(const std::string& path, const json& doc)
{
        std::ofstream out(path, std::ios::binary);
        if (!out)
        {
                throw ParseError("cannot open " + path + " for writing");
        }
        out << doc.dump(2) << "\n";
}

State truth_state(const Scenario& scenario)
{
        const int n = static_cast<int>(scenario.size());
        State res{scenario.a, scenario.p, VectorXd(n), VectorXd(n)};
        for (int i = 0; i < n; ++i)
        {
                res.u[i] = scenario.features[i].first.u;
                res.v[i] = scenario.features[i].first.v;
        }
        return res;
}

json solution_report(const Scenario& scenario, const PoseSolution& sol)
{
        json doc;
        doc["attitude"] = to_json(MatrixXd(sol.a_hat.matrix()));
        doc["position"] = to_json(sol.p_hat);
        doc["u"] = std::vector<double>(sol.u_hat.data(), sol.u_hat.data() + sol.u_hat.size());
        doc["v"] = std::vector<double>(sol.v_hat.data(), sol.v_hat.data() + sol.v_hat.size());
        doc["converged"] = sol.converged;
        doc["iterations"] = sol.iterations;
        doc["final_cost"] = sol.final_cost;
        json features = json::array();
        for (std::size_t i = 0; i < sol.d_hat.size(); ++i)
        {
                json f;
                f["r_hat"] = to_json(Vector3d(sol.d_hat[i].head<3>()));
                f["b_hat"] = to_json(Vector3d(sol.d_hat[i].tail<3>()));
                f["lambda"] = to_json(sol.lambda[i]);
                features.push_back(std::move(f));
        }
        doc["features"] = std::move(features);

        const UncertaintyReport unc = uncertainty_report(scenario, sol);
        doc["uncertainty"]["evaluation_mode"] = "at-estimate";
        doc["uncertainty"]["cov_x_diagonal"] = to_json(MatrixXd(unc.cov_x.diagonal()));
        doc["uncertainty"]["three_sigma"] =
                to_json(MatrixXd(3 * unc.cov_x.diagonal().cwiseSqrt()));
        return doc;
}

int run(const int argc, const char* const* argv)
{
        CLI::App app{"Total least squares pose estimation toolkit"};
        app.require_subcommand(1);

        std::string scenario_path;
        std::string meas_path;
        std::string out_dir = ".";
        std::string out_file;
        std::uint64_t seed = 1;
        int threads = 0;
        bool zero_noise = false;

        GenerationRecipe recipe;
        auto* gen = app.add_subcommand("gen-scenario", "generate a random scenario file");
        gen->add_option("--out", out_file, "output scenario file")->required();
        gen->add_option("--seed", recipe.seed, "generator seed");
        gen->add_option("--features", recipe.n_features, "number of features")
                ->check(CLI::Range(3, 1000));
        gen->add_option("--direction-sigma", recipe.direction_sigma, "pre-normalization scale")
                ->check(CLI::PositiveNumber);
        gen->add_option("--angle-coeff", recipe.angle_coeff_deg, "direction noise, degrees")
                ->check(CLI::PositiveNumber);
        gen->add_option("--eps-uv", recipe.eps_uv, "depth noise scale, meters")
                ->check(CLI::PositiveNumber);
        gen->add_option("--depth-floor", recipe.depth_floor, "minimum truth depth, meters")
                ->check(CLI::PositiveNumber);

        auto* solve_cmd = app.add_subcommand("solve", "solve one measurement draw");
        solve_cmd->add_option("--scenario", scenario_path, "scenario file")->required();
        solve_cmd->add_option("--meas", meas_path, "measurement file (sampled when absent)");
        solve_cmd->add_option("--seed", seed, "noise seed");
        solve_cmd->add_option("--out", out_dir, "output directory");
        solve_cmd->add_flag("--zero-noise", zero_noise, "use the truth as measurements");

        int n_trials = 10000;
        auto* mc = app.add_subcommand("montecarlo", "covariance validation batch");
        mc->add_option("--scenario", scenario_path, "scenario file")->required();
        mc->add_option("--trials", n_trials, "number of trials")->check(CLI::PositiveNumber);
        mc->add_option("--seed", seed, "master seed");
        mc->add_option("--threads", threads, "worker threads, 0 = auto")
                ->check(CLI::NonNegativeNumber);
        mc->add_option("--out", out_dir, "output directory");

        std::vector<double> eps_values{1, 10, 100, 1000};
        auto* sens = app.add_subcommand("sensitivity", "derivatives and conditioning sweep");
        sens->add_option("--scenario", scenario_path, "scenario file")->required();
        sens->add_option("--eps", eps_values, "depth noise scales to sweep")
                ->check(CLI::PositiveNumber);
        sens->add_option("--seed", seed, "noise seed for the estimate derivative");
        sens->add_option("--out", out_dir, "output directory");

        auto* fim = app.add_subcommand("fim", "Fisher information at the scenario truth");
        fim->add_option("--scenario", scenario_path, "scenario file")->required();
        fim->add_option("--out", out_dir, "output directory");

        try
        {
                app.parse(argc, argv);
        }
        catch (const CLI::ParseError& e)
        {
                return app.exit(e) == 0 ? 0 : EXIT_ARGS;
        }
        std::filesystem::create_directories(out_dir);

        if (gen->parsed())
        {
                save_scenario(gen_scenario(recipe), out_file);
                return 0;
        }

        const Scenario scenario = load_scenario(scenario_path);
        const std::vector<FeatureNoise> noise = noise_blocks(scenario);

        if (solve_cmd->parsed())
        {
                MeasurementSet meas;
                if (!meas_path.empty())
                {
                        meas = load_measurements(meas_path);
                        if (meas.size() != scenario.size())
                        {
                                throw ParseError("measurement count does not match the scenario");
                        }
                }
                else if (zero_noise)
                {
                        meas = truth_measurements(scenario);
                }
                else
                {
                        std::mt19937_64 rng = trial_rng(seed, 0);
                        meas = sample_measurements(scenario, rng);
                }
                const PoseSolution sol = solve(meas, noise);
                write_json(out_dir + "/solution.json", solution_report(scenario, sol));
                std::cout << (sol.converged ? "converged" : "not converged") << " in "
                          << sol.iterations << " iterations, cost "
                          << format_double(sol.final_cost) << "\n";
                return 0;
        }

        if (mc->parsed())
        {
                const auto [report, records] =
                        run_trials(scenario, n_trials, seed, SolverConfig{}, threads);
                const UncertaintyReport analytical = uncertainty_report(scenario);
                write_trials_csv(out_dir + "/trials.csv", records);
                write_report(out_dir + "/report.json", report);
                write_consistency_csv(
                        out_dir + "/consistency.csv", compare_covariances(report, analytical));
                std::cout << "trials " << report.n_trials << ", failures " << report.failures
                          << ", min coverage " << format_double(report.coverage.minCoeff())
                          << "\n";
                return 0;
        }

        if (sens->parsed())
        {
                const std::vector<SweepRow> sweep = conditioning_sweep(scenario, eps_values);
                std::ofstream out(out_dir + "/sweep.csv", std::ios::binary);
                out << "eps_uv,rcond_F,logdet_F\n";
                for (const SweepRow& row : sweep)
                {
                        out << format_double(row.eps_uv) << "," << format_double(row.rcond_f)
                            << "," << format_double(row.logdet_f) << "\n";
                }

                const LinearizedSystem sys = assemble_at_truth(scenario);
                json doc;
                doc["features"] = json::array();
                for (int i = 0; i < static_cast<int>(scenario.size()); ++i)
                {
                        json f;
                        f["d_logdetF_d_Ru"] = d_logdetf_d_ru(sys, i);
                        f["d_logdetF_d_Rv"] = d_logdetf_d_rv(sys, i);
                        f["d_cov_d_Ru_diagonal"] = to_json(MatrixXd(d_cov_d_ru(sys, i).diagonal()));
                        f["d_cov_d_Rv_diagonal"] = to_json(MatrixXd(d_cov_d_rv(sys, i).diagonal()));
                        doc["features"].push_back(std::move(f));
                }

                // central finite difference cross-check on log|F|
                double worst = 0;
                for (int i = 0; i < static_cast<int>(scenario.size()); ++i)
                {
                        Scenario hi = scenario;
                        Scenario lo = scenario;
                        const double h = 1e-4 * noise[i].r_u;
                        hi.features[i].second.r_u += h;
                        lo.features[i].second.r_u -= h;
                        const double fd = (logdet(fisher_information(hi))
                                           - logdet(fisher_information(lo)))
                                          / (2 * h);
                        const double an = d_logdetf_d_ru(sys, i);
                        worst = std::max(worst, std::abs(fd - an) / std::abs(an));
                }
                doc["fd_check_max_relative_error"] = worst;
                doc["fd_check_ok"] = worst < 0.01;
                write_json(out_dir + "/sensitivity.json", doc);
                std::cout << "sweep rows " << sweep.size() << ", fd check "
                          << (worst < 0.01 ? "ok" : "FAILED") << "\n";
                return 0;
        }

        // fim
        const MatrixXd f = fisher_information(scenario);
        json doc;
        doc["F"] = to_json(f);
        doc["cov_x"] = to_json(covariance_of_unknowns(f));
        doc["rcond"] = rcond(f);
        doc["logdet"] = logdet(f);
        write_json(out_dir + "/fim.json", doc);
        std::cout << "rcond " << format_double(rcond(f)) << ", logdet "
                  << format_double(logdet(f)) << "\n";
        return 0;
}
}

int main(const int argc, const char* const* argv)
{
        try
        {
                return run(argc, argv);
        }
        catch (const ParseError& e)
        {
                std::cerr << "error: " << e.what() << "\n";
                return EXIT_ARGS;
        }
        catch (const std::invalid_argument& e)
        {
                std::cerr << "error: " << e.what() << "\n";
                return EXIT_ARGS;
        }
        catch (const std::exception& e)
        {
                std::cerr << "error: " << e.what() << "\n";
                return EXIT_NUMERIC;
        }
}
