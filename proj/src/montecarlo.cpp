#include <tlspose/io.hpp>
#include <tlspose/montecarlo.hpp>

#include <json.hpp>

#include <atomic>
#include <cmath>
#include <fstream>
#include <thread>

namespace tlspose
{

namespace
{
[[nodiscard]] State truth_state(const Scenario& scenario)
{
        const int n = static_cast<int>(scenario.size());
        State res;
        res.a = scenario.a;
        res.p = scenario.p;
        res.u.resize(n);
        res.v.resize(n);
        for (int i = 0; i < n; ++i)
        {
                res.u[i] = scenario.features[i].first.u;
                res.v[i] = scenario.features[i].first.v;
        }
        return res;
}

[[nodiscard]] Vector3d to_rpy(const Matrix3d& m)
{
        const double pitch = std::asin(std::clamp(-m(2, 0), -1.0, 1.0));
        const double roll = std::atan2(m(2, 1), m(2, 2));
        const double yaw = std::atan2(m(1, 0), m(0, 0));
        return {roll, pitch, yaw};
}

[[nodiscard]] TrialRecord make_record(
        const Scenario& scenario,
        const MeasurementSet& meas,
        const PoseSolution& sol,
        const int trial)
{
        const int n = static_cast<int>(scenario.size());
        TrialRecord rec;
        rec.trial = trial;
        rec.converged = sol.converged;
        rec.iterations = sol.iterations;
        rec.du.resize(n);
        rec.dv.resize(n);
        const Matrix3d err_rot = sol.a_hat.matrix() * scenario.a.matrix().transpose();
        rec.dalpha = log_so3(Rotation(err_rot, true));
        rec.rpy = to_rpy(err_rot);
        rec.dp = sol.p_hat - scenario.p;
        for (int i = 0; i < n; ++i)
        {
                const auto& truth = scenario.features[i].first;
                rec.du[i] = sol.u_hat[i] - truth.u;
                rec.dv[i] = sol.v_hat[i] - truth.v;
                Vector6d d_tilde;
                d_tilde << meas.r[i], meas.b[i];
                Vector6d d_truth;
                d_truth << truth.r, truth.b;
                rec.residual_d.push_back(d_tilde - sol.d_hat[i]);
                rec.estimate_error_d.push_back(sol.d_hat[i] - d_truth);
        }
        return rec;
}
}

VectorXd TrialRecord::packed() const
{
        ErrorState err;
        err.dalpha = dalpha;
        err.dp = dp;
        err.du = du;
        err.dv = dv;
        return err.packed();
}

std::mt19937_64 trial_rng(const std::uint64_t master_seed, const std::uint64_t trial)
{
        // splitmix64 over (seed, trial) to decorrelate the streams
        std::uint64_t z = master_seed + 0x9e3779b97f4a7c15ULL * (trial + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return std::mt19937_64(z ^ (z >> 31));
}

MeasurementSet sample_measurements(const Scenario& scenario, std::mt19937_64& rng)
{
        std::normal_distribution<double> gauss;
        MeasurementSet res;
        for (const auto& [truth, noise] : scenario.features)
        {
                const Eigen::LLT<Matrix3d> llt_r(noise.r_r);
                const Eigen::LLT<Matrix3d> llt_b(noise.r_b);
                if (llt_r.info() != Eigen::Success || llt_b.info() != Eigen::Success)
                {
                        throw InvalidNoiseModelError(
                                "sample_measurements: direction covariance is not PD");
                }
                Vector3d wr;
                Vector3d wb;
                for (int k = 0; k < 3; ++k)
                {
                        wr[k] = gauss(rng);
                }
                for (int k = 0; k < 3; ++k)
                {
                        wb[k] = gauss(rng);
                }
                res.r.push_back(truth.r + Matrix3d(llt_r.matrixL()) * wr);
                res.b.push_back(truth.b + Matrix3d(llt_b.matrixL()) * wb);
                res.u.push_back(truth.u + std::sqrt(noise.r_u) * gauss(rng));
                res.v.push_back(truth.v + std::sqrt(noise.r_v) * gauss(rng));
        }
        return res;
}

VectorXd coverage(const std::vector<TrialRecord>& records, const VectorXd& bounds)
{
        VectorXd hits = VectorXd::Zero(bounds.size());
        int m = 0;
        for (const TrialRecord& rec : records)
        {
                if (!rec.converged)
                {
                        continue;
                }
                ++m;
                const VectorXd err = rec.packed();
                for (int k = 0; k < bounds.size(); ++k)
                {
                        if (std::abs(err[k]) <= bounds[k])
                        {
                                hits[k] += 1;
                        }
                }
        }
        return m > 0 ? VectorXd(hits / m) : hits;
}

std::pair<MonteCarloReport, std::vector<TrialRecord>> run_trials(
        const Scenario& scenario,
        const int n_trials,
        const std::uint64_t master_seed,
        const SolverConfig& config,
        const int threads)
{
        const int n = static_cast<int>(scenario.size());
        const int dim = 6 + 2 * n;
        const std::vector<FeatureNoise> noise = noise_blocks(scenario);
        const State warm = truth_state(scenario);

        std::vector<TrialRecord> records(n_trials);
        std::atomic<int> next{0};
        const auto worker = [&]
        {
                for (;;)
                {
                        const int t = next.fetch_add(1);
                        if (t >= n_trials)
                        {
                                return;
                        }
                        std::mt19937_64 rng = trial_rng(master_seed, t);
                        const MeasurementSet meas = sample_measurements(scenario, rng);
                        try
                        {
                                const PoseSolution sol = solve(meas, noise, config, warm);
                                records[t] = make_record(scenario, meas, sol, t);
                        }
                        catch (const std::exception&)
                        {
                                records[t].trial = t;
                                records[t].converged = false;
                                records[t].du = VectorXd::Zero(n);
                                records[t].dv = VectorXd::Zero(n);
                                records[t].residual_d.assign(n, Vector6d::Zero());
                                records[t].estimate_error_d.assign(n, Vector6d::Zero());
                        }
                }
        };

        int pool = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
        pool = std::max(1, std::min(pool, n_trials));
        {
                std::vector<std::thread> ts;
                ts.reserve(pool);
                for (int k = 0; k < pool; ++k)
                {
                        ts.emplace_back(worker);
                }
                for (std::thread& t : ts)
                {
                        t.join();
                }
        }

        MonteCarloReport report;
        report.n_trials = n_trials;
        report.seed = master_seed;

        // fixed-order aggregation for reproducibility
        int m = 0;
        VectorXd mean = VectorXd::Zero(dim);
        std::vector<Vector6d> res_mean(n, Vector6d::Zero());
        std::vector<Vector6d> est_mean(n, Vector6d::Zero());
        for (const TrialRecord& rec : records)
        {
                if (!rec.converged)
                {
                        ++report.failures;
                        continue;
                }
                ++m;
                mean += rec.packed();
                for (int i = 0; i < n; ++i)
                {
                        res_mean[i] += rec.residual_d[i];
                        est_mean[i] += rec.estimate_error_d[i];
                }
        }
        if (m > 1)
        {
                mean /= m;
                for (int i = 0; i < n; ++i)
                {
                        res_mean[i] /= m;
                        est_mean[i] /= m;
                }
                MatrixXd cov = MatrixXd::Zero(dim, dim);
                std::vector<Matrix6d> res_cov(n, Matrix6d::Zero());
                std::vector<Matrix6d> est_cov(n, Matrix6d::Zero());
                for (const TrialRecord& rec : records)
                {
                        if (!rec.converged)
                        {
                                continue;
                        }
                        const VectorXd e = rec.packed() - mean;
                        cov += e * e.transpose();
                        for (int i = 0; i < n; ++i)
                        {
                                const Vector6d er = rec.residual_d[i] - res_mean[i];
                                const Vector6d ee = rec.estimate_error_d[i] - est_mean[i];
                                res_cov[i] += er * er.transpose();
                                est_cov[i] += ee * ee.transpose();
                        }
                }
                report.mean_error = mean;
                report.sample_cov = cov / (m - 1);
                for (int i = 0; i < n; ++i)
                {
                        report.sample_residual_cov.push_back(res_cov[i] / (m - 1));
                        report.sample_estimate_cov.push_back(est_cov[i] / (m - 1));
                }
        }
        else
        {
                report.mean_error = mean;
                report.sample_cov = MatrixXd::Zero(dim, dim);
                report.sample_residual_cov.assign(n, Matrix6d::Zero());
                report.sample_estimate_cov.assign(n, Matrix6d::Zero());
        }

        const MatrixXd cov_x = covariance_of_unknowns(fisher_information(scenario));
        const VectorXd bounds = 3 * cov_x.diagonal().cwiseSqrt();
        report.coverage = coverage(records, bounds);
        return {std::move(report), std::move(records)};
}

std::vector<ConsistencyRow> compare_covariances(
        const MonteCarloReport& report,
        const UncertaintyReport& analytical,
        const double band_lo,
        const double band_hi)
{
        const int n = static_cast<int>(analytical.cov_residual.size());
        std::vector<ConsistencyRow> rows;

        const auto add = [&](const std::string& name, const double sample, const double ana)
        {
                const double ratio = sample / ana;
                rows.push_back({name, sample, ana, ratio, ratio >= band_lo && ratio <= band_hi});
        };

        const char* axis = "xyz";
        for (int k = 0; k < 3; ++k)
        {
                add(std::string("dalpha_") + axis[k],
                    report.sample_cov(k, k),
                    analytical.cov_x(k, k));
        }
        for (int k = 0; k < 3; ++k)
        {
                add(std::string("dp_") + axis[k],
                    report.sample_cov(k + 3, k + 3),
                    analytical.cov_x(k + 3, k + 3));
        }
        for (int i = 0; i < n; ++i)
        {
                const int ku = LinearizedSystem::du_index(i);
                const int kv = LinearizedSystem::dv_index(i);
                add("du_" + std::to_string(i + 1),
                    report.sample_cov(ku, ku),
                    analytical.cov_x(ku, ku));
                add("dv_" + std::to_string(i + 1),
                    report.sample_cov(kv, kv),
                    analytical.cov_x(kv, kv));
        }
        static const char* names[] = {"rx", "ry", "rz", "bx", "by", "bz"};
        for (int i = 0; i < n; ++i)
        {
                for (int k = 0; k < 6; ++k)
                {
                        add("res_" + std::to_string(i + 1) + "_" + names[k],
                            report.sample_residual_cov[i](k, k),
                            analytical.cov_residual[i](k, k));
                }
                for (int k = 0; k < 6; ++k)
                {
                        add("est_" + std::to_string(i + 1) + "_" + names[k],
                            report.sample_estimate_cov[i](k, k),
                            analytical.cov_estimate[i](k, k));
                }
        }
        return rows;
}

void write_trials_csv(const std::string& path, const std::vector<TrialRecord>& records)
{
        std::ofstream out(path, std::ios::binary);
        if (!out)
        {
                throw ParseError("cannot open " + path + " for writing");
        }
        const int n = records.empty() ? 0 : static_cast<int>(records.front().du.size());
        static const char* names[] = {"rx", "ry", "rz", "bx", "by", "bz"};

        out << "trial,converged,iters,dalpha_x,dalpha_y,dalpha_z,dp_x,dp_y,dp_z";
        for (int i = 1; i <= n; ++i)
        {
                out << ",du_" << i << ",dv_" << i;
        }
        out << ",err_roll,err_pitch,err_yaw";
        for (int i = 1; i <= n; ++i)
        {
                for (const char* c : names)
                {
                        out << ",res_" << i << "_" << c;
                }
                for (const char* c : names)
                {
                        out << ",est_" << i << "_" << c;
                }
        }
        out << "\n";

        for (const TrialRecord& rec : records)
        {
                out << rec.trial << "," << (rec.converged ? 1 : 0) << "," << rec.iterations;
                const VectorXd e = rec.packed();
                for (int k = 0; k < e.size(); ++k)
                {
                        out << "," << format_double(e[k]);
                }
                for (int k = 0; k < 3; ++k)
                {
                        out << "," << format_double(rec.rpy[k]);
                }
                for (int i = 0; i < n; ++i)
                {
                        for (int k = 0; k < 6; ++k)
                        {
                                out << "," << format_double(rec.residual_d[i][k]);
                        }
                        for (int k = 0; k < 6; ++k)
                        {
                                out << "," << format_double(rec.estimate_error_d[i][k]);
                        }
                }
                out << "\n";
        }
}

void write_consistency_csv(const std::string& path, const std::vector<ConsistencyRow>& rows)
{
        std::ofstream out(path, std::ios::binary);
        if (!out)
        {
                throw ParseError("cannot open " + path + " for writing");
        }
        out << "component,sample_variance,analytical_variance,ratio,in_band\n";
        for (const ConsistencyRow& row : rows)
        {
                out << row.component << "," << format_double(row.sample_variance) << ","
                    << format_double(row.analytical_variance) << "," << format_double(row.ratio)
                    << "," << (row.in_band ? 1 : 0) << "\n";
        }
}

void write_report(const std::string& path, const MonteCarloReport& report)
{
        nlohmann::json doc;
        doc["n_trials"] = report.n_trials;
        doc["seed"] = report.seed;
        doc["failures"] = report.failures;
        doc["low_sample_warning"] = report.n_trials < 2000;
        doc["coverage"] = std::vector<double>(
                report.coverage.data(), report.coverage.data() + report.coverage.size());
        doc["mean_error"] = std::vector<double>(
                report.mean_error.data(), report.mean_error.data() + report.mean_error.size());
        nlohmann::json cov = nlohmann::json::array();
        for (int i = 0; i < report.sample_cov.rows(); ++i)
        {
                std::vector<double> row(report.sample_cov.cols());
                for (int j = 0; j < report.sample_cov.cols(); ++j)
                {
                        row[j] = report.sample_cov(i, j);
                }
                cov.push_back(row);
        }
        doc["sample_cov"] = std::move(cov);

        std::ofstream out(path, std::ios::binary);
        if (!out)
        {
                throw ParseError("cannot open " + path + " for writing");
        }
        out << doc.dump(2) << "\n";
}

}
