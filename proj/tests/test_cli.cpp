#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <tlspose/io.hpp>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace
{
const std::string CLI = TLSPOSE_CLI_PATH;

int run_cli(const std::string& args)
{
        const std::string cmd = CLI + " " + args + " >/dev/null 2>&1";
        const int status = std::system(cmd.c_str());
        REQUIRE(status != -1);
        return WEXITSTATUS(status);
}

fs::path work_dir()
{
        const fs::path dir = fs::temp_directory_path() / "tlspose_cli_test";
        fs::create_directories(dir);
        return dir;
}

std::string slurp(const fs::path& path)
{
        std::ifstream in(path, std::ios::binary);
        REQUIRE(in.good());
        std::ostringstream buf;
        buf << in.rdbuf();
        return buf.str();
}

// a small, well-behaved scenario most tests share
fs::path small_scenario()
{
        static const fs::path path = []
        {
                const fs::path p = work_dir() / "small.json";
                const int code = run_cli(
                        "gen-scenario --out " + p.string()
                        + " --seed 5 --features 4 --eps-uv 1 --angle-coeff 0.001");
                REQUIRE(code == 0);
                return p;
        }();
        return path;
}
}

TEST_CASE("argument errors exit with code 2")
{
        CHECK(run_cli("") == 2);
        CHECK(run_cli("no-such-command") == 2);
        CHECK(run_cli("gen-scenario") == 2); // --out is required
        CHECK(run_cli("gen-scenario --out x.json --features 2") == 2);
        CHECK(run_cli("solve --scenario " + (work_dir() / "missing.json").string()) == 2);
        CHECK(run_cli("sensitivity --scenario " + small_scenario().string() + " --eps 0") == 2);
        CHECK(run_cli("--help") == 0);
}

TEST_CASE("gen-scenario is deterministic in its seed")
{
        const fs::path a = work_dir() / "gen_a.json";
        const fs::path b = work_dir() / "gen_b.json";
        const fs::path c = work_dir() / "gen_c.json";
        CHECK(run_cli("gen-scenario --out " + a.string() + " --seed 9 --features 5") == 0);
        CHECK(run_cli("gen-scenario --out " + b.string() + " --seed 9 --features 5") == 0);
        CHECK(run_cli("gen-scenario --out " + c.string() + " --seed 10 --features 5") == 0);
        CHECK(slurp(a) == slurp(b));
        CHECK(slurp(a) != slurp(c));

        const tlspose::Scenario sc = tlspose::load_scenario(a.string());
        CHECK(sc.size() == 5);
}

TEST_CASE("solve --zero-noise recovers the scenario truth")
{
        const fs::path out = work_dir() / "solve_zero";
        const int code = run_cli(
                "solve --scenario " + small_scenario().string() + " --zero-noise --out "
                + out.string());
        CHECK(code == 0);

        const nlohmann::json doc = nlohmann::json::parse(slurp(out / "solution.json"));
        CHECK(doc.at("converged").get<bool>());
        const tlspose::Scenario sc = tlspose::load_scenario(small_scenario().string());
        for (int i = 0; i < 3; ++i)
        {
                CHECK(doc.at("position")[i].get<double>()
                      == doctest::Approx(sc.p[i]).epsilon(1e-6));
                for (int j = 0; j < 3; ++j)
                {
                        CHECK(doc.at("attitude")[i][j].get<double>()
                              == doctest::Approx(sc.a.matrix()(i, j)).epsilon(1e-7));
                }
        }
        for (std::size_t i = 0; i < sc.size(); ++i)
        {
                CHECK(doc.at("u")[i].get<double>()
                      == doctest::Approx(sc.features[i].first.u).epsilon(1e-6));
        }
        CHECK(doc.at("uncertainty").at("evaluation_mode").get<std::string>() == "at-estimate");
}

TEST_CASE("montecarlo outputs are byte-identical across runs and thread counts")
{
        const std::string scen = small_scenario().string();
        const fs::path d1 = work_dir() / "mc_t1";
        const fs::path d2 = work_dir() / "mc_t4";
        const fs::path d3 = work_dir() / "mc_rerun";
        CHECK(run_cli("montecarlo --scenario " + scen
                      + " --trials 40 --seed 3 --threads 1 --out " + d1.string())
              == 0);
        CHECK(run_cli("montecarlo --scenario " + scen
                      + " --trials 40 --seed 3 --threads 4 --out " + d2.string())
              == 0);
        CHECK(run_cli("montecarlo --scenario " + scen
                      + " --trials 40 --seed 3 --threads 2 --out " + d3.string())
              == 0);

        for (const std::string name : {"trials.csv", "report.json", "consistency.csv"})
        {
                CHECK(slurp(d1 / name) == slurp(d2 / name));
                CHECK(slurp(d1 / name) == slurp(d3 / name));
        }

        // a different seed changes the trials
        const fs::path d4 = work_dir() / "mc_seed4";
        CHECK(run_cli("montecarlo --scenario " + scen
                      + " --trials 40 --seed 4 --threads 2 --out " + d4.string())
              == 0);
        CHECK(slurp(d1 / "trials.csv") != slurp(d4 / "trials.csv"));
}

TEST_CASE("sensitivity writes the sweep and the derivative report")
{
        const fs::path out = work_dir() / "sens";
        CHECK(run_cli("sensitivity --scenario " + small_scenario().string()
                      + " --eps 1 10 100 1000 --out " + out.string())
              == 0);

        std::istringstream sweep(slurp(out / "sweep.csv"));
        std::string line;
        REQUIRE(std::getline(sweep, line));
        CHECK(line == "eps_uv,rcond_F,logdet_F");
        double prev_rcond = 2;
        int rows = 0;
        while (std::getline(sweep, line))
        {
                std::istringstream cells(line);
                std::string eps, rc, ld;
                REQUIRE(std::getline(cells, eps, ','));
                REQUIRE(std::getline(cells, rc, ','));
                REQUIRE(std::getline(cells, ld, ','));
                const double rcond_f = std::stod(rc);
                CHECK(rcond_f < prev_rcond);
                prev_rcond = rcond_f;
                ++rows;
        }
        CHECK(rows == 4);

        const nlohmann::json doc = nlohmann::json::parse(slurp(out / "sensitivity.json"));
        CHECK(doc.at("fd_check_ok").get<bool>());
        REQUIRE(doc.at("features").size() == 4);
        for (const auto& f : doc.at("features"))
        {
                CHECK(f.at("d_logdetF_d_Ru").get<double>() < 0);
                CHECK(f.at("d_logdetF_d_Rv").get<double>() < 0);
        }
}

TEST_CASE("fim reports the information matrix and its conditioning")
{
        const fs::path out = work_dir() / "fim";
        CHECK(run_cli("fim --scenario " + small_scenario().string() + " --out " + out.string())
              == 0);
        const nlohmann::json doc = nlohmann::json::parse(slurp(out / "fim.json"));
        const std::size_t dim = 6 + 2 * 4;
        CHECK(doc.at("F").size() == dim);
        CHECK(doc.at("cov_x").size() == dim);
        CHECK(doc.at("rcond").get<double>() > 0);
        CHECK(doc.at("rcond").get<double>() < 1);
        // F and cov_x diagonals are inverses in the well-conditioned blocks
        const double f00 = doc.at("F")[0][0].get<double>();
        CHECK(f00 > 0);
}
