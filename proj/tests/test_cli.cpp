#include "catch_amalgamated.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "osp/cli.hpp"
#include "osp/moments.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out, err;
};

Run osp_run(std::vector<std::string> args) {
    args.insert(args.begin(), "osp");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    std::ostringstream out, err;
    const int code = osp::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch() {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / "osp_cli_test";
        fs::remove_all(d);
        fs::create_directories(d);
        ::setenv("OSP_CACHE_DIR", (d / "cache").c_str(), 1);
        return d;
    }();
    return dir;
}

// Normal n=15 moments, computed once and shared by the commands below.
std::string n15() {
    static const std::string path = [] {
        const fs::path p = scratch() / "normal15.json";
        osp::save_moments(osp::compute_moments(osp::default_model(osp::Family::Normal), 15), p);
        return p.string();
    }();
    return path;
}

fs::path lead_csv() {
    const fs::path p = scratch() / "lead.csv";
    std::ofstream f(p);
    f << "value\n26\n63\n3\n70\n16\n5\n1\n57\n5\n3\n24\n2\n1\n48\n3\n";
    return p;
}

}  // namespace

TEST_CASE("estimate on the lead data", "[cli]") {
    const Run r = osp_run({"estimate", "--family", "normal", "--n", "15", "--r", "9", "--moments", n15(), "--data", lead_csv().string(), "--log"});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["mu_star"].get<double>() == Catch::Approx(2.253).margin(0.005));
    CHECK(j["sigma_star"].get<double>() == Catch::Approx(1.696).margin(0.005));
    CHECK(j["delta_hat"].get<double>() == Catch::Approx(1.328).margin(0.002));
    CHECK(j["observed"].size() == 9);

    const Run builtin = osp_run({"estimate", "--n", "15", "--r", "9", "--moments", n15(), "--data", "builtin:lead", "--log"});
    CHECK(builtin.code == 0);
    CHECK(builtin.out == r.out);
}

TEST_CASE("predict with a plug-in delta", "[cli]") {
    const Run r = osp_run({"predict", "--family", "normal", "--n", "15", "--r", "9", "--moments", n15(), "--targets", "10,15", "--predictor",
                           "blip", "--delta", "plugin", "--data", lead_csv().string(), "--log"});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["kind"] == "blip");
    CHECK(j["delta_source"] == "plugin");
    CHECK(j["mspe_units"] == "sigma2");
    CHECK(j["predictions"][0].get<double>() == Catch::Approx(3.015).margin(0.01));
    CHECK(j["predictions"][1].get<double>() == Catch::Approx(5.151).margin(0.01));
    CHECK(j["mspe"][0][0].get<double>() == Catch::Approx(0.0287).margin(0.002));
    CHECK(j.contains("predictions_original_scale"));

    const Run data_units = osp_run({"predict", "--n", "15", "--r", "9", "--moments", n15(), "--targets", "10", "--predictor", "blup",
                                    "--data", "builtin:lead", "--log", "--mspe-units", "data"});
    REQUIRE(data_units.code == 0);
    const auto jd = nlohmann::json::parse(data_units.out);
    const double s = jd["estimate"]["sigma_star"].get<double>();
    CHECK(jd["mspe"][0][0].get<double>() == Catch::Approx(0.0293 * s * s).epsilon(0.01));
    CHECK(jd["delta"].is_null());

    for (const char* kind : {"kaminsky", "scale-blip"}) {
        const Run k = osp_run({"predict", "--n", "15", "--r", "9", "--moments", n15(), "--targets", "12", "--predictor", kind});
        CHECK(k.code == 0);
        CHECK_FALSE(nlohmann::json::parse(k.out).contains("predictions"));
    }
    const Run fixed = osp_run({"predict", "--n", "15", "--r", "9", "--moments", n15(), "--targets", "12", "--delta", "0.5"});
    REQUIRE(fixed.code == 0);
    CHECK(nlohmann::json::parse(fixed.out)["delta"] == 0.5);
}

TEST_CASE("validation errors exit with 2", "[cli]") {
    CHECK(osp_run({"estimate", "--n", "15", "--r", "9", "--moments", n15(), "--data", "/no/such/file.csv"}).code == 2);
    CHECK(osp_run({"estimate", "--n", "15", "--r", "9", "--moments", n15()}).code == 2);
    CHECK(osp_run({"moments", "--family", "cauchy", "--n", "3"}).code == 2);
    CHECK(osp_run({"moments", "--family", "normal", "--method", "closed-form", "--n", "3"}).code == 2);
    CHECK(osp_run({"predict", "--n", "15", "--r", "9", "--moments", n15(), "--targets", "10", "--delta", "plugin"}).code == 2);
    CHECK(osp_run({"predict", "--n", "15", "--r", "9", "--moments", n15(), "--targets", "10", "--delta", "abc"}).code == 2);
    CHECK(osp_run({"predict", "--n", "15", "--r", "9", "--moments", n15(), "--targets", "10,10", "--delta", "1"}).code == 2);
    CHECK(osp_run({"efficiency", "--n", "15", "--r", "9", "--moments", n15(), "--targets", "10"}).code == 2);
    CHECK(osp_run({"efficiency", "--n", "15", "--r", "9", "--moments", n15(), "--targets", "10", "--at", "0"}).code == 2);
    CHECK(osp_run({"reproduce", "table9"}).code == 2);
    CHECK(osp_run({}).code == 2);
    CHECK(osp_run({"frobnicate"}).code == 2);
    CHECK(osp_run({"--help"}).code == 0);

    const fs::path bad = scratch() / "bad.csv";
    std::ofstream(bad) << "1\n2\nthree\n";
    const Run r = osp_run({"estimate", "--n", "5", "--r", "3", "--data", bad.string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("three") != std::string::npos);
}

TEST_CASE("numerical failures exit with 3", "[cli]") {
    const Run r = osp_run({"moments", "--family", "normal", "--n", "5", "--tol", "1e-14"});
    CHECK(r.code == 3);
    CHECK_FALSE(r.err.empty());
}

TEST_CASE("moment files", "[cli][io]") {
    const fs::path file = scratch() / "exp8.json";
    const Run w = osp_run({"moments", "--family", "exponential", "--n", "8", "--out", file.string()});
    REQUIRE(w.code == 0);
    CHECK(w.out.empty());
    const osp::MomentSet ms = osp::load_moments(file);
    CHECK(ms.n() == 8);
    CHECK(ms.alpha()[0] == Catch::Approx(0.125));

    const Run use = osp_run({"predict", "--family", "exponential", "--n", "8", "--r", "4", "--targets", "8", "--predictor",
                             "blup", "--moments", file.string()});
    CHECK(use.code == 0);
    CHECK(osp_run({"predict", "--family", "exponential", "--n", "9", "--r", "4", "--targets", "8", "--predictor", "blup",
                   "--moments", file.string()})
              .code == 2);
    CHECK(osp_run({"predict", "--family", "uniform", "--n", "8", "--r", "4", "--targets", "8", "--predictor", "blup",
                   "--moments", file.string()})
              .code == 2);

    const fs::path fresh = scratch() / "fresh.json";
    const Run c = osp_run({"estimate", "--family", "uniform", "--n", "5", "--r", "3", "--data", lead_csv().string(),
                           "--moments", fresh.string()});
    CHECK(c.code == 2);  // 15 values for n = 5
    const Run c2 = osp_run({"predict", "--family", "uniform", "--n", "5", "--r", "3", "--targets", "5", "--delta", "1",
                            "--moments", fresh.string()});
    CHECK(c2.code == 0);
    CHECK(fs::exists(fresh));

    const Run mc = osp_run({"moments", "--family", "exponential", "--method", "monte-carlo", "--n", "3", "--reps", "20000",
                            "--seed", "4"});
    REQUIRE(mc.code == 0);
    const auto j = nlohmann::json::parse(mc.out);
    CHECK(j["seed"] == 4);
    CHECK(j["method"] == "monte-carlo");
    CHECK(j.contains("sigma_se"));
}

TEST_CASE("efficiency subcommand", "[cli]") {
    const Run at = osp_run({"efficiency", "--kind", "re1", "--n", "15", "--r", "9", "--moments", n15(), "--targets", "10", "--at", "1.328"});
    REQUIRE(at.code == 0);
    CHECK(nlohmann::json::parse(at.out)["value"].get<double>() == Catch::Approx(0.9795).margin(0.002));

    const Run ds = osp_run({"efficiency", "--n", "15", "--r", "9", "--moments", n15(), "--targets", "15", "--delta-star", "0.01:10"});
    REQUIRE(ds.code == 0);
    CHECK(nlohmann::json::parse(ds.out)["delta_star"].get<double>() == Catch::Approx(0.6966).margin(0.005));

    const Run grid = osp_run({"efficiency", "--kind", "d", "--n", "15", "--r", "9", "--moments", n15(), "--targets", "10,11", "--grid",
                              "0.1:0.1:1", "--format", "csv"});
    REQUIRE(grid.code == 0);
    CHECK(grid.out.rfind("delta,value,kind,n,r,targets\n", 0) == 0);
    CHECK(std::count(grid.out.begin(), grid.out.end(), '\n') == 11);

    const Run iem = osp_run({"efficiency", "--kind", "trace", "--n", "15", "--r", "9", "--moments", n15(), "--targets", "10,15", "--iem", "10"});
    REQUIRE(iem.code == 0);
    CHECK(nlohmann::json::parse(iem.out)["points"] == 4096);

    const Run cr = osp_run({"efficiency", "--kind", "d", "--n", "15", "--r", "9", "--moments", n15(), "--targets", "14,15", "--crossings", "0.01:50"});
    REQUIRE(cr.code == 0);
    CHECK(nlohmann::json::parse(cr.out)["crossings"].is_array());
}

TEST_CASE("simulate subcommand", "[cli][mc]") {
    const std::vector<std::string> args = {"simulate", "--family", "exponential", "--n", "5", "--r", "3", "--targets", "4,5",
                                           "--reps", "20000", "--seed", "3", "--mu", "1", "--weights", "1,0;0.5,0.5"};
    const Run a = osp_run(args), b = osp_run(args);
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
    const auto j = nlohmann::json::parse(a.out);
    CHECK(j["predictors"].size() == 3);
    CHECK(j["predictors"][0]["quad_form"].size() == 2);
    CHECK(osp_run({"simulate", "--family", "exponential", "--n", "5", "--r", "3", "--targets", "4", "--reps", "100"}).code == 2);
}

TEST_CASE("reproduce is deterministic", "[cli][reproduce]") {
    scratch();
    const Run a = osp_run({"reproduce", "table1"});
    REQUIRE(a.code == 0);
    CHECK(fs::exists(scratch() / "cache"));
    const Run b = osp_run({"reproduce", "table1"});
    const Run c = osp_run({"reproduce", "table1", "--no-cache"});
    CHECK(a.out == b.out);
    CHECK(a.out == c.out);
    CHECK(a.out.find("RE1") != std::string::npos);
    CHECK(a.out.find("published") != std::string::npos);

    const Run t3 = osp_run({"reproduce", "table3"});
    REQUIRE(t3.code == 0);
    CHECK(t3.out.find("delta=1.257") != std::string::npos);
    CHECK(t3.out.find("delta=1.328") != std::string::npos);

    const Run f1 = osp_run({"reproduce", "fig1"});
    REQUIRE(f1.code == 0);
    std::istringstream in(f1.out);
    std::string line;
    std::getline(in, line);
    CHECK(line == "delta,value,kind,n,r,targets");
    int rows = 0;
    while (std::getline(in, line)) {
        ++rows;
        const auto c1 = line.find(','), c2 = line.find(',', c1 + 1);
        CHECK(std::stod(line.substr(c1 + 1, c2 - c1 - 1)) < 1.0);
    }
    CHECK(rows == 6000);

    const fs::path out = scratch() / "fig2.csv";
    CHECK(osp_run({"reproduce", "fig2", "--out", out.string()}).code == 0);
    CHECK(fs::file_size(out) > 0);
}
