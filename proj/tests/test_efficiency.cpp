#include "catch_amalgamated.hpp"

#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "osp/efficiency.hpp"
#include "osp/error.hpp"
#include "support.hpp"

using namespace osp;

namespace {

const MomentSet& normal15() {
    static const MomentSet ms = test::normal(15);
    return ms;
}

EfficiencyEvaluator lead_eval(EfficiencyKind kind, std::vector<int> targets) {
    EfficiencySpec spec;
    spec.kind = kind;
    spec.n = 15;
    spec.r = 9;
    spec.targets = std::move(targets);
    spec.model = default_model(Family::Normal);
    return EfficiencyEvaluator(spec, normal15());
}

}  // namespace

TEST_CASE("RE1 on the lead design", "[efficiency]") {
    const auto ev = lead_eval(EfficiencyKind::RE1, {10});
    CHECK(ev.at(1.328) == Catch::Approx(0.9795).margin(0.002));
    CHECK(ev.blup_against_itself(1.328) == 1.0);
    CHECK(ev.blup_against_itself(-4.0) == 1.0);
    CHECK(ev.plugin(1.328, 1.328) == ev.at(1.328));
    CHECK_THROWS_AS(ev.at(0.0), ValidationError);
    // Plug-in rows built away from the truth lose to those built at the truth.
    CHECK(ev.plugin(3.0, 1.0) > ev.at(1.0));
    // negative delta is evaluated directly
    CHECK(std::isfinite(ev.at(-1.0)));
    CHECK(ev.at(-1.0) <= 1.0);
}

TEST_CASE("RE1 maximizers", "[efficiency]") {
    const double expect[] = {0.8967, 0.8606, 0.8252, 0.7890, 0.7491, 0.6966};
    for (int s = 10; s <= 15; ++s) {
        const auto ev = lead_eval(EfficiencyKind::RE1, {s});
        const auto f = [&ev](double d) { return ev.at(d); };
        const DeltaStar ds = find_delta_star(f, 0.01, 10.0);
        CHECK_FALSE(ds.at_boundary);
        CHECK(ds.delta == Catch::Approx(expect[s - 10]).margin(0.005));
        CHECK(f(ds.delta - 1e-3) <= ds.value);
        CHECK(f(ds.delta + 1e-3) <= ds.value);
        CHECK(ds.value == f(ds.delta));
    }
}

TEST_CASE("RE1 below one on the whole grid", "[efficiency][property]") {
    const std::vector<double> grid = linear_grid(0.01, 0.01, 10.0);
    REQUIRE(grid.size() == 1000);
    for (int s = 10; s <= 15; ++s) {
        const EfficiencyCurve c = curve(lead_eval(EfficiencyKind::RE1, {s}), grid);
        REQUIRE(c.values.size() == grid.size());
        for (double v : c.values) CHECK(v < 1.0);
    }
}

TEST_CASE("RE1 never exceeds one on random designs", "[efficiency][property]") {
    std::mt19937_64 rng(123);
    std::map<std::pair<int, int>, MomentSet> cache;
    const Family families[] = {Family::Exponential, Family::Uniform, Family::Normal, Family::Gumbel};
    for (int k = 0; k < 100; ++k) {
        const Family f = families[rng() % 4];
        const int n = 3 + static_cast<int>(rng() % 8);
        const int r = 2 + static_cast<int>(rng() % (n - 2));
        const int s = r + 1 + static_cast<int>(rng() % (n - r));
        const double delta = std::uniform_real_distribution<double>(-20.0, 20.0)(rng);
        const auto key = std::pair{static_cast<int>(f), n};
        if (!cache.contains(key)) {
            ParentModel m = default_model(f);
            cache.emplace(key, compute_moments(m, n));
        }
        EfficiencySpec spec;
        spec.kind = EfficiencyKind::RE1;
        spec.n = n;
        spec.r = r;
        spec.targets = {s};
        spec.model = default_model(f);
        const EfficiencyEvaluator ev(spec, cache.at(key));
        INFO(to_string(f) << " n=" << n << " r=" << r << " s=" << s << " delta=" << delta);
        CHECK(ev.at(delta) <= 1.0 + 1e-12);
    }
}

TEST_CASE("joint efficiencies are bounded by one at matched delta", "[efficiency][property]") {
    for (auto pr : {std::pair{10, 11}, std::pair{10, 15}, std::pair{14, 15}}) {
        for (EfficiencyKind k : {EfficiencyKind::D, EfficiencyKind::Trace}) {
            const auto ev = lead_eval(k, {pr.first, pr.second});
            for (double d : log_grid(0.01, 50.0, 200)) CHECK(ev.at(d) <= 1.0 + 1e-12);
        }
    }
}

TEST_CASE("delta star search", "[efficiency]") {
    const DeltaStar flat = find_delta_star([](double) { return 1.0; }, 0.1, 5.0);
    CHECK(flat.at_boundary);
    const DeltaStar rising = find_delta_star([](double d) { return d; }, 0.1, 5.0);
    CHECK(rising.at_boundary);
    const DeltaStar peak = find_delta_star([](double d) { return -(d - 2.5) * (d - 2.5); }, 0.1, 5.0);
    CHECK_FALSE(peak.at_boundary);
    CHECK(peak.delta == Catch::Approx(2.5).margin(1e-6));
    CHECK_THROWS_AS(find_delta_star([](double) { return 0.0; }, 0.0, 1.0), ValidationError);
    CHECK_THROWS_AS(find_delta_star([](double) { return 0.0; }, 2.0, 1.0), ValidationError);
}

TEST_CASE("integrated efficiency measure", "[efficiency]") {
    CHECK(iem([](double) { return 1.0; }, 10.0) == 1.0);
    CHECK(iem([](double) { return 1.0; }, 12345.0) == 1.0);
    CHECK(iem([](double d) { return d; }, 2.0, 8193) == Catch::Approx(1.0).margin(1e-3));
    CHECK_THROWS_AS(iem([](double) { return 1.0; }, 0.0), ValidationError);
    CHECK_THROWS_AS(iem([](double) { return 1.0; }, -1.0), ValidationError);

    for (EfficiencyKind k : {EfficiencyKind::D, EfficiencyKind::Trace}) {
        const auto ev = lead_eval(k, {10, 15});
        const auto f = [&ev](double d) { return ev.at(d); };
        for (double dmax : {10.0, 50.0}) {
            const double a = iem(f, dmax, 4096), b = iem(f, dmax, 8192);
            CHECK(std::abs(a - b) <= 1e-4);
            CHECK(a < 1.0);
        }
    }
}

TEST_CASE("crossings of one", "[efficiency]") {
    CHECK(crossings([](double d) { return 1.0 + d; }, 1e-6, 1e6).empty());
    const auto roots = crossings([](double d) { return 1.0 + (d - 1.0) * (d - 3.0); }, 0.01, 10.0);
    REQUIRE(roots.size() == 2);
    CHECK(roots[0] == Catch::Approx(1.0).margin(1e-6));
    CHECK(roots[1] == Catch::Approx(3.0).margin(1e-6));
    const auto ev = lead_eval(EfficiencyKind::D, {10, 11});
    CHECK(crossings([&ev](double d) { return ev.at(d); }, 0.01, 10.0).empty());
}

TEST_CASE("curves and CSV export", "[efficiency][io]") {
    const auto ev = lead_eval(EfficiencyKind::Trace, {10, 15});
    const EfficiencyCurve one = curve(ev, {1.0});
    REQUIRE(one.values.size() == 1);
    CHECK(one.values[0] == ev.at(1.0));

    const EfficiencyCurve c = curve(ev, linear_grid(0.5, 0.5, 2.0));
    REQUIRE(c.delta_grid.size() == 4);
    const std::string rows = curve_csv_rows(c);
    std::istringstream in(rows);
    std::string line;
    int count = 0;
    while (std::getline(in, line)) {
        ++count;
        CHECK(line.find(",trace,15,9,10;15") != std::string::npos);
    }
    CHECK(count == 4);
    CHECK(rows.rfind("0.5,", 0) == 0);
    CHECK(std::string(kCurveCsvHeader) == "delta,value,kind,n,r,targets");
    // Same inputs, same bytes.
    CHECK(curve_csv_rows(curve(ev, linear_grid(0.5, 0.5, 2.0))) == rows);

    CHECK_THROWS_AS(curve(ev, {}), ValidationError);
    CHECK_THROWS_AS(curve(ev, {1.0, 0.5}), ValidationError);
    CHECK_THROWS_AS(curve(ev, {-1.0}), ValidationError);
    CHECK_THROWS_AS(linear_grid(1.0, 0.0, 2.0), ValidationError);
}

TEST_CASE("EfficiencySpec validation", "[efficiency]") {
    EfficiencySpec spec;
    spec.kind = EfficiencyKind::D;
    spec.n = 15;
    spec.r = 9;
    spec.model = default_model(Family::Normal);
    spec.targets = {10};
    CHECK_THROWS_AS(spec.validate(), ValidationError);
    spec.targets = {12, 12};
    CHECK_THROWS_AS(spec.validate(), ValidationError);
    spec.targets = {9, 12};
    CHECK_THROWS_AS(spec.validate(), ValidationError);
    spec.targets = {10, 16};
    CHECK_THROWS_AS(spec.validate(), ValidationError);
    spec.targets = {10, 15};
    CHECK_NOTHROW(spec.validate());
    spec.kind = EfficiencyKind::RE1;
    CHECK_THROWS_AS(spec.validate(), ValidationError);
    CHECK(parse_efficiency_kind("trace") == EfficiencyKind::Trace);
    CHECK_THROWS_AS(parse_efficiency_kind("a-optimal"), ValidationError);
}
