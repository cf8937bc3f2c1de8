#include "osp/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "osp/error.hpp"
#include "osp/efficiency.hpp"
#include "osp/estimation.hpp"
#include "osp/lead_data.hpp"
#include "osp/mc_oracle.hpp"
#include "osp/moments.hpp"
#include "osp/prediction.hpp"

namespace osp::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Common {
    std::string family = "normal";
    std::string method;
    double tol = 1e-8;
    int n = 0;
    int r = 0;
    std::string targets;
    std::string moments_file;
    std::string out;
    std::string format = "json";
    std::uint64_t seed = 0;
    std::int64_t reps = 1'000'000;
};

void add_common(CLI::App* app, Common& c) {
    app->add_option("--family", c.family, "exponential|uniform|normal|gumbel");
    app->add_option("--method", c.method, "closed-form|quadrature|monte-carlo (default: family's exact engine)");
    app->add_option("--tol", c.tol, "relative tolerance of the quadrature engine");
    app->add_option("--n", c.n, "sample size");
    app->add_option("--r", c.r, "number of observed order statistics");
    app->add_option("--targets", c.targets, "future order statistics, e.g. 10,15");
    app->add_option("--moments", c.moments_file, "moment file; loaded if present, otherwise computed and written");
    app->add_option("--out", c.out, "output path (default: stdout)");
    app->add_option("--format", c.format, "json|csv");
    app->add_option("--seed", c.seed, "random seed");
    app->add_option("--reps", c.reps, "Monte Carlo replications");
}

ParentModel model_of(const Common& c) {
    ParentModel m = default_model(parse_family(c.family));
    if (!c.method.empty()) m.method = parse_method(c.method);
    m.quad_rel_tol = c.tol;
    m.mc_reps = c.reps;
    m.mc_seed = c.seed;
    m.validate();
    return m;
}

void require_n(const Common& c) {
    if (c.n < 1) throw ValidationError("--n is required");
}

std::vector<int> parse_targets(const std::string& text) {
    std::vector<int> t;
    if (text.empty()) return t;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        int v = 0;
        try {
            v = std::stoi(item, &used);
        } catch (const std::exception&) {
            throw ValidationError("bad target index '" + item + "'");
        }
        if (used != item.size()) throw ValidationError("bad target index '" + item + "'");
        t.push_back(v);
    }
    return t;
}

void check_matches(const MomentSet& ms, const ParentModel& m, int n, const std::string& path) {
    if (ms.n() != n) throw ValidationError("moment file " + path + " has n = " + std::to_string(ms.n()));
    if (ms.provenance().family != m.family)
        throw ValidationError("moment file " + path + " is for family " + to_string(ms.provenance().family));
}

MomentSet moments_for(const Common& c, const ParentModel& m, int n, std::ostream& err) {
    if (c.moments_file.empty()) return compute_moments(m, n);
    if (fs::exists(c.moments_file)) {
        MomentSet ms = load_moments(c.moments_file);
        check_matches(ms, m, n, c.moments_file);
        return ms;
    }
    MomentSet ms = compute_moments(m, n);
    save_moments(ms, c.moments_file);
    err << "wrote moment file " << c.moments_file << '\n';
    return ms;
}

std::vector<double> read_data(const std::string& path) {
    if (path == "builtin:lead") return {kLeadData.begin(), kLeadData.end()};
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot read data file " + path);
    std::vector<double> v;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        const auto e = line.find_last_not_of(" \t\r");
        const std::string cell = line.substr(b, e - b + 1);
        if (lineno == 1 && cell == "value") continue;
        char* end = nullptr;
        const double x = std::strtod(cell.c_str(), &end);
        if (end != cell.c_str() + cell.size() || !std::isfinite(x))
            throw ValidationError(path + ":" + std::to_string(lineno) + ": not a number: '" + cell + "'");
        v.push_back(x);
    }
    if (v.empty()) throw ValidationError("data file " + path + " holds no values");
    return v;
}

void emit(const Common& c, const std::string& text, std::ostream& out) {
    if (c.out.empty()) {
        out << text;
        return;
    }
    std::ofstream f(c.out);
    if (!f) throw ValidationError("cannot write " + c.out);
    f << text;
}

json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string signed_fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%+.*f", digits, v);
    return buf;
}

// ---- moments ----

int cmd_moments(const Common& c, std::ostream& out) {
    require_n(c);
    const MomentSet ms = compute_moments(model_of(c), c.n);
    if (!c.moments_file.empty()) save_moments(ms, c.moments_file);
    emit(c, moments_to_json(ms) + "\n", out);
    return 0;
}

// ---- estimate ----

struct DataOpts {
    std::string data;
    bool log = false;
};

CensoredSample sample_of(const Common& c, const DataOpts& d) {
    if (d.data.empty()) throw ValidationError("--data is required");
    const std::vector<double> raw = read_data(d.data);
    return make_censored_sample(raw, c.n, c.r, d.log ? Transform::Log : Transform::None);
}

json blue_json(const BlueResult& b) {
    const DeltaEstimate d = delta_hat(b);
    return json{{"mu_star", b.mu_star},
                {"sigma_star", b.sigma_star},
                {"var_mu", b.var_mu},
                {"var_sigma", b.var_sigma},
                {"cov_mu_sigma", b.cov_mu_sigma},
                {"variance_units", "sigma2"},
                {"delta_hat", d.value},
                {"delta_unstable", d.unstable}};
}

int cmd_estimate(const Common& c, const DataOpts& d, std::ostream& out, std::ostream& err) {
    require_n(c);
    const ParentModel m = model_of(c);
    const CensoredSample sample = sample_of(c, d);
    const MomentSet ms = moments_for(c, m, c.n, err);
    const BlueResult b = blue(sample, slice_moments(ms, c.r, {}));
    json j = blue_json(b);
    j["n"] = c.n;
    j["r"] = c.r;
    j["family"] = to_string(m.family);
    j["transform"] = d.log ? "log" : "none";
    j["observed"] = vec_json(sample.x);
    emit(c, j.dump(2) + "\n", out);
    return 0;
}

// ---- predict ----

struct PredictOpts {
    std::string predictor = "blip";
    std::string delta;
    std::string mspe_units = "sigma2";
};

int cmd_predict(const Common& c, const DataOpts& d, const PredictOpts& p, std::ostream& out, std::ostream& err) {
    require_n(c);
    const ParentModel m = model_of(c);
    const PredictorKind kind = parse_predictor_kind(p.predictor);
    const std::vector<int> targets = parse_targets(c.targets);
    if (targets.empty()) throw ValidationError("--targets is required");
    if (p.mspe_units != "sigma2" && p.mspe_units != "data") throw ValidationError("--mspe-units must be sigma2 or data");

    std::optional<CensoredSample> sample;
    if (!d.data.empty()) sample = sample_of(c, d);
    const MomentSet ms = moments_for(c, m, c.n, err);
    const MomentSlice slice = slice_moments(ms, c.r, targets);

    std::optional<BlueResult> b;
    auto need_blue = [&]() -> const BlueResult& {
        if (!sample) throw ValidationError("this request needs --data");
        if (!b) b = blue(*sample, slice);
        return *b;
    };

    LinearPredictor pred;
    MspeMatrix mspe;
    std::string delta_source = "none";
    switch (kind) {
    case PredictorKind::BLIP: {
        double delta = 0.0;
        if (p.delta.empty()) throw ValidationError("--delta <x>|plugin is required for the BLIP");
        if (p.delta == "plugin") {
            delta = delta_hat(need_blue()).value;
            delta_source = "plugin";
        } else {
            std::size_t used = 0;
            try {
                delta = std::stod(p.delta, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != p.delta.size() || !std::isfinite(delta)) throw ValidationError("--delta must be a number or 'plugin'");
            delta_source = "fixed";
        }
        pred = blip(slice, delta);
        mspe = blip_mspe(pred, slice, delta);
        break;
    }
    case PredictorKind::BLUP:
        pred = blup(slice);
        mspe = blup_mspe(slice);
        break;
    case PredictorKind::KaminskyBLIP:
        pred = kaminsky_predictor(slice);
        mspe = blip_mspe(pred, slice, 0.0);
        mspe.delta.reset();
        break;
    case PredictorKind::ScaleBLIP:
        pred = scale_blip(slice);
        mspe = scale_mspe(pred, slice);
        break;
    }

    double scale = 1.0;
    if (p.mspe_units == "data") {
        const double s = need_blue().sigma_star;
        scale = s * s;
    }
    json j = predictor_to_json(pred, mspe, p.mspe_units, scale);
    j["delta_source"] = delta_source;
    if (sample) {
        const Predictions pr = predict(pred, *sample);
        j["predictions"] = vec_json(pr.value);
        if (pr.original) j["predictions_original_scale"] = vec_json(*pr.original);
        j["estimate"] = blue_json(need_blue());
    }
    emit(c, j.dump(2) + "\n", out);
    return 0;
}

// ---- efficiency ----

struct EffOpts {
    std::string kind = "re1";
    std::optional<double> at;
    std::string grid;
    std::string delta_star;
    std::optional<double> iem_max;
    int iem_points = 4096;
    std::string cross;
};

std::vector<double> split_reals(const std::string& text, char sep, std::size_t want, const char* flag) {
    std::vector<double> v;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, sep)) {
        char* end = nullptr;
        const double x = std::strtod(item.c_str(), &end);
        if (item.empty() || end != item.c_str() + item.size()) throw ValidationError(std::string(flag) + ": bad number '" + item + "'");
        v.push_back(x);
    }
    if (v.size() != want) throw ValidationError(std::string(flag) + " expects " + std::to_string(want) + " values separated by '" + sep + "'");
    return v;
}

int cmd_efficiency(const Common& c, const EffOpts& e, std::ostream& out, std::ostream& err) {
    require_n(c);
    EfficiencySpec spec;
    spec.kind = parse_efficiency_kind(e.kind);
    spec.n = c.n;
    spec.r = c.r;
    spec.targets = parse_targets(c.targets);
    spec.model = model_of(c);
    spec.validate();
    const int modes = (e.at ? 1 : 0) + !e.grid.empty() + !e.delta_star.empty() + (e.iem_max ? 1 : 0) + !e.cross.empty();
    if (modes != 1) throw ValidationError("give exactly one of --at, --grid, --delta-star, --iem, --crossings");

    const EfficiencyEvaluator ev(spec, moments_for(c, spec.model, c.n, err));
    const auto fn = [&ev](double d) { return ev.at(d); };
    json j{{"kind", to_string(spec.kind)}, {"n", spec.n}, {"r", spec.r}, {"targets", spec.targets}};

    if (!e.grid.empty()) {
        const auto g = split_reals(e.grid, ':', 3, "--grid");
        const EfficiencyCurve cv = curve(ev, linear_grid(g[0], g[1], g[2]));
        if (c.format == "csv") {
            emit(c, std::string(kCurveCsvHeader) + "\n" + curve_csv_rows(cv), out);
            return 0;
        }
        j["delta"] = cv.delta_grid;
        j["value"] = cv.values;
    } else if (e.at) {
        j["delta"] = *e.at;
        j["value"] = ev.at(*e.at);
    } else if (!e.delta_star.empty()) {
        const auto g = split_reals(e.delta_star, ':', 2, "--delta-star");
        const DeltaStar ds = find_delta_star(fn, g[0], g[1]);
        j["delta_star"] = ds.delta;
        j["value"] = ds.value;
        j["at_boundary"] = ds.at_boundary;
        if (ds.at_boundary) err << "warning: maximum sits on the search interval boundary\n";
    } else if (e.iem_max) {
        j["delta_max"] = *e.iem_max;
        j["points"] = e.iem_points;
        j["iem"] = iem(fn, *e.iem_max, e.iem_points);
    } else {
        const auto g = split_reals(e.cross, ':', 2, "--crossings");
        j["interval"] = g;
        j["crossings"] = crossings(fn, g[0], g[1]);
    }
    emit(c, j.dump(2) + "\n", out);
    return 0;
}

// ---- simulate ----

struct SimOpts {
    double mu = 0.0;
    double sigma = 1.0;
    std::string predictors = "blup,blip,kaminsky";
    std::string weights;
    double tolerance_se = 3.0;
};

int cmd_simulate(const Common& c, const SimOpts& s, std::ostream& out, std::ostream& err) {
    require_n(c);
    SimPlan plan;
    plan.model = model_of(c);
    plan.n = c.n;
    plan.r = c.r;
    plan.targets = parse_targets(c.targets);
    plan.mu = s.mu;
    plan.sigma = s.sigma;
    plan.reps = c.reps;
    plan.seed = c.seed;
    plan.tolerance_se = s.tolerance_se;
    if (!(s.sigma > 0.0)) throw ValidationError("--sigma must be positive");

    // Analytic moments come from the exact engine, never from Monte Carlo.
    ParentModel exact = default_model(plan.model.family);
    exact.quad_rel_tol = c.tol;
    const MomentSet ms = moments_for(c, exact, c.n, err);
    const MomentSlice slice = slice_moments(ms, c.r, plan.targets);

    std::stringstream ss(s.predictors);
    std::string name;
    while (std::getline(ss, name, ',')) {
        const PredictorKind k = parse_predictor_kind(name);
        LinearPredictor p;
        switch (k) {
        case PredictorKind::BLUP: p = blup(slice); break;
        case PredictorKind::BLIP: p = blip(slice, s.mu / s.sigma); break;
        case PredictorKind::KaminskyBLIP: p = kaminsky_predictor(slice); break;
        case PredictorKind::ScaleBLIP: p = scale_blip(slice); break;
        }
        plan.predictors.push_back({to_string(k), std::move(p)});
    }
    if (!s.weights.empty()) {
        std::stringstream ws(s.weights);
        std::string item;
        while (std::getline(ws, item, ';')) {
            const auto w = split_reals(item, ',', plan.targets.size(), "--weights");
            plan.weights.push_back(Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size())));
        }
    }
    const SimReport rep = simulate(plan, ms);
    emit(c, report_to_json(rep).dump(2) + "\n", out);
    return 0;
}

// ---- reproduce ----

fs::path default_cache_dir() {
    if (const char* d = std::getenv("OSP_CACHE_DIR"); d && *d) return d;
    if (const char* d = std::getenv("XDG_CACHE_HOME"); d && *d) return fs::path(d) / "osp";
    if (const char* d = std::getenv("HOME"); d && *d) return fs::path(d) / ".cache" / "osp";
    return {};
}

MomentSet normal15(const Common& c, bool use_cache, std::ostream& err) {
    ParentModel m = default_model(Family::Normal);
    m.quad_rel_tol = c.tol;
    if (!c.moments_file.empty()) return moments_for(c, m, kLeadN, err);
    if (!use_cache) return compute_moments(m, kLeadN);
    const fs::path dir = default_cache_dir();
    char name[64];
    std::snprintf(name, sizeof name, "normal-n15-quadrature-%.0e.json", c.tol);
    const fs::path file = dir / name;
    if (!dir.empty() && fs::exists(file)) {
        try {
            MomentSet ms = load_moments(file);
            if (ms.n() == kLeadN && ms.provenance().family == Family::Normal &&
                ms.provenance().method == MomentMethod::Quadrature)
                return ms;
        } catch (const std::exception& e) {
            err << "ignoring unreadable cache " << file.string() << ": " << e.what() << '\n';
        }
    }
    MomentSet ms = compute_moments(m, kLeadN);
    if (!dir.empty()) {
        std::error_code ec;
        fs::create_directories(dir, ec);
        try {
            save_moments(ms, file);
        } catch (const std::exception& e) {
            err << "could not write cache " << file.string() << ": " << e.what() << '\n';
        }
    }
    return ms;
}

CensoredSample lead_sample() {
    return make_censored_sample({kLeadData.data(), kLeadData.size()}, kLeadN, kLeadR, Transform::Log);
}

struct Row {
    std::string label;
    double ours;
    double published;
    int digits;
};

void print_rows(std::ostream& os, const std::vector<Row>& rows) {
    std::size_t w = 0;
    for (const auto& r : rows) w = std::max(w, r.label.size());
    for (const auto& r : rows) {
        os << "  " << r.label << std::string(w - r.label.size() + 2, ' ') << "ours " << fixed(r.ours, r.digits + 2)
           << "  published " << fixed(r.published, r.digits) << "  diff " << signed_fixed(r.ours - r.published, r.digits + 2)
           << '\n';
    }
}

std::string table1(const MomentSet& ms) {
    const CensoredSample sample = lead_sample();
    const std::vector<int> targets = {10, 11, 12, 13, 14, 15};
    const MomentSlice slice = slice_moments(ms, kLeadR, targets);
    const BlueResult b = blue(sample, slice);
    const double dh = delta_hat(b).value;

    const double pub_ds[] = {0.8967, 0.8606, 0.8252, 0.7890, 0.7491, 0.6966};
    const double pub_blip[] = {3.015, 3.278, 3.575, 3.927, 4.388, 5.151};
    const double pub_blip_mspe[] = {0.0287, 0.0637, 0.1084, 0.1703, 0.2698, 0.5037};
    const double pub_blup[] = {3.037, 3.321, 3.639, 4.014, 4.503, 5.305};
    const double pub_blup_mspe[] = {0.0293, 0.0664, 0.1157, 0.1855, 0.3004, 0.5721};
    const double pub_re1[] = {0.9795, 0.9593, 0.9369, 0.9181, 0.8981, 0.8804};

    const LinearPredictor bi = blip(slice, dh);
    const LinearPredictor bu = blup(slice);
    const Eigen::VectorXd x_bi = predict(bi, sample).value;
    const Eigen::VectorXd x_bu = predict(bu, sample).value;
    const Eigen::MatrixXd w_bi = blip_mspe(bi, slice, dh).w;
    const Eigen::MatrixXd w_bu = blup_mspe(slice).w;

    std::ostringstream os;
    os << "table1: lead data, normal parent, n=15, r=9, log scale; MSPE in units of sigma^2\n";
    print_rows(os, {{"mu*", b.mu_star, 2.253, 3}, {"sigma*", b.sigma_star, 1.696, 3}, {"delta_hat", dh, 1.328, 3}});
    for (int k = 0; k < 6; ++k) {
        EfficiencySpec spec;
        spec.kind = EfficiencyKind::RE1;
        spec.n = kLeadN;
        spec.r = kLeadR;
        spec.targets = {targets[k]};
        spec.model = default_model(Family::Normal);
        const EfficiencyEvaluator ev(spec, ms);
        const DeltaStar ds = find_delta_star([&ev](double d) { return ev.at(d); }, 0.01, 10.0);
        os << "s=" << targets[k] << (ds.at_boundary ? "  (delta* on search boundary)" : "") << '\n';
        print_rows(os, {{"delta*", ds.delta, pub_ds[k], 4},
                        {"BLIP", x_bi[k], pub_blip[k], 3},
                        {"MSPE(BLIP)", w_bi(k, k), pub_blip_mspe[k], 4},
                        {"BLUP", x_bu[k], pub_blup[k], 3},
                        {"MSPE(BLUP)", w_bu(k, k), pub_blup_mspe[k], 4},
                        {"RE1", ev.at(dh), pub_re1[k], 4}});
    }
    return os.str();
}

EfficiencyEvaluator pair_evaluator(const MomentSet& ms, EfficiencyKind kind, int s, int t) {
    EfficiencySpec spec;
    spec.kind = kind;
    spec.n = kLeadN;
    spec.r = kLeadR;
    spec.targets = {s, t};
    spec.model = default_model(Family::Normal);
    return EfficiencyEvaluator(spec, ms);
}

std::string table2(const MomentSet& ms) {
    const double dmax[] = {10, 50, 1000, 10000};
    const double pub_d[] = {0.9484, 0.8029, 0.7513, 0.7486};
    const double pub_t[] = {0.9024, 0.7769, 0.7330, 0.7299};
    const EfficiencyEvaluator d = pair_evaluator(ms, EfficiencyKind::D, 10, 15);
    const EfficiencyEvaluator t = pair_evaluator(ms, EfficiencyKind::Trace, 10, 15);
    std::ostringstream os;
    os << "table2: integrated efficiency, (s,t)=(10,15), n=15, r=9, trapezoid on 4096 nodes\n";
    for (int k = 0; k < 4; ++k) {
        os << "delta_max=" << dmax[k] << '\n';
        print_rows(os, {{"IEM(D)", iem([&d](double x) { return d.at(x); }, dmax[k]), pub_d[k], 4},
                        {"IEM(Trace)", iem([&t](double x) { return t.at(x); }, dmax[k]), pub_t[k], 4}});
    }
    return os.str();
}

std::string table3(const MomentSet& ms) {
    const int pairs[3][2] = {{10, 11}, {10, 15}, {14, 15}};
    const double pub[3][6] = {{0.00091, 0.00029, 3.137, 0.0923, 0.0734, 1.257},
                              {0.0126, 0.0097, 1.298, 0.5324, 0.4533, 1.174},
                              {0.0532, 0.0510, 1.043, 0.7735, 0.8399, 0.9209}};
    const double deltas[] = {1.257, 1.328};
    std::ostringstream os;
    os << "table3: D and trace criteria, lead data, n=15, r=9; MSPE in units of sigma^2\n";
    for (double delta : deltas) {
        double worst_d = 0.0, worst_t = 0.0;
        os << "delta=" << fixed(delta, 3) << '\n';
        for (const auto& pr : pairs) {
            const EfficiencyEvaluator d = pair_evaluator(ms, EfficiencyKind::D, pr[0], pr[1]);
            const EfficiencyEvaluator t = pair_evaluator(ms, EfficiencyKind::Trace, pr[0], pr[1]);
            const Eigen::MatrixXd w = blip_mspe(blip(d.slice(), delta), d.slice(), delta).w;
            const Eigen::MatrixXd& wu = d.blup_reference().w;
            const double* p = pub[&pr - pairs];
            const double de = d.at(delta), te = t.at(delta);
            worst_d = std::max(worst_d, std::abs(de - p[2]));
            worst_t = std::max(worst_t, std::abs(te - p[5]));
            os << "(s,t)=(" << pr[0] << "," << pr[1] << ")\n";
            print_rows(os, {{"det MSPE(BLIP)", d.criterion(w), p[0], 5},
                            {"det MSPE(BLUP)", d.criterion(wu), p[1], 5},
                            {"D-efficiency", de, p[2], 3},
                            {"trace MSPE(BLIP)", t.criterion(w), p[3], 4},
                            {"trace MSPE(BLUP)", t.criterion(wu), p[4], 4},
                            {"Trace-efficiency", te, p[5], 4}});
        }
        const bool match = worst_d <= 0.02 && worst_t <= 0.01;
        os << "delta=" << fixed(delta, 3) << " max |diff| D " << fixed(worst_d, 4) << ", trace " << fixed(worst_t, 4)
           << (match ? "  -> matches" : "  -> does not match") << '\n';
    }
    return os.str();
}

std::string figure(const MomentSet& ms, int which) {
    std::string csv = std::string(kCurveCsvHeader) + "\n";
    if (which == 1) {
        const std::vector<double> grid = linear_grid(0.01, 0.01, 10.0);
        for (int s = 10; s <= 15; ++s) {
            EfficiencySpec spec;
            spec.kind = EfficiencyKind::RE1;
            spec.n = kLeadN;
            spec.r = kLeadR;
            spec.targets = {s};
            spec.model = default_model(Family::Normal);
            csv += curve_csv_rows(curve(EfficiencyEvaluator(spec, ms), grid));
        }
        return csv;
    }
    const int pairs[3][2] = {{10, 11}, {10, 15}, {14, 15}};
    const auto& pr = pairs[which - 2];
    const std::vector<double> grid = which == 2 ? linear_grid(0.01, 0.01, 10.0) : linear_grid(0.05, 0.05, 50.0);
    for (EfficiencyKind k : {EfficiencyKind::D, EfficiencyKind::Trace})
        csv += curve_csv_rows(curve(pair_evaluator(ms, k, pr[0], pr[1]), grid));
    return csv;
}

int cmd_reproduce(const Common& c, const std::string& what, bool use_cache, std::ostream& out, std::ostream& err) {
    static const std::vector<std::string> names = {"table1", "table2", "table3", "fig1", "fig2", "fig3", "fig4"};
    if (std::find(names.begin(), names.end(), what) == names.end())
        throw ValidationError("unknown reproduction target '" + what + "'");
    const MomentSet ms = normal15(c, use_cache, err);
    std::string text;
    if (what == "table1") text = table1(ms);
    else if (what == "table2") text = table2(ms);
    else if (what == "table3") text = table3(ms);
    else text = figure(ms, what[3] - '0');
    emit(c, text, out);
    return 0;
}

}  // namespace

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Prediction of future order statistics from Type-II censored samples", "osp"};
    app.require_subcommand(1);

    Common c;
    DataOpts data;
    PredictOpts popt;
    EffOpts eopt;
    SimOpts sopt;
    std::string what;
    bool no_cache = false;

    auto* moments = app.add_subcommand("moments", "compute and export order-statistic moments");
    add_common(moments, c);

    auto* estimate = app.add_subcommand("estimate", "BLUEs of location and scale from censored data");
    add_common(estimate, c);
    estimate->add_option("--data", data.data, "CSV with one value per line ('builtin:lead' for the lead data)");
    estimate->add_flag("--log", data.log, "analyse natural logs of the data");

    auto* predict_cmd = app.add_subcommand("predict", "linear predictors of future order statistics");
    add_common(predict_cmd, c);
    predict_cmd->add_option("--data", data.data, "CSV with one value per line ('builtin:lead' for the lead data)");
    predict_cmd->add_flag("--log", data.log, "analyse natural logs of the data");
    predict_cmd->add_option("--predictor", popt.predictor, "blup|blip|kaminsky|scale-blip");
    predict_cmd->add_option("--delta", popt.delta, "mu/sigma for the BLIP: a number or 'plugin'");
    predict_cmd->add_option("--mspe-units", popt.mspe_units, "sigma2 or data (scaled by sigma*^2)");

    auto* eff = app.add_subcommand("efficiency", "BLIP versus BLUP efficiency as a function of delta");
    add_common(eff, c);
    eff->add_option("--kind", eopt.kind, "re1|d|trace");
    eff->add_option("--at", eopt.at, "single delta");
    eff->add_option("--grid", eopt.grid, "lo:step:hi");
    eff->add_option("--delta-star", eopt.delta_star, "lo:hi search interval for the maximizer");
    eff->add_option("--iem", eopt.iem_max, "delta_max of the integrated efficiency measure");
    eff->add_option("--iem-points", eopt.iem_points, "trapezoid nodes");
    eff->add_option("--crossings", eopt.cross, "lo:hi interval to scan for eff = 1");

    auto* sim = app.add_subcommand("simulate", "Monte Carlo check of the analytic MSPE matrices");
    add_common(sim, c);
    sim->add_option("--mu", sopt.mu, "true location");
    sim->add_option("--sigma", sopt.sigma, "true scale");
    sim->add_option("--predictors", sopt.predictors, "comma list of blup,blip,kaminsky,scale-blip");
    sim->add_option("--weights", sopt.weights, "quadratic-form weights, e.g. 1,0;0.5,0.5");
    sim->add_option("--tol-se", sopt.tolerance_se, "verdict tolerance in standard errors");

    auto* repro = app.add_subcommand("reproduce", "recompute the published tables and curves");
    add_common(repro, c);
    repro->add_option("what", what, "table1|table2|table3|fig1|fig2|fig3|fig4")->required();
    repro->add_flag("--no-cache", no_cache, "do not read or write the moment cache");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (moments->parsed()) return cmd_moments(c, out);
        if (estimate->parsed()) return cmd_estimate(c, data, out, err);
        if (predict_cmd->parsed()) return cmd_predict(c, data, popt, out, err);
        if (eff->parsed()) return cmd_efficiency(c, eopt, out, err);
        if (sim->parsed()) return cmd_simulate(c, sopt, out, err);
        if (repro->parsed()) return cmd_reproduce(c, what, !no_cache, out, err);
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const nlohmann::json::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "numerical failure: " << e.what() << '\n';
        return 3;
    }
    return 2;
}

}  // namespace osp::cli
