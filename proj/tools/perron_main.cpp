#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "perron/branching_ct.hpp"
#include "perron/errors.hpp"
#include "perron/estimator.hpp"
#include "perron/galton_watson.hpp"
#include "perron/matrix.hpp"
#include "perron/matrix_io.hpp"

namespace {

using nlohmann::json;
using namespace perron;

constexpr int kExitOk = 0;
constexpr int kExitDomain = 1;  // non-primitive, non-convergence, estimation failure
constexpr int kExitUsage = 2;   // bad flags, parse errors, invalid input files

std::string fmt(double v, const char* spec = "%.12g") {
    char buf[48];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

std::string fmt_vec(const std::vector<double>& v, const char* spec = "%.12g") {
    std::string out = "(";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        out += fmt(v[i], spec);
    }
    return out + ")";
}

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double ms() const {
        return std::chrono::duration<double, std::milli>(
                   std::chrono::steady_clock::now() - start)
            .count();
    }
};

LawKind law_from_name(const std::string& name) {
    if (name == "poisson") return LawKind::poisson_rows;
    if (name == "single-child") return LawKind::single_child_markov;
    if (name == "bernoulli") return LawKind::bernoulli_split;
    throw ValidationError("unknown law '" + name + "'");
}

std::string method_name(EstimatorMethod m) {
    switch (m) {
        case EstimatorMethod::gw_reciprocal: return "gw-reciprocal";
        case EstimatorMethod::gw_vector: return "gw-vector";
        case EstimatorMethod::ct_reciprocal: return "ct";
    }
    return "?";
}

json stops_json(const StopReasonHistogram& h) {
    json j;
    j["clock_killed"] = h.clock_killed;
    j["extinct"] = h.extinct;
    j["generation_cap"] = h.generation_cap;
    j["size_cap"] = h.size_cap;
    j["time_cap"] = h.time_cap;
    return j;
}

std::string stops_text(const StopReasonHistogram& h) {
    std::string out;
    out += "extinct=" + std::to_string(h.extinct);
    out += " clock_killed=" + std::to_string(h.clock_killed);
    out += " generation_cap=" + std::to_string(h.generation_cap);
    out += " time_cap=" + std::to_string(h.time_cap);
    out += " size_cap=" + std::to_string(h.size_cap);
    return out;
}

struct McOptions {
    std::string file;
    std::string format;
    std::string method = "gw-vector";
    std::string law = "poisson";
    std::string scaling = "margin";
    long replicas = 10000;
    std::uint64_t seed = 1;
    int start_type = 0;  // 1-based, 0 = auto
    bool json_out = false;
};

EigenvectorEstimate run_mc_method(const NonNegativeMatrix& A, const McOptions& opt,
                                  int* start_type_used) {
    LawKind kind = law_from_name(opt.law);
    ScalingTarget target = opt.scaling == "critical" ? ScalingTarget::critical
                                                     : ScalingTarget::supercritical_margin;
    double c = choose_scaling(A, target);
    if (opt.method == "ct") {
        CtClockConfig clock;
        return estimate_u_ct(A, opt.replicas, clock, kind, c, opt.seed);
    }
    ClockConfig clock;
    clock.mode = target == ScalingTarget::critical ? GwMode::analytic_weights
                                                   : GwMode::geometric_clock;
    if (opt.method == "gw-reciprocal")
        return estimate_u_gw_reciprocal(A, opt.replicas, clock, kind, c, opt.seed);
    int start = opt.start_type > 0 ? opt.start_type - 1 : default_start_type(A);
    if (start < 0 || start >= A.size())
        throw ValidationError("--type out of range (matrix has n=" +
                              std::to_string(A.size()) + ")");
    if (start_type_used) *start_type_used = start;
    return estimate_u_gw_vector(A, start, opt.replicas, clock, kind, c, opt.seed);
}

int cmd_validate(const std::string& file, const std::string& format) {
    MatrixFile mf = load_matrix_file(file, format);
    const NonNegativeMatrix& A = mf.parsed;
    PrimitivityReport rep = validate_primitive(A);
    std::cout << "n          = " << A.size() << "\n";
    std::cout << "primitive  = " << (rep.is_primitive ? "yes" : "no") << "\n";
    if (!rep.is_primitive) {
        std::cout << "reason     = " << rep.reason << "\n";
        return kExitDomain;
    }
    std::cout << "exponent   = " << *rep.exponent << "\n";
    PerronPair pair = perron_pair(A);
    std::cout << "lambda     = " << fmt(pair.lambda, "%.15g") << "\n";
    std::cout << "u          = " << fmt_vec(pair.u) << "\n";
    std::cout << "residual   = " << fmt(pair.residual, "%.3g") << "\n";
    return kExitOk;
}

int cmd_exact(const std::string& file, const std::string& format, int type_1based,
              double tol) {
    MatrixFile mf = load_matrix_file(file, format);
    const NonNegativeMatrix& A = mf.parsed;
    PrimitivityReport rep = validate_primitive(A);
    if (!rep.is_primitive) {
        std::cerr << "not primitive: " << rep.reason << "\n";
        return kExitDomain;
    }
    int i = type_1based - 1;
    if (i < 0 || i >= A.size())
        throw ValidationError("--type out of range (matrix has n=" +
                              std::to_string(A.size()) + ")");
    PerronPair pair = perron_pair(A, std::min(tol, 1e-12));
    StoppedMatrix stopped = stopped_matrix(A, i);
    TruncationPlan plan = make_truncation_plan(stopped, pair.lambda, tol);

    std::vector<double> vs;
    try {
        vs = series_vector(stopped, A, pair.lambda, plan);
    } catch (const TruncationError& e) {
        std::cerr << "series truncation failure: " << e.what()
                  << " (tail bound " << fmt(e.tail_bound(), "%.3g") << ")\n";
        std::cerr << "partial sum = " << fmt_vec(e.partial()) << "\n";
        return kExitDomain;
    }
    std::vector<double> vr = resolvent_vector(A, i, pair.lambda);
    std::vector<double> us = normalized_l1(vs);
    std::vector<double> ur = normalized_l1(vr);

    double ds = 0.0, dr = 0.0;
    for (int j = 0; j < A.size(); ++j) {
        ds = std::max(ds, std::abs(us[j] - pair.u[j]));
        dr = std::max(dr, std::abs(ur[j] - pair.u[j]));
    }
    std::cout << "lambda (oracle)   = " << fmt(pair.lambda, "%.15g") << "\n";
    std::cout << "u (oracle)        = " << fmt_vec(pair.u) << "\n";
    std::cout << "series v          = " << fmt_vec(vs) << "   v(i)=" << fmt(vs[i], "%.15g")
              << "\n";
    std::cout << "resolvent v       = " << fmt_vec(vr) << "   v(i)=" << fmt(vr[i], "%.15g")
              << "\n";
    std::cout << "u (series)        = " << fmt_vec(us) << "\n";
    std::cout << "u (resolvent)     = " << fmt_vec(ur) << "\n";
    std::cout << "max|series-oracle|    = " << fmt(ds, "%.3g") << "\n";
    std::cout << "max|resolvent-oracle| = " << fmt(dr, "%.3g") << "\n";
    return kExitOk;
}

int cmd_mc(const McOptions& opt) {
    MatrixFile mf = load_matrix_file(opt.file, opt.format);
    const NonNegativeMatrix& A = mf.parsed;
    PrimitivityReport rep = validate_primitive(A);
    if (!rep.is_primitive) {
        std::cerr << "not primitive: " << rep.reason << "\n";
        return kExitDomain;
    }
    if (opt.method != "gw-vector" && opt.method != "gw-reciprocal" && opt.method != "ct")
        throw ValidationError("unknown --method '" + opt.method + "'");
    if (opt.scaling != "critical" && opt.scaling != "margin")
        throw ValidationError("unknown --scaling '" + opt.scaling + "'");

    int start_used = -1;
    EigenvectorEstimate est = run_mc_method(A, opt, &start_used);

    double lambda_base = est.c_used > 0.0 ? est.lambda_used / est.c_used : 0.0;
    if (opt.json_out) {
        json j;
        j["command"] = "mc";
        json cfg;
        cfg["c"] = est.c_used;
        cfg["format"] = matrix_format_name(mf.format);
        ClockConfig defaults_gw;
        CtClockConfig defaults_ct;
        cfg["generation_cap"] = defaults_gw.generation_cap;
        cfg["lambda_base"] = lambda_base;
        cfg["lambda_eff"] = est.lambda_used;
        cfg["law"] = opt.law;
        cfg["matrix_file"] = opt.file;
        cfg["method"] = method_name(est.method);
        cfg["mode"] = opt.method == "ct"
                          ? (est.lambda_used > 1.0 ? "exponential_clock" : "analytic_weights")
                          : (opt.scaling == "critical" ? "analytic_weights"
                                                       : "geometric_clock");
        cfg["n"] = A.size();
        cfg["replicas"] = opt.replicas;
        cfg["scaling"] = opt.scaling;
        cfg["seed"] = opt.seed;
        cfg["size_cap"] = defaults_gw.size_cap;
        cfg["start_type"] = est.start_type ? json(*est.start_type + 1) : json(nullptr);
        cfg["time_cap"] = opt.method == "ct" ? json(defaults_ct.time_cap) : json(nullptr);
        j["config"] = cfg;
        json res;
        std::vector<double> u, se, lo, hi;
        for (const Estimate& e : est.u_hat) {
            u.push_back(e.value);
            se.push_back(e.stderr_);
            lo.push_back(e.ci_low);
            hi.push_back(e.ci_high);
        }
        res["ci95_high"] = hi;
        res["ci95_low"] = lo;
        res["stderr"] = se;
        res["u_hat"] = u;
        j["results"] = res;
        json diag;
        diag["s_max_over_mean"] = est.s_max_over_mean;
        diag["stop_reasons"] = stops_json(est.stops);
        diag["sum_u_hat"] = est.sum_u_hat;
        diag["v_start_raw"] = est.v_start_raw ? json(*est.v_start_raw) : json(nullptr);
        j["diagnostics"] = diag;
        std::cout << j.dump() << "\n";
    } else {
        std::cout << "method=" << method_name(est.method) << " law=" << opt.law
                  << " scaling=" << opt.scaling << " replicas=" << opt.replicas
                  << " seed=" << opt.seed << "\n";
        std::cout << "c=" << fmt(est.c_used) << " lambda_eff=" << fmt(est.lambda_used);
        if (est.start_type) std::cout << " start_type=" << (*est.start_type + 1);
        std::cout << "\n";
        for (std::size_t k = 0; k < est.u_hat.size(); ++k) {
            const Estimate& e = est.u_hat[k];
            std::cout << "u_hat[" << k + 1 << "] = " << fmt(e.value, "%.6f") << " +- "
                      << fmt(e.stderr_, "%.2g") << "   95% CI [" << fmt(e.ci_low, "%.6f")
                      << ", " << fmt(e.ci_high, "%.6f") << "]\n";
        }
        std::cout << "sum u_hat = " << fmt(est.sum_u_hat, "%.6f") << "\n";
        std::cout << "stop reasons: " << stops_text(est.stops) << "\n";
        if (est.v_start_raw)
            std::cerr << "diagnostic: raw v(start) = " << fmt(*est.v_start_raw, "%.6f")
                      << " (expect ~1)\n";
        std::cerr << "diagnostic: max/mean of per-run statistic = "
                  << fmt(est.s_max_over_mean, "%.3g") << "\n";
    }
    return kExitOk;
}

int cmd_compare(const std::string& file, const std::string& format, long replicas,
                std::uint64_t seed) {
    MatrixFile mf = load_matrix_file(file, format);
    const NonNegativeMatrix& A = mf.parsed;
    PrimitivityReport rep = validate_primitive(A);
    if (!rep.is_primitive) {
        std::cerr << "not primitive: " << rep.reason << "\n";
        return kExitDomain;
    }
    const int n = A.size();
    PerronPair pair = perron_pair(A);
    int i = default_start_type(A);

    struct Row {
        std::string name;
        std::vector<double> u;
        std::vector<double> se;  // empty for exact rows
        std::string error;
    };
    std::vector<Row> rows;
    rows.push_back({"oracle", pair.u, {}, ""});

    try {
        StoppedMatrix stopped = stopped_matrix(A, i);
        TruncationPlan plan = make_truncation_plan(stopped, pair.lambda);
        rows.push_back({"series", normalized_l1(series_vector(stopped, A, pair.lambda, plan)),
                        {}, ""});
    } catch (const std::exception& e) {
        rows.push_back({"series", {}, {}, e.what()});
    }
    try {
        rows.push_back({"resolvent", normalized_l1(resolvent_vector(A, i, pair.lambda)),
                        {}, ""});
    } catch (const std::exception& e) {
        rows.push_back({"resolvent", {}, {}, e.what()});
    }

    McOptions mc;
    mc.file = file;
    mc.replicas = replicas;
    mc.seed = seed;
    for (const char* method : {"gw-reciprocal", "gw-vector", "ct"}) {
        mc.method = method;
        try {
            EigenvectorEstimate est = run_mc_method(A, mc, nullptr);
            Row r{method, {}, {}, ""};
            for (const Estimate& e : est.u_hat) {
                r.u.push_back(e.value);
                r.se.push_back(e.stderr_);
            }
            rows.push_back(std::move(r));
        } catch (const std::exception& e) {
            rows.push_back({method, {}, {}, e.what()});
        }
    }

    std::cout << "lambda = " << fmt(pair.lambda, "%.15g") << ", start type for vector/series = "
              << i + 1 << "\n";
    bool flagged = false;
    for (const Row& r : rows) {
        std::cout << r.name;
        for (std::size_t pad = r.name.size(); pad < 14; ++pad) std::cout << ' ';
        if (!r.error.empty()) {
            std::cout << "error: " << r.error << "\n";
            continue;
        }
        std::cout << fmt_vec(r.u, "%.6f");
        if (!r.se.empty()) {
            double zmax = 0.0;
            for (int k = 0; k < n; ++k) {
                double se = std::max(r.se[k], 1e-300);
                zmax = std::max(zmax, std::abs(r.u[k] - pair.u[k]) / se);
            }
            std::cout << "   max|z| vs oracle = " << fmt(zmax, "%.2f");
            if (zmax > 4.0) {
                std::cout << "   FLAG";
                flagged = true;
            }
        }
        std::cout << "\n";
    }
    if (flagged)
        std::cerr << "warning: at least one Monte Carlo method deviates from the oracle "
                     "by more than 4 standard errors\n";
    return kExitOk;
}

int dispatch(int argc, char** argv) {
    CLI::App app{"Perron-Frobenius eigenvectors of primitive non-negative matrices:\n"
                 "exact evaluators and branching-process Monte Carlo estimators."};
    app.require_subcommand(1);

    std::string file, format;
    int type_1based = 1;
    double tol = 1e-10;
    McOptions mc;
    long replicas = 10000;
    std::uint64_t seed = 1;

    auto add_file = [&](CLI::App* sub) {
        sub->add_option("file", file, "matrix file")->required();
        sub->add_option("--format", format, "input format: plain, csv, json (default: by extension)");
    };

    CLI::App* validate = app.add_subcommand(
        "validate", "check primitivity and print the oracle eigenpair");
    add_file(validate);

    CLI::App* exact = app.add_subcommand(
        "exact", "series and resolvent evaluation of the eigenvector");
    add_file(exact);
    exact->add_option("--type", type_1based, "stopped type (1-based)")->check(CLI::PositiveNumber);
    exact->add_option("--tol", tol, "truncation tolerance")->check(CLI::PositiveNumber);

    CLI::App* mcsub = app.add_subcommand("mc", "Monte Carlo eigenvector estimation");
    add_file(mcsub);
    mcsub->add_option("--method", mc.method, "gw-vector, gw-reciprocal or ct");
    mcsub->add_option("--replicas", mc.replicas, "Monte Carlo replicas per start type")
        ->check(CLI::PositiveNumber);
    mcsub->add_option("--seed", mc.seed, "master seed (replica streams derive from it)");
    mcsub->add_option("--scaling", mc.scaling,
                      "critical (c=1/lambda, analytic weights) or margin (c=1.5/lambda, clock)");
    mcsub->add_option("--law", mc.law, "poisson, single-child or bernoulli");
    mcsub->add_option("--type", mc.start_type,
                      "start type for gw-vector (1-based; default: largest row sum)");
    mcsub->add_flag("--json", mc.json_out, "emit the run report as one JSON object");

    CLI::App* compare = app.add_subcommand(
        "compare", "tabulate oracle, exact evaluators and all Monte Carlo methods");
    add_file(compare);
    compare->add_option("--replicas", replicas, "replicas per Monte Carlo method")
        ->check(CLI::PositiveNumber);
    compare->add_option("--seed", seed, "master seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return kExitUsage;
    }

    Timer timer;
    int code = kExitOk;
    try {
        if (validate->parsed()) {
            code = cmd_validate(file, format);
        } else if (exact->parsed()) {
            code = cmd_exact(file, format, type_1based, tol);
        } else if (mcsub->parsed()) {
            mc.file = file;
            mc.format = format;
            code = cmd_mc(mc);
        } else if (compare->parsed()) {
            code = cmd_compare(file, format, replicas, seed);
        }
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDomain;
    }
    std::cerr << "wall_ms=" << fmt(timer.ms(), "%.1f") << "\n";
    return code;
}

}  // namespace

int main(int argc, char** argv) { return dispatch(argc, argv); }
