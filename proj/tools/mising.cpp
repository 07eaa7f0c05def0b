// Command-line frontend for the multiplicative Ising toolkit.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "criteria.hpp"
#include "mising/mising.hpp"

namespace {

using json = nlohmann::ordered_json;
using namespace mising;

constexpr int kExitUsage = 2;
constexpr int kExitPrecondition = 3;
constexpr int kExitInfeasible = 4;

struct Config {
    double beta = 1.0, J = 1.0, h = 0.0;
    std::string bc_coupling = "J";
    double tol = 1e-10;
    std::string out;
    std::string format = "csv";
    unsigned workers = 1;

    std::string f = "s[1]*s[2]";
    std::string t = "-3:3:0.1";
    std::string x = "-0.9:0.9:0.1";
    std::string bc = "all";
    std::string mode = "all";
    bool bits = false;
    std::uint64_t N = 1024;
    std::uint64_t count = 1000;
    std::uint64_t seed = 1;
    std::string primes = "2";
    std::string indices = "1,2";
    std::uint64_t m = 2;
    double t_max = 0.0;
    double t_step = 0.0;
    std::string command;

    ising1d::ModelParams params() const {
        ising1d::ModelParams p{beta, J, h};
        p.validate();
        return p;
    }
    ising1d::BoundaryCoupling coupling() const {
        return bc_coupling == "1" ? ising1d::BoundaryCoupling::unit : ising1d::BoundaryCoupling::coupling;
    }
};

json config_echo(const Config& c) {
    return json{{"command", c.command}, {"beta", c.beta},   {"J", c.J},           {"h", c.h},
                {"bc_coupling", c.bc_coupling}, {"tol", c.tol}, {"format", c.format}, {"workers", c.workers},
                {"f", c.f},             {"t", c.t},         {"x", c.x},           {"bc", c.bc},
                {"mode", c.mode},       {"bits", c.bits},   {"N", c.N},           {"count", c.count},
                {"seed", c.seed},       {"primes", c.primes}, {"indices", c.indices}, {"m", c.m}, {"t_max", c.t_max}, {"t_step", c.t_step}};
}

std::vector<double> parse_range(const std::string& spec) {
    std::vector<double> parts;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ':')) {
        try {
            std::size_t used = 0;
            parts.push_back(std::stod(item, &used));
            require(used == item.size(), "");
        } catch (const std::exception&) {
            throw Error(ErrorKind::precondition, "malformed range '" + spec + "', expected a:b:step");
        }
    }
    if (parts.size() == 1) return parts;
    require(parts.size() == 3, "malformed range '" + spec + "', expected a:b:step");
    return ldp::make_grid(parts[0], parts[1], parts[2]);
}

std::vector<std::uint64_t> parse_list(const std::string& spec) {
    std::vector<std::uint64_t> out;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            const auto v = std::stoull(item, &used);
            require(used == item.size(), "");
            out.push_back(v);
        } catch (const std::exception&) {
            throw Error(ErrorKind::precondition, "malformed integer list '" + spec + "'");
        }
    }
    require(!out.empty(), "empty integer list");
    return out;
}

/// Output sink: the --out file (plus a metadata sidecar) or stdout.
class Output {
public:
    explicit Output(const Config& c) : config_(c) {
        if (!c.out.empty()) {
            file_ = std::make_unique<std::ofstream>(c.out, std::ios::binary);
            require(static_cast<bool>(*file_), "cannot open output file " + c.out);
        }
    }
    std::ostream& stream() { return file_ ? *file_ : std::cout; }

    void finish(json extra = json::object()) {
        if (!file_) return;
        file_->close();
        json meta{{"tool", "mising"}, {"config", config_echo(config_)}};
        for (auto& [k, v] : extra.items()) meta[k] = v;
        std::ofstream side(config_.out + ".meta.json");
        side << meta.dump(2) << '\n';
        require(static_cast<bool>(side), "cannot write metadata sidecar");
    }

private:
    const Config& config_;
    std::unique_ptr<std::ofstream> file_;
};

std::string num(double x) { return format_double(x); }

/// Pressure t -> F(t) for the configured observable: the exact layer series
/// for first-layer observables, otherwise the smooth-number series over the
/// extended prime basis, truncated once for |t| <= t_max.
struct Pressure {
    std::optional<ising1d::FirstLayerObservable> first;
    std::optional<multiprime::KieSeries> series;
    ising1d::ModelParams params;
    double tol;

    double trunc_err(double t) const {
        if (first) return ldp::scgf(*first, params, t, tol).trunc_err;
        return series->trunc_err(t);
    }
    ldp::ScgfFunction function() const {
        if (first) return ldp::make_scgf_function(*first, params, tol);
        auto value = [s = *series](double t) { return s.value(t); };
        auto slope = [value](double t) { return ldp::first_derivative(value, t); };
        return {value, slope};
    }
};

Pressure make_pressure(const Config& c, double t_max) {
    const auto f = parse_observable(c.f);
    require(!f.empty(), "observable is zero");
    Pressure p{ising1d::first_layer(f), std::nullopt, c.params(), c.tol};
    if (!p.first) {
        p.series = multiprime::make_kie_series(f, p.params, c.tol, std::max(t_max, 1.0),
                                               arith::PrimeBasis(parse_list(c.primes)));
    }
    return p;
}

int cmd_scgf(const Config& c) {
    const auto grid = parse_range(c.t);
    double reach = 0.0;
    for (double t : grid) reach = std::max(reach, std::abs(t) + ldp::kDerivStep);
    const auto pressure = make_pressure(c, reach);
    const auto fn = pressure.function();
    std::vector<double> F(grid.size()), dF(grid.size()), err(grid.size());
    gibbs::for_replicas(grid.size(), c.workers, [&](std::uint64_t i) {
        F[i] = fn.value(grid[i]);
        dF[i] = fn.slope(grid[i]);
        err[i] = pressure.trunc_err(grid[i]);
    });
    Output out(c);
    double worst = 0.0;
    if (c.format == "json") {
        json rows = json::array();
        for (std::size_t i = 0; i < grid.size(); ++i)
            rows.push_back({{"t", grid[i]}, {"F", F[i]}, {"Fprime", dF[i]}, {"trunc_err", err[i]}});
        out.stream() << rows.dump(2) << '\n';
    } else {
        out.stream() << "t,F,Fprime,trunc_err\n";
        for (std::size_t i = 0; i < grid.size(); ++i)
            out.stream() << num(grid[i]) << ',' << num(F[i]) << ',' << num(dF[i]) << ',' << num(err[i]) << '\n';
    }
    for (double e : err) worst = std::max(worst, e);
    out.finish({{"max_trunc_err", worst}, {"deriv_step", ldp::kDerivStep},
                {"route", pressure.first ? "layer series" : "smooth-number series"}});
    return 0;
}

std::string domain_name(ldp::Domain d) {
    switch (d) {
        case ldp::Domain::interior: return "interior";
        case ldp::Domain::below: return "below";
        case ldp::Domain::above: return "above";
    }
    return "interior";
}

/// Tabulates F on [-t_max, t_max] with slopes from fourth-order differences
/// of the tabulated values; used where each evaluation of F is expensive.
ldp::ScgfCurve tabulate(const Pressure& pressure, double t_max, double step, unsigned workers) {
    auto grid = ldp::make_grid(-t_max - 2 * step, t_max + 2 * step, step);
    std::vector<double> F(grid.size());
    const auto fn = pressure.function();
    gibbs::for_replicas(grid.size(), workers, [&](std::uint64_t i) { F[i] = fn.value(grid[i]); });
    ldp::ScgfCurve c;
    c.deriv_step = step;
    for (std::size_t i = 2; i + 2 < grid.size(); ++i) {
        c.grid.push_back(grid[i]);
        c.F.push_back(F[i]);
        c.Fprime.push_back((F[i - 2] - 8 * F[i - 1] + 8 * F[i + 1] - F[i + 2]) / (12 * step));
        c.trunc_err.push_back(pressure.trunc_err(grid[i]));
    }
    return c;
}

int cmd_rate(const Config& c) {
    const bool first = ising1d::first_layer(parse_observable(c.f)).has_value();
    const double t_max = c.t_max > 0.0 ? c.t_max : (first ? 20.0 : 3.0);
    const auto pressure = make_pressure(c, t_max);
    const auto xs = parse_range(c.x);
    std::vector<ldp::LegendrePoint> pts(xs.size());
    json extra = json::object();
    if (pressure.first) {
        const auto fn = pressure.function();
        gibbs::for_replicas(xs.size(), c.workers, [&](std::uint64_t i) { pts[i] = ldp::legendre(fn, xs[i]); });
        extra["slope_at_zero"] = fn.slope(0.0);
    } else {
        const double step = c.t_step > 0.0 ? c.t_step : t_max / 30.0;
        const auto curve = tabulate(pressure, t_max, step, c.workers);
        for (std::size_t i = 0; i < xs.size(); ++i) pts[i] = ldp::legendre(curve, xs[i], 1e-6);
        extra["slope_at_zero"] = curve.Fprime[curve.Fprime.size() / 2];
        extra["trunc_err_at_t_max"] = pressure.series->trunc_err(t_max);
        extra["t_max"] = t_max;
        extra["t_step"] = step;
    }
    Output out(c);
    if (c.format == "json") {
        json rows = json::array();
        for (const auto& p : pts)
            rows.push_back({{"x", p.x}, {"I", std::isfinite(p.I) ? json(p.I) : json("inf")}, {"t_star", p.t_star}, {"domain_flag", domain_name(p.domain)}});
        out.stream() << rows.dump(2) << '\n';
    } else {
        out.stream() << "x,I,t_star,domain_flag\n";
        for (const auto& p : pts)
            out.stream() << num(p.x) << ',' << num(p.I) << ',' << num(p.t_star) << ',' << domain_name(p.domain) << '\n';
    }
    out.finish(extra);
    return 0;
}

int cmd_empirical(const Config& c) {
    const auto pressure = make_pressure(c, 1.0);
    require(pressure.first.has_value(), "empirical: observable must be first-layer (indices powers of 2)");
    const auto rows = ldp::empirical_ldp_check(*pressure.first, pressure.params, c.N, c.count, c.seed, parse_range(c.x),
                                               c.tol, c.workers);
    Output out(c);
    out.stream() << "x,emp_rate,I,censored\n";
    for (const auto& r : rows)
        out.stream() << num(r.x) << ',' << num(r.emp_rate) << ',' << num(r.I) << ',' << (r.censored ? 1 : 0) << '\n';
    out.finish();
    return 0;
}

int cmd_free_energy(const Config& c) {
    std::vector<std::pair<std::string, ising1d::Boundary>> bcs;
    if (c.bc == "all" || c.bc == "free") bcs.push_back({"free", ising1d::Boundary::free});
    if (c.bc == "all" || c.bc == "plus") bcs.push_back({"plus", ising1d::Boundary::plus});
    if (c.bc == "all" || c.bc == "minus") bcs.push_back({"minus", ising1d::Boundary::minus});
    require(!bcs.empty(), "unknown boundary condition '" + c.bc + "'");
    Output out(c);
    json result = json::object();
    double worst = 0.0;
    if (c.format != "json") out.stream() << "bc,value,trunc_err\n";
    for (const auto& [name, bc] : bcs) {
        const auto v = gibbs::free_energy(bc, c.params(), c.tol, c.coupling());
        worst = std::max(worst, v.trunc_err);
        result[name] = {{"value", v.value}, {"trunc_err", v.trunc_err}};
        if (c.format != "json") out.stream() << name << ',' << num(v.value) << ',' << num(v.trunc_err) << '\n';
    }
    if (c.format == "json") out.stream() << result.dump(2) << '\n';
    out.finish({{"max_trunc_err", worst}});
    return 0;
}

int cmd_entropy(const Config& c) {
    using gibbs::EntropyMode;
    const auto params = c.params();
    const double unit = c.bits ? 1.0 / std::log(2.0) : 1.0;
    std::vector<std::pair<std::string, EntropyMode>> modes;
    const bool all = c.mode == "all";
    if (all || c.mode == "series") modes.push_back({"series", EntropyMode::series});
    if (all || c.mode == "formula") modes.push_back({"formula", EntropyMode::formula});
    if (all || c.mode == "formula-entrywise") modes.push_back({"formula_entrywise", EntropyMode::formula_entrywise});
    if ((all && params.h == 0.0) || c.mode == "closed") modes.push_back({"closed_h0", EntropyMode::closed_h0});
    require(!modes.empty(), "unknown entropy mode '" + c.mode + "'");
    json result = json::object();
    double trunc = 0.0;
    for (const auto& [name, mode] : modes) {
        const auto v = gibbs::ks_entropy(params, mode, c.tol);
        result[name] = v.value * unit;
        trunc = std::max(trunc, v.trunc_err * unit);
    }
    if (all && params.h != 0.0) result["closed_h0"] = nullptr;
    result["unit"] = c.bits ? "bits" : "nats";
    Output out(c);
    out.stream() << result.dump(2) << '\n';
    out.finish({{"series_trunc_err", trunc}});
    return 0;
}

int cmd_sample(const Config& c) {
    require(!c.out.empty(), "sample: --out is required");
    const auto batch = gibbs::sample(c.N, c.params(), c.count, c.seed, c.workers);
    Output out(c);
    if (c.format == "csv") {
        sample_io::write_csv(out.stream(), batch);
    } else {
        require(c.format == "bin", "sample: --format must be bin or csv");
        sample_io::write_binary(out.stream(), batch);
    }
    out.finish({{"layout", c.format == "bin" ? "u64 N, u64 count, u64 seed, f64 beta, f64 J, f64 h (little-endian); "
                                               "then count*N bytes, 0x00=-1, 0x01=+1"
                                             : "one configuration per row"}});
    return 0;
}

int cmd_smb(const Config& c) {
    const auto params = c.params();
    const auto values = gibbs::smb_values(c.N, params, c.count, c.seed, c.workers);
    const auto est = gibbs::summarize(values);
    const auto ks = gibbs::ks_entropy(params, gibbs::EntropyMode::series, c.tol);
    json result{{"N", c.N},           {"count", c.count},     {"mean", est.mean}, {"stderr", est.stderr_},
                {"variance", est.variance}, {"ks_entropy", ks.value}, {"z_score", est.stderr_ > 0 ? (est.mean - ks.value) / est.stderr_ : 0.0}};
    Output out(c);
    out.stream() << result.dump(2) << '\n';
    out.finish({{"ks_trunc_err", ks.trunc_err}});
    return 0;
}

int cmd_invariance(const Config& c) {
    const auto idx = parse_list(c.indices);
    const auto rep = gibbs::check_mult_invariance(idx, c.m, c.params());
    Output out(c);
    if (c.format == "json") {
        json rows = json::array();
        for (std::size_t k = 0; k < rep.before.size(); ++k)
            rows.push_back({{"pattern", k}, {"logprob_before", rep.before[k]}, {"logprob_after", rep.after[k]}});
        out.stream() << json{{"max_abs_diff", rep.max_abs_diff}, {"invariant", rep.invariant}, {"table", rows}}.dump(2)
                     << '\n';
    } else {
        out.stream() << "pattern,logprob_before,logprob_after\n";
        for (std::size_t k = 0; k < rep.before.size(); ++k)
            out.stream() << k << ',' << num(rep.before[k]) << ',' << num(rep.after[k]) << '\n';
    }
    out.finish({{"max_abs_diff", rep.max_abs_diff}, {"invariant", rep.invariant},
                {"pattern_bits", "bit j set means spin j is +1"}});
    if (c.format != "json") {
        std::cerr << json{{"max_abs_diff", rep.max_abs_diff}, {"invariant", rep.invariant}}.dump() << '\n';
    }
    return 0;
}

int cmd_kie_weights(const Config& c) {
    const auto ws = arith::kie_weights(arith::PrimeBasis(parse_list(c.primes)), c.tol);
    Output out(c);
    out.stream() << "j,n_j,w_j,rho_minus,rho_plus\n";
    for (std::size_t j = 1; j <= ws.terms(); ++j)
        out.stream() << j << ',' << ws.smooth_number(j) << ',' << num(ws.weight(j)) << ',' << num(ws.rho_minus(j)) << ','
                     << num(ws.rho_plus(j)) << '\n';
    out.finish({{"kappa", ws.kappa}, {"tail_bound", ws.tail_bound}});
    return 0;
}

int cmd_kie_pressure(const Config& c) {
    const auto ts = parse_range(c.t);
    require(ts.size() == 1, "kie-pressure: --t must be a single value");
    const auto res = multiprime::kie_pressure(parse_observable(c.f), c.params(), ts[0], c.tol,
                                              arith::PrimeBasis(parse_list(c.primes)));
    Output out(c);
    out.stream() << "j,n_j,w_j,Psi_j,partial_sum,tail_bound\n";
    for (const auto& r : res.table)
        out.stream() << r.j << ',' << r.n_j << ',' << num(r.w_j) << ',' << num(r.psi_j) << ',' << num(r.partial_sum)
                     << ',' << num(r.tail_bound) << '\n';
    out.finish({{"value", res.value}, {"trunc_err", res.trunc_err}});
    return 0;
}

int cmd_verify(const Config& c) {
    Output out(c);
    const bool ok = verify::run_all(out.stream(), c.workers);
    out.finish({{"all_passed", ok}});
    return ok ? 0 : 1;
}

void error_json(const std::string& kind, const std::string& message) {
    std::cerr << json{{"error", kind}, {"message", message}}.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multiplicative Ising model toolkit"};
    app.set_help_flag("--help", "print help");
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "INI file of key = value settings; flags override it");
    Config c;

    app.add_option("--beta", c.beta, "inverse temperature")->capture_default_str();
    app.add_option("--J", c.J, "coupling")->capture_default_str();
    app.add_option("--h", c.h, "field")->capture_default_str();
    app.add_option("--bc-coupling", c.bc_coupling, "boundary term strength: J or 1")
        ->check(CLI::IsMember({"J", "1"}))
        ->capture_default_str();
    app.add_option("--tol", c.tol, "truncation tolerance")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--out", c.out, "output file (a .meta.json sidecar is written next to it)");
    app.add_option("--format", c.format, "csv, json, or bin (sample)")->capture_default_str();
    app.add_option("--workers", c.workers, "worker threads")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--seed", c.seed, "64-bit seed")->capture_default_str();

    auto* scgf = app.add_subcommand("scgf", "pressure F(t) of an observable on a t grid");
    auto* rate = app.add_subcommand("rate", "rate function I(x) by Legendre transform");
    auto* emp = app.add_subcommand("empirical", "sampled tail decay rates next to I(x)");
    for (auto* sub : {scgf, rate, emp}) {
        sub->add_option("--f", c.f, "observable, e.g. \"s[1]*s[2] + 0.5 s[3]\"")->capture_default_str();
        sub->add_option("--primes", c.primes, "base primes for non first-layer observables")->capture_default_str();
    }
    scgf->add_option("--t", c.t, "t grid a:b:step")->capture_default_str();
    rate->add_option("--x", c.x, "x grid a:b:step")->capture_default_str();
    rate->add_option("--t-max", c.t_max,
                     "largest |t| searched; default 20 for first-layer observables, 3 otherwise")
        ->check(CLI::PositiveNumber);
    rate->add_option("--t-step", c.t_step, "grid step for the tabulated smooth-number pressure (default t-max/30)")
        ->check(CLI::PositiveNumber);
    emp->add_option("--x", c.x, "threshold grid a:b:step")->capture_default_str();

    auto* fe = app.add_subcommand("free-energy", "free energy per unit N over [1,2N]");
    fe->add_option("--bc", c.bc, "free, plus, minus or all")->capture_default_str();

    auto* ent = app.add_subcommand("entropy", "Kolmogorov-Sinai entropy");
    ent->add_option("--mode", c.mode, "series, formula, formula-entrywise, closed or all")->capture_default_str();
    ent->add_flag("--bits", c.bits, "report in bits instead of nats");

    auto* smp = app.add_subcommand("sample", "sample configurations on [1,N]");
    auto* smb = app.add_subcommand("smb", "Shannon-McMillan-Breiman statistic on samples");
    for (auto* sub : {smp, smb, emp}) {
        sub->add_option("--N", c.N, "volume")->check(CLI::PositiveNumber)->capture_default_str();
        sub->add_option("--count", c.count, "replicas")->capture_default_str();
    }

    auto* inv = app.add_subcommand("invariance", "exact laws of (s_p) and (s_mp)");
    inv->add_option("--indices", c.indices, "comma-separated indices")->capture_default_str();
    inv->add_option("--m", c.m, "multiplier")->check(CLI::PositiveNumber)->capture_default_str();

    auto* kw = app.add_subcommand("kie-weights", "smooth-number weight series");
    kw->add_option("--primes", c.primes, "comma-separated primes")->capture_default_str();

    auto* kp = app.add_subcommand("kie-pressure", "smooth-number pressure series table at one t");
    kp->add_option("--f", c.f, "observable")->capture_default_str();
    kp->add_option("--t", c.t, "single t value")->required();
    kp->add_option("--primes", c.primes, "base primes")->capture_default_str();

    auto* ver = app.add_subcommand("verify", "run the acceptance suite");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        error_json("usage", e.what());
        return kExitUsage;
    }

    try {
        for (const auto* sub : app.get_subcommands()) c.command = sub->get_name();
        if (scgf->parsed()) return cmd_scgf(c);
        if (rate->parsed()) return cmd_rate(c);
        if (emp->parsed()) return cmd_empirical(c);
        if (fe->parsed()) return cmd_free_energy(c);
        if (ent->parsed()) return cmd_entropy(c);
        if (smp->parsed()) return cmd_sample(c);
        if (smb->parsed()) return cmd_smb(c);
        if (inv->parsed()) return cmd_invariance(c);
        if (kw->parsed()) return cmd_kie_weights(c);
        if (kp->parsed()) return cmd_kie_pressure(c);
        if (ver->parsed()) return cmd_verify(c);
    } catch (const Error& e) {
        const bool infeasible = e.kind() == ErrorKind::infeasible;
        error_json(infeasible ? "infeasible" : "precondition", e.what());
        return infeasible ? kExitInfeasible : kExitPrecondition;
    } catch (const std::exception& e) {
        error_json("precondition", e.what());
        return kExitPrecondition;
    }
    return kExitUsage;
}
