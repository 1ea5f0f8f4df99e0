#include "curvelab/arbitrage.hpp"
#include "curvelab/classifier.hpp"
#include "curvelab/cli.hpp"
#include "curvelab/error.hpp"
#include "curvelab/portfolio.hpp"
#include "curvelab/static_flow.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

namespace curvelab::cli {

namespace {

using nlohmann::json;

struct Options {
    std::string model;
    std::string params;
    std::string grid;
    std::string bundle;
    std::string payments = "1:1,3:1";
    std::string out;
    std::uint64_t seed = 0;
    int jobs = 1;
    int trials = 100;
    double elapsed = 0.0;
    bool exact = false;
};

class Csv {
public:
    Csv(std::ostream& out, bool exact) : out_(out), exact_(exact) {}

    void header(const std::vector<std::string>& names)
    {
        for (std::size_t i = 0; i < names.size(); ++i) {
            out_ << (i ? "," : "") << names[i];
        }
        out_ << '\n';
    }

    void row(const std::vector<double>& values)
    {
        for (std::size_t i = 0; i < values.size(); ++i) {
            out_ << (i ? "," : "") << format_number(values[i], exact_);
        }
        out_ << '\n';
    }

    void matrix(const Eigen::MatrixXd& m, const std::string& prefix)
    {
        std::vector<std::string> names;
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            names.push_back(prefix + std::to_string(j + 1));
        }
        header(names);
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            std::vector<double> r;
            for (Eigen::Index j = 0; j < m.cols(); ++j) {
                r.push_back(m(i, j));
            }
            row(r);
        }
    }

private:
    std::ostream& out_;
    bool exact_;
};

/// Writes to --out when given, otherwise to the standard stream.
class Sink {
public:
    Sink(const std::string& path, std::ostream& fallback)
    {
        if (!path.empty()) {
            file_.open(path);
            if (!file_) {
                throw DomainError("cannot write " + path);
            }
        }
        stream_ = path.empty() ? &fallback : &file_;
    }
    std::ostream& stream() { return *stream_; }

private:
    std::ofstream file_;
    std::ostream* stream_ = nullptr;
};

Params to_params(const std::vector<double>& v)
{
    Params p(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
        p[static_cast<Eigen::Index>(i)] = v[i];
    }
    return p;
}

ModelConfig require_model(const Options& o)
{
    if (o.model.empty()) {
        throw DomainError("--model is required");
    }
    return load_model_config(o.model);
}

Params model_params(const Options& o, const ModelConfig& config, const LinearModel& model, bool zero_default)
{
    Params p;
    if (!o.params.empty()) {
        p = to_params(parse_real_list(o.params));
    } else if (config.params) {
        p = *config.params;
    } else if (zero_default) {
        p = Params::Zero(static_cast<Eigen::Index>(model.dimension()));
    } else {
        throw DomainError("parameters required: pass --params or set 'params' in the model file");
    }
    model.check_dimension(p);
    return p;
}

double flat_rate(const Options& o, double fallback)
{
    if (o.params.empty()) {
        return fallback;
    }
    const auto v = parse_real_list(o.params);
    if (v.size() != 1) {
        throw DomainError("a single flat rate is expected in --params");
    }
    return v.front();
}

std::vector<double> grid_or(const Options& o, const std::string& fallback)
{
    return parse_grid(o.grid.empty() ? fallback : o.grid);
}

Bundle require_bundle(const Options& o)
{
    if (o.bundle.empty()) {
        throw DomainError("a bundle file is required");
    }
    return load_bundle(o.bundle);
}

json matrix_json(const Eigen::MatrixXd& m)
{
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json r = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            r.push_back(m(i, j));
        }
        rows.push_back(r);
    }
    return rows;
}

void warn_positivity(const LinearModel& model, const Params& r, bool strict, std::ostream& err)
{
    try {
        if (!in_positive_domain(model, r, strict)) {
            err << "warning: parameters are outside the positive domain\n";
        }
    } catch (const NumericalError& e) {
        err << "warning: positivity undecided: " << e.what() << '\n';
    }
}

int cmd_eval(const Options& o, std::ostream& out, std::ostream& err)
{
    const auto config = require_model(o);
    const auto model = config.model();
    const auto r = model_params(o, config, model, false);
    warn_positivity(model, r, config.strict, err);
    Sink sink(o.out, out);
    Csv csv(sink.stream(), o.exact);
    csv.header({"t", "yield", "logprice", "price"});
    for (double t : grid_or(o, "0:10:1")) {
        const double l = model.log_price(r, t);
        csv.row({t, model.yield(r, t), l, std::exp(-l)});
    }
    return 0;
}

int cmd_price(const Options& o, std::ostream& out, std::ostream& err)
{
    const auto config = require_model(o);
    const auto model = config.model();
    const auto r = model_params(o, config, model, false);
    const auto x = require_bundle(o);
    Sink sink(o.out, out);
    Csv csv(sink.stream(), o.exact);
    csv.header({"time", "amount", "price", "present_value"});
    for (const auto& e : x) {
        const double p = model.price(r, e.time);
        csv.row({e.time, e.amount, p, p * e.amount});
    }
    err << "total present value: " << format_number(present_value(x, model, r), o.exact) << '\n';
    return 0;
}

CashAllocation flat_cash(const Bundle& x, double rate)
{
    std::vector<DatedAmount> z;
    for (const auto& e : x) {
        z.push_back({e.time, std::exp(-rate * e.time) * e.amount});
    }
    return CashAllocation(std::move(z));
}

int cmd_duration(const Options& o, std::ostream& out)
{
    const auto x = require_bundle(o);
    const double rate = flat_rate(o, 0.0);
    Csv csv(out, o.exact);
    csv.header({"duration"});
    csv.row({duration(flat_cash(x, rate))});
    if (!o.out.empty()) {
        Sink sink(o.out, out);
        write_bundle(sink.stream(), immunize_flat(x, rate), o.exact);
    }
    return 0;
}

int cmd_immunize(const Options& o, std::ostream& out)
{
    const auto x = require_bundle(o);
    const double rate = flat_rate(o, 0.0);
    const auto immunized = immunize_flat(x, rate);
    Sink sink(o.out, out);
    Csv csv(sink.stream(), o.exact);
    csv.header({"time", "amount"});
    for (const auto& e : immunized) {
        csv.row({e.time, e.amount});
    }
    return 0;
}

int cmd_flow(const Options& o, std::ostream& out)
{
    const auto config = require_model(o);
    const auto model = config.model();
    const auto r = model_params(o, config, model, false);
    const auto flow = generator(model);
    Sink sink(o.out, out);
    Csv csv(sink.stream(), o.exact);
    std::vector<std::string> names = {"h"};
    for (std::size_t i = 0; i < model.dimension(); ++i) {
        names.push_back("r" + std::to_string(i + 1));
    }
    csv.header(names);
    for (double h : grid_or(o, "0:10:1")) {
        const Params moved = fundamental_solution(flow, h).E.transpose() * r;
        std::vector<double> row = {h};
        row.insert(row.end(), moved.data(), moved.data() + moved.size());
        csv.row(row);
    }
    return 0;
}

json nla_json(const NlaCertificate& cert, const NlaReport& report)
{
    json j;
    j["summary"] = "NLA: " + cert.nla_case.describe();
    j["trials"] = report.trials;
    j["successes"] = report.successes;
    j["skipped"] = report.skipped;
    j["failures"] = report.failures.size();
    j["injectivity"] = report.injectivity;
    j["sum_sq_in_span"] = cert.sum_sq.has_value();
    j["identity_error"] = std::isnan(report.identity_error) ? json() : json(report.identity_error);
    j["passed"] = report.passed();
    if (!report.failures.empty()) {
        json z = json::array();
        for (const auto& e : report.failures.front()) {
            z.push_back({e.time, e.amount});
        }
        j["first_failure"] = z;
    }
    return j;
}

void write_file(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body)
{
    std::ofstream f(path);
    if (!f) {
        throw DomainError("cannot write " + path.string());
    }
    body(f);
}

int cmd_arbitrage(const Options& o, std::ostream& out)
{
    const auto config = require_model(o);
    const auto model = config.model();
    const auto r_star = model_params(o, config, model, true);
    json j;
    j["model"] = config.name;
    j["exponents"] = to_string(model.exponents());
    j["dimension"] = model.dimension();

    if (!arbitrage_hypothesis(model.exponents())) {
        const auto c = theorem_case(model.exponents());
        j["status"] = "hypothesis-violated";
        j["witness"] = to_string(*c.witness);
        json all = json::array();
        for (const auto& w : c.witnesses) {
            all.push_back(to_string(w));
        }
        j["witnesses"] = all;
        j["theorem_case"] = c.describe();
        int code = 0;
        if (c.tag == CaseTag::Case4) {
            j["nla"] = {{"summary", "NLA: " + c.describe()}, {"status", "anomalous"}};
        } else {
            const auto cert = standard_nla_basis(c, model);
            DescentOptions options;
            options.jobs = o.jobs;
            const auto report = verify_nla_certificate(cert, model, o.trials, o.seed, options);
            j["nla"] = nla_json(cert, report);
            code = report.passed() ? 0 : 2;
        }
        out << j.dump(2) << '\n';
        return code;
    }

    const auto result = construct_arbitrage(model, r_star, o.seed);
    const auto& cert = result.certificate;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cert.model_hessian, Eigen::EigenvaluesOnly);
    j["status"] = "arbitrage";
    j["r_star"] = std::vector<double>(r_star.data(), r_star.data() + r_star.size());
    j["support_times"] = cert.support_times;
    json z = json::array();
    for (const auto& e : cert.z) {
        z.push_back(e.amount);
    }
    j["z"] = z;
    json x = json::array();
    for (const auto& e : result.bundle) {
        x.push_back(e.amount);
    }
    j["x"] = x;
    json constants = json::array();
    for (const auto& [q, c] : cert.constants) {
        constants.push_back({{"exponent", to_string(q)}, {"value", c}});
    }
    j["constants"] = constants;
    j["log_hessian"] = matrix_json(cert.hessian);
    j["hessian"] = matrix_json(cert.model_hessian);
    j["eigenvalues"] = std::vector<double>(eig.eigenvalues().data(),
                                           eig.eigenvalues().data() + eig.eigenvalues().size());
    j["value"] = result.value;
    j["gradient_norm"] = result.gradient_norm;
    j["sphere_min"] = result.sphere_min;
    j["moment_residual"] = cert.residual;
    j["condition"] = cert.condition;
    j["time_family"] = cert.time_family;

    if (!o.out.empty()) {
        const std::filesystem::path dir(o.out);
        std::filesystem::create_directories(dir);
        write_file(dir / "support.csv", [&](std::ostream& f) {
            Csv csv(f, o.exact);
            csv.header({"time", "z", "x"});
            auto xi = result.bundle.begin();
            for (const auto& e : cert.z) {
                csv.row({e.time, e.amount, (xi++)->amount});
            }
        });
        write_file(dir / "hessian.csv", [&](std::ostream& f) { Csv(f, o.exact).matrix(cert.model_hessian, "L"); });
        write_file(dir / "log_hessian.csv", [&](std::ostream& f) { Csv(f, o.exact).matrix(cert.hessian, "l"); });
        write_file(dir / "eigenvalues.csv", [&](std::ostream& f) {
            Csv csv(f, o.exact);
            csv.header({"index", "eigenvalue"});
            for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) {
                csv.row({static_cast<double>(i + 1), eig.eigenvalues()[i]});
            }
        });
    }
    out << j.dump(2) << '\n';
    return 0;
}

int cmd_nla_verify(const Options& o, std::ostream& out)
{
    const auto config = require_model(o);
    const auto model = config.model();
    const auto c = theorem_case(model.exponents());
    if (c.tag == CaseTag::None) {
        throw DomainError("the arbitrage-everywhere hypothesis holds for this model; it has no NLA certificate");
    }
    const auto cert = standard_nla_basis(c, model);
    DescentOptions options;
    options.jobs = o.jobs;
    const auto report = verify_nla_certificate(cert, model, o.trials, o.seed, options);
    json j = nla_json(cert, report);
    j["model"] = config.name;
    out << j.dump(2) << '\n';
    return report.passed() ? 0 : 2;
}

int cmd_classify(const Options& o, std::ostream& out)
{
    const auto config = require_model(o);
    const auto report = classify_simple(config.model().exponents());
    out << report.summary() << '\n';
    out << "theorem_case: " << report.nla_case.describe() << '\n';
    out << "long_rates_exist: " << (report.long_rates_exist ? "true" : "false") << '\n';
    out << "includes_flat: " << (report.includes_flat ? "true" : "false") << '\n';
    out << "domain_nonempty: " << (report.domain_nonempty ? "true" : "false") << '\n';
    return 0;
}

int cmd_demo_flat(const Options& o, std::ostream& out)
{
    const double r_star = flat_rate(o, 0.05);
    std::vector<DatedAmount> x;
    std::istringstream items(o.payments);
    std::string item;
    while (std::getline(items, item, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) {
            throw DomainError("payments must be time:amount pairs, got '" + item + "'");
        }
        const auto t = parse_real_list(item.substr(0, colon));
        const auto z = parse_real_list(item.substr(colon + 1));
        if (t.size() != 1 || z.size() != 1) {
            throw DomainError("payments must be time:amount pairs, got '" + item + "'");
        }
        x.push_back({t[0], z[0] * std::exp(r_star * t[0])});
    }
    const auto immunized = immunize_flat(Bundle(std::move(x)), r_star);
    Sink sink(o.out, out);
    Csv csv(sink.stream(), o.exact);
    csv.header({"r", "value"});
    for (double r : grid_or(o, "0.01:0.10:0.01")) {
        csv.row({r, immunized_value(immunized, r, o.elapsed)});
    }
    return 0;
}

std::uint64_t default_seed()
{
    if (const char* env = std::getenv("CURVELAB_SEED")) {
        std::uint64_t v = 0;
        const std::string s(env);
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size()) {
            throw DomainError("CURVELAB_SEED must be an unsigned integer");
        }
        return v;
    }
    return 0;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    Options o;
    try {
        o.seed = default_seed();
    } catch (const DomainError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }

    CLI::App app{"Linear yield curve models: evaluation, immunization, static flow, arbitrage"};
    app.require_subcommand(1);

    auto model_opt = [&](CLI::App* s) { s->add_option("--model", o.model, "model config file"); };
    auto params_opt = [&](CLI::App* s, const char* help) { s->add_option("--params", o.params, help); };
    auto grid_opt = [&](CLI::App* s, const char* help) { s->add_option("--grid", o.grid, help); };
    auto common = [&](CLI::App* s) {
        s->add_flag("--exact", o.exact, "shortest round-trip number output");
        s->add_option("--out", o.out, "output file (directory for arbitrage)");
    };
    auto search = [&](CLI::App* s) {
        s->add_option("--seed", o.seed, "random seed (default 0 or CURVELAB_SEED)");
        s->add_option("--jobs", o.jobs, "worker threads for the descent search")->check(CLI::PositiveNumber);
        s->add_option("--trials", o.trials, "random allocations tested for NLA")->check(CLI::NonNegativeNumber);
    };

    std::vector<std::pair<CLI::App*, std::function<int()>>> commands;

    auto* eval = app.add_subcommand("eval", "CSV of t, yield, logprice, price");
    model_opt(eval);
    params_opt(eval, "comma-separated parameter vector");
    grid_opt(eval, "time grid start:stop:step (default 0:10:1)");
    common(eval);
    commands.emplace_back(eval, [&] { return cmd_eval(o, out, err); });

    auto* price = app.add_subcommand("price", "present value of a bundle file");
    model_opt(price);
    params_opt(price, "comma-separated parameter vector");
    price->add_option("bundle", o.bundle, "bundle file")->required();
    common(price);
    commands.emplace_back(price, [&] { return cmd_price(o, out, err); });

    auto* dur = app.add_subcommand("duration", "duration of a bundle under a flat rate");
    params_opt(dur, "flat rate r* (default 0)");
    dur->add_option("bundle", o.bundle, "bundle file")->required();
    common(dur);
    commands.emplace_back(dur, [&] { return cmd_duration(o, out); });

    auto* imm = app.add_subcommand("immunize", "finance a bundle by one sale at its duration");
    params_opt(imm, "flat rate r* (default 0)");
    imm->add_option("bundle", o.bundle, "bundle file")->required();
    common(imm);
    commands.emplace_back(imm, [&] { return cmd_immunize(o, out); });

    auto* flow = app.add_subcommand("flow", "CSV of the static price flow phi_h(r)");
    model_opt(flow);
    params_opt(flow, "comma-separated parameter vector");
    grid_opt(flow, "shift grid start:stop:step (default 0:10:1)");
    common(flow);
    commands.emplace_back(flow, [&] { return cmd_flow(o, out); });

    auto* arb = app.add_subcommand("arbitrage", "construct a strict local arbitrage or verify NLA");
    model_opt(arb);
    params_opt(arb, "current parameters r* (default: model params or zero)");
    search(arb);
    common(arb);
    commands.emplace_back(arb, [&] { return cmd_arbitrage(o, out); });

    auto* nla = app.add_subcommand("nla-verify", "run the NLA certificate and descent search");
    model_opt(nla);
    search(nla);
    common(nla);
    commands.emplace_back(nla, [&] { return cmd_nla_verify(o, out); });

    auto* cls = app.add_subcommand("classify", "theorem case and simple-model label");
    model_opt(cls);
    commands.emplace_back(cls, [&] { return cmd_classify(o, out); });

    auto* demo = app.add_subcommand("demo-flat-arbitrage", "immunized flat-rate bond value table");
    params_opt(demo, "flat rate r* (default 0.05)");
    demo->add_option("--payments", o.payments, "cash allocation time:amount,... (default 1:1,3:1)");
    grid_opt(demo, "rate grid start:stop:step (default 0.01:0.10:0.01)");
    demo->add_option("--elapsed", o.elapsed, "time h elapsed before the rate shift (default 0)");
    common(demo);
    commands.emplace_back(demo, [&] { return cmd_demo_flat(o, out); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? 0 : 1;
    }

    try {
        for (auto& [sub, run] : commands) {
            if (sub->parsed()) {
                return run();
            }
        }
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}

} // namespace curvelab::cli
