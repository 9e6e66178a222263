// capmetric: capacities, isocapacitary constants, and Sobolev-Poincare
// inequality verification on finite discrete metric measure spaces.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "capmetric/constants.hpp"
#include "capmetric/json.hpp"
#include "capmetric/verify.hpp"

using namespace capmetric;

namespace {

struct Options {
    std::string space_path;
    std::string omega, set, inner, outer;
    double p = 2, q = 2;
    uint64_t seed = 1;
    int enum_cap = 18;
    double tolerance = 1e-9;
    std::string output;
    std::string format = "json";
    double tau = 1;
    double rmax = 0;
    bool global = false;
    int max_chain_len = 4;
    int samples = 64;
    long profile_samples = 0;
    std::string fn_class = "zero-boundary";
    std::string grid;
    std::string theorem;
    double inject_nu_scale = 1.0;
};

void write_output(const Options& o, const std::string& text) {
    if (o.output.empty() || o.output == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(o.output, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file '" + o.output + "'");
    out << text;
}

Space load_space_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SpaceError("cannot open space file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return Space::load(buf.str());
}

Json ids_json(const Space& s, const std::vector<int>& set) {
    Json arr = Json::array();
    for (int v : set) arr.push(s.id(v));
    return arr;
}

Json field_json(const Space& s, const ScalarField& u) {
    Json obj = Json::object();
    for (int v = 0; v < s.vertex_count(); ++v) obj.set(s.id(v), u[v]);
    return obj;
}

Json capacity_result_json(const Space& s, const CapacityResult& res) {
    Json j = Json::object();
    j.set("value", res.value)
        .set("extremal", field_json(s, res.extremal))
        .set("residual", res.residual)
        .set("iterations", int64_t(res.iterations))
        .set("certified_lower", res.certified_lower)
        .set("converged", res.converged);
    return j;
}

Json isocap_json(const Space& s, const IsocapConstant& c, uint64_t seed, bool exact) {
    Json wit = Json::array();
    for (const auto& set : c.witness) wit.push(ids_json(s, set));
    Json j = Json::object();
    j.set("value", c.infinite ? std::numeric_limits<double>::infinity() : c.value)
        .set("witness", std::move(wit))
        .set("mode", isocap_mode_name(c.mode))
        .set("p", c.p)
        .set("q", c.q)
        .set("rng_seed", seed)
        .set("enumeration_exact", exact);
    return j;
}

Json sobolev_json(const Space& s, const SobolevEstimate& est, double p, double q,
                  const std::string& cls) {
    Json j = Json::object();
    j.set("lower", est.lower)
        .set("upper", est.upper)
        .set("witness", field_json(s, est.witness))
        .set("seeds_used", int64_t(est.seeds_used))
        .set("restarts", int64_t(est.restarts))
        .set("gamma", est.gamma)
        .set("p", p)
        .set("q", q)
        .set("class", cls)
        .set("rng_seed", est.rng_seed)
        .set("enumeration_exact", est.enumeration_exact);
    return j;
}

int run_command(const std::string& cmd, const Options& o) {
    Space space = load_space_file(o.space_path);
    std::optional<Domain> domain;
    if (!o.omega.empty()) domain.emplace(space, parse_vertex_set(space, o.omega));

    auto need_domain = [&]() -> const Domain& {
        if (!domain) throw std::invalid_argument(cmd + " needs --omega");
        return *domain;
    };

    if (cmd == "cap" || cmd == "con" || cmd == "global-cap") {
        CapacityResult res;
        if (cmd == "cap") {
            CapacityProblem prob{need_domain(), parse_vertex_set(space, o.set), std::nullopt, o.p};
            res = capacity(prob);
        } else if (cmd == "con") {
            CapacityProblem prob{need_domain(), parse_vertex_set(space, o.inner),
                                 parse_vertex_set(space, o.outer), o.p};
            res = conductivity(prob);
        } else {
            res = global_capacity(space, parse_vertex_set(space, o.set), o.p);
        }
        write_output(o, capacity_result_json(space, res).dump() + "\n");
        return 0;
    }
    if (cmd == "lambda-profile") {
        ProfileOptions popt;
        popt.enumeration_cap = o.enum_cap;
        popt.global = o.global;
        popt.samples = o.profile_samples;
        popt.rng_seed = o.seed;
        CapacityProfile prof = capacity_profile(need_domain(), o.p, space.nu_values(), popt);
        Json masses = Json::array(), values = Json::array();
        for (double m : prof.masses) masses.push(m);
        for (double v : prof.values) values.push(v);
        Json j = Json::object();
        j.set("masses", std::move(masses))
            .set("values", std::move(values))
            .set("nu_omega", prof.nu_omega)
            .set("p", o.p)
            .set("enumeration_exact", prof.exact);
        write_output(o, j.dump() + "\n");
        return 0;
    }
    if (cmd == "content") {
        ContentOptions copt;
        if (o.rmax > 0) copt.r_max = o.rmax;
        std::vector<ContentBall> witness;
        double value = hausdorff_content(space, parse_vertex_set(space, o.set), copt, &witness);
        Json balls = Json::array();
        for (const auto& b : witness) {
            Json bj = Json::object();
            bj.set("center", space.id(b.center))
                .set("radius", b.radius)
                .set("set", ids_json(space, b.set))
                .set("cost", b.cost);
            balls.push(std::move(bj));
        }
        Json j = Json::object();
        j.set("value", value).set("witness", std::move(balls));
        write_output(o, j.dump() + "\n");
        return 0;
    }
    if (cmd == "gamma") {
        auto g = gamma_subset(need_domain(), o.p, o.q, space.nu_values(), o.enum_cap);
        write_output(o, isocap_json(space, g, o.seed, true).dump() + "\n");
        return 0;
    }
    if (cmd == "gamma-ball") {
        auto g = gamma_ball(space, o.q);
        write_output(o, isocap_json(space, g, o.seed, true).dump() + "\n");
        return 0;
    }
    if (cmd == "gamma-chain") {
        auto g = gamma_chain(need_domain(), o.p, o.q, o.max_chain_len, std::min(o.enum_cap, 12));
        write_output(o, isocap_json(space, g, o.seed, true).dump() + "\n");
        return 0;
    }
    if (cmd == "c-integral") {
        ProfileOptions popt;
        popt.enumeration_cap = o.enum_cap;
        popt.global = o.global;
        popt.rng_seed = o.seed;
        double c = integral_criterion(need_domain(), o.p, o.q, space.nu_values(), popt);
        Json j = Json::object();
        j.set("value", c).set("p", o.p).set("q", o.q).set("rng_seed", o.seed);
        write_output(o, j.dump() + "\n");
        return 0;
    }
    if (cmd == "sobolev" || cmd == "hardy") {
        SobolevOptions sopt;
        sopt.p = o.p;
        sopt.q = cmd == "hardy" ? o.p : o.q;
        sopt.cls = o.fn_class == "median-centered" ? FnClass::MedianCentered : FnClass::ZeroBoundary;
        sopt.rng_seed = o.seed;
        sopt.enumeration_cap = o.enum_cap;
        sopt.max_chain_length = o.max_chain_len;
        if (cmd == "sobolev") {
            auto est = sobolev_constant(need_domain(), space.nu_values(), sopt);
            write_output(o, sobolev_json(space, est, sopt.p, sopt.q, o.fn_class).dump() + "\n");
        } else {
            auto res = hardy_constant(need_domain(), o.p, sopt);
            Json j = sobolev_json(space, res.estimate, o.p, o.p, "zero-boundary");
            j.set("gamma_weighted", isocap_json(space, res.gamma_weighted, o.seed, true));
            Json w = Json::object();
            for (int v : need_domain().omega) w.set(space.id(v), res.weight[v]);
            j.set("weight", std::move(w));
            write_output(o, j.dump() + "\n");
        }
        return 0;
    }
    if (cmd == "poincare") {
        PoincareOptions popt;
        popt.tau = o.tau;
        popt.rng_seed = o.seed;
        popt.n_random = o.samples;
        double c = poincare_estimate(space, o.p, popt);
        Json j = Json::object();
        j.set("value", c).set("p", o.p).set("tau", o.tau).set("rng_seed", o.seed);
        write_output(o, j.dump() + "\n");
        return 0;
    }
    if (cmd == "verify") {
        CheckOptions copt;
        copt.p = o.p;
        copt.q = o.q;
        copt.n_random = o.samples;
        copt.rng_seed = o.seed;
        copt.tolerance = o.tolerance;
        copt.enumeration_cap = o.enum_cap;
        copt.max_chain_length = o.max_chain_len;
        copt.nu_witness_scale = o.inject_nu_scale;
        std::optional<std::vector<int>> conint_g;
        if (!o.outer.empty()) conint_g = parse_vertex_set(space, o.outer);
        VerifyReport rep = run_check(o.theorem, space, domain ? &*domain : nullptr,
                                     conint_g ? &*conint_g : nullptr, copt);
        write_output(o, rep.to_json_text());
        return rep.verdict ? 0 : 1;
    }
    if (cmd == "sweep") {
        // Grid literal: semicolon-separated p:q pairs.
        std::vector<std::pair<double, double>> grid;
        std::istringstream in(o.grid);
        std::string tok;
        while (std::getline(in, tok, ';')) {
            if (tok.empty()) continue;
            auto colon = tok.find(':');
            if (colon == std::string::npos)
                throw std::invalid_argument("grid entry '" + tok + "' is not p:q");
            grid.emplace_back(std::stod(tok.substr(0, colon)), std::stod(tok.substr(colon + 1)));
        }
        std::string csv = "p,q,mode,gamma,c_s_lower,c_s_upper,c_integral,verdict,error\n";
        for (auto [p, q] : grid) {
            std::string mode, gamma_s, lo_s, hi_s, ci_s, verdict_s, err_s;
            try {
                const Domain& d = need_domain();
                CheckOptions copt;
                copt.p = p;
                copt.q = q;
                copt.n_random = o.samples;
                copt.rng_seed = o.seed;
                copt.tolerance = o.tolerance;
                copt.enumeration_cap = o.enum_cap;
                copt.max_chain_length = o.max_chain_len;
                SobolevOptions sopt;
                sopt.p = p;
                sopt.q = q;
                sopt.rng_seed = o.seed;
                sopt.enumeration_cap = o.enum_cap;
                sopt.max_chain_length = o.max_chain_len;
                SobolevEstimate est = sobolev_constant(d, space.nu_values(), sopt);
                lo_s = fmt17(est.lower);
                hi_s = fmt17(est.upper);
                if (p <= q) {
                    mode = "subset";
                    gamma_s = fmt17(gamma_subset(d, p, q, space.nu_values(), o.enum_cap).value);
                    verdict_s = check_sobolev_pq(d, copt).verdict ? "pass" : "fail";
                } else {
                    mode = "chain";
                    gamma_s = fmt17(
                        gamma_chain(d, p, q, o.max_chain_len, std::min(o.enum_cap, 12)).value);
                    ProfileOptions popt;
                    popt.enumeration_cap = o.enum_cap;
                    ci_s = fmt17(integral_criterion(d, p, q, space.nu_values(), popt));
                    bool ok = check_qp(d, copt).verdict && check_integral_criterion(d, copt).verdict;
                    verdict_s = ok ? "pass" : "fail";
                }
            } catch (const std::exception& e) {
                verdict_s = "error";
                err_s = e.what();
                for (char& c : err_s)
                    if (c == ',' || c == '\n') c = ';';
            }
            csv += fmt17(p) + "," + fmt17(q) + "," + mode + "," + gamma_s + "," + lo_s + "," +
                   hi_s + "," + ci_s + "," + verdict_s + "," + err_s + "\n";
        }
        write_output(o, csv);
        return 0;
    }
    throw std::invalid_argument("unknown command '" + cmd + "'");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"capacities and Sobolev-Poincare constants on finite metric measure spaces"};
    app.require_subcommand(1);

    Options o;
    std::string cmd_name;

    auto add_common = [&](CLI::App* sub, bool needs_space = true) {
        auto* opt = sub->add_option("--space", o.space_path, "space file (format v1)");
        if (needs_space) opt->required();
        sub->add_option("--omega", o.omega, "domain vertices, comma-separated ids");
        sub->add_option("-p,--p", o.p, "exponent p");
        sub->add_option("-q,--q", o.q, "exponent q");
        sub->add_option("--seed", o.seed, "rng seed (recorded in output)");
        sub->add_option("--enum-cap", o.enum_cap, "exhaustive enumeration cap");
        sub->add_option("--tolerance", o.tolerance, "verification tolerance");
        sub->add_option("--output", o.output, "output path (default stdout)");
        sub->add_option("--format", o.format, "json or csv");
        sub->add_option("--max-chain-len", o.max_chain_len, "chain length cap");
        sub->add_option("--samples", o.samples, "random sample count");
    };

    std::vector<std::pair<std::string, std::string>> verbs = {
        {"cap", "relative p-capacity cap_p(E, Omega)"},
        {"con", "p-conductivity con_p(F, G, Omega)"},
        {"global-cap", "capacity against the far-field boundary"},
        {"lambda-profile", "capacity profile lambda_p(s)"},
        {"content", "co-dimension-one Hausdorff content"},
        {"gamma", "subset isocapacitary constant (p <= q)"},
        {"gamma-ball", "ball isocapacitary constant (p = 1)"},
        {"gamma-chain", "nested-chain isocapacitary constant (q < p)"},
        {"c-integral", "integral criterion constant (q < p)"},
        {"sobolev", "best Sobolev constant estimate"},
        {"hardy", "Hardy constant estimate and weighted gamma"},
        {"poincare", "weak (1,p)-Poincare constant estimate"},
        {"verify", "run a theorem checker and emit its report"},
        {"sweep", "gamma and Sobolev constants over a (p,q) grid"},
    };
    for (auto& [name, desc] : verbs) {
        auto* sub = app.add_subcommand(name, desc);
        add_common(sub);
        if (name == "cap" || name == "global-cap" || name == "content")
            sub->add_option("--set", o.set, "vertex set, comma-separated ids")->required();
        if (name == "con") {
            sub->add_option("--inner", o.inner, "inner set F")->required();
            sub->add_option("--outer", o.outer, "outer set G")->required();
        }
        if (name == "content") sub->add_option("--rmax", o.rmax, "radius cap (default diameter)");
        if (name == "lambda-profile" || name == "c-integral") {
            sub->add_flag("--global", o.global, "use the far-field capacity in lambda_p");
            sub->add_option("--profile-sample", o.profile_samples,
                            "sampling fallback past the enumeration cap");
        }
        if (name == "sobolev")
            sub->add_option("--class", o.fn_class, "zero-boundary or median-centered");
        if (name == "poincare") sub->add_option("--tau", o.tau, "ball dilation factor");
        if (name == "verify") {
            sub->add_option("theorem", o.theorem,
                            "qpey|capaint|sobolev-pq|ball-p1|qp|integral|conductivity|conint|hardy")
                ->required();
            sub->add_option("--outer", o.outer, "G for conint");
            sub->add_option("--inject-nu-scale", o.inject_nu_scale,
                            "failure-injection self-test hook");
        }
        if (name == "sweep") sub->add_option("--grid", o.grid, "semicolon list of p:q pairs")->required();
        sub->callback([&, name] { cmd_name = name; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        return run_command(cmd_name, o);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
