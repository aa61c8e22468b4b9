#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <openssl/evp.h>

#include <mdht/mdht.hpp>

using nlohmann::json;

namespace {

constexpr int kExitPrecondition = 2;
constexpr int kExitAudit = 3;

std::string sha256_hex(const std::string& bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned len = 0;
    EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr);
    static const char* hex = "0123456789abcdef";
    std::string s;
    for (unsigned i = 0; i < len; ++i) {
        s += hex[md[i] >> 4];
        s += hex[md[i] & 15];
    }
    return s;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    mdht::require(bool(in), "cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Every input that shaped an output is fingerprinted into it.
struct Digests {
    json entries = json::object();
    void file(const std::string& name, const std::string& path) { entries[name] = sha256_hex(slurp(path)); }
    void text(const std::string& name, const std::string& s) { entries[name] = sha256_hex(s); }
};

json parse_json_file(const std::string& path) {
    try {
        return json::parse(slurp(path));
    } catch (const json::parse_error& e) {
        throw mdht::PreconditionError("'" + path + "' is not valid JSON: " + e.what());
    }
}

void emit(const std::string& out, const std::string& text) {
    if (out.empty() || out == "-") {
        std::cout << text;
        return;
    }
    std::ofstream f(out, std::ios::binary);
    mdht::require(bool(f), "cannot open '" + out + "' for writing");
    f << text;
}

void emit_json(const std::string& out, json j, const Digests& d) {
    j["tool_version"] = mdht::kVersion;
    j["input_digests"] = d.entries;
    emit(out, j.dump(2) + "\n");
}

template <class T>
std::vector<T> split_list(const std::string& s, char sep, T (*conv)(const std::string&)) {
    std::vector<T> out;
    if (s.empty()) return out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(conv(item));
    return out;
}

std::size_t to_size(const std::string& s) { return static_cast<std::size_t>(std::stoull(s)); }
double to_real(const std::string& s) { return std::stod(s); }

std::vector<mdht::Point> polyline_of(const json& j) {
    std::vector<mdht::Point> poly;
    if (!j.contains("polyline")) return poly;
    for (const auto& row : j.at("polyline")) {
        mdht::Point p;
        for (const auto& c : row) p.push_back(mdht::parse_rational(c.get<std::string>()));
        poly.push_back(std::move(p));
    }
    return poly;
}

json points_json(const std::vector<mdht::Point>& pts) {
    json a = json::array();
    for (const auto& p : pts) {
        json row = json::array();
        for (const auto& c : p) row.push_back(mdht::to_string(c));
        a.push_back(row);
    }
    return a;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Directional Hilbert transform toolkit: probes, covers, certificates and sweeps"};
    app.set_version_flag("--version", std::string(mdht::kVersion));
    app.require_subcommand(1);

    std::string out, dirs_path, field_path, cover_path, cert_path, report_path, csv_path;
    std::string family, params, suite = "sharpness+random", strategy, grid, box, model = "logN", kind = "random";
    std::string v_text;
    std::uint64_t seed = 1;
    std::size_t random_count = 8, samples = 10000;
    int rounds = 2;
    long long group = 2;
    bool exact = false;
    double spacing = 0.5;

    auto* gen = app.add_subcommand("gen", "generate a direction set or a probe field");
    gen->add_option("--family", family, "uniform | uniform2 | lacunary | boustrophedon");
    gen->add_option("--params", params, "family parameters, e.g. N=16 or R=3;M=4");
    gen->add_option("--dirs", dirs_path, "direction set; with it, a probe field is generated instead");
    gen->add_option("--kind", kind, "probe field kind: sharpness | random")->capture_default_str();
    gen->add_option("--seed", seed)->capture_default_str();
    gen->add_option("--grid", grid, "grid shape, e.g. 256x256");
    gen->add_option("--box", box, "box side lengths, e.g. 128x64");
    gen->add_option("-o", out, "output path (default stdout; required for fields)");

    auto* apply = app.add_subcommand("apply", "apply H_v, or the maximal operator over a set, to a field");
    apply->add_option("--field", field_path)->required();
    apply->add_option("--dirs", dirs_path, "apply the maximal operator over this set");
    apply->add_option("--v", v_text, "apply a single H_v, e.g. 1/3,1/2");
    apply->add_option("-o", out)->required();

    auto* estimate = app.add_subcommand("estimate", "Rayleigh-quotient lower estimate of the operator norm");
    estimate->add_option("--dirs", dirs_path)->required();
    estimate->add_option("--suite", suite)->capture_default_str();
    estimate->add_option("--seed", seed)->capture_default_str();
    estimate->add_option("--random", random_count, "number of random probes")->capture_default_str();
    estimate->add_option("--grid", grid, "grid shape, e.g. 512x256");
    estimate->add_option("--box", box, "box side lengths");
    estimate->add_option("--spacing", spacing)->capture_default_str();
    estimate->add_option("-o", out);

    auto* partition = app.add_subcommand("partition", "cover a direction set by connected cells");
    partition->add_option("--dirs", dirs_path)->required();
    partition->add_option("--strategy", strategy, "grid | curve | hamsandwich")->required();
    partition->add_option("--rounds", rounds)->capture_default_str();
    partition->add_option("--group", group, "points per axis group (grid) or per arc (curve)")->capture_default_str();
    partition->add_option("-o", out);

    auto* stab = app.add_subcommand("stab", "supremum of the stabbing count of a cover");
    stab->add_option("--cover", cover_path)->required();
    stab->add_flag("--exact", exact, "exact arithmetic over all combinatorial lines (plane only)");
    stab->add_option("--samples", samples)->capture_default_str();
    stab->add_option("--seed", seed)->capture_default_str();
    stab->add_option("-o", out);

    auto* certify = app.add_subcommand("certify", "build an upper-bound certificate");
    certify->add_option("--dirs", dirs_path)->required();
    certify->add_option("--strategy", strategy)->required();
    certify->add_option("--rounds", rounds, "hamsandwich rounds when not given in the strategy");
    certify->add_option("-o", out);

    auto* audit = app.add_subcommand("audit", "check a certificate against a measured report");
    audit->add_option("--cert", cert_path)->required();
    audit->add_option("--report", report_path)->required();

    auto* sweep = app.add_subcommand("sweep", "estimate and certify across a parameter grid");
    sweep->add_option("--family", family)->required();
    sweep->add_option("--params", params, "e.g. N=4,8,16,32,64")->required();
    sweep->add_option("--suite", suite)->capture_default_str();
    sweep->add_option("--strategy", strategy, "override the family's natural strategy");
    sweep->add_option("--seed", seed)->capture_default_str();
    sweep->add_option("--random", random_count)->default_val(2);
    sweep->add_option("--spacing", spacing)->capture_default_str();
    sweep->add_option("-o", out);

    auto* fit = app.add_subcommand("fit", "least-squares growth fit of a sweep CSV");
    fit->add_option("--csv", csv_path)->required();
    fit->add_option("--model", model, "logN | sqrtlogN | power")->capture_default_str();
    fit->add_option("-o", out);

    auto* check = app.add_subcommand("check", "run the invariant suite");
    check->add_option("--seed", seed)->capture_default_str();
    check->add_option("-o", out);

    CLI11_PARSE(app, argc, argv);

    try {
        Digests dg;
        if (*gen) {
            if (dirs_path.empty()) {
                mdht::require(!family.empty() && !params.empty(), "gen needs --family and --params, or --dirs");
                auto pts = mdht::parse_param_grid(params);
                mdht::require(pts.size() == 1, "gen takes a single parameter point");
                auto m = mdht::family_member(family, pts.front());
                dg.text("arguments", family + " " + params);
                json j = mdht::to_json(m.omega);
                if (!m.strategy.polyline.empty()) j["polyline"] = points_json(m.strategy.polyline);
                j["natural_strategy"] = m.strategy.id();
                emit_json(out, j, dg);
            } else {
                mdht::require(!out.empty() && out != "-", "field output needs -o");
                dg.file("dirs", dirs_path);
                auto omega = mdht::direction_set_from_json(parse_json_file(dirs_path));
                mdht::SuiteOptions opt;
                opt.seed = seed;
                opt.random_count = 1;
                opt.shape = split_list<std::size_t>(grid, 'x', to_size);
                opt.box = split_list<double>(box, 'x', to_real);
                auto probes = mdht::build_probe_suite(omega, kind, opt);
                write_field(out, probes.front().field,
                            {{"tool_version", mdht::kVersion}, {"input_digests", dg.entries},
                             {"probe", probes.front().name}, {"seed", probes.front().seed}});
            }
        } else if (*apply) {
            dg.file("field", field_path);
            auto f = mdht::read_field(field_path);
            mdht::SampledField g;
            if (!v_text.empty()) {
                mdht::require(dirs_path.empty(), "give either --v or --dirs, not both");
                mdht::Point v;
                for (const auto& c : split_list<std::string>(v_text, ',', [](const std::string& s) { return s; }))
                    v.push_back(mdht::parse_rational(c));
                dg.text("v", v_text);
                g = mdht::apply_hv(f, v);
            } else {
                mdht::require(!dirs_path.empty(), "apply needs --v or --dirs");
                dg.file("dirs", dirs_path);
                g = mdht::apply_maximal(f, mdht::direction_set_from_json(parse_json_file(dirs_path)));
            }
            write_field(out, g, {{"tool_version", mdht::kVersion}, {"input_digests", dg.entries}});
        } else if (*estimate) {
            dg.file("dirs", dirs_path);
            auto omega = mdht::direction_set_from_json(parse_json_file(dirs_path));
            mdht::SuiteOptions opt;
            opt.seed = seed;
            opt.random_count = random_count;
            opt.spacing = spacing;
            opt.shape = split_list<std::size_t>(grid, 'x', to_size);
            opt.box = split_list<double>(box, 'x', to_real);
            auto rep = mdht::estimate_lower_bound(omega, mdht::build_probe_suite(omega, suite, opt));
            auto j = rep.to_json();
            j["suite"] = suite;
            emit_json(out, j, dg);
        } else if (*partition) {
            dg.file("dirs", dirs_path);
            auto dj = parse_json_file(dirs_path);
            auto omega = mdht::direction_set_from_json(dj);
            mdht::CellCover cover;
            if (strategy == "grid") {
                cover = mdht::grid_cover_for_product(omega, std::vector<long long>(omega.dim(), group));
            } else if (strategy == "curve") {
                auto poly = polyline_of(dj);
                cover = mdht::curve_cover(omega, poly.empty() ? omega.points() : poly, group);
            } else if (strategy == "hamsandwich") {
                cover = mdht::partition_points_2d(omega, rounds).cover;
            } else {
                throw mdht::PreconditionError("unknown partition strategy '" + strategy + "'");
            }
            emit_json(out, mdht::to_json(cover), dg);
        } else if (*stab) {
            dg.file("cover", cover_path);
            auto cover = mdht::cover_from_json(parse_json_file(cover_path));
            auto r = exact ? mdht::stab_sup_exact(cover) : mdht::stab_sup_sampled(cover, samples, seed);
            json w = json::array();
            for (const auto& x : r.witness.u) w.push_back(x.str());
            json j{{"e_sup", r.e_sup}, {"witness", w}, {"provenance", r.provenance}};
            if (!exact) j["note"] = "lower estimate of E_sup";
            emit_json(out, j, dg);
        } else if (*certify) {
            dg.file("dirs", dirs_path);
            auto dj = parse_json_file(dirs_path);
            auto omega = mdht::direction_set_from_json(dj);
            auto st = mdht::parse_strategy(strategy);
            if (st.name == "hamsandwich-2d" && strategy.find('(') == std::string::npos) st.rounds = rounds;
            st.polyline = polyline_of(dj);
            mdht::CertificateFile cf{omega.label(), st.id(), mdht::certify(omega, st)};
            emit_json(out, mdht::to_json(cf), dg);
        } else if (*audit) {
            auto cf = mdht::certificate_file_from_json(parse_json_file(cert_path));
            auto rep = mdht::ProbeReport::from_json(parse_json_file(report_path));
            auto r = mdht::soundness_audit(cf, rep);
            json j{{"sound", r.sound}, {"certified", cf.root.value}, {"measured", rep.max_rayleigh}};
            if (!r.problem.empty()) j["problem"] = r.problem;
            dg.file("cert", cert_path);
            dg.file("report", report_path);
            emit_json("", j, dg);
            return r.sound ? 0 : kExitAudit;
        } else if (*sweep) {
            mdht::SweepPlan plan;
            plan.family = family;
            plan.grid = mdht::parse_param_grid(params);
            plan.suite = suite;
            plan.strategy = strategy;
            plan.seed = seed;
            plan.random_count = random_count;
            plan.spacing = spacing;
            std::string args = family + " " + params + " " + suite + " " + strategy + " " + std::to_string(seed) + " " +
                               std::to_string(random_count) + " " + mdht::format_double(spacing);
            std::string head = "# mdht " + std::string(mdht::kVersion) + " sweep plan_sha256=" + sha256_hex(args) + "\n";
            emit(out, head + mdht::run_sweep(plan));
        } else if (*fit) {
            dg.file("csv", csv_path);
            auto g = mdht::fit_growth(mdht::parse_sweep_csv(slurp(csv_path)), model);
            emit_json(out, g.to_json(), dg);
        } else if (*check) {
            auto items = mdht::check_all(seed);
            dg.text("seed", std::to_string(seed));
            auto j = mdht::to_json(items);
            emit_json(out, j, dg);
            return j["all_pass"].get<bool>() ? 0 : 1;
        }
    } catch (const mdht::PreconditionError& e) {
        std::cerr << "mdht: " << e.what() << "\n";
        return kExitPrecondition;
    } catch (const std::exception& e) {
        std::cerr << "mdht: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
