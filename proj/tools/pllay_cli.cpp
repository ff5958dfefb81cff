// Command-line front end: every pipeline stage as a subcommand, file formats
// as documented in the README. All numeric CSV output uses 17 significant
// digits; every subcommand is deterministic given --seed.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "pllay/harness.hpp"
#include "pllay/io.hpp"
#include "pllay/pllay.hpp"

namespace fs = std::filesystem;
using namespace pllay;

namespace {

Box2 parse_domain(const std::vector<double>& v) {
    if (v.size() != 4) throw std::invalid_argument("--domain expects xmin,ymin,xmax,ymax");
    return Box2{v[0], v[1], v[2], v[3]};
}

double auto_rips_radius(const PointCloud& pc) {
    double mx = 0.0;
    for (std::size_t i = 0; i < pc.size(); ++i)
        for (std::size_t j = i + 1; j < pc.size(); ++j)
            mx = std::max(mx, dist2(pc.point(i), pc.point(j)));
    return 0.5 * std::sqrt(mx) + 1e-9;
}

PersistenceDiagram drop_essential(const PersistenceDiagram& d) {
    PersistenceDiagram out;
    for (std::size_t i = 0; i < d.pairs.size(); ++i) {
        if (d.pairs[i].essential()) continue;
        out.pairs.push_back(d.pairs[i]);
        if (d.has_pairing()) out.pairing.push_back(d.pairing[i]);
    }
    return out;
}

std::vector<double> load_csv_matrix(const std::string& path, std::size_t& cols) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    std::vector<double> data;
    std::string line;
    std::size_t line_no = 0;
    cols = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        auto fields = detail::split_csv_line(line);
        if (cols == 0) cols = fields.size();
        if (fields.size() != cols)
            throw ParseError("line " + std::to_string(line_no) + ": ragged row");
        for (const auto& f : fields) data.push_back(detail::parse_number(f, line_no));
    }
    return data;
}

struct DiagramArgs {
    std::string input, out, type = "grid", filtration = "dtm-weights";
    std::string dtm_out, complex_out;
    double m0 = 0.05, r = 2.0, max_radius = 0.0;
    int max_dim = 2;
    std::size_t grid_w = 40, grid_h = 40;
    std::vector<double> domain;
    bool drop_inf = false;
    bool with_pairing = false;
    bool with_provenance = false;
};

int cmd_diagram(const DiagramArgs& a) {
    PersistenceDiagram d;
    auto side_outputs = [&](const FilteredComplex& k, const DtmField* field) {
        if (!a.complex_out.empty()) {
            std::ofstream out(a.complex_out);
            if (!out) throw ParseError("cannot write '" + a.complex_out + "'");
            out << dump_complex(k);
        }
        if (!a.dtm_out.empty()) {
            if (!field) throw std::invalid_argument("--dtm-out requires a dtm filtration");
            save_json_file(dtm_field_to_json(*field, a.with_provenance), a.dtm_out);
        }
    };
    if (a.type == "grid") {
        Box2 box{-1, -1, 1, 1};
        if (!a.domain.empty()) box = parse_domain(a.domain);
        else try_load_domain_sidecar(a.input, box);
        GridFunction g = load_grid(a.input, box);
        if (a.filtration == "dtm-weights") {
            DtmFiltration filt = dtm_filtration_weights(g, DtmParams{a.m0, a.r});
            d = compute_persistence(filt.complex, a.with_pairing);
            side_outputs(filt.complex, &filt.field);
        } else if (a.filtration == "raw") {
            FilteredComplex k = cubical_sublevel(g);
            d = compute_persistence(k, a.with_pairing);
            side_outputs(k, nullptr);
        } else {
            throw std::invalid_argument("grid inputs support filtration dtm-weights or raw");
        }
    } else if (a.type == "cloud") {
        PointCloud pc = load_point_cloud(a.input);
        if (a.filtration == "dtm-points") {
            GridSpec grid{a.grid_w, a.grid_h, Box2{0, 0, 1, 1}};
            if (!a.domain.empty()) grid.domain = parse_domain(a.domain);
            else grid.domain = bounding_box(pc);
            DtmFiltration filt = dtm_filtration_points(pc, grid, DtmParams{a.m0, a.r});
            d = compute_persistence(filt.complex, a.with_pairing);
            side_outputs(filt.complex, &filt.field);
        } else if (a.filtration == "rips") {
            double radius = a.max_radius > 0 ? a.max_radius : auto_rips_radius(pc);
            FilteredComplex k = rips(pc, a.max_dim, radius);
            d = compute_persistence(k, a.with_pairing);
            side_outputs(k, nullptr);
        } else {
            throw std::invalid_argument("cloud inputs support filtration dtm-points or rips");
        }
    } else {
        throw std::invalid_argument("--type must be grid or cloud");
    }
    if (a.drop_inf) d = drop_essential(d);
    json j = diagram_to_json(d);
    if (a.out.empty()) std::cout << j.dump(2) << "\n";
    else save_json_file(j, a.out);
    return 0;
}

// Defaults follow the image-like parameter set (m0 = 0.05 filtrations):
// K_max = 2 over [0.06, 0.3] with 25 samples.
struct LandscapeArgs {
    std::string diagram, out;
    std::size_t k_max = 2, samples = 25;
    double t_min = 0.06, t_max = 0.3;
    int dim = 1;
    bool cap_inf = false;
};

int cmd_landscape(const LandscapeArgs& a) {
    PersistenceDiagram d = diagram_from_json(load_json_file(a.diagram));
    LandscapeParams lp{a.k_max, a.t_min, a.t_max, a.samples};
    LandscapeMatrix lm = landscape(d, lp, a.dim, a.cap_inf ? InfPolicy::Cap : InfPolicy::Drop);
    std::string csv = landscape_to_csv(lm);
    if (a.out.empty()) std::cout << csv;
    else {
        std::ofstream out(a.out);
        if (!out) throw ParseError("cannot write '" + a.out + "'");
        out << csv;
    }
    return 0;
}

struct DistanceArgs {
    std::string a, b;
    int dim = 1;
    std::vector<double> qs{1.0, 2.0};
    bool keep_inf = false;
};

int cmd_distance(const DistanceArgs& args) {
    PersistenceDiagram da = diagram_from_json(load_json_file(args.a));
    PersistenceDiagram db = diagram_from_json(load_json_file(args.b));
    auto slice_a = da.slice(args.dim, args.keep_inf);
    auto slice_b = db.slice(args.dim, args.keep_inf);
    json out;
    out["bottleneck"] = bottleneck(slice_a, slice_b).first;
    json w = json::object();
    for (double q : args.qs) {
        char key[32];
        std::snprintf(key, sizeof key, "%g", q);
        w[key] = wasserstein(slice_a, slice_b, q);
    }
    out["w"] = w;
    std::cout << out.dump(2) << "\n";
    return 0;
}

struct ForwardArgs {
    std::string config, input, out, type = "grid";
    std::uint64_t seed = 0;
    double sigma_scale = 1.0;
};

int cmd_pllay_forward(const ForwardArgs& a) {
    PLLayLayer layer = layer_from_config(load_json_file(a.config), a.seed, a.sigma_scale);
    std::vector<double> outputs;
    if (a.type == "grid") {
        Box2 box{-1, -1, 1, 1};
        try_load_domain_sidecar(a.input, box);
        GridFunction g = load_grid(a.input, box);
        outputs = forward(layer, g).outputs;
    } else {
        PointCloud pc = load_point_cloud(a.input);
        outputs = forward(layer, pc).outputs;
    }
    json j{{"outputs", outputs}};
    if (a.out.empty()) std::cout << j.dump(2) << "\n";
    else save_json_file(j, a.out);
    return 0;
}

json gradcheck_to_json(const GradcheckReport& rep) {
    return json{{"max_rel_error_chain", rep.max_rel_chain},
                {"max_rel_error_dtm", rep.max_rel_dtm},
                {"chain_configs_evaluated", rep.chain_evaluated},
                {"chain_configs_flagged", rep.chain_flagged},
                {"gradients_compared", rep.chain_compared},
                {"dtm_configs_evaluated", rep.dtm_evaluated},
                {"dtm_configs_flagged", rep.dtm_flagged},
                {"seconds", rep.seconds},
                {"pass", rep.pass}};
}

json stability_to_json(const StabilityReport& rep) {
    return json{{"trials", rep.evaluated},
                {"violations_element", rep.violations_element},
                {"violations_landscape", rep.violations_landscape},
                {"violations_db_w1", rep.violations_db_w1},
                {"max_ratio", rep.max_ratio},
                {"skipped_degenerate", rep.skipped_degenerate},
                {"seconds", rep.seconds},
                {"pass", rep.pass}};
}

struct OrbitGenArgs {
    std::size_t per_class = 10, n_points = 300;
    std::uint64_t seed = 0;
    std::string out_dir = "orbits";
};

int cmd_orbit_gen(const OrbitGenArgs& a) {
    LabeledClouds data = gen_orbit_dataset(a.per_class, a.n_points, a.seed);
    fs::create_directories(a.out_dir);
    json files = json::array(), labels = json::array();
    for (std::size_t i = 0; i < data.clouds.size(); ++i) {
        char name[64];
        std::snprintf(name, sizeof name, "cloud_%05zu.csv", i);
        save_point_cloud(data.clouds[i], (fs::path(a.out_dir) / name).string());
        files.push_back(name);
        labels.push_back(data.labels[i]);
    }
    json manifest{{"files", files},
                  {"labels", labels},
                  {"r_values", orbit_r_values()},
                  {"per_class", a.per_class},
                  {"n_points", a.n_points},
                  {"seed", a.seed}};
    save_json_file(manifest, (fs::path(a.out_dir) / "labels.json").string());
    std::cout << "wrote " << data.clouds.size() << " clouds to " << a.out_dir << "\n";
    return 0;
}

struct OrbitExpArgs {
    OrbitExperimentConfig cfg;
    std::string out;
    std::string config_file;
    std::string mode = "end-to-end";
    bool dry_run = false;
};

// Precedence: explicit flags > config file > built-in defaults.
void apply_orbit_config_file(OrbitExpArgs& a, const CLI::App* sub) {
    json j = load_json_file(a.config_file);
    auto set_if_default = [&](const char* flag, auto& dst, const char* key) {
        using T = std::decay_t<decltype(dst)>;
        if (sub->count(flag) == 0 && j.contains(key)) dst = j.at(key).get<T>();
    };
    set_if_default("--per-class", a.cfg.per_class, "per_class");
    set_if_default("--n-points", a.cfg.n_points, "n_points");
    set_if_default("--grid", a.cfg.grid, "grid");
    set_if_default("--m0", a.cfg.m0, "m0");
    set_if_default("--kmax", a.cfg.k_max, "k_max");
    set_if_default("--tmin", a.cfg.t_min, "t_min");
    set_if_default("--tmax", a.cfg.t_max, "t_max");
    set_if_default("--samples", a.cfg.samples, "m");
    set_if_default("--n-h", a.cfg.n_h, "n_h");
    set_if_default("--hidden", a.cfg.hidden, "hidden");
    set_if_default("--epochs", a.cfg.epochs, "epochs");
    set_if_default("--batch", a.cfg.batch, "batch");
    set_if_default("--lr", a.cfg.lr, "lr");
    set_if_default("--dim", a.cfg.dim, "dim");
    set_if_default("--sigma-scale", a.cfg.sigma_scale, "sigma_scale");
    set_if_default("--train-frac", a.cfg.train_frac, "train_frac");
    set_if_default("--seeds", a.cfg.seeds, "seeds");
    set_if_default("--mode", a.mode, "mode");
}

int cmd_orbit_exp(OrbitExpArgs& a) {
    a.cfg.mode = a.mode == "frozen" ? PllayTrainMode::FrozenPrecompute : PllayTrainMode::EndToEnd;
    if (a.dry_run) {
        std::cout << "plan: " << a.cfg.seeds.size() << " seeds x ("
                  << orbit_r_values().size() * a.cfg.per_class << " orbits x " << a.cfg.n_points
                  << " points, " << a.cfg.grid << "x" << a.cfg.grid << " grid, m0=" << a.cfg.m0
                  << ", K_max=" << a.cfg.k_max << ", T=[" << a.cfg.t_min << "," << a.cfg.t_max
                  << "], m=" << a.cfg.samples << ", n_h=" << a.cfg.n_h << ", mlp hidden "
                  << a.cfg.hidden << ", " << a.cfg.epochs << " epochs, batch " << a.cfg.batch
                  << ", mode " << a.mode << ")\n";
        return 0;
    }
    OrbitExperimentReport rep = run_orbit_experiment(
        a.cfg, [](const std::string& msg) { std::cerr << msg << "\n"; });

    const std::size_t n_classes = orbit_r_values().size();
    std::ostringstream csv;
    char buf[64];
    csv << "seed,raw_mlp_test_acc,pllay_mlp_test_acc";
    for (std::size_t c = 0; c < n_classes; ++c) csv << ",pllay_acc_class" << c;
    for (std::size_t c = 0; c < n_classes; ++c) csv << ",n_test_class" << c;
    csv << ",seconds\n";
    for (const auto& r : rep.per_seed) {
        csv << r.seed;
        std::snprintf(buf, sizeof buf, "%.17g", r.raw_acc);
        csv << "," << buf;
        std::snprintf(buf, sizeof buf, "%.17g", r.pllay_acc);
        csv << "," << buf;
        for (double acc : r.pllay_class_acc) {
            std::snprintf(buf, sizeof buf, "%.17g", acc);
            csv << "," << buf;
        }
        for (std::size_t n : r.class_counts) csv << "," << n;
        std::snprintf(buf, sizeof buf, "%.3f", r.seconds);
        csv << "," << buf << "\n";
    }
    std::snprintf(buf, sizeof buf, "%.17g", rep.mean_raw);
    csv << "mean," << buf;
    std::snprintf(buf, sizeof buf, "%.17g", rep.mean_pllay);
    csv << "," << buf << "\n";
    if (a.out.empty()) std::cout << csv.str();
    else {
        std::ofstream out(a.out);
        out << csv.str();
    }
    std::cerr << "total " << rep.seconds << " s\n";
    return 0;
}

struct TrainArgs {
    std::string features, labels, out, log;
    std::vector<std::size_t> hidden{32};
    std::size_t epochs = 100, batch = 16;
    double lr = 1e-3;
    std::string optimizer = "adam";
    std::uint64_t seed = 0;
    double test_frac = 0.0;
};

int cmd_train(const TrainArgs& a) {
    std::size_t cols = 0;
    std::vector<double> X = load_csv_matrix(a.features, cols);
    std::vector<int> y = load_json_file(a.labels).get<std::vector<int>>();
    if (cols == 0 || X.size() != y.size() * cols)
        throw std::invalid_argument("feature rows do not match label count");
    int n_classes = 0;
    for (int c : y) n_classes = std::max(n_classes, c + 1);

    MlpSpec spec;
    spec.widths.push_back(cols);
    for (std::size_t h : a.hidden) spec.widths.push_back(h);
    spec.widths.push_back(static_cast<std::size_t>(n_classes));
    spec.epochs = a.epochs;
    spec.batch_size = a.batch;
    spec.lr = a.lr;
    spec.seed = a.seed;
    spec.optimizer = a.optimizer == "sgd" ? Optimizer::Sgd : Optimizer::Adam;

    TrainResult res;
    if (a.test_frac > 0.0) {
        Rng rng(derive_seed(a.seed, 0x5B117));
        auto perm = rng.permutation(y.size());
        std::size_t n_train = static_cast<std::size_t>((1.0 - a.test_frac) * double(y.size()));
        std::vector<double> Xtr, Xte;
        std::vector<int> ytr, yte;
        for (std::size_t i = 0; i < y.size(); ++i) {
            auto& dx = i < n_train ? Xtr : Xte;
            auto& dy = i < n_train ? ytr : yte;
            for (std::size_t c = 0; c < cols; ++c) dx.push_back(X[perm[i] * cols + c]);
            dy.push_back(y[perm[i]]);
        }
        res = train(spec, Xtr, ytr, &Xte, &yte);
    } else {
        res = train(spec, X, y);
    }
    if (!a.out.empty()) save_json_file(model_to_json(res.model), a.out);
    if (!a.log.empty()) {
        std::ofstream out(a.log);
        out << training_log_to_csv(res.log);
    }
    json summary{{"train_acc", res.train_acc}};
    if (!std::isnan(res.test_acc)) summary["test_acc"] = res.test_acc;
    std::cout << summary.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"topological layer pipeline"};
    app.require_subcommand(1);
    app.fallthrough();  // accept global flags after the subcommand name

    unsigned threads = 0;
    app.add_option("--threads", threads, "worker cap (overrides PLLAY_THREADS)");

    DiagramArgs da;
    auto* sd = app.add_subcommand("diagram", "persistence diagram of a filtration");
    sd->add_option("--input", da.input, "grid or cloud CSV")->required();
    sd->add_option("--type", da.type, "grid | cloud");
    sd->add_option("--filtration", da.filtration, "dtm-weights | dtm-points | raw | rips");
    sd->add_option("--m0", da.m0, "DTM mass parameter");
    sd->add_option("--r", da.r, "DTM exponent");
    sd->add_option("--grid-width", da.grid_w, "evaluation grid width (dtm-points)");
    sd->add_option("--grid-height", da.grid_h, "evaluation grid height (dtm-points)");
    sd->add_option("--domain", da.domain, "xmin,ymin,xmax,ymax")->expected(4);
    sd->add_option("--max-dim", da.max_dim, "rips: top simplex dimension (0..2)");
    sd->add_option("--max-radius", da.max_radius, "rips: cap (0 = cover the diameter)");
    sd->add_flag("--drop-inf", da.drop_inf, "drop essential classes from the output");
    sd->add_flag("--with-pairing", da.with_pairing, "include the simplex pairing");
    sd->add_option("--dtm-out", da.dtm_out, "also write the DTM field JSON here");
    sd->add_flag("--with-provenance", da.with_provenance,
                 "include per-query cut provenance in --dtm-out");
    sd->add_option("--complex-out", da.complex_out, "also dump the filtered complex (text)");
    sd->add_option("--out", da.out, "output JSON (stdout if omitted)");

    LandscapeArgs la;
    auto* sl = app.add_subcommand("landscape", "sampled persistence landscape CSV");
    sl->add_option("--diagram", la.diagram, "diagram JSON")->required();
    sl->add_option("--kmax", la.k_max, "landscape orders");
    sl->add_option("--tmin", la.t_min, "window start");
    sl->add_option("--tmax", la.t_max, "window end");
    sl->add_option("--samples", la.samples, "sample count m");
    sl->add_option("--dim", la.dim, "homology dimension");
    sl->add_flag("--cap-inf", la.cap_inf, "cap essential deaths at tmax instead of dropping");
    sl->add_option("--out", la.out, "output CSV (stdout if omitted)");

    DistanceArgs dta;
    auto* sdist = app.add_subcommand("distance", "bottleneck and Wasserstein distances");
    sdist->add_option("--a", dta.a, "first diagram JSON")->required();
    sdist->add_option("--b", dta.b, "second diagram JSON")->required();
    sdist->add_option("--dim", dta.dim, "homology dimension");
    sdist->add_option("--q", dta.qs, "Wasserstein orders");
    sdist->add_flag("--keep-inf", dta.keep_inf, "keep essential classes (must match exactly)");

    ForwardArgs fa;
    auto* sf = app.add_subcommand("pllay-forward", "evaluate a configured layer on one input");
    sf->add_option("--config", fa.config, "layer config JSON")->required();
    sf->add_option("--input", fa.input, "grid or cloud CSV")->required();
    sf->add_option("--type", fa.type, "grid | cloud");
    sf->add_option("--seed", fa.seed, "parameter init seed");
    sf->add_option("--sigma-scale", fa.sigma_scale, "affine sigma init scale");
    sf->add_option("--out", fa.out, "output JSON (stdout if omitted)");

    GradcheckConfig gc;
    auto* sg = app.add_subcommand("gradcheck", "analytic vs finite-difference gradients");
    sg->add_option("--seed", gc.seed, "config seed");
    sg->add_option("--inputs", gc.n_inputs, "random inputs per combination");
    sg->add_option("--grid", gc.grid_w, "grid side length");
    sg->add_option("--m0", gc.m0, "DTM mass parameter");
    sg->add_option("--fd-step", gc.fd_step, "central-difference step");
    sg->add_flag("--broken-sign", gc.broken_sign, "test hook: negate analytic gradients")
        ->group("");

    StabilityConfig sc;
    auto* ss = app.add_subcommand("stability", "stability bound over random diagram pairs");
    ss->add_option("--trials", sc.trials, "number of diagram pairs");
    ss->add_option("--seed", sc.seed, "trial seed");

    OrbitGenArgs oga;
    auto* sog = app.add_subcommand("orbit-gen", "generate the orbit dataset");
    sog->add_option("--per-class", oga.per_class, "orbits per parameter value");
    sog->add_option("--n-points", oga.n_points, "points per orbit");
    sog->add_option("--seed", oga.seed, "dataset seed");
    sog->add_option("--out-dir", oga.out_dir, "output directory");

    OrbitExpArgs oea;
    auto* soe = app.add_subcommand("orbit-exp", "scaled orbit classification experiment");
    soe->add_option("--per-class", oea.cfg.per_class, "orbits per class");
    soe->add_option("--n-points", oea.cfg.n_points, "points per orbit");
    soe->add_option("--grid", oea.cfg.grid, "DTM evaluation grid side");
    soe->add_option("--m0", oea.cfg.m0, "DTM mass parameter");
    soe->add_option("--kmax", oea.cfg.k_max, "landscape orders");
    soe->add_option("--tmin", oea.cfg.t_min, "window start");
    soe->add_option("--tmax", oea.cfg.t_max, "window end");
    soe->add_option("--samples", oea.cfg.samples, "landscape samples m");
    soe->add_option("--n-h", oea.cfg.n_h, "structure elements");
    soe->add_option("--hidden", oea.cfg.hidden, "mlp hidden width");
    soe->add_option("--epochs", oea.cfg.epochs, "training epochs");
    soe->add_option("--batch", oea.cfg.batch, "batch size");
    soe->add_option("--lr", oea.cfg.lr, "learning rate");
    soe->add_option("--dim", oea.cfg.dim, "homology dimension for the layer");
    soe->add_option("--sigma-scale", oea.cfg.sigma_scale, "affine sigma init scale");
    soe->add_option("--train-frac", oea.cfg.train_frac, "training fraction");
    soe->add_option("--seeds", oea.cfg.seeds, "experiment seeds");
    soe->add_option("--mode", oea.mode, "end-to-end | frozen");
    soe->add_option("--config", oea.config_file, "run config JSON (flags take precedence)");
    soe->add_flag("--dry-run", oea.dry_run, "print the plan and exit");
    soe->add_option("--out", oea.out, "metrics CSV (stdout if omitted)");

    TrainArgs ta;
    auto* st = app.add_subcommand("train", "train an MLP on a feature CSV");
    st->add_option("--features", ta.features, "feature matrix CSV")->required();
    st->add_option("--labels", ta.labels, "labels JSON array")->required();
    st->add_option("--hidden", ta.hidden, "hidden layer widths");
    st->add_option("--epochs", ta.epochs, "epochs");
    st->add_option("--batch", ta.batch, "batch size");
    st->add_option("--lr", ta.lr, "learning rate");
    st->add_option("--optimizer", ta.optimizer, "adam | sgd");
    st->add_option("--seed", ta.seed, "init/shuffle seed");
    st->add_option("--test-frac", ta.test_frac, "holdout fraction");
    st->add_option("--out", ta.out, "model checkpoint JSON");
    st->add_option("--log", ta.log, "training log CSV");

    CLI11_PARSE(app, argc, argv);

    try {
        if (threads > 0) {
            oea.cfg.threads = threads;
            setenv("PLLAY_THREADS", std::to_string(threads).c_str(), 1);
        }
        if (!oea.config_file.empty()) apply_orbit_config_file(oea, soe);
        if (sd->parsed()) return cmd_diagram(da);
        if (sl->parsed()) return cmd_landscape(la);
        if (sdist->parsed()) return cmd_distance(dta);
        if (sf->parsed()) return cmd_pllay_forward(fa);
        if (sg->parsed()) {
            GradcheckReport rep = run_gradcheck(gc);
            std::cout << gradcheck_to_json(rep).dump(2) << "\n";
            return rep.pass ? 0 : 1;
        }
        if (ss->parsed()) {
            StabilityReport rep = run_stability(sc);
            std::cout << stability_to_json(rep).dump(2) << "\n";
            return rep.pass ? 0 : 1;
        }
        if (sog->parsed()) return cmd_orbit_gen(oga);
        if (soe->parsed()) return cmd_orbit_exp(oea);
        if (st->parsed()) return cmd_train(ta);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
