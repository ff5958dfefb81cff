#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "pllay/data.hpp"
#include "pllay/dtm.hpp"
#include "pllay/landscape.hpp"
#include "pllay/layer.hpp"
#include "pllay/nn.hpp"
#include "pllay/persistence.hpp"

namespace pllay {

using json = nlohmann::json;

inline json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    json j;
    in >> j;
    return j;
}

inline void save_json_file(const json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write '" + path + "'");
    out << j.dump(2) << "\n";
}

// ---- persistence diagrams ----

inline json diagram_to_json(const PersistenceDiagram& d) {
    json pairs = json::array();
    for (const auto& p : d.pairs) {
        json jp{{"b", p.birth}, {"dim", p.dim}};
        if (p.essential()) jp["d"] = "inf";
        else jp["d"] = p.death;
        pairs.push_back(jp);
    }
    json out{{"pairs", pairs}};
    if (d.has_pairing()) {
        json pairing = json::array();
        for (const auto& pr : d.pairing) {
            json e = json::array();
            e.push_back(pr[0]);
            if (pr[1] == kNoCell) e.push_back(nullptr);
            else e.push_back(pr[1]);
            pairing.push_back(e);
        }
        out["pairing"] = pairing;
    }
    return out;
}

inline PersistenceDiagram diagram_from_json(const json& j) {
    PersistenceDiagram d;
    for (const auto& jp : j.at("pairs")) {
        PersistencePair p;
        p.birth = jp.at("b").get<double>();
        p.dim = jp.at("dim").get<int>();
        const auto& dd = jp.at("d");
        p.death = dd.is_string() ? kInfDeath : dd.get<double>();
        d.pairs.push_back(p);
    }
    if (j.contains("pairing")) {
        for (const auto& e : j.at("pairing")) {
            std::int64_t bc = e.at(0).get<std::int64_t>();
            std::int64_t dc = e.at(1).is_null() ? kNoCell : e.at(1).get<std::int64_t>();
            d.pairing.push_back({bc, dc});
        }
    }
    return d;
}

// ---- DTM fields ----

inline json dtm_field_to_json(const DtmField& f, bool with_provenance = false) {
    json out{{"mode", f.mode == DtmMode::PointsAsData ? "points-as-data" : "points-as-weights"},
             {"values", f.values},
             {"m0", f.params.m0},
             {"r", f.params.r}};
    if (with_provenance && f.has_provenance()) {
        json prov = json::array();
        for (const auto& p : f.provenance) {
            prov.push_back(json{{"neighbors", p.neighbors},
                                {"leftover", p.leftover},
                                {"dist_k", p.dist_k}});
        }
        out["provenance"] = prov;
    }
    return out;
}

// ---- landscapes ----

inline std::string landscape_to_csv(const LandscapeMatrix& lm) {
    std::ostringstream out;
    char buf[64];
    out << "t";
    for (std::size_t k = 0; k < lm.params.k_max; ++k) out << ",k" << (k + 1);
    out << "\n";
    for (std::size_t l = 0; l < lm.params.samples; ++l) {
        std::snprintf(buf, sizeof buf, "%.17g", lm.params.t_at(l));
        out << buf;
        for (std::size_t k = 0; k < lm.params.k_max; ++k) {
            std::snprintf(buf, sizeof buf, "%.17g", lm.at(k, l));
            out << "," << buf;
        }
        out << "\n";
    }
    return out.str();
}

// ---- layer configuration ----

inline json layer_config_to_json(const PLLayLayer& layer) {
    json filtration;
    switch (layer.binding.kind) {
        case FiltrationBinding::Kind::DtmWeights:
            filtration = {{"kind", "dtm-weights"},
                          {"m0", layer.binding.dtm.m0},
                          {"r", layer.binding.dtm.r}};
            break;
        case FiltrationBinding::Kind::DtmPoints:
            filtration = {{"kind", "dtm-points"},
                          {"m0", layer.binding.dtm.m0},
                          {"r", layer.binding.dtm.r},
                          {"grid_width", layer.binding.grid.width},
                          {"grid_height", layer.binding.grid.height},
                          {"auto_domain", layer.binding.auto_domain},
                          {"domain",
                           {{layer.binding.grid.domain.xmin, layer.binding.grid.domain.ymin},
                            {layer.binding.grid.domain.xmax, layer.binding.grid.domain.ymax}}}};
            break;
        case FiltrationBinding::Kind::RawFunction:
            filtration = {{"kind", "raw-function"}};
            break;
    }
    return json{{"n_h", layer.n_h()},
                {"g", layer.elements.front().g.kind == GKind::Affine ? "affine" : "log"},
                {"k_max", layer.landscape.k_max},
                {"t_min", layer.landscape.t_min},
                {"t_max", layer.landscape.t_max},
                {"m", layer.landscape.samples},
                {"dim", layer.dim},
                {"cap_inf", layer.inf_policy == InfPolicy::Cap},
                {"filtration", filtration}};
}

inline PLLayLayer layer_from_config(const json& j, std::uint64_t seed, double sigma_scale = 1.0) {
    LandscapeParams lp;
    lp.k_max = j.at("k_max").get<std::size_t>();
    lp.t_min = j.at("t_min").get<double>();
    lp.t_max = j.at("t_max").get<double>();
    lp.samples = j.at("m").get<std::size_t>();

    FiltrationBinding binding;
    const auto& jf = j.at("filtration");
    std::string kind = jf.at("kind").get<std::string>();
    if (kind == "dtm-weights") {
        binding.kind = FiltrationBinding::Kind::DtmWeights;
    } else if (kind == "dtm-points") {
        binding.kind = FiltrationBinding::Kind::DtmPoints;
        binding.grid.width = jf.value("grid_width", std::size_t{40});
        binding.grid.height = jf.value("grid_height", std::size_t{40});
        binding.auto_domain = jf.value("auto_domain", false);
        if (jf.contains("domain")) {
            const auto& d = jf.at("domain");
            binding.grid.domain = Box2{d[0][0], d[0][1], d[1][0], d[1][1]};
        }
    } else if (kind == "raw-function") {
        binding.kind = FiltrationBinding::Kind::RawFunction;
    } else {
        throw std::invalid_argument("layer_from_config: unknown filtration kind '" + kind + "'");
    }
    if (kind != "raw-function") {
        binding.dtm.m0 = jf.at("m0").get<double>();
        binding.dtm.r = jf.value("r", 2.0);
    }

    GKind gk = j.at("g").get<std::string>() == "affine" ? GKind::Affine : GKind::Logarithmic;
    PLLayLayer layer = make_layer(j.at("n_h").get<std::size_t>(), gk, lp,
                                  j.at("dim").get<int>(), binding, seed, sigma_scale);
    if (j.value("cap_inf", false)) layer.inf_policy = InfPolicy::Cap;
    return layer;
}

// ---- model checkpoints & training logs ----

inline json model_to_json(const Mlp& net) {
    json W = json::array(), b = json::array();
    for (std::size_t l = 0; l < net.n_layers(); ++l) {
        json rows = json::array();
        std::size_t in = net.widths[l], out = net.widths[l + 1];
        for (std::size_t o = 0; o < out; ++o) {
            json row = json::array();
            for (std::size_t i = 0; i < in; ++i) row.push_back(net.W[l][o * in + i]);
            rows.push_back(row);
        }
        W.push_back(rows);
        b.push_back(net.b[l]);
    }
    return json{{"widths", net.widths}, {"W", W}, {"b", b}};
}

inline Mlp model_from_json(const json& j) {
    Mlp net;
    net.widths = j.at("widths").get<std::vector<std::size_t>>();
    for (std::size_t l = 0; l + 1 < net.widths.size(); ++l) {
        std::size_t in = net.widths[l], out = net.widths[l + 1];
        std::vector<double> w(in * out);
        const auto& rows = j.at("W")[l];
        for (std::size_t o = 0; o < out; ++o)
            for (std::size_t i = 0; i < in; ++i) w[o * in + i] = rows[o][i].get<double>();
        net.W.push_back(std::move(w));
        net.b.push_back(j.at("b")[l].get<std::vector<double>>());
    }
    return net;
}

inline std::string training_log_to_csv(const std::vector<EpochLog>& log) {
    std::ostringstream out;
    char buf[64];
    out << "epoch,loss,train_acc,test_acc\n";
    for (const auto& e : log) {
        out << e.epoch;
        std::snprintf(buf, sizeof buf, "%.17g", e.loss);
        out << "," << buf;
        std::snprintf(buf, sizeof buf, "%.17g", e.train_acc);
        out << "," << buf;
        if (std::isnan(e.test_acc)) {
            out << ",";
        } else {
            std::snprintf(buf, sizeof buf, "%.17g", e.test_acc);
            out << "," << buf;
        }
        out << "\n";
    }
    return out.str();
}

// ---- grid domain sidecar: {"domain": [[xmin,ymin],[xmax,ymax]]} ----

inline bool try_load_domain_sidecar(const std::string& grid_path, Box2& box) {
    std::string sidecar = grid_path + ".json";
    std::ifstream probe(sidecar);
    if (!probe) return false;
    json j = load_json_file(sidecar);
    const auto& d = j.at("domain");
    box = Box2{d[0][0].get<double>(), d[0][1].get<double>(), d[1][0].get<double>(),
               d[1][1].get<double>()};
    return true;
}

inline void save_domain_sidecar(const Box2& box, const std::string& grid_path) {
    json j{{"domain", {{box.xmin, box.ymin}, {box.xmax, box.ymax}}}};
    save_json_file(j, grid_path + ".json");
}

}  // namespace pllay
