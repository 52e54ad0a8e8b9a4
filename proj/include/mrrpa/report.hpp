#pragma once

// Run configuration, per-geometry energy records and their CSV / JSON
// serializations.
//
// A config is one JSON document:
//
//   {
//     "input":  "h2_0.74.fcidump"                       (run)
//     "inputs": ["a.fcidump", {"label": "b", "path": "b.fcidump"}]   (scan)
//     "spaces": {"core": [0], "active": [1, 2], "virtual": [3],
//                "n_active_electrons": 2},
//     "methods": ["casci", "rpa", "sosex"],
//     "grid": {"nodes": 64, "scale": "median"},
//     "tolerances": {"drop_tol": 1e-12, "min_omega": 1e-6, ...},
//     "output": {"path": "report.csv", "format": "csv"}
//   }
//
// An input is either an FCIDUMP path (relative to the config file) or a
// builtin model, e.g. {"model": "hubbard", "sites": 4, "t": 1, "U": 2}.

#include "mrrpa/errors.hpp"
#include "mrrpa/integrals.hpp"
#include "mrrpa/pipeline.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace mrrpa {

namespace fs = std::filesystem;

struct ModelSpec {
    std::string model = "hubbard";
    int sites = 2;
    double t = 1.0;
    double U = 1.0;
    bool periodic = false;
    std::optional<int> nelec;
    /// "mo" (hopping eigenbasis) or "site".
    std::string basis = "mo";
};

struct InputSpec {
    std::string label;
    std::optional<fs::path> path;
    std::optional<ModelSpec> model;
};

enum class ReportFormat { Csv, Json };

struct RunConfig {
    std::vector<InputSpec> inputs;
    OrbitalSpaces spaces;
    MethodSet methods;
    PipelineOptions options;
    std::optional<fs::path> output_path;
    ReportFormat format = ReportFormat::Csv;
};

namespace detail {

inline ModelSpec parse_model(const nlohmann::json &j) {
    ModelSpec m;
    m.model = j.value("model", std::string("hubbard"));
    if (m.model != "hubbard")
        throw UsageError("unknown builtin model '" + m.model + "'");
    m.sites = j.value("sites", 2);
    m.t = j.value("t", 1.0);
    m.U = j.value("U", 1.0);
    m.periodic = j.value("periodic", false);
    if (j.contains("nelec"))
        m.nelec = j.at("nelec").get<int>();
    m.basis = j.value("basis", std::string("mo"));
    if (m.basis != "mo" && m.basis != "site")
        throw UsageError("hubbard basis must be 'mo' or 'site'");
    return m;
}

inline InputSpec parse_input(const nlohmann::json &j, const fs::path &base) {
    InputSpec in;
    if (j.is_string()) {
        in.path = base / j.get<std::string>();
    } else if (j.is_object() && j.contains("model")) {
        in.model = parse_model(j);
        in.label = j.value("label", fmt::format("hubbard{}_U{}", in.model->sites, in.model->U));
        return in;
    } else if (j.is_object() && j.contains("path")) {
        in.path = base / j.at("path").get<std::string>();
        in.label = j.value("label", std::string());
    } else {
        throw UsageError("input must be a path, {\"path\": ...} or a builtin model");
    }
    if (in.label.empty())
        in.label = in.path->stem().string();
    return in;
}

inline std::vector<int> index_list(const nlohmann::json &j, const char *key) {
    if (!j.contains(key))
        return {};
    return j.at(key).get<std::vector<int>>();
}

} // namespace detail

/// Parses and validates a config. `base` resolves relative input paths.
inline RunConfig parse_config(const nlohmann::json &j, const fs::path &base = ".") {
    RunConfig cfg;
    try {
        if (j.contains("input"))
            cfg.inputs.push_back(detail::parse_input(j.at("input"), base));
        if (j.contains("inputs"))
            for (const auto &item : j.at("inputs"))
                cfg.inputs.push_back(detail::parse_input(item, base));
        if (cfg.inputs.empty())
            throw UsageError("config names no input");

        const auto &sp = j.at("spaces");
        cfg.spaces.core = detail::index_list(sp, "core");
        cfg.spaces.active = detail::index_list(sp, "active");
        cfg.spaces.virt = detail::index_list(sp, "virtual");
        cfg.spaces.n_active_electrons = sp.value("n_active_electrons", 0);

        const auto methods = j.value("methods", std::vector<std::string>{"casci", "rpa"});
        if (methods.empty())
            throw UsageError("methods must not be empty");
        MethodSet m{false, false, false, false, false, false};
        for (const auto &name : methods) {
            if (name == "casci")
                m.casci = true;
            else if (name == "rpa")
                m.rpa = true;
            else if (name == "sosex")
                m.sosex = true;
            else if (name == "tda")
                m.tda = true;
            else if (name == "quadrature")
                m.quadrature = true;
            else if (name == "order_n")
                m.order_n = true;
            else
                throw UsageError("unknown method '" + name + "'");
        }
        cfg.methods = m;

        if (j.contains("grid")) {
            const auto &g = j.at("grid");
            cfg.options.grid_nodes = g.value("nodes", 64);
            if (g.contains("scale") && g.at("scale").is_number())
                cfg.options.grid_scale = g.at("scale").get<double>();
            else if (g.contains("scale") && g.at("scale") != "median")
                throw UsageError("grid scale must be a number or \"median\"");
            cfg.options.max_ring_order = g.value("max_order", 8);
            if (cfg.options.grid_nodes < 4)
                throw UsageError("grid needs at least 4 nodes");
        }
        if (j.contains("tolerances")) {
            const auto &t = j.at("tolerances");
            cfg.options.manifold.drop_tol = t.value("drop_tol", cfg.options.manifold.drop_tol);
            cfg.options.manifold.min_omega = t.value("min_omega", cfg.options.manifold.min_omega);
            cfg.options.imag_tol = t.value("imag_tol", cfg.options.imag_tol);
            cfg.options.partition.density_tol =
                t.value("density_tol", cfg.options.partition.density_tol);
            cfg.options.partition.max_sector_dim =
                t.value("max_sector_dim", cfg.options.partition.max_sector_dim);
        }
        if (j.contains("output")) {
            const auto &o = j.at("output");
            if (o.contains("path"))
                cfg.output_path = base / o.at("path").get<std::string>();
            const std::string f = o.value("format", std::string("csv"));
            if (f == "csv")
                cfg.format = ReportFormat::Csv;
            else if (f == "json")
                cfg.format = ReportFormat::Json;
            else
                throw UsageError("output format must be csv or json");
        }
    } catch (const nlohmann::json::exception &e) {
        throw UsageError(std::string("config: ") + e.what());
    }
    for (const auto &in : cfg.inputs)
        if (in.path && !fs::exists(*in.path))
            throw UsageError("input file not found: " + in.path->string());
    return cfg;
}

inline RunConfig load_config(const fs::path &file) {
    std::ifstream is(file);
    if (!is)
        throw UsageError("cannot open config " + file.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(is);
    } catch (const nlohmann::json::exception &e) {
        throw UsageError("config " + file.string() + ": " + e.what());
    }
    return parse_config(j, file.parent_path().empty() ? fs::path(".") : file.parent_path());
}

inline IntegralSet load_input(const InputSpec &in) {
    if (in.path) {
        std::ifstream is(*in.path);
        if (!is)
            throw UsageError("cannot open " + in.path->string());
        return parse_fcidump(is);
    }
    const ModelSpec &m = *in.model;
    IntegralSet set = hubbard_model(m.sites, m.t, m.U, m.periodic, m.nelec);
    return m.basis == "mo" ? to_one_body_eigenbasis(set) : set;
}

struct EnergyRecord {
    std::string label;
    double e_casci = 0.0;
    std::optional<double> de_rpa;
    std::optional<double> de_rpa_quad;
    std::optional<double> de_rpa_trbt;
    std::optional<double> de_sosex;
    std::optional<double> omega_min_rpa;
    std::optional<double> omega_min_tda;
    std::vector<double> ring_orders;
    bool stable = true;
    std::string diagnostic;
    std::array<int, 4> class_counts{};
    double seconds = 0.0;
};

struct Failure {
    std::string label;
    /// "validation" or "instability".
    std::string kind;
    std::string message;
};

struct EnergyReport {
    std::vector<EnergyRecord> records;
    std::vector<Failure> failures;

    bool any_unstable() const {
        for (const auto &r : records)
            if (!r.stable)
                return true;
        for (const auto &f : failures)
            if (f.kind == "instability")
                return true;
        return false;
    }
    bool any_invalid() const {
        for (const auto &f : failures)
            if (f.kind == "validation")
                return true;
        return false;
    }
};

inline EnergyRecord make_record(std::string label, const PipelineResult &r) {
    EnergyRecord rec;
    rec.label = std::move(label);
    rec.e_casci = r.e_casci;
    rec.de_rpa = r.de_rpa_plasmon;
    rec.de_rpa_quad = r.de_rpa_quadrature;
    rec.de_rpa_trbt = r.de_rpa_trbt;
    rec.de_sosex = r.de_sosex;
    rec.omega_min_rpa = r.omega_min_rpa;
    rec.omega_min_tda = r.omega_min_tda;
    rec.ring_orders = r.ring_orders;
    rec.stable = r.stable;
    rec.diagnostic = r.diagnostic;
    rec.class_counts = r.class_counts;
    rec.seconds = r.seconds;
    return rec;
}

/// Worker count from MRRPA_WORKERS; defaults to 1.
inline int worker_count() {
    if (const char *s = std::getenv("MRRPA_WORKERS")) {
        const int n = std::atoi(s);
        if (n > 0)
            return n;
    }
    return 1;
}

/// Runs every input. Records keep input order; inputs that fail are listed
/// in `failures` with their label.
inline EnergyReport run(const RunConfig &cfg, int workers = worker_count()) {
    const int n = static_cast<int>(cfg.inputs.size());
    std::vector<std::optional<EnergyRecord>> slots(n);
    std::vector<std::optional<Failure>> fails(n);
    std::atomic<int> next{0};
    auto work = [&] {
        for (int k = next++; k < n; k = next++) {
            const InputSpec &in = cfg.inputs[k];
            try {
                const IntegralSet set = load_input(in);
                slots[k] = make_record(in.label, run_pipeline(set, cfg.spaces, cfg.methods, cfg.options));
            } catch (const InstabilityError &e) {
                fails[k] = Failure{in.label, "instability", e.what()};
            } catch (const std::exception &e) {
                fails[k] = Failure{in.label, "validation", e.what()};
            }
        }
    };
    const int nthreads = std::max(1, std::min(workers, n));
    if (nthreads == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (int t = 0; t < nthreads; ++t)
            pool.emplace_back(work);
    }
    EnergyReport rep;
    for (int k = 0; k < n; ++k) {
        if (slots[k])
            rep.records.push_back(std::move(*slots[k]));
        if (fails[k])
            rep.failures.push_back(std::move(*fails[k]));
    }
    return rep;
}

// ---- serialization ---------------------------------------------------------

inline std::string format_float(double x) { return fmt::format("{:.12g}", x); }

/// x rounded to the 12 significant digits used in every report.
inline double round12(double x) { return std::stod(format_float(x)); }

inline const char *csv_header() {
    return "label,e_casci,de_rpa,de_rpa_quad,de_sosex,stable,n_cv,n_ca,n_av,n_aa";
}

inline std::string csv_escape(const std::string &s) {
    if (s.find_first_of(",\"\n") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char c : s)
        out += c == '"' ? std::string("\"\"") : std::string(1, c);
    return out + "\"";
}

inline std::string emit_csv(const EnergyReport &rep) {
    auto opt = [](const std::optional<double> &x) { return x ? format_float(*x) : std::string(); };
    std::string out = csv_header();
    out += '\n';
    for (const auto &r : rep.records)
        out += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", csv_escape(r.label),
                           format_float(r.e_casci), opt(r.de_rpa), opt(r.de_rpa_quad),
                           opt(r.de_sosex), r.stable ? "true" : "false", r.class_counts[0],
                           r.class_counts[1], r.class_counts[2], r.class_counts[3]);
    return out;
}

inline nlohmann::json to_json(const EnergyRecord &r, bool timings = true) {
    nlohmann::json j;
    auto put = [&](const char *key, const std::optional<double> &x) {
        j[key] = x ? nlohmann::json(round12(*x)) : nlohmann::json(nullptr);
    };
    j["label"] = r.label;
    j["e_casci"] = round12(r.e_casci);
    put("de_rpa", r.de_rpa);
    put("de_rpa_quad", r.de_rpa_quad);
    put("de_rpa_trbt", r.de_rpa_trbt);
    put("de_sosex", r.de_sosex);
    put("omega_min_rpa", r.omega_min_rpa);
    put("omega_min_tda", r.omega_min_tda);
    j["ring_orders"] = nlohmann::json::array();
    for (double x : r.ring_orders)
        j["ring_orders"].push_back(round12(x));
    j["stable"] = r.stable;
    j["diagnostic"] = r.diagnostic;
    j["manifold"] = {{"cv", r.class_counts[0]},
                     {"ca", r.class_counts[1]},
                     {"av", r.class_counts[2]},
                     {"aa", r.class_counts[3]}};
    if (timings)
        j["seconds"] = round12(r.seconds);
    return j;
}

inline EnergyRecord record_from_json(const nlohmann::json &j) {
    EnergyRecord r;
    auto get = [&](const char *key) -> std::optional<double> {
        if (!j.contains(key) || j.at(key).is_null())
            return std::nullopt;
        return j.at(key).get<double>();
    };
    r.label = j.at("label").get<std::string>();
    r.e_casci = j.at("e_casci").get<double>();
    r.de_rpa = get("de_rpa");
    r.de_rpa_quad = get("de_rpa_quad");
    r.de_rpa_trbt = get("de_rpa_trbt");
    r.de_sosex = get("de_sosex");
    r.omega_min_rpa = get("omega_min_rpa");
    r.omega_min_tda = get("omega_min_tda");
    r.ring_orders = j.value("ring_orders", std::vector<double>{});
    r.stable = j.at("stable").get<bool>();
    r.diagnostic = j.value("diagnostic", std::string());
    const auto &m = j.at("manifold");
    r.class_counts = {m.at("cv").get<int>(), m.at("ca").get<int>(), m.at("av").get<int>(),
                      m.at("aa").get<int>()};
    r.seconds = j.value("seconds", 0.0);
    return r;
}

inline std::string emit_json(const EnergyReport &rep, bool timings = true) {
    nlohmann::json j;
    j["records"] = nlohmann::json::array();
    for (const auto &r : rep.records)
        j["records"].push_back(to_json(r, timings));
    j["failures"] = nlohmann::json::array();
    for (const auto &f : rep.failures)
        j["failures"].push_back({{"label", f.label}, {"kind", f.kind}, {"message", f.message}});
    return j.dump(2) + "\n";
}

inline EnergyReport parse_report_json(const std::string &text) {
    const auto j = nlohmann::json::parse(text);
    EnergyReport rep;
    for (const auto &r : j.at("records"))
        rep.records.push_back(record_from_json(r));
    for (const auto &f : j.value("failures", nlohmann::json::array()))
        rep.failures.push_back({f.at("label").get<std::string>(), f.at("kind").get<std::string>(),
                                f.at("message").get<std::string>()});
    return rep;
}

inline std::string emit(const EnergyReport &rep, ReportFormat format, bool timings = true) {
    return format == ReportFormat::Csv ? emit_csv(rep) : emit_json(rep, timings);
}

/// Writes the report; throws std::runtime_error if the path is unwritable.
inline void write_report(const EnergyReport &rep, ReportFormat format, const fs::path &path,
                         bool timings = true) {
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw std::runtime_error("cannot write report to " + path.string());
    os << emit(rep, format, timings);
    if (!os)
        throw std::runtime_error("write failed for " + path.string());
}

} // namespace mrrpa
