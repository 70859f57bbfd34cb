#include "sigpal/serialize.hpp"

#include "sigpal/error.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <ostream>

namespace sigpal {

std::string format_double(double v) {
    if (std::isnan(v)) return "NaN";
    if (std::isinf(v)) return v > 0 ? "Infinity" : "-Infinity";
    std::array<char, 32> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), end);
}

namespace {

Json number(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;
}

SpectrumSource parse_source(const std::string& s) {
    for (auto src : {SpectrumSource::sample, SpectrumSource::hard, SpectrumSource::soft, SpectrumSource::known})
        if (to_string(src) == s) return src;
    throw InvalidInput("unknown spectrum source '" + s + "'");
}

template <typename T>
void read_if(const Json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("bad value for '") + key + "': " + e.what());
    }
}

void require_object(const Json& j, const char* what) {
    if (!j.is_object()) throw InvalidInput(std::string(what) + " must be a JSON object");
}

}  // namespace

Json to_json(const EigenSpectrum& s) {
    Json j;
    j["source"] = std::string(to_string(s.source));
    j["values"] = Json::array();
    for (Eigen::Index i = 0; i < s.size(); ++i) j["values"].push_back(s.values(i));
    if (s.noise_level) j["noise_level"] = *s.noise_level;
    if (s.tau) j["tau"] = *s.tau;
    j["energy_preserved"] = s.energy_preserved;
    return j;
}

EigenSpectrum spectrum_from_json(const Json& j) {
    const Json* values = &j;
    if (j.is_object()) {
        if (!j.contains("values")) throw InvalidInput("spectrum JSON needs a 'values' array");
        values = &j.at("values");
    }
    if (!values->is_array() || values->empty()) throw InvalidInput("spectrum values must be a nonempty array");
    Vector v(static_cast<Eigen::Index>(values->size()));
    for (std::size_t i = 0; i < values->size(); ++i) {
        if (!(*values)[i].is_number()) throw InvalidInput("spectrum values must be numbers");
        v(static_cast<Eigen::Index>(i)) = (*values)[i].get<double>();
    }
    EigenSpectrum s = known_spectrum(std::move(v));
    if (j.is_object()) {
        if (j.contains("source")) s.source = parse_source(j.at("source").get<std::string>());
        if (j.contains("noise_level")) s.noise_level = j.at("noise_level").get<double>();
        if (j.contains("tau")) s.tau = j.at("tau").get<double>();
        read_if(j, "energy_preserved", s.energy_preserved);
    }
    return s;
}

Json to_json(const AssignerSpec& s) {
    Json j;
    j["kind"] = std::string(to_string(s.kind));
    j["restarts"] = s.restarts;
    j["max_iters"] = s.max_iters;
    j["c"] = s.c;
    j["penalty"] = s.penalty;
    j["steps"] = s.steps;
    return j;
}

AssignerSpec assigner_from_json(const Json& j, AssignerSpec base) {
    if (j.is_string()) {
        base.kind = parse_assigner_kind(j.get<std::string>());
        return base;
    }
    require_object(j, "assigner");
    if (j.contains("kind")) base.kind = parse_assigner_kind(j.at("kind").get<std::string>());
    read_if(j, "restarts", base.restarts);
    read_if(j, "max_iters", base.max_iters);
    read_if(j, "c", base.c);
    read_if(j, "penalty", base.penalty);
    read_if(j, "steps", base.steps);
    base.validate();
    return base;
}

Json to_json(const TestResult& r) {
    Json j;
    j["method"] = std::string(to_string(r.method));
    j["observed_stat"] = number(r.observed_stat);
    j["p_value"] = number(r.p_value);
    j["n_sim_or_perm"] = r.n_sim_or_perm;
    j["seed"] = r.seed;
    Json meta = Json::object();
    for (const auto& [k, v] : r.metadata) meta[k] = v;
    j["metadata"] = std::move(meta);
    j["null_stats"] = Json::array();
    for (double v : r.null_stats) j["null_stats"].push_back(number(v));
    return j;
}

void write_null_stats_csv(std::ostream& out, const TestResult& r) {
    out << "null_stat\n";
    for (double v : r.null_stats) out << format_double(v) << '\n';
}

namespace sim {

Json to_json(const GeneratorSpec& s) {
    Json j;
    j["kind"] = std::string(to_string(s.kind));
    j["n"] = s.n;
    j["d"] = s.d;
    j["v"] = s.v;
    j["w"] = s.w;
    j["a"] = s.a;
    j["labeled_per_class"] = s.labeled_per_class;
    j["labeled_total"] = s.labeled_total;
    j["balanced_null_labels"] = s.balanced_null_labels;
    return j;
}

GeneratorSpec generator_from_json(const Json& j) {
    require_object(j, "generator");
    GeneratorSpec s;
    if (j.contains("kind")) s.kind = parse_case(j.at("kind").get<std::string>());
    read_if(j, "n", s.n);
    read_if(j, "d", s.d);
    read_if(j, "v", s.v);
    read_if(j, "w", s.w);
    read_if(j, "a", s.a);
    read_if(j, "labeled_per_class", s.labeled_per_class);
    read_if(j, "labeled_total", s.labeled_total);
    read_if(j, "balanced_null_labels", s.balanced_null_labels);
    s.validate();
    return s;
}

Json to_json(const MethodConfig& m) {
    Json j;
    j["id"] = m.id;
    j["engine"] = std::string(to_string(m.engine));
    j["assigner"] = sigpal::to_json(m.assigner);
    j["sim_assigner"] = sigpal::to_json(m.sim_assigner);
    j["eigen"] = std::string(to_string(m.eigen));
    return j;
}

MethodConfig method_from_json(const Json& j) {
    if (j.is_string()) return method_by_id(j.get<std::string>());
    require_object(j, "method");
    MethodConfig m = j.contains("base") ? method_by_id(j.at("base").get<std::string>()) : method_sigpal_cop();
    read_if(j, "id", m.id);
    if (j.contains("engine")) {
        const auto e = j.at("engine").get<std::string>();
        if (e == "sigpal") m.engine = Method::sigpal;
        else if (e == "sigclust") m.engine = Method::sigclust;
        else throw InvalidInput("method engine must be 'sigpal' or 'sigclust'");
    }
    if (j.contains("assigner")) m.assigner = assigner_from_json(j.at("assigner"), m.assigner);
    if (j.contains("sim_assigner")) m.sim_assigner = assigner_from_json(j.at("sim_assigner"), m.sim_assigner);
    if (j.contains("eigen")) {
        const auto e = j.at("eigen").get<std::string>();
        if (e == "hard") m.eigen = EigenMethodKind::hard;
        else if (e == "soft") m.eigen = EigenMethodKind::soft;
        else if (e == "known") m.eigen = EigenMethodKind::known;
        else throw InvalidInput("method eigen must be 'hard', 'soft' or 'known'");
    }
    if (m.id.empty()) throw InvalidInput("method id must not be empty");
    return m;
}

Json to_json(const Preset& p) {
    Json j;
    j["name"] = p.name;
    j["description"] = p.description;
    j["reps"] = p.reps;
    j["n_sim"] = p.n_sim;
    j["desk_scale"] = p.desk_scale;
    j["settings"] = Json::array();
    for (const auto& s : p.settings) j["settings"].push_back(Json{{"label", s.label}, {"generator", to_json(s.spec)}});
    j["methods"] = Json::array();
    for (const auto& m : p.methods) j["methods"].push_back(to_json(m));
    return j;
}

Preset preset_from_json(const Json& j) {
    require_object(j, "preset");
    Preset p;
    read_if(j, "name", p.name);
    read_if(j, "description", p.description);
    read_if(j, "reps", p.reps);
    read_if(j, "n_sim", p.n_sim);
    read_if(j, "desk_scale", p.desk_scale);
    if (!j.contains("settings") || !j.at("settings").is_array() || j.at("settings").empty())
        throw InvalidInput("preset needs a nonempty 'settings' array");
    for (const auto& s : j.at("settings")) {
        require_object(s, "setting");
        if (!s.contains("generator")) throw InvalidInput("every setting needs a 'generator' object");
        Setting setting{s.value("label", std::string()), generator_from_json(s.at("generator"))};
        if (setting.label.empty()) setting.label = "setting" + std::to_string(p.settings.size() + 1);
        p.settings.push_back(std::move(setting));
    }
    if (j.contains("methods")) {
        for (const auto& m : j.at("methods")) p.methods.push_back(method_from_json(m));
    } else {
        p.methods = {method_sigpal_l1(), method_sigpal_s3lda(), method_sigpal_cop(), method_sigclust()};
    }
    if (p.methods.empty()) throw InvalidInput("preset needs at least one method");
    if (p.reps < 1 || p.n_sim < 1) throw InvalidInput("preset reps and n_sim must be >= 1");
    if (p.name.empty()) p.name = "custom";
    return p;
}

void write_report_csv(std::ostream& out, const ExperimentReport& report) {
    out << "replicate,method,p_value,seed\n";
    for (const auto& row : report.rows)
        out << row.replicate << ',' << row.method << ',' << format_double(row.p_value) << ',' << row.seed << '\n';
}

Json summary_json(const ExperimentReport& report) {
    Json j;
    j["alpha"] = report.alpha;
    j["reps"] = report.reps;
    Json methods = Json::array();
    for (const auto& [id, count] : report.rejections()) {
        int failures = 0;
        for (const auto& row : report.rows)
            if (row.method == id && !row.error.empty()) ++failures;
        methods.push_back(Json{{"method", id},
                               {"rejections", count},
                               {"rate", static_cast<double>(count) / report.reps},
                               {"failures", failures}});
    }
    j["methods"] = std::move(methods);
    Json errors = Json::array();
    for (const auto& row : report.rows)
        if (!row.error.empty())
            errors.push_back(Json{{"replicate", row.replicate}, {"method", row.method}, {"error", row.error}});
    j["errors"] = std::move(errors);
    return j;
}

}  // namespace sim
}  // namespace sigpal
