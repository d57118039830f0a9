#include "tailmix/model_io.hpp"

#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "tailmix/errors.hpp"

namespace tailmix {

namespace {

using nlohmann::json;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void append_mixture(std::ostream& os, const MixtureModel& m) {
    os << "{\"u\": " << fmt(m.threshold) << ", \"phi_u\": " << fmt(m.phi)
       << ", \"bulk\": {\"mu\": " << fmt(m.bulk.mu) << ", \"sigma_log\": " << fmt(m.bulk.sigma_log)
       << "}, \"tail\": {\"sigma\": " << fmt(m.tail.scale) << ", \"xi\": " << fmt(m.tail.shape)
       << "}}";
}

void append_report_arrays(std::ostream& os, const WeightReport& report) {
    os << "\"thresholds\": [";
    for (std::size_t i = 0; i < report.rows.size(); ++i) {
        os << (i ? ", " : "") << fmt(report.rows[i].threshold);
    }
    os << "], \"w\": [";
    for (std::size_t i = 0; i < report.rows.size(); ++i) {
        os << (i ? ", " : "") << fmt(report.rows[i].w);
    }
    os << "], \"w_star\": [";
    for (std::size_t i = 0; i < report.rows.size(); ++i) {
        os << (i ? ", " : "") << fmt(report.rows[i].w_star);
    }
    os << "], \"u_star\": ";
    if (report.u_star) {
        os << fmt(*report.u_star);
    } else {
        os << "null";
    }
}

void append_combination(std::ostream& os, const std::vector<MixtureModel>& models,
                        const WeightReport& report) {
    os << "{";
    append_report_arrays(os, report);
    os << ", \"models\": [";
    for (std::size_t i = 0; i < models.size(); ++i) {
        if (i) os << ", ";
        append_mixture(os, models[i]);
    }
    os << "]}";
}

std::string maybe_indent(const std::string& compact, int indent) {
    if (indent <= 0) return compact;
    return json::parse(compact).dump(indent);
}

double number_at(const json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_number()) {
        throw InputError(std::string("model JSON: missing numeric field '") + key + "'");
    }
    return j[key].get<double>();
}

MixtureModel mixture_from(const json& j) {
    MixtureModel m;
    m.threshold = number_at(j, "u");
    m.phi = number_at(j, "phi_u");
    if (!j.contains("bulk") || !j.contains("tail")) {
        throw InputError("model JSON: missing 'bulk' or 'tail' object");
    }
    m.bulk.mu = number_at(j["bulk"], "mu");
    m.bulk.sigma_log = number_at(j["bulk"], "sigma_log");
    m.tail.scale = number_at(j["tail"], "sigma");
    m.tail.shape = number_at(j["tail"], "xi");
    m.tail.location = m.threshold;
    validate(m);
    return m;
}

WeightReport report_from(const json& j, std::size_t model_count) {
    WeightReport report;
    const auto& w = j.at("w");
    const auto& w_star = j.at("w_star");
    const auto& thresholds = j.at("thresholds");
    if (!w.is_array() || !w_star.is_array() || !thresholds.is_array() ||
        w.size() != model_count || w_star.size() != model_count || thresholds.size() != model_count) {
        throw InputError("model JSON: combination arrays malformed");
    }
    for (std::size_t i = 0; i < model_count; ++i) {
        WeightRow row;
        row.threshold = thresholds[i].get<double>();
        row.w = w[i].get<double>();
        row.w_star = w_star[i].get<double>();
        report.rows.push_back(row);
    }
    if (j.contains("u_star") && !j["u_star"].is_null()) {
        report.u_star = j["u_star"].get<double>();
    }
    return report;
}

std::pair<std::vector<MixtureModel>, WeightReport> combination_from(const json& j) {
    if (!j.contains("models") || !j["models"].is_array() || j["models"].empty()) {
        throw InputError("model JSON: combination without models");
    }
    std::vector<MixtureModel> models;
    for (const auto& mj : j["models"]) models.push_back(mixture_from(mj));
    return {std::move(models), report_from(j, models.size())};
}

}  // namespace

std::string to_json(const MixtureModel& model, int indent) {
    std::ostringstream os;
    append_mixture(os, model);
    return maybe_indent(os.str(), indent);
}

std::string to_json(const GroupedMixture& models, int indent) {
    std::ostringstream os;
    os << "{";
    bool first = true;
    for (const auto& [label, model] : models) {
        if (!first) os << ", ";
        first = false;
        os << json(label).dump() << ": ";
        append_mixture(os, model);
    }
    os << "}";
    return maybe_indent(os.str(), indent);
}

std::string combination_json(const std::vector<MixtureModel>& models, const WeightReport& report,
                             int indent) {
    std::ostringstream os;
    os << "{\"combination\": ";
    append_combination(os, models, report);
    os << "}";
    return maybe_indent(os.str(), indent);
}

std::string grouped_combination_json(const std::map<std::string, std::vector<MixtureModel>>& models,
                                     const std::map<std::string, WeightReport>& reports,
                                     int indent) {
    std::ostringstream os;
    os << "{\"combination_groups\": {";
    bool first = true;
    for (const auto& [label, group_models] : models) {
        if (!first) os << ", ";
        first = false;
        os << json(label).dump() << ": ";
        append_combination(os, group_models, reports.at(label));
    }
    os << "}}";
    return maybe_indent(os.str(), indent);
}

MixtureModel mixture_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw InputError(std::string("model JSON: ") + e.what());
    }
    return mixture_from(j);
}

GroupedMixture grouped_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw InputError(std::string("model JSON: ") + e.what());
    }
    GroupedMixture out;
    for (const auto& [label, mj] : j.items()) out.emplace(label, mixture_from(mj));
    if (out.empty()) throw InputError("model JSON: no groups");
    return out;
}

LoadedModel load_model_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw InputError(std::string("model JSON: ") + e.what());
    }
    if (!j.is_object()) throw InputError("model JSON: expected an object");

    LoadedModel out;
    try {
        if (j.contains("combination")) {
            out.kind = LoadedModel::Kind::combination;
            std::tie(out.combination_models, out.combination_report) =
                combination_from(j["combination"]);
        } else if (j.contains("combination_groups")) {
            out.kind = LoadedModel::Kind::grouped_combination;
            for (const auto& [label, cj] : j["combination_groups"].items()) {
                auto [models, report] = combination_from(cj);
                out.group_combination_models.emplace(label, std::move(models));
                out.group_combination_reports.emplace(label, std::move(report));
            }
            if (out.group_combination_models.empty()) {
                throw InputError("model JSON: empty combination_groups");
            }
        } else if (j.contains("u")) {
            out.kind = LoadedModel::Kind::single;
            out.single = mixture_from(j);
        } else {
            out.kind = LoadedModel::Kind::grouped;
            for (const auto& [label, mj] : j.items()) out.grouped.emplace(label, mixture_from(mj));
            if (out.grouped.empty()) throw InputError("model JSON: empty document");
        }
    } catch (const json::exception& e) {
        throw InputError(std::string("model JSON: ") + e.what());
    } catch (const std::domain_error& e) {
        throw InputError(std::string("model JSON: ") + e.what());
    }
    return out;
}

}  // namespace tailmix
