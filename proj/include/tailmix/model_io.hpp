#pragma once

#include <iosfwd>
#include <string>

#include "tailmix/bma.hpp"
#include "tailmix/mixture.hpp"

namespace tailmix {

/// Mixture model JSON: {"u":..., "phi_u":..., "bulk":{"mu","sigma_log"},
/// "tail":{"sigma","xi"}}. Floats are written with 17 significant digits so
/// values round-trip exactly.
std::string to_json(const MixtureModel& model, int indent = 0);

/// Grouped models as a label-keyed object of mixture documents.
std::string to_json(const GroupedMixture& models, int indent = 0);

/// Combination document: candidate models with their weights and, when
/// identified, u*. {"combination": {"thresholds":[...], "w":[...],
/// "w_star":[...], "u_star":..., "models":[...]}}
std::string combination_json(const std::vector<MixtureModel>& models, const WeightReport& report,
                             int indent = 0);

MixtureModel mixture_from_json(const std::string& text);
GroupedMixture grouped_from_json(const std::string& text);

struct LoadedModel {
    enum class Kind { single, grouped, combination, grouped_combination };
    Kind kind;
    MixtureModel single;
    GroupedMixture grouped;
    std::vector<MixtureModel> combination_models;
    WeightReport combination_report;
    std::map<std::string, std::vector<MixtureModel>> group_combination_models;
    std::map<std::string, WeightReport> group_combination_reports;
};

/// Parses any of the emitted model documents (single mixture, grouped
/// mixtures, combination, grouped combination). Raises InputError on schema
/// mismatch.
LoadedModel load_model_json(const std::string& text);

std::string grouped_combination_json(const std::map<std::string, std::vector<MixtureModel>>& models,
                                     const std::map<std::string, WeightReport>& reports,
                                     int indent = 0);

}  // namespace tailmix
