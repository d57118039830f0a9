#pragma once

#include <Eigen/Core>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace tailmix {

/// An ordered collection of positive loss values, optionally tagged with a
/// categorical group label per observation.
struct LossSample {
    Eigen::ArrayXd values;
    std::vector<std::string> labels;  // empty, or one label per value

    LossSample() = default;
    explicit LossSample(Eigen::ArrayXd v) : values(std::move(v)) {}
    LossSample(Eigen::ArrayXd v, std::vector<std::string> l)
        : values(std::move(v)), labels(std::move(l)) {
        if (!labels.empty() && labels.size() != static_cast<std::size_t>(values.size())) {
            throw std::invalid_argument("LossSample: label count does not match value count");
        }
    }

    Eigen::Index size() const { return values.size(); }
    bool labeled() const { return !labels.empty(); }

    /// Splits by label, preserving observation order. Sorted label keys give a
    /// deterministic iteration order for parallel per-group work.
    std::map<std::string, LossSample> by_group() const;
};

inline std::map<std::string, LossSample> LossSample::by_group() const {
    if (!labeled()) throw std::invalid_argument("LossSample: sample is unlabeled");
    std::map<std::string, std::vector<double>> buckets;
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        buckets[labels[static_cast<std::size_t>(i)]].push_back(values[i]);
    }
    std::map<std::string, LossSample> out;
    for (auto& [key, vals] : buckets) {
        Eigen::ArrayXd arr = Eigen::Map<const Eigen::ArrayXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
        out.emplace(key, LossSample(std::move(arr)));
    }
    return out;
}

}  // namespace tailmix
