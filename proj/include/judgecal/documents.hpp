#pragma once

// JSON documents exchanged between the pipeline stages: fitted variance models,
// scenario configurations and scenario scorecards. Plain CSV tables for plotting.

#include <istream>
#include <ostream>
#include <string>

#include <json.hpp>

#include "judgecal/synthetic.hpp"
#include "judgecal/variance_fit.hpp"

namespace judgecal {

struct ModelDocument {
    std::string discipline_id;
    VarianceModel model;
};

nlohmann::ordered_json to_json(const ModelDocument& doc);
ModelDocument model_document_from_json(const nlohmann::json& j);

void write_model_document(std::ostream& out, const ModelDocument& doc);
/// Throws std::invalid_argument on a malformed document.
ModelDocument read_model_document(std::istream& in);
ModelDocument read_model_document_file(const std::string& path);

/// `c,sigma_hat` rows, `samples` points evenly spaced over the model domain.
void write_curve_samples(std::ostream& out, const VarianceModel& model, int samples = 200);

/// `center,count,sigma,lo,hi` rows.
void write_bin_table(std::ostream& out, const VarianceModel& model);

namespace synthetic {

nlohmann::ordered_json to_json(const ScenarioSpec& spec);
/// Throws std::invalid_argument on a malformed configuration.
ScenarioSpec scenario_from_json(const nlohmann::json& j);
ScenarioSpec read_scenario_file(const std::string& path);

nlohmann::ordered_json to_json(const Scorecard& card);

}  // namespace synthetic

}  // namespace judgecal
