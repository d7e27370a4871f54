#include "judgecal/documents.hpp"

#include <fstream>
#include <stdexcept>

#include "judgecal/format.hpp"

namespace judgecal {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

template <typename T>
T require(const json& j, const char* key) {
    if (!j.contains(key)) throw std::invalid_argument(std::string("missing field '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("bad field '") + key + "': " + e.what());
    }
}

Points points_field(const json& j, const char* key) {
    if (!j.contains(key)) throw std::invalid_argument(std::string("missing field '") + key + "'");
    const auto& v = j.at(key);
    if (v.is_string()) {
        if (auto p = Points::parse(v.get<std::string>())) return *p;
    } else if (v.is_number()) {
        return Points::from_double(v.get<double>());
    }
    throw std::invalid_argument(std::string("bad decimal in field '") + key + "'");
}

ordered_json optional_number(const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

}  // namespace

ordered_json to_json(const ModelDocument& doc) {
    const auto& m = doc.model;
    ordered_json j;
    j["discipline_id"] = doc.discipline_id;
    j["kind"] = to_string(m.kind);
    if (m.kind == ModelKind::quadratic) {
        j["coefficients"] = {{"a0", m.coefficients[0]}, {"a1", m.coefficients[1]}, {"a2", m.coefficients[2]}};
    } else {
        j["coefficients"] = {{"alpha", m.coefficients[0]}, {"beta", m.coefficients[1]}};
    }
    j["domain"] = {m.domain_lo, m.domain_hi};
    j["floor"] = m.floor;
    j["r2_weighted"] = optional_number(m.r2_weighted);
    j["rmsd_weighted"] = m.rmsd_weighted;
    j["shape"] = to_string(m.shape);
    if (m.kind == ModelKind::quadratic) {
        j["condition"] = m.condition;
    } else {
        j["converged"] = m.converged;
    }
    ordered_json bins = ordered_json::array();
    for (const auto& b : m.bins) {
        bins.push_back({{"center", b.center},
                        {"count", b.count},
                        {"sigma", b.sigma},
                        {"lo", b.lo.to_string()},
                        {"hi", b.hi.to_string()}});
    }
    j["bins"] = std::move(bins);
    return j;
}

ModelDocument model_document_from_json(const json& j) {
    ModelDocument doc;
    doc.discipline_id = require<std::string>(j, "discipline_id");
    auto& m = doc.model;
    m.kind = model_kind_from_string(require<std::string>(j, "kind"));
    const auto coeffs = require<json>(j, "coefficients");
    if (m.kind == ModelKind::quadratic) {
        m.coefficients = {require<double>(coeffs, "a0"), require<double>(coeffs, "a1"), require<double>(coeffs, "a2")};
    } else {
        m.coefficients = {require<double>(coeffs, "alpha"), require<double>(coeffs, "beta"), 0.0};
    }
    const auto domain = require<std::vector<double>>(j, "domain");
    if (domain.size() != 2) throw std::invalid_argument("domain must hold two values");
    m.domain_lo = domain[0];
    m.domain_hi = domain[1];
    m.floor = require<double>(j, "floor");
    if (!(m.floor > 0.0)) throw std::invalid_argument("floor must be positive");
    if (j.contains("r2_weighted") && !j.at("r2_weighted").is_null()) m.r2_weighted = require<double>(j, "r2_weighted");
    m.rmsd_weighted = require<double>(j, "rmsd_weighted");
    m.shape = shape_from_string(require<std::string>(j, "shape"));
    if (j.contains("condition")) m.condition = require<double>(j, "condition");
    if (j.contains("converged")) m.converged = require<bool>(j, "converged");
    if (j.contains("bins")) {
        for (const auto& b : j.at("bins")) {
            m.bins.push_back({require<double>(b, "center"), require<std::size_t>(b, "count"),
                              require<double>(b, "sigma"), points_field(b, "lo"), points_field(b, "hi")});
        }
    }
    return doc;
}

void write_model_document(std::ostream& out, const ModelDocument& doc) { out << to_json(doc).dump(2) << '\n'; }

ModelDocument read_model_document(std::istream& in) {
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("model document is not valid JSON: ") + e.what());
    }
    return model_document_from_json(j);
}

ModelDocument read_model_document_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open '" + path + "'");
    return read_model_document(in);
}

void write_curve_samples(std::ostream& out, const VarianceModel& model, int samples) {
    out << "c,sigma_hat\n";
    for (int i = 0; i < samples; ++i) {
        const double c = samples == 1 ? model.domain_lo
                                      : model.domain_lo + (model.domain_hi - model.domain_lo) * i / (samples - 1);
        out << format_double(c) << ',' << format_double(evaluate_sigma(model, c)) << '\n';
    }
}

void write_bin_table(std::ostream& out, const VarianceModel& model) {
    out << "center,count,sigma,lo,hi\n";
    for (const auto& b : model.bins) {
        out << format_double(b.center) << ',' << b.count << ',' << format_double(b.sigma) << ',' << b.lo.to_string()
            << ',' << b.hi.to_string() << '\n';
    }
}

namespace synthetic {

ordered_json to_json(const ScenarioSpec& spec) {
    ordered_json j;
    j["competition_id"] = spec.competition_id;
    j["discipline_id"] = spec.discipline_id;
    j["true_sigma"] = {{"kind", judgecal::to_string(spec.true_sigma.kind)},
                       {"coefficients", spec.true_sigma.coefficients}};
    ordered_json q;
    q["distribution"] = spec.quality.kind == QualityDistribution::Kind::uniform ? "uniform" : "beta";
    q["lo"] = spec.quality.lo;
    q["hi"] = spec.quality.hi;
    if (spec.quality.kind == QualityDistribution::Kind::beta) {
        q["a"] = spec.quality.shape_a;
        q["b"] = spec.quality.shape_b;
    }
    j["quality"] = std::move(q);
    j["panel_size"] = spec.panel_size;
    j["scale"] = {{"min", spec.scale.min_mark.to_string()},
                  {"max", spec.scale.max_mark.to_string()},
                  {"step", spec.scale.step.to_string()}};
    j["n_performances"] = spec.n_performances;
    ordered_json judges = ordered_json::array();
    for (const auto& a : spec.archetypes) {
        judges.push_back({{"kind", to_string(a.kind)},
                          {"noise_multiplier", a.noise_multiplier},
                          {"bias_offset", a.bias_offset},
                          {"cheat_fraction", a.cheat_fraction},
                          {"boost", a.boost}});
    }
    j["judges"] = std::move(judges);
    j["seed"] = spec.seed;
    return j;
}

ScenarioSpec scenario_from_json(const json& j) {
    ScenarioSpec spec;
    if (j.contains("competition_id")) spec.competition_id = require<std::string>(j, "competition_id");
    if (j.contains("discipline_id")) spec.discipline_id = require<std::string>(j, "discipline_id");

    const auto sigma = require<json>(j, "true_sigma");
    spec.true_sigma.kind = model_kind_from_string(require<std::string>(sigma, "kind"));
    const auto coeffs = require<std::vector<double>>(sigma, "coefficients");
    const std::size_t expected = spec.true_sigma.kind == ModelKind::quadratic ? 3 : 2;
    if (coeffs.size() != expected && coeffs.size() != 3) {
        throw std::invalid_argument("true_sigma.coefficients has the wrong length");
    }
    for (std::size_t i = 0; i < expected; ++i) spec.true_sigma.coefficients[i] = coeffs[i];

    const auto scale = require<json>(j, "scale");
    spec.scale = Scale{points_field(scale, "min"), points_field(scale, "max"), points_field(scale, "step")};

    const auto quality = j.contains("quality") ? j.at("quality") : json::object();
    const std::string dist = quality.contains("distribution") ? require<std::string>(quality, "distribution") : "uniform";
    const double lo = quality.contains("lo") ? require<double>(quality, "lo") : spec.scale.min_mark.to_double();
    const double hi = quality.contains("hi") ? require<double>(quality, "hi") : spec.scale.max_mark.to_double();
    if (dist == "uniform") {
        spec.quality = QualityDistribution::uniform(lo, hi);
    } else if (dist == "skewed") {
        spec.quality = QualityDistribution::skewed_high(lo, hi);
    } else if (dist == "beta") {
        spec.quality = {QualityDistribution::Kind::beta, lo, hi, require<double>(quality, "a"), require<double>(quality, "b")};
    } else {
        throw std::invalid_argument("unknown quality distribution '" + dist + "'");
    }

    spec.panel_size = require<int>(j, "panel_size");
    spec.n_performances = require<std::size_t>(j, "n_performances");
    spec.seed = j.contains("seed") ? require<std::uint64_t>(j, "seed") : 0;
    if (j.contains("judges")) {
        for (const auto& a : j.at("judges")) {
            JudgeArchetype arch;
            arch.kind = archetype_from_string(require<std::string>(a, "kind"));
            if (a.contains("noise_multiplier")) arch.noise_multiplier = require<double>(a, "noise_multiplier");
            if (a.contains("bias_offset")) arch.bias_offset = require<double>(a, "bias_offset");
            if (a.contains("cheat_fraction")) arch.cheat_fraction = require<double>(a, "cheat_fraction");
            if (a.contains("boost")) arch.boost = require<double>(a, "boost");
            spec.archetypes.push_back(arch);
        }
    }
    return spec;
}

ScenarioSpec read_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("scenario is not valid JSON: ") + e.what());
    }
    return scenario_from_json(j);
}

ordered_json to_json(const Scorecard& card) {
    ordered_json j;
    j["fitted_kind"] = judgecal::to_string(card.fitted_kind);
    if (!card.fit_error.empty()) j["fit_error"] = card.fit_error;
    j["truth"] = card.truth;
    j["reference"] = card.reference;
    j["fitted"] = card.fitted;
    j["noise_scale"] = card.noise_scale;
    j["median_deflation"] = card.median_deflation;
    j["coefficients_comparable"] = card.coefficients_comparable;
    j["coefficient_abs_error"] = card.coefficient_abs_error;
    ordered_json rel = ordered_json::array();
    for (const auto& e : card.coefficient_rel_error) rel.push_back(optional_number(e));
    j["coefficient_rel_error"] = std::move(rel);
    j["max_coefficient_rel_error"] = optional_number(card.max_coefficient_rel_error());
    j["curve_max_abs_error"] = card.curve_max_abs_error;
    j["truth_shape"] = judgecal::to_string(card.truth_shape);
    j["fitted_shape"] = judgecal::to_string(card.fitted_shape);
    j["shape_correct"] = card.shape_correct;
    j["r2_weighted"] = optional_number(card.r2_weighted);
    j["rmsd_weighted"] = card.rmsd_weighted;
    ordered_json judges = ordered_json::array();
    for (const auto& o : card.judges) {
        judges.push_back({{"judge_id", o.judge_id},
                          {"archetype", to_string(o.kind)},
                          {"overall_marking", o.overall_marking},
                          {"rank", o.rank},
                          {"evaluations", o.evaluations},
                          {"flagged", o.flagged}});
    }
    j["judges"] = std::move(judges);
    j["evaluations"] = card.evaluations;
    j["flagged"] = card.flagged;
    j["flag_rate"] = card.flag_rate();
    j["cheat_evaluations"] = card.cheat_evaluations;
    j["cheat_flagged"] = card.cheat_flagged;
    j["cheat_recall"] = optional_number(card.cheat_recall);
    j["cheat_precision"] = optional_number(card.cheat_precision);
    j["clamp_fraction"] = card.clamp_fraction;
    return j;
}

}  // namespace synthetic

}  // namespace judgecal
