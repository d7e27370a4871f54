#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "judgecal/data_core.hpp"
#include "judgecal/judge_metrics.hpp"
#include "judgecal/variance_fit.hpp"

namespace judgecal::synthetic {

/// True error dispersion as a function of performance quality.
struct SigmaCurve {
    ModelKind kind = ModelKind::quadratic;
    std::array<double, 3> coefficients{};  // same layout as VarianceModel

    double operator()(double q) const;
    Shape shape() const;
    /// Smallest value on [lo, hi] (exact for both families).
    double min_on(double lo, double hi) const;
};

enum class ArchetypeKind { honest, erratic, biased, cheater };

std::string to_string(ArchetypeKind kind);
ArchetypeKind archetype_from_string(const std::string& s);

struct JudgeArchetype {
    ArchetypeKind kind = ArchetypeKind::honest;
    double noise_multiplier = 1.0;
    double bias_offset = 0.0;
    double cheat_fraction = 0.0;  // probability that a performance is boosted
    double boost = 0.0;

    static JudgeArchetype honest() { return {}; }
    static JudgeArchetype erratic(double multiplier) { return {ArchetypeKind::erratic, multiplier, 0.0, 0.0, 0.0}; }
    static JudgeArchetype biased(double offset) { return {ArchetypeKind::biased, 1.0, offset, 0.0, 0.0}; }
    static JudgeArchetype cheater(double fraction, double boost) {
        return {ArchetypeKind::cheater, 1.0, 0.0, fraction, boost};
    }
};

struct QualityDistribution {
    enum class Kind { uniform, beta };
    Kind kind = Kind::uniform;
    double lo = 0.0;
    double hi = 10.0;
    double shape_a = 1.0;  // beta only
    double shape_b = 1.0;

    static QualityDistribution uniform(double lo, double hi) { return {Kind::uniform, lo, hi, 1.0, 1.0}; }
    /// Mass piled toward the top of the range, no low-end performances.
    static QualityDistribution skewed_high(double lo, double hi) { return {Kind::beta, lo, hi, 5.0, 1.6}; }
};

struct ScenarioSpec {
    std::string competition_id = "SIM";
    std::string discipline_id = "SIM";
    SigmaCurve true_sigma;
    QualityDistribution quality;
    int panel_size = 5;
    Scale scale{Points::from_int(0), Points::from_int(10), Points::parse("0.1").value()};
    std::size_t n_performances = 1000;
    std::vector<JudgeArchetype> archetypes;  // padded with honest judges up to panel_size
    std::uint64_t seed = 0;

    JudgeArchetype archetype(int judge_index) const;
};

class InfeasibleScenario : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Throws InfeasibleScenario with the first violated constraint.
void validate(const ScenarioSpec& spec);

std::string judge_name(int judge_index);

struct GeneratedScenario {
    Dataset dataset;
    std::vector<MarkRecord> records;
    std::vector<double> true_quality;                            // per performance, in generation order
    std::set<std::pair<std::string, std::string>> cheat_marks;  // (performance_id, judge_id)
    std::size_t clamped_draws = 0;
    std::size_t total_draws = 0;

    double clamp_fraction() const {
        return total_draws ? static_cast<double>(clamped_draws) / static_cast<double>(total_draws) : 0.0;
    }
};

/// Deterministic in spec.seed. Each performance draws from its own generator
/// seeded from (seed, performance index), so results do not depend on the order
/// or partitioning of the work.
GeneratedScenario generate(const ScenarioSpec& spec);

/// sqrt(E[(Z_j - median(Z))^2]) for a panel of n iid standard normals: the
/// dispersion of median-referenced errors relative to the judges' own noise.
double median_deflation(int panel_size);

struct JudgeOutcome {
    std::string judge_id;
    ArchetypeKind kind = ArchetypeKind::honest;
    double overall_marking = 0.0;
    std::size_t rank = 0;  // 1 = highest M_j
    std::size_t flagged = 0;
    std::size_t evaluations = 0;
};

struct Scorecard {
    ModelKind fitted_kind = ModelKind::quadratic;
    std::array<double, 3> truth{};      // generating curve coefficients
    std::array<double, 3> reference{};  // truth scaled by noise scale and median deflation
    std::array<double, 3> fitted{};
    std::array<double, 3> coefficient_abs_error{};
    std::array<std::optional<double>, 3> coefficient_rel_error;  // missing for a zero reference coefficient
    bool coefficients_comparable = false;                         // same family for truth and fit
    double curve_max_abs_error = 0.0;  // raw fitted curve vs reference over the fitted domain
    double noise_scale = 0.0;          // RMS noise multiplier of the panel
    double median_deflation = 0.0;
    Shape truth_shape = Shape::degenerate;
    Shape fitted_shape = Shape::degenerate;
    bool shape_correct = false;
    std::optional<double> r2_weighted;
    double rmsd_weighted = 0.0;
    std::vector<JudgeOutcome> judges;  // by rank
    std::size_t evaluations = 0;
    std::size_t flagged = 0;
    std::size_t cheat_evaluations = 0;
    std::size_t cheat_flagged = 0;
    std::size_t cheater_flags = 0;  // all flags raised on cheater judges
    std::optional<double> cheat_recall;
    std::optional<double> cheat_precision;
    double clamp_fraction = 0.0;
    std::string fit_error;  // non-empty when the fit failed

    double flag_rate() const { return evaluations ? static_cast<double>(flagged) / static_cast<double>(evaluations) : 0.0; }
    std::optional<double> max_coefficient_rel_error() const;
};

struct ScenarioEvaluation {
    ModelKind kind = ModelKind::quadratic;
    BinningPolicy binning;
    ProfileOptions profiles;
};

/// Fits, scores and flags the generated discipline and compares against the truth.
Scorecard evaluate_scenario(const GeneratedScenario& generated, const ScenarioSpec& truth,
                            const ScenarioEvaluation& options = {});

}  // namespace judgecal::synthetic
