#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "judgecal/data_core.hpp"

namespace judgecal {

/// Deviation of one mark from its panel's control score.
struct JudgingError {
    std::string competition_id;
    std::string performance_id;
    std::string judge_id;
    Points control_score;
    Points error;  // mark - control_score, exact
};

/// One mark per (performance, judge) of `discipline`, ordered as in the dataset.
/// Throws std::out_of_range for an unknown discipline.
std::vector<JudgingError> extract_errors(const Dataset& dataset, const std::string& discipline);

enum class SigmaCentering {
    bin_mean,  // sample SD about the bin's own error mean, denominator n - 1
    zero,      // RMS about zero, denominator n
};

struct BinningPolicy {
    std::size_t min_count = 10;
    SigmaCentering centering = SigmaCentering::bin_mean;
};

struct VarianceBin {
    double center = 0.0;  // count-weighted mean control score of the bin
    std::size_t count = 0;
    double sigma = 0.0;
    Points lo;  // smallest control score merged into the bin
    Points hi;  // largest
};

/// Groups errors by exact control score, then repeatedly merges the smallest
/// under-populated bin into its nearest neighbour until every bin holds at least
/// `policy.min_count` errors (or one bin is left). Bins with fewer than two errors
/// are dropped. Result is ordered by center.
std::vector<VarianceBin> bin_errors(std::span<const JudgingError> errors, const BinningPolicy& policy = {});

enum class ModelKind { quadratic, exponential };
enum class Shape { concave, convex, degenerate };

std::string to_string(ModelKind kind);
std::string to_string(Shape shape);
ModelKind model_kind_from_string(const std::string& s);
Shape shape_from_string(const std::string& s);

struct VarianceModel {
    ModelKind kind = ModelKind::quadratic;
    /// quadratic: a0, a1, a2 of a0 + a1 c + a2 c^2; exponential: alpha, beta, 0 of alpha e^{beta c}
    std::array<double, 3> coefficients{};
    double domain_lo = 0.0;
    double domain_hi = 0.0;
    double floor = 1e-6;
    std::optional<double> r2_weighted;  // missing when all bin sigmas are equal
    double rmsd_weighted = 0.0;
    Shape shape = Shape::degenerate;
    double condition = 0.0;  // normal-matrix condition number (quadratic only)
    bool converged = true;   // exponential only
    std::vector<VarianceBin> bins;

    double raw(double c) const;
};

enum class FitFailureReason { insufficient_support, singular, not_converged };

class FitFailure : public std::runtime_error {
public:
    FitFailure(FitFailureReason reason, const std::string& what, std::optional<VarianceModel> best = std::nullopt)
        : std::runtime_error(what), reason_(reason), best_(std::move(best)) {}

    FitFailureReason reason() const { return reason_; }
    /// Best iterate for a non-converged exponential fit.
    const std::optional<VarianceModel>& best_iterate() const { return best_; }

private:
    FitFailureReason reason_;
    std::optional<VarianceModel> best_;
};

/// max(1e-6, step / 100)
double sigma_floor(const Scale& scale);

constexpr double kMaxCondition = 1e12;

/// Count-weighted least-squares parabola through the bin sigmas. Needs three
/// distinct centers; throws FitFailure otherwise or when the normal equations are
/// singular / worse conditioned than kMaxCondition.
VarianceModel fit_quadratic(std::span<const VarianceBin> bins, double floor = 1e-6);

/// Count-weighted least-squares fit of alpha e^{beta c}. Needs two distinct
/// centers. Throws FitFailure (carrying the best iterate) on non-convergence.
VarianceModel fit_exponential(std::span<const VarianceBin> bins, double floor = 1e-6);

struct Diagnostics {
    std::optional<double> r2_weighted;
    double rmsd_weighted = 0.0;
};

Diagnostics diagnostics(std::span<const VarianceBin> bins, const VarianceModel& model);

struct SigmaEval {
    double value = 0.0;
    bool clamped = false;
    bool outside_domain = false;
};

SigmaEval evaluate_sigma_detailed(const VarianceModel& model, double c);

/// Model value at c, never below model.floor.
inline double evaluate_sigma(const VarianceModel& model, double c) { return evaluate_sigma_detailed(model, c).value; }

/// Errors -> bins -> fit for one discipline.
VarianceModel fit_discipline(const Dataset& dataset, const std::string& discipline, ModelKind kind,
                             const BinningPolicy& policy = {});

}  // namespace judgecal
