#pragma once

#include <cstddef>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "judgecal/variance_fit.hpp"

namespace judgecal {

inline constexpr const char* kOutlierReason = "outlier-vs-median";

/// One judge's mark on one performance, normalized by the discipline's
/// fitted error variability at that performance's control score.
struct EvaluationScore {
    std::string discipline_id;
    std::string competition_id;
    std::string performance_id;
    std::string judge_id;
    double control_score = 0.0;
    double error = 0.0;
    double sigma_hat = 0.0;
    double marking = 0.0;
    bool flagged = false;
    double threshold = 0.0;  // error-space threshold used when flagging
    std::string reason;      // kOutlierReason when flagged; never an accusation
};

struct JudgeProfile {
    std::string judge_id;
    std::string discipline_id;  // "*" for the pooled profile
    std::size_t evaluation_count = 0;
    double overall_marking = 0.0;
    std::size_t flagged_count = 0;
    bool low_confidence = false;
    bool degenerate = false;  // overall_marking == 0: nothing can be flagged
    std::set<std::string> disciplines;
};

inline constexpr const char* kPooledDiscipline = "*";

std::vector<EvaluationScore> marking_scores(std::span<const JudgingError> errors, const VarianceModel& model,
                                            const std::string& discipline_id = {});

/// Root mean square of the markings. Throws std::invalid_argument on empty input.
double overall_marking(std::span<const EvaluationScore> scores);

struct ProfileOptions {
    std::size_t min_evaluations = 20;
    double flag_multiplier = 2.0;
};

/// Flags evaluations of a single judge with |error| > multiplier * sigma_hat * M_j
/// and updates the profile's flagged_count. A zero M_j flags nothing and marks
/// the profile degenerate.
void flag_outliers(std::span<EvaluationScore> scores, JudgeProfile& profile, double multiplier = 2.0);

/// One profile per judge over `scores` (a discipline or a competition scope),
/// with outliers flagged in place. Profiles are sorted by judge_id.
std::vector<JudgeProfile> profile_judges(std::span<EvaluationScore> scores, const ProfileOptions& options = {});

/// Pooled per-judge profiles over markings from several disciplines. Flags are
/// not touched.
std::vector<JudgeProfile> pooled_profiles(std::span<const EvaluationScore> scores, const ProfileOptions& options = {});

struct Ranking {
    std::vector<JudgeProfile> confident;       // descending M_j
    std::vector<JudgeProfile> low_confidence;  // same order, trailing section
};

/// Descending M_j; ties by evaluation_count descending, then judge_id.
Ranking rank_judges(std::vector<JudgeProfile> profiles);

/// `judge_id,discipline_id,evaluation_count,overall_marking,flagged_count,confidence`
void write_judge_report(std::ostream& out, std::span<const JudgeProfile> profiles);

/// One row per flagged evaluation.
void write_flag_report(std::ostream& out, std::span<const EvaluationScore> scores);

}  // namespace judgecal
