#include "judgecal/judge_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <tuple>

#include "judgecal/format.hpp"

namespace judgecal {

std::vector<EvaluationScore> marking_scores(std::span<const JudgingError> errors, const VarianceModel& model,
                                            const std::string& discipline_id) {
    std::vector<EvaluationScore> out;
    out.reserve(errors.size());
    for (const auto& e : errors) {
        EvaluationScore s;
        s.discipline_id = discipline_id;
        s.competition_id = e.competition_id;
        s.performance_id = e.performance_id;
        s.judge_id = e.judge_id;
        s.control_score = e.control_score.to_double();
        s.error = e.error.to_double();
        s.sigma_hat = evaluate_sigma(model, s.control_score);
        s.marking = s.error / s.sigma_hat;
        out.push_back(std::move(s));
    }
    return out;
}

double overall_marking(std::span<const EvaluationScore> scores) {
    if (scores.empty()) throw std::invalid_argument("overall_marking: no evaluations");
    double sum_sq = 0.0;
    for (const auto& s : scores) sum_sq += s.marking * s.marking;
    return std::sqrt(sum_sq / static_cast<double>(scores.size()));
}

void flag_outliers(std::span<EvaluationScore> scores, JudgeProfile& profile, double multiplier) {
    if (!(multiplier > 0.0)) throw std::invalid_argument("flag_outliers: multiplier must be positive");
    profile.flagged_count = 0;
    profile.degenerate = profile.overall_marking == 0.0;
    for (auto& s : scores) {
        s.threshold = multiplier * s.sigma_hat * profile.overall_marking;
        s.flagged = std::abs(s.error) > s.threshold;
        s.reason = s.flagged ? kOutlierReason : "";
        if (s.flagged) ++profile.flagged_count;
    }
}

namespace {

std::map<std::string, std::vector<std::size_t>> index_by_judge(std::span<const EvaluationScore> scores) {
    std::map<std::string, std::vector<std::size_t>> by_judge;
    for (std::size_t i = 0; i < scores.size(); ++i) by_judge[scores[i].judge_id].push_back(i);
    return by_judge;
}

}  // namespace

std::vector<JudgeProfile> profile_judges(std::span<EvaluationScore> scores, const ProfileOptions& options) {
    std::vector<JudgeProfile> profiles;
    for (const auto& [judge, idx] : index_by_judge(scores)) {
        std::vector<EvaluationScore> own;
        own.reserve(idx.size());
        for (auto i : idx) own.push_back(scores[i]);

        JudgeProfile p;
        p.judge_id = judge;
        p.evaluation_count = own.size();
        p.overall_marking = overall_marking(own);
        p.low_confidence = own.size() < options.min_evaluations;
        for (const auto& s : own) p.disciplines.insert(s.discipline_id);
        p.discipline_id = p.disciplines.size() == 1 ? *p.disciplines.begin() : kPooledDiscipline;
        flag_outliers(own, p, options.flag_multiplier);
        for (std::size_t k = 0; k < idx.size(); ++k) scores[idx[k]] = std::move(own[k]);
        profiles.push_back(std::move(p));
    }
    return profiles;
}

std::vector<JudgeProfile> pooled_profiles(std::span<const EvaluationScore> scores, const ProfileOptions& options) {
    std::vector<JudgeProfile> profiles;
    for (const auto& [judge, idx] : index_by_judge(scores)) {
        JudgeProfile p;
        p.judge_id = judge;
        p.discipline_id = kPooledDiscipline;
        double sum_sq = 0.0;
        for (auto i : idx) {
            sum_sq += scores[i].marking * scores[i].marking;
            p.disciplines.insert(scores[i].discipline_id);
            if (scores[i].flagged) ++p.flagged_count;
        }
        p.evaluation_count = idx.size();
        p.overall_marking = std::sqrt(sum_sq / static_cast<double>(idx.size()));
        p.low_confidence = idx.size() < options.min_evaluations;
        p.degenerate = p.overall_marking == 0.0;
        profiles.push_back(std::move(p));
    }
    return profiles;
}

Ranking rank_judges(std::vector<JudgeProfile> profiles) {
    std::sort(profiles.begin(), profiles.end(), [](const JudgeProfile& a, const JudgeProfile& b) {
        if (a.overall_marking != b.overall_marking) return a.overall_marking > b.overall_marking;
        if (a.evaluation_count != b.evaluation_count) return a.evaluation_count > b.evaluation_count;
        return std::tie(a.judge_id, a.discipline_id) < std::tie(b.judge_id, b.discipline_id);
    });
    Ranking r;
    for (auto& p : profiles) (p.low_confidence ? r.low_confidence : r.confident).push_back(std::move(p));
    return r;
}

void write_judge_report(std::ostream& out, std::span<const JudgeProfile> profiles) {
    out << "judge_id,discipline_id,evaluation_count,overall_marking,flagged_count,confidence\n";
    for (const auto& p : profiles) {
        out << csv_field(p.judge_id) << ',' << csv_field(p.discipline_id) << ',' << p.evaluation_count << ','
            << format_double(p.overall_marking) << ',' << p.flagged_count << ','
            << (p.low_confidence ? "low" : "ok") << '\n';
    }
}

void write_flag_report(std::ostream& out, std::span<const EvaluationScore> scores) {
    out << "judge_id,discipline_id,competition_id,performance_id,control_score,error,sigma_hat,threshold,marking,reason\n";
    for (const auto& s : scores) {
        if (!s.flagged) continue;
        out << csv_field(s.judge_id) << ',' << csv_field(s.discipline_id) << ',' << csv_field(s.competition_id) << ','
            << csv_field(s.performance_id) << ','
            << format_double(s.control_score) << ',' << format_double(s.error) << ',' << format_double(s.sigma_hat)
            << ',' << format_double(s.threshold) << ',' << format_double(s.marking) << ',' << s.reason << '\n';
    }
}

}  // namespace judgecal
