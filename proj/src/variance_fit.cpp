#include "judgecal/variance_fit.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "judgecal/weighted_fit.hpp"

namespace judgecal {

namespace {

__extension__ using Wide = __int128;

struct BinAccumulator {
    double sum_c = 0.0;
    Wide sum_ticks = 0;  // exact, for gap comparisons
    std::vector<std::size_t> members;
    Points lo;
    Points hi;

    double center() const { return sum_c / static_cast<double>(members.size()); }
};

void merge_into(BinAccumulator& dst, BinAccumulator& src) {
    dst.sum_c += src.sum_c;
    dst.sum_ticks += src.sum_ticks;
    dst.members.insert(dst.members.end(), src.members.begin(), src.members.end());
    dst.lo = std::min(dst.lo, src.lo);
    dst.hi = std::max(dst.hi, src.hi);
}

// sign of (gap to left) - (gap to right) between bin centers, exactly
int compare_gaps(const BinAccumulator& l, const BinAccumulator& p, const BinAccumulator& r) {
    const Wide nl = static_cast<Wide>(l.members.size());
    const Wide np = static_cast<Wide>(p.members.size());
    const Wide nr = static_cast<Wide>(r.members.size());
    const Wide left = (p.sum_ticks * nl - l.sum_ticks * np) * nr;
    const Wide right = (r.sum_ticks * np - p.sum_ticks * nr) * nl;
    return left < right ? -1 : (left > right ? 1 : 0);
}

struct BinArrays {
    Eigen::VectorXd center;
    Eigen::VectorXd sigma;
    Eigen::VectorXd weight;
};

BinArrays to_arrays(std::span<const VarianceBin> bins) {
    BinArrays a;
    const auto n = static_cast<Eigen::Index>(bins.size());
    a.center.resize(n);
    a.sigma.resize(n);
    a.weight.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& b = bins[static_cast<std::size_t>(i)];
        a.center(i) = b.center;
        a.sigma(i) = b.sigma;
        a.weight(i) = static_cast<double>(b.count);
    }
    return a;
}

std::size_t distinct_centers(std::span<const VarianceBin> bins) {
    std::set<double> centers;
    for (const auto& b : bins) centers.insert(b.center);
    return centers.size();
}

void set_domain(VarianceModel& model, std::span<const VarianceBin> bins) {
    Points lo = bins.front().lo;
    Points hi = bins.front().hi;
    for (const auto& b : bins) {
        lo = std::min(lo, b.lo);
        hi = std::max(hi, b.hi);
    }
    model.domain_lo = lo.to_double();
    model.domain_hi = hi.to_double();
}

}  // namespace

std::vector<JudgingError> extract_errors(const Dataset& dataset, const std::string& discipline) {
    const auto& groups = dataset.discipline(discipline);
    std::vector<JudgingError> out;
    for (const auto& g : groups) {
        for (const auto& m : g.marks) {
            out.push_back({m.competition_id, g.performance_id, m.judge_id, g.control_score, m.mark - g.control_score});
        }
    }
    return out;
}

std::vector<VarianceBin> bin_errors(std::span<const JudgingError> errors, const BinningPolicy& policy) {
    if (errors.empty()) throw std::invalid_argument("bin_errors: no errors");

    std::map<Points, BinAccumulator> by_score;
    for (std::size_t i = 0; i < errors.size(); ++i) {
        const Points c = errors[i].control_score;
        auto [it, inserted] = by_score.try_emplace(c);
        auto& acc = it->second;
        if (inserted) acc.lo = acc.hi = c;
        acc.sum_c += c.to_double();
        acc.sum_ticks += c.ticks();
        acc.members.push_back(i);
    }
    std::vector<BinAccumulator> bins;
    bins.reserve(by_score.size());
    for (auto& [_, acc] : by_score) bins.push_back(std::move(acc));

    const std::size_t min_count = std::max<std::size_t>(policy.min_count, 1);
    while (bins.size() > 1) {
        std::size_t pick = bins.size();
        for (std::size_t i = 0; i < bins.size(); ++i) {
            if (bins[i].members.size() >= min_count) continue;
            if (pick == bins.size() || bins[i].members.size() < bins[pick].members.size()) pick = i;
        }
        if (pick == bins.size()) break;

        std::size_t target;
        if (pick == 0) {
            target = 1;
        } else if (pick + 1 == bins.size()) {
            target = pick - 1;
        } else {
            const int cmp = compare_gaps(bins[pick - 1], bins[pick], bins[pick + 1]);
            if (cmp != 0) {
                target = cmp < 0 ? pick - 1 : pick + 1;
            } else {
                target = bins[pick + 1].members.size() < bins[pick - 1].members.size() ? pick + 1 : pick - 1;
            }
        }
        merge_into(bins[target], bins[pick]);
        bins.erase(bins.begin() + static_cast<std::ptrdiff_t>(pick));
    }

    std::vector<VarianceBin> out;
    for (const auto& acc : bins) {
        const std::size_t n = acc.members.size();
        if (n < 2) continue;
        double mean = 0.0;
        if (policy.centering == SigmaCentering::bin_mean) {
            for (auto i : acc.members) mean += errors[i].error.to_double();
            mean /= static_cast<double>(n);
        }
        double ss = 0.0;
        for (auto i : acc.members) {
            const double d = errors[i].error.to_double() - mean;
            ss += d * d;
        }
        const double denom = policy.centering == SigmaCentering::bin_mean ? static_cast<double>(n - 1)
                                                                           : static_cast<double>(n);
        out.push_back({acc.center(), n, std::sqrt(ss / denom), acc.lo, acc.hi});
    }
    return out;
}

std::string to_string(ModelKind kind) { return kind == ModelKind::quadratic ? "quadratic" : "exponential"; }

std::string to_string(Shape shape) {
    switch (shape) {
        case Shape::concave: return "concave";
        case Shape::convex: return "convex";
        default: return "degenerate";
    }
}

ModelKind model_kind_from_string(const std::string& s) {
    if (s == "quadratic") return ModelKind::quadratic;
    if (s == "exponential") return ModelKind::exponential;
    throw std::invalid_argument("unknown model kind '" + s + "'");
}

Shape shape_from_string(const std::string& s) {
    if (s == "concave") return Shape::concave;
    if (s == "convex") return Shape::convex;
    if (s == "degenerate") return Shape::degenerate;
    throw std::invalid_argument("unknown shape '" + s + "'");
}

double VarianceModel::raw(double c) const {
    if (kind == ModelKind::quadratic) return coefficients[0] + coefficients[1] * c + coefficients[2] * c * c;
    return coefficients[0] * std::exp(coefficients[1] * c);
}

double sigma_floor(const Scale& scale) { return std::max(1e-6, scale.step.to_double() / 100.0); }

VarianceModel fit_quadratic(std::span<const VarianceBin> bins, double floor) {
    if (distinct_centers(bins) < 3) {
        throw FitFailure(FitFailureReason::insufficient_support, "insufficient support: quadratic fit needs 3 distinct bin centers");
    }
    const auto a = to_arrays(bins);
    const auto sol = weighted_quadratic_fit(a.center, a.sigma, a.weight, kMaxCondition);
    if (!sol.ok) {
        throw FitFailure(FitFailureReason::singular,
                         "singular normal equations (condition " + std::to_string(sol.condition) + ")");
    }
    VarianceModel model;
    model.kind = ModelKind::quadratic;
    model.coefficients = {sol.coefficients(0), sol.coefficients(1), sol.coefficients(2)};
    model.floor = floor;
    model.condition = sol.condition;
    model.shape = model.coefficients[2] < 0.0   ? Shape::concave
                  : model.coefficients[2] > 0.0 ? Shape::convex
                                                : Shape::degenerate;
    set_domain(model, bins);
    const auto d = diagnostics(bins, model);
    model.r2_weighted = d.r2_weighted;
    model.rmsd_weighted = d.rmsd_weighted;
    model.bins.assign(bins.begin(), bins.end());
    return model;
}

VarianceModel fit_exponential(std::span<const VarianceBin> bins, double floor) {
    if (distinct_centers(bins) < 2) {
        throw FitFailure(FitFailureReason::insufficient_support, "insufficient support: exponential fit needs 2 distinct bin centers");
    }
    const auto a = to_arrays(bins);
    const auto sol = weighted_exponential_fit(a.center, a.sigma, a.weight, floor);

    VarianceModel model;
    model.kind = ModelKind::exponential;
    model.coefficients = {sol.alpha, sol.beta, 0.0};
    model.floor = floor;
    model.converged = sol.converged;
    if (sol.beta == 0.0 || sol.alpha == 0.0) {
        model.shape = Shape::degenerate;
    } else {
        model.shape = sol.alpha > 0.0 ? Shape::convex : Shape::concave;
    }
    set_domain(model, bins);
    const auto d = diagnostics(bins, model);
    model.r2_weighted = d.r2_weighted;
    model.rmsd_weighted = d.rmsd_weighted;
    model.bins.assign(bins.begin(), bins.end());
    if (!sol.converged || !std::isfinite(sol.alpha) || !std::isfinite(sol.beta)) {
        throw FitFailure(FitFailureReason::not_converged,
                         "exponential fit did not converge after " + std::to_string(sol.iterations) + " iterations",
                         model);
    }
    return model;
}

Diagnostics diagnostics(std::span<const VarianceBin> bins, const VarianceModel& model) {
    Diagnostics d;
    if (bins.empty()) return d;
    double sum_w = 0.0;
    double mean = 0.0;
    double lo = bins.front().sigma;
    double hi = lo;
    for (const auto& b : bins) {
        sum_w += static_cast<double>(b.count);
        mean += static_cast<double>(b.count) * b.sigma;
        lo = std::min(lo, b.sigma);
        hi = std::max(hi, b.sigma);
    }
    mean /= sum_w;
    double ss_res = 0.0;
    double ss_tot = 0.0;
    for (const auto& b : bins) {
        const double w = static_cast<double>(b.count);
        const double r = b.sigma - model.raw(b.center);
        ss_res += w * r * r;
        ss_tot += w * (b.sigma - mean) * (b.sigma - mean);
    }
    d.rmsd_weighted = std::sqrt(ss_res / sum_w);
    if (hi > lo && ss_tot > 0.0) d.r2_weighted = 1.0 - ss_res / ss_tot;
    return d;
}

SigmaEval evaluate_sigma_detailed(const VarianceModel& model, double c) {
    SigmaEval e;
    const double raw = model.raw(c);
    const double floor = model.floor > 0.0 ? model.floor : 1e-6;
    e.clamped = !(raw >= floor);
    e.value = e.clamped ? floor : raw;
    e.outside_domain = c < model.domain_lo || c > model.domain_hi;
    return e;
}

VarianceModel fit_discipline(const Dataset& dataset, const std::string& discipline, ModelKind kind,
                             const BinningPolicy& policy) {
    const auto errors = extract_errors(dataset, discipline);
    const auto bins = bin_errors(errors, policy);
    const double floor = sigma_floor(dataset.discipline(discipline).front().scale());
    return kind == ModelKind::quadratic ? fit_quadratic(bins, floor) : fit_exponential(bins, floor);
}

}  // namespace judgecal
