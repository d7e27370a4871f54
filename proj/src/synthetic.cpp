#include "judgecal/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <random>

namespace judgecal::synthetic {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

std::uint64_t performance_seed(std::uint64_t seed, std::uint64_t index) {
    return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x51ED270B27A1F3ull));
}

std::string performance_name(std::size_t index, std::size_t total) {
    std::string digits = std::to_string(index + 1);
    const std::size_t width = std::max<std::size_t>(6, std::to_string(total).size());
    return "P" + std::string(width - std::min(width, digits.size()), '0') + digits;
}

double draw_quality(const QualityDistribution& d, std::mt19937_64& gen) {
    if (d.kind == QualityDistribution::Kind::uniform) {
        return std::uniform_real_distribution<double>(d.lo, d.hi)(gen);
    }
    const double x = std::gamma_distribution<double>(d.shape_a, 1.0)(gen);
    const double y = std::gamma_distribution<double>(d.shape_b, 1.0)(gen);
    const double u = x + y > 0.0 ? x / (x + y) : 0.5;
    return d.lo + (d.hi - d.lo) * u;
}

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }
double normal_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

double log_factorial(int n) { return std::lgamma(static_cast<double>(n) + 1.0); }

struct Grid {
    static constexpr double lo = -12.0;
    static constexpr double hi = 12.0;
    static constexpr int n = 24001;
    static double h() { return (hi - lo) / (n - 1); }
    static double at(int i) { return lo + h() * i; }
};

// E[X_(k)^2] for the k-th order statistic (1-based) of n standard normals.
double order_stat_second_moment(int n, int k) {
    const double log_c = log_factorial(n) - log_factorial(k - 1) - log_factorial(n - k);
    double sum = 0.0;
    for (int i = 0; i < Grid::n; ++i) {
        const double x = Grid::at(i);
        const double cdf = normal_cdf(x);
        const double tail = 1.0 - cdf;
        if (cdf <= 0.0 || tail <= 0.0) continue;
        const double log_f = log_c + (k - 1) * std::log(cdf) + (n - k) * std::log(tail);
        const double v = x * x * std::exp(log_f) * normal_pdf(x);
        sum += (i == 0 || i == Grid::n - 1) ? 0.5 * v : v;
    }
    return sum * Grid::h();
}

// E[X_(k) X_(k+1)] for adjacent order statistics of n standard normals.
double adjacent_product_moment(int n, int k) {
    const double log_c = log_factorial(n) - log_factorial(k - 1) - log_factorial(n - k - 1);
    const double h = Grid::h();
    // tail(x) = integral_x^inf y phi(y) (1 - Phi(y))^(n-k-1) dy, accumulated right to left
    std::vector<double> inner(Grid::n, 0.0);
    auto integrand = [&](double y) { return y * normal_pdf(y) * std::pow(1.0 - normal_cdf(y), n - k - 1); };
    double prev = integrand(Grid::at(Grid::n - 1));
    for (int i = Grid::n - 2; i >= 0; --i) {
        const double cur = integrand(Grid::at(i));
        inner[static_cast<std::size_t>(i)] = inner[static_cast<std::size_t>(i) + 1] + 0.5 * h * (cur + prev);
        prev = cur;
    }
    double sum = 0.0;
    for (int i = 0; i < Grid::n; ++i) {
        const double x = Grid::at(i);
        const double v = x * normal_pdf(x) * std::pow(normal_cdf(x), k - 1) * inner[static_cast<std::size_t>(i)];
        sum += (i == 0 || i == Grid::n - 1) ? 0.5 * v : v;
    }
    return std::exp(log_c) * sum * h;
}

}  // namespace

double SigmaCurve::operator()(double q) const {
    if (kind == ModelKind::quadratic) return coefficients[0] + coefficients[1] * q + coefficients[2] * q * q;
    return coefficients[0] * std::exp(coefficients[1] * q);
}

Shape SigmaCurve::shape() const {
    if (kind == ModelKind::quadratic) {
        return coefficients[2] < 0.0 ? Shape::concave : coefficients[2] > 0.0 ? Shape::convex : Shape::degenerate;
    }
    if (coefficients[0] == 0.0 || coefficients[1] == 0.0) return Shape::degenerate;
    return coefficients[0] > 0.0 ? Shape::convex : Shape::concave;
}

double SigmaCurve::min_on(double lo, double hi) const {
    double m = std::min((*this)(lo), (*this)(hi));
    if (kind == ModelKind::quadratic && coefficients[2] != 0.0) {
        const double vertex = -coefficients[1] / (2.0 * coefficients[2]);
        if (vertex > lo && vertex < hi) m = std::min(m, (*this)(vertex));
    }
    return m;
}

std::string to_string(ArchetypeKind kind) {
    switch (kind) {
        case ArchetypeKind::honest: return "honest";
        case ArchetypeKind::erratic: return "erratic";
        case ArchetypeKind::biased: return "biased";
        default: return "cheater";
    }
}

ArchetypeKind archetype_from_string(const std::string& s) {
    if (s == "honest") return ArchetypeKind::honest;
    if (s == "erratic") return ArchetypeKind::erratic;
    if (s == "biased") return ArchetypeKind::biased;
    if (s == "cheater") return ArchetypeKind::cheater;
    throw std::invalid_argument("unknown judge archetype '" + s + "'");
}

JudgeArchetype ScenarioSpec::archetype(int judge_index) const {
    const auto i = static_cast<std::size_t>(judge_index);
    return i < archetypes.size() ? archetypes[i] : JudgeArchetype::honest();
}

std::string judge_name(int judge_index) {
    std::string n = std::to_string(judge_index + 1);
    return "J" + std::string(n.size() < 2 ? 2 - n.size() : 0, '0') + n;
}

void validate(const ScenarioSpec& spec) {
    if (spec.panel_size < 3 || spec.panel_size > 9) throw InfeasibleScenario("panel_size must be within 3..9");
    if (spec.archetypes.size() > static_cast<std::size_t>(spec.panel_size)) {
        throw InfeasibleScenario("more judge archetypes than panel seats");
    }
    if (spec.n_performances == 0) throw InfeasibleScenario("n_performances must be positive");
    if (!spec.scale.valid()) throw InfeasibleScenario("invalid scale");
    if (spec.discipline_id.empty()) throw InfeasibleScenario("empty discipline_id");
    const auto& q = spec.quality;
    if (!(q.lo < q.hi) || q.lo < spec.scale.min_mark.to_double() || q.hi > spec.scale.max_mark.to_double()) {
        throw InfeasibleScenario("quality range must be a nonempty interval inside the scale");
    }
    if (q.kind == QualityDistribution::Kind::beta && !(q.shape_a > 0.0 && q.shape_b > 0.0)) {
        throw InfeasibleScenario("beta shape parameters must be positive");
    }
    for (double c : spec.true_sigma.coefficients) {
        if (!std::isfinite(c)) throw InfeasibleScenario("true_sigma coefficients must be finite");
    }
    if (!(spec.true_sigma.min_on(q.lo, q.hi) > 0.0)) {
        throw InfeasibleScenario("true_sigma is not positive over the quality support");
    }
    for (const auto& a : spec.archetypes) {
        if (!(a.noise_multiplier >= 0.0) || !std::isfinite(a.noise_multiplier) || !std::isfinite(a.bias_offset) ||
            !std::isfinite(a.boost)) {
            throw InfeasibleScenario("archetype parameters must be finite and noise_multiplier >= 0");
        }
        if (!(a.cheat_fraction >= 0.0 && a.cheat_fraction <= 1.0)) {
            throw InfeasibleScenario("cheat_fraction must lie in [0, 1]");
        }
        if (a.kind == ArchetypeKind::honest &&
            (a.noise_multiplier != 1.0 || a.bias_offset != 0.0 || a.cheat_fraction != 0.0 || a.boost != 0.0)) {
            throw InfeasibleScenario("honest judges have multiplier 1, no offset and no boost");
        }
        if (a.kind != ArchetypeKind::cheater && (a.cheat_fraction != 0.0 || a.boost != 0.0)) {
            throw InfeasibleScenario("only cheater judges may boost performances");
        }
    }
}

GeneratedScenario generate(const ScenarioSpec& spec) {
    validate(spec);

    const auto& scale = spec.scale;
    const double min_mark = scale.min_mark.to_double();
    const double step = scale.step.to_double();
    const std::int64_t last = scale.grid_size() - 1;

    std::vector<JudgeArchetype> panel;
    std::vector<std::string> judges;
    for (int j = 0; j < spec.panel_size; ++j) {
        panel.push_back(spec.archetype(j));
        judges.push_back(judge_name(j));
    }

    std::vector<MarkRecord> records;
    records.reserve(spec.n_performances * panel.size());
    std::vector<double> qualities;
    qualities.reserve(spec.n_performances);
    std::set<std::pair<std::string, std::string>> cheats;
    std::size_t clamped = 0;

    for (std::size_t p = 0; p < spec.n_performances; ++p) {
        std::mt19937_64 gen(performance_seed(spec.seed, p));
        std::normal_distribution<double> normal(0.0, 1.0);
        std::uniform_real_distribution<double> unit(0.0, 1.0);

        const double q = draw_quality(spec.quality, gen);
        const double sigma = spec.true_sigma(q);
        const std::string perf = performance_name(p, spec.n_performances);
        qualities.push_back(q);

        for (std::size_t j = 0; j < panel.size(); ++j) {
            const auto& a = panel[j];
            const double z = normal(gen);
            const double u = unit(gen);
            double value = q + a.bias_offset + a.noise_multiplier * sigma * z;
            if (a.kind == ArchetypeKind::cheater && u < a.cheat_fraction) {
                value += a.boost;
                cheats.emplace(perf, judges[j]);
            }
            auto k = static_cast<std::int64_t>(std::llround((value - min_mark) / step));
            if (k < 0 || k > last) {
                ++clamped;
                k = std::clamp<std::int64_t>(k, 0, last);
            }
            MarkRecord r;
            r.competition_id = spec.competition_id;
            r.discipline_id = spec.discipline_id;
            r.performance_id = perf;
            r.judge_id = judges[j];
            r.mark = Points::from_ticks(scale.min_mark.ticks() + k * scale.step.ticks());
            r.scale = scale;
            r.source_row = records.size() + 2;
            records.push_back(std::move(r));
        }
    }

    auto built = build_dataset(records, {SourceInfo{"<synthetic>", records.size()}});
    GeneratedScenario out{std::move(built.dataset), std::move(records), std::move(qualities), std::move(cheats),
                          clamped, spec.n_performances * panel.size()};
    return out;
}

double median_deflation(int panel_size) {
    if (panel_size < 2) throw std::invalid_argument("median_deflation: panel needs at least 2 judges");
    static std::mutex mutex;
    static std::map<int, double> cache;
    const std::lock_guard<std::mutex> lock(mutex);
    if (auto it = cache.find(panel_size); it != cache.end()) return it->second;
    const int n = panel_size;
    double median_sq;
    if (n % 2 == 1) {
        median_sq = order_stat_second_moment(n, (n + 1) / 2);
    } else {
        const int k = n / 2;
        median_sq = 0.25 * (order_stat_second_moment(n, k) + order_stat_second_moment(n, k + 1) +
                            2.0 * adjacent_product_moment(n, k));
    }
    // E[Z_j M] averages to E[Zbar M] = Var(Zbar) = 1/n for Gaussian panels.
    const double value = std::sqrt(1.0 - 2.0 / n + median_sq);
    cache.emplace(panel_size, value);
    return value;
}

std::optional<double> Scorecard::max_coefficient_rel_error() const {
    if (!coefficients_comparable) return std::nullopt;
    std::optional<double> worst;
    for (const auto& e : coefficient_rel_error) {
        if (e) worst = std::max(worst.value_or(0.0), *e);
    }
    return worst;
}

Scorecard evaluate_scenario(const GeneratedScenario& generated, const ScenarioSpec& truth,
                            const ScenarioEvaluation& options) {
    Scorecard card;
    card.fitted_kind = options.kind;
    card.truth = truth.true_sigma.coefficients;
    card.truth_shape = truth.true_sigma.shape();
    card.clamp_fraction = generated.clamp_fraction();

    double sum_sq = 0.0;
    for (int j = 0; j < truth.panel_size; ++j) {
        const double m = truth.archetype(j).noise_multiplier;
        sum_sq += m * m;
    }
    card.noise_scale = std::sqrt(sum_sq / truth.panel_size);
    card.median_deflation = median_deflation(truth.panel_size);
    const double factor = card.noise_scale * card.median_deflation;
    card.reference = truth.true_sigma.coefficients;
    if (truth.true_sigma.kind == ModelKind::quadratic) {
        for (auto& c : card.reference) c *= factor;
    } else {
        card.reference[0] *= factor;
    }
    SigmaCurve reference_curve{truth.true_sigma.kind, card.reference};

    const auto errors = extract_errors(generated.dataset, truth.discipline_id);
    VarianceModel model;
    try {
        const auto bins = bin_errors(errors, options.binning);
        const double floor = sigma_floor(truth.scale);
        model = options.kind == ModelKind::quadratic ? fit_quadratic(bins, floor) : fit_exponential(bins, floor);
    } catch (const FitFailure& e) {
        card.fit_error = e.what();
        return card;
    }

    card.fitted = model.coefficients;
    card.fitted_shape = model.shape;
    card.shape_correct = model.shape == card.truth_shape;
    card.r2_weighted = model.r2_weighted;
    card.rmsd_weighted = model.rmsd_weighted;
    card.coefficients_comparable = options.kind == truth.true_sigma.kind;
    if (card.coefficients_comparable) {
        const std::size_t used = options.kind == ModelKind::quadratic ? 3 : 2;
        for (std::size_t i = 0; i < used; ++i) {
            card.coefficient_abs_error[i] = std::abs(card.fitted[i] - card.reference[i]);
            if (card.reference[i] != 0.0) card.coefficient_rel_error[i] = card.coefficient_abs_error[i] / std::abs(card.reference[i]);
        }
    }
    constexpr int kCurveSamples = 201;
    for (int i = 0; i < kCurveSamples; ++i) {
        const double c = model.domain_lo + (model.domain_hi - model.domain_lo) * i / (kCurveSamples - 1);
        card.curve_max_abs_error = std::max(card.curve_max_abs_error, std::abs(model.raw(c) - reference_curve(c)));
    }

    auto scores = marking_scores(errors, model, truth.discipline_id);
    auto profiles = profile_judges(scores, options.profiles);
    auto ranking = rank_judges(profiles);
    std::vector<JudgeProfile> ordered = ranking.confident;
    ordered.insert(ordered.end(), ranking.low_confidence.begin(), ranking.low_confidence.end());

    std::map<std::string, ArchetypeKind> kind_of;
    for (int j = 0; j < truth.panel_size; ++j) kind_of[judge_name(j)] = truth.archetype(j).kind;
    for (std::size_t r = 0; r < ordered.size(); ++r) {
        const auto& p = ordered[r];
        card.judges.push_back({p.judge_id, kind_of[p.judge_id], p.overall_marking, r + 1, p.flagged_count,
                               p.evaluation_count});
    }

    card.evaluations = scores.size();
    for (const auto& s : scores) {
        if (s.flagged) ++card.flagged;
        const bool cheat = generated.cheat_marks.count({s.performance_id, s.judge_id}) != 0;
        if (cheat) {
            ++card.cheat_evaluations;
            if (s.flagged) ++card.cheat_flagged;
        }
        if (s.flagged && kind_of[s.judge_id] == ArchetypeKind::cheater) ++card.cheater_flags;
    }
    if (card.cheat_evaluations) {
        card.cheat_recall = static_cast<double>(card.cheat_flagged) / static_cast<double>(card.cheat_evaluations);
    }
    if (card.cheater_flags) {
        card.cheat_precision = static_cast<double>(card.cheat_flagged) / static_cast<double>(card.cheater_flags);
    }
    return card;
}

}  // namespace judgecal::synthetic
