#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "judgecal/data_core.hpp"
#include "judgecal/documents.hpp"
#include "judgecal/format.hpp"
#include "judgecal/judge_metrics.hpp"
#include "judgecal/synthetic.hpp"
#include "judgecal/variance_fit.hpp"

namespace judgecal::cli {

namespace fs = std::filesystem;

namespace {

struct RunConfig {
    std::string input;
    std::string out_dir;
    std::string models_dir;
    std::string scenario;
    std::string model_kind = "quadratic";
    std::string centering = "mean";
    std::size_t min_count = 10;
    double flag_multiplier = 2.0;
    std::size_t min_evaluations = 20;
    std::string competition;
    std::optional<std::uint64_t> seed;
    int samples = 200;
    bool keep_going = false;
    bool pooled = false;
};

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

void validate(const RunConfig& cfg) {
    if (!(cfg.flag_multiplier > 0.0)) throw UsageError("--flag-multiplier must be positive");
    if (cfg.min_count < 2) throw UsageError("--min-count must be at least 2");
    if (cfg.samples < 2) throw UsageError("--samples must be at least 2");
}

BinningPolicy binning(const RunConfig& cfg) {
    return {cfg.min_count, cfg.centering == "zero" ? SigmaCentering::zero : SigmaCentering::bin_mean};
}

// temp file + rename so readers never see a partial report
void write_atomic(const fs::path& path, const std::function<void(std::ostream&)>& body) {
    fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot write '" + tmp.string() + "'");
        body(f);
        f.flush();
        if (!f) throw std::runtime_error("write failed for '" + tmp.string() + "'");
    }
    fs::rename(tmp, path);
}

std::string file_stem_for(const std::string& discipline, std::set<std::string>& used) {
    std::string stem;
    for (char ch : discipline) {
        const bool ok = (ch >= 'A' && ch <= 'Z') || (ch >= 'a' && ch <= 'z') || (ch >= '0' && ch <= '9') ||
                        ch == '-' || ch == '_' || ch == '.';
        stem += ok ? ch : '_';
    }
    if (stem.empty()) stem = "_";
    std::string candidate = stem;
    for (int k = 2; used.count(candidate); ++k) candidate = stem + "_" + std::to_string(k);
    used.insert(candidate);
    return candidate;
}

IngestResult ingest(const RunConfig& cfg, std::ostream& err) {
    const fs::path report_path = fs::path(cfg.out_dir) / "ingest_report.tsv";
    try {
        auto result = ingest_file(cfg.input);
        write_atomic(report_path, [&](std::ostream& o) { write_report(o, result.report); });
        if (!result.report.rejected.empty()) {
            err << "warning: " << result.report.rejected.size() << " of " << result.report.total_rows
                << " rows rejected, see " << report_path.string() << '\n';
        }
        return result;
    } catch (const SchemaError& e) {
        write_atomic(report_path, [&](std::ostream& o) { o << "0\t" << e.what() << '\n'; });
        throw;
    }
}

struct FitOutcome {
    std::map<std::string, VarianceModel> models;
    std::size_t failures = 0;
};

FitOutcome fit_all(const Dataset& dataset, const RunConfig& cfg, std::ostream& out, std::ostream& err,
                   bool write_outputs) {
    FitOutcome outcome;
    const ModelKind kind = model_kind_from_string(cfg.model_kind);
    std::set<std::string> used;
    for (const auto& [discipline, groups] : dataset.disciplines()) {
        try {
            auto model = fit_discipline(dataset, discipline, kind, binning(cfg));
            if (write_outputs) {
                const std::string stem = file_stem_for(discipline, used);
                const fs::path dir(cfg.out_dir);
                write_atomic(dir / ("model_" + stem + ".json"),
                             [&](std::ostream& o) { write_model_document(o, {discipline, model}); });
                write_atomic(dir / ("curve_" + stem + ".csv"),
                             [&](std::ostream& o) { write_curve_samples(o, model, cfg.samples); });
                write_atomic(dir / ("bins_" + stem + ".csv"), [&](std::ostream& o) { write_bin_table(o, model); });
            }
            out << "fit " << discipline << ": " << to_string(model.kind) << " shape " << to_string(model.shape)
                << ", r2 " << (model.r2_weighted ? format_double(*model.r2_weighted) : "missing") << ", rmsd "
                << format_double(model.rmsd_weighted) << ", bins " << model.bins.size() << '\n';
            outcome.models.emplace(discipline, std::move(model));
        } catch (const FitFailure& e) {
            ++outcome.failures;
            err << "error: fit failed for discipline '" << discipline << "': " << e.what() << '\n';
            if (!cfg.keep_going) throw;
        }
    }
    return outcome;
}

std::map<std::string, VarianceModel> load_models(const std::string& dir) {
    std::map<std::string, VarianceModel> models;
    if (!fs::is_directory(dir)) throw UsageError("model directory '" + dir + "' does not exist");
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const auto name = entry.path().filename().string();
        if (entry.is_regular_file() && name.rfind("model_", 0) == 0 && entry.path().extension() == ".json") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        try {
            auto doc = read_model_document_file(f.string());
            models[doc.discipline_id] = std::move(doc.model);
        } catch (const std::invalid_argument& e) {
            throw UsageError("bad model document '" + f.string() + "': " + e.what());
        }
    }
    return models;
}

struct ScoreOutcome {
    std::vector<EvaluationScore> scores;
    std::vector<JudgeProfile> profiles;
};

ScoreOutcome score_all(const Dataset& dataset, const std::map<std::string, VarianceModel>& models,
                       const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    ScoreOutcome outcome;
    const ProfileOptions options{cfg.min_evaluations, cfg.flag_multiplier};
    for (const auto& [discipline, groups] : dataset.disciplines()) {
        auto it = models.find(discipline);
        if (it == models.end()) continue;
        auto errors = extract_errors(dataset, discipline);
        if (!cfg.competition.empty()) {
            std::erase_if(errors, [&](const JudgingError& e) { return e.competition_id != cfg.competition; });
            if (errors.empty()) continue;
        }
        auto scores = marking_scores(errors, it->second, discipline);
        auto profiles = profile_judges(scores, options);
        double sum_m = 0.0;
        std::size_t flagged = 0;
        for (const auto& p : profiles) {
            sum_m += p.overall_marking;
            flagged += p.flagged_count;
            if (p.degenerate) {
                err << "warning: judge '" << p.judge_id << "' in '" << discipline
                    << "' has overall marking 0; no evaluation can be flagged\n";
            }
        }
        out << "score " << discipline << ": judges " << profiles.size() << ", mean M_j "
            << format_double(sum_m / static_cast<double>(profiles.size())) << ", flag rate "
            << format_double(static_cast<double>(flagged) / static_cast<double>(scores.size())) << '\n';
        outcome.scores.insert(outcome.scores.end(), std::make_move_iterator(scores.begin()),
                              std::make_move_iterator(scores.end()));
        auto ranking = rank_judges(std::move(profiles));
        outcome.profiles.insert(outcome.profiles.end(), ranking.confident.begin(), ranking.confident.end());
        outcome.profiles.insert(outcome.profiles.end(), ranking.low_confidence.begin(), ranking.low_confidence.end());
    }
    if (cfg.pooled && models.size() > 1) {
        auto pooled = rank_judges(pooled_profiles(outcome.scores, options));
        outcome.profiles.insert(outcome.profiles.end(), pooled.confident.begin(), pooled.confident.end());
        outcome.profiles.insert(outcome.profiles.end(), pooled.low_confidence.begin(), pooled.low_confidence.end());
    }
    return outcome;
}

void check_models_cover(const Dataset& dataset, const std::map<std::string, VarianceModel>& models) {
    for (const auto& [discipline, _] : dataset.disciplines()) {
        if (!models.count(discipline)) {
            throw UsageError("no fitted model for discipline '" + discipline + "'");
        }
    }
}

int fit_exit_code(const FitOutcome& fit) {
    if (fit.failures == 0) return kSuccess;
    return fit.models.empty() ? kFitFailure : kPartialFailure;
}

int cmd_fit(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const auto data = ingest(cfg, err);
    const auto fit = fit_all(data.dataset, cfg, out, err, true);
    return fit_exit_code(fit);
}

int cmd_score_like(const RunConfig& cfg, std::ostream& out, std::ostream& err, bool judges, bool flags,
                   bool fit_outputs) {
    const auto data = ingest(cfg, err);
    FitOutcome fit;
    if (!cfg.models_dir.empty() && !fit_outputs) {
        fit.models = load_models(cfg.models_dir);
        check_models_cover(data.dataset, fit.models);
    } else {
        fit = fit_all(data.dataset, cfg, out, err, fit_outputs);
    }
    if (fit.models.empty()) return kFitFailure;
    const auto scored = score_all(data.dataset, fit.models, cfg, out, err);
    const fs::path dir(cfg.out_dir);
    if (judges) {
        write_atomic(dir / "judges.csv", [&](std::ostream& o) { write_judge_report(o, scored.profiles); });
    }
    if (flags) {
        write_atomic(dir / "flags.csv", [&](std::ostream& o) { write_flag_report(o, scored.scores); });
    }
    return fit_exit_code(fit);
}

int cmd_simulate(const RunConfig& cfg, std::ostream& out, std::ostream&) {
    synthetic::ScenarioSpec spec;
    try {
        spec = synthetic::read_scenario_file(cfg.scenario);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    if (cfg.seed) spec.seed = *cfg.seed;
    const auto generated = synthetic::generate(spec);
    synthetic::ScenarioEvaluation eval;
    eval.kind = model_kind_from_string(cfg.model_kind);
    eval.binning = binning(cfg);
    eval.profiles = {cfg.min_evaluations, cfg.flag_multiplier};
    const auto card = synthetic::evaluate_scenario(generated, spec, eval);

    const fs::path dir(cfg.out_dir);
    write_atomic(dir / "dataset.csv", [&](std::ostream& o) { write_records(o, generated.dataset); });
    write_atomic(dir / "truth.csv", [&](std::ostream& o) {
        o << "performance_id,true_quality\n";
        const auto& groups = generated.dataset.discipline(spec.discipline_id);
        for (std::size_t i = 0; i < groups.size(); ++i) {
            o << groups[i].performance_id << ',' << format_double(generated.true_quality[i]) << '\n';
        }
    });
    write_atomic(dir / "scorecard.json", [&](std::ostream& o) { o << synthetic::to_json(card).dump(2) << '\n'; });
    out << "simulate " << spec.discipline_id << ": " << generated.dataset.mark_count() << " marks, clamp fraction "
        << format_double(generated.clamp_fraction()) << ", fitted shape " << to_string(card.fitted_shape) << '\n';
    return card.fit_error.empty() ? kSuccess : kFitFailure;
}

void add_input_options(CLI::App* sub, RunConfig& cfg) {
    sub->add_option("-i,--input", cfg.input, "Mark records (CSV)")->required()->check(CLI::ExistingFile);
    sub->add_option("-o,--out", cfg.out_dir, "Output directory")->required();
}

void add_fit_options(CLI::App* sub, RunConfig& cfg) {
    sub->add_option("--model", cfg.model_kind, "Variance model family")
        ->check(CLI::IsMember({"quadratic", "exponential"}));
    sub->add_option("--min-count", cfg.min_count, "Minimum errors per bin");
    sub->add_option("--sigma-centering", cfg.centering, "Bin SD about the bin mean or about zero")
        ->check(CLI::IsMember({"mean", "zero"}));
    sub->add_flag("--keep-going", cfg.keep_going, "Continue past per-discipline fit failures");
    sub->add_option("--samples", cfg.samples, "Curve samples per discipline");
}

void add_score_options(CLI::App* sub, RunConfig& cfg, bool saved_models) {
    if (saved_models) {
        sub->add_option("--models", cfg.models_dir, "Directory with model_*.json documents (default: fit inline)");
    }
    sub->add_option("--flag-multiplier", cfg.flag_multiplier, "Outlier threshold multiplier");
    sub->add_option("--min-evals", cfg.min_evaluations, "Evaluations needed for a confident profile");
    sub->add_option("--competition", cfg.competition, "Restrict scoring to one competition");
    sub->add_flag("--pooled", cfg.pooled, "Also report pooled cross-discipline profiles");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    RunConfig cfg;
    CLI::App app{"Judging-accuracy analysis: variance models, marking scores and outlier flags", "judgecal"};
    app.require_subcommand(1);

    auto* fit = app.add_subcommand("fit", "Fit the per-discipline error variability model");
    add_input_options(fit, cfg);
    add_fit_options(fit, cfg);

    auto* score = app.add_subcommand("score", "Marking scores, judge report and flag report");
    add_input_options(score, cfg);
    add_fit_options(score, cfg);
    add_score_options(score, cfg, true);

    auto* flag = app.add_subcommand("flag", "Flag outlier evaluations only");
    add_input_options(flag, cfg);
    add_fit_options(flag, cfg);
    add_score_options(flag, cfg, true);

    auto* report = app.add_subcommand("report", "fit + score + flag in one pass");
    add_input_options(report, cfg);
    add_fit_options(report, cfg);
    add_score_options(report, cfg, false);

    auto* simulate = app.add_subcommand("simulate", "Generate a synthetic competition and its scorecard");
    simulate->add_option("-s,--scenario", cfg.scenario, "Scenario configuration (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    simulate->add_option("-o,--out", cfg.out_dir, "Output directory")->required();
    simulate->add_option("--seed", cfg.seed, "Override the scenario seed");
    add_fit_options(simulate, cfg);
    simulate->add_option("--flag-multiplier", cfg.flag_multiplier, "Outlier threshold multiplier");
    simulate->add_option("--min-evals", cfg.min_evaluations, "Evaluations needed for a confident profile");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kSuccess;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kSuccess;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kUsageOrSchema;
    }

    try {
        validate(cfg);
        if (*fit) return cmd_fit(cfg, out, err);
        if (*score) return cmd_score_like(cfg, out, err, true, true, false);
        if (*flag) return cmd_score_like(cfg, out, err, false, true, false);
        if (*report) return cmd_score_like(cfg, out, err, true, true, true);
        if (*simulate) return cmd_simulate(cfg, out, err);
    } catch (const SchemaError& e) {
        err << "error: " << e.what() << " (ingestion report: "
            << (fs::path(cfg.out_dir) / "ingest_report.tsv").string() << ")\n";
        return kUsageOrSchema;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kUsageOrSchema;
    } catch (const synthetic::InfeasibleScenario& e) {
        err << "error: infeasible scenario: " << e.what() << '\n';
        return kUsageOrSchema;
    } catch (const FitFailure& e) {
        return kFitFailure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kUsageOrSchema;
    }
    return kUsageOrSchema;
}

}  // namespace judgecal::cli
