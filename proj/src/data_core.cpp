#include "judgecal/data_core.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <optional>
#include <set>
#include <tuple>

#include "judgecal/control_score.hpp"
#include "judgecal/format.hpp"

namespace judgecal {

namespace {

constexpr std::array<const char*, 8> kRequiredColumns = {
    "competition_id", "discipline_id", "performance_id", "judge_id",
    "mark",           "scale_min",     "scale_max",      "scale_step"};
constexpr const char* kRoleColumn = "judge_role";

std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else {
            field += ch;
        }
    }
    fields.push_back(std::move(field));
    return fields;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

struct ColumnMap {
    std::array<std::size_t, 8> required{};
    std::optional<std::size_t> role;
    std::size_t width = 0;
};

ColumnMap map_header(const std::string& header_line) {
    auto names = split_csv_line(header_line);
    if (!names.empty() && names[0].rfind("\xEF\xBB\xBF", 0) == 0) names[0].erase(0, 3);
    ColumnMap map;
    map.width = names.size();
    for (std::size_t c = 0; c < kRequiredColumns.size(); ++c) {
        auto it = std::find_if(names.begin(), names.end(),
                               [&](const std::string& n) { return trim(n) == kRequiredColumns[c]; });
        if (it == names.end()) {
            throw SchemaError(std::string("missing required column '") + kRequiredColumns[c] + "'");
        }
        map.required[c] = static_cast<std::size_t>(it - names.begin());
    }
    auto role = std::find_if(names.begin(), names.end(), [](const std::string& n) { return trim(n) == kRoleColumn; });
    if (role != names.end()) map.role = static_cast<std::size_t>(role - names.begin());
    return map;
}

// Returns the rejection reason, or nullopt when the row is a valid record.
std::optional<std::string> parse_row(const std::vector<std::string>& fields, const ColumnMap& cols,
                                     MarkRecord& out) {
    if (fields.size() != cols.width) return "wrong field count";
    auto field = [&](std::size_t c) { return std::string(trim(fields[cols.required[c]])); };
    out.competition_id = field(0);
    out.discipline_id = field(1);
    out.performance_id = field(2);
    out.judge_id = field(3);
    if (out.discipline_id.empty() || out.performance_id.empty() || out.judge_id.empty()) {
        return "empty identifier";
    }
    const auto lo = Points::parse(field(5));
    const auto hi = Points::parse(field(6));
    const auto step = Points::parse(field(7));
    if (!lo || !hi || !step) return "unparseable scale";
    out.scale = Scale{*lo, *hi, *step};
    if (!out.scale.valid()) return "invalid scale";
    const auto mark = Points::parse(field(4));
    if (!mark) return "unparseable mark";
    out.mark = *mark;
    if (out.mark > out.scale.max_mark) return "mark above max_mark";
    if (out.mark < out.scale.min_mark) return "mark below min_mark";
    if (!out.scale.on_grid(out.mark)) return "mark off scale grid";
    out.judge_role = cols.role ? std::string(trim(fields[*cols.role])) : std::string();
    return std::nullopt;
}

}  // namespace

bool Scale::valid() const {
    if (!(min_mark < max_mark) || step <= Points{}) return false;
    return (max_mark - min_mark).ticks() % step.ticks() == 0;
}

bool Scale::on_grid(Points mark) const { return (mark - min_mark).ticks() % step.ticks() == 0; }

std::int64_t Scale::grid_size() const { return (max_mark - min_mark).ticks() / step.ticks() + 1; }

Points Scale::round_to_grid(double value) const {
    const double k = std::round((value - min_mark.to_double()) / step.to_double());
    const double k_max = static_cast<double>(grid_size() - 1);
    const auto idx = static_cast<std::int64_t>(std::clamp(k, 0.0, k_max));
    return Points::from_ticks(min_mark.ticks() + idx * step.ticks());
}

Points Scale::clamp(Points mark) const { return std::clamp(mark, min_mark, max_mark); }

void IngestionReport::merge(const IngestionReport& other) {
    total_rows += other.total_rows;
    rejected.insert(rejected.end(), other.rejected.begin(), other.rejected.end());
    std::stable_sort(rejected.begin(), rejected.end(),
                     [](const Rejection& a, const Rejection& b) { return a.row < b.row; });
}

Dataset::Dataset(GroupMap disciplines, std::vector<SourceInfo> provenance)
    : disciplines_(std::move(disciplines)), provenance_(std::move(provenance)) {}

const std::vector<PerformanceGroup>& Dataset::discipline(const std::string& id) const {
    auto it = disciplines_.find(id);
    if (it == disciplines_.end()) throw std::out_of_range("unknown discipline '" + id + "'");
    return it->second;
}

std::size_t Dataset::mark_count() const {
    std::size_t n = 0;
    for (const auto& [_, groups] : disciplines_)
        for (const auto& g : groups) n += g.marks.size();
    return n;
}

std::size_t Dataset::performance_count() const {
    std::size_t n = 0;
    for (const auto& [_, groups] : disciplines_) n += groups.size();
    return n;
}

ParseResult parse_records(std::istream& source) {
    ParseResult result;
    std::string line;
    std::size_t line_no = 0;
    std::optional<ColumnMap> cols;
    while (std::getline(source, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        if (!cols) {
            cols = map_header(line);
            continue;
        }
        ++result.report.total_rows;
        MarkRecord rec;
        rec.source_row = line_no;
        if (auto reason = parse_row(split_csv_line(line), *cols, rec)) {
            result.report.rejected.push_back({line_no, std::move(*reason)});
        } else {
            result.records.push_back(std::move(rec));
        }
    }
    if (!cols) throw SchemaError("missing header row");
    return result;
}

ParseResult parse_records_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SchemaError("cannot open '" + path + "'");
    return parse_records(in);
}

BuildResult build_dataset(std::vector<MarkRecord> records, std::vector<SourceInfo> provenance) {
    if (records.empty()) throw SchemaError("empty dataset");

    std::map<std::pair<std::string, std::string>, std::vector<MarkRecord>> grouped;
    for (auto& rec : records) {
        auto key = std::make_pair(rec.discipline_id, rec.performance_id);
        grouped[key].push_back(std::move(rec));
    }

    IngestionReport report;
    Dataset::GroupMap disciplines;
    for (auto& [key, marks] : grouped) {
        // Order-independent layout: judges sorted, ties (duplicates) by mark then row.
        std::sort(marks.begin(), marks.end(), [](const MarkRecord& a, const MarkRecord& b) {
            return std::tie(a.judge_id, a.mark, a.source_row) < std::tie(b.judge_id, b.mark, b.source_row);
        });
        std::optional<std::string> reason;
        if (marks.size() < 2) {
            reason = "panel size < 2";
        } else if (std::adjacent_find(marks.begin(), marks.end(), [](const auto& a, const auto& b) {
                       return a.judge_id == b.judge_id;
                   }) != marks.end()) {
            reason = "duplicate judge";
        } else if (std::any_of(marks.begin(), marks.end(),
                               [&](const MarkRecord& m) { return !(m.scale == marks.front().scale); })) {
            reason = "mixed scales";
        }
        if (reason) {
            for (const auto& m : marks) report.rejected.push_back({m.source_row, *reason});
            continue;
        }
        PerformanceGroup group;
        group.discipline_id = key.first;
        group.performance_id = key.second;
        std::vector<Points> values;
        values.reserve(marks.size());
        for (const auto& m : marks) values.push_back(m.mark);
        group.control_score = median_control_score(values);
        group.marks = std::move(marks);
        disciplines[key.first].push_back(std::move(group));
    }
    report.total_rows = records.size();
    std::sort(report.rejected.begin(), report.rejected.end(),
              [](const Rejection& a, const Rejection& b) { return a.row < b.row; });
    if (disciplines.empty()) throw SchemaError("empty dataset");
    return {Dataset(std::move(disciplines), std::move(provenance)), std::move(report)};
}

IngestResult ingest_file(const std::string& path) {
    auto parsed = parse_records_file(path);
    const std::size_t rows = parsed.report.total_rows;
    if (parsed.records.empty()) throw SchemaError("empty dataset: no valid rows in '" + path + "'");
    auto built = build_dataset(std::move(parsed.records), {SourceInfo{path, rows}});
    IngestionReport report = parsed.report;
    report.rejected.insert(report.rejected.end(), built.report.rejected.begin(), built.report.rejected.end());
    std::sort(report.rejected.begin(), report.rejected.end(),
              [](const Rejection& a, const Rejection& b) { return a.row < b.row; });
    return {std::move(built.dataset), std::move(report)};
}

void write_records(std::ostream& out, const std::vector<MarkRecord>& records) {
    const bool with_role =
        std::any_of(records.begin(), records.end(), [](const MarkRecord& r) { return !r.judge_role.empty(); });
    out << "competition_id,discipline_id,performance_id,judge_id,mark,scale_min,scale_max,scale_step";
    if (with_role) out << ",judge_role";
    out << '\n';
    for (const auto& r : records) {
        out << csv_field(r.competition_id) << ',' << csv_field(r.discipline_id) << ','
            << csv_field(r.performance_id) << ',' << csv_field(r.judge_id) << ',' << r.mark.to_string() << ','
            << r.scale.min_mark.to_string() << ',' << r.scale.max_mark.to_string() << ','
            << r.scale.step.to_string();
        if (with_role) out << ',' << csv_field(r.judge_role);
        out << '\n';
    }
}

void write_records(std::ostream& out, const Dataset& dataset) {
    std::vector<MarkRecord> flat;
    flat.reserve(dataset.mark_count());
    for (const auto& [_, groups] : dataset.disciplines())
        for (const auto& g : groups) flat.insert(flat.end(), g.marks.begin(), g.marks.end());
    write_records(out, flat);
}

void write_report(std::ostream& out, const IngestionReport& report) {
    for (const auto& r : report.rejected) out << r.row << '\t' << r.reason << '\n';
}

}  // namespace judgecal
