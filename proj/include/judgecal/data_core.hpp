#pragma once

#include <cstddef>
#include <istream>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "judgecal/points.hpp"

namespace judgecal {

/// Closed finite mark range with a uniform grid.
struct Scale {
    Points min_mark;
    Points max_mark;
    Points step;

    bool valid() const;
    bool contains(Points mark) const { return min_mark <= mark && mark <= max_mark; }
    bool on_grid(Points mark) const;
    /// Number of grid positions, (max - min) / step + 1.
    std::int64_t grid_size() const;
    Points round_to_grid(double value) const;
    Points clamp(Points mark) const;

    bool operator==(const Scale&) const = default;
};

struct MarkRecord {
    std::string competition_id;
    std::string discipline_id;
    std::string performance_id;
    std::string judge_id;
    Points mark;
    Scale scale;
    std::string judge_role;  // optional column, carried through untouched
    std::size_t source_row = 0;  // provenance only; not part of equality

    bool operator==(const MarkRecord& o) const {
        return competition_id == o.competition_id && discipline_id == o.discipline_id &&
               performance_id == o.performance_id && judge_id == o.judge_id && mark == o.mark &&
               scale == o.scale && judge_role == o.judge_role;
    }
};

struct PerformanceGroup {
    std::string discipline_id;
    std::string performance_id;
    std::vector<MarkRecord> marks;  // sorted by judge_id
    Points control_score;

    const Scale& scale() const { return marks.front().scale; }

    bool operator==(const PerformanceGroup&) const = default;
};

struct Rejection {
    std::size_t row = 0;
    std::string reason;

    bool operator==(const Rejection&) const = default;
};

struct IngestionReport {
    std::size_t total_rows = 0;
    std::vector<Rejection> rejected;  // ordered by row

    std::size_t accepted_rows() const { return total_rows - rejected.size(); }
    void merge(const IngestionReport& other);
};

struct SourceInfo {
    std::string path;
    std::size_t rows = 0;

    bool operator==(const SourceInfo&) const = default;
};

/// Fatal ingestion failure: unusable header or nothing left after validation.
class SchemaError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class Dataset {
public:
    using GroupMap = std::map<std::string, std::vector<PerformanceGroup>>;

    Dataset(GroupMap disciplines, std::vector<SourceInfo> provenance);

    const GroupMap& disciplines() const { return disciplines_; }
    const std::vector<PerformanceGroup>& discipline(const std::string& id) const;
    bool has_discipline(const std::string& id) const { return disciplines_.count(id) != 0; }
    const std::vector<SourceInfo>& provenance() const { return provenance_; }
    std::size_t mark_count() const;
    std::size_t performance_count() const;

    bool operator==(const Dataset& other) const { return disciplines_ == other.disciplines_; }

private:
    GroupMap disciplines_;
    std::vector<SourceInfo> provenance_;
};

struct ParseResult {
    std::vector<MarkRecord> records;
    IngestionReport report;
};

/// Reads the comma-delimited mark format. Row numbers in the report are
/// physical line numbers (header is line 1). Throws SchemaError on a bad header.
ParseResult parse_records(std::istream& source);
ParseResult parse_records_file(const std::string& path);

struct BuildResult {
    Dataset dataset;
    IngestionReport report;  // rows of rejected panels
};

/// Groups records by (discipline_id, performance_id), drops invalid panels into
/// the report and computes every surviving control score. Throws SchemaError
/// when no panel survives.
BuildResult build_dataset(std::vector<MarkRecord> records, std::vector<SourceInfo> provenance = {});

struct IngestResult {
    Dataset dataset;
    IngestionReport report;  // parse and panel rejections together
};

/// parse_records_file + build_dataset with one combined report.
IngestResult ingest_file(const std::string& path);

/// Emits the dataset in the input format, sorted by discipline, performance, judge.
void write_records(std::ostream& out, const Dataset& dataset);
void write_records(std::ostream& out, const std::vector<MarkRecord>& records);

/// `<row>\t<reason>` per rejected row.
void write_report(std::ostream& out, const IngestionReport& report);

}  // namespace judgecal
