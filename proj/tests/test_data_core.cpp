#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "judgecal/data_core.hpp"

using namespace judgecal;

namespace {

const char* kHeader = "competition_id,discipline_id,performance_id,judge_id,mark,scale_min,scale_max,scale_step\n";

ParseResult parse(const std::string& body) {
    std::istringstream in(std::string(kHeader) + body);
    return parse_records(in);
}

Points pts(const char* s) { return Points::parse(s).value(); }

}  // namespace

TEST_SUITE("points") {
    TEST_CASE("decimal literals parse exactly") {
        CHECK(pts("8.5").ticks() == 8'500'000'000);
        CHECK(pts("-0.25").ticks() == -250'000'000);
        CHECK(pts("10").ticks() == 10'000'000'000);
        CHECK(pts(".5") == pts("0.5"));
        CHECK(pts("0.12345678") == Points::from_ticks(123'456'780));
        CHECK(pts("1.500000000000") == pts("1.5"));
    }

    TEST_CASE("malformed or over-precise literals are refused") {
        CHECK_FALSE(Points::parse(""));
        CHECK_FALSE(Points::parse("abc"));
        CHECK_FALSE(Points::parse("1e3"));
        CHECK_FALSE(Points::parse("1.2.3"));
        CHECK_FALSE(Points::parse("-"));
        CHECK_FALSE(Points::parse("0.123456789"));
    }

    TEST_CASE("to_string is the shortest round-tripping decimal") {
        std::mt19937_64 gen(7);
        std::uniform_int_distribution<std::int64_t> dist(-2'000'000'000'000, 2'000'000'000'000);
        for (int i = 0; i < 2000; ++i) {
            const auto p = Points::from_ticks(dist(gen) * 10);
            const auto back = Points::parse(p.to_string());
            REQUIRE(back);
            CHECK(*back == p);
        }
        CHECK(pts("8.50").to_string() == "8.5");
        CHECK(pts("-3").to_string() == "-3");
        CHECK(Points{}.to_string() == "0");
    }

    TEST_CASE("midpoint and scaling stay exact") {
        CHECK(midpoint(pts("8"), pts("9")) == pts("8.5"));
        CHECK(midpoint(pts("0.00000001"), pts("0")) == Points::from_ticks(5));
        CHECK(scaled(pts("8.25"), pts("0.4")) == pts("3.3"));
        CHECK_FALSE(scaled(Points::from_ticks(1), pts("0.5")));
    }
}

TEST_SUITE("data_core") {
    TEST_CASE("row maps directly onto a record") {
        auto r = parse("W2016,DIV,P001,J01,8.5,0,10,0.5\n");
        REQUIRE(r.records.size() == 1);
        const auto& rec = r.records[0];
        CHECK(rec.competition_id == "W2016");
        CHECK(rec.discipline_id == "DIV");
        CHECK(rec.performance_id == "P001");
        CHECK(rec.judge_id == "J01");
        CHECK(rec.mark == pts("8.5"));
        CHECK(rec.scale == Scale{pts("0"), pts("10"), pts("0.5")});
        CHECK(rec.source_row == 2);
        CHECK(r.report.rejected.empty());
    }

    TEST_CASE("bound and grid violations are rejected with a reason") {
        auto r = parse("W,DIV,P1,J1,10.3,0,10,0.5\nW,DIV,P1,J2,8.25,0,10,0.5\nW,DIV,P1,J3,-1,0,10,0.5\n"
                       "W,DIV,P1,J4,x,0,10,0.5\nW,DIV,P1,J5,5,10,0,0.5\nW,DIV,P1,J6,5,0,10\nW,DIV,P1,J7,5,0,10,0.3\n");
        CHECK(r.records.empty());
        REQUIRE(r.report.rejected.size() == 7);
        CHECK(r.report.rejected[0] == Rejection{2, "mark above max_mark"});
        CHECK(r.report.rejected[1] == Rejection{3, "mark off scale grid"});
        CHECK(r.report.rejected[2] == Rejection{4, "mark below min_mark"});
        CHECK(r.report.rejected[3] == Rejection{5, "unparseable mark"});
        CHECK(r.report.rejected[4] == Rejection{6, "invalid scale"});
        CHECK(r.report.rejected[5] == Rejection{7, "wrong field count"});
        CHECK(r.report.rejected[6] == Rejection{8, "invalid scale"});
        CHECK(r.report.total_rows == 7);
    }

    TEST_CASE("missing required column is fatal") {
        std::istringstream in("competition_id,discipline_id,performance_id,judge_id,mark,scale_min,scale_max\n");
        CHECK_THROWS_AS(parse_records(in), SchemaError);
        std::istringstream empty("");
        CHECK_THROWS_AS(parse_records(empty), SchemaError);
    }

    TEST_CASE("column order is free and judge_role is preserved") {
        std::istringstream in(
            "judge_id,mark,scale_step,scale_max,scale_min,performance_id,discipline_id,competition_id,judge_role\n"
            "J1,7.5,0.5,10,0,P1,DRS,C1,E\n");
        auto r = parse_records(in);
        REQUIRE(r.records.size() == 1);
        CHECK(r.records[0].mark == pts("7.5"));
        CHECK(r.records[0].judge_role == "E");
        CHECK(r.records[0].discipline_id == "DRS");
    }

    TEST_CASE("quoted identifiers") {
        auto r = parse("\"World Cup, Doha\",VT,\"P \"\"1\"\"\",J1,9,0,10,0.1\n");
        REQUIRE(r.records.size() == 1);
        CHECK(r.records[0].competition_id == "World Cup, Doha");
        CHECK(r.records[0].performance_id == "P \"1\"");
    }

    TEST_CASE("grouping into performance panels") {
        auto r = parse("C,D,P1,J1,8,0,10,0.5\nC,D,P1,J2,8.5,0,10,0.5\nC,D,P1,J3,9,0,10,0.5\n"
                       "C,D,P2,J1,6,0,10,0.5\nC,D,P2,J2,7,0,10,0.5\nC,D,P2,J3,6.5,0,10,0.5\n");
        auto built = build_dataset(r.records);
        REQUIRE(built.dataset.disciplines().size() == 1);
        const auto& groups = built.dataset.discipline("D");
        REQUIRE(groups.size() == 2);
        CHECK(groups[0].performance_id == "P1");
        CHECK(groups[0].control_score == pts("8.5"));
        CHECK(groups[1].control_score == pts("6.5"));
        CHECK(built.report.rejected.empty());
        CHECK_THROWS_AS(built.dataset.discipline("nope"), std::out_of_range);
    }

    TEST_CASE("degenerate panels are rejected row by row") {
        auto r = parse("C,D,P1,J1,8,0,10,0.5\nC,D,P1,J1,8.5,0,10,0.5\nC,D,P1,J3,9,0,10,0.5\n"
                       "C,D,P9,J1,6,0,10,0.5\n"
                       "C,D,P3,J1,6,0,10,0.5\nC,D,P3,J2,6,0,10,0.25\n"
                       "C,D,P4,J1,6,0,10,0.5\nC,D,P4,J2,7,0,10,0.5\n");
        auto built = build_dataset(r.records);
        const auto& rej = built.report.rejected;
        REQUIRE(rej.size() == 6);
        CHECK(rej[0] == Rejection{2, "duplicate judge"});
        CHECK(rej[1] == Rejection{3, "duplicate judge"});
        CHECK(rej[2] == Rejection{4, "duplicate judge"});
        CHECK(rej[3] == Rejection{5, "panel size < 2"});
        CHECK(rej[4] == Rejection{6, "mixed scales"});
        CHECK(rej[5] == Rejection{7, "mixed scales"});
        CHECK(built.dataset.performance_count() == 1);
        CHECK(built.report.accepted_rows() + built.report.rejected.size() == built.report.total_rows);
    }

    TEST_CASE("all panels rejected is fatal") {
        auto r = parse("C,D,P9,J1,6,0,10,0.5\n");
        CHECK_THROWS_WITH_AS(build_dataset(r.records), "empty dataset", SchemaError);
        CHECK_THROWS_AS(build_dataset({}), SchemaError);
    }

    TEST_CASE("property: count conservation, order independence and round trip") {
        std::mt19937_64 gen(2024);
        for (int trial = 0; trial < 25; ++trial) {
            std::ostringstream body;
            std::uniform_int_distribution<int> panel(1, 9);
            std::uniform_int_distribution<int> grid(-2, 42);  // a few off-range marks
            std::bernoulli_distribution off_grid(0.03);
            const int perfs = 30;
            for (int p = 0; p < perfs; ++p) {
                const int n = panel(gen);
                for (int j = 0; j < n; ++j) {
                    const double mark = grid(gen) * 0.25 + (off_grid(gen) ? 0.1 : 0.0);
                    body << "C" << p % 3 << ",D" << p % 2 << ",P" << p << ",J" << j << ',' << mark << ",0,10,0.25\n";
                }
            }
            auto parsed = parse(body.str());
            REQUIRE(parsed.records.size() + parsed.report.rejected.size() == parsed.report.total_rows);

            auto built = build_dataset(parsed.records);
            CHECK(built.dataset.mark_count() + built.report.rejected.size() == parsed.records.size());

            auto shuffled = parsed.records;
            std::shuffle(shuffled.begin(), shuffled.end(), gen);
            auto rebuilt = build_dataset(shuffled);
            CHECK(rebuilt.dataset == built.dataset);
            CHECK(rebuilt.report.rejected == built.report.rejected);

            std::ostringstream out;
            write_records(out, built.dataset);
            std::istringstream in(out.str());
            auto reparsed = parse_records(in);
            CHECK(reparsed.report.rejected.empty());
            CHECK(build_dataset(reparsed.records).dataset == built.dataset);
        }
    }

    TEST_CASE("report format") {
        IngestionReport report{3, {{2, "mark above max_mark"}, {4, "panel size < 2"}}};
        std::ostringstream out;
        write_report(out, report);
        CHECK(out.str() == "2\tmark above max_mark\n4\tpanel size < 2\n");
    }

    TEST_CASE("scale helpers") {
        const Scale s{pts("0"), pts("10"), pts("0.5")};
        CHECK(s.grid_size() == 21);
        CHECK(s.round_to_grid(7.26) == pts("7.5"));
        CHECK(s.round_to_grid(7.24) == pts("7"));
        CHECK(s.round_to_grid(-3.0) == pts("0"));
        CHECK(s.round_to_grid(12.0) == pts("10"));
        CHECK(s.on_grid(pts("9.5")));
        CHECK_FALSE(s.on_grid(pts("9.25")));
    }
}
