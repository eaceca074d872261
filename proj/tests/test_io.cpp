#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>
#include <sstream>

#include "common.hpp"
#include "modepull/csv.hpp"
#include "modepull/report.hpp"

using namespace modepull;

TEST_CASE("measurement csv round trip is lossless") {
    std::mt19937_64 rng(313131);
    std::uniform_real_distribution<double> mantissa(-1.0, 1.0);
    std::uniform_int_distribution<int> exponent(-12, 12);
    std::uniform_real_distribution<double> weight(0.0, 3.0);

    std::vector<MeasurementPoint> points;
    for (int i = 0; i < 200; ++i) {
        MeasurementPoint p;
        p.delta_f_e_hz = mantissa(rng) * std::pow(10.0, exponent(rng));
        p.delta_f_d_hz = mantissa(rng) * std::pow(10.0, exponent(rng));
        p.weight = weight(rng);
        points.push_back(p);
    }
    const MeasurementSeries original(points, "round-trip");

    std::ostringstream out;
    write_measurement_csv(out, original, {"comment line", "another comment"});
    std::istringstream in(out.str());
    const MeasurementSeries restored = read_measurement_csv(in, "round-trip");

    REQUIRE(restored.size() == original.size());
    for (std::size_t i = 0; i < original.size(); ++i) {
        CHECK(restored.points()[i].delta_f_e_hz == original.points()[i].delta_f_e_hz);
        CHECK(restored.points()[i].delta_f_d_hz == original.points()[i].delta_f_d_hz);
        CHECK(restored.points()[i].weight == original.points()[i].weight);
    }
}

TEST_CASE("csv reader") {
    SUBCASE("unknown columns are ignored, comments skipped") {
        std::istringstream in(
            "# a comment\n"
            "delta_f_e_hz,foo,delta_f_d_hz,bar\n"
            "1e6,x,2e6,y\n"
            "# mid-file comment\n"
            "3e6,z,4e6,w\n");
        const MeasurementSeries series = read_measurement_csv(in, "test");
        REQUIRE(series.size() == 2);
        CHECK(series.points()[0].delta_f_e_hz == 1e6);
        CHECK(series.points()[1].delta_f_d_hz == 4e6);
        CHECK(series.points()[0].weight == 1.0);
    }
    SUBCASE("weight column is honored") {
        std::istringstream in(
            "delta_f_e_hz,delta_f_d_hz,weight\n"
            "1,2,0.5\n"
            "3,4,2\n");
        const MeasurementSeries series = read_measurement_csv(in, "test");
        CHECK(series.points()[0].weight == 0.5);
        CHECK(series.points()[1].weight == 2.0);
    }
    SUBCASE("malformed rows are reported with line numbers") {
        std::istringstream in(
            "delta_f_e_hz,delta_f_d_hz\n"  // line 1
            "1,2\n"                        // line 2
            "1,not_a_number\n"             // line 3
            "3,4\n"                        // line 4
            "5\n"                          // line 5
            "6,nan\n");                    // line 6
        try {
            read_measurement_csv(in, "bad.csv");
            FAIL("expected CsvError");
        } catch (const CsvError& error) {
            const std::string message = error.what();
            CHECK(message.find("bad.csv") != std::string::npos);
            CHECK(message.find("3") != std::string::npos);
            CHECK(message.find("5") != std::string::npos);
            CHECK(message.find("6") != std::string::npos);
        }
    }
    SUBCASE("negative weights are malformed") {
        std::istringstream in(
            "delta_f_e_hz,delta_f_d_hz,weight\n"
            "1,2,-1\n");
        CHECK_THROWS_AS(read_measurement_csv(in, "w.csv"), CsvError);
    }
    SUBCASE("missing required columns") {
        std::istringstream in("delta_f_e_hz,other\n1,2\n");
        CHECK_THROWS_AS(read_measurement_csv(in, "test"), CsvError);
    }
    SUBCASE("empty input") {
        std::istringstream in("");
        CHECK_THROWS_AS(read_measurement_csv(in, "test"), CsvError);
    }
}

TEST_CASE("response csv layout") {
    ResponseCurve curve;
    curve.direction = SweepDirection::Up;
    curve.samples = {{-1e6, -1.1e6, 0.7, 0}, {1e6, 1.1e6, 0.7, 0}};
    std::ostringstream out;
    write_response_csv(out, curve, {"provenance: {}"});
    const std::string text = out.str();
    CHECK(text.find("# provenance: {}") != std::string::npos);
    CHECK(text.find("delta_f_e_hz,delta_f_d_hz,pf,branch_id") != std::string::npos);
    CHECK(text.find("0.69999999999999996,0") != std::string::npos);
}

TEST_CASE("provenance and report serialization") {
    const nlohmann::json provenance =
        make_provenance("scan", nlohmann::json{{"gamma_hz", 6e6}});
    CHECK(provenance["tool"] == "modepull");
    CHECK(provenance["subcommand"] == "scan");
    CHECK(provenance["config"]["gamma_hz"] == 6e6);

    Interval interval{1.5, 2.0, std::numeric_limits<double>::infinity(), true};
    const nlohmann::json as_json = to_json(interval);
    CHECK(as_json["lower"] == 1.5);
    CHECK(as_json["upper"].is_null());
    CHECK(as_json["upper_unbounded"] == true);
}

TEST_CASE("extrema record layout") {
    PfExtrema extrema;
    extrema.pf_max = 2.0;
    extrema.pf_min = 0.2;
    extrema.detuning_at_max_hz = 1.0392e7;
    extrema.bifurcating = false;
    extrema.epsilon_ratio = 0.5;
    const std::string record = extrema_record(extrema, 2.3e-6, 4.6e-6, {"tool"});
    CHECK(record.find("# tool\n") != std::string::npos);
    CHECK(record.find("pf_max = 2\n") != std::string::npos);
    CHECK(record.find("pf_min = 0.2") != std::string::npos);
    CHECK(record.find("bifurcating = false") != std::string::npos);

    PfExtrema bif = extrema;
    bif.pf_max.reset();
    bif.bifurcating = true;
    const std::string record2 = extrema_record(bif, 9.2e-6, 4.6e-6, {});
    CHECK(record2.find("pf_max") == std::string::npos);
    CHECK(record2.find("bifurcating = true") != std::string::npos);
}
