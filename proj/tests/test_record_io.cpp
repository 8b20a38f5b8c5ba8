#include <gtest/gtest.h>

#include <filesystem>

#include "varqqa/record_io.hpp"

using namespace varqqa;

namespace {

SolutionRecord mod22_record() {
    CircuitProblem problem({2, 1, 1, {2, 1}}, make_mod(2, 2));
    OptimizerSettings s;
    s.restarts = 2;
    const auto out = optimize_circuit(problem, s);
    return make_record(problem, out, kExactThreshold, s.seed, 0.25);
}

std::filesystem::path scratch(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "varqqa_record_io";
    std::filesystem::create_directories(dir);
    return dir / name;
}

} // namespace

TEST(FunctionJson, RoundTripAllFamilies) {
    const auto table = BooleanFunction::from_table(3, {{5, 7}, {1, -2}, {6, 7}});
    for (const auto& f : {make_mod(4, 3), make_exact(5, 1, 3), table}) {
        const auto g = function_from_json(function_to_json(f));
        EXPECT_EQ(g.family(), f.family());
        EXPECT_EQ(g.domain(), f.domain());
        EXPECT_EQ(g.labels(), f.labels());
        EXPECT_EQ(g.classes(), f.classes());
    }
}

TEST(FunctionJson, Errors) {
    EXPECT_THROW(function_from_json(Json::parse(R"({"family":"exact","n":4,"k":3,"l":2})")), ParameterError);
    EXPECT_THROW(function_from_json(Json::parse(R"({"family":"mod","n":4})")), FormatError);
    EXPECT_THROW(function_from_json(Json::parse(R"({"family":"xor","n":4})")), FormatError);
    EXPECT_THROW(function_from_json(Json::parse(R"({"family":"table","n":2,"entries":[["101",1],["00",0]]})")),
                 FormatError);
    EXPECT_THROW(function_from_json(Json::parse(R"({"family":"table","n":2,"entries":[["01",1],["01",0]]})")),
                 ParameterError);
}

TEST(MatrixJson, RoundTripIsExact) {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g;
    CMatrix m(3, 4);
    for (auto& z : m.reshaped()) z = {g(rng), g(rng)};
    EXPECT_EQ(matrix_from_json(Json::parse(matrix_to_json(m).dump()), "m"), m);
    EXPECT_THROW(matrix_from_json(Json::parse("[[[1,0]],[[1,0],[0,0]]]"), "m"), FormatError);
    EXPECT_THROW(matrix_from_json(Json::parse("[[[1]]]"), "m"), FormatError);
}

TEST(RecordJson, RoundTripThenCertify) {
    const auto rec = mod22_record();
    const auto path = scratch("record.json").string();
    save_record(rec, path);
    const auto back = load_record(path);

    EXPECT_EQ(back.config.partition, rec.config.partition);
    EXPECT_EQ(back.config.t, rec.config.t);
    ASSERT_EQ(back.unitaries.size(), rec.unitaries.size());
    for (std::size_t k = 0; k < rec.unitaries.size(); ++k) EXPECT_EQ(back.unitaries[k], rec.unitaries[k]);
    EXPECT_EQ(back.per_input, rec.per_input);
    EXPECT_EQ(back.max_error, rec.max_error);
    EXPECT_EQ(back.grams.size(), static_cast<std::size_t>(rec.config.t));
    EXPECT_EQ(back.trace.reason, rec.trace.reason);
    EXPECT_EQ(back.trace.restarts.size(), rec.trace.restarts.size());

    const auto rep = certify(back, back.epsilon);
    EXPECT_TRUE(rep.certified);
    EXPECT_LT(std::abs(rep.mean_error - rec.mean_error), 1e-10);
    EXPECT_LT(std::abs(rep.max_error - rec.max_error), 1e-10);
}

TEST(RecordJson, DocumentLayout) {
    const Json j = record_to_json(mod22_record());
    EXPECT_EQ(j.at("basis_convention"), "i*d_w+w");
    EXPECT_EQ(j.at("config").at("d_A"), 3);
    EXPECT_EQ(j.at("config").at("d_q"), 3);
    EXPECT_EQ(j.at("unitaries").size(), 2u);
    EXPECT_EQ(j.at("unitaries")[0].size(), 3u);
    EXPECT_EQ(j.at("unitaries")[0][0][0].size(), 2u);
    EXPECT_EQ(j.at("per_input_error").size(), 4u);
}

TEST(RecordJson, MalformedInputsAreFormatErrors) {
    const Json good = record_to_json(mod22_record());
    for (const char* key : {"format", "function", "config", "unitaries", "per_input_error", "epsilon"}) {
        Json bad = good;
        bad.erase(key);
        EXPECT_THROW(record_from_json(bad), FormatError) << key;
    }
    Json bad = good;
    bad["config"]["partition"] = {1, 1, 1};
    EXPECT_THROW(record_from_json(bad), FormatError);
    bad = good;
    bad["function"] = {{"family", "exact"}, {"n", 2}, {"k", 2}, {"l", 1}};
    EXPECT_THROW(record_from_json(bad), FormatError);
    bad = good;
    bad["basis_convention"] = "w*(n+1)+i";
    EXPECT_THROW(record_from_json(bad), FormatError);

    const std::string text = good.dump();
    const auto path = scratch("truncated.json").string();
    write_text_file(path, text.substr(0, text.size() / 2));
    EXPECT_THROW(load_record(path), FormatError);
    EXPECT_THROW(load_record(scratch("does_not_exist.json").string()), FormatError);
}

TEST(Tables, GramCsvAndSummary) {
    CMatrix m(2, 2);
    m << Complex(1, 0), Complex(0, -0.5), Complex(0, 0.5), Complex(2, 0);
    EXPECT_EQ(gram_csv(m, {1, 0}), "2,0.5\n0.5,1\n");
    SearchCell c{2, 1, {3, 3}, 0.5, 0.75, false, 1.5};
    EXPECT_EQ(search_summary_csv({c}), "t,d_w,partition,mean_error,max_error,certified,seconds\n"
                                       "2,1,\"[3,3]\",0.5,0.75,false,1.5\n");
}

TEST(Tables, GramDisplayOrderClustersModClasses) {
    const auto f = make_mod(3, 3);
    const auto order = gram_display_order(f);
    for (std::size_t k = 1; k < order.size(); ++k) EXPECT_LE(f.class_at(order[k - 1]), f.class_at(order[k]));
    const auto e = make_exact(3, 0, 2);
    const auto ident = gram_display_order(e);
    for (std::size_t k = 0; k < ident.size(); ++k) EXPECT_EQ(ident[k], k);
}

TEST(SdpExport, QueryMatrices) {
    const auto f = make_mod(3, 2);
    const Json j = sdp_export_json(f, 2);
    EXPECT_EQ(j.at("t"), 2);
    EXPECT_EQ(j.at("n"), 3);
    ASSERT_EQ(j.at("E").size(), 4u);
    ASSERT_EQ(j.at("domain").size(), 8u);
    for (int i = 0; i <= 3; ++i)
        for (int x = 0; x < 8; ++x)
            for (int y = 0; y < 8; ++y) {
                // bit i counted from the most significant of three.
                const int xi = i == 0 ? 0 : (x >> (3 - i)) & 1;
                const int yi = i == 0 ? 0 : (y >> (3 - i)) & 1;
                EXPECT_EQ(j["E"][i][x][y].get<int>(), (xi + yi) % 2 ? -1 : 1);
            }
    EXPECT_EQ(j.at("domain")[3], "011");
    EXPECT_EQ(j.at("table")[3], 0);
    EXPECT_EQ(j.at("table")[1], 1);
    EXPECT_THROW(sdp_export_json(f, -1), ParameterError);
}

TEST(SdpExport, PartialDomain) {
    const auto f = BooleanFunction::from_table(2, {{3, 1}, {0, 0}});
    const Json j = sdp_export_json(f, 1);
    EXPECT_EQ(j.at("domain"), Json::array({"00", "11"}));
    EXPECT_EQ(j.at("E")[1], Json::parse("[[1,-1],[-1,1]]"));
    EXPECT_EQ(j.at("E")[2], Json::parse("[[1,-1],[-1,1]]"));
}
