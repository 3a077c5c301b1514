// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include "hmmwave/config_file.hpp"
#include "hmmwave/plot.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

using namespace hmmwave;
using Catch::Matchers::ContainsSubstring;

namespace {

int count_occurrences(const std::string& text, const std::string& needle) {
    int count = 0;
    for (std::size_t pos = text.find(needle); pos != std::string::npos;
         pos = text.find(needle, pos + needle.size())) {
        ++count;
    }
    return count;
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::size_t begin = 0;
    while (begin < text.size()) {
        std::size_t end = text.find('\n', begin);
        if (end == std::string::npos) end = text.size();
        lines.push_back(text.substr(begin, end - begin));
        begin = end + 1;
    }
    return lines;
}

StudyConfig customized_config(StudyKind kind) {
    StudyConfig c;
    c.kind = kind;
    c.schemes = {Scheme::implicit_midpoint, Scheme::explicit_midpoint};
    c.order = 2;
    c.mesh_levels = {2, 3, 4};
    c.time_mesh_level = 4;
    c.tau = 0.125;
    c.tau_list = {0.5, 0.25, 0.125};
    c.tau_ref = 0.015625;
    c.reference = TimeReference::reference;
    c.tensor = TensorSource::hmm;
    c.epsilon = 1.0 / 64.0;
    c.delta = 1.0 / 16.0;
    c.micro_subdivisions = 12;
    c.micro_sweep = {8, 16, 32};
    c.coupling = CellCoupling::neumann_mean_free;
    c.sampling = CoefficientSampling::sampled;
    c.micro_point = {0.375, 0.625};
    c.final_time = 2.0;
    c.cg_tolerance = 1e-11;
    c.fp_tolerance = 1e-9;
    c.fp_max_iterations = 80;
    c.divergence_threshold = 1e20;
    c.threads = 3;
    c.literal_nonlinearity = true;
    c.emit_timings = false;
    return c;
}

StudyResult power_law_result() {
    StudyResult result;
    for (int level = 2; level <= 5; ++level) {
        StudyRow row;
        row.study = "space";
        row.scheme = "imex";
        row.H = std::pow(2.0, -level);
        row.e_total = 0.9 * (*row.H) * (*row.H);
        result.rows.push_back(row);
    }
    return result;
}

} // namespace

TEST_CASE("default configs round trip through the text format") {
    for (StudyKind kind :
         {StudyKind::space, StudyKind::time, StudyKind::micro, StudyKind::plateau}) {
        StudyConfig original;
        original.kind = kind;
        if (kind == StudyKind::plateau) original.tensor = TensorSource::hmm;
        const std::string text = serialize_study_config(original);
        const StudyConfig reparsed = parse_study_config(text, kind);
        CHECK(reparsed == original);
    }
}

TEST_CASE("customized configs round trip through the text format") {
    for (StudyKind kind :
         {StudyKind::space, StudyKind::time, StudyKind::micro, StudyKind::plateau}) {
        const StudyConfig original = customized_config(kind);
        const std::string text = serialize_study_config(original);
        CHECK_THAT(text, ContainsSubstring("[" + std::string(to_string(kind)) + "]"));
        CHECK_THAT(text, ContainsSubstring("schemes = implicit_mp,explicit_mp"));
        CHECK_THAT(text, ContainsSubstring("coupling = neumann-mean-free"));
        const StudyConfig reparsed = parse_study_config(text, kind);
        CHECK(reparsed == original);
    }
}

TEST_CASE("keys outside sections apply to every kind") {
    const std::string text = "order = 2\n"
                             "[time]\n"
                             "tau = 0.25\n"
                             "[space]\n"
                             "tau = 0.5\n";
    const StudyConfig time_config = parse_study_config(text, StudyKind::time);
    CHECK(time_config.order == 2);
    CHECK(time_config.tau == 0.25);

    const StudyConfig space_config = parse_study_config(text, StudyKind::space);
    CHECK(space_config.order == 2);
    CHECK(space_config.tau == 0.5);

    const StudyConfig micro_config = parse_study_config(text, StudyKind::micro);
    CHECK(micro_config.order == 2);
    CHECK(micro_config.tau == StudyConfig{}.tau);
}

TEST_CASE("comments, blank lines, and stray whitespace are tolerated") {
    const std::string text = "# leading comment\n"
                             "\n"
                             "\torder = 2   # trailing comment\n"
                             "  mesh_levels = 3 , 4 \r\n"
                             "   [ micro ]\n"
                             "  micro_sweep = 8 ,16\n";
    const StudyConfig config = parse_study_config(text, StudyKind::micro);
    CHECK(config.order == 2);
    CHECK(config.mesh_levels == std::vector<int>{3, 4});
    CHECK(config.micro_sweep == std::vector<int>{8, 16});
}

TEST_CASE("malformed config lines report the offending line number") {
    SECTION("unknown key") {
        CHECK_THROWS_WITH(parse_study_config("bogus = 1\n", StudyKind::space),
                          ContainsSubstring("config line 1: unknown key 'bogus'"));
    }
    SECTION("unknown keys are rejected even inside inactive sections") {
        CHECK_THROWS_WITH(parse_study_config("[micro]\nbogus = 1\n", StudyKind::space),
                          ContainsSubstring("config line 2: unknown key 'bogus'"));
    }
    SECTION("missing equals sign") {
        CHECK_THROWS_WITH(parse_study_config("order 2\n", StudyKind::space),
                          ContainsSubstring("config line 1: expected 'key = value'"));
    }
    SECTION("missing key before equals sign") {
        CHECK_THROWS_WITH(parse_study_config(" = 2\n", StudyKind::space),
                          ContainsSubstring("config line 1: missing key before '='"));
    }
    SECTION("unterminated section header") {
        CHECK_THROWS_WITH(parse_study_config("[time\n", StudyKind::time),
                          ContainsSubstring("config line 1: unterminated section header"));
    }
    SECTION("unknown section name") {
        CHECK_THROWS_WITH(parse_study_config("[banana]\n", StudyKind::time),
                          ContainsSubstring("unknown study kind: banana"));
    }
    SECTION("malformed number") {
        CHECK_THROWS_WITH(parse_study_config("tau = fast\n", StudyKind::time),
                          ContainsSubstring("config line 1: expected a number, got 'fast'"));
    }
    SECTION("malformed integer") {
        CHECK_THROWS_WITH(parse_study_config("order = 1.5\n", StudyKind::space),
                          ContainsSubstring("config line 1: expected an integer, got '1.5'"));
    }
    SECTION("unknown enum token") {
        CHECK_THROWS_WITH(parse_study_config("tensor = spectral\n", StudyKind::space),
                          ContainsSubstring("config line 1: unknown tensor source: spectral"));
    }
    SECTION("malformed boolean") {
        CHECK_THROWS_WITH(parse_study_config("emit_timings = maybe\n", StudyKind::space),
                          ContainsSubstring("config line 1: expected true or false"));
    }
    SECTION("micro_point needs exactly two coordinates") {
        CHECK_THROWS_WITH(parse_study_config("micro_point = 0.5\n", StudyKind::micro),
                          ContainsSubstring("config line 1: micro_point needs two coordinates"));
        CHECK_THROWS_WITH(parse_study_config("micro_point = 0.5,0.5,0.5\n", StudyKind::micro),
                          ContainsSubstring("config line 1: micro_point needs two coordinates"));
    }
    SECTION("empty list item") {
        CHECK_THROWS_WITH(parse_study_config("mesh_levels = 2,,3\n", StudyKind::space),
                          ContainsSubstring("config line 1: empty item in list"));
    }
    SECTION("empty scheme list") {
        CHECK_THROWS_WITH(parse_study_config("schemes =\n", StudyKind::space),
                          ContainsSubstring("schemes must name at least one scheme"));
    }
    SECTION("parsed configs are validated") {
        CHECK_THROWS_AS(parse_study_config("order = 7\n", StudyKind::space),
                        std::invalid_argument);
        CHECK_THROWS_WITH(parse_study_config("tensor = exact\n", StudyKind::plateau),
                          ContainsSubstring("plateau studies require the hmm tensor source"));
    }
}

TEST_CASE("config files load from disk") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "hmmwave_config_test";
    fs::create_directories(dir);
    const fs::path path = dir / "study.cfg";
    {
        std::ofstream out(path);
        out << "[time]\ntau_list = 0.2,0.1\nfinal_time = 0.5\n";
    }
    const StudyConfig config = load_study_config(path, StudyKind::time);
    CHECK(config.tau_list == std::vector<double>{0.2, 0.1});
    CHECK(config.final_time == 0.5);
    fs::remove_all(dir);

    CHECK_THROWS_WITH(load_study_config(dir / "missing.cfg", StudyKind::time),
                      ContainsSubstring("cannot open config file"));
}

TEST_CASE("enum tokens round trip through their parsers") {
    for (StudyKind k :
         {StudyKind::space, StudyKind::time, StudyKind::micro, StudyKind::plateau})
        CHECK(study_kind_from_string(to_string(k)) == k);
    for (Scheme s : {Scheme::imex, Scheme::implicit_midpoint, Scheme::explicit_midpoint})
        CHECK(scheme_from_string(to_string(s)) == s);
    for (TensorSource t : {TensorSource::exact, TensorSource::hmm})
        CHECK(tensor_source_from_string(to_string(t)) == t);
    for (TimeReference r : {TimeReference::exact, TimeReference::reference, TimeReference::both})
        CHECK(time_reference_from_string(to_string(r)) == r);
    for (CellCoupling c :
         {CellCoupling::periodic, CellCoupling::dirichlet, CellCoupling::neumann_mean_free})
        CHECK(coupling_from_string(to_string(c)) == c);
    for (CoefficientSampling s : {CoefficientSampling::frozen, CoefficientSampling::sampled})
        CHECK(sampling_from_string(to_string(s)) == s);

    CHECK_THROWS_AS(study_kind_from_string("spacetime"), std::invalid_argument);
    CHECK_THROWS_AS(scheme_from_string("leapfrog"), std::invalid_argument);
    CHECK_THROWS_AS(coupling_from_string("neumann"), std::invalid_argument);
}

TEST_CASE("svg plots draw one series per study and scheme") {
    const StudyResult result = power_law_result();
    const std::string svg = render_plot_svg(result, "convergence");

    CHECK_THAT(svg, ContainsSubstring("<svg xmlns="));
    CHECK_THAT(svg, ContainsSubstring("</svg>"));
    CHECK_THAT(svg, ContainsSubstring(">convergence</text>"));
    CHECK_THAT(svg, ContainsSubstring("<g data-series=\"space imex\">"));
    CHECK_THAT(svg, ContainsSubstring(">space imex</text>"));
    CHECK_THAT(svg, ContainsSubstring(">mesh width</text>"));
    CHECK_THAT(svg, ContainsSubstring(">relative error</text>"));

    CHECK(count_occurrences(svg, "r=\"3.5\"") == 4);
    CHECK(count_occurrences(svg, "<polyline") == 1);

    SECTION("reference slope triangles of order one and two are drawn") {
        CHECK_THAT(svg, ContainsSubstring(">1</text>"));
        CHECK_THAT(svg, ContainsSubstring(">2</text>"));
    }
}

TEST_CASE("power law data plots as a straight line on log-log axes") {
    const std::string svg = render_plot_svg(power_law_result());
    std::vector<std::pair<double, double>> markers;
    for (const std::string& line : split_lines(svg)) {
        if (line.find("r=\"3.5\"") == std::string::npos) continue;
        double cx = 0.0, cy = 0.0;
        REQUIRE(std::sscanf(line.c_str(), "<circle cx=\"%lf\" cy=\"%lf\"", &cx, &cy) == 2);
        markers.emplace_back(cx, cy);
    }
    REQUIRE(markers.size() == 4);
    const auto slope = [&](std::size_t i) {
        return (markers[i + 1].second - markers[i].second) /
               (markers[i + 1].first - markers[i].first);
    };
    CHECK(std::abs(slope(1) - slope(0)) < 1e-3);
    CHECK(std::abs(slope(2) - slope(1)) < 1e-3);
}

TEST_CASE("diverged runs are marked with crosses inside their series group") {
    StudyResult result;
    for (int k = 0; k < 3; ++k) {
        StudyRow row;
        row.study = "time";
        row.scheme = "imex";
        row.tau = 0.25 / (1 << k);
        row.e_total = 0.1 * (*row.tau) * (*row.tau);
        result.rows.push_back(row);
    }
    for (int k = 0; k < 2; ++k) {
        StudyRow row;
        row.study = "time";
        row.scheme = "explicit_mp";
        row.tau = 0.25 / (1 << k);
        row.diverged = true;
        result.rows.push_back(row);
    }

    const std::string svg = render_plot_svg(result);
    CHECK_THAT(svg, ContainsSubstring(">time step</text>"));
    CHECK(count_occurrences(svg, "class=\"diverged\"") == 2);

    const std::size_t group = svg.find("<g data-series=\"time explicit_mp\">");
    REQUIRE(group != std::string::npos);
    const std::size_t group_end = svg.find("</g>", group);
    REQUIRE(group_end != std::string::npos);
    const std::string body = svg.substr(group, group_end - group);
    CHECK(count_occurrences(body, "class=\"diverged\"") == 2);
    CHECK(count_occurrences(body, "<circle") == 0);
    CHECK(count_occurrences(body, "<polyline") == 0);
}

TEST_CASE("micro study plots label their axes with the micro mesh width") {
    StudyResult result;
    for (int n : {16, 32}) {
        StudyRow row;
        row.study = "micro";
        row.micro_n = n;
        row.delta = 1.0 / 32.0;
        row.e_total = 1.0 / (n * n);
        result.rows.push_back(row);
    }
    const std::string svg = render_plot_svg(result);
    CHECK_THAT(svg, ContainsSubstring(">micro mesh width</text>"));
    CHECK_THAT(svg, ContainsSubstring(">tensor error</text>"));
    CHECK_THAT(svg, ContainsSubstring("<g data-series=\"micro\">"));
}

TEST_CASE("rows without a finite positive error draw no marker") {
    StudyResult result = power_law_result();
    StudyRow zero_row;
    zero_row.study = "space";
    zero_row.scheme = "imex";
    zero_row.H = 0.5;
    zero_row.e_total = 0.0;
    result.rows.push_back(zero_row);
    const std::string svg = render_plot_svg(result);
    CHECK(count_occurrences(svg, "r=\"3.5\"") == 4);
}

TEST_CASE("plots with nothing to draw are rejected") {
    CHECK_THROWS_WITH(render_plot_svg(StudyResult{}),
                      ContainsSubstring("render_plot_svg: no plottable rows in result"));

    StudyResult only_diverged;
    StudyRow row;
    row.study = "time";
    row.scheme = "explicit_mp";
    row.tau = 0.25;
    row.diverged = true;
    only_diverged.rows.push_back(row);
    CHECK_THROWS_AS(render_plot_svg(only_diverged), std::runtime_error);
}

TEST_CASE("plots are written atomically") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "hmmwave_plot_test";
    fs::create_directories(dir);
    const fs::path path = dir / "study.svg";
    write_plot(power_law_result(), path, "study");
    REQUIRE(fs::exists(path));
    CHECK_FALSE(fs::exists(dir / "study.svg.tmp"));

    std::ifstream in(path);
    std::string first_line;
    std::getline(in, first_line);
    CHECK(first_line.rfind("<svg", 0) == 0);
    fs::remove_all(dir);
}

TEST_CASE("svg coordinates use fixed two-decimal formatting") {
    CHECK(detail::fmt2(3.14159) == "3.14");
    CHECK(detail::fmt2(2.0) == "2.00");
    CHECK(detail::fmt2(-0.005) == "-0.01");
}
