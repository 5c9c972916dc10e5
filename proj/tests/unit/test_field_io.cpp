#include <doctest.h>

#include <cmath>
#include <sstream>

#include "nzsg/error.hpp"
#include "nzsg/field_io.hpp"
#include "nzsg/parabolic.hpp"
#include "nzsg/scenarios.hpp"

using namespace nzsg;

namespace {

ValueField small_field(int dim) {
    const GameSpec spec = builtin_scenario("heat-oracle", dim);
    const Grid g{dim, 1.5707963267948966, 11, 8, 1.0};
    return picard_solve(spec, g, FeedbackResolver::default_for(spec), {}).first;
}

}  // namespace

TEST_CASE("field dump round trips exactly") {
    for (int dim : {1, 2}) {
        CAPTURE(dim);
        const ValueField f = small_field(dim);
        std::stringstream ss;
        write_field_csv(ss, f);
        const std::string text = ss.str();
        CHECK(text.rfind(field_csv_header(dim), 0) == 0);
        const ValueField back = read_field_csv(ss);
        CHECK(back.grid().nodes_per_axis == f.grid().nodes_per_axis);
        CHECK(back.grid().time_steps == f.grid().time_steps);
        CHECK(back.grid().radius == f.grid().radius);
        for (int i = 1; i <= 2; ++i) {
            CHECK(back.player(i).values == f.player(i).values);
            for (std::size_t j = 0; j < f.player(i).gradients.size(); ++j)
                CHECK(back.player(i).gradients[j] == f.player(i).gradients[j]);
        }
        std::stringstream again;
        write_field_csv(again, back);
        CHECK(again.str() == text);
    }
}

TEST_CASE("field header") {
    CHECK(field_csv_header(1) == "s,x1,V1,V2,dV1_dx1,dV2_dx1");
    CHECK(field_csv_header(2) == "s,x1,x2,V1,V2,dV1_dx1,dV1_dx2,dV2_dx1,dV2_dx2");
}

TEST_CASE("shortest number formatting round trips") {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 1e22, 0.36807086474214556}) CHECK(std::stod(format_double(v)) == v);
    CHECK(format_double(1.0) == "1");
}

TEST_CASE("malformed dumps are rejected") {
    for (const char* text : {"", "s,x1,V1\n0,0,1\n", "s,x1,V1,V2,dV1_dx1,dV2_dx1\n0,0,abc,1,0,0\n",
                             "s,x1,V1,V2,dV1_dx1,dV2_dx1\n0,0,1,1,0\n",
                             "s,x1,V1,V2,dV1_dx1,dV2_dx1\n0,-1,1,1,0,0\n0,1,1,1,0,0\n"}) {
        CAPTURE(text);
        std::istringstream in(text);
        CHECK_THROWS_AS(read_field_csv(in), ParseError);
    }
}
