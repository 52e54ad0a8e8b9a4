#include "common.hpp"

#include "mrrpa/pipeline.hpp"
#include "mrrpa/reference_sr.hpp"
#include "mrrpa/testing/fixtures.hpp"

using namespace mrrpa;

TEST_CASE("textbook and multi-reference codes agree without active orbitals", "[reference_sr]") {
    MethodSet methods;
    methods.sosex = true;
    for (const auto &fx : testing::sr_fixtures()) {
        INFO(fx.name);
        const PipelineResult r = run_pipeline(fx.integrals, fx.spaces, methods);
        REQUIRE(r.stable);
        const double ref = sr::sr_rpa_energy(fx.integrals, fx.spaces.core);
        CHECK(std::abs(*r.de_rpa_plasmon - ref) < 1e-10);
        CHECK(std::abs(*r.de_rpa_trbt - ref) < 1e-10);
        CHECK(ref < 0.0);
    }
}

TEST_CASE("single-reference energy is additive", "[reference_sr]") {
    const auto a = testing::hubbard4_sr();
    const IntegralSet ab = compose_noninteracting(a.integrals, a.integrals);
    const double one = sr::sr_rpa_energy(a.integrals);
    CHECK_THAT(sr::sr_rpa_energy(ab, {0, 1, 4, 5}), WithinAbs(2 * one, 1e-10));
    CHECK_THAT(sr::sr_direct_mp2(ab, {0, 1, 4, 5}), WithinAbs(2 * sr::sr_direct_mp2(a.integrals), 1e-10));
}

TEST_CASE("one occupied and one virtual orbital", "[reference_sr]") {
    IntegralSet s(2, 2, 0);
    s.set_h(0, 0, -1.0);
    s.set_h(1, 1, 0.5);
    s.set_eri(1, 0, 1, 0, 0.1);
    // eps_i = -1, eps_a = 0.5 - 0.1; singlet A = delta + 2g, B = 2g; triplet B = 0
    const double A = 1.4 + 0.2, B = 0.2;
    CHECK_THAT(sr::sr_rpa_energy(s), WithinAbs(0.5 * (std::sqrt(A * A - B * B) - A), 1e-14));
    CHECK_THAT(sr::sr_direct_mp2(s), WithinAbs(-2 * 0.01 / 2.8, 1e-14));

    MethodSet methods;
    const PipelineResult r = run_pipeline(s, {{0}, {}, {1}, 0}, methods);
    CHECK_THAT(*r.de_rpa_plasmon, WithinAbs(sr::sr_rpa_energy(s), 1e-12));
}

TEST_CASE("closed-shell preconditions", "[reference_sr]") {
    CHECK_THROWS_AS(sr::sr_rpa_energy(hubbard_model(3, 1.0, 1.0, false)), UsageError);
    CHECK_THROWS_AS(sr::sr_rpa_energy(hubbard_model(4, 1.0, 1.0, false), {0}), UsageError);
    CHECK(sr::sr_rpa_energy(hubbard_model(2, 1.0, 1.0, false, 4)) == 0.0);
}
