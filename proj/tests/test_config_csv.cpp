#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <cstring>
#include <random>

#include "cos2phi/config.hpp"
#include "cos2phi/csv.hpp"
#include "cos2phi/errors.hpp"

using namespace cos2phi;
namespace fs = std::filesystem;

namespace {

fs::path data_dir() {
    const char *env = std::getenv("COS2PHI_DATA_DIR");
    return env ? fs::path(env) : fs::path("data");
}

std::string field_of(const std::string &text) {
    try {
        parse_config(text);
    } catch (const ValidationError &e) {
        return e.field();
    }
    return "<none>";
}

}  // namespace

TEST_CASE("bundled device config loads and round-trips byte for byte") {
    const fs::path path = data_dir() / "paper_device.json";
    const std::string text = read_text(path);
    const RunConfig cfg = load_config(path);
    CHECK(dump_config(cfg) == text);
    CHECK(cfg.circuit.ec == 0.21);
    CHECK(cfg.circuit.junctions.ej1 == 42.49);
    CHECK(cfg.noise.a_one_over_f == 1.5e-5);
    CHECK(dump_config(cfg) == dump_config(default_config()));
}

TEST_CASE("normalization fills defaults and is idempotent") {
    const RunConfig cfg = parse_config(R"({"circuit": {"ec_ghz": 0.3}, "seed": 9})");
    CHECK(cfg.circuit.ec == 0.3);
    CHECK(cfg.circuit.junctions.ej3 == 88.11);
    CHECK(cfg.seed == 9);
    const std::string once = dump_config(cfg);
    CHECK(dump_config(parse_config(once)) == once);
    CHECK(config_hash(cfg) == fnv1a64(once));
    CHECK(config_hash(cfg) != config_hash(default_config()));
}

TEST_CASE("validation errors name the offending field") {
    CHECK(field_of(R"({"circuit": {"ec_ghz": -0.21}})") == "circuit.ec_ghz");
    CHECK(field_of(R"({"circuit": {"ec_typo": 1}})") == "circuit.ec_typo");
    CHECK(field_of(R"({"ec_typo": 1})") == "ec_typo");
    CHECK(field_of(R"({"noise": {"temperature_k": 0}})") == "noise.temperature_k");
    CHECK(field_of(R"({"noise": {"mutual_bias_phi0_per_a": -5}})") == "noise.mutual_bias_phi0_per_a");
    CHECK(field_of(R"({"solver": {"n_charge": 4.5}})") == "solver.n_charge");
    CHECK(field_of(R"({"fluxonium": {"el_ghz": 0}})") == "fluxonium.el_ghz");
    CHECK(field_of(R"({"calibration": {"crosstalk_phi0_per_ma": [[1, 2], [2, 4]]}})") ==
          "calibration.crosstalk_phi0_per_ma");
    CHECK(field_of(R"({"resonator": "fast"})") == "resonator");
    const RunConfig nulls = parse_config(R"({"noise": {"effective_capacitance_f": null}})");
    CHECK_FALSE(nulls.noise.effective_capacitance.has_value());
    CHECK(parse_config(R"({"noise": {"effective_capacitance_f": 7e-14}})").noise.effective_capacitance == 7e-14);
}

TEST_CASE("parse errors report line and column") {
    try {
        parse_config("{\n  \"seed\": 1,\n  oops\n}");
        FAIL("expected a parse error");
    } catch (const ValidationError &e) {
        const std::string what = e.what();
        CHECK(what.find("line 3") != std::string::npos);
        CHECK(what.find("column") != std::string::npos);
    }
}

TEST_CASE("empty sweep is a usage error") {
    CHECK_THROWS_AS(parse_config(R"({"sweep": {"phi_bias": {"steps": 0}}})"), UsageError);
    CHECK_THROWS_AS(parse_config(R"({"sweep": {"phi_bias": {"steps": -3}}})"), ValidationError);
}

TEST_CASE("sweep grid ordering") {
    RunConfig cfg = default_config();
    cfg.sweep.phi_bias = {0.4, 0.6, 3};
    cfg.sweep.phi_ctrl = {0.37, 0.38, 2};
    const auto g = cfg.sweep.grid(cfg.circuit.junctions);
    REQUIRE(g.size() == 6);
    CHECK(g[0].phi_ctrl == 0.37);
    CHECK(g[2].phi_bias == doctest::Approx(0.6));
    CHECK(g[3].phi_ctrl == 0.38);
    CHECK(SweepAxis{0.2, 0.9, 1}.values() == std::vector<double>{0.2});
}

TEST_CASE("numbers print in shortest round-trip form") {
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(1e-300) == "1e-300");
    CHECK(format_number(-0.0) == "0");
    CHECK(format_number(std::nan("")) == "nan");
    CHECK(format_number(-HUGE_VAL) == "-inf");
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<std::uint64_t> bits;
    for (int k = 0; k < 20000; ++k) {
        std::uint64_t b = bits(rng);
        double x;
        std::memcpy(&x, &b, sizeof x);
        if (!std::isfinite(x)) continue;
        const double back = parse_number(format_number(x), "x");
        CHECK(back == x);
    }
}

TEST_CASE("dataset and heatmap CSV round trip") {
    SpectroscopyDataset d;
    d.rows = {{0.5, 0.378, 0.41, 0.003}, {0.45, 0.378, 0.52, 0.004}};
    const Provenance prov{"test", 0x1234, 5};
    const std::string text = dataset_to_csv(d, prov);
    CHECK(text.rfind("# tool: cos2phi", 0) == 0);
    CHECK(text.find("# config_hash: 0000000000001234") != std::string::npos);
    CHECK(text.find('\r') == std::string::npos);
    const auto back = dataset_from_csv(parse_csv(text));
    REQUIRE(back.rows.size() == 2);
    CHECK(back.rows[1].f01 == 0.52);
    CHECK(dataset_to_csv(back, prov) == text);

    Heatmap h;
    h.fbl = Eigen::Vector3d(-1.0, 0.0, 1.5);
    h.coil = Eigen::Vector2d(2.0, 4.0);
    h.values.resize(3, 2);
    h.values << 1.0, 2.0, std::nan(""), 4.0, 5.0, 6.5;
    const std::string ht = heatmap_to_csv(h, prov);
    CHECK(ht.find("fbl_ma,-1,0,1.5\n2,1,nan,5\n4,2,4,6.5\n") != std::string::npos);
    const Heatmap hb = heatmap_from_csv(parse_csv(ht));
    CHECK(std::isnan(hb.values(1, 0)));
    CHECK(hb.values(2, 1) == 6.5);
    CHECK(heatmap_to_csv(hb, prov) == ht);
    // empty cells read as missing
    const Heatmap he = heatmap_from_csv(parse_csv("fbl_ma,0,1,2\n0,1,,3\n1,4,5,\n"));
    CHECK(std::isnan(he.values(1, 0)));
    CHECK(std::isnan(he.values(2, 1)));
}

TEST_CASE("malformed CSV is rejected") {
    CHECK_THROWS_AS(dataset_from_csv(parse_csv("phi_bias,phi_ctrl,f01_ghz\n0.5,0.3,0.4\n")), ValidationError);
    CHECK_THROWS_AS(dataset_from_csv(parse_csv("phi_bias,phi_ctrl,f01_ghz,sigma_ghz\n0.5,0.3,abc,0.1\n")),
                    ValidationError);
    CHECK_THROWS_AS(heatmap_from_csv(parse_csv("coil,0,1\n0,1,2\n")), ValidationError);
    CHECK_THROWS_AS(parse_csv("# only a comment\n"), ValidationError);
}
