#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "extherm/config.hpp"
#include "extherm/errors.hpp"

using namespace extherm;
using nlohmann::json;

TEST_CASE("shipped reference file matches the built-in configuration") {
    const ProjectConfig shipped = load_config(EXTHERM_REFERENCE_CONFIG);
    CHECK(to_json(shipped) == to_json(reference_config()));
}

TEST_CASE("built-in configuration headline numbers") {
    const ProjectConfig cfg = reference_config();
    CHECK(cfg.geometry.length_L == 1.75);
    CHECK(cfg.grid.n_a == 35);
    CHECK(cfg.grid.n_r == 6);
    CHECK(cfg.geometry.heating_tapes.size() == 12);
    CHECK(cfg.geometry.sensors.size() == 14);
    CHECK(cfg.geometry.num_heating_zones == 4);
    const auto labels = cfg.input_labels();
    REQUIRE(labels.size() == 5);
    CHECK(labels[0] == "T_h_1");
    CHECK(labels[3] == "T_h_4");
    CHECK(labels[4] == "T_0");
}

TEST_CASE("round trip through JSON preserves the configuration") {
    const ProjectConfig cfg = reference_config();
    CHECK(to_json(parse_config(to_json(cfg))) == to_json(cfg));
}

TEST_CASE("unknown keys are rejected with their path") {
    json j = to_json(reference_config());
    j["geometry"]["typo_key"] = 1.0;
    CHECK_THROWS_WITH_AS(parse_config(j), doctest::Contains("geometry"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config(j), doctest::Contains("typo_key"), ConfigError);

    json top = to_json(reference_config());
    top["extra"] = {};
    CHECK_THROWS_WITH_AS(parse_config(top), doctest::Contains("extra"), ConfigError);
}

TEST_CASE("missing required keys are named") {
    json j = to_json(reference_config());
    j["geometry"].erase("inner_diameter_d1");
    CHECK_THROWS_WITH_AS(parse_config(j), doctest::Contains("inner_diameter_d1"),
                         ConfigError);
}

TEST_CASE("parameter overrides reach the right physical coefficients") {
    const ProjectConfig base = reference_config();
    const ProjectConfig cfg = apply_parameters(
        base, {{"c_p_s", 1234.0}, {"lambda_s", 3.5}, {"alpha_ht_3", 99.0}, {"alpha_2", 7.0}});
    CHECK(cfg.materials.screw_conveyor.heat_capacity_cp == 1234.0);
    CHECK(cfg.materials.screw_conveyor.conductivity_lambda == 3.5);
    CHECK(cfg.boundary.tape_alpha_ht[2] == 99.0);
    CHECK(cfg.boundary.tape_alpha_ht[0] == base.boundary.tape_alpha_ht[0]);
    CHECK(cfg.boundary.ambient_alpha[1] == 7.0);
    CHECK(cfg.boundary.ambient_alpha[0] == base.boundary.ambient_alpha[0]);
    CHECK(cfg.materials.cylinder.heat_capacity_cp == base.materials.cylinder.heat_capacity_cp);

    CHECK_THROWS_AS(apply_parameters(base, {{"nonsense", 1.0}}), ConfigError);
    CHECK_THROWS_AS(apply_parameters(base, {{"alpha_ht_13", 1.0}}), ConfigError);
    CHECK_THROWS_AS(apply_parameters(base, {{"alpha_5", 1.0}}), ConfigError);
}

TEST_CASE("file digest is deterministic and content-sensitive") {
    const std::string a = "digest_a.tmp", b = "digest_b.tmp";
    std::ofstream(a) << "the same payload\n";
    std::ofstream(b) << "the same payload\n";
    CHECK(file_digest(a) == file_digest(b));
    std::ofstream(b) << "more\n"; // truncates: different content
    CHECK(file_digest(a) != file_digest(b));
    CHECK(file_digest(a).size() == 16);
    std::remove(a.c_str());
    std::remove(b.c_str());
    CHECK_THROWS_AS(file_digest("does_not_exist.tmp"), DataError);
}

TEST_CASE("run manifest records tool version and file digests") {
    const std::string in = "manifest_in.tmp", out = "manifest_out.tmp",
                      man = "manifest.tmp.json";
    std::ofstream(in) << "in\n";
    std::ofstream(out) << "out\n";
    write_manifest(man, EXTHERM_REFERENCE_CONFIG, {in}, {out});
    json j;
    std::ifstream(man) >> j;
    CHECK(j.at("tool_version").get<std::string>() == kToolVersion);
    CHECK(j.at("config").at("digest").get<std::string>() ==
          file_digest(EXTHERM_REFERENCE_CONFIG));
    CHECK(j.at("inputs").size() == 1);
    CHECK(j.at("outputs").size() == 1);
    std::remove(in.c_str());
    std::remove(out.c_str());
    std::remove(man.c_str());
}

TEST_CASE("validation catches inconsistent geometry and boundary data") {
    ProjectConfig cfg = reference_config();
    cfg.boundary.tape_alpha_ht.pop_back(); // one per tape required
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    ProjectConfig bad = reference_config();
    bad.geometry.outer_diameter_d2 = bad.geometry.inner_diameter_d1;
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    ProjectConfig tape = reference_config();
    tape.geometry.heating_tapes[0].zone_id = 9;
    CHECK_THROWS_AS(tape.validate(), ConfigError);
}
