#include "doctest.h"
#include "approx.hpp"

#include "dslit/config.hpp"
#include "dslit/pgm.hpp"

#include <fstream>
#include <iterator>

using namespace dslit;

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string error_of(const std::string& text) {
  try {
    parse_config(text, "t.conf").validate();
  } catch (const ConfigurationError& e) {
    return e.what();
  }
  return "";
}

RunConfig seeded(std::string extra = "") { return parse_config("sampler.seed = 7\n" + extra, "t.conf"); }

} // namespace

TEST_CASE("shipped default.conf matches the built-in defaults") {
  CHECK(read_file(std::filesystem::path(DSLIT_SOURCE_DIR) / "configs" / "default.conf") == default_config_text());
}

TEST_CASE("default configuration carries the experimental values") {
  const auto c = parse_config(default_config_text(), "default.conf");
  CHECK(c.energy == 600.0);
  CHECK(c.slit_width == approx(50e-9));
  CHECK(c.slit_separation == approx(280e-9));
  CHECK(c.z_doubleslit_to_mask == approx(230e-6));
  CHECK(c.z_collimation_to_doubleslit == approx(0.305));
  CHECK(c.collimation_width == approx(2e-6));
  CHECK(c.mask_opening == approx(5e-6));
  CHECK(c.checkpoints == std::vector<std::size_t>{2, 7, 209, 1004, 6235});
  CHECK(c.sampler.events == 6235);
  CHECK(c.sampler.total_rate == approx(6.32));
  REQUIRE(c.sampler.seed.has_value());
  REQUIRE(c.buildup_mask_center.has_value());
  CHECK(*c.buildup_mask_center == 0.0);
  CHECK_FALSE(c.blob.threshold.has_value());
  CHECK_NOTHROW(c.validate());
  CHECK(c.layout().doubleslit.intervals().size() == 2);
  CHECK(c.beam().wavelength == approx(5.00686e-11).epsilon(1e-5));
}

TEST_CASE("quantities take unit suffixes of the right dimension") {
  CHECK(parse_quantity("50 nm", Quantity::length, "k") == approx(50e-9));
  CHECK(parse_quantity("2.5um", Quantity::length, "k") == approx(2.5e-6));
  CHECK(parse_quantity("30.5 cm", Quantity::length, "k") == approx(0.305));
  CHECK(parse_quantity("3 mm", Quantity::length, "k") == approx(3e-3));
  CHECK(parse_quantity("0.5", Quantity::length, "k") == 0.5);
  CHECK(parse_quantity("-1e-6 m", Quantity::length, "k") == -1e-6);
  CHECK(parse_quantity("1 keV", Quantity::energy, "k") == 1000.0);
  CHECK(parse_quantity("6.32 Hz", Quantity::rate, "k") == 6.32);
  CHECK(parse_quantity("250 ms", Quantity::time, "k") == approx(0.25));
  CHECK_THROWS_AS(parse_quantity("600 eV", Quantity::length, "k"), ConfigurationError);
  CHECK_THROWS_AS(parse_quantity("3 um", Quantity::number, "k"), ConfigurationError);
  CHECK_THROWS_AS(parse_quantity("3 furlongs", Quantity::length, "k"), ConfigurationError);
  CHECK_THROWS_AS(parse_quantity("um", Quantity::length, "k"), ConfigurationError);
  CHECK_THROWS_AS(parse_quantity("", Quantity::length, "k"), ConfigurationError);
}

TEST_CASE("canonical text round-trips") {
  const auto a = parse_config(default_config_text());
  const auto text = to_config_text(a);
  CHECK(to_config_text(parse_config(text)) == text);

  auto b = a;
  b.blob.threshold = 123.5;
  b.buildup_mask_center.reset();
  b.illumination = Illumination::collimation_stage;
  b.slit_width = 1.0 / 3.0 * 1e-7;
  b.outputs.image = false;
  b.checkpoints = {5, 50};
  const auto back = parse_config(to_config_text(b));
  CHECK(to_config_text(back) == to_config_text(b));
  CHECK(back.slit_width == b.slit_width);
  CHECK(*back.blob.threshold == 123.5);
  CHECK_FALSE(back.buildup_mask_center.has_value());
  CHECK(back.illumination == Illumination::collimation_stage);
  CHECK_FALSE(back.outputs.image);
}

TEST_CASE("omitted keys keep their defaults and comments are ignored") {
  const auto c = parse_config("# comment only\n\n  layout.slit_width = 40 nm # trailing\n");
  CHECK(c.slit_width == approx(40e-9));
  CHECK(c.slit_separation == approx(280e-9));
  CHECK_FALSE(c.sampler.seed.has_value());
}

TEST_CASE("parse errors name the line and the key") {
  CHECK(error_of("sampler.seed = 1\nlayout.slit_width = -50 nm\n") ==
        "t.conf:2: layout.slit_width must be positive");
  CHECK(error_of("sampler.seed = 1\n\nlayout.bogus = 3\n") == "t.conf:3: unknown key 'layout.bogus'");
  CHECK(error_of("beam.energy 600\n") == "t.conf:1: expected 'section.key = value'");
  CHECK(error_of("beam.energy = 600 eV\nbeam.energy = 700 eV\n") == "t.conf:2: beam.energy is set twice");
  CHECK(error_of("beam.energy = 5 nm\n") == "t.conf:1: beam.energy: unit 'nm' is not an energy");
  CHECK(error_of("grid.n = 3.5\n").starts_with("t.conf:1: grid.n: expected a non-negative integer"));
  CHECK(error_of("outputs.image = maybe\n").starts_with("t.conf:1: outputs.image"));
  CHECK(error_of("layout.illumination = laser\n").starts_with("t.conf:1: layout.illumination"));
  CHECK(error_of("buildup.checkpoints = 2, x\n").starts_with("t.conf:1: buildup.checkpoints"));
  CHECK(error_of("run.threads = 0\n").starts_with("t.conf:1: run.threads"));
  CHECK(error_of("sampler.background = -1\n") == "t.conf:1: sampler.background must not be negative");
}

TEST_CASE("validation enforces cross-field invariants") {
  CHECK_NOTHROW(seeded().validate());
  CHECK(error_of("") == "sampler.seed is required (set it in the config or pass --seed)");
  CHECK(error_of("sampler.seed = 1\nbuildup.checkpoints = 2, 7, 7\n") ==
        "buildup.checkpoints must be strictly increasing");
  CHECK(error_of("sampler.seed = 1\nbuildup.checkpoints = 9, 3\n") == "buildup.checkpoints must be strictly increasing");
  CHECK(error_of("sampler.seed = 1\nbuildup.checkpoints = 0, 3\n") == "buildup.checkpoints must be positive");
  CHECK(error_of("sampler.seed = 1\nlayout.slit_separation = 40 nm\n") ==
        "layout.slit_separation must exceed layout.slit_width");
  CHECK(error_of("sampler.seed = 1\ngrid.n = 1000\n") == "grid.n must be a power of two no smaller than 8");
  CHECK(error_of("sampler.seed = 1\nsampler.frame_margin = 24\n") ==
        "sampler.frame_margin leaves no frame interior in y");
  CHECK(error_of("sampler.seed = 1\nsampler.pattern_rate = 7 Hz\n") ==
        "sampler.pattern_rate must not exceed sampler.total_rate");
  CHECK(error_of("sampler.seed = 1\nblob.ratio = 1\n") == "blob.ratio must exceed 1");
  CHECK(error_of("sampler.seed = 1\nblob.t_max = 1\n") == "blob.t_max must not be below blob.t_min");
  CHECK_FALSE(error_of("sampler.seed = 1\nlayout.z_mask_to_detector = 0 m\n").empty());
}

TEST_CASE("configuration files are read from disk") {
  const auto path = std::filesystem::temp_directory_path() / "dslit_test_config.conf";
  {
    std::ofstream out(path);
    out << "sampler.seed = 99\nlayout.magnification = 20\n";
  }
  const auto c = load_config(path);
  CHECK(*c.sampler.seed == 99);
  CHECK(c.magnification == 20.0);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_config(path), IoError);

  {
    std::ofstream out(path);
    out << "\nlayout.magnification = -2\n";
  }
  try {
    load_config(path);
    FAIL("expected an error");
  } catch (const ConfigurationError& e) {
    CHECK(std::string(e.what()) == path.string() + ":2: layout.magnification must be positive");
  }
  std::filesystem::remove(path);
}
