#include <gtest/gtest.h>

#include <sstream>

#include "oamsort/config.hpp"
#include "oamsort/experiments.hpp"

using namespace oamsort;

TEST(Config, DefaultsRoundTripThroughSerialize) {
  const Config d = Config::defaults();
  std::istringstream in(d.serialize());
  EXPECT_EQ(Config::parse(in), d);
}

TEST(Config, EveryKeyIsMarkedPaperOrAssumed) {
  for (const auto& k : config_schema()) {
    EXPECT_TRUE(k.provenance == "paper" || k.provenance == "assumed") << k.section << "." << k.key;
    EXPECT_FALSE(k.help.empty());
  }
  const std::string text = Config::defaults().serialize();
  EXPECT_NE(text.find("[process]"), std::string::npos);
  EXPECT_NE(text.find("background_poly_order = 3  # paper;"), std::string::npos);
}

TEST(Config, ParsesSectionsCommentsAndOverrides) {
  std::istringstream in(
      "# a comment\n"
      "[source]\n"
      "kind = superposition   # trailing\n"
      "ells = -4, 4\n"
      "\n"
      "[sorter]\n"
      "binarized = true\n"
      "r_max = 3e-6\n");
  const Config c = Config::parse(in);
  EXPECT_EQ(c.text("source", "kind"), "superposition");
  EXPECT_EQ(c.int_list("source", "ells"), (std::vector<int>{-4, 4}));
  EXPECT_TRUE(c.boolean("sorter", "binarized"));
  EXPECT_DOUBLE_EQ(c.real("sorter", "r_max"), 3e-6);
  EXPECT_EQ(c.integer("grid", "nx"), 1024);
}

TEST(Config, UnknownKeyErrorListsValidKeys) {
  std::istringstream in("[grid]\nnz = 5\n");
  try {
    Config::parse(in, "test.cfg");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("test.cfg:2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("nz"), std::string::npos);
    EXPECT_NE(msg.find("nx, ny, dx, dy, wavelength"), std::string::npos) << msg;
  }
}

TEST(Config, UnknownSectionAndMalformedLinesRejected) {
  for (const char* text : {"[nope]\n", "[grid\n", "[grid]\nnx 5\n", "nx = 5\n"}) {
    std::istringstream in(text);
    EXPECT_THROW(Config::parse(in), ConfigError) << text;
  }
}

TEST(Config, TypeChecks) {
  Config c = Config::defaults();
  EXPECT_THROW(c.set("grid", "nx", "10.5"), ConfigError);
  EXPECT_THROW(c.set("grid", "dx", "abc"), ConfigError);
  EXPECT_THROW(c.set("grid", "dx", "inf"), ConfigError);
  EXPECT_THROW(c.set("sorter", "binarized", "yes"), ConfigError);
  EXPECT_THROW(c.set("source", "kind", "laser"), ConfigError);
  EXPECT_THROW(c.set("source", "ells", "1,x"), ConfigError);
  EXPECT_THROW(c.set("grid", "nx", "auto"), ConfigError);
  EXPECT_NO_THROW(c.set("sorter", "r_max", "auto"));
  EXPECT_NO_THROW(c.set("source", "ells", "-10, 3,+2"));
  EXPECT_EQ(c.int_list("source", "ells"), (std::vector<int>{-10, 3, 2}));
}

TEST(Config, AutoValuesNeedAFallback) {
  const Config c = Config::defaults();
  EXPECT_TRUE(c.is_auto("sorter", "r_max"));
  EXPECT_THROW(c.real("sorter", "r_max"), ConfigError);
  EXPECT_DOUBLE_EQ(c.real_or("sorter", "r_max", 2.5), 2.5);
}

TEST(Setup, DefaultsResolveToTheDesignGeometry) {
  const oamsort::Setup s = make_setup(Config::defaults());
  EXPECT_NEAR(s.r_max, 0.875 * 512 * 7.79e-9, 1e-15);
  EXPECT_NEAR(s.r_max, 3.49e-6, 0.01e-6);
  EXPECT_EQ(s.sorter.detector_zoom, 4);
  EXPECT_FALSE(s.sorter.binarized);
  EXPECT_DOUBLE_EQ(s.processing.mem_noise_floor, 2e-4);
  EXPECT_EQ(s.processing.noise_model, NoiseModel::Uniform);
}

TEST(Setup, AutoNoiseModelFollowsShotNoise) {
  Config c = Config::defaults();
  c.set("detector", "poisson_counts", "1e6");
  EXPECT_EQ(make_setup(c).processing.noise_model, NoiseModel::Poisson);
  c.set("process", "noise_model", "uniform");
  EXPECT_EQ(make_setup(c).processing.noise_model, NoiseModel::Uniform);
  EXPECT_THROW(c.set("process", "noise_model", "gaussian"), ConfigError);
}

TEST(Setup, BadGeometryIsReported) {
  Config c = Config::defaults();
  c.set("grid", "nx", "1000");
  EXPECT_THROW(make_setup(c), InvalidArgument);
  c = Config::defaults();
  c.set("detector", "poisson_counts", "-1");
  EXPECT_THROW(make_setup(c), ConfigError);
}

TEST(Experiments, UnknownNameListsValidOnes) {
  const oamsort::Setup s = make_setup(Config::defaults());
  try {
    run_experiment("fig9", s);
    FAIL();
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("fig2a"), std::string::npos);
  }
}
