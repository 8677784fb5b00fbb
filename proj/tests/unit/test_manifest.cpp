#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "oamsort/manifest.hpp"

using namespace oamsort;

TEST(Sha256, KnownVectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Manifest, TextParsesBackToTheSameConfig) {
  RunManifest m;
  m.command = "experiment fig1";
  m.config.set("run", "seed", "42");
  m.inputs.emplace_back("field.oamf", std::string(64, 'a'));
  m.outputs.emplace_back("trace.csv", std::string(64, 'b'));
  m.notes.push_back("calibration_scale_px_per_ell = 5");
  std::istringstream in(m.text());
  EXPECT_EQ(Config::parse(in), m.config);
}

TEST(Manifest, HashDependsOnRunDefiningContentOnly) {
  RunManifest a;
  a.command = "generate";
  RunManifest b = a;
  b.outputs.emplace_back("x", "y");
  b.notes.push_back("note");
  EXPECT_EQ(a.hash(), b.hash());
  b.config.set("source", "ell", "3");
  EXPECT_NE(a.hash(), b.hash());
  RunManifest c = a;
  c.inputs.emplace_back("f", "0");
  EXPECT_NE(a.hash(), c.hash());
  EXPECT_NE(a.text().find("# manifest: " + a.hash()), std::string::npos);
}

TEST(Manifest, FileHashMatchesContentHash) {
  const auto path = std::filesystem::temp_directory_path() / "oamsort_manifest_test.txt";
  {
    std::ofstream out(path, std::ios::binary);
    out << "abc";
  }
  EXPECT_EQ(sha256_file(path.string()), sha256_hex("abc"));
  EXPECT_THROW(sha256_file("/nonexistent/file"), Error);
}
