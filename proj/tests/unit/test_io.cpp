#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "oamsort/io.hpp"
#include "oamsort/sources.hpp"

using namespace oamsort;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "oamsort_io_test";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST(FieldDump, RoundTripsAtFloatPrecision) {
  const GridSpec g(64, 32, 1.5e-9, 2.5e-9, 1.9687e-12);
  const auto f = vortex(g, {3, RingProfile{20e-9, 8e-9}});
  const auto path = scratch("f.oamf").string();
  io::write_field(path, f, "manifest: abc");
  const auto back = io::read_field(path);
  EXPECT_TRUE(back.grid().compatible(g));
  for (std::size_t i = 0; i < f.samples().size(); ++i) {
    EXPECT_NEAR(std::abs(back.samples()[i] - f.samples()[i]), 0.0, 1e-6 * std::abs(f.samples()[i]) + 1e-30);
  }
  EXPECT_EQ(slurp(path).rfind("OAMFIELD1 64 32", 0), 0u);
  EXPECT_NE(slurp(path).find("# manifest: abc\n"), std::string::npos);
}

TEST(FieldDump, TruncatedFileRejected) {
  const auto path = scratch("bad.oamf");
  std::ofstream(path) << "OAMFIELD1 16 16 1 1 1\nxx";
  EXPECT_THROW(io::read_field(path.string()), Error);
  std::ofstream(path) << "PNG";
  EXPECT_THROW(io::read_field(path.string()), Error);
}

TEST(Pgm, SixteenBitLayoutWithTopRowFirst) {
  RealImage img{3, 2, {0, 1, 2, 3, 4, 6}};
  const auto path = scratch("i.pgm");
  io::write_pgm16(path.string(), img, {"manifest: xyz"});
  const std::string s = slurp(path);
  const std::string header = "P5\n# manifest: xyz\n3 2\n65535\n";
  ASSERT_EQ(s.substr(0, header.size()), header);
  ASSERT_EQ(s.size(), header.size() + 12);
  auto px = [&](int k) {
    return (static_cast<unsigned char>(s[header.size() + 2 * k]) << 8) | static_cast<unsigned char>(s[header.size() + 2 * k + 1]);
  };
  // first written row is iy = 1: values 3, 4, 6
  EXPECT_EQ(px(0), 32768);
  EXPECT_EQ(px(2), 65535);
  EXPECT_EQ(px(3), 0);
}

TEST(Pgm, PhaseMapWrapsIntoEightBits) {
  RealImage ph{2, 1, {-std::numbers::pi / 2.0, 2.0 * std::numbers::pi}};
  const auto path = scratch("p.pgm");
  io::write_phase_pgm8(path.string(), ph);
  const std::string s = slurp(path);
  const std::string header = "P5\n2 1\n255\n";
  ASSERT_EQ(s.substr(0, header.size()), header);
  EXPECT_EQ(static_cast<unsigned char>(s[header.size()]), 191);
  EXPECT_EQ(static_cast<unsigned char>(s[header.size() + 1]), 0);
}

TEST(TraceCsv, RoundTripAndHeader) {
  DetectorTrace t{{-1.5, 0.0, 2.0}, {0.25, 1e-17, 3.0}, std::nullopt};
  const auto path = scratch("t.csv").string();
  io::write_trace_csv(path, t, {"manifest: 1"});
  const auto back = io::read_trace_csv(path);
  EXPECT_EQ(back.positions, t.positions);
  EXPECT_EQ(back.counts, t.counts);
  EXPECT_EQ(slurp(path), "# manifest: 1\nposition,counts\n-1.5,0.25\n0,1.0000000000000001e-17\n2,3\n");
}

TEST(TraceCsv, MalformedInputRejected) {
  const auto path = scratch("bad.csv");
  std::ofstream(path) << "pos,counts\n1,2\n";
  EXPECT_THROW(io::read_trace_csv(path.string()), Error);
  std::ofstream(path) << "position,counts\n1,2\n1,3\n";
  EXPECT_THROW(io::read_trace_csv(path.string()), InvalidArgument);
  std::ofstream(path) << "position,counts\n1;2\n";
  EXPECT_THROW(io::read_trace_csv(path.string()), Error);
}

TEST(SpectrumCsv, RoundTrip) {
  const OamSpectrum s(-2, {0.1, 0.2, 0.3, 0.4, 0.0});
  const auto path = scratch("s.csv").string();
  io::write_spectrum_csv(path, s);
  const auto back = io::read_spectrum_csv(path);
  EXPECT_EQ(back.ell_min(), -2);
  EXPECT_EQ(back.weights(), s.weights());
}

TEST(TableCsv, WritesHeaderAndRows) {
  const auto path = scratch("tab.csv").string();
  io::write_table_csv(path, {"a", "b"}, {{"1", "x"}, {"2", "y"}}, {"c"});
  EXPECT_EQ(slurp(path), "# c\na,b\n1,x\n2,y\n");
}
