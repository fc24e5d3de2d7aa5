#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "palace/embed.hpp"
#include "palace/io.hpp"

using namespace palace;

TEST(DiagramIo, RoundTrip) {
  std::vector<PersistenceDiagram> ds{PersistenceDiagram({{0.1, 0.30000000000000004}, {1, 2}}, 3, "h1"),
                                     PersistenceDiagram({}, std::nullopt, "")};
  std::stringstream ss;
  write_diagrams(ss, ds);
  auto back = read_diagrams(ss, "mem");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0], ds[0]);
  EXPECT_EQ(back[0].label(), 3);
  EXPECT_EQ(back[0].tag(), "h1");
  EXPECT_FALSE(back[1].label().has_value());
}

TEST(DiagramIo, DropsInfiniteDeathWithWarning) {
  std::stringstream ss;
  ss << R"({"points": [[0, 1], [0, null], [0.5, "inf"]], "label": 1})" << '\n';
  std::vector<std::string> warnings;
  auto ds = read_diagrams(ss, "mem", [&](const std::string& w) { warnings.push_back(w); });
  ASSERT_EQ(ds.size(), 1u);
  EXPECT_EQ(ds[0].size(), 1u);
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_NE(warnings[0].find("dropped 2"), std::string::npos);
}

TEST(DiagramIo, ErrorCarriesLineNumber) {
  std::stringstream ss;
  ss << R"({"points": [[0, 1]]})" << '\n' << '\n' << R"({"points": [[2, 1]]})" << '\n';
  try {
    read_diagrams(ss, "bad.jsonl");
    FAIL() << "expected a format error";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_NE(std::string(e.what()).find("bad.jsonl:3"), std::string::npos);
  }
  std::stringstream junk("not json\n");
  EXPECT_THROW(read_diagrams(junk), FormatError);
}

TEST(PointCloudIo, RoundTrip) {
  std::vector<PointCloud> cs{{{{0.25, -1.5}, {3, 4}}, 2}, {{{1, 1}}, std::nullopt}};
  std::stringstream ss;
  write_point_clouds(ss, cs);
  auto back = read_point_clouds(ss);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].points, cs[0].points);
  EXPECT_EQ(back[0].label, 2);
  EXPECT_FALSE(back[1].label.has_value());
}

TEST(ConfigIo, RoundTripPreservesFingerprint) {
  std::vector<Landmark> ls{{{0, 1}, 0.5, 0.6}, {{0.2, 3}, 0.7, 0.8}};
  LandmarkConfiguration cfg(ls, 0.4);
  auto back = config_from_json(nlohmann::json::parse(config_to_json(cfg).dump()));
  EXPECT_EQ(back.fingerprint(), cfg.fingerprint());
  auto bad = config_to_json(cfg);
  bad["landmarks"][0]["w"] = 0.1;
  EXPECT_THROW(config_from_json(bad), std::invalid_argument);
}

TEST(MatrixCsv, HeaderAndErrors) {
  std::stringstream ss("phi_0,phi_1\n1,2\n3,4.5\n");
  auto M = read_matrix_csv(ss);
  ASSERT_EQ(M.rows(), 2);
  EXPECT_EQ(M(1, 1), 4.5);
  std::stringstream ragged("1,2\n3\n");
  EXPECT_THROW(read_matrix_csv(ragged), FormatError);
  std::stringstream trailing("1,2x\n");
  EXPECT_EQ(read_matrix_csv(trailing).rows(), 0);
  std::stringstream late("1,2\n3,abc\n");
  EXPECT_THROW(read_matrix_csv(late), FormatError);

  Eigen::MatrixXd E(2, 3);
  E << 0.1, 0.2, 1.0 / 3.0, 4, 5, 6;
  std::stringstream out;
  write_embedding_csv(out, E);
  EXPECT_EQ(read_matrix_csv(out), E);
}
