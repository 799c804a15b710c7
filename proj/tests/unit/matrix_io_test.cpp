#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "generators.hpp"
#include "opinet/opinet.hpp"

using namespace opinet;

TEST(MatrixIo, ReadsSquareWithCommentsAndCommas) {
  std::istringstream in("# influence\n2\n0.5, 0.5  # row 1\n\n0.25 0.75\n");
  const Matrix m = io::read_matrix(in);
  ASSERT_EQ(m.rows(), 2);
  EXPECT_DOUBLE_EQ(m(0, 1), 0.5);
  EXPECT_DOUBLE_EQ(m(1, 1), 0.75);
}

TEST(MatrixIo, ReadsRectangular) {
  std::istringstream in("2 3\n1 2 3\n4 5 6\n");
  const Matrix m = io::read_matrix(in);
  EXPECT_EQ(m.cols(), 3);
  EXPECT_DOUBLE_EQ(m(1, 2), 6.0);
}

TEST(MatrixIo, ReportsLineNumbers) {
  std::istringstream in("2\n1 0\n0 x\n");
  try {
    io::read_matrix(in, "w.txt");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.file, "w.txt");
    EXPECT_EQ(e.line, 3u);
  }
}

TEST(MatrixIo, RejectsMalformed) {
  for (const char* text : {"", "0\n", "2\n1 0\n", "2\n1 0 0\n0 1\n", "2\n1 0\n0 1\n5\n",
                           "2 2 2\n1 0\n0 1\n", "2\n1 0\n0 1e\n"}) {
    std::istringstream in(text);
    EXPECT_THROW(io::read_matrix(in), ParseError) << text;
  }
}

TEST(MatrixIo, MissingFileIsIoError) {
  EXPECT_THROW(io::read_matrix_file("/nonexistent/opinet/w.txt"), IoError);
}

TEST(MatrixIo, AccessCountsWithComponents) {
  std::istringstream in("3\n4 1 0\n2 2 0\n0 0 5\ncomponents 1 1 2\n");
  const auto raw = io::read_access_counts(in);
  EXPECT_EQ(raw.component_labels, (std::vector<long>{1, 1, 2}));
  EXPECT_DOUBLE_EQ(raw.counts(2, 2), 5.0);

  std::istringstream short_labels("2\n1 0\n0 1\ncomponents 1\n");
  EXPECT_THROW(io::read_access_counts(short_labels), ParseError);
  std::istringstream missing("2\n1 0\n0 1\n");
  EXPECT_THROW(io::read_access_counts(missing), ParseError);
}

TEST(MatrixIo, FormatRealRoundTrips) {
  EXPECT_EQ(io::format_real(0.5), "0.5");
  EXPECT_EQ(io::format_real(0.1), "0.1");
  EXPECT_EQ(io::format_real(1.0 / 3.0), "0.3333333333333333");
  std::mt19937_64 rng(5);
  for (int k = 0; k < 2000; ++k) {
    const double v = gen::uniform(rng, -1e3, 1e3) * std::pow(10.0, k % 40 - 20);
    EXPECT_EQ(std::strtod(io::format_real(v).c_str(), nullptr), v);
  }
  EXPECT_EQ(std::strtod(io::format_real(5e-324).c_str(), nullptr), 5e-324);
}

TEST(MatrixIo, WriteReadRoundTrip) {
  std::mt19937_64 rng(9);
  for (Index rows : {1, 3, 6}) {
    for (Index cols : {1, 3, 5}) {
      const Matrix m = gen::random_opinions(rng, rows, cols);
      std::stringstream buf;
      io::write_matrix(buf, m);
      EXPECT_EQ(io::read_matrix(buf), m);
    }
  }
}
