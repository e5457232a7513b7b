#include <doctest.h>

#include <random>

#include "lexpsy/kernels.hpp"
#include "support.hpp"

using namespace lexpsy::kernels;

namespace {

bool bit_equal(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    double x = a.data()[i], y = b.data()[i];
    if (std::isnan(x) != std::isnan(y)) return false;
    if (!std::isnan(x) && x != y) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("serial and OpenMP kernels agree bit for bit") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    auto n = 2 + static_cast<Eigen::Index>(rng() % 60);
    auto p = 2 + static_cast<Eigen::Index>(rng() % 90);
    Matrix m = testing::random_ratings(rng, n, p, 0.08);
    if (trial % 5 == 0) m.row(0).setConstant(4.0);

    Matrix a = m, b = m;
    std::vector<char> da, db;
    serial::standardize_rows(a, da);
    omp::standardize_rows(b, db);
    CHECK(bit_equal(a, b));
    CHECK(da == db);

    std::vector<char> ca, cb;
    serial::impute_standardize_columns(a, ca);
    omp::impute_standardize_columns(b, cb);
    CHECK(bit_equal(a, b));
    CHECK(ca == cb);

    std::vector<IndexPair> pairs;
    for (int k = 0; k < 10; ++k) pairs.emplace_back(rng() % p, rng() % p);
    Matrix pa, pb;
    serial::pair_consistency(m, pairs, pa);
    omp::pair_consistency(m, pairs, pb);
    CHECK(bit_equal(pa, pb));

    Matrix w = Matrix::Random(p, 4);
    CHECK(bit_equal(serial::weighted_sums(a, w), omp::weighted_sums(a, w)));
  }
}

TEST_CASE("row standardisation ignores masked cells") {
  Matrix m(3, 4);
  m << 1, 5, 9, std::nan(""),  //
      5, 5, 5, 5,              //
      std::nan(""), 2, std::nan(""), std::nan("");
  std::vector<char> degenerate;
  serial::standardize_rows(m, degenerate);
  CHECK(m(0, 0) == doctest::Approx(-1));
  CHECK(m(0, 1) == doctest::Approx(0));
  CHECK(m(0, 2) == doctest::Approx(1));
  CHECK(std::isnan(m(0, 3)));
  CHECK(degenerate == std::vector<char>{0, 1, 1});
  CHECK((m.row(1).array() == 0).all());
  CHECK((m.row(2).array() == 0).all());
}

TEST_CASE("pair consistency kernel") {
  Matrix r(2, 3);
  r << 9, 2, 5,  //
      1, 1, std::nan("");
  std::vector<IndexPair> pairs = {{0, 1}, {1, 2}};
  Matrix out;
  serial::pair_consistency(r, pairs, out);
  CHECK(out(0, 0) == 0.875);
  CHECK(out(0, 1) == 0.625);
  CHECK(out(1, 0) == 0.0);
  CHECK(std::isnan(out(1, 1)));
}

TEST_CASE("weighted sums of a zero row are zero") {
  Matrix d = Matrix::Zero(2, 5);
  d.row(1).setOnes();
  Matrix w = Matrix::Random(5, 3);
  Matrix s = omp::weighted_sums(d, w);
  CHECK((s.row(0).array() == 0).all());
  CHECK(s.row(1).isApprox(w.colwise().sum()));
}

TEST_CASE("a column that is constant after imputation is flagged, not rescaled") {
  Matrix m(3, 2);
  m << 0.1, 1,  //
      std::nan(""), 2, std::nan(""), 4;
  std::vector<char> ca, cb;
  Matrix a = m, b = m;
  serial::impute_standardize_columns(a, ca);
  omp::impute_standardize_columns(b, cb);
  CHECK(ca == std::vector<char>{1, 0});
  CHECK(cb == ca);
  CHECK((a.col(0).array() == 0).all());
}
