#include <functional>
#include <random>

#include "doctest.h"
#include "projdecomp/error.hpp"
#include "projdecomp/fillmore.hpp"
#include "../support/random_inputs.hpp"

using namespace projdecomp;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_SUITE("fillmore") {
  TEST_CASE("diag(1/2, 3/2) is two projections") {
    const auto a = HermitianMatrix::diagonal({0.5, 1.5});
    const auto rep = fillmore_check(a);
    CHECK(rep.verdict);
    CHECK(rep.rank == 2);
    REQUIRE(rep.m);
    CHECK(*rep.m == 2);
    const auto cert = fillmore_decompose(a);
    CHECK(cert.projections.size() == 2);
    CHECK(audit_cert(cert).empty());
    CHECK(cert.residual < 1e-12);
  }

  TEST_CASE("criterion failures") {
    const auto frac = HermitianMatrix::diagonal({0.5, 1.0});
    CHECK_FALSE(fillmore_check(frac).verdict);
    CHECK(code_of([&] { fillmore_decompose(frac); }) == ErrorCode::CriterionFailed);
    const auto low = HermitianMatrix::diagonal({0.5, 0.5, 0.0});
    CHECK_FALSE(fillmore_check(low).verdict);  // trace 1 < rank 2
  }

  TEST_CASE("schur_horn_frame reproduces the diagonal") {
    const std::vector<double> lambdas = {2.5, 1.25, 0.25};
    const auto frame = schur_horn_frame(lambdas, 4);
    REQUIRE(frame.size() == 4);
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t j = 0; j < 3; ++j) {
        double s = 0.0;
        for (const auto& v : frame) s += v[i] * v[j];
        CHECK(s == doctest::Approx(i == j ? lambdas[i] : 0.0).epsilon(1e-10));
      }
    }
    for (const auto& v : frame) {
      double n = 0.0;
      for (double x : v) n += x * x;
      CHECK(n == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK(code_of([&] { schur_horn_frame(lambdas, 5); }) == ErrorCode::BadTrace);
  }

  TEST_CASE("random integer-trace matrices decompose") {
    std::mt19937_64 rng(17);
    for (int t = 0; t < 30; ++t) {
      const std::size_t n = 2 + rng() % 6;
      const std::size_t r = 1 + rng() % n;
      const auto m = static_cast<double>(r + rng() % 4);
      const auto a = testing::random_psd(rng, n, r, m);
      const auto cert = fillmore_decompose(a);
      CHECK(static_cast<double>(cert.projections.size()) == m);
      CHECK(audit_cert(cert).empty());
    }
  }

  TEST_CASE("audit_cert flags a perturbed certificate") {
    auto cert = fillmore_decompose(HermitianMatrix::diagonal({0.5, 1.5}));
    cert.projections.pop_back();
    CHECK_FALSE(audit_cert(cert).empty());
  }

  TEST_CASE("two-projection gadget") {
    Matrix v(4, 4);
    v(2, 0) = 1.0;
    v(3, 1) = 1.0;
    Matrix bm(4, 4);
    bm(0, 0) = 2.0;
    bm(1, 1) = 0.5;
    bm(0, 1) = bm(1, 0) = 0.25;
    const auto b = make_hermitian_unchecked(bm);
    const auto g = two_projection_gadget(b, v);
    CHECK(g.q_minus.idempotency_residual() < 1e-12);
    CHECK(g.q_plus.idempotency_residual() < 1e-12);
    const double nb = g.norm_b;
    const Matrix rhs = bm * Complex(2.0 / nb) + v * v.adjoint() * Complex(2.0) - v * bm * v.adjoint() * Complex(2.0 / nb);
    CHECK(frobenius_distance(g.q_minus.matrix() + g.q_plus.matrix(), rhs) < 1e-12);
    CHECK(code_of([&] { two_projection_gadget(HermitianMatrix::zero(4), v); }) == ErrorCode::ZeroB);
    CHECK(code_of([&] { two_projection_gadget(b, Matrix::identity(4)); }) == ErrorCode::BadIsometry);
  }

  TEST_CASE("positive combination of an invertible matrix") {
    std::mt19937_64 rng(23);
    const auto a = testing::random_psd(rng, 4, 4, 6.0);
    const auto pc = positive_combination_invertible(a);
    Matrix sum(4, 4);
    for (std::size_t i = 0; i < pc.projections.size(); ++i) {
      CHECK(pc.coefficients[i] > 0.0);
      sum += pc.projections[i].matrix() * Complex(pc.coefficients[i]);
    }
    CHECK(frobenius_distance(sum, a.matrix()) < 1e-9);
    CHECK(static_cast<long long>(pc.projections.size()) <= pc.count_bound);
    CHECK(code_of([&] { positive_combination_invertible(a, 100.0); }) == ErrorCode::NotLocallyInvertible);
  }

  TEST_CASE("rank audit on a valid and a corrupted combination") {
    const auto a = HermitianMatrix::diagonal({0.5, 1.5});
    const auto cert = fillmore_decompose(a);
    CHECK(rank_audit(a, {1.0, 1.0}, cert.projections).ok);
    const std::vector<ProjectionMatrix> wrong = {ProjectionMatrix::coordinates(2, {0, 1}),
                                                 ProjectionMatrix::coordinates(2, {0, 1})};
    CHECK_FALSE(rank_audit(HermitianMatrix::diagonal({0.5, 0.5}), {1.0, 1.0}, wrong).ok);
  }

  TEST_CASE("spectral backend recombines b") {
    const auto b = HermitianMatrix::diagonal({-1.0, 2.0, 2.0, 0.0});
    const auto sc = spectral_backend(b);
    Matrix sum(4, 4);
    for (std::size_t i = 0; i < sc.projections.size(); ++i) sum += sc.projections[i].matrix() * Complex(sc.coefficients[i]);
    CHECK(frobenius_distance(sum, b.matrix()) < 1e-12);
    CHECK(sc.projections.size() == 2);
  }
}
