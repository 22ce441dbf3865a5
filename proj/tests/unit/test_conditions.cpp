#include <random>

#include "doctest.h"
#include "projdecomp/conditions.hpp"
#include "projdecomp/error.hpp"
#include "../support/random_inputs.hpp"

using namespace projdecomp;

namespace {

SpectralWeightList atoms_of(std::initializer_list<std::pair<Rational, Rational>> xs) {
  SpectralWeightList out;
  for (const auto& [g, w] : xs) out.atoms.push_back({g, w});
  return out;
}

DiagonalOperator identity_plus(RuleSequence k1, std::optional<RuleSequence> k2 = std::nullopt) {
  DiagonalOperator d;
  d.shift = 1;
  d.plus = std::move(k1);
  d.minus = std::move(k2);
  return d;
}

}  // namespace

TEST_SUITE("conditions") {
  TEST_CASE("model parsing") {
    CHECK(FactorModel::parse("I_5").n == 5);
    CHECK(FactorModel::parse("I_7").n == 7);
    CHECK(FactorModel::parse("II_1").trace_semantics() == TraceSemantics::Normalized);
    CHECK(FactorModel::parse("III").trace_semantics() == TraceSemantics::None);
    CHECK(FactorModel::parse("II_inf").str() == "II_inf");
    CHECK_THROWS_AS(FactorModel::parse("IV"), Error);
  }

  TEST_CASE("identity plus compact classifier") {
    const auto r1 = classify_identity_plus(RuleSequence::finite({1.0}));
    CHECK(r1.verdict == Verdict::FiniteSum);
    CHECK(r1.condition == "Cor5.9(i)");
    const auto r2 = classify_identity_plus(RuleSequence::power(1.0, 1.0), RuleSequence::geometric(0.5, 0.5));
    CHECK(r2.verdict == Verdict::NotFiniteSum);
    CHECK(r2.condition == "Cor5.9(ii)");
    const auto r3 = classify_identity_plus(RuleSequence::finite({0.5}));
    CHECK(r3.verdict == Verdict::NotFiniteSum);
    const auto r4 = classify_identity_plus(RuleSequence::power(1.0, 1.0), RuleSequence::power(0.5, 1.0));
    CHECK(r4.verdict == Verdict::Inconclusive);
  }

  TEST_CASE("ideal equivalence is an equivalence relation on the families") {
    const std::vector<RuleSequence> xs = {
        RuleSequence::power(1.0, 1.0),       RuleSequence::power(3.0, 1.0),  RuleSequence::power(1.0, 2.0),
        RuleSequence::geometric(1.0, 0.5),   RuleSequence::geometric(2.0, 0.25), RuleSequence::finite({0.5, 0.1}),
        RuleSequence::harmonic_log(1.0, 1.0, 1.0), RuleSequence::harmonic_log(2.0, 1.0, 1.0),
        RuleSequence::finite({})};
    for (const auto& a : xs) {
      CHECK(ideal_equivalent(a, a));
      for (const auto& b : xs) {
        CHECK(ideal_equivalent(a, b) == ideal_equivalent(b, a));
        for (const auto& c : xs)
          if (ideal_equivalent(a, b) && ideal_equivalent(b, c)) CHECK(ideal_equivalent(a, c));
      }
    }
    CHECK(ideal_equivalent(xs[0], xs[1]));
    CHECK(ideal_equivalent(xs[3], xs[4]));
    CHECK_FALSE(ideal_equivalent(xs[0], xs[2]));
    CHECK(ideal_member(xs[2], xs[0]));
    CHECK_FALSE(ideal_member(xs[0], xs[2]));
    CHECK(ideal_member(xs[3], xs[0]));
    CHECK(ideal_member(xs[6], xs[0]));
    CHECK_FALSE(ideal_member(xs[0], xs[6]));
  }

  TEST_CASE("strong sums agree with the finite criterion in type I") {
    std::mt19937_64 rng(7);
    for (int t = 0; t < 40; ++t) {
      const std::size_t n = 2 + t % 5;
      const double tr = static_cast<double>(n) * (0.5 + 0.05 * t);
      const auto a = projdecomp::testing::random_psd(rng, n, n, tr);
      const auto model = FactorModel::type_i_finite(n);
      const auto ss = strong_sum_classify(a, model);
      const auto fm = decide(a, model);
      CHECK((ss.verdict == Verdict::StrongSum) == (fm.verdict == Verdict::FiniteSum));
    }
  }

  TEST_CASE("scalar tails") {
    const ScalarTailOperator big(HermitianMatrix::diagonal({0.5}), Rational(3, 2));
    const auto r = decide(big, FactorModel::type_i_inf());
    CHECK(r.verdict == Verdict::FiniteSum);
    CHECK(r.condition == "Cor4.4");
    CHECK(r.witness["count_bound"] == 33);
    const ScalarTailOperator small(HermitianMatrix::diagonal({0.5}), Rational(1, 2));
    CHECK(finite_sum_necessary(small, FactorModel::type_i_inf()).condition == "Thm5.6(i)");
    CHECK(strong_sum_classify(small, FactorModel::type_ii_inf()).verdict == Verdict::NotStrongSum);
    CHECK(strong_sum_classify(small, FactorModel::type_iii()).verdict == Verdict::NotStrongSum);
    const ScalarTailOperator one(HermitianMatrix::diagonal({1.5, 0.5}), Rational(1));
    CHECK(decide(one, FactorModel::type_i_inf()).verdict == Verdict::FiniteSum);
  }

  TEST_CASE("II1 atom lists") {
    const auto good = atoms_of({{Rational(3, 2), Rational(1, 2)}, {Rational(3, 4), Rational(1, 2)}});
    const auto r = decide(good, FactorModel::type_ii1());
    CHECK(r.verdict == Verdict::FiniteSum);
    CHECK(r.condition == "Thm6.5");
    const auto bad = atoms_of({{Rational(5, 4), Rational(1, 2)}, {Rational(1, 2), Rational(1, 2)}});
    CHECK(decide(bad, FactorModel::type_ii1()).verdict == Verdict::NotFiniteSum);
    CHECK(strong_sum_classify(bad, FactorModel::type_ii1()).condition == "Thm5.4(ii)");
    const auto eq = atoms_of({{Rational(3, 2), Rational(1, 2)}, {Rational(1, 2), Rational(1, 2)}});
    CHECK(decide(eq, FactorModel::type_ii1()).verdict == Verdict::FiniteSum);
  }

  TEST_CASE("necessary conditions on diagonal sequences") {
    DiagonalOperator d;
    d.plus = RuleSequence::power(1.0, 2.0);
    CHECK(finite_sum_necessary(d, FactorModel::type_i_inf()).verdict == Verdict::NotFiniteSum);
    const auto ip = identity_plus(RuleSequence::power(1.0, 1.0));
    CHECK(finite_sum_necessary(ip, FactorModel::type_i_inf()).condition == "Cor5.8(ii)");
    CHECK(finite_sum_necessary(ip, FactorModel::type_ii_inf()).condition == "Thm5.6(iii)");
  }

  TEST_CASE("model mismatches") {
    const auto a = HermitianMatrix::diagonal({0.5, 1.5});
    CHECK_THROWS_AS(strong_sum_classify(a, FactorModel::type_ii1()), Error);
    const auto atoms = atoms_of({{Rational(3, 2), Rational(1, 2)}});
    try {
      strong_sum_classify(atoms, FactorModel::type_i_inf());
      FAIL("type I accepted an atom list");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ModelMismatch);
    }
  }

  TEST_CASE("isometry construction round trip") {
    std::mt19937_64 rng(11);
    for (int t = 0; t < 30; ++t) {
      const std::size_t n = 2 + t % 9;
      std::size_t parts = 1 + t % 4;
      if (parts > n) parts = n;
      std::vector<std::size_t> ranks(parts, n / parts);
      ranks.back() += n % parts;
      std::vector<ProjectionMatrix> ps, qs;
      std::size_t offset = 0;
      Matrix a_m(n, n);
      for (std::size_t r : ranks) {
        ps.push_back(ProjectionMatrix::onto_columns(projdecomp::testing::random_isometry(rng, n, r)));
        a_m += ps.back().matrix();
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < r; ++i) idx.push_back(offset + i);
        offset += r;
        qs.push_back(ProjectionMatrix::coordinates(n, idx));
      }
      const auto iso = prop51_isometry(ps, qs);
      CHECK(iso.residual < 1e-8);
      CHECK(iso.pinching_residual < 1e-8);
      CHECK(iso.range_residual < 1e-8);
      const auto a = make_hermitian_unchecked(a_m);
      const auto cert = prop51_projections(a, iso.v, qs);
      CHECK(cert.residual < 1e-8);
      CHECK(audit_cert(cert).empty());
    }
  }

  TEST_CASE("isometry construction errors") {
    const auto p = ProjectionMatrix::coordinates(3, {0});
    const auto q0 = ProjectionMatrix::coordinates(3, {0, 1});
    const auto q1 = ProjectionMatrix::coordinates(3, {2});
    try {
      prop51_isometry({p, p}, {q0, q1});
      FAIL("rank mismatch accepted");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::RankMismatch);
    }
    try {
      prop51_isometry({p, p}, {q1, q1});
      FAIL("overlapping partition accepted");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::PartitionInvalid);
    }
    const auto a = HermitianMatrix::diagonal({1.0, 1.0, 1.0});
    Matrix v = Matrix::identity(3);
    v(0, 1) = Complex(0.1, 0.0);
    try {
      prop51_projections(a, v, {q0, q1});
      FAIL("perturbed isometry accepted");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::HypothesisFailed);
    }
  }
}
