#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "delaysync/plant.hpp"
#include "test_support.hpp"

namespace delaysync {
namespace {

using testing::kSqrt3;

AgentModel scalar_model(double a, double b = 1.0, double c = 1.0) {
  return AgentModel::make(Mat::Constant(1, 1, a), Mat::Constant(1, 1, b),
                          Mat::Constant(1, 1, c));
}

TEST(AgentModel, RejectsBadShapes) {
  EXPECT_THROW(AgentModel::make(Mat::Zero(2, 3), Mat::Zero(2, 1), Mat::Zero(1, 2)),
               DimensionError);
  EXPECT_THROW(AgentModel::make(Mat::Zero(2, 2), Mat::Zero(3, 1), Mat::Zero(1, 2)),
               DimensionError);
  EXPECT_THROW(AgentModel::make(Mat::Zero(2, 2), Mat::Zero(2, 1), Mat::Zero(1, 3)),
               DimensionError);
  Mat bad = Mat::Zero(1, 1);
  bad(0, 0) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(AgentModel::make(bad, Mat::Ones(1, 1), Mat::Ones(1, 1)),
               DimensionError);
}

TEST(Assumption1, Examples) {
  const auto example = check_assumption1(testing::example_model());
  EXPECT_TRUE(example.ok);
  EXPECT_NEAR(example.worst_modulus, 1.0, 1e-12);
  EXPECT_FALSE(check_assumption1(scalar_model(1.5)).ok);
  EXPECT_TRUE(check_assumption1(scalar_model(0.0)).ok);
}

TEST(RequireValidModel, NamesTheFailedCheck) {
  try {
    require_valid_model(scalar_model(1.5));
    FAIL() << "expected ModelAssumptionError";
  } catch (const ModelAssumptionError& e) {
    EXPECT_EQ(e.check(), "assumption1");
  }
  try {
    require_valid_model(scalar_model(1.0, 0.0, 1.0));
    FAIL() << "expected ModelAssumptionError";
  } catch (const ModelAssumptionError& e) {
    EXPECT_EQ(e.check(), "stabilizable");
  }
  try {
    require_valid_model(scalar_model(1.0, 1.0, 0.0));
    FAIL() << "expected ModelAssumptionError";
  } catch (const ModelAssumptionError& e) {
    EXPECT_EQ(e.check(), "detectable");
  }
}

TEST(CompensatedPairs, ReferencePartsAreStabilizableAndDetectable) {
  const SynthesisResult s = testing::example_protocol();
  EXPECT_TRUE(check_stabilizable(s.comp.Abar, s.comp.Bbar));
  EXPECT_TRUE(check_detectable(s.comp.Abar, s.comp.Cbar));
}

TEST(ComputeYrBasis, ReferenceModelSpansTheLine) {
  const Mat R = compute_yr_basis(testing::example_model());
  ASSERT_EQ(R.rows(), 1);
  EXPECT_EQ(R.cols(), 1);
}

TEST(ComputeYrBasis, NonRightInvertibleModelSpansTheDiagonal) {
  const Mat R = compute_yr_basis(testing::non_right_invertible_model());
  ASSERT_EQ(R.cols(), 1);
  EXPECT_NEAR(std::abs(R(0, 0)), 1.0 / std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(R(0, 0), R(1, 0), 1e-12);
}

TEST(ComputeYrBasis, ZeroOutputMapGivesEmptyBasis) {
  const AgentModel m = AgentModel::make(testing::example_model().A,
                                        testing::example_model().B, Mat::Zero(2, 3));
  EXPECT_EQ(compute_yr_basis(m).cols(), 0);
}

TEST(RightInvertibility, Examples) {
  EXPECT_TRUE(check_right_invertible_no_zero_at_one(testing::example_model()));
  EXPECT_TRUE(check_right_invertible_no_zero_at_one(scalar_model(1.0)));
  EXPECT_FALSE(
      check_right_invertible_no_zero_at_one(testing::non_right_invertible_model()));
}

TEST(RightInvertibility, ZeroAtOneIsDetected) {
  // y = x1 - x2 with x2(k+1) = x1(k): transfer (z - 1) / (z (z - 0.5)).
  Mat A(2, 2), B(2, 1), C(1, 2);
  A << 0.5, 0, 1, 0;
  B << 1, 0;
  C << 1, -1;
  const AgentModel zero_at_one = AgentModel::make(A, B, C);
  EXPECT_FALSE(check_right_invertible_no_zero_at_one(zero_at_one));
  EXPECT_EQ(compute_yr_basis(zero_at_one).cols(), 0);
}

TEST(SolveRegulator, ReferenceSolutionPassesValidator) {
  const AgentModel model = testing::example_model();
  const RegulatorReport rep = validate_regulator(model, Mat::Ones(1, 1),
                                                 testing::example_pi(),
                                                 testing::example_gamma());
  EXPECT_LE(rep.state_residual, 1e-12);
  EXPECT_LE(rep.output_residual, 1e-12);
  EXPECT_TRUE(rep.rank_condition);
  EXPECT_EQ(rep.rank_lhs, 4);
  EXPECT_TRUE(rep.ok);
}

TEST(SolveRegulator, OwnSolutionPassesValidator) {
  const AgentModel model = testing::example_model();
  const RegulatorSolution reg = solve_regulator(model, Mat::Ones(1, 1));
  const RegulatorReport rep = validate_regulator(model, reg.R, reg.Pi, reg.Gamma);
  EXPECT_LE(rep.state_residual, 1e-12);
  EXPECT_LE(rep.output_residual, 1e-12);
  EXPECT_TRUE(rep.rank_condition);
}

TEST(SolveRegulator, ScalarIntegrator) {
  const RegulatorSolution reg = solve_regulator(scalar_model(1.0), Mat::Ones(1, 1));
  EXPECT_NEAR(reg.Pi(0, 0), 1.0, 1e-14);
  EXPECT_NEAR(reg.Gamma(0, 0), 0.0, 1e-14);
  const RegulatorReport rep =
      validate_regulator(scalar_model(1.0), reg.R, reg.Pi, reg.Gamma);
  EXPECT_EQ(rep.rank_lhs, 1);
  EXPECT_EQ(rep.rank_rhs, 1);
}

TEST(SolveRegulator, InfeasibleColumnIsRejected) {
  Mat R(2, 1);
  R << 1, 0;
  EXPECT_THROW(solve_regulator(testing::non_right_invertible_model(), R),
               InfeasibleReferenceError);
}

// Appends a kernel element of [[A - I, B], [C, 0]] as a regulator column
// for a zero reference column; the rank condition then fails and the
// repair must remove it.
TEST(RepairRegulator, RemovesZeroOutputEquilibriumDirection) {
  const AgentModel model = testing::example_model();
  const Mat ker = kernel_basis(regulator_matrix(model));
  ASSERT_EQ(ker.cols(), 1);
  Mat R(1, 2), Pi(3, 2), Gamma(2, 2);
  R << 1, 0;
  Pi << testing::example_pi(), ker.topRows(3);
  Gamma << testing::example_gamma(), ker.bottomRows(2);
  ASSERT_FALSE(validate_regulator(model, R, Pi, Gamma).rank_condition);

  RegulatorSolution out;
  out.R = R;
  repair_regulator(model, out, Pi, Gamma);
  EXPECT_GE(out.repair_passes, 1);
  for (std::size_t i = 1; i < out.gamma_rank_history.size(); ++i) {
    EXPECT_LT(out.gamma_rank_history[i], out.gamma_rank_history[i - 1]);
  }
  const RegulatorReport rep = validate_regulator(model, R, out.Pi, out.Gamma);
  EXPECT_TRUE(rep.rank_condition);
  EXPECT_LE(rep.state_residual, 1e-12);
  EXPECT_LE(rep.output_residual, 1e-12);
}

TEST(RepairRegulator, MixedColumns) {
  const AgentModel model = testing::example_model();
  const Mat ker = kernel_basis(regulator_matrix(model));
  Mat R(1, 2), Pi(3, 2), Gamma(2, 2);
  R << 1, 1;
  Pi << testing::example_pi(), testing::example_pi() + 2.0 * ker.topRows(3);
  Gamma << testing::example_gamma(), testing::example_gamma() + 2.0 * ker.bottomRows(2);
  ASSERT_FALSE(validate_regulator(model, R, Pi, Gamma).rank_condition);
  RegulatorSolution out;
  out.R = R;
  repair_regulator(model, out, Pi, Gamma);
  EXPECT_EQ(out.gamma_rank_history.front(), 2);
  EXPECT_EQ(out.gamma_rank_history.back(), 1);
  EXPECT_TRUE(validate_regulator(model, R, out.Pi, out.Gamma).ok);
}

TEST(BuildPrecompensator, ReferenceGamma) {
  const Precompensator pre = build_precompensator(testing::example_gamma());
  ASSERT_EQ(pre.v(), 1);
  EXPECT_NEAR(std::abs(pre.Gamma1(0, 0)), 0.5, 1e-12);
  EXPECT_NEAR(std::abs(pre.Gamma1(1, 0)), kSqrt3 / 2, 1e-12);
  ASSERT_EQ(pre.Gamma2.cols(), 1);
  EXPECT_NEAR(std::abs(pre.Gamma2(0, 0)), kSqrt3 / 2, 1e-12);
  EXPECT_NEAR(std::abs(pre.Gamma2(1, 0)), 0.5, 1e-12);
  EXPECT_TRUE(validate_precompensator(testing::example_gamma(), pre));
  EXPECT_TRUE(validate_precompensator(testing::example_gamma(),
                                      testing::example_precompensator()));
}

TEST(BuildPrecompensator, ZeroGamma) {
  const Precompensator pre = build_precompensator(Mat::Zero(1, 1));
  EXPECT_EQ(pre.v(), 0);
  ASSERT_EQ(pre.Gamma2.cols(), 1);
  EXPECT_NEAR(std::abs(pre.Gamma2(0, 0)), 1.0, 1e-14);
}

TEST(BuildPrecompensator, IdentityGamma) {
  const Precompensator pre = build_precompensator(Mat::Identity(2, 2));
  EXPECT_EQ(pre.v(), 2);
  EXPECT_EQ(pre.Gamma2.cols(), 0);
  EXPECT_LE((pre.Gamma1.transpose() * pre.Gamma1 - Mat::Identity(2, 2)).norm(), 1e-14);
}

TEST(ValidatePrecompensator, RejectsWrongImage) {
  Precompensator bad{Mat((Mat(2, 1) << 1, 0).finished()),
                     Mat((Mat(2, 1) << 0, 1).finished())};
  EXPECT_FALSE(validate_precompensator(testing::example_gamma(), bad));
}

TEST(Compensate, ReferenceMatrices) {
  const SynthesisResult s = testing::example_protocol();
  Mat Abar(4, 4), Bbar(4, 2), Cbar(1, 4);
  // clang-format off
  Abar << -1, 0,           0,          -1,
           0, 0.5,         kSqrt3 / 2, -kSqrt3,
           0, -kSqrt3 / 2, 0.5,         0,
           0, 0,           0,           1;
  Bbar << 0, 0,
          1, 0,
          0, 0,
          0, 1;
  Cbar << 1, 0, 1, 0;
  // clang-format on
  EXPECT_LE((s.comp.Abar - Abar).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LE((s.comp.Bbar - Bbar).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LE((s.comp.Cbar - Cbar).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_NEAR(s.comp.W(0, 0), 1.0, 1e-14);
  EXPECT_LE((s.comp.Abar * s.comp.PiBar - s.comp.PiBar).norm(), 1e-12);
  EXPECT_LE((s.comp.Cbar * s.comp.PiBar - Mat::Ones(1, 1)).norm(), 1e-12);
}

TEST(Synthesize, ReferenceModel) {
  const SynthesisResult s =
      synthesize(testing::example_model(), Vec::Constant(1, 5.0));
  EXPECT_EQ(s.reg.R.cols(), 1);
  EXPECT_EQ(s.v(), 1);
  EXPECT_NEAR(std::abs(s.z(0)), 5.0, 1e-12);
  EXPECT_TRUE(s.checks.regulator.ok);
  EXPECT_TRUE(s.checks.precompensator_valid);
  EXPECT_TRUE(s.checks.compensated_stabilizable);
  EXPECT_TRUE(s.checks.compensated_detectable);
  EXPECT_TRUE(s.checks.radii.ok());
}

TEST(Synthesize, ZeroReference) {
  const SynthesisResult s =
      synthesize(testing::example_model(), Vec::Zero(1));
  EXPECT_EQ(s.z.norm(), 0.0);
}

TEST(Synthesize, InfeasibleReferenceNamesComponentAndDistance) {
  try {
    synthesize(testing::non_right_invertible_model(), Vec((Vec(2) << 1, -1).finished()));
    FAIL() << "expected InfeasibleReferenceError";
  } catch (const InfeasibleReferenceError& e) {
    EXPECT_NEAR(e.distance(), std::sqrt(2.0), 1e-12);
    EXPECT_GE(e.component(), 0);
    EXPECT_LE(e.component(), 1);
  }
}

TEST(Synthesize, FeasibleDiagonalReference) {
  const SynthesisResult s = synthesize(testing::non_right_invertible_model(),
                                       Vec((Vec(2) << 1, 1).finished()));
  EXPECT_EQ(s.reg.R.cols(), 1);
  EXPECT_TRUE(s.checks.radii.ok());
}

TEST(Synthesize, WrongReferenceLength) {
  EXPECT_THROW(synthesize(testing::example_model(), Vec::Zero(2)), DimensionError);
}

TEST(AssembleProtocol, ReferenceGainsAreSchur) {
  const SynthesisResult s = testing::example_protocol();
  EXPECT_LT(s.checks.radii.controller, 1.0);
  EXPECT_LT(s.checks.radii.observer, 1.0);
  // Frozen from an independent eigenvalue evaluation of the reference gains.
  EXPECT_NEAR(s.checks.radii.controller, 0.4986, 1e-3);
  EXPECT_NEAR(s.checks.radii.observer, 0.5221, 1e-3);
}

// ---- randomized properties ------------------------------------------------

AgentModel random_model(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> nd(1, 6), md(1, 3), pd(1, 3);
  // Repeated eigenvalues on the unit circle can leave (A, B) uncontrollable
  // for small m; redraw until the model meets the synthesis hypotheses.
  while (true) {
    const int n = nd(rng), m = md(rng), p = pd(rng);
    AgentModel model = AgentModel::make(testing::random_weakly_unstable(rng, n),
                                        testing::random_gaussian(rng, n, m),
                                        testing::random_gaussian(rng, p, n));
    if (check_model(model).ok()) return model;
  }
}

TEST(SynthesizeProperty, RandomModelsSatisfyEveryIdentity) {
  std::mt19937_64 rng(21);
  int successes = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const AgentModel model = random_model(rng);
    const Mat R = check_right_invertible_no_zero_at_one(model)
                      ? Mat(Mat::Identity(model.p(), model.p()))
                      : compute_yr_basis(model);
    const Vec y_r = R * testing::random_gaussian(rng, R.cols(), 1);
    SynthesisResult s;
    try {
      s = synthesize(model, y_r);
    } catch (const Error& e) {
      ADD_FAILURE() << "trial " << trial << ": " << e.what();
      continue;
    }
    ++successes;
    const auto n = model.n();
    const double scale = std::max({1.0, s.reg.Pi.norm(), s.reg.Gamma.norm()});
    EXPECT_LE(((model.A - Mat::Identity(n, n)) * s.reg.Pi + model.B * s.reg.Gamma)
                  .cwiseAbs()
                  .maxCoeff(),
              1e-9 * scale);
    EXPECT_LE((model.C * s.reg.Pi - s.reg.R).cwiseAbs().maxCoeff(), 1e-9 * scale);
    EXPECT_EQ(rank_of(repair_matrix(model, s.reg.Gamma)),
              n + rank_of(s.reg.Gamma));
    EXPECT_EQ(rank_of(s.pre.Gamma1), s.v());
    Mat G12(model.m(), model.m());
    G12 << s.pre.Gamma1, s.pre.Gamma2;
    EXPECT_EQ(rank_of(G12), model.m());
    Mat both(model.m(), s.reg.Gamma.cols() + s.v());
    both << s.reg.Gamma, s.pre.Gamma1;
    EXPECT_EQ(rank_of(both), rank_of(s.reg.Gamma));
    EXPECT_TRUE(check_stabilizable(s.comp.Abar, s.comp.Bbar));
    EXPECT_TRUE(check_detectable(s.comp.Abar, s.comp.Cbar));
    EXPECT_LE((s.comp.Abar * s.comp.PiBar - s.comp.PiBar).cwiseAbs().maxCoeff(),
              1e-9 * scale);
    EXPECT_LE((s.comp.Cbar * s.comp.PiBar - s.reg.R).cwiseAbs().maxCoeff(),
              1e-9 * scale);
    EXPECT_LT(spectral_radius(Mat(s.comp.Abar - s.comp.Bbar * s.gains.K)), 1.0);
    EXPECT_LT(spectral_radius(Mat(s.comp.Abar - s.gains.F * s.comp.Cbar)), 1.0);
    for (std::size_t i = 1; i < s.reg.gamma_rank_history.size(); ++i) {
      EXPECT_LT(s.reg.gamma_rank_history[i], s.reg.gamma_rank_history[i - 1]);
    }
  }
  EXPECT_EQ(successes, 200);
}

TEST(SynthesizeProperty, RightInvertibleImpliesFullReferenceSet) {
  std::mt19937_64 rng(22);
  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const AgentModel model = random_model(rng);
    if (!check_right_invertible_no_zero_at_one(model)) continue;
    ++checked;
    EXPECT_EQ(compute_yr_basis(model).cols(), model.p()) << "trial " << trial;
  }
  EXPECT_GT(checked, 20);
}

TEST(SynthesizeProperty, MembershipAgreesWithSpanOfR) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int in_span = 0, off_span = 0;
  for (int model_idx = 0; model_idx < 30; ++model_idx) {
    const AgentModel model = random_model(rng);
    const Mat R = compute_yr_basis(model);
    for (int trial = 0; trial < 100; ++trial) {
      Vec y;
      if (R.cols() > 0 && unit(rng) < 0.5) {
        y = R * testing::random_gaussian(rng, R.cols(), 1);
      } else {
        y = testing::random_gaussian(rng, model.p(), 1);
      }
      const double lsq = reference_distance(model, y);
      const double span =
          R.cols() > 0 ? (y - R * (R.transpose() * y)).norm() : y.norm();
      const bool a = lsq <= 1e-8, b = span <= 1e-8;
      EXPECT_EQ(a, b) << "model " << model_idx << " lsq " << lsq << " span " << span;
      (b ? in_span : off_span)++;
    }
  }
  EXPECT_GT(in_span, 100);
  EXPECT_GT(off_span, 100);
}

}  // namespace
}  // namespace delaysync
