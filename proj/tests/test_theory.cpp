#include <cmath>
#include <limits>
#include <numbers>

#include "doctest.h"
#include "qnn/error.hpp"
#include "qnn/noise.hpp"
#include "qnn/theory.hpp"

using namespace qnn;
using std::numbers::pi;

// Reference values below were evaluated independently at 50 significant digits.

namespace {

BoundInputs inputs(int d, double T, double K, double B, double lambda, double ptilde) {
  BoundInputs in;
  in.d = d;
  in.T = T;
  in.K = K;
  in.B = B;
  in.lambda = lambda;
  in.ptilde = ptilde;
  return in;
}

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

TEST_CASE("loss constants") {
  CHECK(constants(0.5, 15).S == 2.0);
  CHECK(constants(0.0, 15).G == 15.0);
  CHECK(constants(0.5, 15).G == doctest::Approx(15 * (1 + 1.5 * pi)).epsilon(1e-15));
  CHECK_FALSE(constants(0.2, 15).mu.has_value());
  CHECK(pl_constant(2 / pi, 1) == doctest::Approx(0.017376596867370901).epsilon(1e-14));
  CHECK(pl_constant(2 / pi, 1) == doctest::Approx(1 / (1 + 18 * pi)).epsilon(1e-14));
  CHECK(pl_constant(0.5, 15) == doctest::Approx(0.00048832325878469557).epsilon(1e-13));
  CHECK_THROWS_AS(pl_constant(1 / pi, 3), ValidationError);
  CHECK_THROWS_AS(constants(-1.0, 3), ValidationError);
}

TEST_CASE("r1 bound") {
  const auto v = r1_bound(inputs(15, 400, 20, 280, 0.0, merged_rate(0.0025, 5)));
  CHECK(v.value() == doctest::Approx(1.1658921881455998).epsilon(1e-13));
  CHECK(r1_bound(inputs(15, 400, 20, 280, 0.5, merged_rate(0.0025, 8))).value() ==
        doctest::Approx(281.21882431084453).epsilon(1e-13));

  // Only the shot term survives at p = 0 and large T.
  const double d = 15, K = 20, B = 280;
  CHECK(r1_bound(inputs(15, 1e9, K, B, 0.0, 0.0)).value() ==
        doctest::Approx((6 * d * K + 8 * d) / (B * K * K)).epsilon(1e-7));
  CHECK(r1_bound(inputs(15, 1e9, kInf, B, 0.0, 0.0)).value() < 1e-8);

  CHECK_FALSE(r1_bound(inputs(15, 400, 20, 280, 0.0, 1.0)).feasible());
  CHECK_FALSE(r1_bound(inputs(15, 0, 20, 280, 0.0, 0.1)).feasible());
  CHECK_THROWS_AS(r1_bound(inputs(15, 400, 0.5, 280, 0.0, 0.1)), ValidationError);
  CHECK_THROWS_AS(r1_bound(inputs(15, 0, 20, 280, 0.0, 0.1)).value(), NumericError);
}

TEST_CASE("r2 bound") {
  const double mu = pl_constant(0.5, 1);
  CHECK(r2_bound(inputs(1, 1, 1, 1, 0.5, 0.0)).value() ==
        doctest::Approx(46 * std::exp(-mu / 2) + 3.5).epsilon(1e-14));
  CHECK(r2_bound(inputs(1, 1, 1, 1, 0.5, 0.0)).value() == doctest::Approx(49.335286508573827).epsilon(1e-14));
  CHECK(r2_bound(inputs(15, 400, 20, 280, 0.5, merged_rate(0.0025, 8))).value() ==
        doctest::Approx(16967.192880673181).epsilon(1e-13));
  CHECK(r2_bound(inputs(15, 0, 20, 280, 0.5, 0.1)).value() == doctest::Approx(1 + 90 * 0.5 * 15).epsilon(1e-15));

  // With p = 0 the linear term is T(6dK + 8d)/(2SBK^2).
  const double d = 15, K = 20, B = 280, T = 400, S = 2;
  const double lin = T * (6 * d * K + 8 * d) / (2 * S * B * K * K);
  CHECK(r2_bound(inputs(15, T, K, B, 0.5, 0.0)).value() ==
        doctest::Approx((1 + 90 * 0.5 * d) * std::exp(-pl_constant(0.5, 15) * T / S) + lin).epsilon(1e-14));
  CHECK_FALSE(r2_bound(inputs(15, 400, 20, 280, 0.1, 0.1)).feasible());
}

TEST_CASE("general-channel bounds") {
  const BoundInputs in = inputs(15, 400, 20, 280, 0.5, merged_rate(0.01, 8));
  CHECK(r1_bound(in, BoundForm::GeneralChannel).value() == doctest::Approx(1248.4893684391828).epsilon(1e-13));
  CHECK(r2_bound(in, BoundForm::GeneralChannel).value() == doctest::Approx(106338.62070450268).epsilon(1e-13));
}

TEST_CASE("bound monotonicity grids") {
  for (auto form : {BoundForm::Depolarizing, BoundForm::GeneralChannel})
    for (int d : {1, 15, 60})
      for (double lambda : {0.0, 0.5})
        for (double T : {1.0, 400.0})
          for (double p : {0.0, 0.01, 0.05, 0.3}) {
            double prev1 = kInf, prev2 = kInf;
            for (double K : {1.0, 2.0, 5.0, 20.0, 100.0, 1e4, kInf}) {
              const BoundInputs in = inputs(d, T, K, 280, lambda, p);
              const double v1 = r1_bound(in, form).value();
              CHECK(v1 <= prev1);
              prev1 = v1;
              if (lambda > 1 / pi) {
                const double v2 = r2_bound(in, form).value();
                CHECK(v2 <= prev2);
                prev2 = v2;
                CHECK(r2_bound(inputs(d, T, K, 280, lambda, p + 0.01), form).value() >= v2);
                CHECK(r2_bound(inputs(d + 1, T, K, 280, lambda, p), form).value() >= v2);
              }
              CHECK(r1_bound(inputs(d, T, K, 280, lambda, p + 0.01), form).value() >= v1);
              CHECK(r1_bound(inputs(d + 1, T, K, 280, lambda, p), form).value() >= v1);
            }
          }
}

TEST_CASE("per-query epsilon") {
  CHECK(std::abs(per_query_epsilon(0.5, 0.5, 1).value() - std::log(6.0)) < 1e-12);
  CHECK(per_query_epsilon(0.5, 0.5, 1).value() == doctest::Approx(1.7917594692280550008).epsilon(1e-15));
  CHECK_FALSE(per_query_epsilon(0.0, 0.5, 1).feasible());
  CHECK_FALSE(per_query_epsilon(1.0, 0.5, 1).feasible());
  // Diverges as ptilde approaches zero.
  CHECK(per_query_epsilon(1e-6, 0.5, 1).value() > per_query_epsilon(1e-3, 0.5, 1).value());
  CHECK(per_query_epsilon(1e-3, 0.5, 1).value() > 6.0);
  // U-shape in ptilde with its minimum inside (0,1).
  double best = kInf, arg = -1;
  for (int i = 1; i < 1000; ++i) {
    const double v = per_query_epsilon(i / 1000.0, 0.5, 1).value();
    if (v < best) best = v, arg = i / 1000.0;
  }
  CHECK(arg > 0.2);
  CHECK(arg < 0.8);
  CHECK_THROWS_AS(per_query_epsilon(0.5, 0.5, 0), ValidationError);
  for (int K = 1; K < 20; ++K)
    CHECK(per_query_epsilon(0.3, 0.5, K + 1).value() > per_query_epsilon(0.3, 0.5, K).value());
}

TEST_CASE("gradient and total epsilon") {
  CHECK(gradient_epsilon(0.0, 0.1).value() == 0.0);
  CHECK(gradient_epsilon(1.0, std::exp(-1.0)).value() == doctest::Approx(7.6043352281603138).epsilon(1e-14));
  CHECK(gradient_epsilon(1.0, std::exp(-1.0)).value() ==
        doctest::Approx(std::sqrt(6.0) + 3 * (std::exp(1.0) - 1)).epsilon(1e-14));
  CHECK(total_epsilon(0.7, 3, 0, 0.05).value() == 0.0);
  CHECK(total_epsilon(0.0, 3, 10, 0.05).value() == 0.0);
  CHECK(total_epsilon(0.1, 2, 3, 0.05).value() == doctest::Approx(2.0288581970878596).epsilon(1e-14));
  CHECK_THROWS_AS(gradient_epsilon(1.0, 0.0), ValidationError);
  CHECK_THROWS_AS(total_epsilon(1.0, 0, 1, 0.1), ValidationError);
}

TEST_CASE("privacy chain oracle values") {
  struct Case {
    PrivacyInputs in;
    double e1, e2_lit, e2_std, tot_lit, tot_std;
  };
  auto make = [](double p, double r, int K, int d, double T, double d2, double db) {
    PrivacyInputs in;
    in.ptilde = p;
    in.ratio = r;
    in.K = K;
    in.d = d;
    in.T = T;
    in.delta2 = d2;
    in.delta_bar = db;
    return in;
  };
  const Case cases[] = {
      {make(0.5, 0.5, 1, 1, 1, 0.1, 0.1), 1.7917594692280550008, 31.851738444898735547,
       33.536222566676391961, 2168539745674830.0117, 12305819703326601.681},
      {make(0.3, 0.5, 2, 2, 5, 1e-3, 1e-2), 4.3450709281514524487, 1005.366870256821471,
       1019.920302541671157, kInf, kInf},
      {make(0.9, 0.25, 1, 1, 10, 0.05, 0.05), 1.5716975844512533459, 23.302307857826793786,
       24.650609148337404861, 3072293159285.6884853, 12515585873379.207171},
  };
  for (const auto& c : cases)
    for (auto variant : {ChainVariant::Literal, ChainVariant::Standard}) {
      PrivacyInputs in = c.in;
      in.variant = variant;
      const PrivacyChain chain = privacy_chain(in);
      const bool lit = variant == ChainVariant::Literal;
      CHECK(chain.per_query.value() == doctest::Approx(c.e1).epsilon(1e-14));
      CHECK(chain.per_gradient.value() == doctest::Approx(lit ? c.e2_lit : c.e2_std).epsilon(1e-13));
      const double tot = lit ? c.tot_lit : c.tot_std;
      if (std::isinf(tot)) {
        CHECK_FALSE(chain.total.feasible());
      } else {
        // e^{d eps''} amplifies the relative error of eps'' by about d eps''.
        CHECK(chain.total.value() == doctest::Approx(tot).epsilon(1e-11));
      }
    }
}

TEST_CASE("privacy monotonicity") {
  for (auto variant : {ChainVariant::Literal, ChainVariant::Standard})
    for (double p : {0.3, 0.6, 0.9}) {
      PrivacyInputs in;
      in.ptilde = p;
      in.variant = variant;
      in.delta2 = in.delta_bar = 0.05;
      double prev = -1;
      for (int K = 1; K <= 3; ++K) {
        in.K = K;
        const PrivacyChain c = privacy_chain(in);
        if (!c.total.feasible()) break;
        CHECK(c.total.value() >= prev);
        prev = c.total.value();
      }
      in.K = 1;
      prev = -1;
      for (double T = 0; T <= 5; ++T) {
        in.T = T;
        const double v = privacy_chain(in).total.value();
        CHECK(v >= prev);
        prev = v;
      }
      in.T = 1;
      prev = -1;
      for (int d = 1; d <= 3; ++d) {
        in.d = d;
        const PrivacyChain c = privacy_chain(in);
        if (!c.total.feasible()) break;
        CHECK(c.total.value() >= prev);
        prev = c.total.value();
      }
    }
}

TEST_CASE("composition helper") {
  const Composition c = compose(3, 0.5, 1e-6, 1e-5).value();
  CHECK(c.epsilon == doctest::Approx(5.1287272467229670).epsilon(1e-14));
  CHECK(c.delta == doctest::Approx(1.3e-5).epsilon(1e-14));
  CHECK(compose(0, 0.5, 1e-6, 1e-5).value().epsilon == 0.0);
  for (int k = 1; k < 10; ++k) {
    CHECK(compose(k + 1, 0.3, 1e-6, 1e-5).value().epsilon > compose(k, 0.3, 1e-6, 1e-5).value().epsilon);
    CHECK(compose(k, 0.31, 1e-6, 1e-5).value().epsilon > compose(k, 0.3, 1e-6, 1e-5).value().epsilon);
    CHECK(compose(k, 0.3, 1e-6, 1e-6).value().epsilon > compose(k, 0.3, 1e-6, 1e-5).value().epsilon);
  }
  CHECK_FALSE(compose(3, 800.0, 0.0, 0.1).feasible());
}

TEST_CASE("QSQ shot count") {
  QsqInputs in;
  CHECK(qsq_shot_count(in).value() == 185);
  in.ptilde = 0.1;
  in.nu = 0.3;
  CHECK(qsq_shot_count(in).value() == static_cast<std::int64_t>(std::ceil(std::log(40.0) / (2 * 0.07 * 0.07))));
  in.trm_ratio = 0.07;
  CHECK_FALSE(qsq_shot_count(in).feasible());
  in.trm_ratio = 0.07 - 5e-7;
  CHECK_FALSE(qsq_shot_count(in).feasible());
  in.trm_ratio = 0.069;
  CHECK(qsq_shot_count(in).value() > 1000000);
  CHECK_THROWS_AS(qsq_shot_count(QsqInputs{0.0, 0.05}), ValidationError);
}

TEST_CASE("QSQ coverage") {
  QsqInputs in;
  in.nu = 0.5;
  CHECK(exact_qsq_coverage(in, 185) == doctest::Approx(0.99492932031582447).epsilon(1e-12));
  in.nu = 0.3;
  CHECK(exact_qsq_coverage(in, 185) == doctest::Approx(0.99775246693145121).epsilon(1e-12));

  const QsqCoverage sim = simulate_qsq_query(in, 185, 10000, 1);
  CHECK(sim.passed);
  CHECK(sim.threshold == doctest::Approx(0.95 - 3 * std::sqrt(0.05 * 0.95 / 1e4)));

  QsqInputs wide;
  wide.tau = 1.0;
  wide.nu = 0.4;
  CHECK(simulate_qsq_query(wide, 3, 1000, 2).coverage == 1.0);

  // K = 1, tiny tau: only outcomes equal to nu count.
  QsqInputs tiny;
  tiny.tau = 1e-3;
  tiny.nu = 1.0;
  CHECK(exact_qsq_coverage(tiny, 1) == 1.0);
  tiny.nu = 0.0;
  tiny.ptilde = 0.2;
  tiny.trm_ratio = 0.5;
  CHECK(exact_qsq_coverage(tiny, 1) == doctest::Approx(0.9).epsilon(1e-15));
  const QsqCoverage s = simulate_qsq_query(tiny, 1, 100000, 3);
  CHECK(std::abs(s.coverage - 0.9) < 4 * std::sqrt(0.09 / 1e5));

  // Coverage at the returned K meets 1 - b across a grid.
  for (double tau : {0.05, 0.1, 0.2})
    for (double b : {0.01, 0.05, 0.2})
      for (double p : {0.0, 0.05}) {
        QsqInputs g;
        g.tau = tau;
        g.b = b;
        g.ptilde = p;
        g.nu = 0.4;
        const auto K = qsq_shot_count(g);
        REQUIRE(K.feasible());
        CHECK(exact_qsq_coverage(g, static_cast<int>(K.value())) >= 1 - b);
      }
}
