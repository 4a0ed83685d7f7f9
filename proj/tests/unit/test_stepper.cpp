#include "dgflow/stepper.hpp"

#include "helpers.hpp"

#include <doctest.h>

#include <cmath>

using namespace dgflow;
using dgflow::testing::plain_setup;

namespace {

constexpr SchemeKind all_schemes[] = {SchemeKind::linear, SchemeKind::implicit, SchemeKind::iterative,
                                      SchemeKind::impes_iterative, SchemeKind::impes};

DgFunction constant_s(const Mesh& m, double v) {
  DgFunction u(std::make_shared<const DgSpace>(m));
  l2_project(u, Field::saturation, [v](const Vec2&) { return v; });
  return u;
}

}  // namespace

TEST_SUITE("stepper") {
  TEST_CASE("scheme names") {
    for (SchemeKind k : all_schemes) CHECK(parse_scheme(to_string(k)) == k);
    CHECK(parse_scheme("impesIterative") == SchemeKind::impes_iterative);
    CHECK_THROWS_AS(parse_scheme("explicit"), ConfigurationError);
    SchemeConfig bad;
    bad.tau = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigurationError);
  }

  TEST_CASE("stopping criterion") {
    const Mesh m = Mesh::build_macro(1, 1, Vec2(1, 1), 0, 1);
    const DgFunction zero = constant_s(m, 0.0);
    CHECK(stopping_criterion(zero, zero, 0.03) == StopDecision::stop);
    CHECK(stopping_criterion(constant_s(m, 1e-12), zero, 0.03) == StopDecision::proceed);
    const DgFunction one = constant_s(m, 1.0);
    CHECK(stopping_criterion(constant_s(m, 1.01), one, 0.03) == StopDecision::stop);
    CHECK(stopping_criterion(constant_s(m, 1.05), one, 0.03) == StopDecision::proceed);
  }

  TEST_CASE("hydrostatic rest is a steady state of every scheme") {
    ProblemSetup s = anisotropic_lens_setup();
    s.inflow_J_n = 0.0;
    bind_lens_box_data(s);
    const ModelA model;
    const Discretization disc(s, model);
    const Mesh mesh = Mesh::build_macro(10, 6, s.extent, 0, 1);
    DgFunction u0(std::make_shared<const DgSpace>(mesh));
    l2_project(u0, Field::pressure, s.initial_p_w);
    for (SchemeKind k : all_schemes) {
      CAPTURE(to_string(k));
      TimeState st{0.0, 0, u0};
      SchemeConfig sc;
      sc.kind = k;
      sc.tau = 3.0;
      for (int n = 0; n < 2; ++n) {
        const StepDiagnostics d = advance(st, sc, disc);
        REQUIRE(d.ok);
      }
      CHECK(st.step == 2);
      CHECK(st.t == doctest::Approx(6.0));
      CHECK(l2_distance(st.u, u0, Field::pressure) < 1e-9 * u0.l2_norm(Field::pressure));
      CHECK(st.u.l2_norm(Field::saturation) < 1e-12);
    }
  }

  TEST_CASE("saturation-independent coefficients give one answer for all schemes") {
    ProblemSetup s = plain_setup(Vec2(2, 1));
    s.boundary = [](BoundarySide side, const Vec2&) {
      BoundaryData b;
      if (side == BoundarySide::west || side == BoundarySide::east) {
        b.p_dirichlet = b.s_dirichlet = true;
        b.p_w = side == BoundarySide::west ? 1.0 : 0.0;
        b.s_n = side == BoundarySide::west ? 0.2 : 0.0;
      }
      return b;
    };
    PointCoefficients c;
    c.pp = 1.0;
    c.sp = 0.3;
    c.ss = 0.05;
    const ConstantModel model(c);
    const Discretization disc(s, model);
    const Mesh mesh = Mesh::build_macro(4, 2, s.extent, 0, 2);
    DgFunction u0(std::make_shared<const DgSpace>(mesh));
    l2_project(u0, Field::saturation, [](const Vec2& x) { return 0.1 + 0.05 * x.x(); });
    std::vector<DgFunction> results;
    for (SchemeKind k : all_schemes) {
      TimeState st{0.0, 0, u0};
      SchemeConfig sc;
      sc.kind = k;
      sc.tau = 0.1;
      sc.tol_iter = 1e-12;
      sc.limiter.enabled = false;
      for (int n = 0; n < 3; ++n) REQUIRE(advance(st, sc, disc).ok);
      results.push_back(st.u);
    }
    for (std::size_t i = 1; i < results.size(); ++i) {
      CAPTURE(i);
      CHECK((results[i].coefficients() - results[0].coefficients()).norm() <
            1e-9 * results[0].coefficients().norm());
    }
  }

  TEST_CASE("a failed step leaves the state untouched") {
    const ProblemSetup s = anisotropic_lens_setup();
    const ModelA model;
    const Discretization disc(s, model);
    const Mesh mesh = Mesh::build_macro(10, 6, s.extent, 0, 1);
    DgFunction u(std::make_shared<const DgSpace>(mesh));
    l2_project(u, Field::pressure, s.initial_p_w);
    u.block(7, Field::saturation)[0] = 0.97;
    for (SchemeKind k : all_schemes) {
      TimeState st{5.0, 4, u};
      SchemeConfig sc;
      sc.kind = k;
      const StepDiagnostics d = advance(st, sc, disc);
      CHECK_FALSE(d.ok);
      CHECK_FALSE(d.reason.empty());
      CHECK(st.t == 5.0);
      CHECK(st.step == 4);
      CHECK(st.u.coefficients() == u.coefficients());
    }
  }
}
