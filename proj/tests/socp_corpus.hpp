#pragma once

#include <cmath>
#include <vector>

#include "ascent/socp.hpp"

namespace ascent::socp::corpus {

// Hand-built problems with analytic optima.
inline ConicProblem lower_bound() {
  ProblemBuilder b;
  const int x = b.add_variable("x");
  b.add_cost(x, 1.0);
  b.add_less_equal({{x, -1.0}}, -1.0);
  return b.build();
}

inline ConicProblem norm_of_three_four() {
  ProblemBuilder b;
  const int t = b.add_variable("t");
  b.add_cost(t, 1.0);
  b.add_soc({{{t, -1.0}}, {}, {}}, {0.0, 3.0, 4.0});
  return b.build();
}

inline ConicProblem distance_to_plane() {
  ProblemBuilder b;
  const int t = b.add_variable("t");
  const int x = b.add_variables("x", 3);
  b.add_cost(t, 1.0);
  b.add_equality({{x, 1.0}, {x + 1, 1.0}, {x + 2, 1.0}}, 0.0);
  b.add_soc({{{t, -1.0}}, {{x, -1.0}}, {{x + 1, -1.0}}, {{x + 2, -1.0}}}, {0.0, -1.0, -2.0, -3.0});
  return b.build();
}

inline ConicProblem chebyshev_center() {
  // Triangle (0,0), (4,0), (0,3); inradius 1.
  ProblemBuilder b;
  const int x = b.add_variable("x");
  const int y = b.add_variable("y");
  const int r = b.add_variable("r");
  b.add_cost(r, -1.0);
  b.add_less_equal({{x, -1.0}, {r, 1.0}}, 0.0);
  b.add_less_equal({{y, -1.0}, {r, 1.0}}, 0.0);
  b.add_less_equal({{x, 3.0}, {y, 4.0}, {r, 5.0}}, 12.0);
  return b.build();
}

inline ConicProblem l1_fit() {
  // min |x - (3, -1, 2)|_1 s.t. sum x = 0.
  ProblemBuilder b;
  const int x = b.add_variables("x", 3);
  const int t = b.add_variables("t", 3);
  const double a[3] = {3.0, -1.0, 2.0};
  for (int i = 0; i < 3; ++i) {
    b.add_cost(t + i, 1.0);
    b.add_less_equal({{x + i, 1.0}, {t + i, -1.0}}, a[i]);
    b.add_less_equal({{x + i, -1.0}, {t + i, -1.0}}, -a[i]);
  }
  b.add_equality({{x, 1.0}, {x + 1, 1.0}, {x + 2, 1.0}}, 0.0);
  return b.build();
}

inline ConicProblem small_lp() {
  ProblemBuilder b;
  const int x = b.add_variable("x");
  const int y = b.add_variable("y");
  b.add_cost(x, -1.0);
  b.add_cost(y, -1.0);
  b.add_less_equal({{x, 1.0}, {y, 2.0}}, 4.0);
  b.add_less_equal({{x, 3.0}, {y, 1.0}}, 6.0);
  b.add_less_equal({{x, -1.0}}, 0.0);
  b.add_less_equal({{y, -1.0}}, 0.0);
  return b.build();
}

inline ConicProblem least_norm() {
  // x1 + x3 = 1, x2 + x3 = 1; least-norm solution (1/3, 1/3, 2/3).
  ProblemBuilder b;
  const int t = b.add_variable("t");
  const int x = b.add_variables("x", 3);
  b.add_cost(t, 1.0);
  b.add_equality({{x, 1.0}, {x + 2, 1.0}}, 1.0);
  b.add_equality({{x + 1, 1.0}, {x + 2, 1.0}}, 1.0);
  b.add_norm_bound(t, {x, x + 1, x + 2});
  return b.build();
}

inline ConicProblem distance_to_halfspace() {
  ProblemBuilder b;
  const int t = b.add_variable("t");
  const int x = b.add_variables("x", 2);
  b.add_cost(t, 1.0);
  b.add_less_equal({{x, -1.0}, {x + 1, -2.0}}, -5.0);
  b.add_norm_bound(t, {x, x + 1});
  return b.build();
}

inline ConicProblem linear_over_ball() {
  ProblemBuilder b;
  const int x = b.add_variables("x", 3);
  b.add_cost(x, -1.0);
  b.add_cost(x + 1, -2.0);
  b.add_cost(x + 2, -2.0);
  b.add_soc({{}, {{x, -1.0}}, {{x + 1, -1.0}}, {{x + 2, -1.0}}}, {1.0, 0.0, 0.0, 0.0});
  return b.build();
}

inline ConicProblem fermat_two_points() {
  // min |x - (0,0)| + |x - (3,4)|
  ProblemBuilder b;
  const int x = b.add_variables("x", 2);
  const int t = b.add_variables("t", 2);
  b.add_cost(t, 1.0);
  b.add_cost(t + 1, 1.0);
  b.add_norm_bound(t, {x, x + 1});
  b.add_soc({{{t + 1, -1.0}}, {{x, -1.0}}, {{x + 1, -1.0}}}, {0.0, -3.0, -4.0});
  return b.build();
}

struct Case {
  const char* name;
  ConicProblem problem;
  double optimum;
};

inline std::vector<Case> hand_built() {
  return {
      {"lower bound", lower_bound(), 1.0},
      {"norm (3,4)", norm_of_three_four(), 5.0},
      {"distance to plane", distance_to_plane(), 2.0 * std::sqrt(3.0)},
      {"chebyshev center", chebyshev_center(), -1.0},
      {"l1 fit", l1_fit(), 4.0},
      {"small lp", small_lp(), -2.8},
      {"least norm", least_norm(), std::sqrt(6.0) / 3.0},
      {"distance to halfspace", distance_to_halfspace(), std::sqrt(5.0)},
      {"linear over ball", linear_over_ball(), -3.0},
      {"two-point fermat", fermat_two_points(), 5.0},
  };
}

}  // namespace ascent::socp::corpus
