#pragma once

#include "tdv/errors.hpp"

namespace tdv {

/// Parameters of the smoothing solve. Defaults follow the reference
/// experiment setup (alpha = 8, lambda_in = 0.05, lambda_out = 1).
struct SolveParams {
  double alpha = 8.0;
  double lambda_in = 0.05;
  double lambda_out = 1.0;
  double cg_tol = 1e-10;
  int cg_max_iter = 20000;

  void validate() const {
    if (!(alpha > 0.0)) throw ParameterError("alpha must be positive");
    if (!(lambda_in > 0.0) || !(lambda_in <= lambda_out))
      throw ParameterError("need 0 < lambda_in <= lambda_out");
    if (!(cg_tol > 0.0)) throw ParameterError("cg_tol must be positive");
    if (cg_max_iter < 1) throw ParameterError("cg_max_iter must be >= 1");
  }
};

/// Truncated exterior domain [-R,R]^2 with a uniformly fine core box
/// [-L_f,L_f]^2 and geometrically growing spacings outside it.
struct ExteriorParams {
  double R = 30.0;
  double h_f = 0.0125;
  double L_f = 1.6;
  double rho = 1.2;
  double h_max = 1.0;

  void validate(double shape_width = 0.05) const {
    if (!(R > L_f)) throw ParameterError("need R > L_f");
    if (!(L_f > 1.0 + shape_width)) throw ParameterError("need L_f > 1 + w");
    if (!(rho > 1.0)) throw ParameterError("need rho > 1");
    if (!(h_f > 0.0) || !(h_f < L_f)) throw ParameterError("invalid fine spacing h_f");
    if (!(h_max >= h_f)) throw ParameterError("need h_max >= h_f");
  }
};

} // namespace tdv
