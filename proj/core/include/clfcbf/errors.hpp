#ifndef CLFCBF_ERRORS_HPP
#define CLFCBF_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace clfcbf {

// Base class for every error thrown by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Zero polynomial (or otherwise meaningless input) where a nontrivial one is required.
struct DegenerateInput : Error {
  using Error::Error;
};

// det(lambda*M - N) is identically zero; the pencil carries no spectrum.
struct DegeneratePencil : Error {
  using Error::Error;
};

// No rank-(n-1) polynomial nullspace basis up to the requested degree.
struct NullspaceDegreeExceeded : Error {
  using Error::Error;
};

struct InvalidInput : Error {
  using Error::Error;
};

// Unbounded unsafe set or other geometry the analysis does not cover.
struct UnsupportedGeometry : Error {
  using Error::Error;
};

// L_g h = 0 at a boundary equilibrium (excluded case).
struct UnsupportedDegenerate : Error {
  using Error::Error;
};

// The state QP has an empty feasible set.
struct InfeasibleQP : Error {
  InfeasibleQP(const std::string& msg, std::vector<int> violated = {})
      : Error(msg), violated_constraints(std::move(violated)) {}
  std::vector<int> violated_constraints;
};

// Penalty optimization finished without a feasible iterate.
struct CompatibilizationFailed : Error {
  using Error::Error;
};

// H(pi) lost the required minimum curvature during adaptation.
struct ShapeDegenerate : Error {
  using Error::Error;
};

}  // namespace clfcbf

#endif  // CLFCBF_ERRORS_HPP
