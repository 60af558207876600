#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "histlogic/framework.hpp"

namespace histlogic {

/// A quantum description: a framework together with one of its statements.
struct Description {
  std::shared_ptr<const Framework> framework;
  Formula statement;
};

enum class InferenceReason { Proven, NotEntailed, IncompatibleFrameworks, ContradictoryAssumptions };

inline const char* to_string(InferenceReason r) {
  switch (r) {
    case InferenceReason::Proven: return "Proven";
    case InferenceReason::NotEntailed: return "NotEntailed";
    case InferenceReason::IncompatibleFrameworks: return "IncompatibleFrameworks";
    case InferenceReason::ContradictoryAssumptions: return "ContradictoryAssumptions";
  }
  return "?";
}

struct InferenceVerdict {
  bool valid = false;
  InferenceReason reason = InferenceReason::NotEntailed;
  Matrix assumption_projector;  // the combined assumption A (empty if undefined)
  std::string detail;           // witness on failure
};

/// True iff the truth of B (a projector of the description's algebra) forces
/// the truth of the statement: B phi(s) = B.
inline bool entails(const Matrix& b, const Description& s, Tolerance tol = {}) {
  decompose(b, *s.framework);  // throws NotInAlgebra if B is a stranger
  Matrix c = phi(s.statement, *s.framework);
  Matrix residual = b * c - b;
  return approx_zero(residual, tol);
}

/// Replace a compatible collection of descriptions by the single description
/// carrying their combined content: the generated framework and the product
/// of the individual projectors.
inline std::pair<Framework, Matrix> master_description(const std::vector<Description>& descriptions,
                                                       Tolerance tol = {},
                                                       std::size_t max_generators = kDefaultMaxGenerators) {
  if (descriptions.empty()) throw EmptySpan("master_description: no descriptions");
  std::vector<const Framework*> frs;
  frs.reserve(descriptions.size());
  for (const auto& d : descriptions) frs.push_back(d.framework.get());
  Framework joined = generated_framework(frs, tol, max_generators);
  Matrix d = joined.ident;
  for (const auto& desc : descriptions) d = d * phi(desc.statement, *desc.framework);
  return {std::move(joined), std::move(d)};
}

/// Single-time inference. A conclusion set is proven when (a) the union of
/// every assumption and conclusion framework is a compatible collection and
/// (b) phi(c) A = A for each conclusion, with A the product of the assumption
/// projectors (A = I for an empty assumption set). Zero-weight assumptions
/// (A = 0) prove nothing.
inline InferenceVerdict infer_single_time(const std::vector<Description>& assumptions,
                                          const std::vector<Description>& conclusions,
                                          Tolerance tol = {}) {
  InferenceVerdict v;
  std::vector<const Framework*> frs;
  for (const auto& d : assumptions) frs.push_back(d.framework.get());
  for (const auto& d : conclusions) frs.push_back(d.framework.get());
  if (frs.empty()) {
    v.valid = true;
    v.reason = InferenceReason::Proven;
    return v;
  }
  try {
    CompatibilityResult c = check_frameworks_compatible(frs, tol);
    if (!c.compatible) {
      v.reason = InferenceReason::IncompatibleFrameworks;
      v.detail = c.diagnostic;
      return v;
    }
  } catch (const IncompatibleFrameworks& e) {
    v.reason = InferenceReason::IncompatibleFrameworks;
    v.detail = e.what();
    return v;
  } catch (const DimensionMismatch& e) {
    v.reason = InferenceReason::IncompatibleFrameworks;
    v.detail = e.what();
    return v;
  }

  Matrix a = frs.front()->ident;
  for (const auto& d : assumptions) a = a * phi(d.statement, *d.framework);
  v.assumption_projector = a;
  if (approx_zero(a, tol)) {
    v.reason = InferenceReason::ContradictoryAssumptions;
    v.detail = "assumption projector vanishes";
    return v;
  }
  for (std::size_t j = 0; j < conclusions.size(); ++j) {
    Matrix c = phi(conclusions[j].statement, *conclusions[j].framework);
    Matrix residual = c * a - a;
    if (!approx_zero(residual, tol)) {
      v.reason = InferenceReason::NotEntailed;
      v.detail = "conclusion '" + conclusions[j].statement.str() + "' is not entailed";
      return v;
    }
  }
  v.valid = true;
  v.reason = InferenceReason::Proven;
  return v;
}

}  // namespace histlogic
