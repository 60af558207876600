#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "histlogic/errors.hpp"
#include "histlogic/formula.hpp"
#include "histlogic/linalg.hpp"

namespace histlogic {

// ---------------------------------------------------------------------------
// Operator concept, dense model.
//
// The Boolean-algebra machinery below is generic over an operator type Op
// providing *, +, -, adjoint_of, identity_like, zero_gauge (a norm used for
// "is zero" decisions) and same_shape. Dense matrices use the entrywise max
// norm; the tensor-sum operators of the histories module use Frobenius.
// ---------------------------------------------------------------------------

inline Matrix identity_like(const Matrix& m) { return identity(m.rows()); }
inline Matrix adjoint_of(const Matrix& m) { return m.adjoint(); }
inline double zero_gauge(const Matrix& m) { return max_norm(m); }
inline bool same_shape(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols();
}
inline std::string shape_str(const Matrix& m) { return std::to_string(m.rows()); }

template <class Op>
bool op_zero(const Op& x, Tolerance tol = {}) {
  return zero_gauge(x) <= tol.eps;
}

template <class Op>
bool op_equal(const Op& a, const Op& b, Tolerance tol = {}) {
  if (!same_shape(a, b)) return false;
  Op d = a - b;
  return op_zero(d, tol);
}

template <class Op>
bool op_is_projector(const Op& x, Tolerance tol = {}) {
  Op xx = x * x;
  Op idem = xx - x;
  Op herm = x - adjoint_of(x);
  return op_zero(idem, tol) && op_zero(herm, tol);
}

template <class Op>
bool op_commutes(const Op& a, const Op& b, Tolerance tol = {}) {
  Op ab = a * b;
  Op ba = b * a;
  Op c = ab - ba;
  return op_zero(c, tol);
}

// ---------------------------------------------------------------------------
// Frameworks: named commuting projectors and the Boolean algebra they
// generate, represented by its minimal elements (atoms).
// ---------------------------------------------------------------------------

inline constexpr std::size_t kDefaultMaxGenerators = 16;

template <class Op>
struct BasicFramework {
  std::vector<std::pair<std::string, Op>> generators;  // insertion order
  std::vector<Op> atoms;                               // nonzero minimal elements
  Op ident;                                            // identity of the carrier space
  Tolerance tol;

  const Op* find_generator(const std::string& name) const {
    for (const auto& [n, p] : generators)
      if (n == name) return &p;
    return nullptr;
  }
};

namespace detail {

template <class Op>
void enumerate_atoms(const std::vector<std::pair<std::string, Op>>& gens, std::size_t level,
                     const Op& prefix, Tolerance tol, std::vector<Op>& out) {
  if (op_zero(prefix, tol)) return;
  if (level == gens.size()) {
    out.push_back(prefix);
    return;
  }
  const Op& g = gens[level].second;
  Op asserted = prefix * g;
  enumerate_atoms(gens, level + 1, asserted, tol, out);
  Op complement = identity_like(g) - g;
  Op denied = prefix * complement;
  enumerate_atoms(gens, level + 1, denied, tol, out);
}

}  // namespace detail

/// Build the framework generated by the given projectors. Verifies that each
/// generator is a projector and that they pairwise commute, then enumerates
/// the minimal elements as the nonzero sign products over the generators.
template <class Op>
BasicFramework<Op> build_basic_framework(std::vector<std::pair<std::string, Op>> gens,
                                         const Op& ident, Tolerance tol = {},
                                         std::size_t max_generators = kDefaultMaxGenerators) {
  if (gens.size() > max_generators)
    throw CapacityExceeded("build_framework: " + std::to_string(gens.size()) +
                           " generators exceed the cap of " + std::to_string(max_generators));
  for (const auto& [name, p] : gens) {
    if (!same_shape(p, ident))
      throw DimensionMismatch("build_framework: generator '" + name +
                              "' does not act on the stated space (dim " + shape_str(ident) + ")");
    if (!op_is_projector(p, tol))
      throw NonProjectorGenerator("build_framework: generator '" + name + "' is not a projector");
  }
  for (std::size_t i = 0; i < gens.size(); ++i)
    for (std::size_t j = i + 1; j < gens.size(); ++j)
      if (!op_commutes(gens[i].second, gens[j].second, tol))
        throw NonCommutingGenerators("build_framework: generators '" + gens[i].first + "' and '" +
                                     gens[j].first + "' do not commute");

  BasicFramework<Op> fr;
  fr.ident = ident;
  fr.tol = tol;
  fr.generators = std::move(gens);
  detail::enumerate_atoms(fr.generators, 0, ident, tol, fr.atoms);

  // tripwire: the sign products must resolve the identity
  Op sum = fr.atoms.front();
  for (std::size_t a = 1; a < fr.atoms.size(); ++a) sum = sum + fr.atoms[a];
  Op gap = sum - ident;
  if (zero_gauge(gap) > 100 * tol.eps + 1e-12)
    throw Error("build_framework: minimal elements failed to decompose the identity");
  return fr;
}

/// phi: map a statement formula into the framework's Boolean algebra.
///   phi(~p) = I - phi(p), phi(p & q) = phi(p) phi(q),
///   phi(p | q) = phi(p) + phi(q) - phi(p) phi(q)
template <class Op>
Op phi(const Formula& f, const BasicFramework<Op>& fr) {
  switch (f.kind()) {
    case Formula::Kind::Elementary: {
      const Op* p = fr.find_generator(f.name());
      if (!p) throw UnknownStatementName("phi: unknown statement '" + f.name() + "'");
      return *p;
    }
    case Formula::Kind::Not: {
      Op c = phi(f.child(), fr);
      return fr.ident - c;
    }
    case Formula::Kind::And: {
      Op l = phi(f.left(), fr);
      Op r = phi(f.right(), fr);
      return l * r;
    }
    case Formula::Kind::Or: {
      Op l = phi(f.left(), fr);
      Op r = phi(f.right(), fr);
      Op lr = l * r;
      return l + r - lr;
    }
  }
  throw Error("phi: unreachable");
}

/// An element of the algebra: a 0/1 mask over the minimal elements together
/// with the projector it realizes.
template <class Op>
struct AlgebraElement {
  std::vector<bool> mask;
  Op realized;

  bool none() const {
    for (bool b : mask)
      if (b) return false;
    return true;
  }
};

template <class Op>
Op realize_mask(const std::vector<bool>& mask, const BasicFramework<Op>& fr) {
  Op acc = fr.ident - fr.ident;  // zero of the right shape
  for (std::size_t a = 0; a < fr.atoms.size(); ++a)
    if (mask[a]) acc = acc + fr.atoms[a];
  return acc;
}

/// Express a projector as a sum of minimal elements. Membership of atom a is
/// decided by P M^(a) = M^(a); the reconstruction must reproduce P or the
/// projector is not in the algebra.
template <class Op>
AlgebraElement<Op> decompose(const Op& p, const BasicFramework<Op>& fr) {
  if (!same_shape(p, fr.ident))
    throw DimensionMismatch("decompose: operand does not act on the framework's space");
  AlgebraElement<Op> el;
  el.mask.resize(fr.atoms.size(), false);
  for (std::size_t a = 0; a < fr.atoms.size(); ++a) {
    Op pm = p * fr.atoms[a];
    Op residual = pm - fr.atoms[a];
    el.mask[a] = op_zero(residual, fr.tol);
  }
  el.realized = realize_mask(el.mask, fr);
  Op gap = el.realized - p;
  if (zero_gauge(gap) > 100 * fr.tol.eps + 1e-12)
    throw NotInAlgebra("decompose: projector is not an element of the framework's algebra");
  return el;
}

// ---------------------------------------------------------------------------
// Compatibility of frameworks over a common space.
// ---------------------------------------------------------------------------

struct CompatibilityResult {
  bool compatible = false;
  std::string diagnostic;  // empty when compatible
};

/// Mutual compatibility: common carrier space, notational consistency of
/// shared generator names, and commutation of every projector of one algebra
/// with every projector of another (checked on minimal elements, which
/// suffices by bilinearity). Dimension and notation violations throw; a
/// commutation failure is an ordinary "no".
template <class Op>
CompatibilityResult check_frameworks_compatible(const std::vector<const BasicFramework<Op>*>& frameworks,
                                                Tolerance tol = {}) {
  for (std::size_t i = 0; i < frameworks.size(); ++i) {
    if (!same_shape(frameworks[i]->ident, frameworks.front()->ident))
      throw DimensionMismatch("frameworks_compatible: frameworks act on different spaces");
  }
  for (std::size_t i = 0; i < frameworks.size(); ++i)
    for (std::size_t j = i + 1; j < frameworks.size(); ++j)
      for (const auto& [name, p] : frameworks[i]->generators) {
        const Op* q = frameworks[j]->find_generator(name);
        if (q && !op_equal(p, *q, tol))
          throw NotationalConflict("frameworks_compatible: statement '" + name +
                                   "' is bound to different projectors");
      }
  for (std::size_t i = 0; i < frameworks.size(); ++i)
    for (std::size_t j = i + 1; j < frameworks.size(); ++j)
      for (std::size_t a = 0; a < frameworks[i]->atoms.size(); ++a)
        for (std::size_t b = 0; b < frameworks[j]->atoms.size(); ++b)
          if (!op_commutes(frameworks[i]->atoms[a], frameworks[j]->atoms[b], tol))
            return {false, "minimal element " + std::to_string(a) + " of framework #" +
                               std::to_string(i) + " does not commute with minimal element " +
                               std::to_string(b) + " of framework #" + std::to_string(j)};
  return {true, {}};
}

template <class Op>
bool frameworks_compatible(const std::vector<const BasicFramework<Op>*>& frameworks,
                           Tolerance tol = {}) {
  return check_frameworks_compatible(frameworks, tol).compatible;
}

template <class Op>
bool frameworks_compatible(std::initializer_list<const BasicFramework<Op>*> frameworks,
                           Tolerance tol = {}) {
  return frameworks_compatible(std::vector<const BasicFramework<Op>*>(frameworks), tol);
}

/// The smallest framework containing a compatible collection: built from the
/// union of all generators.
template <class Op>
BasicFramework<Op> generated_framework(const std::vector<const BasicFramework<Op>*>& frameworks,
                                       Tolerance tol = {},
                                       std::size_t max_generators = kDefaultMaxGenerators) {
  if (frameworks.empty()) throw EmptySpan("generated_framework: no frameworks given");
  CompatibilityResult c = check_frameworks_compatible(frameworks, tol);
  if (!c.compatible) throw IncompatibleFrameworks("generated_framework: " + c.diagnostic);
  std::vector<std::pair<std::string, Op>> merged;
  for (const auto* fr : frameworks)
    for (const auto& [name, p] : fr->generators) {
      bool seen = false;
      for (const auto& [n2, p2] : merged)
        if (n2 == name) {
          seen = true;
          break;
        }
      if (!seen) merged.emplace_back(name, p);
    }
  return build_basic_framework(std::move(merged), frameworks.front()->ident, tol, max_generators);
}

template <class Op>
BasicFramework<Op> generated_framework(std::initializer_list<const BasicFramework<Op>*> frameworks,
                                       Tolerance tol = {},
                                       std::size_t max_generators = kDefaultMaxGenerators) {
  return generated_framework(std::vector<const BasicFramework<Op>*>(frameworks), tol,
                             max_generators);
}

// ---------------------------------------------------------------------------
// Dense single-time instantiation.
// ---------------------------------------------------------------------------

using Framework = BasicFramework<Matrix>;

inline Framework build_framework(Eigen::Index dim,
                                 std::vector<std::pair<std::string, Matrix>> generators,
                                 Tolerance tol = {},
                                 std::size_t max_generators = kDefaultMaxGenerators) {
  if (dim < 1) throw DimensionMismatch("build_framework: dim must be positive");
  for (const auto& [name, p] : generators)
    if (!all_finite(p))
      throw NonProjectorGenerator("build_framework: generator '" + name + "' has non-finite entries");
  return build_basic_framework(std::move(generators), identity(dim), tol, max_generators);
}

inline bool frameworks_compatible_single_time(const std::vector<const Framework*>& frameworks,
                                              Tolerance tol = {}) {
  return frameworks_compatible(frameworks, tol);
}

}  // namespace histlogic
