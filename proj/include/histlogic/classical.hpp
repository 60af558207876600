#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "histlogic/errors.hpp"
#include "histlogic/formula.hpp"
#include "histlogic/linalg.hpp"

namespace histlogic {

/// A finite classical sample space: points 0..size-1 with non-negative
/// weights (all 1 unless stated, so weights count elements).
struct FiniteSampleSpace {
  std::size_t size = 0;
  std::vector<double> weights;  // empty means unit weights

  double weight_of(std::size_t point) const { return weights.empty() ? 1.0 : weights[point]; }
};

inline FiniteSampleSpace make_space(std::size_t size) {
  if (size < 1) throw DimensionMismatch("make_space: size must be positive");
  return {size, {}};
}

inline FiniteSampleSpace make_space(std::vector<double> weights) {
  if (weights.empty()) throw DimensionMismatch("make_space: size must be positive");
  for (double w : weights)
    if (!(w >= 0)) throw Error("make_space: weights must be non-negative");
  return {weights.size(), std::move(weights)};
}

/// n-fold product space, first factor slowest index (matches the tensor
/// product convention of the quantum side).
inline FiniteSampleSpace power_space(const FiniteSampleSpace& base, std::size_t n) {
  if (n < 1) throw DimensionMismatch("power_space: n must be positive");
  std::size_t size = 1;
  for (std::size_t k = 0; k < n; ++k) size *= base.size;
  if (base.weights.empty()) return {size, {}};
  std::vector<double> w(size, 1.0);
  for (std::size_t idx = 0; idx < size; ++idx) {
    std::size_t rest = idx;
    std::size_t stride = size / base.size;
    for (std::size_t k = 0; k < n; ++k) {
      w[idx] *= base.weight_of(rest / stride);
      rest %= stride;
      stride /= base.size;
    }
  }
  return {size, std::move(w)};
}

/// A subset of a sample space, as a membership mask.
struct Event {
  std::vector<bool> member;

  std::size_t size() const { return member.size(); }
  std::size_t count() const {
    std::size_t c = 0;
    for (bool b : member) c += b ? 1 : 0;
    return c;
  }
};

inline Event empty_event(const FiniteSampleSpace& space) {
  return {std::vector<bool>(space.size, false)};
}

inline Event full_event(const FiniteSampleSpace& space) {
  return {std::vector<bool>(space.size, true)};
}

inline Event event_of(const FiniteSampleSpace& space, const std::vector<std::size_t>& points) {
  Event e = empty_event(space);
  for (std::size_t p : points) {
    if (p >= space.size) throw DimensionMismatch("event_of: point out of range");
    e.member[p] = true;
  }
  return e;
}

template <class Pred>
Event event_where(const FiniteSampleSpace& space, Pred&& pred) {
  Event e = empty_event(space);
  for (std::size_t p = 0; p < space.size; ++p) e.member[p] = static_cast<bool>(pred(p));
  return e;
}

inline void require_same_space(const Event& a, const Event& b, const char* who) {
  if (a.size() != b.size())
    throw DimensionMismatch(std::string(who) + ": events live on different sample spaces");
}

inline Event complement_event(const Event& e) {
  Event r = e;
  for (std::size_t p = 0; p < r.member.size(); ++p) r.member[p] = !r.member[p];
  return r;
}

inline Event intersect(const Event& a, const Event& b) {
  require_same_space(a, b, "intersect");
  Event r = a;
  for (std::size_t p = 0; p < r.member.size(); ++p) r.member[p] = a.member[p] && b.member[p];
  return r;
}

inline Event unite(const Event& a, const Event& b) {
  require_same_space(a, b, "unite");
  Event r = a;
  for (std::size_t p = 0; p < r.member.size(); ++p) r.member[p] = a.member[p] || b.member[p];
  return r;
}

inline bool subset_of(const Event& a, const Event& b) {
  require_same_space(a, b, "subset_of");
  for (std::size_t p = 0; p < a.member.size(); ++p)
    if (a.member[p] && !b.member[p]) return false;
  return true;
}

inline double event_weight(const FiniteSampleSpace& space, const Event& e) {
  if (e.size() != space.size) throw DimensionMismatch("event_weight: event is not on this space");
  double w = 0;
  for (std::size_t p = 0; p < space.size; ++p)
    if (e.member[p]) w += space.weight_of(p);
  return w;
}

/// Map a formula onto a subset: ~ is complement, & intersection, | union.
inline Event classical_phi(const Formula& f, const std::map<std::string, Event>& bindings) {
  switch (f.kind()) {
    case Formula::Kind::Elementary: {
      auto it = bindings.find(f.name());
      if (it == bindings.end())
        throw UnknownStatementName("classical_phi: unbound statement '" + f.name() + "'");
      return it->second;
    }
    case Formula::Kind::Not: return complement_event(classical_phi(f.child(), bindings));
    case Formula::Kind::And:
      return intersect(classical_phi(f.left(), bindings), classical_phi(f.right(), bindings));
    case Formula::Kind::Or:
      return unite(classical_phi(f.left(), bindings), classical_phi(f.right(), bindings));
  }
  throw Error("classical_phi: unreachable");
}

/// Classical inference: the intersection A of the assumptions must be
/// contained in the conclusion. No assumptions means A = D.
inline bool classical_infer(const std::vector<Event>& assumptions, const Event& conclusion) {
  Event a = full_event({conclusion.size(), {}});
  for (const Event& e : assumptions) a = intersect(a, e);
  return subset_of(a, conclusion);
}

/// Pr(q | p) = W(q and p) / W(p).
inline double classical_cond_prob(const FiniteSampleSpace& space, const Event& q, const Event& p) {
  const double wp = event_weight(space, p);
  if (wp <= 0) throw ZeroWeightCondition("classical_cond_prob: condition has zero weight");
  return event_weight(space, intersect(q, p)) / wp;
}

/// Diagonal 0/1 projector with a 1 at each member point.
inline Matrix diagonal_embedding(const FiniteSampleSpace& space, const Event& e) {
  if (e.size() != space.size)
    throw DimensionMismatch("diagonal_embedding: event is not on this space");
  Matrix m = Matrix::Zero(space.size, space.size);
  for (std::size_t p = 0; p < space.size; ++p)
    if (e.member[p]) m(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p)) = 1.0;
  return m;
}

}  // namespace histlogic
