#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "histlogic/errors.hpp"
#include "histlogic/formula.hpp"
#include "histlogic/framework.hpp"
#include "histlogic/linalg.hpp"
#include "histlogic/logic.hpp"
#include "histlogic/tensorop.hpp"

namespace histlogic {

// ---------------------------------------------------------------------------
// Time grids and propagators.
// ---------------------------------------------------------------------------

struct TimeGrid {
  std::vector<double> times;  // strictly increasing, at least one

  std::size_t size() const { return times.size(); }
};

inline TimeGrid make_grid(std::vector<double> times) {
  if (times.empty()) throw GridMismatch("make_grid: a grid needs at least one time");
  for (std::size_t k = 1; k < times.size(); ++k)
    if (!(times[k - 1] < times[k]))
      throw GridMismatch("make_grid: times must be strictly increasing");
  return {std::move(times)};
}

inline bool same_time(double a, double b) {
  return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
}

/// Unitary dynamics over a time grid, stored as the forward step unitaries
/// U_k evolving t_k -> t_{k+1}. The paper-facing transition T(t_a, t_b) for
/// a <= b (which appears in chain operators) is the adjoint of the composed
/// forward evolution; the all-identity history test K(I~) = T(t_1, t_n) pins
/// this convention.
struct PropagatorSet {
  Eigen::Index dim = 0;
  TimeGrid grid;
  std::vector<Matrix> steps;  // size grid.size() - 1

  std::size_t num_times() const { return grid.size(); }

  /// T(t_k, t_{k+1}), the backward transition entering Eq. of the chain.
  Matrix back_step(std::size_t k) const { return steps.at(k).adjoint(); }

  /// T(t_a, t_b) for a <= b.
  Matrix transition_back(std::size_t a, std::size_t b) const {
    if (a > b || b >= num_times()) throw GridMismatch("transition_back: bad indices");
    Matrix t = identity(dim);
    for (std::size_t k = a; k < b; ++k) t = t * back_step(k);
    return t;
  }

  /// Forward evolution t_a -> t_b (a <= b): U_{b-1} ... U_a.
  Matrix forward_span(std::size_t a, std::size_t b) const {
    if (a > b || b >= num_times()) throw GridMismatch("forward_span: bad indices");
    Matrix u = identity(dim);
    for (std::size_t k = a; k < b; ++k) u = steps[k] * u;
    return u;
  }

  std::vector<Eigen::Index> tensor_slots() const {
    return std::vector<Eigen::Index>(num_times(), dim);
  }
};

inline PropagatorSet propagators_from_hamiltonian(const Matrix& h, TimeGrid grid,
                                                  Tolerance tol = {}) {
  require_square(h, "propagators_from_hamiltonian");
  if (!is_hermitian(h, tol))
    throw NonHermitianInput("propagators_from_hamiltonian: Hamiltonian must be Hermitian");
  PropagatorSet p;
  p.dim = h.rows();
  p.grid = std::move(grid);
  for (std::size_t k = 0; k + 1 < p.grid.size(); ++k)
    p.steps.push_back(mat_exp_propagator(h, p.grid.times[k + 1] - p.grid.times[k], tol));
  return p;
}

inline PropagatorSet propagators_explicit(Eigen::Index dim, TimeGrid grid,
                                          std::vector<Matrix> steps, Tolerance tol = {}) {
  if (dim < 1) throw DimensionMismatch("propagators_explicit: dim must be positive");
  if (steps.size() + 1 != grid.size())
    throw CountMismatch("propagators_explicit: need exactly " + std::to_string(grid.size() - 1) +
                        " steps, got " + std::to_string(steps.size()));
  for (std::size_t k = 0; k < steps.size(); ++k) {
    if (steps[k].rows() != dim || steps[k].cols() != dim)
      throw DimensionMismatch("propagators_explicit: step " + std::to_string(k) +
                              " has the wrong dimension");
    if (!is_unitary(steps[k], tol))
      throw NonUnitaryStep("propagators_explicit: step " + std::to_string(k) +
                           " is not unitary within tolerance");
  }
  PropagatorSet p;
  p.dim = dim;
  p.grid = std::move(grid);
  p.steps = std::move(steps);
  return p;
}

// ---------------------------------------------------------------------------
// Histories.
// ---------------------------------------------------------------------------

struct SimpleHistory {
  std::vector<Matrix> projectors;  // one per grid time
};

struct GeneralizedHistory {
  Eigen::Index dim = 0;       // dimension of one copy of the base space
  std::size_t num_times = 0;  // tensor factors
  Matrix projector;           // dim^num_times square
};

/// A history: either per-time projectors (simple) or an arbitrary projector
/// on the tensor power of the base space (generalized).
class History {
 public:
  static History simple(std::vector<Matrix> projectors) {
    if (projectors.empty()) throw EmptySpan("History::simple: no projectors");
    return History(SimpleHistory{std::move(projectors)});
  }
  static History generalized(Eigen::Index dim, std::size_t num_times, Matrix projector) {
    Eigen::Index want = 1;
    for (std::size_t k = 0; k < num_times; ++k) want *= dim;
    require_square(projector, "History::generalized");
    if (projector.rows() != want)
      throw DimensionMismatch("History::generalized: projector is " +
                              std::to_string(projector.rows()) + "-dimensional, expected " +
                              std::to_string(want));
    return History(GeneralizedHistory{dim, num_times, std::move(projector)});
  }

  bool is_simple() const { return std::holds_alternative<SimpleHistory>(v_); }
  const SimpleHistory& as_simple() const { return std::get<SimpleHistory>(v_); }
  const GeneralizedHistory& as_generalized() const { return std::get<GeneralizedHistory>(v_); }

 private:
  explicit History(std::variant<SimpleHistory, GeneralizedHistory> v) : v_(std::move(v)) {}
  std::variant<SimpleHistory, GeneralizedHistory> v_;
};

struct GeneralizedLiftUnsupported : Error {
  using Error::Error;
};

/// Pad a simple history onto a finer grid with identities at the new times.
inline History lift_history(const History& h, const TimeGrid& from, const TimeGrid& to) {
  if (!h.is_simple())
    throw GeneralizedLiftUnsupported(
        "lift_history: only simple histories can be padded onto a finer grid");
  const auto& sh = h.as_simple();
  if (sh.projectors.size() != from.size())
    throw CountMismatch("lift_history: history does not match its grid");
  const Eigen::Index dim = sh.projectors.front().rows();
  std::vector<Matrix> out;
  std::size_t src = 0;
  for (double t : to.times) {
    if (src < from.size() && same_time(from.times[src], t))
      out.push_back(sh.projectors[src++]);
    else
      out.push_back(identity(dim));
  }
  if (src != from.size())
    throw GridMismatch("lift_history: target grid is not a superset of the source grid");
  return History::simple(std::move(out));
}

/// The history's projector on the tensor power space (dense).
inline Matrix history_projector(const History& h, Eigen::Index guard = kDenseTensorGuard) {
  if (!h.is_simple()) return h.as_generalized().projector;
  const auto& sh = h.as_simple();
  Eigen::Index dim = 1;
  for (const Matrix& p : sh.projectors) dim *= p.rows();
  if (dim > guard)
    throw CapacityExceeded("history_projector: dense tensor-space dimension " +
                           std::to_string(dim) + " exceeds the guard");
  return tensor(sh.projectors);
}

inline TensorOp history_to_op(const History& h, const PropagatorSet& props) {
  if (h.is_simple()) {
    const auto& sh = h.as_simple();
    if (sh.projectors.size() != props.num_times())
      throw CountMismatch("history: expected one projector per grid time (" +
                          std::to_string(props.num_times()) + "), got " +
                          std::to_string(sh.projectors.size()));
    for (const Matrix& p : sh.projectors)
      if (p.rows() != props.dim || p.cols() != props.dim)
        throw DimensionMismatch("history: projector dimension does not match the model");
    return TensorOp::product_term(sh.projectors);
  }
  const auto& gh = h.as_generalized();
  if (gh.dim != props.dim || gh.num_times != props.num_times())
    throw DimensionMismatch("history: generalized projector does not match the model layout");
  return TensorOp::whole(props.tensor_slots(), gh.projector);
}

// ---------------------------------------------------------------------------
// Chain operators and the consistency functional.
// ---------------------------------------------------------------------------

/// K for a simple history: P_1 T(t_1,t_2) P_2 ... T(t_{n-1},t_n) P_n.
inline Matrix chain_operator_simple(const History& h, const PropagatorSet& props) {
  if (!h.is_simple()) throw NonProjectorInput("chain_operator_simple: history is not simple");
  const auto& sh = h.as_simple();
  if (sh.projectors.size() != props.num_times())
    throw CountMismatch("chain_operator_simple: history does not match the grid");
  for (const Matrix& p : sh.projectors)
    if (p.rows() != props.dim || p.cols() != props.dim)
      throw DimensionMismatch("chain_operator_simple: projector dimension mismatch");
  Matrix k = sh.projectors[0];
  for (std::size_t m = 1; m < sh.projectors.size(); ++m)
    k = k * props.back_step(m - 1) * sh.projectors[m];
  return k;
}

/// K for an arbitrary operator on the tensor power space (the multi-index
/// contraction): <i|K(A)|j> contracts A against the backward transitions.
inline Matrix chain_operator_general(const Matrix& a_tilde, const PropagatorSet& props) {
  const Eigen::Index d = props.dim;
  const std::size_t n = props.num_times();
  Eigen::Index big = 1;
  for (std::size_t k = 0; k < n; ++k) big *= d;
  if (a_tilde.rows() != big || a_tilde.cols() != big)
    throw DimensionMismatch("chain_operator_general: operator is " +
                            std::to_string(a_tilde.rows()) + "-dimensional, expected " +
                            std::to_string(big));
  if (n == 1) return a_tilde;

  // W = T(t_1,t_2) x T(t_2,t_3) x ... x T(t_{n-1},t_n), first factor slowest.
  std::vector<Matrix> backs;
  backs.reserve(n - 1);
  for (std::size_t m = 0; m + 1 < n; ++m) backs.push_back(props.back_step(m));
  Matrix w = tensor(backs);

  const Eigen::Index sub = big / d;  // d^{n-1}
  Matrix out(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    Matrix s = w * a_tilde.middleRows(i * sub, sub);  // s(L, c)
    for (Eigen::Index j = 0; j < d; ++j) {
      Complex acc = 0.0;
      for (Eigen::Index l = 0; l < sub; ++l) acc += s(l, l * d + j);
      out(i, j) = acc;
    }
  }
  return out;
}

/// K applied to a tensor-sum operator: product terms use the alternating
/// chain form, whole-space terms fall back to the general contraction.
inline Matrix chain_operator(const TensorOp& op, const PropagatorSet& props) {
  if (op.slots() != props.tensor_slots())
    throw DimensionMismatch("chain_operator: operand does not live on the model's tensor space");
  Matrix acc = Matrix::Zero(props.dim, props.dim);
  for (const TensorTerm& term : op.terms()) {
    Matrix k;
    if (op.slotwise(term)) {
      k = term.factors[0];
      for (std::size_t m = 1; m < term.factors.size(); ++m)
        k = k * props.back_step(m - 1) * term.factors[m];
    } else {
      k = chain_operator_general(term.factors[0], props);
    }
    acc += term.coeff * k;
  }
  return acc;
}

/// C(A, B) = Tr[K(A)^dagger K(B)].
inline Complex consistency_functional(const Matrix& a_tilde, const Matrix& b_tilde,
                                      const PropagatorSet& props) {
  if (a_tilde.rows() != b_tilde.rows())
    throw DimensionMismatch("consistency_functional: operand dimensions differ");
  Matrix ka = chain_operator_general(a_tilde, props);
  Matrix kb = chain_operator_general(b_tilde, props);
  return ka.conjugate().cwiseProduct(kb).sum();
}

inline Complex consistency_functional(const TensorOp& a, const TensorOp& b,
                                      const PropagatorSet& props) {
  Matrix ka = chain_operator(a, props);
  Matrix kb = chain_operator(b, props);
  return ka.conjugate().cwiseProduct(kb).sum();
}

// ---------------------------------------------------------------------------
// Consistent families.
// ---------------------------------------------------------------------------

struct FamilyOptions {
  Tolerance tol{};
  double eps_consistency = 1e-8;  // relative to the largest diagonal weight
  std::size_t max_generators = kDefaultMaxGenerators;
  Eigen::Index dense_guard = kDenseTensorGuard;
};

struct ConsistencyReport {
  Matrix gram;  // C(M^a, M^b) over the minimal elements
  std::vector<double> weights;
  double max_offdiag = 0.0;
  double threshold = 0.0;
  bool consistent = true;

  const char* verdict() const { return consistent ? "Consistent" : "Inconsistent"; }
};

struct HistoryFamily {
  PropagatorSet props;
  BasicFramework<TensorOp> framework;
  ConsistencyReport report;
  FamilyOptions options;
};

namespace detail {

inline ConsistencyReport consistency_report(const BasicFramework<TensorOp>& fr,
                                            const PropagatorSet& props,
                                            const FamilyOptions& opt) {
  const std::size_t m = fr.atoms.size();
  std::vector<Matrix> chains;
  chains.reserve(m);
  for (const TensorOp& atom : fr.atoms) chains.push_back(chain_operator(atom, props));

  ConsistencyReport rep;
  rep.gram = Matrix(m, m);
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = a; b < m; ++b) {
      Complex c = chains[a].conjugate().cwiseProduct(chains[b]).sum();
      rep.gram(a, b) = c;
      rep.gram(b, a) = std::conj(c);
    }
  rep.weights.resize(m);
  double max_weight = 0.0;
  for (std::size_t a = 0; a < m; ++a) {
    rep.weights[a] = rep.gram(a, a).real();
    max_weight = std::max(max_weight, rep.weights[a]);
  }
  rep.max_offdiag = 0.0;
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b)
      if (a != b) rep.max_offdiag = std::max(rep.max_offdiag, std::abs(rep.gram(a, b)));
  rep.threshold = opt.eps_consistency * std::max(1.0, max_weight);
  rep.consistent = rep.max_offdiag <= rep.threshold;
  return rep;
}

}  // namespace detail

/// Build a family of histories: a framework of commuting history projectors
/// on the tensor power space, plus its consistency report.
inline HistoryFamily build_family_ops(PropagatorSet props,
                                      std::vector<std::pair<std::string, TensorOp>> generators,
                                      FamilyOptions opt = {}) {
  TensorOp ident = TensorOp::identity_on(props.tensor_slots());
  for (const auto& [name, op] : generators)
    if (op.slots() != ident.slots())
      throw DimensionMismatch("build_family: generator '" + name +
                              "' does not live on the model's tensor space");
  HistoryFamily fam;
  fam.framework =
      build_basic_framework(std::move(generators), ident, opt.tol, opt.max_generators);
  fam.report = detail::consistency_report(fam.framework, props, opt);
  fam.props = std::move(props);
  fam.options = opt;
  return fam;
}

inline HistoryFamily build_family(PropagatorSet props,
                                  std::vector<std::pair<std::string, History>> generators,
                                  FamilyOptions opt = {}) {
  std::vector<std::pair<std::string, TensorOp>> ops;
  ops.reserve(generators.size());
  for (auto& [name, h] : generators) ops.emplace_back(name, history_to_op(h, props));
  return build_family_ops(std::move(props), std::move(ops), opt);
}

// ---------------------------------------------------------------------------
// Weights, probabilities, inference.
// ---------------------------------------------------------------------------

inline double weight_of_mask(const HistoryFamily& fam, const std::vector<bool>& mask) {
  // exact bilinear form: W(P) = C(P, P) = sum over member pairs of the Gram
  Complex acc = 0.0;
  for (std::size_t a = 0; a < mask.size(); ++a) {
    if (!mask[a]) continue;
    for (std::size_t b = 0; b < mask.size(); ++b)
      if (mask[b]) acc += fam.report.gram(a, b);
  }
  return std::max(0.0, acc.real());
}

inline void require_consistent(const HistoryFamily& fam, const char* who) {
  if (!fam.report.consistent)
    throw InconsistentFamily(std::string(who) + ": the family is not consistent (max off-diagonal " +
                             std::to_string(fam.report.max_offdiag) + ")");
}

inline double weight(const HistoryFamily& fam, const TensorOp& p) {
  require_consistent(fam, "weight");
  return weight_of_mask(fam, decompose(p, fam.framework).mask);
}

inline double weight(const HistoryFamily& fam, const History& h) {
  return weight(fam, history_to_op(h, fam.props));
}

inline double weight(const HistoryFamily& fam, const Formula& f) {
  require_consistent(fam, "weight");
  TensorOp p = phi(f, fam.framework);
  return weight_of_mask(fam, decompose(p, fam.framework).mask);
}

namespace detail {

inline std::vector<bool> mask_and(const std::vector<bool>& a, const std::vector<bool>& b) {
  std::vector<bool> out(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) out[k] = a[k] && b[k];
  return out;
}

}  // namespace detail

inline double conditional_probability_masks(const HistoryFamily& fam, const std::vector<bool>& q,
                                            const std::vector<bool>& p) {
  require_consistent(fam, "conditional_probability");
  const double wp = weight_of_mask(fam, p);
  if (wp <= fam.options.tol.eps)
    throw ZeroWeightCondition("conditional_probability: condition has zero weight");
  return weight_of_mask(fam, detail::mask_and(q, p)) / wp;
}

inline double conditional_probability(const HistoryFamily& fam, const TensorOp& q,
                                      const TensorOp& p) {
  require_consistent(fam, "conditional_probability");
  return conditional_probability_masks(fam, decompose(q, fam.framework).mask,
                                       decompose(p, fam.framework).mask);
}

inline double conditional_probability(const HistoryFamily& fam, const Formula& q,
                                      const Formula& p) {
  require_consistent(fam, "conditional_probability");
  return conditional_probability_masks(fam, decompose(phi(q, fam.framework), fam.framework).mask,
                                       decompose(phi(p, fam.framework), fam.framework).mask);
}

inline double conditional_probability(const HistoryFamily& fam, const History& q,
                                      const History& p) {
  return conditional_probability(fam, history_to_op(q, fam.props), history_to_op(p, fam.props));
}

// ---------------------------------------------------------------------------
// Compatibility of families and multi-time inference.
// ---------------------------------------------------------------------------

struct FamilyMergeResult {
  bool compatible = false;
  std::string diagnostic;
  std::optional<HistoryFamily> generated;  // present on success (and on a
                                           // consistency failure, for inspection)
};

namespace detail {

struct UnionGrid {
  TimeGrid grid;
  std::vector<std::vector<std::size_t>> placements;  // per family: old slot -> union slot
};

inline std::optional<UnionGrid> merge_grids(const std::vector<const HistoryFamily*>& families,
                                            std::string& diagnostic) {
  std::vector<double> all;
  for (const auto* f : families)
    for (double t : f->props.grid.times) all.push_back(t);
  std::sort(all.begin(), all.end());
  std::vector<double> merged;
  for (double t : all)
    if (merged.empty() || !same_time(merged.back(), t)) merged.push_back(t);

  UnionGrid ug;
  ug.grid = TimeGrid{merged};
  for (const auto* f : families) {
    std::vector<std::size_t> placement;
    for (double t : f->props.grid.times) {
      std::size_t idx = merged.size();
      for (std::size_t k = 0; k < merged.size(); ++k)
        if (same_time(merged[k], t)) {
          idx = k;
          break;
        }
      if (idx == merged.size()) {
        diagnostic = "grid conflict: time lost in merge";
        return std::nullopt;
      }
      placement.push_back(idx);
    }
    ug.placements.push_back(std::move(placement));
  }
  return ug;
}

inline std::optional<PropagatorSet> merge_propagators(
    const std::vector<const HistoryFamily*>& families, const UnionGrid& ug,
    std::string& diagnostic) {
  const Eigen::Index dim = families.front()->props.dim;
  const std::size_t n = ug.grid.size();
  std::vector<Matrix> steps(n > 0 ? n - 1 : 0);
  std::vector<bool> have(steps.size(), false);

  for (std::size_t k = 0; k + 1 < n; ++k) {
    for (std::size_t f = 0; f < families.size(); ++f) {
      const auto& placement = ug.placements[f];
      for (std::size_t s = 0; s + 1 < placement.size(); ++s) {
        if (placement[s] == k && placement[s + 1] == k + 1) {
          const Matrix& candidate = families[f]->props.steps[s];
          if (!have[k]) {
            steps[k] = candidate;
            have[k] = true;
          } else if (max_norm(Matrix(steps[k] - candidate)) > 1e-8) {
            diagnostic = "grid conflict: families disagree on the propagator over [" +
                         std::to_string(ug.grid.times[k]) + ", " +
                         std::to_string(ug.grid.times[k + 1]) + "]";
            return std::nullopt;
          }
        }
      }
    }
    if (!have[k]) {
      diagnostic = "grid conflict: no family resolves the propagator over [" +
                   std::to_string(ug.grid.times[k]) + ", " + std::to_string(ug.grid.times[k + 1]) +
                   "]";
      return std::nullopt;
    }
  }

  PropagatorSet merged;
  merged.dim = dim;
  merged.grid = ug.grid;
  merged.steps = std::move(steps);

  // every family's coarser steps must equal the composed union steps
  for (std::size_t f = 0; f < families.size(); ++f) {
    const auto& placement = ug.placements[f];
    for (std::size_t s = 0; s + 1 < placement.size(); ++s) {
      Matrix composed = merged.forward_span(placement[s], placement[s + 1]);
      if (max_norm(Matrix(composed - families[f]->props.steps[s])) > 1e-8) {
        diagnostic = "grid conflict: family #" + std::to_string(f) +
                     " disagrees with the refined propagators";
        return std::nullopt;
      }
    }
  }
  return merged;
}

}  // namespace detail

/// Check whether families can enter one argument: common space, mergeable
/// grids and dynamics, notational consistency, cross-family commutation, and
/// consistency of the generated family. Returns the generated family.
inline FamilyMergeResult families_compatible(const std::vector<const HistoryFamily*>& families,
                                             std::optional<FamilyOptions> opt_in = {}) {
  FamilyMergeResult result;
  if (families.empty()) {
    result.diagnostic = "no families given";
    return result;
  }
  FamilyOptions opt = opt_in.value_or(families.front()->options);
  for (const auto* f : families)
    if (f->props.dim != families.front()->props.dim) {
      result.diagnostic = "grid conflict: families use different base Hilbert spaces";
      return result;
    }

  auto ug = detail::merge_grids(families, result.diagnostic);
  if (!ug) return result;
  auto props = detail::merge_propagators(families, *ug, result.diagnostic);
  if (!props) return result;

  const auto slots = props->tensor_slots();
  std::vector<std::vector<std::pair<std::string, TensorOp>>> lifted(families.size());
  for (std::size_t f = 0; f < families.size(); ++f)
    for (const auto& [name, g] : families[f]->framework.generators)
      lifted[f].emplace_back(name, g.lifted(slots, ug->placements[f], opt.dense_guard));

  // notational consistency across families
  for (std::size_t f = 0; f < families.size(); ++f)
    for (std::size_t g = f + 1; g < families.size(); ++g)
      for (const auto& [name_a, op_a] : lifted[f])
        for (const auto& [name_b, op_b] : lifted[g])
          if (name_a == name_b && !op_equal(op_a, op_b, opt.tol)) {
            result.diagnostic = "notation conflict: statement '" + name_a +
                                "' is bound to different history projectors";
            return result;
          }

  // cross-family commutation, checked on the lifted minimal elements
  for (std::size_t f = 0; f < families.size(); ++f)
    for (std::size_t g = f + 1; g < families.size(); ++g) {
      std::vector<TensorOp> atoms_f, atoms_g;
      for (const TensorOp& a : families[f]->framework.atoms)
        atoms_f.push_back(a.lifted(slots, ug->placements[f], opt.dense_guard));
      for (const TensorOp& a : families[g]->framework.atoms)
        atoms_g.push_back(a.lifted(slots, ug->placements[g], opt.dense_guard));
      for (std::size_t a = 0; a < atoms_f.size(); ++a)
        for (std::size_t b = 0; b < atoms_g.size(); ++b)
          if (!op_commutes(atoms_f[a], atoms_g[b], opt.tol)) {
            result.diagnostic = "non-commutation: minimal element " + std::to_string(a) +
                                " of family #" + std::to_string(f) +
                                " does not commute with minimal element " + std::to_string(b) +
                                " of family #" + std::to_string(g);
            return result;
          }
    }

  std::vector<std::pair<std::string, TensorOp>> merged_gens;
  for (std::size_t f = 0; f < families.size(); ++f)
    for (auto& [name, op] : lifted[f]) {
      bool seen = false;
      for (const auto& [n2, o2] : merged_gens)
        if (n2 == name) {
          seen = true;
          break;
        }
      if (!seen) merged_gens.emplace_back(name, op);
    }

  HistoryFamily generated;
  try {
    generated = build_family_ops(std::move(*props), std::move(merged_gens), opt);
  } catch (const NonCommutingGenerators& e) {
    result.diagnostic = std::string("non-commutation: ") + e.what();
    return result;
  }
  const bool consistent = generated.report.consistent;
  result.generated = std::move(generated);
  if (!consistent) {
    result.diagnostic = "consistency failure: the generated family violates the consistency "
                        "condition (max off-diagonal " +
                        std::to_string(result.generated->report.max_offdiag) + ")";
    return result;
  }
  result.compatible = true;
  return result;
}

/// A statement located in a family: the projector must be an element of the
/// family's algebra.
struct FamilyEvent {
  const HistoryFamily* family = nullptr;
  TensorOp projector;
};

inline FamilyEvent family_event(const HistoryFamily& fam, const Formula& f) {
  return {&fam, phi(f, fam.framework)};
}

inline FamilyEvent family_event(const HistoryFamily& fam, const History& h) {
  return {&fam, history_to_op(h, fam.props)};
}

struct HistoryInference {
  bool valid = false;
  InferenceReason reason = InferenceReason::NotEntailed;
  double assumption_weight = 0.0;
  std::string detail;
};

/// Multi-time inference: the union of all involved families must be
/// compatible, the product of the assumption projectors must have positive
/// weight, and every conclusion must hold with conditional probability one.
inline HistoryInference infer_histories(const std::vector<FamilyEvent>& assumptions,
                                        const std::vector<FamilyEvent>& conclusions,
                                        std::optional<FamilyOptions> opt_in = {}) {
  HistoryInference v;
  std::vector<const HistoryFamily*> families;
  auto add_family = [&families](const HistoryFamily* f) {
    for (const auto* g : families)
      if (g == f) return;
    families.push_back(f);
  };
  for (const auto& e : assumptions) add_family(e.family);
  for (const auto& e : conclusions) add_family(e.family);
  if (families.empty()) {
    v.valid = true;
    v.reason = InferenceReason::Proven;
    return v;
  }
  FamilyOptions opt = opt_in.value_or(families.front()->options);

  // every event must belong to the algebra of its own family
  for (const auto& e : assumptions) decompose(e.projector, e.family->framework);
  for (const auto& e : conclusions) decompose(e.projector, e.family->framework);

  FamilyMergeResult merge = families_compatible(families, opt);
  if (!merge.compatible) {
    v.reason = InferenceReason::IncompatibleFrameworks;
    v.detail = merge.diagnostic;
    return v;
  }
  const HistoryFamily& joint = *merge.generated;

  // lift events onto the union grid and decompose in the joint algebra
  auto joint_mask = [&](const FamilyEvent& e) {
    std::vector<std::size_t> placement;
    for (double t : e.family->props.grid.times)
      for (std::size_t k = 0; k < joint.props.grid.size(); ++k)
        if (same_time(joint.props.grid.times[k], t)) {
          placement.push_back(k);
          break;
        }
    TensorOp lifted = e.projector.lifted(joint.props.tensor_slots(), placement, opt.dense_guard);
    return decompose(lifted, joint.framework).mask;
  };

  std::vector<bool> a_mask(joint.framework.atoms.size(), true);
  for (const auto& e : assumptions) a_mask = detail::mask_and(a_mask, joint_mask(e));
  const double wa = weight_of_mask(joint, a_mask);
  v.assumption_weight = wa;
  if (wa <= opt.tol.eps) {
    v.reason = InferenceReason::ContradictoryAssumptions;
    v.detail = "the assumptions have zero weight";
    return v;
  }
  for (std::size_t j = 0; j < conclusions.size(); ++j) {
    std::vector<bool> c_mask = joint_mask(conclusions[j]);
    const double pr = weight_of_mask(joint, detail::mask_and(c_mask, a_mask)) / wa;
    if (std::abs(pr - 1.0) > opt.tol.eps) {
      v.reason = InferenceReason::NotEntailed;
      v.detail = "conclusion #" + std::to_string(j + 1) +
                 " holds with probability " + std::to_string(pr) + " rather than 1";
      return v;
    }
  }
  v.valid = true;
  v.reason = InferenceReason::Proven;
  return v;
}

}  // namespace histlogic
