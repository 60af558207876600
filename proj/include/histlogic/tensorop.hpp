#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "histlogic/errors.hpp"
#include "histlogic/linalg.hpp"

namespace histlogic {

/// Default cap on materializing an operator of the tensor space as one dense
/// matrix. The sum-of-products representation below has no such limit.
inline constexpr Eigen::Index kDenseTensorGuard = 4096;

inline constexpr std::size_t kMaxTensorTerms = 1u << 16;

/// One summand: coeff * (F_1 x F_2 x ... x F_n). A term either carries one
/// factor per slot, or a single factor on the whole product space (used for
/// operators, such as generalized histories, with no product structure).
struct TensorTerm {
  Complex coeff{1.0, 0.0};
  std::vector<Matrix> factors;
};

/// An operator on a tensor product of finite-dimensional spaces, kept as a
/// sum of product terms. Products, sums and adjoints stay in this form, so
/// spaces far beyond dense reach (e.g. 18^4) remain workable as long as the
/// operators involved are structured. The "is zero" gauge is the Frobenius
/// norm, which the representation supports exactly.
class TensorOp {
 public:
  TensorOp() = default;

  static TensorOp zero(std::vector<Eigen::Index> slots) {
    TensorOp t;
    t.slots_ = std::move(slots);
    t.check_slots();
    return t;
  }

  static TensorOp identity_on(std::vector<Eigen::Index> slots) {
    TensorOp t = zero(std::move(slots));
    TensorTerm term;
    term.coeff = 1.0;
    for (Eigen::Index d : t.slots_) term.factors.push_back(identity(d));
    t.terms_.push_back(std::move(term));
    return t;
  }

  /// coeff * (factors[0] x factors[1] x ...), slot dims taken from the factors
  static TensorOp product_term(std::vector<Matrix> factors, Complex coeff = 1.0) {
    if (factors.empty()) throw EmptySpan("TensorOp: a product term needs factors");
    TensorOp t;
    for (const Matrix& f : factors) {
      require_square(f, "TensorOp");
      t.slots_.push_back(f.rows());
    }
    t.terms_.push_back(TensorTerm{coeff, std::move(factors)});
    return t;
  }

  /// A dense operator on the whole product space.
  static TensorOp whole(std::vector<Eigen::Index> slots, Matrix m, Complex coeff = 1.0) {
    TensorOp t = zero(std::move(slots));
    require_square(m, "TensorOp::whole");
    if (m.rows() != t.ambient_dim())
      throw DimensionMismatch("TensorOp::whole: matrix does not match the product space (" +
                              std::to_string(m.rows()) + " vs " + std::to_string(t.ambient_dim()) +
                              ")");
    t.terms_.push_back(TensorTerm{coeff, {std::move(m)}});
    return t;
  }

  const std::vector<Eigen::Index>& slots() const { return slots_; }
  const std::vector<TensorTerm>& terms() const { return terms_; }
  std::size_t num_slots() const { return slots_.size(); }

  Eigen::Index ambient_dim() const {
    Eigen::Index d = 1;
    for (Eigen::Index s : slots_) d *= s;
    return d;
  }

  bool slotwise(const TensorTerm& term) const {
    return term.factors.size() == slots_.size() && slots_.size() >= 1;
  }

  /// Materialize as a dense matrix on the product space.
  Matrix densify(Eigen::Index guard = kDenseTensorGuard) const {
    const Eigen::Index dim = ambient_dim();
    if (dim > guard)
      throw CapacityExceeded("TensorOp::densify: product-space dimension " + std::to_string(dim) +
                             " exceeds the dense guard " + std::to_string(guard));
    Matrix out = Matrix::Zero(dim, dim);
    for (const TensorTerm& term : terms_) out += term.coeff * dense_term(term, guard);
    return out;
  }

  TensorOp adjointed() const {
    TensorOp t = *this;
    for (TensorTerm& term : t.terms_) {
      term.coeff = std::conj(term.coeff);
      for (Matrix& f : term.factors) f = f.adjoint().eval();
    }
    return t;
  }

  friend TensorOp operator*(const TensorOp& a, const TensorOp& b) {
    a.require_same_slots(b, "operator*");
    TensorOp out = zero(a.slots_);
    out.terms_.reserve(a.terms_.size() * b.terms_.size());
    for (const TensorTerm& s : a.terms_)
      for (const TensorTerm& t : b.terms_) {
        TensorTerm r;
        r.coeff = s.coeff * t.coeff;
        if (a.slotwise(s) && b.slotwise(t)) {
          r.factors.reserve(s.factors.size());
          for (std::size_t k = 0; k < s.factors.size(); ++k)
            r.factors.push_back(s.factors[k] * t.factors[k]);
        } else {
          Matrix ds = a.dense_term(s, kMaxMatrixDim);
          Matrix dt = b.dense_term(t, kMaxMatrixDim);
          r.factors.push_back(ds * dt);
        }
        out.terms_.push_back(std::move(r));
      }
    out.simplify();
    return out;
  }

  friend TensorOp operator+(const TensorOp& a, const TensorOp& b) {
    a.require_same_slots(b, "operator+");
    TensorOp out = a;
    out.terms_.insert(out.terms_.end(), b.terms_.begin(), b.terms_.end());
    out.simplify();
    return out;
  }

  friend TensorOp operator-(const TensorOp& a, const TensorOp& b) { return a + (-1.0) * b; }

  friend TensorOp operator*(Complex c, const TensorOp& a) {
    TensorOp out = a;
    for (TensorTerm& t : out.terms_) t.coeff *= c;
    return out;
  }

  friend TensorOp operator*(double c, const TensorOp& a) { return Complex(c, 0.0) * a; }

  /// Tr[this^dagger other]
  Complex frobenius_inner(const TensorOp& other) const {
    require_same_slots(other, "frobenius_inner");
    Complex acc = 0.0;
    for (const TensorTerm& s : terms_)
      for (const TensorTerm& t : other.terms_) {
        Complex pair;
        if (slotwise(s) && other.slotwise(t)) {
          pair = 1.0;
          for (std::size_t k = 0; k < s.factors.size(); ++k) {
            pair *= s.factors[k].conjugate().cwiseProduct(t.factors[k]).sum();
            if (pair == Complex(0.0, 0.0)) break;
          }
        } else {
          Matrix ds = dense_term(s, kMaxMatrixDim);
          Matrix dt = other.dense_term(t, kMaxMatrixDim);
          pair = ds.conjugate().cwiseProduct(dt).sum();
        }
        acc += std::conj(s.coeff) * t.coeff * pair;
      }
    return acc;
  }

  double frobenius_norm() const {
    double v = frobenius_inner(*this).real();
    return v > 0 ? std::sqrt(v) : 0.0;
  }

  /// Embed into a larger slot structure: old slot k moves to position
  /// placement[k]; every other new slot is filled with the identity.
  TensorOp lifted(const std::vector<Eigen::Index>& new_slots,
                  const std::vector<std::size_t>& placement,
                  Eigen::Index dense_guard = kDenseTensorGuard) const {
    if (placement.size() != slots_.size())
      throw DimensionMismatch("TensorOp::lifted: placement does not cover the old slots");
    for (std::size_t k = 0; k < placement.size(); ++k) {
      if (placement[k] >= new_slots.size() || new_slots[placement[k]] != slots_[k])
        throw DimensionMismatch("TensorOp::lifted: slot mapping is inconsistent");
      if (k > 0 && placement[k] <= placement[k - 1])
        throw DimensionMismatch("TensorOp::lifted: placement must be strictly increasing");
    }
    TensorOp out = zero(new_slots);
    for (const TensorTerm& term : terms_) {
      TensorTerm lifted_term;
      lifted_term.coeff = term.coeff;
      if (slotwise(term)) {
        std::size_t old_k = 0;
        for (std::size_t s = 0; s < new_slots.size(); ++s) {
          if (old_k < placement.size() && placement[old_k] == s)
            lifted_term.factors.push_back(term.factors[old_k++]);
          else
            lifted_term.factors.push_back(identity(new_slots[s]));
        }
      } else {
        lifted_term.factors.push_back(
            lift_dense(dense_term(term, dense_guard), new_slots, placement, dense_guard));
      }
      out.terms_.push_back(std::move(lifted_term));
    }
    return out;
  }

  /// Combine collinear terms and drop negligible ones. Two slotwise terms
  /// that agree in all but one factor fold into a single term.
  void simplify() {
    if (terms_.size() > kMaxTensorTerms)
      throw CapacityExceeded("TensorOp: term budget exceeded (" + std::to_string(terms_.size()) +
                             ")");
    // fold every whole-space term into at most one, normalized to coeff 1
    std::size_t first_whole = terms_.size();
    for (std::size_t i = 0; i < terms_.size();) {
      if (!slotwise(terms_[i])) {
        if (first_whole == terms_.size()) {
          first_whole = i;
          terms_[i].factors[0] *= terms_[i].coeff;
          terms_[i].coeff = 1.0;
          ++i;
        } else {
          terms_[first_whole].factors[0] += terms_[i].coeff * terms_[i].factors[0];
          terms_.erase(terms_.begin() + static_cast<std::ptrdiff_t>(i));
        }
      } else {
        ++i;
      }
    }

    // gauge for dropping near-zero terms, relative to the largest term
    double top = 0.0;
    for (const TensorTerm& t : terms_) top = std::max(top, term_gauge(t));
    const double floor = top * 1e-13;
    for (std::size_t i = 0; i < terms_.size();) {
      if (term_gauge(terms_[i]) <= floor)
        terms_.erase(terms_.begin() + static_cast<std::ptrdiff_t>(i));
      else
        ++i;
    }

    bool merged = true;
    while (merged) {
      merged = false;
      for (std::size_t i = 0; i < terms_.size() && !merged; ++i) {
        if (!slotwise(terms_[i])) continue;
        for (std::size_t j = i + 1; j < terms_.size() && !merged; ++j) {
          if (!slotwise(terms_[j])) continue;
          int differing = -1;
          bool mergeable = true;
          for (std::size_t k = 0; k < slots_.size(); ++k) {
            if (!factors_match(terms_[i].factors[k], terms_[j].factors[k])) {
              if (differing >= 0) {
                mergeable = false;
                break;
              }
              differing = static_cast<int>(k);
            }
          }
          if (!mergeable) continue;
          if (differing < 0) {
            terms_[i].coeff += terms_[j].coeff;
          } else {
            const auto k = static_cast<std::size_t>(differing);
            Matrix combined = terms_[i].coeff * terms_[i].factors[k] +
                              terms_[j].coeff * terms_[j].factors[k];
            terms_[i].factors[k] = std::move(combined);
            terms_[i].coeff = 1.0;
          }
          terms_.erase(terms_.begin() + static_cast<std::ptrdiff_t>(j));
          merged = true;
        }
      }
      // a merge may have produced a zero term; re-apply the floor
      if (merged) {
        double top2 = 0.0;
        for (const TensorTerm& t : terms_) top2 = std::max(top2, term_gauge(t));
        const double floor2 = top2 * 1e-13;
        for (std::size_t i = 0; i < terms_.size();) {
          if (term_gauge(terms_[i]) <= floor2)
            terms_.erase(terms_.begin() + static_cast<std::ptrdiff_t>(i));
          else
            ++i;
        }
      }
    }
  }

 private:
  void check_slots() const {
    if (slots_.empty()) throw EmptySpan("TensorOp: no slots");
    for (Eigen::Index d : slots_)
      if (d < 1) throw DimensionMismatch("TensorOp: slot dimensions must be positive");
  }

  void require_same_slots(const TensorOp& other, const char* who) const {
    if (slots_ != other.slots_)
      throw DimensionMismatch(std::string("TensorOp::") + who +
                              ": operands live on different product spaces");
  }

  Matrix dense_term(const TensorTerm& term, Eigen::Index guard) const {
    if (!slotwise(term)) return term.factors[0];
    if (ambient_dim() > guard)
      throw CapacityExceeded("TensorOp: dense materialization of dimension " +
                             std::to_string(ambient_dim()) + " exceeds the guard");
    return tensor(term.factors);
  }

  static double term_gauge(const TensorTerm& term) {
    double g = std::abs(term.coeff);
    for (const Matrix& f : term.factors) g *= f.norm();
    return g;
  }

  static bool factors_match(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
    return (a - b).cwiseAbs().maxCoeff() <= 1e-12;
  }

  static Matrix lift_dense(const Matrix& m, const std::vector<Eigen::Index>& new_slots,
                           const std::vector<std::size_t>& placement, Eigen::Index guard) {
    Eigen::Index new_dim = 1;
    for (Eigen::Index d : new_slots) new_dim *= d;
    if (new_dim > guard)
      throw CapacityExceeded("TensorOp::lifted: dense lift exceeds the guard");
    const std::size_t n = new_slots.size();
    std::vector<bool> is_old(n, false);
    for (std::size_t p : placement) is_old[p] = true;

    std::vector<Eigen::Index> row_digits(n), col_digits(n);
    Matrix out = Matrix::Zero(new_dim, new_dim);
    for (Eigen::Index r = 0; r < new_dim; ++r) {
      Eigen::Index rest = r;
      for (std::size_t s = n; s-- > 0;) {
        row_digits[s] = rest % new_slots[s];
        rest /= new_slots[s];
      }
      for (Eigen::Index c = 0; c < new_dim; ++c) {
        Eigen::Index crest = c;
        for (std::size_t s = n; s-- > 0;) {
          col_digits[s] = crest % new_slots[s];
          crest /= new_slots[s];
        }
        bool diagonal_on_new = true;
        for (std::size_t s = 0; s < n; ++s)
          if (!is_old[s] && row_digits[s] != col_digits[s]) {
            diagonal_on_new = false;
            break;
          }
        if (!diagonal_on_new) continue;
        Eigen::Index orow = 0, ocol = 0;
        for (std::size_t p : placement) {
          orow = orow * new_slots[p] + row_digits[p];
          ocol = ocol * new_slots[p] + col_digits[p];
        }
        out(r, c) = m(orow, ocol);
      }
    }
    return out;
  }

  std::vector<Eigen::Index> slots_;
  std::vector<TensorTerm> terms_;
};

// operator-concept hooks used by the framework machinery
inline TensorOp identity_like(const TensorOp& t) { return TensorOp::identity_on(t.slots()); }
inline TensorOp adjoint_of(const TensorOp& t) { return t.adjointed(); }
inline double zero_gauge(const TensorOp& t) { return t.frobenius_norm(); }
inline bool same_shape(const TensorOp& a, const TensorOp& b) { return a.slots() == b.slots(); }
inline std::string shape_str(const TensorOp& t) {
  std::string s;
  for (std::size_t k = 0; k < t.slots().size(); ++k) {
    if (k) s += "x";
    s += std::to_string(t.slots()[k]);
  }
  return s;
}

}  // namespace histlogic
