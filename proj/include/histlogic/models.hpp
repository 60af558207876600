#pragma once

#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "histlogic/histories.hpp"
#include "histlogic/linalg.hpp"

namespace histlogic {

/// A fully built scenario: Hilbert space, dynamics, named projectors, and the
/// families of histories discussed for it, each carrying its computed
/// consistency verdict.
struct NamedModel {
  std::string name;
  Eigen::Index dim = 0;
  PropagatorSet props;
  std::vector<std::string> time_labels;
  std::map<std::string, Matrix> symbols;
  std::map<std::string, HistoryFamily> families;

  const Matrix& symbol(const std::string& s) const {
    auto it = symbols.find(s);
    if (it == symbols.end()) throw UnknownStatementName("model has no symbol '" + s + "'");
    return it->second;
  }
  const HistoryFamily& family(const std::string& s) const {
    auto it = families.find(s);
    if (it == families.end()) throw UnknownStatementName("model has no family '" + s + "'");
    return it->second;
  }
};

inline Vector basis_ket(Eigen::Index dim, Eigen::Index k) {
  Vector v = Vector::Zero(dim);
  v(k) = 1.0;
  return v;
}

inline Vector kron_vec(const Vector& u, const Vector& w) {
  Vector out(u.size() * w.size());
  for (Eigen::Index i = 0; i < u.size(); ++i)
    for (Eigen::Index j = 0; j < w.size(); ++j) out(i * w.size() + j) = u(i) * w(j);
  return out;
}

inline Matrix ket_proj(Vector v) {
  const double n = v.norm();
  if (n <= 0) throw EmptySpan("ket_proj: zero vector");
  v /= n;
  return v * v.adjoint();
}

/// A unitary with the prescribed action on a few orthonormal vectors; the
/// rest of the space is filled in by Gram-Schmidt over the canonical basis.
/// variant != 0 pairs the complement bases in reversed order, giving a
/// different but equally valid completion.
inline Matrix unitary_completion(Eigen::Index dim,
                                 const std::vector<std::pair<Vector, Vector>>& action,
                                 int variant = 0, Tolerance tol = {}) {
  for (const auto& [in, out] : action) {
    if (in.size() != dim || out.size() != dim)
      throw DimensionMismatch("unitary_completion: vector dimensions differ from dim");
    if (std::abs(in.norm() - 1.0) > 1e-9 || std::abs(out.norm() - 1.0) > 1e-9)
      throw Error("unitary_completion: action vectors must be normalized");
  }
  for (std::size_t i = 0; i < action.size(); ++i)
    for (std::size_t j = i + 1; j < action.size(); ++j) {
      if (std::abs(action[i].first.dot(action[j].first)) > 1e-9 ||
          std::abs(action[i].second.dot(action[j].second)) > 1e-9)
        throw Error("unitary_completion: action vectors must be orthonormal");
    }

  auto complement = [&](bool input_side) {
    std::vector<Vector> comp;
    for (Eigen::Index k = 0; k < dim; ++k) {
      Vector r = basis_ket(dim, k);
      for (const auto& [in, out] : action) {
        const Vector& ref = input_side ? in : out;
        r -= ref.dot(r) * ref;
      }
      for (const Vector& q : comp) r -= q.dot(r) * q;
      const double n = r.norm();
      if (n > 1e-9) comp.push_back(Vector(r / n));
    }
    return comp;
  };

  std::vector<Vector> in_comp = complement(true);
  std::vector<Vector> out_comp = complement(false);
  if (in_comp.size() != out_comp.size() ||
      in_comp.size() + action.size() != static_cast<std::size_t>(dim))
    throw Error("unitary_completion: complement bases do not line up");
  if (variant != 0) std::reverse(out_comp.begin(), out_comp.end());

  Matrix u = Matrix::Zero(dim, dim);
  for (const auto& [in, out] : action) u += out * in.adjoint();
  for (std::size_t k = 0; k < in_comp.size(); ++k) u += out_comp[k] * in_comp[k].adjoint();
  if (!is_unitary(u, Tolerance{1e-8}))
    throw Error("unitary_completion: completion failed to be unitary");
  (void)tol;
  return u;
}

namespace detail {

inline History event_at(const PropagatorSet& props, std::size_t slot, const Matrix& p) {
  std::vector<Matrix> projectors(props.num_times(), identity(props.dim));
  projectors[slot] = p;
  return History::simple(std::move(projectors));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Stern-Gerlach measurement of Sx (one device).
//
// H = spin(2, Sx basis {a, b}) x apparatus(3, {X, X+, X-}); the measurement
// acts between t1.5 and t2, so spin statements at t1.5 refer to the particle
// just before it enters the field gradient.
// ---------------------------------------------------------------------------

inline NamedModel build_spin_measurement_model(int completion_variant = 0) {
  NamedModel m;
  m.name = "spin-measurement";
  m.dim = 6;
  const Eigen::Index ds = 2, da = 3;

  Vector a = basis_ket(ds, 0), b = basis_ket(ds, 1);
  Vector gamma_v = (a + b) / std::sqrt(2.0);
  Vector delta_v = (a - b) / std::sqrt(2.0);
  Vector X = basis_ket(da, 0), Xp = basis_ket(da, 1), Xm = basis_ket(da, 2);

  // the measurement unitary: |a,X> -> |a,X+>, |b,X> -> |b,X->
  Matrix meas = unitary_completion(
      6, {{kron_vec(a, X), kron_vec(a, Xp)}, {kron_vec(b, X), kron_vec(b, Xm)}},
      completion_variant);

  m.props = propagators_explicit(6, make_grid({0.0, 0.5, 1.0}), {identity(6), meas});
  m.time_labels = {"t1", "t1.5", "t2"};

  m.symbols["alpha"] = tensor(ket_proj(a), identity(da));
  m.symbols["beta"] = tensor(ket_proj(b), identity(da));
  m.symbols["gamma"] = tensor(ket_proj(gamma_v), identity(da));
  m.symbols["delta"] = tensor(ket_proj(delta_v), identity(da));
  m.symbols["X"] = tensor(identity(ds), ket_proj(X));
  m.symbols["Xp"] = tensor(identity(ds), ket_proj(Xp));
  m.symbols["Xm"] = tensor(identity(ds), ket_proj(Xm));
  m.symbols["G"] = ket_proj(Vector(meas * kron_vec(gamma_v, X)));

  auto at = [&](std::size_t slot, const std::string& sym) {
    return detail::event_at(m.props, slot, m.symbols.at(sym));
  };

  m.families.emplace("F1", build_family(m.props, {{"alpha@t1", at(0, "alpha")},
                                                  {"beta@t1", at(0, "beta")},
                                                  {"X@t1", at(0, "X")},
                                                  {"Xp@t2", at(2, "Xp")},
                                                  {"Xm@t2", at(2, "Xm")}}));
  m.families.emplace("F2", build_family(m.props, {{"gamma@t1", at(0, "gamma")},
                                                  {"delta@t1", at(0, "delta")},
                                                  {"X@t1", at(0, "X")},
                                                  {"Xp@t2", at(2, "Xp")},
                                                  {"Xm@t2", at(2, "Xm")}}));
  m.families.emplace("F3", build_family(m.props, {{"gamma@t1", at(0, "gamma")},
                                                  {"delta@t1", at(0, "delta")},
                                                  {"X@t1", at(0, "X")},
                                                  {"G@t2", at(2, "G")}}));
  m.families.emplace("F4", build_family(m.props, {{"gamma@t1", at(0, "gamma")},
                                                  {"delta@t1", at(0, "delta")},
                                                  {"X@t1", at(0, "X")},
                                                  {"alpha@t1.5", at(1, "alpha")},
                                                  {"beta@t1.5", at(1, "beta")},
                                                  {"Xp@t2", at(2, "Xp")},
                                                  {"Xm@t2", at(2, "Xm")}}));
  return m;
}

// ---------------------------------------------------------------------------
// Two successive devices measuring Sx then Sz (Fig. 1).
//
// H = spin(2, Sx basis) x X-device(3) x Z-device(3). The first device acts
// between t1 and t2 and measures Sx without changing it; nothing happens
// between t2 and t2.5; the second device acts between t2.5 and t3 and
// measures Sz without changing it.
// ---------------------------------------------------------------------------

inline NamedModel build_two_device_model() {
  NamedModel m;
  m.name = "two-device";
  const Eigen::Index ds = 2, dd = 3;
  m.dim = ds * dd * dd;  // 18

  Vector a = basis_ket(ds, 0), b = basis_ket(ds, 1);
  Vector gamma_v = (a + b) / std::sqrt(2.0);
  Vector delta_v = (a - b) / std::sqrt(2.0);

  // pointer cycles: ready -> plus -> minus -> ready, and ready -> minus -> plus -> ready
  Matrix cplus = Matrix::Zero(dd, dd), cminus = Matrix::Zero(dd, dd);
  cplus(1, 0) = cplus(2, 1) = cplus(0, 2) = 1.0;
  cminus(2, 0) = cminus(0, 1) = cminus(1, 2) = 1.0;

  Matrix measure_x = tensor(tensor(ket_proj(a), cplus), identity(dd)) +
                     tensor(tensor(ket_proj(b), cminus), identity(dd));
  Matrix measure_z = tensor(tensor(ket_proj(gamma_v), identity(dd)), cplus) +
                     tensor(tensor(ket_proj(delta_v), identity(dd)), cminus);

  m.props = propagators_explicit(m.dim, make_grid({0.0, 1.0, 1.5, 2.0}),
                                 {measure_x, identity(m.dim), measure_z});
  m.time_labels = {"t1", "t2", "t2.5", "t3"};

  m.symbols["alpha"] = tensor(tensor(ket_proj(a), identity(dd)), identity(dd));
  m.symbols["beta"] = tensor(tensor(ket_proj(b), identity(dd)), identity(dd));
  m.symbols["gamma"] = tensor(tensor(ket_proj(gamma_v), identity(dd)), identity(dd));
  m.symbols["delta"] = tensor(tensor(ket_proj(delta_v), identity(dd)), identity(dd));
  for (Eigen::Index k = 0; k < dd; ++k) {
    const char* xs[] = {"X", "Xp", "Xm"};
    const char* zs[] = {"Z", "Zp", "Zm"};
    m.symbols[xs[k]] = tensor(tensor(identity(ds), ket_proj(basis_ket(dd, k))), identity(dd));
    m.symbols[zs[k]] = tensor(tensor(identity(ds), identity(dd)), ket_proj(basis_ket(dd, k)));
  }
  m.symbols["psi1"] =
      ket_proj(kron_vec(kron_vec(gamma_v, basis_ket(dd, 0)), basis_ket(dd, 0)));

  auto at = [&](std::size_t slot, const std::string& sym) {
    return detail::event_at(m.props, slot, m.symbols.at(sym));
  };

  std::vector<std::pair<std::string, History>> base = {{"psi1@t1", at(0, "psi1")},
                                                       {"Xp@t3", at(3, "Xp")},
                                                       {"Xm@t3", at(3, "Xm")},
                                                       {"Zp@t3", at(3, "Zp")},
                                                       {"Zm@t3", at(3, "Zm")}};
  m.families.emplace("F1", build_family(m.props, base));

  auto with = [&base](std::vector<std::pair<std::string, History>> extra) {
    std::vector<std::pair<std::string, History>> gens = base;
    for (auto& e : extra) gens.push_back(std::move(e));
    return gens;
  };
  m.families.emplace("F2", build_family(m.props, with({{"alpha@t2", at(1, "alpha")},
                                                       {"beta@t2", at(1, "beta")}})));
  m.families.emplace("F3", build_family(m.props, with({{"gamma@t2", at(1, "gamma")},
                                                       {"delta@t2", at(1, "delta")}})));
  m.families.emplace("F4", build_family(m.props, with({{"gamma@t2", at(1, "gamma")},
                                                       {"delta@t2", at(1, "delta")},
                                                       {"gamma@t2.5", at(2, "gamma")},
                                                       {"delta@t2.5", at(2, "delta")}})));
  return m;
}

// ---------------------------------------------------------------------------
// Double slit with detectors.
//
// H = particle(4: src, slitA, slitB, refl) x pointer(m+1: ready, fired_j).
// Between t1 and t2 the wave splits into the slit regions and a reflected
// part; between t2 and t3 the slit branches spread onto the detector bank,
// the pointer recording which detector fired.
// ---------------------------------------------------------------------------

struct DoubleSlitParams {
  int num_detectors = 4;
  double phase_a = 0.0;
  double phase_b = M_PI;
  double reflect_amp = 1.0 / std::sqrt(3.0);
};

inline NamedModel build_double_slit_model(DoubleSlitParams p = {}) {
  if (p.num_detectors < 2)
    throw Error("double-slit: need at least two detectors");
  if (!(p.reflect_amp >= 0.0 && p.reflect_amp < 1.0))
    throw Error("double-slit: reflect_amp must lie in [0, 1)");

  NamedModel m;
  m.name = "double-slit";
  const Eigen::Index dp = 4;
  const Eigen::Index dq = p.num_detectors + 1;
  m.dim = dp * dq;
  const int md = p.num_detectors;

  Vector src = basis_ket(dp, 0), slitA = basis_ket(dp, 1), slitB = basis_ket(dp, 2),
         refl = basis_ket(dp, 3);
  Vector ready = basis_ket(dq, 0);

  const double c = p.reflect_amp;
  const double ab = std::sqrt((1.0 - c * c) / 2.0);

  // step 1: the wave leaves the source
  Vector split = ab * slitA + ab * slitB + c * refl;
  Matrix u_particle = unitary_completion(dp, {{src, split}});
  Matrix step1 = tensor(u_particle, identity(dq));

  // step 2: slit branches spread over the detector bank; the particle is
  // absorbed onto the src label while the pointer records the detector
  auto pattern = [&](double phase) {
    Vector v = Vector::Zero(dq);
    for (int j = 1; j <= md; ++j) v(j) = std::exp(Complex(0.0, phase * j)) / std::sqrt(double(md));
    return v;
  };

  Vector image_a = kron_vec(src, pattern(p.phase_a));
  Vector image_b_raw = kron_vec(src, pattern(p.phase_b));
  // orthogonalize the B image against the A image; for phase differences at
  // multiples of 2*pi/m the patterns are orthogonal already and nothing changes
  Vector image_b = image_b_raw - image_a.dot(image_b_raw) * image_a;
  if (image_b.norm() < 1e-9)
    throw Error("double-slit: the two detector patterns coincide; choose different phases");
  image_b.normalize();

  Matrix step2 = unitary_completion(m.dim, {{kron_vec(slitA, ready), image_a},
                                            {kron_vec(slitB, ready), image_b},
                                            {kron_vec(refl, ready), kron_vec(refl, ready)},
                                            {kron_vec(src, ready), kron_vec(src, ready)}});

  m.props = propagators_explicit(m.dim, make_grid({0.0, 1.0, 2.0}), {step1, step2});
  m.time_labels = {"t1", "t2", "t3"};

  m.symbols["Psi1"] = ket_proj(kron_vec(src, ready));
  m.symbols["PA"] = tensor(ket_proj(slitA), identity(dq));
  m.symbols["PB"] = tensor(ket_proj(slitB), identity(dq));
  m.symbols["P"] = m.symbols["PA"] + m.symbols["PB"];
  m.symbols["refl"] = tensor(ket_proj(refl), identity(dq));
  for (int j = 1; j <= md; ++j)
    m.symbols["D" + std::to_string(j)] = tensor(identity(dp), ket_proj(basis_ket(dq, j)));

  auto at = [&](std::size_t slot, const std::string& sym) {
    return detail::event_at(m.props, slot, m.symbols.at(sym));
  };

  std::vector<std::pair<std::string, History>> detectors;
  for (int j = 1; j <= md; ++j) {
    std::string name = "D" + std::to_string(j);
    detectors.emplace_back(name + "@t3", at(2, name));
  }

  std::vector<std::pair<std::string, History>> f1 = {{"Psi1@t1", at(0, "Psi1")}};
  for (const auto& d : detectors) f1.push_back(d);
  m.families.emplace("F1", build_family(m.props, f1));

  std::vector<std::pair<std::string, History>> f2 = f1;
  f2.emplace_back("P@t2", at(1, "P"));
  m.families.emplace("F2", build_family(m.props, f2));

  std::vector<std::pair<std::string, History>> f2_slits = f2;
  f2_slits.emplace_back("PA@t2", at(1, "PA"));
  f2_slits.emplace_back("PB@t2", at(1, "PB"));
  m.families.emplace("F2_slits", build_family(m.props, f2_slits));

  std::vector<std::pair<std::string, History>> f3 = {{"Psi1@t1", at(0, "Psi1")},
                                                     {"PA@t2", at(1, "PA")},
                                                     {"PB@t2", at(1, "PB")}};
  m.families.emplace("F3", build_family(m.props, f3));

  std::vector<std::pair<std::string, History>> f3_det = f3;
  for (const auto& d : detectors) f3_det.push_back(d);
  m.families.emplace("F3_detectors", build_family(m.props, f3_det));

  return m;
}

/// CLI-facing lookup: spin-measurement | two-device | double-slit, with
/// double-slit parameters overridable by name.
inline NamedModel build_model_by_name(const std::string& name,
                                      const std::map<std::string, double>& params = {}) {
  auto reject_params = [&](const char* who) {
    if (!params.empty())
      throw Error(std::string(who) + " takes no parameters");
  };
  if (name == "spin-measurement") {
    reject_params("spin-measurement");
    return build_spin_measurement_model();
  }
  if (name == "two-device") {
    reject_params("two-device");
    return build_two_device_model();
  }
  if (name == "double-slit") {
    DoubleSlitParams p;
    for (const auto& [key, value] : params) {
      if (key == "m" || key == "num_detectors")
        p.num_detectors = static_cast<int>(value);
      else if (key == "phase_a")
        p.phase_a = value;
      else if (key == "phase_b")
        p.phase_b = value;
      else if (key == "reflect" || key == "reflect_amp")
        p.reflect_amp = value;
      else
        throw Error("double-slit: unknown parameter '" + key + "'");
    }
    return build_double_slit_model(p);
  }
  throw Error("unknown builtin model '" + name +
              "' (available: spin-measurement, two-device, double-slit)");
}

}  // namespace histlogic
