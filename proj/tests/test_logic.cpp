#include <catch2/catch_amalgamated.hpp>
#include <memory>

#include "histlogic/classical.hpp"
#include "histlogic/logic.hpp"
#include "support/formula_gen.hpp"
#include "support/random_gen.hpp"

using namespace histlogic;
using testing::Rng;

namespace {

std::shared_ptr<const Framework> shared_framework(Framework fr) {
  return std::make_shared<const Framework>(std::move(fr));
}

Matrix sx_plus() {
  Matrix m(2, 2);
  m << 0.5, 0.5, 0.5, 0.5;
  return m;
}

Matrix sz_plus() {
  Matrix m(2, 2);
  m << 1, 0, 0, 0;
  return m;
}

Matrix diag01(std::initializer_list<double> entries) {
  Matrix m = Matrix::Zero(entries.size(), entries.size());
  Eigen::Index i = 0;
  for (double e : entries) m(i, i) = e, ++i;
  return m;
}

}  // namespace

TEST_CASE("entails") {
  auto fr = shared_framework(
      build_framework(4, {{"p", diag01({1, 1, 0, 0})}, {"q", diag01({1, 0, 1, 0})}}));

  Matrix bp = phi(stmt("p"), *fr);
  CHECK(entails(bp, Description{fr, stmt("p") | stmt("q")}));

  Matrix bpq = phi(stmt("p") & stmt("q"), *fr);
  CHECK(entails(bpq, Description{fr, stmt("p")}));

  // Q != I and PQ != P, so p does not entail p & q
  CHECK_FALSE(entails(bp, Description{fr, stmt("p") & stmt("q")}));

  Matrix stranger = sx_plus();
  CHECK_THROWS_AS(entails(tensor(stranger, identity(2)), Description{fr, stmt("p")}), NotInAlgebra);
}

TEST_CASE("master_description") {
  Rng rng(31);

  SECTION("singleton") {
    Matrix p = testing::random_projector(rng, 3);
    auto fr = shared_framework(build_framework(3, {{"p", p}}));
    auto [joined, d] = master_description({Description{fr, stmt("p")}});
    CHECK(approx_equal(d, p, Tolerance{1e-12}));
    CHECK(joined.generators.size() == 1);
  }

  SECTION("contradiction gives the zero projector") {
    Matrix p = testing::random_projector(rng, 3);
    auto fr = shared_framework(build_framework(3, {{"p", p}}));
    auto [joined, d] =
        master_description({Description{fr, stmt("p")}, Description{fr, !stmt("p")}});
    CHECK(max_norm(d) < 1e-10);
  }

  SECTION("tensor factors multiply") {
    Matrix p = testing::random_projector(rng, 2, 1);
    Matrix q = testing::random_projector(rng, 2, 1);
    auto f1 = shared_framework(build_framework(4, {{"p", tensor(p, identity(2))}}));
    auto f2 = shared_framework(build_framework(4, {{"q", tensor(identity(2), q)}}));
    auto [joined, d] =
        master_description({Description{f1, stmt("p")}, Description{f2, stmt("q")}});
    CHECK(approx_equal(d, tensor(p, q), Tolerance{1e-10}));
    CHECK_NOTHROW(decompose(d, joined));
  }
}

TEST_CASE("infer_single_time basics") {
  auto fr = shared_framework(
      build_framework(4, {{"p", diag01({1, 1, 0, 0})}, {"q", diag01({1, 0, 1, 0})}}));

  SECTION("weakening within one framework") {
    auto v = infer_single_time({Description{fr, stmt("p")}},
                               {Description{fr, stmt("p") | stmt("q")}});
    CHECK(v.valid);
    CHECK(v.reason == InferenceReason::Proven);
  }

  SECTION("incompatible frameworks poison the whole argument") {
    auto fx = shared_framework(build_framework(2, {{"sx", sx_plus()}}));
    auto fz = shared_framework(build_framework(2, {{"sz", sz_plus()}}));
    auto v = infer_single_time({Description{fx, stmt("sx")}}, {Description{fz, stmt("sz")}});
    CHECK_FALSE(v.valid);
    CHECK(v.reason == InferenceReason::IncompatibleFrameworks);
  }

  SECTION("tautology from no assumptions") {
    auto v = infer_single_time({}, {Description{fr, stmt("p") | !stmt("p")}});
    CHECK(v.valid);
    CHECK(approx_equal(v.assumption_projector, identity(4)));
  }

  SECTION("contradictory assumptions prove nothing") {
    auto v = infer_single_time({Description{fr, stmt("p")}, Description{fr, !stmt("p")}},
                               {Description{fr, stmt("p") | !stmt("p")}});
    CHECK_FALSE(v.valid);
    CHECK(v.reason == InferenceReason::ContradictoryAssumptions);
  }

  SECTION("conclusion that misses is NotEntailed") {
    auto v = infer_single_time({Description{fr, stmt("p")}},
                               {Description{fr, stmt("p") & stmt("q")}});
    CHECK_FALSE(v.valid);
    CHECK(v.reason == InferenceReason::NotEntailed);
  }
}

TEST_CASE("two valid arguments whose conclusions cannot be merged") {
  // A = e1; C and E agree on e1 but carry non-commuting blocks on span{e2,e3}
  Matrix a = diag01({1, 0, 0});
  Matrix c = Matrix::Zero(3, 3);
  c(0, 0) = 1;
  c.block(1, 1, 2, 2) = sx_plus();
  Matrix e = Matrix::Zero(3, 3);
  e(0, 0) = 1;
  e.block(1, 1, 2, 2) = sz_plus();

  auto fa = shared_framework(build_framework(3, {{"a", a}}));
  auto fc = shared_framework(build_framework(3, {{"c", c}}));
  auto fe = shared_framework(build_framework(3, {{"e", e}}));

  auto v1 = infer_single_time({Description{fa, stmt("a")}}, {Description{fc, stmt("c")}});
  CHECK(v1.valid);
  auto v2 = infer_single_time({Description{fa, stmt("a")}}, {Description{fe, stmt("e")}});
  CHECK(v2.valid);

  auto merged = infer_single_time({Description{fa, stmt("a")}},
                                  {Description{fc, stmt("c")}, Description{fe, stmt("e")}});
  CHECK_FALSE(merged.valid);
  CHECK(merged.reason == InferenceReason::IncompatibleFrameworks);
}

TEST_CASE("quasi-classical chaining is rejected") {
  auto fa = shared_framework(build_framework(2, {{"sx", sx_plus()}}));
  auto fc = shared_framework(build_framework(2, {{"t", identity(2)}}));  // generated by I alone
  auto fe = shared_framework(build_framework(2, {{"sz", sz_plus()}}));

  REQUIRE(frameworks_compatible_single_time({fa.get(), fc.get()}));
  REQUIRE(frameworks_compatible_single_time({fc.get(), fe.get()}));
  REQUIRE_FALSE(frameworks_compatible_single_time({fa.get(), fe.get()}));

  // each hop is fine...
  auto hop1 = infer_single_time({Description{fa, stmt("sx")}}, {Description{fc, stmt("t")}});
  CHECK(hop1.valid);
  auto hop2 = infer_single_time({Description{fc, stmt("t")}},
                                {Description{fe, stmt("sz") | !stmt("sz")}});
  CHECK(hop2.valid);

  // ...but the chained argument is not
  auto chained = infer_single_time({Description{fa, stmt("sx")}},
                                   {Description{fe, stmt("sz") | !stmt("sz")}});
  CHECK_FALSE(chained.valid);
  CHECK(chained.reason == InferenceReason::IncompatibleFrameworks);
}

TEST_CASE("monotonicity under enlarged assumptions") {
  Rng rng(32);
  for (int rep = 0; rep < 40; ++rep) {
    auto gens = testing::random_commuting_projectors(rng, 5, 3);
    Matrix a = gens[0], c = gens[1], s = gens[2];
    Matrix ac = a * c;
    if (max_norm(ac - a) > 1e-10) continue;  // want AC = A
    Matrix a2 = a * s;
    Matrix a2a = a2 * a;
    REQUIRE(max_norm(a2a - a2) < 1e-10);  // A' = A'A holds since projectors commute
    Matrix a2c = a2 * c;
    CHECK(max_norm(a2c - a2) < 1e-9);  // then A'C = A'
  }
}

TEST_CASE("assumptions can be replaced by their master description") {
  Rng rng(33);
  for (int rep = 0; rep < 20; ++rep) {
    auto gens = testing::random_commuting_projectors(rng, 4, 3);
    auto f1 = shared_framework(build_framework(4, {{"a1", gens[0]}}));
    auto f2 = shared_framework(build_framework(4, {{"a2", gens[1]}}));
    auto fc = shared_framework(build_framework(4, {{"c", gens[2]}}));

    std::vector<Description> assumptions = {Description{f1, stmt("a1")},
                                            Description{f2, stmt("a2")}};
    Formula conclusions[] = {stmt("c"), !stmt("c"), stmt("c") | !stmt("c")};

    auto [joined, d] = master_description(assumptions);
    auto fd = shared_framework(build_framework(4, {{"d", d}}));

    for (const Formula& conc : conclusions) {
      auto direct = infer_single_time(assumptions, {Description{fc, conc}});
      auto via_master =
          infer_single_time({Description{fd, stmt("d")}}, {Description{fc, conc}});
      CHECK(direct.valid == via_master.valid);
      CHECK(direct.reason == via_master.reason);
    }
  }
}

TEST_CASE("diagonal frameworks agree with classical subset inference") {
  const std::size_t dim = 5;
  FiniteSampleSpace space = make_space(dim);
  Event ep = event_of(space, {0, 1, 2});
  Event eq = event_of(space, {1, 3});
  std::map<std::string, Event> bind = {{"p", ep}, {"q", eq}};

  auto fr = shared_framework(build_framework(
      dim, {{"p", diagonal_embedding(space, ep)}, {"q", diagonal_embedding(space, eq)}}));

  auto formulas = testing::enumerate_formulas({"p", "q"}, 3);
  REQUIRE(formulas.size() > 100);

  for (const auto& f : formulas) {
    // the embedding is a homomorphism
    CHECK(approx_equal(diagonal_embedding(space, classical_phi(f, bind)), phi(f, *fr),
                       Tolerance{1e-10}));
  }

  std::size_t checked = 0;
  for (std::size_t i = 0; i < formulas.size(); i += 7) {
    for (std::size_t j = 0; j < formulas.size(); j += 3) {
      const Formula& f = formulas[i];
      const Formula& g = formulas[j];
      Event fa = classical_phi(f, bind);
      bool classical = classical_infer({fa}, classical_phi(g, bind));
      auto quantum = infer_single_time({Description{fr, f}}, {Description{fr, g}});
      if (fa.count() == 0) {
        // the quantum side refuses zero-weight assumptions by design
        CHECK(quantum.reason == InferenceReason::ContradictoryAssumptions);
      } else {
        CHECK(quantum.valid == classical);
      }
      ++checked;
    }
  }
  CHECK(checked > 1000);
}
