#include <gtest/gtest.h>

#include "hellinger/operator_model.hpp"

using namespace hellinger;

TEST(Counterexample, Blocks) {
  const auto f = counterexample_family(2);
  EXPECT_EQ(f.dim(), 2);
  EXPECT_EQ(f.upper(3), MatrixC(4.0 * identity(2)));
  EXPECT_EQ(f.lower(3), f.upper(3));
  EXPECT_EQ(f.diag(7), zero(2));
  EXPECT_EQ(f.upper(-1), MatrixC(-identity(2)));
  EXPECT_EQ(f.lower(-1), MatrixC(-identity(2)));
}

TEST(Block, BandStructure) {
  const auto f = free_jacobi_family(1, 2.0, 0.5);
  EXPECT_EQ(f.block(3, 3)(0, 0), Complex(0.5));
  EXPECT_EQ(f.block(3, 4)(0, 0), Complex(2.0));
  EXPECT_EQ(f.block(4, 3)(0, 0), Complex(2.0));
  EXPECT_EQ(f.block(3, 5)(0, 0), Complex(0.0));
  EXPECT_EQ(f.block(0, -1)(0, 0), Complex(-1.0));
  EXPECT_EQ(f.block(-1, 0)(0, 0), Complex(-1.0));
}

TEST(Geometric, PowersOfRatio) {
  const auto f = geometric_family(1, 2.0);
  EXPECT_EQ(f.upper(0)(0, 0), Complex(2.0));
  EXPECT_EQ(f.upper(9)(0, 0), Complex(1024.0));
  EXPECT_THROW(geometric_family(1, -1.0), ConfigError);
}

TEST(DiagGeometric, DiagonalBlocks) {
  const auto f = diag_geometric_family({2.0, 3.0});
  const MatrixC b = f.upper(1);
  EXPECT_EQ(b(0, 0), Complex(4.0));
  EXPECT_EQ(b(1, 1), Complex(9.0));
  EXPECT_EQ(b(0, 1), Complex(0.0));
}

TEST(ExplicitFamily, HorizonAndShapes) {
  std::vector<MatrixC> ones(3, identity(2));
  const auto f = explicit_family(2, ones, std::vector<MatrixC>(3, zero(2)), ones);
  ASSERT_TRUE(f.horizon());
  EXPECT_EQ(*f.horizon(), 3);
  EXPECT_NO_THROW(f.upper(2));
  try {
    f.upper(3);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("horizon exceeded"), std::string::npos);
  }
  EXPECT_THROW(explicit_family(2, {identity(3)}, {zero(2)}, {identity(2)}), ConfigError);
}

TEST(BuildFamily, BuiltinsRoundTrip) {
  const std::vector<json> specs = {
      {{"kind", "builtin"}, {"name", "hellinger_counterexample"}, {"n", 2}},
      {{"kind", "builtin"}, {"name", "free_jacobi"}, {"n", 1}, {"params", {{"a", 1}, {"b", 0}}}},
      {{"kind", "builtin"}, {"name", "geometric"}, {"n", 1}, {"params", {{"ratio", 2}}}},
      {{"kind", "builtin"}, {"name", "diag_geometric"}, {"n", 2}, {"params", {{"ratios", {2, 3}}}}},
      {{"kind", "builtin"}, {"name", "scalar_embed"}, {"n", 2}, {"params", {{"a", {1, 2, 3}}, {"b", {0, 0, 0}}}}},
      {{"kind", "builtin"}, {"name", "random"}, {"n", 3}, {"params", {{"seed", 11}}}},
      {{"kind", "explicit"}, {"n", 1}, {"sub", {1, 2}}, {"diag", {0, 0}}, {"super", {1, 2}}},
  };
  for (const auto& spec : specs) {
    const auto f = build_family(spec);
    const auto g = build_family(f.spec());
    EXPECT_EQ(f.spec(), g.spec()) << spec.dump();
    for (int j = -1; j < 2; ++j) {
      EXPECT_EQ(f.upper(j), g.upper(j)) << spec.dump();
      EXPECT_EQ(f.lower(j), g.lower(j)) << spec.dump();
      if (j >= 0) {
        EXPECT_EQ(f.diag(j), g.diag(j)) << spec.dump();
      }
    }
  }
}

TEST(BuildFamily, ConfigErrors) {
  EXPECT_THROW(build_family(json::parse(R"({"kind":"builtin","name":"nope"})")), ConfigError);
  EXPECT_THROW(build_family(json::parse(R"({"kind":"builtin","name":"geometric","params":{"ration":2}})")),
               ConfigError);
  EXPECT_THROW(build_family(json::parse(R"({"kind":"explicit","n":2,"sub":[[[1,0],[0,1]]],"diag":[[[0,0]]],"super":[[[1,0],[0,1]]]})")),
               ConfigError);
  EXPECT_THROW(build_family(json::parse(R"({"kind":"builtin","name":"diag_geometric","n":3,"params":{"ratios":[2,3]}})")),
               ConfigError);
}

TEST(RandomFamily, DeterministicAndWellConditioned) {
  const auto a = random_family(3, 42);
  const auto b = random_family(3, 42);
  const auto c = random_family(3, 43);
  for (int j = 0; j < 20; ++j) {
    EXPECT_EQ(a.upper(j), b.upper(j));
    EXPECT_EQ(a.diag(j), b.diag(j));
    EXPECT_LT(invert(a.upper(j)).condition, 1.4 / 0.6 + 1e-12);
    EXPECT_LT(invert(a.lower(j)).condition, 1.4 / 0.6 + 1e-12);
  }
  EXPECT_NE(a.upper(0), c.upper(0));
}

TEST(Symmetry, CatalogClassification) {
  EXPECT_TRUE(check_symmetry(counterexample_family(2), 50).is_symmetric);
  EXPECT_TRUE(check_symmetry(geometric_family(1, 2.0), 50).is_symmetric);
  EXPECT_TRUE(check_symmetry(diag_geometric_family({2.0, 3.0}), 50).is_symmetric);
  EXPECT_TRUE(check_symmetry(free_jacobi_family(2, 1.0, 0.0), 50).is_symmetric);

  const auto r = check_symmetry(random_family(2, 5), 50);
  EXPECT_FALSE(r.is_symmetric);
  ASSERT_TRUE(r.violation);
  EXPECT_EQ(r.violation->index, 0);

  const auto neg = check_symmetry(free_jacobi_family(1, -1.0, 0.0), 10);
  EXPECT_FALSE(neg.is_symmetric);
  EXPECT_EQ(neg.violation->what, "off-diagonal block not positive definite");
}
