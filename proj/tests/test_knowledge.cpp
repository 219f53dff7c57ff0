#include <doctest.h>

#include <random>

#include "cipmc/fixtures.hpp"
#include "cipmc/knowledge.hpp"
#include "oracles.hpp"

using namespace cipmc;

TEST_CASE("analysis closure opens tuples behind a known private key") {
  // {I, I^-, {na_1, A_1}_{I^+}} analyzes to contain na_1 and A_1
  Term i = identity("I");
  Knowledge k = Knowledge::analyze(
      {i, priv_key(i), enc(tuple({nonce("na", 1), identity("A", 1)}), pub_key(i))});
  CHECK(k.in_analyzed(nonce("na", 1)));
  CHECK(k.in_analyzed(identity("A", 1)));
  CHECK(k.in_analyzed(tuple({nonce("na", 1), identity("A", 1)})));
}

TEST_CASE("analysis cannot decrypt without the private key") {
  Term b2 = identity("B", 2);
  Knowledge k = Knowledge::analyze({pub_key(b2), enc(nonce("na", 1), pub_key(b2))});
  CHECK_FALSE(k.in_analyzed(nonce("na", 1)));
  CHECK(k.analyzed().size() == 2);
}

TEST_CASE("analysis of the empty base is empty") {
  Knowledge k = Knowledge::analyze({});
  CHECK(k.analyzed().empty());
  CHECK(k.base().empty());
}

TEST_CASE("a late key unlocks earlier opaque terms") {
  Term kk = sym_key("k1");
  Knowledge k = Knowledge::analyze({enc(nonce("n1", 1), kk), tuple({nonce("n2", 2), kk})});
  CHECK(k.in_analyzed(nonce("n1", 1)));  // k1 surfaced from the tuple
  CHECK(k.in_analyzed(nonce("n2", 2)));
}

TEST_CASE("derives: membership, composition, and a negative case") {
  Term i = identity("I");
  Knowledge k = Knowledge::analyze({i, pub_key(i), nonce("na", 1)});
  CHECK(k.derives(nonce("na", 1)));                   // membership
  CHECK(k.derives(tuple({nonce("na", 1), i})));       // pairing
  CHECK(k.derives(enc(nonce("na", 1), pub_key(i))));  // encryption
  CHECK_FALSE(k.derives(nonce("nb", 2)));
  CHECK_FALSE(
      Knowledge::analyze({pub_key(identity("B", 2))}).derives(priv_key(identity("B", 2))));
}

TEST_CASE("analyze is idempotent") {
  for (uint32_t s = 0; s < 50; ++s) {
    KnowledgeCase c = random_knowledge_case(s);
    Knowledge k = Knowledge::analyze(c.base);
    Knowledge again = Knowledge::analyze(k.analyzed());
    REQUIRE(k.analyzed().size() == again.analyzed().size());
    for (size_t idx = 0; idx < k.analyzed().size(); ++idx)
      CHECK(equal(k.analyzed()[idx], again.analyzed()[idx]));
  }
}

TEST_CASE("derives is monotone in the base") {
  for (uint32_t s = 0; s < 100; ++s) {
    KnowledgeCase c = random_knowledge_case(s);
    Knowledge k = Knowledge::analyze(c.base);
    std::mt19937 rng(s + 999);
    Knowledge bigger = k.extend(random_ground_term(rng, 2));
    if (k.derives(c.query)) CHECK(bigger.derives(c.query));
  }
}

TEST_CASE("derives agrees with the brute-force closure oracle") {
  for (uint32_t s = 0; s < 500; ++s) {
    KnowledgeCase c = random_knowledge_case(s);
    Knowledge k = Knowledge::analyze(c.base);
    CAPTURE(s);
    CHECK(k.derives(c.query) == oracle::bf_derivable(c.base, c.query));
  }
}

TEST_CASE("synthesize_matching reproduces the first responder input") {
  // kappa containing na_1, A_1, B_2^+ lets the intruder satisfy
  // {?x_2, ?y_2}_{B_2^-} with x_2 -> na_1, y_2 -> A_1.
  Term i = identity("I");
  Term b2 = identity("B", 2);
  Knowledge k = Knowledge::analyze(
      {i, pub_key(i), priv_key(i), identity("A", 1), pub_key(identity("A", 1)), b2,
       pub_key(b2), enc(tuple({nonce("na", 1), identity("A", 1)}), pub_key(i))});
  Term pattern = enc(tuple({binder("x", 2), binder("y", 2)}), priv_key(b2));
  auto sigmas = synthesize_matching(k, pattern);
  bool found = false;
  for (const auto& sigma : sigmas)
    if (equal(sigma.at(VarKey{"x", 2}), nonce("na", 1)) &&
        equal(sigma.at(VarKey{"y", 2}), identity("A", 1)))
      found = true;
  CHECK(found);
}

TEST_CASE("synthesize_matching is empty without the required nonce") {
  // kappa_0 only: {na_1, ?z_1}_{A_1^-} cannot be forged.
  Term i = identity("I");
  Knowledge k = Knowledge::analyze({i, pub_key(i), priv_key(i)});
  Term pattern = enc(tuple({nonce("na", 1), binder("z", 1)}), priv_key(identity("A", 1)));
  CHECK(synthesize_matching(k, pattern).empty());
}

TEST_CASE("synthesize_matching on a ground pattern") {
  Term i = identity("I");
  Term msg = enc(nonce("na", 1), pub_key(i));
  Knowledge with = Knowledge::analyze({msg});
  Term pattern = enc(nonce("na", 1), priv_key(i));  // receiver decrypts with I^-
  auto sigmas = synthesize_matching(with, pattern);
  REQUIRE(sigmas.size() == 1);
  CHECK(sigmas[0].empty());
  Knowledge without = Knowledge::analyze({i});
  CHECK(synthesize_matching(without, pattern).empty());
}

TEST_CASE("every synthesized substitution is sound") {
  for (uint32_t s = 0; s < 60; ++s) {
    KnowledgeCase c = random_knowledge_case(s);
    Knowledge k = Knowledge::analyze(c.base);
    Term pattern = enc(tuple({binder("x", 1), nonce("n1", 1)}), sym_key("k1"));
    for (const auto& sigma : synthesize_matching(k, pattern))
      CHECK(k.derives(apply_binders(wire_form(pattern), sigma)));
  }
}

TEST_CASE("closure rendering is sorted and line-based") {
  Term i = identity("I");
  Knowledge k = Knowledge::analyze({tuple({nonce("nb", 2), i})});
  CHECK(k.render_closure() == "(nb_2, I)\nI\nnb_2\n");
}
